//! Closed-form analysis of the `(alpha, r)` plane: the local stability
//! boundary and an independent characteristic-root oracle for it, region
//! classification, exponential-solution rates, the comparison functions
//! behind the instability of the exponential locus, and the blow-up time
//! bound with its comparison ODE.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{equilibrium, GenParams, Params};
use crate::roots;

/// `|r - r*|` at or below this is reported as on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// `r*(alpha) = sqrt((1 - alpha)/(1 + alpha)) arccos(alpha)` for
/// `-1 < alpha < 1`.
pub fn stability_boundary_r(alpha: f64) -> Result<f64> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", alpha, "(-1, 1)"));
    }
    Ok(((1.0 - alpha) / (1.0 + alpha)).sqrt() * alpha.acos())
}

/// A purely imaginary root `i omega` of the linearisation at the equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CharRoot {
    pub r: f64,
    pub omega: f64,
    /// `|i omega - r x* (alpha - e^{-i omega})|`.
    pub residual: f64,
}

/// Critical rate from the characteristic equation
/// `lambda = r x* (alpha - e^{-lambda})` of `u' = r x* (alpha u - u(t - 1))`.
///
/// With `lambda = i omega` the real part gives `cos omega = alpha`, solved by
/// bisection on `(0, pi)`; the imaginary part `omega = r x* sin omega` then
/// fixes `r`. No inverse trigonometric function is used.
pub fn char_root(alpha: f64) -> Result<CharRoot> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", alpha, "(-1, 1)"));
    }
    let x_star = 1.0 / (1.0 - alpha);
    let br = roots::bisect(|w: f64| w.cos() - alpha, 0.0, PI, 0.0, 200)?;
    let omega = br.best();
    let r = omega / (x_star * omega.sin());
    let gain = r * x_star;
    let re = -gain * (alpha - omega.cos());
    let im = omega - gain * omega.sin();
    let residual = re.hypot(im);
    if !(r.is_finite() && r > 0.0) || residual > 1e-9 * (1.0 + gain) {
        return Err(Error::NoConvergence { iterations: br.iterations, residual });
    }
    Ok(CharRoot { r, omega, residual })
}

pub fn char_root_boundary(alpha: f64) -> Result<f64> {
    char_root(alpha).map(|c| c.r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Boundary,
}

/// Qualitative picture of a parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionClass {
    pub alpha: f64,
    pub r: f64,
    pub equilibrium_exists: bool,
    pub equilibrium: Option<f64>,
    pub globally_stable: bool,
    /// `None` when there is no positive equilibrium.
    pub locally_stable: Option<Stability>,
    pub bounded_all: bool,
    pub blowup_exists: bool,
    pub unbounded_limsup: bool,
    pub boundary_r: Option<f64>,
}

pub fn classify(p: &Params) -> RegionClass {
    let (alpha, r) = (p.alpha(), p.r());
    let eq = equilibrium(p);
    let boundary_r = stability_boundary_r(alpha).ok();
    let locally_stable = if alpha <= -1.0 {
        Some(Stability::Stable)
    } else if let Some(r_star) = boundary_r {
        Some(if (r - r_star).abs() <= BOUNDARY_TOL {
            Stability::Boundary
        } else if r < r_star {
            Stability::Stable
        } else {
            Stability::Unstable
        })
    } else {
        None
    };
    RegionClass {
        alpha,
        r,
        equilibrium_exists: eq.exists,
        equilibrium: eq.value,
        globally_stable: alpha <= -1.0,
        locally_stable,
        bounded_all: alpha <= 0.0,
        blowup_exists: alpha > 0.0,
        unbounded_limsup: alpha >= 1.0,
        boundary_r,
    }
}

/// Rate `r = -ln alpha` of the exponential solution `c e^{r t}`.
pub fn exp_solution_rate(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", alpha, "(0, 1)"));
    }
    Ok(-alpha.ln())
}

fn residual_at(terms: &[(f64, f64)], r: f64) -> f64 {
    terms.iter().map(|&(a, tau)| a * (-r * tau).exp()).sum()
}

/// `sum_i a_i e^{-r tau_i}`; zero exactly when `c e^{r t}` solves the
/// multi-delay equation.
pub fn genlog_residual(g: &GenParams) -> f64 {
    g.terms().iter().map(|t| t.coef * (-g.r() * t.delay).exp()).sum()
}

/// A positive rate at which the residual vanishes, located by safeguarded
/// bracketing on `[lo, hi]`; `None` when the residual keeps its sign there.
pub fn exp_solution_rate_gen(terms: &[(f64, f64)], bracket: (f64, f64)) -> Result<Option<f64>> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
        return Err(Error::InvalidParams(format!("invalid rate bracket [{lo}, {hi}]")));
    }
    let (f_lo, f_hi) = (residual_at(terms, lo), residual_at(terms, hi));
    if f_lo * f_hi > 0.0 || (f_lo == 0.0 && f_hi == 0.0) {
        return Ok(None);
    }
    let br = roots::brent(|r| residual_at(terms, r), lo, hi, 1e-12, 200)?;
    let root = br.best();
    Ok((root > 0.0).then_some(root))
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega < FRAC_PI_2) {
        return Err(Error::domain("omega", omega, "(0, pi/2)"));
    }
    Ok(())
}

/// `g1(omega) = omega (1 - cos omega) / sin omega`, the boundary rate
/// expressed through `omega = arccos(alpha)`. Evaluated as `omega tan(omega/2)`.
pub fn g1(omega: f64) -> Result<f64> {
    check_omega(omega)?;
    Ok(omega * (0.5 * omega).tan())
}

/// `g2(omega) = -ln(cos omega)`, the exponential-solution rate in the same
/// variable. Evaluated as `-ln(1 - 2 sin^2(omega/2))` to avoid cancellation.
pub fn g2(omega: f64) -> Result<f64> {
    check_omega(omega)?;
    let s = (0.5 * omega).sin();
    Ok(-(-2.0 * s * s).ln_1p())
}

/// Grid points `omega_j = j (pi/2)/(n + 1)`, `j = 1..=n`, where
/// `g2 <= g1`.
pub fn g2_g1_violations(n: usize) -> Result<Vec<f64>> {
    if n < 1000 {
        return Err(Error::InvalidParams(format!("n must be at least 1000, got {n}")));
    }
    let step = FRAC_PI_2 / (n + 1) as f64;
    let mut bad = Vec::new();
    for j in 1..=n {
        let w = j as f64 * step;
        if g2(w)? - g1(w)? <= 0.0 {
            bad.push(w);
        }
    }
    Ok(bad)
}

pub fn check_g2_gt_g1(n: usize) -> Result<bool> {
    Ok(g2_g1_violations(n)?.is_empty())
}

/// Grid points `alpha_j = j/(n + 1)` at which the exponential-solution rate
/// fails to exceed the stability boundary.
pub fn exp_locus_violations(n: usize) -> Result<Vec<f64>> {
    let mut bad = Vec::new();
    for j in 1..=n {
        let alpha = j as f64 / (n + 1) as f64;
        if exp_solution_rate(alpha)? <= stability_boundary_r(alpha)? {
            bad.push(alpha);
        }
    }
    Ok(bad)
}

/// `(1/r) ln(1 + e^r / c)`: blow-up time of the comparison ODE
/// `y' = r y (1 + e^{-r} y)`, `y(0) = c`.
pub fn prop3_lower_bound(r: f64, c: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::domain("r", r, "(0, inf)"));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::domain("c", c, "(0, inf)"));
    }
    Ok((r.exp() / c).ln_1p() / r)
}

/// `y(t) = c e^{rt} / (1 + (1 - e^{rt}) e^{-r} c)`, valid before the
/// denominator vanishes.
pub fn comparison_ode_solution(r: f64, c: f64, t: f64) -> Result<f64> {
    let t_star = prop3_lower_bound(r, c)?;
    if !(t < t_star) {
        return Err(Error::domain("t", t, "(-inf, blow-up time of the comparison ODE)"));
    }
    let denom = 1.0 - (r * t).exp_m1() * (-r).exp() * c;
    Ok(c * (r * t).exp() / denom)
}

/// One row of the stability chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChartRow {
    pub alpha: f64,
    pub r_boundary: f64,
    /// `-ln alpha` for `0 < alpha < 1`.
    pub exp_solution_r: Option<f64>,
}

/// Boundary and exponential-locus curves on `n` equally spaced `alpha`
/// values spanning `[alpha_min, alpha_max]` inside `(-1, 1)`.
pub fn stability_chart(alpha_min: f64, alpha_max: f64, n: usize) -> Result<Vec<ChartRow>> {
    if !(alpha_min > -1.0 && alpha_max < 1.0 && alpha_min <= alpha_max) {
        return Err(Error::InvalidParams(format!(
            "alpha range [{alpha_min}, {alpha_max}] must lie inside (-1, 1)"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParams("n must be positive".into()));
    }
    (0..n)
        .map(|k| {
            let alpha = if n == 1 {
                alpha_min
            } else if k == n - 1 {
                alpha_max
            } else {
                alpha_min + (alpha_max - alpha_min) * k as f64 / (n - 1) as f64
            };
            Ok(ChartRow {
                alpha,
                r_boundary: stability_boundary_r(alpha)?,
                exp_solution_r: exp_solution_rate(alpha).ok(),
            })
        })
        .collect()
}

pub fn write_chart_csv<W: Write>(rows: &[ChartRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "r_boundary", "exp_solution_r"])?;
    for row in rows {
        w.write_record([
            row.alpha.to_string(),
            row.r_boundary.to_string(),
            row.exp_solution_r.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

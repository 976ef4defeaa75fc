//! Equation parameters, right-hand sides, the positive equilibrium and the
//! normalisation from the raw population model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters `(r, alpha)` of the normalised equation
/// `x' = r x (1 + alpha x - x(t - 1))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    r: f64,
    alpha: f64,
}

impl Params {
    pub fn new(r: f64, alpha: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::domain("r", r, "(0, inf)"));
        }
        if !alpha.is_finite() {
            return Err(Error::domain("alpha", alpha, "finite reals"));
        }
        Ok(Params { r, alpha })
    }

    /// Parameters on the exponential-solution locus, `alpha = exp(-r)`.
    pub fn on_exponential_locus(r: f64) -> Result<Self> {
        Params::new(r, (-r).exp())
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// True when `alpha = exp(-r)` to within `tol`.
    pub fn is_exponential_locus(&self, tol: f64) -> bool {
        (self.alpha - (-self.r).exp()).abs() <= tol
    }

    /// The same equation written as a multi-delay model with terms
    /// `[(alpha, 0), (-1, 1)]`.
    pub fn to_gen(&self) -> GenParams {
        GenParams {
            r: self.r,
            terms: vec![
                DelayTerm { coef: self.alpha, delay: 0.0 },
                DelayTerm { coef: -1.0, delay: 1.0 },
            ],
        }
    }
}

/// Parameters of the raw model `N'(s) = N(s) (r_tilde + a N(s) - b N(s - tau))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub r_tilde: f64,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
}

/// Result of [`normalize`]: `x(t) = state_scale * N(time_scale * t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Normalized {
    pub params: Params,
    pub state_scale: f64,
    pub time_scale: f64,
}

impl Normalized {
    /// Maps a solution value `x(t)` of the normalised equation back to
    /// `(s, N(s))` of the raw model.
    pub fn to_raw(&self, t: f64, x: f64) -> (f64, f64) {
        (self.time_scale * t, x / self.state_scale)
    }

    /// Inverse of [`Normalized::to_raw`].
    pub fn from_raw(&self, s: f64, n: f64) -> (f64, f64) {
        (s / self.time_scale, self.state_scale * n)
    }
}

pub fn normalize(raw: &RawParams) -> Result<Normalized> {
    for (name, v) in [("r_tilde", raw.r_tilde), ("b", raw.b), ("tau", raw.tau)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
        }
    }
    if !raw.a.is_finite() {
        return Err(Error::domain("a", raw.a, "finite reals"));
    }
    Ok(Normalized {
        params: Params::new(raw.tau * raw.r_tilde, raw.a / raw.b)?,
        state_scale: raw.b / raw.r_tilde,
        time_scale: raw.tau,
    })
}

/// One term `coef * x(t - delay)` of the multi-delay model. A zero delay
/// denotes instantaneous feedback.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayTerm {
    pub coef: f64,
    pub delay: f64,
}

/// Parameters of `x' = r x (1 + sum_i a_i x(t - tau_i))`.
///
/// Delays are non-negative, strictly increasing and the largest one is
/// positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    r: f64,
    terms: Vec<DelayTerm>,
}

impl GenParams {
    pub fn new(r: f64, terms: Vec<(f64, f64)>) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::domain("r", r, "(0, inf)"));
        }
        if terms.is_empty() {
            return Err(Error::InvalidParams("at least one term is required".into()));
        }
        for &(a, tau) in &terms {
            if !a.is_finite() || !tau.is_finite() || tau < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "term ({a}, {tau}) needs a finite coefficient and a non-negative delay"
                )));
            }
        }
        if terms.windows(2).any(|w| w[1].1 <= w[0].1) {
            return Err(Error::InvalidParams(
                "delays must be distinct and sorted ascending".into(),
            ));
        }
        if terms.last().map_or(true, |t| t.1 <= 0.0) {
            return Err(Error::InvalidParams("the largest delay must be positive".into()));
        }
        Ok(GenParams {
            r,
            terms: terms
                .into_iter()
                .map(|(coef, delay)| DelayTerm { coef, delay })
                .collect(),
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn terms(&self) -> &[DelayTerm] {
        &self.terms
    }

    pub fn max_delay(&self) -> f64 {
        self.terms.last().map_or(0.0, |t| t.delay)
    }

    /// Same coefficients with a different rate.
    pub fn with_rate(&self, r: f64) -> Result<Self> {
        GenParams::new(r, self.terms.iter().map(|t| (t.coef, t.delay)).collect())
    }
}

/// The positive equilibrium `x* = 1/(1 - alpha)`, present iff `alpha < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Equilibrium {
    pub exists: bool,
    pub value: Option<f64>,
}

/// `r x_now (1 + alpha x_now - x_delayed)`.
pub fn rhs(p: &Params, x_now: f64, x_delayed: f64) -> f64 {
    p.r * x_now * (1.0 + p.alpha * x_now - x_delayed)
}

pub fn equilibrium(p: &Params) -> Equilibrium {
    if p.alpha < 1.0 {
        Equilibrium { exists: true, value: Some(1.0 / (1.0 - p.alpha)) }
    } else {
        Equilibrium { exists: false, value: None }
    }
}

/// `r x_now (1 + sum_i a_i x_delayed[i])`, with `x_delayed` aligned to the
/// terms of `p` (the entry for a zero delay is normally `x_now`).
pub fn rhs_gen(p: &GenParams, x_now: f64, x_delayed: &[f64]) -> Result<f64> {
    if x_delayed.len() != p.terms.len() {
        return Err(Error::Arity { expected: p.terms.len(), got: x_delayed.len() });
    }
    let feedback: f64 = p
        .terms
        .iter()
        .zip(x_delayed)
        .map(|(term, x)| term.coef * x)
        .sum();
    Ok(p.r * x_now * (1.0 + feedback))
}

//! Initial functions on the delay interval and the families used to seed
//! blow-up, exponential and ordered solutions.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Params;

/// Spacing of the grid on which positivity is checked at construction.
pub const POSITIVITY_GRID: f64 = 1e-3;

/// Tolerance on `phi(0) = c` when certifying an ordering.
pub const ANCHOR_TOL: f64 = 1e-12;

/// Log-profile `psi` of an exponential-profile history
/// `phi(s) = c exp(r s + psi(s))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Profile {
    /// Polynomial with coefficients in ascending order.
    Polynomial(Vec<f64>),
    /// `amp * sin(2 pi k s)`.
    Sine { amp: f64, k: u32 },
}

impl Profile {
    pub fn zero() -> Self {
        Profile::Polynomial(vec![])
    }

    /// `coef * s^2`.
    pub fn quadratic(coef: f64) -> Self {
        Profile::Polynomial(vec![0.0, 0.0, coef])
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Profile::Polynomial(coefs) => coefs.iter().rev().fold(0.0, |acc, &a| acc * s + a),
            Profile::Sine { amp, k } => {
                amp * (2.0 * std::f64::consts::PI * f64::from(*k) * s).sin()
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Profile::Polynomial(coefs) => coefs.iter().all(|a| a.is_finite()),
            Profile::Sine { amp, .. } => amp.is_finite(),
        }
    }
}

/// Monotone piecewise-cubic Hermite interpolant through positive samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pchip {
    s: Vec<f64>,
    phi: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    fn new(s: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if s.len() != phi.len() || s.len() < 2 {
            return Err(Error::InvalidConstruction(
                "a table needs at least two (s, phi) rows".into(),
            ));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConstruction(
                "table abscissae must be strictly increasing".into(),
            ));
        }
        let n = s.len();
        let h: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (phi[k + 1] - phi[k]) / h[k]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slopes[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            slopes[0] = Self::edge_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = Self::edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Pchip { s, phi, slopes })
    }

    // One-sided three-point estimate with the usual shape-preserving limits.
    fn edge_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
        let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if d.signum() != m0.signum() || m0 == 0.0 {
            0.0
        } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
            3.0 * m0
        } else {
            d
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.s.len();
        let k = self.s.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let h = self.s[k + 1] - self.s[k];
        let t = (x - self.s[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.phi[k] + h10 * h * self.slopes[k] + h01 * self.phi[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistoryKind {
    Constant { v: f64 },
    /// `plateau_v` up to `plateau_end`, then linear to `terminal_q` at zero.
    StepRamp { plateau_v: f64, plateau_end: f64, terminal_q: f64 },
    ExpProfile { c: f64, r: f64, profile: Profile },
    Tabulated(Pchip),
}

/// A positive continuous initial function on `[lower, 0]` (by default
/// `[-1, 0]`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistoryFn {
    kind: HistoryKind,
    lower: f64,
}

impl HistoryFn {
    fn checked(kind: HistoryKind, lower: f64) -> Result<Self> {
        if !(lower.is_finite() && lower < 0.0) {
            return Err(Error::InvalidConstruction(format!(
                "history domain [{lower}, 0] is empty"
            )));
        }
        let h = HistoryFn { kind, lower };
        let n = (-lower / POSITIVITY_GRID).ceil() as usize;
        for j in 0..=n {
            let s = (lower + j as f64 * POSITIVITY_GRID).min(0.0);
            let v = h.value(s);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConstruction(format!(
                    "history is not positive: phi({s}) = {v}"
                )));
            }
        }
        let v0 = h.value(0.0);
        if !(v0.is_finite() && v0 > 0.0) {
            return Err(Error::InvalidConstruction(format!(
                "history is not positive: phi(0) = {v0}"
            )));
        }
        Ok(h)
    }

    pub fn constant(v: f64) -> Result<Self> {
        Self::checked(HistoryKind::Constant { v }, -1.0)
    }

    pub fn step_ramp(plateau_v: f64, plateau_end: f64, terminal_q: f64) -> Result<Self> {
        if !(-1.0..0.0).contains(&plateau_end) {
            return Err(Error::InvalidConstruction(format!(
                "plateau end {plateau_end} must lie in [-1, 0)"
            )));
        }
        Self::checked(HistoryKind::StepRamp { plateau_v, plateau_end, terminal_q }, -1.0)
    }

    /// `phi(s) = c exp(r s + psi(s))`.
    pub fn exp_profile(c: f64, r: f64, profile: Profile) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidConstruction(format!("c must be positive, got {c}")));
        }
        if !r.is_finite() || !profile.is_finite() {
            return Err(Error::InvalidConstruction("non-finite exponential profile".into()));
        }
        Self::checked(HistoryKind::ExpProfile { c, r, profile }, -1.0)
    }

    /// Monotone piecewise-cubic interpolation of samples; the domain is
    /// `[s[0], 0]` and the last abscissa must be zero.
    pub fn tabulated(s: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let (Some(&first), Some(&last)) = (s.first(), s.last()) else {
            return Err(Error::InvalidConstruction("empty table".into()));
        };
        if last != 0.0 {
            return Err(Error::InvalidConstruction(format!(
                "table must end at s = 0, ends at {last}"
            )));
        }
        if first > -1.0 {
            return Err(Error::InvalidConstruction(format!(
                "table must start at s <= -1, starts at {first}"
            )));
        }
        if phi.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConstruction("table values must be positive".into()));
        }
        Self::checked(HistoryKind::Tabulated(Pchip::new(s, phi)?), first)
    }

    /// Reads a two-column `s,phi` CSV (an optional header row is skipped).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let (mut s, mut phi) = (Vec::new(), Vec::new());
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse {
                    token: rec.iter().collect::<Vec<_>>().join(","),
                    message: format!("row {} of {} needs two columns", row + 1, path.display()),
                });
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(a), Ok(b)) => {
                    s.push(a);
                    phi.push(b);
                }
                _ if row == 0 => continue,
                (Err(_), _) => return Err(parse_err(&rec[0], "not a number")),
                (_, Err(_)) => return Err(parse_err(&rec[1], "not a number")),
            }
        }
        Self::tabulated(s, phi)
    }

    /// Extends an analytically defined history (constant, exponential
    /// profile, or the plateau of a step ramp) to `[lower, 0]`.
    pub fn with_lower(self, lower: f64) -> Result<Self> {
        if lower > self.lower {
            return Err(Error::InvalidConstruction(format!(
                "cannot shrink the history domain to [{lower}, 0]"
            )));
        }
        if let HistoryKind::Tabulated(_) = self.kind {
            if lower < self.lower {
                return Err(Error::InvalidConstruction(
                    "a table cannot be extended beyond its first sample".into(),
                ));
            }
        }
        Self::checked(self.kind, lower)
    }

    pub fn kind(&self) -> &HistoryKind {
        &self.kind
    }

    /// Left end of the domain.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// `phi(s)`, or a domain error outside `[lower, 0]`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(self.lower..=0.0).contains(&s) {
            return Err(Error::domain("history argument", s, "[lower, 0]"));
        }
        Ok(self.value(s))
    }

    /// Unchecked evaluation used on hot paths.
    pub(crate) fn value(&self, s: f64) -> f64 {
        match &self.kind {
            HistoryKind::Constant { v } => *v,
            HistoryKind::StepRamp { plateau_v, plateau_end, terminal_q } => {
                if s <= *plateau_end {
                    *plateau_v
                } else {
                    let w = (s - plateau_end) / (-plateau_end);
                    (1.0 - w) * plateau_v + w * terminal_q
                }
            }
            HistoryKind::ExpProfile { c, r, profile } => c * (r * s + profile.eval(s)).exp(),
            HistoryKind::Tabulated(table) => table.eval(s),
        }
    }

    /// Interior points where the history is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            HistoryKind::StepRamp { plateau_end, .. } if *plateau_end > self.lower => {
                vec![*plateau_end]
            }
            HistoryKind::Tabulated(table) => table.s[1..table.s.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    /// The log-profile `psi(s) = ln(phi(s) / (c e^{r s}))` when the history is
    /// an exponential profile with the given `c` and `r`.
    pub fn exp_profile_parts(&self) -> Option<(f64, f64, &Profile)> {
        match &self.kind {
            HistoryKind::ExpProfile { c, r, profile } => Some((*c, *r, profile)),
            _ => None,
        }
    }
}

/// Initial function of the constructive blow-up argument: equal to 1 on
/// `[-1, -1/2]`, linear up to `q = h/(r alpha)` at zero. The solution obeys
/// `x' = r alpha x^2` on `[0, 1/2]` and escapes at `t = 1/h`.
pub fn make_blowup_seed(p: &Params, h: f64) -> Result<HistoryFn> {
    if p.alpha() <= 0.0 {
        return Err(Error::InvalidConstruction(format!(
            "the blow-up seed needs alpha > 0, got {}",
            p.alpha()
        )));
    }
    if !(h >= 2.0 && h.is_finite()) {
        return Err(Error::InvalidConstruction(format!("the blow-up seed needs h >= 2, got {h}")));
    }
    HistoryFn::step_ramp(1.0, -0.5, h / (p.r() * p.alpha()))
}

/// `c exp(r s - delta s^2)`: below the exponential solution, touching it at 0.
pub fn make_thm2_family(c: f64, r: f64, delta: f64) -> Result<HistoryFn> {
    check_family_args(c, r, delta)?;
    HistoryFn::exp_profile(c, r, Profile::quadratic(-delta))
}

/// `c exp(r s + delta s^2)`: above the exponential solution, touching it at 0.
pub fn make_thm3_family(c: f64, r: f64, delta: f64) -> Result<HistoryFn> {
    check_family_args(c, r, delta)?;
    HistoryFn::exp_profile(c, r, Profile::quadratic(delta))
}

/// `c exp(r s + delta sin(2 pi k s))`, oscillating about `c e^{r s}`.
pub fn make_osc_family(c: f64, r: f64, delta: f64, k: u32) -> Result<HistoryFn> {
    check_family_args(c, r, delta)?;
    HistoryFn::exp_profile(c, r, Profile::Sine { amp: delta, k })
}

fn check_family_args(c: f64, r: f64, delta: f64) -> Result<()> {
    for (name, v) in [("c", c), ("r", r), ("delta", delta)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidConstruction(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRelation {
    BelowExponential,
    AboveExponential,
    Neither,
}

/// Grid check of the ordering hypotheses against `c e^{r s}`.
///
/// A positive verdict only means the conditions hold on the grid (and at
/// both endpoints exactly); it is necessary, not sufficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderCertificate {
    pub relation: OrderRelation,
    pub c: f64,
    pub checked_grid_spacing: f64,
}

pub fn certify_order(h: &HistoryFn, p: &Params, c: f64, grid_n: usize) -> Result<OrderCertificate> {
    if grid_n < 100 {
        return Err(Error::InvalidParams(format!("grid_n must be at least 100, got {grid_n}")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::domain("c", c, "(0, inf)"));
    }
    let r = p.r();
    let spacing = 1.0 / grid_n as f64;
    let cert = |relation| OrderCertificate { relation, c, checked_grid_spacing: spacing };

    if (h.value(0.0) - c).abs() > ANCHOR_TOL * c.max(1.0) || h.lower() > -1.0 {
        return Ok(cert(OrderRelation::Neither));
    }
    // Non-strict comparisons allow a few ulps for the exp evaluations.
    let slack = 4.0 * f64::EPSILON;
    let (mut below, mut above) = (true, true);
    for j in 0..=grid_n {
        let s = -1.0 + j as f64 * spacing;
        let s = if j == grid_n { 0.0 } else { s };
        let phi = h.value(s);
        let expo = c * (r * s).exp();
        below &= phi <= expo * (1.0 + slack);
        above &= phi >= expo * (1.0 - slack);
    }
    let phi_m1 = h.value(-1.0);
    let expo_m1 = c * (-r).exp();
    below &= phi_m1 < expo_m1;
    above &= phi_m1 > expo_m1;

    Ok(cert(match (below, above) {
        (true, false) => OrderRelation::BelowExponential,
        (false, true) => OrderRelation::AboveExponential,
        _ => OrderRelation::Neither,
    }))
}

/// Parsed form of the history mini-language used on the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum HistorySpec {
    Const { v: f64 },
    StepRamp { q: f64 },
    Exp { c: f64 },
    Thm2 { c: f64, delta: f64 },
    Thm3 { c: f64, delta: f64 },
    Osc { c: f64, delta: f64, k: u32 },
    Table(PathBuf),
}

fn parse_err(token: &str, message: &str) -> Error {
    Error::Parse { token: token.to_string(), message: message.to_string() }
}

struct Args<'a> {
    family: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Args<'a> {
    fn parse(family: &'a str, body: &'a str, allowed: &[&str]) -> Result<Self> {
        let mut pairs = Vec::new();
        for piece in body.split(',') {
            let Some((key, value)) = piece.split_once('=') else {
                return Err(parse_err(piece, "expected key=value"));
            };
            let key = key.trim();
            if !allowed.contains(&key) {
                return Err(parse_err(
                    key,
                    &format!("unknown key for `{family}` (expected {})", allowed.join(", ")),
                ));
            }
            if pairs.iter().any(|(k, _)| *k == key) {
                return Err(parse_err(key, "duplicate key"));
            }
            pairs.push((key, value.trim()));
        }
        for key in allowed {
            if !pairs.iter().any(|(k, _)| k == key) {
                return Err(parse_err(family, &format!("missing key `{key}`")));
            }
        }
        Ok(Args { family, pairs })
    }

    fn raw(&self, key: &str) -> &'a str {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).unwrap_or_default()
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let raw = self.raw(key);
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(parse_err(raw, &format!("`{key}` in `{}` must be a finite number", self.family))),
        }
    }

    fn u32(&self, key: &str) -> Result<u32> {
        let raw = self.raw(key);
        raw.parse::<u32>()
            .map_err(|_| parse_err(raw, &format!("`{key}` must be a non-negative integer")))
    }
}

impl FromStr for HistorySpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let Some((family, body)) = spec.split_once(':') else {
            return Err(parse_err(spec, "expected <family>:<arguments>"));
        };
        Ok(match family {
            "const" => HistorySpec::Const { v: Args::parse(family, body, &["v"])?.f64("v")? },
            "stepramp" => HistorySpec::StepRamp { q: Args::parse(family, body, &["q"])?.f64("q")? },
            "exp" => HistorySpec::Exp { c: Args::parse(family, body, &["c"])?.f64("c")? },
            "thm2" | "thm3" => {
                let a = Args::parse(family, body, &["c", "delta"])?;
                let (c, delta) = (a.f64("c")?, a.f64("delta")?);
                if family == "thm2" {
                    HistorySpec::Thm2 { c, delta }
                } else {
                    HistorySpec::Thm3 { c, delta }
                }
            }
            "osc" => {
                let a = Args::parse(family, body, &["c", "delta", "k"])?;
                HistorySpec::Osc { c: a.f64("c")?, delta: a.f64("delta")?, k: a.u32("k")? }
            }
            "table" => {
                if body.is_empty() {
                    return Err(parse_err(spec, "missing CSV path"));
                }
                HistorySpec::Table(PathBuf::from(body))
            }
            other => {
                return Err(parse_err(
                    other,
                    "unknown history family (expected const, stepramp, exp, thm2, thm3, osc, table)",
                ))
            }
        })
    }
}

impl HistorySpec {
    /// Builds the history; `r` fixes the rate of the exponential families.
    pub fn build(&self, r: f64) -> Result<HistoryFn> {
        match self {
            HistorySpec::Const { v } => HistoryFn::constant(*v),
            HistorySpec::StepRamp { q } => HistoryFn::step_ramp(1.0, -0.5, *q),
            HistorySpec::Exp { c } => HistoryFn::exp_profile(*c, r, Profile::zero()),
            HistorySpec::Thm2 { c, delta } => make_thm2_family(*c, r, *delta),
            HistorySpec::Thm3 { c, delta } => make_thm3_family(*c, r, *delta),
            HistorySpec::Osc { c, delta, k } => make_osc_family(*c, r, *delta, *k),
            HistorySpec::Table(path) => HistoryFn::from_csv(path),
        }
    }

    /// The anchor `c` of the exponential families.
    pub fn anchor(&self) -> Option<f64> {
        match self {
            HistorySpec::Exp { c }
            | HistorySpec::Thm2 { c, .. }
            | HistorySpec::Thm3 { c, .. }
            | HistorySpec::Osc { c, .. } => Some(*c),
            _ => None,
        }
    }
}

impl fmt::Display for HistorySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistorySpec::Const { v } => write!(f, "const:v={v}"),
            HistorySpec::StepRamp { q } => write!(f, "stepramp:q={q}"),
            HistorySpec::Exp { c } => write!(f, "exp:c={c}"),
            HistorySpec::Thm2 { c, delta } => write!(f, "thm2:c={c},delta={delta}"),
            HistorySpec::Thm3 { c, delta } => write!(f, "thm3:c={c},delta={delta}"),
            HistorySpec::Osc { c, delta, k } => write!(f, "osc:c={c},delta={delta},k={k}"),
            HistorySpec::Table(path) => write!(f, "table:{}", path.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::io::Write;

    fn params(r: f64, alpha: f64) -> Params {
        Params::new(r, alpha).unwrap()
    }

    #[test]
    fn eval_examples() {
        let h = HistoryFn::constant(1.0).unwrap();
        assert_eq!(h.eval(-0.3).unwrap(), 1.0);

        let h = HistoryFn::step_ramp(1.0, -0.5, 4.0).unwrap();
        assert_eq!(h.eval(-0.75).unwrap(), 1.0);
        assert_eq!(h.eval(0.0).unwrap(), 4.0);
        assert_eq!(h.eval(-0.25).unwrap(), 2.5);

        let h = HistoryFn::exp_profile(1.0, 1.0, Profile::zero()).unwrap();
        assert_relative_eq!(h.eval(-1.0).unwrap(), (-1f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn eval_rejects_outside_domain() {
        let h = HistoryFn::constant(1.0).unwrap();
        assert!(matches!(h.eval(0.1), Err(Error::Domain { .. })));
        assert!(matches!(h.eval(-1.01), Err(Error::Domain { .. })));
        let h = h.with_lower(-2.0).unwrap();
        assert_eq!(h.eval(-1.5).unwrap(), 1.0);
    }

    #[test]
    fn non_positive_histories_are_rejected() {
        assert!(HistoryFn::constant(0.0).is_err());
        assert!(HistoryFn::constant(-1.0).is_err());
        assert!(HistoryFn::step_ramp(1.0, -0.5, -0.5).is_err());
        assert!(HistoryFn::tabulated(vec![-1.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(HistoryFn::exp_profile(1.0, 1.0, Profile::Polynomial(vec![f64::NAN])).is_err());
    }

    #[test]
    fn blowup_seed_examples() {
        let h = make_blowup_seed(&params(1.0, 1.0), 4.0).unwrap();
        assert_eq!(h.eval(0.0).unwrap(), 4.0);
        let h = make_blowup_seed(&params(2.0, 0.5), 2.0).unwrap();
        assert_eq!(h.eval(0.0).unwrap(), 2.0);
        assert!(make_blowup_seed(&params(1.0, -0.5), 2.0).is_err());
        assert!(make_blowup_seed(&params(1.0, 0.0), 2.0).is_err());
        assert!(make_blowup_seed(&params(1.0, 1.0), 1.5).is_err());
    }

    #[test]
    fn blowup_seed_pins_plateau_and_anchor_exactly() {
        for &(r, alpha, h) in &[(1.0, 1.0, 4.0), (0.7, 0.3, 2.5), (2.0, 0.5, 10.0), (3.3, 0.01, 7.0)] {
            let seed = make_blowup_seed(&params(r, alpha), h).unwrap();
            assert_eq!(seed.eval(-1.0).unwrap(), 1.0);
            assert_eq!(seed.eval(-0.5).unwrap(), 1.0);
            assert_eq!(seed.eval(0.0).unwrap(), h / (r * alpha));
            assert_eq!(seed.kinks(), vec![-0.5]);
        }
    }

    #[test]
    fn step_ramp_is_continuous_at_plateau_end() {
        let h = HistoryFn::step_ramp(1.3, -0.4, 7.0).unwrap();
        let left = h.eval(-0.4).unwrap();
        let right = h.eval(-0.4 + 1e-12).unwrap();
        assert_eq!(left, 1.3);
        assert!((right - left).abs() < 1e-10);
    }

    #[test]
    fn exp_family_examples() {
        let h = make_thm2_family(1.0, 1.0, 0.5).unwrap();
        assert_eq!(h.eval(0.0).unwrap(), 1.0);
        assert_relative_eq!(h.eval(-1.0).unwrap(), (-1.5f64).exp(), max_relative = 1e-15);
        assert!(h.eval(-1.0).unwrap() < (-1f64).exp());

        let h = make_thm2_family(2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(h.eval(-0.5).unwrap(), 2.0 * (-0.5f64 - 0.25).exp(), max_relative = 1e-15);

        let h = make_thm3_family(1.0, 1.0, 0.5).unwrap();
        assert_relative_eq!(h.eval(-1.0).unwrap(), (-0.5f64).exp(), max_relative = 1e-15);
        assert!(h.eval(-1.0).unwrap() > (-1f64).exp());
        for delta in [1e-9, 0.1, 3.0] {
            assert_eq!(make_thm3_family(2.5, 0.7, delta).unwrap().eval(0.0).unwrap(), 2.5);
        }

        // Small delta approaches the pure exponential.
        let h = make_thm2_family(1.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(h.eval(-0.7).unwrap(), (-0.7f64).exp(), max_relative = 1e-11);

        assert!(make_thm2_family(0.0, 1.0, 0.5).is_err());
        assert!(make_thm3_family(1.0, 1.0, -0.5).is_err());
    }

    #[test]
    fn certify_examples() {
        let p = params(1.0, (-1f64).exp());
        let c2 = certify_order(&make_thm2_family(1.0, 1.0, 0.5).unwrap(), &p, 1.0, 1000).unwrap();
        assert_eq!(c2.relation, OrderRelation::BelowExponential);
        assert_eq!(c2.checked_grid_spacing, 1e-3);
        let c3 = certify_order(&make_thm3_family(1.0, 1.0, 0.5).unwrap(), &p, 1.0, 1000).unwrap();
        assert_eq!(c3.relation, OrderRelation::AboveExponential);

        let osc = HistoryFn::exp_profile(1.0, 1.0, Profile::Sine { amp: 0.3, k: 2 }).unwrap();
        assert_eq!(certify_order(&osc, &p, 1.0, 1000).unwrap().relation, OrderRelation::Neither);

        // Wrong anchor.
        let c = certify_order(&make_thm2_family(1.0, 1.0, 0.5).unwrap(), &p, 1.1, 1000).unwrap();
        assert_eq!(c.relation, OrderRelation::Neither);
        // Exact exponential: neither strict condition at s = -1 holds.
        let e = HistoryFn::exp_profile(1.0, 1.0, Profile::zero()).unwrap();
        assert_eq!(certify_order(&e, &p, 1.0, 1000).unwrap().relation, OrderRelation::Neither);

        assert!(certify_order(&e, &p, 1.0, 99).is_err());
    }

    #[test]
    fn sine_profile_changes_sign_on_grid() {
        // Independent grid evaluation behind the `neither` verdict above.
        let psi = Profile::Sine { amp: 0.3, k: 2 };
        let vals: Vec<f64> = (1..1000).map(|j| psi.eval(-1.0 + j as f64 * 1e-3)).collect();
        assert!(vals.iter().any(|v| *v > 1e-3));
        assert!(vals.iter().any(|v| *v < -1e-3));
    }

    #[test]
    fn pchip_preserves_monotone_data_and_positivity() {
        let s = vec![-1.0, -0.7, -0.4, -0.2, 0.0];
        let phi = vec![0.01, 0.02, 5.0, 5.0, 0.5];
        let h = HistoryFn::tabulated(s.clone(), phi.clone()).unwrap();
        for (si, pi) in s.iter().zip(&phi) {
            assert_relative_eq!(h.eval(*si).unwrap(), *pi, max_relative = 1e-14);
        }
        let mut prev = h.eval(-1.0).unwrap();
        for j in 1..=600 {
            let v = h.eval(-1.0 + j as f64 * 1e-3).unwrap();
            assert!(v >= prev - 1e-15, "not monotone on the rising part at {j}");
            prev = v;
        }
        for j in 0..=1000 {
            let v = h.eval(-0.4 + j as f64 * 0.2e-3).unwrap();
            assert!(v <= 5.0 + 1e-12);
        }
        assert_eq!(h.kinks(), vec![-0.7, -0.4, -0.2]);
    }

    #[test]
    fn table_validation() {
        assert!(HistoryFn::tabulated(vec![-1.0, -0.5], vec![1.0, 1.0]).is_err());
        assert!(HistoryFn::tabulated(vec![-0.5, 0.0], vec![1.0, 1.0]).is_err());
        assert!(HistoryFn::tabulated(vec![-1.0, -1.0, 0.0], vec![1.0, 1.0, 1.0]).is_err());
        let h = HistoryFn::tabulated(vec![-2.0, 0.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(h.lower(), -2.0);
        assert_eq!(h.eval(-1.0).unwrap(), 2.0);
    }

    #[test]
    fn csv_table_with_header() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "s,phi\n-1,1\n-0.5,2\n0,1.5").unwrap();
        let h = HistoryFn::from_csv(f.path()).unwrap();
        assert_eq!(h.eval(-0.5).unwrap(), 2.0);

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "-1,1\n-0.5,oops\n0,1.5").unwrap();
        match HistoryFn::from_csv(f.path()) {
            Err(Error::Parse { token, .. }) => assert_eq!(token, "oops"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn spec_language() {
        let cases = [
            ("const:v=2", HistorySpec::Const { v: 2.0 }),
            ("stepramp:q=4", HistorySpec::StepRamp { q: 4.0 }),
            ("exp:c=1e0", HistorySpec::Exp { c: 1.0 }),
            ("thm2:c=1,delta=0.5", HistorySpec::Thm2 { c: 1.0, delta: 0.5 }),
            ("thm3:delta=0.5,c=2", HistorySpec::Thm3 { c: 2.0, delta: 0.5 }),
            ("osc:c=1,delta=0.1,k=3", HistorySpec::Osc { c: 1.0, delta: 0.1, k: 3 }),
            ("table:data/phi.csv", HistorySpec::Table(PathBuf::from("data/phi.csv"))),
        ];
        for (text, expected) in cases {
            let parsed: HistorySpec = text.parse().unwrap();
            assert_eq!(parsed, expected);
            assert_eq!(parsed.to_string().parse::<HistorySpec>().unwrap(), expected);
        }
    }

    #[test]
    fn spec_errors_name_the_token() {
        let token_of = |text: &str| match text.parse::<HistorySpec>() {
            Err(Error::Parse { token, .. }) => token,
            other => panic!("{text}: unexpected {other:?}"),
        };
        assert_eq!(token_of("cosnt:v=1"), "cosnt");
        assert_eq!(token_of("const:v=abc"), "abc");
        assert_eq!(token_of("const:w=1"), "w");
        assert_eq!(token_of("thm2:c=1"), "thm2");
        assert_eq!(token_of("thm2:c=1,delta"), "delta");
        assert_eq!(token_of("osc:c=1,delta=0.1,k=1.5"), "1.5");
        assert_eq!(token_of("nocolon"), "nocolon");
        assert_eq!(token_of("exp:c=inf"), "inf");
    }

    #[test]
    fn spec_build_uses_rate() {
        let h = "exp:c=2".parse::<HistorySpec>().unwrap().build(0.5).unwrap();
        assert_relative_eq!(h.eval(-1.0).unwrap(), 2.0 * (-0.5f64).exp(), max_relative = 1e-15);
        let h = "stepramp:q=4".parse::<HistorySpec>().unwrap().build(1.0).unwrap();
        assert_eq!(h.eval(-0.5).unwrap(), 1.0);
        assert!("const:v=-1".parse::<HistorySpec>().unwrap().build(1.0).is_err());
    }

    proptest! {
        #[test]
        fn below_family_certifies_below(c in 0.1f64..10.0, r in 0.1f64..3.0, delta in 1e-6f64..5.0) {
            let p = Params::on_exponential_locus(r).unwrap();
            let h = make_thm2_family(c, r, delta).unwrap();
            prop_assert_eq!(certify_order(&h, &p, c, 1000).unwrap().relation, OrderRelation::BelowExponential);
        }

        #[test]
        fn above_family_certifies_above(c in 0.1f64..10.0, r in 0.1f64..3.0, delta in 1e-6f64..5.0) {
            let p = Params::on_exponential_locus(r).unwrap();
            let h = make_thm3_family(c, r, delta).unwrap();
            prop_assert_eq!(certify_order(&h, &p, c, 1000).unwrap().relation, OrderRelation::AboveExponential);
        }

        #[test]
        fn tabulated_positive_samples_stay_positive(
            vals in proptest::collection::vec(1e-3f64..100.0, 2..12)
        ) {
            let n = vals.len();
            let s: Vec<f64> = (0..n).map(|j| -1.0 + j as f64 / (n - 1) as f64).collect();
            let mut s = s;
            s[n - 1] = 0.0;
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let h = HistoryFn::tabulated(s, vals).unwrap();
            for j in 0..=2000 {
                prop_assert!(h.eval(-1.0 + j as f64 * 5e-4).unwrap() >= lo * (1.0 - 1e-12));
            }
        }
    }
}

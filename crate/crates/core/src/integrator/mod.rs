//! Method-of-steps integration with dense output and blow-up detection.

mod dopri;
mod engine;
pub mod export;
mod mesh;

use serde::{Deserialize, Serialize};

pub use engine::{Chart, Stats, Variable};
pub use mesh::MESH_DEDUP_TOL;

use crate::analysis;
use crate::error::{Error, Result};
use crate::history::{certify_order, HistoryFn, OrderRelation, Profile};
use crate::model::{GenParams, Params};
use engine::{End, Model, Segment};

/// Tolerance on `alpha = e^{-r}` for the transformed equation and the
/// blow-up time lower bound.
pub const LOCUS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub t_end: f64,
    /// Above this population size the solver integrates `1/x`.
    pub x_switch: f64,
    /// Width of the bracket reported around a blow-up time.
    pub blowup_time_tol: f64,
    pub max_steps: usize,
    /// Largest admissible breakpoint mesh.
    pub mesh_cap: usize,
    /// On the exponential locus, carry histories of the form
    /// `c exp(r s + psi(s))` in co-moving coordinates `ln(x / (c e^{r t}))`.
    #[serde(default = "default_comoving")]
    pub comoving: bool,
}

fn default_comoving() -> bool {
    true
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rtol: 1e-9,
            atol: 1e-12,
            t_end: 10.0,
            x_switch: 1e3,
            blowup_time_tol: 1e-9,
            max_steps: 2_000_000,
            mesh_cap: 100_000,
            comoving: true,
        }
    }
}

impl SolverConfig {
    pub fn with_t_end(t_end: f64) -> Self {
        SolverConfig { t_end, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("t_end", self.t_end),
            ("x_switch", self.x_switch),
            ("blowup_time_tol", self.blowup_time_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.rtol < 10.0 * f64::EPSILON {
            return Err(Error::Config(format!(
                "rtol must be at least 10 machine epsilons, got {}",
                self.rtol
            )));
        }
        if self.max_steps == 0 || self.mesh_cap < 2 {
            return Err(Error::Config("max_steps and mesh_cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowUpReport {
    /// Midpoint of the bracket.
    pub t_blowup: f64,
    pub bracket_width: f64,
    /// Sign-change enclosure of the zero of the reciprocal coordinate.
    pub bracket: [f64; 2],
    /// `(1/r) ln(1 + e^r / c)` when the history is certified to lie below
    /// the exponential solution `c e^{r t}` on the locus `alpha = e^{-r}`.
    pub lower_bound_prop3: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Completed { t_end: f64 },
    BlownUp(BlowUpReport),
    Aborted { reason: String, t: f64 },
}

/// The equation a trajectory solves.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "equation", rename_all = "snake_case")]
pub enum Source {
    Logistic(GenParams),
    /// The equation for `z = ln(x / (c e^{r t}))` on the locus `alpha = e^{-r}`.
    Transformed { params: Params, c: f64 },
}

/// Dense piecewise solution on `[0, end]`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    source: Source,
    history: HistoryRef,
    variable: Variable,
    initial: f64,
    segments: Vec<Segment>,
    breakpoints: Vec<f64>,
    status: Status,
    stats: Stats,
}

/// The initial data a trajectory was started from.
#[derive(Clone, Debug, PartialEq)]
pub enum HistoryRef {
    Phi(HistoryFn),
    Psi(Profile),
}

impl Trajectory {
    pub fn status(&self) -> &Status {
        &self.status
    }

    pub fn blowup(&self) -> Option<&BlowUpReport> {
        match &self.status {
            Status::BlownUp(rep) => Some(rep),
            _ => None,
        }
    }

    pub fn is_blown_up(&self) -> bool {
        self.blowup().is_some()
    }

    pub fn is_completed(&self) -> bool {
        matches!(self.status, Status::Completed { .. })
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn history(&self) -> &HistoryRef {
        &self.history
    }

    pub fn variable(&self) -> Variable {
        self.variable
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    /// Right end of the covered span. For a blow-up this is the last time at
    /// which the reciprocal coordinate is known to be positive.
    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_hi)
    }

    /// End points of the accepted steps.
    pub fn step_times(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.segments.iter().map(|s| s.t1)).collect()
    }

    /// Chart in use at time `t`.
    pub fn chart_at(&self, t: f64) -> Option<Chart> {
        engine::locate(&self.segments, t).map(|s| s.chart)
    }

    fn carried(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(self.initial);
        }
        if !(t > 0.0 && t <= self.end()) {
            return Err(Error::domain("trajectory time", t, "[0, end of covered span]"));
        }
        let seg = engine::locate(&self.segments, t)
            .ok_or_else(|| Error::domain("trajectory time", t, "[0, end of covered span]"))?;
        Ok(self.variable.decode(seg.chart, seg.chart_value(t)))
    }

    /// The solution of the source equation: `x`, or `z` for the transformed
    /// equation.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self.source {
            Source::Transformed { .. } => self.carried(t),
            Source::Logistic(_) => self.eval_x(t),
        }
    }

    /// The population `x(t)`.
    pub fn eval_x(&self, t: f64) -> Result<f64> {
        let v = self.carried(t)?;
        Ok(self.variable.magnitude(t, v))
    }

    /// Times `k dt` inside the covered span.
    pub fn sample_times(&self, dt: f64) -> Vec<f64> {
        let end = self.end();
        let n = (end / dt * (1.0 + 1e-12)).floor() as usize;
        (0..=n).map(|k| (k as f64 * dt).min(end)).collect()
    }

    /// `(t, value)` pairs on [`Trajectory::sample_times`].
    pub fn sample(&self, dt: f64) -> Vec<(f64, f64)> {
        self.sample_times(dt)
            .into_iter()
            .filter_map(|t| self.eval(t).ok().map(|v| (t, v)))
            .collect()
    }
}

/// Dense-output evaluation of a trajectory.
pub fn eval_traj(tr: &Trajectory, t: f64) -> Result<f64> {
    tr.eval(t)
}

struct LogisticModel<'a> {
    r: f64,
    instantaneous: f64,
    coefs: Vec<f64>,
    delays: Vec<f64>,
    history: &'a HistoryFn,
}

impl<'a> LogisticModel<'a> {
    fn new(p: &GenParams, history: &'a HistoryFn) -> Self {
        let mut m = LogisticModel {
            r: p.r(),
            instantaneous: 0.0,
            coefs: Vec::new(),
            delays: Vec::new(),
            history,
        };
        for term in p.terms() {
            if term.delay == 0.0 {
                m.instantaneous += term.coef;
            } else {
                m.coefs.push(term.coef);
                m.delays.push(term.delay);
            }
        }
        m
    }
}

impl Model for LogisticModel<'_> {
    fn variable(&self) -> Variable {
        Variable::X
    }

    fn delays(&self) -> &[f64] {
        &self.delays
    }

    fn history(&self, s: f64) -> f64 {
        self.history.value(s)
    }

    fn history_lower(&self) -> f64 {
        self.history.lower()
    }

    fn deriv(&self, chart: Chart, _t: f64, y: f64, delayed: &[f64]) -> f64 {
        let lagged: f64 = self.coefs.iter().zip(delayed).map(|(a, x)| a * x).sum();
        match chart {
            // (ln x)' = r (1 + a0 x + sum a_i x(t - tau_i))
            Chart::Near => self.r * (1.0 + self.instantaneous * y.exp() + lagged),
            // (1/x)' = -r (1 + sum a_i x(t - tau_i)) / x - r a0
            Chart::Far => -self.r * (1.0 + lagged) * y - self.r * self.instantaneous,
        }
    }
}

/// `z = ln(x / (c e^{r t}))` for `x' = r x (1 + sum a_i x(t - tau_i))` with
/// `sum a_i e^{-r tau_i} = 0`, which becomes
/// `z' = r c e^{r t} sum a_i e^{-r tau_i} (e^{z(t - tau_i)} - 1)`.
struct TransformedModel<'a> {
    r: f64,
    c: f64,
    psi: &'a Profile,
    lower: f64,
    /// `a_0` for the instantaneous term.
    instantaneous: f64,
    /// `a_i e^{-r tau_i}` for the delayed terms.
    weights: Vec<f64>,
    delays: Vec<f64>,
}

impl<'a> TransformedModel<'a> {
    fn new(p: &GenParams, c: f64, psi: &'a Profile, lower: f64) -> Self {
        let r = p.r();
        let mut m = TransformedModel {
            r,
            c,
            psi,
            lower,
            instantaneous: 0.0,
            weights: Vec::new(),
            delays: Vec::new(),
        };
        for term in p.terms() {
            if term.delay == 0.0 {
                m.instantaneous += term.coef;
            } else {
                m.weights.push(term.coef * (-r * term.delay).exp());
                m.delays.push(term.delay);
            }
        }
        m
    }
}

impl Model for TransformedModel<'_> {
    fn variable(&self) -> Variable {
        Variable::Z { c: self.c, r: self.r }
    }

    fn delays(&self) -> &[f64] {
        &self.delays
    }

    fn history(&self, s: f64) -> f64 {
        self.psi.eval(s)
    }

    fn history_lower(&self) -> f64 {
        self.lower
    }

    fn deriv(&self, chart: Chart, t: f64, y: f64, delayed: &[f64]) -> f64 {
        let gain = self.r * self.c * (self.r * t).exp();
        let lagged: f64 = self.weights.iter().zip(delayed).map(|(w, z)| w * z.exp_m1()).sum();
        match chart {
            Chart::Near => gain * (self.instantaneous * y.exp_m1() + lagged),
            // v = e^{-z}, so (e^z - 1) v = 1 - v.
            Chart::Far => -gain * (self.instantaneous * (1.0 - y) + lagged * y),
        }
    }
}

fn finish<M: Model>(
    model: &M,
    cfg: &SolverConfig,
    mesh: Option<Vec<f64>>,
    source: Source,
    history: HistoryRef,
    lower_bound: impl Fn() -> Option<f64>,
) -> Trajectory {
    let variable = model.variable();
    let initial = model.history(0.0);
    let Some(mesh) = mesh else {
        return Trajectory {
            source,
            history,
            variable,
            initial,
            segments: Vec::new(),
            breakpoints: Vec::new(),
            status: Status::Aborted { reason: "mesh explosion".into(), t: 0.0 },
            stats: Stats::default(),
        };
    };
    let out = engine::run(model, cfg, &mesh);
    let status = match out.end {
        End::Completed(t_end) => Status::Completed { t_end },
        End::Aborted(reason, t) => Status::Aborted { reason: reason.into(), t },
        End::Escaped(br) => Status::BlownUp(BlowUpReport {
            t_blowup: br.midpoint(),
            bracket_width: br.width(),
            bracket: [br.lo, br.hi],
            lower_bound_prop3: lower_bound(),
        }),
    };
    Trajectory {
        source,
        history,
        variable,
        initial,
        segments: out.segments,
        breakpoints: mesh,
        status,
        stats: out.stats,
    }
}

/// The blow-up time bound applies when the initial function satisfies the
/// ordering hypotheses below the exponential solution anchored at `phi(0)`.
fn lower_bound_if_certified(p: &Params, phi: &HistoryFn) -> Option<f64> {
    if !p.is_exponential_locus(LOCUS_TOL) {
        return None;
    }
    let c = phi.value(0.0);
    let cert = certify_order(phi, p, c, 1000).ok()?;
    (cert.relation == OrderRelation::BelowExponential)
        .then(|| analysis::prop3_lower_bound(p.r(), c).ok())
        .flatten()
}

/// Integrates `x' = r x (1 + alpha x - x(t - 1))` from `phi` on `[0, t_end]`.
pub fn integrate(p: &Params, phi: &HistoryFn, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if phi.lower() > -1.0 {
        return Err(Error::domain("history lower end", phi.lower(), "(-inf, -1]"));
    }
    let gen = p.to_gen();
    Ok(run_logistic(&gen, phi, cfg, p.is_exponential_locus(LOCUS_TOL), || {
        lower_bound_if_certified(p, phi)
    }))
}

fn run_logistic(
    p: &GenParams,
    phi: &HistoryFn,
    cfg: &SolverConfig,
    on_locus: bool,
    lower_bound: impl Fn() -> Option<f64>,
) -> Trajectory {
    let source = Source::Logistic(p.clone());
    let history = HistoryRef::Phi(phi.clone());
    if let Some((c, rate, psi)) = phi.exp_profile_parts() {
        if cfg.comoving && on_locus && (rate - p.r()).abs() <= LOCUS_TOL * p.r().max(1.0) {
            let psi = psi.clone();
            let model = TransformedModel::new(p, c, &psi, phi.lower());
            let mesh = mesh::build(&model.delays, &[], cfg.t_end, cfg.mesh_cap);
            return finish(&model, cfg, mesh, source, history, lower_bound);
        }
    }
    let model = LogisticModel::new(p, phi);
    let mesh = mesh::build(&model.delays, &phi.kinks(), cfg.t_end, cfg.mesh_cap);
    finish(&model, cfg, mesh, source, history, lower_bound)
}

/// Integrates `x' = r x (1 + sum a_i x(t - tau_i))`; the history must cover
/// `[-max tau, 0]`.
pub fn integrate_gen(p: &GenParams, phi: &HistoryFn, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if phi.lower() > -p.max_delay() + MESH_DEDUP_TOL {
        return Err(Error::domain("history lower end", phi.lower(), "(-inf, -max delay]"));
    }
    let on_locus = analysis::genlog_residual(p).abs() <= LOCUS_TOL;
    Ok(run_logistic(p, phi, cfg, on_locus, || None))
}

/// Integrates `z' = r c e^{r(t-1)} (e^{z(t)} - e^{z(t-1)})` with `z = psi` on
/// `[-1, 0]`; requires `alpha = e^{-r}`.
pub fn integrate_z(p: &Params, c: f64, psi: &Profile, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !p.is_exponential_locus(LOCUS_TOL) {
        return Err(Error::domain("alpha - e^{-r}", p.alpha() - (-p.r()).exp(), "|.| <= 1e-12"));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::domain("c", c, "(0, inf)"));
    }
    let locus = GenParams::new(p.r(), vec![((-p.r()).exp(), 0.0), (-1.0, 1.0)])?;
    let model = TransformedModel::new(&locus, c, psi, -1.0);
    let mesh = mesh::build(&model.delays, &[], cfg.t_end, cfg.mesh_cap);
    Ok(finish(
        &model,
        cfg,
        mesh,
        Source::Transformed { params: *p, c },
        HistoryRef::Psi(psi.clone()),
        || {
            HistoryFn::exp_profile(c, p.r(), psi.clone())
                .ok()
                .and_then(|phi| lower_bound_if_certified(p, &phi))
        },
    ))
}

/// Number of sign changes of `d/dt [x(t) / (c e^{r t})]` observed on a
/// uniform sample; purely descriptive.
pub fn ratio_sign_changes(tr: &Trajectory, c: f64, r: f64, dt: f64) -> usize {
    let ratios: Vec<f64> = tr
        .sample_times(dt)
        .into_iter()
        .filter_map(|t| tr.eval_x(t).ok().map(|x| x / (c * (r * t).exp())))
        .collect();
    let mut changes = 0;
    let mut last_sign = 0.0;
    for w in ratios.windows(2) {
        let d = w[1] - w[0];
        if d == 0.0 {
            continue;
        }
        let sign = d.signum();
        if last_sign != 0.0 && sign != last_sign {
            changes += 1;
        }
        last_sign = sign;
    }
    changes
}

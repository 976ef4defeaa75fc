//! Method-of-steps driver shared by the direct and the transformed equation.
//!
//! The state is integrated in one of two charts. The near chart is
//! logarithmic (`ln x`, or `z` for the transformed equation), which keeps
//! solutions positive and measures error relative to `x`. Once `x` (or `e^z`)
//! exceeds `x_switch` the driver moves to the far chart (`1/x`, or `e^{-z}`),
//! in which a
//! finite-time escape becomes a zero crossing of a linear equation.

use serde::Serialize;

use super::dopri::{self, dense_eval};
use super::SolverConfig;
use crate::roots;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Near,
    Far,
}

/// Which physical quantity a trajectory carries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variable {
    /// The population `x`.
    X,
    /// `z = ln(x / (c e^{r t}))`.
    Z { c: f64, r: f64 },
}

impl Variable {
    pub(crate) fn decode(self, chart: Chart, y: f64) -> f64 {
        match (self, chart) {
            (Variable::X, Chart::Near) => y.exp(),
            (Variable::X, Chart::Far) => 1.0 / y,
            (Variable::Z { .. }, Chart::Near) => y,
            (Variable::Z { .. }, Chart::Far) => -y.ln(),
        }
    }

    pub(crate) fn encode(self, chart: Chart, phys: f64) -> f64 {
        match (self, chart) {
            (Variable::X, Chart::Near) => phys.ln(),
            (Variable::X, Chart::Far) => 1.0 / phys,
            (Variable::Z { .. }, Chart::Near) => phys,
            (Variable::Z { .. }, Chart::Far) => (-phys).exp(),
        }
    }

    /// Quantity compared against `x_switch`: `x`, or the ratio `e^z` to the
    /// exponential solution, which is what diverges at an escape.
    pub(crate) fn switch_measure(self, phys: f64) -> f64 {
        match self {
            Variable::X => phys,
            Variable::Z { .. } => phys.exp(),
        }
    }

    /// The population size `x` at time `t` for a physical value.
    pub(crate) fn magnitude(self, t: f64, phys: f64) -> f64 {
        match self {
            Variable::X => phys,
            Variable::Z { c, r } => c * (phys + r * t).exp(),
        }
    }
}

/// A delay equation in chart form.
pub(crate) trait Model {
    fn variable(&self) -> Variable;
    /// Positive delays, ascending.
    fn delays(&self) -> &[f64];
    /// Physical value for `s <= 0`.
    fn history(&self, s: f64) -> f64;
    fn history_lower(&self) -> f64;
    /// Derivative of the chart coordinate given the delayed physical values.
    fn deriv(&self, chart: Chart, t: f64, y: f64, delayed: &[f64]) -> f64;
}

/// One accepted step with its continuous extension.
#[derive(Clone, Debug)]
pub(crate) struct Segment {
    pub t0: f64,
    pub t1: f64,
    /// End of validity; below `t1` only for the step that hit an escape.
    pub t_hi: f64,
    pub chart: Chart,
    pub coef: [f64; 5],
    pub y1: f64,
}

impl Segment {
    pub fn chart_value(&self, t: f64) -> f64 {
        if t == self.t1 {
            return self.y1;
        }
        dense_eval(&self.coef, (t - self.t0) / (self.t1 - self.t0))
    }
}

/// Finds the segment covering `t` (the later one at a shared end point).
pub(crate) fn locate(segments: &[Segment], t: f64) -> Option<&Segment> {
    let idx = segments.partition_point(|s| s.t0 <= t);
    if idx == 0 {
        return None;
    }
    Some(&segments[idx - 1])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub chart_switches: usize,
}

pub(crate) enum End {
    Completed(f64),
    /// Sign-change bracket of the escape time.
    Escaped(roots::Bracket),
    Aborted(&'static str, f64),
}

pub(crate) struct Outcome {
    pub segments: Vec<Segment>,
    pub end: End,
    pub stats: Stats,
}

// Step-size controller constants (Hairer-Wanner, DOPRI5).
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Share of `blowup_time_tol` a single far-chart step may shift the zero.
const ESCAPE_SHIFT: f64 = 1e-2;

/// `slope` is the larger derivative magnitude at the step ends.
fn error_scale(var: Variable, chart: Chart, t: f64, y0: f64, y1: f64, slope: f64, cfg: &SolverConfig) -> f64 {
    match chart {
        // ln-type coordinates: absolute error in y is relative error in x.
        Chart::Near => {
            let m0 = var.magnitude(t, var.decode(chart, y0));
            let m1 = var.magnitude(t, var.decode(chart, y1));
            cfg.rtol + cfg.atol / m0.max(m1)
        }
        // Reciprocal coordinates: relative error in y is relative error in
        // x; near a zero crossing the floor bounds the induced time shift.
        Chart::Far => {
            let floor = ESCAPE_SHIFT * cfg.blowup_time_tol * slope;
            (cfg.rtol * y0.abs().max(y1.abs()) + floor).max(f64::MIN_POSITIVE)
        }
    }
}

struct Driver<'a, M: Model> {
    model: &'a M,
    cfg: &'a SolverConfig,
    segments: Vec<Segment>,
    stats: Stats,
    delayed: Vec<f64>,
}

impl<'a, M: Model> Driver<'a, M> {
    fn lookup(model: &M, segments: &[Segment], s: f64) -> f64 {
        if s <= 0.0 {
            return model.history(s.max(model.history_lower()));
        }
        match locate(segments, s) {
            Some(seg) => model.variable().decode(seg.chart, seg.chart_value(s)),
            // Before the first segment exists only s <= 0 can be requested.
            None => model.history(0.0),
        }
    }

    fn deriv(&mut self, chart: Chart, t: f64, y: f64) -> f64 {
        self.stats.rhs_evals += 1;
        let model = self.model;
        for (slot, &d) in self.delayed.iter_mut().zip(model.delays()) {
            *slot = Self::lookup(model, &self.segments, t - d);
        }
        model.deriv(chart, t, y, &self.delayed)
    }

    fn initial_step(&mut self, chart: Chart, t: f64, y: f64, f0: f64, h_max: f64) -> f64 {
        let var = self.model.variable();
        let sk = error_scale(var, chart, t, y, y, f0.abs(), self.cfg);
        let d0 = (y / sk).abs();
        let d1 = (f0 / sk).abs();
        let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h = h.min(h_max);
        let f1 = self.deriv(chart, t + h, y + h * f0);
        let d2 = ((f1 - f0) / sk).abs() / h;
        let der = d1.max(d2);
        let h1 = if der <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der).powf(1.0 / f64::from(dopri::ORDER))
        };
        (100.0 * h).min(h1).min(h_max)
    }

    fn run(mut self, mesh: &[f64]) -> Outcome {
        let var = self.model.variable();
        let cfg = self.cfg;
        let phys0 = self.model.history(0.0);
        let mut chart = if var.switch_measure(phys0) > cfg.x_switch { Chart::Far } else { Chart::Near };
        let mut t = 0.0;
        let mut y = var.encode(chart, phys0);
        let mut h = f64::NAN;
        let mut err_old: f64 = 1e-4;
        let mut last_rejected = false;

        let abort = |segments, stats, reason: &'static str, t: f64| Outcome {
            segments,
            end: End::Aborted(reason, t),
            stats,
        };

        for window in mesh.windows(2) {
            let bp = window[1];
            // Hard restart: the derivative may jump at a mesh point.
            let mut k1: Option<f64> = None;
            while t < bp {
                let f0 = match k1 {
                    Some(v) => v,
                    None => {
                        let v = self.deriv(chart, t, y);
                        k1 = Some(v);
                        v
                    }
                };
                if h.is_nan() {
                    h = self.initial_step(chart, t, y, f0, bp - t);
                }
                if self.stats.accepted + self.stats.rejected >= cfg.max_steps {
                    return abort(self.segments, self.stats, "step budget", t);
                }
                if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                    return abort(self.segments, self.stats, "stiffness/underflow", t);
                }
                let remaining = bp - t;
                let snapped = h >= remaining * (1.0 - 1e-12);
                let h_step = if snapped { remaining } else { h };

                let model = self.model;
                let mut evals = 0usize;
                let step = {
                    let segments = &self.segments;
                    let delayed = &mut self.delayed;
                    let mut f = |tt: f64, yy: f64| {
                        evals += 1;
                        for (slot, &d) in delayed.iter_mut().zip(model.delays()) {
                            *slot = Self::lookup(model, segments, tt - d);
                        }
                        model.deriv(chart, tt, yy, delayed)
                    };
                    dopri::step(&mut f, t, y, h_step, f0)
                };
                self.stats.rhs_evals += evals;

                let t_new = if snapped { bp } else { t + h_step };
                let sk = error_scale(var, chart, t, y, step.y_new, f0.abs().max(step.k7.abs()), cfg);
                let err = (step.err / sk).abs();
                let finite = err.is_finite() && step.y_new.is_finite() && step.k7.is_finite();

                if !finite {
                    self.stats.rejected += 1;
                    last_rejected = true;
                    h = h_step * 0.25;
                    continue;
                }

                let fac11 = err.powf(0.2 - BETA * 0.75);
                if err > 1.0 {
                    self.stats.rejected += 1;
                    last_rejected = true;
                    h = h_step / (1.0 / FAC_MIN).min(fac11 / SAFETY);
                    continue;
                }

                // Accepted.
                let fac = (fac11 / err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h_step / fac;
                if last_rejected {
                    h_new = h_new.min(h_step);
                }
                err_old = err.max(1e-4);
                last_rejected = false;
                self.stats.accepted += 1;

                let mut seg = Segment {
                    t0: t,
                    t1: t_new,
                    t_hi: t_new,
                    chart,
                    coef: step.dense,
                    y1: step.y_new,
                };

                if chart == Chart::Far && step.y_new <= 0.0 {
                    return match locate_escape(&seg, cfg.blowup_time_tol) {
                        Some(br) => {
                            seg.t_hi = if br.f_lo > 0.0 { br.lo } else { br.hi };
                            self.segments.push(seg);
                            Outcome { segments: self.segments, end: End::Escaped(br), stats: self.stats }
                        }
                        None => abort(self.segments, self.stats, "escape could not be located", t),
                    };
                }

                self.segments.push(seg);
                t = t_new;
                y = step.y_new;
                k1 = Some(step.k7);
                // A step truncated at a mesh point says little about the
                // attainable size, so keep the larger proposal.
                h = if snapped { h.max(h_new) } else { h_new };

                let mag = var.switch_measure(var.decode(chart, y));
                let switch_to = match chart {
                    Chart::Near if mag > cfg.x_switch => Some(Chart::Far),
                    Chart::Far if mag < cfg.x_switch / 10.0 => Some(Chart::Near),
                    _ => None,
                };
                if let Some(next) = switch_to {
                    y = var.encode(next, var.decode(chart, y));
                    chart = next;
                    k1 = None;
                    self.stats.chart_switches += 1;
                }
            }
        }
        Outcome { segments: self.segments, end: End::Completed(t), stats: self.stats }
    }
}

/// First zero of the far-chart interpolant inside an accepted step, as a
/// bracket no wider than `tol`.
fn locate_escape(seg: &Segment, tol: f64) -> Option<roots::Bracket> {
    const PROBES: usize = 32;
    let value = |t: f64| {
        let v = dense_eval(&seg.coef, (t - seg.t0) / (seg.t1 - seg.t0));
        // An exact zero is already the escape; keep the sign strict.
        if v == 0.0 {
            -f64::MIN_POSITIVE
        } else {
            v
        }
    };
    let mut a = seg.t0;
    let mut fa = dense_eval(&seg.coef, 0.0);
    if fa <= 0.0 {
        return None;
    }
    for j in 1..=PROBES {
        let b = if j == PROBES { seg.t1 } else { seg.t0 + (seg.t1 - seg.t0) * j as f64 / PROBES as f64 };
        let fb = if j == PROBES { seg.y1.min(value(b)) } else { value(b) };
        if fb <= 0.0 {
            let br = if b - a <= tol {
                roots::Bracket { lo: a, hi: b, f_lo: fa, f_hi: fb, iterations: 0 }
            } else {
                roots::brent(value, a, b, tol, 200).ok()?
            };
            return Some(br);
        }
        a = b;
        fa = fb;
    }
    None
}

pub(crate) fn run<M: Model>(model: &M, cfg: &SolverConfig, mesh: &[f64]) -> Outcome {
    let driver = Driver {
        model,
        cfg,
        segments: Vec::new(),
        stats: Stats::default(),
        delayed: vec![0.0; model.delays().len()],
    };
    driver.run(mesh)
}

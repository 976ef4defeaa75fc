#![allow(dead_code)]

use logistic_dde::analysis::{comparison_ode_solution, prop3_lower_bound};
use logistic_dde::history::{make_thm2_family, make_thm3_family};
use logistic_dde::{integrate, integrate_z, GenParams, HistoryFn, Params, Profile, SolverConfig};

/// Tolerance ladder for the order study; each rung is a quarter of the last.
pub const ORDER_RTOLS: usize = 9;
pub const ORDER_RTOL0: f64 = 1e-6;
pub const MIN_ORDER: f64 = 4.0;
pub const Z_ORACLE_FACTOR: f64 = 100.0;
pub const Z_ORACLE_WINDOW: f64 = 1.0;

pub struct OrderStudy {
    pub steps: Vec<usize>,
    pub errors: Vec<f64>,
    pub order: f64,
    /// The error drops across every pair of rungs (a 16-fold cut in `rtol`).
    pub monotone: bool,
}

/// Runs `y' = r y (1 + e^{-r} y)`, `y = c` on `[-1, 0]`, through the delay
/// integrator (zero delayed coefficient) and compares against the closed form.
pub fn order_study(r: f64, c: f64) -> OrderStudy {
    let p = GenParams::new(r, vec![((-r).exp(), 0.0), (0.0, 1.0)]).unwrap();
    let phi = HistoryFn::constant(c).unwrap();
    let t_end = 0.9 * prop3_lower_bound(r, c).unwrap();
    let mut steps = Vec::new();
    let mut errors = Vec::new();
    for k in 0..ORDER_RTOLS {
        let cfg = SolverConfig {
            rtol: ORDER_RTOL0 / 4f64.powi(k as i32),
            atol: 1e-30,
            t_end,
            ..Default::default()
        };
        let tr = logistic_dde::integrate_gen(&p, &phi, &cfg).unwrap();
        assert!(tr.is_completed());
        let err = (0..=200)
            .map(|i| {
                let t = t_end * i as f64 / 200.0;
                let y = comparison_ode_solution(r, c, t).unwrap();
                ((tr.eval_x(t).unwrap() - y) / y).abs()
            })
            .fold(0.0, f64::max);
        steps.push(tr.stats().accepted);
        errors.push(err);
    }
    let xs: Vec<f64> = steps.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let monotone = errors.windows(3).all(|w| w[2] < w[0]);
    OrderStudy { steps, errors, order: -sxy / sxx, monotone }
}

/// Largest relative gap between the direct integration and the co-moving
/// z-equation, in units of `rtol`, at the accepted steps of the direct run
/// on `[0, Z_ORACLE_WINDOW]` where both stay below `x_switch`.
pub fn z_oracle_gap(r: f64, c: f64, delta: f64, below: bool) -> f64 {
    let p = Params::on_exponential_locus(r).unwrap();
    let phi = if below { make_thm2_family(c, r, delta) } else { make_thm3_family(c, r, delta) }.unwrap();
    let psi = phi.exp_profile_parts().map(|(_, _, psi)| psi.clone()).unwrap_or_else(Profile::zero);
    let base = SolverConfig::with_t_end(Z_ORACLE_WINDOW);
    let direct = integrate(&p, &phi, &SolverConfig { comoving: false, ..base.clone() }).unwrap();
    let z = integrate_z(&p, c, &psi, &base).unwrap();
    let end = direct.end().min(z.end());
    direct
        .step_times()
        .into_iter()
        .filter(|&t| t <= end)
        .filter_map(|t| {
            let (xd, xz) = (direct.eval_x(t).unwrap(), z.eval_x(t).unwrap());
            (xd.max(xz) <= base.x_switch).then(|| ((xd - xz) / xz).abs())
        })
        .fold(0.0, f64::max)
        / base.rtol
}

pub const GRID_R: [f64; 3] = [0.5, 1.0, 2.0];
pub const GRID_C: [f64; 3] = [0.5, 1.0, 2.0];
pub const GRID_DELTA: [f64; 3] = [0.1, 0.5, 2.0];

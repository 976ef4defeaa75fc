//! Verification suites. Each suite runs a fixed set of cases and reports
//! expected against observed values with the tolerance used for the verdict.
//!
//! Cases marked `certified` compare with closed forms or exact orderings.
//! The others probe asymptotic behaviour on a finite horizon and are
//! evidence only.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis;
use crate::error::{Error, Result};
use crate::history::{make_blowup_seed, make_thm2_family, make_thm3_family, HistoryFn, Profile};
use crate::integrator::{integrate, integrate_gen, integrate_z, SolverConfig, Status, Trajectory};
use crate::model::{equilibrium, normalize, GenParams, Params, RawParams};

pub const DEFAULT_SEED: u64 = 42;

/// Output spacing for sampled checks.
pub const SAMPLE_DT: f64 = 0.01;

/// Blow-up time and closed-form trajectory tolerance for the constructed seeds.
pub const BLOWUP_TIME_TOL: f64 = 1e-6;
/// Share of `[0, 1/h)` on which the seed trajectory is compared.
pub const CLOSED_FORM_SPAN: f64 = 0.99;

/// Relative deviation allowed from an exponential solution.
pub const EXP_TOL: f64 = 1e-8;
pub const EXP_HORIZON: f64 = 5.0;

pub const BELOW_HORIZON: f64 = 50.0;
pub const ABOVE_HORIZON: f64 = 20.0;
/// Allowed shortfall of an observed blow-up time below the lower bound.
pub const BLOWUP_BOUND_SLACK: f64 = 1e-9;
/// Relative slack for monotonicity of `z` between samples.
pub const Z_MONOTONE_SLACK: f64 = 1e-12;

pub const REGIONS_HORIZON: f64 = 200.0;
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Relative slack on the a-priori bound for `-1 < alpha <= 0`.
pub const BOUND_SLACK: f64 = 1e-6;
/// Level taken as evidence of unbounded growth for `alpha >= 1`.
pub const UNBOUNDED_LEVEL: f64 = 1e6;
pub const DICHOTOMY_HORIZON: f64 = 50.0;
pub const DICHOTOMY_HISTORIES: usize = 20;
pub const REGION_HISTORIES: usize = 10;

pub const ORACLE_TOL: f64 = 1e-8;
pub const ORACLE_SAMPLES: usize = 50;
pub const PERTURBATION: f64 = 1e-4;
pub const BOUNDARY_HORIZON: f64 = 300.0;
/// The late window is `[LATE_WINDOW * T, T]`.
pub const LATE_WINDOW: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Thm1Blowup,
    Exponential,
    Thm2Thm3,
    Regions,
    Boundary,
}

impl Suite {
    pub const ALL: [Suite; 5] =
        [Suite::Thm1Blowup, Suite::Exponential, Suite::Thm2Thm3, Suite::Regions, Suite::Boundary];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm1Blowup => "thm1-blowup",
            Suite::Exponential => "exponential",
            Suite::Thm2Thm3 => "thm2-thm3",
            Suite::Regions => "regions",
            Suite::Boundary => "boundary",
        }
    }

    /// Parses a suite name, or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Ok(vec![s.parse()?])
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|suite| suite.name() == s).ok_or_else(|| Error::Parse {
            token: s.to_string(),
            message: "unknown suite (expected thm1-blowup, exponential, thm2-thm3, regions, boundary or all)"
                .into(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseReport {
    pub id: String,
    pub params: Value,
    pub expected: Value,
    pub observed: Value,
    pub tol: Option<f64>,
    pub pass: bool,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub config: Value,
    pub cases: Vec<CaseReport>,
    pub overall_pass: bool,
}

impl SuiteReport {
    fn new(suite: Suite, seed: u64, config: Value, cases: Vec<CaseReport>) -> Self {
        let overall_pass = cases.iter().all(|c| c.pass);
        SuiteReport { suite: suite.name().into(), seed, config, cases, overall_pass }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseReport> {
        self.cases.iter().filter(|c| !c.pass)
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    match suite {
        Suite::Thm1Blowup => suite_thm1_blowup(seed),
        Suite::Exponential => suite_exponential(seed),
        Suite::Thm2Thm3 => suite_thm2_thm3(seed),
        Suite::Regions => suite_regions(seed),
        Suite::Boundary => suite_boundary(seed),
    }
}

/// Positive history `exp(p(s))` on `[-1, 0]` with `p` a cubic whose
/// Bernstein coefficients are drawn from `[ln 0.2, ln 5]`, so that values
/// stay in `[0.2, 5]`.
pub fn random_history<R: Rng>(rng: &mut R) -> HistoryFn {
    let (lo, hi) = (0.2f64.ln(), 5f64.ln());
    let b: [f64; 4] = std::array::from_fn(|_| rng.gen_range(lo..=hi));
    // Power basis in u = s + 1.
    let a = [b[0], 3.0 * (b[1] - b[0]), 3.0 * (b[2] - 2.0 * b[1] + b[0]), b[3] - 3.0 * b[2] + 3.0 * b[1] - b[0]];
    // Expand sum a_j (s + 1)^j.
    let mut coefs = [0.0; 4];
    for (j, &aj) in a.iter().enumerate() {
        let mut binom = 1.0;
        for k in 0..=j {
            coefs[k] += aj * binom;
            binom = binom * (j - k) as f64 / (k + 1) as f64;
        }
    }
    HistoryFn::exp_profile(1.0, 0.0, Profile::Polynomial(coefs.to_vec()))
        .expect("bounded log-cubic history is positive")
}

/// Generator for the `index`-th history of a case; independent of the order
/// in which cases run.
fn case_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn stream_id(tag: &str, index: usize) -> u64 {
    // FNV-1a over the tag, then the index.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes().chain(index.to_le_bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn status_name(s: &Status) -> &'static str {
    match s {
        Status::Completed { .. } => "completed",
        Status::BlownUp(_) => "blown_up",
        Status::Aborted { .. } => "aborted",
    }
}

fn status_json(tr: &Trajectory) -> Value {
    match tr.status() {
        Status::Completed { t_end } => json!({"status": "completed", "t_end": t_end}),
        Status::BlownUp(rep) => json!({
            "status": "blown_up",
            "t_blowup": rep.t_blowup,
            "bracket_width": rep.bracket_width,
        }),
        Status::Aborted { reason, t } => json!({"status": "aborted", "reason": reason, "t": t}),
    }
}

fn failed_case(id: String, params: Value, expected: Value, err: &Error, certified: bool) -> CaseReport {
    CaseReport {
        id,
        params,
        expected,
        observed: json!({"error": err.to_string()}),
        tol: None,
        pass: false,
        certified,
    }
}

fn base_config() -> Value {
    json!({"solver": SolverConfig::default(), "sample_dt": SAMPLE_DT})
}

// ---------------------------------------------------------------------------

/// Constructed blow-up seeds: `x(t) = 1/(1/q - r alpha t)` up to `t = 1/h`.
pub fn suite_thm1_blowup(seed: u64) -> SuiteReport {
    let mut grid = Vec::new();
    for (r, alpha) in [(1.0, 1.0), (2.0, 0.5), (0.7, 0.3)] {
        for h in [2.5, 4.0, 10.0] {
            grid.push((r, alpha, h));
        }
    }
    let cases = grid.par_iter().map(|&(r, alpha, h)| seed_case(r, alpha, h)).collect();
    let mut config = base_config();
    config["t_end"] = json!(1.0);
    config["compared_span"] = json!(CLOSED_FORM_SPAN);
    SuiteReport::new(Suite::Thm1Blowup, seed, config, cases)
}

fn seed_case(r: f64, alpha: f64, h: f64) -> CaseReport {
    let id = format!("r={r},alpha={alpha},h={h}");
    let params = json!({"r": r, "alpha": alpha, "h": h});
    let expected = json!({"status": "blown_up", "t_blowup": 1.0 / h});
    let run = || -> Result<CaseReport> {
        let p = Params::new(r, alpha)?;
        let tr = integrate(&p, &make_blowup_seed(&p, h)?, &SolverConfig::with_t_end(1.0))?;
        let q = h / (r * alpha);
        let t_star = 1.0 / h;
        let mut worst = 0.0f64;
        for k in 0..100 {
            let t = CLOSED_FORM_SPAN * t_star * k as f64 / 99.0;
            let closed = 1.0 / (1.0 / q - r * alpha * t);
            worst = worst.max((tr.eval_x(t)? / closed - 1.0).abs());
        }
        let t_err = tr.blowup().map(|b| (b.t_blowup - t_star).abs());
        let pass = t_err.is_some_and(|e| e < BLOWUP_TIME_TOL) && worst < BLOWUP_TIME_TOL;
        let mut observed = status_json(&tr);
        observed["closed_form_max_rel"] = json!(worst);
        Ok(CaseReport {
            id: id.clone(),
            params: params.clone(),
            expected: expected.clone(),
            observed,
            tol: Some(BLOWUP_TIME_TOL),
            pass,
            certified: true,
        })
    };
    run().unwrap_or_else(|e| failed_case(id.clone(), params.clone(), expected.clone(), &e, true))
}

// ---------------------------------------------------------------------------

fn max_rel_dev(tr: &Trajectory, exact: impl Fn(f64) -> f64, dt: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for t in tr.sample_times(dt) {
        worst = worst.max((tr.eval_x(t)? / exact(t) - 1.0).abs());
    }
    Ok(worst)
}

fn exp_verdict(id: String, params: Value, tr: &Trajectory, worst: f64) -> CaseReport {
    let complete = tr.is_completed();
    let mut observed = status_json(tr);
    observed["max_rel_dev"] = json!(worst);
    CaseReport {
        id,
        params,
        expected: json!({"status": "completed", "max_rel_dev": 0.0}),
        observed,
        tol: Some(EXP_TOL),
        pass: complete && worst < EXP_TOL,
        certified: true,
    }
}

/// Exponential solutions `c e^{r t}` on the locus and for a two-delay model.
pub fn suite_exponential(seed: u64) -> SuiteReport {
    let mut grid: Vec<(f64, f64)> = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        for c in [0.1, 1.0, 5.0] {
            grid.push((r, c));
        }
    }
    let cfg = SolverConfig::with_t_end(EXP_HORIZON);
    let mut cases: Vec<CaseReport> = grid
        .par_iter()
        .map(|&(r, c)| {
            let id = format!("r={r},c={c}");
            let params = json!({"r": r, "alpha": (-r).exp(), "c": c});
            let run = || -> Result<CaseReport> {
                let p = Params::on_exponential_locus(r)?;
                let tr = integrate(&p, &HistoryFn::exp_profile(c, r, Profile::zero())?, &cfg)?;
                let worst = max_rel_dev(&tr, |t| c * (r * t).exp(), SAMPLE_DT)?;
                Ok(exp_verdict(id.clone(), params.clone(), &tr, worst))
            };
            run().unwrap_or_else(|e| failed_case(id.clone(), params.clone(), Value::Null, &e, true))
        })
        .collect();

    let gen_cases: [(&str, Vec<(f64, f64)>); 2] = [
        ("genlog-single", vec![(0.5, 0.0), (-1.0, 1.0)]),
        ("genlog-two-delay", vec![(0.2, 0.0), (0.5, 0.5), (-2.0, 1.0)]),
    ];
    for (id, terms) in gen_cases {
        let params = json!({"terms": terms, "c": 1.0});
        let run = || -> Result<CaseReport> {
            let r = analysis::exp_solution_rate_gen(&terms, (0.0, 50.0))?
                .ok_or_else(|| Error::InvalidParams("no exponential rate in [0, 50]".into()))?;
            let g = GenParams::new(r, terms.clone())?;
            let phi = HistoryFn::exp_profile(1.0, r, Profile::zero())?.with_lower(-g.max_delay())?;
            let tr = integrate_gen(&g, &phi, &cfg)?;
            let worst = max_rel_dev(&tr, |t| (r * t).exp(), SAMPLE_DT)?;
            let mut case = exp_verdict(id.into(), params.clone(), &tr, worst);
            case.params["r"] = json!(r);
            case.observed["residual"] = json!(analysis::genlog_residual(&g));
            Ok(case)
        };
        cases.push(run().unwrap_or_else(|e| failed_case(id.into(), params.clone(), Value::Null, &e, true)));
    }

    // Raw model N' = N (r~ + a N - b N(s - tau)) mapped through the scaling.
    let raw = RawParams { r_tilde: 0.8, a: 2.0 * (-1.2f64).exp(), b: 2.0, tau: 1.5 };
    let params = json!({"r_tilde": raw.r_tilde, "a": raw.a, "b": raw.b, "tau": raw.tau, "c": 1.0});
    let run = || -> Result<CaseReport> {
        let n = normalize(&raw)?;
        let r = n.params.r();
        let tr = integrate(&n.params, &HistoryFn::exp_profile(1.0, r, Profile::zero())?, &cfg)?;
        // N(s) = (r~ / b) e^{r~ s} is the mapped exponential solution.
        let mut worst = 0.0f64;
        for t in tr.sample_times(SAMPLE_DT) {
            let (s, big_n) = n.to_raw(t, tr.eval_x(t)?);
            let exact = raw.r_tilde / raw.b * (raw.r_tilde * s).exp();
            worst = worst.max((big_n / exact - 1.0).abs());
        }
        Ok(exp_verdict("normalized-raw-model".into(), params.clone(), &tr, worst))
    };
    cases.push(
        run().unwrap_or_else(|e| failed_case("normalized-raw-model".into(), params.clone(), Value::Null, &e, true)),
    );

    let mut config = base_config();
    config["t_end"] = json!(EXP_HORIZON);
    SuiteReport::new(Suite::Exponential, seed, config, cases)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Below,
    Above,
}

/// Theorem-2 (below) and Theorem-3 (above) histories.
pub fn suite_thm2_thm3(seed: u64) -> SuiteReport {
    let mut grid = Vec::new();
    for family in [Family::Below, Family::Above] {
        for r in [0.5, 1.0, 2.0] {
            for c in [0.5, 1.0, 2.0] {
                for delta in [0.1, 0.5, 2.0] {
                    grid.push((family, r, c, delta));
                }
            }
        }
    }
    let cases = grid.par_iter().map(|&(f, r, c, d)| ordering_case(f, r, c, d)).collect();
    let mut config = base_config();
    config["t_end_below"] = json!(BELOW_HORIZON);
    config["t_end_above"] = json!(ABOVE_HORIZON);
    SuiteReport::new(Suite::Thm2Thm3, seed, config, cases)
}

fn ordering_case(family: Family, r: f64, c: f64, delta: f64) -> CaseReport {
    let name = if family == Family::Below { "thm2" } else { "thm3" };
    let id = format!("{name}:r={r},c={c},delta={delta}");
    let params = json!({"family": name, "r": r, "alpha": (-r).exp(), "c": c, "delta": delta});
    let bound = analysis::prop3_lower_bound(r, c).ok();
    let expected = match family {
        Family::Below => json!({"status": "blown_up", "ordering": "x > c e^{rt}", "t_blowup_min": bound, "z": "increasing"}),
        Family::Above => json!({"status": "completed", "ordering": "x < c e^{rt}", "z": "decreasing"}),
    };
    let run = || -> Result<CaseReport> {
        let p = Params::on_exponential_locus(r)?;
        let (phi, horizon) = match family {
            Family::Below => (make_thm2_family(c, r, delta)?, BELOW_HORIZON),
            Family::Above => (make_thm3_family(c, r, delta)?, ABOVE_HORIZON),
        };
        let psi = phi.exp_profile_parts().map(|(_, _, psi)| psi.clone()).unwrap_or_else(Profile::zero);
        let cfg = SolverConfig::with_t_end(horizon);
        let tr = integrate(&p, &phi, &cfg)?;

        let mut violations = 0usize;
        let mut samples = 0usize;
        for t in tr.sample_times(SAMPLE_DT).into_iter().filter(|&t| t > 0.0) {
            let x = tr.eval_x(t)?;
            let xc = c * (r * t).exp();
            samples += 1;
            let ok = match family {
                Family::Below => x > xc,
                Family::Above => x < xc,
            };
            if !ok {
                violations += 1;
            }
        }

        // z is checked where the mixed error test controls it to rtol.
        let trz = integrate_z(&p, c, &psi, &cfg)?;
        let x_floor = cfg.atol / cfg.rtol;
        let mut z_reversal = 0.0f64;
        let mut prev: Option<(f64, f64)> = None;
        for t in trz.sample_times(SAMPLE_DT) {
            let (z, x) = (trz.eval(t)?, trz.eval_x(t)?);
            if let Some((zp, xp)) = prev {
                if x >= x_floor && xp >= x_floor {
                    let step = match family {
                        Family::Below => zp - z,
                        Family::Above => z - zp,
                    };
                    z_reversal = z_reversal.max(step / zp.abs().max(1.0));
                }
            }
            prev = Some((z, x));
        }
        let z_ok = z_reversal <= Z_MONOTONE_SLACK;

        let mut observed = status_json(&tr);
        observed["samples"] = json!(samples);
        observed["ordering_violations"] = json!(violations);
        observed["z_status"] = json!(status_name(trz.status()));
        observed["z_max_reversal"] = json!(z_reversal);
        let pass = match family {
            Family::Below => {
                let rep = tr.blowup();
                observed["lower_bound_prop3"] = json!(rep.and_then(|b| b.lower_bound_prop3));
                let bound_ok = match (rep, bound) {
                    (Some(b), Some(lb)) => b.t_blowup >= lb - BLOWUP_BOUND_SLACK,
                    _ => false,
                };
                bound_ok && violations == 0 && z_ok
            }
            Family::Above => tr.is_completed() && trz.is_completed() && violations == 0 && z_ok,
        };
        Ok(CaseReport {
            id: id.clone(),
            params: params.clone(),
            expected: expected.clone(),
            observed,
            tol: Some(BLOWUP_BOUND_SLACK),
            pass,
            certified: true,
        })
    };
    run().unwrap_or_else(|e| failed_case(id.clone(), params.clone(), expected.clone(), &e, true))
}

// ---------------------------------------------------------------------------

/// A-priori bound on a solution for `-1 < alpha <= 0`: at a local maximum
/// `x(t - 1) <= 1`, so the maximum is at most `e^r` times the larger of
/// `phi(0)` and 1; for `alpha < 0` the population also cannot rise above
/// `max(phi(0), 1/|alpha|)`.
pub fn bounded_region_bound(p: &Params, phi0: f64) -> f64 {
    let growth = phi0.max(1.0) * p.r().exp();
    if p.alpha() < 0.0 {
        growth.min(phi0.max(1.0 / p.alpha().abs()))
    } else {
        growth
    }
}

fn sampled_max(tr: &Trajectory) -> Result<f64> {
    let mut m = 0.0f64;
    for t in tr.sample_times(SAMPLE_DT) {
        m = m.max(tr.eval_x(t)?);
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Region {
    Converges,
    Bounded,
    Unbounded,
    NoBlowup,
}

/// Long-horizon behaviour in each region of the parameter plane and the
/// blow-up dichotomy on a grid.
pub fn suite_regions(seed: u64) -> SuiteReport {
    let mut grid = Vec::new();
    for (alpha, r) in [(-1.0, 1.0), (-2.0, 5.0), (-1.5, 0.5)] {
        grid.push((Region::Converges, alpha, r, REGION_HISTORIES));
    }
    for (alpha, r) in [(-0.5, 10.0), (0.0, 1.0), (-0.5, 1.0), (0.0, 3.0)] {
        grid.push((Region::Bounded, alpha, r, REGION_HISTORIES));
    }
    for (alpha, r) in [(1.5, 1.0), (1.0, 0.5), (2.0, 2.0)] {
        grid.push((Region::Unbounded, alpha, r, REGION_HISTORIES));
    }
    for alpha in [-2.0, -1.0, -0.5, 0.0] {
        for r in [0.5, 1.0, 2.0] {
            grid.push((Region::NoBlowup, alpha, r, DICHOTOMY_HISTORIES));
        }
    }
    let mut cases: Vec<CaseReport> =
        grid.par_iter().map(|&(kind, alpha, r, n)| region_case(seed, kind, alpha, r, n)).collect();

    let mut seeds = Vec::new();
    for alpha in [0.1, 0.5, 1.0, 2.0] {
        for r in [0.5, 1.0, 2.0] {
            seeds.push((alpha, r));
        }
    }
    let seed_cases: Vec<CaseReport> = seeds
        .par_iter()
        .map(|&(alpha, r)| {
            let mut case = seed_case(r, alpha, 4.0);
            case.id = format!("dichotomy-seed:{}", case.id);
            case
        })
        .collect();
    cases.extend(seed_cases);

    let mut config = base_config();
    config["t_end"] = json!(REGIONS_HORIZON);
    config["t_end_dichotomy"] = json!(DICHOTOMY_HORIZON);
    config["histories"] = json!("exp(cubic), Bernstein coefficients uniform in [ln 0.2, ln 5]");
    SuiteReport::new(Suite::Regions, seed, config, cases)
}

fn region_case(seed: u64, kind: Region, alpha: f64, r: f64, n: usize) -> CaseReport {
    let tag = match kind {
        Region::Converges => "converges",
        Region::Bounded => "bounded",
        Region::Unbounded => "unbounded",
        Region::NoBlowup => "dichotomy-no-blowup",
    };
    let id = format!("{tag}:alpha={alpha},r={r}");
    let params = json!({"alpha": alpha, "r": r, "histories": n});
    let (expected, tol, certified) = match kind {
        Region::Converges => (json!({"abs_dev_at_t_end": 0.0}), Some(CONVERGENCE_TOL), false),
        Region::Bounded => (json!({"max_over_bound": 1.0}), Some(BOUND_SLACK), true),
        Region::Unbounded => (json!({"blown_up_or_max_above": UNBOUNDED_LEVEL}), None, false),
        Region::NoBlowup => (json!({"blown_up": 0}), None, false),
    };
    let run = || -> Result<CaseReport> {
        let p = Params::new(r, alpha)?;
        let horizon = if kind == Region::NoBlowup { DICHOTOMY_HORIZON } else { REGIONS_HORIZON };
        let cfg = SolverConfig::with_t_end(horizon);
        let mut rng = case_rng(seed, stream_id(&id, 0));
        let mut pass = true;
        let mut worst = 0.0f64;
        let mut smallest_max: Option<f64> = None;
        let mut statuses = std::collections::BTreeMap::<&str, usize>::new();
        for _ in 0..n {
            let phi = random_history(&mut rng);
            let tr = integrate(&p, &phi, &cfg)?;
            *statuses.entry(status_name(tr.status())).or_default() += 1;
            match kind {
                Region::Converges => {
                    let x_star = equilibrium(&p).value.unwrap_or(f64::NAN);
                    let dev = match tr.is_completed() {
                        true => (tr.eval_x(horizon)? - x_star).abs(),
                        false => f64::INFINITY,
                    };
                    worst = worst.max(dev);
                    pass &= dev <= CONVERGENCE_TOL;
                }
                Region::Bounded => {
                    let ratio = sampled_max(&tr)? / bounded_region_bound(&p, phi.value(0.0));
                    worst = worst.max(ratio);
                    pass &= tr.is_completed() && ratio <= 1.0 + BOUND_SLACK;
                }
                Region::Unbounded => {
                    if !tr.is_blown_up() {
                        let m = sampled_max(&tr)?;
                        smallest_max = Some(smallest_max.map_or(m, |s| s.min(m)));
                        pass &= m > UNBOUNDED_LEVEL;
                    }
                }
                Region::NoBlowup => {
                    pass &= tr.is_completed();
                }
            }
        }
        let mut observed = json!({"statuses": statuses});
        match kind {
            Region::Converges => observed["max_abs_dev"] = json!(worst),
            Region::Bounded => observed["max_over_bound"] = json!(worst),
            Region::Unbounded => observed["smallest_max_without_blowup"] = json!(smallest_max),
            Region::NoBlowup => {}
        }
        Ok(CaseReport {
            id: id.clone(),
            params: params.clone(),
            expected: expected.clone(),
            observed,
            tol,
            pass,
            certified,
        })
    };
    run().unwrap_or_else(|e| failed_case(id.clone(), params.clone(), expected.clone(), &e, certified))
}

// ---------------------------------------------------------------------------

/// Stability boundary: oracle agreement and perturbation decay or growth on
/// either side of it.
pub fn suite_boundary(seed: u64) -> SuiteReport {
    let mut cases = Vec::new();

    let alphas: Vec<f64> = (1..=ORACLE_SAMPLES)
        .map(|k| -0.99 + 1.98 * k as f64 / (ORACLE_SAMPLES + 1) as f64)
        .collect();
    let mut worst = 0.0f64;
    let mut worst_alpha = f64::NAN;
    let mut errors = Vec::new();
    for &a in &alphas {
        match (analysis::stability_boundary_r(a), analysis::char_root_boundary(a)) {
            (Ok(closed), Ok(oracle)) => {
                let d = (closed - oracle).abs();
                if d > worst || worst_alpha.is_nan() {
                    worst = worst.max(d);
                    worst_alpha = a;
                }
            }
            (Err(e), _) | (_, Err(e)) => errors.push(format!("alpha={a}: {e}")),
        }
    }
    cases.push(CaseReport {
        id: "oracle-agreement".into(),
        params: json!({"alpha_samples": ORACLE_SAMPLES, "alpha_range": [-0.99, 0.99]}),
        expected: json!({"max_abs_diff": 0.0}),
        observed: json!({"max_abs_diff": worst, "at_alpha": worst_alpha, "errors": errors}),
        tol: Some(ORACLE_TOL),
        pass: errors.is_empty() && worst <= ORACLE_TOL,
        certified: true,
    });
    for a in [-0.5, 0.0, 0.5] {
        let id = format!("oracle:alpha={a}");
        let params = json!({"alpha": a});
        let case = match (analysis::stability_boundary_r(a), analysis::char_root(a)) {
            (Ok(closed), Ok(root)) => CaseReport {
                id,
                params,
                expected: json!({"r_boundary": closed}),
                observed: json!({"r_char_root": root.r, "omega": root.omega, "residual": root.residual}),
                tol: Some(ORACLE_TOL),
                pass: (closed - root.r).abs() <= ORACLE_TOL,
                certified: true,
            },
            (Err(e), _) | (_, Err(e)) => failed_case(id, params, Value::Null, &e, true),
        };
        cases.push(case);
    }

    let mut grid = Vec::new();
    for a in [-0.5, 0.0, 0.5] {
        for factor in [0.9, 1.1] {
            grid.push((a, factor));
        }
    }
    let runs: Vec<CaseReport> = grid.par_iter().map(|&(a, factor)| perturbation_case(a, factor)).collect();
    cases.extend(runs);

    let mut config = base_config();
    config["t_end"] = json!(BOUNDARY_HORIZON);
    config["perturbation"] = json!(PERTURBATION);
    config["late_window"] = json!([LATE_WINDOW * BOUNDARY_HORIZON, BOUNDARY_HORIZON]);
    SuiteReport::new(Suite::Boundary, seed, config, cases)
}

fn perturbation_case(alpha: f64, factor: f64) -> CaseReport {
    let grows = factor > 1.0;
    let id = format!("{}:alpha={alpha},r={factor}r*", if grows { "growth" } else { "decay" });
    let params = json!({"alpha": alpha, "r_factor": factor});
    let expected = if grows {
        json!({"late_max_dev_above": PERTURBATION})
    } else {
        json!({"late_max_dev_below": PERTURBATION})
    };
    let run = || -> Result<CaseReport> {
        let r = factor * analysis::stability_boundary_r(alpha)?;
        let p = Params::new(r, alpha)?;
        let x_star = equilibrium(&p).value.unwrap_or(f64::NAN);
        let phi = HistoryFn::constant(x_star + PERTURBATION)?;
        let tr = integrate(&p, &phi, &SolverConfig::with_t_end(BOUNDARY_HORIZON))?;
        let t0 = LATE_WINDOW * BOUNDARY_HORIZON;
        let mut late = 0.0f64;
        for t in tr.sample_times(SAMPLE_DT).into_iter().filter(|&t| t >= t0) {
            late = late.max((tr.eval_x(t)? - x_star).abs());
        }
        let pass = match (grows, tr.status()) {
            (true, Status::BlownUp(_)) => true,
            (true, Status::Completed { .. }) => late > PERTURBATION,
            (false, Status::Completed { .. }) => late < PERTURBATION,
            _ => false,
        };
        let mut observed = status_json(&tr);
        observed["r"] = json!(r);
        observed["late_max_dev"] = json!(late);
        Ok(CaseReport {
            id: id.clone(),
            params: params.clone(),
            expected: expected.clone(),
            observed,
            tol: Some(PERTURBATION),
            pass,
            certified: false,
        })
    };
    run().unwrap_or_else(|e| failed_case(id.clone(), params.clone(), expected.clone(), &e, false))
}

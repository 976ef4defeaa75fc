//! Trajectory CSV export and the JSON sidecar describing how a run ended.

use std::io::Write;

use serde::Serialize;

use super::{Status, Trajectory};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sidecar {
    pub status: &'static str,
    pub t_blowup: Option<f64>,
    pub bracket_width: Option<f64>,
    pub lower_bound_prop3: Option<f64>,
    pub reason: Option<String>,
    /// End of the span on which the trajectory can be evaluated.
    pub t_covered: f64,
    /// Sign changes of `d/dt [x / (c e^{r t})]`, when an anchor was given.
    pub ratio_sign_changes: Option<usize>,
}

impl Sidecar {
    pub fn new(tr: &Trajectory) -> Self {
        let mut s = Sidecar {
            status: "completed",
            t_blowup: None,
            bracket_width: None,
            lower_bound_prop3: None,
            reason: None,
            t_covered: tr.end(),
            ratio_sign_changes: None,
        };
        match tr.status() {
            Status::Completed { .. } => {}
            Status::BlownUp(rep) => {
                s.status = "blown_up";
                s.t_blowup = Some(rep.t_blowup);
                s.bracket_width = Some(rep.bracket_width);
                s.lower_bound_prop3 = rep.lower_bound_prop3;
            }
            Status::Aborted { reason, .. } => {
                s.status = "aborted";
                s.reason = Some(reason.clone());
            }
        }
        s
    }
}

/// Writes `t,x` rows at spacing `dt`; with an anchor `(c, r)` a third column
/// `z = ln(x / (c e^{r t}))` is added.
pub fn write_csv<W: Write>(tr: &Trajectory, dt: f64, anchor: Option<(f64, f64)>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match anchor {
        Some(_) => w.write_record(["t", "x", "z"])?,
        None => w.write_record(["t", "x"])?,
    }
    for t in tr.sample_times(dt) {
        let x = tr.eval_x(t)?;
        match anchor {
            Some((c, r)) => {
                let z = (x / c).ln() - r * t;
                w.write_record([t.to_string(), x.to_string(), z.to_string()])?;
            }
            None => w.write_record([t.to_string(), x.to_string()])?,
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistoryFn;
    use crate::integrator::{integrate, SolverConfig};
    use crate::model::Params;

    #[test]
    fn equilibrium_run_exports_constant_column() {
        let p = Params::new(1.0, 0.0).unwrap();
        let tr = integrate(&p, &HistoryFn::constant(1.0).unwrap(), &SolverConfig::with_t_end(2.0)).unwrap();
        let mut buf = Vec::new();
        write_csv(&tr, 0.5, None, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,x\n0,1\n0.5,1\n1,1\n1.5,1\n2,1\n");
        let side = Sidecar::new(&tr);
        assert_eq!(side.status, "completed");
        assert_eq!(side.t_covered, 2.0);
        let json = serde_json::to_value(&side).unwrap();
        assert!(json["t_blowup"].is_null());
    }

    #[test]
    fn z_column_on_exponential_solution() {
        let p = Params::on_exponential_locus(1.0).unwrap();
        let phi = HistoryFn::exp_profile(1.0, 1.0, crate::history::Profile::zero()).unwrap();
        let tr = integrate(&p, &phi, &SolverConfig::with_t_end(1.0)).unwrap();
        let mut buf = Vec::new();
        write_csv(&tr, 0.25, Some((1.0, 1.0)), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x,z"));
        for line in lines {
            let z: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert!(z.abs() < 1e-12, "{line}");
        }
    }
}

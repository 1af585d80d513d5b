use std::fmt;

use log::info;
use rayon::prelude::*;

use super::{run, ExperimentSpec};
use crate::fields::{FieldKind, GridField, QTensorField, ScalarField};
use crate::linsolve::SolverConfig;
use crate::{Error, Result};

/// Discrete L² distance of one component between `coarse` and the
/// coincident nodes of a nested `reference`, `√(h^d Σ diff²)` over the
/// coarse real nodes.
pub fn l2_error<K: FieldKind>(coarse: &GridField<K>, reference: &GridField<K>, comp: usize) -> Result<f64> {
    let cg = *coarse.grid();
    let fg = *reference.grid();
    let k = cg.nesting_ratio(&fg).ok_or_else(|| {
        Error::Argument(format!(
            "grids do not nest: {} and {} intervals",
            cg.n_intervals(),
            fg.n_intervals()
        ))
    })? as isize;
    if comp >= coarse.ncomp() {
        return Err(Error::Argument(format!("component {comp} out of range")));
    }
    let dim = cg.dim();
    let mut sum = 0.0;
    for (idx, p) in cg.real_nodes() {
        let mut fi = [0isize; 3];
        for a in 0..dim {
            fi[a] = idx[a] * k;
        }
        let d = coarse.node(p)[comp] - reference.at(fi)[comp];
        sum += d * d;
    }
    Ok((cg.cell_volume() * sum).sqrt())
}

/// Errors in the tracked quantities `Q₁₁`, `Q₁₂` and `r`.
pub fn tracked_errors(
    q: &QTensorField,
    r: &ScalarField,
    q_ref: &QTensorField,
    r_ref: &ScalarField,
) -> Result<[f64; 3]> {
    Ok([l2_error(q, q_ref, 0)?, l2_error(q, q_ref, 1)?, l2_error(r, r_ref, 0)?])
}

/// `log₂(e_{k−1}/e_k)` between consecutive entries; `None` for the first
/// entry and wherever an error is not positive and finite.
pub fn convergence_order(errors: &[f64]) -> Vec<Option<f64>> {
    let ok = |e: f64| e > 0.0 && e.is_finite();
    (0..errors.len())
        .map(|k| {
            (k > 0 && ok(errors[k - 1]) && ok(errors[k])).then(|| (errors[k - 1] / errors[k]).log2())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    /// `h` for a space study, `Δt` for a time study.
    pub step_size: f64,
    pub errors: [f64; 3],
    pub orders: [Option<f64>; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub reference: String,
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str = "h_or_dt,err_Q11,order_Q11,err_Q12,order_Q12,err_r,order_r";

    pub fn from_errors(step_sizes: &[f64], errors: &[[f64; 3]], reference: String) -> Self {
        let cols: Vec<Vec<Option<f64>>> = (0..3)
            .map(|c| convergence_order(&errors.iter().map(|e| e[c]).collect::<Vec<_>>()))
            .collect();
        let rows = step_sizes
            .iter()
            .zip(errors)
            .enumerate()
            .map(|(k, (&s, e))| ConvergenceRow {
                step_size: s,
                errors: *e,
                orders: [cols[0][k], cols[1][k], cols[2][k]],
            })
            .collect();
        ConvergenceReport { rows, reference }
    }

    /// Orders of one tracked quantity (0 = Q₁₁, 1 = Q₁₂, 2 = r), skipping
    /// the first row.
    pub fn orders(&self, quantity: usize) -> Vec<Option<f64>> {
        self.rows.iter().skip(1).map(|r| r.orders[quantity]).collect()
    }

    /// CSV body with header; unavailable orders are written as `NaN`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let o = |v: Option<f64>| v.map_or("NaN".to_string(), |x| format!("{x:.6}"));
            s.push_str(&format!(
                "{:e},{:.6e},{},{:.6e},{},{:.6e},{}\n",
                r.step_size,
                r.errors[0],
                o(r.orders[0]),
                r.errors[1],
                o(r.orders[1]),
                r.errors[2],
                o(r.orders[2])
            ));
        }
        s
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "reference: {}", self.reference)?;
        writeln!(
            f,
            "{:>10} {:>12} {:>8} {:>12} {:>8} {:>12} {:>8}",
            "h/dt", "err Q11", "order", "err Q12", "order", "err r", "order"
        )?;
        for r in &self.rows {
            let o = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
            writeln!(
                f,
                "{:>10.4e} {:>12.4e} {:>8} {:>12.4e} {:>8} {:>12.4e} {:>8}",
                r.step_size,
                r.errors[0],
                o(r.orders[0]),
                r.errors[1],
                o(r.orders[1]),
                r.errors[2],
                o(r.orders[2])
            )?;
        }
        Ok(())
    }
}

/// Spatial refinement: every ladder entry is run with `base.steps` steps and
/// compared with a reference on `reference_n` intervals and
/// `reference_steps` steps.
#[derive(Clone, Debug)]
pub struct SpaceStudy {
    pub base: ExperimentSpec,
    pub ladder: Vec<usize>,
    pub reference_n: usize,
    pub reference_steps: usize,
}

/// Temporal refinement on the fixed grid of `base`.
#[derive(Clone, Debug)]
pub struct TimeStudy {
    pub base: ExperimentSpec,
    pub ladder: Vec<usize>,
    pub reference_steps: usize,
}

fn final_fields(spec: &ExperimentSpec, cfg: &SolverConfig) -> Result<(QTensorField, ScalarField)> {
    let mut spec = spec.clone();
    spec.snapshots.clear();
    let s = run::simulate(&spec, cfg, |_| Ok(()))?;
    info!("{}: finished n={} steps={}", spec.name, spec.n, spec.steps);
    Ok((s.q, s.r))
}

/// Runs `runs` (reference last) in parallel and compares each ladder
/// entry with the reference.
fn compare(runs: Vec<ExperimentSpec>, cfg: &SolverConfig) -> Result<Vec<[f64; 3]>> {
    let results: Vec<(QTensorField, ScalarField)> =
        runs.par_iter().map(|s| final_fields(s, cfg)).collect::<Result<_>>()?;
    let (reference, ladder) = results.split_last().expect("reference run present");
    ladder
        .iter()
        .map(|(q, r)| tracked_errors(q, r, &reference.0, &reference.1))
        .collect()
}

pub fn run_convergence_space(study: &SpaceStudy, cfg: &SolverConfig) -> Result<ConvergenceReport> {
    for &n in &study.ladder {
        if study.reference_n % n != 0 {
            return Err(Error::Argument(format!(
                "ladder entry n={n} does not nest in reference n={}",
                study.reference_n
            )));
        }
    }
    let mut runs: Vec<_> = study.ladder.iter().map(|&n| study.base.clone().with_n(n)).collect();
    runs.push(
        study
            .base
            .clone()
            .with_n(study.reference_n)
            .with_steps(study.reference_steps),
    );
    let errors = compare(runs, cfg)?;
    let hs: Vec<f64> = study.ladder.iter().map(|&n| study.base.side / n as f64).collect();
    Ok(ConvergenceReport::from_errors(
        &hs,
        &errors,
        format!("n={} steps={}", study.reference_n, study.reference_steps),
    ))
}

pub fn run_convergence_time(study: &TimeStudy, cfg: &SolverConfig) -> Result<ConvergenceReport> {
    let mut runs: Vec<_> = study.ladder.iter().map(|&k| study.base.clone().with_steps(k)).collect();
    runs.push(study.base.clone().with_steps(study.reference_steps));
    let errors = compare(runs, cfg)?;
    let dts: Vec<f64> = study.ladder.iter().map(|&k| study.base.t_final / k as f64).collect();
    Ok(ConvergenceReport::from_errors(
        &dts,
        &errors,
        format!("n={} steps={}", study.base.n, study.reference_steps),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridSpec;

    #[test]
    fn order_hand_values() {
        let o = convergence_order(&[4.0, 1.0]);
        assert_eq!(o, vec![None, Some(2.0)]);
        let o = convergence_order(&[1.3509e-2, 3.7509e-3]);
        assert!((o[1].unwrap() - 1.8486).abs() < 5e-5);
        let o = convergence_order(&[7.87395e-4, 1.94110e-4]);
        assert!((o[1].unwrap() - 2.02022).abs() < 5e-5);
        assert_eq!(convergence_order(&[1.0, 0.0]), vec![None, None]);
    }

    #[test]
    fn single_coincident_node() {
        let c = GridSpec::with_intervals(2, 4, 1.0).unwrap();
        let f = GridSpec::with_intervals(2, 8, 1.0).unwrap();
        let coarse = ScalarField::zeros(c);
        let mut fine = ScalarField::zeros(f);
        fine.at_mut([2, 6, 0])[0] = 3.0;
        fine.at_mut([3, 6, 0])[0] = 100.0; // not coincident
        let e = l2_error(&coarse, &fine, 0).unwrap();
        assert!((e - c.cell_volume().sqrt() * 3.0).abs() < 1e-15);
        assert_eq!(l2_error(&coarse, &coarse, 0).unwrap(), 0.0);
    }

    #[test]
    fn non_nested_grids_are_rejected() {
        let c = GridSpec::with_intervals(2, 4, 1.0).unwrap();
        let f = GridSpec::with_intervals(2, 6, 1.0).unwrap();
        assert!(l2_error(&ScalarField::zeros(c), &ScalarField::zeros(f), 0).is_err());
    }

    #[test]
    fn single_run_report_has_no_orders() {
        let r = ConvergenceReport::from_errors(&[0.1], &[[1.0, 2.0, 3.0]], "x".into());
        assert_eq!(r.rows[0].orders, [None, None, None]);
        let csv = r.to_csv();
        assert!(csv.lines().nth(1).unwrap().contains("NaN"));
    }
}

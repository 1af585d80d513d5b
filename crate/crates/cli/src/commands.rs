use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use qtensor::experiments::{
    director_field, lambda_max_field, run_convergence_space, run_convergence_time, simulate, ConvergenceReport, Event,
    SpaceStudy, TimeStudy,
};
use qtensor::fields::write_dump;
use qtensor::verify::{run_battery, VerifyOptions};
use qtensor::StepReport;

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] qtensor::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} verification check(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Output { .. } => 3,
            CliError::Solver(_) | CliError::VerifyFailed(_) => 1,
        }
    }
}

fn output_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    }
}

/// Creates `dir` and opens `name` inside it, so an unwritable destination
/// fails before any computation.
fn create_output(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(dir).map_err(output_err(dir))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(output_err(&path))?;
    Ok((path, BufWriter::new(file)))
}

fn write_header(w: &mut impl Write, cfg: &RunConfig) -> std::io::Result<()> {
    for line in cfg.echo() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct RunSummary {
    pub steps: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub max_residual: f64,
    pub snapshots: usize,
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let (csv_path, mut csv) = create_output(&cfg.out_dir, "energy.csv")?;
    let snap_dir = cfg.out_dir.join("snapshots");
    let wanted = cfg.spec.snapshot_steps();
    if !wanted.is_empty() {
        fs::create_dir_all(&snap_dir).map_err(output_err(&snap_dir))?;
    }
    let csv_err = output_err(&csv_path);
    write_header(&mut csv, cfg).map_err(&csv_err)?;
    writeln!(csv, "{}", StepReport::CSV_HEADER).map_err(&csv_err)?;

    let comments = cfg.echo();
    let (mut e0, mut e_last, mut max_res, mut written) = (0.0, 0.0, 0.0f64, 0usize);
    let mut io_failure: Option<CliError> = None;
    let result = simulate(&cfg.spec, &cfg.solver, |ev| {
        let (state, row) = match ev {
            Event::Initial(s) => {
                e0 = s.energy();
                (s, StepReport::initial_csv_row(s))
            }
            Event::Step(s, r) => {
                max_res = max_res.max(r.dissipation_residual.abs());
                (s, r.csv_row())
            }
        };
        e_last = state.energy();
        let mut write = || -> Result<(), CliError> {
            writeln!(csv, "{row}").map_err(&csv_err)?;
            for &(t, k) in wanted.iter().filter(|(_, k)| *k == state.step) {
                let time = state.time();
                let stem = format!("{:06}", state.step);
                let dump = |name: &str| snap_dir.join(format!("{name}_{stem}.dat"));
                let p = dump("q");
                write_dump(&p, &state.q, "Q", time, &comments)?;
                write_dump(&dump("r"), &state.r, "r", time, &comments)?;
                if state.q.grid().dim() == 2 {
                    write_dump(&dump("lambda"), &lambda_max_field(&state.q), "lambda_max", time, &comments)?;
                    write_dump(&dump("director"), &director_field(&state.q), "director", time, &comments)?;
                }
                info!("snapshot t={t} (step {k}) -> {}", p.display());
                written += 1;
            }
            Ok(())
        };
        write().map_err(|e| {
            let msg = e.to_string();
            io_failure = Some(e);
            qtensor::Error::Argument(msg)
        })
    });
    if let Some(e) = io_failure {
        return Err(e);
    }
    result?;
    csv.flush().map_err(&csv_err)?;
    info!(
        "{} steps in {:.2}s: E {:.10e} -> {:.10e}, max |dissipation residual| {:.3e}; wrote {}",
        cfg.spec.steps,
        started.elapsed().as_secs_f64(),
        e0,
        e_last,
        max_res,
        csv_path.display()
    );
    Ok(RunSummary {
        steps: cfg.spec.steps,
        initial_energy: e0,
        final_energy: e_last,
        max_residual: max_res,
        snapshots: written,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Refinement {
    Space,
    Time,
}

pub fn convergence(cfg: &RunConfig, mode: Refinement) -> Result<ConvergenceReport, CliError> {
    let mut base = cfg.spec.clone();
    base.snapshots.clear();
    let (report, name) = match mode {
        Refinement::Space => {
            let study = SpaceStudy {
                base,
                ladder: cfg.ladder.clone().unwrap_or_else(|| vec![10, 20, 40]),
                reference_n: cfg.reference_n.unwrap_or(160),
                reference_steps: cfg.reference_steps.unwrap_or(1600),
            };
            info!(
                "space study: ladder {:?}, reference n={} with {} steps",
                study.ladder, study.reference_n, study.reference_steps
            );
            (run_convergence_space(&study, &cfg.solver)?, "convergence_space.csv")
        }
        Refinement::Time => {
            let study = TimeStudy {
                base,
                ladder: cfg.ladder.clone().unwrap_or_else(|| vec![40, 80, 160, 320]),
                reference_steps: cfg.reference_steps.unwrap_or(1280),
            };
            info!(
                "time study on n={}: ladder {:?}, reference {} steps",
                study.base.n, study.ladder, study.reference_steps
            );
            (run_convergence_time(&study, &cfg.solver)?, "convergence_time.csv")
        }
    };
    let (path, mut w) = create_output(&cfg.out_dir, name)?;
    let err = output_err(&path);
    write_header(&mut w, cfg).map_err(&err)?;
    writeln!(w, "# reference: {}", report.reference).map_err(&err)?;
    w.write_all(report.to_csv().as_bytes()).map_err(&err)?;
    w.flush().map_err(&err)?;
    info!("wrote {}", path.display());
    Ok(report)
}

pub fn verify(seed: u64, out_dir: &Path) -> Result<(), CliError> {
    let opts = VerifyOptions {
        seed,
        ..VerifyOptions::default()
    };
    let (path, mut w) = create_output(out_dir, "verify.csv")?;
    let err = output_err(&path);
    let started = Instant::now();
    let outcomes = run_battery(&opts);
    writeln!(w, "# seed = {seed}").map_err(&err)?;
    writeln!(w, "property,passed,worst,tolerance,cases").map_err(&err)?;
    let mut failed = 0;
    for o in &outcomes {
        println!(
            "{:<26} {}  worst {:.3e}  tolerance {:.1e}  cases {}",
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.worst,
            o.tolerance,
            o.cases
        );
        writeln!(w, "{},{},{:.6e},{:.1e},{}", o.name, o.passed, o.worst, o.tolerance, o.cases).map_err(&err)?;
        failed += usize::from(!o.passed);
    }
    w.flush().map_err(&err)?;
    info!("battery finished in {:.2}s", started.elapsed().as_secs_f64());
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(failed))
    }
}

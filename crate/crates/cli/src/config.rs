//! Flat `key = value` run configuration with section prefixes.
//!
//! ```text
//! # comment
//! experiment = example2
//! grid.n = 32
//! time.steps = 200
//! solver.tolerance = 1e-12
//! ```
//!
//! Keys set on the command line with `--set key=value` are applied after the
//! file. Everything left unset is filled from the experiment preset, or from
//! the library defaults, and reported as such.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use qtensor::experiments::{ExperimentSpec, InitialCondition};
use qtensor::{ModelParams, Preconditioner, SolverConfig};

/// Where a resolved value came from.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    File { path: PathBuf, line: usize },
    Flag,
    Preset(String),
    Derived,
    Default,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::File { path, line } => write!(f, "{}:{line}", path.display()),
            Source::Flag => write!(f, "command line"),
            Source::Preset(p) => write!(f, "preset {p}"),
            Source::Derived => write!(f, "derived"),
            Source::Default => write!(f, "default"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{at}: `{text}`: {reason}")]
    Entry { at: Source, text: String, reason: String },
    #[error("{0}")]
    Missing(String),
}

const KEYS: &[&str] = &[
    "experiment",
    "seed",
    "initial",
    "model.a",
    "model.b",
    "model.c",
    "model.A0",
    "model.M",
    "model.L1",
    "model.L2",
    "model.L3",
    "model.L",
    "grid.dim",
    "grid.n",
    "grid.side",
    "time.dt",
    "time.steps",
    "time.T",
    "solver.tolerance",
    "solver.max_iterations",
    "solver.preconditioner",
    "output.dir",
    "output.snapshots",
    "convergence.ladder",
    "convergence.reference_n",
    "convergence.reference_steps",
];

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    text: String,
    source: Source,
}

/// Key/value pairs as written, before any defaults.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

fn split_pair(text: &str) -> Option<(String, String)> {
    let (k, v) = text.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty()).then(|| (k.to_string(), v.to_string()))
}

impl RawConfig {
    pub fn parse_str(src: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg = RawConfig::default();
        for (i, raw) in src.lines().enumerate() {
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let source = Source::File {
                path: path.to_path_buf(),
                line: i + 1,
            };
            cfg.insert(text, source)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str(&src, path)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, pair: &str) -> Result<(), ConfigError> {
        if let Some((k, v)) = split_pair(pair) {
            if let Some(old) = self.entries.get(&k) {
                log::info!("override {k}: {} -> {v}", old.value);
            } else {
                log::info!("override {k} = {v}");
            }
        }
        self.insert(pair, Source::Flag)
    }

    fn insert(&mut self, text: &str, source: Source) -> Result<(), ConfigError> {
        let bad = |reason: &str| ConfigError::Entry {
            at: source.clone(),
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let (key, value) = split_pair(text).ok_or_else(|| bad("expected `key = value`"))?;
        if !KEYS.contains(&key.as_str()) {
            return Err(bad("unknown key"));
        }
        self.entries.insert(
            key,
            Entry {
                value,
                text: text.to_string(),
                source,
            },
        );
        Ok(())
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn error(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        match self.entry(key) {
            Some(e) => ConfigError::Entry {
                at: e.source.clone(),
                text: e.text.clone(),
                reason: reason.into(),
            },
            None => ConfigError::Missing(format!("{key}: {}", reason.into())),
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| self.error(key, format!("cannot parse `{}`", e.value))),
        }
    }

    fn get_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) if e.value.is_empty() => Ok(Some(Vec::new())),
            Some(e) => e
                .value
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|_| self.error(key, format!("cannot parse list `{}`", e.value))),
        }
    }

    pub fn seed(&self) -> Result<Option<u64>, ConfigError> {
        self.get("seed")
    }
}

/// Fully resolved configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub ladder: Option<Vec<usize>>,
    pub reference_n: Option<usize>,
    pub reference_steps: Option<usize>,
    /// `(key, value, source)` for every setting, in resolution order.
    pub resolved: Vec<(String, String, Source)>,
}

pub const DEFAULT_SEED: u64 = 20240601;

struct Resolver<'a> {
    raw: &'a RawConfig,
    preset: Option<String>,
    resolved: Vec<(String, String, Source)>,
}

impl Resolver<'_> {
    /// Value of `key`: explicit entry, else `fallback` tagged with its origin.
    fn take<T>(&mut self, key: &str, fallback: Option<(T, bool)>) -> Result<Option<T>, ConfigError>
    where
        T: std::str::FromStr + fmt::Display,
    {
        if let Some(v) = self.raw.get::<T>(key)? {
            let src = self.raw.entry(key).expect("present").source.clone();
            self.resolved.push((key.into(), v.to_string(), src));
            return Ok(Some(v));
        }
        Ok(fallback.map(|(v, from_preset)| {
            let src = match (&self.preset, from_preset) {
                (Some(p), true) => Source::Preset(p.clone()),
                _ => Source::Default,
            };
            self.resolved.push((key.into(), v.to_string(), src));
            v
        }))
    }

    fn note(&mut self, key: &str, value: impl fmt::Display, src: Source) {
        self.resolved.push((key.into(), value.to_string(), src));
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn param_key(name: &str) -> &'static str {
    match name {
        "a" => "model.a",
        "b" => "model.b",
        "c" => "model.c",
        "A0" => "model.A0",
        "M" => "model.M",
        "L1" => "model.L1",
        "L2" => "model.L2",
        "L3" => "model.L3",
        "L2+L3" => "model.L2",
        "dt" => "time.dt",
        _ => "grid.dim",
    }
}

impl RunConfig {
    pub fn resolve(raw: &RawConfig, out_override: Option<&Path>) -> Result<Self, ConfigError> {
        let base = match raw.get::<String>("experiment")? {
            Some(key) => Some(ExperimentSpec::preset(&key).map_err(|e| raw.error("experiment", e.to_string()))?),
            None => None,
        };
        let mut r = Resolver {
            raw,
            preset: base.as_ref().map(|b| b.name.clone()),
            resolved: Vec::new(),
        };
        if let Some(b) = &base {
            r.note("experiment", &b.name, raw.entry("experiment").unwrap().source.clone());
        }
        let from_base = |f: &dyn Fn(&ExperimentSpec) -> String| base.as_ref().map(|b| (f(b), true));

        let initial: InitialCondition = {
            let fb = from_base(&|b| b.initial.key().to_string()).unwrap_or(("example1".into(), false));
            let key: String = r.take("initial", Some(fb))?.unwrap();
            key.parse().map_err(|e: qtensor::Error| raw.error("initial", e.to_string()))?
        };

        let dim: usize = r
            .take("grid.dim", Some(base.as_ref().map_or((2, false), |b| (b.dim(), true))))?
            .unwrap();
        if dim != 2 && dim != 3 {
            return Err(raw.error("grid.dim", "dimension must be 2 or 3"));
        }
        let n: usize = r
            .take("grid.n", base.as_ref().map(|b| (b.n, true)))?
            .ok_or_else(|| ConfigError::Missing("grid.n is required (intervals per axis)".into()))?;
        if n < 2 {
            return Err(raw.error("grid.n", "need at least 2 intervals (h must be below the side)"));
        }
        let side: f64 = r
            .take(
                "grid.side",
                Some(base.as_ref().map_or((initial.domain_side(), false), |b| (b.side, true))),
            )?
            .unwrap();
        if !(side > 0.0 && side.is_finite()) {
            return Err(raw.error("grid.side", "h must be positive"));
        }

        // model parameters
        let mut prm = base.as_ref().map_or_else(
            || ModelParams::standard(dim).with_effective_l(0.001),
            |b| b.params,
        );
        prm.dim = dim;
        macro_rules! model {
            ($key:literal, $field:ident) => {
                prm.$field = r.take($key, Some((prm.$field, base.is_some())))?.unwrap();
            };
        }
        model!("model.a", a);
        model!("model.b", b);
        model!("model.c", c);
        model!("model.A0", a0);
        model!("model.M", m);
        if let Some(l) = raw.get::<f64>("model.L")? {
            for k in ["model.L1", "model.L2", "model.L3"] {
                if raw.entry(k).is_some() {
                    return Err(raw.error(k, "cannot be combined with model.L"));
                }
            }
            if dim != 2 {
                return Err(raw.error("model.L", "the effective constant L is 2D only"));
            }
            r.note("model.L", l, raw.entry("model.L").unwrap().source.clone());
            prm = prm.with_effective_l(l);
            r.note("model.L1", l, Source::Derived);
            r.note("model.L2", 0, Source::Derived);
            r.note("model.L3", 0, Source::Derived);
        } else {
            model!("model.L1", l1);
            model!("model.L2", l2);
            model!("model.L3", l3);
        }

        // time: dt, steps and T, any two fixing the third
        let dt_in: Option<f64> = raw.get("time.dt")?;
        let steps_in: Option<usize> = raw.get("time.steps")?;
        let t_in: Option<f64> = raw.get("time.T")?;
        if let Some(dt) = dt_in {
            if !(dt > 0.0) {
                return Err(raw.error("time.dt", "time step must be positive"));
            }
        }
        if steps_in == Some(0) {
            return Err(raw.error("time.steps", "need at least one step"));
        }
        if let Some(t) = t_in {
            if !(t > 0.0) {
                return Err(raw.error("time.T", "final time must be positive"));
            }
        }
        let dt_fb = base.as_ref().map_or(0.001, |b| b.params.dt);
        let steps_fb = base.as_ref().map_or(100, |b| b.steps);
        let (dt, steps) = match (dt_in, steps_in, t_in) {
            (Some(dt), Some(k), Some(t)) => {
                if (k as f64 * dt - t).abs() > 1e-9 * t {
                    return Err(raw.error("time.T", format!("T must equal time.steps * time.dt = {}", k as f64 * dt)));
                }
                (dt, k)
            }
            (None, Some(k), Some(t)) => (t / k as f64, k),
            (dt, None, Some(t)) => {
                let dt = dt.unwrap_or(dt_fb);
                let k = (t / dt).round();
                if k < 1.0 || (k * dt - t).abs() > 1e-9 * t {
                    return Err(raw.error("time.T", format!("T is not a whole number of steps of {dt}")));
                }
                (dt, k as usize)
            }
            (dt, k, None) => (dt.unwrap_or(dt_fb), k.unwrap_or(steps_fb)),
        };
        let time_src = |key: &str, given: bool| match (given, &base) {
            (true, _) => raw.entry(key).unwrap().source.clone(),
            (false, _) if dt_in.is_some() || steps_in.is_some() || t_in.is_some() => Source::Derived,
            (false, Some(b)) => Source::Preset(b.name.clone()),
            (false, None) => Source::Default,
        };
        r.note("time.dt", dt, time_src("time.dt", dt_in.is_some()));
        r.note("time.steps", steps, time_src("time.steps", steps_in.is_some()));
        let t_final = steps as f64 * dt;
        r.note("time.T", t_final, time_src("time.T", t_in.is_some()));
        prm.dt = dt;
        prm.validate().map_err(|e| match e {
            qtensor::Error::Parameter { name, .. } => raw.error(param_key(name), e.to_string()),
            other => ConfigError::Missing(other.to_string()),
        })?;

        let snapshots: Vec<f64> = match raw.get_list::<f64>("output.snapshots")? {
            Some(v) => {
                r.note("output.snapshots", join(&v), raw.entry("output.snapshots").unwrap().source.clone());
                v
            }
            None => {
                let v = base
                    .as_ref()
                    .map(|b| b.snapshots.iter().copied().filter(|&s| s <= t_final * (1.0 + 1e-12)).collect::<Vec<f64>>())
                    .unwrap_or_default();
                let src = if base.is_some() { Source::Preset(r.preset.clone().unwrap()) } else { Source::Default };
                r.note("output.snapshots", join(&v), src);
                v
            }
        };

        let spec = ExperimentSpec {
            name: base.as_ref().map_or_else(|| initial.key().to_string(), |b| b.name.clone()),
            initial,
            side,
            n,
            steps,
            t_final,
            params: prm,
            snapshots,
        };
        spec.validate().map_err(|e| ConfigError::Missing(e.to_string()))?;

        let defaults = SolverConfig::default();
        let tol: f64 = r.take("solver.tolerance", Some((defaults.rel_tolerance, false)))?.unwrap();
        let max_iterations: Option<usize> = r.take("solver.max_iterations", None)?;
        let pre: String = r.take("solver.preconditioner", Some(("jacobi".to_string(), false)))?.unwrap();
        let preconditioner = match pre.as_str() {
            "jacobi" => Preconditioner::Jacobi,
            "none" => Preconditioner::None,
            _ => return Err(raw.error("solver.preconditioner", "expected `jacobi` or `none`")),
        };
        let solver = SolverConfig {
            rel_tolerance: tol,
            max_iterations,
            preconditioner,
        };
        solver.validate().map_err(|e| raw.error("solver.tolerance", e.to_string()))?;

        let out_dir = match out_override {
            Some(p) => {
                r.note("output.dir", p.display(), Source::Flag);
                p.to_path_buf()
            }
            None => PathBuf::from(r.take::<String>("output.dir", Some(("out".into(), false)))?.unwrap()),
        };
        let seed = r.take("seed", Some((DEFAULT_SEED, false)))?.unwrap();
        let ladder: Option<Vec<usize>> = raw.get_list("convergence.ladder")?;
        if let Some(l) = &ladder {
            if l.is_empty() || l.contains(&0) {
                return Err(raw.error("convergence.ladder", "entries must be positive"));
            }
            r.note("convergence.ladder", join(l), raw.entry("convergence.ladder").unwrap().source.clone());
        }
        let reference_n = r.take("convergence.reference_n", None)?;
        let reference_steps = r.take("convergence.reference_steps", None)?;

        Ok(RunConfig {
            spec,
            solver,
            out_dir,
            seed,
            ladder,
            reference_n,
            reference_steps,
            resolved: r.resolved,
        })
    }

    /// `key = value  (source)` lines for logs and file headers.
    pub fn echo(&self) -> Vec<String> {
        self.resolved
            .iter()
            .map(|(k, v, s)| format!("{k} = {v}  ({s})"))
            .collect()
    }
}

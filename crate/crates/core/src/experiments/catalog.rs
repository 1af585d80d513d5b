use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::potential::ModelParams;
use crate::{Error, Result, Tensor};

/// Floor on `|ñ₀|` in the normalized hole example.
pub const DIRECTOR_FLOOR: f64 = 1e-12;

/// Named initial data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitialCondition {
    /// `n₀ = (x(2−x)y(2−y), sin(πx) sin(πy/2))` on `[0,2]²`.
    Example1,
    /// A single point defect near `(1.5, 0.7)` on `[0,2]²`.
    Example2Defect,
    /// Normalized `ñ₀ = (x(1−x)y(1−y), sin 2πx sin 2πy)` on `[0,1]²`.
    Example3Hole,
    /// `Q₀ ≡ 0` in any dimension.
    Zero,
}

impl InitialCondition {
    pub const ALL: [InitialCondition; 4] = [
        InitialCondition::Example1,
        InitialCondition::Example2Defect,
        InitialCondition::Example3Hole,
        InitialCondition::Zero,
    ];

    pub fn key(self) -> &'static str {
        match self {
            InitialCondition::Example1 => "example1",
            InitialCondition::Example2Defect => "example2_defect",
            InitialCondition::Example3Hole => "example3_hole",
            InitialCondition::Zero => "zero",
        }
    }

    /// Director `n₀(x, y)` for the 2D examples.
    pub fn director(self, x: f64, y: f64) -> [f64; 2] {
        match self {
            InitialCondition::Example1 => [
                x * (2.0 - x) * y * (2.0 - y),
                (PI * x).sin() * (0.5 * PI * y).sin(),
            ],
            InitialCondition::Example2Defect => [
                (x * x + 1.0).ln()
                    * (x - 2.0).powi(2)
                    * (PI * y / 2.0).sin()
                    * (1.5f64.exp() - x.exp()),
                (y - 2.0) * (y - 3.0) * (PI * y / 10.0).sin() * (PI * x / 2.0).sin() * (0.7 - y),
            ],
            InitialCondition::Example3Hole => {
                let n = [
                    x * (1.0 - x) * y * (1.0 - y),
                    (2.0 * PI * x).sin() * (2.0 * PI * y).sin(),
                ];
                let len = n[0].hypot(n[1]).max(DIRECTOR_FLOOR);
                [n[0] / len, n[1] / len]
            }
            InitialCondition::Zero => [0.0, 0.0],
        }
    }

    /// `Q₀ = n₀n₀ᵀ − |n₀|²/d I`; only [`InitialCondition::Zero`] accepts `dim = 3`.
    pub fn eval(self, dim: usize, x: [f64; 3]) -> Tensor {
        if self == InitialCondition::Zero || dim != 2 {
            return Tensor::zeros(dim);
        }
        Tensor::uniaxial(&self.director(x[0], x[1]))
    }

    /// Domain side length used by the named experiment.
    pub fn domain_side(self) -> f64 {
        match self {
            InitialCondition::Example3Hole => 1.0,
            _ => 2.0,
        }
    }

    pub fn supports_dim(self, dim: usize) -> bool {
        match self {
            InitialCondition::Zero => dim == 2 || dim == 3,
            _ => dim == 2,
        }
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InitialCondition::ALL
            .into_iter()
            .find(|c| c.key() == s)
            .ok_or_else(|| {
                let keys: Vec<_> = InitialCondition::ALL.iter().map(|c| c.key()).collect();
                Error::Argument(format!("unknown initial condition '{s}' (known: {})", keys.join(", ")))
            })
    }
}

/// A fully specified simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub initial: InitialCondition,
    pub side: f64,
    /// Intervals per axis, so `h = side / n`.
    pub n: usize,
    pub steps: usize,
    pub t_final: f64,
    /// `params.dt` is kept equal to `t_final / steps`.
    pub params: ModelParams,
    /// Requested snapshot times.
    pub snapshots: Vec<f64>,
}

fn times(step: f64, end: f64) -> Vec<f64> {
    let k = (end / step).round() as usize;
    (0..=k).map(|i| i as f64 * step).collect()
}

impl ExperimentSpec {
    /// Smooth example on `[0,2]²` with `L = 0.001`.
    pub fn example1(n: usize, steps: usize, t_final: f64) -> Self {
        ExperimentSpec {
            name: "example1".into(),
            initial: InitialCondition::Example1,
            side: 2.0,
            n,
            steps,
            t_final,
            params: ModelParams::standard(2)
                .with_effective_l(0.001)
                .with_dt(t_final / steps as f64),
            snapshots: Vec::new(),
        }
    }

    /// Defect example: 40², 4000 steps to `T = 4`.
    pub fn example2() -> Self {
        ExperimentSpec {
            name: "example2".into(),
            initial: InitialCondition::Example2Defect,
            side: 2.0,
            n: 40,
            steps: 4000,
            t_final: 4.0,
            params: ModelParams::standard(2).with_effective_l(0.001).with_dt(0.001),
            snapshots: times(0.5, 4.0),
        }
    }

    /// Hole example: 50², 100 steps to `T = 10` with `a = −0.2, b = c = 1`.
    pub fn example3() -> Self {
        let mut params = ModelParams::standard(2).with_effective_l(0.0025).with_dt(0.1);
        params.a = -0.2;
        params.b = 1.0;
        params.c = 1.0;
        ExperimentSpec {
            name: "example3".into(),
            initial: InitialCondition::Example3Hole,
            side: 1.0,
            n: 50,
            steps: 100,
            t_final: 10.0,
            params,
            snapshots: times(0.2, 1.0),
        }
    }

    /// `Q₀ ≡ 0` on the unit cube.
    pub fn zero(dim: usize, n: usize, steps: usize, dt: f64) -> Self {
        ExperimentSpec {
            name: "zero".into(),
            initial: InitialCondition::Zero,
            side: 1.0,
            n,
            steps,
            t_final: dt * steps as f64,
            params: ModelParams::standard(dim).with_dt(dt),
            snapshots: Vec::new(),
        }
    }

    pub fn preset(key: &str) -> Result<Self> {
        match key {
            "example1" => Ok(ExperimentSpec::example1(80, 400, 0.4)),
            "example2" | "example2_defect" => Ok(ExperimentSpec::example2()),
            "example3" | "example3_hole" => Ok(ExperimentSpec::example3()),
            "zero" => Ok(ExperimentSpec::zero(2, 16, 100, 0.001)),
            _ => Err(Error::Argument(format!(
                "unknown experiment '{key}' (known: example1, example2, example3, zero)"
            ))),
        }
    }

    /// Sets the step count, keeping `T` fixed.
    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self.params.dt = self.t_final / steps as f64;
        self
    }

    /// Keeps `Δt` and stops after `steps` steps; snapshots past the new
    /// horizon are dropped.
    pub fn truncated(mut self, steps: usize) -> Self {
        self.steps = steps;
        self.t_final = self.params.dt * steps as f64;
        let end = self.t_final * (1.0 + 1e-12);
        self.snapshots.retain(|&t| t <= end);
        self
    }

    /// Sets the number of intervals per axis.
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.steps == 0 {
            return Err(Error::Argument("need at least one time step".into()));
        }
        if !self.initial.supports_dim(self.dim()) {
            return Err(Error::Argument(format!(
                "initial condition '{}' is not defined in {}D",
                self.initial,
                self.dim()
            )));
        }
        let t = self.params.dt * self.steps as f64;
        if (t - self.t_final).abs() > 4.0 * f64::EPSILON * self.t_final.abs().max(1.0) {
            return Err(Error::Argument(format!(
                "final time {} differs from steps·dt = {}",
                self.t_final, t
            )));
        }
        for &s in &self.snapshots {
            if !(0.0..=self.t_final * (1.0 + 1e-12)).contains(&s) {
                return Err(Error::Argument(format!("snapshot time {s} outside [0, {}]", self.t_final)));
            }
        }
        Ok(())
    }

    /// `(requested time, step index)` for each snapshot, snapped to the
    /// nearest step.
    pub fn snapshot_steps(&self) -> Vec<(f64, usize)> {
        self.snapshots
            .iter()
            .map(|&t| (t, ((t / self.params.dt).round() as usize).min(self.steps)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_round_trip() {
        for c in InitialCondition::ALL {
            assert_eq!(c.key().parse::<InitialCondition>().unwrap(), c);
        }
        assert!("example4".parse::<InitialCondition>().is_err());
    }

    #[test]
    fn corners_give_zero() {
        for c in [InitialCondition::Example1, InitialCondition::Example3Hole] {
            let q = c.eval(2, [0.0, 0.0, 0.0]);
            assert_eq!(q.frobenius(), 0.0, "{c}");
        }
        let q = InitialCondition::Example2Defect.eval(2, [0.0, 0.0, 0.0]);
        assert_eq!(q.frobenius(), 0.0);
    }

    #[test]
    fn example1_centre() {
        let q = InitialCondition::Example1.eval(2, [1.0, 1.0, 0.0]);
        assert!((q - Tensor::diag(&[0.5, -0.5])).frobenius() < 1e-15);
    }

    #[test]
    fn example3_director_is_unit_away_from_zeros() {
        let n = InitialCondition::Example3Hole.director(0.3, 0.1);
        assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn presets_are_consistent() {
        for key in ["example1", "example2", "example3", "zero"] {
            let s = ExperimentSpec::preset(key).unwrap();
            s.validate().unwrap();
        }
        let e3 = ExperimentSpec::example3();
        assert_eq!(e3.params.dt, 0.1);
        assert_eq!(e3.snapshot_steps()[1], (0.2, 2));
        assert_eq!(ExperimentSpec::example2().snapshots.len(), 9);
    }

    #[test]
    fn inconsistent_final_time_is_rejected() {
        let mut s = ExperimentSpec::example1(10, 40, 0.4);
        s.t_final = 0.5;
        assert!(s.validate().is_err());
    }
}

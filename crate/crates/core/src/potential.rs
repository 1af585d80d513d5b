//! Pointwise algebra of the Landau–de Gennes bulk potential and its
//! quadratization.
//!
//! With `F_B(Q) = a/2 tr(Q²) − b/3 tr(Q³) + c/4 tr(Q²)²` the auxiliary
//! variable is `r(Q) = √(2(F_B(Q) + A₀))`, and its derivative over symmetric
//! trace-free tensors is `P(Q) = S(Q)/r(Q)` with
//! `S(Q) = aQ − b[Q² − tr(Q²)/d·I] + c tr(Q²) Q`.

use rayon::prelude::*;

use crate::fields::{par_nodes_mut, QTensorField};
use crate::{Error, Result, Tensor};

/// Physical and scheme constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    /// Quartic coefficient, `c > 0`.
    pub c: f64,
    /// Quadratization shift, `A₀ > 0`.
    pub a0: f64,
    /// Mobility, `M > 0`.
    pub m: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Time step.
    pub dt: f64,
    pub dim: usize,
}

impl ModelParams {
    /// `a = −0.3, b = −4, c = 4, A₀ = 500, M = 1`, with `L₁ = 0.001`,
    /// `L₂ = L₃ = 0` and `Δt = 0.001`.
    pub fn standard(dim: usize) -> Self {
        ModelParams {
            a: -0.3,
            b: -4.0,
            c: 4.0,
            a0: 500.0,
            m: 1.0,
            l1: 0.001,
            l2: 0.0,
            l3: 0.0,
            dt: 0.001,
            dim,
        }
    }

    /// In 2D the elastic terms collapse onto one Laplacian with coefficient
    /// `L = L₁ + (L₂ + L₃)/2`; this sets `L₁ = L` and `L₂ = L₃ = 0`.
    pub fn with_effective_l(mut self, l: f64) -> Self {
        self.l1 = l;
        self.l2 = 0.0;
        self.l3 = 0.0;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, value: f64, ok: bool, reason: &'static str| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter { name, value, reason })
            }
        };
        check("a", self.a, true, "must be finite")?;
        check("b", self.b, true, "must be finite")?;
        check("c", self.c, self.c > 0.0, "c must be positive")?;
        check("A0", self.a0, self.a0 > 0.0, "A0 must be positive")?;
        check("M", self.m, self.m > 0.0, "M must be positive")?;
        check("L1", self.l1, self.l1 > 0.0, "L1 must be positive")?;
        check("L2", self.l2, true, "must be finite")?;
        check("L3", self.l3, true, "must be finite")?;
        check(
            "L2+L3",
            self.l2 + self.l3,
            self.l2 + self.l3 >= 0.0,
            "L2 + L3 must be non-negative",
        )?;
        check("dt", self.dt, self.dt > 0.0, "time step must be positive")?;
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Parameter {
                name: "dim",
                value: self.dim as f64,
                reason: "dimension must be 2 or 3",
            });
        }
        Ok(())
    }

    /// `r(0) = √(2A₀)`.
    pub fn r_isotropic(&self) -> f64 {
        (2.0 * self.a0).sqrt()
    }

    /// `(L₂ + L₃)`, the coefficient pair multiplying the divergence terms.
    pub fn l23(&self) -> f64 {
        self.l2 + self.l3
    }
}

/// `F_B(Q)`.
pub fn bulk_energy(q: &Tensor, params: &ModelParams) -> f64 {
    let q2 = q.matmul(q);
    let tr2 = q2.trace();
    let tr3 = q2.ddot(&q.transpose());
    0.5 * params.a * tr2 - params.b / 3.0 * tr3 + 0.25 * params.c * tr2 * tr2
}

/// `r(Q) = √(2(F_B(Q) + A₀))`; a non-positive radicand is an error.
pub fn r_of(q: &Tensor, params: &ModelParams) -> Result<f64> {
    let radicand = 2.0 * (bulk_energy(q, params) + params.a0);
    if radicand > 0.0 && radicand.is_finite() {
        Ok(radicand.sqrt())
    } else {
        Err(Error::QuadratizationShift { radicand, node: None })
    }
}

/// `S(Q) = aQ − b[Q² − tr(Q²)/d·I] + c tr(Q²) Q`.
pub fn s_of(q: &Tensor, params: &ModelParams) -> Tensor {
    let d = q.dim();
    let q2 = q.matmul(q);
    let tr2 = q2.trace();
    let bracket = q2 - Tensor::identity(d).scale(tr2 / d as f64);
    q.scale(params.a + params.c * tr2) - bracket.scale(params.b)
}

/// `P(Q) = S(Q)/r(Q)`.
pub fn p_of(q: &Tensor, params: &ModelParams) -> Result<Tensor> {
    let r = r_of(q, params)?;
    Ok(s_of(q, params).scale(1.0 / r))
}

/// Second-order extrapolant `(3/2)Qⁿ − (1/2)Qⁿ⁻¹`.
pub fn extrapolate(qn: &QTensorField, qnm1: &QTensorField) -> QTensorField {
    QTensorField::lin_comb(1.5, qn, -0.5, qnm1)
}

/// `P̄ = P((3/2)Qⁿ − (1/2)Qⁿ⁻¹)` at interior nodes, zero on the boundary.
pub fn p_bar(qn: &QTensorField, qnm1: &QTensorField, params: &ModelParams) -> Result<QTensorField> {
    qn.grid().ensure_matches(qnm1.grid())?;
    let grid = *qn.grid();
    let q_bar = extrapolate(qn, qnm1);
    let mut out = QTensorField::zeros(grid);
    let c = out.ncomp();
    let d = grid.dim();
    let failed = std::sync::Mutex::new(None::<Error>);
    par_nodes_mut(&grid, out.data_mut(), c, 1, grid.n_interior() as isize, |p, o| {
        let t = q_bar.tensor(p);
        match p_of(&t, params) {
            Ok(pt) => {
                for i in 0..d {
                    for j in 0..d {
                        o[i * d + j] = pt.get(i, j);
                    }
                }
            }
            Err(e) => {
                let mut slot = failed.lock().unwrap();
                if slot.is_none() {
                    *slot = Some(e.at_node(grid.multi_index(p)));
                }
            }
        }
    });
    match failed.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// `r(Q)` at every interior node of `q`, `r(0)` elsewhere.
pub fn r_field(q: &QTensorField, params: &ModelParams) -> Result<crate::ScalarField> {
    let grid = *q.grid();
    let mut r = crate::ScalarField::zeros(grid);
    r.fill(params.r_isotropic());
    let vals: Vec<(usize, f64)> = grid
        .interior_nodes()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(idx, p)| r_of(&q.tensor(p), params).map(|v| (p, v)).map_err(|e| e.at_node(idx)))
        .collect::<Result<_>>()?;
    for (p, v) in vals {
        r.set_value(p, v);
    }
    Ok(r)
}

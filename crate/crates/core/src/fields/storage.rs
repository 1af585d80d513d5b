use std::fmt::Debug;
use std::marker::PhantomData;

use rayon::prelude::*;

use super::GridSpec;
use crate::{Error, Result, Tensor};

/// What a grid field stores at each node.
pub trait FieldKind: Copy + Clone + Debug + PartialEq + Send + Sync + 'static {
    const NAME: &'static str;
    fn components(dim: usize) -> usize;
}

/// `d×d` matrix per node, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorKind;
/// One real per node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarKind;
/// Length-`d` vector per node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VectorKind;

impl FieldKind for TensorKind {
    const NAME: &'static str = "tensor";
    fn components(dim: usize) -> usize {
        dim * dim
    }
}

impl FieldKind for ScalarKind {
    const NAME: &'static str = "scalar";
    fn components(_dim: usize) -> usize {
        1
    }
}

impl FieldKind for VectorKind {
    const NAME: &'static str = "vector";
    fn components(dim: usize) -> usize {
        dim
    }
}

/// Dense node-major storage over the padded node array `-1..=N+2` per axis,
/// components contiguous per node.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<K: FieldKind> {
    grid: GridSpec,
    data: Vec<f64>,
    kind: PhantomData<K>,
}

pub type QTensorField = GridField<TensorKind>;
pub type ScalarField = GridField<ScalarKind>;
pub type VectorField = GridField<VectorKind>;

impl<K: FieldKind> GridField<K> {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.padded_len() * K::components(grid.dim());
        GridField {
            grid,
            data: vec![0.0; n],
            kind: PhantomData,
        }
    }

    pub fn from_data(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        let n = grid.padded_len() * K::components(grid.dim());
        if data.len() != n {
            return Err(Error::Argument(format!(
                "{} field needs {n} values, got {}",
                K::NAME,
                data.len()
            )));
        }
        Ok(GridField {
            grid,
            data,
            kind: PhantomData,
        })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        K::components(self.grid.dim())
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Components at linear node index `p`.
    #[inline]
    pub fn node(&self, p: usize) -> &[f64] {
        let c = self.ncomp();
        &self.data[p * c..(p + 1) * c]
    }

    #[inline]
    pub fn node_mut(&mut self, p: usize) -> &mut [f64] {
        let c = self.ncomp();
        &mut self.data[p * c..(p + 1) * c]
    }

    pub fn at(&self, idx: [isize; 3]) -> &[f64] {
        self.node(self.grid.index(idx))
    }

    pub fn at_mut(&mut self, idx: [isize; 3]) -> &mut [f64] {
        let p = self.grid.index(idx);
        self.node_mut(p)
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Sets every boundary and ghost node to `v`.
    pub fn set_boundary(&mut self, v: f64) {
        let grid = self.grid;
        let c = self.ncomp();
        for (idx, p) in grid.nodes(-1, grid.n_interior() as isize + 2) {
            if !grid.is_interior(idx) {
                self.data[p * c..(p + 1) * c].iter_mut().for_each(|x| *x = v);
            }
        }
    }

    pub fn zero_boundary(&mut self) {
        self.set_boundary(0.0);
    }

    /// Max-abs value over boundary and ghost nodes.
    pub fn boundary_max_abs(&self) -> f64 {
        let grid = self.grid;
        grid.nodes(-1, grid.n_interior() as isize + 2)
            .filter(|(idx, _)| !grid.is_interior(*idx))
            .flat_map(|(_, p)| self.node(p).iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }

    /// `self ← self + a·x`.
    pub fn axpy(&mut self, a: f64, x: &GridField<K>) {
        debug_assert!(self.grid.matches(&x.grid));
        self.data
            .par_iter_mut()
            .zip(x.data.par_iter())
            .for_each(|(y, &xv)| *y += a * xv);
    }

    pub fn scale(&mut self, s: f64) {
        self.data.par_iter_mut().for_each(|v| *v *= s);
    }

    /// `a·x + b·y`.
    pub fn lin_comb(a: f64, x: &GridField<K>, b: f64, y: &GridField<K>) -> GridField<K> {
        debug_assert!(x.grid.matches(&y.grid));
        let data = x
            .data
            .par_iter()
            .zip(y.data.par_iter())
            .map(|(&xv, &yv)| a * xv + b * yv)
            .collect();
        GridField {
            grid: x.grid,
            data,
            kind: PhantomData,
        }
    }

    pub fn max_abs_diff(&self, other: &GridField<K>) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

impl ScalarField {
    #[inline]
    pub fn value(&self, p: usize) -> f64 {
        self.data[p]
    }

    #[inline]
    pub fn set_value(&mut self, p: usize, v: f64) {
        self.data[p] = v;
    }

    /// Smallest value over real nodes.
    pub fn min_real(&self) -> f64 {
        self.grid
            .real_nodes()
            .map(|(_, p)| self.data[p])
            .fold(f64::INFINITY, f64::min)
    }
}

impl QTensorField {
    #[inline]
    pub fn tensor(&self, p: usize) -> Tensor {
        Tensor::from_row_slice(self.grid.dim(), self.node(p))
    }

    #[inline]
    pub fn set_tensor(&mut self, p: usize, t: &Tensor) {
        let d = self.grid.dim();
        let node = self.node_mut(p);
        for i in 0..d {
            for j in 0..d {
                node[i * d + j] = t.get(i, j);
            }
        }
    }

    pub fn tensor_at(&self, idx: [isize; 3]) -> Tensor {
        self.tensor(self.grid.index(idx))
    }

    /// Component `(i, j)` (0-based) at every node as a scalar field.
    pub fn component(&self, i: usize, j: usize) -> ScalarField {
        let d = self.grid.dim();
        let mut out = ScalarField::zeros(self.grid);
        for (p, v) in out.data.iter_mut().enumerate() {
            *v = self.data[p * d * d + i * d + j];
        }
        out
    }

    /// Max-abs trace over real nodes.
    pub fn trace_drift(&self) -> f64 {
        self.grid
            .real_nodes()
            .map(|(_, p)| self.tensor(p).trace().abs())
            .fold(0.0, f64::max)
    }

    /// Max-abs `Q_ij − Q_ji` over real nodes.
    pub fn sym_drift(&self) -> f64 {
        self.grid
            .real_nodes()
            .map(|(_, p)| self.tensor(p).asymmetry())
            .fold(0.0, f64::max)
    }

    /// Largest nodal Frobenius norm.
    pub fn max_frobenius(&self) -> f64 {
        self.grid
            .real_nodes()
            .map(|(_, p)| self.tensor(p).frobenius())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_helpers() {
        let g = GridSpec::with_intervals(2, 4, 1.0).unwrap();
        let mut r = ScalarField::zeros(g);
        r.fill(2.0);
        r.zero_boundary();
        assert_eq!(r.boundary_max_abs(), 0.0);
        assert_eq!(r.value(g.index([2, 2, 0])), 2.0);
        assert_eq!(r.min_real(), 0.0);
    }

    #[test]
    fn tensor_accessors() {
        let g = GridSpec::with_intervals(3, 3, 1.0).unwrap();
        let mut q = QTensorField::zeros(g);
        let t = Tensor::diag(&[1.0, 2.0, -3.0]);
        let p = g.index([1, 2, 1]);
        q.set_tensor(p, &t);
        assert_eq!(q.tensor(p), t);
        assert_eq!(q.component(2, 2).value(p), -3.0);
        assert_eq!(q.trace_drift(), 0.0);
        q.node_mut(p)[1] = 0.5;
        assert_eq!(q.sym_drift(), 0.5);
    }

    #[test]
    fn from_data_checks_length() {
        let g = GridSpec::with_intervals(2, 4, 1.0).unwrap();
        assert!(QTensorField::from_data(g, vec![0.0; 3]).is_err());
        assert!(QTensorField::from_data(g, vec![0.0; 49 * 4]).is_ok());
    }
}

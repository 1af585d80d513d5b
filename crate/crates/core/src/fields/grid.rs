use crate::{Error, Result};

/// Uniform tensor-product grid over a cube `origin + [0, side]^d`.
///
/// Nodes are indexed `0..=N+1` per axis, with `0` and `N+1` on the boundary
/// and one ghost layer at `-1` and `N+2`. Node `i` sits at `origin + i·h`
/// with `h = side / (N + 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n_interior: usize,
    h: f64,
    origin: [f64; 3],
    side: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n_interior: usize, origin: [f64; 3], side: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Argument(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n_interior == 0 {
            return Err(Error::Argument("grid needs at least one interior node".into()));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::Parameter {
                name: "side",
                value: side,
                reason: "domain side must be positive",
            });
        }
        let h = side / (n_interior + 1) as f64;
        Ok(GridSpec {
            dim,
            n_interior,
            h,
            origin,
            side,
        })
    }

    /// Grid with `n_intervals` cells per axis on `[0, side]^d`, i.e.
    /// `N = n_intervals − 1` interior nodes and `h = side / n_intervals`.
    pub fn with_intervals(dim: usize, n_intervals: usize, side: f64) -> Result<Self> {
        if n_intervals < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 intervals per axis, got {n_intervals}"
            )));
        }
        GridSpec::new(dim, n_intervals - 1, [0.0; 3], side)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N`, the number of interior nodes per axis.
    #[inline]
    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    /// `N + 1`, the number of cells per axis.
    #[inline]
    pub fn n_intervals(&self) -> usize {
        self.n_interior + 1
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    /// `h^d`, the weight of every node in the discrete inner product.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Nodes per axis including both ghost layers: `N + 4`.
    #[inline]
    pub fn padded(&self) -> usize {
        self.n_interior + 4
    }

    /// Row-major strides (last axis fastest) over the padded node array.
    #[inline]
    pub fn strides(&self) -> [usize; 3] {
        let n = self.padded();
        match self.dim {
            2 => [n, 1, 0],
            _ => [n * n, n, 1],
        }
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.strides()[axis]
    }

    pub fn padded_len(&self) -> usize {
        self.padded().pow(self.dim as u32)
    }

    /// Number of real (non-ghost) nodes, `(N + 2)^d`.
    pub fn real_len(&self) -> usize {
        (self.n_interior + 2).pow(self.dim as u32)
    }

    pub fn interior_len(&self) -> usize {
        self.n_interior.pow(self.dim as u32)
    }

    /// Linear index of node `idx` (entries beyond `dim` are ignored).
    #[inline]
    pub fn index(&self, idx: [isize; 3]) -> usize {
        let s = self.strides();
        let mut p = 0usize;
        for a in 0..self.dim {
            debug_assert!(idx[a] >= -1 && idx[a] <= self.n_interior as isize + 2);
            p += (idx[a] + 1) as usize * s[a];
        }
        p
    }

    pub fn multi_index(&self, mut p: usize) -> [isize; 3] {
        let n = self.padded();
        let mut idx = [0isize; 3];
        for a in (0..self.dim).rev() {
            idx[a] = (p % n) as isize - 1;
            p /= n;
        }
        idx
    }

    pub fn coord(&self, idx: [isize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.origin[a] + idx[a] as f64 * self.h;
        }
        x
    }

    pub fn is_interior(&self, idx: [isize; 3]) -> bool {
        let n = self.n_interior as isize;
        (0..self.dim).all(|a| idx[a] >= 1 && idx[a] <= n)
    }

    /// Nodes with every index in `lo..=hi`, in row-major order, as
    /// `(multi-index, linear index)` pairs.
    pub fn nodes(&self, lo: isize, hi: isize) -> impl Iterator<Item = ([isize; 3], usize)> + '_ {
        let span = (hi - lo + 1).max(0) as usize;
        let count = span.pow(self.dim as u32);
        (0..count).map(move |mut k| {
            let mut idx = [0isize; 3];
            for a in (0..self.dim).rev() {
                idx[a] = lo + (k % span) as isize;
                k /= span;
            }
            (idx, self.index(idx))
        })
    }

    /// Real nodes `0..=N+1`.
    pub fn real_nodes(&self) -> impl Iterator<Item = ([isize; 3], usize)> + '_ {
        self.nodes(0, self.n_interior as isize + 1)
    }

    /// Interior nodes `1..=N`.
    pub fn interior_nodes(&self) -> impl Iterator<Item = ([isize; 3], usize)> + '_ {
        self.nodes(1, self.n_interior as isize)
    }

    /// Same lattice up to floating-point noise in `h`.
    pub fn matches(&self, other: &GridSpec) -> bool {
        self.dim == other.dim
            && self.n_interior == other.n_interior
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && (0..self.dim).all(|a| (self.origin[a] - other.origin[a]).abs() <= 1e-12 * self.side)
    }

    /// Integer ratio `k` such that coarse node `i` coincides with fine node
    /// `k·i`, if the two grids nest.
    pub fn nesting_ratio(&self, fine: &GridSpec) -> Option<usize> {
        if self.dim != fine.dim || (self.side - fine.side).abs() > 1e-12 * self.side {
            return None;
        }
        if (0..self.dim).any(|a| (self.origin[a] - fine.origin[a]).abs() > 1e-12 * self.side) {
            return None;
        }
        let (c, f) = (self.n_intervals(), fine.n_intervals());
        (f % c == 0).then_some(f / c)
    }

    pub(crate) fn ensure_matches(&self, other: &GridSpec) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "d={} N={} h={} vs d={} N={} h={}",
                self.dim, self.n_interior, self.h, other.dim, other.n_interior, other.h
            )))
        }
    }
}

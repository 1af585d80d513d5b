//! Small dense `d×d` matrices (`d ∈ {2, 3}`) for nodewise algebra.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A `d×d` real matrix stored in a fixed `3×3` array; entries outside the
/// leading `d×d` block are always zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor {
    dim: usize,
    m: [[f64; 3]; 3],
}

impl Tensor {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "tensor dimension must be 2 or 3");
        Tensor {
            dim,
            m: [[0.0; 3]; 3],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut t = Tensor::zeros(dim);
        for i in 0..dim {
            t.m[i][i] = 1.0;
        }
        t
    }

    /// Builds a tensor from row-major entries; `entries.len()` must be `d²`.
    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), dim * dim);
        let mut t = Tensor::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                t.m[i][j] = entries[i * dim + j];
            }
        }
        t
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut t = Tensor::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            t.m[i][i] = v;
        }
        t
    }

    /// `n nᵀ − (|n|²/d) I`, the uniaxial tensor of a director-like vector.
    pub fn uniaxial(n: &[f64]) -> Self {
        let dim = n.len();
        let mut t = Tensor::zeros(dim);
        let norm2: f64 = n.iter().map(|v| v * v).sum();
        for i in 0..dim {
            for j in 0..dim {
                t.m[i][j] = n[i] * n[j];
            }
            t.m[i][i] -= norm2 / dim as f64;
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.m[i][j] = v;
    }

    /// Row-major entries of the leading `d×d` block.
    pub fn to_vec(&self) -> Vec<f64> {
        let d = self.dim;
        (0..d * d).map(|k| self.m[k / d][k % d]).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Tensor) -> Tensor {
        debug_assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut t = Tensor::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += self.m[i][k] * other.m[k][j];
                }
                t.m[i][j] = s;
            }
        }
        t
    }

    /// Frobenius inner product `A:B`.
    pub fn ddot(&self, other: &Tensor) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.m[i][j] * other.m[i][j];
            }
        }
        s
    }

    pub fn frobenius(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    /// `|A − Aᵀ|` max-abs entry.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.m[i][j] - self.m[j][i]).abs());
            }
        }
        worst
    }

    pub fn scale(&self, s: f64) -> Tensor {
        let mut t = *self;
        for row in t.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }
}

impl Add for Tensor {
    type Output = Tensor;
    fn add(mut self, rhs: Tensor) -> Tensor {
        self += rhs;
        self
    }
}

impl AddAssign for Tensor {
    fn add_assign(&mut self, rhs: Tensor) {
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += rhs.m[i][j];
            }
        }
    }
}

impl Sub for Tensor {
    type Output = Tensor;
    fn sub(self, rhs: Tensor) -> Tensor {
        self + rhs.scale(-1.0)
    }
}

impl Neg for Tensor {
    type Output = Tensor;
    fn neg(self) -> Tensor {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Tensor {
    type Output = Tensor;
    fn mul(self, s: f64) -> Tensor {
        self.scale(s)
    }
}

impl Mul<Tensor> for f64 {
    type Output = Tensor;
    fn mul(self, t: Tensor) -> Tensor {
        t.scale(self)
    }
}

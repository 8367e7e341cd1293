//! Dense complex matrices sized for desk-scale operator kernels.
//!
//! Everything here is direct O(n^3) arithmetic; kernels on the boxes this
//! library targets are a few hundred rows at most, so clarity and exact
//! reproducibility win over blocked or parallel algorithms.

use crate::scalar::{Cplx, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Cplx::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Cplx::new(T::one(), T::zero()));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cplx<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Cplx<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: Cplx<T>) -> Self {
        let data = self.data.iter().map(|a| a * c).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> Cplx<T> {
        assert_eq!(self.rows, self.cols);
        let mut t = Cplx::new(T::zero(), T::zero());
        for i in 0..self.rows {
            t += self.get(i, i);
        }
        t
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// Compression to the rows/columns listed in `idx` (same set on both sides).
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        assert_eq!(self.rows, self.cols);
        Self::from_fn(idx.len(), idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    /// Scale row `i` by `c` in place.
    pub fn scale_row(&mut self, i: usize, c: T) {
        for j in 0..self.cols {
            let v = self.get(i, j) * c;
            self.set(i, j, v);
        }
    }

    /// Singular values, descending. One-sided Jacobi on the columns: the
    /// rotations orthogonalize column pairs directly, so small singular
    /// values do not lose accuracy to Gram-matrix squaring.
    pub fn singular_values(&self) -> Vec<T> {
        let n = self.cols;
        if n == 0 || self.rows == 0 {
            return Vec::new();
        }
        // Column-major working copy.
        let mut col: Vec<Vec<Cplx<T>>> = (0..n)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).collect())
            .collect();

        let tol = T::epsilon() * T::lit(8.0);
        let max_sweeps = 60;
        for _ in 0..max_sweeps {
            let mut converged = true;
            for p in 0..n {
                for q in (p + 1)..n {
                    let mut app = T::zero();
                    let mut aqq = T::zero();
                    let mut apq = Cplx::new(T::zero(), T::zero());
                    for i in 0..self.rows {
                        app += col[p][i].norm_sqr();
                        aqq += col[q][i].norm_sqr();
                        apq += col[p][i].conj() * col[q][i];
                    }
                    let scale = (app * aqq).sqrt();
                    if scale == T::zero() || apq.norm() <= tol * scale {
                        continue;
                    }
                    converged = false;
                    let r = apq.norm();
                    let phase = apq / r;
                    // Real Jacobi angle for the phase-normalized 2x2 Gram block.
                    let tau = (aqq - app) / (T::lit(2.0) * r);
                    let t = if tau >= T::zero() {
                        T::one() / (tau + (T::one() + tau * tau).sqrt())
                    } else {
                        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                    };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    let phc = phase.conj();
                    for i in 0..self.rows {
                        let vp = col[p][i];
                        let vq = col[q][i] * phc;
                        col[p][i] = vp * c - vq * s;
                        col[q][i] = vp * s + vq * c;
                    }
                }
            }
            if converged {
                break;
            }
        }

        let mut sv: Vec<T> = col
            .iter()
            .map(|cj| cj.iter().fold(T::zero(), |a, v| a + v.norm_sqr()).sqrt())
            .collect();
        sv.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
        sv
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> T {
        self.singular_values().into_iter().next().unwrap_or_else(T::zero)
    }
}

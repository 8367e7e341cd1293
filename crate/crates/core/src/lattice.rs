//! Truncated periodic lattice geometry, lattice/torus functions, the exact
//! discrete Fourier transform, difference operators and falling factorials.
//!
//! The infinite lattice is modelled by the window `{-K, ..., K}^n` with
//! periodic wrap-around (a discrete torus with an odd number `M = 2K + 1` of
//! points per axis). On that window the transform pair is exactly invertible,
//! quadrature over the dual torus is an exact `M^{-n}`-weighted grid sum for
//! every band-limited integrand, and all summation identities for the
//! difference operators hold without boundary terms.

use crate::error::{CoreError, Result};
use crate::scalar::{Cplx, Scalar};

/// Geometry of the truncated lattice and its dual frequency grid.
///
/// Lattice points run over `{-K, ..., K}` per axis; frequency points are
/// `j / M` for `j = 0, ..., M-1` per axis. Both sides carry `M^n` points and
/// are enumerated row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeBox {
    dim: usize,
    half_width: i64,
}

impl LatticeBox {
    pub fn new(dim: usize, half_width: i64) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::InvalidParameter("dimension must be positive".into()));
        }
        if half_width < 1 {
            return Err(CoreError::InvalidParameter("half-width must be positive".into()));
        }
        let m = 2 * half_width + 1;
        let count = (m as u128).checked_pow(dim as u32);
        match count {
            Some(c) if c <= 1 << 26 => Ok(Self { dim, half_width }),
            _ => Err(CoreError::InvalidParameter(format!(
                "box {dim}^{half_width} has too many points for dense kernels"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    /// Points per axis, `M = 2K + 1` (always odd, so `k = 0` is on the grid).
    pub fn points_per_axis(&self) -> i64 {
        2 * self.half_width + 1
    }

    pub fn point_count(&self) -> usize {
        (self.points_per_axis() as usize).pow(self.dim as u32)
    }

    /// Wrap a coordinate into `{-K, ..., K}` modulo `M`.
    pub fn wrap(&self, c: i64) -> i64 {
        let m = self.points_per_axis();
        (c + self.half_width).rem_euclid(m) - self.half_width
    }

    /// Linear index of a lattice point (coordinates are wrapped first).
    pub fn index_of(&self, k: &[i64]) -> usize {
        debug_assert_eq!(k.len(), self.dim);
        let m = self.points_per_axis();
        let mut idx: i64 = 0;
        for &c in k {
            idx = idx * m + (self.wrap(c) + self.half_width);
        }
        idx as usize
    }

    /// Lattice point for a linear index, coordinates in `{-K, ..., K}`.
    pub fn point(&self, idx: usize) -> Vec<i64> {
        let m = self.points_per_axis();
        let mut rem = idx as i64;
        let mut k = vec![0i64; self.dim];
        for a in (0..self.dim).rev() {
            k[a] = rem % m - self.half_width;
            rem /= m;
        }
        k
    }

    /// Integer labels `j` in `{0, ..., M-1}^n` of the frequency point at `idx`.
    pub fn freq_labels(&self, idx: usize) -> Vec<i64> {
        let m = self.points_per_axis();
        let mut rem = idx as i64;
        let mut j = vec![0i64; self.dim];
        for a in (0..self.dim).rev() {
            j[a] = rem % m;
            rem /= m;
        }
        j
    }

    /// Frequency point `x = j / M` in `[0, 1)^n` for a linear index.
    pub fn frequency<T: Scalar>(&self, idx: usize) -> Vec<T> {
        let m = T::from_int(self.points_per_axis());
        self.freq_labels(idx).into_iter().map(|j| T::from_int(j) / m).collect()
    }

    /// Interior window `|k|_inf <= K/2`; decay measurements are restricted to
    /// it so that wrap-around seams cannot pollute them.
    pub fn is_interior(&self, k: &[i64]) -> bool {
        k.iter().all(|&c| c.abs() <= self.half_width / 2)
    }

    /// Does the forward difference stencil `k .. k + s` stay inside the
    /// unwrapped window on every axis?
    pub fn stencil_safe(&self, k: &[i64], stencil: &[i64]) -> bool {
        k.iter().zip(stencil).all(|(&c, &s)| c + s <= self.half_width)
    }

    pub fn norm_inf(k: &[i64]) -> i64 {
        k.iter().fold(0, |m, &c| m.max(c.abs()))
    }

    pub fn norm_euclid<T: Scalar>(k: &[i64]) -> T {
        k.iter().fold(T::zero(), |a, &c| a + T::from_int(c * c)).sqrt()
    }
}

/// Table of M-th roots of unity; all transforms reduce their phases modulo M
/// and read from it, which keeps sums over exact roots bitwise reproducible.
pub struct RootTable<T> {
    m: i64,
    roots: Vec<Cplx<T>>,
}

impl<T: Scalar> RootTable<T> {
    pub fn new(boxx: &LatticeBox) -> Self {
        let m = boxx.points_per_axis();
        let roots = (0..m)
            .map(|r| {
                let t = T::from_int(r) / T::from_int(m);
                crate::scalar::unit_phase(t)
            })
            .collect();
        Self { m, roots }
    }

    /// `e^{2 pi i dot / M}`.
    #[inline]
    pub fn at(&self, dot: i64) -> Cplx<T> {
        self.roots[dot.rem_euclid(self.m) as usize]
    }
}

/// Complex-valued function on the lattice window.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction<T> {
    boxx: LatticeBox,
    values: Vec<Cplx<T>>,
}

/// Complex-valued function sampled on the dual frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusFunction<T> {
    boxx: LatticeBox,
    values: Vec<Cplx<T>>,
}

impl<T: Scalar> LatticeFunction<T> {
    pub fn zeros(boxx: LatticeBox) -> Self {
        Self { boxx, values: vec![Cplx::new(T::zero(), T::zero()); boxx.point_count()] }
    }

    /// Kronecker delta at lattice point `at`.
    pub fn delta(boxx: LatticeBox, at: &[i64]) -> Self {
        let mut f = Self::zeros(boxx);
        f.values[boxx.index_of(at)] = Cplx::new(T::one(), T::zero());
        f
    }

    pub fn from_fn(boxx: LatticeBox, mut f: impl FnMut(&[i64]) -> Cplx<T>) -> Self {
        let values = (0..boxx.point_count()).map(|i| f(&boxx.point(i))).collect();
        Self { boxx, values }
    }

    pub fn from_values(boxx: LatticeBox, values: Vec<Cplx<T>>) -> Result<Self> {
        if values.len() != boxx.point_count() {
            return Err(CoreError::Mismatch(format!(
                "expected {} values, got {}",
                boxx.point_count(),
                values.len()
            )));
        }
        Ok(Self { boxx, values })
    }

    pub fn random(boxx: LatticeBox, rng: &mut crate::rng::SplitMix64) -> Self {
        let values = (0..boxx.point_count()).map(|_| rng.complex()).collect();
        Self { boxx, values }
    }

    pub fn boxx(&self) -> &LatticeBox {
        &self.boxx
    }

    pub fn values(&self) -> &[Cplx<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.values
    }

    pub fn value_at(&self, k: &[i64]) -> Cplx<T> {
        self.values[self.boxx.index_of(k)]
    }

    pub fn l2_norm_sq(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a + v.norm_sqr())
    }

    pub fn l2_norm(&self) -> T {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }
}

impl<T: Scalar> TorusFunction<T> {
    pub fn from_fn(boxx: LatticeBox, mut f: impl FnMut(&[T]) -> Cplx<T>) -> Self {
        let values = (0..boxx.point_count()).map(|i| f(&boxx.frequency(i))).collect();
        Self { boxx, values }
    }

    pub fn from_values(boxx: LatticeBox, values: Vec<Cplx<T>>) -> Result<Self> {
        if values.len() != boxx.point_count() {
            return Err(CoreError::Mismatch(format!(
                "expected {} values, got {}",
                boxx.point_count(),
                values.len()
            )));
        }
        Ok(Self { boxx, values })
    }

    pub fn boxx(&self) -> &LatticeBox {
        &self.boxx
    }

    pub fn values(&self) -> &[Cplx<T>] {
        &self.values
    }

    /// Quadrature `l2` norm squared: `M^{-n} sum |g(x_j)|^2`.
    pub fn l2_norm_sq(&self) -> T {
        let w = T::one() / T::from_int(self.boxx.point_count() as i64);
        self.values.iter().fold(T::zero(), |a, v| a + v.norm_sqr()) * w
    }
}

/// Multi-index of difference / derivative orders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self { entries }
    }

    pub fn zero(dim: usize) -> Self {
        Self { entries: vec![0; dim] }
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        Self { entries: e }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn entry(&self, axis: usize) -> u32 {
        self.entries[axis]
    }

    pub fn order(&self) -> u32 {
        self.entries.iter().sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self { entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect() }
    }

    /// Is every entry 0 or 1?
    pub fn is_binary(&self) -> bool {
        self.entries.iter().all(|&e| e <= 1)
    }

    /// `alpha! = prod alpha_j!`.
    pub fn factorial(&self) -> u64 {
        self.entries
            .iter()
            .map(|&e| (1..=e as u64).product::<u64>())
            .product()
    }

    pub fn as_i64(&self) -> Vec<i64> {
        self.entries.iter().map(|&e| e as i64).collect()
    }
}

/// All multi-indices of dimension `dim` with `|alpha| = order`, lexicographic.
pub fn multi_indices_of_order(dim: usize, order: u32) -> Vec<MultiIndex> {
    fn rec(dim: usize, order: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if dim == 1 {
            prefix.push(order);
            out.push(MultiIndex::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=order).rev() {
            prefix.push(first);
            rec(dim - 1, order - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, order, &mut Vec::new(), &mut out);
    out
}

/// All multi-indices with `|alpha| <= max_order`, grouped by rising order.
pub fn multi_indices_up_to(dim: usize, max_order: u32) -> Vec<MultiIndex> {
    (0..=max_order).flat_map(|o| multi_indices_of_order(dim, o)).collect()
}

/// All gamma in `{0,1}^dim`.
pub fn binary_multi_indices(dim: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for mask in 0..(1u32 << dim) {
        out.push(MultiIndex::new((0..dim).map(|a| (mask >> a) & 1).collect()));
    }
    out
}

fn binomial(a: u32, b: u32) -> i64 {
    let mut r: i64 = 1;
    for i in 0..b {
        r = r * (a - i) as i64 / (i + 1) as i64;
    }
    r
}

/// Signed binomial stencil of the iterated forward difference `Delta^beta`:
/// pairs `(eta, (-1)^{|beta-eta|} C(beta, eta))` over `eta <= beta`, so that
/// `(Delta^beta f)(k) = sum coeff * f(k + eta)`.
pub fn difference_stencil(beta: &MultiIndex) -> Vec<(Vec<i64>, i64)> {
    let n = beta.dim();
    let mut out = Vec::new();
    let mut eta = vec![0u32; n];
    loop {
        let coeff: i64 = eta.iter().zip(beta.entries()).map(|(&e, &b)| binomial(b, e)).product();
        let parity: u32 = beta.entries().iter().zip(&eta).map(|(&b, &e)| b - e).sum();
        let sign = if parity.is_multiple_of(2) { 1 } else { -1 };
        out.push((eta.iter().map(|&e| e as i64).collect(), sign * coeff));
        let mut axis = 0;
        loop {
            if axis == n {
                return out;
            }
            eta[axis] += 1;
            if eta[axis] <= beta.entry(axis) {
                break;
            }
            eta[axis] = 0;
            axis += 1;
        }
    }
}

/// Falling factorial `k^(alpha) = prod_j k_j (k_j - 1) ... (k_j - alpha_j + 1)`.
pub fn falling_factorial(k: &[i64], alpha: &MultiIndex) -> i64 {
    debug_assert_eq!(k.len(), alpha.dim());
    let mut prod: i64 = 1;
    for (&kj, &aj) in k.iter().zip(alpha.entries()) {
        for m in 0..aj as i64 {
            prod *= kj - m;
        }
    }
    prod
}

/// Forward transform `f_hat(x_j) = sum_k e^{-2 pi i k . x_j} f(k)`.
pub fn dft<T: Scalar>(f: &LatticeFunction<T>) -> TorusFunction<T> {
    let boxx = f.boxx;
    let roots = RootTable::<T>::new(&boxx);
    let count = boxx.point_count();
    let points: Vec<Vec<i64>> = (0..count).map(|i| boxx.point(i)).collect();
    let mut values = Vec::with_capacity(count);
    for jdx in 0..count {
        let j = boxx.freq_labels(jdx);
        let mut acc = Cplx::new(T::zero(), T::zero());
        for (kdx, k) in points.iter().enumerate() {
            let dot: i64 = k.iter().zip(&j).map(|(a, b)| a * b).sum();
            acc += roots.at(-dot) * f.values[kdx];
        }
        values.push(acc);
    }
    TorusFunction { boxx, values }
}

/// Inverse transform `f(k) = M^{-n} sum_j e^{2 pi i k . x_j} g(x_j)`, the
/// exact quadrature of the torus integral.
pub fn idft<T: Scalar>(g: &TorusFunction<T>) -> LatticeFunction<T> {
    let boxx = g.boxx;
    let roots = RootTable::<T>::new(&boxx);
    let count = boxx.point_count();
    let weight = T::one() / T::from_int(count as i64);
    let labels: Vec<Vec<i64>> = (0..count).map(|i| boxx.freq_labels(i)).collect();
    let mut values = Vec::with_capacity(count);
    for kdx in 0..count {
        let k = boxx.point(kdx);
        let mut acc = Cplx::new(T::zero(), T::zero());
        for (jdx, j) in labels.iter().enumerate() {
            let dot: i64 = k.iter().zip(j).map(|(a, b)| a * b).sum();
            acc += roots.at(dot) * g.values[jdx];
        }
        values.push(acc * weight);
    }
    LatticeFunction { boxx, values }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Single-axis difference, periodic on the box. Forward is
/// `f(k + e_a) - f(k)`, backward `f(k) - f(k - e_a)`.
pub fn difference_axis<T: Scalar>(
    f: &LatticeFunction<T>,
    axis: usize,
    dir: Direction,
) -> LatticeFunction<T> {
    let boxx = f.boxx;
    let mut out = LatticeFunction::zeros(boxx);
    for idx in 0..boxx.point_count() {
        let mut k = boxx.point(idx);
        match dir {
            Direction::Forward => k[axis] += 1,
            Direction::Backward => k[axis] -= 1,
        }
        let shifted = f.values[boxx.index_of(&k)];
        out.values[idx] = match dir {
            Direction::Forward => shifted - f.values[idx],
            Direction::Backward => f.values[idx] - shifted,
        };
    }
    out
}

/// Iterated difference `Delta^alpha` (or the backward variant), periodic.
pub fn difference<T: Scalar>(
    f: &LatticeFunction<T>,
    alpha: &MultiIndex,
    dir: Direction,
) -> Result<LatticeFunction<T>> {
    if alpha.dim() != f.boxx.dim() {
        return Err(CoreError::Mismatch(format!(
            "multi-index dimension {} does not match box dimension {}",
            alpha.dim(),
            f.boxx.dim()
        )));
    }
    let mut g = f.clone();
    for axis in 0..alpha.dim() {
        for _ in 0..alpha.entry(axis) {
            g = difference_axis(&g, axis, dir);
        }
    }
    Ok(g)
}

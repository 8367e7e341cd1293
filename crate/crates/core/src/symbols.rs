//! Sampled symbols `sigma(k, x)` and their calculus: periodic-Taylor
//! derivatives in `x`, wrapped differences in `k`, seminorm scans for the
//! weighted symbol classes, M-ellipticity, elliptic quotients, and
//! asymptotic sums glued with radial cutoffs.
//!
//! A symbol lives on one box: one complex value per (lattice point,
//! frequency point) pair, together with the weight it is estimated against
//! and a declared order `m` and regularity `rho in (0, 1/mu]`. Class
//! membership is falsifiable evidence, never a certificate: seminorms are
//! windowed sups, and "member" means they stayed finite and stable when the
//! box grew.

use crate::error::{CoreError, Result};
use crate::fit::{least_squares_slope, SlopeFit, NEGLIGIBLE_REMAINDER};
use crate::lattice::{
    binary_multi_indices, difference_stencil, falling_factorial, multi_indices_up_to, LatticeBox,
    MultiIndex, RootTable,
};
use crate::rng::SplitMix64;
use crate::scalar::{Cplx, Scalar};
use crate::weights::WeightFunction;

/// Symbol sampled on a box: `values[k_idx * P + x_idx]` with `P` the point
/// count of the box.
#[derive(Clone)]
pub struct SymbolGrid<T: Scalar> {
    boxx: LatticeBox,
    weight: WeightFunction<T>,
    order: T,
    rho: T,
    label: String,
    values: Vec<Cplx<T>>,
}

impl<T: Scalar> std::fmt::Debug for SymbolGrid<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymbolGrid")
            .field("box", &self.boxx)
            .field("order", &self.order)
            .field("rho", &self.rho)
            .field("label", &self.label)
            .finish()
    }
}

impl<T: Scalar> SymbolGrid<T> {
    /// Sample `f(k, x)` on every (lattice, frequency) pair of the box.
    pub fn sample(
        boxx: LatticeBox,
        weight: &WeightFunction<T>,
        order: T,
        rho: T,
        label: impl Into<String>,
        mut f: impl FnMut(&[i64], &[T]) -> Cplx<T>,
    ) -> Result<Self> {
        Self::check_compat(&boxx, weight, rho)?;
        let count = boxx.point_count();
        let mut values = Vec::with_capacity(count * count);
        for kdx in 0..count {
            let k = boxx.point(kdx);
            for jdx in 0..count {
                let x = boxx.frequency::<T>(jdx);
                values.push(f(&k, &x));
            }
        }
        Ok(Self { boxx, weight: weight.clone(), order, rho, label: label.into(), values })
    }

    pub fn from_values(
        boxx: LatticeBox,
        weight: &WeightFunction<T>,
        order: T,
        rho: T,
        label: impl Into<String>,
        values: Vec<Cplx<T>>,
    ) -> Result<Self> {
        Self::check_compat(&boxx, weight, rho)?;
        let count = boxx.point_count();
        if values.len() != count * count {
            return Err(CoreError::Mismatch(format!(
                "expected {} symbol samples, got {}",
                count * count,
                values.len()
            )));
        }
        Ok(Self { boxx, weight: weight.clone(), order, rho, label: label.into(), values })
    }

    fn check_compat(boxx: &LatticeBox, weight: &WeightFunction<T>, rho: T) -> Result<()> {
        if weight.dim() != boxx.dim() {
            return Err(CoreError::Mismatch(format!(
                "weight dimension {} does not match box dimension {}",
                weight.dim(),
                boxx.dim()
            )));
        }
        if rho <= T::zero() || rho > weight.rho_max() {
            return Err(CoreError::InvalidParameter(format!(
                "rho = {rho} outside (0, 1/mu] = (0, {}]",
                weight.rho_max()
            )));
        }
        Ok(())
    }

    /// The constant symbol 1 (order 0).
    pub fn one(boxx: LatticeBox, weight: &WeightFunction<T>, rho: T) -> Result<Self> {
        Self::sample(boxx, weight, T::zero(), rho, "1", |_, _| Cplx::new(T::one(), T::zero()))
    }

    /// x-independent symbol `g(k)`.
    pub fn x_independent(
        boxx: LatticeBox,
        weight: &WeightFunction<T>,
        order: T,
        rho: T,
        label: impl Into<String>,
        mut g: impl FnMut(&[i64]) -> Cplx<T>,
    ) -> Result<Self> {
        Self::sample(boxx, weight, order, rho, label, |k, _| g(k))
    }

    /// The multiplier symbol `Lambda(k)^s` of declared order `s`.
    pub fn lambda_power(boxx: LatticeBox, weight: &WeightFunction<T>, s: T) -> Result<Self> {
        let w = weight.clone();
        Self::x_independent(boxx, weight, s, weight.rho_max(), format!("Lambda^{s}"), move |k| {
            Cplx::new(w.eval(k).powf(s), T::zero())
        })
    }

    pub fn boxx(&self) -> &LatticeBox {
        &self.boxx
    }

    pub fn weight(&self) -> &WeightFunction<T> {
        &self.weight
    }

    pub fn order(&self) -> T {
        self.order
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[Cplx<T>] {
        &self.values
    }

    #[inline]
    pub fn value(&self, k_idx: usize, x_idx: usize) -> Cplx<T> {
        self.values[k_idx * self.boxx.point_count() + x_idx]
    }

    pub fn value_at(&self, k: &[i64], x_idx: usize) -> Cplx<T> {
        self.value(self.boxx.index_of(k), x_idx)
    }

    /// Same samples, different declared order (class re-declarations).
    pub fn with_order(&self, order: T) -> Self {
        let mut s = self.clone();
        s.order = order;
        s
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn conj(&self) -> Self {
        let mut s = self.clone();
        for v in &mut s.values {
            *v = v.conj();
        }
        s.label = format!("conj({})", self.label);
        s
    }

    /// Reflect the frequency variable: `sigma(k, -x)` (the grid is closed
    /// under negation).
    pub fn reflect_x(&self) -> Self {
        let count = self.boxx.point_count();
        let m = self.boxx.points_per_axis();
        let reflected: Vec<usize> = (0..count)
            .map(|jdx| {
                let j = self.boxx.freq_labels(jdx);
                let neg: Vec<i64> = j.iter().map(|&a| (-a).rem_euclid(m)).collect();
                let mut idx: i64 = 0;
                for &a in &neg {
                    idx = idx * m + a;
                }
                idx as usize
            })
            .collect();
        let mut values = Vec::with_capacity(self.values.len());
        for kdx in 0..count {
            for &rj in &reflected {
                values.push(self.value(kdx, rj));
            }
        }
        Self {
            boxx: self.boxx,
            weight: self.weight.clone(),
            order: self.order,
            rho: self.rho,
            label: format!("reflect({})", self.label),
            values,
        }
    }

    /// Shift in `k` by one step along `axis` (periodic): `sigma(k + e_a, x)`.
    pub fn shift_k(&self, axis: usize) -> Self {
        let count = self.boxx.point_count();
        let mut values = Vec::with_capacity(self.values.len());
        for kdx in 0..count {
            let mut k = self.boxx.point(kdx);
            k[axis] += 1;
            let sdx = self.boxx.index_of(&k);
            values.extend_from_slice(&self.values[sdx * count..(sdx + 1) * count]);
        }
        Self {
            boxx: self.boxx,
            weight: self.weight.clone(),
            order: self.order,
            rho: self.rho,
            label: self.label.clone(),
            values,
        }
    }

    pub fn scale(&self, c: Cplx<T>) -> Self {
        let mut s = self.clone();
        for v in &mut s.values {
            *v *= c;
        }
        s
    }

    fn assert_same_frame(&self, other: &Self) -> Result<()> {
        if self.boxx != other.boxx {
            return Err(CoreError::Mismatch("symbols live on different boxes".into()));
        }
        if self.weight.descriptor() != other.weight.descriptor() {
            return Err(CoreError::Mismatch("symbols use different weights".into()));
        }
        if self.rho != other.rho {
            return Err(CoreError::Mismatch("symbols use different rho".into()));
        }
        Ok(())
    }

    /// Pointwise sum; the declared order of a sum is the larger order.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.assert_same_frame(other)?;
        let mut s = self.clone();
        for (v, w) in s.values.iter_mut().zip(&other.values) {
            *v += *w;
        }
        s.order = self.order.max(other.order);
        s.label = format!("({} + {})", self.label, other.label);
        Ok(s)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.assert_same_frame(other)?;
        let mut s = self.clone();
        for (v, w) in s.values.iter_mut().zip(&other.values) {
            *v -= *w;
        }
        s.order = self.order.max(other.order);
        s.label = format!("({} - {})", self.label, other.label);
        Ok(s)
    }

    /// Pointwise product; orders add.
    pub fn mul_pointwise(&self, other: &Self) -> Result<Self> {
        self.assert_same_frame(other)?;
        let mut s = self.clone();
        for (v, w) in s.values.iter_mut().zip(&other.values) {
            *v *= *w;
        }
        s.order = self.order + other.order;
        s.label = format!("({} * {})", self.label, other.label);
        Ok(s)
    }

    /// Partial Fourier coefficients in the frequency variable:
    /// `sigma(k, x_j) = sum_m coeff(k, m) e^{2 pi i m . x_j}` with
    /// `m in {-K, ..., K}^n`. Computed one axis at a time (direct 1-D sums
    /// per line), so a row costs `n M^{n+1}` instead of `M^{2n}`.
    pub fn partial_fourier(&self) -> PartialFourierSymbol<T> {
        let boxx = self.boxx;
        let count = boxx.point_count();
        let n = boxx.dim();
        let m = boxx.points_per_axis() as usize;
        let hw = boxx.half_width() as usize;
        let roots = RootTable::<T>::new(&boxx);
        let minv = T::one() / T::from_int(m as i64);
        let zero = Cplx::new(T::zero(), T::zero());

        let mut coeffs = vec![zero; count * count];
        let mut buf = vec![zero; count];
        let mut line = vec![zero; m];
        for kdx in 0..count {
            buf.copy_from_slice(&self.values[kdx * count..(kdx + 1) * count]);
            for axis in 0..n {
                let stride = m.pow((n - 1 - axis) as u32);
                let block = stride * m;
                for base in (0..count).step_by(block) {
                    for off in 0..stride {
                        for (j, l) in line.iter_mut().enumerate() {
                            *l = buf[base + off + j * stride];
                        }
                        for q in 0..m {
                            let mut acc = zero;
                            for (j, v) in line.iter().enumerate() {
                                acc += roots.at(-((q * j) as i64)) * *v;
                            }
                            buf[base + off + q * stride] = acc * minv;
                        }
                    }
                }
            }
            // Axis label q in {0..M-1} carries the mode wrap(q); the
            // lattice-style enumeration stores mode m_i at slot
            // (m_i + K) = (q + K) mod M per axis.
            let out = &mut coeffs[kdx * count..(kdx + 1) * count];
            for (idx, v) in buf.iter().enumerate() {
                let mut src = idx;
                let mut dst = 0usize;
                let mut digits = vec![0usize; n];
                for a in (0..n).rev() {
                    digits[a] = src % m;
                    src /= m;
                }
                for d in digits {
                    dst = dst * m + (d + hw) % m;
                }
                out[dst] = *v;
            }
        }
        PartialFourierSymbol { boxx, coeffs }
    }

    /// Per-k sup over the sampled frequencies of `|sigma(k, .)|`.
    pub fn sup_x_profile(&self) -> Vec<T> {
        let count = self.boxx.point_count();
        (0..count)
            .map(|kdx| {
                self.values[kdx * count..(kdx + 1) * count]
                    .iter()
                    .fold(T::zero(), |m, v| m.max(v.norm()))
            })
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }
}

/// Partial Fourier transform of a symbol in the frequency variable.
pub struct PartialFourierSymbol<T: Scalar> {
    boxx: LatticeBox,
    /// `coeffs[k_idx * P + m_idx]`, `m` enumerated like lattice points.
    coeffs: Vec<Cplx<T>>,
}

impl<T: Scalar> PartialFourierSymbol<T> {
    pub fn boxx(&self) -> &LatticeBox {
        &self.boxx
    }

    #[inline]
    pub fn coeff(&self, k_idx: usize, m_idx: usize) -> Cplx<T> {
        self.coeffs[k_idx * self.boxx.point_count() + m_idx]
    }

    pub fn coeff_at(&self, k_idx: usize, m: &[i64]) -> Cplx<T> {
        self.coeff(k_idx, self.boxx.index_of(m))
    }

    /// Snap coefficients at rounding-noise level (relative to the largest
    /// coefficient of the same `k` row) to exact zero. Derivative
    /// multipliers grow with the box, so without this the spectrally zero
    /// modes of band-limited symbols would re-enter scaled by `m^(beta)` and
    /// masquerade as seminorm instability.
    pub fn cleaned(mut self, rel_threshold: T) -> Self {
        let count = self.boxx.point_count();
        for kdx in 0..count {
            let row = &mut self.coeffs[kdx * count..(kdx + 1) * count];
            let rowmax = row.iter().fold(T::zero(), |m, c| m.max(c.norm()));
            let thr = rowmax * rel_threshold;
            for c in row {
                if c.norm() <= thr {
                    *c = Cplx::new(T::zero(), T::zero());
                }
            }
        }
        self
    }

    /// Resynthesize samples after scaling mode `m` by `factor(m)`.
    pub fn synthesize_scaled(&self, mut factor: impl FnMut(&[i64]) -> T) -> Vec<Cplx<T>> {
        let boxx = self.boxx;
        let count = boxx.point_count();
        let roots = RootTable::<T>::new(&boxx);
        let modes: Vec<Vec<i64>> = (0..count).map(|i| boxx.point(i)).collect();
        let factors: Vec<T> = modes.iter().map(|m| factor(m)).collect();
        let labels: Vec<Vec<i64>> = (0..count).map(|i| boxx.freq_labels(i)).collect();
        let mut values = Vec::with_capacity(count * count);
        for kdx in 0..count {
            let row = &self.coeffs[kdx * count..(kdx + 1) * count];
            // Band-limited (or cleaned) rows are mostly zero; sum only the
            // live modes.
            let live: Vec<usize> = (0..count)
                .filter(|&mdx| factors[mdx] != T::zero() && row[mdx].norm_sqr() != T::zero())
                .collect();
            for j in &labels {
                let mut acc = Cplx::new(T::zero(), T::zero());
                for &mdx in &live {
                    let dot: i64 = modes[mdx].iter().zip(j).map(|(a, b)| a * b).sum();
                    acc += roots.at(dot) * row[mdx] * factors[mdx];
                }
                values.push(acc);
            }
        }
        values
    }
}

/// Falling derivative `D_x^(beta)`: on the mode `e^{2 pi i m . x}` it
/// multiplies by the falling factorial `m^(beta)`, so it is applied
/// spectrally. This is the derivative adapted to periodic Taylor expansion;
/// expansions in it terminate on band-limited symbols because `m^(beta) = 0`
/// for `0 <= m < beta`.
pub fn dx_falling_derivative<T: Scalar>(sigma: &SymbolGrid<T>, beta: &MultiIndex) -> SymbolGrid<T> {
    let pf = sigma.partial_fourier();
    dx_falling_from_pf(sigma, &pf, beta)
}

/// Same as [`dx_falling_derivative`] but reusing an already computed
/// partial Fourier transform.
pub fn dx_falling_from_pf<T: Scalar>(
    sigma: &SymbolGrid<T>,
    pf: &PartialFourierSymbol<T>,
    beta: &MultiIndex,
) -> SymbolGrid<T> {
    let values = pf.synthesize_scaled(|m| T::from_int(falling_factorial(m, beta)));
    SymbolGrid {
        boxx: sigma.boxx,
        weight: sigma.weight.clone(),
        order: sigma.order,
        rho: sigma.rho,
        label: format!("D^({:?}){}", beta.entries(), sigma.label),
        values,
    }
}

/// Plain iterated derivative `D_x^beta` (the first-order operator applied
/// `beta_j` times per axis): spectral multiplier `prod m_j^{beta_j}`.
pub fn dx_plain_pow<T: Scalar>(sigma: &SymbolGrid<T>, beta: &MultiIndex) -> SymbolGrid<T> {
    let pf = sigma.partial_fourier();
    let values = pf.synthesize_scaled(|m| {
        let mut f = T::one();
        for (&mj, &bj) in m.iter().zip(beta.entries()) {
            for _ in 0..bj {
                f *= T::from_int(mj);
            }
        }
        f
    });
    SymbolGrid {
        boxx: sigma.boxx,
        weight: sigma.weight.clone(),
        order: sigma.order,
        rho: sigma.rho,
        label: format!("D^{:?}{}", beta.entries(), sigma.label),
        values,
    }
}

/// Forward difference in `k` along one axis, periodic on the box.
pub fn delta_k_axis<T: Scalar>(sigma: &SymbolGrid<T>, axis: usize) -> SymbolGrid<T> {
    let shifted = sigma.shift_k(axis);
    let mut out = sigma.clone();
    for (v, s) in out.values.iter_mut().zip(&shifted.values) {
        *v = *s - *v;
    }
    out
}

/// Iterated forward difference `Delta_k^alpha sigma`, periodic.
pub fn delta_k<T: Scalar>(sigma: &SymbolGrid<T>, alpha: &MultiIndex) -> SymbolGrid<T> {
    let mut g = sigma.clone();
    for axis in 0..alpha.dim() {
        for _ in 0..alpha.entry(axis) {
            g = delta_k_axis(&g, axis);
        }
    }
    g
}

/// `k^gamma Delta_k^{alpha+gamma} sigma` with `gamma in {0,1}^n`; the symbol
/// expression probed by the Taylor-class seminorms. Declared order drops to
/// `m - rho |alpha|`.
pub fn delta_k_symbol<T: Scalar>(
    sigma: &SymbolGrid<T>,
    alpha: &MultiIndex,
    gamma: &MultiIndex,
) -> Result<SymbolGrid<T>> {
    if !gamma.is_binary() {
        return Err(CoreError::InvalidParameter(format!(
            "gamma must lie in {{0,1}}^n, got {:?}",
            gamma.entries()
        )));
    }
    if alpha.dim() != sigma.boxx.dim() || gamma.dim() != sigma.boxx.dim() {
        return Err(CoreError::Mismatch("multi-index dimension mismatch".into()));
    }
    let mut g = delta_k(sigma, &alpha.add(gamma));
    let count = g.boxx.point_count();
    for kdx in 0..count {
        let k = g.boxx.point(kdx);
        let mut factor = T::one();
        for (c, &gj) in k.iter().zip(gamma.entries()) {
            if gj == 1 {
                factor *= T::from_int(*c);
            }
        }
        if factor != T::one() {
            for v in &mut g.values[kdx * count..(kdx + 1) * count] {
                *v *= factor;
            }
        }
    }
    g.order = sigma.order - sigma.rho * T::from_int(alpha.order() as i64);
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Which class memberships a report should judge.
#[derive(Debug, Clone, Copy)]
pub struct ClassVariants {
    pub hoermander: bool,
    pub taylor: bool,
    pub vanishing: bool,
}

impl Default for ClassVariants {
    fn default() -> Self {
        Self { hoermander: true, taylor: true, vanishing: true }
    }
}

/// One scanned seminorm `C_{alpha,beta,gamma}` across the supplied boxes.
#[derive(Debug, Clone)]
pub struct SeminormEntry<T> {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    pub gamma: MultiIndex,
    /// Interior sup per box, in the order the grids were supplied.
    pub constants: Vec<T>,
    /// Sup over the outer annulus `|k|_inf >= K/2` of the largest box.
    pub tail: T,
    /// Sup over the bulk `|k|_inf <= K/4` of the largest box.
    pub bulk: T,
}

/// Seminorm table and membership verdicts for one symbol.
#[derive(Debug, Clone)]
pub struct ClassReport<T> {
    pub order: T,
    pub rho: T,
    /// `n (1/mu0 - rho)`: the order gap that forces Taylor-class membership.
    pub n0: T,
    pub box_sizes: Vec<i64>,
    pub entries: Vec<SeminormEntry<T>>,
    /// Membership in the plain weighted class (gamma = 0 seminorms only).
    pub hoermander: Verdict,
    /// Membership in the Taylor subclass (all gamma in {0,1}^n).
    pub taylor: Verdict,
    /// Taylor subclass with constants vanishing at infinity.
    pub vanishing: Verdict,
}

const STABILITY_FACTOR: f64 = 1.05;

/// Relative per-row threshold under which a partial Fourier coefficient is
/// rounding noise rather than a mode.
pub const MODE_NOISE_THRESHOLD: f64 = 1e-13;

/// Additive stability slack relative to the symbol magnitude: seminorm
/// values this far down are accumulated roundoff, not measurements.
const SEMINORM_NOISE_REL: f64 = 1e-11;

fn stable<T: Scalar>(constants: &[T], floor: T) -> bool {
    let tol = T::lit(STABILITY_FACTOR);
    constants.windows(2).all(|w| w[1].is_finite() && w[1] <= w[0] * tol + floor)
        && constants.iter().all(|c| c.is_finite())
}

/// Scan the class seminorms of one symbol sampled on one or more boxes
/// (same weight, order, rho; ascending sizes). With a single box the
/// stability half of the verdict cannot be judged and comes back
/// `Inconclusive`.
pub fn class_report<T: Scalar>(
    grids: &[&SymbolGrid<T>],
    alpha_max: u32,
    beta_max: u32,
    variants: ClassVariants,
) -> Result<ClassReport<T>> {
    let first = *grids.first().ok_or_else(|| {
        CoreError::InvalidParameter("class report needs at least one sampled box".into())
    })?;
    if alpha_max > 4 || beta_max > 4 {
        return Err(CoreError::InvalidParameter(
            "seminorm scans support alpha_max, beta_max <= 4".into(),
        ));
    }
    let n = first.boxx.dim();
    for pair in grids.windows(2) {
        if pair[0].boxx.dim() != pair[1].boxx.dim()
            || pair[0].boxx.half_width() >= pair[1].boxx.half_width()
        {
            return Err(CoreError::InvalidParameter(
                "grids must share a dimension and come in ascending box sizes".into(),
            ));
        }
        pair[0].assert_same_frame_loose(pair[1])?;
    }
    let stencil = alpha_max as i64 + 1;
    for g in grids {
        if g.boxx.half_width() < 2 * stencil {
            return Err(CoreError::InvalidParameter(format!(
                "box half-width {} too small for alpha_max {} (needs >= {})",
                g.boxx.half_width(),
                alpha_max,
                2 * stencil
            )));
        }
    }

    let alphas = multi_indices_up_to(n, alpha_max);
    let betas = multi_indices_up_to(n, beta_max);
    let gammas = binary_multi_indices(n);

    let mut entries: Vec<SeminormEntry<T>> = Vec::new();
    for alpha in &alphas {
        for beta in &betas {
            for gamma in &gammas {
                entries.push(SeminormEntry {
                    alpha: alpha.clone(),
                    beta: beta.clone(),
                    gamma: gamma.clone(),
                    constants: Vec::with_capacity(grids.len()),
                    tail: T::zero(),
                    bulk: T::zero(),
                });
            }
        }
    }

    for (gi, grid) in grids.iter().enumerate() {
        let boxx = grid.boxx;
        let count = boxx.point_count();
        let hw = boxx.half_width();
        let last = gi + 1 == grids.len();
        let pf = grid.partial_fourier().cleaned(T::lit(MODE_NOISE_THRESHOLD));
        // Scale factors Lambda(k)^{m - rho |alpha|} per point, per |alpha|.
        let lam: Vec<T> = (0..count).map(|kdx| grid.weight.eval(&boxx.point(kdx))).collect();

        // One spectral derivative per beta; the k-side probes walk its
        // samples directly through the binomial stencil of Delta^{alpha+gamma}
        // instead of materializing intermediate grids.
        let dx_grids: Vec<(SymbolGrid<T>, bool)> = betas
            .iter()
            .map(|beta| {
                let g = dx_falling_from_pf(grid, &pf, beta);
                let dead = g.max_abs() == T::zero();
                (g, dead)
            })
            .collect();
        let points: Vec<Vec<i64>> = (0..count).map(|i| boxx.point(i)).collect();

        let mut entry_idx = 0;
        for alpha in &alphas {
            let drop = grid.order - grid.rho * T::from_int(alpha.order() as i64);
            let scales: Vec<T> = lam.iter().map(|l| l.powf(drop)).collect();
            for (dxg, dead) in &dx_grids {
                for gamma in &gammas {
                    if *dead {
                        let e = &mut entries[entry_idx];
                        e.constants.push(T::zero());
                        entry_idx += 1;
                        continue;
                    }
                    let step = alpha.add(gamma);
                    let stencil = difference_stencil(&step);
                    let step_vec: Vec<i64> =
                        step.entries().iter().map(|&e| e as i64).collect();
                    let mut interior_max = T::zero();
                    let mut tail = T::zero();
                    let mut bulk = T::zero();
                    for kdx in 0..count {
                        let k = &points[kdx];
                        let is_interior = boxx.is_interior(k);
                        let inf = LatticeBox::norm_inf(k);
                        let in_bulk = last && inf <= hw / 4;
                        let in_tail =
                            last && inf >= hw / 2 && boxx.stencil_safe(k, &step_vec);
                        if !(is_interior || in_bulk || in_tail) {
                            continue;
                        }
                        let mut kg = T::one();
                        for (c, &gj) in k.iter().zip(gamma.entries()) {
                            if gj == 1 {
                                kg *= T::from_int(*c);
                            }
                        }
                        let rows: Vec<(usize, T)> = stencil
                            .iter()
                            .map(|(eta, coeff)| {
                                let shifted: Vec<i64> =
                                    k.iter().zip(eta).map(|(&c, &e)| c + e).collect();
                                (boxx.index_of(&shifted) * count, T::from_int(*coeff))
                            })
                            .collect();
                        let mut sup = T::zero();
                        for jdx in 0..count {
                            let mut acc = Cplx::new(T::zero(), T::zero());
                            for (base, coeff) in &rows {
                                acc += dxg.values[base + jdx] * *coeff;
                            }
                            sup = sup.max(acc.norm());
                        }
                        let ratio = kg.abs() * sup / scales[kdx];
                        if is_interior {
                            interior_max = interior_max.max(ratio);
                        }
                        if in_bulk {
                            bulk = bulk.max(ratio);
                        }
                        if in_tail {
                            tail = tail.max(ratio);
                        }
                    }
                    let e = &mut entries[entry_idx];
                    e.constants.push(interior_max);
                    if last {
                        e.tail = tail;
                        e.bulk = bulk;
                    }
                    entry_idx += 1;
                }
            }
        }
    }

    let single = grids.len() == 1;
    let floor = T::lit(SEMINORM_NOISE_REL)
        * grids.iter().fold(T::one(), |m, g| m.max(g.max_abs()));
    let judge = |use_gamma: bool| -> Verdict {
        let relevant = entries.iter().filter(|e| use_gamma || e.gamma.order() == 0);
        let mut ok = true;
        for e in relevant {
            if !stable(&e.constants, floor) {
                ok = false;
                break;
            }
        }
        if !ok {
            Verdict::Fail
        } else if single {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    };

    let hoermander = if variants.hoermander { judge(false) } else { Verdict::Inconclusive };
    let taylor = if variants.taylor { judge(true) } else { Verdict::Inconclusive };
    let vanishing = if variants.vanishing {
        let half = T::lit(0.5);
        let decays = entries.iter().all(|e| e.tail <= half * e.bulk + floor);
        if !decays {
            Verdict::Fail
        } else {
            taylor
        }
    } else {
        Verdict::Inconclusive
    };

    Ok(ClassReport {
        order: first.order,
        rho: first.rho,
        n0: T::from_int(n as i64) * (T::one() / first.weight.mu0() - first.rho),
        box_sizes: grids.iter().map(|g| g.boxx.half_width()).collect(),
        entries,
        hoermander,
        taylor,
        vanishing,
    })
}

impl<T: Scalar> SymbolGrid<T> {
    /// Frame check that tolerates different boxes (used across box sizes).
    fn assert_same_frame_loose(&self, other: &Self) -> Result<()> {
        if self.weight.descriptor() != other.weight.descriptor() {
            return Err(CoreError::Mismatch("symbols use different weights".into()));
        }
        if self.rho != other.rho || self.order != other.order {
            return Err(CoreError::Mismatch("symbols declare different (order, rho)".into()));
        }
        Ok(())
    }
}

/// Threshold below which a measured ellipticity constant counts as zero.
pub const ELLIPTICITY_THRESHOLD: f64 = 1e-9;

/// Frequency-grid refinement used when taking the infimum over the torus:
/// the symbol's band-limited interpolant is evaluated on an 8x finer grid,
/// which in particular contains `x = 1/2` where sampled grids (odd M) have
/// no point.
pub const ELLIPTICITY_OVERSAMPLING: i64 = 8;

#[derive(Debug, Clone, Copy)]
pub struct EllipticityReport<T> {
    /// `inf |sigma(k,x)| / Lambda(k)^m` over `|k| >= r1` and the refined grid.
    pub constant: T,
    pub r1: T,
    pub elliptic: bool,
}

/// Measure the M-ellipticity constant `C = inf_{|k| >= R1, x} |sigma| / Lambda^m`.
///
/// The infimum over the torus is taken on the oversampled grid of the
/// band-limited interpolant, so zeros lying between sample points (such as
/// `1 + e^{2 pi i x}` at `x = 1/2`) are detected.
pub fn m_ellipticity<T: Scalar>(sigma: &SymbolGrid<T>, r1: T) -> Result<EllipticityReport<T>> {
    let boxx = sigma.boxx;
    if r1 < T::zero() || r1 >= T::from_int(boxx.half_width()) {
        return Err(CoreError::InvalidParameter(format!(
            "R1 = {r1} must lie in [0, K = {})",
            boxx.half_width()
        )));
    }
    let count = boxx.point_count();
    let pf = sigma.partial_fourier();
    let m = boxx.points_per_axis();
    let fine = ELLIPTICITY_OVERSAMPLING * m;
    let fine_roots: Vec<Cplx<T>> = (0..fine)
        .map(|r| crate::scalar::unit_phase(T::from_int(r) / T::from_int(fine)))
        .collect();
    let n = boxx.dim();
    let modes: Vec<Vec<i64>> = (0..count).map(|i| boxx.point(i)).collect();

    let mut constant = T::infinity();
    for kdx in 0..count {
        let k = boxx.point(kdx);
        if LatticeBox::norm_euclid::<T>(&k) < r1 {
            continue;
        }
        let scale = sigma.weight.eval(&k).powf(sigma.order);
        // Walk the oversampled frequency grid with an odometer.
        let mut j = vec![0i64; n];
        loop {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for (mdx, mo) in modes.iter().enumerate() {
                let c = pf.coeff(kdx, mdx);
                if c.norm_sqr() == T::zero() {
                    continue;
                }
                let dot: i64 = mo
                    .iter()
                    .zip(&j)
                    .map(|(a, b)| (a * b).rem_euclid(fine))
                    .sum();
                acc += fine_roots[(dot % fine) as usize] * c;
            }
            constant = constant.min(acc.norm() / scale);

            let mut axis = n;
            let mut done = true;
            while axis > 0 {
                axis -= 1;
                j[axis] += 1;
                if j[axis] < fine {
                    done = false;
                    break;
                }
                j[axis] = 0;
            }
            if done {
                break;
            }
        }
    }
    Ok(EllipticityReport {
        constant,
        r1,
        elliptic: constant > T::lit(ELLIPTICITY_THRESHOLD),
    })
}

/// Numerator / denominator pair representing `D_x^beta Delta_k^alpha (sigma/tau)`.
#[derive(Debug, Clone)]
pub struct QuotientEntry<T: Scalar> {
    pub alpha: MultiIndex,
    pub beta: MultiIndex,
    pub numerator: SymbolGrid<T>,
    pub denominator: SymbolGrid<T>,
}

/// Recursion table of quotient derivatives. Each entry satisfies
/// `D_x^beta Delta_k^alpha (sigma/tau) = numerator / denominator`
/// pointwise, where `D_x^beta` is the first-order derivative applied
/// entrywise (the single-step rules combine elementary quotient rules, so
/// iterated application yields plain powers; for `beta in {0,1}^n` this
/// coincides with the falling derivative).
#[derive(Debug, Clone)]
pub struct QuotientTable<T: Scalar> {
    pub entries: Vec<QuotientEntry<T>>,
    /// Largest relative pointwise error of the verification identity.
    pub max_check_error: T,
}

/// Quotient of two M-elliptic symbols with the derivative/difference
/// recursion table, verified pointwise against direct evaluation.
pub fn quotient_symbol<T: Scalar>(
    sigma: &SymbolGrid<T>,
    tau: &SymbolGrid<T>,
    alpha_max: u32,
    beta_max: u32,
    r1: T,
) -> Result<(SymbolGrid<T>, QuotientTable<T>)> {
    sigma.assert_same_frame(tau)?;
    if alpha_max > 4 || beta_max > 4 {
        return Err(CoreError::InvalidParameter(
            "quotient tables support alpha_max, beta_max <= 4 (denominators square per step)".into(),
        ));
    }
    let ell = m_ellipticity(tau, r1)?;
    if !ell.elliptic {
        return Err(CoreError::NotElliptic { constant: ell.constant.as_f64() });
    }
    let boxx = sigma.boxx;
    let count = boxx.point_count();
    for kdx in 0..count {
        for jdx in 0..count {
            if tau.value(kdx, jdx).norm() == T::zero() {
                return Err(CoreError::ZeroDenominator { point: boxx.point(kdx), x_index: jdx });
            }
        }
    }

    let mut quotient = sigma.clone();
    for (v, w) in quotient.values.iter_mut().zip(&tau.values) {
        *v /= *w;
    }
    quotient.order = sigma.order - tau.order;
    quotient.label = format!("({})/({})", sigma.label, tau.label);

    // Build the table over |alpha| <= alpha_max, |beta| <= beta_max along a
    // canonical path: raise alpha axis by axis, then beta.
    let n = boxx.dim();
    let mut table: std::collections::BTreeMap<(MultiIndex, MultiIndex), (SymbolGrid<T>, SymbolGrid<T>)> =
        std::collections::BTreeMap::new();
    table.insert(
        (MultiIndex::zero(n), MultiIndex::zero(n)),
        (sigma.clone(), tau.clone()),
    );

    let alphas = multi_indices_up_to(n, alpha_max);
    let betas = multi_indices_up_to(n, beta_max);
    for alpha in &alphas {
        for beta in &betas {
            if table.contains_key(&(alpha.clone(), beta.clone())) {
                continue;
            }
            // Find the predecessor: lower the last raised index.
            let (pred_a, pred_b, axis, is_beta) = if beta.order() > 0 {
                let axis = (0..n).rev().find(|&a| beta.entry(a) > 0).expect("nonzero");
                let mut e = beta.entries().to_vec();
                e[axis] -= 1;
                (alpha.clone(), MultiIndex::new(e), axis, true)
            } else {
                let axis = (0..n).rev().find(|&a| alpha.entry(a) > 0).expect("nonzero");
                let mut e = alpha.entries().to_vec();
                e[axis] -= 1;
                (MultiIndex::new(e), beta.clone(), axis, false)
            };
            let (num, den) = table.get(&(pred_a, pred_b)).expect("built in order").clone();
            let (num2, den2) = if is_beta {
                // D_{x_i}(num/den) = (den D num - num D den) / den^2.
                let unit = MultiIndex::unit(n, axis);
                let dnum = dx_plain_pow(&num, &unit);
                let dden = dx_plain_pow(&den, &unit);
                let new_num = den.mul_pointwise(&dnum)?.sub(&num.mul_pointwise(&dden)?)?;
                let new_den = den.mul_pointwise(&den)?;
                (new_num, new_den)
            } else {
                // Delta_{k_j}(num/den) = (den Dnum - num Dden)/(den den(.+e_j)).
                let dnum = delta_k_axis(&num, axis);
                let dden = delta_k_axis(&den, axis);
                let new_num = den.mul_pointwise(&dnum)?.sub(&num.mul_pointwise(&dden)?)?;
                let new_den = den.mul_pointwise(&den.shift_k(axis))?;
                (new_num, new_den)
            };
            table.insert((alpha.clone(), beta.clone()), (num2, den2));
        }
    }

    // Verify the table against direct evaluation on the quotient.
    let mut max_err = T::zero();
    let mut entries = Vec::new();
    for alpha in &alphas {
        for beta in &betas {
            let (num, den) = table.get(&(alpha.clone(), beta.clone())).expect("built").clone();
            let direct = dx_plain_pow(&delta_k(&quotient, alpha), beta);
            // Entries that vanish identically still carry spectral rounding
            // noise on both sides; measure against the quotient magnitude.
            let scale = direct.max_abs().max(quotient.max_abs()).max(T::one());
            for idx in 0..num.values.len() {
                let d = den.values[idx];
                if d.norm() == T::zero() {
                    return Err(CoreError::ZeroDenominator {
                        point: boxx.point(idx / count),
                        x_index: idx % count,
                    });
                }
                let err = (num.values[idx] / d - direct.values[idx]).norm() / scale;
                max_err = max_err.max(err);
            }
            entries.push(QuotientEntry {
                alpha: alpha.clone(),
                beta: beta.clone(),
                numerator: num,
                denominator: den,
            });
        }
    }
    if max_err > T::lit(1e-10) {
        return Err(CoreError::CheckFailed(format!(
            "quotient recursion table disagrees with direct differentiation ({} relative)",
            max_err.as_f64()
        )));
    }
    Ok((quotient, QuotientTable { entries, max_check_error: max_err }))
}

/// Smooth transition `h(s) = e^{-1/s}` for `s > 0`, else 0.
fn smooth_step_kernel<T: Scalar>(s: T) -> T {
    if s > T::zero() {
        (-s.recip()).exp()
    } else {
        T::zero()
    }
}

/// Rising radial cutoff: 0 for `t <= 1/2`, 1 for `t >= 1`, smooth between.
pub fn cutoff_rise<T: Scalar>(t: T) -> T {
    let a = smooth_step_kernel(T::lit(2.0) * t - T::one());
    let b = smooth_step_kernel(T::lit(2.0) - T::lit(2.0) * t);
    if a == T::zero() {
        T::zero()
    } else {
        a / (a + b)
    }
}

/// Falling radial cutoff: 1 for `t <= 1`, 0 for `t >= 2`, smooth between.
pub fn cutoff_fall<T: Scalar>(t: T) -> T {
    let a = smooth_step_kernel(T::lit(2.0) - t);
    let b = smooth_step_kernel(t - T::one());
    if a == T::zero() {
        T::zero()
    } else {
        a / (a + b)
    }
}

/// Terms and scales of an asymptotic sum `sigma ~ sum_j sigma_j` with
/// strictly decreasing orders. Each term `sigma_j` enters through the
/// cutoff `phi(eps_j |k|)` where `phi` is [`cutoff_rise`] of the Euclidean
/// norm; the default scale sequence is `eps_j = 2^{-j}`.
pub struct AsymptoticSumPlan<T: Scalar> {
    terms: Vec<SymbolGrid<T>>,
    epsilons: Vec<T>,
}

impl<T: Scalar> AsymptoticSumPlan<T> {
    pub fn new(terms: Vec<SymbolGrid<T>>) -> Result<Self> {
        let epsilons = (0..terms.len()).map(|j| T::lit(0.5).powi(j as i32)).collect();
        Self::with_epsilons(terms, epsilons)
    }

    pub fn with_epsilons(terms: Vec<SymbolGrid<T>>, epsilons: Vec<T>) -> Result<Self> {
        if terms.is_empty() {
            return Err(CoreError::InvalidParameter("asymptotic sum needs terms".into()));
        }
        if epsilons.len() != terms.len() {
            return Err(CoreError::Mismatch("one scale per term required".into()));
        }
        for pair in terms.windows(2) {
            pair[0].assert_same_frame(&pair[1])?;
            if pair[1].order >= pair[0].order {
                return Err(CoreError::InvalidParameter(
                    "term orders must be strictly decreasing".into(),
                ));
            }
        }
        if epsilons.iter().any(|&e| e <= T::zero()) {
            return Err(CoreError::InvalidParameter("scales must be positive".into()));
        }
        for pair in epsilons.windows(2) {
            if pair[1] >= pair[0] {
                return Err(CoreError::InvalidParameter(
                    "scales must be strictly decreasing".into(),
                ));
            }
        }
        Ok(Self { terms, epsilons })
    }

    pub fn terms(&self) -> &[SymbolGrid<T>] {
        &self.terms
    }

    /// Plain partial sum `sum_{j<n} sigma_j` (no cutoffs); the tail after it
    /// should live at the order of the first omitted term.
    pub fn partial_sum(&self, n: usize) -> Result<SymbolGrid<T>> {
        let template = &self.terms[0];
        let mut acc = SymbolGrid {
            boxx: template.boxx,
            weight: template.weight.clone(),
            order: template.order,
            rho: template.rho,
            label: format!("partial_sum_{n}"),
            values: vec![Cplx::new(T::zero(), T::zero()); template.values.len()],
        };
        for term in self.terms.iter().take(n) {
            acc = acc.add(term)?;
        }
        acc.order = if n < self.terms.len() { self.terms[n].order } else { template.order };
        acc.label = format!("partial_sum_{n}");
        Ok(acc)
    }
}

/// Glue the plan's terms into a single symbol
/// `sigma(k, x) = sum_j phi(eps_j |k|) sigma_j(k, x)` of the leading order.
pub fn asymptotic_sum<T: Scalar>(plan: &AsymptoticSumPlan<T>) -> SymbolGrid<T> {
    let template = &plan.terms[0];
    let boxx = template.boxx;
    let count = boxx.point_count();
    let mut values = vec![Cplx::new(T::zero(), T::zero()); template.values.len()];
    for (term, &eps) in plan.terms.iter().zip(&plan.epsilons) {
        for kdx in 0..count {
            let k = boxx.point(kdx);
            let phi = cutoff_rise(eps * LatticeBox::norm_euclid::<T>(&k));
            if phi == T::zero() {
                continue;
            }
            for jdx in 0..count {
                values[kdx * count + jdx] += term.values[kdx * count + jdx] * phi;
            }
        }
    }
    SymbolGrid {
        boxx,
        weight: template.weight.clone(),
        order: template.order,
        rho: template.rho,
        label: "asymptotic_sum".into(),
        values,
    }
}

/// Fit the decay of `sup_x |sigma(k, .)|` against `log Lambda(k)` over the
/// interior annulus `K/8 <= |k|_inf <= K/2`. Values that have collapsed to
/// rounding noise produce `slope: None` with the recorded magnitude.
pub fn remainder_slope<T: Scalar>(sigma: &SymbolGrid<T>) -> SlopeFit<T> {
    remainder_slope_scaled(sigma, T::one())
}

/// [`remainder_slope`] with the negligibility floor scaled by a reference
/// magnitude (the size of the quantities the remainder was subtracted from).
pub fn remainder_slope_scaled<T: Scalar>(sigma: &SymbolGrid<T>, reference: T) -> SlopeFit<T> {
    let boxx = sigma.boxx;
    let hw = boxx.half_width();
    let sup = sigma.sup_x_profile();
    let floor = T::lit(NEGLIGIBLE_REMAINDER) * reference.max(T::one());
    let mut pts = Vec::new();
    let mut max_abs = T::zero();
    for kdx in 0..boxx.point_count() {
        let k = boxx.point(kdx);
        let inf = LatticeBox::norm_inf(&k);
        if inf < hw / 8 || inf > hw / 2 {
            continue;
        }
        max_abs = max_abs.max(sup[kdx]);
        if sup[kdx] > floor {
            pts.push((sigma.weight.eval(&k).ln(), sup[kdx].ln()));
        }
    }
    if max_abs <= floor {
        return SlopeFit { slope: None, points: pts.len(), max_abs, negligible: true };
    }
    SlopeFit { slope: least_squares_slope(&pts), points: pts.len(), max_abs, negligible: false }
}

/// Band-limited random symbol: modes `|m|_inf <= x_degree` with uniform
/// complex coefficients drawn per lattice point. Declared order 0.
pub fn random_trig_symbol<T: Scalar>(
    boxx: LatticeBox,
    weight: &WeightFunction<T>,
    rng: &mut SplitMix64,
    x_degree: i64,
) -> Result<SymbolGrid<T>> {
    let d = x_degree.min(boxx.half_width());
    let count = boxx.point_count();
    let n = boxx.dim();
    let roots = RootTable::<T>::new(&boxx);
    // Enumerate modes with an odometer over {-d, ..., d}^n.
    let mut modes: Vec<Vec<i64>> = Vec::new();
    let mut m = vec![-d; n];
    loop {
        modes.push(m.clone());
        let mut axis = n;
        let mut done = true;
        while axis > 0 {
            axis -= 1;
            m[axis] += 1;
            if m[axis] <= d {
                done = false;
                break;
            }
            m[axis] = -d;
        }
        if done {
            break;
        }
    }
    let coeffs: Vec<Vec<Cplx<T>>> = modes
        .iter()
        .map(|_| (0..count).map(|_| rng.complex()).collect())
        .collect();
    let mut values = vec![Cplx::new(T::zero(), T::zero()); count * count];
    for kdx in 0..count {
        for jdx in 0..count {
            let j = boxx.freq_labels(jdx);
            let mut acc = Cplx::new(T::zero(), T::zero());
            for (mi, mo) in modes.iter().enumerate() {
                let dot: i64 = mo.iter().zip(&j).map(|(a, b)| a * b).sum();
                acc += roots.at(dot) * coeffs[mi][kdx];
            }
            values[kdx * count + jdx] = acc;
        }
    }
    SymbolGrid::from_values(boxx, weight, T::zero(), weight.rho_max(), "random", values)
}

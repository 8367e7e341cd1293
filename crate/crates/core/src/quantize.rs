//! Quantization: materialize symbols as operator kernels on the box, apply
//! them, and run the symbolic calculus — composition, adjoint, transpose,
//! lattice/toroidal duality, and the parametrix of M-elliptic symbols.
//!
//! The exact composed / adjoint / transposed symbols are defined through
//! kernel algebra on the truncated box (matrix product, conjugate transpose,
//! transpose, then back to a symbol). On the box these coincide with the
//! discrete quantization sums, and they serve as the oracle every asymptotic
//! expansion is measured against, so expansion truncation and lattice
//! truncation never blur together.

use crate::error::{CoreError, Result};
use crate::fit::SlopeFit;
use crate::lattice::{LatticeBox, LatticeFunction, MultiIndex, RootTable};
use crate::matrix::CMatrix;
use crate::scalar::{Cplx, Scalar};
use crate::lattice::multi_indices_up_to;
use crate::symbols::{
    delta_k, dx_falling_from_pf, m_ellipticity, remainder_slope_scaled, SymbolGrid,
    MODE_NOISE_THRESHOLD,
};
use crate::weights::WeightFunction;

/// A pseudo-difference operator materialized as its kernel matrix
/// `(T f)(k) = sum_l K(k, l) f(l)` on the box.
#[derive(Debug, Clone)]
pub struct OperatorMatrix<T: Scalar> {
    boxx: LatticeBox,
    kernel: CMatrix<T>,
    provenance: String,
}

impl<T: Scalar> OperatorMatrix<T> {
    pub fn new(boxx: LatticeBox, kernel: CMatrix<T>, provenance: impl Into<String>) -> Result<Self> {
        let count = boxx.point_count();
        if kernel.rows() != count || kernel.cols() != count {
            return Err(CoreError::Mismatch(format!(
                "kernel is {}x{}, box has {count} points",
                kernel.rows(),
                kernel.cols()
            )));
        }
        Ok(Self { boxx, kernel, provenance: provenance.into() })
    }

    pub fn boxx(&self) -> &LatticeBox {
        &self.boxx
    }

    pub fn kernel(&self) -> &CMatrix<T> {
        &self.kernel
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn apply(&self, f: &LatticeFunction<T>) -> Result<LatticeFunction<T>> {
        if f.boxx() != &self.boxx {
            return Err(CoreError::Mismatch("function lives on a different box".into()));
        }
        let count = self.boxx.point_count();
        let mut out = LatticeFunction::zeros(self.boxx);
        for i in 0..count {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for j in 0..count {
                acc += self.kernel.get(i, j) * f.values()[j];
            }
            out.values_mut()[i] = acc;
        }
        Ok(out)
    }

    /// Operator norm of the compression to the lattice points selected by
    /// `pred` (rows and columns restricted to those modes).
    pub fn mode_restricted_norm(&self, mut pred: impl FnMut(&[i64]) -> bool) -> T {
        let idx: Vec<usize> =
            (0..self.boxx.point_count()).filter(|&i| pred(&self.boxx.point(i))).collect();
        if idx.is_empty() {
            return T::zero();
        }
        self.kernel.principal_submatrix(&idx).operator_norm()
    }
}

/// Materialize `T_sigma` as its kernel: row `k` holds the partial Fourier
/// coefficients of the symbol, `K(k, l) = sigma_hat(k, (l - k) mod M)`.
pub fn materialize<T: Scalar>(sigma: &SymbolGrid<T>) -> OperatorMatrix<T> {
    let boxx = *sigma.boxx();
    let count = boxx.point_count();
    let pf = sigma.partial_fourier();
    let kernel = CMatrix::from_fn(count, count, |kdx, ldx| {
        let k = boxx.point(kdx);
        let l = boxx.point(ldx);
        let diff: Vec<i64> = l.iter().zip(&k).map(|(a, b)| a - b).collect();
        pf.coeff_at(kdx, &diff)
    });
    OperatorMatrix { boxx, kernel, provenance: sigma.label().to_string() }
}

/// Apply `T_sigma` to a lattice function through the quantization sum
/// `(T_sigma f)(k) = M^{-n} sum_j e^{2 pi i k . x_j} sigma(k, x_j) f_hat(x_j)`.
pub fn apply<T: Scalar>(sigma: &SymbolGrid<T>, f: &LatticeFunction<T>) -> Result<LatticeFunction<T>> {
    if f.boxx() != sigma.boxx() {
        return Err(CoreError::Mismatch("symbol and function live on different boxes".into()));
    }
    let boxx = *sigma.boxx();
    let count = boxx.point_count();
    let fhat = crate::lattice::dft(f);
    let roots = RootTable::<T>::new(&boxx);
    let weight = T::one() / T::from_int(count as i64);
    let labels: Vec<Vec<i64>> = (0..count).map(|i| boxx.freq_labels(i)).collect();
    let mut out = LatticeFunction::zeros(boxx);
    for kdx in 0..count {
        let k = boxx.point(kdx);
        let mut acc = Cplx::new(T::zero(), T::zero());
        for (jdx, j) in labels.iter().enumerate() {
            let dot: i64 = k.iter().zip(j).map(|(a, b)| a * b).sum();
            acc += roots.at(dot) * sigma.value(kdx, jdx) * fhat.values()[jdx];
        }
        out.values_mut()[kdx] = acc * weight;
    }
    Ok(out)
}

/// Recover the symbol whose kernel is `A`:
/// `lambda(k, x_j) = sum_l A(k, l) e^{-2 pi i (k - l) . x_j}`. Inverse of
/// [`materialize`] (quantization is faithful on the box).
pub fn symbol_of_kernel<T: Scalar>(
    op: &OperatorMatrix<T>,
    weight: &WeightFunction<T>,
    order: T,
    rho: T,
    label: impl Into<String>,
) -> Result<SymbolGrid<T>> {
    let boxx = op.boxx;
    let count = boxx.point_count();
    let roots = RootTable::<T>::new(&boxx);
    let labels: Vec<Vec<i64>> = (0..count).map(|i| boxx.freq_labels(i)).collect();
    let points: Vec<Vec<i64>> = (0..count).map(|i| boxx.point(i)).collect();
    let mut values = Vec::with_capacity(count * count);
    for kdx in 0..count {
        let k = &points[kdx];
        for j in &labels {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for (ldx, l) in points.iter().enumerate() {
                let a = op.kernel.get(kdx, ldx);
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                let dot: i64 = k.iter().zip(l.iter()).zip(j).map(|((kk, ll), jj)| (ll - kk) * jj).sum();
                acc += roots.at(dot) * a;
            }
            values.push(acc);
        }
    }
    SymbolGrid::from_values(boxx, weight, order, rho, label, values)
}

fn same_frame<T: Scalar>(a: &SymbolGrid<T>, b: &SymbolGrid<T>) -> Result<()> {
    if a.boxx() != b.boxx() {
        return Err(CoreError::Mismatch("symbols live on different boxes".into()));
    }
    if a.weight().descriptor() != b.weight().descriptor() || a.rho() != b.rho() {
        return Err(CoreError::Mismatch("symbols use different weights or rho".into()));
    }
    Ok(())
}

/// Exact composed symbol: the symbol of `K_sigma K_tau`, declared order
/// `m1 + m2`.
pub fn compose_exact<T: Scalar>(sigma: &SymbolGrid<T>, tau: &SymbolGrid<T>) -> Result<SymbolGrid<T>> {
    same_frame(sigma, tau)?;
    let product = materialize(sigma).kernel.mul(&materialize(tau).kernel);
    let op = OperatorMatrix {
        boxx: *sigma.boxx(),
        kernel: product,
        provenance: format!("{} o {}", sigma.label(), tau.label()),
    };
    symbol_of_kernel(
        &op,
        sigma.weight(),
        sigma.order() + tau.order(),
        sigma.rho(),
        format!("({} o {})", sigma.label(), tau.label()),
    )
}

/// Exact adjoint symbol: symbol of the conjugate transpose of `K_sigma`.
pub fn adjoint_exact<T: Scalar>(sigma: &SymbolGrid<T>) -> Result<SymbolGrid<T>> {
    let op = OperatorMatrix {
        boxx: *sigma.boxx(),
        kernel: materialize(sigma).kernel.conj_transpose(),
        provenance: format!("adjoint({})", sigma.label()),
    };
    symbol_of_kernel(
        &op,
        sigma.weight(),
        sigma.order(),
        sigma.rho(),
        format!("adjoint({})", sigma.label()),
    )
}

/// Exact transpose symbol: symbol of the plain transpose of `K_sigma`.
pub fn transpose_exact<T: Scalar>(sigma: &SymbolGrid<T>) -> Result<SymbolGrid<T>> {
    let op = OperatorMatrix {
        boxx: *sigma.boxx(),
        kernel: materialize(sigma).kernel.transpose(),
        provenance: format!("transpose({})", sigma.label()),
    };
    symbol_of_kernel(
        &op,
        sigma.weight(),
        sigma.order(),
        sigma.rho(),
        format!("transpose({})", sigma.label()),
    )
}

/// Result of an asymptotic calculus expansion measured against its exact
/// kernel-level counterpart: partial sums, remainders and their fitted
/// interior decay, indexed by the number of retained orders `N = 1..`.
#[derive(Debug, Clone)]
pub struct CalculusResult<T: Scalar> {
    pub exact: SymbolGrid<T>,
    pub partials: Vec<SymbolGrid<T>>,
    pub remainders: Vec<SymbolGrid<T>>,
    pub slopes: Vec<SlopeFit<T>>,
}

impl<T: Scalar> CalculusResult<T> {
    /// Partial sum over `|alpha| < n`.
    pub fn partial(&self, n: usize) -> &SymbolGrid<T> {
        &self.partials[n - 1]
    }

    pub fn remainder(&self, n: usize) -> &SymbolGrid<T> {
        &self.remainders[n - 1]
    }

    pub fn slope(&self, n: usize) -> &SlopeFit<T> {
        &self.slopes[n - 1]
    }
}

fn expansion_result<T: Scalar>(
    exact: SymbolGrid<T>,
    terms: Vec<(MultiIndex, SymbolGrid<T>)>,
    n_terms: usize,
    drop_per_order: T,
) -> Result<CalculusResult<T>> {
    let boxx = *exact.boxx();
    let zero = SymbolGrid::from_values(
        boxx,
        exact.weight(),
        exact.order(),
        exact.rho(),
        "partial_0",
        vec![Cplx::new(T::zero(), T::zero()); boxx.point_count() * boxx.point_count()],
    )?;
    let mut partials = Vec::with_capacity(n_terms);
    let mut remainders = Vec::with_capacity(n_terms);
    let mut slopes = Vec::with_capacity(n_terms);
    let reference = exact.max_abs();
    let mut acc = zero;
    for n in 1..=n_terms {
        for (alpha, term) in terms.iter().filter(|(a, _)| a.order() as usize == n - 1) {
            let weight = T::one() / T::from_int(alpha.factorial() as i64);
            acc = acc.add(&term.scale(Cplx::new(weight, T::zero())))?;
        }
        let partial = acc
            .clone()
            .with_order(exact.order())
            .with_label(format!("partial_{n}"));
        let remainder = exact
            .sub(&partial)?
            .with_order(exact.order() - drop_per_order * T::from_int(n as i64))
            .with_label(format!("remainder_{n}"));
        slopes.push(remainder_slope_scaled(&remainder, reference));
        partials.push(partial);
        remainders.push(remainder);
    }
    Ok(CalculusResult { exact, partials, remainders, slopes })
}

/// Composition expansion
/// `lambda ~ sum_alpha (1/alpha!) (D_x^(alpha) sigma) Delta_k^alpha tau`,
/// measured against [`compose_exact`]. `n_terms <= 6`.
pub fn compose_asymptotic<T: Scalar>(
    sigma: &SymbolGrid<T>,
    tau: &SymbolGrid<T>,
    n_terms: usize,
) -> Result<CalculusResult<T>> {
    same_frame(sigma, tau)?;
    check_depth(n_terms)?;
    let exact = compose_exact(sigma, tau)?;
    let pf = sigma.partial_fourier().cleaned(T::lit(MODE_NOISE_THRESHOLD));
    let mut terms = Vec::new();
    for alpha in multi_indices_up_to(sigma.boxx().dim(), n_terms as u32 - 1) {
        let dx = dx_falling_from_pf(sigma, &pf, &alpha);
        let dt = delta_k(tau, &alpha);
        terms.push((alpha, dx.mul_pointwise(&dt)?));
    }
    expansion_result(exact, terms, n_terms, sigma.rho())
}

/// Adjoint expansion
/// `sigma* ~ sum_alpha (1/alpha!) Delta_k^alpha D_x^(alpha) conj(sigma)`,
/// measured against [`adjoint_exact`].
pub fn adjoint_asymptotic<T: Scalar>(sigma: &SymbolGrid<T>, n_terms: usize) -> Result<CalculusResult<T>> {
    check_depth(n_terms)?;
    let exact = adjoint_exact(sigma)?;
    let conj = sigma.conj();
    expansion_from_base(exact, &conj, n_terms, sigma.rho())
}

/// Transpose expansion
/// `sigma^t ~ sum_alpha (1/alpha!) Delta_k^alpha D_x^(alpha) sigma(k, -x)`,
/// measured against [`transpose_exact`].
pub fn transpose_asymptotic<T: Scalar>(
    sigma: &SymbolGrid<T>,
    n_terms: usize,
) -> Result<CalculusResult<T>> {
    check_depth(n_terms)?;
    let exact = transpose_exact(sigma)?;
    let reflected = sigma.reflect_x();
    expansion_from_base(exact, &reflected, n_terms, sigma.rho())
}

fn expansion_from_base<T: Scalar>(
    exact: SymbolGrid<T>,
    base: &SymbolGrid<T>,
    n_terms: usize,
    rho: T,
) -> Result<CalculusResult<T>> {
    let pf = base.partial_fourier().cleaned(T::lit(MODE_NOISE_THRESHOLD));
    let mut terms = Vec::new();
    for alpha in multi_indices_up_to(base.boxx().dim(), n_terms as u32 - 1) {
        let dx = dx_falling_from_pf(base, &pf, &alpha);
        terms.push((alpha.clone(), delta_k(&dx, &alpha)));
    }
    expansion_result(exact, terms, n_terms, rho)
}

fn check_depth(n_terms: usize) -> Result<()> {
    if n_terms == 0 || n_terms > 6 {
        return Err(CoreError::InvalidParameter(
            "expansion depth must lie in 1..=6".into(),
        ));
    }
    Ok(())
}

/// Check the lattice/toroidal duality: with `tau(x, k) = conj sigma(-k, x)`,
/// the toroidal operator `(T_tau u)(x) = sum_k e^{2 pi i k.x} tau(x,k) u_hat(k)`
/// satisfies `K_sigma = F^{-1} (T_tau)^* F` on the box. Returns the max-entry
/// discrepancy between the two sides.
pub fn toroidal_duality_check<T: Scalar>(sigma: &SymbolGrid<T>) -> T {
    let boxx = *sigma.boxx();
    let count = boxx.point_count();
    let roots = RootTable::<T>::new(&boxx);
    let weight = T::one() / T::from_int(count as i64);
    let points: Vec<Vec<i64>> = (0..count).map(|i| boxx.point(i)).collect();
    let labels: Vec<Vec<i64>> = (0..count).map(|i| boxx.freq_labels(i)).collect();

    // Toroidal kernel B[j, j'] = M^{-n} sum_k e^{2 pi i k.(x_j - x_j')} tau(x_j, k).
    let b = CMatrix::from_fn(count, count, |jdx, jpdx| {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for k in points.iter() {
            let neg: Vec<i64> = k.iter().map(|&c| -c).collect();
            let tau = sigma.value_at(&neg, jdx).conj();
            let dot: i64 = k
                .iter()
                .zip(&labels[jdx])
                .zip(&labels[jpdx])
                .map(|((kk, j1), j2)| kk * (j1 - j2))
                .sum();
            acc += roots.at(dot) * tau;
        }
        acc * weight
    });

    let fwd = CMatrix::from_fn(count, count, |jdx, kdx| {
        let dot: i64 = points[kdx].iter().zip(&labels[jdx]).map(|(a, b)| a * b).sum();
        roots.at(-dot)
    });
    let inv = CMatrix::from_fn(count, count, |kdx, jdx| {
        let dot: i64 = points[kdx].iter().zip(&labels[jdx]).map(|(a, b)| a * b).sum();
        roots.at(dot) * weight
    });

    let lhs = inv.mul(&b.conj_transpose()).mul(&fwd);
    lhs.max_abs_diff(&materialize(sigma).kernel)
}

/// Parametrix of an M-elliptic symbol via depth-`N` truncated Neumann series.
#[derive(Debug, Clone)]
pub struct ParametrixResult<T: Scalar> {
    /// `1 / sigma`, the principal symbol of the parametrix (order `-m`).
    pub reciprocal: SymbolGrid<T>,
    /// The parametrix symbol `tau` (order `-m`).
    pub parametrix: SymbolGrid<T>,
    /// Symbol of `T_tau T_sigma - I`, computed exactly at matrix level.
    pub left_remainder: SymbolGrid<T>,
    /// Symbol of `T_sigma T_tau - I`.
    pub right_remainder: SymbolGrid<T>,
    pub left_matrix: OperatorMatrix<T>,
    pub right_matrix: OperatorMatrix<T>,
    pub left_slope: SlopeFit<T>,
    pub right_slope: SlopeFit<T>,
    pub depth: usize,
}

/// Build the parametrix `tau` with `T_tau T_sigma = I + R`, `T_sigma T_tau = I + S`:
/// invert the symbol pointwise, push the composition defect through a
/// truncated Neumann series, and evaluate both remainders exactly at matrix
/// level. Interior sups of the remainder symbols should decay like
/// `Lambda^{-rho N}`.
pub fn parametrix<T: Scalar>(sigma: &SymbolGrid<T>, depth: usize, r1: T) -> Result<ParametrixResult<T>> {
    check_depth(depth)?;
    let ell = m_ellipticity(sigma, r1)?;
    if !ell.elliptic {
        return Err(CoreError::NotElliptic { constant: ell.constant.as_f64() });
    }
    let boxx = *sigma.boxx();
    let count = boxx.point_count();
    for kdx in 0..count {
        for jdx in 0..count {
            if sigma.value(kdx, jdx).norm() == T::zero() {
                return Err(CoreError::ZeroDenominator { point: boxx.point(kdx), x_index: jdx });
            }
        }
    }
    let one = Cplx::new(T::one(), T::zero());
    let reciprocal = SymbolGrid::from_values(
        boxx,
        sigma.weight(),
        -sigma.order(),
        sigma.rho(),
        format!("1/({})", sigma.label()),
        sigma.values().iter().map(|v| one / v).collect(),
    )?;

    // Defect of the truncated left composition: r = 1 - (sigma0 o sigma)_N.
    let unit = SymbolGrid::one(boxx, sigma.weight(), sigma.rho())?;
    let comp = compose_asymptotic(&reciprocal, sigma, depth)?;
    let defect = unit.sub(comp.partial(depth))?.with_order(-sigma.rho());

    // Truncated Neumann series sum_{j < depth} r^{o j}.
    let mut series = unit.clone();
    let mut power = unit.clone();
    for _ in 1..depth {
        power = if power.label() == "1" {
            defect.clone()
        } else {
            let c = compose_asymptotic(&power, &defect, depth)?;
            c.partial(depth).clone()
        };
        series = series.add(&power)?;
    }
    series = series.with_order(T::zero());

    let tau = compose_asymptotic(&series, &reciprocal, depth)?
        .partial(depth)
        .clone()
        .with_order(-sigma.order())
        .with_label(format!("parametrix({})", sigma.label()));

    // Remainders, exactly at matrix level.
    let k_sigma = materialize(sigma);
    let k_tau = materialize(&tau);
    let eye = CMatrix::identity(count);
    let left = k_tau.kernel.mul(&k_sigma.kernel).sub(&eye);
    let right = k_sigma.kernel.mul(&k_tau.kernel).sub(&eye);
    let left_matrix = OperatorMatrix {
        boxx,
        kernel: left,
        provenance: format!("T_tau T_sigma - I ({})", sigma.label()),
    };
    let right_matrix = OperatorMatrix {
        boxx,
        kernel: right,
        provenance: format!("T_sigma T_tau - I ({})", sigma.label()),
    };
    let rem_order = -sigma.rho() * T::from_int(depth as i64);
    let left_remainder =
        symbol_of_kernel(&left_matrix, sigma.weight(), rem_order, sigma.rho(), "left_remainder")?;
    let right_remainder =
        symbol_of_kernel(&right_matrix, sigma.weight(), rem_order, sigma.rho(), "right_remainder")?;
    let left_slope = remainder_slope_scaled(&left_remainder, T::one());
    let right_slope = remainder_slope_scaled(&right_remainder, T::one());

    Ok(ParametrixResult {
        reciprocal,
        parametrix: tau,
        left_remainder,
        right_remainder,
        left_matrix,
        right_matrix,
        left_slope,
        right_slope,
        depth,
    })
}

/// Largest singular value of the materialized operator for each supplied
/// sampling of an order-0 symbol (ascending box sizes). Bounded symbols
/// should produce a non-divergent sequence.
pub fn boundedness_probe<T: Scalar>(grids: &[&SymbolGrid<T>]) -> Result<Vec<T>> {
    if grids.is_empty() {
        return Err(CoreError::InvalidParameter("boundedness probe needs grids".into()));
    }
    for g in grids {
        if g.order() != T::zero() {
            return Err(CoreError::InvalidParameter(format!(
                "boundedness probe requires order 0, got {}",
                g.order()
            )));
        }
    }
    Ok(grids.iter().map(|g| materialize(g).kernel.operator_norm()).collect())
}

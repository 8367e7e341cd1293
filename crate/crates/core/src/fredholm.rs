//! Fredholm diagnostics: nullspace dimensions, the symbol-trace identity,
//! and the index of M-elliptic order-0 symbols by both routes.
//!
//! On a square truncation rank-nullity forces
//! `dim N(T) - dim N(T^t) = 0`, so the informative content is the agreement
//! of the trace formula with matrix traces, the mutual consistency of the
//! two index expressions, and the rapid decay of the parametrix remainder
//! symbols. The reports state what was measured rather than claiming an
//! infinite-lattice index.

use crate::error::{CoreError, Result};
use crate::fit::{least_squares_slope, SlopeFit};
use crate::lattice::LatticeBox;
use crate::quantize::{materialize, parametrix, OperatorMatrix};
use crate::scalar::{Cplx, Scalar};
use crate::symbols::SymbolGrid;

/// Relative singular-value threshold under which a direction counts as null.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Nullspace dimensions of `T` and of its plain transpose `T^t`, via
/// singular values below `eps_rank * s_max`.
pub fn nullspace_dims<T: Scalar>(op: &OperatorMatrix<T>, eps_rank: T) -> (usize, usize) {
    let count = |sv: &[T]| -> usize {
        let smax = sv.first().copied().unwrap_or_else(T::zero);
        if smax == T::zero() {
            return sv.len();
        }
        sv.iter().filter(|&&s| s <= eps_rank * smax).count()
    };
    let direct = op.kernel().singular_values();
    let transposed = op.kernel().transpose().singular_values();
    (count(&direct), count(&transposed))
}

/// Trace through the symbol: `sum_k M^{-n} sum_j tau(k, x_j)`; equals the
/// matrix trace of the materialized operator because the diagonal of the
/// kernel is the zeroth partial Fourier coefficient.
pub fn trace_via_symbol<T: Scalar>(tau: &SymbolGrid<T>) -> Cplx<T> {
    let count = tau.boxx().point_count();
    let weight = T::one() / T::from_int(count as i64);
    let mut acc = Cplx::new(T::zero(), T::zero());
    for kdx in 0..count {
        for jdx in 0..count {
            acc += tau.value(kdx, jdx);
        }
    }
    acc * weight
}

/// Rapid-decay spot check on a remainder symbol: either it has already
/// vanished to rounding noise, or `sup_x |tau(k, .)|` falls off at least
/// like `(1 + |k|)^{-3}` on the interior annulus.
#[derive(Debug, Clone, Copy)]
pub struct DecayCheck<T> {
    pub fit: SlopeFit<T>,
    pub passed: bool,
}

pub fn rapid_decay_check<T: Scalar>(tau: &SymbolGrid<T>) -> DecayCheck<T> {
    let boxx = *tau.boxx();
    let hw = boxx.half_width();
    let sup = tau.sup_x_profile();
    let mut pts = Vec::new();
    let mut max_abs = T::zero();
    for kdx in 0..boxx.point_count() {
        let k = boxx.point(kdx);
        let inf = LatticeBox::norm_inf(&k);
        if inf < hw / 8 || inf > hw / 2 {
            continue;
        }
        max_abs = max_abs.max(sup[kdx]);
        if sup[kdx] > T::zero() {
            pts.push(((T::one() + LatticeBox::norm_euclid::<T>(&k)).ln(), sup[kdx].ln()));
        }
    }
    let negligible = max_abs <= T::lit(crate::fit::NEGLIGIBLE_REMAINDER);
    let fit = SlopeFit {
        slope: if negligible { None } else { least_squares_slope(&pts) },
        points: pts.len(),
        max_abs,
        negligible,
    };
    let passed = fit.satisfies(T::lit(-3.0 + 0.3));
    DecayCheck { fit, passed }
}

/// Everything the index computation measured.
#[derive(Debug, Clone)]
pub struct FredholmReport<T: Scalar> {
    pub dim_null: usize,
    pub dim_null_transpose: usize,
    pub index_kernels: i64,
    pub trace_t1: Cplx<T>,
    pub trace_t2: Cplx<T>,
    /// `Tr(T_1) - Tr(T_2)` with `T_tau T_sigma = I - T_1`, `T_sigma T_tau = I - T_2`.
    pub index_traces: Cplx<T>,
    pub rank_threshold: T,
    pub tau1_decay: DecayCheck<T>,
    pub tau2_decay: DecayCheck<T>,
    pub parametrix_depth: usize,
    /// Both index expressions agree within 1/2 and the remainders decay.
    pub consistent: bool,
}

/// Index of an M-elliptic order-0 symbol by both definitions: nullspace
/// dimensions of the materialized operator, and the trace formula applied
/// to the parametrix remainder symbols.
pub fn index_report<T: Scalar>(
    sigma: &SymbolGrid<T>,
    depth: usize,
    r1: T,
    eps_rank: T,
) -> Result<FredholmReport<T>> {
    if sigma.order() != T::zero() {
        return Err(CoreError::InvalidParameter(format!(
            "index requires a declared order-0 symbol, got order {}",
            sigma.order()
        )));
    }
    let px = parametrix(sigma, depth, r1)?;
    // T_tau T_sigma = I - T_1  =>  tau_1 = -(left remainder symbol).
    let minus_one = Cplx::new(-T::one(), T::zero());
    let tau1 = px.left_remainder.scale(minus_one).with_label("tau_1");
    let tau2 = px.right_remainder.scale(minus_one).with_label("tau_2");

    let trace_t1 = trace_via_symbol(&tau1);
    let trace_t2 = trace_via_symbol(&tau2);
    let index_traces = trace_t1 - trace_t2;

    let op = materialize(sigma);
    let (dim_null, dim_null_transpose) = nullspace_dims(&op, eps_rank);
    let index_kernels = dim_null as i64 - dim_null_transpose as i64;

    let tau1_decay = rapid_decay_check(&tau1);
    let tau2_decay = rapid_decay_check(&tau2);

    let gap = (index_traces - Cplx::new(T::from_int(index_kernels), T::zero())).norm();
    let consistent = gap <= T::lit(0.5) && tau1_decay.passed && tau2_decay.passed;

    Ok(FredholmReport {
        dim_null,
        dim_null_transpose,
        index_kernels,
        trace_t1,
        trace_t2,
        index_traces,
        rank_threshold: eps_rank,
        tau1_decay,
        tau2_decay,
        parametrix_depth: depth,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::CMatrix;
    use crate::rng::SplitMix64;
    use crate::scalar::unit_phase;
    use crate::symbols::{quotient_symbol, random_trig_symbol};
    use crate::weights::WeightFunction;

    type C = Cplx<f64>;

    fn cr(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn setup(k: i64) -> (LatticeBox, WeightFunction<f64>) {
        (LatticeBox::new(1, k).unwrap(), WeightFunction::standard(1, 1.0).unwrap())
    }

    #[test]
    fn nullspace_of_identity_and_diagonal() {
        let (b, w) = setup(6);
        let one = SymbolGrid::one(b, &w, 1.0).unwrap();
        assert_eq!(nullspace_dims(&materialize(&one), 1e-8), (0, 0));
        let lam = SymbolGrid::lambda_power(b, &w, 1.0).unwrap();
        assert_eq!(nullspace_dims(&materialize(&lam), 1e-8), (0, 0));
    }

    #[test]
    fn nullspace_counts_zeroed_directions() {
        let (b, _) = setup(4);
        let n = b.point_count();
        let kernel = CMatrix::from_fn(n, n, |i, j| {
            if i == j && i != 2 {
                cr(1.0 + i as f64)
            } else {
                cr(0.0)
            }
        });
        let op = OperatorMatrix::new(b, kernel, "rank deficient").unwrap();
        assert_eq!(nullspace_dims(&op, 1e-8), (1, 1));
    }

    #[test]
    fn symbol_trace_of_constants_and_multipliers() {
        let (b, w) = setup(8);
        let one = SymbolGrid::one(b, &w, 1.0).unwrap();
        let t = trace_via_symbol(&one);
        assert!((t - cr(b.point_count() as f64)).norm() < 1e-12);

        let lam = SymbolGrid::lambda_power(b, &w, 1.0).unwrap();
        let t = trace_via_symbol(&lam);
        let direct: f64 = (0..b.point_count()).map(|i| w.eval(&b.point(i))).sum();
        assert!((t - cr(direct)).norm() < 1e-12);
    }

    #[test]
    fn symbol_trace_matches_matrix_trace_on_random_symbols() {
        let (b, w) = setup(8);
        let mut rng = SplitMix64::new(17);
        for _ in 0..5 {
            let s = random_trig_symbol(b, &w, &mut rng, 3).unwrap();
            let lhs = trace_via_symbol(&s);
            let rhs = materialize(&s).kernel().trace();
            assert!((lhs - rhs).norm() < 1e-10 * s.max_abs().max(1.0));
        }
    }

    #[test]
    fn index_of_identity_symbol_is_zero() {
        let (b, w) = setup(8);
        let one = SymbolGrid::one(b, &w, 1.0).unwrap();
        let rep = index_report(&one, 2, 1.0, 1e-8).unwrap();
        assert_eq!((rep.dim_null, rep.dim_null_transpose), (0, 0));
        assert_eq!(rep.index_kernels, 0);
        assert!(rep.index_traces.norm() < 1e-10);
        assert!(rep.consistent);
    }

    #[test]
    fn index_of_unitary_shift_is_zero() {
        let (b, w) = setup(8);
        let s = SymbolGrid::sample(b, &w, 0.0, 1.0, "expi(1)", |_, x| unit_phase(x[0]))
            .unwrap();
        let rep = index_report(&s, 2, 1.0, 1e-8).unwrap();
        assert_eq!(rep.index_kernels, 0);
        assert!(rep.index_traces.norm() < 1e-10);
        assert!(rep.consistent);
    }

    #[test]
    fn index_of_elliptic_quotient_is_zero_by_both_routes() {
        let (b, w) = setup(16);
        let lam = SymbolGrid::lambda_power(b, &w, 1.0).unwrap();
        let num = lam
            .add(
                &SymbolGrid::sample(b, &w, 0.0, 1.0, "e", |_, x| unit_phase(x[0]))
                    .unwrap()
                    .scale(cr(0.5)),
            )
            .unwrap()
            .with_order(1.0);
        let (q, _) = quotient_symbol(&num, &lam, 1, 1, 1.0).unwrap();
        assert_eq!(q.order(), 0.0);
        let rep = index_report(&q, 3, 1.0, 1e-8).unwrap();
        assert_eq!((rep.dim_null, rep.dim_null_transpose), (0, 0));
        assert!(rep.index_traces.norm() <= 1e-8, "traces: {:?}", rep.index_traces);
        assert!(rep.tau1_decay.passed, "tau1 decay: {:?}", rep.tau1_decay);
        assert!(rep.tau2_decay.passed, "tau2 decay: {:?}", rep.tau2_decay);
        assert!(rep.consistent);
    }

    #[test]
    fn index_rejects_wrong_order_and_non_elliptic() {
        let (b, w) = setup(8);
        let lam = SymbolGrid::lambda_power(b, &w, 1.0).unwrap();
        assert!(index_report(&lam, 2, 1.0, 1e-8).is_err());

        let dead = SymbolGrid::one(b, &w, 1.0)
            .unwrap()
            .add(&SymbolGrid::sample(b, &w, 0.0, 1.0, "e", |_, x| unit_phase(x[0])).unwrap())
            .unwrap();
        assert!(matches!(
            index_report(&dead, 2, 1.0, 1e-8),
            Err(CoreError::NotElliptic { .. })
        ));
    }
}

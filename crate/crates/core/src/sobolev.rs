//! Weighted Sobolev scale on the lattice: the multiplier `Lambda(D)^s`, its
//! norms, the elliptic a-priori inequality, and compactness probes.
//!
//! `Lambda(D)^s` is realized as pointwise multiplication by `Lambda(k)^s`
//! on the lattice side. (Placing `Lambda^s` on the torus side is not even
//! typeable — the weight lives on the lattice — and the multiplication
//! reading is the one that makes the isometry, the embedding and the
//! compactness of `Lambda(D)^{-eps}` true.)

use crate::error::{CoreError, Result};
use crate::lattice::{LatticeBox, LatticeFunction};
use crate::quantize::{apply, materialize};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use crate::symbols::{cutoff_fall, m_ellipticity, SymbolGrid};
use crate::weights::WeightFunction;

/// A point on the Sobolev scale: weight plus real order `s`.
#[derive(Debug, Clone)]
pub struct SobolevSpec<T: Scalar> {
    weight: WeightFunction<T>,
    s: T,
}

impl<T: Scalar> SobolevSpec<T> {
    pub fn new(weight: WeightFunction<T>, s: T) -> Self {
        Self { weight, s }
    }

    pub fn weight(&self) -> &WeightFunction<T> {
        &self.weight
    }

    pub fn s(&self) -> T {
        self.s
    }

    /// `Lambda(D)^s w`: multiply by `Lambda(k)^s` pointwise. `s = 0` is the
    /// identity and orders compose additively.
    pub fn apply(&self, w: &LatticeFunction<T>) -> LatticeFunction<T> {
        let boxx = *w.boxx();
        let mut out = w.clone();
        for idx in 0..boxx.point_count() {
            let lam = self.weight.eval(&boxx.point(idx)).powf(self.s);
            out.values_mut()[idx] = out.values_mut()[idx] * lam;
        }
        out
    }

    /// Sobolev norm `|| Lambda(D)^s w ||_{l^2}`.
    pub fn norm(&self, w: &LatticeFunction<T>) -> T {
        self.apply(w).l2_norm()
    }

    /// The x-independent symbol `Lambda(k)^s` on a box.
    pub fn multiplier_symbol(&self, boxx: LatticeBox) -> Result<SymbolGrid<T>> {
        SymbolGrid::lambda_power(boxx, &self.weight, self.s)
    }

    /// Singular values of the materialized multiplier, descending; for a
    /// diagonal operator these are exactly the sorted values `Lambda(k)^s`.
    pub fn multiplier_singular_values(&self, boxx: LatticeBox) -> Result<Vec<T>> {
        Ok(materialize(&self.multiplier_symbol(boxx)?).kernel().singular_values())
    }
}

/// Extremes of the a-priori ratio over random probes.
#[derive(Debug, Clone, Copy)]
pub struct AprioriReport<T> {
    pub c_min: T,
    pub c_max: T,
    pub samples: usize,
}

/// Probe the elliptic a-priori inequality
/// `C ||u||_m <= ||T_sigma u||_0 + ||u||_0 <= D ||u||_m` on random vectors:
/// returns the extreme observed ratios. Non-elliptic symbols are rejected.
pub fn apriori_probe<T: Scalar>(
    sigma: &SymbolGrid<T>,
    samples: usize,
    seed: u64,
    r1: T,
) -> Result<AprioriReport<T>> {
    if samples == 0 {
        return Err(CoreError::InvalidParameter("need at least one probe".into()));
    }
    let ell = m_ellipticity(sigma, r1)?;
    if !ell.elliptic {
        return Err(CoreError::NotElliptic { constant: ell.constant.as_f64() });
    }
    let boxx = *sigma.boxx();
    let graded = SobolevSpec::new(sigma.weight().clone(), sigma.order());
    let mut rng = SplitMix64::new(seed);
    let mut c_min = T::infinity();
    let mut c_max = T::zero();
    for _ in 0..samples {
        let u = LatticeFunction::random(boxx, &mut rng);
        let ratio = (apply(sigma, &u)?.l2_norm() + u.l2_norm()) / graded.norm(&u);
        c_min = c_min.min(ratio);
        c_max = c_max.max(ratio);
    }
    Ok(AprioriReport { c_min, c_max, samples })
}

/// Operator norm of the high-frequency tail of `T_sigma` at one cut.
#[derive(Debug, Clone, Copy)]
pub struct TailNorm<T> {
    pub k1: i64,
    pub norm: T,
}

/// Compactness probe: norms of `T_sigma - phi_{k1} T_sigma` for
/// `k1 = K/8, K/4, K/2`, where `phi_{k1}(k) = phi(|k|/k1)` is a smooth
/// falling cutoff (1 up to `k1`, 0 from `2 k1`). Symbols whose class
/// constants vanish at infinity produce tails decreasing toward 0; bounded
/// non-vanishing symbols (the negative control) do not decay.
pub fn compactness_probe<T: Scalar>(sigma: &SymbolGrid<T>) -> Result<Vec<TailNorm<T>>> {
    let boxx = *sigma.boxx();
    let hw = boxx.half_width();
    if hw < 8 {
        return Err(CoreError::InvalidParameter(
            "compactness probe needs half-width at least 8".into(),
        ));
    }
    let op = materialize(sigma);
    let mut out = Vec::new();
    for k1 in [hw / 8, hw / 4, hw / 2] {
        let mut tail = op.kernel().clone();
        for kdx in 0..boxx.point_count() {
            let k = boxx.point(kdx);
            let phi = cutoff_fall(LatticeBox::norm_euclid::<T>(&k) / T::from_int(k1));
            tail.scale_row(kdx, T::one() - phi);
        }
        out.push(TailNorm { k1, norm: tail.operator_norm() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{unit_phase, Cplx};

    type C = Cplx<f64>;

    fn setup(k: i64) -> (LatticeBox, WeightFunction<f64>) {
        (LatticeBox::new(1, k).unwrap(), WeightFunction::standard(1, 1.0).unwrap())
    }

    #[test]
    fn multiplier_at_zero_order_is_identity() {
        let (b, w) = setup(8);
        let spec = SobolevSpec::new(w, 0.0);
        let mut rng = SplitMix64::new(1);
        let u = LatticeFunction::random(b, &mut rng);
        assert_eq!(spec.apply(&u), u);
    }

    #[test]
    fn multiplier_fixes_delta_and_scales_constants() {
        let (b, w) = setup(8);
        let delta = LatticeFunction::<f64>::delta(b, &[0]);
        for s in [-2.0, -1.0, 0.5, 3.0] {
            let spec = SobolevSpec::new(w.clone(), s);
            assert_eq!(spec.apply(&delta), delta, "Lambda(0) = 1");
            assert!((spec.norm(&delta) - 1.0).abs() < 1e-15);
        }
        let ones = LatticeFunction::<f64>::from_fn(b, |_| C::new(1.0, 0.0));
        let spec = SobolevSpec::new(w, -1.0);
        let v = spec.apply(&ones);
        for idx in 0..b.point_count() {
            let k = b.point(idx)[0] as f64;
            let expect = 1.0 / (1.0 + k * k).sqrt();
            assert!((v.values()[idx].re - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn composition_law_and_isometry_round_trip() {
        let (b, w) = setup(8);
        let mut rng = SplitMix64::new(2);
        let u = LatticeFunction::random(b, &mut rng);
        for (s, t) in [(1.0, -1.0), (0.7, 0.4), (-2.0, 2.0)] {
            let a = SobolevSpec::new(w.clone(), s);
            let bspec = SobolevSpec::new(w.clone(), t);
            let ab = bspec.apply(&a.apply(&u));
            let c = SobolevSpec::new(w.clone(), s + t);
            assert!(ab.max_abs_diff(&c.apply(&u)) < 1e-12);
        }
        // Round trip through Lambda(D)^{-s} is the identity.
        let s = SobolevSpec::new(w.clone(), 1.5);
        let si = SobolevSpec::new(w, -1.5);
        let back = si.apply(&s.apply(&u));
        assert!(back.max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn norm_of_constant_function_matches_direct_sum() {
        // ||1||_{1,2} on K = 4 with Lambda_1: norm^2 = sum (1 + k^2) = 69.
        let (b, w) = setup(4);
        let ones = LatticeFunction::<f64>::from_fn(b, |_| C::new(1.0, 0.0));
        let spec = SobolevSpec::new(w, 1.0);
        assert!((spec.norm(&ones) - 69f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn embedding_inequality_is_exact_for_builtin_weights() {
        let (b, w) = setup(8);
        let mut rng = SplitMix64::new(3);
        for (m1, m2) in [(0.0, 1.0), (1.0, 2.0), (-1.0, 0.5)] {
            let lo = SobolevSpec::new(w.clone(), m1);
            let hi = SobolevSpec::new(w.clone(), m2);
            for _ in 0..50 {
                let u = LatticeFunction::random(b, &mut rng);
                assert!(lo.norm(&u) <= hi.norm(&u) * (1.0 + 1e-15));
            }
        }
    }

    #[test]
    fn apriori_ratio_for_pure_multiplier_sits_in_unit_band() {
        let (b, w) = setup(16);
        let s = SymbolGrid::lambda_power(b, &w, 2.0).unwrap();
        let rep = apriori_probe(&s, 24, 11, 1.0).unwrap();
        assert!(rep.c_min >= 1.0 - 1e-12, "c_min = {}", rep.c_min);
        assert!(rep.c_max <= 2.0 + 1e-12, "c_max = {}", rep.c_max);
    }

    #[test]
    fn apriori_ratio_for_identity_symbol_is_two() {
        let (b, w) = setup(8);
        let one = SymbolGrid::one(b, &w, 1.0).unwrap();
        let rep = apriori_probe(&one, 8, 5, 1.0).unwrap();
        assert!((rep.c_min - 2.0).abs() < 1e-12);
        assert!((rep.c_max - 2.0).abs() < 1e-12);
    }

    #[test]
    fn apriori_rejects_non_elliptic_symbols() {
        let (b, w) = setup(16);
        let s = SymbolGrid::sample(b, &w, 0.0, 1.0, "1+expi", |_, x| {
            C::new(1.0, 0.0) + unit_phase(x[0])
        })
        .unwrap();
        assert!(matches!(
            apriori_probe(&s, 4, 1, 1.0),
            Err(CoreError::NotElliptic { .. })
        ));
    }

    #[test]
    fn apriori_stays_in_band_for_running_example() {
        for k in [16i64, 32] {
            let (b, w) = setup(k);
            let s = SymbolGrid::lambda_power(b, &w, 1.0)
                .unwrap()
                .add(
                    &SymbolGrid::sample(b, &w, 0.0, 1.0, "e", |_, x| unit_phase(x[0]))
                        .unwrap()
                        .scale(C::new(0.5, 0.0)),
                )
                .unwrap()
                .with_order(1.0);
            let rep = apriori_probe(&s, 32, 7, 1.0).unwrap();
            assert!(rep.c_min >= 0.4, "K = {k}: c_min = {}", rep.c_min);
            assert!(rep.c_max <= 3.0, "K = {k}: c_max = {}", rep.c_max);
        }
    }

    #[test]
    fn multiplier_singular_values_are_sorted_weight_powers() {
        let (b, w) = setup(16);
        let spec = SobolevSpec::new(w.clone(), -1.0);
        let sv = spec.multiplier_singular_values(b).unwrap();
        let mut expect: Vec<f64> = (0..b.point_count())
            .map(|i| 1.0 / w.eval(&b.point(i)))
            .collect();
        expect.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(sv.len(), expect.len());
        for (a, e) in sv.iter().zip(&expect) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!((sv[0] - 1.0).abs() < 1e-12);
        let min = sv.last().unwrap();
        assert!((min - (1.0f64 + 16.0 * 16.0).powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn compactness_tails_decay_for_negative_order_multiplier() {
        let (b, w) = setup(32);
        let spec = SobolevSpec::new(w.clone(), -1.0);
        let s = spec.multiplier_symbol(b).unwrap();
        let tails = compactness_probe(&s).unwrap();
        assert_eq!(tails.len(), 3);
        for t in &tails {
            let bound = 1.0 / w.eval(&[t.k1 + 1]);
            assert!(t.norm <= bound + 1e-12, "k1 = {}: {} > {}", t.k1, t.norm, bound);
        }
        assert!(tails[0].norm > tails[1].norm && tails[1].norm > tails[2].norm);
    }

    #[test]
    fn compactness_negative_control_does_not_decay() {
        let (b, w) = setup(32);
        let one = SymbolGrid::one(b, &w, 1.0).unwrap();
        let tails = compactness_probe(&one).unwrap();
        for t in &tails {
            assert!((t.norm - 1.0).abs() < 1e-12, "k1 = {}: {}", t.k1, t.norm);
        }
    }

    #[test]
    fn graded_conjugation_of_order_m_symbol_stays_bounded() {
        // Lambda(D)^s T_sigma Lambda(D)^{-s-m} has size-stable norm.
        let mut norms = Vec::new();
        for k in [8i64, 16] {
            let (b, w) = setup(k);
            let sigma = SymbolGrid::lambda_power(b, &w, 1.0)
                .unwrap()
                .add(
                    &SymbolGrid::sample(b, &w, 0.0, 1.0, "e", |_, x| unit_phase(x[0]))
                        .unwrap()
                        .scale(C::new(0.5, 0.0)),
                )
                .unwrap()
                .with_order(1.0);
            let s = 1.0;
            let left = SobolevSpec::new(w.clone(), s);
            let right = SobolevSpec::new(w.clone(), -s - 1.0);
            let mut kernel = materialize(&sigma).kernel().clone();
            // Conjugate the kernel by the diagonal multipliers.
            for i in 0..b.point_count() {
                let li = left.weight().eval(&b.point(i)).powf(left.s());
                kernel.scale_row(i, li);
            }
            let mut conj = kernel.transpose();
            for j in 0..b.point_count() {
                let rj = right.weight().eval(&b.point(j)).powf(right.s());
                conj.scale_row(j, rj);
            }
            norms.push(conj.operator_norm());
        }
        assert!(norms[1] <= norms[0] * 1.05 + 1e-12, "norms {norms:?}");
    }
}

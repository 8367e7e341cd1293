//! Weight functions on the lattice and numerical validation of their
//! defining growth and difference estimates.
//!
//! A weight is any positive function with declared exponents
//! `mu0 <= mu1 <= mu` and constants for the sandwich
//! `C0 (1+|k|)^{mu0} <= L(k) <= C1 (1+|k|)^{mu1}` plus difference estimates
//! `|k^g Delta^{a+g} L(k)| <= C_{a,g} L(k)^{1 - |a|/mu}`. Smoothness plays no
//! role on a discrete set; what the calculus actually consumes are the
//! estimates, and those are checked empirically on nested windows. Validation
//! can only falsify a claim, never certify it.

use std::fmt;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::lattice::{
    binary_multi_indices, difference_stencil, multi_indices_up_to, LatticeBox, MultiIndex,
};
use crate::scalar::Scalar;

/// Builtin weight families (plus an escape hatch) for report metadata.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightDescriptor {
    /// `sqrt(1 + k_1^{2m} + ... + k_n^{2m})`.
    Standard { m: f64 },
    /// `sqrt(1 + k_1^{2 m_1} + ... + k_n^{2 m_n})`, every `m_j >= 1`.
    Anisotropic { exponents: Vec<u32> },
    Custom { name: String },
}

impl fmt::Display for WeightDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightDescriptor::Standard { m } => write!(f, "Lambda_{m}"),
            WeightDescriptor::Anisotropic { exponents } => {
                write!(f, "Lambda_{exponents:?}")
            }
            WeightDescriptor::Custom { name } => write!(f, "{name}"),
        }
    }
}

/// Shared evaluator of a weight at a lattice point.
pub type WeightEval<T> = Arc<dyn Fn(&[i64]) -> T + Send + Sync>;

/// Positive weight on `Z^n` with declared exponents and sandwich constants.
#[derive(Clone)]
pub struct WeightFunction<T: Scalar> {
    descriptor: WeightDescriptor,
    dim: usize,
    eval: WeightEval<T>,
    mu0: T,
    mu1: T,
    mu: T,
    c0: T,
    c1: T,
}

impl<T: Scalar> fmt::Debug for WeightFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("descriptor", &self.descriptor)
            .field("dim", &self.dim)
            .field("mu0", &self.mu0)
            .field("mu1", &self.mu1)
            .field("mu", &self.mu)
            .finish()
    }
}

impl<T: Scalar> WeightFunction<T> {
    /// Isotropic weight of order `m > 0`.
    pub fn standard(dim: usize, m: T) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::InvalidParameter("dimension must be positive".into()));
        }
        if m <= T::zero() {
            return Err(CoreError::InvalidParameter("weight order must be positive".into()));
        }
        let two_m = T::lit(2.0) * m;
        let eval = move |k: &[i64]| -> T {
            let mut s = T::one();
            for &c in k {
                s += T::from_int(c).abs().powf(two_m);
            }
            s.sqrt()
        };
        // Safe sandwich constants, tight at m = 1:
        //   L >= (1+|k|_2)^m * 2^{1/2 - max(m,1)} n^{-m/2},  L <= sqrt(1+n) (1+|k|_2)^m.
        let n_t = T::from_int(dim as i64);
        let c0 = T::lit(2.0).powf(T::lit(0.5) - m.max(T::one())) * n_t.powf(-m / T::lit(2.0));
        let c1 = (T::one() + n_t).sqrt();
        Ok(Self {
            descriptor: WeightDescriptor::Standard { m: m.as_f64() },
            dim,
            eval: Arc::new(eval),
            mu0: m,
            mu1: m,
            mu: m,
            c0,
            c1,
        })
    }

    /// Anisotropic weight with integer exponents `m_j >= 1` per axis.
    pub fn anisotropic(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(CoreError::InvalidParameter("exponent vector must be nonempty".into()));
        }
        if exponents.iter().any(|&m| m < 1) {
            return Err(CoreError::InvalidParameter(
                "anisotropic exponents must all be >= 1".into(),
            ));
        }
        let dim = exponents.len();
        let lo = *exponents.iter().min().expect("nonempty") as i64;
        let hi = *exponents.iter().max().expect("nonempty") as i64;
        let exps = exponents.clone();
        let eval = move |k: &[i64]| -> T {
            let mut s = T::one();
            for (&c, &m) in k.iter().zip(&exps) {
                s += T::from_int(c).abs().powi(2 * m as i32);
            }
            s.sqrt()
        };
        let mu0 = T::from_int(lo);
        let n_t = T::from_int(dim as i64);
        let c0 = T::lit(2.0).powf(T::lit(0.5) - mu0) * n_t.powf(-mu0 / T::lit(2.0));
        let c1 = (T::one() + n_t).sqrt();
        Ok(Self {
            descriptor: WeightDescriptor::Anisotropic { exponents },
            dim,
            eval: Arc::new(eval),
            mu0,
            mu1: T::from_int(hi),
            mu: T::from_int(hi),
            c0,
            c1,
        })
    }

    /// Arbitrary user weight with declared exponents and sandwich constants.
    /// The declaration is taken on trust here; `validate_weight` can only
    /// falsify it.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[i64]) -> T + Send + Sync + 'static,
        mu0: T,
        mu1: T,
        mu: T,
        c0: T,
        c1: T,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::InvalidParameter("dimension must be positive".into()));
        }
        if !(T::zero() < mu0 && mu0 <= mu1 && mu1 <= mu) {
            return Err(CoreError::InvalidParameter(
                "exponents must satisfy 0 < mu0 <= mu1 <= mu".into(),
            ));
        }
        if c0 <= T::zero() || c1 <= T::zero() {
            return Err(CoreError::InvalidParameter("sandwich constants must be positive".into()));
        }
        Ok(Self {
            descriptor: WeightDescriptor::Custom { name: name.into() },
            dim,
            eval: Arc::new(eval),
            mu0,
            mu1,
            mu,
            c0,
            c1,
        })
    }

    pub fn eval(&self, k: &[i64]) -> T {
        debug_assert_eq!(k.len(), self.dim);
        (self.eval)(k)
    }

    pub fn descriptor(&self) -> &WeightDescriptor {
        &self.descriptor
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu0(&self) -> T {
        self.mu0
    }

    pub fn mu1(&self) -> T {
        self.mu1
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn c0(&self) -> T {
        self.c0
    }

    pub fn c1(&self) -> T {
        self.c1
    }

    /// Largest admissible `rho` for symbol classes over this weight.
    pub fn rho_max(&self) -> T {
        T::one() / self.mu
    }
}

/// Measured sandwich constants on one window.
#[derive(Debug, Clone, Copy)]
pub struct SandwichConstants<T> {
    pub window: i64,
    /// Tightest lower constant: `min L(k) / (1+|k|)^{mu0}`.
    pub c0: T,
    /// Tightest upper constant: `max L(k) / (1+|k|)^{mu1}`.
    pub c1: T,
}

/// Measured difference-estimate constant for one `(alpha, gamma)` pair on
/// the two nested windows.
#[derive(Debug, Clone)]
pub struct DifferenceConstant<T> {
    pub alpha: MultiIndex,
    pub gamma: MultiIndex,
    pub values: [T; 2],
}

#[derive(Debug, Clone)]
pub struct WeightValidationReport<T> {
    pub window: i64,
    pub alpha_max: u32,
    pub sandwich: [SandwichConstants<T>; 2],
    pub difference_constants: Vec<DifferenceConstant<T>>,
    pub positive: bool,
    /// Declared constants hold against the measured tight ones.
    pub claimed_ok: bool,
    /// Sandwich constants stay within 5% when the window doubles.
    pub growth_ok: bool,
    /// Every difference constant grows at most 5% when the window doubles.
    pub differences_ok: bool,
    pub passed: bool,
}

/// Cached weight values on `|k|_inf <= reach`, so scans do not re-evaluate
/// the weight inside difference stencils.
struct WindowCache<T> {
    reach: i64,
    side: i64,
    values: Vec<T>,
}

impl<T: Scalar> WindowCache<T> {
    fn build(w: &WeightFunction<T>, reach: i64) -> Result<Self> {
        let dim = w.dim();
        let side = 2 * reach + 1;
        let total = (side as u128).checked_pow(dim as u32);
        let total = match total {
            Some(t) if t <= 1 << 27 => t as usize,
            _ => {
                return Err(CoreError::InvalidParameter(format!(
                    "validation window {reach} too large in dimension {dim}"
                )))
            }
        };
        let mut values = Vec::with_capacity(total);
        let mut k = vec![-reach; dim];
        loop {
            values.push(w.eval(&k));
            let mut axis = dim;
            while axis > 0 {
                axis -= 1;
                k[axis] += 1;
                if k[axis] <= reach {
                    break;
                }
                k[axis] = -reach;
                if axis == 0 {
                    return Ok(Self { reach, side, values });
                }
            }
        }
    }

    #[inline]
    fn at(&self, k: &[i64]) -> T {
        let mut idx: i64 = 0;
        for &c in k {
            debug_assert!(c.abs() <= self.reach);
            idx = idx * self.side + (c + self.reach);
        }
        self.values[idx as usize]
    }
}

/// Scan the defining estimates of a weight on the window `|k|_inf <= window`
/// and on the doubled window, and flag instability.
pub fn validate_weight<T: Scalar>(
    w: &WeightFunction<T>,
    window: i64,
    alpha_max: u32,
) -> Result<WeightValidationReport<T>> {
    if window < 8 {
        return Err(CoreError::InvalidParameter("validation window must be at least 8".into()));
    }
    if alpha_max < 2 {
        return Err(CoreError::InvalidParameter("alpha_max must be at least 2".into()));
    }
    let n = w.dim();
    let stencil_reach = alpha_max as i64 + 1;
    let cache = WindowCache::build(w, 2 * window + stencil_reach)?;

    type StencilPair = (MultiIndex, MultiIndex, Vec<(Vec<i64>, i64)>);
    let alphas = multi_indices_up_to(n, alpha_max);
    let gammas = binary_multi_indices(n);
    let pairs: Vec<StencilPair> = alphas
        .iter()
        .flat_map(|a| {
            gammas.iter().map(move |g| {
                let stencil = difference_stencil(&a.add(g));
                (a.clone(), g.clone(), stencil)
            })
        })
        .collect();

    let mut positive = true;
    let mut sandwich = Vec::with_capacity(2);
    let mut per_pair: Vec<[T; 2]> = vec![[T::zero(); 2]; pairs.len()];

    for (wi, half) in [window, 2 * window].into_iter().enumerate() {
        let mut c0 = T::infinity();
        let mut c1 = T::zero();
        let mut k = vec![-half; n];
        'scan: loop {
            let lam = cache.at(&k);
            if lam <= T::zero() || !lam.is_finite() {
                positive = false;
            } else {
                let base = T::one() + LatticeBox::norm_euclid::<T>(&k);
                c0 = c0.min(lam / base.powf(w.mu0()));
                c1 = c1.max(lam / base.powf(w.mu1()));

                for (p, (alpha, gamma, stencil)) in pairs.iter().enumerate() {
                    let mut diff = T::zero();
                    for (eta, coeff) in stencil {
                        let shifted: Vec<i64> = k.iter().zip(eta).map(|(&c, &e)| c + e).collect();
                        diff += T::from_int(*coeff) * cache.at(&shifted);
                    }
                    let mut kg = T::one();
                    for (c, &g) in k.iter().zip(gamma.entries()) {
                        if g == 1 {
                            kg *= T::from_int(*c);
                        }
                    }
                    let alpha_ord = T::from_int(alpha.order() as i64);
                    let denom = lam.powf(T::one() - alpha_ord / w.mu());
                    per_pair[p][wi] = per_pair[p][wi].max((kg * diff).abs() / denom);
                }
            }
            let mut axis = n;
            while axis > 0 {
                axis -= 1;
                k[axis] += 1;
                if k[axis] <= half {
                    break;
                }
                k[axis] = -half;
                if axis == 0 {
                    break 'scan;
                }
            }
        }
        sandwich.push(SandwichConstants { window: half, c0, c1 });
    }

    let tol = T::lit(1.05);
    let slack = T::lit(1.0 + 1e-12);
    let claimed_ok = positive
        && w.c0() <= sandwich[0].c0 * slack
        && w.c0() <= sandwich[1].c0 * slack
        && w.c1() * slack >= sandwich[0].c1
        && w.c1() * slack >= sandwich[1].c1;
    let growth_ok = positive
        && sandwich[1].c0 >= sandwich[0].c0 / tol
        && sandwich[1].c1 <= sandwich[0].c1 * tol
        && sandwich.iter().all(|s| s.c0.is_finite() && s.c1.is_finite());

    let tiny = T::lit(1e-12);
    let differences_ok = per_pair
        .iter()
        .all(|v| v[0].is_finite() && v[1].is_finite() && v[1] <= v[0] * tol + tiny);

    let difference_constants = pairs
        .into_iter()
        .zip(per_pair)
        .map(|((alpha, gamma, _), values)| DifferenceConstant { alpha, gamma, values })
        .collect();

    Ok(WeightValidationReport {
        window,
        alpha_max,
        sandwich: [sandwich[0], sandwich[1]],
        difference_constants,
        positive,
        claimed_ok,
        growth_ok,
        differences_ok,
        passed: positive && claimed_ok && growth_ok && differences_ok,
    })
}

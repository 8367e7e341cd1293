//! Least-squares slope fitting for decay-rate measurements.

use crate::scalar::Scalar;

/// Remainders whose interior magnitude stays below this are treated as
/// identically zero; a log-log slope fitted to rounding noise would be
/// meaningless.
pub const NEGLIGIBLE_REMAINDER: f64 = 1e-12;

/// Outcome of a log-log decay fit.
///
/// `slope: None` with `negligible` set means the data vanished (relative to
/// its reference scale) before a slope could be measured, which satisfies
/// every decay bound; `None` without it means the fit was degenerate and is
/// treated as a failure.
#[derive(Debug, Clone, Copy)]
pub struct SlopeFit<T> {
    pub slope: Option<T>,
    pub points: usize,
    pub max_abs: T,
    pub negligible: bool,
}

impl<T: Scalar> SlopeFit<T> {
    /// Does the measured decay satisfy `slope <= bound`?
    pub fn satisfies(&self, bound: T) -> bool {
        match self.slope {
            Some(s) => s <= bound,
            None => self.negligible,
        }
    }
}

/// Plain least-squares slope of `y` against `x`. `None` when fewer than two
/// points or when the abscissae do not spread.
pub fn least_squares_slope<T: Scalar>(points: &[(T, T)]) -> Option<T> {
    if points.len() < 2 {
        return None;
    }
    let n = T::from_int(points.len() as i64);
    let mut sx = T::zero();
    let mut sy = T::zero();
    for &(x, y) in points {
        sx += x;
        sy += y;
    }
    let mx = sx / n;
    let my = sy / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for &(x, y) in points {
        let dx = x - mx;
        sxx += dx * dx;
        sxy += dx * (y - my);
    }
    if sxx <= T::epsilon() * n {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let pts: Vec<(f64, f64)> = (1..20).map(|i| (i as f64, 3.5 - 2.0 * i as f64)).collect();
        let s = least_squares_slope(&pts).unwrap();
        assert!((s + 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_yield_none() {
        assert!(least_squares_slope::<f64>(&[]).is_none());
        assert!(least_squares_slope(&[(1.0, 2.0)]).is_none());
        assert!(least_squares_slope(&[(1.0, 2.0), (1.0, 3.0)]).is_none());
    }

    #[test]
    fn satisfies_handles_vanished_remainders() {
        let zero = SlopeFit::<f64> { slope: None, points: 0, max_abs: 1e-15, negligible: true };
        assert!(zero.satisfies(-100.0));
        let bad = SlopeFit::<f64> { slope: None, points: 1, max_abs: 0.5, negligible: false };
        assert!(!bad.satisfies(0.0));
    }
}

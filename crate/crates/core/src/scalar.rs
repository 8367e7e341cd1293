use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Complex value over the crate scalar.
pub type Cplx<T> = Complex<T>;

/// Floating-point scalar all numerical kernels are generic over (`f32` or `f64`).
///
/// The stated tolerances of the library (1e-10 .. 1e-12) are only meaningful
/// at `f64`; the `f32` instantiation exists for cheap scans and experiments.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Shorthand for converting an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn from_int(x: i64) -> Self {
        Self::from_i64(x).expect("integer representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Unit complex number `e^{2 pi i t}`.
pub fn unit_phase<T: Scalar>(t: T) -> Cplx<T> {
    let theta = T::lit(2.0) * T::PI() * t;
    Cplx::new(theta.cos(), theta.sin())
}

//! Scalar abstraction: every field operation, symbol evaluation and norm in
//! this crate is generic over the floating-point type through [`Real`].
//!
//! `f64` is the working precision for all quantitative checks; `f32` builds
//! and runs but cannot meet the tighter tolerances.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Floating-point scalar usable for spectral fields: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + FftNum + Sum + Display + LowerExp + Debug + 'static
{
    /// Lossy conversion from an `f64` constant.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant converts to any Real")
    }

    /// Conversion from a lattice index or count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in Real")
    }

    /// Conversion from a signed index.
    fn of_i64(n: i64) -> Self {
        Self::from_i64(n).expect("i64 index fits in Real")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssign
        + FftNum
        + Sum
        + Display
        + LowerExp
        + Debug
        + 'static
{
}

/// Complex number over the crate scalar.
pub type Cplx<T> = Complex<T>;

/// `exp(i theta)` as a complex number.
pub fn cis<T: Real>(theta: T) -> Cplx<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

/// Euclidean norm of a 2-vector.
pub fn norm2<T: Real>(v: [T; 2]) -> T {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

/// Dot product of 2-vectors.
pub fn dot2<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

/// Difference of 2-vectors.
pub fn sub2<T: Real>(a: [T; 2], b: [T; 2]) -> [T; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Sum of 2-vectors.
pub fn add2<T: Real>(a: [T; 2], b: [T; 2]) -> [T; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

/// Scalar multiple of a 2-vector.
pub fn scale2<T: Real>(s: T, v: [T; 2]) -> [T; 2] {
    [s * v[0], s * v[1]]
}

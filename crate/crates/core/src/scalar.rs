use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Floating-point scalar the solver is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + FftNum + Sum + Default + Display + Debug
{
    /// Converts an `f64` literal or parameter into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    /// Volume of the periodic box `(2π)³`.
    #[inline]
    fn volume() -> Self {
        let two_pi = Self::TAU();
        two_pi * two_pi * two_pi
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + NumAssign + FftNum + Sum + Default + Display + Debug
{
}

/// Euclidean length of a 3-vector without intermediate overflow.
#[inline]
pub fn norm3<T: Real>(a: T, b: T, c: T) -> T {
    a.hypot(b).hypot(c)
}

//! Scalar abstraction for the amplitude arithmetic.
//!
//! Everything that touches amplitudes is generic over [`Real`] so the same
//! circuits run in `f32` for quick exploration or `f64` where the 1e-12
//! tolerances matter. Physical configuration and sampling stay in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable as the real part of an amplitude.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Amplitudes with modulus below this are dropped after every element.
    const PRUNE_THRESHOLD: Self;
    /// Maximum entry-wise deviation of `u u^dagger` from the identity.
    const UNITARY_TOL: Self;
    /// Slack allowed on unit-norm checks (states, Bloch vectors).
    const NORM_TOL: Self;

    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("real scalar converts to f64")
    }
}

impl Real for f64 {
    const PRUNE_THRESHOLD: Self = 1e-15;
    const UNITARY_TOL: Self = 1e-12;
    const NORM_TOL: Self = 1e-12;
}

impl Real for f32 {
    const PRUNE_THRESHOLD: Self = 1e-7;
    const UNITARY_TOL: Self = 1e-5;
    const NORM_TOL: Self = 1e-5;
}

/// Complex amplitude over a [`Real`] scalar.
pub type Amplitude<T> = Complex<T>;

/// `exp(i theta)`.
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// `sqrt(num / den)` for small integer ratios, evaluated in the target scalar.
pub(crate) fn sqrt_ratio<T: Real>(num: u64, den: u64) -> T {
    (T::from_u64(num).expect("u64") / T::from_u64(den).expect("u64")).sqrt()
}

//! Scalar abstraction for the whole toolkit.
//!
//! Every numerical routine in this crate is generic over [`Real`], so the same
//! code runs in `f32` or `f64`. Concrete `f64` aliases live at the crate root;
//! they are what the CLI and the acceptance suite use.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar usable throughout the toolkit.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal (tabulated constants, tolerances).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must convert to Real")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize must convert to Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

/// Shorthand for a complex zero.
pub fn czero<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

/// Build a complex number from `f64` parts.
pub fn c64<T: Real>(re: f64, im: f64) -> C<T> {
    C::new(T::of(re), T::of(im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion_roundtrips() {
        assert_eq!(<f64 as Real>::of(0.25), 0.25);
        assert_eq!(<f32 as Real>::of(0.25), 0.25f32);
        assert_eq!(<f64 as Real>::of_usize(7), 7.0);
    }
}

//! Scalar abstractions.
//!
//! The encoder is generic over [`Scalar`], which covers both floats and exact
//! rationals. Anything that draws Gaussian noise needs a [`Real`].

use std::fmt::Debug;

use num_rational::Rational64;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Num + Signed + FromPrimitive + ToPrimitive + Copy + PartialOrd + Debug + Send + Sync + 'static
{
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
impl Scalar for i64 {}
impl Scalar for Rational64 {}

/// Floating-point scalars usable by the crossbar simulator and solver.
pub trait Real: Scalar + Float {
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite float")
    }
}

impl Real for f32 {}
impl Real for f64 {}

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num};

/// Number types the analytics can be evaluated in: exact rationals for
/// proofs and oracle comparisons, `f64`/`f32` for quick curves.
pub trait Scalar: Num + Clone + FromPrimitive + PartialOrd + Debug {}

impl<T> Scalar for T where T: Num + Clone + FromPrimitive + PartialOrd + Debug {}

pub(crate) fn from_count<T: Scalar>(v: u64) -> T {
    T::from_u64(v).expect("count representable in scalar type")
}

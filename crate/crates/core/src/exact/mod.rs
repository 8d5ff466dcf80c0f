//! Exact and certified arithmetic.

pub mod dist;
pub mod dyadic;
pub mod ivec;
pub mod rat;
pub mod real;
pub mod snf;

pub use dist::{norm, proj_dist, proj_dist_ball, proj_dist_sq};
pub use dyadic::{Dyadic, Interval};
pub use ivec::{complete_to_basis, det3, is_primitive_pair, IVec3};
pub use rat::{rat, rat_int, Rat};
pub use real::{cert_le, cert_lt, certified_compare, compare_reals, BallReal, CertOrdering, Real, Verdict};

//! Verification suites run against a built construction.

pub mod boxcheck;
pub mod props;
pub mod slab;
pub mod vperp;
pub mod witness;

use serde::{Deserialize, Serialize};

use crate::builder::ConstructionState;
use crate::error::{Error, Result};
use crate::exact::dyadic::Interval;
use crate::exact::real::{BallJson, Real};

pub use boxcheck::{coeff_box, BoxReport};
pub use props::{property_suites, PropertyReport};
pub use slab::{slab_scan, ScanParams, ScanReport};
pub use witness::{check_condition_iii, log_grid, WitnessReport};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaBeta {
    pub alpha: BallJson,
    pub beta: BallJson,
}

/// Enclosures of `u_1/u_0` and `u_2/u_0` from the tightest U enclosure.
pub fn export_alpha_beta(state: &ConstructionState, prec: u32) -> Result<AlphaBeta> {
    let enc = state.u_best();
    let rep = &enc.rep;
    let n = Real::int(rep.norm_sq()).sqrt();
    let r = enc.radius().mul(&Real::int(2));
    // u = rep/|rep| + e with |e| <= 2r; each coordinate moves by at most 2r.
    let coord = |k: usize| -> Result<Interval> {
        let c = Real::int(rep.0[k].clone()).div(&n);
        let lo = c.sub(&r).eval(prec).ok_or_else(|| Error::Undecided("alpha/beta".into()))?.lo;
        let hi = c.add(&r).eval(prec).ok_or_else(|| Error::Undecided("alpha/beta".into()))?.hi;
        Ok(Interval { lo, hi })
    };
    let (u0, u1, u2) = (coord(0)?, coord(1)?, coord(2)?);
    if !(u0.lo.is_positive() || u0.hi.is_negative()) {
        return Err(Error::Undecided("first coordinate of u not separated from 0".into()));
    }
    let ratio = |a: &Interval| a.div(&u0, prec).ok_or_else(|| Error::Internal("division by zero interval".into()));
    Ok(AlphaBeta { alpha: BallJson::from_interval(&ratio(&u1)?), beta: BallJson::from_interval(&ratio(&u2)?) })
}

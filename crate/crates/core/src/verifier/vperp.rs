//! The sandwich `min(|x.v'|, |x.w'|) <= |x| dist(x, {v,w}) <= |x.u| + min(..)`
//! for integer frames, decided exactly on squares.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::ivec::{det3, IVec3};
use crate::exact::rat::Rat;

/// Sides of the sandwich, all squared: `(min_perp^2, |x|^2 dist^2, |x.u|^2)`.
pub fn sandwich_sides(u: &IVec3, v: &IVec3, w: &IVec3, x: &IVec3) -> Result<(Rat, Rat, Rat)> {
    if [u, v, w, x].iter().any(|a| a.is_zero()) {
        return Err(Error::ZeroVector);
    }
    if !u.dot(v).is_zero() || !u.dot(w).is_zero() {
        return Err(Error::Input("u must be orthogonal to v and w".into()));
    }
    let (nu, nv, nw) = (u.norm_sq(), v.norm_sq(), w.norm_sq());
    let perp = |d: &IVec3, nd: &num_bigint::BigInt| {
        let t = det3(x, u, d);
        Rat::new(&t * &t, &nu * nd)
    };
    let m = perp(v, &nv).min(perp(w, &nw));
    let dv = Rat::new(x.cross(v).norm_sq(), nv);
    let dw = Rat::new(x.cross(w).norm_sq(), nw);
    let d = dv.min(dw);
    let xu = x.dot(u);
    let c = Rat::new(&xu * &xu, nu);
    Ok((m, d, c))
}

/// Both inequalities, exactly: `m <= d` and `sqrt d <= sqrt c + sqrt m`.
pub fn vperp_sandwich(u: &IVec3, v: &IVec3, w: &IVec3, x: &IVec3) -> Result<bool> {
    let (m, d, c) = sandwich_sides(u, v, w, x)?;
    let left = m <= d;
    let gap = &d - &c - &m;
    let right = !gap.is_positive() || &gap * &gap <= Rat::from_integer(4.into()) * &c * &m;
    Ok(left && right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat::rat_int;

    #[test]
    fn tight_example() {
        let (u, v, w) = (IVec3::e(2), IVec3::e(0), IVec3::e(1));
        let x = IVec3::new(3, 4, 0);
        let (m, d, c) = sandwich_sides(&u, &v, &w, &x).unwrap();
        assert_eq!((m, d, c), (rat_int(9), rat_int(9), rat_int(0)));
        assert!(vperp_sandwich(&u, &v, &w, &x).unwrap());
        let (m, d, c) = sandwich_sides(&u, &v, &w, &v).unwrap();
        assert!(m.is_zero() && d.is_zero() && c.is_zero());
    }

    #[test]
    fn rejects_non_orthogonal() {
        assert!(vperp_sandwich(&IVec3::e(0), &IVec3::new(1, 1, 0), &IVec3::e(1), &IVec3::e(2)).is_err());
    }
}

//! Projective distance between lattice directions.


use super::ivec::IVec3;
use super::rat::Rat;
use super::real::{BallReal, Real};
use crate::error::{Error, Result};

/// `dist(a,b)^2 = |a ^ b|^2 / (|a|^2 |b|^2)`, exactly.
pub fn proj_dist_sq(a: &IVec3, b: &IVec3) -> Result<Rat> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroVector);
    }
    Ok(Rat::new(a.cross(b).norm_sq(), a.norm_sq() * b.norm_sq()))
}

pub fn proj_dist(a: &IVec3, b: &IVec3) -> Result<Real> {
    Ok(Real::rat(proj_dist_sq(a, b)?).sqrt())
}

pub fn proj_dist_ball(a: &IVec3, b: &IVec3, prec: u32) -> Result<BallReal> {
    let d = proj_dist(a, b)?;
    BallReal::enclose(&d, prec).ok_or_else(|| Error::Internal("sqrt of a nonnegative".into()))
}

/// `|x|` as a certified real.
pub fn norm(x: &IVec3) -> Real {
    Real::sqrt_int(x.norm_sq())
}

pub fn is_parallel(a: &IVec3, b: &IVec3) -> bool {
    a.cross(b).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat::rat;
    use crate::exact::real::CertOrdering;
    use proptest::prelude::*;

    fn v(a: i64, b: i64, c: i64) -> IVec3 {
        IVec3::new(a, b, c)
    }

    #[test]
    fn examples() {
        let (e1, e2) = (IVec3::e(0), IVec3::e(1));
        assert_eq!(proj_dist_sq(&e1, &e1).unwrap(), rat(0, 1));
        assert_eq!(proj_dist_sq(&e1, &e2).unwrap(), rat(1, 1));
        assert_eq!(proj_dist_sq(&v(1, 1, 0), &e1).unwrap(), rat(1, 2));
        assert!(proj_dist_sq(&IVec3::zero(), &e1).is_err());
    }

    #[test]
    fn ball_examples() {
        let b = proj_dist_ball(&IVec3::e(0), &IVec3::e(1), 64).unwrap();
        assert!(b.interval().contains_rat(&rat(1, 1)));
        assert!(b.interval().width().msb() <= -63);
        let b = proj_dist_ball(&v(1, 1, 0), &IVec3::e(0), 64).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(b.interval().lo.to_f64_dir(false) <= s && b.interval().hi.to_f64_dir(true) >= s);
        let b = proj_dist_ball(&v(3, 4, 0), &IVec3::e(0), 64).unwrap();
        assert!(b.interval().contains_rat(&rat(4, 5)));
    }

    #[test]
    fn sqrt_half_certified_against_bounds() {
        let d = proj_dist(&v(1, 1, 0), &IVec3::e(0)).unwrap();
        let lo = BallReal::enclose(&Real::rat(rat(7071, 10000)), 64).unwrap();
        let hi = BallReal::enclose(&Real::rat(rat(7072, 10000)), 64).unwrap();
        let b = BallReal::enclose(&d, 64).unwrap();
        assert_eq!(crate::exact::real::certified_compare(&lo, &b, 256), CertOrdering::Less);
        assert_eq!(crate::exact::real::certified_compare(&b, &hi, 256), CertOrdering::Less);
    }

    fn nz() -> impl Strategy<Value = IVec3> {
        (-50i64..=50, -50i64..=50, -50i64..=50)
            .prop_map(|(a, b, c)| v(a, b, c))
            .prop_filter("nonzero", |x| !x.is_zero())
    }

    proptest! {
        #[test]
        fn scaling_and_symmetry(a in nz(), b in nz(), k in 1i64..20, l in -20i64..0) {
            let d = proj_dist_sq(&a, &b).unwrap();
            prop_assert_eq!(&d, &proj_dist_sq(&b, &a).unwrap());
            prop_assert_eq!(&d, &proj_dist_sq(&a.scale(&k.into()), &b.scale(&l.into())).unwrap());
            prop_assert!(d <= rat(1, 1));
        }

        #[test]
        fn lagrange_identity(a in nz(), b in nz()) {
            let ab = a.dot(&b);
            prop_assert_eq!(a.cross(&b).norm_sq() + &ab * &ab, a.norm_sq() * b.norm_sq());
        }
    }
}

//! Integer 3-vectors and lattice helpers.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::rat::Rat;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IVec3(pub [BigInt; 3]);

impl fmt::Debug for IVec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

impl fmt::Display for IVec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for IVec3 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IVec3 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        if v.len() != 3 {
            return Err(serde::de::Error::custom("expected three coordinates"));
        }
        let mut out = IVec3::zero();
        for (i, s) in v.iter().enumerate() {
            out.0[i] = BigInt::from_str(s.trim()).map_err(serde::de::Error::custom)?;
        }
        Ok(out)
    }
}

impl FromStr for IVec3 {
    type Err = String;

    /// Accepts `a,b,c` with optional surrounding parentheses or brackets.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim().trim_matches(|c| c == '(' || c == ')' || c == '[' || c == ']');
        let parts: Vec<&str> = t.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated integers, got {s:?}"));
        }
        let mut out = IVec3::zero();
        for (i, p) in parts.iter().enumerate() {
            out.0[i] = BigInt::from_str(p).map_err(|e| format!("bad coordinate {p:?}: {e}"))?;
        }
        Ok(out)
    }
}

impl IVec3 {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>, c: impl Into<BigInt>) -> Self {
        IVec3([a.into(), b.into(), c.into()])
    }

    pub fn zero() -> Self {
        Self::new(0, 0, 0)
    }

    pub fn e(i: usize) -> Self {
        let mut v = Self::zero();
        v.0[i] = BigInt::one();
        v
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn dot(&self, o: &IVec3) -> BigInt {
        &self.0[0] * &o.0[0] + &self.0[1] * &o.0[1] + &self.0[2] * &o.0[2]
    }

    pub fn cross(&self, o: &IVec3) -> IVec3 {
        let [a0, a1, a2] = &self.0;
        let [b0, b1, b2] = &o.0;
        IVec3([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])
    }

    pub fn norm_sq(&self) -> BigInt {
        self.dot(self)
    }

    pub fn add(&self, o: &IVec3) -> IVec3 {
        IVec3([&self.0[0] + &o.0[0], &self.0[1] + &o.0[1], &self.0[2] + &o.0[2]])
    }

    pub fn sub(&self, o: &IVec3) -> IVec3 {
        IVec3([&self.0[0] - &o.0[0], &self.0[1] - &o.0[1], &self.0[2] - &o.0[2]])
    }

    pub fn neg(&self) -> IVec3 {
        IVec3([-&self.0[0], -&self.0[1], -&self.0[2]])
    }

    pub fn scale(&self, k: &BigInt) -> IVec3 {
        IVec3([&self.0[0] * k, &self.0[1] * k, &self.0[2] * k])
    }

    /// `self + k * o`.
    pub fn add_mul(&self, k: &BigInt, o: &IVec3) -> IVec3 {
        self.add(&o.scale(k))
    }

    pub fn content(&self) -> BigInt {
        self.0[0].gcd(&self.0[1]).gcd(&self.0[2])
    }

    pub fn is_primitive_point(&self) -> bool {
        self.content().is_one()
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.0[i].to_f64().unwrap_or(f64::NAN))
    }

    /// Index of the coordinate with the largest magnitude (first on ties).
    pub fn argmax_abs(&self) -> usize {
        let mut k = 0;
        for i in 1..3 {
            if self.0[i].abs() > self.0[k].abs() {
                k = i;
            }
        }
        k
    }
}

pub fn det3(a: &IVec3, b: &IVec3, c: &IVec3) -> BigInt {
    a.dot(&b.cross(c))
}

pub fn is_primitive_pair(a: &IVec3, b: &IVec3) -> bool {
    a.cross(b).is_primitive_point()
}

/// Nearest integer to `r`, halves rounded up.
pub fn round_half_up(r: &Rat) -> BigInt {
    (r + Rat::new(1.into(), 2.into())).floor().to_integer()
}

/// Lagrange-Gauss reduction of a rank-2 lattice basis.
pub fn gauss_reduce(a: &IVec3, b: &IVec3) -> (IVec3, IVec3) {
    let (mut a, mut b) = (a.clone(), b.clone());
    loop {
        if a.norm_sq() > b.norm_sq() {
            std::mem::swap(&mut a, &mut b);
        }
        let mu = round_half_up(&Rat::new(a.dot(&b), a.norm_sq()));
        if mu.is_zero() {
            return (a, b);
        }
        b = b.sub(&a.scale(&mu));
    }
}

fn inv_unit(g: &BigInt) -> Option<BigInt> {
    if g.is_one() {
        Some(BigInt::one())
    } else if (-g).is_one() {
        Some(-BigInt::one())
    } else {
        None
    }
}

/// Canonical `z` with `det3(a, b, z) = 1`: a particular solution of
/// `cross(a,b) . z = 1` from the extended-gcd chain, reduced modulo `a` and
/// `b` to the shortest representative (lexicographically least on ties).
pub fn complete_to_basis(a: &IVec3, b: &IVec3) -> Result<IVec3> {
    let n = a.cross(b);
    if !n.is_primitive_point() {
        return Err(Error::NotPrimitive(format!("{a} ^ {b} = {n}")));
    }
    let e1 = n.0[0].extended_gcd(&n.0[1]);
    let e2 = e1.gcd.extended_gcd(&n.0[2]);
    let s = inv_unit(&e2.gcd).ok_or_else(|| Error::Internal("gcd chain".into()))?;
    let w = &e2.x * &s;
    let z0 = IVec3([&w * &e1.x, &w * &e1.y, &e2.y * &s]);
    debug_assert!(n.dot(&z0).is_one());
    Ok(closest_representative(&z0, a, b))
}

/// Shortest vector of `z + Za + Zb`, lexicographically least on ties.
pub fn closest_representative(z: &IVec3, a: &IVec3, b: &IVec3) -> IVec3 {
    let (a, b) = gauss_reduce(a, b);
    let aa = a.norm_sq();
    let bb = b.norm_sq();
    let ab = a.dot(&b);
    let g = &aa * &bb - &ab * &ab;
    // Real minimiser: z + sigma a + tau b orthogonal to the plane.
    let za = z.dot(&a);
    let zb = z.dot(&b);
    let sigma = Rat::new(&ab * &zb - &bb * &za, g.clone());
    let tau = Rat::new(&ab * &za - &aa * &zb, g.clone());
    let babai = z
        .add(&a.scale(&round_half_up(&sigma)))
        .add(&b.scale(&round_half_up(&tau)));
    let r2 = babai.norm_sq();
    // After minimising over s, the residual is at least (G/|a|^2)(t - tau)^2.
    let lim = Rat::new(&r2 * &aa, g.clone());
    let span: BigInt = lim.ceil().to_integer().sqrt() + 1;
    let t_lo = tau.floor().to_integer() - &span;
    let t_hi = tau.ceil().to_integer() + &span;
    let mut best: Option<(BigInt, IVec3)> = None;
    let mut t = t_lo;
    while t <= t_hi {
        let dt = Rat::from_integer(t.clone()) - &tau;
        if &dt * &dt <= lim {
            let zt = z.add(&b.scale(&t));
            let s_star = Rat::new(-zt.dot(&a), aa.clone());
            for s in [s_star.floor().to_integer(), s_star.ceil().to_integer()] {
                let c = zt.add(&a.scale(&s));
                let nc = c.norm_sq();
                let better = match &best {
                    None => true,
                    Some((bn, bv)) => nc < *bn || (nc == *bn && c < *bv),
                };
                if better {
                    best = Some((nc, c));
                }
            }
        }
        t += 1;
    }
    best.expect("babai candidate lies in range").1
}

/// Completes a primitive vector to a unimodular basis `(x, b, c)` with
/// `det3(x, b, c) = 1`. `b` is the shorter of the two new vectors.
pub fn unimodular_completion(x: &IVec3) -> Result<(IVec3, IVec3)> {
    if !x.is_primitive_point() {
        return Err(Error::NotPrimitive(format!("{x}")));
    }
    // Column operations on the row vector v; rows of `m` track U^{-1},
    // so that x = v * m throughout.
    let mut v = x.0.clone();
    let mut m = [IVec3::e(0), IVec3::e(1), IVec3::e(2)];
    loop {
        let nz: Vec<usize> = (0..3).filter(|&i| !v[i].is_zero()).collect();
        if nz.len() == 1 {
            let i = nz[0];
            let mut rest: Vec<IVec3> = (0..3).filter(|&j| j != i).map(|j| m[j].clone()).collect();
            rest.sort_by(|p, q| p.norm_sq().cmp(&q.norm_sq()).then_with(|| p.cmp(q)));
            let b = rest[0].clone();
            let mut c = rest[1].clone();
            if det3(x, &b, &c).is_negative() {
                c = c.neg();
            }
            debug_assert!(det3(x, &b, &c).is_one());
            return Ok((b, c));
        }
        let i = *nz.iter().min_by_key(|&&i| v[i].abs()).unwrap();
        for &j in &nz {
            if j == i {
                continue;
            }
            let q = v[j].div_floor(&v[i]);
            v[j] -= &q * &v[i];
            m[i] = m[i].add(&m[j].scale(&q));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(a: i64, b: i64, c: i64) -> IVec3 {
        IVec3::new(a, b, c)
    }

    #[test]
    fn basic_products() {
        assert_eq!(v(1, 0, 0).dot(&v(0, 1, 0)), 0.into());
        assert_eq!(v(1, 2, 3).dot(&v(1, 2, 3)), 14.into());
        assert_eq!(v(77, 0, 12).dot(&v(0, 0, 1)), 12.into());
        assert_eq!(v(1, 0, 0).cross(&v(0, 1, 0)), v(0, 0, 1));
        assert_eq!(v(3, 4, 0).cross(&v(1, 0, 0)), v(0, 0, -4));
        assert!(v(5, -2, 7).cross(&v(5, -2, 7)).is_zero());
    }

    #[test]
    fn determinants() {
        let (e1, e2, e3) = (IVec3::e(0), IVec3::e(1), IVec3::e(2));
        assert_eq!(det3(&e1, &e2, &e3), 1.into());
        assert_eq!(det3(&e1, &e2, &v(77, 0, 12)), 12.into());
        assert_eq!(det3(&v(6, 0, 1), &e2, &v(77, 0, 12)), (-5).into());
    }

    #[test]
    fn primitivity() {
        assert!(!v(2, 4, 6).is_primitive_point());
        assert!(v(0, 0, 1).is_primitive_point());
        assert!(v(12, 0, -77).is_primitive_point());
        assert!(!IVec3::zero().is_primitive_point());
        assert!(is_primitive_pair(&IVec3::e(0), &IVec3::e(1)));
        assert!(!is_primitive_pair(&v(2, 0, 0), &v(0, 2, 0)));
        assert!(is_primitive_pair(&IVec3::e(1), &v(77, 0, 12)));
    }

    #[test]
    fn canonical_completion() {
        let (e1, e2, e3) = (IVec3::e(0), IVec3::e(1), IVec3::e(2));
        assert_eq!(complete_to_basis(&e1, &e2).unwrap(), e3);
        assert_eq!(complete_to_basis(&e2, &e3).unwrap(), e1);
        let x = v(77, 0, 12);
        let z = complete_to_basis(&e2, &x).unwrap();
        assert_eq!(det3(&e2, &x, &z), 1.into());
        assert!(complete_to_basis(&v(2, 0, 0), &v(0, 2, 0)).is_err());
    }

    #[test]
    fn completion_of_single_vector() {
        let (b, c) = unimodular_completion(&v(0, 0, 1)).unwrap();
        assert_eq!(b, v(0, 1, 0));
        assert_eq!(det3(&v(0, 0, 1), &b, &c), 1.into());
        let x = v(6, 10, 15);
        let (b, c) = unimodular_completion(&x).unwrap();
        assert_eq!(det3(&x, &b, &c), 1.into());
    }

    fn small() -> impl Strategy<Value = IVec3> {
        (-30i64..=30, -30i64..=30, -30i64..=30).prop_map(|(a, b, c)| v(a, b, c))
    }

    proptest! {
        #[test]
        fn completion_is_shortest(a in small(), b in small()) {
            prop_assume!(is_primitive_pair(&a, &b));
            let z = complete_to_basis(&a, &b).unwrap();
            prop_assert!(det3(&a, &b, &z).is_one());
            // Brute-force oracle over a window of shifts.
            let nz = z.norm_sq();
            for s in -6i64..=6 {
                for t in -6i64..=6 {
                    let w = z.add(&a.scale(&s.into())).add(&b.scale(&t.into()));
                    prop_assert!(w.norm_sq() > nz || (w.norm_sq() == nz && w >= z));
                }
            }
        }

        #[test]
        fn cross_antisymmetric(a in small(), b in small(), c in small()) {
            prop_assert_eq!(a.cross(&b), b.cross(&a).neg());
            prop_assert_eq!(det3(&a, &b, &c), a.dot(&b.cross(&c)));
        }

        #[test]
        fn single_completion_unimodular(a in small()) {
            prop_assume!(a.is_primitive_point());
            let (b, c) = unimodular_completion(&a).unwrap();
            prop_assert!(det3(&a, &b, &c).is_one());
        }
    }
}

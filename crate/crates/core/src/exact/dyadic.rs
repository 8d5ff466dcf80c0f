//! Dyadic rationals and outward-rounded interval arithmetic.
//!
//! Every interval operation takes a target precision in significant bits and
//! rounds its lower endpoint toward -inf and its upper endpoint toward +inf,
//! so the exact result of the operation on any pair of enclosed reals stays
//! inside the returned interval.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

/// `man * 2^exp`, kept with an odd mantissa (or zero with `exp == 0`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    man: BigInt,
    exp: i64,
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.man, self.exp)
    }
}

fn pow2(k: u64) -> BigInt {
    BigInt::one() << k
}

/// Quotient `num / den` as a dyadic with at least `prec` significant bits,
/// rounded down (`up == false`) or up.
fn div_round_int(num: &BigInt, den: &BigInt, prec: u32, up: bool) -> Dyadic {
    debug_assert!(!den.is_zero());
    let (num, den) = if den.is_negative() {
        (-num, -den)
    } else {
        (num.clone(), den.clone())
    };
    if num.is_zero() {
        return Dyadic::zero();
    }
    let s = prec as i64 + den.bits() as i64 - num.bits() as i64 + 2;
    let (n, d) = if s >= 0 {
        (num << s as u64, den)
    } else {
        (num, den << (-s) as u64)
    };
    let (q, r) = n.div_mod_floor(&d);
    let q = if up && !r.is_zero() { q + 1 } else { q };
    Dyadic::new(q, -s).round(prec, up)
}

impl Dyadic {
    pub fn new(man: BigInt, exp: i64) -> Self {
        if man.is_zero() {
            return Self::zero();
        }
        let tz = man.trailing_zeros().unwrap_or(0);
        if tz == 0 {
            Dyadic { man, exp }
        } else {
            Dyadic {
                man: man >> tz,
                exp: exp + tz as i64,
            }
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            man: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_int(BigInt::one())
    }

    pub fn from_int(n: BigInt) -> Self {
        Self::new(n, 0)
    }

    pub fn from_i64(n: i64) -> Self {
        Self::new(BigInt::from(n), 0)
    }

    pub fn pow2(e: i64) -> Self {
        Dyadic {
            man: BigInt::one(),
            exp: e,
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.man
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.man.is_zero()
    }

    pub fn sign(&self) -> Sign {
        self.man.sign()
    }

    pub fn is_positive(&self) -> bool {
        self.man.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.man.is_negative()
    }

    pub fn neg(&self) -> Self {
        Dyadic {
            man: -&self.man,
            exp: self.exp,
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            man: self.man.abs(),
            exp: self.exp,
        }
    }

    /// Position of the leading bit: `2^(msb) <= |self| < 2^(msb+1)`.
    pub fn msb(&self) -> i64 {
        if self.is_zero() {
            i64::MIN / 4
        } else {
            self.exp + self.man.bits() as i64 - 1
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(o.exp);
        let a = &self.man << (self.exp - e) as u64;
        let b = &o.man << (o.exp - e) as u64;
        Self::new(a + b, e)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(&self.man * &o.man, self.exp + o.exp)
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Dyadic {
            man: self.man.clone(),
            exp: self.exp + k,
        }
    }

    /// Round to at most `prec` significant bits, toward +inf if `up`, else -inf.
    pub fn round(&self, prec: u32, up: bool) -> Self {
        let bits = self.man.bits();
        if bits <= prec as u64 {
            return self.clone();
        }
        let shift = bits - prec as u64;
        let (q, r) = self.man.div_mod_floor(&pow2(shift));
        let q = if up && !r.is_zero() { q + 1 } else { q };
        Self::new(q, self.exp + shift as i64)
    }

    pub fn div_round(&self, o: &Self, prec: u32, up: bool) -> Self {
        let q = div_round_int(&self.man, &o.man, prec, up);
        q.mul_pow2(self.exp - o.exp)
    }

    /// Rounded square root of a nonnegative dyadic.
    pub fn sqrt_round(&self, prec: u32, up: bool) -> Self {
        assert!(!self.is_negative(), "sqrt of negative dyadic");
        if self.is_zero() {
            return Self::zero();
        }
        let want = 2 * prec as u64 + 4;
        let bits = self.man.bits();
        let mut s: i64 = if bits < want { (want - bits) as i64 } else { 0 };
        if (self.exp - s).rem_euclid(2) != 0 {
            s += 1;
        }
        let t = &self.man << s as u64;
        let r = t.sqrt();
        let r = if up && &r * &r != t { r + 1 } else { r };
        Self::new(r, (self.exp - s) / 2).round(prec, up)
    }

    pub fn from_rat_round(r: &BigRational, prec: u32, up: bool) -> Self {
        div_round_int(r.numer(), r.denom(), prec, up)
    }

    pub fn to_rat(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.man << self.exp as u64)
        } else {
            BigRational::new(self.man.clone(), pow2((-self.exp) as u64))
        }
    }

    /// Floor of the value as an integer.
    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            &self.man << self.exp as u64
        } else {
            self.man.div_floor(&pow2((-self.exp) as u64))
        }
    }

    pub fn ceil(&self) -> BigInt {
        -self.neg().floor()
    }

    /// Conversion to `f64` rounded toward -inf (`up == false`) or +inf.
    pub fn to_f64_dir(&self, up: bool) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.round(53, up);
        let m = r.man.to_f64().expect("53-bit mantissa fits f64");
        let msb = r.msb();
        if msb > 1023 {
            return match (r.is_positive(), up) {
                (true, true) => f64::INFINITY,
                (true, false) => f64::MAX,
                (false, true) => f64::MIN,
                (false, false) => f64::NEG_INFINITY,
            };
        }
        if msb < -1000 {
            return match (r.is_positive(), up) {
                (true, true) => f64::MIN_POSITIVE,
                (true, false) => 0.0,
                (false, true) => -0.0,
                (false, false) => -f64::MIN_POSITIVE,
            };
        }
        let mut v = m;
        let mut e = r.exp;
        while e > 0 {
            let k = e.min(512);
            v *= 2f64.powi(k as i32);
            e -= k;
        }
        while e < 0 {
            let k = (-e).min(512);
            v /= 2f64.powi(k as i32);
            e += k;
        }
        v
    }

    pub fn to_f64(&self) -> f64 {
        self.to_f64_dir(false)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.sub(other);
        match d.sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }
}

/// Closed interval `[lo, hi]` with dyadic endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl Interval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        debug_assert!(lo <= hi, "inverted interval {lo:?} > {hi:?}");
        Interval { lo, hi }
    }

    pub fn point(d: Dyadic) -> Self {
        Interval {
            lo: d.clone(),
            hi: d,
        }
    }

    pub fn from_int(n: &BigInt) -> Self {
        Self::point(Dyadic::from_int(n.clone()))
    }

    pub fn from_i64(n: i64) -> Self {
        Self::point(Dyadic::from_i64(n))
    }

    pub fn from_rat(r: &BigRational, prec: u32) -> Self {
        Interval {
            lo: Dyadic::from_rat_round(r, prec, false),
            hi: Dyadic::from_rat_round(r, prec, true),
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn width(&self) -> Dyadic {
        self.hi.sub(&self.lo)
    }

    pub fn mid(&self) -> Dyadic {
        self.lo.add(&self.hi).mul_pow2(-1)
    }

    pub fn rad(&self) -> Dyadic {
        self.width().mul_pow2(-1)
    }

    pub fn contains(&self, d: &Dyadic) -> bool {
        &self.lo <= d && d <= &self.hi
    }

    pub fn contains_rat(&self, r: &BigRational) -> bool {
        self.lo.to_rat() <= *r && *r <= self.hi.to_rat()
    }

    pub fn intersect(&self, o: &Self) -> Self {
        let lo = if self.lo >= o.lo { &self.lo } else { &o.lo };
        let hi = if self.hi <= o.hi { &self.hi } else { &o.hi };
        if lo <= hi {
            Interval::new(lo.clone(), hi.clone())
        } else {
            // Disjoint enclosures of one real cannot happen; keep the tighter input.
            if self.width() <= o.width() {
                self.clone()
            } else {
                o.clone()
            }
        }
    }

    pub fn neg(&self) -> Self {
        Interval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
        }
    }

    pub fn abs(&self) -> Self {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            let m = if self.lo.abs() > self.hi { self.lo.abs() } else { self.hi.clone() };
            Interval::new(Dyadic::zero(), m)
        }
    }

    pub fn add(&self, o: &Self, prec: u32) -> Self {
        Interval {
            lo: self.lo.add(&o.lo).round(prec, false),
            hi: self.hi.add(&o.hi).round(prec, true),
        }
    }

    pub fn sub(&self, o: &Self, prec: u32) -> Self {
        self.add(&o.neg(), prec)
    }

    pub fn mul(&self, o: &Self, prec: u32) -> Self {
        let c = [
            self.lo.mul(&o.lo),
            self.lo.mul(&o.hi),
            self.hi.mul(&o.lo),
            self.hi.mul(&o.hi),
        ];
        let lo = c.iter().min().unwrap();
        let hi = c.iter().max().unwrap();
        Interval {
            lo: lo.round(prec, false),
            hi: hi.round(prec, true),
        }
    }

    pub fn square(&self, prec: u32) -> Self {
        let a = self.abs();
        Interval {
            lo: a.lo.mul(&a.lo).round(prec, false),
            hi: a.hi.mul(&a.hi).round(prec, true),
        }
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        Interval {
            lo: self.lo.mul_pow2(k),
            hi: self.hi.mul_pow2(k),
        }
    }

    /// `None` when the divisor encloses zero.
    pub fn div(&self, o: &Self, prec: u32) -> Option<Self> {
        if o.contains_zero() {
            return None;
        }
        let pairs = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let lo = pairs
            .iter()
            .map(|(a, b)| a.div_round(b, prec, false))
            .min()
            .unwrap();
        let hi = pairs
            .iter()
            .map(|(a, b)| a.div_round(b, prec, true))
            .max()
            .unwrap();
        Some(Interval { lo, hi })
    }

    pub fn div_int(&self, k: u64, prec: u32) -> Self {
        let d = Dyadic::from_int(BigInt::from(k));
        Interval {
            lo: self.lo.div_round(&d, prec, false),
            hi: self.hi.div_round(&d, prec, true),
        }
    }

    /// Square root; a slightly negative lower end (from rounding of a
    /// nonnegative quantity) is clamped to zero. `None` if `hi < 0`.
    pub fn sqrt(&self, prec: u32) -> Option<Self> {
        if self.hi.is_negative() {
            return None;
        }
        let lo = if self.lo.is_negative() {
            Dyadic::zero()
        } else {
            self.lo.sqrt_round(prec, false)
        };
        Some(Interval {
            lo,
            hi: self.hi.sqrt_round(prec, true),
        })
    }

    pub fn ln(&self, prec: u32) -> Option<Self> {
        if !self.lo.is_positive() {
            return None;
        }
        let lo = ln_point(&self.lo, prec).lo;
        let hi = if self.is_point() {
            ln_point(&self.hi, prec).hi
        } else {
            ln_point(&self.hi, prec).hi
        };
        Some(Interval { lo, hi })
    }

    pub fn exp(&self, prec: u32) -> Self {
        let lo = exp_point(&self.lo, prec).lo;
        let hi = exp_point(&self.hi, prec).hi;
        Interval { lo, hi }
    }

    /// Relative width `log2(|hi - lo| / max|endpoint|)`; smaller is tighter.
    pub fn rel_width_log2(&self) -> i64 {
        let w = self.width();
        if w.is_zero() {
            return i64::MIN / 4;
        }
        let m = self.lo.abs().max(self.hi.abs());
        w.msb() - m.msb()
    }
}

fn bitlen(k: i64) -> u32 {
    64 - k.unsigned_abs().leading_zeros()
}

/// `ln(m)` for `1 <= m <= 2`, computed as `2^(k+1) atanh(z)` with
/// `z = (m^(1/2^k) - 1)/(m^(1/2^k) + 1)`.
fn ln_unit(m: &Dyadic, wp: u32) -> Interval {
    if *m == Dyadic::one() {
        return Interval::point(Dyadic::zero());
    }
    let k = (wp as f64).sqrt() as u32 / 2 + 2;
    let p2 = wp + k + 16;
    let one = Interval::point(Dyadic::one());
    let mut x = Interval::point(m.clone());
    for _ in 0..k {
        x = x.sqrt(p2).expect("positive");
    }
    let num = x.sub(&one, p2);
    let num = Interval::new(
        if num.lo.is_negative() { Dyadic::zero() } else { num.lo },
        num.hi,
    );
    let den = x.add(&one, p2);
    let z = num.div(&den, p2).expect("den > 1");
    let z2 = z.square(p2);
    let eps = Dyadic::pow2(-(p2 as i64) - 2);
    let mut sum = z.clone();
    let mut term = z;
    let mut j: u64 = 1;
    loop {
        term = term.mul(&z2, p2);
        sum = sum.add(&term.div_int(2 * j + 1, p2), p2);
        j += 1;
        if term.hi < eps {
            break;
        }
    }
    // Remaining tail is below z^(2j+1) / (1 - z^2) <= 2 * term * z^2.
    let tail = term.hi.mul(&z2.hi).mul_pow2(1).round(p2, true);
    let sum = Interval::new(sum.lo, sum.hi.add(&tail).round(p2, true));
    sum.mul_pow2(k as i64 + 1)
}

static LN2_CACHE: Lazy<Mutex<HashMap<u32, Interval>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Enclosure of `ln 2` with roughly `prec` correct bits.
pub fn ln2(prec: u32) -> Interval {
    let key = prec.div_ceil(64) * 64;
    if let Some(v) = LN2_CACHE.lock().unwrap().get(&key) {
        return v.clone();
    }
    let v = ln_unit(&Dyadic::from_i64(2), key + 8);
    LN2_CACHE.lock().unwrap().insert(key, v.clone());
    v
}

fn ln_point(d: &Dyadic, prec: u32) -> Interval {
    let e = d.msb();
    let m = d.mul_pow2(-e);
    let wp = prec + 16 + bitlen(e);
    let lm = ln_unit(&m, wp);
    if e == 0 {
        return lm;
    }
    let l2 = ln2(wp + bitlen(e));
    let el2 = l2.mul(&Interval::from_i64(e), wp);
    el2.add(&lm, wp)
}

fn exp_point(x: &Dyadic, prec: u32) -> Interval {
    if x.is_zero() {
        return Interval::point(Dyadic::one());
    }
    let xf = x.to_f64();
    assert!(xf.abs() < 1e15, "exp argument out of range: {xf}");
    let k = (xf / std::f64::consts::LN_2).round() as i64;
    let s = (prec as f64).sqrt() as u32 / 2 + 2;
    let wp = prec + 24 + bitlen(k) + s;
    let r = if k == 0 {
        Interval::point(x.clone())
    } else {
        let kl2 = ln2(wp + bitlen(k)).mul(&Interval::from_i64(k), wp + 8);
        Interval::point(x.clone()).sub(&kl2, wp)
    };
    let t = r.mul_pow2(-(s as i64));
    let eps = Dyadic::pow2(-(wp as i64) - 4);
    let mut sum = Interval::point(Dyadic::one());
    let mut term = Interval::point(Dyadic::one());
    let mut j: u64 = 1;
    loop {
        term = term.mul(&t, wp).div_int(j, wp);
        sum = sum.add(&term, wp);
        j += 1;
        if term.abs().hi < eps {
            break;
        }
    }
    // |t| < 1/2, so the remainder is below twice the next term.
    let ta = t.abs().hi;
    let rem = term.abs().hi.mul(&ta).mul_pow2(1).round(wp, true);
    let mut v = Interval::new(
        sum.lo.sub(&rem).round(wp, false),
        sum.hi.add(&rem).round(wp, true),
    );
    for _ in 0..s {
        v = v.square(wp);
    }
    let v = v.mul_pow2(k);
    Interval {
        lo: v.lo.round(prec + 8, false),
        hi: v.hi.round(prec + 8, true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(d: &Dyadic) -> f64 {
        d.to_f64()
    }

    #[test]
    fn rounding_directions() {
        let d = Dyadic::from_i64(0b1011);
        assert_eq!(d.round(2, false), Dyadic::from_i64(8));
        assert_eq!(d.round(2, true), Dyadic::from_i64(12));
        let n = d.neg();
        assert_eq!(n.round(2, false), Dyadic::from_i64(-12));
        assert_eq!(n.round(2, true), Dyadic::from_i64(-8));
    }

    #[test]
    fn sqrt_two_bracketed() {
        let two = Dyadic::from_i64(2);
        let lo = two.sqrt_round(80, false);
        let hi = two.sqrt_round(80, true);
        assert!(lo.mul(&lo) < two && hi.mul(&hi) > two);
        assert!(hi.sub(&lo).msb() <= -78);
    }

    #[test]
    fn ln2_matches_f64() {
        let l = ln2(128);
        assert!(f(&l.lo) <= std::f64::consts::LN_2 + 1e-15);
        assert!(f(&l.hi) >= std::f64::consts::LN_2 - 1e-15);
        assert!(l.width().msb() < -120);
    }

    #[test]
    fn exp_ln_round_trip() {
        for v in [1i64, 3, 10, 1000, 123456] {
            let x = Interval::from_i64(v);
            let y = x.ln(100).unwrap().exp(100);
            assert!(y.contains(&Dyadic::from_i64(v)), "{v}: {y:?}");
            assert!(y.rel_width_log2() < -80);
        }
    }

    #[test]
    fn exp_of_one_encloses_e() {
        let e = Interval::from_i64(1).exp(200);
        assert!(e.lo.to_f64_dir(false) <= std::f64::consts::E && e.hi.to_f64_dir(true) >= std::f64::consts::E);
        assert!(e.rel_width_log2() < -190);
    }

    #[test]
    fn exp_negative_and_large() {
        let x = Interval::from_i64(-5).exp(64);
        assert!((f(&x.lo) - (-5f64).exp()).abs() < 1e-15);
        let y = Interval::from_i64(700).exp(64);
        assert!((f(&y.mid()) / 700f64.exp() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn division_brackets_one_third() {
        let third = Interval::from_i64(1).div(&Interval::from_i64(3), 64).unwrap();
        let r = BigRational::new(1.into(), 3.into());
        assert!(third.contains_rat(&r));
        assert!(Interval::from_i64(1)
            .div(&Interval::new(Dyadic::from_i64(-1), Dyadic::from_i64(1)), 64)
            .is_none());
    }
}

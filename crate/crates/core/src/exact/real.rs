//! Certified real numbers.
//!
//! A [`Real`] is an expression tree over exact rationals that can be
//! re-evaluated at any working precision; a [`BallReal`] is one evaluation of
//! it (midpoint and radius) that keeps the handle for later refinement.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::dyadic::{Dyadic, Interval};
use super::rat::Rat;

pub const DEFAULT_START_PREC: u32 = 64;
pub const DEFAULT_MAX_PREC: u32 = 1 << 16;

#[derive(Debug)]
enum Node {
    Rat(Rat),
    Add(Real, Real),
    Sub(Real, Real),
    Mul(Real, Real),
    Div(Real, Real),
    Sqrt(Real),
    Ln(Real),
    Exp(Real),
}

#[derive(Clone)]
pub struct Real {
    node: Arc<Node>,
    exact: Option<Arc<Rat>>,
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(r) => write!(f, "Real({r})"),
            None => write!(f, "Real({:?})", self.node),
        }
    }
}

fn exact_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(Rat::new(n, d))
    } else {
        None
    }
}

impl Real {
    fn mk(node: Node) -> Self {
        let exact = match &node {
            Node::Rat(r) => Some(r.clone()),
            Node::Add(a, b) => a.both(b).map(|(x, y)| x + y),
            Node::Sub(a, b) => a.both(b).map(|(x, y)| x - y),
            Node::Mul(a, b) => match (a.exact(), b.exact()) {
                (Some(x), _) | (_, Some(x)) if x.is_zero() => Some(Rat::zero()),
                _ => a.both(b).map(|(x, y)| x * y),
            },
            Node::Div(a, b) => a
                .both(b)
                .and_then(|(x, y)| if y.is_zero() { None } else { Some(x / y) }),
            Node::Sqrt(a) => a.exact.as_deref().and_then(exact_sqrt),
            Node::Ln(a) => a
                .exact
                .as_deref()
                .and_then(|x| if x == &Rat::from_integer(1.into()) { Some(Rat::zero()) } else { None }),
            Node::Exp(a) => a
                .exact
                .as_deref()
                .and_then(|x| if x.is_zero() { Some(Rat::from_integer(1.into())) } else { None }),
        };
        Real {
            node: Arc::new(node),
            exact: exact.map(Arc::new),
        }
    }

    fn both(&self, o: &Real) -> Option<(Rat, Rat)> {
        match (&self.exact, &o.exact) {
            (Some(a), Some(b)) => Some(((**a).clone(), (**b).clone())),
            _ => None,
        }
    }

    pub fn rat(r: Rat) -> Self {
        Self::mk(Node::Rat(r))
    }

    pub fn int(n: impl Into<BigInt>) -> Self {
        Self::rat(Rat::from_integer(n.into()))
    }

    pub fn sqrt_int(n: impl Into<BigInt>) -> Self {
        Self::int(n).sqrt()
    }

    /// The golden ratio `(1 + sqrt 5) / 2`.
    pub fn gamma() -> Self {
        Real::int(1).add(&Real::sqrt_int(5)).div(&Real::int(2))
    }

    pub fn exact(&self) -> Option<&Rat> {
        self.exact.as_deref()
    }

    pub fn add(&self, o: &Real) -> Real {
        Self::mk(Node::Add(self.clone(), o.clone()))
    }

    pub fn sub(&self, o: &Real) -> Real {
        Self::mk(Node::Sub(self.clone(), o.clone()))
    }

    pub fn mul(&self, o: &Real) -> Real {
        Self::mk(Node::Mul(self.clone(), o.clone()))
    }

    pub fn div(&self, o: &Real) -> Real {
        Self::mk(Node::Div(self.clone(), o.clone()))
    }

    pub fn sqrt(&self) -> Real {
        Self::mk(Node::Sqrt(self.clone()))
    }

    pub fn ln(&self) -> Real {
        Self::mk(Node::Ln(self.clone()))
    }

    pub fn exp(&self) -> Real {
        Self::mk(Node::Exp(self.clone()))
    }

    pub fn square(&self) -> Real {
        self.mul(self)
    }

    pub fn mul_rat(&self, r: &Rat) -> Real {
        self.mul(&Real::rat(r.clone()))
    }

    /// `self^e` for a positive base.
    pub fn pow(&self, e: &Real) -> Real {
        match e.exact() {
            Some(x) if x.is_integer() && x.numer().magnitude().bits() <= 6 => {
                let k: i64 = x.numer().try_into().expect("small exponent");
                self.powi(k)
            }
            _ => e.mul(&self.ln()).exp(),
        }
    }

    /// Integer power by repeated squaring; exact inputs stay exact.
    pub fn powi(&self, k: i64) -> Real {
        if k < 0 {
            return Real::int(1).div(&self.powi(-k));
        }
        let mut out = Real::int(1);
        let mut base = self.clone();
        let mut k = k as u64;
        while k > 0 {
            if k & 1 == 1 {
                out = if out.exact().is_some_and(|r| r == &Rat::from_integer(1.into())) {
                    base.clone()
                } else {
                    out.mul(&base)
                };
            }
            k >>= 1;
            if k > 0 {
                base = base.square();
            }
        }
        out
    }

    /// Enclosure at working precision `prec`; `None` if an intermediate
    /// division or logarithm could not be separated from zero.
    pub fn eval(&self, prec: u32) -> Option<Interval> {
        if let Some(r) = &self.exact {
            return Some(Interval::from_rat(r, prec + 2));
        }
        let g = prec + 8;
        match &*self.node {
            Node::Rat(r) => Some(Interval::from_rat(r, prec)),
            Node::Add(a, b) => Some(a.eval(g)?.add(&b.eval(g)?, prec + 4)),
            Node::Sub(a, b) => Some(a.eval(g)?.sub(&b.eval(g)?, prec + 4)),
            Node::Mul(a, b) => Some(a.eval(g)?.mul(&b.eval(g)?, prec + 4)),
            Node::Div(a, b) => a.eval(g)?.div(&b.eval(g)?, prec + 4),
            Node::Sqrt(a) => a.eval(g)?.sqrt(prec + 4),
            Node::Ln(a) => a.eval(g)?.ln(prec + 4),
            Node::Exp(a) => {
                let x = a.eval(g)?;
                let mag = x.lo.abs().max(x.hi.abs()).msb().max(0) as u32;
                let x = if mag > 0 { a.eval(g + mag)? } else { x };
                Some(x.exp(prec + 4))
            }
        }
    }
}

/// Outcome of a certified comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertOrdering {
    Less,
    Greater,
    /// Only produced when both sides are exact rationals that coincide.
    Equal,
    Undecided,
}

/// Midpoint-radius enclosure of a [`Real`].
#[derive(Clone, Debug)]
pub struct BallReal {
    mid: Dyadic,
    rad: Dyadic,
    prec: u32,
    real: Real,
}

impl BallReal {
    pub fn enclose(real: &Real, prec: u32) -> Option<BallReal> {
        let iv = real.eval(prec)?;
        Some(BallReal {
            mid: iv.mid(),
            rad: iv.rad(),
            prec,
            real: real.clone(),
        })
    }

    /// Re-evaluates at `prec`; the result is intersected with the current
    /// enclosure so refinement never widens it.
    pub fn refine(&self, prec: u32) -> BallReal {
        match self.real.eval(prec) {
            Some(iv) => {
                let iv = iv.intersect(&self.interval());
                BallReal {
                    mid: iv.mid(),
                    rad: iv.rad(),
                    prec: prec.max(self.prec),
                    real: self.real.clone(),
                }
            }
            None => self.clone(),
        }
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.mid.sub(&self.rad), self.mid.add(&self.rad))
    }

    pub fn mid(&self) -> &Dyadic {
        &self.mid
    }

    pub fn rad(&self) -> &Dyadic {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn real(&self) -> &Real {
        &self.real
    }

    pub fn to_json(&self) -> BallJson {
        BallJson::from_interval(&self.interval())
    }
}

/// Wire form of a ball: value = man * 2^exp for midpoint and radius.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallJson {
    pub mid_man: String,
    pub mid_exp: i64,
    pub rad_man: String,
    pub rad_exp: i64,
}

impl BallJson {
    pub fn from_interval(iv: &Interval) -> Self {
        let m = iv.mid();
        let r = iv.rad();
        BallJson {
            mid_man: m.mantissa().to_string(),
            mid_exp: m.exponent(),
            rad_man: r.mantissa().to_string(),
            rad_exp: r.exponent(),
        }
    }

    pub fn to_interval(&self) -> Result<Interval, String> {
        let mm: BigInt = self.mid_man.parse().map_err(|e| format!("{e}"))?;
        let rm: BigInt = self.rad_man.parse().map_err(|e| format!("{e}"))?;
        if rm.is_negative() {
            return Err("negative radius".into());
        }
        let m = Dyadic::new(mm, self.mid_exp);
        let r = Dyadic::new(rm, self.rad_exp);
        Ok(Interval::new(m.sub(&r), m.add(&r)))
    }

    pub fn approx_f64(&self) -> f64 {
        self.to_interval().map(|i| i.mid().to_f64()).unwrap_or(f64::NAN)
    }
}

fn separate(a: &Interval, b: &Interval) -> Option<Ordering> {
    if a.hi < b.lo {
        Some(Ordering::Less)
    } else if a.lo > b.hi {
        Some(Ordering::Greater)
    } else {
        None
    }
}

/// Compares two enclosed reals, doubling the working precision from the
/// current enclosures up to `max_prec`. Never returns a wrong strict answer.
pub fn certified_compare(a: &BallReal, b: &BallReal, max_prec: u32) -> CertOrdering {
    if let (Some(x), Some(y)) = (a.real.exact(), b.real.exact()) {
        return match x.cmp(y) {
            Ordering::Less => CertOrdering::Less,
            Ordering::Greater => CertOrdering::Greater,
            Ordering::Equal => CertOrdering::Equal,
        };
    }
    if let Some(o) = separate(&a.interval(), &b.interval()) {
        return o.into();
    }
    let mut p = a.prec.min(b.prec).max(DEFAULT_START_PREC);
    while p < max_prec {
        p = (p * 2).min(max_prec);
        let (ia, ib) = (a.refine(p).interval(), b.refine(p).interval());
        if let Some(o) = separate(&ia, &ib) {
            return o.into();
        }
    }
    CertOrdering::Undecided
}

/// Convenience wrapper over [`certified_compare`] for bare handles.
pub fn compare_reals(a: &Real, b: &Real, max_prec: u32) -> CertOrdering {
    compare_with_prec(a, b, max_prec).0
}

/// As [`compare_reals`], also returning the working precision that decided.
pub fn compare_with_prec(a: &Real, b: &Real, max_prec: u32) -> (CertOrdering, u32) {
    if let (Some(x), Some(y)) = (a.exact(), b.exact()) {
        return (x.cmp(y).into(), 0);
    }
    let mut p = DEFAULT_START_PREC.min(max_prec);
    loop {
        if let (Some(ia), Some(ib)) = (a.eval(p), b.eval(p)) {
            if let Some(o) = separate(&ia, &ib) {
                return (o.into(), p);
            }
        }
        if p >= max_prec {
            return (CertOrdering::Undecided, p);
        }
        p = (p * 2).min(max_prec);
    }
}

impl From<Ordering> for CertOrdering {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Less => CertOrdering::Less,
            Ordering::Greater => CertOrdering::Greater,
            Ordering::Equal => CertOrdering::Equal,
        }
    }
}

/// Verdict of a single certified inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Undecided,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Worst of two verdicts (Fail > Undecided > Pass).
    pub fn and(self, o: Verdict) -> Verdict {
        use Verdict::*;
        match (self, o) {
            (Fail, _) | (_, Fail) => Fail,
            (Undecided, _) | (_, Undecided) => Undecided,
            _ => Pass,
        }
    }
}

/// Certifies `a <= b`.
pub fn cert_le(a: &Real, b: &Real, max_prec: u32) -> Verdict {
    match compare_reals(a, b, max_prec) {
        CertOrdering::Less | CertOrdering::Equal => Verdict::Pass,
        CertOrdering::Greater => Verdict::Fail,
        CertOrdering::Undecided => Verdict::Undecided,
    }
}

/// Certifies `a < b`.
pub fn cert_lt(a: &Real, b: &Real, max_prec: u32) -> Verdict {
    match compare_reals(a, b, max_prec) {
        CertOrdering::Less => Verdict::Pass,
        CertOrdering::Greater | CertOrdering::Equal => Verdict::Fail,
        CertOrdering::Undecided => Verdict::Undecided,
    }
}

/// Upper rational bound of a real, from its enclosure at `prec`.
pub fn upper_rat(r: &Real, prec: u32) -> Option<Rat> {
    if let Some(x) = r.exact() {
        return Some(x.clone());
    }
    r.eval(prec).map(|iv| iv.hi.to_rat())
}

pub fn lower_rat(r: &Real, prec: u32) -> Option<Rat> {
    if let Some(x) = r.exact() {
        return Some(x.clone());
    }
    r.eval(prec).map(|iv| iv.lo.to_rat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat::rat;

    #[test]
    fn sqrt2_less_than_three_halves() {
        let a = BallReal::enclose(&Real::sqrt_int(2), 64).unwrap();
        let b = BallReal::enclose(&Real::rat(rat(3, 2)), 64).unwrap();
        assert_eq!(certified_compare(&a, &b, 1 << 10), CertOrdering::Less);
    }

    #[test]
    fn identical_irrational_handles_stay_undecided() {
        let e = Real::int(1).exp();
        let a = BallReal::enclose(&e, 64).unwrap();
        let b = BallReal::enclose(&Real::int(1).exp(), 64).unwrap();
        assert_eq!(certified_compare(&a, &b, 512), CertOrdering::Undecided);
    }

    #[test]
    fn two_to_gamma_exceeds_three() {
        // 2^gamma = 3.0695...
        let g = Real::int(2).pow(&Real::gamma());
        let a = BallReal::enclose(&g, 64).unwrap();
        let b = BallReal::enclose(&Real::int(3), 64).unwrap();
        assert_eq!(certified_compare(&a, &b, 1 << 10), CertOrdering::Greater);
        let iv = g.eval(128).unwrap();
        assert!((iv.mid().to_f64() - 2f64.powf(1.618_033_988_749_895)).abs() < 1e-14);
    }

    #[test]
    fn refinement_never_widens() {
        let r = Real::sqrt_int(3).add(&Real::int(7).ln());
        let b = BallReal::enclose(&r, 64).unwrap();
        let c = b.refine(256);
        assert!(c.rad() <= b.rad());
        assert!(b.interval().contains(&c.mid().clone()));
    }

    #[test]
    fn exact_detection() {
        assert_eq!(Real::sqrt_int(25).exact(), Some(&rat(5, 1)));
        assert!(Real::sqrt_int(2).exact().is_none());
        let q = Real::rat(rat(1, 2)).sqrt();
        assert!(q.exact().is_none());
        assert_eq!(
            compare_reals(&Real::rat(rat(1, 2)), &Real::rat(rat(2, 4)), 64),
            CertOrdering::Equal
        );
    }

    #[test]
    fn ball_json_round_trip() {
        let b = BallReal::enclose(&Real::sqrt_int(2), 80).unwrap();
        let j = b.to_json();
        assert_eq!(j.to_interval().unwrap(), b.interval());
    }
}

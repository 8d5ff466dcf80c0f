//! Named inequality checks with their instantiated sides.

use serde::{Deserialize, Serialize};

use crate::exact::dyadic::Dyadic;
use crate::exact::real::{compare_with_prec, CertOrdering, Real, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    /// Decimal approximations of both sides, for humans only.
    pub lhs: String,
    pub rhs: String,
    pub verdict: Verdict,
    /// Working precision that decided the comparison (0 for exact).
    pub prec: u32,
}

impl Check {
    pub fn exact(id: impl Into<String>, ok: bool, lhs: String, rhs: String) -> Check {
        Check { id: id.into(), lhs, rhs, verdict: Verdict::from_bool(ok), prec: 0 }
    }
}

/// `d` as `m.mmmmmme±k` without overflowing `f64`.
pub fn sci_dyadic(d: &Dyadic) -> String {
    if d.is_zero() {
        return "0".into();
    }
    let top = d.msb();
    let shifted = d.mul_pow2(-top); // in [1, 2)
    let m = shifted.to_f64().abs();
    let l10 = m.log10() + top as f64 * std::f64::consts::LOG10_2;
    let e = l10.floor();
    let mant = 10f64.powf(l10 - e);
    let sign = if d.is_negative() { "-" } else { "" };
    format!("{sign}{mant:.6}e{}", e as i64)
}

pub fn sci(r: &Real) -> String {
    match r.eval(64) {
        Some(iv) => sci_dyadic(&iv.mid()),
        None => "?".into(),
    }
}

pub fn check_le(id: impl Into<String>, a: &Real, b: &Real, max_prec: u32) -> Check {
    let (o, p) = compare_with_prec(a, b, max_prec);
    let verdict = match o {
        CertOrdering::Less | CertOrdering::Equal => Verdict::Pass,
        CertOrdering::Greater => Verdict::Fail,
        CertOrdering::Undecided => Verdict::Undecided,
    };
    Check { id: id.into(), lhs: sci(a), rhs: sci(b), verdict, prec: p }
}

pub fn check_lt(id: impl Into<String>, a: &Real, b: &Real, max_prec: u32) -> Check {
    let (o, p) = compare_with_prec(a, b, max_prec);
    let verdict = match o {
        CertOrdering::Less => Verdict::Pass,
        CertOrdering::Greater | CertOrdering::Equal => Verdict::Fail,
        CertOrdering::Undecided => Verdict::Undecided,
    };
    Check { id: id.into(), lhs: sci(a), rhs: sci(b), verdict, prec: p }
}

pub fn check_ge(id: impl Into<String>, a: &Real, b: &Real, max_prec: u32) -> Check {
    let mut c = check_le(id, b, a, max_prec);
    std::mem::swap(&mut c.lhs, &mut c.rhs);
    c
}

/// Worst verdict of a list (Pass when empty).
pub fn overall(checks: &[Check]) -> Verdict {
    checks.iter().fold(Verdict::Pass, |v, c| v.and(c.verdict))
}

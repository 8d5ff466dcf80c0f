//! Continued fractions of a quadratic irrational in (0, 1/2).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::rat::{int_vec, rat_str, Rat};
use crate::exact::real::{compare_reals, CertOrdering, Real};

/// Brute-force cap for per-denominator checks in [`certify_bad_approx`].
pub const BRUTE_Q_CAP: u64 = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AlphaChoice {
    /// sqrt(2) - 1
    #[default]
    #[serde(rename = "sqrt2-1")]
    Sqrt2Minus1,
    /// (3 - sqrt(5)) / 2
    #[serde(rename = "golden")]
    Golden,
}

impl FromStr for AlphaChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sqrt2-1" => Ok(AlphaChoice::Sqrt2Minus1),
            "golden" => Ok(AlphaChoice::Golden),
            _ => Err(format!("unknown alpha {s:?} (expected sqrt2-1 or golden)")),
        }
    }
}

impl fmt::Display for AlphaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphaChoice::Sqrt2Minus1 => "sqrt2-1",
            AlphaChoice::Golden => "golden",
        })
    }
}

/// `(a + b sqrt d) / c` with `c > 0` and `d` squarefree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadIrr {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

/// Sign of `x + y sqrt d` for integers, `d` a positive non-square.
pub fn sign_qd(x: &BigInt, y: &BigInt, d: &BigInt) -> Ordering {
    let sx = x.sign();
    let sy = y.sign();
    use num_bigint::Sign::*;
    match (sx, sy) {
        (NoSign, NoSign) => Ordering::Equal,
        (Plus, Plus) | (Plus, NoSign) | (NoSign, Plus) => Ordering::Greater,
        (Minus, Minus) | (Minus, NoSign) | (NoSign, Minus) => Ordering::Less,
        (Plus, Minus) => (x * x).cmp(&(y * y * d)),
        (Minus, Plus) => (y * y * d).cmp(&(x * x)),
    }
}

impl QuadIrr {
    pub fn from_choice(c: AlphaChoice) -> Self {
        let i = |n: i64| BigInt::from(n);
        match c {
            AlphaChoice::Sqrt2Minus1 => QuadIrr { a: i(-1), b: i(1), c: i(1), d: i(2) },
            AlphaChoice::Golden => QuadIrr { a: i(3), b: i(-1), c: i(2), d: i(5) },
        }
    }

    pub fn real(&self) -> Real {
        Real::int(self.a.clone())
            .add(&Real::int(self.b.clone()).mul(&Real::sqrt_int(self.d.clone())))
            .div(&Real::int(self.c.clone()))
    }

    /// Sign of `q alpha - p`.
    pub fn sign_lin(&self, q: &BigInt, p: &BigInt) -> Ordering {
        sign_qd(&(q * &self.a - p * &self.c), &(q * &self.b), &self.d)
    }

    /// `floor(q alpha)`, exactly.
    pub fn floor_mul(&self, q: &BigInt) -> BigInt {
        let a = q * &self.a;
        let b = q * &self.b;
        let s = (&b * &b * &self.d).sqrt();
        // b sqrt d is irrational unless b = 0.
        let fl = if b.is_zero() {
            BigInt::zero()
        } else if b.is_positive() {
            s
        } else {
            -s - 1
        };
        (a + fl).div_floor(&self.c)
    }

    /// Nearest integer to `q alpha` (never a tie, alpha irrational).
    pub fn nearest_mul(&self, q: &BigInt) -> BigInt {
        let f = self.floor_mul(q);
        // q alpha - f > 1/2  <=>  2 q alpha - (2f + 1) > 0
        let two_q = q * 2;
        if self.sign_lin(&two_q, &(&f * 2 + 1)) == Ordering::Greater {
            f + 1
        } else {
            f
        }
    }

    /// `|q alpha - p| * k >= l` for integers, decided exactly.
    pub fn abs_lin_ge(&self, q: &BigInt, p: &BigInt, k: &BigInt, l: &BigInt) -> bool {
        // |X + Y sqrt d| * k >= l * c
        let x = (q * &self.a - p * &self.c) * k;
        let y = q * &self.b * k;
        let lc = l * &self.c;
        let (x, y) = if sign_qd(&x, &y, &self.d) == Ordering::Less { (-x, -y) } else { (x, y) };
        sign_qd(&(x - lc), &y, &self.d) != Ordering::Less
    }

    /// Lowest common denominator of the conjugate trace and norm.
    pub fn norm_denominator(&self) -> BigInt {
        let tr = Rat::new(&self.a * 2, self.c.clone());
        let nm = Rat::new(&self.a * &self.a - &self.b * &self.b * &self.d, &self.c * &self.c);
        tr.denom().lcm(nm.denom())
    }

    fn check_range(&self) -> bool {
        // 0 < alpha < 1/2
        self.sign_lin(&BigInt::one(), &BigInt::zero()) == Ordering::Greater
            && self.sign_lin(&BigInt::from(2), &BigInt::one()) == Ordering::Less
    }

    /// Partial quotients `[0; a1, a2, ...]`, `count` of them after the 0.
    pub fn partial_quotients(&self, count: usize) -> Vec<BigInt> {
        // x = (A + B sqrt d) / C
        let (mut a, mut b, mut c) = (self.a.clone(), self.b.clone(), self.c.clone());
        let mut out = Vec::with_capacity(count);
        for _ in 0..=count {
            let x = QuadIrr { a: a.clone(), b: b.clone(), c: c.clone(), d: self.d.clone() };
            let k = x.floor_mul(&BigInt::one());
            out.push(k.clone());
            // 1 / (x - k) = C (A' - B sqrt d) / (A'^2 - B^2 d)
            let ap = &a - &k * &c;
            let den = &ap * &ap - &b * &b * &self.d;
            let (mut na, mut nb, mut nc) = (&c * &ap, -(&c * &b), den);
            if nc.is_negative() {
                na = -na;
                nb = -nb;
                nc = -nc;
            }
            let g = na.gcd(&nb).gcd(&nc);
            a = na / &g;
            b = nb / &g;
            c = nc / &g;
        }
        out.remove(0);
        out
    }
}

/// Convergents `p_n / q_n`, `n = 1..`, with `p_1 = 0`, `q_1 = 1`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConvergentTable {
    pub alpha: AlphaChoice,
    #[serde(with = "rat_str")]
    pub c1: Rat,
    #[serde(with = "int_vec")]
    pub p: Vec<BigInt>,
    #[serde(with = "int_vec")]
    pub q: Vec<BigInt>,
}

impl ConvergentTable {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn p_n(&self, n: usize) -> &BigInt {
        &self.p[n - 1]
    }

    pub fn q_n(&self, n: usize) -> &BigInt {
        &self.q[n - 1]
    }

    pub fn quad(&self) -> QuadIrr {
        QuadIrr::from_choice(self.alpha)
    }
}

/// First `n_terms` convergents, with cf1-cf4 verified exactly.
pub fn convergents(alpha: AlphaChoice, c1: &Rat, n_terms: usize) -> Result<ConvergentTable> {
    if n_terms < 2 {
        return Err(Error::Input("need at least two convergents".into()));
    }
    let quad = QuadIrr::from_choice(alpha);
    if !quad.check_range() {
        return Err(Error::Input("alpha must lie in (0, 1/2)".into()));
    }
    // One extra quotient so cf3/cf4 can be checked at the last index.
    let pq = quad.partial_quotients(n_terms);
    let (mut p, mut q) = (vec![BigInt::zero(), BigInt::one()], vec![BigInt::one(), pq[0].clone()]);
    for k in 1..n_terms {
        let pn = &pq[k] * &p[k] + &p[k - 1];
        let qn = &pq[k] * &q[k] + &q[k - 1];
        p.push(pn);
        q.push(qn);
    }
    let table = ConvergentTable { alpha, c1: c1.clone(), p, q };
    verify_table(&table)?;
    let mut t = table;
    t.p.truncate(n_terms);
    t.q.truncate(n_terms);
    Ok(t)
}

/// Extends the table until its last denominator exceeds `bound`.
pub fn convergents_exceeding(alpha: AlphaChoice, c1: &Rat, bound: &BigInt) -> Result<ConvergentTable> {
    let mut n = 64usize;
    loop {
        let t = convergents(alpha, c1, n)?;
        if t.q.last().unwrap() > bound {
            return Ok(t);
        }
        n *= 2;
    }
}

/// Checks cf1-cf4 on all adjacent pairs present in the table.
pub fn verify_table(t: &ConvergentTable) -> Result<()> {
    let quad = t.quad();
    let fail = |what: &str, n: usize| Err(Error::CertFailed { clause: what.into(), step: n });
    if !t.p[0].is_zero() || !t.q[0].is_one() {
        return fail("cf1 start", 1);
    }
    let (c1n, c1d) = (t.c1.numer().clone(), t.c1.denom().clone());
    for n in 1..=t.len() {
        let (pn, qn) = (t.p_n(n), t.q_n(n));
        if pn.is_negative() || pn > qn {
            return fail("cf1", n);
        }
        if !pn.gcd(qn).is_one() {
            return fail("gcd", n);
        }
        if n == t.len() {
            break;
        }
        let (pm, qm) = (t.p_n(n + 1), t.q_n(n + 1));
        let sign = if n % 2 == 1 { 1 } else { -1 };
        if qn * pm - pn * qm != BigInt::from(sign) {
            return fail("cf2", n);
        }
        // |q_n alpha - p_n| q_{n+1} < 1
        if quad.abs_lin_ge(qn, pn, qm, &BigInt::one()) {
            return fail("cf3", n);
        }
        if !(qn < qm && qm * &c1d <= qn * &c1n) {
            return fail("cf4", n);
        }
    }
    Ok(())
}

/// Outcome of the bad-approximability certification.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BadApproxCert {
    /// Every `q` in `1..=brute_q` checked individually.
    pub brute_q: u64,
    /// Convergent denominators beyond `brute_q` also checked.
    pub convergents_checked: usize,
    /// Enclosure of the smallest observed `q |q alpha - p|`.
    #[serde(with = "rat_str")]
    pub min_lo: Rat,
    #[serde(with = "rat_str")]
    pub min_hi: Rat,
    pub min_at_q: u64,
    /// `C1 >= D (1/2 + |alpha - alpha'|)` holds, which covers every `q`.
    pub algebraic_bound: bool,
    /// Every `q <= requested` is covered by one of the two arguments.
    pub covers_requested: bool,
}

/// `q |q alpha - p|` as `(x + y sqrt d)/c`, nonnegative.
fn scaled_err(quad: &QuadIrr, q: &BigInt, p: &BigInt) -> (BigInt, BigInt) {
    let x = q * (q * &quad.a - p * &quad.c);
    let y = q * q * &quad.b;
    if sign_qd(&x, &y, &quad.d) == Ordering::Less {
        (-x, -y)
    } else {
        (x, y)
    }
}

/// Verifies `|q alpha - p| >= 1/(C1 q)` for all `q <= q_max` (nearest `p`;
/// other `p` are at distance at least 1/2).
pub fn certify_bad_approx(table: &ConvergentTable, q_max: &BigInt) -> Result<BadApproxCert> {
    let quad = table.quad();
    let (cn, cd) = (table.c1.numer().clone(), table.c1.denom().clone());
    let brute = q_max.to_u64().unwrap_or(u64::MAX).min(BRUTE_Q_CAP);
    let check = |q: &BigInt| -> bool {
        let p = quad.nearest_mul(q);
        // |q alpha - p| * C1 q >= 1
        quad.abs_lin_ge(q, &p, &(&cn * q), &cd)
    };
    let bad = (1..=brute).into_par_iter().find_first(|&q| !check(&BigInt::from(q)));
    if let Some(q) = bad {
        return Err(Error::CertFailed { clause: format!("bad approximation at q = {q}"), step: 0 });
    }
    let mut conv = 0;
    for qn in table.q.iter().filter(|q| q.to_u64().is_none_or(|v| v > brute) && *q <= q_max) {
        if !check(qn) {
            return Err(Error::CertFailed { clause: format!("bad approximation at q = {qn}"), step: 0 });
        }
        conv += 1;
    }
    // Minimum over the brute range, compared exactly in Q(sqrt d).
    let mut best: (BigInt, BigInt, u64) = {
        let q1 = BigInt::one();
        let (x, y) = scaled_err(&quad, &q1, &quad.nearest_mul(&q1));
        (x, y, 1)
    };
    for q in 2..=brute {
        let qb = BigInt::from(q);
        let (x, y) = scaled_err(&quad, &qb, &quad.nearest_mul(&qb));
        if sign_qd(&(&x - &best.0), &(&y - &best.1), &quad.d) == Ordering::Less {
            best = (x, y, q);
        }
    }
    let (lo, hi) = quad_bounds(&best.0, &best.1, &quad.d, &quad.c, 64);
    let algebraic = algebraic_bound_holds(&quad, &table.c1);
    let covers = algebraic || q_max.to_u64().is_some_and(|v| v <= brute);
    Ok(BadApproxCert {
        brute_q: brute,
        convergents_checked: conv,
        min_lo: lo,
        min_hi: hi,
        min_at_q: best.2,
        algebraic_bound: algebraic,
        covers_requested: covers,
    })
}

/// Rational bounds on `(x + y sqrt d)/c` to `bits` fractional bits.
fn quad_bounds(x: &BigInt, y: &BigInt, d: &BigInt, c: &BigInt, bits: u32) -> (Rat, Rat) {
    let scale = BigInt::one() << bits;
    let s: BigInt = (y * y * d * &scale * &scale).sqrt();
    let one = BigInt::one();
    let (ylo, yhi) = if y.is_negative() { (-(&s + &one), -s) } else { (s.clone(), s + one) };
    let den = c * &scale;
    (
        Rat::new(x * &scale + ylo, den.clone()),
        Rat::new(x * &scale + yhi, den),
    )
}

/// For nearest `p`, `|N(q alpha - p)| >= 1/D` and `|q alpha' - p| <=
/// 1/2 + q |alpha - alpha'|` give `q |q alpha - p| >= 1/(D (1/2 + |alpha - alpha'|))`.
pub fn algebraic_bound_holds(quad: &QuadIrr, c1: &Rat) -> bool {
    // C1 >= D/2 + D * 2|b| sqrt(d) / c
    let dd = Rat::from_integer(quad.norm_denominator());
    let lhs = c1 - &dd / Rat::from_integer(2.into());
    if lhs.is_negative() {
        return false;
    }
    let k = &dd * Rat::new(quad.b.abs() * 2, quad.c.clone());
    // lhs^2 >= k^2 d
    &lhs * &lhs >= &k * &k * Rat::from_integer(quad.d.clone())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GapReport {
    pub n: usize,
    pub pairs: u64,
    /// Smallest `|q p_n - p q_n| |q| / q_n` seen.
    #[serde(with = "rat_str")]
    pub min_ratio: Rat,
    pub violations: u64,
}

/// Brute-force check of `|q p_n - p q_n| >= q_n / (2 C1 |q|)` over
/// `1 <= |q| < q_n`, `|p| <= q_n`. Negative `q` mirror positive ones under
/// `p -> -p`, so only `q > 0` is enumerated.
pub fn check_gap_lemma(table: &ConvergentTable, n: usize) -> Result<GapReport> {
    if n < 2 || n > table.len() {
        return Err(Error::Input(format!("gap lemma index {n} out of range")));
    }
    let to_i = |b: &BigInt| b.to_i128().ok_or_else(|| Error::Input("convergent too large for brute force".into()));
    let (pn, qn) = (to_i(table.p_n(n))?, to_i(table.q_n(n))?);
    let (cn, cd) = (to_i(table.c1.numer())?, to_i(table.c1.denom())?);
    let rows: Vec<(i128, i128, u64, u64)> = (1..qn)
        .into_par_iter()
        .map(|q| {
            let mut best = (qn * qn, 1i128);
            let mut viol = 0u64;
            let mut cnt = 0u64;
            for p in -qn..=qn {
                let lhs = (q * pn - p * qn).abs();
                cnt += 1;
                // lhs * 2 C1 q >= q_n
                if lhs * 2 * cn * q < qn * cd {
                    viol += 1;
                }
                if lhs * q * best.1 < best.0 * qn {
                    best = (lhs * q, qn);
                }
            }
            (best.0, best.1, viol, cnt)
        })
        .collect();
    let mut min = Rat::from_integer(BigInt::from(i64::MAX));
    let (mut viol, mut pairs) = (0, 0);
    for (num, den, v, c) in rows {
        let r = Rat::new(num.into(), den.into());
        if r < min {
            min = r;
        }
        viol += v;
        pairs += 2 * c;
    }
    Ok(GapReport { n, pairs, min_ratio: min, violations: viol })
}

/// The `n >= 2` with `q_{n-1} <= T < q_n`.
pub fn locate_n(t: &Real, table: &ConvergentTable, max_prec: u32) -> Result<usize> {
    let one = Real::int(1);
    match compare_reals(t, &one, max_prec) {
        CertOrdering::Less => return Err(Error::Input("locate_n needs T >= 1".into())),
        CertOrdering::Undecided => return Err(Error::Undecided("T >= q_1".into())),
        _ => {}
    }
    for n in 2..=table.len() {
        match compare_reals(t, &Real::int(table.q_n(n).clone()), max_prec) {
            CertOrdering::Less => return Ok(n),
            CertOrdering::Greater | CertOrdering::Equal => {}
            CertOrdering::Undecided => return Err(Error::Undecided(format!("T against q_{n}"))),
        }
    }
    Err(Error::TableExhausted(format!("{:?}", t.eval(64).map(|i| i.mid().to_f64()))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat::{rat, rat_int};

    fn table(n: usize) -> ConvergentTable {
        convergents(AlphaChoice::Sqrt2Minus1, &rat_int(4), n).unwrap()
    }

    #[test]
    fn first_convergents() {
        let t = table(5);
        let got: Vec<(i64, i64)> = (1..=5)
            .map(|n| (t.p_n(n).to_i64().unwrap(), t.q_n(n).to_i64().unwrap()))
            .collect();
        assert_eq!(got, vec![(0, 1), (1, 2), (2, 5), (5, 12), (12, 29)]);
    }

    #[test]
    fn recurrence_oracle() {
        // Independent: p_{n+1} = 2 p_n + p_{n-1}, q likewise.
        let t = table(60);
        let (mut p, mut q) = ((0i128, 1i128), (1i128, 2i128));
        for n in 1..=59 {
            assert_eq!(t.p_n(n).to_i128().unwrap(), p.0);
            assert_eq!(t.q_n(n).to_i128().unwrap(), q.0);
            p = (p.1, 2 * p.1 + p.0);
            q = (q.1, 2 * q.1 + q.0);
        }
    }

    #[test]
    fn golden_table() {
        let t = convergents(AlphaChoice::Golden, &rat_int(4), 30).unwrap();
        // (3 - sqrt 5)/2 = [0; 2, 1, 1, 1, ...]
        assert_eq!(t.q_n(2), &BigInt::from(2));
        assert_eq!(t.q_n(3), &BigInt::from(3));
        assert_eq!(t.q_n(4), &BigInt::from(5));
    }

    #[test]
    fn cf4_rejects_small_c1() {
        assert!(convergents(AlphaChoice::Sqrt2Minus1, &rat(2, 1), 10).is_err());
    }

    #[test]
    fn bad_approx_examples() {
        let q = QuadIrr::from_choice(AlphaChoice::Sqrt2Minus1);
        let b = |n: i64| BigInt::from(n);
        // |5 alpha - 2| * 20 >= 1
        assert_eq!(q.nearest_mul(&b(5)), b(2));
        assert!(q.abs_lin_ge(&b(5), &b(2), &b(20), &b(1)));
        assert_eq!(q.nearest_mul(&b(1)), b(0));
        assert!(q.abs_lin_ge(&b(1), &b(0), &b(4), &b(1)));
        assert_eq!(q.nearest_mul(&b(12)), b(5));
        assert!(q.abs_lin_ge(&b(12), &b(5), &b(48), &b(1)));
        // Oracle in f64: 5 sqrt 2 - 7 = 0.0710...
        assert!(((5.0 * 2f64.sqrt() - 7.0) - 0.0711).abs() < 1e-3);
    }

    #[test]
    fn bad_approx_certificate() {
        let t = table(60);
        let c = certify_bad_approx(&t, t.q_n(60)).unwrap();
        assert!(c.algebraic_bound && c.covers_requested);
        // Smallest at q = 2: 2(3 - 2 sqrt 2) = 0.343...
        assert!(c.min_lo >= rat(34, 100) && c.min_hi <= rat(35, 100));
        assert_eq!(c.min_at_q, 2);
    }

    #[test]
    fn floor_matches_f64() {
        let q = QuadIrr::from_choice(AlphaChoice::Golden);
        let a = (3.0 - 5f64.sqrt()) / 2.0;
        for k in [-7i64, -1, 0, 1, 2, 13, 1000] {
            assert_eq!(q.floor_mul(&BigInt::from(k)), BigInt::from((k as f64 * a).floor() as i64));
        }
    }

    #[test]
    fn gap_lemma_small() {
        let t = table(12);
        let r = check_gap_lemma(&t, 3).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.min_ratio >= rat(1, 8));
        for n in 2..=8 {
            assert_eq!(check_gap_lemma(&t, n).unwrap().violations, 0);
        }
    }

    #[test]
    fn locate_examples() {
        let t = table(10);
        let mp = 1 << 12;
        assert_eq!(locate_n(&Real::int(5), &t, mp).unwrap(), 4);
        assert_eq!(locate_n(&Real::rat(rat(3, 2)), &t, mp).unwrap(), 2);
        assert_eq!(locate_n(&Real::rat(rat(27, 10)), &t, mp).unwrap(), 3);
        assert_eq!(locate_n(&Real::sqrt_int(30), &t, mp).unwrap(), 4);
        assert!(locate_n(&Real::rat(rat(1, 2)), &t, mp).is_err());
    }

    #[test]
    fn table_round_trips_through_json() {
        let t = table(8);
        let s = serde_json::to_string(&t).unwrap();
        let u: ConvergentTable = serde_json::from_str(&s).unwrap();
        assert_eq!(t, u);
    }
}

//! One recursive step: from a primitive pair `(x*, x)` and scales `(Y, X')`
//! produce `(y, x')` with `det(x*, x, y) = 1` and `x'` near the plane.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cf::{locate_n, ConvergentTable};
use crate::check::{check_le, overall, sci, Check};
use crate::error::{Error, Result};
use crate::exact::dist::{norm, proj_dist};
use crate::exact::ivec::{complete_to_basis, det3, is_primitive_pair, IVec3};
use crate::exact::rat::{int_str, rat_str, Rat};
use crate::exact::real::{Real, Verdict};
use crate::xval::XVal;

#[derive(Clone, Debug)]
pub struct StepInput<'a> {
    pub x_star: IVec3,
    pub x: IVec3,
    /// `Y`, either exact or `X_i^gamma`.
    pub y_scale: Real,
    pub x_prime: XVal,
    pub table: &'a ConvergentTable,
    pub max_prec: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutput {
    pub y: IVec3,
    pub x_prime: IVec3,
    pub conv_index: usize,
    #[serde(with = "int_str")]
    pub a: BigInt,
    #[serde(with = "int_str")]
    pub m: BigInt,
    #[serde(with = "int_str")]
    pub ell: BigInt,
    /// Coordinates of `y0 + ell x` along `x*` and `x`.
    #[serde(with = "rat_str")]
    pub r: Rat,
    #[serde(with = "rat_str")]
    pub s: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCertificate {
    #[serde(with = "int_str")]
    pub det_xs_x_y: BigInt,
    #[serde(with = "int_str")]
    pub det_xs_x_xp: BigInt,
    #[serde(with = "int_str")]
    pub det_y_x_xp: BigInt,
    #[serde(with = "int_str")]
    pub h_sq: BigInt,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl StepCertificate {
    pub fn verdict(&self) -> Verdict {
        overall(&self.checks)
    }

    pub fn failing(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.verdict.is_pass()).collect()
    }
}

/// Solves `y0 = r x* + s x + t (x* ^ x)` for `r, s` and the sign of `t`.
pub fn decompose_in_basis(y0: &IVec3, x_star: &IVec3, x: &IVec3) -> Result<(Rat, Rat, i8)> {
    let g11 = x_star.norm_sq();
    let g12 = x_star.dot(x);
    let g22 = x.norm_sq();
    let det = &g11 * &g22 - &g12 * &g12;
    if det.is_zero() {
        return Err(Error::Internal("singular Gram matrix".into()));
    }
    let b1 = y0.dot(x_star);
    let b2 = y0.dot(x);
    let r = Rat::new(&g22 * &b1 - &g12 * &b2, det.clone());
    let s = Rat::new(&g11 * &b2 - &g12 * &b1, det);
    // Residual must be orthogonal to both (exact check).
    let res_dot = |v: &IVec3| {
        Rat::from_integer(y0.dot(v)) - &r * Rat::from_integer(x_star.dot(v)) - &s * Rat::from_integer(x.dot(v))
    };
    if !res_dot(x_star).is_zero() || !res_dot(x).is_zero() {
        return Err(Error::Internal("decomposition residual not orthogonal".into()));
    }
    let t = det3(x_star, x, y0);
    let sign = if t.is_positive() { 1 } else if t.is_negative() { -1 } else { 0 };
    Ok((r, s, sign))
}

/// `cross(a, b)` and its squared norm.
pub fn unit_normal_sq(a: &IVec3, b: &IVec3) -> Result<(IVec3, BigInt)> {
    let c = a.cross(b);
    if c.is_zero() {
        return Err(Error::Input("parallel vectors have no normal".into()));
    }
    let n = c.norm_sq();
    Ok((c, n))
}

/// Smallest integer `>= t`, decided at increasing precision. The flag is
/// false when precision ran out and the larger candidate was taken.
fn certified_ceil(t: &Real, max_prec: u32) -> Result<(BigInt, bool)> {
    if let Some(r) = t.exact() {
        return Ok((r.ceil().to_integer(), true));
    }
    let rough = t.eval(64).ok_or_else(|| Error::Undecided("ceil argument".into()))?;
    let mag = rough.lo.abs().max(rough.hi.abs()).msb().max(0) as u32;
    let mut p = (mag + 64).min(max_prec).max(64);
    loop {
        if let Some(iv) = t.eval(p) {
            let (cl, ch) = (iv.lo.ceil(), iv.hi.ceil());
            if cl == ch {
                return Ok((ch, true));
            }
            if p >= max_prec {
                return Ok((ch, false));
            }
        } else if p >= max_prec {
            return Err(Error::Undecided("ceil argument".into()));
        }
        p = (p * 2).min(max_prec);
    }
}

/// Nearest integer, ties towards zero.
fn round_ties_to_zero(v: &Rat) -> BigInt {
    let f = v.floor().to_integer();
    let frac = v - Rat::from_integer(f.clone());
    let half = Rat::new(1.into(), 2.into());
    if frac < half {
        f
    } else if frac > half {
        f + 1
    } else {
        let c: BigInt = &f + 1;
        if f.abs() <= c.abs() { f } else { c }
    }
}

pub fn recursive_step(inp: &StepInput) -> Result<(StepOutput, StepCertificate)> {
    let StepInput { x_star, x, y_scale, x_prime, table, max_prec } = inp;
    let mp = *max_prec;
    if !is_primitive_pair(x_star, x) {
        return Err(Error::NotPrimitive(format!("{x_star}, {x}")));
    }
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let nxs = norm(x_star);
    let nx = norm(x);
    let xp = x_prime.real();
    checks.push(check_le("hyp: 2(|x*|+|x|) <= Y", &nxs.add(&nx).mul(&Real::int(2)), y_scale, mp));
    checks.push(check_le("hyp: Y <= X'", y_scale, &xp, mp));

    // (1) y0 with det(x*, x, y0) = +1.
    let mut y0 = complete_to_basis(x_star, x)?;
    let (r, s, t_sign) = decompose_in_basis(&y0, x_star, x)?;
    if t_sign < 0 {
        y0 = y0.neg();
    }
    let (r, s) = if t_sign < 0 { (-r, -s) } else { (r, s) };
    // (2) s into (-1/2, 1/2].
    let half = Rat::new(1.into(), 2.into());
    let ell = (&half - &s).floor().to_integer();
    let s = &s + Rat::from_integer(ell.clone());
    let y0 = y0.add(&x.scale(&ell));
    // (3) smallest a with (a + r)|x*| >= Y + |x|/2 + 1.
    let target = y_scale
        .add(&nx.div(&Real::int(2)))
        .add(&Real::int(1))
        .div(&nxs)
        .sub(&Real::rat(r.clone()));
    let (a, decided) = certified_ceil(&target, mp)?;
    if !decided {
        notes.push(format!("a undecided at {mp} bits; took the larger candidate {a}"));
    }
    // (4) convergent index and m.
    let t = xp.mul(&Real::int(2)).div(y_scale);
    let n = locate_n(&t, table, mp)?;
    let (pn, qn) = (table.p_n(n).clone(), table.q_n(n).clone());
    let m = round_ties_to_zero(&(-&s * Rat::from_integer(qn.clone())));
    // (5)
    let y = y0.add(&x_star.scale(&a));
    let x_new = y.scale(&qn).add(&x_star.scale(&pn)).add(&x.scale(&m));

    // (6) certificate.
    let d1 = det3(x_star, x, &y);
    let d2 = det3(x_star, x, &x_new);
    let d3 = det3(&y, x, &x_new);
    let ex = |id: &str, got: &BigInt, want: &BigInt| Check::exact(id, got == want, got.to_string(), want.to_string());
    checks.push(ex("det(x*,x,y) = 1", &d1, &BigInt::one()));
    checks.push(ex("det(x*,x,x') = q_n", &d2, &qn));
    checks.push(ex("det(y,x,x') = -p_n", &d3, &-pn.clone()));
    let s_ok = s.abs() <= half && (&s * Rat::from_integer(qn.clone()) + Rat::from_integer(m.clone())).abs() <= half;
    checks.push(Check::exact("|s| <= 1/2 and |s q_n + m| <= 1/2", s_ok, s.to_string(), m.to_string()));

    let ny2 = Real::int(y.norm_sq());
    let ysq = y_scale.square();
    checks.push(check_le("Y^2 <= |y|^2", &ysq, &ny2, mp));
    checks.push(check_le("|y|^2 <= 4Y^2", &ny2, &ysq.mul(&Real::int(4)), mp));
    let nxp2 = Rat::from_integer(x_new.norm_sq());
    let xsq = x_prime.sq();
    let c1 = &table.c1;
    let c1sq25 = c1 * c1 * Rat::from_integer(25.into());
    checks.push(Check::exact("X'^2 <= |x'|^2", xsq <= nxp2, sci(&Real::rat(xsq.clone())), sci(&Real::rat(nxp2.clone()))));
    let hi = &c1sq25 * &xsq;
    checks.push(Check::exact("|x'|^2 <= 25 C1^2 X'^2", nxp2 <= hi, sci(&Real::rat(nxp2.clone())), sci(&Real::rat(hi.clone()))));

    let (u, h_sq) = unit_normal_sq(x_star, x)?;
    let h = Real::sqrt_int(h_sq.clone());
    let c1r = Real::rat(c1.clone());
    let two_c1 = c1r.mul(&Real::int(2));
    // dist(x*, x') <= |x|/(2X') + 2C1/(Y H)
    let rhs3 = nx.div(&xp.mul(&Real::int(2))).add(&two_c1.div(&y_scale.mul(&h)));
    checks.push(check_le("dist(x*,x') bound", &proj_dist(x_star, &x_new)?, &rhs3, mp));
    // dist(u,u') <= 2C1/(Y H dist(x,x'))
    let (u2, _) = unit_normal_sq(x, &x_new)?;
    let duu = proj_dist(&u, &u2)?;
    let rhs4 = two_c1.div(&y_scale.mul(&h).mul(&proj_dist(x, &x_new)?));
    checks.push(check_le("dist(u,u') bound", &duu, &rhs4, mp));
    let w = u.cross(&u2);
    let ident = w == x.scale(&qn) && w.norm_sq() == &qn * &qn * x.norm_sq();
    checks.push(Check::exact("(x*^x)^(x^x') = q_n x", ident, w.to_string(), qn.to_string()));

    let out = StepOutput { y, x_prime: x_new, conv_index: n, a, m, ell, r, s };
    let cert = StepCertificate { det_xs_x_y: d1, det_xs_x_xp: d2, det_y_x_xp: d3, h_sq, checks, notes };
    Ok((out, cert))
}

/// Convenience for tests and fixtures: is `(x, x')` primitive and does
/// `gcd(p_n, q_n) = 1` hold for the index used.
pub fn output_pair_primitive(x: &IVec3, out: &StepOutput, table: &ConvergentTable) -> bool {
    let n = out.conv_index;
    is_primitive_pair(x, &out.x_prime) && table.p_n(n).gcd(table.q_n(n)).is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::{convergents, AlphaChoice};
    use crate::exact::rat::rat_int;

    fn table() -> ConvergentTable {
        convergents(AlphaChoice::Sqrt2Minus1, &rat_int(4), 40).unwrap()
    }

    #[test]
    fn decomposition_examples() {
        let (e1, e2, e3) = (IVec3::e(0), IVec3::e(1), IVec3::e(2));
        let z = Rat::zero();
        assert_eq!(decompose_in_basis(&e3, &e1, &e2).unwrap(), (z.clone(), z.clone(), 1));
        assert_eq!(decompose_in_basis(&e3.add(&e1), &e1, &e2).unwrap(), (rat_int(1), z.clone(), 1));
        assert_eq!(decompose_in_basis(&e3.neg(), &e1, &e2).unwrap(), (z.clone(), z, -1));
    }

    #[test]
    fn normals() {
        let (e1, e2) = (IVec3::e(0), IVec3::e(1));
        assert_eq!(unit_normal_sq(&e1, &e2).unwrap(), (IVec3::e(2), 1.into()));
        assert_eq!(
            unit_normal_sq(&e2, &IVec3::new(77, 0, 12)).unwrap(),
            (IVec3::new(12, 0, -77), 6073.into())
        );
        assert_eq!(
            unit_normal_sq(&IVec3::new(1, 1, 0), &IVec3::new(1, -1, 0)).unwrap(),
            (IVec3::new(0, 0, -2), 4.into())
        );
    }

    #[test]
    fn hand_fixture() {
        let t = table();
        let inp = StepInput {
            x_star: IVec3::e(0),
            x: IVec3::e(1),
            y_scale: Real::int(4),
            x_prime: XVal::sqrt(100),
            table: &t,
            max_prec: 1 << 12,
        };
        let (out, cert) = recursive_step(&inp).unwrap();
        assert_eq!(out.y, IVec3::new(6, 0, 1));
        assert_eq!(out.x_prime, IVec3::new(77, 0, 12));
        assert_eq!(out.conv_index, 4);
        assert_eq!(out.a, 6.into());
        assert_eq!(out.m, 0.into());
        assert_eq!((out.r.clone(), out.s.clone()), (Rat::zero(), Rat::zero()));
        assert_eq!(
            (cert.det_xs_x_y.clone(), cert.det_xs_x_xp.clone(), cert.det_y_x_xp.clone()),
            (1.into(), 12.into(), (-5).into())
        );
        // Oracle: direct determinant and norm recomputation.
        assert_eq!(det3(&IVec3::e(0), &IVec3::e(1), &out.x_prime), 12.into());
        assert_eq!(out.y.norm_sq(), 37.into());
        assert_eq!(out.x_prime.norm_sq(), 6073.into());
        assert!(cert.verdict().is_pass(), "{:?}", cert.failing());
        assert!(output_pair_primitive(&IVec3::e(1), &out, &t));
    }

    #[test]
    fn rounding_ties() {
        assert_eq!(round_ties_to_zero(&Rat::new((-1).into(), 2.into())), 0.into());
        assert_eq!(round_ties_to_zero(&Rat::new(1.into(), 2.into())), 0.into());
        assert_eq!(round_ties_to_zero(&Rat::new((-3).into(), 2.into())), (-1).into());
        assert_eq!(round_ties_to_zero(&Rat::new(7.into(), 5.into())), 1.into());
    }
}

//! Parameter selection: companion vector, multiplier, and the growth
//! schedule `X_0, X_1, ..., X_{N+1}`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cf::AlphaChoice;
use crate::check::{check_le, overall, sci, Check};
use crate::error::{Error, Result};
use crate::exact::dist::proj_dist_sq;
use crate::exact::ivec::{complete_to_basis, is_primitive_pair, unimodular_completion, IVec3};
use crate::exact::rat::{int_str, rat_str, Rat};
use crate::exact::real::{compare_reals, CertOrdering, Real, Verdict};
use crate::xval::XVal;

/// `psi(t) = c t^e`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsiSpec {
    #[serde(with = "rat_str")]
    pub c: Rat,
    #[serde(with = "rat_str")]
    pub e: Rat,
}

impl Default for PsiSpec {
    fn default() -> Self {
        PsiSpec { c: Rat::one(), e: Rat::from_integer(2.into()) }
    }
}

impl PsiSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.c.is_positive() || !self.e.is_positive() {
            return Err(Error::Input("psi needs c > 0 and e > 0".into()));
        }
        Ok(())
    }

    pub fn eval(&self, t: &Real) -> Real {
        Real::rat(self.c.clone()).mul(&t.pow(&Real::rat(self.e.clone())))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanParams {
    pub alpha: AlphaChoice,
    pub c1: Rat,
    pub delta: Rat,
    pub x0: IVec3,
    pub psi: PsiSpec,
    pub n_steps: usize,
    pub theta: Option<Rat>,
    pub toy: bool,
    pub audit_clean: bool,
    pub max_prec: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub alpha: AlphaChoice,
    #[serde(with = "rat_str")]
    pub c1: Rat,
    #[serde(with = "rat_str")]
    pub delta: Rat,
    pub x0: IVec3,
    pub x0_companion: IVec3,
    /// Third basis vector completing `(x0, x0_companion)`.
    pub x0_third: IVec3,
    #[serde(with = "int_str")]
    pub companion_shift: BigInt,
    #[serde(with = "int_str")]
    pub multiplier: BigInt,
    pub x1: IVec3,
    #[serde(with = "rat_str")]
    pub delta0_sq: Rat,
    #[serde(with = "rat_str")]
    pub theta: Rat,
    pub psi: PsiSpec,
    pub n_steps: usize,
    pub toy: bool,
    pub audit_clean: bool,
    pub checks: Vec<Check>,
    /// Clause ids allowed to fail (toy mode only).
    pub waived: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// `X_0 .. X_{N+1}`; the last entry is lookahead for the final step.
    pub xs: Vec<XVal>,
    pub checks: Vec<Check>,
}

impl Schedule {
    pub fn x(&self, i: usize) -> &XVal {
        &self.xs[i]
    }
}

/// Verdict over checks, ignoring waived ids.
pub fn required_verdict(checks: &[Check], waived: &[String]) -> Verdict {
    let kept: Vec<Check> = checks.iter().filter(|c| !waived.contains(&c.id)).cloned().collect();
    overall(&kept)
}

pub fn default_theta(c1: &Rat) -> Rat {
    let e = c1 * Rat::from_integer(8.into());
    Rat::from_integer(2.into()) * &e * &e * &e
}

pub fn gamma_power(c: &Rat) -> Real {
    Real::rat(c.clone()).pow(&Real::gamma())
}

/// `base + m x0` for the smallest `m >= 0` with `dist(x0, .)^2 <= (delta/2)^2`.
pub fn companion_from_base(x0: &IVec3, base: &IVec3, delta: &Rat) -> Result<(IVec3, BigInt)> {
    let cross_sq = Rat::from_integer(x0.cross(base).norm_sq());
    let nx0 = x0.norm_sq();
    let lim = delta * delta / Rat::from_integer(4.into());
    // ok(m): 4 |x0 ^ base|^2 <= delta^2 |x0|^2 |base + m x0|^2, written with lim.
    let ok = |m: &BigInt| {
        let v = base.add(&x0.scale(m));
        cross_sq.clone() <= &lim * Rat::from_integer(&nx0 * v.norm_sq())
    };
    if cross_sq.is_zero() {
        return Err(Error::Input("base parallel to x0".into()));
    }
    let zero = BigInt::zero();
    if ok(&zero) {
        return Ok((base.clone(), zero));
    }
    // Feasible m >= 0 form a ray once m = 0 fails (convex quadratic).
    let mut hi = BigInt::one();
    while !ok(&hi) {
        hi *= 2;
    }
    let mut lo: BigInt = &hi / 2;
    if lo.is_zero() {
        return Ok((base.add(&x0.scale(&hi)), hi));
    }
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) / 2;
        if ok(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((base.add(&x0.scale(&hi)), hi))
}

/// Companion `x0'` (and its shift `m`) from the canonical completion of `x0`.
pub fn choose_companion(x0: &IVec3, delta: &Rat) -> Result<(IVec3, BigInt)> {
    let (base, _) = unimodular_completion(x0)?;
    companion_from_base(x0, &base, delta)
}

/// Smallest power of two `X` with `X >= prev cur^(gamma+2)` and
/// `psi(X / X1) >= X1^3 cur`, both certified.
pub fn next_x(prev: &XVal, cur: &XVal, x1: &XVal, psi: &PsiSpec, max_prec: u32) -> Result<XVal> {
    let g = 1.618_033_988_749_895_f64;
    let need_growth = prev.log2_approx() + (g + 2.0) * cur.log2_approx();
    let c_l2 = psi.c.to_f64().unwrap_or(1.0).log2();
    let e = psi.e.to_f64().unwrap_or(1.0);
    let need_psi = x1.log2_approx() + (3.0 * x1.log2_approx() + cur.log2_approx() - c_l2) / e;
    let mut k = (need_growth.max(need_psi).floor() as i64 - 4).max(0) as u64;
    let rhs1 = prev.real().mul(&cur.pow_gamma_plus(2));
    let rhs2 = x1.real().powi(3).mul(&cur.real());
    for _ in 0..4096 {
        let cand = XVal::pow2(k);
        let c = cand.real();
        let a = compare_reals(&c, &rhs1, max_prec);
        let b = compare_reals(&psi.eval(&c.div(&x1.real())), &rhs2, max_prec);
        let pass = |o: CertOrdering| matches!(o, CertOrdering::Greater | CertOrdering::Equal);
        if pass(a) && pass(b) {
            return Ok(cand);
        }
        k += 1;
    }
    Err(Error::Undecided("schedule search did not terminate".into()))
}

/// `X_0 .. X_{last}` and the schedule invariants, checked for `i = 1..`.
pub fn schedule_x(
    x0: &IVec3,
    x1: &IVec3,
    c1: &Rat,
    psi: &PsiSpec,
    n_steps: usize,
    max_prec: u32,
) -> Result<Schedule> {
    let last = n_steps + 1;
    let mut xs = vec![XVal::sqrt(x0.norm_sq()), XVal::sqrt(x1.norm_sq())];
    for i in 1..last {
        let nx = next_x(&xs[i - 1], &xs[i], &xs[1], psi, max_prec)?;
        xs.push(nx);
    }
    let mp = max_prec;
    let c12 = Real::rat(c1 * Rat::from_integer(12.into()));
    let mut checks = Vec::new();
    for i in 1..last {
        let xi = xs[i].real();
        let xg = xs[i].pow_gamma();
        let nxt = xs[i + 1].real();
        checks.push(check_le(format!("schedule a[{i}]: 12C1 X_i <= X_i^gamma"), &c12.mul(&xi), &xg, mp));
        checks.push(check_le(format!("schedule b[{i}]: X_i^gamma <= X_i+1"), &xg, &nxt, mp));
        checks.push(check_le(
            format!("growth[{i}]: X_i-1 X_i^(gamma+2) <= X_i+1"),
            &xs[i - 1].real().mul(&xs[i].pow_gamma_plus(2)),
            &nxt,
            mp,
        ));
        checks.push(check_le(
            format!("psi[{i}]: X1^3 X_i <= psi(X_i+1 / X1)"),
            &xs[1].real().powi(3).mul(&xi),
            &psi.eval(&nxt.div(&xs[1].real())),
            mp,
        ));
        if i + 2 <= last {
            // Exact on squares: 4 X_{i+1}^4 <= X_i^2 X_{i+2}^2.
            let l = Rat::from_integer(4.into()) * xs[i + 1].sq() * xs[i + 1].sq();
            let r = xs[i].sq() * xs[i + 2].sq();
            checks.push(Check::exact(
                format!("schedule c[{i}]: 2 X_i+1^2 <= X_i X_i+2"),
                l <= r,
                sci(&Real::rat(l.clone())),
                sci(&Real::rat(r.clone())),
            ));
        }
    }
    Ok(Schedule { xs, checks })
}

/// Section-5 conditions on `x1` (and, if known, the scheduled `X_2`).
#[allow(clippy::too_many_arguments)]
pub fn multiplier_checks(
    x0: &IVec3,
    x1: &IVec3,
    delta: &Rat,
    c1: &Rat,
    theta: &Rat,
    x2: Option<&XVal>,
    max_prec: u32,
) -> Result<(Rat, Vec<Check>)> {
    let mp = max_prec;
    let d0sq = proj_dist_sq(x0, x1)? / Rat::from_integer(4.into());
    let d0 = Real::rat(d0sq.clone()).sqrt();
    let (x0s, x1s) = (XVal::sqrt(x0.norm_sq()), XVal::sqrt(x1.norm_sq()));
    let (rx0, rx1) = (x0s.real(), x1s.real());
    let c1r = Real::rat(c1.clone());
    let mut out = Vec::new();
    let l = Rat::from_integer(25.into()) * x0s.sq();
    out.push(Check::exact("X1 >= 5 X0", l <= x1s.sq(), sci(&Real::rat(x1s.sq())), sci(&Real::rat(l))));
    out.push(check_le("X1 >= (12C1)^gamma", &gamma_power(&(c1 * Rat::from_integer(12.into()))), &rx1, mp));
    let l = Rat::from_integer(9.into()) * &d0sq;
    let r = delta * delta;
    out.push(Check::exact("3 delta0 <= delta", l <= r, sci(&Real::rat(l.clone())), sci(&Real::rat(r.clone()))));
    let l = &d0sq * &d0sq * x1s.sq();
    let r = theta * theta;
    out.push(Check::exact("delta0^2 X1 >= theta", l >= r, sci(&Real::rat(l.clone())), sci(&Real::rat(r.clone()))));
    let first_step = |x2r: &Real| {
        let five = c1r.mul(&Real::int(5)).mul(&rx1).div(x2r);
        let four = c1r.mul(&Real::int(4)).div(&d0.mul(&rx0).mul(&x1s.pow_gamma_plus(1)));
        five.add(&four)
    };
    out.push(check_le("first step at X2 = X1^gamma", &first_step(&x1s.pow_gamma()), &d0, mp));
    if let Some(x2) = x2 {
        out.push(check_le("first step at scheduled X2", &first_step(&x2.real()), &d0, mp));
    }
    out.push(check_le("2(X0 + X1) <= X1^gamma", &rx0.add(&rx1).mul(&Real::int(2)), &x1s.pow_gamma(), mp));
    Ok((d0sq, out))
}

/// Clause ids that toy mode tolerates.
pub fn toy_waivers() -> Vec<String> {
    ["X1 >= (12C1)^gamma", "delta0^2 X1 >= theta", "first step at X2 = X1^gamma", "schedule a[1]: 12C1 X_i <= X_i^gamma"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

pub fn validate_params(p: &PlanParams) -> Result<()> {
    if !p.delta.is_positive() {
        return Err(Error::Input("delta must be positive".into()));
    }
    if !p.c1.is_positive() {
        return Err(Error::Input("C1 must be positive".into()));
    }
    if !p.x0.is_primitive_point() {
        return Err(Error::Input(format!("x0 = {} is not primitive", p.x0)));
    }
    if p.n_steps < 3 {
        return Err(Error::Input("need at least 3 steps".into()));
    }
    p.psi.validate()
}

/// Candidate plan for multiplier `n`, with its verdict.
fn try_multiplier(p: &PlanParams, comp: &(IVec3, BigInt), third: &IVec3, n: &BigInt, theta: &Rat) -> Result<(Plan, Schedule, bool)> {
    let x1 = comp.0.scale(n).add(third);
    if !is_primitive_pair(&p.x0, &x1) {
        return Err(Error::Internal("x0, x1 not primitive".into()));
    }
    let sched = schedule_x(&p.x0, &x1, &p.c1, &p.psi, p.n_steps, p.max_prec)?;
    let (d0sq, checks) = multiplier_checks(&p.x0, &x1, &p.delta, &p.c1, theta, Some(&sched.xs[2]), p.max_prec)?;
    let waived = if p.toy { toy_waivers() } else { Vec::new() };
    let plan = Plan {
        alpha: p.alpha,
        c1: p.c1.clone(),
        delta: p.delta.clone(),
        x0: p.x0.clone(),
        x0_companion: comp.0.clone(),
        x0_third: third.clone(),
        companion_shift: comp.1.clone(),
        multiplier: n.clone(),
        x1,
        delta0_sq: d0sq,
        theta: theta.clone(),
        psi: p.psi.clone(),
        n_steps: p.n_steps,
        toy: p.toy,
        audit_clean: p.audit_clean,
        checks,
        waived,
    };
    let mut ok = required_verdict(&plan.checks, &plan.waived).is_pass()
        && required_verdict(&sched.checks, &plan.waived).is_pass();
    if ok && p.audit_clean {
        ok = crate::audit::audit(&plan, &sched).verdict().is_pass();
    }
    Ok((plan, sched, ok))
}

/// Smallest multiplier meeting every required condition: a linear scan up
/// to 1024, then doubling and bisection (the conditions are eventually
/// monotone in `n`).
pub fn make_plan(p: &PlanParams) -> Result<(Plan, Schedule)> {
    validate_params(p)?;
    let theta = p.theta.clone().unwrap_or_else(|| default_theta(&p.c1));
    let comp = choose_companion(&p.x0, &p.delta)?;
    let third = complete_to_basis(&p.x0, &comp.0)?;
    for n in 1..=1024i64 {
        let (plan, sched, ok) = try_multiplier(p, &comp, &third, &BigInt::from(n), &theta)?;
        if ok {
            return Ok((plan, sched));
        }
    }
    let mut lo = BigInt::from(1024);
    let mut hi = BigInt::from(2048);
    loop {
        if try_multiplier(p, &comp, &third, &hi, &theta)?.2 {
            break;
        }
        lo = hi.clone();
        hi *= 2;
        if hi.bits() > 128 {
            return Err(Error::Input("no multiplier satisfies the plan conditions".into()));
        }
    }
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) / 2;
        if try_multiplier(p, &comp, &third, &mid, &theta)?.2 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (plan, sched, ok) = try_multiplier(p, &comp, &third, &hi, &theta)?;
    debug_assert!(ok);
    Ok((plan, sched))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat::{rat, rat_int};

    fn v(a: i64, b: i64, c: i64) -> IVec3 {
        IVec3::new(a, b, c)
    }

    #[test]
    fn companion_examples() {
        let (c, m) = companion_from_base(&v(0, 0, 1), &v(0, 1, 0), &rat(4, 5)).unwrap();
        assert_eq!((c.clone(), m), (v(0, 1, 3), 3.into()));
        assert_eq!(proj_dist_sq(&v(0, 0, 1), &c).unwrap(), rat(1, 10));
        let (_, m) = choose_companion(&IVec3::e(0), &rat_int(2)).unwrap();
        assert_eq!(m, 0.into());
        let (c, _) = choose_companion(&v(3, 5, 7), &rat(1, 10)).unwrap();
        assert!(is_primitive_pair(&v(3, 5, 7), &c));
        assert!(proj_dist_sq(&v(3, 5, 7), &c).unwrap() <= rat(1, 400));
    }

    #[test]
    fn corrected_first_vector() {
        // x1 = n x0' + x0'' stays primitive with x0.
        let x0 = v(0, 0, 1);
        let xc = v(0, 1, 3);
        let third = complete_to_basis(&x0, &xc).unwrap();
        assert_eq!(third, v(-1, 0, 0));
        let x1 = xc.scale(&10.into()).add(&third);
        assert_eq!(x1, v(-1, 10, 30));
        assert!(is_primitive_pair(&x0, &x1));
        assert_eq!(x1.norm_sq(), 1001.into());
        assert_eq!(proj_dist_sq(&x0, &x1).unwrap() / rat_int(4), rat(101, 4004));
        // The unshifted form x1 = n x0' + x0 is not primitive.
        assert!(!is_primitive_pair(&x0, &xc.scale(&10.into()).add(&x0)));
    }

    #[test]
    fn schedule_example() {
        // X0 = 1, X1 = 2^10 with a weak psi: X2 = 2^37.
        let psi = PsiSpec { c: rat_int(1), e: rat_int(2) };
        let x2 = next_x(&XVal::sqrt(1), &XVal::pow2(10), &XVal::pow2(10), &psi, 1 << 12).unwrap();
        assert_eq!(x2, XVal::pow2(37));
        // Oracle: 10 (gamma + 2) = 36.18...
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((10.0 * (g + 2.0) - 36.18).abs() < 0.01);
    }

    #[test]
    fn toy_plan_is_consistent() {
        let p = PlanParams {
            alpha: AlphaChoice::Sqrt2Minus1,
            c1: rat_int(4),
            delta: rat(2, 5),
            x0: v(0, 0, 1),
            psi: PsiSpec::default(),
            n_steps: 4,
            theta: None,
            toy: true,
            audit_clean: false,
            max_prec: 1 << 12,
        };
        let (plan, sched) = make_plan(&p).unwrap();
        assert!(is_primitive_pair(&plan.x0, &plan.x1));
        assert!(Rat::from_integer(9.into()) * &plan.delta0_sq <= &plan.delta * &plan.delta);
        assert_eq!(proj_dist_sq(&plan.x0, &plan.x1).unwrap(), &plan.delta0_sq * rat_int(4));
        assert_eq!(sched.xs.len(), 6);
        assert!(required_verdict(&sched.checks, &plan.waived).is_pass());
    }

    #[test]
    fn rejects_bad_input() {
        let mut p = PlanParams {
            alpha: AlphaChoice::Sqrt2Minus1,
            c1: rat_int(4),
            delta: rat(0, 1),
            x0: v(0, 0, 1),
            psi: PsiSpec::default(),
            n_steps: 4,
            theta: None,
            toy: true,
            audit_clean: false,
            max_prec: 1 << 12,
        };
        assert!(matches!(make_plan(&p), Err(Error::Input(_))));
        p.delta = rat(1, 2);
        p.x0 = v(0, 2, 2);
        assert!(matches!(make_plan(&p), Err(Error::Input(_))));
    }
}

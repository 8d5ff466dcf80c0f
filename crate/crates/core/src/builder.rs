//! The construction driver: iterate the recursive step along the schedule,
//! keep the `delta_i` ledger, and enclose the limit directions.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::cf::{convergents_exceeding, ConvergentTable};
use crate::check::{check_le, check_lt, overall, sci, Check};
use crate::error::{Error, Result};
use crate::exact::dist::{norm, proj_dist, proj_dist_sq};
use crate::exact::ivec::{det3, is_primitive_pair, IVec3};
use crate::exact::rat::{rat_str, Rat};
use crate::exact::real::{upper_rat, Real, Verdict};
use crate::exact::snf::intersection_is_line;
use crate::planner::{required_verdict, Plan, Schedule};
use crate::stepper::{recursive_step, StepCertificate, StepInput};
use crate::xval::XVal;

/// Precision used to round radii up to rationals.
const RADIUS_PREC: u32 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DirKind {
    U,
    V,
    W,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionEnclosure {
    pub kind: DirKind,
    pub anchor_index: usize,
    pub rep: IVec3,
    /// Upper bound on `dist(rep, true direction)^2`.
    #[serde(with = "rat_str")]
    pub radius_sq_ub: Rat,
}

impl DirectionEnclosure {
    pub fn radius(&self) -> Real {
        Real::rat(self.radius_sq_ub.clone()).sqrt()
    }

    /// Upper bound on `dist(x, direction)`.
    pub fn dist_upper(&self, x: &IVec3) -> Result<Real> {
        Ok(proj_dist(x, &self.rep)?.add(&self.radius()))
    }
}

/// Lower bound for `|x . u|` from a U enclosure: `|x . u_i| - 2 |x| r`.
/// Can be negative, in which case it says nothing.
pub fn x_dot_u_lower(x: &IVec3, enc: &DirectionEnclosure) -> Real {
    let num = Real::int(x.dot(&enc.rep).abs());
    let exact = num.div(&norm(&enc.rep));
    exact.sub(&norm(x).mul(&enc.radius()).mul(&Real::int(2)))
}

/// Upper bound for `|x . u|` from a U enclosure.
pub fn x_dot_u_upper(x: &IVec3, enc: &DirectionEnclosure) -> Real {
    let num = Real::int(x.dot(&enc.rep).abs());
    num.div(&norm(&enc.rep)).add(&norm(x).mul(&enc.radius()).mul(&Real::int(2)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Step `i` maps `(x_{i-1}, x_i)` to `(y_i, x_{i+1})`.
    pub index: usize,
    pub conv_index: usize,
    pub cert: StepCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionState {
    /// `x_0 .. x_N`.
    pub xs: Vec<IVec3>,
    /// `y_1 .. y_{N-1}` (index 0 unused and zero).
    pub ys: Vec<IVec3>,
    /// `X_0 .. X_{N+1}`.
    pub scales: Vec<XVal>,
    pub steps: Vec<StepRecord>,
    #[serde(with = "rat_str")]
    pub delta0_sq: Rat,
    /// Rational upper bounds on `delta_0 .. delta_N`.
    #[serde(with = "crate::exact::rat::rat_vec")]
    pub delta_ledger: Vec<Rat>,
    pub checks: Vec<Check>,
    /// U anchors `1..=N`.
    pub u: Vec<DirectionEnclosure>,
    pub v: Vec<DirectionEnclosure>,
    pub w: Vec<DirectionEnclosure>,
}

impl ConstructionState {
    pub fn n(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn verdict(&self) -> Verdict {
        self.steps.iter().fold(overall(&self.checks), |v, s| v.and(s.cert.verdict()))
    }

    pub fn u_at(&self, i: usize) -> &DirectionEnclosure {
        &self.u[i - 1]
    }

    /// Tightest U enclosure.
    pub fn u_best(&self) -> &DirectionEnclosure {
        self.u.last().expect("at least one anchor")
    }

    pub fn v_best(&self) -> &DirectionEnclosure {
        self.v.last().expect("V enclosure")
    }

    pub fn w_best(&self) -> &DirectionEnclosure {
        self.w.last().expect("W enclosure")
    }

    pub fn delta(&self, i: usize) -> &Rat {
        &self.delta_ledger[i]
    }
}

/// `delta_i` as a real, for `1 <= i <= N`.
pub fn delta_real(plan: &Plan, sched: &Schedule, i: usize) -> Real {
    let c1 = Real::rat(plan.c1.clone());
    let d0 = Real::rat(plan.delta0_sq.clone()).sqrt();
    let x = |j: usize| sched.xs[j].real();
    let a = c1.mul(&Real::int(5)).mul(&x(i)).div(&x(i + 1).mul(&Real::int(2)));
    let b = c1.mul(&Real::int(2)).div(&d0.mul(&x(i - 1)).mul(&sched.xs[i].pow_gamma_plus(1)));
    a.add(&b)
}

/// Convergents long enough for every step of the schedule.
pub fn table_for(plan: &Plan, sched: &Schedule) -> Result<ConvergentTable> {
    let top = sched.xs.last().map(|x| x.log2_approx()).unwrap_or(0.0).ceil() as u64 + 8;
    convergents_exceeding(plan.alpha, &plan.c1, &(BigInt::one() << top))
}

fn fail_fast(c: &Check, step: usize) -> Result<()> {
    match c.verdict {
        Verdict::Pass => Ok(()),
        Verdict::Fail => Err(Error::CertFailed { clause: c.id.clone(), step }),
        Verdict::Undecided => Err(Error::Undecided(format!("{} (step {step})", c.id))),
    }
}

fn up(r: &Real) -> Result<Rat> {
    upper_rat(r, RADIUS_PREC).ok_or_else(|| Error::Undecided("radius enclosure".into()))
}

pub fn build(plan: &Plan, sched: &Schedule, max_prec: u32) -> Result<ConstructionState> {
    let n = plan.n_steps;
    if sched.xs.len() != n + 2 {
        return Err(Error::Input(format!("schedule has {} scales, expected {}", sched.xs.len(), n + 2)));
    }
    if !is_primitive_pair(&plan.x0, &plan.x1) {
        return Err(Error::NotPrimitive(format!("{}, {}", plan.x0, plan.x1)));
    }
    if !required_verdict(&plan.checks, &plan.waived).is_pass() || !required_verdict(&sched.checks, &plan.waived).is_pass() {
        return Err(Error::Input("plan or schedule does not certify".into()));
    }
    let table = table_for(plan, sched)?;
    let mut xs = vec![plan.x0.clone(), plan.x1.clone()];
    let mut ys = vec![IVec3::zero()];
    let mut steps = Vec::new();
    for i in 1..n {
        let inp = StepInput {
            x_star: xs[i - 1].clone(),
            x: xs[i].clone(),
            y_scale: sched.xs[i].pow_gamma(),
            x_prime: sched.xs[i + 1].clone(),
            table: &table,
            max_prec,
        };
        let (out, cert) = recursive_step(&inp)?;
        for c in &cert.checks {
            fail_fast(c, i)?;
        }
        log::debug!("step {i}: conv index {}, |x'| ~ 2^{}", out.conv_index, out.x_prime.norm_sq().bits() / 2);
        ys.push(out.y);
        xs.push(out.x_prime);
        steps.push(StepRecord { index: i, conv_index: out.conv_index, cert });
    }

    let mp = max_prec;
    let mut checks = Vec::new();
    let d0sq = plan.delta0_sq.clone();
    let d0 = Real::rat(d0sq.clone()).sqrt();
    let dsq01 = proj_dist_sq(&xs[0], &xs[1])?;
    let want = &d0sq * Rat::from_integer(4.into());
    checks.push(Check::exact("dist(x0,x1)^2 = 4 delta0^2", dsq01 == want, dsq01.to_string(), want.to_string()));

    let deltas: Vec<Real> = std::iter::once(d0.clone()).chain((1..=n).map(|i| delta_real(plan, sched, i))).collect();
    let mut ledger = Vec::with_capacity(n + 1);
    for d in &deltas {
        ledger.push(up(d)?);
    }
    for i in 1..=n {
        let d = proj_dist(&xs[i - 1], &xs[i])?;
        checks.push(check_le(format!("min dist[{i}]: delta0 <= dist(x_i-1,x_i)"), &d0, &d, mp));
        if i == 1 {
            // delta_0 = delta0, so this is the definition of delta0.
            checks.push(Check::exact("separation[1]: delta0 + delta_0 <= dist(x0,x1)", dsq01 == want, dsq01.to_string(), want.to_string()));
        } else {
            checks.push(check_le(
                format!("separation[{i}]: delta0 + delta_i-1 <= dist(x_i-1,x_i)"),
                &d0.add(&deltas[i - 1]),
                &d,
                mp,
            ));
        }
        checks.push(check_le(
            format!("halving[{i}]: delta_i <= delta_i-1 / 2"),
            &deltas[i],
            &deltas[i - 1].div(&Real::int(2)),
            mp,
        ));
        if i < n {
            checks.push(check_le(
                format!("separation[{i}]: dist(x_i-1,x_i+1) <= delta_i"),
                &proj_dist(&xs[i - 1], &xs[i + 1])?,
                &deltas[i],
                mp,
            ));
            let line = intersection_is_line(&xs[i - 1], &xs[i], &xs[i + 1]);
            checks.push(Check::exact(format!("intersection[{i}]: <x_i-1,x_i> meet <x_i,x_i+1> = Z x_i"), line, "".into(), "".into()));
        }
    }
    for (i, s) in steps.iter().enumerate() {
        let i = i + 1;
        let (ua, ub) = (xs[i - 1].cross(&xs[i]), xs[i].cross(&xs[i + 1]));
        let q = det3(&xs[i - 1], &xs[i], &xs[i + 1]);
        let ok = ua.cross(&ub) == xs[i].scale(&q) && q == *table.q_n(s.conv_index);
        checks.push(Check::exact(format!("cross identity[{i}]"), ok, q.to_string(), table.q_n(s.conv_index).to_string()));
    }
    for c in &checks {
        let step = c
            .id
            .split('[')
            .nth(1)
            .and_then(|t| t.split(']').next())
            .and_then(|t| t.parse().ok())
            .unwrap_or(0);
        fail_fast(c, step)?;
    }

    let u = enclose_u_all(plan, sched, &xs)?;
    let (v, w) = enclose_vw_all(&xs, &ledger, n)?;
    let mut state = ConstructionState {
        xs,
        ys,
        scales: sched.xs.clone(),
        steps,
        delta0_sq: d0sq,
        delta_ledger: ledger,
        checks,
        u,
        v,
        w,
    };
    let extra = enclosure_checks(&state, mp)?;
    for c in &extra {
        fail_fast(c, 0)?;
    }
    state.checks.extend(extra);
    Ok(state)
}

/// U anchors `1..=N`; the sign of each representative is aligned with the
/// previous one.
pub fn enclose_u_all(plan: &Plan, sched: &Schedule, xs: &[IVec3]) -> Result<Vec<DirectionEnclosure>> {
    let c1 = Real::rat(plan.c1.clone());
    let d0sq = Real::rat(plan.delta0_sq.clone());
    let mut out: Vec<DirectionEnclosure> = Vec::new();
    for i in 1..xs.len() {
        let mut rep = xs[i - 1].cross(&xs[i]);
        if let Some(prev) = out.last() {
            if rep.dot(&prev.rep).is_negative() {
                rep = rep.neg();
            }
        }
        let r = c1
            .mul(&Real::int(4))
            .div(&d0sq.mul(&sched.xs[i - 1].real()).mul(&sched.xs[i].pow_gamma_plus(1)));
        out.push(DirectionEnclosure { kind: DirKind::U, anchor_index: i, rep, radius_sq_ub: up(&r.square())? });
    }
    Ok(out)
}

/// V collects odd-index points, W even-index ones; `x_j` is within
/// `2 delta_{j+1}` of its limit.
pub fn enclose_vw_all(xs: &[IVec3], ledger: &[Rat], n: usize) -> Result<(Vec<DirectionEnclosure>, Vec<DirectionEnclosure>)> {
    if n < 3 {
        return Err(Error::Input("need at least 3 steps for V and W".into()));
    }
    let (mut v, mut w) = (Vec::new(), Vec::new());
    for j in 0..n {
        let r = &ledger[j + 1] * Rat::from_integer(2.into());
        let kind = if j % 2 == 1 { DirKind::V } else { DirKind::W };
        let e = DirectionEnclosure { kind, anchor_index: j, rep: xs[j].clone(), radius_sq_ub: &r * &r };
        if kind == DirKind::V { v.push(e) } else { w.push(e) }
    }
    Ok((v, w))
}

fn enclosure_checks(s: &ConstructionState, mp: u32) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for pair in s.u.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        out.push(check_le(
            format!("U overlap[{}]", a.anchor_index),
            &proj_dist(&a.rep, &b.rep)?,
            &a.radius().add(&b.radius()),
            mp,
        ));
        out.push(Check::exact(
            format!("U radius decreasing[{}]", a.anchor_index),
            b.radius_sq_ub < a.radius_sq_ub,
            sci(&Real::rat(a.radius_sq_ub.clone())),
            sci(&Real::rat(b.radius_sq_ub.clone())),
        ));
    }
    let d0 = Real::rat(s.delta0_sq.clone()).sqrt();
    let (v, w) = (s.v_best(), s.w_best());
    out.push(check_le("dist(x0, w) <= delta0", &proj_dist(&s.xs[0], &w.rep)?, &d0.add(&w.radius()), mp));
    out.push(check_le(
        "dist(x0, v) <= 3 delta0",
        &proj_dist(&s.xs[0], &v.rep)?,
        &d0.mul(&Real::int(3)).add(&v.radius()),
        mp,
    ));
    out.push(check_lt("V and W separated", &v.radius().add(&w.radius()), &proj_dist(&v.rep, &w.rep)?, mp));
    Ok(out)
}

/// Sign-free sanity: a point on the anchor plane has a vacuous bound.
pub fn is_vacuous(x: &IVec3, enc: &DirectionEnclosure) -> bool {
    x.dot(&enc.rep).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat::rat;
    use crate::exact::real::{compare_reals, CertOrdering};

    fn enc(rep: IVec3, r2: Rat) -> DirectionEnclosure {
        DirectionEnclosure { kind: DirKind::U, anchor_index: 1, rep, radius_sq_ub: r2 }
    }

    #[test]
    fn x_dot_u_examples() {
        let e = enc(IVec3::e(0).cross(&IVec3::e(1)), Rat::zero());
        let lo = x_dot_u_lower(&IVec3::new(1, 2, 3), &e);
        assert_eq!(compare_reals(&lo, &Real::int(3), 128), CertOrdering::Equal);
        assert!(is_vacuous(&IVec3::new(4, -7, 0), &e));
        let lo0 = x_dot_u_lower(&IVec3::new(4, -7, 0), &e);
        assert_eq!(compare_reals(&lo0, &Real::int(0), 128), CertOrdering::Equal);
        // Larger radius never increases the bound.
        let wide = x_dot_u_lower(&IVec3::new(1, 2, 3), &enc(IVec3::e(2), rat(1, 100)));
        assert_eq!(compare_reals(&wide, &lo, 256), CertOrdering::Less);
    }

    #[test]
    fn vw_parity() {
        let xs: Vec<IVec3> = (0..5).map(|k| IVec3::new(1, k, k * k)).collect();
        let ledger = vec![rat(1, 2), rat(1, 4), rat(1, 8), rat(1, 16), rat(1, 32)];
        let (v, w) = enclose_vw_all(&xs, &ledger, 4).unwrap();
        assert_eq!(v.iter().map(|e| e.anchor_index).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(w.iter().map(|e| e.anchor_index).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(w[1].radius_sq_ub, rat(1, 64));
        assert!(enclose_vw_all(&xs, &ledger, 2).is_err());
    }

    #[test]
    fn toy_build() {
        use crate::cf::AlphaChoice;
        use crate::exact::rat::rat_int;
        use crate::planner::{make_plan, PlanParams, PsiSpec};
        let p = PlanParams {
            alpha: AlphaChoice::Sqrt2Minus1,
            c1: rat_int(4),
            delta: rat(2, 5),
            x0: IVec3::new(0, 0, 1),
            psi: PsiSpec::default(),
            n_steps: 4,
            theta: None,
            toy: true,
            audit_clean: false,
            max_prec: 1 << 14,
        };
        let (plan, sched) = make_plan(&p).unwrap();
        let st = build(&plan, &sched, 1 << 14).unwrap();
        assert_eq!(st.steps.len(), 3);
        assert_eq!(st.xs.len(), 5);
        assert!(st.verdict().is_pass());
        for (k, s) in st.steps.iter().enumerate() {
            assert_eq!(s.cert.det_xs_x_y, BigInt::one());
            assert_eq!(det3(&st.xs[k], &st.xs[k + 1], &st.ys[k + 1]), BigInt::one());
        }
    }
}

//! Parameter audit: every inequality the construction's proof consumes,
//! instantiated at the planned values.

use serde::{Deserialize, Serialize};

use crate::check::{check_ge, check_le, overall, Check};
use crate::exact::rat::{rat_str, Rat};
use crate::exact::real::{Real, Verdict};
use crate::planner::{Plan, Schedule};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(with = "rat_str")]
    pub c2: Rat,
    #[serde(with = "rat_str")]
    pub c3: Rat,
    #[serde(with = "rat_str")]
    pub c4: Rat,
}

impl Constants {
    pub fn new(c1: &Rat, delta0_sq: &Rat) -> Constants {
        let k = |m: i64| c1 * Rat::from_integer(m.into());
        let c2 = k(8) * k(8) * k(8) / delta0_sq;
        let c3 = Rat::from_integer(25.into()) * c1 * c1 * c1 * &c2;
        let s = k(6);
        let c4 = &s * &s * &s * &s * &s / delta0_sq;
        Constants { c2, c3, c4 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub constants: Constants,
    pub checks: Vec<Check>,
}

impl AuditReport {
    pub fn verdict(&self) -> Verdict {
        overall(&self.checks)
    }

    pub fn failing(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.verdict.is_pass()).collect()
    }
}

fn r(x: &Rat) -> Real {
    Real::rat(x.clone())
}

pub fn audit(plan: &Plan, sched: &Schedule) -> AuditReport {
    let mp = 1 << 14;
    let k = Constants::new(&plan.c1, &plan.delta0_sq);
    let c1 = r(&plan.c1);
    let d0sq = r(&plan.delta0_sq);
    let d0 = d0sq.sqrt();
    let x = |i: usize| sched.xs[i].real();
    let xg = |i: usize| sched.xs[i].pow_gamma();
    let x1 = x(1);
    let x1_2mg = x1.pow(&Real::int(2).sub(&Real::gamma()));
    let n = plan.n_steps;
    let c1k = |m: i64| c1.mul(&Real::int(m));

    let mut out: Vec<Check> = plan.checks.clone();
    out.extend(sched.checks.iter().cloned());

    // |q y_i| >= C2 |x|.
    let (c2, c3) = (r(&k.c2), r(&k.c3));
    let c1_sq = c1.square();
    out.push(check_ge(
        "far y: C2/(50 C1^2) - 8C1/delta0^2 >= 2C1/delta0^2",
        &c2.div(&c1_sq.mul(&Real::int(50))).sub(&c1k(8).div(&d0sq)),
        &c1k(2).div(&d0sq),
        mp,
    ));
    out.push(check_ge("far y: 2C1 X1^(2-gamma) >= delta0^2", &c1k(2).mul(&x1_2mg), &d0sq, mp));

    // 0 < |q y_i| < C2 |x|.
    out.push(check_ge("near y: X1 >= C2/2", &x1, &c2.div(&Real::int(2)), mp));
    out.push(check_le(
        "near y: 16 C1 C3 <= delta0^2 X1^(gamma+1)",
        &c1k(16).mul(&c3),
        &d0sq.mul(&sched.xs[1].pow_gamma_plus(1)),
        mp,
    ));
    out.push(check_ge(
        "near y: X1^3 >= 2 C3 C2^(1/gamma)",
        &x1.powi(3),
        &c3.mul(&Real::int(2)).mul(&c2.pow(&Real::int(1).div(&Real::gamma()))),
        mp,
    ));

    // q = 0, p != 0.
    let c6 = c1k(6);
    out.push(check_ge("in plane: X1^(2-gamma) >= (6C1)^3", &x1_2mg, &c6.powi(3), mp));
    for i in 1..n {
        out.push(check_le(
            format!("in plane[{i}]: 200 C1^3 X_i^gamma <= delta0^2 X1 X_i+1^gamma"),
            &c1.powi(3).mul(&Real::int(200)).mul(&xg(i)),
            &d0sq.mul(&x1).mul(&xg(i + 1)),
            mp,
        ));
        out.push(check_le(
            format!("in plane[{i}]: 9 <= delta0 X1 X_i-1 X_i X_i+1^gamma"),
            &Real::int(9),
            &d0.mul(&x1).mul(&x(i - 1)).mul(&x(i)).mul(&xg(i + 1)),
            mp,
        ));
        out.push(check_le(
            format!("in plane[{i}]: 5C1 X_i+1/X_i+2 <= 5C1/(delta0 X_i X_i+1^(gamma+1))"),
            &c1k(5).mul(&x(i + 1)).div(&x(i + 2)),
            &c1k(5).div(&d0.mul(&x(i)).mul(&sched.xs[i + 1].pow_gamma_plus(1))),
            mp,
        ));
    }

    // p = q = 0.
    out.push(check_le("multiple: 5C1 <= X1", &c1k(5), &x1, mp));
    out.push(Check::exact("multiple: 1125 <= 1296", 1125 <= 1296, "1125".into(), "1296".into()));
    for i in 1..=n {
        out.push(check_le(
            format!("multiple[{i}]: X1^2 X_i-1 <= X_i+1"),
            &x1.square().mul(&x(i - 1)),
            &x(i + 1),
            mp,
        ));
        out.push(check_ge(
            format!("multiple[{i}]: delta0 X_i^(gamma+1) X1^(2-gamma) X_i-1 >= (6C1)^4"),
            &d0.mul(&sched.xs[i].pow_gamma_plus(1)).mul(&x1_2mg).mul(&x(i - 1)),
            &c6.powi(4),
            mp,
        ));
    }
    AuditReport { constants: k, checks: out }
}

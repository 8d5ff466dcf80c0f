//! Condition (iii): for each sample scale `X`, the rule
//! `5 C1 X_{i-1} <= X < 5 C1 X_i` picks `x_{i-1}` as the witness.

use serde::{Deserialize, Serialize};

use crate::builder::{x_dot_u_upper, ConstructionState, DirKind};
use crate::check::{check_le, overall, Check};
use crate::error::{Error, Result};
use crate::exact::rat::{rat_str, Rat};
use crate::exact::real::{compare_reals, upper_rat, CertOrdering, Real, Verdict};
use crate::xval::XVal;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessSample {
    #[serde(with = "rat_str")]
    pub x: Rat,
    /// `i` with `5 C1 X_{i-1} <= X < 5 C1 X_i`; the witness is `x_{i-1}`.
    pub index: usize,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    #[serde(with = "rat_str")]
    pub c: Rat,
    pub samples: Vec<WitnessSample>,
}

impl WitnessReport {
    pub fn verdict(&self) -> Verdict {
        self.samples.iter().fold(Verdict::Pass, |v, s| v.and(overall(&s.checks)))
    }
}

/// `count` dyadic samples `5 C1 X_0 (X_N / X_0)^(k/count)`, rounded up.
pub fn log_grid(c1: &Rat, scales: &[XVal], n: usize, count: usize) -> Result<Vec<Rat>> {
    let base = Real::rat(c1 * Rat::from_integer(5.into())).mul(&scales[0].real());
    let ratio = scales[n].real().div(&scales[0].real());
    (0..count)
        .map(|k| {
            let e = Real::rat(Rat::new((k as i64).into(), (count as i64).into()));
            let x = if k == 0 { base.clone() } else { base.mul(&ratio.pow(&e)) };
            upper_rat(&x, 64).ok_or_else(|| Error::Undecided("grid point".into()))
        })
        .collect()
}

pub fn check_condition_iii(state: &ConstructionState, c1: &Rat, samples: &[Rat], c: &Rat, max_prec: u32) -> Result<WitnessReport> {
    let n = state.n();
    let five_c1 = Real::rat(c1 * Rat::from_integer(5.into()));
    let lim = |i: usize| five_c1.mul(&state.scales[i].real());
    let mut out = Vec::with_capacity(samples.len());
    for x in samples {
        let xr = Real::rat(x.clone());
        let index = (1..=n)
            .find(|&i| {
                let lo = compare_reals(&lim(i - 1), &xr, max_prec);
                let hi = compare_reals(&xr, &lim(i), max_prec);
                matches!(lo, CertOrdering::Less | CertOrdering::Equal) && hi == CertOrdering::Less
            })
            .ok_or_else(|| Error::Input(format!("sample {x} outside [5 C1 X_0, 5 C1 X_N)")))?;
        let wit = &state.xs[index - 1];
        let mut checks = Vec::new();
        let ns = Rat::from_integer(wit.norm_sq());
        checks.push(Check::exact("|x_i-1| <= X", ns <= x * x, ns.to_string(), (x * x).to_string()));
        let rhs = Real::rat(c.clone()).div(&xr.pow(&Real::gamma().add(&Real::int(1))));
        // x_{i-1} lies on the anchor-i plane, so only the radius contributes;
        // later anchors are tighter still.
        let dot = (index..=n)
            .rev()
            .map(|j| check_le(format!("|x_i-1 . u| <= C/X^(gamma+1) [anchor {j}]"), &x_dot_u_upper(wit, state.u_at(j)), &rhs, max_prec))
            .find(|ch| ch.verdict.is_pass());
        checks.push(dot.unwrap_or_else(|| check_le("|x_i-1 . u| <= C/X^(gamma+1)", &x_dot_u_upper(wit, state.u_at(index)), &rhs, max_prec)));
        // min(|x.v'|, |x.w'|) <= |x| dist(x, {v, w}) <= |x| * 2 delta_i.
        let own = state
            .v
            .iter()
            .chain(state.w.iter())
            .find(|e| e.anchor_index == index - 1)
            .ok_or_else(|| Error::Internal("missing V/W enclosure".into()))?;
        debug_assert_eq!(own.kind == DirKind::V, (index - 1) % 2 == 1);
        let lhs = Real::int(ns.numer().clone()).sqrt().mul(&own.radius());
        checks.push(check_le("|x_i-1| dist(x_i-1, {v,w}) <= C/X^(gamma+1)", &lhs, &rhs, max_prec));
        out.push(WitnessSample { x: x.clone(), index, checks });
    }
    Ok(WitnessReport { c: c.clone(), samples: out })
}

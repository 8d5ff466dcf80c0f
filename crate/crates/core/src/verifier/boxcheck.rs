//! Coefficient box: every `x = q y_i + p x_{i-1} + r x_i` with
//! `|q|, |p|, |r| <= K` in the shell `X_i/X_1 <= |x| < X_{i+1}/X_1`.

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builder::{x_dot_u_lower, ConstructionState};
use crate::check::check_le;
use crate::error::{Error, Result};
use crate::exact::dist::norm;
use crate::exact::ivec::{det3, IVec3};
use crate::exact::rat::Rat;
use crate::exact::real::{cert_lt, Real, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxItem {
    pub coeffs: [i64; 3],
    pub clause: String,
    pub lhs: String,
    pub rhs: String,
    pub prec: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxReport {
    pub i: usize,
    pub k: i64,
    pub points: u64,
    pub in_range: u64,
    /// In-range counts for `q != 0`, `q = 0, p != 0`, `q = p = 0`.
    pub branches: [u64; 3],
    pub bookkeeping_failures: Vec<BoxItem>,
    pub violations: Vec<BoxItem>,
    pub undecided: Vec<BoxItem>,
}

impl BoxReport {
    pub fn verdict(&self) -> Verdict {
        if !self.violations.is_empty() || !self.bookkeeping_failures.is_empty() {
            Verdict::Fail
        } else if !self.undecided.is_empty() {
            Verdict::Undecided
        } else {
            Verdict::Pass
        }
    }
}

/// Valid box indices: `y_i` must exist and some anchor must lie beyond
/// both planes containing `x_i`.
pub fn box_indices(state: &ConstructionState) -> std::ops::RangeInclusive<usize> {
    2..=state.n().saturating_sub(2)
}

enum Res {
    Out,
    In(usize, Option<BoxItem>, Verdict),
}

pub fn coeff_box(state: &ConstructionState, i: usize, k: i64, max_prec: u32) -> Result<BoxReport> {
    if !box_indices(state).contains(&i) {
        return Err(Error::Input(format!("box index {i} outside {:?}", box_indices(state))));
    }
    let (xm, xi, xn, y) = (&state.xs[i - 1], &state.xs[i], &state.xs[i + 1], &state.ys[i]);
    let cert = &state.steps[i - 1].cert;
    let (qn, neg_pn) = (cert.det_xs_x_xp.clone(), cert.det_y_x_xp.clone());
    let x1sq = state.scales[1].sq();
    let (lo, hi) = (state.scales[i].sq(), state.scales[i + 1].sq());
    let x1 = state.scales[1].real();
    let base = x1.powi(3).mul(&state.scales[i - 1].real());
    let dists = [state.v_best(), state.w_best()];

    let coeffs: Vec<[i64; 3]> = (-k..=k)
        .flat_map(|q| (-k..=k).flat_map(move |p| (-k..=k).map(move |r| [q, p, r])))
        .filter(|c| c != &[0, 0, 0])
        .collect();
    let results: Vec<(Option<BoxItem>, Res)> = coeffs
        .par_iter()
        .map(|&[q, p, r]| {
            let (bq, bp, br) = (BigInt::from(q), BigInt::from(p), BigInt::from(r));
            let x = y.scale(&bq).add(&xm.scale(&bp)).add(&xi.scale(&br));
            let mut book = None;
            let d1 = det3(&x, xm, xi);
            // det(x, x_i, x_{i+1}) = -(q p_n - p q_n), with -p_n = det(y, x_i, x_{i+1}).
            let d2 = det3(&x, xi, xn);
            let want2 = &bq * &neg_pn + &bp * &qn;
            if d1 != bq || d2 != want2 {
                book = Some(BoxItem {
                    coeffs: [q, p, r],
                    clause: "bookkeeping".into(),
                    lhs: format!("{d1}, {d2}"),
                    rhs: format!("{bq}, {want2}"),
                    prec: 0,
                });
            }
            let ns = Rat::from_integer(x.norm_sq()) * &x1sq;
            if ns < lo || ns >= hi {
                return (book, Res::Out);
            }
            let branch = if q != 0 { 0 } else if p != 0 { 1 } else { 2 };
            (book, decide(&x, [q, p, r], branch, state, &base, &dists, max_prec))
        })
        .collect();

    let mut rep = BoxReport {
        i,
        k,
        points: coeffs.len() as u64,
        in_range: 0,
        branches: [0; 3],
        bookkeeping_failures: Vec::new(),
        violations: Vec::new(),
        undecided: Vec::new(),
    };
    for (book, res) in results {
        if let Some(b) = book {
            rep.bookkeeping_failures.push(b);
        }
        if let Res::In(branch, item, v) = res {
            rep.in_range += 1;
            rep.branches[branch] += 1;
            match (v, item) {
                (Verdict::Fail, Some(it)) => rep.violations.push(it),
                (Verdict::Undecided, Some(it)) => rep.undecided.push(it),
                _ => {}
            }
        }
    }
    Ok(rep)
}

/// `q != 0`: `|x.u| X_1^3 X_{i-1} |x|^gamma >= 1`. Otherwise the numerator
/// is `dist(x, {v,w})`.
fn decide(
    x: &IVec3,
    coeffs: [i64; 3],
    branch: usize,
    state: &ConstructionState,
    base: &Real,
    dists: &[&crate::builder::DirectionEnclosure; 2],
    mp: u32,
) -> Res {
    let nx = norm(x);
    let scale = base.mul(&nx.pow(&Real::gamma()));
    let targets: Vec<Real> = if branch == 0 {
        vec![Real::int(1)]
    } else {
        dists.iter().filter_map(|e| e.dist_upper(x).ok()).collect()
    };
    let mut last = None;
    let mut undecided = false;
    for j in (1..=state.n()).rev() {
        let lo = x_dot_u_lower(x, state.u_at(j));
        match cert_lt(&Real::int(0), &lo, mp) {
            Verdict::Pass => {}
            Verdict::Undecided => {
                undecided = true;
                continue;
            }
            Verdict::Fail => continue,
        }
        let lhs = lo.mul(&scale);
        for t in &targets {
            let c = check_le("box bound", t, &lhs, mp);
            match c.verdict {
                Verdict::Pass => return Res::In(branch, None, Verdict::Pass),
                Verdict::Undecided => undecided = true,
                Verdict::Fail => {}
            }
            last = Some(c);
        }
    }
    let clause = ["q != 0: |x.u| >= 1/(X1^3 X_i-1 |x|^gamma)", "q = 0: |x.u| >= dist(x,{v,w})/(X1^3 X_i-1 |x|^gamma)"]
        [usize::from(branch != 0)];
    let (lhs, rhs, prec) = match last {
        Some(c) => (c.rhs, c.lhs, c.prec),
        None => ("nonpositive".into(), "?".into(), mp),
    };
    let item = BoxItem { coeffs, clause: clause.into(), lhs, rhs, prec };
    Res::In(branch, Some(item), if undecided { Verdict::Undecided } else { Verdict::Fail })
}

//! Condition (iv) on the shell `C' <= |x| <= min(B, 2C')`.
//!
//! Only the `K_near` integer points closest to the plane `x . u = 0` on each
//! line parallel to the dominant coordinate axis are tested; a one-time guard
//! certifies that every other point clears the bound. Candidates are first
//! screened in `i128`/`f64` with directed safety margins, and anything that
//! does not clear the screen is re-decided with certified reals.

use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builder::{x_dot_u_lower, ConstructionState, DirectionEnclosure};
use crate::check::{check_le, check_lt, sci, Check};
use crate::error::{Error, Result};
use crate::exact::dist::norm;
use crate::exact::ivec::IVec3;
use crate::exact::rat::{rat_str, Rat};
use crate::exact::real::{cert_lt, lower_rat, upper_rat, Real, Verdict};
use crate::planner::PsiSpec;

const SAFE_DOWN: f64 = 1.0 - 1.0 / (1u64 << 48) as f64;
const SAFE_UP: f64 = 1.0 + 1.0 / (1u64 << 48) as f64;
const BLOCK: i64 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanParams {
    /// Norm cap `B`.
    pub b: BigInt,
    pub k_near: u32,
    pub max_prec: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanItem {
    pub x: IVec3,
    pub lhs: String,
    pub rhs: String,
    pub prec: u32,
    pub anchor: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    /// `C'^2 = X_2^2 / X_1^2`.
    #[serde(with = "rat_str")]
    pub c_prime_sq: Rat,
    pub c_prime: String,
    pub norm_sq_lo: BigInt,
    pub norm_sq_hi: BigInt,
    pub below_threshold: bool,
    pub k_near: u32,
    pub anchor: usize,
    pub axis: usize,
    pub guard: Option<Check>,
    pub lines: u64,
    pub candidates: u64,
    pub screened: u64,
    pub exact_path: u64,
    /// Candidates whose `|x . u|` lower bound was not certified positive.
    pub nonpositive: u64,
    pub violations: Vec<ScanItem>,
    pub undecided: Vec<ScanItem>,
    /// Parameter clauses that fail for this run and were not required.
    pub skipped_clauses: Vec<String>,
    #[serde(skip)]
    pub wall_ms: u128,
}

impl ScanReport {
    pub fn verdict(&self) -> Verdict {
        if !self.violations.is_empty() || self.nonpositive > 0 {
            Verdict::Fail
        } else if !self.undecided.is_empty() {
            Verdict::Undecided
        } else {
            Verdict::Pass
        }
    }

    /// Undecided share in parts per million.
    pub fn undecided_ppm(&self) -> u64 {
        if self.candidates == 0 {
            0
        } else {
            self.undecided.len() as u64 * 1_000_000 / self.candidates
        }
    }
}

/// `c'^2` for the run.
pub fn c_prime_sq(state: &ConstructionState) -> Rat {
    state.scales[2].sq() / state.scales[1].sq()
}

fn ceil_rat(r: &Rat) -> BigInt {
    r.ceil().to_integer()
}

/// The anchor used for enumeration: the tightest one whose products with
/// points of norm `<= r` stay inside `i128`.
fn fast_anchor(state: &ConstructionState, r: i64) -> Option<usize> {
    let lim = BigInt::from(1u8) << 124u32;
    (1..=state.n()).rev().find(|&j| {
        let rep = &state.u_at(j).rep;
        let m = rep.0.iter().map(|c| c.abs()).max().unwrap_or_default();
        m * BigInt::from(4 * (r + 2)) < lim
    })
}

struct Screen {
    n: [i128; 3],
    axis: usize,
    others: [usize; 2],
    inv_h_lo: f64,
    two_rho_hi: f64,
    t0: u64,
    table: Vec<f64>,
    lo: u64,
    hi: u64,
    k: i64,
}

#[derive(Default)]
struct Block {
    lines: u64,
    candidates: u64,
    screened: u64,
    escalate: Vec<IVec3>,
}

impl Screen {
    fn run_row(&self, a: i64, rmax: i64, out: &mut Block) {
        let (p, q) = (self.others[0], self.others[1]);
        let nk = self.n[self.axis];
        let s0 = (a * a) as u64;
        if s0 > self.hi {
            return;
        }
        let bmax = ((self.hi - s0).sqrt() as i64).min(rmax);
        for b in -bmax..=bmax {
            let s = s0 + (b * b) as u64;
            out.lines += 1;
            let num = -(self.n[p] * a as i128 + self.n[q] * b as i128);
            // floor(num / nk) with nk > 0, corrected exactly.
            let mut f = (num as f64 / nk as f64).floor() as i128;
            while nk * f > num {
                f -= 1;
            }
            while nk * (f + 1) <= num {
                f += 1;
            }
            for d in (1 - self.k / 2)..=(self.k / 2) {
                let xk = f + d as i128;
                let ns = s as i128 + xk * xk;
                if ns < self.lo as i128 || ns > self.hi as i128 {
                    continue;
                }
                out.candidates += 1;
                let dd = num.abs_diff(nk * xk) as f64;
                let t = (ns as u64).sqrt();
                let lower = (dd * self.inv_h_lo * SAFE_DOWN - (t + 1) as f64 * self.two_rho_hi * SAFE_UP) * SAFE_DOWN;
                let l = self.table[(t - self.t0) as usize];
                if lower > 0.0 && lower * l * SAFE_DOWN >= 1.0 {
                    out.screened += 1;
                } else {
                    let mut c = [BigInt::zero(), BigInt::zero(), BigInt::zero()];
                    c[p] = a.into();
                    c[q] = b.into();
                    c[self.axis] = xk.into();
                    out.escalate.push(IVec3(c));
                }
            }
        }
    }
}

enum Outcome {
    Pass,
    Violation(ScanItem),
    Undecided(ScanItem),
    NonPositive(ScanItem),
}

/// Certified decision for one point: some anchor must give a positive
/// lower bound on `|x . u|` that beats the V or W distance bound.
fn decide(x: &IVec3, state: &ConstructionState, psi: &PsiSpec, max_prec: u32) -> Outcome {
    let nx = norm(x);
    let scale = psi.eval(&nx).mul(&nx.pow(&Real::gamma()));
    let dists: Vec<Real> = [state.v_best(), state.w_best()].iter().filter_map(|e| e.dist_upper(x).ok()).collect();
    let mut last: Option<(Check, usize)> = None;
    let mut positive = false;
    let mut undecided = false;
    for j in (1..=state.n()).rev() {
        let lo = x_dot_u_lower(x, state.u_at(j));
        match cert_lt(&Real::int(0), &lo, max_prec) {
            Verdict::Pass => positive = true,
            Verdict::Undecided => {
                undecided = true;
                continue;
            }
            Verdict::Fail => continue,
        }
        let lhs = lo.mul(&scale);
        for d in &dists {
            let c = check_le("dist(x,{v,w}) <= |x.u| psi(|x|) |x|^gamma", d, &lhs, max_prec);
            match c.verdict {
                Verdict::Pass => return Outcome::Pass,
                Verdict::Undecided => undecided = true,
                Verdict::Fail => {}
            }
            last = Some((c, j));
        }
    }
    let item = match last {
        Some((c, j)) => ScanItem { x: x.clone(), lhs: c.rhs, rhs: c.lhs, prec: c.prec, anchor: j },
        None => ScanItem { x: x.clone(), lhs: "?".into(), rhs: "?".into(), prec: max_prec, anchor: 0 },
    };
    if !positive && !undecided {
        Outcome::NonPositive(item)
    } else if undecided {
        Outcome::Undecided(item)
    } else {
        Outcome::Violation(item)
    }
}

/// `psi(t) t^gamma` rounded down to `f64`, for integer `t` in `t0..=t1`.
fn psi_table(psi: &PsiSpec, t0: u64, t1: u64) -> Result<Vec<f64>> {
    (t0..=t1)
        .into_par_iter()
        .map(|t| {
            if t == 0 {
                return Ok(0.0);
            }
            let tr = Real::int(t);
            let v = psi.eval(&tr).mul(&tr.pow(&Real::gamma()));
            let lo = v.eval(96).ok_or_else(|| Error::Undecided("psi table".into()))?.lo;
            Ok(lo.to_f64_dir(false).max(0.0))
        })
        .collect()
}

fn f64_down(r: &Real) -> Result<f64> {
    lower_rat(r, 128)
        .map(|q| crate::exact::dyadic::Dyadic::from_rat_round(&q, 80, false).to_f64_dir(false))
        .ok_or_else(|| Error::Undecided("screen constant".into()))
}

fn f64_up(r: &Real) -> Result<f64> {
    upper_rat(r, 128)
        .map(|q| crate::exact::dyadic::Dyadic::from_rat_round(&q, 80, true).to_f64_dir(true))
        .ok_or_else(|| Error::Undecided("screen constant".into()))
}

/// Guard: `|u_k| K/2 - 2 |x|max rho > 1/(psi(C') C'^gamma)`.
fn guard_check(enc: &DirectionEnclosure, axis: usize, k: u32, hi_sq: &BigInt, cp: &Real, psi: &PsiSpec, mp: u32) -> Check {
    let uk = Real::int(enc.rep.0[axis].abs()).div(&norm(&enc.rep));
    let lhs = uk
        .mul(&Real::rat(Rat::new(k.into(), 2.into())))
        .sub(&Real::int(hi_sq.clone()).sqrt().mul(&enc.radius()).mul(&Real::int(2)));
    let rhs = Real::int(1).div(&psi.eval(cp).mul(&cp.pow(&Real::gamma())));
    check_lt("guard: 1/(psi(C') C'^gamma) < |u_k| K/2 - 2 B rho", &rhs, &lhs, mp)
}

pub fn slab_scan(state: &ConstructionState, psi: &PsiSpec, p: &ScanParams, skipped: &[String]) -> Result<ScanReport> {
    let start = Instant::now();
    if p.k_near == 0 || p.k_near % 2 == 1 {
        return Err(Error::Input("K_near must be a positive even number".into()));
    }
    let cp2 = c_prime_sq(state);
    let lo_sq = ceil_rat(&cp2);
    let hi_sq = {
        let four = (&cp2 * Rat::from_integer(4.into())).floor().to_integer();
        four.min(&p.b * &p.b)
    };
    let mut rep = ScanReport {
        c_prime: sci(&Real::rat(cp2.clone()).sqrt()),
        c_prime_sq: cp2.clone(),
        norm_sq_lo: lo_sq.clone(),
        norm_sq_hi: hi_sq.clone(),
        below_threshold: false,
        k_near: p.k_near,
        anchor: 0,
        axis: 0,
        guard: None,
        lines: 0,
        candidates: 0,
        screened: 0,
        exact_path: 0,
        nonpositive: 0,
        violations: Vec::new(),
        undecided: Vec::new(),
        skipped_clauses: skipped.to_vec(),
        wall_ms: 0,
    };
    if hi_sq < lo_sq {
        rep.below_threshold = true;
        rep.wall_ms = start.elapsed().as_millis();
        return Ok(rep);
    }
    let (lo, hi) = (
        lo_sq.to_u64().ok_or_else(|| Error::Input("norm range too large".into()))?,
        hi_sq.to_u64().ok_or_else(|| Error::Input("norm range too large".into()))?,
    );
    let r = hi.sqrt() as i64;
    let j = fast_anchor(state, r).ok_or_else(|| Error::Input("no anchor fits the i128 screen".into()))?;
    let enc = state.u_at(j);
    let mut nv = enc.rep.clone();
    let axis = nv.argmax_abs();
    if nv.0[axis].is_negative() {
        nv = nv.neg();
    }
    let n: [i128; 3] = [0, 1, 2].map(|i| nv.0[i].to_i128().expect("checked by fast_anchor"));
    let cp = Real::rat(cp2.clone()).sqrt();
    let guard = guard_check(enc, axis, p.k_near, &hi_sq, &cp, psi, p.max_prec);
    rep.anchor = j;
    rep.axis = axis;
    let guard_ok = guard.verdict.is_pass();
    rep.guard = Some(guard);
    if !guard_ok {
        return Err(Error::CertFailed { clause: "slab guard (raise K_near or lower B)".into(), step: j });
    }

    let t0 = lo.sqrt();
    let screen = Screen {
        n,
        axis,
        others: [(axis + 1) % 3, (axis + 2) % 3],
        inv_h_lo: f64_down(&Real::int(1).div(&norm(&nv)))?,
        two_rho_hi: 2.0 * f64_up(&enc.radius())?,
        t0,
        table: psi_table(psi, t0, hi.sqrt() + 1)?,
        lo,
        hi,
        k: p.k_near as i64,
    };
    let others = screen.others;
    let blocks: Vec<Block> = (0..((2 * r + 1 + BLOCK - 1) / BLOCK))
        .into_par_iter()
        .map(|bi| {
            let mut out = Block::default();
            let a0 = -r + bi * BLOCK;
            for a in a0..(a0 + BLOCK).min(r + 1) {
                screen.run_row(a, r, &mut out);
            }
            out
        })
        .collect();
    let mut escalate = Vec::new();
    for b in blocks {
        rep.lines += b.lines;
        rep.candidates += b.candidates;
        rep.screened += b.screened;
        escalate.extend(b.escalate);
    }
    log::info!(
        "slab: {} lines, {} candidates, {} escalated (axis {axis}, others {others:?})",
        rep.lines,
        rep.candidates,
        escalate.len()
    );
    rep.exact_path = escalate.len() as u64;
    let outcomes: Vec<Outcome> = escalate.par_iter().map(|x| decide(x, state, psi, p.max_prec)).collect();
    for o in outcomes {
        match o {
            Outcome::Pass => {}
            Outcome::Violation(i) => rep.violations.push(i),
            Outcome::Undecided(i) => rep.undecided.push(i),
            Outcome::NonPositive(i) => {
                rep.nonpositive += 1;
                rep.violations.push(i);
            }
        }
    }
    rep.wall_ms = start.elapsed().as_millis();
    Ok(rep)
}

/// Certified check of one point, outside any scan.
pub fn check_point(x: &IVec3, state: &ConstructionState, psi: &PsiSpec, max_prec: u32) -> Verdict {
    match decide(x, state, psi, max_prec) {
        Outcome::Pass => Verdict::Pass,
        Outcome::Undecided(_) => Verdict::Undecided,
        _ => Verdict::Fail,
    }
}

//! Plan and certificate files, and the plan/build/verify pipeline.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::audit::{audit, AuditReport, Constants};
use crate::builder::{build, x_dot_u_upper, ConstructionState};
use crate::check::sci;
use crate::config::{sha256_json, RunConfig};
use crate::error::{Error, Result};
use crate::exact::real::{Real, Verdict};
use crate::planner::{make_plan, Plan, Schedule};
use crate::verifier::boxcheck::box_indices;
use crate::verifier::{
    check_condition_iii, coeff_box, export_alpha_beta, log_grid, property_suites, slab_scan, AlphaBeta, BoxReport,
    PropertyReport, ScanParams, ScanReport, WitnessReport,
};

pub const SCHEMA: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub schema: u32,
    pub tool_version: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub plan: Plan,
    pub schedule: Schedule,
    pub plan_hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub i: usize,
    pub norm_log2: String,
    pub dist_v_upper: String,
    pub dist_w_upper: String,
    pub dot_u_upper: String,
    pub delta_upper: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunCertificate {
    pub schema: u32,
    pub tool_version: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub plan_hash: String,
    pub plan: Plan,
    pub schedule: Schedule,
    pub state: ConstructionState,
    pub audit: AuditReport,
    /// Per-index data for plotting, computed once at build time.
    pub series: Vec<SeriesRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    All,
    Slab,
    Box,
    Witness,
    Properties,
    Audit,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "all" => Mode::All,
            "slab" => Mode::Slab,
            "box" => Mode::Box,
            "witness" => Mode::Witness,
            "properties" => Mode::Properties,
            "audit" => Mode::Audit,
            _ => return Err(format!("unknown mode {s:?}")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditSection {
    pub report: AuditReport,
    pub verdict: Verdict,
    /// Failing clauses tolerated because the run is in toy mode.
    pub skipped: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub mode: Mode,
    pub config_hash: String,
    pub plan_hash: String,
    pub toy: bool,
    pub construction: Verdict,
    pub audit: Option<AuditSection>,
    pub witness: Option<WitnessReport>,
    pub boxes: Vec<BoxReport>,
    pub slab: Option<ScanReport>,
    pub properties: Option<PropertyReport>,
    pub alpha_beta: Option<AlphaBeta>,
    pub condition_i: String,
    pub verdict: Verdict,
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

pub fn plan_hash(plan: &Plan, schedule: &Schedule) -> String {
    sha256_json(&(plan, schedule))
}

pub fn run_plan(cfg: &RunConfig) -> Result<PlanFile> {
    let (plan, schedule) = make_plan(&cfg.plan_params())?;
    Ok(PlanFile {
        schema: SCHEMA,
        tool_version: TOOL_VERSION.into(),
        config: cfg.clone(),
        config_hash: cfg.hash(),
        plan_hash: plan_hash(&plan, &schedule),
        plan,
        schedule,
    })
}

impl PlanFile {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::Input(format!("unsupported schema {}", self.schema)));
        }
        if self.config_hash != self.config.hash() {
            return Err(Error::Input("config hash mismatch".into()));
        }
        if self.plan_hash != plan_hash(&self.plan, &self.schedule) {
            return Err(Error::Input("plan hash mismatch".into()));
        }
        Ok(())
    }
}

/// `log2 n` for `n > 0`, from the top 64 bits.
fn log2_big(n: &num_bigint::BigInt) -> f64 {
    let bits = n.bits();
    let shift = bits.saturating_sub(64);
    let top: num_bigint::BigInt = n >> shift;
    num_traits::ToPrimitive::to_f64(&top).map(|t| t.log2() + shift as f64).unwrap_or(0.0)
}

fn series(state: &ConstructionState) -> Vec<SeriesRow> {
    let u = state.u_best();
    (0..=state.n())
        .map(|i| {
            let x = &state.xs[i];
            let d = |e: &crate::builder::DirectionEnclosure| e.dist_upper(x).map(|r| sci(&r)).unwrap_or_else(|_| "?".into());
            SeriesRow {
                i,
                norm_log2: format!("{:.3}", log2_big(&x.norm_sq()) / 2.0),
                dist_v_upper: d(state.v_best()),
                dist_w_upper: d(state.w_best()),
                dot_u_upper: sci(&x_dot_u_upper(x, u)),
                delta_upper: sci(&Real::rat(state.delta(i).clone())),
            }
        })
        .collect()
}

pub fn run_build(pf: &PlanFile) -> Result<RunCertificate> {
    pf.validate()?;
    let state = build(&pf.plan, &pf.schedule, pf.config.max_prec)?;
    let audit = audit(&pf.plan, &pf.schedule);
    Ok(RunCertificate {
        schema: SCHEMA,
        tool_version: TOOL_VERSION.into(),
        config: pf.config.clone(),
        config_hash: pf.config_hash.clone(),
        plan_hash: pf.plan_hash.clone(),
        plan: pf.plan.clone(),
        schedule: pf.schedule.clone(),
        series: series(&state),
        state,
        audit,
    })
}

impl RunCertificate {
    /// Hashes, then an independent rebuild that must reproduce the stored
    /// construction exactly.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::Input(format!("unsupported schema {}", self.schema)));
        }
        if self.config_hash != self.config.hash() {
            return Err(Error::Input("config hash mismatch".into()));
        }
        if self.plan_hash != plan_hash(&self.plan, &self.schedule) {
            return Err(Error::Input("plan hash mismatch".into()));
        }
        let again = build(&self.plan, &self.schedule, self.config.max_prec)?;
        if again != self.state {
            return Err(Error::Input("stored construction differs from rebuild".into()));
        }
        Ok(())
    }
}

pub const CONDITION_I: &str = "not finitely certifiable; surrogates: positive |x.u| lower bound for every slab candidate, \
and the exact intersection property at every step";

pub fn run_verify(cert: &RunCertificate, cfg: &RunConfig, mode: Mode) -> Result<VerifyReport> {
    cert.validate()?;
    let st = &cert.state;
    let plan = &cert.plan;
    let mp = cfg.max_prec;
    let want = |m: Mode| mode == Mode::All || mode == m;
    let failing: Vec<String> = cert.audit.failing().iter().map(|c| c.id.clone()).collect();
    let mut rep = VerifyReport {
        schema: SCHEMA,
        mode,
        config_hash: cert.config_hash.clone(),
        plan_hash: cert.plan_hash.clone(),
        toy: plan.toy,
        construction: st.verdict(),
        audit: None,
        witness: None,
        boxes: Vec::new(),
        slab: None,
        properties: None,
        alpha_beta: None,
        condition_i: CONDITION_I.into(),
        verdict: Verdict::Pass,
    };
    let mut v = rep.construction;
    if want(Mode::Audit) {
        let verdict = cert.audit.verdict();
        let skipped = if plan.toy && mode == Mode::All { failing.clone() } else { Vec::new() };
        if skipped.is_empty() {
            v = v.and(verdict);
        }
        rep.audit = Some(AuditSection { report: cert.audit.clone(), verdict, skipped });
    }
    if want(Mode::Witness) {
        let k = Constants::new(&plan.c1, &plan.delta0_sq);
        let grid = log_grid(&plan.c1, &st.scales, st.n(), cfg.samples)?;
        let w = check_condition_iii(st, &plan.c1, &grid, &k.c4, mp)?;
        v = v.and(w.verdict());
        rep.witness = Some(w);
    }
    if want(Mode::Box) {
        for i in box_indices(st) {
            let b = coeff_box(st, i, cfg.k, mp)?;
            v = v.and(b.verdict());
            rep.boxes.push(b);
        }
    }
    if want(Mode::Slab) {
        let cap = cfg.scan_cap().unwrap_or_else(|| {
            // Whole shell: 2C' rounded up.
            let c2 = crate::verifier::slab::c_prime_sq(st) * crate::exact::rat::rat_int(4);
            num_integer::Roots::sqrt(&c2.ceil().to_integer()) + 1
        });
        let skipped = if plan.toy { failing.clone() } else { Vec::new() };
        let s = slab_scan(st, &plan.psi, &ScanParams { b: cap, k_near: cfg.k_near, max_prec: mp }, &skipped)?;
        v = v.and(s.verdict());
        rep.slab = Some(s);
    }
    if want(Mode::Properties) {
        let p = property_suites(cfg.seed, 1000);
        v = v.and(Verdict::from_bool(p.passed()));
        rep.properties = Some(p);
    }
    if mode == Mode::All {
        rep.alpha_beta = export_alpha_beta(st, 128).ok();
    }
    rep.verdict = v;
    Ok(rep)
}

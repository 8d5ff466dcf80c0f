//! Run configuration: defaults, JSON config files, and flag overrides.

use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cf::AlphaChoice;
use crate::error::{Error, Result};
use crate::exact::ivec::IVec3;
use crate::exact::rat::{parse_rat, rat, rat_int, rat_str, Rat};
use crate::exact::real::DEFAULT_MAX_PREC;
use crate::planner::{PlanParams, PsiSpec};

/// Keys accepted in a config file; flags use the same names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub alpha: Option<String>,
    pub c1: Option<String>,
    pub delta: Option<String>,
    pub x0: Option<String>,
    #[serde(rename = "psi-c")]
    pub psi_c: Option<String>,
    #[serde(rename = "psi-e")]
    pub psi_e: Option<String>,
    pub steps: Option<usize>,
    pub theta: Option<String>,
    #[serde(rename = "B")]
    pub b: Option<u64>,
    #[serde(rename = "K")]
    pub k: Option<i64>,
    #[serde(rename = "K-near")]
    pub k_near: Option<u32>,
    #[serde(rename = "max-prec")]
    pub max_prec: Option<u32>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub toy: Option<bool>,
    #[serde(rename = "audit-clean")]
    pub audit_clean: Option<bool>,
    pub out: Option<String>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<RawConfig> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    /// Fields set in `o` win.
    pub fn overlay(self, o: RawConfig) -> RawConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RawConfig { $($f: o.$f.or(self.$f)),* } };
        }
        pick!(alpha, c1, delta, x0, psi_c, psi_e, steps, theta, b, k, k_near, max_prec, threads, seed, samples, toy, audit_clean, out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: AlphaChoice,
    #[serde(with = "rat_str")]
    pub c1: Rat,
    #[serde(with = "rat_str")]
    pub delta: Rat,
    pub x0: IVec3,
    pub psi: PsiSpec,
    pub steps: usize,
    #[serde(with = "crate::exact::rat::opt_rat_str")]
    pub theta: Option<Rat>,
    /// Norm cap for the slab scan; `None` scans the whole shell up to `2C'`.
    pub b: Option<u64>,
    pub k: i64,
    pub k_near: u32,
    pub max_prec: u32,
    pub seed: u64,
    pub samples: usize,
    pub toy: bool,
    pub audit_clean: bool,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: AlphaChoice::Sqrt2Minus1,
            c1: rat_int(4),
            delta: rat(2, 5),
            x0: IVec3::new(0, 0, 1),
            psi: PsiSpec::default(),
            steps: 5,
            theta: None,
            b: None,
            k: 8,
            k_near: 2,
            max_prec: DEFAULT_MAX_PREC,
            seed: 1,
            samples: 32,
            toy: false,
            audit_clean: false,
            threads: None,
            out: PathBuf::from("."),
        }
    }
}

fn bad(key: &str, e: impl std::fmt::Display) -> Error {
    Error::Input(format!("{key}: {e}"))
}

impl RunConfig {
    pub fn resolve(raw: &RawConfig) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(s) = &raw.alpha {
            c.alpha = s.parse().map_err(|e| bad("alpha", e))?;
        }
        let r = |key: &str, v: &Option<String>, d: Rat| -> Result<Rat> {
            v.as_deref().map(|s| parse_rat(s).map_err(|e| bad(key, e))).unwrap_or(Ok(d))
        };
        c.c1 = r("c1", &raw.c1, c.c1)?;
        c.delta = r("delta", &raw.delta, c.delta)?;
        c.psi = PsiSpec { c: r("psi-c", &raw.psi_c, c.psi.c)?, e: r("psi-e", &raw.psi_e, c.psi.e)? };
        if let Some(s) = &raw.theta {
            c.theta = Some(parse_rat(s).map_err(|e| bad("theta", e))?);
        }
        if let Some(s) = &raw.x0 {
            c.x0 = s.parse().map_err(|e| bad("x0", e))?;
        }
        c.steps = raw.steps.unwrap_or(c.steps);
        c.b = raw.b.or(c.b);
        c.k = raw.k.unwrap_or(c.k);
        c.k_near = raw.k_near.unwrap_or(c.k_near);
        c.max_prec = raw.max_prec.unwrap_or(c.max_prec);
        c.seed = raw.seed.unwrap_or(c.seed);
        c.samples = raw.samples.unwrap_or(c.samples);
        c.toy = raw.toy.unwrap_or(c.toy);
        c.audit_clean = raw.audit_clean.unwrap_or(c.audit_clean);
        c.threads = raw.threads;
        if let Some(o) = &raw.out {
            c.out = PathBuf::from(o);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        use num_traits::Signed;
        if !self.delta.is_positive() || self.delta > rat_int(1) {
            return Err(Error::Input(format!("delta must lie in (0, 1], got {}", self.delta)));
        }
        if !self.c1.is_positive() {
            return Err(Error::Input("c1 must be positive".into()));
        }
        if self.steps < 3 {
            return Err(Error::Input("steps must be at least 3".into()));
        }
        if self.k < 1 {
            return Err(Error::Input("K must be at least 1".into()));
        }
        if self.k_near == 0 || self.k_near % 2 == 1 {
            return Err(Error::Input("K-near must be a positive even number".into()));
        }
        if self.max_prec < 64 {
            return Err(Error::Input("max-prec must be at least 64".into()));
        }
        if self.samples == 0 {
            return Err(Error::Input("samples must be positive".into()));
        }
        self.psi.validate()
    }

    pub fn plan_params(&self) -> PlanParams {
        PlanParams {
            alpha: self.alpha,
            c1: self.c1.clone(),
            delta: self.delta.clone(),
            x0: self.x0.clone(),
            psi: self.psi.clone(),
            n_steps: self.steps,
            theta: self.theta.clone(),
            toy: self.toy,
            audit_clean: self.audit_clean,
            max_prec: self.max_prec,
        }
    }

    pub fn scan_cap(&self) -> Option<BigInt> {
        self.b.map(BigInt::from)
    }

    /// Hash of everything that affects results (threads and paths excluded).
    pub fn hash(&self) -> String {
        sha256_json(self)
    }
}

pub fn sha256_json<T: Serialize>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).expect("serializable");
    hex::encode(Sha256::digest(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RawConfig>(r#"{"delta":"2/5","bogus":1}"#).is_err());
        let raw: RawConfig = serde_json::from_str(r#"{"delta":"1/3","K-near":4,"B":100}"#).unwrap();
        let c = RunConfig::resolve(&raw).unwrap();
        assert_eq!((c.delta, c.k_near, c.b), (rat(1, 3), 4, Some(100)));
    }

    #[test]
    fn overlay_and_validation() {
        let file = RawConfig { delta: Some("1/3".into()), steps: Some(4), ..Default::default() };
        let flags = RawConfig { steps: Some(6), ..Default::default() };
        let c = RunConfig::resolve(&file.overlay(flags)).unwrap();
        assert_eq!((c.delta, c.steps), (rat(1, 3), 6));
        for bad in [r#"{"delta":"0"}"#, r#"{"delta":"-1/2"}"#, r#"{"x0":"0,2,4"}"#, r#"{"K-near":3}"#] {
            let raw: RawConfig = serde_json::from_str(bad).unwrap();
            let res = RunConfig::resolve(&raw).and_then(|c| crate::planner::validate_params(&c.plan_params()));
            assert!(res.is_err(), "{bad}");
        }
    }

    #[test]
    fn hash_ignores_paths() {
        let a = RunConfig::default();
        let b = RunConfig { out: PathBuf::from("/elsewhere"), threads: Some(3), ..RunConfig::default() };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig { seed: 2, ..RunConfig::default() };
        assert_ne!(a.hash(), c.hash());
    }
}

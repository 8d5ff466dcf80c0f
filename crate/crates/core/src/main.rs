use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdcert::cert::{read_json, run_build, run_plan, run_verify, write_json, Mode, PlanFile, RunCertificate};
use sdcert::config::{RawConfig, RunConfig};
use sdcert::exact::real::Verdict;
use sdcert::report::{cert_markdown, series_csv, verify_markdown};
use sdcert::Error;

#[derive(Parser)]
#[command(name = "sdcert", version, about = "Certified sign-constrained approximation constructions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Choose parameters and write plan.json.
    Plan(Flags),
    /// Run the construction from a plan and write cert.json.
    Build {
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run verification suites against a certificate.
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value = "all")]
        mode: Mode,
        #[command(flatten)]
        flags: Flags,
    },
    /// Render a certificate as markdown plus CSV series.
    Report {
        #[arg(long)]
        cert: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args, Default)]
struct Flags {
    /// JSON config file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    c1: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long = "psi-c")]
    psi_c: Option<String>,
    #[arg(long = "psi-e")]
    psi_e: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long = "B")]
    b: Option<u64>,
    #[arg(long = "K")]
    k: Option<i64>,
    #[arg(long = "K-near")]
    k_near: Option<u32>,
    #[arg(long = "max-prec")]
    max_prec: Option<u32>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Small parameters; parameter-audit failures are reported, not fatal.
    #[arg(long)]
    toy: bool,
    /// Require the full parameter audit to pass when choosing the multiplier.
    #[arg(long = "audit-clean")]
    audit_clean: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn raw(&self) -> sdcert::Result<RawConfig> {
        let file = match &self.config {
            Some(p) => RawConfig::from_file(p)?,
            None => RawConfig::default(),
        };
        let flags = RawConfig {
            alpha: self.alpha.clone(),
            c1: self.c1.clone(),
            delta: self.delta.clone(),
            x0: self.x0.clone(),
            psi_c: self.psi_c.clone(),
            psi_e: self.psi_e.clone(),
            steps: self.steps,
            theta: self.theta.clone(),
            b: self.b,
            k: self.k,
            k_near: self.k_near,
            max_prec: self.max_prec,
            threads: self.threads,
            seed: self.seed,
            samples: self.samples,
            toy: self.toy.then_some(true),
            audit_clean: self.audit_clean.then_some(true),
            out: self.out.as_ref().map(|p| p.display().to_string()),
        };
        Ok(file.overlay(flags))
    }

    /// Settings that may change after planning.
    fn apply_run_settings(&self, cfg: &mut RunConfig) -> sdcert::Result<()> {
        let raw = self.raw()?;
        if raw.alpha.is_some() || raw.c1.is_some() || raw.delta.is_some() || raw.x0.is_some() || raw.steps.is_some() {
            log::warn!("plan parameters are fixed by the plan; ignoring them here");
        }
        cfg.b = raw.b.or(cfg.b);
        cfg.k = raw.k.unwrap_or(cfg.k);
        cfg.k_near = raw.k_near.unwrap_or(cfg.k_near);
        cfg.seed = raw.seed.unwrap_or(cfg.seed);
        cfg.samples = raw.samples.unwrap_or(cfg.samples);
        cfg.max_prec = raw.max_prec.unwrap_or(cfg.max_prec);
        cfg.threads = raw.threads;
        cfg.out = raw.out.map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
        cfg.validate()
    }
}

fn threads(n: Option<usize>) {
    if let Some(n) = n {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
}

fn out_file(dir: &Path, name: &str) -> sdcert::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

fn exit_for(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Undecided => 2,
    }
}

fn run(cli: Cli) -> sdcert::Result<u8> {
    match cli.cmd {
        Cmd::Plan(flags) => {
            let cfg = RunConfig::resolve(&flags.raw()?)?;
            threads(cfg.threads);
            let pf = run_plan(&cfg)?;
            let path = out_file(&cfg.out, "plan.json")?;
            write_json(&path, &pf)?;
            println!("plan: n = {}, x1 = {}, delta0^2 = {} -> {}", pf.plan.multiplier, pf.plan.x1, pf.plan.delta0_sq, path.display());
            Ok(0)
        }
        Cmd::Build { plan, flags } => {
            let pf: PlanFile = read_json(&plan)?;
            let mut cfg = pf.config.clone();
            flags.apply_run_settings(&mut cfg)?;
            threads(cfg.threads);
            let cert = run_build(&pf)?;
            let path = out_file(&cfg.out, "cert.json")?;
            write_json(&path, &cert)?;
            let v = cert.state.verdict();
            println!("build: {} steps, {:?} -> {}", cert.state.steps.len(), v, path.display());
            Ok(exit_for(v))
        }
        Cmd::Verify { cert, mode, flags } => {
            let c: RunCertificate = read_json(&cert)?;
            let mut cfg = c.config.clone();
            flags.apply_run_settings(&mut cfg)?;
            threads(cfg.threads);
            let rep = run_verify(&c, &cfg, mode)?;
            write_json(&out_file(&cfg.out, "report.json")?, &rep)?;
            std::fs::write(out_file(&cfg.out, "report.md")?, verify_markdown(&rep))?;
            if let Some(s) = &rep.slab {
                if s.below_threshold {
                    println!("slab: below threshold (B < C' = {})", s.c_prime);
                }
            }
            if let Some(a) = &rep.audit {
                for c in a.report.failing() {
                    println!("audit {:?}: {}", c.verdict, c.id);
                }
            }
            println!("verify {:?}: {:?}", mode, rep.verdict);
            Ok(exit_for(rep.verdict))
        }
        Cmd::Report { cert, flags } => {
            let c: RunCertificate = read_json(&cert)?;
            let mut cfg = c.config.clone();
            flags.apply_run_settings(&mut cfg)?;
            std::fs::write(out_file(&cfg.out, "certificate.md")?, cert_markdown(&c))?;
            std::fs::write(out_file(&cfg.out, "series.csv")?, series_csv(&c))?;
            println!("report written to {}", cfg.out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::CertFailed { .. } | Error::Internal(_) => 1,
                Error::Undecided(_) => 2,
                _ => 3,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_exit_codes() {
        assert_eq!([Verdict::Pass, Verdict::Fail, Verdict::Undecided].map(exit_for), [0, 1, 2]);
    }
}

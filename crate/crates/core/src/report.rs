//! Markdown and CSV renderings. Everything here reads certificate or report
//! fields; nothing is recomputed.

use std::fmt::Write;

use crate::cert::{RunCertificate, VerifyReport};
use crate::check::Check;

fn checks_table(out: &mut String, checks: &[Check]) {
    out.push_str("| clause | lhs | rhs | verdict | bits |\n|---|---|---|---|---|\n");
    for c in checks {
        let _ = writeln!(out, "| `{}` | {} | {} | {:?} | {} |", c.id, c.lhs, c.rhs, c.verdict, c.prec);
    }
}

pub fn series_csv(cert: &RunCertificate) -> String {
    let mut s = String::from("i,norm_log2,dist_v_upper,dist_w_upper,dot_u_upper,delta_upper\n");
    for r in &cert.series {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.i, r.norm_log2, r.dist_v_upper, r.dist_w_upper, r.dot_u_upper, r.delta_upper);
    }
    s
}

pub fn cert_markdown(cert: &RunCertificate) -> String {
    let p = &cert.plan;
    let st = &cert.state;
    let mut s = String::new();
    let _ = writeln!(s, "# Construction certificate\n");
    let _ = writeln!(s, "- tool version: {}", cert.tool_version);
    let _ = writeln!(s, "- config hash: `{}`", cert.config_hash);
    let _ = writeln!(s, "- plan hash: `{}`", cert.plan_hash);
    let _ = writeln!(s, "- alpha: {}, C1 = {}, delta = {}", p.alpha, p.c1, p.delta);
    let _ = writeln!(s, "- x0 = {}, x0' = {} (shift {}), multiplier n = {}", p.x0, p.x0_companion, p.companion_shift, p.multiplier);
    let _ = writeln!(s, "- x1 = {}, delta0^2 = {}", p.x1, p.delta0_sq);
    let _ = writeln!(s, "- psi(t) = {} t^{}, steps N = {}, toy = {}", p.psi.c, p.psi.e, p.n_steps, p.toy);
    let _ = writeln!(s, "- construction verdict: {:?}\n", st.verdict());

    s.push_str("## Schedule\n\n| i | X_i |\n|---|---|\n");
    for (i, x) in cert.schedule.xs.iter().enumerate() {
        let _ = writeln!(s, "| {i} | {} |", serde_json::to_string(x).unwrap_or_default());
    }
    s.push_str("\n## Steps\n\n| i | convergent | det(x*,x,y) | det(x*,x,x') | det(y,x,x') | verdict |\n|---|---|---|---|---|---|\n");
    for r in &st.steps {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {:?} |",
            r.index,
            r.conv_index,
            r.cert.det_xs_x_y,
            r.cert.det_xs_x_xp,
            r.cert.det_y_x_xp,
            r.cert.verdict()
        );
    }
    s.push_str("\n## Series\n\n| i | log2 |x_i| | dist(x_i, v) <= | dist(x_i, w) <= | |x_i . u| <= | delta_i <= |\n|---|---|---|---|---|---|\n");
    for r in &cert.series {
        let _ = writeln!(s, "| {} | {} | {} | {} | {} | {} |", r.i, r.norm_log2, r.dist_v_upper, r.dist_w_upper, r.dot_u_upper, r.delta_upper);
    }
    s.push_str("\n## Construction checks\n\n");
    checks_table(&mut s, &st.checks);
    s.push_str("\n## Parameter audit\n\n");
    let _ = writeln!(s, "C2 = {}, C3 = {}, C4 = {}\n", cert.audit.constants.c2, cert.audit.constants.c3, cert.audit.constants.c4);
    checks_table(&mut s, &cert.audit.checks);
    s
}

pub fn verify_markdown(r: &VerifyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Verification report ({:?})\n", r.mode);
    let _ = writeln!(s, "- plan hash: `{}`", r.plan_hash);
    let _ = writeln!(s, "- toy run: {}", r.toy);
    let _ = writeln!(s, "- construction: {:?}", r.construction);
    let _ = writeln!(s, "- condition (i): {}", r.condition_i);
    let _ = writeln!(s, "- overall: **{:?}**\n", r.verdict);
    if let Some(a) = &r.audit {
        let _ = writeln!(s, "## Audit: {:?}\n", a.verdict);
        if !a.skipped.is_empty() {
            let _ = writeln!(s, "Skipped in toy mode: {}\n", a.skipped.iter().map(|c| format!("`{c}`")).collect::<Vec<_>>().join(", "));
        }
        let failing: Vec<Check> = a.report.checks.iter().filter(|c| !c.verdict.is_pass()).cloned().collect();
        if !failing.is_empty() {
            checks_table(&mut s, &failing);
            s.push('\n');
        }
    }
    if let Some(w) = &r.witness {
        let _ = writeln!(s, "## Witnesses: {:?}\n\nC = {}\n\n| X | i | checks |\n|---|---|---|", w.verdict(), w.c);
        for smp in &w.samples {
            let ok = smp.checks.iter().filter(|c| c.verdict.is_pass()).count();
            let _ = writeln!(s, "| {} | {} | {}/{} |", smp.x, smp.index, ok, smp.checks.len());
        }
        s.push('\n');
    }
    for b in &r.boxes {
        let _ = writeln!(
            s,
            "## Box i = {} (K = {}): {:?}\n\n{} points, {} in range, branches {:?}, {} violations, {} undecided, {} bookkeeping failures\n",
            b.i,
            b.k,
            b.verdict(),
            b.points,
            b.in_range,
            b.branches,
            b.violations.len(),
            b.undecided.len(),
            b.bookkeeping_failures.len()
        );
    }
    if let Some(sl) = &r.slab {
        let _ = writeln!(s, "## Slab scan: {:?}\n", sl.verdict());
        if sl.below_threshold {
            let _ = writeln!(s, "Below threshold: B < C' = {}; nothing scanned.\n", sl.c_prime);
        } else {
            let _ = writeln!(
                s,
                "C' = {}, |x|^2 in [{}, {}], anchor {}, axis {}, K_near {}\n\n{} lines, {} candidates ({} screened, {} exact), {} violations, {} undecided, {} nonpositive\n",
                sl.c_prime,
                sl.norm_sq_lo,
                sl.norm_sq_hi,
                sl.anchor,
                sl.axis,
                sl.k_near,
                sl.lines,
                sl.candidates,
                sl.screened,
                sl.exact_path,
                sl.violations.len(),
                sl.undecided.len(),
                sl.nonpositive
            );
            if let Some(g) = &sl.guard {
                checks_table(&mut s, std::slice::from_ref(g));
                s.push('\n');
            }
            for it in sl.violations.iter().chain(sl.undecided.iter()) {
                let _ = writeln!(s, "- x = {}: {} vs {} (anchor {}, {} bits)", it.x, it.lhs, it.rhs, it.anchor, it.prec);
            }
            if !sl.skipped_clauses.is_empty() {
                let _ = writeln!(s, "Skipped clauses (toy): {}\n", sl.skipped_clauses.join(", "));
            }
        }
    }
    if let Some(p) = &r.properties {
        let _ = writeln!(s, "## Properties (seed {})\n\n| suite | cases | failures |\n|---|---|---|", p.seed);
        for su in &p.suites {
            let _ = writeln!(s, "| {} | {} | {} |", su.name, su.cases, su.failures);
        }
        s.push('\n');
    }
    if let Some(ab) = &r.alpha_beta {
        let _ = writeln!(s, "## Frame\n\nalpha ~ {:.17}, beta ~ {:.17}", ab.alpha.approx_f64(), ab.beta.approx_f64());
    }
    s
}

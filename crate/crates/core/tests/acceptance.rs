//! Acceptance run: one line per criterion, nonzero exit if any fails.
//! Built on a five-step toy plan so the whole suite stays desk-scale.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use sdcert::audit::Constants;
use sdcert::builder::ConstructionState;
use sdcert::cert::{run_build, run_plan, RunCertificate};
use sdcert::cf::{certify_bad_approx, check_gap_lemma, convergents, verify_table, AlphaChoice};
use sdcert::check::Check;
use sdcert::config::RunConfig;
use sdcert::exact::ivec::{det3, IVec3};
use sdcert::exact::rat::{rat, rat_int, Rat};
use sdcert::exact::real::{Real, Verdict};
use sdcert::stepper::{recursive_step, StepInput};
use sdcert::verifier::boxcheck::box_indices;
use sdcert::verifier::slab::c_prime_sq;
use sdcert::verifier::{check_condition_iii, coeff_box, log_grid, property_suites, slab_scan, ScanParams, ScanReport};
use sdcert::xval::XVal;

const MAX_PREC: u32 = 1 << 16;

fn toy_cert() -> RunCertificate {
    let cfg = RunConfig { toy: true, steps: 5, ..RunConfig::default() };
    let pf = run_plan(&cfg).expect("plan");
    run_build(&pf).expect("build")
}

fn all_checks(st: &ConstructionState) -> Vec<&Check> {
    st.checks.iter().chain(st.steps.iter().flat_map(|s| s.cert.checks.iter())).collect()
}

fn within(t: Instant, limit: Duration, what: &str) {
    assert!(t.elapsed() <= limit, "{what} took {:?}, limit {:?}", t.elapsed(), limit);
}

/// Determinant identities per step, recomputed from the stored vectors.
fn criterion_1(st: &ConstructionState) -> String {
    let t = Instant::now();
    assert_eq!(st.n(), 5);
    let top = st.steps.iter().map(|s| s.conv_index).max().unwrap();
    let table = convergents(AlphaChoice::Sqrt2Minus1, &rat_int(4), top + 1).unwrap();
    for s in &st.steps {
        let i = s.index;
        let (xm, x, xn, y) = (&st.xs[i - 1], &st.xs[i], &st.xs[i + 1], &st.ys[i]);
        let (qn, pn) = (table.q_n(s.conv_index), table.p_n(s.conv_index));
        assert_eq!(det3(xm, x, y), BigInt::one(), "det(x_i-1,x_i,y_i) at {i}");
        assert_eq!(&det3(xm, x, xn), qn, "det(x_i-1,x_i,x_i+1) at {i}");
        assert_eq!(det3(y, x, xn), -pn, "det(y_i,x_i,x_i+1) at {i}");
        assert_eq!(xm.cross(x).cross(&x.cross(xn)), x.scale(qn), "cross identity at {i}");
        assert_eq!(
            (&s.cert.det_xs_x_y, &s.cert.det_xs_x_xp, &s.cert.det_y_x_xp),
            (&BigInt::one(), qn, &-pn),
            "stored certificate at {i}"
        );
    }
    for c in all_checks(st).into_iter().filter(|c| c.id.starts_with("det(") || c.id.starts_with("cross identity")) {
        assert_eq!(c.verdict, Verdict::Pass, "{}", c.id);
    }
    within(t, Duration::from_secs(60), "criterion 1");
    format!("N = {}, {} steps, integer identities exact", st.n(), st.steps.len())
}

/// Norm sandwiches, separation, halving: every stored check passes, and the
/// `x` sandwich is re-derived on squares.
fn criterion_2(st: &ConstructionState) -> String {
    let checks = all_checks(st);
    let undecided: Vec<_> = checks.iter().filter(|c| c.verdict == Verdict::Undecided).map(|c| c.id.clone()).collect();
    let failed: Vec<_> = checks.iter().filter(|c| c.verdict == Verdict::Fail).map(|c| c.id.clone()).collect();
    assert!(undecided.is_empty() && failed.is_empty(), "undecided {undecided:?}, failed {failed:?}");
    assert!(checks.iter().all(|c| c.prec <= MAX_PREC));
    for s in &st.steps {
        let i = s.index;
        let nx = Rat::from_integer(st.xs[i + 1].norm_sq());
        let xs = st.scales[i + 1].sq();
        assert!(xs <= nx && nx <= rat_int(25) * rat_int(16) * xs, "x sandwich at {}", i + 1);
        // |y_i| against X_i^gamma through logs, with slack far above f64 error.
        let ly = sdcert_log2(&st.ys[i].norm_sq()) / 2.0;
        let lx = 1.618_033_988_749_895 * st.scales[i].log2_approx();
        assert!(ly >= lx - 1e-6 && ly <= lx + 1.0 + 1e-6, "y sandwich at {i}: {ly} vs {lx}");
        for id in [format!("halving[{i}]"), format!("min dist[{i}]")] {
            assert!(checks.iter().any(|c| c.id.starts_with(&id)), "missing {id}");
        }
    }
    format!("{} checks, 0 undecided, max {} bits", checks.len(), checks.iter().map(|c| c.prec).max().unwrap_or(0))
}

fn sdcert_log2(n: &BigInt) -> f64 {
    let shift = n.bits().saturating_sub(64);
    let top: BigInt = n >> shift;
    num_traits::ToPrimitive::to_f64(&top).unwrap().log2() + shift as f64
}

/// Convergent identities, bad approximability up to `q_60`, gap lemma.
fn criterion_3() -> String {
    let t = Instant::now();
    let c1 = rat_int(4);
    let table = convergents(AlphaChoice::Sqrt2Minus1, &c1, 60).unwrap();
    verify_table(&table).unwrap();
    // Oracle: sqrt 2 - 1 = [0; 2, 2, ...], so p_n/q_n runs 0/1, 1/2, 2/5, ...
    // with both sequences following a_n = 2 a_n-1 + a_n-2.
    let (mut pa, mut qa) = (BigInt::one(), BigInt::zero());
    let (mut pb, mut qb) = (BigInt::zero(), BigInt::one());
    for n in 1..=60 {
        assert_eq!((table.p_n(n), table.q_n(n)), (&pb, &qb), "convergent {n}");
        assert_eq!((&pb * &qa - &pa * &qb).abs(), BigInt::one());
        let (pc, qc) = (&pb * 2 + &pa, &qb * 2 + &qa);
        (pa, qa, pb, qb) = (pb, qb, pc, qc);
    }
    let bad = certify_bad_approx(&table, table.q_n(60)).unwrap();
    assert!(bad.covers_requested && bad.min_lo >= rat(1, 4), "{bad:?}");
    let mut pairs = 0;
    for n in 2..=12 {
        let g = check_gap_lemma(&table, n).unwrap();
        assert_eq!(g.violations, 0, "gap lemma n = {n}");
        pairs += g.pairs;
    }
    within(t, Duration::from_secs(60), "criterion 3");
    format!("cf identities n <= 60, q|q alpha - p| >= {} up to q_60, gap lemma {pairs} pairs", sdcert::check::sci(&Real::rat(bad.min_lo.clone())))
}

fn criterion_4() -> String {
    let table = convergents(AlphaChoice::Sqrt2Minus1, &rat_int(4), 40).unwrap();
    let inp = StepInput {
        x_star: IVec3::e(0),
        x: IVec3::e(1),
        y_scale: Real::int(4),
        x_prime: XVal::sqrt(100),
        table: &table,
        max_prec: MAX_PREC,
    };
    let (out, cert) = recursive_step(&inp).unwrap();
    assert_eq!(out.y, IVec3::new(6, 0, 1));
    assert_eq!(out.x_prime, IVec3::new(77, 0, 12));
    assert_eq!(out.conv_index, 4);
    let dets = (cert.det_xs_x_y.clone(), cert.det_xs_x_xp.clone(), cert.det_y_x_xp.clone());
    assert_eq!(dets, (1.into(), 12.into(), (-5).into()));
    assert_eq!(cert.verdict(), Verdict::Pass);
    "y = (6,0,1), x' = (77,0,12), n = 4, dets (1, 12, -5)".into()
}

fn criterion_5(cert: &RunCertificate) -> String {
    let (st, plan) = (&cert.state, &cert.plan);
    let k = Constants::new(&plan.c1, &plan.delta0_sq);
    // Oracle: C4 = (6 C1)^5 / delta0^2.
    let six_c1 = rat_int(6) * &plan.c1;
    let c4 = (0..5).fold(rat_int(1), |a, _| a * &six_c1) / &plan.delta0_sq;
    assert_eq!(k.c4, c4);
    let grid = log_grid(&plan.c1, &st.scales, st.n(), 32).unwrap();
    assert_eq!(grid.len(), 32);
    let w = check_condition_iii(st, &plan.c1, &grid, &k.c4, MAX_PREC).unwrap();
    let bad: Vec<_> = w.samples.iter().flat_map(|s| s.checks.iter()).filter(|c| !c.verdict.is_pass()).collect();
    assert!(bad.is_empty(), "{bad:?}");
    assert_eq!(w.verdict(), Verdict::Pass);
    format!("32 samples, C = C4 = {}", sdcert::check::sci(&Real::rat(k.c4)))
}

fn criterion_6(st: &ConstructionState) -> String {
    let t = Instant::now();
    let mut parts = Vec::new();
    for i in box_indices(st) {
        let b = coeff_box(st, i, 8, MAX_PREC).unwrap();
        assert_eq!(b.points, 17 * 17 * 17 - 1);
        assert!(b.bookkeeping_failures.is_empty(), "bookkeeping at {i}: {:?}", b.bookkeeping_failures);
        assert!(b.violations.is_empty(), "violations at {i}: {:?}", b.violations);
        assert!(b.undecided.is_empty(), "undecided at {i}: {:?}", b.undecided);
        parts.push(format!("i = {i}: {} in range {:?}", b.in_range, b.branches));
    }
    assert!(!parts.is_empty());
    within(t, Duration::from_secs(600), "criterion 6");
    format!("K = 8, {}", parts.join("; "))
}

fn criterion_7(cert: &RunCertificate) -> (String, ScanReport) {
    let st = &cert.state;
    // Oracle: C' = X_2 / X_1 with X_1 = sqrt(417), X_2 = 2^16 for this plan.
    let cps = c_prime_sq(st);
    assert_eq!(cps, st.scales[2].sq() / st.scales[1].sq());
    assert_eq!(cps, Rat::new(BigInt::from(1u64 << 32), BigInt::from(417)));
    let cap = (rat_int(4) * &cps).ceil().to_integer().sqrt() + 1;
    let skipped: Vec<String> = cert.audit.failing().iter().map(|c| c.id.clone()).collect();
    let s = slab_scan(st, &cert.plan.psi, &ScanParams { b: cap, k_near: 2, max_prec: MAX_PREC }, &skipped).unwrap();
    assert!(!s.below_threshold);
    assert_eq!(s.guard.as_ref().map(|g| g.verdict), Some(Verdict::Pass), "guard");
    assert!(s.violations.is_empty(), "{:?}", s.violations);
    assert!(s.undecided.len() as u64 * 10_000 <= s.candidates, "{:?}", s.undecided);
    assert!(cert.plan.toy && !s.skipped_clauses.is_empty(), "guarded-toy run must name skipped clauses");
    let line = format!(
        "guarded-toy, |x| in [C', 2C'] with C' = {}, {} candidates, 0 violations, {} undecided; skipped clauses: {}",
        s.c_prime,
        s.candidates,
        s.undecided.len(),
        s.skipped_clauses.join(", ")
    );
    (line, s)
}

fn criterion_8(st: &ConstructionState, scan: Option<&ScanReport>) -> String {
    let s = scan.expect("slab scan did not complete");
    assert!(s.candidates > 0);
    assert_eq!(s.nonpositive, 0);
    for i in 1..st.n() {
        let id = format!("intersection[{i}]");
        let c = st.checks.iter().find(|c| c.id.starts_with(&id)).unwrap_or_else(|| panic!("missing {id}"));
        assert_eq!(c.verdict, Verdict::Pass, "{id}");
        // Oracle: two distinct planes through a primitive x_i meet in Z x_i.
        let (a, b, c) = (&st.xs[i - 1], &st.xs[i], &st.xs[i + 1]);
        assert!(b.is_primitive_point() && !det3(a, b, c).is_zero(), "{id}");
    }
    format!("{} candidates with |x.u| > 0, intersection exact for i = 1..{}", s.candidates, st.n() - 1)
}

fn criterion_9() -> String {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let r = pool.install(|| property_suites(7, 1000));
        (serde_json::to_vec(&r).unwrap(), r)
    };
    let (one, r) = run(1);
    let (four, _) = run(4);
    assert!(r.passed(), "{:?}", r.suites.iter().filter(|s| s.failures > 0).collect::<Vec<_>>());
    assert_eq!(one, four, "report bytes differ across thread counts");
    for name in ["triangle", "lagrange", "primitive", "vperp"] {
        let s = r.suites.iter().find(|s| s.name.contains(name)).unwrap_or_else(|| panic!("no {name} suite"));
        assert!(s.cases >= 1000, "{} ran {} cases", s.name, s.cases);
    }
    format!("{} suites, 1000 cases each, identical bytes on 1 and 4 threads", r.suites.len())
}

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    let cert = toy_cert();
    let st = &cert.state;
    let mut scan = None;
    let mut failed = 0;
    let mut run = |n: u32, f: &mut dyn FnMut() -> String| {
        let t = Instant::now();
        match catch_unwind(AssertUnwindSafe(f)) {
            Ok(msg) => println!("criterion {n}: PASS ({msg}) [{:.1}s]", t.elapsed().as_secs_f64()),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {n}: FAIL ({msg})");
            }
        }
    };
    run(1, &mut || criterion_1(st));
    run(2, &mut || criterion_2(st));
    run(3, &mut criterion_3);
    run(4, &mut criterion_4);
    run(5, &mut || criterion_5(&cert));
    run(6, &mut || criterion_6(st));
    run(7, &mut || {
        let (line, s) = criterion_7(&cert);
        scan = Some(s);
        line
    });
    run(8, &mut || criterion_8(st, scan.as_ref()));
    run(9, &mut criterion_9);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs with `harness = false`. Set `STRENGTHLAB_LONG=1` to also exhaust the
//! three-block diagonal cubic (hours, not minutes).

use std::process::Command;
use std::time::{Duration, Instant};

use strengthlab::field::Gf;
use strengthlab::forms::CubicForm;
use strengthlab::linalg::Subspace;
use strengthlab::qrank::{
    decompose_via_subspace, mainthm3_check, mainthm3_threshold, exp_floor, qrank, qrank_linear_solve_oracle,
    surjection_lhs, surjection_min_qrank, xi, xi_combinatorial, LinearSolveResult, SearchOptions,
};
use strengthlab::suites::{run_suite, SuiteReport};
use strengthlab::witness::diagonal_cubic;

const SEED: u64 = 42;

type Outcome = Result<String, String>;

fn gf5() -> Gf {
    Gf::prime(5).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn timed(limit: Duration, what: &str, f: impl FnOnce() -> Result<(), String>) -> Result<Duration, String> {
    let t = Instant::now();
    f()?;
    let e = t.elapsed();
    ensure(e <= limit, format!("{what} took {e:.2?} > {limit:?}"))?;
    Ok(e)
}

fn suite(name: &str, samples: usize) -> Result<SuiteReport, String> {
    let rep = run_suite(&gf5(), name, SEED, samples, SearchOptions::default()).map_err(|e| e.to_string())?;
    ensure(rep.violations == 0, format!("{name}: {} violations: {:?}", rep.violations, rep.details))?;
    Ok(rep)
}

fn diagonal() -> Outcome {
    let gf = gf5();
    let opts = SearchOptions::default();
    let t1 = timed(Duration::from_secs(1), "n=1", || {
        let r = qrank(&gf, &diagonal_cubic(&gf, 1), opts).map_err(|e| e.to_string())?.r;
        ensure(r == 1, format!("n=1: r = {r}"))
    })?;
    let t2 = timed(Duration::from_secs(60), "n=2", || {
        let r = qrank(&gf, &diagonal_cubic(&gf, 2), opts).map_err(|e| e.to_string())?.r;
        ensure(r == 2, format!("n=2: r = {r}"))
    })?;
    // upper bound: vanishes on x1 = x2 = x3 = 0
    let f3 = diagonal_cubic(&gf, 3);
    let rows: Vec<Vec<_>> = (0..9).filter(|i| i % 3 != 0).map(|i| (0..9).map(|j| gf.from_i64((i == j) as i64)).collect()).collect();
    let w = Subspace::span(&gf, 9, rows);
    ensure(w.codim() == 3 && f3.restrict(&gf, &w).map_err(|e| e.to_string())?.is_zero(), "n=3 upper bound")?;
    let t3 = timed(Duration::from_secs(60), "n=3 certificates", || suite("witness", 200).map(|_| ()))?;
    let mut msg = format!("n=1 {t1:.2?}, n=2 {t2:.2?}, n=3 200 certified subspaces {t3:.2?}");
    if std::env::var_os("STRENGTHLAB_LONG").is_some() {
        let r = qrank(&gf, &f3, SearchOptions { budget: u128::MAX, parallel: true }).map_err(|e| e.to_string())?.r;
        ensure(r == 3, format!("n=3 exhaustive: r = {r}"))?;
        msg.push_str(", n=3 exhaustive");
    }
    Ok(msg)
}

fn worked_example() -> Outcome {
    let gf = gf5();
    let f = CubicForm::from_terms(&gf, 2, [([0, 0, 0], gf.from_i64(1)), ([1, 1, 1], gf.from_i64(1))]);
    let a = qrank(&gf, &f, SearchOptions::default()).map_err(|e| e.to_string())?;
    ensure(a.r == 1, format!("subspace oracle r = {}", a.r))?;
    match qrank_linear_solve_oracle(&gf, &f, u128::MAX, None).map_err(|e| e.to_string())? {
        LinearSolveResult::Exact { r, decomposition, .. } => {
            ensure(r == 1, format!("decomposition oracle r = {r}"))?;
            ensure(decomposition.assemble(&gf) == f, "decomposition oracle output does not assemble")?;
        }
        LinearSolveResult::AtLeast { .. } => return Err("decomposition oracle gave up".into()),
    }
    let d = decompose_via_subspace(&gf, &f, &a.witness).map_err(|e| e.to_string())?;
    ensure(d.len() == 1 && d.assemble(&gf) == f, "extracted decomposition does not assemble")?;
    Ok("x^3+y^3 has q-rank 1; both oracles agree; decomposition reassembles".into())
}

fn xi_agreement() -> Outcome {
    let e = timed(Duration::from_secs(10), "xi sweep", || {
        match (0..=1_000_000u64).find(|&d| xi(d) != xi_combinatorial(d)) {
            Some(d) => Err(format!("xi({d}) = {} vs {}", xi(d), xi_combinatorial(d))),
            None => Ok(()),
        }
    })?;
    Ok(format!("closed form = combinatorial for 0..=10^6 in {e:.2?}"))
}

fn property_suites() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    for (name, n) in [
        ("subadd", 500),
        ("qsubsp", 500),
        ("gl-invariance", 200),
        ("geom-equiv", 200),
        ("maxrank", 300),
        ("minrank-lemma", 100),
        ("minrank-extract", 100),
    ] {
        let rep = suite(name, n)?;
        parts.push(format!("{name} {}", rep.samples));
    }
    let e = t.elapsed();
    ensure(e <= Duration::from_secs(15 * 60), format!("took {e:.2?}"))?;
    Ok(format!("0 violations ({}) in {e:.2?}", parts.join(", ")))
}

fn separable() -> Outcome {
    suite("srk", 100)?;
    Ok("100 cubics: separable, certificates replay, qrank(g) >= bound".into())
}

fn extension_bound() -> Outcome {
    suite("qbd-ext", 100)?;
    Ok(format!(
        "50 binary cubics reach q-rank <= {} over GF(5^6); 50 ternary reach <= {} over GF(5^k), k <= 6",
        2 - xi(2),
        3 - xi(3)
    ))
}

fn bound_arithmetic() -> Outcome {
    let lhs = surjection_lhs(1);
    ensure(lhs.to_string() == "6", format!("lhs(1) = {lhs}"))?;
    let m = surjection_min_qrank(1);
    ensure(m.to_string() == "89", format!("surjection_min_qrank(1) = {m}"))?;
    // 89 is the least r with xi(r) >= 2 * lhs
    ensure(xi(89) >= 12 && xi(88) < 12, "89 is not minimal")?;
    let t = mainthm3_threshold();
    ensure(mainthm3_check(&t, 80) && !mainthm3_check(&t, 81), "crossover at e^240 is not d = 80")?;
    ensure(!mainthm3_check(&(&t - 1u32), 1), "accepted r = floor(e^240)")?;
    let t243 = exp_floor(243) + 1u32;
    ensure(mainthm3_check(&t243, 81) && !mainthm3_check(&(&t243 - 1u32), 81), "crossover at e^243 is not d = 81")?;
    Ok(format!("min qrank(1) = 89; e^240 threshold has {} digits; crossovers exact", t.to_string().len()))
}

fn determinism() -> Outcome {
    let run = |threads: &str| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_strengthlab"))
            .args(["--threads", threads, "--seed", "42", "paper-check", "--suite", "all"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), format!("threads={threads}: exit {:?}", out.status.code()))?;
        Ok(out.stdout)
    };
    let (one, four) = (run("1")?, run("4")?);
    ensure(!one.is_empty() && one == four, "reports differ between 1 and 4 threads")?;
    Ok(format!("{} identical bytes for 1 and 4 threads", one.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("diagonal cubic q-rank", diagonal),
        ("worked example x^3+y^3", worked_example),
        ("xi closed form vs combinatorial", xi_agreement),
        ("property suites", property_suites),
        ("separable degeneration", separable),
        ("extension-field bound", extension_bound),
        ("bound arithmetic", bound_arithmetic),
        ("determinism across threads", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(msg) => println!("criterion {}: PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

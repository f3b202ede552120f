use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use strengthlab::degeneration::{
    separable_degenerate, surjection_pipeline, verify_certificate, CertificateJson, DegenerationError,
    ReductionReportJson,
};
use strengthlab::field::{FieldSpec, Gf};
use strengthlab::forms::{LQDecomposition, LinearForm, QuadraticForm};
use strengthlab::io::{parse_cubic, CubicJson, DecompositionJson, PolyFile, QuadricJson};
use strengthlab::linalg::{SubspaceJson, DEFAULT_BUDGET};
use strengthlab::qrank::{decompose_via_subspace, qrank, qrank_oracle, Qrank, QrankError, SearchOptions};
use strengthlab::quadspace::{extract_high_minrank, minmax_rank, QuadError, QuadricSubspace};
use strengthlab::suites::{run_paper_check, SuiteError, SUITES};
use strengthlab::witness::{
    certify_diagonal_qrank, default_subspace, verify_diagonal_certificate, PhaseCertificateJson, TripleMatrix,
};

const EXIT_USAGE: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "strengthlab", version, about = "q-rank (strength) of cubic forms over finite fields")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Working field, `p=<p>` or `p=<p>,e=<e>`.
    #[arg(long, global = true, default_value = "p=5")]
    field: FieldSpec,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Cap on enumerated candidates.
    #[arg(long, global = true, env = "STRENGTHLAB_BUDGET", default_value_t = DEFAULT_BUDGET, value_parser = parse_budget)]
    budget: u128,
    /// Worker threads; 0 = all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn parse_budget(s: &str) -> Result<u128, String> {
    let b: u128 = s.parse().map_err(|e| format!("{e}"))?;
    if b == 0 {
        return Err("budget must be at least 1".into());
    }
    Ok(b)
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact q-rank of a cubic in the text format.
    Qrank {
        #[arg(long)]
        input: PathBuf,
        /// Stop after this codimension and report a lower bound.
        #[arg(long)]
        max_r: Option<usize>,
        /// Include wall-clock time in the report (makes it non-reproducible).
        #[arg(long)]
        elapsed: bool,
    },
    /// Seeded property suites.
    PaperCheck {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Override every suite's sample count.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Separable degeneration certificate; with `--d`, the full reduction report.
    Degenerate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        d: Option<usize>,
    },
    /// High-minrank subspace of the quadrics of a decomposition.
    MinrankExtract {
        /// Cubic to decompose; default is the diagonal cubic with `--n` blocks.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        s: usize,
        /// Defaults to the number of decomposition terms.
        #[arg(long)]
        r: Option<usize>,
    },
    /// Phase certificate that the diagonal cubic survives on a codim n-1 subspace.
    Witness {
        #[arg(long)]
        n: usize,
        /// JSON `{ambient_dim, basis}`; default is the kernel of x_i - x_{i+1}.
        #[arg(long)]
        subspace: Option<PathBuf>,
    },
    /// Re-verify a degeneration certificate.
    Verify {
        #[arg(long)]
        input: PathBuf,
    },
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let err = e.into();
        let code = if is_budget(&err) { EXIT_BUDGET } else { EXIT_USAGE };
        Failure { code, err }
    }
}

fn is_budget(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(c.downcast_ref::<QrankError>(), Some(QrankError::BudgetExceeded { .. }))
            || matches!(c.downcast_ref::<QuadError>(), Some(QuadError::BudgetExceeded { .. }))
            || c.downcast_ref::<SuiteError>().is_some_and(SuiteError::is_budget)
            || c.downcast_ref::<DegenerationError>().is_some_and(|d| d.message.contains("budget"))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.run.threads).build().expect("thread pool");
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    let run = &cli.run;
    let gf = Gf::new(run.field.clone()).context("field")?;
    let opts = SearchOptions { budget: run.budget, parallel: run.threads != 1 };
    match &cli.cmd {
        Command::Qrank { input, max_r, elapsed } => cmd_qrank(run, input, *max_r, *elapsed, opts),
        Command::PaperCheck { suite, samples } => cmd_paper_check(run, &gf, suite, *samples, opts),
        Command::Degenerate { input, d } => cmd_degenerate(run, input, *d, opts),
        Command::MinrankExtract { input, n, k, s, r } => cmd_minrank_extract(run, &gf, input.as_deref(), *n, *k, *s, *r, opts),
        Command::Witness { n, subspace } => cmd_witness(run, &gf, *n, subspace.as_deref()),
        Command::Verify { input } => cmd_verify(input),
    }
}

fn read_poly(path: &Path, field: &FieldSpec) -> Result<PolyFile, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_cubic(&text, field).with_context(|| format!("parsing {}", path.display()))?)
}

/// Pretty JSON to `--out` or stdout; files are read back and compared.
fn emit<T: Serialize>(run: &RunConfig, value: &T) -> Result<Value, Failure> {
    let v = serde_json::to_value(value)?;
    let text = serde_json::to_string_pretty(&v)? + "\n";
    match &run.out {
        Some(p) => {
            fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            let back: Value = serde_json::from_str(&fs::read_to_string(p)?)?;
            if back != v {
                return Err(anyhow!("{} did not round-trip", p.display()).into());
            }
        }
        None => print!("{text}"),
    }
    Ok(v)
}

fn cmd_qrank(run: &RunConfig, input: &Path, max_r: Option<usize>, elapsed: bool, opts: SearchOptions) -> Result<u8, Failure> {
    let pf = read_poly(input, &run.field)?;
    let gf = &pf.gf;
    let start = Instant::now();
    let mut report = match qrank_oracle(gf, &pf.form, opts, max_r)? {
        Qrank::Exact(res) => {
            let d = decompose_via_subspace(gf, &pf.form, &res.witness)?;
            json!({
                "field": gf.spec(),
                "vars": pf.vars,
                "r": res.r,
                "exact": true,
                "witness_basis": SubspaceJson::from_subspace(gf, &res.witness),
                "decomposition": DecompositionJson::from_decomposition(gf, &d),
                "enumeration_count": res.enumeration_count.to_string(),
            })
        }
        Qrank::AtLeast { lower_bound, enumeration_count } => json!({
            "field": gf.spec(),
            "vars": pf.vars,
            "r": null,
            "exact": false,
            "lower_bound": lower_bound,
            "enumeration_count": enumeration_count.to_string(),
        }),
    };
    if elapsed {
        report["elapsed"] = json!(start.elapsed().as_secs_f64());
    }
    emit(run, &report)?;
    Ok(0)
}

fn cmd_paper_check(run: &RunConfig, gf: &Gf, suite: &str, samples: Option<usize>, opts: SearchOptions) -> Result<u8, Failure> {
    if suite != "all" && !SUITES.contains(&suite) {
        return Err(anyhow!("unknown suite `{suite}`; expected one of {} or all", SUITES.join(", ")).into());
    }
    let report = run_paper_check(gf, suite, run.seed, samples, opts)?;
    eprint!("{}", report.table());
    emit(run, &report)?;
    Ok(if report.total_violations > 0 { EXIT_VIOLATION } else { 0 })
}

fn cmd_degenerate(run: &RunConfig, input: &Path, d: Option<usize>, opts: SearchOptions) -> Result<u8, Failure> {
    let pf = read_poly(input, &run.field)?;
    let gf = &pf.gf;
    if let Some(d) = d {
        let rep = surjection_pipeline(gf, &pf.form, d, opts)?;
        if !verify_certificate(gf, &rep.cert) {
            return Err(anyhow!("reduction certificate failed to verify").into());
        }
        emit(run, &ReductionReportJson::from_report(gf, &rep))?;
        return Ok(0);
    }
    let sep = separable_degenerate(gf, &pf.form, opts)?;
    if !verify_certificate(gf, &sep.cert) {
        return Err(anyhow!("degeneration certificate failed to verify").into());
    }
    let report = json!({
        "field": gf.spec(),
        "vars": pf.vars,
        "r": sep.r,
        "k_prime": sep.k_prime,
        "qrank_f1": sep.qrank_f1,
        "qrank_f2": sep.qrank_f2,
        "chosen": sep.chosen,
        "bound": sep.bound,
        "split": sep.split,
        "separable": sep.g.is_separable_witness(&sep.split).unwrap_or(false),
        "g": CubicJson::from_form(gf, &sep.g),
        "certificate": CertificateJson::from_certificate(gf, &sep.cert),
        "verified": true,
    });
    let v = emit(run, &report)?;
    // the written certificate must replay from its serialized form
    let back: CertificateJson = serde_json::from_value(v["certificate"].clone())?;
    let (gf2, cert) = back.to_certificate()?;
    if !verify_certificate(&gf2, &cert) {
        return Err(anyhow!("serialized certificate failed to verify").into());
    }
    Ok(0)
}

/// `sum_i x_i (y_i z_i)` in variables `x1 y1 z1 x2 ...`.
fn diagonal_decomposition(gf: &Gf, n: usize) -> LQDecomposition {
    let mut d = LQDecomposition::new(3 * n);
    for i in 0..n {
        let q = QuadraticForm::from_monomials(gf, 3 * n, [((3 * i + 1, 3 * i + 2), gf.from_i64(1))]);
        d.pairs.push((LinearForm::var(3 * n, 3 * i), q));
    }
    d
}

#[allow(clippy::too_many_arguments)]
fn cmd_minrank_extract(
    run: &RunConfig,
    gf: &Gf,
    input: Option<&Path>,
    n: usize,
    k: usize,
    s: usize,
    r: Option<usize>,
    opts: SearchOptions,
) -> Result<u8, Failure> {
    let (gf, d) = match input {
        Some(p) => {
            let pf = read_poly(p, &run.field)?;
            let w = qrank(&pf.gf, &pf.form, opts)?.witness;
            let d = decompose_via_subspace(&pf.gf, &pf.form, &w)?;
            (pf.gf, d)
        }
        None => (gf.clone(), diagonal_decomposition(gf, n)),
    };
    let q = QuadricSubspace::span(&gf, d.n, &d.quadrics());
    let r = r.unwrap_or(d.len());
    let quadrics = |qs: &QuadricSubspace| qs.basis().iter().map(|b| QuadricJson::from_form(&gf, b)).collect::<Vec<_>>();
    match extract_high_minrank(&gf, &q, k, s, r, opts.budget) {
        Ok(e) => {
            let (minrank, _) = minmax_rank(&gf, &e.subspace, opts.budget)?;
            let verified = e.subspace.dim() == k && minrank >= s && e.subspace.is_subspace_of(&gf, &q);
            emit(
                run,
                &json!({
                    "field": gf.spec(),
                    "k": k, "s": s, "r": r,
                    "status": "extracted",
                    "top_span": e.top_span,
                    "minrank": minrank,
                    "subspace": quadrics(&e.subspace),
                    "verified": verified,
                }),
            )?;
            Ok(if verified { 0 } else { EXIT_VIOLATION })
        }
        Err(QuadError::ConstructionFailed { witness, codim, maxrank, r }) => {
            emit(
                run,
                &json!({
                    "field": gf.spec(),
                    "k": k, "s": s, "r": r,
                    "status": "hypothesis_refuted",
                    "codim": codim,
                    "maxrank": maxrank,
                    "subspace": quadrics(&witness),
                }),
            )?;
            Ok(EXIT_VIOLATION)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_witness(run: &RunConfig, gf: &Gf, n: usize, subspace: Option<&Path>) -> Result<u8, Failure> {
    let w = match subspace {
        Some(p) => {
            let sj: SubspaceJson = serde_json::from_str(&fs::read_to_string(p)?).context("subspace file")?;
            sj.to_subspace(gf).ok_or_else(|| anyhow!("subspace entries are not field elements"))?
        }
        None => default_subspace(gf, n),
    };
    let cert = certify_diagonal_qrank(gf, n, &w).context("witness")?;
    verify_diagonal_certificate(gf, &cert).map_err(|e| anyhow!("certificate failed to verify: {e}"))?;
    let input = TripleMatrix::from_subspace(n, &w);
    emit(run, &PhaseCertificateJson::new(gf, &input, &cert.phase, Some(&w), true))?;
    Ok(0)
}

fn cmd_verify(input: &Path) -> Result<u8, Failure> {
    let v: Value = serde_json::from_str(&fs::read_to_string(input)?)?;
    let cj: CertificateJson = serde_json::from_value(v.get("certificate").cloned().unwrap_or(v))?;
    let (gf, cert) = cj.to_certificate()?;
    let ok = verify_certificate(&gf, &cert);
    println!("{}", json!({ "verified": ok }));
    Ok(if ok { 0 } else { EXIT_VIOLATION })
}

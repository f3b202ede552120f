//! Seeded property suites, one per proposition, shared by the CLI runner and
//! the tests.
//!
//! Randomness: `ChaCha8Rng::seed_from_u64(seed)` with the stream number set
//! to the suite's index in [`SUITES`], so each suite draws from its own
//! reproducible sequence regardless of which other suites run.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::degeneration::{separable_degenerate, surjection_pipeline, verify_certificate, ExtractionStatus};
use crate::field::{field_extend, FieldSpec, Gf, Scalar};
use crate::forms::{product, CubicForm, LinearForm, QuadraticForm};
use crate::linalg::{kernel, Matrix, Subspace};
use crate::qrank::{
    decompose_via_subspace, qrank, qrank_linear_solve_oracle, qrank_oracle, xi, LinearSolveResult, Qrank, QrankError,
    SearchOptions,
};
use crate::quadspace::{
    bounded_rank_combination, extract_high_minrank, minmax_rank, quadratic_rank, verify_maxrank_inequality,
    QuadError, QuadricSubspace,
};
use crate::witness::{certify_diagonal_qrank, diagonal_cubic, verify_diagonal_certificate};

/// Suite names, in run order for `all`.
pub const SUITES: [&str; 10] = [
    "subadd",
    "qsubsp",
    "geom-equiv",
    "gl-invariance",
    "maxrank",
    "minrank-lemma",
    "minrank-extract",
    "srk",
    "qbd-ext",
    "witness",
];

pub fn default_samples(suite: &str) -> Option<usize> {
    Some(match suite {
        "subadd" => 500,
        "qsubsp" => 500,
        "geom-equiv" => 200,
        "gl-invariance" => 200,
        "maxrank" => 300,
        "minrank-lemma" => 100,
        "minrank-extract" => 100,
        "srk" => 100,
        "qbd-ext" => 100,
        "witness" => 200,
        _ => return None,
    })
}

fn proposition(suite: &str) -> &'static str {
    match suite {
        "subadd" => "qrank(f+g) <= qrank(f) + qrank(g)",
        "qsubsp" => "qrank(f) - d <= qrank(f|W) <= qrank(f)",
        "geom-equiv" => "vanishing-subspace and decomposition oracles agree (r <= 2)",
        "gl-invariance" => "qrank(g.f) = qrank(f)",
        "maxrank" => "codim(Q:Q') + maxrank(Q') >= qrank(f)",
        "minrank-lemma" => "t <= rank(q') <= t + s - 2",
        "minrank-extract" => "k-dim Q' in Q with minrank(Q') >= s",
        "srk" => "separable g in orbit closure, qrank(g) >= ceil(k'/2)",
        "qbd-ext" => "qrank(f) <= d - xi(d) after field extension",
        "witness" => "diagonal cubic nonzero on codim n-1 subspaces",
        _ => "",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub proposition: String,
    pub samples: usize,
    pub violations: usize,
    /// Up to five violation descriptions.
    pub details: Vec<String>,
    /// Wall-clock time; kept out of JSON so reports are reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperCheckReport {
    pub seed: u64,
    pub field: FieldSpec,
    pub suites: Vec<SuiteReport>,
    pub total_violations: usize,
}

impl PaperCheckReport {
    /// Human-readable table including runtimes.
    pub fn table(&self) -> String {
        let mut out = format!("{:<16} {:>8} {:>10} {:>10}  {}\n", "suite", "samples", "violations", "seconds", "proposition");
        for s in &self.suites {
            out.push_str(&format!(
                "{:<16} {:>8} {:>10} {:>10.2}  {}\n",
                s.suite,
                s.samples,
                s.violations,
                s.elapsed.as_secs_f64(),
                s.proposition
            ));
            for d in &s.details {
                out.push_str(&format!("    ! {d}\n"));
            }
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error(transparent)]
    Qrank(#[from] QrankError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("{0}")]
    Other(String),
}

impl SuiteError {
    pub fn is_budget(&self) -> bool {
        matches!(self, SuiteError::Qrank(QrankError::BudgetExceeded { .. }) | SuiteError::Quad(QuadError::BudgetExceeded { .. }))
    }
}

/// Runs one suite or `all`. `samples` overrides the per-suite default.
pub fn run_paper_check(
    gf: &Gf,
    suite: &str,
    seed: u64,
    samples: Option<usize>,
    opts: SearchOptions,
) -> Result<PaperCheckReport, SuiteError> {
    let names: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&suite) {
        vec![suite]
    } else {
        return Err(SuiteError::UnknownSuite(suite.to_string()));
    };
    let mut reports = Vec::new();
    for name in names {
        let count = samples.unwrap_or_else(|| default_samples(name).expect("known suite"));
        reports.push(run_suite(gf, name, seed, count, opts)?);
    }
    let total_violations = reports.iter().map(|r| r.violations).sum();
    Ok(PaperCheckReport { seed, field: gf.spec().clone(), suites: reports, total_violations })
}

pub fn suite_rng(seed: u64, suite: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = SUITES.iter().position(|&s| s == suite).unwrap_or(SUITES.len());
    rng.set_stream(idx as u64);
    rng
}

struct Tally {
    violations: usize,
    details: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.violations += 1;
            if self.details.len() < 5 {
                self.details.push(what());
            }
        }
    }
}

pub fn run_suite(gf: &Gf, suite: &str, seed: u64, samples: usize, opts: SearchOptions) -> Result<SuiteReport, SuiteError> {
    let mut rng = suite_rng(seed, suite);
    let mut tally = Tally { violations: 0, details: Vec::new() };
    let start = Instant::now();
    let body = match suite {
        "subadd" => subadd,
        "qsubsp" => qsubsp,
        "geom-equiv" => geom_equiv,
        "gl-invariance" => gl_invariance,
        "maxrank" => maxrank,
        "minrank-lemma" => minrank_lemma,
        "minrank-extract" => minrank_extract,
        "srk" => srk,
        "qbd-ext" => qbd_ext,
        "witness" => witness,
        other => return Err(SuiteError::UnknownSuite(other.to_string())),
    };
    for i in 0..samples {
        body(gf, &mut rng, opts, i, &mut tally)?;
    }
    Ok(SuiteReport {
        suite: suite.to_string(),
        proposition: proposition(suite).to_string(),
        samples,
        violations: tally.violations,
        details: tally.details,
        elapsed: start.elapsed(),
    })
}

// ---------------------------------------------------------------------------
// generators

pub fn random_scalar(gf: &Gf, rng: &mut ChaCha8Rng) -> Scalar {
    Scalar(rng.gen_range(0..gf.order() as u32))
}

pub fn random_vector(gf: &Gf, n: usize, rng: &mut ChaCha8Rng) -> Vec<Scalar> {
    (0..n).map(|_| random_scalar(gf, rng)).collect()
}

/// Each monomial present with probability `density`, coefficient uniform nonzero.
pub fn random_cubic(gf: &Gf, n: usize, density: f64, rng: &mut ChaCha8Rng) -> CubicForm {
    let mut f = CubicForm::zero(n);
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                if rng.gen_bool(density) {
                    f.add_term(gf, [a, b, c], Scalar(rng.gen_range(1..gf.order() as u32)));
                }
            }
        }
    }
    f
}

pub fn random_quadric(gf: &Gf, n: usize, rng: &mut ChaCha8Rng) -> QuadraticForm {
    let terms: Vec<_> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    QuadraticForm::from_monomials(gf, n, terms.into_iter().map(|ij| (ij, random_scalar(gf, rng))))
}

/// `sum_{i<terms} l_i q_i` with uniform random factors: q-rank at most `terms`.
pub fn random_lq_sum(gf: &Gf, n: usize, terms: usize, rng: &mut ChaCha8Rng) -> CubicForm {
    (0..terms).fold(CubicForm::zero(n), |acc, _| {
        let l = LinearForm::new(random_vector(gf, n, rng));
        acc.add(gf, &product(gf, &l, &random_quadric(gf, n, rng)))
    })
}

pub fn random_invertible(gf: &Gf, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    loop {
        let m = Matrix::from_flat(n, n, (0..n * n).map(|_| random_scalar(gf, rng)).collect());
        if m.is_invertible(gf) {
            return m;
        }
    }
}

/// Uniformly random full-rank `codim x n` equations; their kernel.
pub fn random_subspace(gf: &Gf, n: usize, codim: usize, rng: &mut ChaCha8Rng) -> Subspace {
    loop {
        let eqs = Matrix::from_flat(codim, n, (0..codim * n).map(|_| random_scalar(gf, rng)).collect());
        if eqs.rank(gf) == codim {
            return kernel(gf, &eqs);
        }
    }
}

// ---------------------------------------------------------------------------
// suites

fn r_of(gf: &Gf, f: &CubicForm, opts: SearchOptions) -> Result<usize, SuiteError> {
    Ok(qrank(gf, f, opts)?.r)
}

fn subadd(gf: &Gf, rng: &mut ChaCha8Rng, opts: SearchOptions, _: usize, t: &mut Tally) -> Result<(), SuiteError> {
    let n = rng.gen_range(1..=4);
    let f = random_cubic(gf, n, rng.gen_range(0.1..0.6), rng);
    let g = random_cubic(gf, n, rng.gen_range(0.1..0.6), rng);
    let (rf, rg, rs) = (r_of(gf, &f, opts)?, r_of(gf, &g, opts)?, r_of(gf, &f.add(gf, &g), opts)?);
    t.check(rs <= rf + rg, || format!("n={n}: {rs} > {rf} + {rg}"));
    Ok(())
}

fn qsubsp(gf: &Gf, rng: &mut ChaCha8Rng, opts: SearchOptions, _: usize, t: &mut Tally) -> Result<(), SuiteError> {
    let n = rng.gen_range(1..=4);
    let f = random_cubic(gf, n, rng.gen_range(0.1..0.7), rng);
    let d = rng.gen_range(0..=n);
    let w = random_subspace(gf, n, d, rng);
    let (rf, rw) = (r_of(gf, &f, opts)?, r_of(gf, &f.restrict(gf, &w).map_err(|e| SuiteError::Other(e.to_string()))?, opts)?);
    t.check(rf <= rw + d && rw <= rf, || format!("n={n}, d={d}: qrank(f)={rf}, qrank(f|W)={rw}"));
    Ok(())
}

fn geom_equiv(gf: &Gf, rng: &mut ChaCha8Rng, opts: SearchOptions, _: usize, t: &mut Tally) -> Result<(), SuiteError> {
    // instances of q-rank at most 2
    let (n, f, a) = loop {
        let n = rng.gen_range(1..=3);
        let f = random_cubic(gf, n, rng.gen_range(0.1..0.8), rng);
        let a = qrank(gf, &f, opts)?;
        if a.r <= 2 {
            break (n, f, a);
        }
    };
    match qrank_linear_solve_oracle(gf, &f, opts.budget, None)? {
        LinearSolveResult::Exact { r, decomposition, .. } => {
            t.check(r == a.r, || format!("n={n}: subspace oracle {} vs decomposition oracle {r}", a.r));
            t.check(decomposition.assemble(gf) == f, || format!("n={n}: decomposition does not assemble"));
        }
        LinearSolveResult::AtLeast { .. } => t.check(false, || "uncapped decomposition oracle stopped".into()),
    }
    let d = decompose_via_subspace(gf, &f, &a.witness).map_err(SuiteError::Qrank)?;
    t.check(d.len() == a.witness.codim() && d.assemble(gf) == f, || format!("n={n}: extraction round trip failed"));
    Ok(())
}

fn gl_invariance(gf: &Gf, rng: &mut ChaCha8Rng, opts: SearchOptions, _: usize, t: &mut Tally) -> Result<(), SuiteError> {
    let n = rng.gen_range(1..=4);
    let f = random_cubic(gf, n, rng.gen_range(0.1..0.6), rng);
    let g = random_invertible(gf, n, rng);
    let gf_f = f.change_of_variables(gf, &g).map_err(|e| SuiteError::Other(e.to_string()))?;
    let (a, b) = (r_of(gf, &f, opts)?, r_of(gf, &gf_f, opts)?);
    t.check(a == b, || format!("n={n}: {a} vs {b} after change of variables"));
    Ok(())
}

fn maxrank(gf: &Gf, rng: &mut ChaCha8Rng, opts: SearchOptions, _: usize, t: &mut Tally) -> Result<(), SuiteError> {
    let n = rng.gen_range(1..=4);
    let f = random_cubic(gf, n, rng.gen_range(0.1..0.7), rng);
    let w = qrank(gf, &f, opts)?.witness;
    let d = decompose_via_subspace(gf, &f, &w)?;
    let q = QuadricSubspace::span(gf, n, &d.quadrics());
    let k = rng.gen_range(0..=q.dim());
    let gens: Vec<QuadraticForm> = (0..k).map(|_| q.combination(gf, &random_vector(gf, q.dim(), rng))).collect();
    let q_prime = QuadricSubspace::span(gf, n, &gens);
    let ok = verify_maxrank_inequality(gf, &f, &d, &q_prime, opts)?;
    t.check(ok, || format!("n={n}: inequality fails for dim Q = {}, dim Q' = {}", q.dim(), q_prime.dim()));
    Ok(())
}

fn minrank_lemma(gf: &Gf, rng: &mut ChaCha8Rng, opts: SearchOptions, _: usize, t: &mut Tally) -> Result<(), SuiteError> {
    loop {
        let n = rng.gen_range(2..=5);
        let s = rng.gen_range(2..=4);
        let m = rng.gen_range(1..=4);
        // sums of fewer than s squares of random linear forms have rank < s
        let qs: Vec<QuadraticForm> = (0..m)
            .map(|_| {
                let terms = rng.gen_range(1..s);
                (0..terms).fold(QuadraticForm::zero(n), |acc, _| {
                    let l = random_vector(gf, n, rng);
                    let sq = Matrix::from_flat(n, n, (0..n * n).map(|k| gf.mul(l[k / n], l[k % n])).collect());
                    acc.add(gf, &QuadraticForm::from_gram(sq).expect("symmetric"))
                })
            })
            .collect();
        let (_, maxr) = minmax_rank(gf, &QuadricSubspace::span(gf, n, &qs), opts.budget)?;
        if maxr == 0 {
            continue;
        }
        let target = rng.gen_range(1..=maxr);
        let (q, _) = bounded_rank_combination(gf, &qs, target, s, opts.budget)?;
        let r = quadratic_rank(gf, &q);
        t.check(target <= r && r + 2 <= target + s, || format!("t={target}, s={s}: rank {r}"));
        return Ok(());
    }
}

fn minrank_extract(gf: &Gf, rng: &mut ChaCha8Rng, opts: SearchOptions, _: usize, t: &mut Tally) -> Result<(), SuiteError> {
    loop {
        let n = rng.gen_range(2..=5);
        let terms = rng.gen_range(1..=3);
        let f = random_lq_sum(gf, n, terms, rng);
        let res = qrank(gf, &f, opts)?;
        let r = res.r;
        if r == 0 {
            continue;
        }
        let d = decompose_via_subspace(gf, &f, &res.witness)?;
        let q = QuadricSubspace::span(gf, n, &d.quadrics());
        // admissible (k, s): (2^k - 1)(s - 1) + k <= r
        let k = if r >= 2 && rng.gen_bool(0.5) { 2 } else { 1 };
        let s_max = (r - k) / ((1 << k) - 1) + 1;
        let s = rng.gen_range(1..=s_max);
        match extract_high_minrank(gf, &q, k, s, r, opts.budget) {
            Ok(e) => {
                let (minr, _) = minmax_rank(gf, &e.subspace, opts.budget)?;
                t.check(e.subspace.dim() == k && minr >= s && e.subspace.is_subspace_of(gf, &q), || {
                    format!("r={r}, k={k}, s={s}: got dim {} minrank {minr}", e.subspace.dim())
                });
            }
            Err(QuadError::ConstructionFailed { codim, maxrank, .. }) => {
                t.check(false, || format!("r={r}, k={k}, s={s}: hypothesis refuted, codim {codim} + maxrank {maxrank}"))
            }
            Err(e) => return Err(e.into()),
        }
        return Ok(());
    }
}

fn srk(gf: &Gf, rng: &mut ChaCha8Rng, opts: SearchOptions, i: usize, t: &mut Tally) -> Result<(), SuiteError> {
    let (n, f) = loop {
        let n = rng.gen_range(1..=6);
        let terms = rng.gen_range(1..=3);
        let f = random_lq_sum(gf, n, terms, rng);
        if !f.is_zero() {
            break (n, f);
        }
    };
    let sep = separable_degenerate(gf, &f, opts).map_err(|e| SuiteError::Other(e.to_string()))?;
    let separable = sep.g.is_separable_witness(&sep.split).unwrap_or(false);
    t.check(separable, || format!("n={n}: output not separable for its split"));
    t.check(verify_certificate(gf, &sep.cert), || format!("n={n}: certificate does not replay"));
    let rg = r_of(gf, &sep.g, opts)?;
    t.check(rg >= sep.bound, || format!("n={n}: qrank(g) = {rg} < bound {}", sep.bound));
    // reduction pipeline structure on every fourth instance
    if i.is_multiple_of(4) {
        let rep = surjection_pipeline(gf, &f, 1, opts).map_err(|e| SuiteError::Other(e.to_string()))?;
        let q_prime = QuadricSubspace::span(gf, n, &rep.quadrics);
        let (minr, _) = minmax_rank(gf, &q_prime, opts.budget)?;
        let consistent = rep.minrank_achieved == minr
            && rep.deg2_hypothesis_met
                == (rep.quadrics.len() == 1 && rep.linear_forms_independent && minr >= rep.required_minrank)
            && verify_certificate(gf, &rep.cert)
            && rep.g_prime.is_separable_witness(&rep.split).unwrap_or(false)
            && (rep.extraction != ExtractionStatus::Extracted || minr >= rep.required_minrank);
        t.check(consistent, || format!("n={n}: reduction report inconsistent"));
    }
    Ok(())
}

/// First half: binary cubics over GF(q^6) have a linear factor. Second half:
/// ternary cubics have a point over GF(q^k) for some k <= 6.
fn qbd_ext(gf: &Gf, rng: &mut ChaCha8Rng, opts: SearchOptions, i: usize, t: &mut Tally) -> Result<(), SuiteError> {
    let (d, degrees): (usize, Vec<u32>) = if i.is_multiple_of(2) { (2, vec![6]) } else { (3, (1..=6).collect()) };
    let max_r = d - xi(d as u64) as usize;
    let f = loop {
        let f = random_cubic(gf, d, 0.7, rng);
        if !f.is_zero() {
            break f;
        }
    };
    let mut found = false;
    for k in degrees {
        let ext = field_extend(gf, k).map_err(|e| SuiteError::Other(e.to_string()))?;
        let fe = CubicForm::from_terms(&ext.field, d, f.terms().iter().map(|(&m, &c)| (m, ext.embed(c))));
        if let Qrank::Exact(_) = qrank_oracle(&ext.field, &fe, opts, Some(max_r))? {
            found = true;
            break;
        }
    }
    t.check(found, || format!("d={d}: no vanishing subspace of codim <= {max_r} found"));
    Ok(())
}

fn witness(gf: &Gf, rng: &mut ChaCha8Rng, _: SearchOptions, _: usize, t: &mut Tally) -> Result<(), SuiteError> {
    let n = 3;
    let w = random_subspace(gf, 3 * n, n - 1, rng);
    let f = diagonal_cubic(gf, n);
    let direct = !f.restrict(gf, &w).map_err(|e| SuiteError::Other(e.to_string()))?.is_zero();
    match certify_diagonal_qrank(gf, n, &w) {
        Ok(c) => {
            let verified = verify_diagonal_certificate(gf, &c).is_ok();
            t.check(verified && c.nonvanishing() && direct, || "certificate or direct restriction disagrees".into());
        }
        Err(e) => t.check(false, || format!("certification failed: {e}")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        let gf = Gf::prime(5).unwrap();
        assert!(matches!(
            run_paper_check(&gf, "nope", 1, Some(1), SearchOptions::default()),
            Err(SuiteError::UnknownSuite(_))
        ));
    }

    #[test]
    fn every_suite_runs_a_few_samples() {
        let gf = Gf::prime(5).unwrap();
        let rep = run_paper_check(&gf, "all", 7, Some(4), SearchOptions::default()).unwrap();
        assert_eq!(rep.suites.len(), SUITES.len());
        assert_eq!(rep.total_violations, 0, "{}", rep.table());
    }

    #[test]
    fn streams_are_independent_of_selection() {
        let gf = Gf::prime(5).unwrap();
        let alone = run_paper_check(&gf, "subadd", 3, Some(5), SearchOptions::sequential()).unwrap();
        let all = run_paper_check(&gf, "all", 3, Some(5), SearchOptions::sequential()).unwrap();
        assert_eq!(alone.suites[0].clone().with_zero_time(), all.suites[0].clone().with_zero_time());
    }

    impl SuiteReport {
        fn with_zero_time(mut self) -> Self {
            self.elapsed = Duration::ZERO;
            self
        }
    }
}

//! Orbit-closure degenerations with replayable certificates.
//!
//! A certificate is a chain of coordinate changes (exact) and one-parameter
//! limits `t -> 0` of `x_i -> t^{w_i} x_i`; replaying it from `start` must
//! reproduce `end`, which witnesses `end` in the orbit closure of `start`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::field::{FieldSpec, Gf, Scalar};
use crate::forms::{Cocharacter, CubicForm, FormError, LinearForm, QuadraticForm, Split};
use crate::io::{CubicJson, ParseError, QuadricJson};
use crate::linalg::{complete_basis, matrix_from_json, matrix_to_json, scalar_to_json, Matrix};
use crate::qrank::{qrank, OracleResult, QrankError, SearchOptions};
use crate::quadspace::{
    extract_high_minrank, lex_minimal_rank_basis, minmax_rank, quadratic_rank, QuadError, QuadricSubspace,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("stage {stage}: {message}")]
pub struct DegenerationError {
    pub stage: &'static str,
    pub message: String,
}

fn stage_err(stage: &'static str) -> impl Fn(&dyn std::fmt::Display) -> DegenerationError {
    move |e| DegenerationError { stage, message: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DegenerationStep {
    /// Replace `f` by `g . f`, i.e. `v -> f(g^{-1} v)`.
    Change(Matrix),
    /// Replace `f` by the `t -> 0` limit of the cocharacter action.
    Limit(Cocharacter),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegenerationCertificate {
    pub start: CubicForm,
    pub steps: Vec<DegenerationStep>,
    pub end: CubicForm,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("certificate fails at step {step}: {reason}")]
pub struct ReplayFailure {
    /// Index of the failing step; `steps.len()` means the final comparison.
    pub step: usize,
    pub reason: String,
}

/// Replays the steps from `start`; `Err` names the first failing step.
pub fn replay_certificate(gf: &Gf, cert: &DegenerationCertificate) -> Result<(), ReplayFailure> {
    let mut f = cert.start.clone();
    for (i, step) in cert.steps.iter().enumerate() {
        let fail = |reason: String| ReplayFailure { step: i, reason };
        f = match step {
            DegenerationStep::Change(g) => {
                if g.rows() != f.n() || g.cols() != f.n() {
                    return Err(fail(format!("matrix is {}x{}, form has {} variables", g.rows(), g.cols(), f.n())));
                }
                f.change_of_variables(gf, g).map_err(|e| fail(e.to_string()))?
            }
            DegenerationStep::Limit(c) => f.cocharacter_limit(c).map_err(|e| fail(e.to_string()))?,
        };
    }
    if f != cert.end {
        return Err(ReplayFailure { step: cert.steps.len(), reason: "replay does not reach the stated end".into() });
    }
    Ok(())
}

pub fn verify_certificate(gf: &Gf, cert: &DegenerationCertificate) -> bool {
    replay_certificate(gf, cert).is_ok()
}

/// Q-rank of a form after dropping the variables it does not use (the value
/// is unchanged, the search space much smaller).
pub fn qrank_on_support(gf: &Gf, f: &CubicForm, opts: SearchOptions) -> Result<usize, QrankError> {
    let support = f.support();
    let mut sel = Matrix::zeros(f.n(), support.len());
    for (j, &i) in support.iter().enumerate() {
        sel[(i, j)] = Scalar::ONE;
    }
    Ok(qrank(gf, &f.substitute(gf, &sel), opts)?.r)
}

/// Which of the two separable pieces was kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparablePiece {
    /// Linear in the x-block: `sum x_i q_i''(rest)`.
    Linear,
    /// Quadratic in the x-block: `sum x_i x_j l_ij(rest)`.
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparableDegeneration {
    pub g: CubicForm,
    pub cert: DegenerationCertificate,
    /// `ceil(k'/2)`, a lower bound for `qrank(g)`.
    pub bound: usize,
    pub r: usize,
    pub k_prime: usize,
    pub qrank_f1: usize,
    pub qrank_f2: usize,
    pub chosen: SeparablePiece,
    /// Block 1 carries the linear factors, block 2 the quadrics.
    pub split: Split,
    pub witness: OracleResult,
}

/// `diag(a, I)` for a square block `a` in the top-left corner.
fn block_diag(a: &Matrix, n: usize) -> Matrix {
    let mut m = Matrix::identity(n);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            m[(i, j)] = a[(i, j)];
        }
    }
    m
}

/// Orbit-closure degeneration of `f != 0` to a separable cubic:
///
/// 1. change coordinates so `f = sum_{i<r} x_i q_i` (first oracle witness);
/// 2. split `f = f1 + f2 + f3` by degree in `x_0..x_{r-1}`;
/// 3. with `k' = r - qrank(f3)`, change the x-block so `f3` lies in the ideal
///    of `x_{k'}..x_{r-1}` and send those variables to 0;
/// 4. keep whichever of the pieces `f1'`, `f2'` has the larger q-rank, via
///    the weights (2 on x, -1 elsewhere) or (-1 on x, 2 elsewhere).
pub fn separable_degenerate(gf: &Gf, f: &CubicForm, opts: SearchOptions) -> Result<SeparableDegeneration, DegenerationError> {
    const STAGE: &str = "separable_degenerate";
    let err = stage_err(STAGE);
    if f.is_zero() {
        return Err(DegenerationError { stage: STAGE, message: "f = 0 has no separable degeneration to report".into() });
    }
    let n = f.n();
    let witness = qrank(gf, f, opts).map_err(|e| err(&e))?;
    let r = witness.r;
    let mut steps = Vec::new();

    // (1) x_0..x_{r-1} cut out the witness: v = M^T y
    let m = complete_basis(&witness.witness);
    let g1 = m.transpose().inverse(gf).map_err(|e| err(&e))?;
    let f_a = f.change_of_variables(gf, &g1).map_err(|e| err(&e))?;
    steps.push(DegenerationStep::Change(g1));

    // (2) grade by x-degree; f3 only involves the x-block
    let x_block: Vec<usize> = (0..r).collect();
    let graded = f_a.grade_by_weight(&Cocharacter::killing(n, &x_block)).map_err(|e| err(&e))?;
    debug_assert!(!graded.contains_key(&0), "every monomial meets the x-block");
    let f3 = graded.get(&3).cloned().unwrap_or_else(|| CubicForm::zero(n));

    // (3) f3 vanishes on a codim-k3 subspace W3 of the x-space; make the
    // last k3 x-coordinates cut it out
    let f3_small = f3.truncate(r);
    let w3 = qrank(gf, &f3_small, opts).map_err(|e| err(&e))?;
    let k3 = w3.r;
    let k_prime = r - k3;
    let mut rows = w3.witness.basis().to_rows();
    rows.extend(complete_basis(&w3.witness).to_rows().into_iter().take(k3));
    let m3t = Matrix::from_rows(r, rows).transpose();
    let g2 = block_diag(&m3t.inverse(gf).map_err(|e| err(&e))?, n);
    let f_b = f_a.change_of_variables(gf, &g2).map_err(|e| err(&e))?;
    steps.push(DegenerationStep::Change(g2));
    let killed: Vec<usize> = (k_prime..r).collect();
    let kill = Cocharacter::killing(n, &killed);
    let f_prime = f_b.cocharacter_limit(&kill).map_err(|e| err(&e))?;
    steps.push(DegenerationStep::Limit(kill));

    // (4) f' = f1' + f2'
    let parts = f_prime.grade_by_weight(&Cocharacter::killing(n, &x_block)).map_err(|e| err(&e))?;
    if parts.keys().any(|&w| w == 0 || w == 3) {
        return Err(err(&"degree bookkeeping: f' has a component of x-degree 0 or 3"));
    }
    let f1 = parts.get(&1).cloned().unwrap_or_else(|| CubicForm::zero(n));
    let f2 = parts.get(&2).cloned().unwrap_or_else(|| CubicForm::zero(n));
    let qrank_f1 = qrank_on_support(gf, &f1, opts).map_err(|e| err(&e))?;
    let qrank_f2 = qrank_on_support(gf, &f2, opts).map_err(|e| err(&e))?;
    let rest: Vec<usize> = (r..n).collect();
    let (chosen, weights, split) = if qrank_f1 >= qrank_f2 {
        let w = (0..n).map(|i| if i < r { 2 } else { -1 }).collect();
        (SeparablePiece::Linear, w, Split { first: x_block.clone(), second: rest.clone() })
    } else {
        let w = (0..n).map(|i| if i < r { -1 } else { 2 }).collect();
        (SeparablePiece::Quadratic, w, Split { first: rest, second: x_block })
    };
    let gamma = Cocharacter::new(weights);
    let g = f_prime.cocharacter_limit(&gamma).map_err(|e| err(&e))?;
    steps.push(DegenerationStep::Limit(gamma));
    let expected = if chosen == SeparablePiece::Linear { &f1 } else { &f2 };
    if &g != expected {
        return Err(err(&"limit does not isolate the chosen piece"));
    }

    let cert = DegenerationCertificate { start: f.clone(), steps, end: g.clone() };
    if let Err(e) = replay_certificate(gf, &cert) {
        return Err(err(&e));
    }
    Ok(SeparableDegeneration {
        g,
        cert,
        bound: k_prime.div_ceil(2),
        r,
        k_prime,
        qrank_f1,
        qrank_f2,
        chosen,
        split,
        witness,
    })
}

/// `g = sum_b l_b q_b` with `l_b` in the block-1 variables, `q_b` in the
/// block-2 variables, and both families linearly independent.
pub fn separable_factorization(
    gf: &Gf,
    g: &CubicForm,
    split: &Split,
) -> Result<Vec<(LinearForm, QuadraticForm)>, FormError> {
    if !g.is_separable_witness(split)? {
        return Err(FormError::BadSplit("form is not separable for this split".into()));
    }
    let n = g.n();
    let mono: Vec<(usize, usize)> = split
        .second
        .iter()
        .enumerate()
        .flat_map(|(a, &i)| split.second[a..].iter().map(move |&j| if i <= j { (i, j) } else { (j, i) }))
        .collect();
    let col_of = |m: (usize, usize)| mono.iter().position(|&x| x == m).expect("block-2 monomial");
    let mut c = Matrix::zeros(split.first.len(), mono.len());
    for (&m, &v) in g.terms() {
        let a = split.first.iter().position(|&x| m.contains(&x)).expect("one block-1 variable");
        let x = split.first[a];
        let mut others: Vec<usize> = m.to_vec();
        let pos = others.iter().position(|&y| y == x).expect("present");
        others.remove(pos);
        let col = col_of((others[0], others[1]));
        c[(a, col)] = gf.add(c[(a, col)], v);
    }
    // C = L R with R = rref(C) (nonzero rows) and L = C restricted to R's pivots
    let mut rr = c.clone();
    let pivots = rr.rref_in_place(gf);
    let mut pairs = Vec::with_capacity(pivots.len());
    for (b, &p) in pivots.iter().enumerate() {
        let mut l = vec![Scalar::ZERO; n];
        for (a, &x) in split.first.iter().enumerate() {
            l[x] = c[(a, p)];
        }
        let q = QuadraticForm::from_monomials(gf, n, mono.iter().enumerate().map(|(k, &ij)| (ij, rr[(b, k)])));
        pairs.push((LinearForm::new(l), q));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionStatus {
    /// The minrank construction produced `Q'`.
    Extracted,
    /// `(2^d-1)(s-1)+d <= bound` fails; `Q'` is the top of the lex-minimal basis.
    PreconditionUnmet,
    /// The construction found a subspace violating its hypothesis; fell back
    /// to the top of the lex-minimal basis.
    ConstructionFailed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionReport {
    pub d: usize,
    pub g: CubicForm,
    pub split: Split,
    pub bound: usize,
    /// Number of pairs in the separable factorization of `g`.
    pub factor_rank: usize,
    /// Chosen pairs in the coordinates of `g`.
    pub linear_forms: Vec<LinearForm>,
    pub quadrics: Vec<QuadraticForm>,
    pub minrank_achieved: usize,
    pub required_minrank: usize,
    pub linear_forms_independent: bool,
    pub deg2_hypothesis_met: bool,
    pub extraction: ExtractionStatus,
    /// `sum_{i<d} l_i q_i` after setting the other linear factors to zero.
    pub g_prime: CubicForm,
    /// From `f` to `g_prime`.
    pub cert: DegenerationCertificate,
}

/// `d^2 2^d + 2(d+1)d`: the minrank demanded when `n = m = d`.
pub fn required_minrank(d: usize) -> usize {
    d * d * (1usize << d) + 2 * (d + 1) * d
}

/// Coordinates of each `q_b` in the basis `basis` of their span.
fn coordinates_in(gf: &Gf, basis: &[QuadraticForm], qs: &[QuadraticForm]) -> Matrix {
    let k = basis.len();
    let width = basis[0].flatten().len();
    // solve x^T B = q  via rref of [B^T | q^T]
    let mut out = Matrix::zeros(qs.len(), k);
    for (row, q) in qs.iter().enumerate() {
        let mut aug = Matrix::zeros(width, k + 1);
        for (c, b) in basis.iter().enumerate() {
            for (i, &v) in b.flatten().iter().enumerate() {
                aug[(i, c)] = v;
            }
        }
        for (i, &v) in q.flatten().iter().enumerate() {
            aug[(i, k)] = v;
        }
        let pivots = aug.rref_in_place(gf);
        assert!(pivots.last() != Some(&k), "quadric outside the span");
        for (i, &p) in pivots.iter().enumerate() {
            out[(row, p)] = aug[(i, k)];
        }
    }
    out
}

/// The reduction toward the surjection theorem: separable degeneration,
/// minrank extraction among `g`'s quadrics, and restriction to `d` pairs by
/// sending the other linear factors to zero. The final surjection step is not
/// executed; only its hypothesis is checked.
pub fn surjection_pipeline(gf: &Gf, f: &CubicForm, d: usize, opts: SearchOptions) -> Result<ReductionReport, DegenerationError> {
    if d == 0 {
        return Err(DegenerationError { stage: "surjection_pipeline", message: "d must be at least 1".into() });
    }
    let sep = separable_degenerate(gf, f, opts)?;
    let n = f.n();
    let err = stage_err("separable_factorization");
    let pairs = separable_factorization(gf, &sep.g, &sep.split).map_err(|e| err(&e))?;
    let rho = pairs.len();
    let (ls, qs): (Vec<LinearForm>, Vec<QuadraticForm>) = pairs.into_iter().unzip();

    let s = required_minrank(d);
    let err = stage_err("extract_high_minrank");
    let space = QuadricSubspace::new(gf, n, qs.clone()).map_err(|e| err(&e))?;
    let fallback = |space: &QuadricSubspace| -> Result<Vec<QuadraticForm>, DegenerationError> {
        let lex = lex_minimal_rank_basis(gf, space, opts.budget).map_err(|e| err(&e))?;
        Ok(lex[rho - d.min(rho)..].to_vec())
    };
    let admissible = d < 60 && ((1u128 << d) - 1) * (s as u128 - 1) + d as u128 <= sep.bound as u128;
    let (chosen, extraction) = if rho == 0 {
        (Vec::new(), ExtractionStatus::PreconditionUnmet)
    } else if !admissible {
        (fallback(&space)?, ExtractionStatus::PreconditionUnmet)
    } else {
        match extract_high_minrank(gf, &space, d, s, sep.bound, opts.budget) {
            Ok(e) => (e.subspace.basis().to_vec(), ExtractionStatus::Extracted),
            Err(QuadError::ConstructionFailed { .. }) => (fallback(&space)?, ExtractionStatus::ConstructionFailed),
            Err(e) => return Err(err(&e)),
        }
    };
    let kept = chosen.len();

    // new basis of Q: the chosen quadrics first, then original ones outside
    // their span; rewrite g = sum_c l'_c q'_c
    let mut new_basis = chosen.clone();
    for q in &qs {
        let mut trial = new_basis.clone();
        trial.push(q.clone());
        if QuadricSubspace::new(gf, n, trial.clone()).is_ok() {
            new_basis = trial;
        }
    }
    let coords = if rho == 0 { Matrix::zeros(0, 0) } else { coordinates_in(gf, &new_basis, &qs) };
    let new_ls: Vec<LinearForm> = (0..rho)
        .map(|c| {
            let mut l = vec![Scalar::ZERO; n];
            for (b, lb) in ls.iter().enumerate() {
                let w = coords[(b, c)];
                for (x, &v) in l.iter_mut().zip(&lb.coeffs) {
                    *x = gf.add(*x, gf.mul(w, v));
                }
            }
            LinearForm::new(l)
        })
        .collect();

    // make l'_c the block-1 coordinates and send those with c >= kept to 0
    let err = stage_err("restrict_pairs");
    let block1 = &sep.split.first;
    let mut t_rows: Vec<Vec<Scalar>> = (0..n).map(|i| (0..n).map(|j| Scalar((i == j) as u32)).collect()).collect();
    let mut used: Vec<Vec<Scalar>> = new_ls.iter().map(|l| l.coeffs.clone()).collect();
    let mut spare = Vec::new();
    for &x in block1 {
        let mut e = vec![Scalar::ZERO; n];
        e[x] = Scalar::ONE;
        used.push(e.clone());
        if Matrix::from_rows(n, used.clone()).rank(gf) == used.len() {
            spare.push(e);
        } else {
            used.pop();
        }
    }
    let block1_rows: Vec<Vec<Scalar>> = new_ls.iter().map(|l| l.coeffs.clone()).chain(spare).collect();
    if block1_rows.len() != block1.len() {
        return Err(err(&"linear factors do not extend to block-1 coordinates"));
    }
    for (&x, row) in block1.iter().zip(block1_rows) {
        t_rows[x] = row;
    }
    let t = Matrix::from_rows(n, t_rows);
    let g_t = sep.g.change_of_variables(gf, &t).map_err(|e| err(&e))?;
    let killed: Vec<usize> = block1[kept..rho].to_vec();
    let kill = Cocharacter::killing(n, &killed);
    let g_prime = g_t.cocharacter_limit(&kill).map_err(|e| err(&e))?;
    let mut cert = sep.cert.clone();
    cert.steps.push(DegenerationStep::Change(t));
    cert.steps.push(DegenerationStep::Limit(kill));
    cert.end = g_prime.clone();
    replay_certificate(gf, &cert).map_err(|e| err(&e))?;

    let err = stage_err("minrank");
    let q_prime = QuadricSubspace::new(gf, n, chosen.clone()).map_err(|e| err(&e))?;
    let (minrank_achieved, _) = minmax_rank(gf, &q_prime, opts.budget).map_err(|e| err(&e))?;
    let linear_forms: Vec<LinearForm> = new_ls[..kept].to_vec();
    let independent = kept == 0
        || Matrix::from_rows(n, linear_forms.iter().map(|l| l.coeffs.clone()).collect()).rank(gf) == kept;
    Ok(ReductionReport {
        d,
        g: sep.g,
        split: sep.split,
        bound: sep.bound,
        factor_rank: rho,
        linear_forms,
        quadrics: chosen,
        minrank_achieved,
        required_minrank: s,
        linear_forms_independent: independent,
        deg2_hypothesis_met: kept == d && independent && minrank_achieved >= s,
        extraction,
        g_prime,
        cert,
    })
}

/// Ranks of the chosen quadrics, for reports.
pub fn quadric_ranks(gf: &Gf, qs: &[QuadraticForm]) -> Vec<usize> {
    qs.iter().map(|q| quadratic_rank(gf, q)).collect()
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepJson {
    Change { matrix: Vec<Vec<Value>> },
    Limit { weights: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub field: FieldSpec,
    pub start: CubicJson,
    pub steps: Vec<StepJson>,
    pub end: CubicJson,
}

impl CertificateJson {
    pub fn from_certificate(gf: &Gf, cert: &DegenerationCertificate) -> Self {
        CertificateJson {
            field: gf.spec().clone(),
            start: CubicJson::from_form(gf, &cert.start),
            steps: cert
                .steps
                .iter()
                .map(|s| match s {
                    DegenerationStep::Change(m) => StepJson::Change { matrix: matrix_to_json(gf, m) },
                    DegenerationStep::Limit(c) => StepJson::Limit { weights: c.weights.clone() },
                })
                .collect(),
            end: CubicJson::from_form(gf, &cert.end),
        }
    }

    pub fn to_certificate(&self) -> Result<(Gf, DegenerationCertificate), ParseError> {
        let gf = Gf::new(self.field.clone())?;
        let start = self.start.to_form(&gf)?;
        let n = start.n();
        let steps = self
            .steps
            .iter()
            .map(|s| match s {
                StepJson::Change { matrix } => matrix_from_json(&gf, n, matrix)
                    .filter(|m| m.rows() == n)
                    .map(DegenerationStep::Change)
                    .ok_or_else(|| ParseError::Json("bad change matrix".into())),
                StepJson::Limit { weights } => Ok(DegenerationStep::Limit(Cocharacter::new(weights.clone()))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let end = self.end.to_form(&gf)?;
        Ok((gf, DegenerationCertificate { start, steps, end }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReportJson {
    pub linear: Vec<Value>,
    pub quadric: QuadricJson,
    pub quadric_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReportJson {
    pub d: usize,
    pub g: CubicJson,
    pub split: Split,
    pub bound: usize,
    pub factor_rank: usize,
    pub pairs: Vec<PairReportJson>,
    pub minrank_achieved: usize,
    pub required_minrank: usize,
    pub linear_forms_independent: bool,
    pub deg2_hypothesis_met: bool,
    pub extraction: ExtractionStatus,
    pub g_prime: CubicJson,
    pub certificate: CertificateJson,
}

impl ReductionReportJson {
    pub fn from_report(gf: &Gf, r: &ReductionReport) -> Self {
        ReductionReportJson {
            d: r.d,
            g: CubicJson::from_form(gf, &r.g),
            split: r.split.clone(),
            bound: r.bound,
            factor_rank: r.factor_rank,
            pairs: r
                .linear_forms
                .iter()
                .zip(&r.quadrics)
                .map(|(l, q)| PairReportJson {
                    linear: l.coeffs.iter().map(|&c| scalar_to_json(gf, c)).collect(),
                    quadric: QuadricJson::from_form(gf, q),
                    quadric_rank: quadratic_rank(gf, q),
                })
                .collect(),
            minrank_achieved: r.minrank_achieved,
            required_minrank: r.required_minrank,
            linear_forms_independent: r.linear_forms_independent,
            deg2_hypothesis_met: r.deg2_hypothesis_met,
            extraction: r.extraction,
            g_prime: CubicJson::from_form(gf, &r.g_prime),
            certificate: CertificateJson::from_certificate(gf, &r.cert),
        }
    }
}

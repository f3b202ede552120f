//! Text and JSON formats for forms.
//!
//! Text format (whitespace-insensitive):
//!
//! ```text
//! field p=5
//! vars x y
//! f = 1*x*x*x + 1*y*y*y
//! ```
//!
//! The `field` and `vars` lines are optional; without `vars`, variables are
//! numbered in order of first appearance. Coefficients are integers (reduced
//! mod p) or, over extension fields, `[c0,c1,...]` coefficient lists. `x^2`
//! is accepted as shorthand for `x*x`. Lines starting with `#` are comments.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::field::{FieldError, FieldSpec, Gf, Scalar};
use crate::forms::{CubicForm, LQDecomposition, LinearForm, QuadraticForm};
use crate::linalg::{matrix_from_json, matrix_to_json, scalar_from_json, scalar_to_json};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("term `{term}` has degree {degree}, expected 3")]
    Degree { term: String, degree: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("missing `f = ...` line")]
    MissingBody,
    #[error("field: {0}")]
    Field(#[from] FieldError),
    #[error("json: {0}")]
    Json(String),
}

/// A parsed cubic together with its field and variable names.
#[derive(Debug, Clone)]
pub struct PolyFile {
    pub gf: Gf,
    pub vars: Vec<String>,
    pub form: CubicForm,
}

/// Names `x1 .. xn`.
pub fn default_var_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Parses the text format. `default_field` is used when the file has no
/// `field` line.
pub fn parse_cubic(text: &str, default_field: &FieldSpec) -> Result<PolyFile, ParseError> {
    let mut spec: Option<FieldSpec> = None;
    let mut vars: Option<Vec<String>> = None;
    let mut body: Option<(usize, String)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((_, b)) = body.as_mut() {
            // continuation of the polynomial
            b.push(' ');
            b.push_str(line);
            continue;
        }
        if let Some(rest) = line.strip_prefix("field") {
            let s: String = rest.chars().filter(|c| !c.is_whitespace()).collect();
            spec = Some(s.parse().map_err(|e: FieldError| ParseError::Syntax { line: lineno, msg: e.to_string() })?);
        } else if let Some(rest) = line.strip_prefix("vars") {
            let names: Vec<String> =
                rest.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).map(String::from).collect();
            for (k, name) in names.iter().enumerate() {
                if !is_identifier(name) {
                    return Err(ParseError::Syntax { line: lineno, msg: format!("bad variable name `{name}`") });
                }
                if names[..k].contains(name) {
                    return Err(ParseError::Syntax { line: lineno, msg: format!("duplicate variable `{name}`") });
                }
            }
            vars = Some(names);
        } else if let Some(eq) = line.find('=') {
            if line[..eq].trim() != "f" {
                return Err(ParseError::Syntax { line: lineno, msg: "expected `f = ...`".into() });
            }
            body = Some((lineno, line[eq + 1..].to_string()));
        } else {
            return Err(ParseError::Syntax { line: lineno, msg: format!("unrecognized line `{line}`") });
        }
    }
    let gf = Gf::new(spec.unwrap_or_else(|| default_field.clone()))?;
    let (lineno, body) = body.ok_or(ParseError::MissingBody)?;
    let fixed_vars = vars.is_some();
    let mut vars = vars.unwrap_or_default();
    let mut terms = Vec::new();
    for (sign, term) in split_terms(&body).map_err(|msg| ParseError::Syntax { line: lineno, msg })? {
        let (coeff, idx) = parse_term(&gf, &term, &mut vars, fixed_vars, lineno)?;
        let coeff = if sign { gf.neg(coeff) } else { coeff };
        if let Some(idx) = idx {
            terms.push((idx, coeff));
        } else if !coeff.is_zero() {
            return Err(ParseError::Degree { term, degree: 0 });
        }
    }
    let form = CubicForm::from_terms(&gf, vars.len(), terms);
    Ok(PolyFile { gf, vars, form })
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Splits at top-level `+`/`-`; returns (negated, term text without spaces).
fn split_terms(body: &str) -> Result<Vec<(bool, String)>, String> {
    let compact: String = body.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut neg = false;
    let mut depth = 0i32;
    let mut pending_sign = true; // a sign may start the expression
    for ch in compact.chars() {
        match ch {
            '[' => {
                depth += 1;
                cur.push(ch);
            }
            ']' => {
                depth -= 1;
                cur.push(ch);
            }
            '+' | '-' if depth == 0 => {
                if cur.is_empty() {
                    if !pending_sign {
                        return Err("dangling operator".into());
                    }
                    if ch == '-' {
                        neg = !neg;
                    }
                    continue;
                }
                out.push((neg, std::mem::take(&mut cur)));
                neg = ch == '-';
                pending_sign = true;
            }
            _ => cur.push(ch),
        }
    }
    if depth != 0 {
        return Err("unbalanced brackets".into());
    }
    if cur.is_empty() {
        if !out.is_empty() {
            return Err("trailing operator".into());
        }
    } else {
        out.push((neg, cur));
    }
    Ok(out)
}

/// Returns the coefficient and, for nonconstant terms, the monomial. A bare
/// `0` yields `(0, None)`.
fn parse_term(
    gf: &Gf,
    term: &str,
    vars: &mut Vec<String>,
    fixed_vars: bool,
    lineno: usize,
) -> Result<(Scalar, Option<[usize; 3]>), ParseError> {
    let syntax = |msg: String| ParseError::Syntax { line: lineno, msg };
    let mut coeff = Scalar::ONE;
    let mut idx = Vec::new();
    for factor in term.split('*') {
        if factor.is_empty() {
            return Err(syntax(format!("empty factor in `{term}`")));
        }
        if factor.starts_with('[') {
            let inner = factor.strip_prefix('[').and_then(|f| f.strip_suffix(']')).ok_or_else(|| syntax(format!("bad coefficient `{factor}`")))?;
            let cs: Result<Vec<u64>, _> = inner.split(',').filter(|s| !s.is_empty()).map(|s| s.parse::<u64>()).collect();
            let cs = cs.map_err(|_| syntax(format!("bad coefficient `{factor}`")))?;
            coeff = gf.mul(coeff, gf.from_coeffs(&cs)?);
        } else if factor.chars().all(|c| c.is_ascii_digit()) {
            let v: u128 = factor.parse().map_err(|_| syntax(format!("bad integer `{factor}`")))?;
            let r = (v % gf.characteristic() as u128) as i64;
            coeff = gf.mul(coeff, gf.from_i64(r));
        } else {
            let (name, power) = match factor.split_once('^') {
                Some((n, p)) => (n, p.parse::<usize>().map_err(|_| syntax(format!("bad exponent in `{factor}`")))?),
                None => (factor, 1),
            };
            if !is_identifier(name) {
                return Err(syntax(format!("bad factor `{factor}`")));
            }
            let i = match vars.iter().position(|v| v == name) {
                Some(i) => i,
                None if fixed_vars => return Err(ParseError::UnknownVariable(name.to_string())),
                None => {
                    vars.push(name.to_string());
                    vars.len() - 1
                }
            };
            idx.extend(std::iter::repeat_n(i, power));
        }
    }
    match idx.len() {
        0 => Ok((coeff, None)),
        3 => Ok((coeff, Some([idx[0], idx[1], idx[2]]))),
        d => Err(ParseError::Degree { term: term.to_string(), degree: d }),
    }
}

fn format_coeff(gf: &Gf, c: Scalar) -> String {
    match gf.as_prime(c) {
        Some(v) => v.to_string(),
        None => {
            let cs: Vec<String> = gf.coeffs(c).iter().map(|x| x.to_string()).collect();
            format!("[{}]", cs.join(","))
        }
    }
}

/// Canonical text: `field`, `vars`, then `f = c*a*b*c + ...` in monomial order.
pub fn format_cubic(gf: &Gf, vars: &[String], f: &CubicForm) -> String {
    assert_eq!(vars.len(), f.n());
    let mut out = format!("field {}\nvars {}\nf = ", gf.spec(), vars.join(" "));
    if f.is_zero() {
        out.push('0');
    } else {
        let terms: Vec<String> = f
            .terms()
            .iter()
            .map(|(m, &c)| format!("{}*{}*{}*{}", format_coeff(gf, c), vars[m[0]], vars[m[1]], vars[m[2]]))
            .collect();
        out.push_str(&terms.join(" + "));
    }
    out.push('\n');
    out
}

/// Human-readable polynomial for reports, e.g. `x1*x2*x3 + 2*x1^2*x2`.
pub fn display_cubic(gf: &Gf, vars: &[String], f: &CubicForm) -> String {
    if f.is_zero() {
        return "0".into();
    }
    f.terms()
        .iter()
        .map(|(m, &c)| {
            let mono = monomial_string(vars, m);
            if c == Scalar::ONE {
                mono
            } else {
                format!("{}*{}", format_coeff(gf, c), mono)
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn monomial_string(vars: &[String], idx: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut k = 0;
    while k < idx.len() {
        let mut e = 1;
        while k + e < idx.len() && idx[k + e] == idx[k] {
            e += 1;
        }
        let name = &vars[idx[k]];
        parts.push(if e == 1 { name.clone() } else { format!("{name}^{e}") });
        k += e;
    }
    parts.join("*")
}

pub fn display_quadric(gf: &Gf, vars: &[String], q: &QuadraticForm) -> String {
    let ms = q.monomials(gf);
    if ms.is_empty() {
        return "0".into();
    }
    ms.iter()
        .map(|(&(i, j), &c)| {
            let mono = monomial_string(vars, &[i, j]);
            if c == Scalar::ONE {
                mono
            } else {
                format!("{}*{}", format_coeff(gf, c), mono)
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

pub fn display_linear(gf: &Gf, vars: &[String], l: &LinearForm) -> String {
    let parts: Vec<String> = l
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, &c)| if c == Scalar::ONE { vars[i].clone() } else { format!("{}*{}", format_coeff(gf, c), vars[i]) })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub monomial: [usize; 3],
    pub coeff: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicJson {
    pub n: usize,
    pub terms: Vec<TermJson>,
}

impl CubicJson {
    pub fn from_form(gf: &Gf, f: &CubicForm) -> Self {
        CubicJson {
            n: f.n(),
            terms: f.terms().iter().map(|(&m, &c)| TermJson { monomial: m, coeff: scalar_to_json(gf, c) }).collect(),
        }
    }

    pub fn to_form(&self, gf: &Gf) -> Result<CubicForm, ParseError> {
        let mut f = CubicForm::zero(self.n);
        for t in &self.terms {
            if t.monomial.iter().any(|&i| i >= self.n) {
                return Err(ParseError::Json(format!("monomial {:?} out of range", t.monomial)));
            }
            let c = scalar_from_json(gf, &t.coeff).ok_or_else(|| ParseError::Json(format!("bad scalar {}", t.coeff)))?;
            f.add_term(gf, t.monomial, c);
        }
        Ok(f)
    }
}

/// Quadric as its Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadricJson {
    pub gram: Vec<Vec<Value>>,
}

impl QuadricJson {
    pub fn from_form(gf: &Gf, q: &QuadraticForm) -> Self {
        QuadricJson { gram: matrix_to_json(gf, q.gram()) }
    }

    pub fn to_form(&self, gf: &Gf) -> Result<QuadraticForm, ParseError> {
        let n = self.gram.len();
        let m = matrix_from_json(gf, n, &self.gram).ok_or_else(|| ParseError::Json("bad Gram matrix".into()))?;
        QuadraticForm::from_gram(m).map_err(|_| ParseError::Json("Gram matrix not symmetric".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairJson {
    pub linear: Vec<Value>,
    pub quadric: QuadricJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub n: usize,
    pub pairs: Vec<PairJson>,
}

impl DecompositionJson {
    pub fn from_decomposition(gf: &Gf, d: &LQDecomposition) -> Self {
        DecompositionJson {
            n: d.n,
            pairs: d
                .pairs
                .iter()
                .map(|(l, q)| PairJson {
                    linear: l.coeffs.iter().map(|&c| scalar_to_json(gf, c)).collect(),
                    quadric: QuadricJson::from_form(gf, q),
                })
                .collect(),
        }
    }

    pub fn to_decomposition(&self, gf: &Gf) -> Result<LQDecomposition, ParseError> {
        let mut d = LQDecomposition::new(self.n);
        for p in &self.pairs {
            let coeffs: Option<Vec<Scalar>> = p.linear.iter().map(|v| scalar_from_json(gf, v)).collect();
            let coeffs = coeffs.ok_or_else(|| ParseError::Json("bad linear form".into()))?;
            let q = p.quadric.to_form(gf)?;
            if coeffs.len() != self.n || q.n() != self.n {
                return Err(ParseError::Json("pair dimension mismatch".into()));
            }
            d.pairs.push((LinearForm::new(coeffs), q));
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5() -> FieldSpec {
        FieldSpec::prime(5)
    }

    #[test]
    fn parses_sum_of_cubes() {
        let pf = parse_cubic("field p=5\nvars x y\nf = 1*x*x*x + 1*y*y*y\n", &p5()).unwrap();
        assert_eq!(pf.vars, vec!["x", "y"]);
        assert_eq!(pf.form.terms().len(), 2);
        assert_eq!(pf.form.coeff([0, 0, 0]), Scalar(1));
        assert_eq!(pf.form.coeff([1, 1, 1]), Scalar(1));
    }

    #[test]
    fn whitespace_and_signs() {
        let a = parse_cubic("vars x y\nf=x*x*y-3*x*y*y", &p5()).unwrap();
        let b = parse_cubic("vars x y\n  f =  1 * x * x * y\n   + 2*x*y*y  ", &p5()).unwrap();
        assert_eq!(a.form, b.form);
        let c = parse_cubic("vars x y\nf = x^2*y - -2*x*y^2", &p5()).unwrap();
        assert_eq!(a.form, c.form);
    }

    #[test]
    fn infers_variables_in_order() {
        let pf = parse_cubic("f = z*y*x + 2*y*y*y", &p5()).unwrap();
        assert_eq!(pf.vars, vec!["z", "y", "x"]);
        assert_eq!(pf.form.coeff([0, 1, 2]), Scalar(1));
    }

    #[test]
    fn empty_and_zero() {
        for text in ["f = 0", "f =", "vars x y\nf = 0", "vars x\nf = x*x*x - x*x*x"] {
            assert!(parse_cubic(text, &p5()).unwrap().form.is_zero(), "{text}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_cubic("f = x*y", &p5()), Err(ParseError::Degree { degree: 2, .. })));
        assert!(matches!(parse_cubic("f = x*y*z*w", &p5()), Err(ParseError::Degree { degree: 4, .. })));
        assert!(matches!(parse_cubic("f = 3", &p5()), Err(ParseError::Degree { degree: 0, .. })));
        assert!(matches!(parse_cubic("vars x\nf = y*y*y", &p5()), Err(ParseError::UnknownVariable(_))));
        assert!(parse_cubic("vars x\n", &p5()).is_err());
        assert!(parse_cubic("f = x*x*x +", &p5()).is_err());
        assert!(parse_cubic("field p=3\nf = x*x*x", &p5()).is_err());
        assert!(parse_cubic("g = x*x*x", &p5()).is_err());
    }

    #[test]
    fn field_header_overrides_default() {
        let pf = parse_cubic("field p=7\nf = 8*x*x*x", &p5()).unwrap();
        assert_eq!(pf.gf.order(), 7);
        assert_eq!(pf.form.coeff([0, 0, 0]), Scalar(1));
    }

    #[test]
    fn format_round_trip() {
        let text = "field p=5\nvars x y\nf = 1*x*x*x + 1*y*y*y\n";
        let pf = parse_cubic(text, &p5()).unwrap();
        assert_eq!(format_cubic(&pf.gf, &pf.vars, &pf.form), text);
        let ext = parse_cubic("field p=5,e=2\nvars a b\nf = [1,2]*a*a*b + 3*b*b*b", &p5()).unwrap();
        let again = parse_cubic(&format_cubic(&ext.gf, &ext.vars, &ext.form), &p5()).unwrap();
        assert_eq!(again.form, ext.form);
        assert_eq!(again.gf, ext.gf);
    }

    #[test]
    fn json_round_trip() {
        let pf = parse_cubic("vars x y z\nf = x*y*z + 4*x*x*x", &p5()).unwrap();
        let j = CubicJson::from_form(&pf.gf, &pf.form);
        let s = serde_json::to_string(&j).unwrap();
        let back: CubicJson = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_form(&pf.gf).unwrap(), pf.form);
    }

    #[test]
    fn display_helpers() {
        let pf = parse_cubic("vars x y\nf = x*x*y + 2*y*y*y", &p5()).unwrap();
        assert_eq!(display_cubic(&pf.gf, &pf.vars, &pf.form), "x^2*y + 2*y^3");
    }
}

//! Worked examples through the public API, one test per operation.

use strengthlab::degeneration::{separable_degenerate, surjection_pipeline, verify_certificate, DegenerationCertificate, DegenerationStep};
use strengthlab::field::{field_extend, Gf, Scalar};
use strengthlab::forms::{product, Cocharacter, CubicForm, FormError, LQDecomposition, LinearForm, QuadraticForm, Split};
use strengthlab::linalg::{complete_basis, enumerate_subspaces, gaussian_binomial, kernel, rref, Matrix, Subspace};
use strengthlab::qrank::*;
use strengthlab::quadspace::*;
use strengthlab::witness::*;

fn gf5() -> Gf {
    Gf::prime(5).unwrap()
}

fn s(gf: &Gf, v: i64) -> Scalar {
    gf.from_i64(v)
}

fn vecs(gf: &Gf, rows: &[&[i64]]) -> Vec<Vec<Scalar>> {
    rows.iter().map(|r| r.iter().map(|&x| s(gf, x)).collect()).collect()
}

fn cubic(gf: &Gf, n: usize, terms: &[([usize; 3], i64)]) -> CubicForm {
    CubicForm::from_terms(gf, n, terms.iter().map(|&(m, c)| (m, s(gf, c))))
}

fn quad(gf: &Gf, n: usize, terms: &[((usize, usize), i64)]) -> QuadraticForm {
    QuadraticForm::from_monomials(gf, n, terms.iter().map(|&(m, c)| (m, s(gf, c))))
}

fn cubes() -> CubicForm {
    cubic(&gf5(), 2, &[([0, 0, 0], 1), ([1, 1, 1], 1)])
}

#[test]
fn field_arithmetic() {
    let f = gf5();
    assert_eq!(f.div(s(&f, 2), s(&f, 2)).unwrap(), s(&f, 1));
    assert_eq!(f.inv(s(&f, 2)), Some(s(&f, 3)));
    let f25 = Gf::with_degree(5, 2).unwrap();
    let t = f25.from_coeffs(&[0, 1]).unwrap();
    assert_eq!(f25.coeffs(f25.mul(t, t)), vec![3, 0]);
}

#[test]
fn field_extension() {
    let f = gf5();
    assert_eq!(field_extend(&f, 1).unwrap().field.order(), 5);
    let e = field_extend(&f, 2).unwrap();
    assert_eq!(e.field.order(), 25);
    assert_eq!(e.field.coeffs(e.embed(s(&f, 3))), vec![3, 0]);
    assert_eq!(field_extend(&f, 2).unwrap().field.spec(), e.field.spec());
}

#[test]
fn rref_and_kernel() {
    let f = gf5();
    assert_eq!(rref(&f, &Matrix::from_ints(&f, &[&[2, 4], &[1, 2]])), Matrix::from_ints(&f, &[&[1, 2], &[0, 0]]));
    assert_eq!(kernel(&f, &Matrix::identity(3)).dim(), 0);
    let k = kernel(&f, &Matrix::from_ints(&f, &[&[1, 0, 0]]));
    assert_eq!(k, Subspace::span(&f, 3, vecs(&f, &[&[0, 1, 0], &[0, 0, 1]])));
    let m = Matrix::from_ints(&f, &[&[1, 1, 1], &[0, 1, 2]]);
    let k = kernel(&f, &m);
    assert_eq!(k.dim(), 1);
    assert!(m.mul_vec(&f, k.basis().row(0)).iter().all(|c| c.is_zero()));
}

#[test]
fn subspace_counts() {
    let f = gf5();
    assert_eq!(enumerate_subspaces(&f, 2, 0, 10).unwrap().iter().count(), 1);
    assert_eq!(enumerate_subspaces(&f, 3, 1, 100).unwrap().iter().count(), 31);
    // GF(2) is outside the supported fields; count by shape instead
    assert_eq!(gaussian_binomial(4, 2, 2).to_string(), "35");
    assert_eq!(gaussian_binomial(3, 1, 5).to_string(), "31");
    assert_eq!(gaussian_binomial(7, 0, 5).to_string(), "1");
}

#[test]
fn basis_completion() {
    let f = gf5();
    assert_eq!(complete_basis(&Subspace::whole(3)), Matrix::identity(3));
    let w = Subspace::span(&f, 3, vecs(&f, &[&[0, 1, 0], &[0, 0, 1]]));
    assert_eq!(complete_basis(&w).row(0), &vecs(&f, &[&[1, 0, 0]])[0][..]);
    let w = Subspace::span(&f, 3, vecs(&f, &[&[1, 2, 0]]));
    let m = complete_basis(&w);
    assert!(m.is_invertible(&f));
    assert_eq!(m.to_rows()[..2], vecs(&f, &[&[0, 1, 0], &[0, 0, 1]])[..]);
}

#[test]
fn evaluation() {
    let f = gf5();
    assert_eq!(diagonal_cubic(&f, 1).evaluate(&f, &vecs(&f, &[&[1, 1, 1]])[0]).unwrap(), s(&f, 1));
    assert_eq!(cubes().evaluate(&f, &[s(&f, 1), s(&f, -1)]).unwrap(), Scalar::ZERO);
    let q = quad(&f, 2, &[((0, 1), 1)]);
    assert_eq!(q.evaluate(&f, &[s(&f, 2), s(&f, 3)]).unwrap(), s(&f, 1));
}

#[test]
fn coordinate_changes() {
    let f = gf5();
    assert_eq!(cubes().change_of_variables(&f, &Matrix::identity(2)).unwrap(), cubes());
    let swap = Matrix::from_ints(&f, &[&[0, 1], &[1, 0]]);
    assert_eq!(cubes().change_of_variables(&f, &swap).unwrap(), cubes());
    // f(Av) with A sending x to x + y
    let x3 = cubic(&f, 2, &[([0, 0, 0], 1)]);
    let a = Matrix::from_ints(&f, &[&[1, 1], &[0, 1]]);
    assert_eq!(x3.substitute(&f, &a), cubic(&f, 2, &[([0, 0, 0], 1), ([0, 0, 1], 3), ([0, 1, 1], 3), ([1, 1, 1], 1)]));
}

#[test]
fn restriction() {
    let f = gf5();
    let d2 = diagonal_cubic(&f, 2);
    let w = Subspace::span(&f, 6, vecs(&f, &[&[1, 0, 0, 0, 0, 0], &[0, 1, 0, 0, 0, 0], &[0, 0, 1, 0, 0, 0]]));
    assert_eq!(d2.restrict(&f, &w).unwrap(), diagonal_cubic(&f, 1));
    let z = d2.restrict(&f, &Subspace::zero(6)).unwrap();
    assert_eq!((z.n(), z.is_zero()), (0, true));
    let w = Subspace::span(&f, 2, vecs(&f, &[&[1, -1]]));
    assert!(cubes().restrict(&f, &w).unwrap().is_zero());
}

#[test]
fn grading_and_limits() {
    let f = gf5();
    let g = cubic(&f, 2, &[([0, 0, 1], 1), ([0, 1, 1], 1)]);
    let parts = g.grade_by_weight(&Cocharacter::new(vec![0, 0])).unwrap();
    assert_eq!(parts.into_iter().collect::<Vec<_>>(), vec![(0, g.clone())]);
    let parts = g.grade_by_weight(&Cocharacter::new(vec![1, 0])).unwrap();
    assert_eq!(parts[&2], cubic(&f, 2, &[([0, 0, 1], 1)]));
    assert_eq!(parts[&1], cubic(&f, 2, &[([0, 1, 1], 1)]));
    assert_eq!(g.cocharacter_limit(&Cocharacter::new(vec![0, 0])).unwrap(), g);
    let xy2 = cubic(&f, 2, &[([0, 1, 1], 1)]);
    assert!(matches!(xy2.cocharacter_limit(&Cocharacter::new(vec![1, -1])), Err(FormError::NegativeWeight { weight: -1, .. })));
    // separable x * q(u, v) under weights (2, -1, -1) is homogeneous of weight 0
    let sep = cubic(&f, 3, &[([0, 1, 1], 1), ([0, 1, 2], 2)]);
    let c = Cocharacter::new(vec![2, -1, -1]);
    assert_eq!(sep.grade_by_weight(&c).unwrap().keys().copied().collect::<Vec<_>>(), vec![0]);
    // weight 0 on the x-linear piece, 3 on the x-quadratic piece
    let mixed = sep.add(&f, &cubic(&f, 3, &[([0, 0, 1], 1)]));
    let gamma = Cocharacter::new(vec![2, -1, -1]);
    assert_eq!(mixed.cocharacter_limit(&gamma).unwrap(), sep);
}

#[test]
fn assembly() {
    let f = gf5();
    assert!(LQDecomposition::new(2).assemble(&f).is_zero());
    let mut d = LQDecomposition::new(2);
    d.pairs.push((LinearForm::new(vecs(&f, &[&[1, 1]]).remove(0)), quad(&f, 2, &[((0, 0), 1), ((0, 1), -1), ((1, 1), 1)])));
    assert_eq!(d.assemble(&f), cubes());
    let mut d = LQDecomposition::new(6);
    for i in 0..2 {
        d.pairs.push((LinearForm::var(6, 3 * i), quad(&f, 6, &[((3 * i + 1, 3 * i + 2), 1)])));
    }
    assert_eq!(d.assemble(&f), diagonal_cubic(&f, 2));
}

#[test]
fn separability() {
    let f = gf5();
    let g = cubic(&f, 3, &[([0, 1, 1], 1), ([0, 1, 2], 1)]);
    assert!(g.is_separable_witness(&Split::new(3, vec![0])).unwrap());
    let x3 = cubic(&f, 1, &[([0, 0, 0], 1)]);
    assert!(!x3.is_separable_witness(&Split::new(1, vec![0])).unwrap());
    // sum x_i x_j l_ij with the x-block second
    let f2 = cubic(&f, 4, &[([0, 2, 2], 1), ([1, 2, 3], 3), ([0, 3, 3], 2)]);
    assert!(f2.is_separable_witness(&Split::new(4, vec![0, 1])).unwrap());
}

#[test]
fn oracles() {
    let f = gf5();
    let opts = SearchOptions::default();
    let z = qrank(&f, &CubicForm::zero(3), opts).unwrap();
    assert_eq!((z.r, z.witness.clone()), (0, Subspace::whole(3)));
    let c = qrank(&f, &cubes(), opts).unwrap();
    assert_eq!(c.r, 1);
    assert_eq!(c.witness, Subspace::span(&f, 2, vecs(&f, &[&[1, -1]])));
    assert_eq!(qrank(&f, &diagonal_cubic(&f, 2), opts).unwrap().r, 2);

    match qrank_linear_solve_oracle(&f, &CubicForm::zero(2), u128::MAX, None).unwrap() {
        LinearSolveResult::Exact { r, decomposition, .. } => assert_eq!((r, decomposition.len()), (0, 0)),
        other => panic!("{other:?}"),
    }
    match qrank_linear_solve_oracle(&f, &cubes(), u128::MAX, None).unwrap() {
        LinearSolveResult::Exact { r, decomposition, .. } => {
            assert_eq!(r, 1);
            assert_eq!(decomposition.assemble(&f), cubes());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn subspace_to_decomposition() {
    let f = gf5();
    assert!(decompose_via_subspace(&f, &CubicForm::zero(2), &Subspace::whole(2)).unwrap().is_empty());
    let q = quad(&f, 3, &[((1, 2), 1), ((0, 1), 4), ((2, 2), 3)]);
    let x1q = product(&f, &LinearForm::var(3, 0), &q);
    let d = decompose_via_subspace(&f, &x1q, &kernel(&f, &Matrix::from_ints(&f, &[&[1, 0, 0]]))).unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d.assemble(&f), x1q);
    let d = decompose_via_subspace(&f, &cubes(), &Subspace::span(&f, 2, vecs(&f, &[&[1, -1]]))).unwrap();
    assert_eq!((d.len(), d.assemble(&f)), (1, cubes()));
}

#[test]
fn xi_values() {
    assert_eq!([xi(0), xi(1), xi(4), xi(40)], [0, 1, 2, 7]);
    assert_eq!([xi_combinatorial(0), xi_combinatorial(1), xi_combinatorial(2)], [0, 1, 1]);
}

#[test]
fn surjection_bounds() {
    assert_eq!(surjection_min_qrank(1).to_string(), "89");
    assert_eq!(surjection_lhs(2).to_string(), "83");
    let m2 = surjection_min_qrank(2);
    let k = 2 * 83u64;
    assert_eq!(m2.to_string(), (k * (k + 1) / 2 + k - 1).to_string());
    for d in 1..=6 {
        assert!(surjection_min_qrank(d + 1) > surjection_min_qrank(d));
    }
}

#[test]
fn corollary_threshold() {
    let t = mainthm3_threshold();
    assert!(!mainthm3_check(&(&t / &t + &t / &t), 5));
    assert!(mainthm3_check(&t, 80));
    assert!(mainthm3_check(&t, 0));
}

#[test]
fn quadric_ranks() {
    let f = gf5();
    assert_eq!(quadratic_rank(&f, &QuadraticForm::zero(2)), 0);
    assert_eq!(quadratic_rank(&f, &quad(&f, 2, &[((0, 0), 1), ((1, 1), 1)])), 2);
    let x1x2 = quad(&f, 2, &[((0, 1), 1)]);
    assert_eq!(x1x2.gram().row(0), &[Scalar::ZERO, s(&f, 3)]);
    assert_eq!(quadratic_rank(&f, &x1x2), 2);
}

#[test]
fn minmax() {
    let f = gf5();
    let x1 = quad(&f, 2, &[((0, 0), 1)]);
    let x2 = quad(&f, 2, &[((1, 1), 1)]);
    assert_eq!(minmax_rank(&f, &QuadricSubspace::span(&f, 2, std::slice::from_ref(&x1)), 100).unwrap(), (1, 1));
    assert_eq!(minmax_rank(&f, &QuadricSubspace::span(&f, 2, &[x1, x2]), 100).unwrap(), (1, 2));
    assert_eq!(minmax_rank(&f, &QuadricSubspace::zero(2), 100).unwrap(), (0, 0));
}

#[test]
fn bounded_combinations() {
    let f = gf5();
    let sq = |i| quad(&f, 3, &[((i, i), 1)]);
    let (q, _) = bounded_rank_combination(&f, &[sq(0)], 1, 2, 1000).unwrap();
    assert_eq!(quadratic_rank(&f, &q), 1);
    let (q, _) = bounded_rank_combination(&f, &[sq(0), sq(1), sq(2)], 3, 2, 1000).unwrap();
    assert_eq!(quadratic_rank(&f, &q), 3);
    let qs = [quad(&f, 2, &[((0, 0), 1)]), quad(&f, 2, &[((0, 1), 1)])];
    let (q, _) = bounded_rank_combination(&f, &qs, 2, 3, 1000).unwrap();
    assert!((2..=3).contains(&quadratic_rank(&f, &q)));
}

#[test]
fn lex_bases() {
    let f = gf5();
    let profile = |qs: &[QuadraticForm], n| {
        let b = lex_minimal_rank_basis(&f, &QuadricSubspace::span(&f, n, qs), 1000).unwrap();
        b.iter().map(|q| quadratic_rank(&f, q)).collect::<Vec<_>>()
    };
    let x1 = quad(&f, 2, &[((0, 0), 1)]);
    // x1^2 and (x1^2 + x2^2) - x1^2 = x2^2 both have rank 1
    assert_eq!(profile(&[quad(&f, 2, &[((0, 0), 1), ((1, 1), 1)]), x1.clone()], 2), vec![1, 1]);
    assert_eq!(profile(&[quad(&f, 2, &[((0, 0), 1), ((0, 1), 1)]), x1.clone()], 2), vec![1, 2]);
    assert_eq!(profile(&[x1], 2), vec![1]);
    assert_eq!(profile(&[quad(&f, 4, &[((0, 1), 1)]), quad(&f, 4, &[((2, 3), 1)])], 4), vec![2, 2]);
}

#[test]
fn high_minrank_extraction() {
    let f = gf5();
    let q = QuadricSubspace::span(&f, 2, &[quad(&f, 2, &[((0, 1), 1)])]);
    let e = extract_high_minrank(&f, &q, 1, 1, 1, 1000).unwrap();
    assert_eq!(e.subspace.dim(), 1);

    let yz: Vec<_> = (0..3).map(|i| quad(&f, 6, &[((2 * i, 2 * i + 1), 1)])).collect();
    let q = QuadricSubspace::span(&f, 6, &yz);
    let e = extract_high_minrank(&f, &q, 1, 2, 3, 10_000).unwrap();
    assert_eq!(e.subspace.dim(), 1);
    assert!(minmax_rank(&f, &e.subspace, 10_000).unwrap().0 >= 2);

    // three full-rank quadrics in six variables
    let gens = vec![
        quad(&f, 6, &[((0, 0), 1), ((1, 1), 1), ((2, 2), 1), ((3, 3), 1), ((4, 4), 1), ((5, 5), 1)]),
        quad(&f, 6, &[((0, 1), 1), ((2, 3), 1), ((4, 5), 1)]),
        quad(&f, 6, &[((0, 5), 1), ((1, 4), 2), ((2, 3), 3), ((0, 0), 1)]),
    ];
    let q = QuadricSubspace::span(&f, 6, &gens);
    let e = extract_high_minrank(&f, &q, 2, 2, 5, 100_000).unwrap();
    assert_eq!(e.subspace.dim(), 2);
    assert!(e.subspace.is_subspace_of(&f, &q));
    assert!(minmax_rank(&f, &e.subspace, 100_000).unwrap().0 >= 2);
}

#[test]
fn maxrank_inequality_endpoints() {
    let f = gf5();
    let g = diagonal_cubic(&f, 2);
    let w = qrank(&f, &g, SearchOptions::default()).unwrap().witness;
    let d = decompose_via_subspace(&f, &g, &w).unwrap();
    let q = QuadricSubspace::span(&f, 6, &d.quadrics());
    assert!(verify_maxrank_inequality(&f, &g, &d, &q, SearchOptions::default()).unwrap());
    assert!(verify_maxrank_inequality(&f, &g, &d, &QuadricSubspace::zero(6), SearchOptions::default()).unwrap());
}

#[test]
fn separable_degenerations() {
    let f = gf5();
    let opts = SearchOptions::default();
    // already x-linear: f3 = 0, so k' = r
    let g = cubic(&f, 4, &[([0, 2, 2], 1), ([1, 3, 3], 1)]);
    let out = separable_degenerate(&f, &g, opts).unwrap();
    assert_eq!(out.k_prime, out.r);
    assert!(out.bound >= out.r.div_ceil(2));

    let x3 = cubic(&f, 1, &[([0, 0, 0], 1)]);
    let out = separable_degenerate(&f, &x3, opts).unwrap();
    assert_eq!((out.k_prime, out.bound), (0, 0));
    assert!(verify_certificate(&f, &out.cert));

    let d2 = diagonal_cubic(&f, 2);
    let out = separable_degenerate(&f, &d2, opts).unwrap();
    assert!(out.g.is_separable_witness(&out.split).unwrap());
    assert!(verify_certificate(&f, &out.cert));
    assert!(qrank(&f, &out.g, opts).unwrap().r >= out.bound);
}

#[test]
fn certificate_replay() {
    let f = gf5();
    let c = DegenerationCertificate { start: cubes(), steps: vec![], end: cubes() };
    assert!(verify_certificate(&f, &c));
    let id = DegenerationCertificate { start: cubes(), steps: vec![DegenerationStep::Change(Matrix::identity(2))], end: cubes() };
    assert!(verify_certificate(&f, &id));
    let wrong = DegenerationCertificate { end: CubicForm::zero(2), ..id };
    assert!(!verify_certificate(&f, &wrong));
}

#[test]
fn reduction_pipeline() {
    let f = gf5();
    let opts = SearchOptions::default();
    let x1q = product(&f, &LinearForm::var(3, 0), &quad(&f, 3, &[((1, 2), 1)]));
    let rep = surjection_pipeline(&f, &x1q, 1, opts).unwrap();
    assert_eq!(rep.required_minrank, 6);
    assert!(!rep.deg2_hypothesis_met);
    assert!(verify_certificate(&f, &rep.cert));
    let err = surjection_pipeline(&f, &CubicForm::zero(2), 1, opts).unwrap_err();
    assert_eq!(err.stage, "separable_degenerate");
}

#[test]
fn diagonal_witnesses() {
    let f = gf5();
    assert_eq!(diagonal_cubic(&f, 1), cubic(&f, 3, &[([0, 1, 2], 1)]));
    let c = certify_diagonal_qrank(&f, 1, &Subspace::whole(3)).unwrap();
    assert!(c.nonvanishing());
    let w = default_subspace(&f, 2);
    let c = certify_diagonal_qrank(&f, 2, &w).unwrap();
    assert!(c.nonvanishing());
    verify_diagonal_certificate(&f, &c).unwrap();
    assert!(!diagonal_cubic(&f, 2).restrict(&f, &w).unwrap().is_zero());
}

#[test]
fn three_phase() {
    let f = gf5();
    let e = |m: usize, i: usize| (0..m).map(|j| Scalar((i == j) as u32)).collect::<Vec<_>>();
    let tm = TripleMatrix::new(3, vec![[e(3, 0), e(3, 1), e(3, 2)]]).unwrap();
    let c = three_phase_basis(&f, &tm).unwrap();
    assert_eq!((c.r, c.s, c.t, c.pivot_coefficient), (1, 1, 1, Some(Scalar::ONE)));
    // z2 = x1
    let tm = TripleMatrix::new(5, vec![[e(5, 0), e(5, 1), e(5, 2)], [e(5, 3), e(5, 4), e(5, 0)]]).unwrap();
    let c = three_phase_basis(&f, &tm).unwrap();
    assert_eq!(c.r + c.s + c.t, 5);
    assert_eq!(c.pivot_coefficient, Some(Scalar::ONE));
    verify_phase_certificate(&f, &tm, &c).unwrap();
    // n = 1 with m = 2: three forms of rank 1 cannot span
    let z = vec![Scalar::ZERO; 2];
    let tm = TripleMatrix::new(2, vec![[e(2, 0), e(2, 0), z]]).unwrap();
    assert!(matches!(three_phase_basis(&f, &tm), Err(WitnessError::NotSpanning { .. })));
}

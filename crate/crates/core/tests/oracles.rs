mod common;

use common::*;
use fastr::estimator::update_component;
use fastr::eval::{auc, coefficient_error, mse};
use fastr::{
    frobenius_norm, inner_product, mode_contract, outer_product, predict, projection,
    ridge_solve, soft_threshold, DenseTensor, FactorSet, FitConfig, Matrix,
};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mode_contract_matches_oracle(seed in any::<u64>()) {
        let inst = instance(seed);
        let got = mode_contract(&inst.tensor, &inst.vector, inst.mode).unwrap();
        let (dims, want) = contract_oracle(&inst.tensor, &inst.vector, inst.mode);
        prop_assert_eq!(got.dims(), &dims[..]);
        prop_assert!(max_abs_dev(got.data(), &want) <= TOL);
    }

    #[test]
    fn projection_matches_oracle(seed in any::<u64>()) {
        let inst = instance(seed);
        let got = projection(inst.data.samples(), &inst.factors, inst.mode).unwrap();
        let want = projection_oracle(inst.data.samples(), &inst.factors, inst.mode);
        prop_assert_eq!(got.rows(), want.len());
        for (i, row) in want.iter().enumerate() {
            prop_assert!(max_abs_dev(got.row(i), row) <= TOL);
        }
    }

    #[test]
    fn ridge_matches_elimination(seed in any::<u64>()) {
        let inst = instance(seed);
        let p = projection(inst.data.samples(), &inst.factors, inst.mode).unwrap();
        let got = ridge_solve(&p, inst.data.responses(), inst.epsilon).unwrap();
        let want = ridge_oracle(&matrix_rows(&p), inst.data.responses(), inst.epsilon);
        prop_assert!(max_abs_dev(&got, &want) <= TOL);
    }

    #[test]
    fn update_matches_composed_oracle(seed in any::<u64>()) {
        let inst = instance(seed);
        let cfg = FitConfig::new(inst.lambda, inst.epsilon);
        let got = update_component(&inst.data, &inst.factors, inst.mode, &cfg).unwrap();
        let want = update_oracle(&inst.data, &inst.factors, inst.mode, inst.lambda, inst.epsilon);
        prop_assert!(max_abs_dev(&got, &want) <= TOL);
    }

    #[test]
    fn inner_product_symmetric(seed in any::<u64>()) {
        let a = instance(seed).tensor;
        let b = DenseTensor::new(a.dims().to_vec(), a.data().iter().rev().copied().collect()).unwrap();
        prop_assert_eq!(inner_product(&a, &b).unwrap(), inner_product(&b, &a).unwrap());
    }

    #[test]
    fn full_contraction_equals_inner_product_with_outer(seed in any::<u64>()) {
        let inst = instance(seed);
        let x = inst.data.samples().tensor(0);
        let want = inner_product(&outer_product(&inst.factors), &x).unwrap();
        // contract from the last mode down, the reverse of the library's order
        let mut t = x.clone();
        for m in (0..inst.factors.order()).rev() {
            t = mode_contract(&t, inst.factors.factor(m), m).unwrap();
        }
        prop_assert!((t.data()[0] - want).abs() <= 1e-10);
    }

    #[test]
    fn distinct_mode_contractions_commute(seed in any::<u64>()) {
        let inst = instance(seed);
        let t = &inst.tensor;
        prop_assume!(t.order() >= 2);
        let (a, b) = (0, t.order() - 1);
        let va = inst.factors.factor(a).to_vec();
        let vb = inst.factors.factor(b).to_vec();
        let ab = mode_contract(&mode_contract(t, &va, a).unwrap(), &vb, b - 1).unwrap();
        let ba = mode_contract(&mode_contract(t, &vb, b).unwrap(), &va, a).unwrap();
        prop_assert_eq!(ab.dims(), ba.dims());
        prop_assert!(max_abs_dev(ab.data(), ba.data()) <= 1e-12);
    }

    #[test]
    fn projection_is_linear_in_samples(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let inst = instance(seed);
        let s = inst.data.samples();
        let base = projection(s, &inst.factors, inst.mode).unwrap();
        let scaled = projection(&s.scaled(alpha), &inst.factors, inst.mode).unwrap();
        let want: Vec<f64> = base.data().iter().map(|v| alpha * v).collect();
        prop_assert!(max_abs_dev(scaled.data(), &want) <= 1e-12);
    }

    #[test]
    fn outer_norm_is_product_of_norms(seed in any::<u64>()) {
        let f = instance(seed).factors;
        let want: f64 = f.factors().iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).product();
        prop_assert!((frobenius_norm(&outer_product(&f)) - want).abs() <= 1e-10);
    }

    #[test]
    fn update_has_soft_threshold_structure(seed in any::<u64>()) {
        let inst = instance(seed);
        let cfg = FitConfig::new(inst.lambda, inst.epsilon);
        let out = update_component(&inst.data, &inst.factors, inst.mode, &cfg).unwrap();
        let p = projection(inst.data.samples(), &inst.factors, inst.mode).unwrap();
        let ridge = ridge_solve(&p, inst.data.responses(), inst.epsilon).unwrap();
        for (o, r) in out.iter().zip(&ridge) {
            if *o == 0.0 {
                prop_assert!(r.abs() <= inst.lambda);
            } else {
                prop_assert!(((o + inst.lambda * o.signum()).abs() - r.abs()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn zero_lambda_update_is_ridge(seed in any::<u64>()) {
        let inst = instance(seed);
        let cfg = FitConfig::new(0.0, inst.epsilon);
        let out = update_component(&inst.data, &inst.factors, inst.mode, &cfg).unwrap();
        let p = projection(inst.data.samples(), &inst.factors, inst.mode).unwrap();
        prop_assert_eq!(out, ridge_solve(&p, inst.data.responses(), inst.epsilon).unwrap());
    }

    #[test]
    fn update_bounded_by_epsilon(seed in any::<u64>(), eps in 0.01f64..100.0) {
        let inst = instance(seed);
        let cfg = FitConfig::new(inst.lambda, eps);
        let out = update_component(&inst.data, &inst.factors, inst.mode, &cfg).unwrap();
        let p = projection(inst.data.samples(), &inst.factors, inst.mode).unwrap();
        let pty: Vec<f64> = (0..p.cols())
            .map(|j| (0..p.rows()).map(|i| p.get(i, j) * inst.data.responses()[i]).sum())
            .collect();
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(sup(&out) <= sup(&pty) / eps * (1.0 + 1e-12));
    }

    #[test]
    fn predict_is_linear_in_samples(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let inst = instance(seed);
        let s = inst.data.samples();
        let base = predict(&inst.factors, s).unwrap();
        let scaled = predict(&inst.factors, &s.scaled(alpha)).unwrap();
        let want: Vec<f64> = base.iter().map(|v| alpha * v).collect();
        prop_assert!(max_abs_dev(&scaled, &want) <= 1e-12);
    }

    #[test]
    fn predict_matches_materialized_path(seed in any::<u64>()) {
        let inst = instance(seed);
        let w = outer_product(&inst.factors);
        let s = inst.data.samples();
        let got = predict(&inst.factors, s).unwrap();
        let want: Vec<f64> = (0..s.len()).map(|i| inner_product(&w, &s.tensor(i)).unwrap()).collect();
        prop_assert!(max_abs_dev(&got, &want) <= 1e-10);
    }

    #[test]
    fn soft_threshold_matches_definition(u in prop::collection::vec(-5.0f64..5.0, 0..20), lambda in 0.0f64..3.0) {
        prop_assert_eq!(soft_threshold(&u, lambda).unwrap(), shrink_oracle(&u, lambda));
    }

    #[test]
    fn mse_permutation_invariant(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..30), shift in 0usize..30) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let k = shift % a.len();
        let (mut ra, mut rb) = (a.clone(), b.clone());
        ra.rotate_left(k);
        rb.rotate_left(k);
        ra.reverse();
        rb.reverse();
        let (x, y) = (mse(&a, &b).unwrap(), mse(&ra, &rb).unwrap());
        prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn auc_invariant_under_monotone_transform(
        scores in prop::collection::vec(-3.0f64..3.0, 2..40),
        bits in prop::collection::vec(any::<bool>(), 40),
    ) {
        let mut labels: Vec<bool> = bits[..scores.len()].to_vec();
        labels[0] = true;
        labels[1] = false;
        let transformed: Vec<f64> = scores.iter().map(|s| s.exp() * 2.0 + 1.0).collect();
        prop_assert_eq!(auc(&scores, &labels).unwrap(), auc(&transformed, &labels).unwrap());
    }

    #[test]
    fn ce_of_scaled_truth(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let w = instance(seed).tensor;
        prop_assume!(frobenius_norm(&w) > 0.0);
        let ce = coefficient_error(&w.scaled(alpha), &w).unwrap();
        prop_assert!((ce - (alpha - 1.0).abs()).abs() <= 1e-12);
    }
}

#[test]
fn ridge_fixture_six_by_four() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let y: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p = Matrix::from_rows(&rows).unwrap();
    let got = ridge_solve(&p, &y, 0.1).unwrap();
    assert!(max_abs_dev(&got, &ridge_oracle(&rows, &y, 0.1)) <= 1e-10);
}

#[test]
fn update_fixture_three_modes() {
    use fastr::{Dataset, Samples};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let dims = vec![3, 4, 5];
    let n = 20;
    let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let samples = Samples::new(dims.clone(), n, draw(n * 60)).unwrap();
    let data = Dataset::new(samples, draw(n)).unwrap();
    let f = FactorSet::new(dims.iter().map(|&d| draw(d)).collect()).unwrap();
    for mode in 0..3 {
        let cfg = FitConfig::new(0.05, 0.3);
        let got = update_component(&data, &f, mode, &cfg).unwrap();
        let want = update_oracle(&data, &f, mode, 0.05, 0.3);
        assert!(max_abs_dev(&got, &want) <= 1e-9);
    }
}

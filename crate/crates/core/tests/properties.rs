use ipdhg::operators::{LinearOperator, SparseMatrix};
use ipdhg::prox::{conj_prox_via_moreau, DiagonalMetric};
use ipdhg::validation::random_prox;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn resize(v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| v[i % v.len()]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prox_satisfies_optimality(kind in 0usize..8, seed in any::<u64>(), raw in prop::collection::vec(-10.0f64..10.0, 1..12)) {
        let (phi, d) = random_prox(&mut ChaCha8Rng::seed_from_u64(seed), kind);
        let m = DiagonalMetric::new(d.clone()).unwrap();
        let v = resize(&raw, d.len());
        let p = phi.prox_diag(&v, &m).unwrap();
        // M(v − p) ∈ ∂φ(p)  ⟺  p ∈ ∂φ*(M(v − p))
        let w: Vec<f64> = (0..v.len()).map(|i| d[i] * (v[i] - p[i])).collect();
        let s = phi.conj_subgradient_projection(&w, &p).unwrap();
        let gap: Vec<f64> = p.iter().zip(&s).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&gap) <= 1e-9 * (1.0 + norm(&p)), "{:?}: gap {}", phi, norm(&gap));
        prop_assert!(phi.value(&p).is_finite());
    }

    #[test]
    fn moreau_identity(kind in 0usize..8, seed in any::<u64>(), raw in prop::collection::vec(-10.0f64..10.0, 1..12)) {
        let (phi, d) = random_prox(&mut ChaCha8Rng::seed_from_u64(seed), kind);
        let m = DiagonalMetric::new(d.clone()).unwrap();
        let x = resize(&raw, d.len());
        let p = phi.prox_diag(&x, &m).unwrap();
        let mx: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a * b).collect();
        let q = conj_prox_via_moreau(&phi, &mx, &m).unwrap();
        let res: Vec<f64> = (0..x.len()).map(|i| x[i] - p[i] - q[i] / d[i]).collect();
        prop_assert!(norm(&res) <= 1e-12 * (1.0 + norm(&x)));
    }

    #[test]
    fn prox_is_nonexpansive_in_metric(kind in 0usize..8, seed in any::<u64>(),
        a in prop::collection::vec(-10.0f64..10.0, 12), b in prop::collection::vec(-10.0f64..10.0, 12)) {
        let (phi, d) = random_prox(&mut ChaCha8Rng::seed_from_u64(seed), kind);
        let m = DiagonalMetric::new(d.clone()).unwrap();
        let (v1, v2) = (resize(&a, d.len()), resize(&b, d.len()));
        let (p1, p2) = (phi.prox_diag(&v1, &m).unwrap(), phi.prox_diag(&v2, &m).unwrap());
        let mn = |x: &[f64], y: &[f64]| (0..x.len()).map(|i| d[i] * (x[i] - y[i]).powi(2)).sum::<f64>().sqrt();
        prop_assert!(mn(&p1, &p2) <= mn(&v1, &v2) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn grid_operators_are_adjoint(rows in 1usize..12, cols in 1usize..12, h in 0.1f64..4.0, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..2 * rows * cols).map(|_| rng.gen_range(0.0..1.0)).collect();
        for op in [
            LinearOperator::grad(rows, cols, h).unwrap(),
            LinearOperator::div(rows, cols, h).unwrap(),
            LinearOperator::weighted_grad(rows, cols, h, w.clone()).unwrap(),
        ] {
            let x: Vec<f64> = (0..op.ncols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..op.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ax = op.apply(&x).unwrap();
            let aty = op.apply_adjoint(&y).unwrap();
            let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&aty).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + norm(&ax) * norm(&y)));
        }
    }

    #[test]
    fn sparse_transpose_is_adjoint(trip in prop::collection::vec((0usize..7, 0usize..5, -3.0f64..3.0), 0..30),
        x in prop::collection::vec(-1.0f64..1.0, 5), y in prop::collection::vec(-1.0f64..1.0, 7)) {
        let uniq: std::collections::BTreeMap<(usize, usize), f64> = trip.into_iter().map(|(i, j, v)| ((i, j), v)).collect();
        let s = SparseMatrix::from_triplets(7, 5, uniq.into_iter().map(|((i, j), v)| (i, j, v))).unwrap();
        let a = LinearOperator::Sparse(s.clone());
        let at = LinearOperator::Sparse(s.transpose());
        prop_assert_eq!(a.apply_adjoint(&y).unwrap(), at.apply(&y).unwrap());
        let lhs: f64 = a.apply(&x).unwrap().iter().zip(&y).map(|(p, q)| p * q).sum();
        let rhs: f64 = x.iter().zip(a.apply_adjoint(&y).unwrap()).map(|(p, q)| p * q).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }
}

use ipdhg::operators::{Grid2D, LinearOperator, SparseMatrix};
use ipdhg::precond::{validate_schur, CtVariant};
use ipdhg::problems::synth::{checkerboard, half_blue_green, phantom, solid_rgb};
use ipdhg::problems::{
    add_impulse_noise, ct, emd, graphcut, reference_solve, reference_solve_problem, synth_line_integral_matrix, tvl1,
    GraphCutParams, ReferenceOptions,
};
use ipdhg::prox::ProxFunction;
use ipdhg::solver::{run, SaddleProblem, Status, StopRule};
use ipdhg::Error;
use nalgebra::{Matrix4, Vector4};

fn stop(phi_star: f64, tol: f64, max_outer: usize) -> StopRule {
    StopRule {
        phi_star: Some(phi_star),
        tol_obj: tol,
        max_outer,
        ..StopRule::default()
    }
}

#[test]
fn tvl1_constant_image_is_fixed() {
    let b = Grid2D::from_fn(6, 5, |_, _| 0.3);
    let inst = tvl1(&b, 1.0).unwrap();
    let mut cfg = inst.recommended_config().unwrap();
    cfg.stop.max_outer = 50;
    let res = run(&inst.problem, cfg).unwrap();
    // starting at zero, the iterates must move to b
    let cfg = inst.recommended_config().unwrap().with_stop(stop(0.0, 1e-10, 200_000));
    let res2 = run(&inst.problem, cfg).unwrap();
    assert_eq!(res2.status, Status::Converged);
    assert!(res.final_obj >= res2.final_obj);
}

#[test]
fn tvl1_large_lambda_returns_data() {
    let b = add_impulse_noise(&checkerboard(8, 8, 2, 0.2, 0.8), 0.15, 3).unwrap();
    let inst = tvl1(&b, 1e6).unwrap();
    let opts = ReferenceOptions {
        tau: 1e-5,
        ..ReferenceOptions::for_instance(&inst)
    };
    let sol = reference_solve_problem(&inst.problem, 1e-13, &opts).unwrap();
    for (u, v) in sol.x.iter().zip(b.values()) {
        assert!((u - v).abs() < 1e-6, "{u} vs {v}");
    }
}

#[test]
fn tvl1_checkerboard_reaches_reference() {
    let b = add_impulse_noise(&checkerboard(8, 8, 2, 0.2, 0.8), 0.15, 7).unwrap();
    let inst = tvl1(&b, 1.0).unwrap();
    let sol = reference_solve(&inst, 1e-12).unwrap();
    assert!(sol.certified);
    let cfg = inst.iprepdhg_config(0.01, 1).unwrap().with_stop(stop(sol.phi, 1e-6, 200_000));
    let res = run(&inst.problem, cfg).unwrap();
    assert_eq!(res.status, Status::Converged);
    assert!((res.final_obj - sol.phi).abs() <= 1e-6 * sol.phi);
}

/// Vertex enumeration: a convex piecewise-linear function attains its minimum
/// where four independent kink hyperplanes meet.
fn tvl1_2x2_enumerated(b: [f64; 4], lambda: f64) -> f64 {
    // pixel order (0,0), (0,1), (1,0), (1,1)
    let mut planes: Vec<([f64; 4], f64)> = Vec::new();
    for i in 0..4 {
        let mut a = [0.0; 4];
        a[i] = 1.0;
        planes.push((a, b[i]));
    }
    for (p, q) in [(0, 2), (1, 3), (0, 1), (2, 3)] {
        let mut a = [0.0; 4];
        a[p] = 1.0;
        a[q] = -1.0;
        planes.push((a, 0.0));
    }
    let phi = |u: &[f64; 4]| -> f64 {
        let tv = (u[2] - u[0]).abs() + (u[3] - u[1]).abs() + (u[1] - u[0]).abs() + (u[3] - u[2]).abs();
        tv + lambda * u.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    };
    let mut best = f64::INFINITY;
    let k = planes.len();
    for a in 0..k {
        for bb in a + 1..k {
            for c in bb + 1..k {
                for d in c + 1..k {
                    let sel = [a, bb, c, d];
                    let m = Matrix4::from_fn(|r, col| planes[sel[r]].0[col]);
                    let rhs = Vector4::from_fn(|r, _| planes[sel[r]].1);
                    if let Some(u) = m.lu().solve(&rhs) {
                        if u.iter().all(|v| v.is_finite()) {
                            best = best.min(phi(&[u[0], u[1], u[2], u[3]]));
                        }
                    }
                }
            }
        }
    }
    best
}

#[test]
fn reference_matches_vertex_enumeration_2x2() {
    let b = Grid2D::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
    let inst = tvl1(&b, 1.0).unwrap();
    let sol = reference_solve(&inst, 1e-12).unwrap();
    let oracle = tvl1_2x2_enumerated([0.0, 1.0, 0.0, 1.0], 1.0);
    assert!((sol.phi - oracle).abs() < 1e-9, "{} vs {oracle}", sol.phi);

    let b = Grid2D::from_rows(&[vec![0.9, 0.1], vec![0.4, 0.3]]).unwrap();
    let inst = tvl1(&b, 0.7).unwrap();
    let sol = reference_solve(&inst, 1e-12).unwrap();
    let oracle = tvl1_2x2_enumerated([0.9, 0.1, 0.4, 0.3], 0.7);
    assert!((sol.phi - oracle).abs() < 1e-9, "{} vs {oracle}", sol.phi);
}

#[test]
fn reference_one_dimensional_abs() {
    let f = ProxFunction::L1 {
        weight: 1.0,
        shift: vec![1.0],
    };
    let a = LinearOperator::Sparse(SparseMatrix::identity(1));
    let p = SaddleProblem::new(f, ProxFunction::zero(1), a).unwrap();
    let opts = ReferenceOptions {
        tau: 0.5,
        p: 1,
        max_outer: 10_000,
        time_budget_s: None,
    };
    let sol = reference_solve_problem(&p, 1e-12, &opts).unwrap();
    assert!(sol.phi.abs() < 1e-12);
    assert!((sol.x[0] - 1.0).abs() < 1e-12);
}

#[test]
fn reference_is_idempotent() {
    let b = add_impulse_noise(&checkerboard(4, 4, 2, 0.0, 1.0), 0.2, 1).unwrap();
    let inst = tvl1(&b, 0.8).unwrap();
    let sol = reference_solve(&inst, 1e-12).unwrap();
    let cfg = inst.recommended_config().unwrap();
    let mut solver = ipdhg::solver::Solver::new(&inst.problem, cfg).unwrap();
    solver.set_state(sol.x.clone(), sol.z.clone()).unwrap();
    for _ in 0..20 {
        solver.step().unwrap();
    }
    let drift: f64 = solver.state.x.iter().zip(&sol.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-9, "{drift}");
}

#[test]
fn graphcut_solid_colors() {
    for (color, want) in [([0.0, 0.0, 1.0], 1.0), ([0.0, 1.0, 0.0], 0.0)] {
        let inst = graphcut(&solid_rgb(6, 6, color), GraphCutParams::default()).unwrap();
        let w: f64 = match &inst.problem.f {
            ProxFunction::LinearPlusBox { linear, .. } => linear[0],
            _ => unreachable!(),
        };
        assert!(if want == 1.0 { w < 0.0 } else { w > 0.0 });
        let phi_star = 36.0 * w.min(0.0);
        let cfg = inst.recommended_config().unwrap().with_stop(stop(phi_star, 1e-10, 100_000));
        let res = run(&inst.problem, cfg).unwrap();
        assert_eq!(res.status, Status::Converged);
        for u in &res.state.x {
            assert!((u - want).abs() < 1e-6);
        }
    }
}

#[test]
fn graphcut_half_image_segments() {
    let img = half_blue_green(16, 16);
    let inst = graphcut(&img, GraphCutParams::default()).unwrap();
    let sol = reference_solve(&inst, 1e-13).unwrap();
    let cfg = inst.recommended_config().unwrap().with_stop(stop(sol.phi, 1e-8, 200_000));
    let res = run(&inst.problem, cfg).unwrap();
    assert_eq!(res.status, Status::Converged);
    for i in 0..16 {
        for j in 0..16 {
            let blue = img[2].get(i, j) > 0.5;
            let u = res.state.x[i * 16 + j];
            assert_eq!(u > 0.5, blue, "pixel ({i},{j}) = {u}");
        }
    }
}

#[test]
fn graphcut_rejects_non_rgb() {
    let g = Grid2D::zeros(3, 3);
    assert!(matches!(
        graphcut(&[g.clone(), g], GraphCutParams::default()),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn emd_equal_marginals_is_zero() {
    let r = Grid2D::from_fn(5, 5, |i, j| 1.0 + (i * j) as f64);
    let inst = emd(&r, &r, 1.0).unwrap();
    let sol = reference_solve(&inst, 1e-12).unwrap();
    assert!(sol.phi.abs() < 1e-10);
}

#[test]
fn emd_neighbouring_point_masses() {
    // 1×2 grid, unit masses one cell apart: EMD equals the grid step
    let r0 = Grid2D::from_rows(&[vec![1.0, 0.0]]).unwrap();
    let r1 = Grid2D::from_rows(&[vec![0.0, 1.0]]).unwrap();
    for h in [1.0, 0.25] {
        let inst = emd(&r0, &r1, h).unwrap();
        let sol = reference_solve(&inst, 1e-13).unwrap();
        assert!((sol.phi - h).abs() < 1e-8, "h={h}: {}", sol.phi);
        assert!(sol.feas < 1e-8);
    }
}

#[test]
fn emd_rejects_mass_mismatch() {
    let r0 = Grid2D::from_fn(3, 3, |_, _| 1.0);
    let r1 = Grid2D::from_fn(3, 3, |_, _| 1.1);
    assert!(matches!(emd(&r0, &r1, 1.0), Err(Error::InfeasibleMarginals(_))));
}

#[test]
fn ct_identity_recovers_image() {
    let u = phantom(6, 6);
    let r = SparseMatrix::identity(36);
    let inst = ct(r, u.values(), 1e-8, 6, 6, CtVariant::Norm).unwrap();
    let sol = reference_solve(&inst, 1e-12).unwrap();
    // f = 0, so the primal iterate x carries the image
    for (a, b) in sol.x.iter().zip(u.values()) {
        assert!((a - b).abs() < 1e-4);
    }
}

#[test]
fn ct_phantom_reaches_reference() {
    let u = phantom(16, 16);
    let r = synth_line_integral_matrix(16, 16, 6, 10, 5).unwrap();
    let b = r_apply(&r, u.values());
    let inst = ct(r, &b, 0.01, 16, 16, CtVariant::Norm).unwrap();
    let sol = reference_solve(&inst, 1e-11).unwrap();
    assert!(sol.certified);
    let cfg = inst.iprepdhg_config(1.0, 2).unwrap().with_stop(stop(sol.phi, 1e-4, 200_000));
    let res = run(&inst.problem, cfg).unwrap();
    assert_eq!(res.status, Status::Converged);
    assert!((res.final_obj - sol.phi).abs() <= 1e-4 * sol.phi);
}

#[test]
fn ct_norm_precond_is_schur_valid() {
    let r = synth_line_integral_matrix(8, 8, 6, 10, 2).unwrap();
    let b = vec![0.0; r.rows()];
    for variant in [CtVariant::Norm, CtVariant::RowSum] {
        let inst = ct(r.clone(), &b, 0.1, 8, 8, variant).unwrap();
        let (m1, m2) = inst.prepdhg_pair(0.01).unwrap();
        let rep = validate_schur(&m1, &m2, &inst.problem.a).unwrap();
        assert!(rep.valid, "{variant:?}: {}", rep.min_eig);
    }
}

#[test]
fn ct_rejects_bad_dims() {
    let r = SparseMatrix::identity(10);
    assert!(matches!(
        ct(r, &[0.0; 10], 0.1, 3, 3, CtVariant::Norm),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn recommended_configs_are_schur_valid() {
    let b = checkerboard(8, 8, 2, 0.0, 1.0);
    let insts = vec![
        tvl1(&b, 1.0).unwrap(),
        graphcut(&half_blue_green(8, 8), GraphCutParams::default()).unwrap(),
        emd(&b, &Grid2D::from_fn(8, 8, |i, j| if (i + j) % 2 == 0 { 1.0 } else { 0.0 }), 1.0).unwrap(),
    ];
    for inst in insts {
        let cfg = inst.recommended_config().unwrap();
        let rep = validate_schur(cfg.m1.as_ref().unwrap(), cfg.m2.as_ref().unwrap(), &inst.problem.a).unwrap();
        assert!(rep.valid, "{}: {}", inst.name(), rep.min_eig);
    }
}

fn r_apply(r: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    LinearOperator::Sparse(r.clone()).apply(x).unwrap()
}

mod common;

use common::*;
use dgadapt::adaptivity::{weighted_dofs, StepRecord, Tolerances};
use dgadapt::dg::space::DGSpace;
use dgadapt::geometry::Rect;
use dgadapt::mesh::Mesh;
use dgadapt::problems::{example1, example2, example3, Example1Params, Example3Params};
use proptest::prelude::*;
use std::sync::Arc;

fn marks() -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0usize..10_000, 1..6), 0..5)
}

fn quadratic() -> impl Strategy<Value = Quadratic> {
    prop::array::uniform6(-2.0f64..2.0).prop_map(Quadratic)
}

fn check(c: Check) -> Result<(), TestCaseError> {
    c.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn refinement_keeps_the_mesh_conforming(n in 1usize..4, m in marks()) {
        let mesh = refined_mesh(n, &m);
        check(conforming(&mesh, 1.0))?;
    }

    #[test]
    fn refinement_is_undone_by_coarsening(n in 1usize..3, m in marks()) {
        let coarse = Mesh::build_structured(Rect::unit(), n, n).unwrap();
        let mut fine = coarse.clone();
        for round in &m {
            let picked: Vec<usize> = round.iter().map(|i| i % fine.num_cells()).collect();
            fine = fine.refine(&picked).unwrap();
        }
        check(round_trip(&coarse, &fine))?;
    }

    #[test]
    fn quadratics_are_reproduced(m in marks(), q in quadratic(), eps in 1e-3f64..1.0, bx in -1.0f64..1.0, by in -1.0f64..1.0) {
        let mesh = refined_mesh(2, &m);
        check(patch_test(&mesh, q, eps, [bx, by]))?;
    }

    #[test]
    fn stiffness_without_convection_is_symmetric(m in marks(), eps in 1e-4f64..10.0, k in 1usize..4) {
        check(symmetric_without_convection(&refined_mesh(2, &m), eps, k))?;
    }

    #[test]
    fn mass_matches_the_l2_norm(m in marks(), k in 1usize..4, c in prop::collection::vec(-5.0f64..5.0, 1..20)) {
        check(mass_spd(&refined_mesh(1, &m), k, &c))?;
    }

    #[test]
    fn norms_and_indicator_are_homogeneous(c in prop::collection::vec(-3.0f64..3.0, 1..30), s in -10.0f64..10.0) {
        let space = DGSpace::new(Arc::new(refined_mesh(2, &[vec![0, 3]])), 2).unwrap();
        let coeffs: Vec<f64> = (0..space.dof()).map(|i| c[i % c.len()] * (1.0 + i as f64).sin()).collect();
        let v = space.from_coeffs(coeffs).unwrap();
        check(norms_homogeneous(&v, s))?;
        check(indicator_homogeneous(&v, s))?;
    }

    #[test]
    fn indicator_vanishes_for_exact_quadratics(m in marks(), q in quadratic(), eps in 1e-3f64..1.0) {
        check(indicator_zero_for_exact(&refined_mesh(2, &m), q, eps, [1.0, -0.5]))?;
    }

    #[test]
    fn reaction_jacobians_match_finite_differences(u1 in 0.0f64..2.0, u2 in 0.0f64..2.0, v in -1.0f64..1.0) {
        let p1 = example1(&Example1Params::default());
        check(jacobian_matches_fd(&p1, &[v]))?;
        check(jacobian_matches_fd(&example2(&Default::default()), &[u1, u2]))?;
        check(jacobian_matches_fd(&example3(&Example3Params::default()), &[u1]))?;
    }

    #[test]
    fn marking_respects_thresholds(
        values in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 12), 1..4),
        plus in 0.01f64..1.0,
        ratio in 0.0f64..0.99,
    ) {
        let tol = Tolerances { ttol: 1.0, stol_plus: plus, stol_minus: ratio * plus };
        check(marking_consistent(&values, &tol))?;
    }

    #[test]
    fn weighted_dofs_lie_between_extremes(d in prop::collection::vec((1usize..1000, 0.01f64..1.0), 1..10)) {
        let mut t = 0.0;
        let records: Vec<StepRecord> = d.iter().enumerate().map(|(i, &(dofs, tau))| {
            t += tau;
            StepRecord { step: i + 1, t, tau, union_dofs: dofs, dofs, ..StepRecord::default() }
        }).collect();
        let w = weighted_dofs(&records, t).unwrap();
        let lo = d.iter().map(|p| p.0).min().unwrap() as f64;
        let hi = d.iter().map(|p| p.0).max().unwrap() as f64;
        prop_assert!(w >= lo * (1.0 - 1e-12) && w <= hi * (1.0 + 1e-12));
    }
}

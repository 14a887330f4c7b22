use dde_core::data::kdtree::KdTree;
use dde_core::data::{AffineGraphBranch, LocalDataSet, PointCloudDataSet, TwoWellDataSet};
use dde_core::fem::{assemble, markers, BoundaryData, Mesh};
use dde_core::relax::acoustic::{alpha_hat, c_hat, connection_stress};
use dde_core::relax::{alpha_range, rank_one_decompose, RelaxedMembership, RelaxedTwoWell, TwoWellRelaxation};
use dde_core::solver::{solve_data_driven, Init, SolverConfig};
use dde_core::{local_sq_distance, local_sq_norm, ElasticityTensor, Execution, LocalState, SymMatrix};
use proptest::prelude::*;

fn sym(dim: usize, v: &[f64]) -> SymMatrix {
    SymMatrix::from_packed(dim, &v[..dim * (dim + 1) / 2]).unwrap()
}

fn state(dim: usize, v: &[f64]) -> LocalState {
    let m = dim * (dim + 1) / 2;
    LocalState { eps: sym(dim, v), sig: sym(dim, &v[m..]) }
}

fn spd(dim: usize, v: &[f64]) -> ElasticityTensor {
    let m = dim * (dim + 1) / 2;
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| (0..m).map(|k| v[i * m + k] * v[j * m + k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 }).collect())
        .collect();
    ElasticityTensor::from_voigt(dim, &rows).unwrap()
}

fn unit2(theta: f64) -> Vec<f64> {
    vec![theta.cos(), theta.sin()]
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn nonzero_b() -> impl Strategy<Value = Vec<f64>> {
    coeffs(3).prop_filter("b away from zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 0.05)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_distance_is_a_metric(c in coeffs(9), a in coeffs(6), b in coeffs(6), d in coeffs(6)) {
        let c = spd(2, &c);
        let (a, b, d) = (state(2, &a), state(2, &b), state(2, &d));
        let dist = |x: &LocalState, y: &LocalState| local_sq_distance(x, y, &c).unwrap().sqrt();
        prop_assert!(dist(&a, &d) <= dist(&a, &b) + dist(&b, &d) + 1e-12);
        let n = |x: &LocalState| local_sq_norm(x, &c).unwrap();
        let lhs = n(&(a + b)) + n(&(a - b));
        let rhs = 2.0 * n(&a) + 2.0 * n(&b);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn kd_tree_matches_brute_force(pts in prop::collection::vec(-5.0f64..5.0, 3..300), q in coeffs(3)) {
        let n = pts.len() / 3 * 3;
        let tree = KdTree::build(3, pts[..n].to_vec());
        let fast = tree.nearest(&q).unwrap();
        let slow = tree.nearest_brute_force(&q).unwrap();
        prop_assert_eq!(fast.1, slow.1);
    }

    #[test]
    fn cloud_nearest_matches_brute_force(pts in prop::collection::vec(-2.0f64..2.0, 6..240), q in coeffs(6)) {
        let c = ElasticityTensor::isotropic(2, 1.0, 0.5).unwrap();
        let states: Vec<LocalState> = pts.chunks_exact(6).map(|v| state(2, v)).collect();
        let cloud = PointCloudDataSet::new(states, c.clone()).unwrap();
        let z = state(2, &q);
        prop_assert_eq!(cloud.nearest(&z, &c).unwrap().d2, cloud.nearest_brute_force(&z).unwrap().d2);
    }

    #[test]
    fn graph_projection_beats_other_members(c in coeffs(9), z in coeffs(6), e in coeffs(3)) {
        let c = spd(2, &c);
        let g = AffineGraphBranch::linear(c.clone());
        let z = state(2, &z);
        let near = g.nearest(&z, &c).unwrap();
        let other = g.point_at(&sym(2, &e));
        prop_assert!(near.d2 <= local_sq_distance(&z, &other, &c).unwrap() + 1e-12);
    }

    #[test]
    fn c_hat_is_optimal(c in coeffs(9), b in nonzero_b(), theta in 0.0f64..3.2, w in coeffs(2)) {
        let (c, b, nu) = (spd(2, &c), sym(2, &b), unit2(theta));
        let best = alpha_hat(&c, &b, &nu).unwrap();
        let other = c.energy(&(SymMatrix::sym_outer(&w, &nu) - b));
        prop_assert!(best <= other + 1e-12 * (1.0 + other));
    }

    #[test]
    fn connection_stress_identity(c in coeffs(9), b in nonzero_b(), theta in 0.0f64..3.2) {
        let (c, b, nu) = (spd(2, &c), sym(2, &b), unit2(theta));
        let ch = c_hat(&c, &b, &nu).unwrap();
        let s = connection_stress(&c, &b, &nu, &ch);
        let a = alpha_hat(&c, &b, &nu).unwrap();
        prop_assert!((s.dot(&b) + a).abs() <= 1e-10 * (1.0 + a));
        prop_assert!(s.mul_vec(&nu).iter().all(|x| x.abs() <= 1e-10 * (1.0 + a)));
    }

    #[test]
    fn rank_one_split_of_interior_points(c in coeffs(9), b in nonzero_b(), s in coeffs(3), mu in -0.99f64..0.99, t in -0.99f64..0.99) {
        let rx = TwoWellRelaxation::new(spd(2, &c), sym(2, &b), Execution::Sequential).unwrap();
        let s = sym(2, &s);
        let target = -rx.alpha_minus * mu + t * (rx.cbb - rx.alpha_minus);
        let s = s + rx.b.scale((target - s.dot(&rx.b)) / rx.b.dot(&rx.b));
        let z = rx.state_at(s, mu);
        let d = rank_one_decompose(&rx, &z, 1e-9).unwrap();
        prop_assert!(d.reconstruction_error(&z) < 1e-9);
        prop_assert!(d.connection_residual() < 1e-9);
        prop_assert_eq!(rx.membership(&d.z_plus, 1e-8), RelaxedMembership::InDlocPlus);
        prop_assert_eq!(rx.membership(&d.z_minus, 1e-8), RelaxedMembership::InDlocMinus);
    }

    #[test]
    fn unequal_wells_reduce_by_translation(a in coeffs(3), b in nonzero_b(), w in -0.5f64..0.5, e in prop::collection::vec(-3.0f64..3.0, 3)) {
        let c = ElasticityTensor::identity(2);
        let (a, b) = (sym(2, &a), sym(2, &b));
        prop_assume!((b - a).norm() > 0.2);
        let set = TwoWellDataSet::new(c, a, b, w).unwrap();
        let rel = RelaxedTwoWell::from_set(&set, Execution::Sequential).unwrap();
        let e = sym(2, &e);
        for (k, branch) in set.branches().iter().enumerate() {
            let z = branch.point_at(&e);
            if branch.halfspace().map_or(true, |h| h.admits(&z.eps, 0.0)) {
                let expect = if k == 0 { RelaxedMembership::InDlocMinus } else { RelaxedMembership::InDlocPlus };
                let zn = (z.eps.norm().powi(2) + z.sig.norm().powi(2)).sqrt();
                prop_assert_eq!(rel.membership(&z, 1e-9 * (1.0 + zn)), expect);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn alpha_scales_quadratically(b in nonzero_b(), s in 0.2f64..3.0) {
        let c = ElasticityTensor::isotropic(2, 1.0, 0.7).unwrap();
        let b = sym(2, &b);
        let r1 = alpha_range(&c, &b, Execution::Parallel).unwrap();
        let r2 = alpha_range(&c, &b.scale(s), Execution::Parallel).unwrap();
        let tol = 1e-8 * (1.0 + r2.alpha_plus);
        prop_assert!((r2.alpha_minus - s * s * r1.alpha_minus).abs() <= tol);
        prop_assert!((r2.alpha_plus - s * s * r1.alpha_plus).abs() <= tol);
    }

    #[test]
    fn alpha_is_even_in_b(b in nonzero_b()) {
        let c = ElasticityTensor::isotropic(2, 0.5, 1.0).unwrap();
        let b = sym(2, &b);
        let p = alpha_range(&c, &b, Execution::Sequential).unwrap();
        let m = alpha_range(&c, &b.scale(-1.0), Execution::Sequential).unwrap();
        prop_assert!((p.alpha_minus - m.alpha_minus).abs() <= 1e-10 * (1.0 + p.alpha_minus));
        prop_assert!((p.alpha_plus - m.alpha_plus).abs() <= 1e-10 * (1.0 + p.alpha_plus));
        prop_assert!(p.alpha_minus <= p.alpha_plus);
    }

    #[test]
    fn solver_trace_never_increases(eps_bar in -2.0f64..2.0, f in -2.0f64..2.0, sigma0 in 0.1f64..2.0, seed in 0u64..1000) {
        let mesh = Mesh::bar1d(12, 1.0).unwrap();
        let bc = BoundaryData::new()
            .fix(&mesh, markers::LEFT, 0, 0.0).unwrap()
            .fix(&mesh, markers::RIGHT, 0, eps_bar).unwrap()
            .uniform_body_force(&mesh, &[f]).unwrap();
        let space = assemble(&mesh, &ElasticityTensor::scalar(1.0).unwrap(), &bc).unwrap();
        let set = TwoWellDataSet::one_dim(1.0, sigma0).unwrap();
        for init in [Init::Classical, Init::Zero, Init::Random] {
            let r = solve_data_driven(&space, &set, &SolverConfig { init, seed, ..Default::default() }).unwrap();
            prop_assert!(r.trace.windows(2).all(|w| w[1] <= w[0] + 1e-14), "{:?}", r.trace);
        }
    }
}

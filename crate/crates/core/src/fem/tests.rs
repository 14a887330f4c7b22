use super::*;
use crate::error::Error;
use crate::phase::{field_sq_distance, field_sq_norm, LocalState, StateField};
use crate::tensor::{ElasticityTensor, SymMatrix};

fn bar(n: usize, c: f64, right: f64) -> DiscreteConstraintSpace {
    let mesh = Mesh::bar1d(n, 1.0).unwrap();
    let bc = BoundaryData::new().fix(&mesh, markers::LEFT, 0, 0.0).unwrap().fix(&mesh, markers::RIGHT, 0, right).unwrap();
    assemble(&mesh, &ElasticityTensor::scalar(c).unwrap(), &bc).unwrap()
}

fn rect(n: usize) -> DiscreteConstraintSpace {
    let mesh = Mesh::rect2d(n, n, 1.0, 1.0).unwrap();
    let bc = BoundaryData::new()
        .clamp(&mesh, markers::LEFT, &[0.0, 0.0])
        .unwrap()
        .traction(&mesh, markers::RIGHT, &[1.0, 0.0])
        .unwrap();
    assemble(&mesh, &ElasticityTensor::identity(2), &bc).unwrap()
}

fn random_field(space: &DiscreteConstraintSpace, seed: u64) -> StateField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dim = space.stiffness().dim();
    let m = space.stiffness().size();
    let states = (0..space.n_elements())
        .map(|_| {
            let e: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            LocalState::new(SymMatrix::from_packed(dim, &e).unwrap(), SymMatrix::from_packed(dim, &s).unwrap()).unwrap()
        })
        .collect();
    StateField::new(states, space.weights().to_vec(), space.stiffness().clone()).unwrap()
}

#[test]
fn two_element_bar_stiffness() {
    let s = bar(2, 1.0, 0.0);
    assert_eq!(s.n_free(), 1);
    assert!((s.k_free_dense()[0][0] - 4.0).abs() < 1e-14);
}

#[test]
fn homogeneous_data_gives_zero_solution() {
    let s = bar(5, 1.0, 0.0);
    let z = s.solve_classical().unwrap();
    assert_eq!(field_sq_norm(&z), 0.0);
    let p = s.project_onto_e(&s.zero_field()).unwrap();
    assert_eq!(field_sq_norm(&p), 0.0);
}

#[test]
fn two_triangle_square_is_spd() {
    let mesh = Mesh::new(
        2,
        vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
        vec![vec![0, 1, 2], vec![0, 2, 3]],
        vec![BoundaryFacet { nodes: vec![3, 0], marker: markers::LEFT }],
    )
    .unwrap();
    let bc = BoundaryData::new().clamp(&mesh, markers::LEFT, &[0.0, 0.0]).unwrap();
    let s = assemble(&mesh, &ElasticityTensor::identity(2), &bc).unwrap();
    let k = s.k_free_dense();
    let n = k.len();
    let eig = nalgebra::DMatrix::from_fn(n, n, |i, j| k[i][j]).symmetric_eigen();
    assert!(eig.eigenvalues.iter().all(|v| *v > 1e-10));
}

#[test]
fn uniform_strain_bar() {
    let s = bar(20, 2.0, 0.5);
    let z = s.solve_classical().unwrap();
    for st in z.states() {
        assert!((st.eps.packed()[0] - 0.5).abs() < 1e-13);
        assert!((st.sig.packed()[0] - 1.0).abs() < 1e-13);
    }
}

#[test]
fn body_force_bar_matches_midpoint_strain() {
    let mesh = Mesh::bar1d(10, 1.0).unwrap();
    let bc = BoundaryData::new()
        .fix(&mesh, markers::LEFT, 0, 0.0)
        .unwrap()
        .fix(&mesh, markers::RIGHT, 0, 0.0)
        .unwrap()
        .uniform_body_force(&mesh, &[1.0])
        .unwrap();
    let s = assemble(&mesh, &ElasticityTensor::scalar(1.0).unwrap(), &bc).unwrap();
    let z = s.solve_classical().unwrap();
    for (e, st) in z.states().iter().enumerate() {
        let x = mesh.centroid(e)[0];
        assert!((st.eps.packed()[0] - (0.5 - x)).abs() < 1e-13, "element {e}");
    }
}

#[test]
fn projection_of_constant_target_on_fixed_bar() {
    let s = bar(8, 1.0, 0.3);
    let target = StateField::new(vec![LocalState::scalar(1.7, -0.4); 8], s.weights().to_vec(), s.stiffness().clone()).unwrap();
    let p = s.project_onto_e(&target).unwrap();
    for st in p.states() {
        assert!((st.eps.packed()[0] - 0.3).abs() < 1e-13);
        assert!((st.sig.packed()[0] + 0.4).abs() < 1e-13);
    }
}

#[test]
fn projection_is_idempotent_and_satisfies_constraints() {
    for s in [bar(13, 2.0, 0.5), rect(3)] {
        let t = random_field(&s, 5);
        let p = s.project_onto_e(&t).unwrap();
        let r = s.residuals(&p).unwrap();
        assert!(r.compat < 1e-10 && r.equil < 1e-10, "{r:?}");
        let pp = s.project_onto_e(&p).unwrap();
        assert!(field_sq_distance(&p, &pp).unwrap().sqrt() < 1e-12 * (1.0 + field_sq_norm(&p).sqrt()));
    }
}

#[test]
fn projection_minimizes_distance() {
    let s = rect(2);
    let t = random_field(&s, 9);
    let p = s.project_onto_e(&t).unwrap();
    let d0 = field_sq_distance(&t, &p).unwrap();
    let classical = s.solve_classical().unwrap();
    assert!(d0 <= field_sq_distance(&t, &classical).unwrap());
    // Perturb within the constraint set: classical + (p − classical) scaled.
    for a in [0.9, 1.1, 0.5] {
        let q = classical.add(&p.sub(&classical).unwrap().scale(a)).unwrap();
        assert!(d0 <= field_sq_distance(&t, &q).unwrap() + 1e-14);
    }
}

#[test]
fn pythagoras_for_homogeneous_data() {
    let mesh = Mesh::rect2d(3, 2, 1.0, 1.0).unwrap();
    let bc = BoundaryData::new().clamp(&mesh, markers::LEFT, &[0.0, 0.0]).unwrap();
    let s = assemble(&mesh, &ElasticityTensor::isotropic(2, 1.0, 0.8).unwrap(), &bc).unwrap();
    let t = random_field(&s, 1);
    let p = s.project_onto_e(&t).unwrap();
    let lhs = field_sq_norm(&t);
    let rhs = field_sq_norm(&p) + field_sq_distance(&t, &p).unwrap();
    assert!((lhs - rhs).abs() <= 1e-10 * lhs);
}

#[test]
fn power_identity() {
    let s = rect(3);
    let t = random_field(&s, 2);
    let pr = s.project_detailed(&t).unwrap();
    let internal: f64 =
        pr.field.states().iter().zip(s.weights()).map(|(z, w)| w * z.sig.dot(&z.eps)).sum();
    let external = s.external_work(&pr.displacement, &pr.field);
    assert!((internal - external).abs() <= 1e-10 * internal.abs().max(1.0));
}

#[test]
fn residuals_detect_violations() {
    let s = rect(2);
    let z = s.solve_classical().unwrap();
    let r = s.residuals(&z).unwrap();
    assert!(r.compat < 1e-10 && r.equil < 1e-10);
    let constant = StateField::new(
        vec![LocalState::new(SymMatrix::zeros(2), SymMatrix::diag(&[0.0, 1.0]).unwrap()).unwrap(); s.n_elements()],
        s.weights().to_vec(),
        s.stiffness().clone(),
    )
    .unwrap();
    assert!(s.residuals(&constant).unwrap().equil > 1e-3);
}

#[test]
fn helmholtz_orthogonality() {
    assert!(bar(2, 1.0, 0.0).helmholtz_orthogonality_check(20, 3).unwrap() < 1e-12);
    assert!(rect(4).helmholtz_orthogonality_check(50, 4).unwrap() < 1e-10);
}

#[test]
fn mechanism_is_reported_with_null_direction() {
    let mesh = Mesh::rect2d(2, 2, 1.0, 1.0).unwrap();
    let bc = BoundaryData::new().fix(&mesh, markers::LEFT, 0, 0.0).unwrap();
    match assemble(&mesh, &ElasticityTensor::identity(2), &bc) {
        Err(Error::Mechanism { null_direction }) => {
            // Rigid translation in y: every y dof equal, x dofs zero.
            let ys: Vec<f64> = null_direction.iter().skip(1).step_by(2).copied().collect();
            let xs_norm: f64 = null_direction.iter().step_by(2).map(|v| v * v).sum::<f64>();
            let spread = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ys.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(xs_norm < 1e-16 && spread < 1e-8, "{null_direction:?}");
        }
        other => panic!("expected a mechanism, got {other:?}"),
    }
}

#[test]
fn conjugate_gradient_matches_cholesky() {
    let mesh = Mesh::rect2d(4, 3, 2.0, 1.0).unwrap();
    let bc = BoundaryData::new()
        .clamp(&mesh, markers::LEFT, &[0.0, 0.0])
        .unwrap()
        .traction(&mesh, markers::TOP, &[0.0, -0.5])
        .unwrap();
    let c = ElasticityTensor::isotropic(2, 2.0, 1.0).unwrap();
    let a = DiscreteConstraintSpace::assemble_with(&mesh, &c, &bc, LinearSolver::Cholesky).unwrap();
    let b = DiscreteConstraintSpace::assemble_with(&mesh, &c, &bc, LinearSolver::cg()).unwrap();
    let za = a.solve_classical().unwrap();
    let zb = b.solve_classical().unwrap();
    assert!(field_sq_distance(&za, &zb).unwrap().sqrt() < 1e-9 * field_sq_norm(&za).sqrt());
}

#[test]
fn assembly_is_bit_reproducible() {
    let a = rect(3);
    let b = rect(3);
    assert_eq!(a, b);
    assert_eq!(a.solve_classical().unwrap(), b.solve_classical().unwrap());
}

#[test]
fn dimension_checks() {
    let mesh = Mesh::bar1d(2, 1.0).unwrap();
    let bc = BoundaryData::new().fix(&mesh, markers::LEFT, 0, 0.0).unwrap();
    assert!(assemble(&mesh, &ElasticityTensor::identity(2), &bc).is_err());
    let s = bar(2, 1.0, 0.0);
    let wrong = StateField::zeros(vec![1.0; 3], ElasticityTensor::scalar(1.0).unwrap()).unwrap();
    assert!(s.project_onto_e(&wrong).is_err());
}

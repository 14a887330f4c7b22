//! The discrete constraint set: compatible strains `ε = Bu` with Dirichlet
//! data and stresses in weak equilibrium `[BᵀWσ]_free = F_free`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::phase::{LocalState, StateField};
use crate::tensor::{packed_len, ElasticityTensor, SymMatrix};

use super::boundary::BoundaryData;
use super::linsolve::{conjugate_gradient, CsrMatrix, LinearSolver, SkylineCholesky};
use super::mesh::Mesh;

/// Pivot threshold relative to the largest diagonal entry.
pub const PIVOT_TOL: f64 = 1e-12;

/// Largest free-dof count for which a mechanism's null direction is computed
/// by a dense eigen-solve.
pub const DENSE_NULLSPACE_LIMIT: usize = 3000;

#[derive(Debug, Clone, PartialEq)]
struct ElementB {
    dofs: Vec<usize>,
    /// `m × dofs.len()`, row-major, producing engineering strain.
    b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Factor {
    Cholesky(Option<SkylineCholesky>),
    Cg { rel_tol: f64, max_iter: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteConstraintSpace {
    mesh: Mesh,
    c: ElasticityTensor,
    bc: BoundaryData,
    elems: Vec<ElementB>,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
    lift: Vec<f64>,
    load: Vec<f64>,
    k_ff: CsrMatrix,
    factor: Factor,
    solver: LinearSolver,
}

/// Output of a projection onto the constraint set.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub field: StateField,
    /// Full nodal displacement of the strain part.
    pub displacement: Vec<f64>,
    /// Full nodal multiplier `η` of the stress part (zero on fixed dofs).
    pub multiplier: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// Energy-metric distance of the strain field to the compatible strains.
    pub compat: f64,
    /// Euclidean norm of `[BᵀWσ]_free − F_free`.
    pub equil: f64,
}

fn element_b(mesh: &Mesh, e: usize) -> ElementB {
    let el = mesh.element(e);
    match mesh.dim() {
        1 => {
            let len = mesh.x(el[1])[0] - mesh.x(el[0])[0];
            ElementB { dofs: vec![el[0], el[1]], b: vec![-1.0 / len, 1.0 / len] }
        }
        _ => {
            let p: Vec<&[f64]> = el.iter().map(|&n| mesh.x(n)).collect();
            let two_a = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            let mut b = vec![0.0; 3 * 6];
            let mut dofs = Vec::with_capacity(6);
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                let dx = (p[j][1] - p[k][1]) / two_a;
                let dy = (p[k][0] - p[j][0]) / two_a;
                b[2 * i] = dx;
                b[6 + 2 * i + 1] = dy;
                b[12 + 2 * i] = dy;
                b[12 + 2 * i + 1] = dx;
                dofs.push(2 * el[i]);
                dofs.push(2 * el[i] + 1);
            }
            ElementB { dofs, b }
        }
    }
}

impl ElementB {
    fn strain(&self, m: usize, u: &[f64]) -> Vec<f64> {
        let nd = self.dofs.len();
        (0..m).map(|r| (0..nd).map(|c| self.b[r * nd + c] * u[self.dofs[c]]).sum()).collect()
    }

    fn scatter_bt(&self, m: usize, s: &[f64], scale: f64, out: &mut [f64]) {
        let nd = self.dofs.len();
        for c in 0..nd {
            let v: f64 = (0..m).map(|r| self.b[r * nd + c] * s[r]).sum();
            out[self.dofs[c]] += scale * v;
        }
    }
}

impl DiscreteConstraintSpace {
    pub fn assemble(mesh: &Mesh, c: &ElasticityTensor, bc: &BoundaryData) -> Result<Self> {
        Self::assemble_with(mesh, c, bc, LinearSolver::Cholesky)
    }

    pub fn assemble_with(mesh: &Mesh, c: &ElasticityTensor, bc: &BoundaryData, solver: LinearSolver) -> Result<Self> {
        if c.dim() != mesh.dim() {
            return Err(Error::DimensionMismatch { expected: mesh.dim(), found: c.dim() });
        }
        let fixed = bc.validate(mesh)?;
        let dim = mesh.dim();
        let m = packed_len(dim);
        let ndof = mesh.n_nodes() * dim;
        let mut lift = vec![0.0; ndof];
        let mut free_index = vec![None; ndof];
        let mut is_fixed = vec![false; ndof];
        for &(dof, v) in &fixed {
            lift[dof] = v;
            is_fixed[dof] = true;
        }
        let mut free_dofs = Vec::with_capacity(ndof - fixed.len());
        for dof in 0..ndof {
            if !is_fixed[dof] {
                free_index[dof] = Some(free_dofs.len());
                free_dofs.push(dof);
            }
        }
        let elems: Vec<ElementB> = (0..mesh.n_elements()).map(|e| element_b(mesh, e)).collect();
        let mut trip = Vec::new();
        for (e, eb) in elems.iter().enumerate() {
            let w = mesh.volumes()[e];
            let nd = eb.dofs.len();
            // C B, column by column.
            let mut cb = vec![0.0; m * nd];
            for col in 0..nd {
                let bcol: Vec<f64> = (0..m).map(|r| eb.b[r * nd + col]).collect();
                let v = c.voigt_mul(&bcol);
                for r in 0..m {
                    cb[r * nd + col] = v[r];
                }
            }
            for a in 0..nd {
                let Some(ia) = free_index[eb.dofs[a]] else { continue };
                for b in 0..nd {
                    let Some(ib) = free_index[eb.dofs[b]] else { continue };
                    let v: f64 = (0..m).map(|r| eb.b[r * nd + a] * cb[r * nd + b]).sum();
                    trip.push((ia, ib, w * v));
                }
            }
        }
        let n_free = free_dofs.len();
        let k_ff = CsrMatrix::from_triplets(n_free, trip);

        let mut load = vec![0.0; ndof];
        if !bc.body_force.is_empty() {
            let share = 1.0 / (dim + 1) as f64;
            for (e, f) in bc.body_force.iter().enumerate() {
                let w = mesh.volumes()[e];
                for &n in mesh.element(e) {
                    for (a, fa) in f.iter().enumerate() {
                        load[n * dim + a] += share * w * fa;
                    }
                }
            }
        }
        for t in &bc.neumann {
            let facet = &mesh.facets()[t.facet];
            let len = mesh.facet_measure(facet);
            let share = len / facet.nodes.len() as f64;
            for &n in &facet.nodes {
                for (a, h) in t.value.iter().enumerate() {
                    load[n * dim + a] += share * h;
                }
            }
        }

        let chol = if n_free == 0 {
            None
        } else {
            match SkylineCholesky::factor(&k_ff, PIVOT_TOL) {
                Ok(f) => Some(f),
                Err(fail) => {
                    return Err(Error::Mechanism { null_direction: null_direction(&k_ff, fail.original_index, &free_dofs, ndof) })
                }
            }
        };
        let factor = match solver {
            LinearSolver::Cholesky => Factor::Cholesky(chol),
            LinearSolver::ConjugateGradient { rel_tol, max_iter } => {
                if !(rel_tol > 0.0) {
                    return Err(Error::InvalidArgument("CG tolerance must be positive".into()));
                }
                Factor::Cg { rel_tol, max_iter: max_iter.unwrap_or(10 * n_free.max(10)) }
            }
        };
        Ok(DiscreteConstraintSpace {
            mesh: mesh.clone(),
            c: c.clone(),
            bc: bc.clone(),
            elems,
            free_index,
            free_dofs,
            lift,
            load,
            k_ff,
            factor,
            solver,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn stiffness(&self) -> &ElasticityTensor {
        &self.c
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.bc
    }

    pub fn solver(&self) -> LinearSolver {
        self.solver
    }

    pub fn weights(&self) -> &[f64] {
        self.mesh.volumes()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    pub fn n_dofs(&self) -> usize {
        self.lift.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Full load vector `F` (fixed entries included).
    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// Dirichlet lift: prescribed values on fixed dofs, zero elsewhere.
    pub fn lift(&self) -> &[f64] {
        &self.lift
    }

    /// Free-dof stiffness as a dense matrix.
    pub fn k_free_dense(&self) -> Vec<Vec<f64>> {
        self.k_ff.to_dense()
    }

    /// Same mesh, stiffness and dof bookkeeping with all data set to zero.
    pub fn homogeneous(&self) -> Result<Self> {
        Self::assemble_with(&self.mesh, &self.c, &self.bc.homogeneous(), self.solver)
    }

    fn solve_free(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.is_empty() {
            return Ok(Vec::new());
        }
        match &self.factor {
            Factor::Cholesky(Some(f)) => Ok(f.solve(rhs)),
            Factor::Cholesky(None) => Err(Error::LinearSolve("no factorization for a nonempty system".into())),
            Factor::Cg { rel_tol, max_iter } => Ok(conjugate_gradient(&self.k_ff, rhs, *rel_tol, *max_iter)?.0),
        }
    }

    fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&d| full[d]).collect()
    }

    fn expand(&self, free: &[f64], base: &[f64]) -> Vec<f64> {
        let mut u = base.to_vec();
        for (k, &d) in self.free_dofs.iter().enumerate() {
            u[d] += free[k];
        }
        u
    }

    /// Engineering element strains of a full nodal vector.
    pub fn strains(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let m = self.c.size();
        self.elems.iter().map(|eb| eb.strain(m, u)).collect()
    }

    /// `Σ_e w_e B_eᵀ s_e` over all dofs.
    pub fn weighted_bt(&self, per_element: &[Vec<f64>]) -> Vec<f64> {
        let m = self.c.size();
        let mut out = vec![0.0; self.n_dofs()];
        for (e, eb) in self.elems.iter().enumerate() {
            eb.scatter_bt(m, &per_element[e], self.weights()[e], &mut out);
        }
        out
    }

    fn check_field(&self, f: &StateField) -> Result<()> {
        if f.len() != self.n_elements() {
            return Err(Error::DimensionMismatch { expected: self.n_elements(), found: f.len() });
        }
        if f.dim() != self.c.dim() {
            return Err(Error::DimensionMismatch { expected: self.c.dim(), found: f.dim() });
        }
        Ok(())
    }

    /// Zero field carrying this space's weights and metric.
    pub fn zero_field(&self) -> StateField {
        StateField::zeros(self.weights().to_vec(), self.c.clone()).expect("mesh volumes are positive")
    }

    pub fn field_from(&self, eps_eng: &[Vec<f64>], sig: &[Vec<f64>]) -> StateField {
        let dim = self.c.dim();
        let states = eps_eng
            .iter()
            .zip(sig)
            .map(|(e, s)| LocalState {
                eps: SymMatrix::from_engineering(dim, e),
                sig: SymMatrix::from_packed(dim, s).expect("packed stress length"),
            })
            .collect();
        StateField::new(states, self.weights().to_vec(), self.c.clone()).expect("consistent field")
    }

    /// Displacement whose strain is closest to `eps_target` in the energy metric.
    fn fit_displacement(&self, eps_target: &[Vec<f64>]) -> Result<Vec<f64>> {
        let eps_lift = self.strains(&self.lift);
        let r: Vec<Vec<f64>> = eps_target
            .iter()
            .zip(&eps_lift)
            .map(|(t, l)| {
                let d: Vec<f64> = t.iter().zip(l).map(|(a, b)| a - b).collect();
                self.c.voigt_mul(&d)
            })
            .collect();
        let rhs = self.restrict(&self.weighted_bt(&r));
        let uf = self.solve_free(&rhs)?;
        Ok(self.expand(&uf, &self.lift))
    }

    pub fn project_detailed(&self, target: &StateField) -> Result<Projection> {
        self.check_field(target)?;
        let eps_t: Vec<Vec<f64>> = target.states().iter().map(|z| z.eps.to_engineering()).collect();
        let sig_t: Vec<Vec<f64>> = target.states().iter().map(|z| z.sig.packed().to_vec()).collect();
        let u = self.fit_displacement(&eps_t)?;
        let eps = self.strains(&u);

        let bts = self.weighted_bt(&sig_t);
        let rhs: Vec<f64> = self.free_dofs.iter().map(|&d| self.load[d] - bts[d]).collect();
        let eta_f = self.solve_free(&rhs)?;
        let eta = self.expand(&eta_f, &vec![0.0; self.n_dofs()]);
        let beta = self.strains(&eta);
        let sig: Vec<Vec<f64>> = sig_t
            .iter()
            .zip(&beta)
            .map(|(s, b)| s.iter().zip(self.c.voigt_mul(b)).map(|(a, c)| a + c).collect())
            .collect();
        Ok(Projection { field: self.field_from(&eps, &sig), displacement: u, multiplier: eta })
    }

    /// Energy-metric closest point of the constraint set to `target`.
    pub fn project_onto_e(&self, target: &StateField) -> Result<StateField> {
        Ok(self.project_detailed(target)?.field)
    }

    /// Displacement solving `K u = F` with the Dirichlet lift.
    pub fn classical_displacement(&self) -> Result<Vec<f64>> {
        let eps_lift = self.strains(&self.lift);
        let s: Vec<Vec<f64>> = eps_lift.iter().map(|e| self.c.voigt_mul(e)).collect();
        let ku = self.weighted_bt(&s);
        let rhs: Vec<f64> = self.free_dofs.iter().map(|&d| self.load[d] - ku[d]).collect();
        let uf = self.solve_free(&rhs)?;
        Ok(self.expand(&uf, &self.lift))
    }

    /// `(Bu, CBu)` for the classical solution.
    pub fn solve_classical(&self) -> Result<StateField> {
        let u = self.classical_displacement()?;
        let eps = self.strains(&u);
        let sig: Vec<Vec<f64>> = eps.iter().map(|e| self.c.voigt_mul(e)).collect();
        Ok(self.field_from(&eps, &sig))
    }

    pub fn residuals(&self, field: &StateField) -> Result<Residuals> {
        self.check_field(field)?;
        let eps_t: Vec<Vec<f64>> = field.states().iter().map(|z| z.eps.to_engineering()).collect();
        let u = self.fit_displacement(&eps_t)?;
        let fit = self.strains(&u);
        let mut d2 = 0.0;
        for ((a, b), w) in fit.iter().zip(&eps_t).zip(self.weights()) {
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let cd = self.c.voigt_mul(&d);
            d2 += w * 0.5 * d.iter().zip(&cd).map(|(x, y)| x * y).sum::<f64>();
        }
        let sig: Vec<Vec<f64>> = field.states().iter().map(|z| z.sig.packed().to_vec()).collect();
        let bts = self.weighted_bt(&sig);
        let equil = self.free_dofs.iter().map(|&d| (bts[d] - self.load[d]).powi(2)).sum::<f64>().sqrt();
        Ok(Residuals { compat: d2.max(0.0).sqrt(), equil })
    }

    /// `Σ_free F·u + Σ_fixed [BᵀWσ]·u`, which equals `Σ w σ·ε` for fields in
    /// the constraint set with displacement `u`.
    pub fn external_work(&self, u: &[f64], field: &StateField) -> f64 {
        let sig: Vec<Vec<f64>> = field.states().iter().map(|z| z.sig.packed().to_vec()).collect();
        let bts = self.weighted_bt(&sig);
        (0..self.n_dofs())
            .map(|d| if self.free_index[d].is_some() { self.load[d] * u[d] } else { bts[d] * u[d] })
            .sum()
    }

    /// Largest normalized contraction `|Σ w σ·Bu| / (‖σ‖ ‖Bu‖)` over random
    /// pairs of compatible strains and self-equilibrated stresses.
    pub fn helmholtz_orthogonality_check(&self, pairs: usize, seed: u64) -> Result<f64> {
        let homog = self.homogeneous()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.c.size();
        let mut worst: f64 = 0.0;
        for _ in 0..pairs {
            let uf: Vec<f64> = (0..homog.n_free()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let u = homog.expand(&uf, &vec![0.0; homog.n_dofs()]);
            let eps = homog.strains(&u);
            let target: Vec<Vec<f64>> =
                (0..homog.n_elements()).map(|_| (0..m).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
            let zero_eps = vec![vec![0.0; m]; homog.n_elements()];
            let p = homog.project_detailed(&homog.field_from(&zero_eps, &target))?;
            let sig: Vec<Vec<f64>> = p.field.states().iter().map(|z| z.sig.packed().to_vec()).collect();
            let (mut dot, mut ns, mut ne) = (0.0, 0.0, 0.0);
            for e in 0..homog.n_elements() {
                let w = homog.weights()[e];
                let se = SymMatrix::from_packed(self.c.dim(), &sig[e]).unwrap();
                let ee = SymMatrix::from_engineering(self.c.dim(), &eps[e]);
                dot += w * se.dot(&ee);
                ns += w * se.dot(&se);
                ne += w * ee.dot(&ee);
            }
            let denom = (ns * ne).sqrt();
            if denom > 0.0 {
                worst = worst.max(dot.abs() / denom);
            }
        }
        Ok(worst)
    }
}

fn null_direction(k: &CsrMatrix, failed: usize, free_dofs: &[usize], ndof: usize) -> Vec<f64> {
    let n = k.n();
    let mut full = vec![0.0; ndof];
    if n <= DENSE_NULLSPACE_LIMIT {
        let d = k.to_dense();
        let mat = DMatrix::from_fn(n, n, |i, j| d[i][j]);
        let eig = mat.symmetric_eigen();
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
        let v = eig.eigenvectors.column(imin);
        for (kf, &dof) in free_dofs.iter().enumerate() {
            full[dof] = v[kf];
        }
    } else {
        full[free_dofs[failed]] = 1.0;
    }
    full
}

pub fn assemble(mesh: &Mesh, c: &ElasticityTensor, bc: &BoundaryData) -> Result<DiscreteConstraintSpace> {
    DiscreteConstraintSpace::assemble(mesh, c, bc)
}

pub fn project_onto_e(space: &DiscreteConstraintSpace, target: &StateField) -> Result<StateField> {
    space.project_onto_e(target)
}

pub fn solve_classical(space: &DiscreteConstraintSpace) -> Result<StateField> {
    space.solve_classical()
}

pub fn residuals(space: &DiscreteConstraintSpace, field: &StateField) -> Result<Residuals> {
    space.residuals(field)
}

pub fn helmholtz_orthogonality_check(space: &DiscreteConstraintSpace, pairs: usize, seed: u64) -> Result<f64> {
    space.helmholtz_orthogonality_check(pairs, seed)
}

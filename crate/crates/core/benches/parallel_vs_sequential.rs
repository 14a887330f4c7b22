use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dde_core::data::{nearest_field, sample, AffineGraphBranch, SamplingSpec, TwoWellDataSet};
use dde_core::fem::{assemble, markers, BoundaryData, Mesh};
use dde_core::relax::alpha_range;
use dde_core::solver::{solve_data_driven, SolverConfig};
use dde_core::{ElasticityTensor, Execution, SymMatrix};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn rect(n: usize) -> dde_core::fem::DiscreteConstraintSpace {
    let mesh = Mesh::rect2d(n, n, 1.0, 1.0).unwrap();
    let bc = BoundaryData::new()
        .clamp(&mesh, markers::LEFT, &[0.0, 0.0])
        .unwrap()
        .traction(&mesh, markers::RIGHT, &[1.0, 0.0])
        .unwrap();
    assemble(&mesh, &ElasticityTensor::identity(2), &bc).unwrap()
}

fn assignment(c: &mut Criterion) {
    let space = rect(24);
    let field = space.solve_classical().unwrap();
    let set = TwoWellDataSet::symmetric(ElasticityTensor::identity(2), SymMatrix::diag(&[0.1, 0.2]).unwrap()).unwrap();
    let mut g = c.benchmark_group("assignment");
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::new("two_well", name), &exec, |b, &exec| {
            b.iter(|| nearest_field(&field, &set, exec).unwrap())
        });
    }
    g.finish();
}

fn sphere_sweep(c: &mut Criterion) {
    let ct = ElasticityTensor::isotropic(3, 1.0, 0.8).unwrap();
    let bt = SymMatrix::from_packed(3, &[1.0, -0.4, 0.7, 0.2, 0.0, 0.3]).unwrap();
    let mut g = c.benchmark_group("alpha_range_3d");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| b.iter(|| alpha_range(&ct, &bt, exec).unwrap()));
    }
    g.finish();
}

fn full_solve(c: &mut Criterion) {
    let mesh = Mesh::bar1d(400, 1.0).unwrap();
    let bc = BoundaryData::new()
        .fix(&mesh, markers::LEFT, 0, 0.0)
        .unwrap()
        .fix(&mesh, markers::RIGHT, 0, 0.5)
        .unwrap()
        .uniform_body_force(&mesh, &[1.0])
        .unwrap();
    let space = assemble(&mesh, &ElasticityTensor::scalar(2.0).unwrap(), &bc).unwrap();
    let line = AffineGraphBranch::linear(space.stiffness().clone());
    let cloud = sample(&line, &SamplingSpec::new(0.01, 0.0, vec![[-1.0, 1.5]], 0).unwrap()).unwrap();
    let mut g = c.benchmark_group("solve_bar_cloud");
    g.sample_size(10);
    for (name, execution) in POLICIES {
        let cfg = SolverConfig { execution, ..Default::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| solve_data_driven(&space, &cloud, cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, assignment, sphere_sweep, full_solve);
criterion_main!(benches);

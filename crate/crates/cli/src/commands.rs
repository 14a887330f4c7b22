use std::path::{Path, PathBuf};
use std::time::Instant;

use dde_core::acceptance::{run_all, CriterionOutcome};
use dde_core::data::{FlagDataSet1D, FlagMembership, TwoWellDataSet};
use dde_core::io::{fmt_f64, state_header};
use dde_core::relax::{
    alpha_sweep_2d, boundary_polyline, convex_envelope_1d, generate_laminate_field, membership_flag_1d, rank_one_decompose,
    RelaxedMembership, RelaxedTwoWell, TwoWellRelaxation,
};
use dde_core::solver::{convergence_study, solve_data_driven, ConvergenceRow, SolverResult, StopReason};
use dde_core::{ElasticityTensor, Execution, LocalState};
use serde::{Deserialize, Serialize};

use crate::config::{read_json, resolve, sym, ExperimentConfig, ProblemConfig};
use crate::output::{field_csv, OutDir};
use crate::Failure;

pub struct Options {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn core<T>(key: &str, r: dde_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Input(format!("{key}: {e}")))
}

fn out_dir(opts: &Options, config_path: &Path, from_config: Option<&PathBuf>) -> Result<OutDir, Failure> {
    match (&opts.out, from_config) {
        (Some(d), _) => OutDir::create(d),
        (None, Some(d)) => OutDir::create(&resolve(config_path, d)),
        (None, None) => Err(Failure::Input("output: no output directory given (set `output` or pass --out)".into())),
    }
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub d2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub trace: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ResidualSummary {
    pub compat: f64,
    pub equil: f64,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub result: SolveSummary,
    pub residuals: ResidualSummary,
    pub timing: Timing,
}

fn summary(r: &SolverResult) -> (SolveSummary, ResidualSummary) {
    (
        SolveSummary { d2: r.d2, iterations: r.iterations, converged: r.converged, stop: r.stop, trace: r.trace.clone() },
        ResidualSummary { compat: r.residuals.compat, equil: r.residuals.equil },
    )
}

fn load_experiment(path: &Path, opts: &Options) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = opts.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

pub fn solve(path: &Path, opts: &Options) -> Result<(), Failure> {
    let start = Instant::now();
    let cfg = load_experiment(path, opts)?;
    let exp = cfg.build(path)?;
    let out = out_dir(opts, path, cfg.output.as_ref())?;
    let r = core("solver", solve_data_driven(&exp.space, &exp.data, &cfg.solver))?;
    out.write("z.csv", &field_csv(&r.z))?;
    out.write("y.csv", &field_csv(&r.y))?;
    let (result, residuals) = summary(&r);
    let report = RunReport {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "solve",
        seed: cfg.solver.seed,
        config: cfg,
        result,
        residuals,
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64() },
    };
    out.write_json("report.json", &report)?;
    println!("d2 = {} after {} iterations ({:?})", fmt_f64(r.d2), r.iterations, r.stop);
    if r.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!("stopped after {} iterations; best iterate written", r.iterations)))
    }
}

#[derive(Debug, Serialize)]
pub struct ConvergenceReport {
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of log(error) against log(rho).
    pub exponent: Option<f64>,
    pub timing: Timing,
}

pub fn convergence(path: &Path, opts: &Options) -> Result<(), Failure> {
    let start = Instant::now();
    let cfg = load_experiment(path, opts)?;
    let specs = cfg.sampling.clone().unwrap_or_default();
    if specs.len() < 2 {
        return Err(Failure::Input(format!("sampling: at least 2 specs required, found {}", specs.len())));
    }
    let exp = cfg.build(path)?;
    let out = out_dir(opts, path, cfg.output.as_ref())?;
    let table = core("sampling", convergence_study(&exp.space, &exp.data, &specs, &cfg.solver))?;
    out.write("convergence.csv", &table.to_csv())?;
    let all_converged = table.rows.iter().all(|r| r.converged);
    let report = ConvergenceReport {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "convergence",
        seed: cfg.solver.seed,
        config: cfg,
        rows: table.rows.clone(),
        exponent: table.exponent,
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64() },
    };
    out.write_json("report.json", &report)?;
    for r in &table.rows {
        println!("rho = {:<8} t = {:<8} error = {}", r.rho, r.t, fmt_f64(r.error));
    }
    if let Some(e) = table.exponent {
        println!("fitted exponent = {e:.4}");
    }
    if all_converged {
        Ok(())
    } else {
        Err(Failure::NotConverged("at least one solve did not converge".into()))
    }
}

fn default_extent() -> f64 {
    1.0
}

fn default_sweep() -> usize {
    360
}

fn default_tol() -> f64 {
    dde_core::relax::membership::DEFAULT_TOL
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub c: ElasticityTensor,
    /// Packed half-jump between the wells.
    pub b: Vec<f64>,
    #[serde(default = "default_extent")]
    pub polyline_extent: f64,
    #[serde(default = "default_sweep")]
    pub sweep_samples: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub b: Vec<f64>,
    pub c: Vec<Vec<f64>>,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub nu_minus: Vec<f64>,
    pub nu_plus: Vec<f64>,
    pub c_hat_minus: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub cbb: f64,
    pub compatible: bool,
}

pub fn relax_analyze(path: &Path, opts: &Options) -> Result<(), Failure> {
    let cfg: AnalyzeConfig = read_json(path)?;
    let b = sym(cfg.c.dim(), &cfg.b, "b")?;
    let rx = core("b", TwoWellRelaxation::new(cfg.c.clone(), b, Execution::Parallel))?;
    let out = out_dir(opts, path, cfg.output.as_ref())?;
    let report = AnalyzeReport {
        b: cfg.b.clone(),
        c: cfg.c.voigt_rows(),
        alpha_minus: rx.alpha_minus,
        alpha_plus: rx.alpha_plus,
        nu_minus: rx.nu_minus.clone(),
        nu_plus: rx.nu_plus.clone(),
        c_hat_minus: rx.c_hat_minus.clone(),
        sigma_hat: rx.sigma_hat().packed().to_vec(),
        cbb: rx.cbb,
        compatible: rx.is_compatible(),
    };
    out.write_json("analyze.json", &report)?;
    if rx.dim() == 2 {
        let mut s = String::from("curve,sigma_b,mu\n");
        for (label, sb, mu) in boundary_polyline(&rx, cfg.polyline_extent) {
            s.push_str(&format!("{label},{},{}\n", fmt_f64(sb), fmt_f64(mu)));
        }
        out.write("boundary.csv", &s)?;
        let sweep = core("b", alpha_sweep_2d(&rx.c, &rx.b, cfg.sweep_samples, Execution::Parallel))?;
        out.write("alpha_sweep.csv", &dde_core::io::csv_string(&["theta", "alpha_hat"], sweep.into_iter().map(|(t, a)| vec![t, a])))?;
    }
    println!("alpha_minus = {}, alpha_plus = {}, compatible = {}", fmt_f64(rx.alpha_minus), fmt_f64(rx.alpha_plus), rx.is_compatible());
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RelaxSet {
    Flag { c: f64, sigma0: f64 },
    TwoWell { c: ElasticityTensor, a: Vec<f64>, b: Vec<f64>, w: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembershipConfig {
    pub set: RelaxSet,
    pub states: PathBuf,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn flag_label(m: FlagMembership) -> &'static str {
    match m {
        FlagMembership::OnOriginalSet => "on_original_set",
        FlagMembership::InRelaxedSet => "in_relaxed_set",
        FlagMembership::Outside => "outside",
    }
}

fn relaxed_label(m: RelaxedMembership) -> &'static str {
    match m {
        RelaxedMembership::InDlocPlus => "in_plus_well",
        RelaxedMembership::InDlocMinus => "in_minus_well",
        RelaxedMembership::InRelaxedInterior => "in_relaxed_interior",
        RelaxedMembership::Outside => "outside",
    }
}

pub fn relax_membership(path: &Path, opts: &Options) -> Result<(), Failure> {
    let cfg: MembershipConfig = read_json(path)?;
    let classify: Box<dyn Fn(&LocalState) -> &'static str> = match &cfg.set {
        RelaxSet::Flag { c, sigma0 } => {
            let flag = core("set", FlagDataSet1D::new(*c, *sigma0))?;
            let tol = cfg.tol;
            Box::new(move |z: &LocalState| flag_label(membership_flag_1d(&flag, z.eps.packed()[0], z.sig.packed()[0], tol)))
        }
        RelaxSet::TwoWell { c, a, b, w } => {
            let set = core(
                "set",
                TwoWellDataSet::new(c.clone(), sym(c.dim(), a, "set.a")?, sym(c.dim(), b, "set.b")?, *w),
            )?;
            let rel = core("set", RelaxedTwoWell::from_set(&set, Execution::Parallel))?;
            let tol = cfg.tol;
            Box::new(move |z: &LocalState| relaxed_label(rel.membership(z, tol)))
        }
    };
    let dim = match &cfg.set {
        RelaxSet::Flag { .. } => 1,
        RelaxSet::TwoWell { c, .. } => c.dim(),
    };
    let states_path = resolve(path, &cfg.states);
    let text = std::fs::read_to_string(&states_path).map_err(|e| Failure::Input(format!("states: {}: {e}", states_path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(|e| Failure::Input(format!("states: {e}")))?.iter().map(str::to_string).collect();
    let cols: Vec<usize> = state_header(dim)
        .iter()
        .map(|name| header.iter().position(|h| h == name).ok_or_else(|| Failure::Input(format!("states: missing column `{name}`"))))
        .collect::<Result<_, _>>()?;
    let mut out_text = header.join(",") + ",class\n";
    let mut counts = std::collections::BTreeMap::<&str, usize>::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Failure::Input(format!("states: {e}")))?;
        let row: Vec<f64> = cols
            .iter()
            .map(|&k| rec[k].parse::<f64>().map_err(|e| Failure::Input(format!("states: row {}: {e}", i + 1))))
            .collect::<Result<_, _>>()?;
        let z = core("states", LocalState::from_row(dim, &row))?;
        let label = classify(&z);
        *counts.entry(label).or_default() += 1;
        out_text.push_str(&rec.iter().collect::<Vec<_>>().join(","));
        out_text.push(',');
        out_text.push_str(label);
        out_text.push('\n');
    }
    let out = out_dir(opts, path, cfg.output.as_ref())?;
    out.write("membership.csv", &out_text)?;
    for (label, n) in counts {
        println!("{label}: {n}");
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaminateConfig {
    pub c: ElasticityTensor,
    pub b: Vec<f64>,
    /// Packed strain then packed stress.
    pub state: Vec<f64>,
    pub problem: ProblemConfig,
    pub layers: Vec<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct LaminateSummary {
    pub layers: usize,
    pub volume_fraction: f64,
    pub mean_error: f64,
    pub global_mean_error: f64,
    pub jump_residual: f64,
    pub file: String,
}

#[derive(Debug, Serialize)]
pub struct LaminateReport {
    pub lambda: f64,
    pub nu: Vec<f64>,
    pub c: Vec<f64>,
    pub z_plus: Vec<f64>,
    pub z_minus: Vec<f64>,
    pub reconstruction_error: f64,
    pub connection_residual: f64,
    pub fields: Vec<LaminateSummary>,
}

pub fn relax_laminate(path: &Path, opts: &Options) -> Result<(), Failure> {
    let cfg: LaminateConfig = read_json(path)?;
    let dim = cfg.c.dim();
    let rx = core("b", TwoWellRelaxation::new(cfg.c.clone(), sym(dim, &cfg.b, "b")?, Execution::Parallel))?;
    let z = core("state", LocalState::from_row(dim, &cfg.state))?;
    let d = core("state", rank_one_decompose(&rx, &z, default_tol()))?;
    let mesh = cfg.problem.mesh(path)?;
    let out = out_dir(opts, path, cfg.output.as_ref())?;
    let mut fields = Vec::new();
    for &h in &cfg.layers {
        let f = core("layers", generate_laminate_field(&mesh, &d, h, &cfg.c))?;
        let mut s = String::from("element,plus,");
        s.push_str(&state_header(dim).join(","));
        s.push('\n');
        for (e, (st, p)) in f.states.iter().zip(&f.plus).enumerate() {
            let vals: Vec<String> = st.to_row().into_iter().map(fmt_f64).collect();
            s.push_str(&format!("{e},{},{}\n", u8::from(*p), vals.join(",")));
        }
        let file = format!("laminate_h{h}.csv");
        out.write(&file, &s)?;
        println!("h = {h}: mean error {}", fmt_f64(f.mean_error));
        fields.push(LaminateSummary {
            layers: h,
            volume_fraction: f.volume_fraction,
            mean_error: f.mean_error,
            global_mean_error: f.global_mean_error,
            jump_residual: f.jump_residual,
            file,
        });
    }
    let report = LaminateReport {
        lambda: d.lambda,
        nu: d.nu.clone(),
        c: d.c.clone(),
        z_plus: d.z_plus.to_row(),
        z_minus: d.z_minus.to_row(),
        reconstruction_error: d.reconstruction_error(&z),
        connection_residual: d.connection_residual(),
        fields,
    };
    out.write_json("laminate.json", &report)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub c: f64,
    pub sigma0: f64,
    pub strain_range: [f64; 2],
    pub samples: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct EnvelopeReport {
    pub c: f64,
    pub sigma0: f64,
    pub envelope_at_zero: f64,
    /// `[lo, hi, well]`; unbounded ends and the flat piece are `null`.
    pub pieces: Vec<[Option<f64>; 3]>,
    pub witness: (f64, f64),
    pub witness_valid: bool,
}

pub fn relax_envelope(path: &Path, opts: &Options) -> Result<(), Failure> {
    let cfg: EnvelopeConfig = read_json(path)?;
    let w = core("c", convex_envelope_1d(cfg.c, cfg.sigma0))?;
    let [lo, hi] = cfg.strain_range;
    if !(lo < hi) || cfg.samples < 2 {
        return Err(Failure::Input("strain_range/samples: need lo < hi and at least 2 samples".into()));
    }
    let out = out_dir(opts, path, cfg.output.as_ref())?;
    let rows = (0..cfg.samples).map(|i| {
        let e = lo + (hi - lo) * i as f64 / (cfg.samples - 1) as f64;
        vec![e, w.energy(e), w.envelope(e), w.stress(e)]
    });
    out.write("envelope.csv", &dde_core::io::csv_string(&["eps", "energy", "envelope", "stress"], rows))?;
    let finite = |x: f64| x.is_finite().then_some(x);
    let report = EnvelopeReport {
        c: cfg.c,
        sigma0: cfg.sigma0,
        envelope_at_zero: w.envelope(0.0),
        pieces: w.pieces().iter().map(|p| [finite(p.lo), finite(p.hi), p.well]).collect(),
        witness: w.witness(),
        witness_valid: core("c", w.witness_is_valid(default_tol()))?,
    };
    out.write_json("envelope.json", &report)?;
    println!("envelope(0) = {}", fmt_f64(report.envelope_at_zero));
    Ok(())
}

#[derive(Debug, Serialize)]
struct SelftestReport<'a> {
    tool_version: &'static str,
    seed: u64,
    criteria: &'a [CriterionOutcome],
    timing: Timing,
}

pub fn selftest(opts: &Options) -> Result<(), Failure> {
    let start = Instant::now();
    let seed = opts.seed.unwrap_or(0);
    let outcomes = run_all(Execution::Parallel, seed);
    for o in &outcomes {
        println!("{}", o.line());
    }
    if let Some(dir) = &opts.out {
        let report = SelftestReport {
            tool_version: env!("CARGO_PKG_VERSION"),
            seed,
            criteria: &outcomes,
            timing: Timing { wall_seconds: start.elapsed().as_secs_f64() },
        };
        OutDir::create(dir)?.write_json("selftest.json", &report)?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::CheckFailed(format!("{failed} acceptance criteria failed")))
    }
}

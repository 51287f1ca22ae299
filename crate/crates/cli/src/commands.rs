//! Command implementations. Each returns the JSON printed on stdout.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ergm_core::edge_f::{phase_scan, EdgeFModel};
use ergm_core::ergm::ExperimentConfig;
use ergm_core::finner::{finner_suite, holder_suite};
use ergm_core::hom::hom_density_with;
use ergm_core::motif::{parse_motif_list, MotifJson};
use ergm_core::nmf::{nmf_solve, phi_np_solve, NmfProblem, PhiNpProblem, SolverOptions};
use ergm_core::{
    edge_f_solve, finner_integral, psi_solve, recover_factors, run_experiment, Error,
    HamiltonianSpec, HomAlgorithm, Motif, PlanarProblem, ProductInstance, Result, WeightTable,
    WeightTableJson,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{fmt_f64, Outputs};
use crate::{Command, Common};

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Auto,
    Generic,
    Cycle,
    Star,
    Clique,
}

impl From<Algorithm> for HomAlgorithm {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Auto => HomAlgorithm::Auto,
            Algorithm::Generic => HomAlgorithm::Generic,
            Algorithm::Cycle => HomAlgorithm::Cycle,
            Algorithm::Star => HomAlgorithm::Star,
            Algorithm::Clique => HomAlgorithm::Clique,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct HomDensityArgs {
    /// Built-in motif name or a motif JSON file.
    #[arg(long)]
    pub motif: String,
    /// Weight table (`.json`, otherwise the binary format).
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, value_enum, default_value_t = Algorithm::Auto)]
    pub algorithm: Algorithm,
}

#[derive(Args, Debug, Serialize)]
pub struct PlanarPhiArgs {
    /// Comma-separated built-in motif names.
    #[arg(long)]
    pub motifs: String,
    /// Comma-separated levels, one per motif.
    #[arg(long)]
    pub s: String,
    /// Region CSV (a,b,feasible,objective).
    #[arg(long)]
    pub emit_region: Option<PathBuf>,
    /// Level curves JSON.
    #[arg(long)]
    pub emit_curves: Option<PathBuf>,
    /// Grid resolution per axis for the region and curves.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct PsiArgs {
    /// Hamiltonian JSON file.
    #[arg(long)]
    pub hamiltonian: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EdgeFArgs {
    #[arg(long)]
    pub motif: String,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub beta: f64,
    /// Shift of the edge function (default 1).
    #[arg(long)]
    pub shift: Option<f64>,
    /// Scan `lo:hi:step` of beta values.
    #[arg(long)]
    pub beta_grid: Option<String>,
    /// Phase CSV for the scan (beta,phase,s_star,a_star,b_star,psi).
    #[arg(long)]
    pub emit: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct NmfArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub hamiltonian: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub random_starts: usize,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    /// Maximizing table in the binary format.
    #[arg(long)]
    pub emit: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct PhiNpArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub motifs: String,
    #[arg(long)]
    pub s: String,
    #[arg(long, default_value_t = 3)]
    pub random_starts: usize,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    /// Minimizing table in the binary format.
    #[arg(long)]
    pub emit: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub hamiltonian: PathBuf,
    #[arg(long)]
    pub sweeps: u64,
    #[arg(long, default_value_t = 0)]
    pub burnin: u64,
    #[arg(long, default_value_t = 1)]
    pub thin: u64,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Run clique-hub detection on every recorded sample.
    #[arg(long)]
    pub detect: bool,
    #[arg(long, default_value_t = 0.5)]
    pub delta_hub: f64,
    /// Trajectory CSV.
    #[arg(long)]
    pub emit_traj: Option<PathBuf>,
    /// Final graph of chain 0 in the binary weight-table format.
    #[arg(long)]
    pub emit_graph: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Random,
}

#[derive(Args, Debug, Serialize)]
pub struct FinnerArgs {
    /// Instance JSON file.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Also recover product factors and residuals.
    #[arg(long)]
    pub recover: bool,
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct FigureArgs {
    /// One of fig2A, fig2B, fig2C, fig2D, fig3.
    pub scenario: String,
    /// Grid resolution per axis.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
}

pub fn run(cmd: &Command, common: &Common, out: &mut Outputs) -> Result<Value> {
    match cmd {
        Command::HomDensity(a) => hom_density_cmd(a),
        Command::PlanarPhi(a) => planar_phi(a, common, out),
        Command::Psi(a) => psi(a, common),
        Command::EdgeF(a) => edge_f(a, common, out),
        Command::Nmf(a) => nmf(a, common, out),
        Command::PhiNp(a) => phi_np(a, common, out),
        Command::Sample(a) => sample(a, common, out),
        Command::FinnerCheck(a) => finner_check(a, common),
        Command::EmitFigure(a) => emit_figure(a, common, out),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))
}

fn load_motif(spec: &str) -> Result<Motif> {
    match Motif::builtin(spec) {
        Ok(m) => Ok(m),
        Err(_) if Path::new(spec).exists() => {
            let j: MotifJson = serde_json::from_str(&read(Path::new(spec))?)?;
            Motif::try_from(&j)
        }
        Err(e) => Err(e),
    }
}

fn load_table(path: &Path) -> Result<WeightTable> {
    if path.extension().is_some_and(|e| e == "json") {
        let j: WeightTableJson = serde_json::from_str(&read(path)?)?;
        WeightTable::from_json(&j)
    } else {
        WeightTable::read_binary(fs::File::open(path)?)
    }
}

fn load_hamiltonian(path: &Path) -> Result<HamiltonianSpec> {
    HamiltonianSpec::from_json_str(&read(path)?)
}

fn parse_floats(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("`{s}` is not a number")))
        })
        .collect()
}

fn table_bytes(q: &WeightTable) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    q.write_binary(&mut buf)?;
    Ok(buf)
}

fn solver_options(common: &Common, random_starts: usize, max_iter: usize) -> SolverOptions {
    let mut opts = SolverOptions {
        random_starts,
        max_iter,
        seed: common.seed,
        ..SolverOptions::default()
    };
    if let Some(t) = common.tol {
        opts.tol = t;
    }
    opts
}

fn hom_density_cmd(a: &HomDensityArgs) -> Result<Value> {
    let motif = load_motif(&a.motif)?;
    let x = load_table(&a.graph)?;
    let t = hom_density_with(&motif, &x, a.scale, a.algorithm.into())?;
    Ok(json!({ "motif": motif.label(), "n": x.n(), "scale": a.scale, "density": t }))
}

/// Box `[0, a_max] x [0, b_max]` that contains the objective line segment.
fn plot_box(value: f64, optimizers: &[[f64; 2]]) -> (f64, f64) {
    let a = optimizers.iter().map(|o| o[0]).fold(2.0 * value, f64::max);
    let b = optimizers.iter().map(|o| o[1]).fold(value, f64::max);
    (1.2 * a.max(1e-3), 1.2 * b.max(1e-3))
}

fn emit_region_and_curves(
    problem: &PlanarProblem,
    s: &[f64],
    value: f64,
    optimizers: &[[f64; 2]],
    grid: usize,
    region: Option<&Path>,
    curves: Option<&Path>,
    out: &mut Outputs,
) -> Result<()> {
    let (a_max, b_max) = plot_box(value, optimizers);
    if let Some(path) = region {
        let rows: Vec<Vec<String>> = problem
            .region_grid(s, a_max, b_max, grid, grid)?
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.a),
                    fmt_f64(r.b),
                    r.feasible.to_string(),
                    fmt_f64(r.objective),
                ]
            })
            .collect();
        out.write_csv(path, &["a", "b", "feasible", "objective"], &rows)?;
    }
    if let Some(path) = curves {
        out.write_json(path, &problem.level_curves(s, a_max, b_max, grid)?)?;
    }
    Ok(())
}

fn planar_phi(a: &PlanarPhiArgs, common: &Common, out: &mut Outputs) -> Result<Value> {
    let family = parse_motif_list(&a.motifs)?;
    let s = parse_floats(&a.s)?;
    let problem = PlanarProblem::new(&family)?;
    let sol = problem.solve(&s)?;
    let optimizers: Vec<[f64; 2]> = sol.optimizers.iter().map(|p| [p.a, p.b]).collect();
    emit_region_and_curves(
        &problem,
        &s,
        sol.value,
        &optimizers,
        a.grid,
        a.emit_region.as_deref(),
        a.emit_curves.as_deref(),
        out,
    )?;
    if common.json {
        return Ok(serde_json::to_value(&sol)?);
    }
    Ok(json!({ "value": sol.value, "optimizers": optimizers }))
}

fn psi(a: &PsiArgs, common: &Common) -> Result<Value> {
    let spec = load_hamiltonian(&a.hamiltonian)?;
    let sol = psi_solve(&spec)?;
    if common.json {
        return Ok(serde_json::to_value(&sol)?);
    }
    let optimizers: Vec<[f64; 2]> = sol.optimizers.iter().map(|p| [p.a, p.b]).collect();
    Ok(json!({
        "value": sol.value,
        "dual_value": sol.dual_value,
        "duality_gap": sol.duality_gap(),
        "optimizers": optimizers,
        "s_star": sol.s_star,
        "warnings": sol.warnings,
    }))
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts = parse_floats(&spec.replace(':', ","))?;
    let [lo, hi, step] = parts[..] else {
        return Err(Error::Parse(format!(
            "beta grid `{spec}` must be lo:hi:step"
        )));
    };
    if !(step > 0.0 && hi >= lo) {
        return Err(Error::Domain(format!("beta grid `{spec}` is empty")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| lo + step * k as f64).collect())
}

fn edge_f(a: &EdgeFArgs, _common: &Common, out: &mut Outputs) -> Result<Value> {
    let motif = load_motif(&a.motif)?;
    let model = EdgeFModel::with_shift(&motif, a.gamma, a.beta, a.shift.unwrap_or(1.0))?;
    let report = edge_f_solve(&model)?;
    let mut value = serde_json::to_value(&report)?;
    if let Some(grid) = &a.beta_grid {
        let rows = phase_scan(&model, &parse_grid(grid)?)?;
        if let Some(path) = &a.emit {
            let csv: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.beta),
                        r.phase.to_string(),
                        fmt_f64(r.s_star),
                        fmt_f64(r.a_star),
                        fmt_f64(r.b_star),
                        fmt_f64(r.psi),
                    ]
                })
                .collect();
            out.write_csv(
                path,
                &["beta", "phase", "s_star", "a_star", "b_star", "psi"],
                &csv,
            )?;
        } else {
            value["scan"] = serde_json::to_value(&rows)?;
        }
    } else if a.emit.is_some() {
        return Err(Error::Validation("--emit needs --beta-grid".into()));
    }
    Ok(value)
}

fn nmf(a: &NmfArgs, common: &Common, out: &mut Outputs) -> Result<Value> {
    let spec = load_hamiltonian(&a.hamiltonian)?;
    let prob = NmfProblem::new(a.n, a.p, spec)?;
    let sol = nmf_solve(&prob, &solver_options(common, a.random_starts, a.max_iter))?;
    if let Some(path) = &a.emit {
        out.write(path, &table_bytes(&sol.q)?)?;
    }
    let d = &sol.diagnostics;
    let mut v = json!({
        "value": sol.value,
        "value_over_rate": sol.value / prob.rate,
        "rate": prob.rate,
        "iterations": d.restarts.iter().map(|r| r.iterations).sum::<usize>(),
        "residuals": d.restarts.iter().map(|r| r.grad_norm).collect::<Vec<_>>(),
        "witness_value": d.witness_value,
        "witness": d.witness,
        "densities": prob.densities(&sol.q)?,
        "warnings": d.warnings,
    });
    if common.json {
        v["restarts"] = serde_json::to_value(&d.restarts)?;
    }
    Ok(v)
}

fn phi_np(a: &PhiNpArgs, common: &Common, out: &mut Outputs) -> Result<Value> {
    let family = parse_motif_list(&a.motifs)?;
    let s = parse_floats(&a.s)?;
    let prob = PhiNpProblem::new(a.n, a.p, family)?;
    let sol = phi_np_solve(
        &prob,
        &s,
        &solver_options(common, a.random_starts, a.max_iter),
    )?;
    if let Some(path) = &a.emit {
        out.write(path, &table_bytes(&sol.q)?)?;
    }
    let d = &sol.diagnostics;
    let mut v = json!({
        "value": sol.value,
        "value_over_rate": sol.value / sol.rate,
        "rate": sol.rate,
        "iterations": d.restarts.iter().map(|r| r.iterations).sum::<usize>(),
        "residuals": sol.residuals,
        "witness_value": d.witness_value,
        "witness": d.witness,
        "warnings": d.warnings,
    });
    if common.json {
        v["restarts"] = serde_json::to_value(&d.restarts)?;
    }
    Ok(v)
}

fn sample(a: &SampleArgs, common: &Common, out: &mut Outputs) -> Result<Value> {
    let spec = load_hamiltonian(&a.hamiltonian)?;
    let config = ExperimentConfig {
        n: a.n,
        p: a.p,
        sweeps: a.sweeps,
        burn_in: a.burnin,
        thin: a.thin,
        chains: a.chains,
        seed: common.seed,
        detect: a.detect,
        delta_hub: a.delta_hub,
    };
    let report = run_experiment(&config, &spec)?;
    if let Some(path) = &a.emit_traj {
        let m = spec.family().len();
        let mut header: Vec<String> = vec!["chain".into(), "sweep".into(), "edges".into()];
        header.extend((1..=m).map(|k| format!("t_{k}")));
        header.extend(["hubSize", "cliqueSize", "xi1", "xi2"].map(String::from));
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![
                    r.chain.to_string(),
                    r.sweep.to_string(),
                    r.edges.to_string(),
                ];
                row.extend(r.densities.iter().map(|&t| fmt_f64(t)));
                match &r.structure {
                    Some(s) => row.extend([
                        s.hub.len().to_string(),
                        s.clique.len().to_string(),
                        fmt_f64(s.xi1),
                        fmt_f64(s.xi2),
                    ]),
                    None => row.extend(std::iter::repeat_n(String::new(), 4)),
                }
                row
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        out.write_csv(path, &header, &rows)?;
    }
    if let Some(path) = &a.emit_graph {
        let g = report
            .final_graphs
            .first()
            .ok_or_else(|| Error::Internal("no chain was run".into()))?;
        out.write(path, &table_bytes(&g.to_table())?)?;
    }
    if common.json {
        return Ok(serde_json::to_value(&report)?);
    }
    Ok(json!({
        "rate": report.rate,
        "samples": report.rows.len(),
        "edge_density": report.edge_density,
        "edge_density_se": report.edge_density_se,
        "predicted": report.predicted,
        "comparisons": report.comparisons,
        "warnings": report.warnings,
    }))
}

fn finner_check(a: &FinnerArgs, common: &Common) -> Result<Value> {
    if a.instance.is_none() && a.suite.is_none() {
        return Err(Error::Validation("give --instance or --suite".into()));
    }
    let mut v = json!({});
    if let Some(path) = &a.instance {
        let inst = ProductInstance::from_json_str(&read(path)?)?;
        let integral = finner_integral(&inst);
        v["integral"] = json!(integral);
        v["epsilon"] = json!((1.0 - integral).max(0.0));
        v["bound_holds"] = json!(integral <= 1.0 + 1e-10);
        v["classes"] = json!(inst.classes());
        if a.recover {
            v["recovery"] = serde_json::to_value(recover_factors(&inst))?;
        }
        if integral > 1.0 + 1e-10 {
            return Err(Error::Internal(format!(
                "Finner bound violated: integral {integral}"
            )));
        }
    }
    if a.suite.is_some() {
        let finner = finner_suite(a.count, common.seed);
        let holder = holder_suite(a.count, common.seed)?;
        let failed = finner.failures + holder.failures;
        v["finner"] = serde_json::to_value(&finner)?;
        v["holder"] = serde_json::to_value(&holder)?;
        if failed > 0 {
            return Err(Error::Internal(format!("{failed} suite instances failed")));
        }
    }
    Ok(v)
}

/// `(s_1, s_2, s_3)` for the family `(K12, C3, C4)`.
pub fn scenario(id: &str) -> Option<[f64; 3]> {
    Some(match id {
        "fig2A" => [2.0, 15.0, 100.0],
        "fig2B" => [2.0, 24.0, 100.0],
        "fig2C" => [4.0, 25.0, 100.0],
        "fig2D" => [4.0, 31.5, 100.0],
        "fig3" => [12.0, 88.0, 1000.0],
        _ => return None,
    })
}

fn emit_figure(a: &FigureArgs, _common: &Common, out: &mut Outputs) -> Result<Value> {
    let s = scenario(&a.scenario).ok_or_else(|| {
        Error::Validation(format!(
            "unknown scenario `{}` (fig2A, fig2B, fig2C, fig2D, fig3)",
            a.scenario
        ))
    })?;
    let family = parse_motif_list("K12,C3,C4")?;
    let problem = PlanarProblem::new(&family)?;
    let sol = problem.solve(&s)?;
    let optimizers: Vec<[f64; 2]> = sol.optimizers.iter().map(|p| [p.a, p.b]).collect();
    let dir = PathBuf::from(&a.scenario);
    let base = if out.dir().is_some() {
        PathBuf::new()
    } else {
        dir
    };
    emit_region_and_curves(
        &problem,
        &s,
        sol.value,
        &optimizers,
        a.grid,
        Some(&base.join("region.csv")),
        Some(&base.join("curves.json")),
        out,
    )?;
    let rows = |pts: &[ergm_core::PlanarPoint]| -> Vec<Vec<String>> {
        pts.iter()
            .map(|p| vec![fmt_f64(p.a), fmt_f64(p.b), fmt_f64(p.objective())])
            .collect()
    };
    out.write_csv(
        &base.join("optimizers.csv"),
        &["a", "b", "objective"],
        &rows(&sol.optimizers),
    )?;
    out.write_csv(
        &base.join("near_ties.csv"),
        &["a", "b", "objective"],
        &rows(&sol.near_ties),
    )?;
    // The line a/2 + b = phi between its axis intercepts.
    let line: Vec<Vec<String>> = (0..=a.grid)
        .map(|k| {
            let a_val = 2.0 * sol.value * k as f64 / a.grid as f64;
            vec![fmt_f64(a_val), fmt_f64(sol.value - 0.5 * a_val)]
        })
        .collect();
    out.write_csv(&base.join("objective_line.csv"), &["a", "b"], &line)?;
    let summary = json!({
        "scenario": a.scenario,
        "family": ["K12", "C3", "C4"],
        "s": s,
        "value": sol.value,
        "optimizers": optimizers,
    });
    out.write_json(&base.join("scenario.json"), &summary)?;
    Ok(summary)
}

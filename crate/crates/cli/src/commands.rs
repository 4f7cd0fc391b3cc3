use std::fmt::Write as _;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use latentbell::detection::{self, DetectionConfig, WitnessMode};
use latentbell::empirical::{self, TrialBudget};
use latentbell::io::{self, Metadata};
use latentbell::spin::{self, SphereGrid, SpinStateSpec};
use latentbell::{rng, QuantumLatentModel, StatVector, WitnessResult};

use crate::config::{self, linspace, GridConfig, SolverConfig};
use crate::error::{CliError, CliResult};
use crate::output::{sha256_hex, RunOutput};
use crate::Common;

#[derive(Args, Serialize, Default)]
pub struct GridArgs {
    /// Half-width L of the latent square.
    #[arg(long)]
    half_width: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    points: Option<usize>,
    /// Number of readout contexts J.
    #[arg(long)]
    contexts: Option<usize>,
    /// Number of outcome bins K.
    #[arg(long)]
    outcomes: Option<usize>,
    /// y_max as a multiple of sqrt(2) L.
    #[arg(long)]
    y_max_factor: Option<f64>,
    /// Largest negative binned marginal that is clipped rather than rejected.
    #[arg(long)]
    negative_tolerance: Option<f64>,
}

#[derive(Args, Serialize, Default)]
pub struct SolverArgs {
    /// Classicality tolerance on the distance to the classical polytope.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap of the nearest-point solver.
    #[arg(long)]
    max_iterations: Option<usize>,
}

fn out_dir(common: &Common, command: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| Path::new("runs").join(command))
}

fn parse_model(s: &str) -> CliResult<QuantumLatentModel> {
    Ok(s.parse::<QuantumLatentModel>()?)
}

fn csv_f64s(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn stats_csv(p: &StatVector) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    io::write_stats_csv(&mut buf, p)?;
    Ok(buf)
}

fn witness_summary(w: &WitnessResult) -> serde_json::Value {
    json!({
        "delta_star": w.distance,
        "classical_bound": w.classical_bound,
        "classical": w.classical,
        "iterations": w.iterations,
        "certificate_residual": w.certificate_residual,
    })
}

// ---------------------------------------------------------------- matrix

#[derive(Args, Serialize)]
pub struct MatrixArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MatrixConfig {
    grid: GridConfig,
}

pub fn matrix(args: MatrixArgs) -> CliResult<()> {
    let cfg: MatrixConfig = config::load(args.common.config.as_deref(), "matrix", config::overrides(&args))?;
    let parts = cfg.grid.validate()?;
    let pipeline = parts.build(Default::default())?;
    let m = &pipeline.matrix;
    let meta = Metadata {
        half_width: Some(cfg.grid.half_width),
        points_per_axis: Some(cfg.grid.points),
        contexts: Some(m.contexts()),
        outcomes: Some(m.outcomes()),
        y_max: Some(pipeline.binning.y_max()),
        ..Default::default()
    };
    let mut bytes = Vec::new();
    io::write_matrix(&mut bytes, m, &meta)?;
    let digest = sha256_hex(&bytes);
    let mut out = RunOutput::new("matrix", &cfg);
    out.add("matrix.lbfm", bytes);
    let dir = out.write(&out_dir(&args.common, "matrix"))?;
    println!(
        "matrix {} x {}, nnz {}, max column-block deviation {:e}",
        m.rows(),
        m.cols(),
        m.nnz(),
        m.block_sum_deviation()
    );
    println!("sha256 {digest}");
    println!("wrote {}", dir.display());
    Ok(())
}

// ---------------------------------------------------------------- witness

#[derive(Args, Serialize)]
pub struct WitnessArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Latent model: fock1, thermal1 or mix:<beta>.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct WitnessConfig {
    grid: GridConfig,
    solver: SolverConfig,
    model: String,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            model: "fock1".into(),
        }
    }
}

pub fn witness(args: WitnessArgs) -> CliResult<()> {
    let cfg: WitnessConfig = config::load(args.common.config.as_deref(), "witness", config::overrides(&args))?;
    let parts = cfg.grid.validate()?;
    let solver = cfg.solver.validate()?;
    let model = parse_model(&cfg.model)?;

    let pipeline = parts.build(solver)?;
    let ideal = pipeline.ideal(&model)?;
    let result = latentbell::witness::optimal_witness(&ideal.stats, &pipeline.matrix, &pipeline.solver)?;

    let mut out = RunOutput::new("witness", &cfg);
    out.add("stats.csv", stats_csv(&ideal.stats)?);
    out.add_json(
        "witness.json",
        &json!({
            "model": model.to_string(),
            "ideal": {
                "min_binned": ideal.min_binned,
                "clipped": ideal.clipped,
                "clipped_mass": ideal.clipped_mass,
            },
            "result": result,
        }),
    );
    let dir = out.write(&out_dir(&args.common, "witness"))?;
    println!(
        "{model}: delta* {:e} ({}), {} iterations, certificate residual {:e}",
        result.distance,
        if result.classical { "classical" } else { "nonclassical" },
        result.iterations,
        result.certificate_residual
    );
    println!("wrote {}", dir.display());
    Ok(())
}

// ---------------------------------------------------------------- detect-curve

#[derive(Args, Serialize)]
pub struct DetectCurveArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Latent model whose witness is tested.
    #[arg(long)]
    model: Option<String>,
    /// Noise levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    /// Classical admixtures, comma separated.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Monte Carlo repetitions per point.
    #[arg(long)]
    n_mc: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DetectCurveConfig {
    grid: GridConfig,
    solver: SolverConfig,
    model: String,
    sigmas: Vec<f64>,
    alphas: Vec<f64>,
    kappa: f64,
    n_mc: usize,
    seed: u64,
}

impl Default for DetectCurveConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            model: "fock1".into(),
            sigmas: vec![0.005, 0.01, 0.02],
            alphas: linspace(0.0, 1.0, 20),
            kappa: detection::DEFAULT_KAPPA,
            n_mc: 10_000,
            seed: 0,
        }
    }
}

pub fn detect_curve(args: DetectCurveArgs) -> CliResult<()> {
    let cfg: DetectCurveConfig = config::load(args.common.config.as_deref(), "detect-curve", config::overrides(&args))?;
    let parts = cfg.grid.validate()?;
    let solver = cfg.solver.validate()?;
    let model = parse_model(&cfg.model)?;
    if cfg.sigmas.is_empty() || cfg.alphas.is_empty() {
        return Err(CliError::validation("sigmas and alphas must be non-empty"));
    }
    for &sigma in &cfg.sigmas {
        for &alpha in &cfg.alphas {
            DetectionConfig {
                alpha,
                beta: model.beta(),
                sigma,
                kappa: cfg.kappa,
                n_mc: cfg.n_mc,
                seed: cfg.seed,
            }
            .validate()?;
        }
    }

    let pipeline = parts.build(solver)?;
    let (p_q, w) = pipeline.witness_for(&model)?;
    let p_cl = detection::classical_saturator(&pipeline.matrix, &w.witness)?;

    let mut out = RunOutput::new("detect-curve", &cfg);
    let mut curves = Vec::new();
    for (s, &sigma) in cfg.sigmas.iter().enumerate() {
        let seed = rng::derive_seed(cfg.seed, s as u64);
        let points = detection::detection_curve(&cfg.alphas, sigma, cfg.kappa, cfg.n_mc, seed, &w, &p_q, &p_cl)?;
        let mut csv = String::from("alpha,p_closed,p_mc,mc_stderr\n");
        for p in &points {
            writeln!(csv, "{},{},{},{}", p.alpha, p.p_closed, p.p_mc, p.mc_stderr).unwrap();
        }
        let file = format!("curve_sigma_{sigma}.csv");
        out.add(file.clone(), csv.into_bytes());
        curves.push(json!({
            "sigma": sigma,
            "sigma_s": sigma * w.witness.iter().map(|c| c * c).sum::<f64>().sqrt(),
            "seed": seed,
            "file": file,
        }));
    }
    out.add_json(
        "curves.json",
        &json!({
            "model": model.to_string(),
            "alphas": cfg.alphas,
            "kappa": cfg.kappa,
            "n_mc": cfg.n_mc,
            "seed": cfg.seed,
            "witness": witness_summary(&w),
            "curves": curves,
        }),
    );
    let dir = out.write(&out_dir(&args.common, "detect-curve"))?;
    println!(
        "{model}: delta* {:e}, {} curves over {} alphas",
        w.distance,
        cfg.sigmas.len(),
        cfg.alphas.len()
    );
    println!("wrote {}", dir.display());
    Ok(())
}

// ---------------------------------------------------------------- heatmap

#[derive(Args, Serialize)]
pub struct HeatmapArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Classical admixtures, comma separated.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Thermal weights, comma separated.
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Witness per row: reoptimize, or frozen at the first beta.
    #[arg(long, value_parser = ["reoptimize", "frozen"])]
    mode: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HeatmapConfig {
    grid: GridConfig,
    solver: SolverConfig,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    sigma: f64,
    kappa: f64,
    mode: WitnessMode,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            alphas: linspace(0.0, 1.0, 20),
            betas: linspace(0.0, 1.0, 10),
            sigma: 0.01,
            kappa: detection::DEFAULT_KAPPA,
            mode: WitnessMode::Reoptimize,
        }
    }
}

pub fn heatmap(args: HeatmapArgs) -> CliResult<()> {
    let cfg: HeatmapConfig = config::load(args.common.config.as_deref(), "heatmap", config::overrides(&args))?;
    let parts = cfg.grid.validate()?;
    let solver = cfg.solver.validate()?;
    if cfg.alphas.is_empty() || cfg.betas.is_empty() {
        return Err(CliError::validation("alphas and betas must be non-empty"));
    }
    for &alpha in &cfg.alphas {
        DetectionConfig {
            alpha,
            sigma: cfg.sigma,
            kappa: cfg.kappa,
            ..Default::default()
        }
        .validate()?;
    }
    for &beta in &cfg.betas {
        QuantumLatentModel::mix(beta)?;
    }

    let pipeline = parts.build(solver)?;
    let map = detection::heatmap(&cfg.alphas, &cfg.betas, cfg.sigma, cfg.kappa, &pipeline, cfg.mode)?;

    let mut csv = format!("beta,{}\n", csv_f64s(&map.alphas));
    for row in &map.rows {
        writeln!(csv, "{},{}", row.beta, csv_f64s(&row.p_det)).unwrap();
    }
    let mut out = RunOutput::new("heatmap", &cfg);
    out.add("heatmap.csv", csv.into_bytes());
    out.add_json("heatmap.json", &map);
    let dir = out.write(&out_dir(&args.common, "heatmap"))?;
    let classical = map.rows.iter().filter(|r| r.classical).count();
    println!(
        "{} x {} grid, {classical} classical rows, sigma {}",
        map.rows.len(),
        map.alphas.len(),
        map.sigma
    );
    println!("wrote {}", dir.display());
    Ok(())
}

// ---------------------------------------------------------------- protocol

#[derive(Args, Serialize)]
pub struct ProtocolArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Ground-truth latent model the trials are drawn from.
    #[arg(long)]
    truth: Option<String>,
    /// Latent model whose optimal witness is applied.
    #[arg(long)]
    witness_model: Option<String>,
    /// Trials per context M.
    #[arg(long)]
    trials: Option<usize>,
    /// Bootstrap resamples B.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Independent protocol runs; run r uses seed + r.
    #[arg(long)]
    runs: Option<usize>,
    /// Also write the trial log of the first run.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    save_trials: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ProtocolConfig {
    grid: GridConfig,
    solver: SolverConfig,
    truth: String,
    witness_model: String,
    trials: usize,
    bootstrap: usize,
    kappa: f64,
    seed: u64,
    runs: usize,
    save_trials: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            truth: "fock1".into(),
            witness_model: "fock1".into(),
            trials: 100,
            bootstrap: empirical::DEFAULT_BOOTSTRAP,
            kappa: detection::DEFAULT_KAPPA,
            seed: 0,
            runs: 1,
            save_trials: false,
        }
    }
}

pub fn protocol(args: ProtocolArgs) -> CliResult<()> {
    let cfg: ProtocolConfig = config::load(args.common.config.as_deref(), "protocol", config::overrides(&args))?;
    let parts = cfg.grid.validate()?;
    let solver = cfg.solver.validate()?;
    let truth = parse_model(&cfg.truth)?;
    let witness_model = parse_model(&cfg.witness_model)?;
    let budget = TrialBudget {
        bootstrap: cfg.bootstrap,
        ..TrialBudget::new(cfg.trials)
    };
    budget.validate()?;
    if !(cfg.kappa > 0.0 && cfg.kappa.is_finite()) {
        return Err(CliError::validation(format!(
            "kappa must be positive, got {}",
            cfg.kappa
        )));
    }
    if cfg.runs == 0 {
        return Err(CliError::validation("runs must be positive"));
    }

    let pipeline = parts.build(solver)?;
    let p_truth = pipeline.ideal(&truth)?.stats;
    let (_, w) = pipeline.witness_for(&witness_model)?;
    let reports = (0..cfg.runs as u64)
        .map(|r| empirical::run_protocol(&p_truth, &w, &budget, cfg.kappa, cfg.seed.wrapping_add(r)))
        .collect::<latentbell::Result<Vec<_>>>()?;
    let detections = reports.iter().filter(|r| r.detected).count();

    let mut out = RunOutput::new("protocol", &cfg);
    if cfg.save_trials {
        let seed = empirical::protocol_trial_seed(cfg.seed);
        let records = empirical::simulate_trials(&p_truth, cfg.trials, seed)?;
        let mut log = Vec::new();
        empirical::write_trial_log(&mut log, &records)?;
        out.add("trials.csv", log);
        out.add_json(
            "trials.json",
            &empirical::TrialLogMeta {
                contexts: p_truth.contexts(),
                outcomes: p_truth.outcomes(),
                regions: None,
                seed,
                model: Some(truth.to_string()),
            },
        );
    }
    out.add_json(
        "report.json",
        &json!({
            "truth": truth.to_string(),
            "witness_model": witness_model.to_string(),
            "witness": witness_summary(&w),
            "detections": detections,
            "detection_rate": detections as f64 / cfg.runs as f64,
            "runs": reports,
        }),
    );
    let dir = out.write(&out_dir(&args.common, "protocol"))?;
    let first = &reports[0];
    println!(
        "truth {truth}, witness {witness_model}: S_obs {:.6}, S_cl {:.6}, sigma_S {:.6}, detected {}",
        first.s_obs, first.s_cl, first.sigma_s, first.detected
    );
    if cfg.runs > 1 {
        println!("{detections} of {} runs detected", cfg.runs);
    }
    println!("wrote {}", dir.display());
    Ok(())
}

// ---------------------------------------------------------------- spin

#[derive(Args, Serialize)]
pub struct SpinArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[command(flatten)]
    solver: SolverArgs,
    /// Twice the spin quantum number.
    #[arg(long)]
    two_j: Option<usize>,
    /// State: basis:<2m>, coherent:<theta>,<phi> or mixed.
    #[arg(long)]
    state: Option<String>,
    /// CSV of readouts, rows theta,phi,m_th (radians).
    #[arg(long)]
    directions: Option<PathBuf>,
    /// Points of the classical sphere grid.
    #[arg(long)]
    sphere_points: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SpinConfig {
    solver: SolverConfig,
    two_j: usize,
    state: Option<String>,
    directions: Option<PathBuf>,
    sphere_points: usize,
}

impl Default for SpinConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            two_j: 2,
            state: None,
            directions: None,
            sphere_points: spin::DEFAULT_SPHERE_POINTS,
        }
    }
}

fn parse_spin_state(s: &str) -> CliResult<SpinStateSpec> {
    let bad = || CliError::validation(format!("unknown spin state '{s}'"));
    let s = s.trim();
    if s == "mixed" || s == "maximally_mixed" {
        return Ok(SpinStateSpec::MaximallyMixed);
    }
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    match kind {
        "basis" => Ok(SpinStateSpec::Basis {
            two_m: rest.trim().parse().map_err(|_| bad())?,
        }),
        "coherent" => {
            let (t, p) = rest.split_once(',').ok_or_else(bad)?;
            Ok(SpinStateSpec::Coherent {
                theta: t.trim().parse().map_err(|_| bad())?,
                phi: p.trim().parse().map_err(|_| bad())?,
            })
        }
        _ => Err(bad()),
    }
}

pub fn spin(args: SpinArgs) -> CliResult<()> {
    let cfg: SpinConfig = config::load(args.common.config.as_deref(), "spin", config::overrides(&args))?;
    let solver = cfg.solver.validate()?;
    let spec = parse_spin_state(
        cfg.state
            .as_deref()
            .ok_or_else(|| CliError::validation("a spin state is required (--state)"))?,
    )?;
    let path = cfg
        .directions
        .as_ref()
        .ok_or_else(|| CliError::validation("a readout file is required (--directions)"))?;
    let state = spec.build(cfg.two_j)?;
    let file = std::fs::File::open(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    let readouts = spin::read_readouts_csv(BufReader::new(file))?;
    for r in &readouts {
        spin::activation_povm(cfg.two_j, r)?;
    }
    let sphere = SphereGrid::fibonacci(cfg.sphere_points)?;

    let (p, w) = spin::run_spin_test(&state, &readouts, &sphere, &solver)?;

    let mut directions = Vec::new();
    spin::write_readouts_csv(&mut directions, &readouts)?;
    let mut out = RunOutput::new("spin", &cfg);
    out.add("stats.csv", stats_csv(&p)?);
    out.add("directions.csv", directions);
    out.add_json(
        "witness.json",
        &json!({
            "two_j": cfg.two_j,
            "state": spec,
            "readouts": readouts.len(),
            "sphere_points": sphere.len(),
            "result": w,
        }),
    );
    let dir = out.write(&out_dir(&args.common, "spin"))?;
    println!(
        "spin {}/2, {} readouts: delta* {:e} ({})",
        cfg.two_j,
        readouts.len(),
        w.distance,
        if w.classical { "classical" } else { "nonclassical" }
    );
    println!("wrote {}", dir.display());
    Ok(())
}

//! `threshold-lab` command-line front end.

mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use threshold_lab::asymptotics_validator::{expansion_sweep, geometric_grid};
use threshold_lab::green_functions::SpectralParameter;
use threshold_lab::spectrum_resolvent::{negative_eigenvalues_with_density, resolvent_zero_limit};
use threshold_lab::threshold_classifier::{classify, CaseData, ThresholdClassification, ThresholdTag};
use threshold_lab::wave_operator_probe::{annular_corpus, lp_ratio_sweep, PolarGrid, ProbeOperator};
use threshold_lab::zero_modes::{design_alpha, verify_zero_mode, zero_mode_space, ZeroMode};

use config::{global_tolerance, load_centres, load_config, RunConfig};
use report::{matrix, print_json, sci, sweep_csv, sweep_summary, vector, Table};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<threshold_lab::Error> for CliError {
    fn from(e: threshold_lab::Error) -> Self {
        if e.is_internal() {
            CliError::Internal(e.to_string())
        } else if e.is_input_error() || matches!(e, threshold_lab::Error::WrongCase(_)) {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

fn with_hint(e: threshold_lab::Error, hint: &str) -> CliError {
    match e {
        threshold_lab::Error::WrongCase(_) => CliError::Input(format!("{e}\nhint: {hint}")),
        other => other.into(),
    }
}

#[derive(Parser)]
#[command(name = "threshold-lab", version, about = "Point interactions in the plane: thresholds, spectra, expansions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    K,
    Omega,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the zero-energy threshold and print the decision margins.
    Classify { config: PathBuf },
    /// Negative eigenvalues -κ² as CSV.
    Spectrum {
        config: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        kappa_min: f64,
        #[arg(long, default_value_t = 1e6)]
        kappa_max: f64,
        #[arg(long, default_value_t = 64)]
        per_decade: usize,
    },
    /// Zero modes of a configuration, or a zero-mode design for a set of centres.
    ZeroMode {
        #[arg(required_unless_present = "design", conflicts_with = "design")]
        config: Option<PathBuf>,
        /// JSON file {"centres": [[x, y], ...]}.
        #[arg(long)]
        design: Option<PathBuf>,
    },
    /// Resolvent kernel along λ → 0 against its regular-case limit, as CSV.
    ResolventGrid {
        config: PathBuf,
        #[arg(long, num_args = 2, value_names = ["X1", "X2"], allow_negative_numbers = true)]
        x: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["Y1", "Y2"], allow_negative_numbers = true)]
        y: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        lambda_max: f64,
        #[arg(long, default_value_t = 1e-10)]
        lambda_min: f64,
        #[arg(long, default_value_t = 4)]
        per_decade: usize,
        /// Also write the JSON rate summary here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Low-energy expansion sweep; prints the JSON rate summary.
    ValidateAsymptotics {
        config: PathBuf,
        #[arg(long, default_value_t = 1e-2)]
        lambda_max: f64,
        #[arg(long, default_value_t = 1e-12)]
        lambda_min: f64,
        #[arg(long, default_value_t = 8)]
        per_decade: usize,
        /// Also write the per-λ rows as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// L^p ratio sweep of K or Ω_jk over the annular test corpus, as CSV.
    WaveProbe {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Operator::Omega)]
        operator: Operator,
        #[arg(long, default_value_t = 0)]
        j: usize,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.5, 2.0, 3.0, 4.0])]
        p: Vec<f64>,
        /// Use every n-th corpus element.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long, default_value_t = 40.0)]
        r_max: f64,
        #[arg(long, default_value_t = 2048)]
        n_r: usize,
        #[arg(long, default_value_t = 256)]
        n_theta: usize,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Classify { config } => cmd_classify(&load_config(&config)?),
        Command::Spectrum { config, kappa_min, kappa_max, per_decade } => {
            cmd_spectrum(&load_config(&config)?, kappa_min, kappa_max, per_decade)
        }
        Command::ZeroMode { config, design } => match (config, design) {
            (_, Some(path)) => cmd_design(&load_centres(&path)?),
            (Some(path), None) => cmd_zero_mode(&load_config(&path)?),
            (None, None) => Err(CliError::Input("give a configuration file or --design".into())),
        },
        Command::ResolventGrid { config, x, y, lambda_max, lambda_min, per_decade, summary } => {
            let point = |v: &[f64], name: &str| -> Result<[f64; 2], CliError> {
                match v {
                    [a, b] => Ok([*a, *b]),
                    _ => Err(CliError::Input(format!("--{name} needs two coordinates"))),
                }
            };
            let grid = geometric_grid(lambda_max, lambda_min, per_decade)?;
            cmd_resolvent_grid(&load_config(&config)?, point(&x, "x")?, point(&y, "y")?, &grid, summary)
        }
        Command::ValidateAsymptotics { config, lambda_max, lambda_min, per_decade, csv } => {
            let grid = geometric_grid(lambda_max, lambda_min, per_decade)?;
            cmd_validate(&load_config(&config)?, &grid, csv)
        }
        Command::WaveProbe { config, operator, j, k, p, stride, r_max, n_r, n_theta } => {
            if stride == 0 || n_r == 0 || n_theta == 0 || !(r_max > 0.0) {
                return Err(CliError::Input("--stride, --n-r, --n-theta and --r-max must be positive".into()));
            }
            let grid = PolarGrid { r_max, n_r, n_theta };
            cmd_wave_probe(&load_config(&config)?, operator, j, k, &p, stride, grid)
        }
    }
}

fn classification_json(cls: &ThresholdClassification) -> Value {
    let decisions: Vec<Value> = cls
        .diagnostics
        .decisions
        .iter()
        .map(|d| {
            json!({
                "stage": d.stage,
                "dimension": d.dimension,
                "kernel_rank": d.kernel_rank,
                "largest_kernel": d.largest_kernel,
                "smallest_retained": d.smallest_retained,
                "scale": d.scale,
            })
        })
        .collect();
    let case = match &cls.case {
        CaseData::Regular { inverse_block } => json!({ "inverse_block": matrix(inverse_block) }),
        CaseData::SWave { f, gamma0, b } => json!({ "f": vector(f.iter()), "gamma0": gamma0, "b": b }),
        CaseData::PWave { vectors, weights } => json!({
            "vectors": vectors.iter().map(|v| vector(v.iter())).collect::<Vec<_>>(),
            "weights": weights,
        }),
        CaseData::ZeroEigenvalue { basis, t1_g2tilde_t1, t1_g2_t1 } => json!({
            "basis": basis.iter().map(|v| vector(v.iter())).collect::<Vec<_>>(),
            "t1_g2tilde_t1": matrix(t1_g2tilde_t1),
            "t1_g2_t1": matrix(t1_g2_t1),
        }),
    };
    json!({
        "tag": cls.tag().label(),
        "tolerance": cls.diagnostics.tolerance,
        "margin": cls.margin(),
        "ill_conditioned": cls.diagnostics.ill_conditioned,
        "decisions": decisions,
        "rank_t": cls.t_basis.ncols(),
        "zero_mode_count": cls.zero_mode_count(),
        "case": case,
    })
}

fn cmd_classify(run: &RunConfig) -> Result<(), CliError> {
    let cls = classify(&run.configuration, run.tolerance)?;
    let mut out = classification_json(&cls);
    out["n"] = json!(run.configuration.n());
    print_json(&out)
}

fn cmd_spectrum(run: &RunConfig, lo: f64, hi: f64, per_decade: usize) -> Result<(), CliError> {
    let n = run.configuration.n();
    let states = negative_eigenvalues_with_density(&run.configuration, [lo, hi], per_decade)?;
    let mut header: Vec<String> = ["kappa", "energy", "multiplicity"].map(String::from).to_vec();
    header.extend((1..=n).map(|j| format!("c_{j}")));
    let mut t = Table::new(std::io::stdout().lock(), run.tolerance, &header)?;
    for s in &states {
        for v in &s.vectors {
            let mut row = vec![sci(s.kappa), sci(s.energy()), s.multiplicity.to_string()];
            row.extend(v.iter().map(|c| sci(*c)));
            t.row(&row)?;
        }
    }
    t.finish()
}

fn mode_json(mode: &ZeroMode) -> Value {
    let mut v = json!({ "a": vector(mode.coefficients().iter()) });
    match SpectralParameter::imaginary(1.0).and_then(|mu| verify_zero_mode(mode, &mu)) {
        Ok(r) => {
            v["residual"] = json!(r.residual);
            v["decay_proxy"] = json!(r.decay_proxy);
        }
        Err(e) => v["verification"] = json!(e.to_string()),
    }
    match mode.far_field() {
        Ok(f) => v["far_field_exponent"] = json!(f.exponent),
        Err(e) => v["far_field"] = json!(e.to_string()),
    }
    v
}

fn cmd_zero_mode(run: &RunConfig) -> Result<(), CliError> {
    let tag = classify(&run.configuration, run.tolerance).map(|c| c.tag().label().to_string());
    let modes = zero_mode_space(&run.configuration, run.tolerance)?;
    let listed = if modes.is_empty() { json!("none") } else { Value::from(modes.iter().map(mode_json).collect::<Vec<_>>()) };
    let tag = match tag {
        Ok(t) => json!(t),
        Err(e) => json!(e.to_string()),
    };
    print_json(&json!({ "tag": tag, "zero_modes": listed }))
}

fn cmd_design(centres: &[[f64; 2]]) -> Result<(), CliError> {
    if centres.len() < 3 {
        return print_json(&json!({ "design": "none", "reason": "fewer than three centres" }));
    }
    let Some(design) = design_alpha(centres)? else {
        return print_json(&json!({ "design": "none", "reason": "moment constraints force a = 0" }));
    };
    let mode = mode_json(&design.mode);
    let tol = global_tolerance()?;
    let tag = classify(design.mode.config(), tol)?.tag();
    print_json(&json!({
        "design": { "alphas": design.alphas, "mode": mode, "tag": tag.label() },
    }))
}

fn cmd_resolvent_grid(
    run: &RunConfig,
    x: [f64; 2],
    y: [f64; 2],
    grid: &[f64],
    summary: Option<PathBuf>,
) -> Result<(), CliError> {
    let cls = classify(&run.configuration, run.tolerance)?;
    let hint = "near λ = 0 the resolvent of a non-regular configuration diverges; \
                run `threshold-lab validate-asymptotics` for its expansion";
    if cls.tag() != ThresholdTag::Regular {
        return Err(CliError::Input(format!("configuration is {}, not regular\nhint: {hint}", cls.tag())));
    }
    if cls.diagnostics.ill_conditioned {
        return Err(CliError::Input(format!(
            "configuration is regular only by a margin of {:e}, too close to a threshold resonance\nhint: {hint}",
            cls.margin().unwrap_or(0.0)
        )));
    }
    let report = resolvent_zero_limit(&run.configuration, x, y, grid).map_err(|e| with_hint(e, hint))?;
    if let Some(path) = summary {
        let text = serde_json::to_string_pretty(&sweep_summary(&report)).map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    sweep_csv(std::io::stdout().lock(), run.tolerance, &report)
}

fn cmd_validate(run: &RunConfig, grid: &[f64], csv: Option<PathBuf>) -> Result<(), CliError> {
    let cls = classify(&run.configuration, run.tolerance)?;
    let report = expansion_sweep(&cls, &run.configuration, grid)?;
    if let Some(path) = csv {
        let file = std::fs::File::create(&path).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        sweep_csv(file, run.tolerance, &report)?;
    }
    let mut out = sweep_summary(&report);
    out["tag"] = json!(cls.tag().label());
    out["tolerance"] = json!(run.tolerance);
    print_json(&out)
}

fn cmd_wave_probe(
    run: &RunConfig,
    operator: Operator,
    j: usize,
    k: usize,
    p: &[f64],
    stride: usize,
    grid: PolarGrid,
) -> Result<(), CliError> {
    let corpus: Vec<_> = annular_corpus().into_iter().step_by(stride).collect();
    let cls;
    let op = match operator {
        Operator::K => ProbeOperator::K,
        Operator::Omega => {
            cls = classify(&run.configuration, run.tolerance)?;
            ProbeOperator::Omega { classification: &cls, config: &run.configuration, j, k }
        }
    };
    let report = lp_ratio_sweep(op, &corpus, grid, p).map_err(|e| with_hint(e, "use --operator k"))?;
    let header = ["p", "ratio", "ratio_refined", "change", "stable"].map(String::from);
    let mut t = Table::new(std::io::stdout().lock(), run.tolerance, &header)?;
    for r in &report.rows {
        t.row(&[sci(r.p), sci(r.ratio), sci(r.ratio_refined), sci(r.change), report.stable.to_string()])?;
    }
    t.finish()
}

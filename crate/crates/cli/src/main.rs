use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use driftscope::analysis::{analyze, AnalysisConfig, AnalysisResults};
use driftscope::chronology::{split_results_csv, NormalityMode};
use driftscope::ingest::{load_generic, Diagnostic, DiagnosticLevel, Loaded, NamedDataset, SchemaConfig};
use driftscope::kernel::{weight_curves, weight_curves_csv, KernelType, DEFAULT_KAPPA};
use driftscope::regression::build_design;
use driftscope::report::{render_report, render_weight_curves};
use driftscope::stats::DEFAULT_ALPHA;
use driftscope::sweep::{verdict_table, verdicts_json, DEFAULT_EPSILON};
use driftscope::synth::{gen_drifting, gen_stationary, ProcessSpec};
use driftscope::Error;

const AFTER_HELP: &str = "\
Exit codes:
  0  success
  2  validation error (unreadable file, bad column, bad flag value)
  3  analysis error (no well-formed training set, fit or report failure)";

#[derive(Parser)]
#[command(name = "driftscope", version, about = "Kernel-weighted stationarity analysis for effort datasets", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run splits, bandwidth sweeps and verdicts, and write a report.
    #[command(after_help = AFTER_HELP)]
    Analyze(AnalyzeArgs),
    /// Export kernel weight curves as CSV and SVG.
    #[command(after_help = AFTER_HELP)]
    Weights(WeightsArgs),
    /// Generate a synthetic dataset with a known process.
    #[command(after_help = AFTER_HELP)]
    Synth(SynthArgs),
    /// Regenerate the markdown report from a results.json file.
    #[command(after_help = AFTER_HELP)]
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetKind {
    Nasa93,
    Desharnais,
    Kitchenham,
    Generic,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "DRIFTSCOPE_OUTPUT_DIR", default_value = "driftscope-out")]
    out: PathBuf,
    /// Print machine-readable JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Dataset loader; repeat together with --path for several datasets.
    #[arg(long, value_enum, required = true)]
    dataset: Vec<DatasetKind>,
    /// Input CSV, one per --dataset.
    #[arg(long, required = true)]
    path: Vec<PathBuf>,
    /// Schema config (TOML), one per generic dataset in order.
    #[arg(long)]
    schema: Vec<PathBuf>,
    /// Comma-separated kernels.
    #[arg(long, value_delimiter = ',', default_value = "uniform,gaussian,epanechnikov,triangular")]
    kernels: Vec<KernelType>,
    /// Grid as `start..end`, `start..end:step` or a comma list.
    #[arg(long, default_value = "1..100", value_parser = parse_grid)]
    bandwidths: Grid,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
    /// Shapiro-Wilk significance level.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Normality mode: paper_fixed or strict.
    #[arg(long, default_value = "paper_fixed")]
    mode: NormalityMode,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write design matrices and coefficients for every fit.
    #[arg(long)]
    dump_fits: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct WeightsArgs {
    #[arg(long, default_value = "gaussian")]
    kernel: KernelType,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,25,100")]
    bandwidths: Vec<f64>,
    /// Elapsed years to plot.
    #[arg(long, default_value_t = 20)]
    years: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[command(subcommand)]
    process: Process,
}

#[derive(Args)]
struct SynthCommon {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    years: usize,
    #[arg(long, default_value_t = 10)]
    per_year: usize,
    /// Log-scale noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    intercept: f64,
    /// File stem for the emitted CSV, TOML and JSON.
    #[arg(long)]
    name: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand)]
enum Process {
    /// Constant coefficients.
    Stationary {
        #[arg(long, default_value_t = 1.0)]
        slope: f64,
        #[command(flatten)]
        common: SynthCommon,
    },
    /// Slope ramp, or an abrupt switch with --switch-at.
    Drifting {
        #[arg(long, default_value_t = 0.5)]
        slope_from: f64,
        #[arg(long, default_value_t = 1.5)]
        slope_to: f64,
        /// Year offset of an abrupt switch from (intercept, slope-from) to
        /// (intercept-after, slope-to).
        #[arg(long)]
        switch_at: Option<usize>,
        #[arg(long)]
        intercept_after: Option<f64>,
        #[command(flatten)]
        common: SynthCommon,
    },
}

#[derive(Args)]
struct ReportArgs {
    /// results.json written by `analyze`.
    #[arg(long)]
    from: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone)]
struct Grid(Vec<f64>);

fn parse_grid(raw: &str) -> Result<Grid, String> {
    let number = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    let values = if let Some((start, rest)) = raw.split_once("..") {
        let (end, step) = match rest.split_once(':') {
            Some((e, s)) => (number(e)?, number(s)?),
            None => (number(rest)?, 1.0),
        };
        let start = number(start)?;
        if !(step > 0.0) || end < start {
            return Err(format!("bad range {raw:?}"));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + step * i as f64).collect()
    } else {
        raw.split(',').map(number).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("empty grid".into());
    }
    Ok(Grid(values))
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_validation() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

fn validation(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult = Result<(), Failure>;

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Failure {
            code: 3,
            message: format!("{}: {e}", parent.display()),
        })?;
    }
    std::fs::write(path, contents).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    })
}

fn to_json(value: &impl serde::Serialize) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: 3,
        message: e.to_string(),
    })
}

fn report_diagnostics(source: &Path, diagnostics: &[Diagnostic]) {
    for d in diagnostics {
        let level = match d.level {
            DiagnosticLevel::Warning => "warning",
            DiagnosticLevel::Error => "error",
        };
        eprintln!("{level}: {}: [{}] {}", source.display(), d.code, d.message);
    }
}

fn load(kind: DatasetKind, path: &Path, schemas: &mut impl Iterator<Item = PathBuf>) -> Result<Loaded, Failure> {
    let named = match kind {
        DatasetKind::Nasa93 => NamedDataset::Nasa93,
        DatasetKind::Desharnais => NamedDataset::Desharnais,
        DatasetKind::Kitchenham => NamedDataset::Kitchenham,
        DatasetKind::Generic => {
            let schema = schemas
                .next()
                .ok_or_else(|| validation("generic dataset needs a --schema"))?;
            let config = SchemaConfig::read(&schema)?;
            return Ok(load_generic(path, &config)?);
        }
    };
    Ok(named.load(path)?)
}

fn cmd_analyze(args: AnalyzeArgs) -> CliResult {
    if args.dataset.len() != args.path.len() {
        return Err(validation(format!(
            "{} --dataset values but {} --path values",
            args.dataset.len(),
            args.path.len()
        )));
    }
    let config = AnalysisConfig {
        kernels: args.kernels.clone(),
        bandwidths: args.bandwidths.0.clone(),
        epsilon: args.epsilon,
        kappa: args.kappa,
        alpha: args.alpha,
        mode: args.mode,
        keep_coefficients: args.dump_fits,
        jobs: args.jobs,
        ..AnalysisConfig::default()
    };
    config.check()?;

    let mut schemas = args.schema.clone().into_iter();
    let mut loaded = Vec::new();
    for (kind, path) in args.dataset.iter().zip(&args.path) {
        let l = load(*kind, path, &mut schemas)?;
        report_diagnostics(path, &l.diagnostics);
        loaded.push((path.clone(), l));
    }

    let analyses = loaded
        .iter()
        .map(|(_, l)| analyze(&l.dataset, &config))
        .collect::<Result<Vec<_>, _>>()?;
    let results = AnalysisResults {
        config: config.clone(),
        analyses,
    };

    let out = &args.output.out;
    let verdicts = results.verdicts();
    write(&out.join("results.json"), results.to_json()?)?;
    write(&out.join("verdicts.json"), verdicts_json(&verdicts)?)?;
    let all_results: Vec<_> = results
        .analyses
        .iter()
        .flat_map(|a| a.results.iter().cloned())
        .collect();
    write(&out.join("splits.csv"), split_results_csv(&all_results))?;
    let diagnostics: Vec<_> = loaded
        .iter()
        .map(|(p, l)| json!({"source": p.display().to_string(), "dataset": l.dataset.name, "diagnostics": l.diagnostics}))
        .collect();
    write(&out.join("diagnostics.json"), to_json(&diagnostics)?)?;
    render_report(&results)?.write_to(out)?;

    if args.dump_fits {
        for ((_, l), a) in loaded.iter().zip(&results.analyses) {
            for split in &a.splits {
                let Some(r) = a.results.iter().find(|r| r.split.split_index == split.split_index) else {
                    continue;
                };
                let training = l.dataset.select(&split.training_record_ids);
                let spec = l.dataset.spec.restricted_to(&training);
                let design = build_design(&training, &spec, &r.transform_plan)?;
                write(
                    &out.join(format!("fits/{}-split{:02}-design.csv", a.dataset, split.split_index)),
                    design.to_csv(),
                )?;
            }
        }
    }

    let echo = json!({
        "command": "analyze",
        "version": env!("CARGO_PKG_VERSION"),
        "datasets": args.dataset.iter().zip(&args.path).map(|(k, p)| json!({
            "loader": k.to_possible_value().map(|v| v.get_name().to_string()),
            "path": p.display().to_string(),
        })).collect::<Vec<_>>(),
        "schemas": args.schema.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "kernels": config.kernels,
        "bandwidths": config.bandwidths,
        "epsilon": config.epsilon,
        "kappa": config.kappa,
        "alpha": config.alpha,
        "mode": config.mode,
        "gap_floor": config.gap_floor,
        "jobs": args.jobs,
        "dump_fits": args.dump_fits,
        "out": out.display().to_string(),
    });
    write(&out.join("config_echo.json"), to_json(&echo)?)?;

    if args.output.json {
        println!("{}", verdicts_json(&verdicts)?);
    } else {
        print!("{}", verdict_table(&verdicts));
    }
    Ok(())
}

fn cmd_weights(args: WeightsArgs) -> CliResult {
    let points = weight_curves(args.kernel, &args.bandwidths, args.years)?;
    let svg = render_weight_curves(args.kernel, &args.bandwidths, args.years)?;
    let out = &args.output.out;
    let stem = format!("weights-{}", args.kernel.as_str());
    let csv_path = out.join(format!("{stem}.csv"));
    let svg_path = out.join(format!("{stem}.svg"));
    write(&csv_path, weight_curves_csv(&points)?)?;
    write(&svg_path, &svg)?;
    write(
        &out.join("config_echo.json"),
        to_json(&json!({
            "command": "weights",
            "version": env!("CARGO_PKG_VERSION"),
            "kernel": args.kernel,
            "bandwidths": args.bandwidths,
            "years": args.years,
            "out": out.display().to_string(),
        }))?,
    )?;
    if args.output.json {
        println!("{}", to_json(&points)?);
    } else {
        println!("wrote {} and {}", csv_path.display(), svg_path.display());
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> CliResult {
    let (synth, common, echo) = match args.process {
        Process::Stationary { slope, common } => {
            let spec = ProcessSpec::stationary(
                common.years,
                common.per_year,
                common.intercept,
                slope,
                common.sigma.unwrap_or(0.3),
                common.seed,
            );
            let echo = json!({"process": "stationary", "spec": spec});
            (gen_stationary(&spec)?, common, echo)
        }
        Process::Drifting {
            slope_from,
            slope_to,
            switch_at,
            intercept_after,
            common,
        } => {
            let sigma = common.sigma.unwrap_or(0.2);
            let spec = match switch_at {
                Some(at) => ProcessSpec::regime_switch(
                    common.years,
                    common.per_year,
                    (common.intercept, slope_from),
                    (intercept_after.unwrap_or(common.intercept), slope_to),
                    at,
                    sigma,
                    common.seed,
                ),
                None => ProcessSpec::slope_ramp(
                    common.years,
                    common.per_year,
                    common.intercept,
                    slope_from,
                    slope_to,
                    sigma,
                    common.seed,
                ),
            };
            let echo = json!({"process": "drifting", "spec": spec});
            (gen_drifting(&spec)?, common, echo)
        }
    };
    let out = &common.output.out;
    let stem = common.name.clone().unwrap_or_else(|| synth.dataset.name.clone());
    let csv_path = out.join(format!("{stem}.csv"));
    let toml_path = out.join(format!("{stem}.toml"));
    let profile_path = out.join(format!("{stem}.profile.json"));
    let mut schema = synth.schema_config();
    schema.name = stem.clone();
    write(&csv_path, synth.to_csv())?;
    write(&toml_path, schema.to_toml()?)?;
    write(&profile_path, synth.profile_json())?;
    let mut echo = echo;
    echo["command"] = json!("synth");
    echo["version"] = json!(env!("CARGO_PKG_VERSION"));
    echo["out"] = json!(out.display().to_string());
    write(&out.join("config_echo.json"), to_json(&echo)?)?;
    if common.output.json {
        println!(
            "{}",
            to_json(&json!({
                "csv": csv_path.display().to_string(),
                "schema": toml_path.display().to_string(),
                "profile": profile_path.display().to_string(),
                "records": synth.dataset.records.len(),
            }))?
        );
    } else {
        println!(
            "wrote {} ({} projects), {} and {}",
            csv_path.display(),
            synth.dataset.records.len(),
            toml_path.display(),
            profile_path.display()
        );
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.from)
        .map_err(|e| validation(format!("{}: {e}", args.from.display())))?;
    let results = AnalysisResults::from_json(&text)
        .map_err(|e| validation(format!("{}: {e}", args.from.display())))?;
    let report = render_report(&results)?;
    let out = &args.output.out;
    report.write_to(out)?;
    if args.output.json {
        println!("{}", verdicts_json(&results.verdicts())?);
    } else {
        println!(
            "wrote {} with {} figures",
            out.join("report.md").display(),
            report.assets.len()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Weights(args) => cmd_weights(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

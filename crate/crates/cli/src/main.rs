//! `fuzentra` — EEG complexity pipeline CLI.
//!
//! Exit codes: 0 success, 1 data error, 2 configuration error.

use clap::{Args, Parser, Subcommand};
use fuzentra_core::classify::{cross_validate, CvConfig, ModelKind, TrainConfig};
use fuzentra_core::emd::{decompose, SiftConfig};
use fuzentra_core::entropy::{multiscale_profile_with, EntropyParams, Method};
use fuzentra_core::io;
use fuzentra_core::pipeline::{
    run_pipeline, write_cv_summary_csv, write_roc_csv, write_scale_tests_csv, PipelineConfig,
    PipelineError, ScaleTest,
};
use fuzentra_core::signal::{MultiChannelEpoch, Condition};
use fuzentra_core::stats::{fdr, FdrMethod, TTestKind, t_test};
use fuzentra_core::synth::{gen_cohort, CohortSpec};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fuzentra", version, about = "Multi-scale inherent fuzzy entropy EEG pipeline")]
struct Cli {
    /// Top-level seed; all stage randomness derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Pipeline configuration file (flat key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort directory.
    Synth(SynthArgs),
    /// Decompose a signal into intrinsic mode functions.
    Decompose(DecomposeArgs),
    /// Multi-scale entropy profile of a signal.
    Entropy(EntropyArgs),
    /// CCA-based artifact removal of a multichannel epoch.
    Denoise(DenoiseArgs),
    /// Per-scale t-tests with FDR correction over feature matrices.
    Stats(StatsArgs),
    /// Train/evaluate a phase classifier with repeated cross-validation.
    Classify(ClassifyArgs),
    /// Run the full pipeline over a cohort directory.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Cohort spec file (keys: n_hc, n_patients, trend_hc, trend_inter,
    /// trend_pre, beta0, seed). Defaults are used when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output cohort directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Input signal CSV (first channel is decomposed).
    #[arg(long)]
    input: PathBuf,
    /// Output directory for component CSVs and the manifest.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    sd_threshold: f64,
    #[arg(long, default_value_t = 100)]
    max_sift: usize,
    #[arg(long, default_value_t = 12)]
    max_imfs: usize,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output profile CSV (scale,value).
    #[arg(long)]
    output: PathBuf,
    /// apen | sampen | fuzzen | inherent
    #[arg(long, default_value = "inherent")]
    method: String,
    #[arg(long, default_value_t = 20)]
    scales: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 2.0)]
    n: f64,
    #[arg(long, default_value_t = 0.2)]
    r: f64,
    /// Trend-filter cutoff for the inherent method (Hz).
    #[arg(long, default_value_t = 1.0)]
    detrend_cutoff: f64,
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Stimulus frequency (Hz).
    #[arg(long, default_value_t = 15.0)]
    f1: f64,
    /// Components to keep.
    #[arg(long, default_value_t = 2)]
    keep: usize,
    /// Sidecar CSV listing canonical correlations.
    #[arg(long)]
    correlations: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// First group matrix (subject_id,s1..sT).
    #[arg(long)]
    group_a: PathBuf,
    /// Second group matrix.
    #[arg(long)]
    group_b: PathBuf,
    /// paired | independent
    #[arg(long, default_value = "independent")]
    kind: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// bh | by
    #[arg(long, default_value = "bh")]
    fdr: String,
    /// Output results CSV (scale,t,df,p,adjusted_p,rejected).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Feature CSV (subject_id,label,f1..fK).
    #[arg(long)]
    features: PathBuf,
    /// lda | knn | adaboost
    #[arg(long, default_value = "adaboost")]
    model: String,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    #[arg(long, default_value_t = 3)]
    knn_k: usize,
    #[arg(long, default_value_t = 8)]
    boost_rounds: usize,
    /// Inner-fold hyperparameter grid search.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    tune: bool,
    #[arg(long)]
    out_summary: PathBuf,
    #[arg(long)]
    out_roc: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// Cohort data directory (labels.csv plus recording directories).
    #[arg(long)]
    data: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Config(String),
    Data(String),
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<io::CsvError> for CliError {
    fn from(e: io::CsvError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers;
    let run = || -> Result<(), CliError> {
        match &cli.command {
            Command::Synth(args) => cmd_synth(&cli, args),
            Command::Decompose(args) => cmd_decompose(args),
            Command::Entropy(args) => cmd_entropy(args),
            Command::Denoise(args) => cmd_denoise(args),
            Command::Stats(args) => cmd_stats(args),
            Command::Classify(args) => cmd_classify(&cli, args),
            Command::Pipeline(args) => cmd_pipeline(&cli, args),
        }
    };
    let result = if workers > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(CliError::Config(format!("worker pool: {e}"))),
        }
    } else {
        run()
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cmd_synth(cli: &Cli, args: &SynthArgs) -> Result<(), CliError> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            CohortSpec::parse(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => CohortSpec::default(),
    };
    if cli.seed != 0 {
        spec.seed = cli.seed;
    }
    let metas = gen_cohort(&spec, &args.out).map_err(|e| CliError::Data(e.to_string()))?;
    println!(
        "wrote {} recording sessions to {}",
        metas.len(),
        args.out.display()
    );
    Ok(())
}

fn read_first_channel(path: &Path) -> Result<fuzentra_core::TimeSeries, CliError> {
    let channels = io::read_signal_csv(path)?;
    Ok(channels
        .into_iter()
        .next()
        .expect("reader guarantees at least one channel")
        .1)
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<(), CliError> {
    let ts = read_first_channel(&args.input)?;
    let cfg = SiftConfig {
        sd_threshold: args.sd_threshold,
        max_sift_iterations: args.max_sift,
        max_imfs: args.max_imfs,
    };
    if !(0.0 < cfg.sd_threshold && cfg.sd_threshold < 1.0) {
        return Err(CliError::Config("sd_threshold must be in (0, 1)".into()));
    }
    let d = decompose(&ts, &cfg).map_err(|e| CliError::Data(e.to_string()))?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    let freqs = d.mean_frequencies();
    let mut manifest: Vec<Vec<String>> = Vec::new();
    for (i, (imf, freq)) in d.imfs.iter().zip(&freqs).enumerate() {
        let name = format!("imf_{:02}", i + 1);
        io::write_series_csv(&args.out.join(format!("{name}.csv")), &name, imf)?;
        manifest.push(vec![name, io::fmt_f64(*freq)]);
    }
    io::write_series_csv(&args.out.join("residue.csv"), "residue", &d.residue)?;
    io::write_table(
        &args.out.join("manifest.csv"),
        "component,mean_frequency_hz",
        &manifest,
    )?;
    println!(
        "decomposed {} samples into {} IMFs plus residue",
        ts.len(),
        d.imfs.len()
    );
    Ok(())
}

fn cmd_entropy(args: &EntropyArgs) -> Result<(), CliError> {
    let method = Method::parse(&args.method)
        .ok_or_else(|| CliError::Config(format!("unknown method {:?}", args.method)))?;
    let ts = read_first_channel(&args.input)?;
    let params = EntropyParams {
        m: args.m,
        n: args.n,
        r: args.r,
    };
    let profile = multiscale_profile_with(
        &ts,
        method,
        &params,
        args.scales,
        &SiftConfig::default(),
        args.detrend_cutoff,
    )
    .map_err(|e| CliError::Data(e.to_string()))?;
    io::write_profile_csv(&args.output, profile.values())?;
    Ok(())
}

fn cmd_denoise(args: &DenoiseArgs) -> Result<(), CliError> {
    let channels = io::read_signal_csv(&args.input)?;
    let epoch = MultiChannelEpoch::new(channels, Condition::SsvepTrial(1))
        .map_err(|e| CliError::Data(e.to_string()))?;
    let tmpl = fuzentra_core::cca::make_template(args.f1, epoch.len(), epoch.sample_rate())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let sol = fuzentra_core::cca::cca_solve(&epoch, &tmpl)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let cleaned = fuzentra_core::cca::denoise(&epoch, &sol, args.keep)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let out_channels: Vec<(String, &fuzentra_core::TimeSeries)> = cleaned
        .channels()
        .iter()
        .map(|(n, ts)| (n.clone(), ts))
        .collect();
    io::write_signal_csv(&args.output, &out_channels)?;
    if let Some(path) = &args.correlations {
        let rows: Vec<Vec<String>> = sol
            .correlations
            .iter()
            .enumerate()
            .map(|(i, rho)| vec![(i + 1).to_string(), io::fmt_f64(*rho)])
            .collect();
        io::write_table(path, "component,rho", &rows)?;
    }
    Ok(())
}

/// One group matrix: subject ids with per-scale values (NA allowed).
fn read_matrix(path: &Path) -> Result<(Vec<String>, Vec<Vec<Option<f64>>>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: empty file", path.display())))?;
    if !header.starts_with("subject_id,") {
        return Err(CliError::Data(format!(
            "{}: expected header subject_id,s1..",
            path.display()
        )));
    }
    let n_cols = header.split(',').count();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_cols {
            return Err(CliError::Data(format!(
                "{}:{}: expected {} fields",
                path.display(),
                idx + 2,
                n_cols
            )));
        }
        ids.push(fields[0].to_string());
        let row = fields[1..]
            .iter()
            .map(|f| {
                if *f == "NA" {
                    Ok(None)
                } else {
                    io::parse_field_f64(path, idx + 2, f).map(Some)
                }
            })
            .collect::<Result<Vec<Option<f64>>, _>>()?;
        rows.push(row);
    }
    Ok((ids, rows))
}

fn cmd_stats(args: &StatsArgs) -> Result<(), CliError> {
    let kind = match args.kind.as_str() {
        "paired" => TTestKind::Paired,
        "independent" => TTestKind::Independent,
        other => return Err(CliError::Config(format!("unknown kind {other:?}"))),
    };
    let method = match args.fdr.as_str() {
        "bh" => FdrMethod::BenjaminiHochberg,
        "by" => FdrMethod::BenjaminiYekutieli,
        other => return Err(CliError::Config(format!("unknown fdr {other:?}"))),
    };
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Config(format!(
            "alpha must be in (0, 1), got {}",
            args.alpha
        )));
    }
    let (ids_a, rows_a) = read_matrix(&args.group_a)?;
    let (ids_b, rows_b) = read_matrix(&args.group_b)?;
    let scales = rows_a.first().map_or(0, |r| r.len());
    if rows_b.first().map_or(0, |r| r.len()) != scales {
        return Err(CliError::Data("group matrices have different scale counts".into()));
    }

    let mut rows: Vec<ScaleTest> = Vec::with_capacity(scales);
    for s in 0..scales {
        let result = match kind {
            TTestKind::Paired => {
                // align rows by subject id
                let map_b: BTreeMap<&str, usize> = ids_b
                    .iter()
                    .enumerate()
                    .map(|(i, id)| (id.as_str(), i))
                    .collect();
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (i, id) in ids_a.iter().enumerate() {
                    if let Some(&j) = map_b.get(id.as_str()) {
                        if let (Some(x), Some(y)) = (rows_a[i][s], rows_b[j][s]) {
                            a.push(x);
                            b.push(y);
                        }
                    }
                }
                if a.len() < 2 {
                    None
                } else {
                    t_test(&a, &b, kind).ok()
                }
            }
            TTestKind::Independent => {
                let a: Vec<f64> = rows_a.iter().filter_map(|r| r[s]).collect();
                let b: Vec<f64> = rows_b.iter().filter_map(|r| r[s]).collect();
                if a.len() < 2 || b.len() < 2 {
                    None
                } else {
                    t_test(&a, &b, kind).ok()
                }
            }
        };
        rows.push(match result {
            Some(t) => ScaleTest {
                scale: s + 1,
                statistic: Some(t.statistic),
                df: Some(t.degrees_of_freedom),
                p: Some(t.p_value),
                adjusted_p: None,
                rejected: false,
            },
            None => ScaleTest {
                scale: s + 1,
                statistic: None,
                df: None,
                p: None,
                adjusted_p: None,
                rejected: false,
            },
        });
    }
    let defined: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.p.map(|p| (i, p)))
        .collect();
    if !defined.is_empty() {
        let ps: Vec<f64> = defined.iter().map(|(_, p)| *p).collect();
        let outcome = fdr(&ps, args.alpha, method).map_err(|e| CliError::Data(e.to_string()))?;
        for ((idx, _), (adj, rej)) in defined
            .iter()
            .zip(outcome.adjusted_p.iter().zip(&outcome.rejected))
        {
            rows[*idx].adjusted_p = Some(*adj);
            rows[*idx].rejected = *rej;
        }
    }
    write_scale_tests_csv(&args.output, &rows)?;
    Ok(())
}

fn cmd_classify(cli: &Cli, args: &ClassifyArgs) -> Result<(), CliError> {
    let model = ModelKind::parse(&args.model)
        .ok_or_else(|| CliError::Config(format!("unknown model {:?}", args.model)))?;
    let features = io::read_features_csv(&args.features)?;
    let cv_cfg = CvConfig {
        folds: args.folds,
        repeats: args.repeats,
        tune: args.tune,
    };
    let train_cfg = TrainConfig {
        knn_k: args.knn_k,
        boost_rounds: args.boost_rounds,
        ..TrainConfig::default()
    };
    let summary = cross_validate(model, &features, &cv_cfg, &train_cfg, cli.seed)
        .map_err(|e| CliError::Data(e.to_string()))?;
    write_cv_summary_csv(&args.out_summary, model, args.folds, args.repeats, &summary)?;
    write_roc_csv(&args.out_roc, &summary.roc_points)?;
    println!(
        "accuracy {:.3} ({:.3}), AUC {:.3} ({:.3})",
        summary.accuracy.mean, summary.accuracy.sd, summary.auc.mean, summary.auc.sd
    );
    Ok(())
}

fn cmd_pipeline(cli: &Cli, args: &PipelineArgs) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            PipelineConfig::parse(&text)?
        }
        None => PipelineConfig::default(),
    };
    if cli.seed != 0 {
        cfg.seed = cli.seed;
    }
    if cli.workers != 0 {
        // the surrounding pool (built in main) already bounds parallelism
        cfg.workers = 0;
    }
    let report = run_pipeline(&cfg, &args.data, &args.out)?;
    print!("{}", report.render_text());
    Ok(())
}

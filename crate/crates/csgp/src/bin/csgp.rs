//! Command-line interface: dataset synthesis, training, prediction,
//! cross-validation, and benchmarks.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use csgp::bench::append_reports_csv;
use csgp::config::{load_scenario, Settings};
use csgp::model_io::TrainedModel;
use csgp::{
    classification_error, cross_validate, load_csv, mean_nlpd, optimize, run_scenario, save_csv,
    synth_clusters, Dataset, InputMatrix,
};

#[derive(Parser)]
#[command(
    name = "csgp",
    about = "Sparse Gaussian-process binary classification with compactly supported kernels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config file + repeatable key=value overrides, shared by the modeling
/// subcommands.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable), e.g. --set ep_tol=1e-6.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Kernel kind: se, pp0, pp1, pp2, pp3.
    #[arg(long)]
    kernel: Option<String>,
    /// Seed for all randomized procedures.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn build(&self) -> Result<Settings, Box<dyn std::error::Error>> {
        let mut settings = Settings::default();
        if let Some(path) = &self.config {
            settings.load_file(path)?;
        }
        for kv in &self.sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
            settings.apply(k.trim(), v.trim())?;
        }
        if let Some(kernel) = &self.kernel {
            settings.apply("kernel", kernel)?;
        }
        if let Some(seed) = self.seed {
            settings.apply("seed", &seed.to_string())?;
        }
        Ok(settings)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cluster-labeled dataset as CSV.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 200)]
        centers: usize,
        #[arg(long, default_value_t = 10.0)]
        box_side: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV path (features first, label last).
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit MAP hyperparameters and save a model file.
    Train {
        /// Training data CSV.
        #[arg(long)]
        data: PathBuf,
        /// Output model file.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Predict with a saved model; writes a predictions CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Input CSV: features only, or features plus a label column for
        /// metric reporting.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// k-fold cross-validation with per-fold re-optimization.
    Cv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Optional per-fold results CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run a benchmark scenario file; appends rows to a results CSV.
    Bench {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(err) = run() {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

fn run() -> Result<(), Box<dyn std::error::Error>> {
    match Cli::parse().command {
        Command::Synth {
            n,
            d,
            centers,
            box_side,
            seed,
            out,
        } => {
            let ds = synth_clusters(n, d, centers, box_side, seed);
            save_csv(&ds, &out)?;
            println!(
                "wrote {} points ({}-d, {} centers) to {}",
                n,
                d,
                centers,
                out.display()
            );
        }
        Command::Train {
            data,
            model,
            config,
        } => {
            let settings = config.build()?;
            let mut ds = load_csv(&data, settings.label_last)?;
            if settings.standardize {
                ds.standardize();
            }
            let fit = optimize(&ds, &settings.model)?;
            println!(
                "MAP fit: kernel={} sigma2={:.4} length_scales={:?} (objective {:.4}, {} iterations{})",
                settings.model.kind,
                fit.hyp.sigma2,
                fit.hyp.length_scales,
                fit.objective,
                fit.iterations,
                if fit.stalled { ", stalled" } else { "" }
            );
            let trained = TrainedModel {
                hyp: fit.hyp.clone(),
                jitter_rel: settings.model.jitter_rel,
                nu_tilde: fit.state.sites.nu_tilde.clone(),
                tau_tilde: fit.state.sites.tau_tilde.clone(),
                x_train: ds.x.clone(),
                standardization: ds.standardization.clone(),
            };
            trained.save(&model)?;
            println!("model written to {}", model.display());
        }
        Command::Predict { model, data, out } => {
            let trained = TrainedModel::load(&model)?;
            let d = trained.x_train.d();
            let (x_star, labels) = load_features(&data, d)?;
            let preds = trained.predict(&x_star)?;

            let mut w = csv::Writer::from_path(&out)?;
            w.write_record(["latent_mean", "latent_var", "prob_positive"])?;
            for p in &preds {
                w.write_record([
                    format!("{:.10e}", p.latent_mean),
                    format!("{:.10e}", p.latent_var),
                    format!("{:.10e}", p.prob_positive),
                ])?;
            }
            w.flush()?;
            println!("wrote {} predictions to {}", preds.len(), out.display());
            if let Some(y) = labels {
                let err = classification_error(&preds, &y);
                let nlpd = mean_nlpd(&preds, &y);
                println!("held-out error = {err:.4}, mean nlpd = {nlpd:.4}");
            }
        }
        Command::Cv {
            data,
            folds,
            out,
            config,
        } => {
            let settings = config.build()?;
            let mut ds = load_csv(&data, settings.label_last)?;
            if settings.standardize {
                ds.standardize();
            }
            let report = cross_validate(&ds, folds, &settings.model, settings.model.seed)?;
            for f in &report.folds {
                println!(
                    "fold {:2}: n={:4} err={:.4} nlpd={:.4} sigma2={:.3} l={:?}",
                    f.fold, f.n_test, f.error, f.nlpd, f.sigma2, f.length_scales
                );
            }
            println!(
                "aggregate over {} folds: err={:.4} nlpd={:.4}",
                report.folds.len(),
                report.mean_error,
                report.mean_nlpd
            );
            if let Some(path) = out {
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["fold", "n_test", "error", "nlpd", "sigma2", "length_scales"])?;
                for f in &report.folds {
                    w.write_record([
                        f.fold.to_string(),
                        f.n_test.to_string(),
                        format!("{:.6e}", f.error),
                        format!("{:.6e}", f.nlpd),
                        format!("{:.6e}", f.sigma2),
                        f.length_scales
                            .iter()
                            .map(|l| format!("{l:.6e}"))
                            .collect::<Vec<_>>()
                            .join(";"),
                    ])?;
                }
                w.flush()?;
            }
        }
        Command::Bench { scenario, out } => {
            let sc = load_scenario(&scenario)?;
            let reports = run_scenario(&sc)?;
            for r in &reports {
                println!(
                    "{} {} n={} seed={}: ep={:.3}s opt={:.1}s fillK={:.4} fillL={:.4} err={:.4} nlpd={:.4}",
                    r.scenario,
                    r.kernel,
                    r.n,
                    r.seed,
                    r.ep_seconds,
                    r.opt_seconds,
                    r.fill_k,
                    r.fill_l,
                    r.error,
                    r.nlpd
                );
            }
            append_reports_csv(&out, &reports)?;
            println!("appended {} rows to {}", reports.len(), out.display());
        }
    }
    Ok(())
}

type FeaturesAndLabels = (InputMatrix, Option<Vec<f64>>);

/// Load a prediction-input CSV: `d` feature columns, optionally followed by
/// a label column.
fn load_features(
    path: &PathBuf,
    d: usize,
) -> Result<FeaturesAndLabels, Box<dyn std::error::Error>> {
    // Try features+label first; fall back to features-only.
    if let Ok(ds) = load_csv(path, true) {
        if ds.d() == d {
            let Dataset { x, y, .. } = ds;
            return Ok((x, Some(y)));
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ridx, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) if row.len() == d => rows.push(row),
            Ok(row) => {
                return Err(format!(
                    "row {}: expected {d} feature columns, found {}",
                    ridx + 1,
                    row.len()
                )
                .into())
            }
            Err(_) if ridx == 0 => continue, // header
            Err(e) => return Err(format!("row {}: {e}", ridx + 1).into()),
        }
    }
    if rows.is_empty() {
        return Err("no feature rows found".into());
    }
    Ok((InputMatrix::from_rows(&rows), None))
}

//! Scenario benchmarks: timing, fill, and accuracy over a grid of kernels,
//! training sizes, and seeds, appended to a header-versioned CSV.
//!
//! Each cell draws one synthetic pool per seed, holds out a fixed test
//! block from its tail, and trains on nested prefixes — growing n never
//! changes which points are shared with smaller runs. Hyperparameters are
//! optimized on a capped subsample (`opt_cap`) and reused for the timed
//! zero-initialized EP run at full n, which is what the wall-clock numbers
//! measure. Model outputs are deterministic per seed; only timings vary.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::data::synth_clusters;
use crate::ep::run_sparse_ep;
use crate::kernel::{build_kernel_values, KernelKind};
use crate::metrics::{classification_error, fill_stats, mean_nlpd};
use crate::model::{optimize, ModelConfig, OptimizerConfig};
use crate::ConfigError;

pub const RESULTS_SCHEMA_VERSION: u32 = 1;

/// One benchmark grid.
#[derive(Debug, Clone)]
pub struct BenchScenario {
    pub name: String,
    pub kernels: Vec<KernelKind>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub d: usize,
    pub n_centers: usize,
    pub box_side: f64,
    pub test_size: usize,
    /// Hyperparameters are optimized on at most this many training points.
    pub opt_cap: usize,
    pub model: ModelConfig,
}

impl Default for BenchScenario {
    fn default() -> Self {
        Self {
            name: "synth".into(),
            kernels: vec![KernelKind::Se, KernelKind::Pp3],
            sizes: vec![500, 1000, 2000],
            seeds: vec![1],
            d: 2,
            n_centers: 200,
            box_side: 10.0,
            test_size: 2000,
            opt_cap: 1000,
            model: ModelConfig::default(),
        }
    }
}

/// Metrics of one (kernel, n, seed) cell.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub scenario: String,
    pub kernel: KernelKind,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub fill_k: f64,
    pub fill_l: f64,
    pub explicit_zeros_k: usize,
    pub ep_seconds: f64,
    pub opt_seconds: f64,
    pub sweeps: usize,
    pub error: f64,
    pub nlpd: f64,
    pub skipped_cavities: usize,
    pub clamped_sites: usize,
    pub refactorizations: usize,
    pub sigma2: f64,
    pub length_scales: Vec<f64>,
    pub config_echo: String,
}

type FitMemo = std::collections::HashMap<(KernelKind, u64, usize), (crate::Hyperparams, f64)>;

/// Run one cell: optimize on the capped prefix (memoized across cells that
/// share it), then time a single zero-initialized EP run at the mode on the
/// full training prefix.
fn run_cell_memo(
    scenario: &BenchScenario,
    kernel: KernelKind,
    n: usize,
    seed: u64,
    memo: &mut FitMemo,
) -> Result<BenchReport, crate::SparseError> {
    let max_n = scenario.sizes.iter().copied().max().unwrap_or(n).max(n);
    let pool = synth_clusters(
        max_n + scenario.test_size,
        scenario.d,
        scenario.n_centers,
        scenario.box_side,
        seed,
    );
    let train_idx: Vec<usize> = (0..n).collect();
    let test_idx: Vec<usize> = (max_n..max_n + scenario.test_size).collect();
    let train = pool.subset(&train_idx);
    let test = pool.subset(&test_idx);

    let mut config = scenario.model.clone();
    config.kind = kernel;
    config.seed = seed;

    let n_opt = n.min(scenario.opt_cap);
    let (hyp, opt_seconds) = match memo.get(&(kernel, seed, n_opt)) {
        Some(hit) => hit.clone(),
        None => {
            let opt_ds = pool.subset(&(0..n_opt).collect::<Vec<_>>());
            let t0 = Instant::now();
            let fit = optimize(&opt_ds, &config)?;
            let secs = t0.elapsed().as_secs_f64();
            log::info!(
                target: "csgp::bench",
                "{} seed={seed}: optimized on {n_opt} points in {secs:.2}s, σ²={:.3}, l={:?}",
                kernel,
                fit.hyp.sigma2,
                fit.hyp.length_scales
            );
            memo.insert((kernel, seed, n_opt), (fit.hyp.clone(), secs));
            (fit.hyp, secs)
        }
    };

    // The timed run: fresh kernel at the mode, zero-initialized EP.
    let k = build_kernel_values(&train.x, &hyp, config.jitter_rel);
    let t1 = Instant::now();
    let state = run_sparse_ep(&k, &train.y, &config.ep)?;
    let ep_seconds = t1.elapsed().as_secs_f64();

    let stats = fill_stats(&k, &state.factor);
    let preds = crate::ep::predict(&state, &k, &train.x, &test.x, &hyp);
    let error = classification_error(&preds, &test.y);
    let nlpd = mean_nlpd(&preds, &test.y);
    log::info!(
        target: "csgp::bench",
        "{} n={n} seed={seed}: ep={ep_seconds:.3}s sweeps={} fillK={:.4} fillL={:.4} err={error:.4}",
        kernel,
        state.sweeps,
        stats.fill_k,
        stats.fill_l
    );

    Ok(BenchReport {
        scenario: scenario.name.clone(),
        kernel,
        n,
        d: scenario.d,
        seed,
        fill_k: stats.fill_k,
        fill_l: stats.fill_l,
        explicit_zeros_k: stats.explicit_zeros_k,
        ep_seconds,
        opt_seconds,
        sweeps: state.sweeps,
        error,
        nlpd,
        skipped_cavities: state.diagnostics.skipped_cavities,
        clamped_sites: state.diagnostics.clamped_sites,
        refactorizations: state.diagnostics.refactorizations,
        sigma2: hyp.sigma2,
        length_scales: hyp.length_scales.clone(),
        config_echo: config_echo(scenario, &config),
    })
}

/// Run one cell in isolation.
pub fn run_bench_cell(
    scenario: &BenchScenario,
    kernel: KernelKind,
    n: usize,
    seed: u64,
) -> Result<BenchReport, crate::SparseError> {
    run_cell_memo(scenario, kernel, n, seed, &mut FitMemo::new())
}

/// Run the whole grid in a deterministic order. Cells sharing a (kernel,
/// seed, capped-prefix) optimization reuse its fit.
pub fn run_scenario(scenario: &BenchScenario) -> Result<Vec<BenchReport>, crate::SparseError> {
    let mut memo = FitMemo::new();
    let mut reports = Vec::new();
    for &seed in &scenario.seeds {
        for &kernel in &scenario.kernels {
            for &n in &scenario.sizes {
                reports.push(run_cell_memo(scenario, kernel, n, seed, &mut memo)?);
            }
        }
    }
    Ok(reports)
}

fn config_echo(s: &BenchScenario, m: &ModelConfig) -> String {
    format!(
        "d={};centers={};box={};test={};opt_cap={};jitter={};ep_tol={};ep_max={};damping={};prior_df={};prior_scale={};opt_iters={};grad_tol={}",
        s.d,
        s.n_centers,
        s.box_side,
        s.test_size,
        s.opt_cap,
        m.jitter_rel,
        m.ep.tol,
        m.ep.max_sweeps,
        m.ep.damping,
        m.prior.df,
        m.prior.scale,
        m.opt.max_iterations,
        m.opt.grad_tol
    )
}

const CSV_HEADER: &str = "schema_version,scenario,kernel,n,d,seed,fill_k,fill_l,explicit_zeros_k,ep_seconds,opt_seconds,sweeps,error,nlpd,skipped_cavities,clamped_sites,refactorizations,sigma2,length_scales,config";

/// Append reports to a results CSV, creating it with a header when absent.
/// An existing file must carry the same header (schema guard).
pub fn append_reports_csv<P: AsRef<Path>>(
    path: P,
    reports: &[BenchReport],
) -> Result<(), ConfigError> {
    let path = path.as_ref();
    let existing = std::fs::read_to_string(path).ok();
    let mut out = String::new();
    match existing {
        Some(content) => {
            let first = content.lines().next().unwrap_or("");
            if first != CSV_HEADER {
                return Err(ConfigError::ModelFile(format!(
                    "results file {} has a different schema header",
                    path.display()
                )));
            }
        }
        None => {
            out.push_str(CSV_HEADER);
            out.push('\n');
        }
    }
    for r in reports {
        let ls = r
            .length_scales
            .iter()
            .map(|l| format!("{l:.6e}"))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6e},{:.6e},{},{:.6e},{:.6e},{},{:.6e},{:.6e},{},{},{},{:.6e},{},{}\n",
            RESULTS_SCHEMA_VERSION,
            r.scenario,
            r.kernel,
            r.n,
            r.d,
            r.seed,
            r.fill_k,
            r.fill_l,
            r.explicit_zeros_k,
            r.ep_seconds,
            r.opt_seconds,
            r.sweeps,
            r.error,
            r.nlpd,
            r.skipped_cavities,
            r.clamped_sites,
            r.refactorizations,
            r.sigma2,
            ls,
            r.config_echo
        ));
    }
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Quick optimizer presets for benchmark use.
pub fn bench_optimizer_defaults() -> OptimizerConfig {
    OptimizerConfig {
        max_iterations: 30,
        grad_tol: 1e-2,
        ..OptimizerConfig::default()
    }
}

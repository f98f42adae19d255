//! Evaluation: classification error, negative log predictive density,
//! stratified cross-validation, and fill statistics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::data::Dataset;
use crate::ep::normal::log_norm_cdf;
use crate::ep::{predict, Prediction};
use crate::model::{optimize, ModelConfig};
use crate::sparse::{LdlFactor, SparseSymMatrix};

/// Pattern densities of a covariance matrix and its factor.
#[derive(Debug, Clone, Copy)]
pub struct FillStats {
    /// nnz(K)/n², stored pattern including retained explicit zeros.
    pub fill_k: f64,
    /// nnz(L)/(n(n+1)/2), diagonal included.
    pub fill_l: f64,
    pub nnz_k: usize,
    pub nnz_l: usize,
    /// Stored K slots whose value is exactly zero, reported separately.
    pub explicit_zeros_k: usize,
}

pub fn fill_stats(k: &SparseSymMatrix, factor: &LdlFactor) -> FillStats {
    let n = k.n();
    assert_eq!(factor.n(), n);
    let nnz_k = k.nnz();
    let nnz_l = factor.nnz_l();
    FillStats {
        fill_k: nnz_k as f64 / (n * n) as f64,
        fill_l: nnz_l as f64 / (n * (n + 1) / 2) as f64,
        nnz_k,
        nnz_l,
        explicit_zeros_k: k.explicit_zero_count(),
    }
}

/// Fraction of sign mismatches; p ≥ ½ predicts +1.
pub fn classification_error(predictions: &[Prediction], y: &[f64]) -> f64 {
    assert_eq!(predictions.len(), y.len());
    let wrong = predictions
        .iter()
        .zip(y)
        .filter(|(p, &label)| {
            let guess = if p.prob_positive >= 0.5 { 1.0 } else { -1.0 };
            guess != label
        })
        .count();
    wrong as f64 / y.len() as f64
}

/// Mean negative log predictive density of the observed labels.
pub fn mean_nlpd(predictions: &[Prediction], y: &[f64]) -> f64 {
    assert_eq!(predictions.len(), y.len());
    let total: f64 = predictions
        .iter()
        .zip(y)
        .map(|(p, &label)| -log_norm_cdf(label * p.latent_mean / (1.0 + p.latent_var).sqrt()))
        .sum();
    total / y.len() as f64
}

/// Seeded stratified fold assignment: within each class, shuffled indices
/// go round-robin over folds. Every point lands in exactly one test fold.
pub fn stratified_folds(y: &[f64], k_folds: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(k_folds >= 2);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k_folds];
    for class in [1.0, -1.0] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            folds[pos % k_folds].push(i);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    folds
}

/// Per-fold metrics.
#[derive(Debug, Clone)]
pub struct FoldReport {
    pub fold: usize,
    pub n_test: usize,
    pub error: f64,
    pub nlpd: f64,
    pub sigma2: f64,
    pub length_scales: Vec<f64>,
}

/// Aggregate cross-validation outcome.
#[derive(Debug, Clone)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub mean_error: f64,
    pub mean_nlpd: f64,
}

/// k-fold cross-validation with hyperparameters re-optimized on every
/// training split.
pub fn cross_validate(
    dataset: &Dataset,
    k_folds: usize,
    config: &ModelConfig,
    seed: u64,
) -> Result<CvReport, crate::SparseError> {
    let folds = stratified_folds(&dataset.y, k_folds, seed);
    let mut reports = Vec::with_capacity(k_folds);
    let mut err_acc = 0.0;
    let mut nlpd_acc = 0.0;
    let mut total = 0usize;

    for (f, test_idx) in folds.iter().enumerate() {
        if test_idx.is_empty() {
            continue;
        }
        let test = dataset.subset(test_idx);
        let classes = test.y.iter().filter(|&&v| v == 1.0).count();
        if classes == 0 || classes == test.n() {
            log::warn!(target: "csgp::cv", "fold {f} holds a single class; proceeding");
        }
        let train_idx: Vec<usize> = (0..dataset.n()).filter(|i| !test_idx.contains(i)).collect();
        let train = dataset.subset(&train_idx);

        let fit = optimize(&train, config)?;
        let k = crate::kernel::build_kernel_values(&train.x, &fit.hyp, config.jitter_rel);
        let preds = predict(&fit.state, &k, &train.x, &test.x, &fit.hyp);
        let error = classification_error(&preds, &test.y);
        let nlpd = mean_nlpd(&preds, &test.y);
        err_acc += error * test.n() as f64;
        nlpd_acc += nlpd * test.n() as f64;
        total += test.n();
        log::info!(
            target: "csgp::cv",
            "fold={f} n_test={} err={error:.4} nlpd={nlpd:.4}",
            test.n()
        );
        reports.push(FoldReport {
            fold: f,
            n_test: test.n(),
            error,
            nlpd,
            sigma2: fit.hyp.sigma2,
            length_scales: fit.hyp.length_scales.clone(),
        });
    }

    Ok(CvReport {
        folds: reports,
        mean_error: err_acc / total as f64,
        mean_nlpd: nlpd_acc / total as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_exactly() {
        let y: Vec<f64> = (0..97).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let folds = stratified_folds(&y, 10, 5);
        let mut seen = vec![0usize; y.len()];
        for fold in &folds {
            for &i in fold {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        // Stratification: each fold's class balance is within one point of
        // the global ratio.
        for fold in &folds {
            let pos = fold.iter().filter(|&&i| y[i] == 1.0).count();
            let expected = fold.len() as f64 / 3.0;
            assert!((pos as f64 - expected).abs() <= 1.5, "{pos} vs {expected}");
        }
    }

    #[test]
    fn fill_stats_counting() {
        let k =
            SparseSymMatrix::from_triplets(4, &(0..4).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
                .unwrap();
        let perm = crate::minimum_degree(&k);
        let sym = crate::symbolic_analyze(&k, &perm);
        let f = crate::ldl_factorize(&k, std::sync::Arc::new(sym)).unwrap();
        let s = fill_stats(&k, &f);
        assert_eq!(s.fill_k, 4.0 / 16.0);
        assert_eq!(s.fill_l, 4.0 / 10.0); // 2/(n+1)
    }
}

//! Property tests: structural invariants of the sparse layer and the
//! symmetry/consistency invariants of EP, each over at least a hundred
//! randomized cases.

mod common;

use std::sync::Arc;

use common::*;
use csgp::kernel::{build_kernel_values, Hyperparams, KernelKind};
use csgp::sparse::{SparseSymMatrix, SparseVector};
use csgp::{
    ldl_factorize, log_marginal, minimum_degree, run_sparse_ep, run_sparse_ep_warm,
    symbolic_analyze, EpConfig, Permutation,
};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn small_kernel_problem(seed: u64) -> (SparseSymMatrix, Vec<f64>, Hyperparams, csgp::Dataset) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = rng.random_range(12..30);
    let d = rng.random_range(1..=3);
    let ds = smooth_dataset(n, d, 5.0, seed);
    let kinds = [
        KernelKind::Se,
        KernelKind::Pp0,
        KernelKind::Pp1,
        KernelKind::Pp2,
        KernelKind::Pp3,
    ];
    let kind = kinds[rng.random_range(0..kinds.len())];
    let hyp = Hyperparams::isotropic(kind, rng.random_range(0.6..2.0), rng.random_range(1.5..3.0), d);
    let k = build_kernel_values(&ds.x, &hyp, 1e-8);
    (k, ds.y.clone(), hyp, ds)
}

#[test]
fn label_flip_negates_means_and_nothing_else() {
    let cfg = EpConfig::strict();
    for case in 0..100u64 {
        let (k, y, _, _) = small_kernel_problem(1000 + case);
        let y_neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let a = run_sparse_ep(&k, &y, &cfg).unwrap();
        let b = run_sparse_ep(&k, &y_neg, &cfg).unwrap();
        assert!(a.converged && b.converged);
        for i in 0..y.len() {
            assert!((a.sites.nu_tilde[i] + b.sites.nu_tilde[i]).abs() < 1e-12);
            assert!((a.sites.tau_tilde[i] - b.sites.tau_tilde[i]).abs() < 1e-12);
        }
        assert!((a.log_z - b.log_z).abs() < 1e-12);
    }
}

#[test]
fn permutation_equivariance_of_fixed_points() {
    // Visiting sites in a different order changes the iteration path, so
    // both runs must be driven hard onto the fixed point before comparing.
    let cfg = EpConfig {
        tol: 1e-12,
        max_sweeps: 600,
        ..EpConfig::default()
    };
    for case in 0..100u64 {
        let (k, y, hyp, ds) = small_kernel_problem(2000 + case);
        let n = y.len();
        let mut rng = ChaCha12Rng::seed_from_u64(900_000 + case);
        let mut order: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);

        let base = run_sparse_ep(&k, &y, &cfg).unwrap();

        let ds_perm = ds.subset(&order);
        let k_perm = build_kernel_values(&ds_perm.x, &hyp, 1e-8);
        let perm = run_sparse_ep(&k_perm, &ds_perm.y, &cfg).unwrap();
        assert!(base.converged && perm.converged);

        assert!(
            (base.log_z - perm.log_z).abs() < 1e-8,
            "case {case}: logZ {} vs {}",
            base.log_z,
            perm.log_z
        );
        for (new_i, &old_i) in order.iter().enumerate() {
            let dn = (base.sites.nu_tilde[old_i] - perm.sites.nu_tilde[new_i]).abs();
            let dt = (base.sites.tau_tilde[old_i] - perm.sites.tau_tilde[new_i]).abs();
            assert!(dn < 1e-6, "case {case} site {old_i}: Δν̃ = {dn:e}");
            assert!(dt < 1e-6, "case {case} site {old_i}: Δτ̃ = {dt:e}");
        }
    }
}

#[test]
fn gamma_stays_in_step_with_sites() {
    for case in 0..100u64 {
        let (k, y, _, _) = small_kernel_problem(3000 + case);
        let sweeps = 1 + (case % 4) as usize;
        let cfg = EpConfig {
            max_sweeps: sweeps,
            tol: 0.0,
            ..EpConfig::default()
        };
        let state = run_sparse_ep(&k, &y, &cfg).unwrap();
        assert!(
            state.diagnostics.max_gamma_residual < 1e-8,
            "case {case}: residual {:e}",
            state.diagnostics.max_gamma_residual
        );
        // And the returned state's γ is consistent too.
        assert!(state.sites.gamma_residual(&k) < 1e-8);
    }
}

#[test]
fn one_extra_sweep_keeps_log_z_within_tolerance() {
    for case in 0..100u64 {
        let (k, y, _, _) = small_kernel_problem(4000 + case);
        let cfg = EpConfig {
            tol: 1e-7,
            max_sweeps: 200,
            ..EpConfig::default()
        };
        let state = run_sparse_ep(&k, &y, &cfg).unwrap();
        assert!(state.converged, "case {case}");
        let resume = EpConfig {
            max_sweeps: 1,
            tol: 0.0,
            ..cfg.clone()
        };
        let more = run_sparse_ep_warm(&k, &y, &resume, Some(&state.sites)).unwrap();
        assert!(
            (more.log_z - state.log_z).abs() < cfg.tol,
            "case {case}: moved {:e}",
            (more.log_z - state.log_z).abs()
        );
    }
}

#[test]
fn cv_folds_partition_exactly_100_cases() {
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    for _ in 0..100 {
        let n = rng.random_range(10..200);
        let k = rng.random_range(2..=10).min(n);
        let y: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.4 { 1.0 } else { -1.0 })
            .collect();
        let folds = csgp::metrics::stratified_folds(&y, k, rng.random());
        let mut seen = vec![0u8; n];
        for fold in &folds {
            for &i in fold {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1), "partition violated");
    }
}

#[test]
fn factor_pattern_is_frozen_across_ep_runs() {
    // The row modifications of a whole EP run never change nnz(L) or its
    // storage layout: the symbolic object is shared, untouched, and the
    // factor stays reconstructible.
    for case in 0..20u64 {
        let (k, y, _, _) = small_kernel_problem(5000 + case);
        let cfg = EpConfig::strict();
        let state = run_sparse_ep(&k, &y, &cfg).unwrap();

        let perm = minimum_degree(&k);
        let sym = symbolic_analyze(&k, &perm);
        assert_eq!(state.factor.nnz_l(), sym.nnz_l());
        let rebuilt = state.factor.reconstruct_dense();
        let bd = state.b_matrix.to_dense();
        assert!((&rebuilt - &bd).amax() < 1e-8 * bd.amax().max(1.0));
    }
}

#[test]
fn log_marginal_matches_for_warm_started_states() {
    // state_from_sites + log_marginal reproduce the run's own evidence.
    for case in 0..20u64 {
        let (k, y, _, _) = small_kernel_problem(6000 + case);
        let state = run_sparse_ep(&k, &y, &EpConfig::strict()).unwrap();
        let rebuilt = csgp::ep::state_from_sites(&k, state.sites.clone()).unwrap();
        let lz = log_marginal(&rebuilt, &k, &y);
        assert!((lz - state.log_z).abs() < 1e-8);
    }
}

#[test]
fn row_modify_equals_delete_then_add() {
    // Replacing a row in one shot must equal deleting it (identity row)
    // and then adding the new one, both matching a fresh factorization.
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    for case in 0..50 {
        let (k, _, _, _) = small_kernel_problem(7000 + case);
        let n = k.n();
        let tau: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random_range(0.1..2.0) })
            .collect();
        let sqrt_tau: Vec<f64> = tau.iter().map(|t| t.sqrt()).collect();
        let b = assemble_b_oracle(&k, &sqrt_tau);

        let perm = minimum_degree(&b);
        let sym = Arc::new(symbolic_analyze(&b, &perm));
        let mut direct = ldl_factorize(&b, Arc::clone(&sym)).unwrap();
        let mut two_step = direct.clone();

        let i = rng.random_range(0..n);
        let new_tau_i: f64 = rng.random_range(0.0..3.0);

        // Target row of the new B.
        let mut new_sqrt = sqrt_tau.clone();
        new_sqrt[i] = new_tau_i.sqrt();
        let b_new = assemble_b_oracle(&k, &new_sqrt);
        let row = |m: &SparseSymMatrix, i: usize| -> SparseVector {
            let (rows, vals) = m.col(i);
            SparseVector::new(
                rows.iter()
                    .zip(vals)
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(&r, &v)| (r, v))
                    .collect(),
            )
            .unwrap()
        };

        direct.ldl_row_modify(&row(&b_new, i), i).unwrap();

        // Delete: row i of B becomes the identity row.
        two_step.ldl_row_modify(&SparseVector::unit(i), i).unwrap();
        two_step.ldl_row_modify(&row(&b_new, i), i).unwrap();

        let fresh = ldl_factorize(&b_new, sym).unwrap();
        let f_dense = fresh.reconstruct_dense();
        assert!((&direct.reconstruct_dense() - &f_dense).amax() < 1e-9);
        assert!((&two_step.reconstruct_dense() - &f_dense).amax() < 1e-9);
    }
}

/// B = I + S K S built densely from triplets, independent of the engine's
/// own assembly.
fn assemble_b_oracle(k: &SparseSymMatrix, sqrt_tau: &[f64]) -> SparseSymMatrix {
    let n = k.n();
    let mut t = Vec::new();
    for j in 0..n {
        let (rows, vals) = k.col(j);
        for (off, &i) in rows.iter().enumerate() {
            if i >= j {
                let mut v = sqrt_tau[i] * sqrt_tau[j] * vals[off];
                if i == j {
                    v += 1.0;
                }
                t.push((i, j, v));
            }
        }
    }
    SparseSymMatrix::from_triplets(n, &t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn triplet_assembly_matches_dense_accumulation(
        n in 2usize..12,
        entries in prop::collection::vec((0usize..12, 0usize..12, -2.0f64..2.0), 0..40),
    ) {
        // Keep indices in range and symmetrize by mirroring every entry.
        let mut t = Vec::new();
        let mut dense = vec![vec![0.0f64; n]; n];
        for (r, c, v) in entries {
            let (r, c) = (r % n, c % n);
            t.push((r, c, v));
            dense[r][c] += v;
            if r != c {
                t.push((c, r, v));
                dense[c][r] += v;
            }
        }
        let m = SparseSymMatrix::from_triplets(n, &t).unwrap();
        for (i, row) in dense.iter().enumerate() {
            for (j, &want) in row.iter().enumerate() {
                prop_assert!((m.get(i, j) - want).abs() < 1e-12);
            }
        }
        // Diagonal slots always exist.
        for j in 0..n {
            prop_assert!(!m.col_range(j).is_empty());
        }
    }

    #[test]
    fn matrix_market_roundtrip(
        n in 1usize..10,
        entries in prop::collection::vec((0usize..10, 0usize..10, -3.0f64..3.0), 0..30),
    ) {
        let t: Vec<(usize, usize, f64)> = entries
            .into_iter()
            .map(|(r, c, v)| (r % n, c % n, v))
            .flat_map(|(r, c, v)| if r == c { vec![(r, c, v)] } else { vec![(r, c, v), (c, r, v)] })
            .collect();
        let m = SparseSymMatrix::from_triplets(n, &t).unwrap();
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let back = SparseSymMatrix::read_matrix_market(buf.as_slice()).unwrap();
        prop_assert!(m.same_pattern(&back));
        for (a, b) in m.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_satisfies_residual_bound(seed in 0u64..200) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let n = rng.random_range(5..60);
        let density = rng.random_range(0.05..0.4);
        let a = random_spd_matrix(n, density, seed);
        // Ordering choice must not affect correctness: random bijection.
        let mut order: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let perm = Permutation::from_order(order);
        let sym = symbolic_analyze(&a, &perm);
        let f = ldl_factorize(&a, Arc::new(sym)).unwrap();

        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = f.solve_dense(&b);
        let mut r = vec![0.0; n];
        a.matvec(&x, &mut r);
        let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
        for i in 0..n {
            prop_assert!((r[i] - b[i]).abs() < 1e-8 * bmax);
        }

        // logdet is invariant under the ordering.
        let id = ldl_factorize(&a, Arc::new(symbolic_analyze(&a, &Permutation::identity(n)))).unwrap();
        prop_assert!((f.logdet() - id.logdet()).abs() < 1e-9 * f.logdet().abs().max(1.0));
    }
}

/// Diagonally dominant random SPD matrix (test-local generator).
fn random_spd_matrix(n: usize, density: f64, seed: u64) -> SparseSymMatrix {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xabcd);
    let mut t = Vec::new();
    let mut rowsum = vec![0.0; n];
    for i in 0..n {
        for j in 0..i {
            if rng.random::<f64>() < density {
                let v: f64 = rng.random_range(-1.0..1.0);
                t.push((i, j, v));
                rowsum[i] += v.abs();
                rowsum[j] += v.abs();
            }
        }
    }
    for (i, rs) in rowsum.iter().enumerate() {
        t.push((i, i, rs + 0.4 + rng.random::<f64>()));
    }
    SparseSymMatrix::from_triplets(n, &t).unwrap()
}

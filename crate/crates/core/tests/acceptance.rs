//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! printed by `cargo test`.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::Rng;

use common::*;
use rss_align::alignment::{
    assemble_joint_laplacian, compute_embedding, mixing_weights, pair_indices, SpectralForm,
    DEFAULT_ZERO_TOL,
};
use rss_align::environment::Position;
use rss_align::harness::config::ExperimentConfig;
use rss_align::harness::experiment::{
    compare_modes, compare_sources, localization_errors, run_localization_experiment,
    run_map_experiment, Draw, Scenario, SweepKind,
};
use rss_align::harness::stats::{mean, paired_t_greater, spearman};
use rss_align::harness::Preset;
use rss_align::lle::{compute_weights, find_neighbors, neighborhood_laplacian, DEFAULT_RIDGE};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn corridor() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.environment.preset = Preset::Corridor219;
    cfg.propagation.observation_noise_db = 3.0;
    cfg
}

/// 1. Closed-form weights against the constrained least-squares oracle.
fn weight_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(101);
    let mut worst = 0.0f64;
    let mut worst_sum = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(8..=30);
        let k = rng.random_range(2..=8);
        let count = rng.random_range(1..=6);
        let points = random_points(&mut rng, n, k);
        // exact Eq. 3 when the local Gram matrix is invertible
        let ridge = if count <= k { 0.0 } else { DEFAULT_RIDGE };
        let nbrs = find_neighbors(&points, count, None).unwrap();
        let w = compute_weights(&points, &nbrs, ridge).unwrap();
        for i in 0..n {
            let list = nbrs.of(i);
            let refs: Vec<&[f64]> = list.iter().map(|&j| points[j].as_slice()).collect();
            let oracle = constrained_ls_weights(&points[i], &refs, ridge);
            for (a, &j) in list.iter().enumerate() {
                worst = worst.max((w.get(i, j) - oracle[a]).abs());
            }
            let sum: f64 = w.row(i).iter().map(|(_, v)| v).sum();
            worst_sum = worst_sum.max((sum - 1.0).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-8 && worst_sum <= 1e-10 && elapsed < Duration::from_secs(5),
        format!("max |w - oracle| {worst:.2e}, max |row sum - 1| {worst_sum:.2e}, {elapsed:.2?}"),
    )
}

/// Random joint Laplacian with S + O <= 60.
fn random_joint(seed: u64) -> rss_align::alignment::JointLaplacian {
    let mut rng = rng(seed);
    let s = rng.random_range(15..=45);
    let o = rng.random_range(1..=(60 - s).min(12));
    let k = rng.random_range(3..=6);
    let c = rng.random_range(4..=s / 2);
    let positions: Vec<Position> = (0..s).map(|i| Position::new((i % 7) as f64, (i / 7) as f64)).collect();
    let source = random_points(&mut rng, s, k);
    let calib_grid = sample(&mut rng, s, c).into_vec();
    let dest = random_points(&mut rng, c + o, k);
    let cal_pos: Vec<Position> = calib_grid.iter().map(|&g| positions[g]).collect();
    let idx = pair_indices(&positions, &cal_pos, o).unwrap();
    let nx = rng.random_range(2..=6);
    let ny = rng.random_range(2..=(c + o - 1).min(6));
    let lx = neighborhood_laplacian(&source, nx, DEFAULT_RIDGE, None).unwrap();
    let lx = lx.permuted(&idx.source_order()).unwrap();
    let ly = neighborhood_laplacian(&dest, ny, DEFAULT_RIDGE, None).unwrap();
    let (a, b) = mixing_weights(s, c, o);
    assemble_joint_laplacian(&lx, &ly, &idx, a, b).unwrap()
}

/// 2. The first embedding column minimizes the Rayleigh quotient on the
///    feasible set and matches a Jacobi eigen-oracle.
fn eigen_optimality() -> Outcome {
    let mut worst_gap = f64::INFINITY;
    let mut worst_eig = 0.0f64;
    let mut rng = rng(202);
    for t in 0..20 {
        let lz = random_joint(2000 + t);
        let n = lz.matrix().nrows();
        let dim = 1 + (t as usize % 3);
        let emb = compute_embedding(&lz, dim, DEFAULT_ZERO_TOL, SpectralForm::Reconstruction).unwrap();
        let op = gram(lz.matrix());
        let (values, vectors) = jacobi_eigen(&center(&op));
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (null, kept): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&i| values[i].abs() <= DEFAULT_ZERO_TOL * scale);
        let null_vecs: Vec<DVector<f64>> = null.iter().map(|&i| vectors.column(i).into_owned()).collect();
        for (col, &i) in kept.iter().take(dim).enumerate() {
            worst_eig = worst_eig.max((emb.eigenvalues[col] - values[i]).abs());
        }
        let h = emb.coords.column(0).into_owned();
        let q = (h.transpose() * &op * &h)[(0, 0)];
        for _ in 0..200 {
            let v = random_feasible(&mut rng, n, &null_vecs);
            let qv = (v.transpose() * &op * &v)[(0, 0)];
            worst_gap = worst_gap.min(qv - (q - 1e-9));
        }
    }
    outcome(
        worst_gap >= 0.0 && worst_eig <= 1e-8,
        format!("min (v'Av - h'Ah + 1e-9) {worst_gap:.3e}, max |eig - oracle| {worst_eig:.2e}"),
    )
}

/// 3. Joint Laplacian blocks against a case-analysis oracle.
fn block_assembly() -> Outcome {
    let mut rng = rng(303);
    let mut worst = 0.0f64;
    let mut nonzero_cross = 0usize;
    for _ in 0..20 {
        let s = rng.random_range(6..=30);
        let c = rng.random_range(2..=s);
        let o = rng.random_range(1..=8);
        let k = rng.random_range(2..=5);
        let positions: Vec<Position> = (0..s).map(|i| Position::new(i as f64, 0.0)).collect();
        let calib_grid = sample(&mut rng, s, c).into_vec();
        let cal_pos: Vec<Position> = calib_grid.iter().map(|&g| positions[g]).collect();
        let idx = pair_indices(&positions, &cal_pos, o).unwrap();
        let source = random_points(&mut rng, s, k);
        let dest = random_points(&mut rng, c + o, k);
        let lx = neighborhood_laplacian(&source, 2.min(s - 1).max(1), DEFAULT_RIDGE, None).unwrap();
        let ly = neighborhood_laplacian(&dest, 2.min(c + o - 1).max(1), DEFAULT_RIDGE, None).unwrap();
        let (a, b) = mixing_weights(s, c, o);
        let lz = assemble_joint_laplacian(&lx.permuted(&idx.source_order()).unwrap(), &ly, &idx, a, b).unwrap();
        let oracle = JointOracle::new(lx.matrix(), ly.matrix(), &calib_grid, a, b);
        let m = lz.matrix();
        for r in 0..s + o {
            for col in 0..s + o {
                let expect = oracle.entry(r, col);
                let got = m[(r, col)];
                let cross = matches!(
                    (oracle.class(r), oracle.class(col)),
                    (Class::Qx(_), Class::Qy(_)) | (Class::Qy(_), Class::Qx(_))
                );
                if cross && got != 0.0 {
                    nonzero_cross += 1;
                }
                worst = worst.max((got - expect).abs());
            }
        }
    }
    outcome(
        worst <= 1e-12 && nonzero_cross == 0,
        format!("max |entry - oracle| {worst:.2e}, non-zero Qx/Qy entries {nonzero_cross}"),
    )
}

/// 4. Noise-free 15 x 15 grid with full calibration localizes within one
///    grid spacing.
fn sanity_localization() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.environment.preset = Preset::Open15;
    cfg.propagation.shadowing_db = 0.0;
    cfg.propagation.observation_noise_db = 0.0;
    cfg.localization.calibration_pct = 100.0;
    let scn = Scenario::new(&cfg).unwrap();
    let errors = localization_errors(&scn, &cfg.localization, Draw::Scattered, 50).unwrap();
    let m = mean(&errors);
    let elapsed = start.elapsed();
    outcome(
        m <= scn.grid.spacing && elapsed < Duration::from_secs(60),
        format!("mean error {m:.4} m (spacing {} m), 50 trials, {elapsed:.2?}", scn.grid.spacing),
    )
}

/// 5. Error decreases with calibration load on the 219-point environment.
fn calibration_trend() -> Outcome {
    let start = Instant::now();
    let mut cfg = corridor();
    cfg.trials = 100;
    cfg.sweep.calibration_pct = vec![10.0, 20.0, 30.0, 40.0, 50.0];
    let scn = Scenario::new(&cfg).unwrap();
    let sweep = run_localization_experiment(&scn, SweepKind::Calibration).unwrap();
    let (xs, ys) = sweep.pairs();
    let c = spearman(&xs, &ys);
    let means: Vec<String> = sweep.rows().iter().map(|r| format!("{:.3}", r.mean_err_m)).collect();
    let elapsed = start.elapsed();
    outcome(
        scn.len() == 219 && c.rho < 0.0 && c.p_value < 0.05 && elapsed < Duration::from_secs(900),
        format!(
            "S={}, means [{}] m, rho {:.3}, p {:.2e}, {elapsed:.2?}",
            scn.len(),
            means.join(", "),
            c.rho,
            c.p_value
        ),
    )
}

/// 6. A neighborhood of about 11% beats 10 and 50 neighbors.
fn neighborhood_size() -> Outcome {
    let mut cfg = corridor();
    cfg.trials = 100;
    let scn = Scenario::new(&cfg).unwrap();
    let n11 = (0.11 * scn.len() as f64).round() as usize;
    cfg.sweep.neighbors = vec![10, n11, 50];
    let scn = Scenario::new(&cfg).unwrap();
    let rows = run_localization_experiment(&scn, SweepKind::Neighbors).unwrap().rows();
    let (e10, e11, e50) = (rows[0].mean_err_m, rows[1].mean_err_m, rows[2].mean_err_m);
    outcome(
        e11 <= e10 && e11 <= e50,
        format!("N=10: {e10:.3} m, N={n11}: {e11:.3} m, N=50: {e50:.3} m"),
    )
}

/// 7. Walking mode beats stationary mode on the same trajectories.
fn walking_improvement() -> Outcome {
    let cfg = corridor();
    let scn = Scenario::new(&cfg).unwrap();
    let p = compare_modes(&scn, 200).unwrap();
    let t = paired_t_greater(&p.a, &p.b);
    let (stat, walk) = (mean(&p.a), mean(&p.b));
    outcome(
        walk <= stat && t.p_value < 0.05,
        format!("stationary {stat:.3} m, walking {walk:.3} m, paired t {:.2}, p {:.2e}", t.t, t.p_value),
    )
}

/// 8. Plan coordinates beat a simulated map with 6 dB extra model error.
fn source_comparison() -> Outcome {
    let mut cfg = corridor();
    cfg.propagation.model_error_db = 6.0;
    let scn = Scenario::new(&cfg).unwrap();
    let p = compare_sources(&scn, 200).unwrap();
    let t = paired_t_greater(&p.a, &p.b);
    let (sim, plan) = (mean(&p.a), mean(&p.b));
    outcome(
        plan < sim && t.p_value < 0.05,
        format!("simulated map {sim:.3} m, plan coordinates {plan:.3} m, paired t {:.2}, p {:.2e}", t.t, t.p_value),
    )
}

/// 9. Map construction improves on the degraded baseline and improves more
///    with more calibration.
fn map_construction() -> Outcome {
    let mut cfg = corridor();
    cfg.propagation.model_error_db = 6.0;
    cfg.map.n_acc = 20;
    cfg.trials = 5;
    cfg.sweep.calibration_pct = vec![10.0, 16.0, 20.0, 30.0, 40.0, 50.0];
    let scn = Scenario::new(&cfg).unwrap();
    let sweep = run_map_experiment(&scn).unwrap();
    let at16 = &sweep.metrics[1];
    let margin16 = mean(&at16.iter().map(|m| m.rms_baseline - m.rms_overall).collect::<Vec<_>>());
    let all_better = at16.iter().all(|m| m.rms_overall < m.rms_baseline);
    let (xs, ys) = sweep.improvement_pairs();
    let c = spearman(&xs, &ys);
    let means: Vec<String> = sweep.rows().iter().map(|r| format!("{:.1}", r.improvement_pct)).collect();
    outcome(
        margin16 > 0.0 && all_better && c.rho > 0.0 && c.p_value < 0.05,
        format!(
            "16%: rms margin {margin16:.3} dB; improvement [{}]% over 10..50%, rho {:.3}, p {:.2e}",
            means.join(", "),
            c.rho,
            c.p_value
        ),
    )
}

const COMMANDS: [&str; 7] = [
    "gen-env",
    "simulate-map",
    "localize",
    "sweep-calibration",
    "sweep-neighbors",
    "sweep-observations",
    "build-map",
];

fn run_all(config: &Path, out: &Path) -> Result<(), String> {
    for cmd in COMMANDS {
        let status = Command::new(env!("CARGO_BIN_EXE_rss-align"))
            .args([cmd, "--seed", "17", "--config"])
            .arg(config)
            .arg("--out")
            .arg(out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("{cmd} failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
    }
    Ok(())
}

/// 10. Every command reproduces its CSV output byte for byte.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("demo.toml");
    std::fs::write(
        &config,
        "trials = 2\n\
         [sweep]\ncalibration_pct = [10.0, 30.0]\nneighbors = [10, 25]\nobservations = [1, 11]\n\
         [map]\nobservation_budget = 200\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    if let Err(e) = run_all(&config, &a).and_then(|_| run_all(&config, &b)) {
        return outcome(false, e);
    }
    let mut names: Vec<String> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let csvs = names.iter().filter(|n| n.ends_with(".csv")).count();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(a.join(n)).ok() != std::fs::read(b.join(n)).ok())
        .collect();
    outcome(
        differing.is_empty() && csvs == 8,
        format!("{} files compared ({} CSV), {} differ", names.len(), csvs, differing.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("weight oracle", weight_oracle),
        ("eigen-objective optimality", eigen_optimality),
        ("block assembly", block_assembly),
        ("sanity localization", sanity_localization),
        ("calibration trend", calibration_trend),
        ("neighborhood size", neighborhood_size),
        ("walking improvement", walking_improvement),
        ("source comparison", source_comparison),
        ("map construction", map_construction),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {}: {name} ({})", if o.pass { "PASS" } else { "FAIL" }, n + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

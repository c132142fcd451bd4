//! Monte-Carlo localization and map-construction experiments.
//!
//! A [`Scenario`] fixes the environment, the ground-truth radio map and the
//! simulated map for one configuration. Trials then draw calibration sets and
//! observations from independent, per-trial seeded streams, so trial `t`
//! sees the same observation points at every sweep value (common random
//! numbers) and results are reproducible from the seed alone.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{pct_count, ExperimentConfig, LocalizationSection, MapSection, ModeChoice, SourceChoice};
use super::stats::{mean, std_dev};
use crate::environment::{
    dissociation_filter, sample_observation_with, simulate_radio_map, Environment, Fingerprint,
    GridSpec, Position, RadioMap,
};
use crate::error::Result;
use crate::localizer::{LocalizationRequest, LocalizationResult, Localizer, SourceDataset};
use crate::mapbuilder::{finalize_map, map_metrics, EstimatedRadioMap, MapMetrics, ObservationDirectory};

const STREAM_TRUTH: u64 = 1;
const STREAM_SIMULATED: u64 = 2;
const STREAM_CALIBRATION: u64 = 3;
const STREAM_OBSERVATIONS: u64 = 4;
const STREAM_MAP: u64 = 5;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of random stream `stream`, item `index`, under the base seed.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index)
}

fn rng_for(base: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream, index))
}

/// How observation points are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Draw {
    /// Distinct grid points chosen uniformly (with replacement once O > S).
    Scattered,
    /// One user's random walk with unit lattice steps.
    Trajectory,
}

impl Draw {
    pub fn for_mode(mode: ModeChoice) -> Self {
        match mode {
            ModeChoice::Stationary => Draw::Scattered,
            ModeChoice::Walking => Draw::Trajectory,
        }
    }
}

/// Environment, grid and radio maps shared by all trials of an experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: ExperimentConfig,
    pub env: Environment,
    pub grid: GridSpec,
    /// Ground truth: propagation model plus shadowing.
    pub truth: RadioMap,
    /// What a simulator would predict: propagation model plus model error.
    pub simulated: RadioMap,
}

impl Scenario {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let (env, spacing) = cfg.environment()?;
        Self::with_environment(cfg, env, spacing)
    }

    pub fn with_environment(cfg: &ExperimentConfig, env: Environment, spacing: f64) -> Result<Self> {
        let grid = env.grid(spacing)?;
        let p = &cfg.propagation;
        let model = p.model();
        let truth = simulate_radio_map(&env, &grid, &model, p.shadowing_db, derive_seed(cfg.seed, STREAM_TRUTH, 0))?;
        let simulated = simulate_radio_map(
            &env,
            &grid,
            &model,
            p.model_error_db,
            derive_seed(cfg.seed, STREAM_SIMULATED, 0),
        )?;
        Ok(Self {
            cfg: cfg.clone(),
            env,
            grid,
            truth,
            simulated,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn source(&self, choice: SourceChoice) -> Result<SourceDataset> {
        match choice {
            SourceChoice::PlanCoords => SourceDataset::plan_coordinates(&self.grid, self.env.k()),
            SourceChoice::SimulatedMap => Ok(SourceDataset::simulated(&self.simulated)),
        }
    }

    /// Localizer over the configured source data set.
    pub fn localizer(&self, loc: &LocalizationSection) -> Result<Localizer> {
        let source = self.source(loc.source)?;
        let cfg = loc.localizer_config(source.len());
        if loc.wall_dissociation {
            let filter = |i: usize, j: usize| dissociation_filter(&self.grid, &self.env.plan, i, j);
            Localizer::new(&source, cfg, Some(&filter))
        } else {
            Localizer::new(&source, cfg, None)
        }
    }

    /// Number of calibration fingerprints for a percentage of the grid.
    pub fn calibration_count(&self, pct: f64) -> usize {
        ((pct / 100.0 * self.len() as f64).round() as usize).clamp(1, self.len())
    }

    /// Calibration grid indices of trial `trial`, ascending.
    pub fn calibration_indices(&self, pct: f64, trial: u64) -> Vec<usize> {
        let mut rng = rng_for(self.cfg.seed, STREAM_CALIBRATION, trial);
        let mut idx = sample(&mut rng, self.len(), self.calibration_count(pct)).into_vec();
        idx.sort_unstable();
        idx
    }

    pub fn calibration(&self, indices: &[usize]) -> Vec<Fingerprint> {
        self.truth.subset(indices)
    }

    /// Grid points visited by `o` observations.
    pub fn observation_points<R: Rng + ?Sized>(&self, o: usize, draw: Draw, rng: &mut R) -> Vec<usize> {
        let s = self.len();
        match draw {
            Draw::Scattered if o <= s => sample(rng, s, o).into_vec(),
            Draw::Scattered => (0..o).map(|_| rng.random_range(0..s)).collect(),
            Draw::Trajectory => random_walk(&self.grid, o, rng),
        }
    }

    /// Noisy RSS readings at the given grid points.
    pub fn observe<R: Rng + ?Sized>(&self, points: &[usize], rng: &mut R) -> Result<Vec<Vec<f64>>> {
        let sigma = self.cfg.propagation.observation_noise_db;
        points
            .iter()
            .map(|&i| sample_observation_with(&self.truth, i, sigma, rng))
            .collect()
    }

    /// Observation points and readings of trial `trial`.
    pub fn trial_observations(&self, o: usize, draw: Draw, trial: u64) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
        let mut rng = rng_for(self.cfg.seed, STREAM_OBSERVATIONS, trial);
        let points = self.observation_points(o, draw, &mut rng);
        let rss = self.observe(&points, &mut rng)?;
        Ok((points, rss))
    }
}

/// Random walk of `len` grid points, each a lattice neighbor of the previous
/// one; isolated points repeat in place.
pub fn random_walk<R: Rng + ?Sized>(grid: &GridSpec, len: usize, rng: &mut R) -> Vec<usize> {
    let mut walk = Vec::with_capacity(len);
    if len == 0 {
        return walk;
    }
    let mut at = rng.random_range(0..grid.len());
    walk.push(at);
    while walk.len() < len {
        let next = grid.lattice_neighbors(at);
        if !next.is_empty() {
            at = next[rng.random_range(0..next.len())];
        }
        walk.push(at);
    }
    walk
}

/// One localization trial with its inputs and outcome.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub calibration: Vec<usize>,
    pub truth_points: Vec<usize>,
    pub result: LocalizationResult,
    pub errors: Vec<f64>,
}

impl TrialOutcome {
    pub fn mean_error(&self) -> f64 {
        mean(&self.errors)
    }
}

/// Runs trial `trial` with an already-built localizer.
pub fn run_trial(
    scn: &Scenario,
    localizer: &Localizer,
    loc: &LocalizationSection,
    draw: Draw,
    trial: u64,
) -> Result<TrialOutcome> {
    let calibration = scn.calibration_indices(loc.calibration_pct, trial);
    let (truth_points, observations) = scn.trial_observations(loc.observations, draw, trial)?;
    let request = LocalizationRequest {
        observations,
        mode: loc.mode(),
    };
    let result = localizer
        .localize(&scn.calibration(&calibration), &request)
        .map_err(|e| e.in_stage("trial"))?;
    let errors = result
        .estimates
        .iter()
        .zip(&truth_points)
        .map(|(e, &t)| e.position.distance(&scn.grid.position(t)))
        .collect();
    Ok(TrialOutcome {
        calibration,
        truth_points,
        result,
        errors,
    })
}

/// Mean localization error of every trial, in trial order.
pub fn localization_errors(scn: &Scenario, loc: &LocalizationSection, draw: Draw, trials: usize) -> Result<Vec<f64>> {
    let localizer = scn.localizer(loc)?;
    (0..trials as u64)
        .map(|t| run_trial(scn, &localizer, loc, draw, t).map(|o| o.mean_error()))
        .collect()
}

/// Per-trial errors at every value of one swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: &'static str,
    pub values: Vec<f64>,
    /// `errors[v][t]`: mean error of trial `t` at `values[v]`.
    pub errors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationRow {
    pub value: f64,
    pub mean_err_m: f64,
    pub std_err_m: f64,
}

impl SweepResult {
    pub fn rows(&self) -> Vec<LocalizationRow> {
        self.values
            .iter()
            .zip(&self.errors)
            .map(|(&value, e)| LocalizationRow {
                value,
                mean_err_m: mean(e),
                std_err_m: std_dev(e),
            })
            .collect()
    }

    /// All (value, trial error) pairs, for trend statistics.
    pub fn pairs(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (&v, e) in self.values.iter().zip(&self.errors) {
            xs.extend(std::iter::repeat_n(v, e.len()));
            ys.extend(e);
        }
        (xs, ys)
    }
}

/// Which parameter a localization sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Calibration,
    Neighbors,
    Observations,
}

impl SweepKind {
    pub fn param(&self) -> &'static str {
        match self {
            SweepKind::Calibration => "calibration_pct",
            SweepKind::Neighbors => "neighbors",
            SweepKind::Observations => "observations",
        }
    }
}

/// Runs the configured sweep over `cfg.trials` trials per value.
pub fn run_localization_experiment(scn: &Scenario, kind: SweepKind) -> Result<SweepResult> {
    let cfg = &scn.cfg;
    let base = &cfg.localization;
    let draw = Draw::for_mode(base.mode);
    let settings: Vec<(f64, LocalizationSection)> = match kind {
        SweepKind::Calibration => cfg
            .sweep
            .calibration_pct
            .iter()
            .map(|&p| (p, LocalizationSection { calibration_pct: p, ..base.clone() }))
            .collect(),
        SweepKind::Neighbors => cfg
            .sweep
            .neighbors
            .iter()
            .map(|&n| {
                let loc = LocalizationSection {
                    neighbors: Some(n),
                    ..base.clone()
                };
                (n as f64, loc)
            })
            .collect(),
        SweepKind::Observations => cfg
            .sweep
            .observations
            .iter()
            .map(|&o| (o as f64, LocalizationSection { observations: o, ..base.clone() }))
            .collect(),
    };
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for (value, loc) in settings {
        let e = localization_errors(scn, &loc, draw, cfg.trials).map_err(|e| e.in_stage(kind.param()))?;
        values.push(value);
        errors.push(e);
    }
    Ok(SweepResult {
        param: kind.param(),
        values,
        errors,
    })
}

/// Per-trial errors of two settings on identical trial inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedErrors {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Stationary versus walking mode on the same trajectories.
pub fn compare_modes(scn: &Scenario, trials: usize) -> Result<PairedErrors> {
    let base = &scn.cfg.localization;
    let stationary = LocalizationSection {
        mode: ModeChoice::Stationary,
        ..base.clone()
    };
    let walking = LocalizationSection {
        mode: ModeChoice::Walking,
        ..base.clone()
    };
    Ok(PairedErrors {
        a: localization_errors(scn, &stationary, Draw::Trajectory, trials)?,
        b: localization_errors(scn, &walking, Draw::Trajectory, trials)?,
    })
}

/// Simulated-map source versus plan-coordinates source on the same trials.
pub fn compare_sources(scn: &Scenario, trials: usize) -> Result<PairedErrors> {
    let base = &scn.cfg.localization;
    let draw = Draw::for_mode(base.mode);
    let simulated = LocalizationSection {
        source: SourceChoice::SimulatedMap,
        ..base.clone()
    };
    let plan = LocalizationSection {
        source: SourceChoice::PlanCoords,
        ..base.clone()
    };
    Ok(PairedErrors {
        a: localization_errors(scn, &simulated, draw, trials)?,
        b: localization_errors(scn, &plan, draw, trials)?,
    })
}

/// Outcome of one map-construction trial.
#[derive(Debug, Clone)]
pub struct MapTrial {
    pub map: EstimatedRadioMap,
    pub metrics: MapMetrics,
    pub observations_used: usize,
}

/// Streams localized observations into an observation directory until every
/// non-calibration point is full or the observation budget is spent.
///
/// `locate` maps (calibration, readings, true points) to estimated positions;
/// experiments pass a localizer, tests can pass an oracle.
pub fn map_trial<F>(
    scn: &Scenario,
    map_cfg: &MapSection,
    calibration_pct: f64,
    draw: Draw,
    trial: u64,
    mut locate: F,
) -> Result<MapTrial>
where
    F: FnMut(&[Fingerprint], &[Vec<f64>], &[usize]) -> Result<Vec<Position>>,
{
    let cal_idx = scn.calibration_indices(calibration_pct, trial);
    let calibration = scn.calibration(&cal_idx);
    let mut dir = ObservationDirectory::new(scn.grid.positions(), scn.env.k(), map_cfg.n_acc)?;
    let mut is_cal = vec![false; scn.len()];
    for &i in &cal_idx {
        is_cal[i] = true;
    }
    let open = |dir: &ObservationDirectory| (0..scn.len()).any(|i| !is_cal[i] && !dir.is_full(i));

    let mut rng = rng_for(scn.cfg.seed, STREAM_MAP, trial);
    let mut used = 0;
    while used < map_cfg.observation_budget && open(&dir) {
        let o = map_cfg.batch.min(map_cfg.observation_budget - used);
        let points = scn.observation_points(o, draw, &mut rng);
        let readings = scn.observe(&points, &mut rng)?;
        let estimates = locate(&calibration, &readings, &points)?;
        for (p, rss) in estimates.iter().zip(&readings) {
            dir.record_observation(*p, rss)?;
        }
        used += o;
    }
    let map = finalize_map(&dir, &calibration)?;
    let metrics = map_metrics(&map, &scn.truth, &scn.simulated)?;
    Ok(MapTrial {
        map,
        metrics,
        observations_used: used,
    })
}

/// Map-construction trial using the configured localizer.
pub fn localized_map_trial(scn: &Scenario, localizer: &Localizer, calibration_pct: f64, trial: u64) -> Result<MapTrial> {
    let loc = &scn.cfg.localization;
    let mode = loc.mode();
    map_trial(
        scn,
        &scn.cfg.map,
        calibration_pct,
        Draw::for_mode(loc.mode),
        trial,
        |calibration, readings, _| {
            let request = LocalizationRequest {
                observations: readings.to_vec(),
                mode,
            };
            Ok(localizer.localize(calibration, &request)?.positions())
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapRow {
    pub value: f64,
    /// Mean over trials that estimated at least one point.
    pub rms_est_db: Option<f64>,
    pub rms_overall_db: f64,
    pub improvement_pct: f64,
}

/// Per-trial map metrics at every calibration percentage.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSweep {
    pub values: Vec<f64>,
    pub metrics: Vec<Vec<MapMetrics>>,
}

impl MapSweep {
    pub fn rows(&self) -> Vec<MapRow> {
        self.values
            .iter()
            .zip(&self.metrics)
            .map(|(&value, m)| {
                let est: Vec<f64> = m.iter().filter_map(|x| x.rms_estimated).collect();
                let overall: Vec<f64> = m.iter().map(|x| x.rms_overall).collect();
                let imp: Vec<f64> = m.iter().map(|x| x.improvement_pct).collect();
                MapRow {
                    value,
                    rms_est_db: (!est.is_empty()).then(|| mean(&est)),
                    rms_overall_db: mean(&overall),
                    improvement_pct: mean(&imp),
                }
            })
            .collect()
    }

    /// All (calibration %, trial improvement) pairs.
    pub fn improvement_pairs(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (&v, m) in self.values.iter().zip(&self.metrics) {
            for x in m {
                xs.push(v);
                ys.push(x.improvement_pct);
            }
        }
        (xs, ys)
    }
}

/// Map construction over the calibration sweep, `cfg.trials` trials each.
pub fn run_map_experiment(scn: &Scenario) -> Result<MapSweep> {
    let localizer = scn.localizer(&scn.cfg.localization)?;
    let mut values = Vec::new();
    let mut metrics = Vec::new();
    for &pct in &scn.cfg.sweep.calibration_pct {
        let m = (0..scn.cfg.trials as u64)
            .map(|t| localized_map_trial(scn, &localizer, pct, t).map(|r| r.metrics))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_stage("map construction"))?;
        values.push(pct);
        metrics.push(m);
    }
    Ok(MapSweep { values, metrics })
}

/// Default neighborhood size for the scenario's source.
pub fn default_neighbors(scn: &Scenario) -> usize {
    pct_count(scn.cfg.localization.neighbors_pct, scn.len())
}

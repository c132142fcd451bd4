//! Online localization by manifold alignment.
//!
//! The source data set (a simulated radio map or extended plan coordinates)
//! is processed once into its neighborhood Laplacian. Each request builds the
//! destination set `[calibration | observations]`, aligns the two graphs and
//! hands every observation the position of its nearest embedded source row.

use crate::alignment::{
    assemble_joint_laplacian, compute_embedding, mixing_weights, pair_indices, Embedding,
    SpectralForm, DEFAULT_EMBEDDING_DIM, DEFAULT_ZERO_TOL,
};
use crate::environment::{make_plan_source, Fingerprint, GridSpec, Position, RadioMap};
use crate::error::{Error, Result, StageExt};
use crate::lle::{
    build_laplacian, compute_weights, default_neighbor_count, find_neighbors, Laplacian,
    NeighborSets, DEFAULT_RIDGE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    SimulatedMap,
    PlanCoordinates,
}

/// High-dimensional source points with their grid positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDataset {
    pub kind: SourceKind,
    pub positions: Vec<Position>,
    pub points: Vec<Vec<f64>>,
}

impl SourceDataset {
    pub fn simulated(map: &RadioMap) -> Self {
        Self {
            kind: SourceKind::SimulatedMap,
            positions: map.positions(),
            points: map.rss_vectors(),
        }
    }

    pub fn plan_coordinates(grid: &GridSpec, k: usize) -> Result<Self> {
        Ok(Self {
            kind: SourceKind::PlanCoordinates,
            positions: grid.positions().to_vec(),
            points: make_plan_source(grid, k)?,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizerConfig {
    /// Source neighborhood size; `None` uses 11% of the source size.
    pub source_neighbors: Option<usize>,
    /// Destination neighborhood size; `None` uses the source neighborhood
    /// size, capped at `C + O - 1`.
    pub dest_neighbors: Option<usize>,
    pub ridge: f64,
    pub embedding_dim: usize,
    pub zero_tol: f64,
    pub spectral_form: SpectralForm,
}

impl Default for LocalizerConfig {
    fn default() -> Self {
        Self {
            source_neighbors: None,
            dest_neighbors: None,
            ridge: DEFAULT_RIDGE,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            zero_tol: DEFAULT_ZERO_TOL,
            spectral_form: SpectralForm::default(),
        }
    }
}

impl LocalizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=10).contains(&self.embedding_dim) {
            return Err(Error::config(format!(
                "embedding dimension must lie in 1..=10, got {}",
                self.embedding_dim
            )));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::config(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        if !(self.zero_tol >= 0.0 && self.zero_tol.is_finite()) {
            return Err(Error::config(format!("zero tolerance must be >= 0, got {}", self.zero_tol)));
        }
        for n in [self.source_neighbors, self.dest_neighbors].into_iter().flatten() {
            if n < 2 {
                return Err(Error::config(format!("neighbor counts must be >= 2, got {n}")));
            }
        }
        Ok(())
    }
}

/// How far an estimate must lie from both trajectory neighbors to be
/// treated as an outlier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutlierRule {
    /// Fixed distance in meters.
    Absolute(f64),
    /// Multiple of the source grid spacing (median nearest-neighbor distance
    /// between source positions). A walking user moves about one grid step
    /// between readings.
    GridSpacing(f64),
    /// Multiple of the median step of the estimated trajectory.
    MedianStep(f64),
}

impl Default for OutlierRule {
    fn default() -> Self {
        OutlierRule::GridSpacing(2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkingParams {
    /// Force temporally adjacent observations into each other's neighborhoods.
    pub boost_trajectory: bool,
    pub outlier_rule: OutlierRule,
}

impl Default for WalkingParams {
    fn default() -> Self {
        Self {
            boost_trajectory: true,
            outlier_rule: OutlierRule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Stationary,
    /// Observations are one user's readings in temporal order.
    Walking(WalkingParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationRequest {
    pub observations: Vec<Vec<f64>>,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub position: Position,
    /// Grid index of the nearest embedded source row.
    pub source_index: usize,
    pub embedding_distance: f64,
    /// Replaced by the midpoint of its trajectory neighbors.
    pub smoothed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    pub estimates: Vec<Estimate>,
    pub embedding: Embedding,
}

impl LocalizationResult {
    pub fn positions(&self) -> Vec<Position> {
        self.estimates.iter().map(|e| e.position).collect()
    }
}

/// Source Laplacian and positions, computed once per source data set.
#[derive(Debug, Clone)]
pub struct Localizer {
    positions: Vec<Position>,
    k: usize,
    laplacian: Laplacian,
    source_count: usize,
    spacing: f64,
    cfg: LocalizerConfig,
}

impl Localizer {
    /// Builds the source neighborhood graph. `forbidden(i, j)` excludes
    /// source pairs from being neighbors (wall dissociation).
    pub fn new(
        source: &SourceDataset,
        cfg: LocalizerConfig,
        forbidden: Option<&dyn Fn(usize, usize) -> bool>,
    ) -> Result<Self> {
        cfg.validate()?;
        if source.positions.len() != source.points.len() {
            return Err(Error::structural(format!(
                "source has {} positions but {} points",
                source.positions.len(),
                source.points.len()
            )));
        }
        let count = cfg
            .source_neighbors
            .unwrap_or_else(|| default_neighbor_count(source.len()));
        let nbrs = find_neighbors(&source.points, count, forbidden).stage("source neighborhoods")?;
        let weights = compute_weights(&source.points, &nbrs, cfg.ridge).stage("source weights")?;
        Ok(Self {
            positions: source.positions.clone(),
            k: source.dim(),
            laplacian: build_laplacian(&weights),
            source_count: count,
            spacing: grid_spacing(&source.positions),
            cfg,
        })
    }

    pub fn config(&self) -> &LocalizerConfig {
        &self.cfg
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    /// Median nearest-neighbor distance between source positions.
    pub fn grid_spacing(&self) -> f64 {
        self.spacing
    }

    pub fn source_laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    pub fn localize(
        &self,
        calibration: &[Fingerprint],
        request: &LocalizationRequest,
    ) -> Result<LocalizationResult> {
        let (c, o) = (calibration.len(), request.observations.len());
        if o == 0 {
            return Err(Error::config("localization needs at least one observation"));
        }
        let k = calibration.first().map_or(0, |f| f.rss.len());
        if let Some(bad) = calibration
            .iter()
            .map(|f| &f.rss)
            .chain(&request.observations)
            .position(|v| v.len() != k || k == 0)
        {
            return Err(Error::structural(format!(
                "destination vector {bad} does not have the common length {k}"
            )));
        }
        if self.k != k {
            return Err(Error::structural(format!(
                "source vectors have {} entries, RSS vectors have {k}",
                self.k
            )));
        }

        let cal_positions: Vec<Position> = calibration.iter().map(|f| f.position).collect();
        let idx = pair_indices(&self.positions, &cal_positions, o).stage("pairing")?;
        let lx = self.laplacian.permuted(&idx.source_order())?;

        let dest: Vec<&[f64]> = calibration
            .iter()
            .map(|f| f.rss.as_slice())
            .chain(request.observations.iter().map(Vec::as_slice))
            .collect();
        let count = self
            .cfg
            .dest_neighbors
            .unwrap_or_else(|| self.source_count.min((c + o).saturating_sub(1)).max(2));
        if count >= c + o {
            return Err(Error::structural(format!(
                "destination set of {} points cannot supply {count} neighbors",
                c + o
            ))
            .in_stage("destination neighborhoods"));
        }
        let mut nbrs = find_neighbors(&dest, count, None).stage("destination neighborhoods")?;
        if let Mode::Walking(params) = request.mode {
            if params.boost_trajectory {
                nbrs = boost_trajectory_weights(&nbrs, o, c);
            }
        }
        let weights = compute_weights(&dest, &nbrs, self.cfg.ridge).stage("destination weights")?;
        let ly = build_laplacian(&weights);

        let s = self.positions.len();
        let (lambda_x, lambda_y) = mixing_weights(s, c, o);
        let lz = assemble_joint_laplacian(&lx, &ly, &idx, lambda_x, lambda_y).stage("joint Laplacian")?;
        let embedding = compute_embedding(&lz, self.cfg.embedding_dim, self.cfg.zero_tol, self.cfg.spectral_form).stage("embedding")?;

        let mut estimates: Vec<Estimate> = embedding
            .observation_rows()
            .map(|r| {
                let (dist, src) = nearest_source_row(&embedding, r, |row| {
                    idx.source_of_row(row).expect("row below S")
                });
                Estimate {
                    position: self.positions[src],
                    source_index: src,
                    embedding_distance: dist,
                    smoothed: false,
                }
            })
            .collect();

        if let Mode::Walking(params) = request.mode {
            let raw: Vec<Position> = estimates.iter().map(|e| e.position).collect();
            let threshold = match params.outlier_rule {
                OutlierRule::Absolute(d) => d,
                OutlierRule::GridSpacing(f) => f * self.spacing,
                OutlierRule::MedianStep(f) => f * median_step(&raw),
            };
            let (smoothed, flags) = smooth_outliers(&raw, threshold);
            for ((e, p), f) in estimates.iter_mut().zip(smoothed).zip(flags) {
                e.position = p;
                e.smoothed = f;
            }
        }
        Ok(LocalizationResult {
            estimates,
            embedding,
        })
    }
}

/// One-shot variant of [`Localizer::localize`].
pub fn localize(
    source: &SourceDataset,
    calibration: &[Fingerprint],
    request: &LocalizationRequest,
    cfg: LocalizerConfig,
) -> Result<LocalizationResult> {
    Localizer::new(source, cfg, None)?.localize(calibration, request)
}

/// Nearest row among the source rows `0..S`; ties go to the lower grid index.
fn nearest_source_row(
    emb: &Embedding,
    row: usize,
    grid_index: impl Fn(usize) -> usize,
) -> (f64, usize) {
    let target = emb.coords.row(row);
    let mut best = (f64::INFINITY, usize::MAX);
    for r in emb.paired_rows().chain(emb.unpaired_rows()) {
        let d = (emb.coords.row(r) - target).norm();
        let cand = (d, grid_index(r));
        if cand.0 < best.0 || (cand.0 == best.0 && cand.1 < best.1) {
            best = cand;
        }
    }
    best
}

/// Forces each observation's temporal predecessor and successor into its
/// neighbor list, evicting the farthest non-trajectory neighbors.
///
/// Observations are destination indices `C..C+O`. Forced entries are placed
/// at the front of the list; the list length does not change.
pub fn boost_trajectory_weights(neighbors: &NeighborSets, o: usize, c: usize) -> NeighborSets {
    let mut lists = neighbors.lists().to_vec();
    for t in 0..o {
        let me = c + t;
        let forced: Vec<usize> = [t.checked_sub(1), (t + 1 < o).then_some(t + 1)]
            .into_iter()
            .flatten()
            .map(|u| c + u)
            .collect();
        let list = &mut lists[me];
        let len = list.len();
        let mut rest: Vec<usize> = list.iter().copied().filter(|j| !forced.contains(j)).collect();
        let room = len.saturating_sub(forced.len());
        rest.truncate(room);
        let mut out: Vec<usize> = forced.iter().copied().take(len).collect();
        out.extend(rest);
        *list = out;
    }
    NeighborSets::from_lists(lists).expect("boosting keeps lists valid")
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::INFINITY;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

/// Median distance between consecutive positions; infinite for fewer than
/// two positions.
pub fn median_step(positions: &[Position]) -> f64 {
    median(positions.windows(2).map(|w| w[0].distance(&w[1])).collect())
}

/// Median over all positions of the distance to the nearest other position;
/// infinite for fewer than two positions.
pub fn grid_spacing(positions: &[Position]) -> f64 {
    let nearest = positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            positions
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| p.distance(q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    median(nearest)
}

/// Replaces every position farther than `threshold` from both its
/// predecessor and successor by their midpoint. Decisions use the original
/// positions only. Returns the new positions and the replacement flags.
pub fn smooth_outliers(positions: &[Position], threshold: f64) -> (Vec<Position>, Vec<bool>) {
    let mut out = positions.to_vec();
    let mut flags = vec![false; positions.len()];
    for t in 1..positions.len().saturating_sub(1) {
        let (prev, cur, next) = (positions[t - 1], positions[t], positions[t + 1]);
        if cur.distance(&prev) > threshold && cur.distance(&next) > threshold {
            out[t] = prev.midpoint(&next);
            flags[t] = true;
        }
    }
    (out, flags)
}

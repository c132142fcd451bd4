//! Locally linear reconstruction weights and the neighborhood Laplacian.
//!
//! Every point is written as a unit-sum combination of its nearest neighbors.
//! With `D_i` the matrix whose rows are `z_i - z_j` over the neighbors, the
//! weights are the normalized row sums of `(D_i D_i^T)^-1`, i.e. the solution
//! of `G w = 1` rescaled to sum to one.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default ridge, relative to the trace of each local Gram matrix.
pub const DEFAULT_RIDGE: f64 = 1e-3;

/// 11% of the data set size, rounded, at least 2 and at most `n - 1`.
pub fn default_neighbor_count(n: usize) -> usize {
    let k = ((0.11 * n as f64).round() as usize).max(2);
    k.min(n.saturating_sub(1))
}

/// Ordered neighbor lists, nearest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSets {
    lists: Vec<Vec<usize>>,
}

impl NeighborSets {
    /// Wraps explicit lists after checking that no point neighbors itself,
    /// lists have no repeats and all indices are in range.
    pub fn from_lists(lists: Vec<Vec<usize>>) -> Result<Self> {
        let n = lists.len();
        for (i, list) in lists.iter().enumerate() {
            for (a, &j) in list.iter().enumerate() {
                if j >= n || j == i || list[..a].contains(&j) {
                    return Err(Error::structural(format!(
                        "invalid neighbor {j} in the list of point {i}"
                    )));
                }
            }
        }
        Ok(Self { lists })
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn of(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.lists
    }

    pub fn into_lists(self) -> Vec<Vec<usize>> {
        self.lists
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_points<P: AsRef<[f64]>>(points: &[P]) -> Result<usize> {
    let dim = points.first().map_or(0, |p| p.as_ref().len());
    if dim == 0 {
        return Err(Error::structural("point set is empty or zero-dimensional"));
    }
    if let Some(i) = points.iter().position(|p| p.as_ref().len() != dim) {
        return Err(Error::structural(format!(
            "point {i} has dimension {}, expected {dim}",
            points[i].as_ref().len()
        )));
    }
    Ok(dim)
}

/// Euclidean k-nearest neighbors, skipping pairs for which `forbidden`
/// returns true. Ties go to the lower index.
pub fn find_neighbors<P: AsRef<[f64]>>(
    points: &[P],
    count: usize,
    forbidden: Option<&dyn Fn(usize, usize) -> bool>,
) -> Result<NeighborSets> {
    check_points(points)?;
    let n = points.len();
    if count < 1 || count >= n {
        return Err(Error::structural(format!(
            "neighbor count {count} must lie in 1..{n} for {n} points"
        )));
    }
    let mut lists = Vec::with_capacity(n);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let zi = points[i].as_ref();
        candidates.clear();
        candidates.extend(
            (0..n)
                .filter(|&j| j != i && !forbidden.is_some_and(|f| f(i, j)))
                .map(|j| (squared_distance(zi, points[j].as_ref()), j)),
        );
        if candidates.len() < count {
            return Err(Error::structural(format!(
                "point {i} has only {} eligible neighbors, need {count}",
                candidates.len()
            )));
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        lists.push(candidates[..count].iter().map(|&(_, j)| j).collect());
    }
    Ok(NeighborSets { lists })
}

/// Sparse row-stochastic reconstruction weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl WeightMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|&&(c, _)| c == j)
            .map_or(0.0, |&(_, w)| w)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.rows.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] = w;
            }
        }
        m
    }
}

/// Closed-form constrained least-squares weights for every point.
///
/// With `ridge > 0` each Gram matrix is conditioned as
/// `G + ridge * trace(G) * I`. With `ridge == 0` a singular Gram matrix is an
/// error.
pub fn compute_weights<P: AsRef<[f64]>>(
    points: &[P],
    neighbors: &NeighborSets,
    ridge: f64,
) -> Result<WeightMatrix> {
    let dim = check_points(points)?;
    if neighbors.len() != points.len() {
        return Err(Error::structural(format!(
            "{} neighbor lists for {} points",
            neighbors.len(),
            points.len()
        )));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::config(format!("ridge must be >= 0, got {ridge}")));
    }
    let rows = (0..points.len())
        .map(|i| {
            let nbrs = neighbors.of(i);
            if nbrs.is_empty() {
                return Err(Error::structural(format!("point {i} has no neighbors")));
            }
            let zi = points[i].as_ref();
            let diffs = DMatrix::from_fn(nbrs.len(), dim, |r, c| zi[c] - points[nbrs[r]].as_ref()[c]);
            let w = local_weights(&diffs, ridge).map_err(|why| {
                Error::numerical(format!("reconstruction weights of point {i}: {why}"))
            })?;
            Ok(nbrs.iter().copied().zip(w.iter().copied()).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightMatrix { rows })
}

/// Weights from the difference matrix `D` (one row per neighbor).
fn local_weights(diffs: &DMatrix<f64>, ridge: f64) -> std::result::Result<DVector<f64>, String> {
    let k = diffs.nrows();
    if k == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let mut gram = diffs * diffs.transpose();
    let trace = gram.trace();
    if ridge > 0.0 {
        for d in 0..k {
            gram[(d, d)] += ridge * trace;
        }
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| "Gram matrix is singular".to_string())?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    if !(lo > 0.0) || (lo / hi).powi(2) < 1e-13 {
        return Err("Gram matrix is singular".to_string());
    }
    let w = chol.solve(&DVector::from_element(k, 1.0));
    let total: f64 = w.sum();
    if !(total.abs() > 1e-300) || !total.is_finite() {
        return Err(format!("inverse Gram matrix sums to {total}"));
    }
    Ok(w / total)
}

/// `I - W` on the neighbor sparsity pattern, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian(DMatrix<f64>);

impl Laplacian {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::structural(format!(
                "Laplacian must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    /// Reorders rows and columns so that new index `a` is old index `order[a]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.size();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&o| o >= n || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::structural(format!(
                "order of length {} is not a permutation of 0..{n}",
                order.len()
            )));
        }
        Ok(Self(DMatrix::from_fn(n, n, |a, b| self.0[(order[a], order[b])])))
    }
}

pub fn build_laplacian(weights: &WeightMatrix) -> Laplacian {
    let n = weights.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut total = 0.0;
        for &(j, w) in weights.row(i) {
            m[(i, j)] = -w;
            total += w;
        }
        m[(i, i)] = total;
    }
    Laplacian(m)
}

/// Neighbors, weights and Laplacian in one call.
pub fn neighborhood_laplacian<P: AsRef<[f64]>>(
    points: &[P],
    count: usize,
    ridge: f64,
    forbidden: Option<&dyn Fn(usize, usize) -> bool>,
) -> Result<Laplacian> {
    let nbrs = find_neighbors(points, count, forbidden)?;
    Ok(build_laplacian(&compute_weights(points, &nbrs, ridge)?))
}

//! Hard-constraint manifold alignment.
//!
//! Source points `[P | Qx]` and destination points `[calibration | observations]`
//! share one embedding row for every paired index. The joint Laplacian couples
//! both neighborhood graphs through those shared rows:
//!
//! ```text
//!        P                      Qx            Qy
//! P   [ lx*Lx_PP + ly*Ly_PP   lx*Lx_PQx     ly*Ly_PQy  ]
//! Qx  [ lx*Lx_QxP             lx*Lx_QxQx    0          ]
//! Qy  [ ly*Ly_QyP             0             ly*Ly_QyQy ]
//! ```
//!
//! The embedding is taken from the smallest non-trivial eigenvectors of an
//! operator derived from `Lz` (see [`SpectralForm`]), subject to `h'1 = 0`.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::environment::Position;
use crate::error::{Error, Result};
use crate::lle::Laplacian;

/// Default embedding dimension.
pub const DEFAULT_EMBEDDING_DIM: usize = 3;
/// Eigenvalues with `|value| <= DEFAULT_ZERO_TOL * max |value|` count as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// Index sets relating source points, calibration fingerprints and observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedIndexing {
    paired: Vec<usize>,
    unpaired: Vec<usize>,
    observations: usize,
    /// source index -> joint row
    row_of_source: Vec<usize>,
}

impl PairedIndexing {
    /// Source indices paired with calibration fingerprints, in calibration order.
    pub fn paired(&self) -> &[usize] {
        &self.paired
    }

    /// Unpaired source indices, ascending.
    pub fn unpaired(&self) -> &[usize] {
        &self.unpaired
    }

    pub fn calibration_len(&self) -> usize {
        self.paired.len()
    }

    pub fn source_len(&self) -> usize {
        self.row_of_source.len()
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    /// Joint size `S + O`.
    pub fn joint_len(&self) -> usize {
        self.source_len() + self.observations
    }

    /// Source indices in `[P | Qx]` order.
    pub fn source_order(&self) -> Vec<usize> {
        self.paired.iter().chain(&self.unpaired).copied().collect()
    }

    pub fn row_of_source(&self, source: usize) -> usize {
        self.row_of_source[source]
    }

    /// Source index stored at joint row `row`, for rows below `S`.
    pub fn source_of_row(&self, row: usize) -> Option<usize> {
        let c = self.paired.len();
        if row < c {
            Some(self.paired[row])
        } else {
            self.unpaired.get(row - c).copied()
        }
    }

    /// Joint row of destination index `dest` (calibration first, then observations).
    pub fn row_of_destination(&self, dest: usize) -> usize {
        let c = self.paired.len();
        if dest < c {
            dest
        } else {
            self.source_len() + (dest - c)
        }
    }
}

/// Matches every calibration position to the grid point at exactly that
/// position.
pub fn pair_indices(
    source_positions: &[Position],
    calibration_positions: &[Position],
    observations: usize,
) -> Result<PairedIndexing> {
    let lookup: HashMap<(u64, u64), usize> = source_positions
        .iter()
        .enumerate()
        .map(|(i, p)| (p.key(), i))
        .collect();
    let mut taken = vec![false; source_positions.len()];
    let mut paired = Vec::with_capacity(calibration_positions.len());
    for p in calibration_positions {
        let i = *lookup.get(&p.key()).ok_or_else(|| {
            Error::config(format!("calibration point ({}, {}) is not on the grid", p.x, p.y))
        })?;
        if std::mem::replace(&mut taken[i], true) {
            return Err(Error::config(format!(
                "calibration point ({}, {}) appears more than once",
                p.x, p.y
            )));
        }
        paired.push(i);
    }
    if paired.is_empty() {
        return Err(Error::config("at least one calibration fingerprint is required"));
    }
    let unpaired: Vec<usize> = (0..source_positions.len()).filter(|&i| !taken[i]).collect();
    let mut row_of_source = vec![0; source_positions.len()];
    for (row, &src) in paired.iter().chain(&unpaired).enumerate() {
        row_of_source[src] = row;
    }
    Ok(PairedIndexing {
        paired,
        unpaired,
        observations,
        row_of_source,
    })
}

/// `(lambda_x, lambda_y) = ((C + O) / (S + C + O), S / (S + C + O))`.
///
/// The larger weight is computed by division and the smaller as its
/// complement, which keeps their sum exactly 1.
pub fn mixing_weights(s: usize, c: usize, o: usize) -> (f64, f64) {
    let total = (s + c + o) as f64;
    if s >= c + o {
        let ly = s as f64 / total;
        (1.0 - ly, ly)
    } else {
        let lx = (c + o) as f64 / total;
        (lx, 1.0 - lx)
    }
}

/// Which quadratic form of the joint Laplacian is minimized.
///
/// LLE weights may be negative, so the symmetric part of `Lz` is in general
/// indefinite and its lowest modes oscillate instead of following the
/// manifold. `Reconstruction` minimizes the reconstruction cost
/// `|Lz h|^2 = h' Lz'Lz h`, which is positive semi-definite and keeps `1`
/// in its null space. `Symmetric` minimizes `h' ((Lz + Lz')/2) h` directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralForm {
    #[default]
    Reconstruction,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointLaplacian {
    matrix: DMatrix<f64>,
    pub lambda_x: f64,
    pub lambda_y: f64,
    calibration: usize,
    source: usize,
    observations: usize,
}

impl JointLaplacian {
    /// The assembled (unsymmetrized) block matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn symmetrized(&self) -> DMatrix<f64> {
        (&self.matrix + self.matrix.transpose()) * 0.5
    }

    /// The symmetric matrix whose eigenvectors form the embedding.
    pub fn operator(&self, form: SpectralForm) -> DMatrix<f64> {
        match form {
            SpectralForm::Reconstruction => self.matrix.tr_mul(&self.matrix),
            SpectralForm::Symmetric => self.symmetrized(),
        }
    }

    pub fn calibration_len(&self) -> usize {
        self.calibration
    }

    pub fn source_len(&self) -> usize {
        self.source
    }

    pub fn observations(&self) -> usize {
        self.observations
    }
}

/// Assembles the joint Laplacian from the source Laplacian in `[P | Qx]`
/// order and the destination Laplacian in `[calibration | observations]`
/// order.
pub fn assemble_joint_laplacian(
    lx: &Laplacian,
    ly: &Laplacian,
    idx: &PairedIndexing,
    lambda_x: f64,
    lambda_y: f64,
) -> Result<JointLaplacian> {
    let (s, c, o) = (idx.source_len(), idx.calibration_len(), idx.observations());
    if lx.size() != s {
        return Err(Error::structural(format!(
            "source Laplacian is {0}x{0}, expected {s}x{s}",
            lx.size()
        )));
    }
    if ly.size() != c + o {
        return Err(Error::structural(format!(
            "destination Laplacian is {0}x{0}, expected {1}x{1} (C={c}, O={o})",
            ly.size(),
            c + o
        )));
    }
    let n = s + o;
    let mut m = DMatrix::zeros(n, n);
    // source rows occupy joint rows 0..S unchanged
    m.view_mut((0, 0), (s, s)).copy_from(&(lx.matrix() * lambda_x));
    let rows: Vec<usize> = (0..c + o).map(|d| idx.row_of_destination(d)).collect();
    let ly = ly.matrix();
    for (a, &ra) in rows.iter().enumerate() {
        for (b, &rb) in rows.iter().enumerate() {
            m[(ra, rb)] += lambda_y * ly[(a, b)];
        }
    }
    Ok(JointLaplacian {
        matrix: m,
        lambda_x,
        lambda_y,
        calibration: c,
        source: s,
        observations: o,
    })
}

/// Aligned low-dimensional coordinates, rows ordered `[E_P | E_Qx | E_O]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: DMatrix<f64>,
    /// Eigenvalues of the retained columns, ascending.
    pub eigenvalues: Vec<f64>,
    calibration: usize,
    source: usize,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn paired_rows(&self) -> std::ops::Range<usize> {
        0..self.calibration
    }

    pub fn unpaired_rows(&self) -> std::ops::Range<usize> {
        self.calibration..self.source
    }

    pub fn observation_rows(&self) -> std::ops::Range<usize> {
        self.source..self.coords.nrows()
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.coords.row(r).iter().copied().collect()
    }
}

/// Solution of the constrained spectral problem for any square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    /// Unit-norm columns, one per retained eigenvalue.
    pub vectors: DMatrix<f64>,
    pub values: Vec<f64>,
    /// Full spectrum on the constraint subspace (plus the zero for `1`), ascending.
    pub spectrum: Vec<f64>,
}

/// Stationary points of `h' A h / h'h` on `h'1 = 0`, where `A` is the
/// symmetric part of `matrix`.
///
/// The problem is solved as the eigendecomposition of `Pi A Pi` with
/// `Pi = I - 11'/n`; `1` becomes an exact zero mode. Eigenvalues with
/// `|value| <= zero_tol * max |value|` are discarded as trivial and the `dim`
/// smallest remaining ones are returned. Each column's sign is fixed so its
/// largest-magnitude entry is positive.
pub fn constrained_smallest_eigenpairs(
    matrix: &DMatrix<f64>,
    dim: usize,
    zero_tol: f64,
) -> Result<SpectralSolution> {
    let n = matrix.nrows();
    if !matrix.is_square() || n < 2 {
        return Err(Error::structural(format!(
            "eigenproblem needs a square matrix of size >= 2, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if dim < 1 {
        return Err(Error::config("embedding dimension must be >= 1"));
    }
    if !(zero_tol >= 0.0 && zero_tol.is_finite()) {
        return Err(Error::config(format!("zero tolerance must be >= 0, got {zero_tol}")));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("joint Laplacian has non-finite entries"));
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    let projected = project_out_ones(&sym);
    let eig = SymmetricEigen::new(projected);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let scale = spectrum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = zero_tol * scale;
    let kept: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| eig.eigenvalues[i].abs() > threshold)
        .take(dim)
        .collect();
    if kept.len() < dim {
        return Err(Error::numerical(format!(
            "only {} of {dim} requested eigenvalues exceed the zero threshold {threshold:.3e}; spectrum {}",
            kept.len(),
            summarize(&spectrum)
        )));
    }

    let mut vectors = DMatrix::zeros(n, dim);
    let mut values = Vec::with_capacity(dim);
    for (col, &i) in kept.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        v.normalize_mut();
        if v[v.iamax()] < 0.0 {
            v.neg_mut();
        }
        let drift = v.sum().abs();
        if drift > 1e-6 * (n as f64).sqrt() {
            return Err(Error::numerical(format!(
                "eigenvector {col} violates h'1 = 0 (|h'1| = {drift:.3e})"
            )));
        }
        vectors.set_column(col, &v);
        values.push(eig.eigenvalues[i]);
    }
    Ok(SpectralSolution {
        vectors,
        values,
        spectrum,
    })
}

fn project_out_ones(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() as f64;
    let row_means: Vec<f64> = a.row_iter().map(|r| r.sum() / n).collect();
    let col_means: Vec<f64> = a.column_iter().map(|c| c.sum() / n).collect();
    let grand = row_means.iter().sum::<f64>() / n;
    let mut out = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        a[(i, j)] - row_means[i] - col_means[j] + grand
    });
    // exact symmetry for the eigensolver
    out = (&out + out.transpose()) * 0.5;
    out
}

fn summarize(spectrum: &[f64]) -> String {
    let head: Vec<String> = spectrum.iter().take(8).map(|v| format!("{v:.3e}")).collect();
    if spectrum.len() > 8 {
        format!("[{}, ... {} more]", head.join(", "), spectrum.len() - 8)
    } else {
        format!("[{}]", head.join(", "))
    }
}

/// Embedding from the `dim` smallest non-trivial eigenvectors of the joint
/// Laplacian's operator in the given form.
pub fn compute_embedding(
    lz: &JointLaplacian,
    dim: usize,
    zero_tol: f64,
    form: SpectralForm,
) -> Result<Embedding> {
    let sol = constrained_smallest_eigenpairs(&lz.operator(form), dim, zero_tol)?;
    Ok(Embedding {
        coords: sol.vectors,
        eigenvalues: sol.values,
        calibration: lz.calibration_len(),
        source: lz.source_len(),
    })
}

//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's numerical code; each routine solves
//! the same problem a second, deliberately different way.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rss_align::environment::Position;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..k).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect()
}

/// Neighbor lists by sorting every pairwise distance (ties: lower index).
pub fn brute_force_neighbors(points: &[Vec<f64>], count: usize) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum();
                    (d, j)
                })
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(count).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Orthonormal basis of `{v : sum(v) = 0}` in R^k (Helmert contrasts).
pub fn sum_zero_basis(k: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(k, k - 1);
    for c in 0..k - 1 {
        let m = (c + 1) as f64;
        let norm = (m * (m + 1.0)).sqrt();
        for r in 0..=c {
            b[(r, c)] = 1.0 / norm;
        }
        b[(c + 1, c)] = -m / norm;
    }
    b
}

/// Reconstruction weights of `z` from `nbrs`: minimizes
/// `w' (G + ridge * trace(G) I) w` over `sum(w) = 1`, where `G` is the local
/// Gram matrix, by substituting `w = 1/k + B u` with `B` spanning the
/// sum-zero subspace and solving the unconstrained problem in `u` by SVD.
pub fn constrained_ls_weights(z: &[f64], nbrs: &[&[f64]], ridge: f64) -> Vec<f64> {
    let k = nbrs.len();
    if k == 1 {
        return vec![1.0];
    }
    let d = DMatrix::from_fn(k, z.len(), |j, a| nbrs[j][a] - z[a]);
    let mut g = &d * d.transpose();
    let tr = g.trace();
    for j in 0..k {
        g[(j, j)] += ridge * tr;
    }
    let b = sum_zero_basis(k);
    let w0 = DVector::from_element(k, 1.0 / k as f64);
    let lhs = b.transpose() * &g * &b;
    let rhs = -(b.transpose() * &g * &w0);
    let u = lhs.svd(true, true).solve(&rhs, 1e-14).expect("svd solve");
    (w0 + b * u).iter().copied().collect()
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix
/// by the cyclic Jacobi rotation method.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].total_cmp(&a[(y, y)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// `(I - 11'/n) A (I - 11'/n)` by explicit matrix products.
pub fn center(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let p = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let m = &p * a * &p;
    (&m + m.transpose()) * 0.5
}

/// Naive triple-loop `A' A`.
pub fn gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    DMatrix::from_fn(n, n, |i, j| (0..a.nrows()).map(|r| a[(r, i)] * a[(r, j)]).sum())
}

/// Expected joint Laplacian entry by case analysis on the row/column class.
///
/// Joint rows: `0..C` calibration (paired) points in calibration order,
/// `C..S` unpaired source points in ascending grid order, `S..S+O`
/// observations. `lx` is indexed by grid index, `ly` by destination index
/// (`0..C` calibration, `C..C+O` observations).
pub struct JointOracle<'a> {
    pub lx: &'a DMatrix<f64>,
    pub ly: &'a DMatrix<f64>,
    pub calib_grid: &'a [usize],
    pub unpaired_grid: Vec<usize>,
    pub lambda_x: f64,
    pub lambda_y: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Class {
    P(usize),
    Qx(usize),
    Qy(usize),
}

impl<'a> JointOracle<'a> {
    pub fn new(lx: &'a DMatrix<f64>, ly: &'a DMatrix<f64>, calib_grid: &'a [usize], lambda_x: f64, lambda_y: f64) -> Self {
        let s = lx.nrows();
        let unpaired_grid = (0..s).filter(|g| !calib_grid.contains(g)).collect();
        Self {
            lx,
            ly,
            calib_grid,
            unpaired_grid,
            lambda_x,
            lambda_y,
        }
    }

    pub fn class(&self, r: usize) -> Class {
        let c = self.calib_grid.len();
        let s = self.lx.nrows();
        if r < c {
            Class::P(r)
        } else if r < s {
            Class::Qx(r - c)
        } else {
            Class::Qy(r - s)
        }
    }

    pub fn entry(&self, r: usize, col: usize) -> f64 {
        let c = self.calib_grid.len();
        let gx = |cl: Class| match cl {
            Class::P(i) => Some(self.calib_grid[i]),
            Class::Qx(i) => Some(self.unpaired_grid[i]),
            Class::Qy(_) => None,
        };
        let dy = |cl: Class| match cl {
            Class::P(i) => Some(i),
            Class::Qx(_) => None,
            Class::Qy(i) => Some(c + i),
        };
        let (a, b) = (self.class(r), self.class(col));
        match (a, b) {
            (Class::Qx(_), Class::Qy(_)) | (Class::Qy(_), Class::Qx(_)) => 0.0,
            (Class::P(_), Class::P(_)) => {
                self.lambda_x * self.lx[(gx(a).unwrap(), gx(b).unwrap())]
                    + self.lambda_y * self.ly[(dy(a).unwrap(), dy(b).unwrap())]
            }
            (Class::Qy(_), _) | (_, Class::Qy(_)) => self.lambda_y * self.ly[(dy(a).unwrap(), dy(b).unwrap())],
            _ => self.lambda_x * self.lx[(gx(a).unwrap(), gx(b).unwrap())],
        }
    }
}

/// Outlier smoothing written from the rule: an interior point that is
/// farther than `threshold` from both original neighbors becomes their
/// midpoint.
pub fn reference_smoothing(path: &[Position], threshold: f64) -> Vec<Position> {
    let n = path.len();
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        if t == 0 || t + 1 == n {
            out.push(path[t]);
            continue;
        }
        let (a, b, c) = (path[t - 1], path[t], path[t + 1]);
        let far = |p: Position, q: Position| ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt() > threshold;
        if far(b, a) && far(b, c) {
            out.push(Position::new((a.x + c.x) / 2.0, (a.y + c.y) / 2.0));
        } else {
            out.push(b);
        }
    }
    out
}

/// Random unit vector orthogonal to `1` and to the columns of `null`.
pub fn random_feasible(rng: &mut ChaCha8Rng, n: usize, null: &[DVector<f64>]) -> DVector<f64> {
    let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let ones = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    for _ in 0..2 {
        v -= &ones * ones.dot(&v);
        for z in null {
            v -= z * z.dot(&v);
        }
    }
    v.normalize()
}

//! Summary statistics and the hypothesis tests used to judge trends.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Ranks starting at 1; tied values share their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub rho: f64,
    /// Two-sided p-value of the t approximation with n - 2 degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

/// Spearman rank correlation of paired samples.
pub fn spearman(x: &[f64], y: &[f64]) -> Correlation {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let n = x.len();
    let rho = pearson(&ranks(x), &ranks(y));
    let p_value = if n < 3 {
        1.0
    } else if rho.abs() >= 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Correlation { rho, p_value, n }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTest {
    /// Mean of `a - b`.
    pub mean_diff: f64,
    pub t: f64,
    /// One-sided p-value for the alternative `mean(a - b) > 0`.
    pub p_value: f64,
    pub n: usize,
}

/// Paired t test of `a` against `b`, one-sided towards `a > b`.
pub fn paired_t_greater(a: &[f64], b: &[f64]) -> PairedTest {
    assert_eq!(a.len(), b.len(), "paired test needs paired samples");
    let n = a.len();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean_diff = mean(&d);
    let sd = std_dev(&d);
    let (t, p_value) = if n < 2 {
        (0.0, 1.0)
    } else if sd == 0.0 {
        let p = if mean_diff > 0.0 { 0.0 } else { 1.0 };
        (mean_diff.signum() * f64::INFINITY, p)
    } else {
        let t = mean_diff / (sd / (n as f64).sqrt());
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
        (t, 1.0 - dist.cdf(t))
    };
    PairedTest {
        mean_diff,
        t,
        p_value,
        n,
    }
}

//! Feature significance testing and robust scaling.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::features::{Feature, FeatureMatrix, N_FEATURES};

/// Largest `n_a * n_b` for which the exact null distribution is enumerated.
pub const EXACT_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Midranks (1-based) of the pooled sample, doubled so that they are integers.
fn doubled_midranks(pooled: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let n = pooled.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean, doubled: (i+1 + j+1)
        let r = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        tie_sizes.push(j - i + 1);
        i = j + 1;
    }
    (ranks, tie_sizes)
}

/// Two-sided Mann-Whitney U test.
pub fn mann_whitney_u(sample_a: &[f64], sample_b: &[f64]) -> Result<MannWhitney> {
    let (na, nb) = (sample_a.len(), sample_b.len());
    if na == 0 || nb == 0 {
        return Err(Error::EmptySample);
    }
    let pooled: Vec<f64> = sample_a.iter().chain(sample_b).copied().collect();
    if pooled.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("samples contain NaN".into()));
    }
    let (ranks, ties) = doubled_midranks(&pooled);
    let r2_a: u64 = ranks[..na].iter().sum();
    let u = r2_a as f64 / 2.0 - (na * (na + 1)) as f64 / 2.0;
    let p = if na * nb > EXACT_LIMIT {
        normal_p(u, na, nb, &ties)
    } else {
        exact_p(&ranks, na, r2_a)
    };
    Ok(MannWhitney { u, p })
}

fn normal_p(u: f64, na: usize, nb: usize, ties: &[usize]) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    let n = na + nb;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / (n * (n - 1.0));
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term);
    if var <= 0.0 {
        return 1.0;
    }
    let mu = na * nb / 2.0;
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Exact two-sided p by counting the subsets of size `na` of the pooled
/// doubled ranks whose sum is at least as extreme as `observed`.
fn exact_p(ranks: &[u64], na: usize, observed: u64) -> f64 {
    let max_sum: u64 = {
        let mut r = ranks.to_vec();
        r.sort_unstable_by(|a, b| b.cmp(a));
        r[..na].iter().sum()
    };
    let width = max_sum as usize + 1;
    // ways[k * width + s]: subsets of size k with doubled-rank sum s
    let mut ways = vec![0.0f64; (na + 1) * width];
    ways[0] = 1.0;
    for &r in ranks {
        let r = r as usize;
        for k in (1..=na).rev() {
            let (lower, upper) = ways.split_at_mut(k * width);
            let prev = &lower[(k - 1) * width..];
            let cur = &mut upper[..width];
            for s in (r..width).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let dist = &ways[na * width..];
    let total: f64 = dist.iter().sum();
    let obs = observed as usize;
    let lower: f64 = dist[..=obs.min(width - 1)].iter().sum();
    let upper: f64 = if obs < width { dist[obs..].iter().sum() } else { 0.0 };
    (2.0 * lower.min(upper) / total).min(1.0)
}

/// Benjamini-Hochberg step-up procedure; returns the retained flags.
pub fn benjamini_hochberg(p_values: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0, 1)")));
    }
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("p-value {p} outside [0, 1]")));
    }
    let m = p_values.len();
    let mut sorted: Vec<f64> = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cutoff = (1..=m)
        .rev()
        .find(|&k| sorted[k - 1] <= k as f64 / m as f64 * alpha)
        .map(|k| sorted[k - 1]);
    Ok(match cutoff {
        Some(c) => p_values.iter().map(|&p| p <= c).collect(),
        None => vec![false; m],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSignificance {
    pub feature: Feature,
    pub u_statistic: f64,
    pub p_value: f64,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub alpha: f64,
    /// Sorted by ascending p-value.
    pub features: Vec<FeatureSignificance>,
}

impl SignificanceReport {
    pub fn retained(&self) -> Vec<Feature> {
        self.features.iter().filter(|f| f.retained).map(|f| f.feature).collect()
    }

    pub fn get(&self, feature: Feature) -> Option<&FeatureSignificance> {
        self.features.iter().find(|f| f.feature == feature)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14} {:>14} {:>12}  significant", "feature", "U", "p-value");
        for f in &self.features {
            let _ = writeln!(
                out,
                "{:<14} {:>14.1} {:>12.3e}  {}",
                f.feature.to_string(),
                f.u_statistic,
                f.p_value,
                if f.retained { "yes" } else { "no" }
            );
        }
        out
    }
}

/// Per-feature Shape-vs-Scribble test followed by BH selection.
pub fn significance_report(matrix: &FeatureMatrix, alpha: f64) -> Result<SignificanceReport> {
    let (x, y) = matrix.labeled_rows();
    let tests = Feature::ALL
        .par_iter()
        .map(|f| {
            let (a, b): (Vec<_>, Vec<_>) = x.iter().zip(&y).partition(|(_, is_shape)| **is_shape);
            let a: Vec<f64> = a.into_iter().map(|(r, _)| r[f.index()]).collect();
            let b: Vec<f64> = b.into_iter().map(|(r, _)| r[f.index()]).collect();
            mann_whitney_u(&a, &b)
        })
        .collect::<Result<Vec<_>>>()?;
    let p: Vec<f64> = tests.iter().map(|t| t.p).collect();
    let keep = benjamini_hochberg(&p, alpha)?;
    let mut features: Vec<FeatureSignificance> = Feature::ALL
        .iter()
        .zip(tests)
        .zip(keep)
        .map(|((f, t), k)| FeatureSignificance {
            feature: *f,
            u_statistic: t.u,
            p_value: t.p,
            retained: k,
        })
        .collect();
    features.sort_by(|a, b| a.p_value.total_cmp(&b.p_value).then(a.feature.cmp(&b.feature)));
    Ok(SignificanceReport { alpha, features })
}

/// Percentile with linear interpolation between order statistics;
/// `q` in `[0, 100]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-feature (p5, p95) scaling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustScaler {
    pub p5: Vec<f64>,
    pub p95: Vec<f64>,
}

impl RobustScaler {
    pub fn fit(rows: &[[f64; N_FEATURES]]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::degenerate("robust scaling needs at least 2 rows"));
        }
        let mut p5 = Vec::with_capacity(N_FEATURES);
        let mut p95 = Vec::with_capacity(N_FEATURES);
        for k in 0..N_FEATURES {
            let mut col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            col.sort_by(f64::total_cmp);
            p5.push(percentile(&col, 5.0));
            p95.push(percentile(&col, 95.0));
        }
        Ok(RobustScaler { p5, p95 })
    }

    pub fn transform_row(&self, row: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        for k in 0..N_FEATURES {
            let range = self.p95[k] - self.p5[k];
            out[k] = if range == 0.0 { 0.0 } else { (row[k] - self.p5[k]) / range };
        }
        out
    }

    pub fn transform(&self, rows: &[[f64; N_FEATURES]]) -> Vec<[f64; N_FEATURES]> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Fits the scaler on all rows of the matrix and returns the scaled rows.
pub fn robust_scale(matrix: &FeatureMatrix) -> Result<(Vec<[f64; N_FEATURES]>, RobustScaler)> {
    let rows: Vec<[f64; N_FEATURES]> = matrix.rows.iter().map(|r| r.to_array()).collect();
    let scaler = RobustScaler::fit(&rows)?;
    Ok((scaler.transform(&rows), scaler))
}

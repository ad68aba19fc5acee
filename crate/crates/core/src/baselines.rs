//! Comparison criteria: mean silhouette, the WSS elbow curve and the gap
//! statistic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{distance, Dataset};
use crate::error::{Error, Result};
use crate::kmeans::{best_of_restarts, derive_seed, Clustering, KMeansConfig};

/// Mean silhouette over all points. Members of singleton clusters score 0.
pub fn silhouette_mean(d: &Dataset, c: &Clustering) -> Result<f64> {
    Ok(silhouette_samples(d, c)?.iter().sum::<f64>() / d.n_rows() as f64)
}

/// Silhouette value of every point, in row order.
pub fn silhouette_samples(d: &Dataset, c: &Clustering) -> Result<Vec<f64>> {
    if c.k < 2 {
        return Err(Error::SilhouetteUndefined(c.k));
    }
    if c.assignments.len() != d.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: d.n_rows(),
            found: c.assignments.len(),
        });
    }
    let sizes = c.sizes();
    Ok((0..d.n_rows())
        .into_par_iter()
        .map(|i| {
            let own = c.assignments[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; c.k];
            let xi = d.row(i);
            for (row, &a) in d.rows().zip(&c.assignments) {
                sums[a] += distance(xi, row);
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..c.k)
                .filter(|&j| j != own && sizes[j] > 0)
                .map(|j| sums[j] / sizes[j] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect())
}

/// The elbow-method value for one clustering: its total WSS.
pub fn wss_curve_point(c: &Clustering) -> f64 {
    c.wss_total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub gap: f64,
    /// `sd(log W*) * sqrt(1 + 1/B)`.
    pub se: f64,
    pub b_used: usize,
    /// Set when `B = 1`, where the standard error is 0 by convention.
    pub se_degenerate: bool,
}

/// Gap statistic at `k` with `b` uniform reference datasets drawn from the
/// per-feature bounding box of `d`. Every clustering uses `cfg` with its
/// `k` replaced.
pub fn gap_statistic(d: &Dataset, k: usize, b: usize, cfg: &KMeansConfig) -> Result<GapResult> {
    let cfg = cfg.with_k(k);
    let observed = best_of_restarts(d, &cfg)?;
    gap_from_observed(d, &observed, b, &cfg)
}

/// As [`gap_statistic`], reusing an already computed clustering of `d`
/// with `cfg.k` clusters.
pub fn gap_from_observed(
    d: &Dataset,
    observed: &Clustering,
    b: usize,
    cfg: &KMeansConfig,
) -> Result<GapResult> {
    if b == 0 {
        return Err(Error::InvalidConfig("gap statistic needs B >= 1".into()));
    }
    cfg.validate(d.n_rows())?;
    let k = cfg.k;
    if !(observed.wss_total > 0.0) {
        return Err(Error::DegenerateGap { k });
    }
    let bounds = d.bounds();
    let log_ref: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|i| {
            let (k64, i64) = (k as u64, i as u64);
            let reference = uniform_reference(d, &bounds, derive_seed(cfg.seed, &[k64, i64, 0]))?;
            let ref_cfg = cfg.clone().with_seed(derive_seed(cfg.seed, &[k64, i64, 1]));
            let w = best_of_restarts(&reference, &ref_cfg)?.wss_total;
            if w > 0.0 {
                Ok(w.ln())
            } else {
                Err(Error::DegenerateGap { k })
            }
        })
        .collect::<Result<_>>()?;
    let bf = b as f64;
    let mean = log_ref.iter().sum::<f64>() / bf;
    let sd = (log_ref.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / bf).sqrt();
    Ok(GapResult {
        gap: mean - observed.wss_total.ln(),
        se: sd * (1.0 + 1.0 / bf).sqrt(),
        b_used: b,
        se_degenerate: b == 1,
    })
}

fn uniform_reference(d: &Dataset, bounds: &[(f64, f64)], seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..d.n_rows())
        .flat_map(|_| bounds.iter())
        .map(|&(lo, hi)| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        })
        .collect();
    Dataset::new(
        values,
        d.n_cols(),
        d.feature_names().to_vec(),
        "gap reference",
    )
}

/// Arg-max of the gap values (first on ties).
pub fn gap_argmax(ks: &[usize], gaps: &[GapResult]) -> Option<usize> {
    ks.iter()
        .zip(gaps)
        .fold(None, |best: Option<(usize, f64)>, (&k, g)| match best {
            Some((_, v)) if v >= g.gap => best,
            _ => Some((k, g.gap)),
        })
        .map(|(k, _)| k)
}

/// Smallest `k` with `gap(k) >= gap(k+1) - se(k+1)`, over consecutive ks.
pub fn gap_one_se(ks: &[usize], gaps: &[GapResult]) -> Option<usize> {
    ks.windows(2)
        .zip(gaps.windows(2))
        .find(|(kw, g)| kw[1] == kw[0] + 1 && g[0].gap >= g[1].gap - g[1].se)
        .map(|(kw, _)| kw[0])
}

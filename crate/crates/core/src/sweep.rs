//! The K sweep and the rules that turn a mean-density curve into an
//! estimate of the number of clusters.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, gap_from_observed, silhouette_mean, GapResult};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::ClusterGeometry;
use crate::kmeans::{best_of_restarts, KMeansConfig};

pub const DEFAULT_TAU: f64 = 0.02;

/// Which optional metrics a sweep computes. Mean density and WSS are
/// always computed; they are cheap by-products of every clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSet {
    pub density: bool,
    pub silhouette: bool,
    pub wss: bool,
    pub gap: bool,
}

impl MetricSet {
    pub fn all() -> Self {
        Self {
            density: true,
            silhouette: true,
            wss: true,
            gap: true,
        }
    }

    pub fn density_only() -> Self {
        Self {
            density: true,
            silhouette: false,
            wss: false,
            gap: false,
        }
    }

    pub fn with_silhouette(mut self) -> Self {
        self.silhouette = true;
        self
    }
}

impl Default for MetricSet {
    fn default() -> Self {
        Self::all()
    }
}

impl FromStr for MetricSet {
    type Err = Error;

    /// Parses a comma-separated subset of `density,silhouette,wss,gap`.
    fn from_str(s: &str) -> Result<Self> {
        let mut set = Self {
            density: false,
            silhouette: false,
            wss: false,
            gap: false,
        };
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name {
                "density" => set.density = true,
                "silhouette" => set.silhouette = true,
                "wss" => set.wss = true,
                "gap" => set.gap = true,
                "all" => set = Self::all(),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown metric {other:?} (expected density, silhouette, wss or gap)"
                    )))
                }
            }
        }
        if set
            == (Self {
                density: false,
                silhouette: false,
                wss: false,
                gap: false,
            })
        {
            return Err(Error::InvalidConfig("metric list is empty".into()));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Template for every clustering; its `k` is replaced per row.
    pub kmeans: KMeansConfig,
    pub metrics: MetricSet,
    /// Number of gap reference datasets.
    pub gap_b: usize,
}

impl SweepConfig {
    pub fn new(k_min: usize, k_max: usize) -> Self {
        Self {
            k_min,
            k_max,
            kmeans: KMeansConfig::new(k_min.max(1)),
            metrics: MetricSet::all(),
            gap_b: 10,
        }
    }

    pub fn with_kmeans(mut self, kmeans: KMeansConfig) -> Self {
        self.kmeans = kmeans;
        self
    }

    pub fn with_metrics(mut self, metrics: MetricSet) -> Self {
        self.metrics = metrics;
        self
    }

    pub fn with_gap_b(mut self, gap_b: usize) -> Self {
        self.gap_b = gap_b;
        self
    }
}

/// Upper end of the default sweep: `min(25, m / 2)`, at least 1.
pub fn default_k_max(m: usize) -> usize {
    (m / 2).clamp(1, 25)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub k: usize,
    pub mean_density: f64,
    /// A cluster density overflowed or underflowed `f64`.
    pub density_out_of_range: bool,
    /// Undefined at `k = 1` or when not requested.
    pub silhouette: Option<f64>,
    pub wss: f64,
    pub gap: Option<f64>,
    pub gap_se: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<MetricsRow>,
    pub config: SweepConfig,
    pub dataset_fingerprint: String,
}

impl SweepResult {
    pub fn density_curve(&self) -> Vec<(usize, f64)> {
        self.rows.iter().map(|r| (r.k, r.mean_density)).collect()
    }

    pub fn row(&self, k: usize) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    /// `k` with the largest mean silhouette (smallest on ties).
    pub fn silhouette_argmax(&self) -> Option<usize> {
        argmax_by(
            self.rows
                .iter()
                .filter_map(|r| r.silhouette.map(|s| (r.k, s))),
        )
    }

    fn gap_results(&self) -> (Vec<usize>, Vec<GapResult>) {
        self.rows
            .iter()
            .filter_map(|r| {
                Some((
                    r.k,
                    GapResult {
                        gap: r.gap?,
                        se: r.gap_se?,
                        b_used: self.config.gap_b,
                        se_degenerate: self.config.gap_b == 1,
                    },
                ))
            })
            .unzip()
    }

    pub fn gap_argmax(&self) -> Option<usize> {
        let (ks, gaps) = self.gap_results();
        baselines::gap_argmax(&ks, &gaps)
    }

    /// Gap selection by the one-standard-error rule.
    pub fn gap_one_se(&self) -> Option<usize> {
        let (ks, gaps) = self.gap_results();
        baselines::gap_one_se(&ks, &gaps)
    }
}

fn argmax_by(values: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    values
        .fold(None, |best: Option<(usize, f64)>, (k, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k)
}

/// Clusters `d` for every `k` in `[k_min, k_max]` and records the metrics
/// of each winning clustering. Rows are computed in parallel and always
/// returned in `k` order.
pub fn sweep(d: &Dataset, cfg: &SweepConfig) -> Result<SweepResult> {
    let m = d.n_rows();
    if cfg.k_min == 0 || cfg.k_min > cfg.k_max {
        return Err(Error::InvalidConfig(format!(
            "invalid k range [{}, {}]",
            cfg.k_min, cfg.k_max
        )));
    }
    if cfg.k_max > m {
        return Err(Error::TooManyClusters { k: cfg.k_max, m });
    }
    if cfg.metrics.gap && cfg.gap_b == 0 {
        return Err(Error::InvalidConfig("gap statistic needs B >= 1".into()));
    }
    cfg.kmeans.with_k(cfg.k_min).validate(m)?;

    let rows = (cfg.k_min..=cfg.k_max)
        .into_par_iter()
        .map(|k| sweep_row(d, cfg, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        rows,
        config: cfg.clone(),
        dataset_fingerprint: d.fingerprint(),
    })
}

fn sweep_row(d: &Dataset, cfg: &SweepConfig, k: usize) -> Result<MetricsRow> {
    let kcfg = cfg.kmeans.with_k(k);
    let clustering = best_of_restarts(d, &kcfg)?;
    let geometry = ClusterGeometry::compute(d, &clustering)?;
    let silhouette = if cfg.metrics.silhouette && k >= 2 {
        Some(silhouette_mean(d, &clustering)?)
    } else {
        None
    };
    let gap = if cfg.metrics.gap {
        match gap_from_observed(d, &clustering, cfg.gap_b, &kcfg) {
            Ok(g) => Some(g),
            Err(Error::DegenerateGap { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(MetricsRow {
        k,
        mean_density: geometry.mean_density,
        density_out_of_range: geometry.out_of_range,
        silhouette,
        wss: clustering.wss_total,
        gap: gap.as_ref().map(|g| g.gap),
        gap_se: gap.as_ref().map(|g| g.se),
        iterations: clustering.iterations,
        converged: clustering.converged,
    })
}

fn check_curve(curve: &[(usize, f64)]) -> Result<(f64, f64)> {
    if curve.len() < 3 {
        return Err(Error::CurveTooShort(curve.len()));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidConfig(
            "curve ks must be strictly increasing".into(),
        ));
    }
    if let Some(&(k, _)) = curve.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteDensity(k));
    }
    let lo = curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(Error::ConstantCurve);
    }
    Ok((lo, hi))
}

/// The `k` farthest from the chord joining the first and last curve points,
/// with both axes scaled to `[0, 1]`. Ties go to the smallest `k`.
pub fn knee_point(curve: &[(usize, f64)]) -> Result<usize> {
    let (lo, hi) = check_curve(curve)?;
    let k0 = curve[0].0 as f64;
    let k_span = curve[curve.len() - 1].0 as f64 - k0;
    let scaled: Vec<(f64, f64)> = curve
        .iter()
        .map(|&(k, v)| ((k as f64 - k0) / k_span, (v - lo) / (hi - lo)))
        .collect();
    let (x0, y0) = scaled[0];
    let (x1, y1) = scaled[scaled.len() - 1];
    let norm = (x1 - x0).hypot(y1 - y0);
    let mut best = (curve[0].0, f64::NEG_INFINITY);
    for (&(k, _), &(x, y)) in curve.iter().zip(&scaled) {
        let dist = ((y1 - y0) * x - (x1 - x0) * y + x1 * y0 - y1 * x0).abs() / norm;
        if dist > best.1 {
            best = (k, dist);
        }
    }
    Ok(best.0)
}

/// The elbow region `[knee, k_hi]`, where `k_hi` is the first `k` at or
/// after the knee from which the average remaining drop per step, as a
/// fraction of the curve's range, is below `tau`.
pub fn elbow_region(curve: &[(usize, f64)], tau: f64) -> Result<(usize, usize)> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "tau must lie in (0, 1), got {tau}"
        )));
    }
    let knee = knee_point(curve)?;
    let (lo, hi) = check_curve(curve)?;
    let range = hi - lo;
    let last = curve.len() - 1;
    let start = curve
        .iter()
        .position(|p| p.0 == knee)
        .expect("knee is a curve point");
    let k_hi = (start..=last)
        .find(|&i| {
            let steps = last - i;
            steps == 0 || (curve[i].1 - curve[last].1) / (range * steps as f64) < tau
        })
        .map(|i| curve[i].0)
        .expect("the last point always qualifies");
    Ok((knee.min(k_hi), knee.max(k_hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    GlobalMinimum,
    KneePoint,
    SilhouetteTiebreak,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GlobalMinimum => "global_minimum",
            Self::KneePoint => "knee_point",
            Self::SilhouetteTiebreak => "silhouette_tiebreak",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub k_star: usize,
    /// Inclusive `[k_lo, k_hi]`.
    pub elbow_region: (usize, usize),
    pub rule_applied: Rule,
    pub rationale: String,
}

/// Picks `K` from a sweep's mean-density curve.
///
/// Rules, in order:
/// 1. `global_minimum`: the curve bottoms out before `k_max` and rises
///    right after. When silhouettes are available the minimum must also
///    score at least as well as the knee, which filters out the shallow
///    minima noisy tails produce. The region is widened to reach it.
/// 2. `knee_point`: the elbow region spans at most two consecutive ks.
/// 3. `silhouette_tiebreak`: the best mean silhouette inside the region.
pub fn estimate_k(sr: &SweepResult, tau: f64) -> Result<Estimate> {
    let curve = sr.density_curve();
    let knee = knee_point(&curve)?;
    let (k_lo, k_hi) = elbow_region(&curve, tau)?;
    let silhouette = |k: usize| sr.row(k).and_then(|r| r.silhouette);
    let have_silhouette = sr.config.metrics.silhouette;

    let (argmin, &(k_min_density, v_min)) = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
        .expect("curve is nonempty");
    if argmin + 1 < curve.len() && curve[argmin + 1].1 > v_min {
        let supported = match (have_silhouette, silhouette(k_min_density), silhouette(knee)) {
            (false, _, _) => Some("no silhouette to cross-check".to_string()),
            (true, Some(at_min), Some(at_knee)) if at_min >= at_knee => Some(format!(
                "silhouette {at_min:.4} at the minimum vs {at_knee:.4} at the knee"
            )),
            (true, Some(at_min), None) => Some(format!("silhouette {at_min:.4} at the minimum")),
            _ => None,
        };
        if let Some(check) = supported {
            return Ok(Estimate {
                k_star: k_min_density,
                elbow_region: (k_lo.min(k_min_density), k_hi.max(k_min_density)),
                rule_applied: Rule::GlobalMinimum,
                rationale: format!(
                    "mean density reaches its minimum {v_min:.6e} at k={k_min_density} and rises at k={} ({check})",
                    curve[argmin + 1].0
                ),
            });
        }
    }

    if k_hi - k_lo <= 1 {
        return Ok(Estimate {
            k_star: knee,
            elbow_region: (k_lo, k_hi),
            rule_applied: Rule::KneePoint,
            rationale: format!(
                "elbow region [{k_lo}, {k_hi}] is narrow; knee of the density curve at k={knee}"
            ),
        });
    }

    if !have_silhouette {
        return Err(Error::MissingMetric("silhouette"));
    }
    let best = argmax_by((k_lo..=k_hi).filter_map(|k| silhouette(k).map(|s| (k, s))))
        .ok_or(Error::MissingMetric("silhouette"))?;
    Ok(Estimate {
        k_star: best,
        elbow_region: (k_lo, k_hi),
        rule_applied: Rule::SilhouetteTiebreak,
        rationale: format!(
            "elbow region [{k_lo}, {k_hi}] is wide; best mean silhouette {:.4} at k={best}",
            silhouette(best).unwrap_or(f64::NAN)
        ),
    })
}

//! Seedable Lloyd's K-Means with restarts.
//!
//! Every run is a pure function of `(dataset, config, seed)`. Restarts run in
//! parallel, each with a seed derived from `(seed, k, restart)`, and the
//! winner is chosen by `(wss_total, restart index)`, so thread scheduling
//! never changes the result.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{squared_distance, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// `k` distinct rows sampled without replacement.
    #[default]
    RandomSample,
    /// k-means++ seeding.
    KMeansPlusPlus,
}

impl FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "random_sample" => Ok(Self::RandomSample),
            "kmeanspp" | "kmeans++" => Ok(Self::KMeansPlusPlus),
            other => Err(Error::InvalidConfig(format!(
                "unknown init {other:?} (expected random or kmeanspp)"
            ))),
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RandomSample => "random",
            Self::KMeansPlusPlus => "kmeanspp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once the relative WSS decrease of an iteration is at most this.
    pub tol: f64,
    pub init: InitStrategy,
    pub restarts: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iters: 300,
            tol: 1e-6,
            init: InitStrategy::RandomSample,
            restarts: 10,
            seed: 42,
        }
    }

    pub fn with_k(&self, k: usize) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_init(mut self, init: InitStrategy) -> Self {
        self.init = init;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    /// Checks the configuration against a dataset of `m` points.
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.k > m {
            return Err(Error::TooManyClusters { k: self.k, m });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tol must be >= 0, got {}",
                self.tol
            )));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// A finished partition of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub k: usize,
    pub n_cols: usize,
    /// Cluster id of every point, in `[0, k)`.
    pub assignments: Vec<usize>,
    /// Row-major `k x n` centroid matrix.
    pub centroids: Vec<f64>,
    pub wss_per_cluster: Vec<f64>,
    pub wss_total: f64,
    pub iterations: usize,
    pub converged: bool,
    /// WSS after each assign/update pair.
    pub wss_history: Vec<f64>,
}

impl Clustering {
    /// Builds a clustering from assignments, with centroids set to member
    /// means. Fails if an id is out of range or a cluster is empty.
    pub fn from_assignments(d: &Dataset, k: usize, assignments: Vec<usize>) -> Result<Self> {
        if assignments.len() != d.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: d.n_rows(),
                found: assignments.len(),
            });
        }
        if let Some(&id) = assignments.iter().find(|&&a| a >= k) {
            return Err(Error::InvalidClusterId { id, k });
        }
        let centroids = centroid_means(d, k, &assignments);
        let sizes = cluster_sizes(k, &assignments);
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidConfig(format!(
                "cluster {empty} has no members"
            )));
        }
        let wss_per_cluster = per_cluster_wss(d, &centroids, &assignments, k);
        let wss_total = wss_per_cluster.iter().sum();
        Ok(Self {
            k,
            n_cols: d.n_cols(),
            assignments,
            centroids,
            wss_per_cluster,
            wss_total,
            iterations: 0,
            converged: true,
            wss_history: vec![wss_total],
        })
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.n_cols..(j + 1) * self.n_cols]
    }

    pub fn sizes(&self) -> Vec<usize> {
        cluster_sizes(self.k, &self.assignments)
    }
}

/// Stateless 64-bit mixer (SplitMix64 finalizer).
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a tuple of keys:
/// `h = mix64(seed)`, then `h = mix64(h ^ (key + golden))` for each key.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    keys.iter()
        .fold(mix64(seed.wrapping_add(GOLDEN)), |h, &key| {
            mix64(h ^ key.wrapping_add(GOLDEN))
        })
}

/// Seed used for restart `r` at cluster count `k`.
pub fn restart_seed(seed: u64, k: usize, restart: usize) -> u64 {
    derive_seed(seed, &[k as u64, restart as u64])
}

/// Picks `k` initial centroids (row-major `k x n`) from data rows.
pub fn init_centroids<R: Rng + ?Sized>(
    d: &Dataset,
    k: usize,
    strategy: InitStrategy,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let indices = init_indices(d, k, strategy, rng)?;
    Ok(indices
        .iter()
        .flat_map(|&i| d.row(i).iter().copied())
        .collect())
}

/// Row indices chosen by [`init_centroids`]; always `k` distinct indices.
pub fn init_indices<R: Rng + ?Sized>(
    d: &Dataset,
    k: usize,
    strategy: InitStrategy,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let m = d.n_rows();
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if k > m {
        return Err(Error::TooManyClusters { k, m });
    }
    match strategy {
        InitStrategy::RandomSample => Ok(index::sample(rng, m, k).into_vec()),
        InitStrategy::KMeansPlusPlus => Ok(kmeanspp_indices(d, k, rng)),
    }
}

fn kmeanspp_indices<R: Rng + ?Sized>(d: &Dataset, k: usize, rng: &mut R) -> Vec<usize> {
    let m = d.n_rows();
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; m];
    let first = rng.random_range(0..m);
    chosen.push(first);
    taken[first] = true;
    let mut nearest: Vec<f64> = d
        .rows()
        .map(|r| squared_distance(r, d.row(first)))
        .collect();

    while chosen.len() < k {
        let total: f64 = nearest
            .iter()
            .zip(&taken)
            .filter(|(_, &t)| !t)
            .map(|(w, _)| w)
            .sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, (&w, &t)) in nearest.iter().zip(&taken).enumerate() {
                if t || w <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
            pick.expect("positive total weight has a positive entry")
        } else {
            // every remaining point duplicates a chosen one
            let free: Vec<usize> = (0..m).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        taken[next] = true;
        let c = d.row(next);
        for (w, row) in nearest.iter_mut().zip(d.rows()) {
            *w = w.min(squared_distance(row, c));
        }
    }
    chosen
}

/// Maps each point to its nearest centroid (ties to the lowest id) and
/// returns the assignments with per-cluster squared distances.
pub fn assign(d: &Dataset, centroids: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = d.n_cols();
    if centroids.is_empty() || !centroids.len().is_multiple_of(n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: centroids.len(),
        });
    }
    let k = centroids.len() / n;
    let mut assignments = Vec::with_capacity(d.n_rows());
    let mut wss = vec![0.0; k];
    for row in d.rows() {
        let (best, dist) = nearest_centroid(row, centroids, n);
        assignments.push(best);
        wss[best] += dist;
    }
    Ok((assignments, wss))
}

#[inline]
fn nearest_centroid(row: &[f64], centroids: &[f64], n: usize) -> (usize, f64) {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (j, c) in centroids.chunks_exact(n).enumerate() {
        let dist = squared_distance(row, c);
        if dist < best_dist {
            best = j;
            best_dist = dist;
        }
    }
    (best, best_dist)
}

fn cluster_sizes(k: usize, assignments: &[usize]) -> Vec<usize> {
    let mut sizes = vec![0; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    sizes
}

fn centroid_means(d: &Dataset, k: usize, assignments: &[usize]) -> Vec<f64> {
    let n = d.n_cols();
    let mut sums = vec![0.0; k * n];
    let mut counts = vec![0usize; k];
    for (row, &a) in d.rows().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a * n..(a + 1) * n].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (chunk, &c) in sums.chunks_exact_mut(n).zip(&counts) {
        if c > 0 {
            chunk.iter_mut().for_each(|s| *s /= c as f64);
        }
    }
    sums
}

fn per_cluster_wss(d: &Dataset, centroids: &[f64], assignments: &[usize], k: usize) -> Vec<f64> {
    let n = d.n_cols();
    let mut wss = vec![0.0; k];
    for (row, &a) in d.rows().zip(assignments) {
        wss[a] += squared_distance(row, &centroids[a * n..(a + 1) * n]);
    }
    wss
}

/// Gives every empty cluster one point: the member farthest from its
/// centroid in the cluster (of size >= 2) with the largest WSS.
fn repair_empty(
    d: &Dataset,
    centroids: &[f64],
    assignments: &mut [usize],
    wss: &mut [f64],
    k: usize,
) {
    let n = d.n_cols();
    let mut sizes = cluster_sizes(k, assignments);
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let donor = (0..k)
            .filter(|&j| sizes[j] >= 2)
            .max_by(|&a, &b| wss[a].total_cmp(&wss[b]).then(b.cmp(&a)))
            .expect("k <= m guarantees a cluster with two members");
        let centroid = &centroids[donor * n..(donor + 1) * n];
        let (victim, dist) = assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == donor)
            .map(|(i, _)| (i, squared_distance(d.row(i), centroid)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("donor is nonempty");
        assignments[victim] = empty;
        sizes[donor] -= 1;
        sizes[empty] = 1;
        wss[donor] -= dist;
        wss[empty] = 0.0;
    }
}

/// One Lloyd run from the initialization drawn from `rng`.
pub fn lloyd<R: Rng + ?Sized>(d: &Dataset, cfg: &KMeansConfig, rng: &mut R) -> Result<Clustering> {
    cfg.validate(d.n_rows())?;
    let k = cfg.k;
    let mut centroids = init_centroids(d, k, cfg.init, rng)?;
    let mut history = Vec::new();
    let mut converged = false;
    let mut assignments = Vec::new();
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let (mut assigned, mut wss) = assign(d, &centroids)?;
        repair_empty(d, &centroids, &mut assigned, &mut wss, k);
        centroids = centroid_means(d, k, &assigned);
        assignments = assigned;
        let total: f64 = per_cluster_wss(d, &centroids, &assignments, k).iter().sum();
        let previous = history.last().copied();
        history.push(total);
        if let Some(prev) = previous {
            if prev - total <= cfg.tol * prev {
                converged = true;
                break;
            }
        }
    }

    let wss_per_cluster = per_cluster_wss(d, &centroids, &assignments, k);
    let wss_total = wss_per_cluster.iter().sum();
    Ok(Clustering {
        k,
        n_cols: d.n_cols(),
        assignments,
        centroids,
        wss_per_cluster,
        wss_total,
        iterations,
        converged,
        wss_history: history,
    })
}

/// Runs `cfg.restarts` independent Lloyd runs and keeps the lowest WSS
/// (ties go to the lowest restart index).
pub fn best_of_restarts(d: &Dataset, cfg: &KMeansConfig) -> Result<Clustering> {
    cfg.validate(d.n_rows())?;
    let runs: Vec<Clustering> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(cfg.seed, cfg.k, r));
            lloyd(d, cfg, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.wss_total.total_cmp(&b.1.wss_total).then(a.0.cmp(&b.0)))
        .map(|(_, c)| c)
        .expect("restarts >= 1"))
}

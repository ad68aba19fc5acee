//! Cluster hypersphere geometry.
//!
//! Each cluster is treated as an `n`-ball centered at its centroid whose
//! radius reaches the farthest member. Its "density" is the ball's volume
//! divided by the member count:
//!
//! ```text
//! volume  = pi^(n/2) / Gamma(n/2 + 1) * R^n
//! density = volume / |cluster|
//! ```
//!
//! This is volume per point, the reciprocal of the usual notion of density;
//! it is kept as defined because the model-selection rules depend on its
//! decreasing shape. Volumes are carried in log space and exponentiated
//! only when forming the density.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::{distance, Dataset};
use crate::error::{Error, Result};
use crate::kmeans::Clustering;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7, 9 terms).
///
/// Arguments below 0.5 are shifted up with `ln G(x) = ln G(x + 1) - ln x`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::LogGammaDomain(x));
    }
    if x < 0.5 {
        return Ok(lanczos_ln_gamma(x + 1.0) - x.ln());
    }
    Ok(lanczos_ln_gamma(x))
}

fn lanczos_ln_gamma(x: f64) -> f64 {
    let z = x - 1.0;
    let series = LANCZOS_COEFFS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEFFS[0], |acc, (i, &c)| {
            acc + c / (z + i as f64 + 1.0)
        });
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (z + 0.5) * t.ln() - t + series.ln()
}

/// `ln` of the volume of an n-ball; `-inf` for a zero radius.
pub fn hypersphere_log_volume(dims: usize, radius: f64) -> Result<f64> {
    if dims == 0 {
        return Err(Error::InvalidConfig("dimension must be at least 1".into()));
    }
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "radius must be >= 0, got {radius}"
        )));
    }
    if radius == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let n = dims as f64;
    Ok(0.5 * n * PI.ln() - log_gamma(0.5 * n + 1.0)? + n * radius.ln())
}

/// Distance from centroid `j` to its farthest member.
pub fn cluster_radius(d: &Dataset, c: &Clustering, j: usize) -> Result<f64> {
    check_cluster(d, c, j)?;
    let centroid = c.centroid(j);
    Ok(d.rows()
        .zip(&c.assignments)
        .filter(|(_, &a)| a == j)
        .map(|(row, _)| distance(row, centroid))
        .fold(0.0, f64::max))
}

/// Hypersphere volume of cluster `j` divided by its member count.
pub fn cluster_density(d: &Dataset, c: &Clustering, j: usize) -> Result<f64> {
    let radius = cluster_radius(d, c, j)?;
    let count = c.assignments.iter().filter(|&&a| a == j).count();
    Ok(density_from_parts(d.n_cols(), radius, count)?.0)
}

/// Arithmetic mean of the per-cluster densities.
pub fn mean_density(d: &Dataset, c: &Clustering) -> Result<f64> {
    Ok(ClusterGeometry::compute(d, c)?.mean_density)
}

fn check_cluster(d: &Dataset, c: &Clustering, j: usize) -> Result<()> {
    if c.n_cols != d.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: d.n_cols(),
            found: c.n_cols,
        });
    }
    if c.assignments.len() != d.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: d.n_rows(),
            found: c.assignments.len(),
        });
    }
    if j >= c.k {
        return Err(Error::InvalidClusterId { id: j, k: c.k });
    }
    Ok(())
}

/// Returns `(density, out_of_range)`. The flag is set when a nonzero volume
/// overflowed to infinity or underflowed to zero.
fn density_from_parts(dims: usize, radius: f64, count: usize) -> Result<(f64, bool)> {
    let log_volume = hypersphere_log_volume(dims, radius)?;
    if log_volume == f64::NEG_INFINITY {
        return Ok((0.0, false));
    }
    let density = (log_volume - (count as f64).ln()).exp();
    Ok((density, density == 0.0 || density.is_infinite()))
}

/// Per-cluster radius, log-volume and density of a clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGeometry {
    pub radius: Vec<f64>,
    pub log_volume: Vec<f64>,
    pub density: Vec<f64>,
    pub mean_density: f64,
    /// Some density left the representable `f64` range.
    pub out_of_range: bool,
}

impl ClusterGeometry {
    pub fn compute(d: &Dataset, c: &Clustering) -> Result<Self> {
        check_cluster(d, c, 0)?;
        let n = d.n_cols();
        let mut radius = vec![0.0f64; c.k];
        let mut counts = vec![0usize; c.k];
        for (row, &a) in d.rows().zip(&c.assignments) {
            radius[a] = radius[a].max(distance(row, c.centroid(a)));
            counts[a] += 1;
        }
        let mut log_volume = Vec::with_capacity(c.k);
        let mut density = Vec::with_capacity(c.k);
        let mut out_of_range = false;
        for (&r, &count) in radius.iter().zip(&counts) {
            log_volume.push(hypersphere_log_volume(n, r)?);
            let (dens, flagged) = density_from_parts(n, r, count.max(1))?;
            density.push(dens);
            out_of_range |= flagged;
        }
        let mean_density = density.iter().sum::<f64>() / c.k as f64;
        Ok(Self {
            radius,
            log_volume,
            density,
            mean_density,
            out_of_range,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn log_gamma_examples() {
        assert!(rel(log_gamma(5.0).unwrap(), 24f64.ln()) < 1e-14);
        assert!(rel(log_gamma(0.5).unwrap(), 0.572_364_942_924_700_1) < 1e-14);
        assert!(rel(log_gamma(2.5).unwrap(), (0.75 * PI.sqrt()).ln()) < 1e-13);
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn log_gamma_domain() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
        // small arguments go through the recurrence: G(0.1) = 9.513507698668732
        assert!(rel(log_gamma(0.1).unwrap(), 9.513_507_698_668_732f64.ln()) < 1e-13);
    }

    #[test]
    fn ball_volumes() {
        assert!(rel(hypersphere_log_volume(2, 1.0).unwrap(), PI.ln()) < 1e-14);
        assert!(
            rel(
                hypersphere_log_volume(3, 1.0).unwrap(),
                (4.0 * PI / 3.0).ln()
            ) < 1e-14
        );
        assert!(rel(hypersphere_log_volume(1, 2.0).unwrap(), 4f64.ln()) < 1e-14);
        assert_eq!(hypersphere_log_volume(4, 0.0).unwrap(), f64::NEG_INFINITY);
        assert!(hypersphere_log_volume(0, 1.0).is_err());
        assert!(hypersphere_log_volume(2, -1.0).is_err());
    }

    fn clustering(rows: &[Vec<f64>], assignments: Vec<usize>, k: usize) -> (Dataset, Clustering) {
        let d = Dataset::from_rows(rows).unwrap();
        let c = Clustering::from_assignments(&d, k, assignments).unwrap();
        (d, c)
    }

    #[test]
    fn radius_examples() {
        let (d, c) = clustering(
            &[vec![0.0, 0.0], vec![4.0, 0.0], vec![9.0, 9.0]],
            vec![0, 0, 1],
            2,
        );
        assert_eq!(cluster_radius(&d, &c, 0).unwrap(), 2.0);
        assert_eq!(cluster_radius(&d, &c, 1).unwrap(), 0.0);
        assert!(matches!(
            cluster_radius(&d, &c, 2),
            Err(Error::InvalidClusterId { id: 2, k: 2 })
        ));

        let (d, c) = clustering(
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![0.0, 0.0]],
            vec![0, 0, 0],
            1,
        );
        // farthest of the three members is (0, 2)
        let expected = ((1.0f64 / 3.0).powi(2) + (4.0f64 / 3.0).powi(2)).sqrt();
        assert!((cluster_radius(&d, &c, 0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 1.374_368_541_872_553_7).abs() < 1e-12);
    }

    #[test]
    fn density_examples() {
        let (d, c) = clustering(
            &[vec![0.0, 0.0], vec![4.0, 0.0], vec![9.0, 9.0]],
            vec![0, 0, 1],
            2,
        );
        let two_pi = 2.0 * PI;
        assert!(rel(cluster_density(&d, &c, 0).unwrap(), two_pi) < 1e-14);
        assert_eq!(cluster_density(&d, &c, 1).unwrap(), 0.0);
        assert!(rel(mean_density(&d, &c).unwrap(), PI) < 1e-14);

        let (d, c) = clustering(&[vec![3.0, 1.0], vec![3.0, 1.0]], vec![0, 0], 1);
        assert_eq!(cluster_density(&d, &c, 0).unwrap(), 0.0);
    }

    #[test]
    fn all_singletons_have_zero_mean_density() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let (d, c) = clustering(&rows, (0..5).collect(), 5);
        assert_eq!(mean_density(&d, &c).unwrap(), 0.0);
    }

    #[test]
    fn overflow_is_flagged() {
        // a 400-d ball of radius 1e3 has ln-volume far above f64 range
        let rows = vec![vec![0.0; 400], vec![2e3; 400]];
        let (d, c) = clustering(&rows, vec![0, 0], 1);
        let g = ClusterGeometry::compute(&d, &c).unwrap();
        assert!(g.out_of_range);
        assert!(g.density[0].is_infinite());
        assert!(g.log_volume[0].is_finite());
    }
}

//! Numeric datasets: CSV loading, normalization, synthetic blobs and the
//! Euclidean distance used everywhere else in the crate.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// An `m x n` matrix of finite reals stored row-major, plus feature names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    feature_names: Vec<String>,
    source: String,
}

impl Dataset {
    /// Builds a dataset from row-major values, checking shape and finiteness.
    pub fn new(
        values: Vec<f64>,
        n_cols: usize,
        feature_names: Vec<String>,
        source: impl Into<String>,
    ) -> Result<Self> {
        if n_cols == 0 {
            return Err(Error::InvalidDataset(
                "dataset needs at least one feature".into(),
            ));
        }
        if values.is_empty() {
            return Err(Error::InvalidDataset(
                "dataset needs at least one point".into(),
            ));
        }
        if !values.len().is_multiple_of(n_cols) {
            return Err(Error::InvalidDataset(format!(
                "{} values cannot be split into rows of {n_cols}",
                values.len()
            )));
        }
        if feature_names.len() != n_cols {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {n_cols} features",
                feature_names.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / n_cols,
                pos % n_cols
            )));
        }
        Ok(Self {
            n_rows: values.len() / n_cols,
            values,
            n_cols,
            feature_names,
            source: source.into(),
        })
    }

    /// Builds a dataset from rows with generated names `f0..f{n-1}`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: n_cols,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(values, n_cols, generated_names(n_cols), "memory")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Per-feature `(min, max)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); self.n_cols];
        for row in self.rows() {
            for (b, &v) in bounds.iter_mut().zip(row) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        bounds
    }

    /// Returns a copy with the same names and source but every value mapped.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i % self.n_cols, v))
            .collect();
        Self::new(
            values,
            self.n_cols,
            self.feature_names.clone(),
            self.source.clone(),
        )
    }

    /// Hex SHA-256 over the shape and the little-endian bits of every value.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n_rows as u64).to_le_bytes());
        hasher.update((self.n_cols as u64).to_le_bytes());
        for v in &self.values {
            hasher.update(v.to_bits().to_le_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn generated_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeaderMode {
    /// Treat the first row as a header if any of its cells is not numeric.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub header: HeaderMode,
    /// Header name of a column (usually a class label) to skip.
    pub drop_column: Option<String>,
}

/// Loads a comma-separated numeric file.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let header = if has_header {
        HeaderMode::Present
    } else {
        HeaderMode::Absent
    };
    load_csv_with(
        path,
        &CsvOptions {
            header,
            drop_column: None,
        },
    )
}

pub fn load_csv_with(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_csv(&text, opts, &path.display().to_string()).map_err(|e| match e {
        Error::EmptyFile { .. } => Error::EmptyFile {
            path: path.to_path_buf(),
        },
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Parses CSV text. Row numbers in errors are 1-based record numbers
/// (header included, blank lines skipped); columns are 0-based.
pub fn parse_csv(text: &str, opts: &CsvOptions, source: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Csv {
            path: source.into(),
            source: e,
        })?;
        // skip blank lines
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        records.push(rec);
    }
    let Some(first) = records.first() else {
        return Err(Error::EmptyFile {
            path: source.into(),
        });
    };

    let has_header = match opts.header {
        HeaderMode::Present => true,
        HeaderMode::Absent => false,
        HeaderMode::Auto => first.iter().any(|cell| parse_cell(cell).is_none()),
    };
    let width = first.len();

    let drop_idx = match &opts.drop_column {
        None => None,
        Some(name) => {
            if !has_header {
                return Err(Error::UnknownColumn(name.clone()));
            }
            Some(
                first
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::UnknownColumn(name.clone()))?,
            )
        }
    };

    let names: Vec<String> = if has_header {
        first
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != drop_idx)
            .map(|(_, h)| h.to_string())
            .collect()
    } else {
        generated_names(width)
    };

    let data_start = usize::from(has_header);
    if records.len() <= data_start {
        return Err(Error::EmptyFile {
            path: source.into(),
        });
    }

    let mut values = Vec::with_capacity((records.len() - data_start) * names.len());
    for (line, rec) in records.iter().enumerate().skip(data_start) {
        if rec.len() != width {
            return Err(Error::RaggedRow {
                row: line + 1,
                expected: width,
                found: rec.len(),
            });
        }
        for (col, cell) in rec.iter().enumerate() {
            if Some(col) == drop_idx {
                continue;
            }
            let v = parse_cell(cell).ok_or_else(|| Error::BadCell {
                row: line + 1,
                column: col,
                value: cell.to_string(),
            })?;
            values.push(v);
        }
    }
    let n_cols = names.len();
    Dataset::new(values, n_cols, names, source)
}

fn parse_cell(cell: &str) -> Option<f64> {
    f64::from_str(cell).ok().filter(|v| v.is_finite())
}

/// Writes a dataset with its feature names as header. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv(d: &Dataset, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", d.feature_names().join(","))?;
    for row in d.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeScheme {
    #[default]
    MinMax,
    ZScore,
    None,
}

impl FromStr for NormalizeScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(Self::MinMax),
            "zscore" => Ok(Self::ZScore),
            "none" => Ok(Self::None),
            other => Err(Error::InvalidConfig(format!(
                "unknown normalization {other:?} (expected minmax, zscore or none)"
            ))),
        }
    }
}

impl fmt::Display for NormalizeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MinMax => "minmax",
            Self::ZScore => "zscore",
            Self::None => "none",
        })
    }
}

/// Rescales every feature independently. Constant features map to 0 under
/// both `MinMax` and `ZScore`.
pub fn normalize(d: &Dataset, scheme: NormalizeScheme) -> Dataset {
    let m = d.n_rows() as f64;
    let (offset, scale): (Vec<f64>, Vec<f64>) = match scheme {
        NormalizeScheme::None => return d.clone(),
        NormalizeScheme::MinMax => d.bounds().into_iter().map(|(lo, hi)| (lo, hi - lo)).unzip(),
        NormalizeScheme::ZScore => {
            let mut mean = vec![0.0; d.n_cols()];
            for row in d.rows() {
                for (acc, v) in mean.iter_mut().zip(row) {
                    *acc += v;
                }
            }
            mean.iter_mut().for_each(|v| *v /= m);
            let mut var = vec![0.0; d.n_cols()];
            for row in d.rows() {
                for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
                    *acc += (v - mu) * (v - mu);
                }
            }
            let sd = var.into_iter().map(|v| (v / m).sqrt()).collect();
            (mean, sd)
        }
    };
    d.map_values(|j, v| {
        if scale[j] > 0.0 {
            (v - offset[j]) / scale[j]
        } else {
            0.0
        }
    })
    .expect("normalized values of a finite dataset are finite")
}

/// Parameters for isotropic Gaussian blobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_points: usize,
    pub dims: usize,
    pub n_centers: usize,
    /// Standard deviation of the per-feature noise.
    pub spread: f64,
    /// Interval each center coordinate is drawn from.
    pub center_box: (f64, f64),
    pub seed: u64,
}

impl BlobSpec {
    pub fn new(n_points: usize, dims: usize, n_centers: usize, seed: u64) -> Self {
        Self {
            n_points,
            dims,
            n_centers,
            spread: 0.5,
            center_box: (0.0, 10.0),
            seed,
        }
    }

    pub fn with_spread(mut self, spread: f64) -> Self {
        self.spread = spread;
        self
    }

    pub fn with_box(mut self, lo: f64, hi: f64) -> Self {
        self.center_box = (lo, hi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 || self.dims == 0 || self.n_centers == 0 {
            return Err(Error::InvalidConfig(
                "points, dims and centers must be positive".into(),
            ));
        }
        if self.n_points < self.n_centers {
            return Err(Error::InvalidConfig(format!(
                "{} points cannot cover {} centers",
                self.n_points, self.n_centers
            )));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "spread must be positive, got {}",
                self.spread
            )));
        }
        let (lo, hi) = self.center_box;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidConfig(format!(
                "invalid center box [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// Output of [`make_blobs`]: the dataset plus the generating structure.
#[derive(Debug, Clone)]
pub struct Blobs {
    pub dataset: Dataset,
    pub centers: Vec<Vec<f64>>,
    /// Index of the generating center for every point.
    pub labels: Vec<usize>,
}

impl Blobs {
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.centers.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Generates points in contiguous per-center blocks; the first
/// `n_points % n_centers` centers receive one extra point.
pub fn make_blobs(spec: &BlobSpec) -> Result<Blobs> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.center_box;
    let centers: Vec<Vec<f64>> = (0..spec.n_centers)
        .map(|_| {
            (0..spec.dims)
                .map(|_| {
                    if hi > lo {
                        rng.random_range(lo..hi)
                    } else {
                        lo
                    }
                })
                .collect()
        })
        .collect();
    let noise = Normal::new(0.0, spec.spread)
        .map_err(|e| Error::InvalidConfig(format!("bad spread: {e}")))?;

    let base = spec.n_points / spec.n_centers;
    let extra = spec.n_points % spec.n_centers;
    let mut values = Vec::with_capacity(spec.n_points * spec.dims);
    let mut labels = Vec::with_capacity(spec.n_points);
    for (c, center) in centers.iter().enumerate() {
        let count = base + usize::from(c < extra);
        for _ in 0..count {
            values.extend(center.iter().map(|&x| x + noise.sample(&mut rng)));
            labels.push(c);
        }
    }
    let dataset = Dataset::new(
        values,
        spec.dims,
        generated_names(spec.dims),
        format!(
            "blobs(points={}, dims={}, centers={}, spread={}, seed={})",
            spec.n_points, spec.dims, spec.n_centers, spec.spread, spec.seed
        ),
    )?;
    Ok(Blobs {
        dataset,
        centers,
        labels,
    })
}

/// Euclidean distance, checking that the vectors have equal length.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(squared_distance(a, b).sqrt())
}

/// Squared Euclidean distance. Callers guarantee equal lengths.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

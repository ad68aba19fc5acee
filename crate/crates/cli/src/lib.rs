//! The `hyperk` command-line tool: `gen`, `sweep` and `estimate`.

pub mod args;
pub mod output;
pub mod plot;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use hyperk::sweep::default_k_max;
use hyperk::{
    estimate_k, knee_point, load_csv_with, make_blobs, normalize, sweep, write_csv, BlobSpec,
    CsvOptions, Estimate, KMeansConfig, SweepConfig, SweepResult,
};
use serde_json::{json, Value};
use thiserror::Error;

pub use args::{Cli, Command, GenArgs, SweepArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hyperk::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("cannot serialize summary: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no estimate: {0}")]
    Estimate(hyperk::Error),
}

/// Runs a parsed command. `argv` is recorded verbatim in the JSON summary.
pub fn run(cli: Cli, argv: &[String], stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a, stdout),
        Command::Sweep(a) => cmd_sweep(&a, argv, stdout, false),
        Command::Estimate(a) => cmd_sweep(&a, argv, stdout, true),
    }
}

fn cmd_gen(a: &GenArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = BlobSpec::new(a.points, a.dims, a.centers, a.seed)
        .with_spread(a.spread)
        .with_box(a.box_lo, a.box_hi);
    let blobs = make_blobs(&spec)?;
    let mut buf = Vec::new();
    write_csv(&blobs.dataset, &mut buf).expect("writing to memory");
    write_file(&a.out, &buf)?;
    let report = (|| {
        writeln!(stdout, "centers={}", blobs.centers.len())?;
        for (j, n) in blobs.counts().iter().enumerate() {
            writeln!(stdout, "center {j}: {n} points")?;
        }
        Ok(())
    })();
    report.map_err(|source| CliError::Write {
        path: "<stdout>".into(),
        source,
    })
}

/// Everything a sweep writes, rendered before any file is touched.
struct Rendered {
    tsv: String,
    json: String,
    svg: Option<String>,
}

fn cmd_sweep(
    a: &SweepArgs,
    argv: &[String],
    stdout: &mut dyn Write,
    require_estimate: bool,
) -> Result<(), CliError> {
    let raw = load_csv_with(
        &a.input,
        &CsvOptions {
            header: a.header,
            drop_column: a.drop_label_column.clone(),
        },
    )?;
    let data = normalize(&raw, a.normalize);
    let k_max = a.k_max.unwrap_or_else(|| default_k_max(data.n_rows()));
    let kmeans = KMeansConfig::new(a.k_min.max(1))
        .with_seed(a.seed)
        .with_restarts(a.restarts)
        .with_max_iters(a.max_iters)
        .with_tol(a.tol)
        .with_init(a.init);
    let cfg = SweepConfig::new(a.k_min, k_max)
        .with_kmeans(kmeans)
        .with_metrics(a.metrics)
        .with_gap_b(a.gap_b);
    let sr = sweep(&data, &cfg)?;
    let estimate = estimate_k(&sr, a.tau);

    let out = Rendered {
        tsv: output::render_tsv(&sr),
        json: output::to_json_string(&summary(a, argv, &raw, &sr, &estimate))?,
        svg: a.plot.then(|| {
            let curve = sr.density_curve();
            let marks = plot::PlotMarks {
                knee: knee_point(&curve).ok(),
                k_star: estimate.as_ref().ok().map(|e| e.k_star),
                region: estimate.as_ref().ok().map(|e| e.elbow_region),
            };
            plot::render_svg(
                &format!("Mean density vs k: {}", raw.source()),
                &curve,
                &marks,
            )
        }),
    };
    write_file(&with_ext(&a.out, "tsv"), out.tsv.as_bytes())?;
    write_file(&with_ext(&a.out, "json"), out.json.as_bytes())?;
    if let Some(svg) = &out.svg {
        write_file(&with_ext(&a.out, "svg"), svg.as_bytes())?;
    }

    let line = match &estimate {
        Ok(e) => format!(
            "k_star={} rule={} region=[{},{}]",
            e.k_star, e.rule_applied, e.elbow_region.0, e.elbow_region.1
        ),
        Err(e) => format!("k_star=NA ({e})"),
    };
    writeln!(stdout, "{line}").map_err(|source| CliError::Write {
        path: "<stdout>".into(),
        source,
    })?;
    match estimate {
        Err(e) if require_estimate => Err(CliError::Estimate(e)),
        _ => Ok(()),
    }
}

fn summary(
    a: &SweepArgs,
    argv: &[String],
    raw: &hyperk::Dataset,
    sr: &SweepResult,
    estimate: &hyperk::Result<Estimate>,
) -> Value {
    let ks_where = |pred: &dyn Fn(&hyperk::MetricsRow) -> bool| -> Vec<usize> {
        sr.rows.iter().filter(|r| pred(r)).map(|r| r.k).collect()
    };
    let (estimate_value, estimate_error) = match estimate {
        Ok(e) => (json!(e), Value::Null),
        Err(e) => (Value::Null, json!(e.to_string())),
    };
    json!({
        "manifest": {
            "command_line": argv,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "dataset_fingerprint": raw.fingerprint(),
            "seed": a.seed,
            "timestamp": Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        },
        "dataset": {
            "source": raw.source(),
            "rows": raw.n_rows(),
            "cols": raw.n_cols(),
            "feature_names": raw.feature_names(),
            "normalization": a.normalize.to_string(),
            "normalized_fingerprint": sr.dataset_fingerprint,
        },
        "config": {
            "k_min": sr.config.k_min,
            "k_max": sr.config.k_max,
            "kmeans": sr.config.kmeans,
            "metrics": sr.config.metrics,
            "gap_b": sr.config.gap_b,
            "tau": a.tau,
        },
        "rows": sr.rows,
        "estimate": estimate_value,
        "estimate_error": estimate_error,
        "silhouette_argmax_k": sr.silhouette_argmax(),
        "gap_argmax_k": sr.gap_argmax(),
        "gap_one_se_k": sr.gap_one_se(),
        "flags": {
            "density_out_of_range_ks": ks_where(&|r| r.density_out_of_range),
            "not_converged_ks": ks_where(&|r| !r.converged),
            "gap_se_degenerate": sr.config.metrics.gap && sr.config.gap_b == 1,
        },
    })
}

/// `prefix` with `.ext` appended, keeping any dots already in the prefix.
pub fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

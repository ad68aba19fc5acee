//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its own PASS/FAIL line; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use hyperk::dataset::squared_distance;
use hyperk::kmeans::derive_seed;
use hyperk::*;

type Outcome = std::result::Result<String, String>;

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn load(name: &str, label: &str) -> Dataset {
    let opts = CsvOptions {
        header: HeaderMode::Auto,
        drop_column: Some(label.into()),
    };
    load_csv_with(data(name), &opts).expect("bundled dataset loads")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn real_sweep(d: &Dataset, k_max: usize) -> (SweepResult, Result<Estimate>, Duration) {
    let start = Instant::now();
    let nd = normalize(d, NormalizeScheme::MinMax);
    let sr = sweep(&nd, &SweepConfig::new(1, k_max)).expect("sweep runs");
    let est = estimate_k(&sr, DEFAULT_TAU);
    (sr, est, start.elapsed())
}

fn iris_end_to_end(sr: &SweepResult, est: &Result<Estimate>, took: Duration) -> Outcome {
    let e = est.as_ref().map_err(|e| format!("no estimate: {e}"))?;
    let (lo, hi) = e.elbow_region;
    check(
        e.k_star == 3 && lo >= 3 && hi <= 5 && took < Duration::from_secs(5),
        format!(
            "k_star={} rule={} region=[{lo},{hi}] rows={} in {:.2}s",
            e.k_star,
            e.rule_applied,
            sr.rows.len(),
            secs(took)
        ),
    )
}

fn iris_silhouette(sr: &SweepResult) -> Outcome {
    let best = sr.silhouette_argmax();
    check(best == Some(2), format!("silhouette argmax k={best:?}"))
}

fn wdbc_end_to_end() -> Outcome {
    let d = load("wdbc.csv", "diagnosis");
    let (sr, est, took) = real_sweep(&d, 10);
    let e = est.map_err(|e| format!("no estimate: {e}"))?;
    let ratio = sr.row(2).unwrap().mean_density / sr.row(1).unwrap().mean_density;
    check(
        e.k_star == 2 && ratio < 0.1 && took < Duration::from_secs(15),
        format!(
            "k_star={} rule={} density(2)/density(1)={ratio:.3e} in {:.2}s",
            e.k_star,
            e.rule_applied,
            secs(took)
        ),
    )
}

fn synthetic_sweep(spec: BlobSpec, k_max: usize) -> (Result<Estimate>, Duration) {
    let start = Instant::now();
    let blobs = make_blobs(&spec).expect("fixture generates");
    let kmeans = KMeansConfig::new(1).with_init(InitStrategy::KMeansPlusPlus);
    let metrics = MetricSet::density_only().with_silhouette();
    let cfg = SweepConfig::new(1, k_max)
        .with_kmeans(kmeans)
        .with_metrics(metrics);
    let sr = sweep(&blobs.dataset, &cfg).expect("sweep runs");
    (estimate_k(&sr, DEFAULT_TAU), start.elapsed())
}

fn synthetic_twenty_blobs() -> Outcome {
    let spec = BlobSpec::new(3000, 2, 20, 7).with_spread(0.05);
    let (est, took) = synthetic_sweep(spec, 25);
    let e = est.map_err(|e| format!("no estimate: {e}"))?;
    check(
        e.k_star == 20 && e.rule_applied == Rule::GlobalMinimum,
        format!(
            "k_star={} rule={} in {:.2}s",
            e.k_star,
            e.rule_applied,
            secs(took)
        ),
    )
}

fn synthetic_six_dims() -> Outcome {
    let spec = BlobSpec::new(5000, 6, 10, 7);
    let (est, took) = synthetic_sweep(spec, 20);
    let e = est.map_err(|e| format!("no estimate: {e}"))?;
    check(
        e.k_star == 10,
        format!(
            "k_star={} rule={} in {:.2}s",
            e.k_star,
            e.rule_applied,
            secs(took)
        ),
    )
}

/// Deterministic pseudo-random integers for building fixtures.
struct Draw(u64, u64);

impl Draw {
    fn next(&mut self, below: u64) -> u64 {
        self.1 += 1;
        derive_seed(self.0, &[self.1]) % below
    }

    fn unit(&mut self) -> f64 {
        self.1 += 1;
        (derive_seed(self.0, &[self.1]) >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn uniform_box(m: usize, n: usize, seed: u64) -> Dataset {
    let mut draw = Draw(seed, 0);
    let values = (0..m * n).map(|_| 10.0 * draw.unit()).collect();
    Dataset::new(
        values,
        n,
        (0..n).map(|j| format!("u{j}")).collect(),
        "uniform box",
    )
    .unwrap()
}

fn random_fixture(draw: &mut Draw, max_rows: u64) -> Dataset {
    let m = 10 + draw.next(max_rows - 9) as usize;
    let n = 1 + draw.next(6) as usize;
    if draw.next(3) == 0 {
        return uniform_box(m, n, draw.next(u64::MAX));
    }
    let centers = 1 + draw.next(6.min(m as u64)) as usize;
    let spec =
        BlobSpec::new(m, n, centers, draw.next(u64::MAX)).with_spread(0.2 + 2.8 * draw.unit());
    make_blobs(&spec).unwrap().dataset
}

fn lloyd_monotonicity() -> Outcome {
    let mut draw = Draw(6, 0);
    let mut violations = 0;
    let mut steps = 0;
    for t in 0..200 {
        let d = random_fixture(&mut draw, 200);
        let k = 1 + draw.next(10.min(d.n_rows() as u64)) as usize;
        let init = if t % 2 == 0 {
            InitStrategy::RandomSample
        } else {
            InitStrategy::KMeansPlusPlus
        };
        let cfg = KMeansConfig::new(k)
            .with_seed(draw.next(u64::MAX))
            .with_restarts(1)
            .with_init(init);
        let c = best_of_restarts(&d, &cfg).unwrap();
        steps += c.wss_history.len();
        violations += c
            .wss_history
            .windows(2)
            .filter(|w| w[1] > w[0] + 1e-9)
            .count();
    }
    check(
        violations == 0,
        format!("200 runs, {steps} iterations, {violations} increases"),
    )
}

fn brute_silhouette(d: &Dataset, labels: &[usize], k: usize) -> f64 {
    let m = d.n_rows();
    let mut total = 0.0;
    for i in 0..m {
        let (mut a_sum, mut a_n) = (0.0, 0usize);
        let mut b = f64::INFINITY;
        for c in 0..k {
            let (mut sum, mut count) = (0.0, 0usize);
            for j in 0..m {
                if labels[j] == c && j != i {
                    sum += squared_distance(d.row(i), d.row(j)).sqrt();
                    count += 1;
                }
            }
            if c == labels[i] {
                (a_sum, a_n) = (sum, count);
            } else if count > 0 {
                b = b.min(sum / count as f64);
            }
        }
        if a_n == 0 {
            continue;
        }
        let a = a_sum / a_n as f64;
        if a.max(b) > 0.0 {
            total += (b - a) / a.max(b);
        }
    }
    total / m as f64
}

fn silhouette_oracle() -> Outcome {
    let mut draw = Draw(7, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = random_fixture(&mut draw, 200);
        let k = 2 + draw.next(7.min(d.n_rows() as u64 - 1)) as usize;
        let c = best_of_restarts(
            &d,
            &KMeansConfig::new(k)
                .with_seed(draw.next(u64::MAX))
                .with_restarts(2),
        )
        .unwrap();
        let fast = silhouette_mean(&d, &c).unwrap();
        worst = worst.max((fast - brute_silhouette(&d, &c.assignments, k)).abs());
    }
    check(
        worst <= 1e-9,
        format!("50 fixtures, max |diff| = {worst:.2e}"),
    )
}

fn geometry_identities() -> Outcome {
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let mut worst_volume = 0.0f64;
    for r in [0.1, 0.5, 1.0, 2.5, 7.0, 100.0] {
        let exact = [2.0 * r, PI * r * r, 4.0 * PI * r.powi(3) / 3.0];
        for (n, v) in exact.iter().enumerate() {
            worst_volume =
                worst_volume.max(rel(hypersphere_log_volume(n + 1, r).unwrap().exp(), *v));
        }
    }
    let mut worst_gamma = 0.0f64;
    let mut factorial = 1.0;
    for k in 1..=20u32 {
        if k > 1 {
            factorial *= (k - 1) as f64;
        }
        worst_gamma = worst_gamma.max(rel(log_gamma(k as f64).unwrap().exp(), factorial));
    }
    let d = load("iris.csv", "species");
    let c = best_of_restarts(&d, &KMeansConfig::new(3)).unwrap();
    let base = ClusterGeometry::compute(&d, &c).unwrap();
    let mut worst_scale = 0.0f64;
    for lambda in [0.25, 3.0, 10.0] {
        let scaled = d.map_values(|_, v| v * lambda).unwrap();
        let sc = Clustering::from_assignments(&scaled, 3, c.assignments.clone()).unwrap();
        let g = ClusterGeometry::compute(&scaled, &sc).unwrap();
        let factor = lambda.powi(d.n_cols() as i32);
        for (a, b) in base.density.iter().zip(&g.density) {
            worst_scale = worst_scale.max(rel(*b, a * factor));
        }
    }
    check(
        worst_volume <= 1e-12 && worst_gamma <= 1e-10 && worst_scale <= 1e-9,
        format!("volume {worst_volume:.1e}, gamma {worst_gamma:.1e}, scaling {worst_scale:.1e}"),
    )
}

fn gap_sanity() -> Outcome {
    let cfg = SweepConfig::new(1, 8).with_metrics(MetricSet {
        density: true,
        silhouette: false,
        wss: true,
        gap: true,
    });
    let blobs = make_blobs(&BlobSpec::new(300, 2, 3, 1)).unwrap();
    let sr = sweep(&blobs.dataset, &cfg).unwrap();
    let best = sr.gap_argmax();

    let sr_u = sweep(&uniform_box(500, 2, 9), &cfg).unwrap();
    let g1 = sr_u.rows[0].gap.unwrap();
    let spurious: Vec<usize> = sr_u
        .rows
        .iter()
        .filter(|r| g1 < r.gap.unwrap() - 3.0 * r.gap_se.unwrap())
        .map(|r| r.k)
        .collect();
    check(
        best == Some(3) && spurious.is_empty(),
        format!("3-blob gap argmax k={best:?}; uniform box ks beyond gap(1)+3se: {spurious:?}"),
    )
}

fn determinism_and_golden() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let prefix = dir.path().join("iris").display().to_string();
    let iris = data("iris.csv");
    let args = [
        "sweep",
        "--input",
        &iris,
        "--drop-label-column",
        "species",
        "--k-max",
        "10",
        "--out",
        &prefix,
    ];
    let run = || -> std::result::Result<(Vec<u8>, String), String> {
        let out = Command::new(env!("CARGO_BIN_EXE_hyperk"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        let tsv = fs::read(format!("{prefix}.tsv")).map_err(|e| e.to_string())?;
        let json = fs::read_to_string(format!("{prefix}.json")).map_err(|e| e.to_string())?;
        let json = json
            .lines()
            .filter(|l| !l.contains("\"timestamp\""))
            .collect();
        Ok((tsv, json))
    };
    let first = run()?;
    let second = run()?;
    let header = String::from_utf8_lossy(&first.0)
        .lines()
        .next()
        .unwrap_or("")
        .to_string();
    let golden = "k\tmean_density\tsilhouette\twss\tgap\tgap_se\titerations\tconverged";
    check(
        first == second && header == golden && Path::new(&format!("{prefix}.json")).exists(),
        format!(
            "tsv identical: {}, json identical: {}, header golden: {}",
            first.0 == second.0,
            first.1 == second.1,
            header == golden
        ),
    )
}

fn main() -> ExitCode {
    let suite = Instant::now();
    let iris = load("iris.csv", "species");
    let (iris_sr, iris_est, iris_time) = real_sweep(&iris, 10);

    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        (
            "iris end-to-end",
            Box::new(|| iris_end_to_end(&iris_sr, &iris_est, iris_time)),
        ),
        (
            "iris silhouette contrast",
            Box::new(|| iris_silhouette(&iris_sr)),
        ),
        ("wdbc end-to-end", Box::new(wdbc_end_to_end)),
        (
            "synthetic 20 blobs in 2-d",
            Box::new(synthetic_twenty_blobs),
        ),
        ("synthetic 10 blobs in 6-d", Box::new(synthetic_six_dims)),
        ("lloyd monotonicity", Box::new(lloyd_monotonicity)),
        ("silhouette oracle", Box::new(silhouette_oracle)),
        ("geometry identities", Box::new(geometry_identities)),
        ("gap sanity", Box::new(gap_sanity)),
        (
            "determinism and golden tsv",
            Box::new(determinism_and_golden),
        ),
    ];
    let total = criteria.len();
    let mut passed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        match run() {
            Ok(detail) => {
                passed += 1;
                println!("PASS {:>2} {name}: {detail}", i + 1);
            }
            Err(detail) => println!("FAIL {:>2} {name}: {detail}", i + 1),
        }
    }
    let elapsed = suite.elapsed();
    println!(
        "acceptance: {passed}/{total} passed in {:.1}s",
        secs(elapsed)
    );
    if passed == total && elapsed < Duration::from_secs(180) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Test-only oracles and fixtures shared by the integration suites.
#![allow(dead_code)]

use idcurve::neighbors::euclidean;
use idcurve::{orthogonal_map, ManifoldKind, ManifoldSpec, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// O(N^2 log N) k-NN: every pairwise distance, fully sorted by (distance, index).
pub fn brute_knn(cloud: &PointCloud, k: usize) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let mut dist = Vec::new();
    let mut idx = Vec::new();
    for i in 0..cloud.n_points() {
        let mut all: Vec<(f64, usize)> = (0..cloud.n_points())
            .filter(|&j| j != i)
            .map(|j| (euclidean(cloud.row(i), cloud.row(j)), j))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        dist.push(all.iter().map(|p| p.0).collect());
        idx.push(all.iter().map(|p| p.1).collect());
    }
    (dist, idx)
}

/// Straight-line TwoNN from the brute-force neighbor lists. Assumes distinct rows.
pub fn reference_twonn(cloud: &PointCloud, discard_fraction: f64) -> f64 {
    let (dist, _) = brute_knn(cloud, 2);
    let mut mu: Vec<f64> = dist.iter().map(|r| r[1] / r[0]).collect();
    mu.sort_by(f64::total_cmp);
    let n = mu.len();
    let keep = (n as f64 * (1.0 - discard_fraction)).floor() as usize;
    let keep = keep.min(n - 1);
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, m) in mu.iter().take(keep).enumerate() {
        let f = (i + 1) as f64 / n as f64;
        let x = m.ln();
        let y = -(1.0 - f).ln();
        num += x * y;
        den += x * x;
    }
    num / den
}

/// Levina–Bickel with inverse-mean pooling from brute-force neighbor lists.
pub fn reference_mle(cloud: &PointCloud, k: usize) -> f64 {
    let (dist, _) = brute_knn(cloud, k);
    let total: f64 = dist
        .iter()
        .map(|t| {
            let tk = t[k - 1];
            t[..k - 1].iter().map(|tj| (tk / tj).ln()).sum::<f64>() / (k - 1) as f64
        })
        .sum();
    dist.len() as f64 / total
}

pub fn cloud(kind: ManifoldKind, d: usize, ambient: usize, n: usize, seed: u64) -> PointCloud {
    idcurve::generate(&ManifoldSpec::new(kind, d, ambient, n).with_seed(seed)).unwrap()
}

/// Random orthogonal rotation plus translation of every row.
pub fn rotate_translate(cloud: &PointCloud, seed: u64) -> PointCloud {
    let dim = cloud.dim();
    let q = orthogonal_map(dim, dim, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
    let rows: Vec<Vec<f64>> = cloud
        .rows()
        .map(|r| q.apply(r).iter().zip(&shift).map(|(a, b)| a + b).collect())
        .collect();
    PointCloud::from_rows(&rows).unwrap()
}

pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

pub fn relative_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)
}

pub fn idcurve_bin() -> &'static str {
    env!("CARGO_BIN_EXE_idcurve")
}

/// Runs the binary in `cwd` and returns (exit code, stdout, stderr).
pub fn run_bin(cwd: &std::path::Path, args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(idcurve_bin())
        .current_dir(cwd)
        .args(args)
        .env_remove("IDCURVE_THREADS")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn manifest_json(paradigm: &str, dataset: &str, layers: &[usize], accuracy: f64) -> String {
    let files: Vec<String> = layers.iter().map(|l| format!("\"layer_{l}.idt\"")).collect();
    format!(
        r#"{{"model_name":"tiny","dataset_name":"{dataset}","paradigm":{paradigm},"layer_files":[{}],"accuracy":{accuracy}}}"#,
        files.join(",")
    )
}

/// Drives every subcommand inside `dir` using relative paths only, so two
/// runs in different directories should leave byte-identical files.
/// Returns the names of the subcommands exercised.
pub fn cli_pipeline(dir: &std::path::Path) -> Vec<&'static str> {
    let ok = |args: &[&str]| {
        let (code, _, err) = run_bin(dir, args);
        assert_eq!(code, 0, "idcurve {args:?} failed: {err}");
    };
    for d in 1..=4 {
        let out = format!("layer_{}.idt", d - 1);
        let ds = d.to_string();
        ok(&[
            "synth", "--kind", "hypercube", "--intrinsic-dim", &ds, "--ambient-dim", "12", "--n-points", "400",
            "--noise", "0.01", "--seed", &ds, "-o", &out,
        ]);
    }
    let runs = [
        ("icl0", r#"{"type":"icl","k":0}"#, "x", vec![0, 1, 2], 0.40),
        ("icl5", r#"{"type":"icl","k":5}"#, "x", vec![1, 2, 3], 0.70),
        ("icl10", r#"{"type":"icl","k":10}"#, "x", vec![0, 2, 3], 0.68),
        ("icl0y", r#"{"type":"icl","k":0}"#, "y", vec![3, 2, 1], 0.30),
        ("sft1_train", r#"{"type":"sft","step":100}"#, "x", vec![0, 1, 3], 0.50),
        ("sft1_val", r#"{"type":"sft","step":100}"#, "x", vec![1, 1, 3], 0.55),
        ("sft2_train", r#"{"type":"sft","step":200}"#, "x", vec![0, 0, 3], 0.60),
        ("sft2_val", r#"{"type":"sft","step":200}"#, "x", vec![0, 3, 3], 0.65),
    ];
    for (name, paradigm, dataset, layers, acc) in &runs {
        std::fs::write(dir.join(format!("{name}.json")), manifest_json(paradigm, dataset, layers, *acc)).unwrap();
        ok(&["curve", "-m", &format!("{name}.json"), "-o", &format!("{name}.curve.json")]);
    }
    ok(&["curve", "-m", "icl5.json", "--estimator", "mle", "--mle-k", "20", "-o", "icl5.mle.curve.json"]);
    ok(&["estimate", "-i", "layer_1.idt", "-o", "estimate.json"]);
    ok(&[
        "estimate", "-i", "layer_2.idt", "--estimator", "mle", "--mle-k", "20", "--resamples", "4", "--seed", "3",
        "-o", "estimate_mle.json",
    ]);
    ok(&["auc", "-c", "icl5.curve.json", "-o", "auc.json"]);
    ok(&[
        "sft-trajectory", "--train", "sft1_train.curve.json", "--train", "sft2_train.curve.json", "--val",
        "sft1_val.curve.json", "--val", "sft2_val.curve.json", "-o", "sft.json", "--csv", "sft.csv",
    ]);
    ok(&[
        "shot-sweep", "--curve", "icl0.curve.json", "--curve", "icl5.curve.json", "--curve", "icl10.curve.json",
        "-o", "sweep.json", "--csv", "sweep.csv",
    ]);
    ok(&[
        "compare", "--curve", "icl0.curve.json", "--curve", "icl5.curve.json", "--curve", "icl10.curve.json",
        "--curve", "icl0y.curve.json", "--curve", "sft2_val.curve.json", "-o", "compare.json", "--csv",
        "compare.csv",
    ]);
    vec!["synth", "curve", "estimate", "auc", "sft-trajectory", "shot-sweep", "compare"]
}

/// Every regular file in `dir`, sorted by name, with its contents.
pub fn dir_contents(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

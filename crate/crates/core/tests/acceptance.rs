//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::Instant;

use common::{brute_knn, cli_pipeline, dir_contents, permutation, relative_change, rotate_translate};
use idcurve::analysis::FiveNumber;
use idcurve::tensor_io::Paradigm;
use idcurve::{
    compare_paradigms, generate, knn, mle, normalized_auc, pearson, shot_sweep_values, twonn, with_threads,
    AucSummary, ManifoldKind, ManifoldSpec, PointCloud, RunKey,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn known_id_recovery() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for d in [2usize, 5, 9] {
        let start = Instant::now();
        let spec = ManifoldSpec::new(ManifoldKind::Hypercube, d, 100, 5000).with_seed(d as u64);
        let cloud = generate(&spec).map_err(|e| e.to_string())?;
        let est = twonn(&cloud, 0.1).map_err(|e| e.to_string())?.value;
        let secs = start.elapsed().as_secs_f64();
        let tol = (0.15 * d as f64).max(0.3);
        let pass = (est - d as f64).abs() <= tol && secs <= 60.0;
        ok &= pass;
        notes.push(format!("d={d} twonn={est:.3} (tol {tol:.2}) {secs:.1}s"));
    }
    check(ok, notes.join(", "))
}

fn estimator_cross_validation() -> Outcome {
    let kinds = [ManifoldKind::Hypercube, ManifoldKind::Gaussian, ManifoldKind::Hypersphere];
    let mut tw = Vec::new();
    let mut ml = Vec::new();
    let mut specs = Vec::new();
    for i in 0..24usize {
        let d = 1 + i % 10;
        let noise = if i % 2 == 0 { 0.0 } else { 0.01 };
        let kind = match (i, d) {
            (_, 1) if i % 3 == 0 => ManifoldKind::LineSegment,
            (_, 2) if i % 3 != 0 => ManifoldKind::SwissRoll,
            _ => kinds[i % 3],
        };
        specs.push(ManifoldSpec::new(kind, d, 40, 2000).with_noise(noise).with_seed(100 + i as u64));
    }
    let mut kinds_seen = std::collections::BTreeSet::new();
    for spec in &specs {
        let cloud = generate(spec).map_err(|e| format!("{spec:?}: {e}"))?;
        tw.push(twonn(&cloud, 0.1).map_err(|e| e.to_string())?.value);
        ml.push(mle(&cloud, 50).map_err(|e| e.to_string())?.value);
        kinds_seen.insert(spec.kind.name());
    }
    let r = pearson(&tw, &ml).map_err(|e| e.to_string())?;
    check(
        r >= 0.7,
        format!("{} clouds, kinds {:?}, r={r:.4} (need >= 0.7)", specs.len(), kinds_seen),
    )
}

fn auc_exactness() -> Outcome {
    let constant = normalized_auc(&[10.0; 33]).map_err(|e| e.to_string())?;
    let ramp = normalized_auc(&[1.0, 2.0, 3.0, 4.0]).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let l = rng.random_range(2..64);
        let a: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..50.0)).collect();
        let b: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..50.0)).collect();
        let (s, t) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| s * x + t * y).collect();
        let lhs = normalized_auc(&mix).unwrap();
        let rhs = s * normalized_auc(&a).unwrap() + t * normalized_auc(&b).unwrap();
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    let rounded = (constant * 1e4).round() / 1e4;
    check(
        (constant - 320.0 / 33.0).abs() <= 1e-9 && rounded == 9.6970 && ramp == 1.875 && worst <= 1e-12,
        format!("constant={constant:.10} ramp={ramp} linearity err={worst:.1e}"),
    )
}

fn knn_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut tied = 0;
    for trial in 0..100 {
        let n = rng.random_range(3..=500);
        let d = rng.random_range(1..=12);
        let integer = trial % 3 == 0;
        let data: Vec<f64> = (0..n * d)
            .map(|_| if integer { rng.random_range(0..5) as f64 } else { rng.random_range(-1.0..1.0) })
            .collect();
        let cloud = PointCloud::new(data, n, d).map_err(|e| e.to_string())?;
        let k = rng.random_range(1..n.min(30));
        let table = knn(&cloud, k).map_err(|e| e.to_string())?;
        let (dist, idx) = brute_knn(&cloud, k);
        for i in 0..n {
            let same_d = table.distances(i).iter().zip(&dist[i]).all(|(a, b)| a.to_bits() == b.to_bits());
            if !same_d || table.indices(i) != idx[i].as_slice() {
                return Err(format!("trial {trial} (n={n}, d={d}, k={k}) differs at row {i}"));
            }
            tied += dist[i].windows(2).filter(|w| w[0] == w[1]).count();
        }
    }
    check(tied > 0, format!("100 clouds bitwise equal, {tied} tied neighbor pairs exercised"))
}

fn invariance_suite() -> Outcome {
    let spec = ManifoldSpec::new(ManifoldKind::Hypercube, 4, 20, 2000).with_seed(77);
    let cloud = generate(&spec).map_err(|e| e.to_string())?;
    let est = |c: &PointCloud| -> Result<(f64, f64), String> {
        Ok((
            twonn(c, 0.1).map_err(|e| e.to_string())?.value,
            mle(c, 50).map_err(|e| e.to_string())?.value,
        ))
    };
    let base = est(&cloud)?;
    let mut variants: Vec<(String, PointCloud)> = Vec::new();
    for c in [1e-3, 1.0, 1e3] {
        variants.push((format!("scale {c}"), cloud.map(|v| v * c).map_err(|e| e.to_string())?));
    }
    variants.push(("rotation+translation".into(), rotate_translate(&cloud, 9)));
    variants.push(("permutation".into(), cloud.select(&permutation(2000, 10)).map_err(|e| e.to_string())?));
    let mut worst: f64 = 0.0;
    for (name, v) in &variants {
        let e = est(v)?;
        let change = relative_change(base.0, e.0).max(relative_change(base.1, e.1));
        if change >= 1e-6 {
            return Err(format!("{name}: relative change {change:.2e}"));
        }
        worst = worst.max(change);
    }
    let one = with_threads(1, || est(&cloud))?;
    let four = with_threads(4, || est(&cloud))?;
    let threads_equal = one.0.to_bits() == four.0.to_bits() && one.1.to_bits() == four.1.to_bits();
    check(
        threads_equal && one.0.to_bits() == base.0.to_bits(),
        format!("worst relative change {worst:.1e}, 1 vs 4 threads bitwise equal: {threads_equal}"),
    )
}

fn cli_determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let commands = cli_pipeline(a.path());
    cli_pipeline(b.path());
    let fa = dir_contents(a.path());
    let fb = dir_contents(b.path());
    if fa.len() != fb.len() {
        return Err(format!("{} files vs {}", fa.len(), fb.len()));
    }
    for ((na, ca), (nb, cb)) in fa.iter().zip(&fb) {
        if na != nb || ca != cb {
            return Err(format!("{na} differs between runs"));
        }
    }
    check(true, format!("{} output files identical across {} subcommands", fa.len(), commands.len()))
}

fn comparison_algebra() -> Outcome {
    let paradigms = [
        Paradigm::Icl { k: 0 },
        Paradigm::Icl { k: 1 },
        Paradigm::Icl { k: 5 },
        Paradigm::Icl { k: 10 },
        Paradigm::Sft { step: 500 },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..200 {
        let mut summaries = Vec::new();
        for p in &paradigms {
            for m in 0..3 {
                for d in 0..3 {
                    if rng.random_bool(0.7) {
                        let v = rng.random_range(0.0..40.0);
                        summaries.push(AucSummary {
                            normalized_auc: v,
                            n_layers: 33,
                            max_id: v,
                            run: Some(RunKey::new(format!("m{m}"), format!("d{d}"), *p)),
                            accuracy: None,
                        });
                    }
                }
            }
        }
        if summaries.is_empty() {
            continue;
        }
        let report = compare_paradigms(&summaries).map_err(|e| e.to_string())?;
        let n = report.paradigms.len();
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (report.diff_matrix[i][j], report.diff_matrix[j][i]);
                let anti = match (a, b) {
                    (Some(x), Some(y)) => x == -y,
                    (None, None) => true,
                    _ => false,
                };
                if !anti || (i == j && a != Some(0.0)) {
                    return Err(format!("trial {trial}: M[{i}][{j}]={a:?}, M[{j}][{i}]={b:?}"));
                }
            }
        }
    }

    let transforms: [fn(f64) -> f64; 4] = [|v| 2.0 * v + 3.0, |v| v.powi(3), |v| v.exp(), |v| (v + 1.0).ln()];
    for trial in 0..200 {
        let len = rng.random_range(1..12);
        let ks: Vec<u64> = (0..len as u64).map(|i| i * 2).collect();
        // Draws from a coarse grid so some sweeps have tied maxima.
        let auc: Vec<f64> = (0..len).map(|_| rng.random_range(0..8) as f64 * 1.5).collect();
        let acc: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
        let base = shot_sweep_values(&ks, &auc, &acc, 0.95).map_err(|e| e.to_string())?;
        for f in transforms {
            let moved: Vec<f64> = auc.iter().map(|v| f(*v)).collect();
            let s = shot_sweep_values(&ks, &moved, &acc, 0.95).map_err(|e| e.to_string())?;
            if s.k_peak_auc != base.k_peak_auc {
                return Err(format!("trial {trial}: argmax moved from {} to {}", base.k_peak_auc, s.k_peak_auc));
            }
        }
    }

    let hand: [(&[f64], [f64; 5]); 3] = [
        (&[49.0, 50.0, 58.0, 60.0, 62.0], [49.0, 49.5, 58.0, 61.0, 62.0]),
        (&[4.0, 1.0, 3.0, 2.0], [1.0, 1.5, 2.5, 3.5, 4.0]),
        (&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0], [1.0, 1.5, 3.5, 5.5, 9.0]),
    ];
    for (values, expected) in hand {
        let f = FiveNumber::from_values(values).map_err(|e| e.to_string())?;
        let got = [f.min, f.q1, f.median, f.q3, f.max];
        if got != expected {
            return Err(format!("five-number of {values:?}: {got:?} != {expected:?}"));
        }
    }
    check(true, "antisymmetric over 200 random reports, argmax stable under 4 transforms, 3 hand summaries".into())
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("known-id-recovery", known_id_recovery),
        ("estimator-cross-validation", estimator_cross_validation),
        ("normalized-auc-exactness", auc_exactness),
        ("knn-oracle-equivalence", knn_oracle_equivalence),
        ("invariance-suite", invariance_suite),
        ("cli-determinism", cli_determinism),
        ("comparison-algebra", comparison_algebra),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

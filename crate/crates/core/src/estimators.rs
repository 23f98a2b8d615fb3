//! Global intrinsic-dimension estimators.
//!
//! Both estimators deduplicate the cloud first: a repeated row has a zero
//! nearest-neighbor distance, which makes every distance ratio undefined.
//!
//! * **TwoNN** uses only the ratio `mu = r2 / r1` of each point's second and
//!   first neighbor distances. For locally uniform data `mu` is Pareto
//!   distributed with exponent `d`, so `-ln(1 - F(mu)) = d ln(mu)`; `d` is
//!   the least-squares slope of that line through the origin, fitted on the
//!   empirical CDF `F(mu_(i)) = i / n`.
//! * **MLE** (Levina–Bickel) inverts the mean log-ratio of the k-th
//!   neighbor distance to the closer ones.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::neighbors::{dedup, knn};
use crate::par;

/// Fewest distinct points any estimator accepts.
pub const MIN_ESTIMATOR_POINTS: usize = 10;
pub const DEFAULT_DISCARD_FRACTION: f64 = 0.10;
pub const DEFAULT_MLE_K: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    TwoNn,
    Mle,
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "twonn" => Ok(EstimatorKind::TwoNn),
            "mle" => Ok(EstimatorKind::Mle),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

/// How per-point MLE estimates are pooled into one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MlePooling {
    /// `n / sum(1 / m_i)`: the inverse of the mean inverse estimate.
    #[default]
    InverseMeanInverse,
    /// Plain arithmetic mean of the per-point `m_i`.
    Mean,
}

/// An estimator together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Estimator {
    TwoNn {
        discard_fraction: f64,
    },
    Mle {
        k: usize,
        #[serde(default)]
        pooling: MlePooling,
    },
}

impl Estimator {
    pub fn twonn() -> Self {
        Estimator::TwoNn {
            discard_fraction: DEFAULT_DISCARD_FRACTION,
        }
    }

    pub fn mle(k: usize) -> Self {
        Estimator::Mle {
            k,
            pooling: MlePooling::default(),
        }
    }

    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::TwoNn { .. } => EstimatorKind::TwoNn,
            Estimator::Mle { .. } => EstimatorKind::Mle,
        }
    }

    /// Smallest deduplicated cloud this configuration accepts.
    pub fn min_points(&self) -> usize {
        match *self {
            Estimator::TwoNn { .. } => MIN_ESTIMATOR_POINTS,
            Estimator::Mle { k, .. } => MIN_ESTIMATOR_POINTS.max(k + 1),
        }
    }

    pub fn estimate(&self, cloud: &PointCloud) -> Result<IdEstimate> {
        match *self {
            Estimator::TwoNn { discard_fraction } => twonn(cloud, discard_fraction),
            Estimator::Mle { k, pooling } => mle_with_pooling(cloud, k, pooling),
        }
    }
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::twonn()
    }
}

/// One intrinsic-dimension value with the settings and diagnostics that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdEstimate {
    pub value: f64,
    pub estimator: EstimatorKind,
    pub params: Estimator,
    /// Points that entered the fit, after deduplication.
    pub n_used: usize,
    /// Coefficient of determination of the TwoNN log-log fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_r2: Option<f64>,
    pub removed_duplicates: usize,
}

/// The TwoNN regression data alongside the estimate, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoNnFit {
    pub estimate: IdEstimate,
    /// `ln(mu_(i))` for the retained points, ascending.
    pub log_mu: Vec<f64>,
    /// `-ln(1 - i/n)` for the retained points.
    pub neg_log_survival: Vec<f64>,
}

fn distinct_points(cloud: &PointCloud, needed: usize) -> Result<(PointCloud, usize)> {
    let (unique, removed) = match dedup(cloud) {
        Ok(ok) => ok,
        Err(Error::TooFewPoints { got, .. }) => return Err(Error::TooFewPoints { needed, got }),
        Err(e) => return Err(e),
    };
    if unique.n_points() < needed {
        return Err(Error::TooFewPoints {
            needed,
            got: unique.n_points(),
        });
    }
    Ok((unique, removed))
}

pub fn twonn(cloud: &PointCloud, discard_fraction: f64) -> Result<IdEstimate> {
    twonn_fit(cloud, discard_fraction).map(|fit| fit.estimate)
}

pub fn twonn_fit(cloud: &PointCloud, discard_fraction: f64) -> Result<TwoNnFit> {
    if !(0.0..1.0).contains(&discard_fraction) {
        return Err(Error::InvalidArgument(format!(
            "discard_fraction {discard_fraction} is outside [0, 1)"
        )));
    }
    let (unique, removed) = distinct_points(cloud, MIN_ESTIMATOR_POINTS)?;
    let n = unique.n_points();
    let table = knn(&unique, 2)?;

    let mut mu = Vec::with_capacity(n);
    for i in 0..n {
        let r = table.distances(i);
        let ratio = r[1] / r[0];
        if !ratio.is_finite() {
            return Err(Error::DegenerateGeometry(format!(
                "point {i} has r1 = {}, r2 = {}",
                r[0], r[1]
            )));
        }
        mu.push(ratio);
    }
    mu.sort_by(f64::total_cmp);

    // The largest ratio always goes: there 1 - F = 0.
    let tail = ((discard_fraction * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let kept = n.saturating_sub(tail);
    if kept < 2 {
        return Err(Error::TooFewPoints {
            needed: tail + 2,
            got: n,
        });
    }

    let nf = n as f64;
    let log_mu: Vec<f64> = mu[..kept].iter().map(|m| m.ln()).collect();
    let neg_log_survival: Vec<f64> = (1..=kept)
        .map(|i| -(((n - i) as f64) / nf).ln())
        .collect();

    let sxx: f64 = log_mu.iter().map(|x| x * x).sum();
    let sxy: f64 = log_mu.iter().zip(&neg_log_survival).map(|(x, y)| x * y).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "all retained neighbor ratios equal 1".into(),
        ));
    }
    let slope = sxy / sxx;

    let mean_y = neg_log_survival.iter().sum::<f64>() / kept as f64;
    let ss_tot: f64 = neg_log_survival.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = log_mu
        .iter()
        .zip(&neg_log_survival)
        .map(|(x, y)| (y - slope * x).powi(2))
        .sum();
    let fit_r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        0.0
    };

    Ok(TwoNnFit {
        estimate: IdEstimate {
            value: slope,
            estimator: EstimatorKind::TwoNn,
            params: Estimator::TwoNn { discard_fraction },
            n_used: kept,
            fit_r2: Some(fit_r2),
            removed_duplicates: removed,
        },
        log_mu,
        neg_log_survival,
    })
}

pub fn mle(cloud: &PointCloud, k: usize) -> Result<IdEstimate> {
    mle_with_pooling(cloud, k, MlePooling::default())
}

pub fn mle_with_pooling(cloud: &PointCloud, k: usize, pooling: MlePooling) -> Result<IdEstimate> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("MLE needs k >= 2, got {k}")));
    }
    let params = Estimator::Mle { k, pooling };
    let (unique, removed) = distinct_points(cloud, params.min_points())?;
    let n = unique.n_points();
    let table = knn(&unique, k)?;

    let mut inverse = par::map_indices(n, |i| {
        let t = table.distances(i);
        let tk = t[k - 1];
        if t[0] <= 0.0 {
            return Err(i);
        }
        let sum: f64 = t[..k - 1].iter().map(|tj| (tk / tj).ln()).sum();
        Ok(sum / (k - 1) as f64)
    })
    .into_iter()
    .collect::<std::result::Result<Vec<f64>, usize>>()
    .map_err(|i| Error::DegenerateGeometry(format!("point {i} has a zero neighbor distance")))?;

    // Sorting makes the pooled sum independent of row order.
    inverse.sort_by(f64::total_cmp);
    let value = match pooling {
        MlePooling::InverseMeanInverse => {
            let total: f64 = inverse.iter().sum();
            if total.is_nan() || total <= 0.0 {
                return Err(Error::DegenerateGeometry(
                    "every neighborhood is equidistant".into(),
                ));
            }
            n as f64 / total
        }
        MlePooling::Mean => {
            if inverse[0] <= 0.0 {
                return Err(Error::DegenerateGeometry(
                    "a neighborhood is equidistant; its estimate is unbounded".into(),
                ));
            }
            inverse.iter().rev().map(|v| 1.0 / v).sum::<f64>() / n as f64
        }
    };

    Ok(IdEstimate {
        value,
        estimator: EstimatorKind::Mle,
        params,
        n_used: n,
        fit_r2: None,
        removed_duplicates: removed,
    })
}

/// Spread of an estimator across random subsamples of one cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub estimator: Estimator,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator) over successful resamples.
    pub std: f64,
    /// Resamples that produced an estimate.
    pub n_resamples: usize,
    pub n_failed: usize,
    pub subsample_fraction: f64,
    pub subsample_size: usize,
    pub seed: u64,
    pub values: Vec<f64>,
}

/// Re-runs `estimator` on `n_resamples` subsamples drawn without
/// replacement. Subsample rows keep their original order.
///
/// The generator is ChaCha8 seeded through `seed_from_u64(seed)`.
pub fn stability(
    cloud: &PointCloud,
    estimator: &Estimator,
    n_resamples: usize,
    subsample_fraction: f64,
    seed: u64,
) -> Result<StabilityReport> {
    if n_resamples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 resamples, got {n_resamples}"
        )));
    }
    if !(subsample_fraction > 0.0 && subsample_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subsample_fraction {subsample_fraction} is outside (0, 1]"
        )));
    }
    let n = cloud.n_points();
    let size = ((subsample_fraction * n as f64).round() as usize).min(n);
    if size < estimator.min_points() {
        return Err(Error::TooFewPoints {
            needed: estimator.min_points(),
            got: size,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_resamples);
    let mut failures = Vec::new();
    for _ in 0..n_resamples {
        let mut picked = index::sample(&mut rng, n, size).into_vec();
        picked.sort_unstable();
        match cloud.select(&picked).and_then(|sub| estimator.estimate(&sub)) {
            Ok(est) => values.push(est.value),
            Err(e) => failures.push(e),
        }
    }
    if failures.len() * 2 > n_resamples || values.len() < 2 {
        let failed = failures.len();
        return Err(Error::StabilityFailed {
            failed,
            total: n_resamples,
            first: Box::new(failures.into_iter().next().unwrap_or(Error::EmptyInput)),
        });
    }

    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    Ok(StabilityReport {
        estimator: *estimator,
        mean,
        std: var.sqrt(),
        n_resamples: values.len(),
        n_failed: failures.len(),
        subsample_fraction,
        subsample_size: size,
        seed,
        values,
    })
}

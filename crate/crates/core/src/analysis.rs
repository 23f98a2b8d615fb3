//! Layer-wise ID curves and the statistics built on top of them.
//!
//! A run's curve is summarized by its normalized area:
//!
//! ```text
//! AUC = (1 / L) * sum_{i=1}^{L-1} (ID_i + ID_{i+1}) / 2
//! ```
//!
//! Note the divisor is the layer count `L`, not the trapezoid count, so a
//! constant curve `c` scores `c (L - 1) / L`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Estimator, IdEstimate};
use crate::tensor_io::{read_cloud, Paradigm, RunManifest};

/// Default fraction of the best accuracy that still counts as "near peak".
pub const DEFAULT_NEAR_PEAK: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEstimate {
    pub layer: usize,
    pub estimate: IdEstimate,
}

/// Identity of the run a curve or summary came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunKey {
    pub model_name: String,
    pub dataset_name: String,
    pub paradigm: Paradigm,
}

impl RunKey {
    pub fn new(model: impl Into<String>, dataset: impl Into<String>, paradigm: Paradigm) -> Self {
        Self {
            model_name: model.into(),
            dataset_name: dataset.into(),
            paradigm,
        }
    }

    pub fn of(manifest: &RunManifest) -> Self {
        Self::new(&manifest.model_name, &manifest.dataset_name, manifest.paradigm)
    }

    fn same_task(&self, other: &RunKey) -> bool {
        self.model_name == other.model_name && self.dataset_name == other.dataset_name
    }
}

/// Per-layer estimates for one run, layer 0 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdCurve {
    pub manifest: RunManifest,
    pub layers: Vec<LayerEstimate>,
}

impl IdCurve {
    pub fn new(manifest: RunManifest, layers: Vec<LayerEstimate>) -> Result<Self> {
        let curve = Self { manifest, layers };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 2 {
            return Err(Error::InvalidCurve(format!(
                "a curve needs at least 2 layers, got {}",
                self.layers.len()
            )));
        }
        for (expected, l) in self.layers.iter().enumerate() {
            if l.layer != expected {
                return Err(Error::InvalidCurve(format!(
                    "layer indices must run 0, 1, 2, ...; position {expected} holds layer {}",
                    l.layer
                )));
            }
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.estimate.value).collect()
    }

    pub fn key(&self) -> RunKey {
        RunKey::of(&self.manifest)
    }

    pub fn summary(&self) -> Result<AucSummary> {
        let values = self.values();
        Ok(AucSummary {
            normalized_auc: normalized_auc(&values)?,
            n_layers: values.len(),
            max_id: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            run: Some(self.key()),
            accuracy: self.manifest.accuracy,
        })
    }
}

/// Estimates every layer of a run. Errors carry the failing layer index.
pub fn build_curve(manifest: &RunManifest, estimator: &Estimator) -> Result<IdCurve> {
    let count = manifest.layer_count();
    if count < 2 {
        return Err(Error::InvalidCurve(format!(
            "a curve needs at least 2 layers, manifest lists {count}"
        )));
    }
    let mut layers = Vec::with_capacity(count);
    for layer in 0..count {
        let estimate = read_cloud(manifest.layer_path(layer))
            .and_then(|cloud| estimator.estimate(&cloud))
            .map_err(|e| e.at_layer(layer))?;
        layers.push(LayerEstimate { layer, estimate });
    }
    IdCurve::new(manifest.clone(), layers)
}

/// Normalized trapezoidal area of an ID curve.
pub fn normalized_auc(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InvalidCurve(format!(
            "a curve needs at least 2 layers, got {}",
            values.len()
        )));
    }
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidCurve(format!(
            "ID values must be finite and non-negative, found {bad}"
        )));
    }
    let area: f64 = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    Ok(area / values.len() as f64)
}

/// Normalized AUC of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucSummary {
    pub normalized_auc: f64,
    pub n_layers: usize,
    pub max_id: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

impl AucSummary {
    /// Summary of a bare value series with no run attached.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Ok(Self {
            normalized_auc: normalized_auc(values)?,
            n_layers: values.len(),
            max_id: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            run: None,
            accuracy: None,
        })
    }

    pub fn with_run(mut self, run: RunKey) -> Self {
        self.run = Some(run);
        self
    }

    fn require_run(&self) -> Result<&RunKey> {
        self.run
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("AUC summary has no run identity".into()))
    }
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DegenerateSeries(format!(
            "series lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::DegenerateSeries(format!(
            "need at least 3 pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSeries("series contain non-finite values".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateSeries("a series has zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn decreases(series: &[f64]) -> Vec<usize> {
    series
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0])
        .map(|(i, _)| i + 1)
        .collect()
}

/// One fine-tuning checkpoint: AUC on the training and validation clouds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftCheckpoint {
    pub step: u64,
    pub train: AucSummary,
    pub val: AucSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_accuracy: Option<f64>,
}

impl SftCheckpoint {
    /// Pairs a training and a validation curve of the same checkpoint. The
    /// step comes from the manifests, which must both be `sft` runs.
    pub fn from_curves(train: &IdCurve, val: &IdCurve) -> Result<Self> {
        let step = match (train.manifest.paradigm, val.manifest.paradigm) {
            (Paradigm::Sft { step: a }, Paradigm::Sft { step: b }) if a == b => a,
            (a, b) => {
                return Err(Error::MixedRuns(format!(
                    "train/val curves must be the same sft checkpoint, got {a} and {b}"
                )))
            }
        };
        Ok(Self {
            step,
            train: train.summary()?,
            val: val.summary()?,
            train_accuracy: train.manifest.accuracy,
            val_accuracy: val.manifest.accuracy,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftTrajectory {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_name: Option<String>,
    pub steps: Vec<u64>,
    pub train_auc: Vec<f64>,
    pub val_auc: Vec<f64>,
    /// Correlation of the train and validation AUC series; `None` with fewer
    /// than 3 checkpoints or a flat series.
    pub train_val_correlation: Option<f64>,
    /// Positions `i` where `train_auc[i] < train_auc[i - 1]`.
    pub train_decreases: Vec<usize>,
    pub val_decreases: Vec<usize>,
    pub val_accuracy: Vec<Option<f64>>,
    /// Correlation of validation AUC with validation accuracy, when every
    /// checkpoint has an accuracy.
    pub val_auc_accuracy_correlation: Option<f64>,
}

pub fn sft_trajectory(checkpoints: &[SftCheckpoint]) -> Result<SftTrajectory> {
    if checkpoints.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a trajectory needs at least 2 checkpoints, got {}",
            checkpoints.len()
        )));
    }
    let runs: Vec<&RunKey> = checkpoints
        .iter()
        .flat_map(|c| [c.train.run.as_ref(), c.val.run.as_ref()])
        .flatten()
        .collect();
    if let Some(first) = runs.first() {
        if let Some(other) = runs.iter().find(|r| !r.same_task(first)) {
            return Err(Error::MixedRuns(format!(
                "{}/{} vs {}/{}",
                first.model_name, first.dataset_name, other.model_name, other.dataset_name
            )));
        }
    }
    if checkpoints.windows(2).any(|w| w[1].step <= w[0].step) {
        return Err(Error::InvalidArgument(
            "checkpoints must be ordered by strictly increasing step".into(),
        ));
    }

    let train: Vec<f64> = checkpoints.iter().map(|c| c.train.normalized_auc).collect();
    let val: Vec<f64> = checkpoints.iter().map(|c| c.val.normalized_auc).collect();
    let val_accuracy: Vec<Option<f64>> = checkpoints.iter().map(|c| c.val_accuracy).collect();
    let acc: Option<Vec<f64>> = val_accuracy.iter().copied().collect();

    Ok(SftTrajectory {
        model_name: runs.first().map(|r| r.model_name.clone()),
        dataset_name: runs.first().map(|r| r.dataset_name.clone()),
        steps: checkpoints.iter().map(|c| c.step).collect(),
        train_val_correlation: pearson(&train, &val).ok(),
        train_decreases: decreases(&train),
        val_decreases: decreases(&val),
        val_auc_accuracy_correlation: acc.and_then(|a| pearson(&val, &a).ok()),
        train_auc: train,
        val_auc: val,
        val_accuracy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSweep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_name: Option<String>,
    pub ks: Vec<u64>,
    pub auc: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub k_peak_auc: u64,
    pub k_peak_acc: u64,
    pub near_peak: f64,
    /// Accuracy at the AUC peak is within `near_peak` of the best accuracy.
    pub agreement: bool,
}

/// First index of the maximum, so ties resolve to the earliest entry.
fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Locates the AUC and accuracy peaks over a k-shot sweep.
pub fn shot_sweep_values(ks: &[u64], auc: &[f64], accuracy: &[f64], near_peak: f64) -> Result<ShotSweep> {
    if ks.is_empty() {
        return Err(Error::EmptyInput);
    }
    if auc.len() != ks.len() || accuracy.len() != ks.len() {
        return Err(Error::InvalidArgument(format!(
            "sweep has {} k values, {} AUCs and {} accuracies",
            ks.len(),
            auc.len(),
            accuracy.len()
        )));
    }
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("k values must be strictly increasing".into()));
    }
    if auc.iter().chain(accuracy).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("sweep values must be finite".into()));
    }
    if !(0.0..=1.0).contains(&near_peak) {
        return Err(Error::InvalidArgument(format!(
            "near-peak threshold {near_peak} is outside [0, 1]"
        )));
    }
    let peak_auc = first_argmax(auc);
    let peak_acc = first_argmax(accuracy);
    Ok(ShotSweep {
        model_name: None,
        dataset_name: None,
        ks: ks.to_vec(),
        auc: auc.to_vec(),
        accuracy: accuracy.to_vec(),
        k_peak_auc: ks[peak_auc],
        k_peak_acc: ks[peak_acc],
        near_peak,
        agreement: accuracy[peak_auc] >= near_peak * accuracy[peak_acc],
    })
}

/// Sweep over ICL runs of one model and dataset. Accuracies default to the
/// ones recorded with each summary when `accuracies` is `None`.
pub fn shot_sweep(summaries: &[AucSummary], accuracies: Option<&[f64]>, near_peak: f64) -> Result<ShotSweep> {
    let first = summaries.first().ok_or(Error::EmptyInput)?.require_run()?.clone();
    let mut ks = Vec::with_capacity(summaries.len());
    for s in summaries {
        let run = s.require_run()?;
        if !run.same_task(&first) {
            return Err(Error::MixedRuns(format!(
                "{}/{} vs {}/{}",
                first.model_name, first.dataset_name, run.model_name, run.dataset_name
            )));
        }
        match run.paradigm {
            Paradigm::Icl { k } => ks.push(k),
            other => {
                return Err(Error::MixedRuns(format!("shot sweep over a non-ICL run ({other})")))
            }
        }
    }
    let acc: Vec<f64> = match accuracies {
        Some(a) => a.to_vec(),
        None => summaries
            .iter()
            .map(|s| {
                s.accuracy.ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "run {} has no recorded accuracy",
                        s.run.as_ref().map_or(String::new(), |r| r.paradigm.to_string())
                    ))
                })
            })
            .collect::<Result<_>>()?,
    };
    let auc: Vec<f64> = summaries.iter().map(|s| s.normalized_auc).collect();
    let mut sweep = shot_sweep_values(&ks, &auc, &acc, near_peak)?;
    sweep.model_name = Some(first.model_name);
    sweep.dataset_name = Some(first.dataset_name);
    Ok(sweep)
}

/// Minimum, quartiles, median and maximum. Quartiles are medians of the
/// lower and upper halves, excluding the overall median when `n` is odd.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl FiveNumber {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let (lower, upper) = if n == 1 {
            (&v[..], &v[..])
        } else {
            (&v[..n / 2], &v[n.div_ceil(2)..])
        };
        Ok(Self {
            n,
            min: v[0],
            q1: median_sorted(lower),
            median: median_sorted(&v),
            q3: median_sorted(upper),
            max: v[n - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadigmDistribution {
    pub paradigm: String,
    /// `(model, dataset, auc)` for every cell of this paradigm.
    pub cells: Vec<(String, String, f64)>,
    pub stats: FiveNumber,
}

/// One row of the flat comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub paradigm: String,
    pub model: String,
    pub dataset: String,
    pub normalized_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub paradigms: Vec<String>,
    /// `diff_matrix[a][b]` is the mean of `AUC_a - AUC_b` over every
    /// (model, dataset) pair that has both; `None` when there is no such pair.
    pub diff_matrix: Vec<Vec<Option<f64>>>,
    /// Number of (model, dataset) pairs behind each `diff_matrix` entry.
    pub pair_counts: Vec<Vec<usize>>,
    pub distributions: Vec<ParadigmDistribution>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)
                .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn entry(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.paradigms.iter().position(|p| p == a)?;
        let j = self.paradigms.iter().position(|p| p == b)?;
        self.diff_matrix[i][j]
    }
}

fn paradigm_order(p: &Paradigm) -> (u8, u64) {
    match *p {
        Paradigm::Icl { k } => (0, k),
        Paradigm::Sft { .. } => (1, 0),
    }
}

/// Mean pairwise AUC differences between paradigms plus per-paradigm
/// distributions. Paradigms are ordered ICL by k, then SFT.
pub fn compare_paradigms(summaries: &[AucSummary]) -> Result<ComparisonReport> {
    if summaries.is_empty() {
        return Err(Error::EmptyInput);
    }
    // paradigm label -> (model, dataset) -> auc
    let mut order: BTreeMap<(u8, u64), String> = BTreeMap::new();
    let mut cells: BTreeMap<String, BTreeMap<(String, String), f64>> = BTreeMap::new();
    for s in summaries {
        let run = s.require_run()?;
        let label = run.paradigm.label();
        order.insert(paradigm_order(&run.paradigm), label.clone());
        let key = (run.model_name.clone(), run.dataset_name.clone());
        if cells.entry(label.clone()).or_default().insert(key, s.normalized_auc).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate {label} result for {}/{}",
                run.model_name, run.dataset_name
            )));
        }
    }
    let paradigms: Vec<String> = order.into_values().collect();
    let p = paradigms.len();

    let mut diff = vec![vec![None; p]; p];
    let mut counts = vec![vec![0usize; p]; p];
    for a in 0..p {
        diff[a][a] = Some(0.0);
        counts[a][a] = cells[&paradigms[a]].len();
        for b in a + 1..p {
            let ca = &cells[&paradigms[a]];
            let cb = &cells[&paradigms[b]];
            let deltas: Vec<f64> = ca
                .iter()
                .filter_map(|(key, va)| cb.get(key).map(|vb| va - vb))
                .collect();
            counts[a][b] = deltas.len();
            counts[b][a] = deltas.len();
            if !deltas.is_empty() {
                let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
                diff[a][b] = Some(mean);
                diff[b][a] = Some(-mean);
            }
        }
    }

    let mut distributions = Vec::with_capacity(p);
    let mut rows = Vec::new();
    for label in &paradigms {
        let group = &cells[label];
        let values: Vec<f64> = group.values().copied().collect();
        distributions.push(ParadigmDistribution {
            paradigm: label.clone(),
            cells: group
                .iter()
                .map(|((m, d), v)| (m.clone(), d.clone(), *v))
                .collect(),
            stats: FiveNumber::from_values(&values)?,
        });
        rows.extend(group.iter().map(|((m, d), v)| ComparisonRow {
            paradigm: label.clone(),
            model: m.clone(),
            dataset: d.clone(),
            normalized_auc: *v,
        }));
    }

    Ok(ComparisonReport {
        paradigms,
        diff_matrix: diff,
        pair_counts: counts,
        distributions,
        rows,
    })
}

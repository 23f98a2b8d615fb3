//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every exported function returns a JSON string; the page parses it and
//! draws on a canvas.

use idcurve::estimators::{mle, twonn_fit};
use idcurve::synthetic::{generate_parts, ManifoldKind, ManifoldSpec};
use idcurve::{normalized_auc, pearson};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Most points sent back for plotting; the fit itself uses all of them.
const MAX_PLOT_POINTS: usize = 600;

#[derive(Debug, Serialize)]
pub struct FitView {
    pub value: f64,
    pub fit_r2: f64,
    pub n_used: usize,
    pub true_dimension: usize,
    /// `(ln mu, -ln(1 - F))`, thinned to at most `MAX_PLOT_POINTS`.
    pub fit_points: Vec<(f64, f64)>,
    /// Two latent coordinates per point, for a shape preview.
    pub preview: Vec<(f64, f64)>,
}

fn thin<T: Copy>(items: &[T], max: usize) -> Vec<T> {
    if items.len() <= max {
        return items.to_vec();
    }
    let step = items.len() as f64 / max as f64;
    (0..max).map(|i| items[(i as f64 * step) as usize]).collect()
}

fn spec_from(kind: &str, intrinsic_dim: usize, ambient_dim: usize, n_points: usize, noise: f64, seed: u64) -> Result<ManifoldSpec, String> {
    let kind: ManifoldKind = kind.parse().map_err(|e: idcurve::Error| e.to_string())?;
    Ok(ManifoldSpec::new(kind, intrinsic_dim, ambient_dim, n_points)
        .with_noise(noise)
        .with_seed(seed))
}

pub fn twonn_view(spec: &ManifoldSpec, discard_fraction: f64) -> Result<FitView, String> {
    let (latent, ambient) = generate_parts(spec).map_err(|e| e.to_string())?;
    let fit = twonn_fit(&ambient, discard_fraction).map_err(|e| e.to_string())?;
    let pairs: Vec<(f64, f64)> = fit
        .log_mu
        .iter()
        .copied()
        .zip(fit.neg_log_survival.iter().copied())
        .collect();
    // Swiss-roll latent is (x, h, z); the spiral shows in x/z.
    let (a, b) = match spec.kind {
        ManifoldKind::SwissRoll => (0, 2),
        _ => (0, 1.min(latent.dim() - 1)),
    };
    let preview: Vec<(f64, f64)> = latent
        .rows()
        .map(|r| (r[a], if latent.dim() > 1 { r[b] } else { 0.0 }))
        .collect();
    Ok(FitView {
        value: fit.estimate.value,
        fit_r2: fit.estimate.fit_r2.unwrap_or(0.0),
        n_used: fit.estimate.n_used,
        true_dimension: spec.true_dimension(),
        fit_points: thin(&pairs, MAX_PLOT_POINTS),
        preview: thin(&preview, MAX_PLOT_POINTS),
    })
}

#[derive(Debug, Serialize, PartialEq)]
pub struct AucView {
    pub values: Vec<f64>,
    pub normalized_auc: f64,
    /// Area of each trapezoid before normalization.
    pub trapezoids: Vec<f64>,
}

pub fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect()
}

pub fn auc_view(text: &str) -> Result<AucView, String> {
    let values = parse_values(text)?;
    let auc = normalized_auc(&values).map_err(|e| e.to_string())?;
    Ok(AucView {
        trapezoids: values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
        normalized_auc: auc,
        values,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub true_dimension: usize,
    pub twonn: f64,
    pub mle: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepView {
    pub rows: Vec<SweepRow>,
    pub correlation: Option<f64>,
}

/// TwoNN and MLE on hypercube-like clouds of every dimension up to `max_dim`.
pub fn sweep_view(kind: &str, max_dim: usize, ambient_dim: usize, n_points: usize, noise: f64, seed: u64, mle_k: usize) -> Result<SweepView, String> {
    let mut rows = Vec::new();
    for d in 1..=max_dim {
        let spec = spec_from(kind, d, ambient_dim, n_points, noise, seed.wrapping_add(d as u64))?;
        if spec.validate().is_err() {
            continue;
        }
        let (_, cloud) = generate_parts(&spec).map_err(|e| e.to_string())?;
        let t = twonn_fit(&cloud, 0.1).map_err(|e| e.to_string())?.estimate.value;
        let m = mle(&cloud, mle_k).map_err(|e| e.to_string())?.value;
        rows.push(SweepRow {
            true_dimension: spec.true_dimension(),
            twonn: t,
            mle: m,
        });
    }
    if rows.is_empty() {
        return Err(format!("no valid {kind} manifold up to dimension {max_dim} in R^{ambient_dim}"));
    }
    let tw: Vec<f64> = rows.iter().map(|r| r.twonn).collect();
    let ml: Vec<f64> = rows.iter().map(|r| r.mle).collect();
    Ok(SweepView {
        correlation: pearson(&tw, &ml).ok(),
        rows,
    })
}

fn json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| serde_json::to_string(&v).expect("view serializes"))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = twonnFit)]
pub fn twonn_fit_js(kind: &str, intrinsic_dim: usize, ambient_dim: usize, n_points: usize, noise: f64, seed: u32, discard_fraction: f64) -> Result<String, JsError> {
    json(spec_from(kind, intrinsic_dim, ambient_dim, n_points, noise, seed as u64)
        .and_then(|s| twonn_view(&s, discard_fraction)))
}

#[wasm_bindgen(js_name = curveAuc)]
pub fn curve_auc_js(values: &str) -> Result<String, JsError> {
    json(auc_view(values))
}

#[wasm_bindgen(js_name = estimatorSweep)]
pub fn estimator_sweep_js(kind: &str, max_dim: usize, ambient_dim: usize, n_points: usize, noise: f64, seed: u32, mle_k: usize) -> Result<String, JsError> {
    json(sweep_view(kind, max_dim, ambient_dim, n_points, noise, seed as u64, mle_k))
}

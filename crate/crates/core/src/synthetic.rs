//! Point clouds with known intrinsic dimension.
//!
//! A latent sample is drawn on the manifold, pushed into the ambient space
//! by a random isometry plus translation, then optionally jittered with
//! isotropic Gaussian noise. All randomness comes from one ChaCha8 stream
//! seeded with `seed_from_u64(spec.seed)`, consumed in this order:
//! embedding matrix, translation, latent points, noise.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    /// Uniform on `[0, 1]^d`.
    Hypercube,
    /// Uniform on the unit sphere `S^d` in `R^(d+1)`.
    Hypersphere,
    /// Standard normal in `R^d`.
    Gaussian,
    /// `(t cos t, h, t sin t)`, `t ~ U[1.5 pi, 4.5 pi]`, `h ~ U[0, 21]`.
    SwissRoll,
    /// Uniform on `[0, 1]`.
    LineSegment,
}

impl ManifoldKind {
    pub const ALL: [ManifoldKind; 5] = [
        ManifoldKind::Hypercube,
        ManifoldKind::Hypersphere,
        ManifoldKind::Gaussian,
        ManifoldKind::SwissRoll,
        ManifoldKind::LineSegment,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ManifoldKind::Hypercube => "hypercube",
            ManifoldKind::Hypersphere => "hypersphere",
            ManifoldKind::Gaussian => "gaussian",
            ManifoldKind::SwissRoll => "swiss_roll",
            ManifoldKind::LineSegment => "line_segment",
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ManifoldKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().replace('_', "-") == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown manifold kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub n_points: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ManifoldSpec {
    pub fn new(kind: ManifoldKind, intrinsic_dim: usize, ambient_dim: usize, n_points: usize) -> Self {
        Self {
            kind,
            intrinsic_dim,
            ambient_dim,
            n_points,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Dimension of the manifold the points lie on.
    pub fn true_dimension(&self) -> usize {
        match self.kind {
            ManifoldKind::SwissRoll => 2,
            _ => self.intrinsic_dim,
        }
    }

    /// Coordinates per latent point before embedding.
    pub fn latent_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Hypersphere => self.intrinsic_dim + 1,
            ManifoldKind::SwissRoll => 3,
            _ => self.intrinsic_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.intrinsic_dim;
        if d == 0 {
            return Err(Error::InvalidSpec("intrinsic_dim must be positive".into()));
        }
        match self.kind {
            ManifoldKind::SwissRoll if d != 2 => {
                return Err(Error::InvalidSpec(format!(
                    "swiss_roll is two-dimensional, got intrinsic_dim {d}"
                )))
            }
            ManifoldKind::LineSegment if d != 1 => {
                return Err(Error::InvalidSpec(format!(
                    "line_segment is one-dimensional, got intrinsic_dim {d}"
                )))
            }
            _ => {}
        }
        if self.ambient_dim < self.latent_dim() {
            return Err(Error::InvalidSpec(format!(
                "{} with intrinsic_dim {d} needs ambient_dim >= {}, got {}",
                self.kind,
                self.latent_dim(),
                self.ambient_dim
            )));
        }
        if self.n_points < 10 {
            return Err(Error::InvalidSpec(format!(
                "n_points must be at least 10, got {}",
                self.n_points
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "noise_sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// A `d_out × d_in` matrix with orthonormal columns, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMap {
    d_in: usize,
    d_out: usize,
    m: Vec<f64>,
}

impl OrthogonalMap {
    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[row * self.d_in + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.d_out).map(|r| self.get(r, col)).collect()
    }

    pub fn apply(&self, latent: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d_out];
        self.apply_into(latent, &mut out);
        out
    }

    fn apply_into(&self, latent: &[f64], out: &mut [f64]) {
        assert_eq!(latent.len(), self.d_in);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.m[r * self.d_in..(r + 1) * self.d_in];
            *o = row.iter().zip(latent).map(|(a, b)| a * b).sum();
        }
    }
}

/// Seeded random isometry `R^d_in -> R^d_out` from modified Gram–Schmidt
/// on a Gaussian matrix.
pub fn orthogonal_map(d_in: usize, d_out: usize, seed: u64) -> Result<OrthogonalMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    orthogonal_map_from(&mut rng, d_in, d_out)
}

fn orthogonal_map_from(rng: &mut ChaCha8Rng, d_in: usize, d_out: usize) -> Result<OrthogonalMap> {
    if d_in == 0 || d_out < d_in {
        return Err(Error::InvalidSpec(format!(
            "orthogonal map needs 0 < d_in <= d_out, got {d_in} -> {d_out}"
        )));
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d_in);
    while cols.len() < d_in {
        let mut v: Vec<f64> = (0..d_out).map(|_| rng.sample(StandardNormal)).collect();
        // Two passes of projection keep orthogonality at machine precision.
        for _ in 0..2 {
            for q in &cols {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    let mut m = vec![0.0; d_out * d_in];
    for (c, col) in cols.iter().enumerate() {
        for (r, &x) in col.iter().enumerate() {
            m[r * d_in + c] = x;
        }
    }
    Ok(OrthogonalMap { d_in, d_out, m })
}

/// Latent coordinates for `spec`, before embedding. Row-major, `latent_dim` columns.
fn sample_latent(rng: &mut ChaCha8Rng, spec: &ManifoldSpec) -> Vec<f64> {
    let n = spec.n_points;
    let ld = spec.latent_dim();
    let mut out = Vec::with_capacity(n * ld);
    for _ in 0..n {
        match spec.kind {
            ManifoldKind::Hypercube | ManifoldKind::LineSegment => {
                out.extend((0..ld).map(|_| rng.random::<f64>()));
            }
            ManifoldKind::Gaussian => {
                out.extend((0..ld).map(|_| rng.sample::<f64, _>(StandardNormal)));
            }
            ManifoldKind::Hypersphere => loop {
                let v: Vec<f64> = (0..ld).map(|_| rng.sample(StandardNormal)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    out.extend(v.iter().map(|x| x / norm));
                    break;
                }
            },
            ManifoldKind::SwissRoll => {
                let t = 1.5 * PI + 3.0 * PI * rng.random::<f64>();
                let h = 21.0 * rng.random::<f64>();
                out.extend([t * t.cos(), h, t * t.sin()]);
            }
        }
    }
    out
}

/// Samples `spec` and returns the ambient cloud, including noise.
pub fn generate(spec: &ManifoldSpec) -> Result<PointCloud> {
    generate_parts(spec).map(|(_, cloud)| cloud)
}

/// Like [`generate`] but also returns the latent sample; noise is applied
/// only to the ambient cloud.
pub fn generate_parts(spec: &ManifoldSpec) -> Result<(PointCloud, PointCloud)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let map = orthogonal_map_from(&mut rng, spec.latent_dim(), spec.ambient_dim)?;
    let shift: Vec<f64> = (0..spec.ambient_dim)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let latent = sample_latent(&mut rng, spec);

    let ld = spec.latent_dim();
    let dd = spec.ambient_dim;
    let mut ambient = vec![0.0; spec.n_points * dd];
    for (src, dst) in latent.chunks_exact(ld).zip(ambient.chunks_exact_mut(dd)) {
        map.apply_into(src, dst);
        for (x, s) in dst.iter_mut().zip(&shift) {
            *x += s;
        }
    }
    if spec.noise_sigma > 0.0 {
        for x in ambient.iter_mut() {
            *x += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok((
        PointCloud::new(latent, spec.n_points, ld)?,
        PointCloud::new(ambient, spec.n_points, dd)?,
    ))
}

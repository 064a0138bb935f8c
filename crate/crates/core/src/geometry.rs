//! Atlas abstraction and the hybrid latent-space coordinate types.
//!
//! An atlas has `m` charts over a `d`-dimensional latent space embedded in a
//! `D`-dimensional ambient space. Each chart `y` comes with a decode map
//! `G_y: R^d -> R^D`, an encode map `F_y: R^D -> R^d` (possibly partial) and
//! the atlas carries a partition of unity `psi: R^D -> simplex(m)`.
//!
//! Chart indices are zero-based in the library. Serialized files and the
//! command line label charts starting from 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the sum of partition weights.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Point of the ambient data space `R^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AmbientPoint(pub Vec<f64>);

impl AmbientPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::usage(format!(
                "ambient coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(AmbientPoint(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &AmbientPoint) -> f64 {
        euclidean(&self.0, &other.0)
    }
}

/// A point `(z, y)` of the hybrid latent space `R^d x {charts}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCoord {
    pub chart: usize,
    pub z: Vec<f64>,
}

impl LatentCoord {
    pub fn new(chart: usize, z: Vec<f64>) -> Self {
        LatentCoord { chart, z }
    }
}

/// Chart importances `psi(x)`; a point of the standard simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::usage("partition weights are empty"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain(format!("partition weight {w} is not a finite non-negative value")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Domain(format!("partition weights sum to {sum}")));
        }
        Ok(SimplexWeights(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest weight, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.0.iter().enumerate() {
            if *w > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Charts whose weight exceeds `eps` strictly.
    pub fn above(&self, eps: f64) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > eps)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtlasDims {
    /// Number of charts.
    pub m: usize,
    /// Latent dimension.
    pub d: usize,
    /// Ambient dimension.
    #[serde(rename = "D")]
    pub ambient: usize,
}

impl std::fmt::Display for AtlasDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(m={}, d={}, D={})", self.m, self.d, self.ambient)
    }
}

/// Identifies the atlas a graph was built with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    pub spec: String,
    pub dims: AtlasDims,
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.spec, self.dims)
    }
}

/// A family of chart / chart-inverse estimates with a partition of unity.
///
/// Implementors provide the raw maps over slices; dimension checking and the
/// typed entry points live in the provided methods.
pub trait Atlas: Send + Sync {
    fn dims(&self) -> AtlasDims;

    /// Spec string used to address this atlas (`sphere`, `neural:<path>`, ...).
    fn spec(&self) -> String;

    /// `G_chart(z)`. Callers guarantee `chart < m` and `z.len() == d`.
    fn decode_raw(&self, chart: usize, z: &[f64]) -> Vec<f64>;

    /// `F_chart(x)`. Callers guarantee `chart < m` and `x.len() == D`.
    fn encode_raw(&self, chart: usize, x: &[f64]) -> Result<Vec<f64>>;

    /// `psi(x)`. Callers guarantee `x.len() == D`.
    fn partition_raw(&self, x: &[f64]) -> Vec<f64>;

    fn fingerprint(&self) -> Fingerprint {
        Fingerprint {
            spec: self.spec(),
            dims: self.dims(),
        }
    }

    fn decode(&self, p: &LatentCoord) -> Result<AmbientPoint> {
        check_latent(self.dims(), p.chart, &p.z)?;
        Ok(AmbientPoint(self.decode_raw(p.chart, &p.z)))
    }

    fn encode(&self, chart: usize, x: &AmbientPoint) -> Result<Vec<f64>> {
        let dims = self.dims();
        check_chart(dims, chart)?;
        check_ambient(dims, x)?;
        self.encode_raw(chart, &x.0)
    }

    fn partition(&self, x: &AmbientPoint) -> Result<SimplexWeights> {
        check_ambient(self.dims(), x)?;
        SimplexWeights::new(self.partition_raw(&x.0))
    }

    /// Charts `y` with `psi_y(x) > eps`. Nonempty whenever `eps < 1/m`.
    fn chart_membership(&self, x: &AmbientPoint, eps: f64) -> Result<Vec<usize>> {
        if !(eps >= 0.0) {
            return Err(Error::usage(format!("membership threshold must be >= 0, got {eps}")));
        }
        Ok(self.partition(x)?.above(eps))
    }

    fn argmax_chart(&self, x: &AmbientPoint) -> Result<usize> {
        Ok(self.partition(x)?.argmax())
    }
}

pub(crate) fn check_chart(dims: AtlasDims, chart: usize) -> Result<()> {
    if chart >= dims.m {
        return Err(Error::usage(format!(
            "chart index {chart} out of range for atlas with {} charts",
            dims.m
        )));
    }
    Ok(())
}

pub(crate) fn check_latent(dims: AtlasDims, chart: usize, z: &[f64]) -> Result<()> {
    check_chart(dims, chart)?;
    if z.len() != dims.d {
        return Err(Error::usage(format!(
            "latent vector has length {}, atlas latent dimension is {}",
            z.len(),
            dims.d
        )));
    }
    Ok(())
}

pub(crate) fn check_ambient(dims: AtlasDims, x: &AmbientPoint) -> Result<()> {
    if x.dim() != dims.ambient {
        return Err(Error::usage(format!(
            "ambient point has length {}, atlas ambient dimension is {}",
            x.dim(),
            dims.ambient
        )));
    }
    Ok(())
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

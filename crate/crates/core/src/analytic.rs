//! Closed-form atlases with known geodesics: a flat plane, the unit circle
//! and the unit sphere with its two stereographic charts.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{AmbientPoint, Atlas, AtlasDims};

/// Side length of the square the flat atlas samples from.
pub const FLAT_EXTENT: f64 = 5.0;

const ON_MANIFOLD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticName {
    Flat,
    Circle,
    Sphere,
}

impl AnalyticName {
    pub fn as_str(self) -> &'static str {
        match self {
            AnalyticName::Flat => "flat",
            AnalyticName::Circle => "circle",
            AnalyticName::Sphere => "sphere",
        }
    }
}

impl FromStr for AnalyticName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(AnalyticName::Flat),
            "circle" => Ok(AnalyticName::Circle),
            "sphere" => Ok(AnalyticName::Sphere),
            other => Err(Error::usage(format!(
                "unknown atlas '{other}' (expected flat, circle or sphere)"
            ))),
        }
    }
}

impl std::fmt::Display for AnalyticName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn make_atlas(name: AnalyticName) -> Box<dyn Atlas> {
    match name {
        AnalyticName::Flat => Box::new(FlatAtlas),
        AnalyticName::Circle => Box::new(CircleAtlas),
        AnalyticName::Sphere => Box::new(SphereAtlas),
    }
}

/// The plane `x3 = 0` in `R^3` with a single identity chart.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatAtlas;

impl Atlas for FlatAtlas {
    fn dims(&self) -> AtlasDims {
        AtlasDims { m: 1, d: 2, ambient: 3 }
    }

    fn spec(&self) -> String {
        "flat".into()
    }

    fn decode_raw(&self, _chart: usize, z: &[f64]) -> Vec<f64> {
        vec![z[0], z[1], 0.0]
    }

    fn encode_raw(&self, _chart: usize, x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![x[0], x[1]])
    }

    fn partition_raw(&self, _x: &[f64]) -> Vec<f64> {
        vec![1.0]
    }
}

/// The unit circle covered by two angle charts, each missing one point.
///
/// Chart 0 is centred on `(1, 0)` and excludes `(-1, 0)`; chart 1 is the
/// same chart rotated by `pi`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CircleAtlas;

impl Atlas for CircleAtlas {
    fn dims(&self) -> AtlasDims {
        AtlasDims { m: 2, d: 1, ambient: 2 }
    }

    fn spec(&self) -> String {
        "circle".into()
    }

    fn decode_raw(&self, chart: usize, z: &[f64]) -> Vec<f64> {
        let angle = if chart == 0 { z[0] } else { z[0] + PI };
        vec![angle.cos(), angle.sin()]
    }

    fn encode_raw(&self, chart: usize, x: &[f64]) -> Result<Vec<f64>> {
        let theta = x[1].atan2(x[0]);
        if self.partition_raw(x)[chart] <= 0.0 {
            return Err(Error::Domain(format!(
                "point ({}, {}) is the excluded point of circle chart {}",
                x[0],
                x[1],
                chart + 1
            )));
        }
        if chart == 0 {
            return Ok(vec![theta]);
        }
        let mut z = theta - PI;
        if z <= -PI {
            z += 2.0 * PI;
        }
        Ok(vec![z])
    }

    fn partition_raw(&self, x: &[f64]) -> Vec<f64> {
        let theta = x[1].atan2(x[0]);
        let c = theta.cos();
        vec![(1.0 + c) / 2.0, (1.0 - c) / 2.0]
    }
}

/// The unit sphere with stereographic charts from the north pole (chart 0)
/// and from the south pole (chart 1).
///
/// Partition weights are `(1 -+ x3) / 2` with `x3` clamped to `[-1, 1]`, so
/// they form a valid simplex point anywhere in `R^3`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SphereAtlas;

impl SphereAtlas {
    /// `psi_N(x)`; zero exactly where the north chart's projection is undefined.
    fn psi_north(x: &[f64]) -> f64 {
        (1.0 - x[2].clamp(-1.0, 1.0)) / 2.0
    }
}

impl Atlas for SphereAtlas {
    fn dims(&self) -> AtlasDims {
        AtlasDims { m: 2, d: 2, ambient: 3 }
    }

    fn spec(&self) -> String {
        "sphere".into()
    }

    fn decode_raw(&self, chart: usize, z: &[f64]) -> Vec<f64> {
        let r2 = z[0] * z[0] + z[1] * z[1];
        let denom = 1.0 + r2;
        let height = if chart == 0 { r2 - 1.0 } else { 1.0 - r2 };
        vec![2.0 * z[0] / denom, 2.0 * z[1] / denom, height / denom]
    }

    fn encode_raw(&self, chart: usize, x: &[f64]) -> Result<Vec<f64>> {
        let psi_north = Self::psi_north(x);
        let weight = if chart == 0 { psi_north } else { 1.0 - psi_north };
        if weight <= 0.0 {
            let pole = if chart == 0 { "north" } else { "south" };
            return Err(Error::Domain(format!(
                "({}, {}, {}) is the {pole} pole, excluded from sphere chart {}",
                x[0],
                x[1],
                x[2],
                chart + 1
            )));
        }
        let denom = if chart == 0 { 1.0 - x[2] } else { 1.0 + x[2] };
        Ok(vec![x[0] / denom, x[1] / denom])
    }

    fn partition_raw(&self, x: &[f64]) -> Vec<f64> {
        let n = Self::psi_north(x);
        vec![n, 1.0 - n]
    }
}

fn check_on_manifold(name: AnalyticName, x: &AmbientPoint) -> Result<()> {
    let expected = match name {
        AnalyticName::Circle => 2,
        _ => 3,
    };
    if x.dim() != expected {
        return Err(Error::usage(format!(
            "{name} points have {expected} coordinates, got {}",
            x.dim()
        )));
    }
    let v = x.as_slice();
    let violation = match name {
        AnalyticName::Flat => v[2].abs(),
        AnalyticName::Circle | AnalyticName::Sphere => {
            (v.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs()
        }
    };
    if !(violation <= ON_MANIFOLD_TOLERANCE) {
        return Err(Error::Domain(format!(
            "point {v:?} is off the {name} manifold by {violation:e}"
        )));
    }
    Ok(())
}

/// Exact geodesic distance between two points on the named manifold.
pub fn oracle_distance(name: AnalyticName, x0: &AmbientPoint, x1: &AmbientPoint) -> Result<f64> {
    check_on_manifold(name, x0)?;
    check_on_manifold(name, x1)?;
    let (a, b) = (x0.as_slice(), x1.as_slice());
    Ok(match name {
        AnalyticName::Flat => x0.distance(x1),
        AnalyticName::Circle => {
            let delta = (b[1].atan2(b[0]) - a[1].atan2(a[0])).abs();
            delta.min(2.0 * PI - delta)
        }
        AnalyticName::Sphere => {
            // atan2(|a x b|, a.b) equals arccos(a.b) on unit vectors and stays
            // well conditioned for nearby points.
            let cross = [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ];
            let sin = cross.iter().map(|c| c * c).sum::<f64>().sqrt();
            let cos: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
            sin.atan2(cos)
        }
    })
}

/// `n` points drawn uniformly (w.r.t. surface measure) from the manifold.
pub fn sample_manifold(name: AnalyticName, n: usize, seed: u64) -> Result<Vec<AmbientPoint>> {
    sample_manifold_stream(name, n, seed, 0)
}

/// Like [`sample_manifold`] but drawing from an independent RNG stream, so
/// evaluation endpoints do not coincide with the graph's own samples.
pub fn sample_manifold_stream(
    name: AnalyticName,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<AmbientPoint>> {
    if n == 0 {
        return Err(Error::usage("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = match name {
            AnalyticName::Flat => vec![
                rng.random::<f64>() * FLAT_EXTENT,
                rng.random::<f64>() * FLAT_EXTENT,
                0.0,
            ],
            AnalyticName::Circle => {
                let theta = rng.random_range(-PI..PI);
                vec![theta.cos(), theta.sin()]
            }
            AnalyticName::Sphere => {
                let g: [f64; 3] = [
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                ];
                let norm = g.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    continue;
                }
                g.iter().map(|c| c / norm).collect()
            }
        };
        out.push(AmbientPoint(p));
    }
    Ok(out)
}

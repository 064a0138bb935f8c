//! Pullback metric `J^T J` of a chart's decoder and the discretized curve
//! length used to weight graph edges.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::{check_latent, euclidean, Atlas, LatentCoord};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Default number of chords per edge.
pub const DEFAULT_STEPS: usize = 15;

/// Symmetric positive semi-definite `d x d` metric tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix(DMatrix<f64>);

impl MetricMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn max_asymmetry(&self) -> f64 {
        (&self.0 - self.0.transpose()).amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Straight latent segment inside one chart, discretized into `steps` chords.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSpec {
    pub chart: usize,
    pub z_a: Vec<f64>,
    pub z_b: Vec<f64>,
    pub steps: usize,
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::usage(format!("finite-difference step must be > 0, got {h}")));
    }
    Ok(())
}

/// Central-difference Jacobian of `G_chart` at `p.z`, shape `D x d`.
pub fn jacobian_fd(atlas: &dyn Atlas, p: &LatentCoord, h: f64) -> Result<DMatrix<f64>> {
    let dims = atlas.dims();
    check_latent(dims, p.chart, &p.z)?;
    check_step(h)?;
    let mut jac = DMatrix::zeros(dims.ambient, dims.d);
    let mut z = p.z.clone();
    for j in 0..dims.d {
        let base = z[j];
        z[j] = base + h;
        let plus = atlas.decode_raw(p.chart, &z);
        z[j] = base - h;
        let minus = atlas.decode_raw(p.chart, &z);
        z[j] = base;
        for (i, (a, b)) in plus.iter().zip(&minus).enumerate() {
            jac[(i, j)] = (a - b) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Pullback of the ambient Euclidean metric through `G_chart` at `p.z`.
pub fn pullback_metric(atlas: &dyn Atlas, p: &LatentCoord, h: f64) -> Result<MetricMatrix> {
    let jac = jacobian_fd(atlas, p, h)?;
    let g = jac.transpose() * &jac;
    Ok(MetricMatrix((&g + g.transpose()) * 0.5))
}

/// `u^T g v` under the pullback metric at `p`.
///
/// Each entry contributes `g_ij (u_i v_j + u_j v_i) / 2`, which makes the
/// result bit-identical under swapping `u` and `v`.
pub fn riemannian_inner(
    atlas: &dyn Atlas,
    p: &LatentCoord,
    u: &[f64],
    v: &[f64],
    h: f64,
) -> Result<f64> {
    let d = atlas.dims().d;
    if u.len() != d || v.len() != d {
        return Err(Error::usage(format!(
            "tangent vectors have lengths {} and {}, latent dimension is {d}",
            u.len(),
            v.len()
        )));
    }
    let g = pullback_metric(atlas, p, h)?;
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            total += g.get(i, j) * ((u[i] * v[j] + u[j] * v[i]) * 0.5);
        }
    }
    Ok(total)
}

/// Sum of ambient chords along the decoded straight latent segment sampled
/// at `t_i = i / steps`, endpoints included.
pub fn curve_length_discrete(atlas: &dyn Atlas, seg: &SegmentSpec) -> Result<f64> {
    let dims = atlas.dims();
    check_latent(dims, seg.chart, &seg.z_a)?;
    check_latent(dims, seg.chart, &seg.z_b)?;
    if seg.steps == 0 {
        return Err(Error::usage("curve length needs at least one step"));
    }
    Ok(segment_length(atlas, seg.chart, &seg.z_a, &seg.z_b, seg.steps))
}

/// Unchecked form of [`curve_length_discrete`] for the graph builder.
pub(crate) fn segment_length(
    atlas: &dyn Atlas,
    chart: usize,
    z_a: &[f64],
    z_b: &[f64],
    steps: usize,
) -> f64 {
    if z_a == z_b {
        return 0.0;
    }
    let mut z = vec![0.0; z_a.len()];
    let mut prev = atlas.decode_raw(chart, z_a);
    let mut total = 0.0;
    for i in 1..=steps {
        let next = if i == steps {
            atlas.decode_raw(chart, z_b)
        } else {
            let t = i as f64 / steps as f64;
            for (k, zk) in z.iter_mut().enumerate() {
                *zk = (1.0 - t) * z_a[k] + t * z_b[k];
            }
            atlas.decode_raw(chart, &z)
        };
        total += euclidean(&prev, &next);
        prev = next;
    }
    total
}

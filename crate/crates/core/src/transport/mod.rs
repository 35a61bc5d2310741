//! A-paths, parallel transport, and the covariant derivative along a path.
//!
//! An A-path is a curve `t ↦ (x(t), y(t))` with `ρ_a^i(x) y^a = dx^i/dt`.
//! Transport of `z ∈ R^k` solves
//!
//! ```text
//! dz^β/dt + Γ^β_{αa}(x(t)) z^α y^a(t) = 0
//! ```
//!
//! with classical fixed-step RK4 on the path's grid. Midpoint values of
//! `x` and `y` come from cubic interpolation inside the current segment.

mod curves;
mod path;

pub use curves::{BaseCurve, Circle, FnCurve, Polyline, Segment};
pub use path::{APath, AlphaSection, PathSegment};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebroid::LieAlgebroid;
use crate::connection::AConnection;
use crate::error::{Error, Result};
use crate::linalg;
use path::node_derivatives;

/// Relative singular-value cutoff of the minimal-norm lift.
pub const LIFT_CUTOFF: f64 = 1e-10;
/// Largest accepted `|ρ(x) y − dx/dt|` of a lift.
pub const LIFT_TOLERANCE: f64 = 1e-6;
/// Largest accepted `|ρ(x0) y(t)|` of a vertical path.
pub const KERNEL_TOLERANCE: f64 = 1e-10;

fn uniform(t0: f64, t1: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|j| {
            if j == steps {
                t1
            } else {
                t0 + (t1 - t0) * j as f64 / steps as f64
            }
        })
        .collect()
}

/// Centered-difference admissibility residual of one segment.
fn segment_admissibility(alg: &LieAlgebroid, seg: &PathSegment) -> Result<f64> {
    let n = alg.base_dim();
    let m = alg.rank();
    let dx = node_derivatives(&seg.times, &seg.xs, n);
    let mut worst = 0.0f64;
    for j in 0..seg.nodes() {
        let v = alg.push_forward(&seg.xs[j * n..(j + 1) * n], &seg.ys[j * m..(j + 1) * m])?;
        for i in 0..n {
            worst = worst.max((v[i] - dx[j * n + i]).abs());
        }
    }
    Ok(worst)
}

/// Vertical A-path over the fixed base point `x0` with fiber curve
/// `y(t)`, `t ∈ [0, duration]`, which must stay in the kernel of `ρ(x0)`.
pub fn make_vertical_path(
    alg: &LieAlgebroid,
    x0: &[f64],
    y: impl Fn(f64) -> Vec<f64>,
    duration: f64,
    steps: usize,
) -> Result<APath> {
    let (n, m) = (alg.base_dim(), alg.rank());
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "x0 has {} coordinates, base dimension is {n}",
            x0.len()
        )));
    }
    if steps == 0 || !(duration > 0.0) {
        return Err(Error::InvalidPath(
            "need at least one step and a positive duration".into(),
        ));
    }
    let anchor = alg.anchor_matrix(x0)?;
    let times = uniform(0.0, duration, steps);
    let mut ys = Vec::with_capacity(times.len() * m);
    let mut worst = (0.0f64, 0.0f64);
    for &t in &times {
        let yt = y(t);
        if yt.len() != m {
            return Err(Error::Dimension(format!(
                "fiber curve has {} components, rank is {m}",
                yt.len()
            )));
        }
        let image = &anchor * nalgebra::DVector::from_column_slice(&yt);
        let r = image.amax();
        if r > worst.1 || (t == 0.0 && r.is_nan()) {
            worst = (t, r);
        }
        ys.extend(yt);
    }
    if !(worst.1 <= KERNEL_TOLERANCE) {
        return Err(Error::KernelViolation {
            t: worst.0,
            residual: worst.1,
        });
    }
    let xs = x0.repeat(times.len());
    let seg = PathSegment { times, xs, ys };
    APath::from_segments(n, m, vec![seg], worst.1, true)
}

/// Lift of a base curve: at every node `y` is the minimal-norm solution of
/// `ρ(x) y = dx/dt`. Each curve piece gets `ceil(steps / pieces)` steps
/// (at least three).
pub fn lift_base_path(alg: &LieAlgebroid, curve: &dyn BaseCurve, steps: usize) -> Result<APath> {
    let (n, m) = (alg.base_dim(), alg.rank());
    if curve.dim() != n {
        return Err(Error::Dimension(format!(
            "curve lives in R^{}, base dimension is {n}",
            curve.dim()
        )));
    }
    let pieces = curve.pieces();
    let per_piece = steps.div_ceil(pieces.max(1)).max(3);
    let mut segments = Vec::with_capacity(pieces);
    let mut worst = (0usize, 0.0f64, 0.0f64);
    let mut node = 0usize;
    for p in 0..pieces {
        let (t0, t1) = curve.span(p);
        let times = uniform(t0, t1, per_piece);
        let mut xs = Vec::with_capacity(times.len() * n);
        let mut ys = Vec::with_capacity(times.len() * m);
        for (j, &t) in times.iter().enumerate() {
            let x = curve.position(p, t);
            let v = nalgebra::DVector::from_vec(curve.velocity(p, t));
            let a = alg.anchor_matrix(&x)?;
            let y = linalg::pseudo_inverse(&a, LIFT_CUTOFF) * &v;
            let r = (&a * &y - &v).amax();
            if r > worst.2 || r.is_nan() {
                worst = (node + j, t, r);
            }
            xs.extend(x);
            ys.extend(y.iter());
        }
        node += times.len() - 1;
        segments.push(PathSegment { times, xs, ys });
    }
    if !(worst.2 <= LIFT_TOLERANCE) {
        return Err(Error::NotLiftable {
            node: worst.0,
            t: worst.1,
            residual: worst.2,
        });
    }
    let mut adm = 0.0f64;
    for seg in &segments {
        adm = adm.max(segment_admissibility(alg, seg)?);
    }
    APath::from_segments(n, m, segments, adm, false)
}

/// Path from explicit samples on a uniform grid over `[0, duration]`; the
/// admissibility residual is measured, not enforced.
pub fn path_from_samples(
    alg: &LieAlgebroid,
    duration: f64,
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
) -> Result<APath> {
    let (n, m) = (alg.base_dim(), alg.rank());
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidPath(
            "need matching x and y samples, at least two".into(),
        ));
    }
    if xs.iter().any(|x| x.len() != n) || ys.iter().any(|y| y.len() != m) {
        return Err(Error::Dimension(format!(
            "samples must have {n} base and {m} fiber components"
        )));
    }
    let times = uniform(0.0, duration, xs.len() - 1);
    let vertical = xs.iter().all(|x| x == &xs[0]);
    let seg = PathSegment {
        times,
        xs: xs.concat(),
        ys: ys.concat(),
    };
    let adm = segment_admissibility(alg, &seg)?;
    APath::from_segments(n, m, vec![seg], adm, vertical)
}

/// `P^t_α` in the fixed local frame, with its endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportMap {
    pub matrix: DMatrix<f64>,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
}

impl TransportMap {
    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

impl Serialize for TransportMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            from: &'a [f64],
            to: &'a [f64],
            matrix: Vec<Vec<f64>>,
            determinant: f64,
        }
        Repr {
            from: &self.from,
            to: &self.to,
            matrix: self.rows(),
            determinant: self.determinant(),
        }
        .serialize(s)
    }
}

fn check_dims(conn: &AConnection, alg: &LieAlgebroid, path: &APath) -> Result<()> {
    if conn.direction_rank() != alg.rank() {
        return Err(Error::Dimension(format!(
            "connection directions {} differ from algebroid rank {}",
            conn.direction_rank(),
            alg.rank()
        )));
    }
    if path.base_dim() != alg.base_dim() || path.rank() != alg.rank() {
        return Err(Error::Dimension(
            "path does not belong to this algebroid".into(),
        ));
    }
    Ok(())
}

/// RK4 for `dZ/dt = −M(t) Z` on every segment, returning `Z` at every node
/// (segment by segment, junctions duplicated).
fn integrate(
    conn: &AConnection,
    alg: &LieAlgebroid,
    path: &APath,
    z0: DMatrix<f64>,
) -> Result<Vec<Vec<DMatrix<f64>>>> {
    check_dims(conn, alg, path)?;
    let mut out = Vec::with_capacity(path.segments().len());
    let mut z = z0;
    let (mut xm, mut ym) = (Vec::new(), Vec::new());
    for (s, seg) in path.segments().iter().enumerate() {
        let nodes = seg.nodes();
        let mut values = Vec::with_capacity(nodes);
        values.push(z.clone());
        let mut m0 = conn.contracted(alg, path.x(s, 0), path.y(s, 0))?;
        for j in 0..nodes - 1 {
            let (t0, t1) = (path.t(s, j), path.t(s, j + 1));
            let h = t1 - t0;
            path.interpolate(s, j, t0 + 0.5 * h, &mut xm, &mut ym);
            let mh = conn.contracted(alg, &xm, &ym)?;
            let m1 = conn.contracted(alg, path.x(s, j + 1), path.y(s, j + 1))?;
            let k1 = -(&m0 * &z);
            let k2 = -(&mh * (&z + &k1 * (0.5 * h)));
            let k3 = -(&mh * (&z + &k2 * (0.5 * h)));
            let k4 = -(&m1 * (&z + &k3 * h));
            z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            if !z.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidPath(format!(
                    "transport diverged at t = {t1}"
                )));
            }
            values.push(z.clone());
            m0 = m1;
        }
        out.push(values);
    }
    Ok(out)
}

/// Parallel transport of `z0` along `path`.
pub fn parallel_transport(
    conn: &AConnection,
    alg: &LieAlgebroid,
    path: &APath,
    z0: &[f64],
) -> Result<AlphaSection> {
    let k = conn.bundle_rank();
    if z0.len() != k {
        return Err(Error::Dimension(format!(
            "initial vector has {} entries, bundle rank is {k}",
            z0.len()
        )));
    }
    let sol = integrate(conn, alg, path, DMatrix::from_column_slice(k, 1, z0))?;
    let values = sol
        .into_iter()
        .map(|seg| {
            seg.into_iter()
                .flat_map(|z| z.iter().copied().collect::<Vec<_>>())
                .collect()
        })
        .collect();
    Ok(AlphaSection::from_values(k, values))
}

/// Fundamental solution `Z(t_j)` at every node of the global node list
/// ([`APath::node_indices`]), paired with `t_j`.
pub fn fundamental_solution(
    conn: &AConnection,
    alg: &LieAlgebroid,
    path: &APath,
) -> Result<Vec<(f64, DMatrix<f64>)>> {
    let k = conn.bundle_rank();
    let mut sol = integrate(conn, alg, path, DMatrix::identity(k, k))?;
    Ok(path
        .node_indices()
        .into_iter()
        .map(|(s, j)| (path.t(s, j), std::mem::take(&mut sol[s][j])))
        .collect())
}

/// Transport map of the whole path; column `α` is the transport of `e_α`.
pub fn transport_map(conn: &AConnection, alg: &LieAlgebroid, path: &APath) -> Result<TransportMap> {
    let k = conn.bundle_rank();
    let sol = integrate(conn, alg, path, DMatrix::identity(k, k))?;
    let matrix = sol
        .last()
        .and_then(|s| s.last())
        .cloned()
        .expect("nonempty path");
    Ok(TransportMap {
        matrix,
        from: path.start_x().to_vec(),
        to: path.end_x().to_vec(),
    })
}

/// Transport maps of independent paths, computed in parallel.
pub fn transport_maps(
    conn: &AConnection,
    alg: &LieAlgebroid,
    paths: &[APath],
) -> Result<Vec<TransportMap>> {
    paths
        .par_iter()
        .map(|p| transport_map(conn, alg, p))
        .collect()
}

/// `(D^α σ)(t_j) = dz/dt + Γ^β_{αa}(x) z^α y^a` at every node; derivatives
/// are centered inside a segment and one-sided second order at its ends.
pub fn covariant_derivative_along(
    conn: &AConnection,
    alg: &LieAlgebroid,
    path: &APath,
    sigma: &AlphaSection,
) -> Result<AlphaSection> {
    check_dims(conn, alg, path)?;
    let k = conn.bundle_rank();
    if sigma.rank() != k || !sigma.matches(path) {
        return Err(Error::GridMismatch);
    }
    let mut values = Vec::with_capacity(path.segments().len());
    for (s, seg) in path.segments().iter().enumerate() {
        let z = sigma.segment_values(s);
        let mut d = node_derivatives(seg.times(), z, k);
        for j in 0..seg.nodes() {
            let mat = conn.contracted(alg, path.x(s, j), path.y(s, j))?;
            for beta in 0..k {
                d[j * k + beta] += (0..k)
                    .map(|alpha| mat[(beta, alpha)] * z[j * k + alpha])
                    .sum::<f64>();
            }
        }
        values.push(d);
    }
    Ok(AlphaSection::from_values(k, values))
}

/// Difference quotients `((P^t)^{-1} σ(t) − σ(0)) / t` against `(D^α σ)(0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub times: Vec<f64>,
    pub quotients: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    /// `max |quotient − target|` at each time.
    pub errors: Vec<f64>,
    /// Slope of `log error` against `log t`; `None` when every error is at
    /// rounding level.
    pub order: Option<f64>,
    pub pass: bool,
}

/// Errors below this are treated as exact in the limit check.
const LIMIT_FLOOR: f64 = 1e-12;

/// Evaluate the difference quotient at `t = T/8, T/16, T/32, T/64` (which
/// must be grid nodes) and fit the order of convergence to `(D^α σ)(0)`.
pub fn transport_limit_check(
    conn: &AConnection,
    alg: &LieAlgebroid,
    path: &APath,
    sigma: &AlphaSection,
) -> Result<LimitReport> {
    let d = covariant_derivative_along(conn, alg, path, sigma)?;
    let target = d.start().to_vec();
    let fund = fundamental_solution(conn, alg, path)?;
    let nodes = path.node_indices();
    let (t_start, total) = (path.start_time(), path.duration());
    let s0 = sigma.start();
    let k = conn.bundle_rank();
    let mut times = Vec::new();
    let mut quotients = Vec::new();
    let mut errors = Vec::new();
    for div in [8.0, 16.0, 32.0, 64.0] {
        let t = t_start + total / div;
        let idx = fund
            .iter()
            .position(|(tj, _)| (tj - t).abs() <= 1e-9 * total)
            .ok_or_else(|| {
                Error::InvalidPath(format!(
                    "no grid node at t = {t}; use a step count divisible by 64"
                ))
            })?;
        let (s, j) = nodes[idx];
        let zt = nalgebra::DVector::from_column_slice(sigma.z(s, j));
        let pulled = fund[idx]
            .1
            .clone()
            .lu()
            .solve(&zt)
            .expect("transport maps are invertible");
        let q: Vec<f64> = (0..k)
            .map(|b| (pulled[b] - s0[b]) / (t - t_start))
            .collect();
        let err = q
            .iter()
            .zip(&target)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        times.push(t - t_start);
        quotients.push(q);
        errors.push(err);
    }
    let scale = target.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let fit: Vec<(f64, f64)> = times
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| e > LIMIT_FLOOR * scale)
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    let order = (fit.len() >= 2).then(|| {
        let nf = fit.len() as f64;
        let (mx, my) = fit
            .iter()
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / nf, b + y / nf));
        let sxy: f64 = fit.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = fit.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        sxy / sxx
    });
    let pass = match order {
        Some(p) => p >= 0.9,
        None => errors.iter().all(|&e| e <= LIMIT_FLOOR * scale * 10.0),
    };
    Ok(LimitReport {
        times,
        quotients,
        target,
        errors,
        order,
        pass,
    })
}

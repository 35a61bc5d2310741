//! Geodesics of a linear connection:
//!
//! ```text
//! dx^i/dt = ρ_a^i(x) y^a,    dy^a/dt + Γ^a_bc(x) y^b y^c = 0
//! ```
//!
//! Only the part of `Γ^a_bc` symmetric in `b, c` enters the second equation.
//! Integration is classical fixed-step RK4.

use serde::Serialize;

use crate::algebroid::LieAlgebroid;
use crate::connection::{AConnection, RiemannMetric};
use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::levi_civita::SprayCoefficients;
use crate::transport::{path_from_samples, APath};

/// `E(x, y) = g_ab(x) y^a y^b`.
pub fn energy(metric: &RiemannMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    let m = metric.rank();
    if y.len() != m {
        return Err(Error::Dimension(format!(
            "fiber vector has {} entries, metric rank is {m}",
            y.len()
        )));
    }
    let g = metric.values_at(x)?;
    let mut e = 0.0;
    for a in 0..m {
        for b in 0..m {
            e += g[a * m + b] * y[a] * y[b];
        }
    }
    Ok(e)
}

#[derive(Debug, Clone)]
pub struct GeodesicResult {
    pub path: APath,
    /// `E(t_j)` at every node, when a metric was supplied.
    pub energy: Option<Vec<f64>>,
    /// The solution left the chart box (or an expression's domain) and was
    /// cut at the last good node.
    pub truncated: bool,
}

impl GeodesicResult {
    pub fn with_energy(mut self, metric: &RiemannMetric) -> Result<Self> {
        let e = self
            .path
            .node_indices()
            .into_iter()
            .map(|(s, j)| energy(metric, self.path.x(s, j), self.path.y(s, j)))
            .collect::<Result<Vec<_>>>()?;
        self.energy = Some(e);
        Ok(self)
    }

    /// `max_t |E(t) − E(0)| / E(0)`, or the absolute drift when `E(0) = 0`.
    pub fn energy_drift(&self) -> Option<f64> {
        let e = self.energy.as_ref()?;
        let e0 = e[0];
        let drift = e.iter().fold(0.0f64, |acc, v| acc.max((v - e0).abs()));
        Some(if e0 != 0.0 { drift / e0.abs() } else { drift })
    }

    pub fn report(&self) -> GeodesicReport {
        GeodesicReport {
            steps: self.path.steps(),
            duration: self.path.duration(),
            truncated: self.truncated,
            admissibility_residual: self.path.admissibility_residual(),
            energy_drift: self.energy_drift(),
            x_end: self.path.end_x().to_vec(),
            y_end: last_y(&self.path),
        }
    }
}

fn last_y(path: &APath) -> Vec<f64> {
    let s = path.segments().len() - 1;
    let j = path.segments()[s].nodes() - 1;
    path.y(s, j).to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicReport {
    pub steps: usize,
    pub duration: f64,
    pub truncated: bool,
    pub admissibility_residual: f64,
    pub energy_drift: Option<f64>,
    pub x_end: Vec<f64>,
    pub y_end: Vec<f64>,
}

type Field<'a> = dyn Fn(&[f64], &[f64]) -> Result<(Vec<f64>, Vec<f64>)> + 'a;

/// RK4 for `(x', y') = f(x, y)`. Returns the visited nodes and whether the
/// run was cut short.
fn rk4(
    f: &Field<'_>,
    x0: &[f64],
    y0: &[f64],
    h: f64,
    steps: usize,
    domain: Option<&DomainBox>,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, bool)> {
    if let Some(d) = domain {
        if !d.contains(x0) {
            return Err(Error::InvalidArgument(format!(
                "x0 = {x0:?} lies outside the domain"
            )));
        }
    }
    f(x0, y0)?;
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(u, v)| u + s * v).collect()
    };
    let mut xs = vec![x0.to_vec()];
    let mut ys = vec![y0.to_vec()];
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    for _ in 0..steps {
        let step = || -> Result<(Vec<f64>, Vec<f64>)> {
            let (kx1, ky1) = f(&x, &y)?;
            let (kx2, ky2) = f(&axpy(&x, 0.5 * h, &kx1), &axpy(&y, 0.5 * h, &ky1))?;
            let (kx3, ky3) = f(&axpy(&x, 0.5 * h, &kx2), &axpy(&y, 0.5 * h, &ky2))?;
            let (kx4, ky4) = f(&axpy(&x, h, &kx3), &axpy(&y, h, &ky3))?;
            let comb = |v: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
                (0..v.len())
                    .map(|i| {
                        let inc = k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i];
                        if inc == 0.0 {
                            v[i]
                        } else {
                            v[i] + h / 6.0 * inc
                        }
                    })
                    .collect()
            };
            Ok((
                comb(&x, &kx1, &kx2, &kx3, &kx4),
                comb(&y, &ky1, &ky2, &ky3, &ky4),
            ))
        };
        let (xn, yn) = match step() {
            Ok(next) => next,
            Err(
                Error::Eval { .. }
                | Error::SingularMetric { .. }
                | Error::SingularLagrangian { .. },
            ) => return Ok((xs, ys, true)),
            Err(e) => return Err(e),
        };
        let finite = xn.iter().chain(&yn).all(|v| v.is_finite());
        if !finite || domain.is_some_and(|d| !d.contains(&xn)) {
            return Ok((xs, ys, true));
        }
        x = xn;
        y = yn;
        xs.push(x.clone());
        ys.push(y.clone());
    }
    Ok((xs, ys, false))
}

fn finish(
    alg: &LieAlgebroid,
    h: f64,
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
    truncated: bool,
) -> Result<GeodesicResult> {
    if xs.len() < 2 {
        return Err(Error::InvalidPath(
            "geodesic leaves the domain within the first step".into(),
        ));
    }
    let duration = h * (xs.len() - 1) as f64;
    Ok(GeodesicResult {
        path: path_from_samples(alg, duration, xs, ys)?,
        energy: None,
        truncated,
    })
}

fn check_start(alg: &LieAlgebroid, x0: &[f64], y0: &[f64], t_end: f64, steps: usize) -> Result<()> {
    if x0.len() != alg.base_dim() || y0.len() != alg.rank() {
        return Err(Error::Dimension(format!(
            "initial point needs {} base and {} fiber coordinates",
            alg.base_dim(),
            alg.rank()
        )));
    }
    if steps < 2 || !(t_end > 0.0) {
        return Err(Error::InvalidArgument(
            "need at least two steps and a positive duration".into(),
        ));
    }
    Ok(())
}

/// Integrate the geodesic through `(x0, y0)` over `[0, t_end]` with
/// `steps` RK4 steps.
pub fn integrate_geodesic(
    alg: &LieAlgebroid,
    conn: &AConnection,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    steps: usize,
    domain: Option<&DomainBox>,
) -> Result<GeodesicResult> {
    check_start(alg, x0, y0, t_end, steps)?;
    let m = alg.rank();
    if conn.bundle_rank() != m || conn.direction_rank() != m {
        return Err(Error::NotLinear {
            k: conn.bundle_rank(),
            m,
        });
    }
    let field = |x: &[f64], y: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let dx = alg.push_forward(x, y)?;
        let gamma = conn.coefficients_at(alg, x)?;
        let dy = (0..m)
            .map(|a| {
                let mut s = 0.0;
                for b in 0..m {
                    if y[b] == 0.0 {
                        continue;
                    }
                    for c in 0..m {
                        s += gamma[(a * m + b) * m + c] * y[b] * y[c];
                    }
                }
                -s
            })
            .collect();
        Ok((dx, dy))
    };
    let h = t_end / steps as f64;
    let (xs, ys, truncated) = rk4(&field, x0, y0, h, steps, domain)?;
    finish(alg, h, xs, ys, truncated)
}

/// Integral curve of the energy spray `S = ρ_a^i y^a ∂_{x^i} − 2 G^a ∂_{y^a}`.
pub fn integrate_spray(
    spray: &SprayCoefficients,
    alg: &LieAlgebroid,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    steps: usize,
    domain: Option<&DomainBox>,
) -> Result<GeodesicResult> {
    check_start(alg, x0, y0, t_end, steps)?;
    let field = |x: &[f64], y: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let dx = alg.push_forward(x, y)?;
        let dy = spray.g(x, y)?.into_iter().map(|g| -2.0 * g).collect();
        Ok((dx, dy))
    };
    let h = t_end / steps as f64;
    let (xs, ys, truncated) = rk4(&field, x0, y0, h, steps, domain)?;
    finish(alg, h, xs, ys, truncated)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprayComparison {
    pub steps: usize,
    /// Largest `|x_geo − x_spray|` over common nodes.
    pub max_base_distance: f64,
    /// Largest `|y_geo − y_spray|` over common nodes.
    pub max_fiber_distance: f64,
    pub max_distance: f64,
    pub truncated: bool,
}

/// Integrate the Levi-Civita geodesic system and the energy spray flow from
/// the same initial point and compare them node by node.
pub fn spray_vs_geodesic_check(
    alg: &LieAlgebroid,
    metric: &RiemannMetric,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    steps: usize,
    domain: Option<&DomainBox>,
) -> Result<SprayComparison> {
    let spray = SprayCoefficients::energy(alg, metric);
    let geo = integrate_geodesic(alg, spray.connection(), x0, y0, t_end, steps, domain)?;
    let flow = integrate_spray(&spray, alg, x0, y0, t_end, steps, domain)?;
    let (a, b) = (&geo.path, &flow.path);
    let (mut dx, mut dy) = (0.0f64, 0.0f64);
    for ((s1, j1), (s2, j2)) in a.node_indices().into_iter().zip(b.node_indices()) {
        for (u, v) in a.x(s1, j1).iter().zip(b.x(s2, j2)) {
            dx = dx.max((u - v).abs());
        }
        for (u, v) in a.y(s1, j1).iter().zip(b.y(s2, j2)) {
            dy = dy.max((u - v).abs());
        }
    }
    Ok(SprayComparison {
        steps: a.steps().min(b.steps()),
        max_base_distance: dx,
        max_fiber_distance: dy,
        max_distance: dx.max(dy),
        truncated: geo.truncated || flow.truncated,
    })
}

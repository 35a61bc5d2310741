use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::loops::{
    generate_loops, holonomy_matrices, Coherence, LoopOptions, SampleSource, SkippedLoop,
};
use super::serialize_matrix;
use super::spd::{invariant_spd_search, isometry_defect, orthogonality_defect, NULL_EPS};
use crate::algebroid::LieAlgebroid;
use crate::connection::AConnection;
use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::transport::{lift_base_path, transport_map, Segment};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOptions {
    /// Lattice spacing around `x0`.
    pub spacing: f64,
    /// Lattice half-width in nodes: offsets run over `-radius..=radius`.
    pub radius: usize,
    /// RK4 steps per probe path.
    pub steps: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            spacing: 0.01,
            radius: 3,
            steps: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub offset: Vec<i64>,
    pub x: Vec<f64>,
    /// Metric propagated along the straight segment from `x0`; `None` if
    /// the segment cannot be lifted.
    pub g: Option<DMatrix<f64>>,
    /// Relative difference to the metric propagated along axis-parallel
    /// legs, where both exist.
    pub discrepancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub x0: Vec<f64>,
    pub probes: Vec<Probe>,
    /// Largest radial vs. axis-leg discrepancy.
    pub consistency_residual: f64,
    /// Largest local compatibility residual with derivatives of the
    /// tabulated metric by five-point central differences; `None` if no
    /// probe has the neighbors needed.
    pub compatibility_residual: Option<f64>,
    /// Number of (probe, direction) pairs where compatibility was checked.
    pub checked: usize,
    /// Base axes (0-based) along which no neighbor of `x0` is reachable.
    pub untested_axes: Vec<usize>,
}

impl Reconstruction {
    pub fn reachable(&self) -> usize {
        self.probes.iter().filter(|p| p.g.is_some()).count()
    }
}

fn transport_along_segment(
    conn: &AConnection,
    alg: &LieAlgebroid,
    from: &[f64],
    to: &[f64],
    steps: usize,
) -> Option<DMatrix<f64>> {
    if from == to {
        return Some(DMatrix::identity(conn.bundle_rank(), conn.bundle_rank()));
    }
    let seg = Segment {
        from: from.to_vec(),
        to: to.to_vec(),
        duration: 1.0,
    };
    let path = lift_base_path(alg, &seg, steps).ok()?;
    transport_map(conn, alg, &path).ok().map(|m| m.matrix)
}

fn pushed_metric(g0: &DMatrix<f64>, p: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = p.clone().try_inverse()?;
    Some(inv.transpose() * g0 * inv)
}

fn relative_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(f64::MIN_POSITIVE);
    (a - b).amax() / scale
}

/// Propagate `g0` from `x0` to a lattice of probes by parallel transport,
/// `g(p) = P⁻ᵀ g0 P⁻¹`, and measure how far the result is from being
/// parallel.
pub fn reconstruct_metric(
    conn: &AConnection,
    alg: &LieAlgebroid,
    g0: &DMatrix<f64>,
    x0: &[f64],
    opts: &ProbeOptions,
    domain: Option<&DomainBox>,
) -> Result<Reconstruction> {
    let (n, m, k) = (alg.base_dim(), alg.rank(), conn.bundle_rank());
    if g0.nrows() != k || g0.ncols() != k {
        return Err(Error::Dimension(format!("initial form must be {k}×{k}")));
    }
    let r = opts.radius as i64;
    let width = (2 * r + 1) as usize;
    let mut offsets: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..n {
        offsets = offsets
            .into_iter()
            .flat_map(|o| {
                (-r..=r).map(move |j| {
                    let mut q = o.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    let index_of = |off: &[i64]| -> Option<usize> {
        let mut idx = 0usize;
        for &j in off {
            if j.abs() > r {
                return None;
            }
            idx = idx * width + (j + r) as usize;
        }
        Some(idx)
    };
    let point = |off: &[i64]| -> Vec<f64> {
        x0.iter()
            .zip(off)
            .map(|(x, &j)| x + opts.spacing * j as f64)
            .collect()
    };

    let probes: Vec<Probe> = offsets
        .par_iter()
        .map(|off| {
            let x = point(off);
            let inside = domain.is_none_or(|d| d.contains(&x));
            let g = inside
                .then(|| transport_along_segment(conn, alg, x0, &x, opts.steps))
                .flatten()
                .and_then(|p| pushed_metric(g0, &p));
            let nonzero: Vec<usize> = (0..n).filter(|&i| off[i] != 0).collect();
            let discrepancy = match (&g, nonzero.len() >= 2) {
                (Some(g_rad), true) => {
                    let mut at = x0.to_vec();
                    let mut total = Some(DMatrix::identity(k, k));
                    for &i in &nonzero {
                        let mut next = at.clone();
                        next[i] = x[i];
                        total = total.and_then(|acc| {
                            transport_along_segment(conn, alg, &at, &next, opts.steps)
                                .map(|p| p * acc)
                        });
                        at = next;
                    }
                    total
                        .and_then(|p| pushed_metric(g0, &p))
                        .map(|g_axis| relative_diff(&g_axis, g_rad))
                }
                _ => None,
            };
            Probe {
                offset: off.clone(),
                x,
                g,
                discrepancy,
            }
        })
        .collect();

    let consistency_residual = probes
        .iter()
        .filter_map(|p| p.discrepancy)
        .fold(0.0f64, f64::max);

    // local compatibility ρ_a(g) − Γ_aᵀ g − g Γ_a at probes with full stencils
    let h = opts.spacing;
    let mut compat: Option<f64> = None;
    let mut checked = 0usize;
    for probe in &probes {
        let Some(g) = &probe.g else { continue };
        let rho = alg.anchor_at(&probe.x)?;
        let gamma = conn.coefficients_at(alg, &probe.x)?;
        let rho_max = rho.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        'dirs: for a in 0..m {
            let mut drho_g = DMatrix::zeros(k, k);
            for i in 0..n {
                let c = rho[a * n + i];
                if c.abs() <= 1e-12 * rho_max.max(1.0) {
                    continue;
                }
                let mut stencil = Vec::with_capacity(4);
                for s in [-2i64, -1, 1, 2] {
                    let mut off = probe.offset.clone();
                    off[i] += s;
                    match index_of(&off).and_then(|idx| probes[idx].g.as_ref()) {
                        Some(gs) => stencil.push(gs),
                        None => continue 'dirs,
                    }
                }
                let d =
                    (stencil[0] - stencil[1] * 8.0 + stencil[2] * 8.0 - stencil[3]) / (12.0 * h);
                drho_g += d * c;
            }
            let ga = DMatrix::from_fn(k, k, |beta, alpha| gamma[(beta * k + alpha) * m + a]);
            let res = drho_g - ga.transpose() * g - g * &ga;
            compat = Some(compat.unwrap_or(0.0).max(res.amax()));
            checked += 1;
        }
    }

    let untested_axes = (0..n)
        .filter(|&i| {
            [-1i64, 1].iter().all(|&s| {
                let mut off = vec![0; n];
                off[i] = s;
                index_of(&off).is_none_or(|idx| probes[idx].g.is_none())
            })
        })
        .collect();

    Ok(Reconstruction {
        x0: x0.to_vec(),
        probes,
        consistency_residual,
        compatibility_residual: compat,
        checked,
        untested_axes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetrizeOptions {
    pub loops: LoopOptions,
    pub probes: ProbeOptions,
    pub null_eps: f64,
    /// `| |det H| − 1 |` above this is a determinant certificate.
    pub det_tolerance: f64,
    /// Bound on the reconstruction residuals for a Metrizable verdict.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for MetrizeOptions {
    fn default() -> Self {
        MetrizeOptions {
            loops: LoopOptions::default(),
            probes: ProbeOptions::default(),
            null_eps: NULL_EPS,
            det_tolerance: 1e-6,
            tolerance: 1e-5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Certificate {
    /// A sampled holonomy matrix with `|det H| ≠ 1`; isometries of any
    /// scalar product have determinant `±1`.
    Determinant {
        entry: usize,
        source: SampleSource,
        determinant: f64,
    },
    /// No positive definite form is invariant under the listed entries.
    NoInvariantForm {
        entries: Vec<usize>,
        null_dim: usize,
        best_min_eigenvalue: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Metrizable {
        /// Invariant form at `x0`, unit trace.
        #[serde(serialize_with = "serialize_matrix")]
        g0: DMatrix<f64>,
        consistency_residual: f64,
        compatibility_residual: Option<f64>,
        reachable_probes: usize,
        probes: usize,
        /// `max ‖HᵀG H − G‖` over the sample.
        isometry_defect: f64,
        /// `max ‖QᵀQ − I‖` for the Cholesky-conjugated sample.
        orthogonality_defect: f64,
        /// Base coordinates no probe path could move along.
        untested_directions: Vec<String>,
    },
    NotMetrizable {
        certificate: Certificate,
    },
    Inconclusive {
        reason: String,
        untested_directions: Vec<String>,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Metrizable { .. } => "metrizable",
            Verdict::NotMetrizable { .. } => "not_metrizable",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetrizeReport {
    pub x0: Vec<f64>,
    pub seed: u64,
    pub loops: usize,
    pub skipped_loops: Vec<SkippedLoop>,
    pub sample_size: usize,
    pub coherence: Option<Coherence>,
    pub verdict: Verdict,
}

/// Report plus the tabulated metric behind a Metrizable verdict.
#[derive(Debug, Clone)]
pub struct MetrizeOutcome {
    pub report: MetrizeReport,
    pub reconstruction: Option<Reconstruction>,
}

fn axis_names(axes: &[usize]) -> Vec<String> {
    axes.iter().map(|i| format!("x{}", i + 1)).collect()
}

/// Decide whether `conn` preserves some fiber metric near `x0`.
///
/// Loops → holonomy sample → determinant certificate → invariant form
/// search → reconstruction by transport. A form that survives
/// reconstruction gives Metrizable. When no coordinate-plane loop at `x0`
/// can be lifted and some base direction is unreachable, the base
/// holonomy is unsampled and the verdict is Inconclusive.
pub fn metrizability_test(
    conn: &AConnection,
    alg: &LieAlgebroid,
    x0: &[f64],
    opts: &MetrizeOptions,
    domain: Option<&DomainBox>,
) -> Result<MetrizeOutcome> {
    let report = |loops, skipped_loops, sample_size, coherence, verdict| MetrizeReport {
        x0: x0.to_vec(),
        seed: opts.seed,
        loops,
        skipped_loops,
        sample_size,
        coherence,
        verdict,
    };
    let family = match generate_loops(alg, x0, &opts.loops, domain) {
        Ok(f) => f,
        Err(Error::EmptyFamily { .. }) => {
            let verdict = Verdict::Inconclusive {
                reason: "no loop at x0: no coordinate-plane loop is liftable and the anchor kernel is trivial".into(),
                untested_directions: axis_names(&(0..alg.base_dim()).collect::<Vec<_>>()),
            };
            return Ok(MetrizeOutcome {
                report: report(0, Vec::new(), 0, None, verdict),
                reconstruction: None,
            });
        }
        Err(e) => return Err(e),
    };
    let sample = holonomy_matrices(conn, alg, &family, opts.loops.max_generators)?;
    let coherence = Some(sample.coherence());
    let finish = |verdict, reconstruction| {
        Ok(MetrizeOutcome {
            report: report(
                family.loops.len(),
                family.skipped.clone(),
                sample.matrices.len(),
                coherence,
                verdict,
            ),
            reconstruction,
        })
    };

    let (entry, det) = sample.worst_determinant();
    if (det.abs() - 1.0).abs() > opts.det_tolerance {
        let certificate = Certificate::Determinant {
            entry,
            source: sample.sources[entry].clone(),
            determinant: det,
        };
        return finish(Verdict::NotMetrizable { certificate }, None);
    }

    let search = invariant_spd_search(&sample.matrices, opts.null_eps, opts.seed)?;
    let Some(g0) = search.form else {
        let single = (0..sample.matrices.len()).find(|&i| {
            invariant_spd_search(&sample.matrices[i..=i], opts.null_eps, opts.seed)
                .map(|s| s.form.is_none())
                .unwrap_or(false)
        });
        let entries = match single {
            Some(i) => vec![i],
            None => (0..sample.matrices.len()).collect(),
        };
        let certificate = Certificate::NoInvariantForm {
            entries,
            null_dim: search.null_dim,
            best_min_eigenvalue: search.best_min_eigenvalue,
        };
        return finish(Verdict::NotMetrizable { certificate }, None);
    };

    let rec = reconstruct_metric(conn, alg, &g0, x0, &opts.probes, domain)?;
    let untested = axis_names(&rec.untested_axes);
    let compat_ok = rec
        .compatibility_residual
        .is_none_or(|r| r <= opts.tolerance);
    if rec.consistency_residual > opts.tolerance || !compat_ok {
        let reason = format!(
            "invariant form found but reconstruction residuals exceed {:e} (consistency {:e}, compatibility {:?}): holonomy sampled too sparsely",
            opts.tolerance, rec.consistency_residual, rec.compatibility_residual
        );
        return finish(
            Verdict::Inconclusive {
                reason,
                untested_directions: untested,
            },
            Some(rec),
        );
    }
    if !family.has_base_loops() && !rec.untested_axes.is_empty() {
        let reason = format!(
            "anchor image at x0 too small to propagate the metric: no coordinate-plane loop is liftable, so base holonomy is unsampled; untested directions {}",
            untested.join(", ")
        );
        return finish(
            Verdict::Inconclusive {
                reason,
                untested_directions: untested,
            },
            Some(rec),
        );
    }
    let verdict = Verdict::Metrizable {
        isometry_defect: isometry_defect(&sample.matrices, &g0).1,
        orthogonality_defect: orthogonality_defect(&sample.matrices, &g0).unwrap_or(f64::INFINITY),
        consistency_residual: rec.consistency_residual,
        compatibility_residual: rec.compatibility_residual,
        reachable_probes: rec.reachable(),
        probes: rec.probes.len(),
        untested_directions: untested,
        g0,
    };
    finish(verdict, Some(rec))
}

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebroid::LieAlgebroid;
use crate::connection::AConnection;
use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::linalg;
use crate::transport::{lift_base_path, make_vertical_path, transport_map, APath, Polyline};

/// Side lengths of the rectangle loops.
pub const DEFAULT_SCALES: [f64; 4] = [0.05, 0.1, 0.2, 0.4];

/// How a loop of the family was built. Indices refer to
/// [`LoopFamily::loops`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoopKind {
    /// Counterclockwise square in the coordinate plane `(axes[0], axes[1])`
    /// (0-based) with corner `x0`.
    Rectangle {
        axes: [usize; 2],
        scale: f64,
    },
    /// Vertical loop with `y(t) = scale · sin(2πt) · v`, `v` the kernel
    /// basis vector `direction`.
    VerticalSine {
        direction: usize,
        scale: f64,
    },
    /// Vertical loop with constant `y(t) = scale · v`.
    VerticalConstant {
        direction: usize,
        scale: f64,
    },
    Reverse {
        of: usize,
    },
    /// `first` followed by `second`.
    Concat {
        first: usize,
        second: usize,
    },
}

impl LoopKind {
    pub fn is_generator(&self) -> bool {
        !matches!(self, LoopKind::Reverse { .. } | LoopKind::Concat { .. })
    }

    pub fn is_base_loop(&self) -> bool {
        matches!(self, LoopKind::Rectangle { .. })
    }
}

/// A rectangle that could not be used, and why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedLoop {
    pub axes: [usize; 2],
    pub scale: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopOptions {
    pub scales: Vec<f64>,
    /// RK4 steps per loop (every loop lasts one time unit).
    pub steps: usize,
    /// Generators entering concatenations and pairwise products.
    pub max_generators: usize,
}

impl Default for LoopOptions {
    fn default() -> Self {
        LoopOptions {
            scales: DEFAULT_SCALES.to_vec(),
            steps: 1000,
            max_generators: 6,
        }
    }
}

/// Loops based at `x0`, with construction metadata.
#[derive(Debug, Clone)]
pub struct LoopFamily {
    pub x0: Vec<f64>,
    pub loops: Vec<APath>,
    pub kinds: Vec<LoopKind>,
    pub skipped: Vec<SkippedLoop>,
    /// Basis of `ker ρ(x0)` used for the vertical loops.
    pub kernel: Vec<Vec<f64>>,
}

impl LoopFamily {
    pub fn has_base_loops(&self) -> bool {
        self.kinds.iter().any(LoopKind::is_base_loop)
    }

    fn generators(&self, limit: usize) -> Vec<usize> {
        (0..self.kinds.len())
            .filter(|&i| self.kinds[i].is_generator())
            .take(limit)
            .collect()
    }
}

/// Basis of `ker ρ(x0)`; every fiber direction when the base is a point.
pub fn anchor_kernel(alg: &LieAlgebroid, x0: &[f64]) -> Result<Vec<Vec<f64>>> {
    let m = alg.rank();
    if alg.base_dim() == 0 {
        return Ok((0..m)
            .map(|a| (0..m).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
            .collect());
    }
    let a = alg.anchor_matrix(x0)?;
    let ns = linalg::null_space(&a, 1e-10);
    Ok(ns
        .column_iter()
        .map(|c| {
            // sign convention: first nonzero entry positive
            let s = c
                .iter()
                .find(|v| v.abs() > 1e-12)
                .map_or(1.0, |v| v.signum());
            c.iter()
                .map(|v| if *v * s == 0.0 { 0.0 } else { v * s })
                .collect()
        })
        .collect())
}

/// Rectangles in every coordinate plane at every scale (skipping those the
/// anchor cannot lift or that leave `domain`), vertical loops along a
/// kernel basis, reverses of all of them, and concatenations of
/// consecutive generators.
pub fn generate_loops(
    alg: &LieAlgebroid,
    x0: &[f64],
    opts: &LoopOptions,
    domain: Option<&DomainBox>,
) -> Result<LoopFamily> {
    let n = alg.base_dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "x0 has {} coordinates, base dimension is {n}",
            x0.len()
        )));
    }
    if let Some(d) = domain {
        if !d.contains(x0) {
            return Err(Error::InvalidArgument(format!(
                "x0 = {x0:?} lies outside the domain"
            )));
        }
    }
    let mut loops = Vec::new();
    let mut kinds = Vec::new();
    let mut skipped = Vec::new();

    let mut planes = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for &s in &opts.scales {
                planes.push(([i, j], s));
            }
        }
    }
    let lifted: Vec<Result<APath>> = planes
        .par_iter()
        .map(|&([i, j], s)| {
            let rect = Polyline::rectangle(x0.to_vec(), (i, j), (s, s), 1.0);
            if let Some(d) = domain {
                if let Some(v) = rect.vertices.iter().find(|v| !d.contains(v)) {
                    return Err(Error::InvalidPath(format!(
                        "corner {v:?} leaves the domain"
                    )));
                }
            }
            lift_base_path(alg, &rect, opts.steps)
        })
        .collect();
    for (&(axes, scale), res) in planes.iter().zip(lifted) {
        match res {
            Ok(path) => {
                loops.push(path);
                kinds.push(LoopKind::Rectangle { axes, scale });
            }
            Err(e @ (Error::NotLiftable { .. } | Error::InvalidPath(_) | Error::Eval { .. })) => {
                skipped.push(SkippedLoop {
                    axes,
                    scale,
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }

    let kernel = anchor_kernel(alg, x0)?;
    for (direction, v) in kernel.iter().enumerate() {
        for &scale in &opts.scales {
            let sine = make_vertical_path(
                alg,
                x0,
                |t| v.iter().map(|c| scale * (TAU * t).sin() * c).collect(),
                1.0,
                opts.steps,
            )?;
            loops.push(sine);
            kinds.push(LoopKind::VerticalSine { direction, scale });
            let constant = make_vertical_path(
                alg,
                x0,
                |_| v.iter().map(|c| scale * c).collect(),
                1.0,
                opts.steps,
            )?;
            loops.push(constant);
            kinds.push(LoopKind::VerticalConstant { direction, scale });
        }
    }
    if loops.is_empty() {
        return Err(Error::EmptyFamily { x0: x0.to_vec() });
    }

    let base_count = loops.len();
    for of in 0..base_count {
        loops.push(loops[of].reversed());
        kinds.push(LoopKind::Reverse { of });
    }
    let family = LoopFamily {
        x0: x0.to_vec(),
        loops,
        kinds,
        skipped,
        kernel,
    };
    let gens = family.generators(opts.max_generators);
    let mut family = family;
    for w in gens.windows(2) {
        let joined = family.loops[w[0]].then(&family.loops[w[1]])?;
        family.loops.push(joined);
        family.kinds.push(LoopKind::Concat {
            first: w[0],
            second: w[1],
        });
    }
    Ok(family)
}

/// Where a sampled holonomy matrix came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SampleSource {
    /// Transport around loop `index` of the family.
    Loop { index: usize, kind: LoopKind },
    /// `H_left · H_right`, i.e. loop `right` followed by loop `left`.
    Product { left: usize, right: usize },
}

/// A finite sample of the holonomy group at `x0`.
#[derive(Debug, Clone)]
pub struct HolonomySample {
    pub x0: Vec<f64>,
    pub sources: Vec<SampleSource>,
    pub matrices: Vec<DMatrix<f64>>,
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
}

/// Transport around every loop (in parallel), plus pairwise products of
/// the first generators.
pub fn holonomy_matrices(
    conn: &AConnection,
    alg: &LieAlgebroid,
    family: &LoopFamily,
    max_generators: usize,
) -> Result<HolonomySample> {
    if family.loops.is_empty() {
        return Err(Error::EmptySample);
    }
    let maps: Vec<DMatrix<f64>> = family
        .loops
        .par_iter()
        .map(|p| transport_map(conn, alg, p).map(|m| m.matrix))
        .collect::<Result<_>>()?;
    let mut sources: Vec<SampleSource> = family
        .kinds
        .iter()
        .enumerate()
        .map(|(index, kind)| SampleSource::Loop {
            index,
            kind: kind.clone(),
        })
        .collect();
    let mut matrices = maps;
    let gens = family.generators(max_generators);
    for &l in &gens {
        for &r in &gens {
            if l != r {
                sources.push(SampleSource::Product { left: l, right: r });
                matrices.push(&matrices[l] * &matrices[r]);
            }
        }
    }
    Ok(HolonomySample {
        x0: family.x0.clone(),
        sources,
        matrices,
    })
}

/// Largest deviations from the group laws recorded in a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coherence {
    /// `max ‖H_{first then second} − H_second H_first‖`
    pub composition: f64,
    /// `max ‖H_{reverse} H − I‖`
    pub inverse: f64,
}

impl HolonomySample {
    pub fn rank(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn coherence(&self) -> Coherence {
        let mut c = Coherence {
            composition: 0.0,
            inverse: 0.0,
        };
        let k = self.rank();
        for (src, h) in self.sources.iter().zip(&self.matrices) {
            if let SampleSource::Loop { kind, .. } = src {
                match kind {
                    LoopKind::Reverse { of } => {
                        let prod = h * &self.matrices[*of];
                        c.inverse = c.inverse.max(max_abs_diff(&prod, &DMatrix::identity(k, k)));
                    }
                    LoopKind::Concat { first, second } => {
                        let prod = &self.matrices[*second] * &self.matrices[*first];
                        c.composition = c.composition.max(max_abs_diff(h, &prod));
                    }
                    _ => {}
                }
            }
        }
        c
    }

    /// Entry with the largest `| |det H| − 1 |`.
    pub fn worst_determinant(&self) -> (usize, f64) {
        let dets: Vec<f64> = self.matrices.iter().map(|h| h.determinant()).collect();
        let defect = |d: f64| (d.abs() - 1.0).abs();
        let mut worst = 0;
        for (i, &d) in dets.iter().enumerate() {
            if defect(d) > defect(dets[worst]) {
                worst = i;
            }
        }
        (worst, dets[worst])
    }

    pub fn matrix_rows(&self) -> Vec<Vec<Vec<f64>>> {
        self.matrices
            .iter()
            .map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect())
            .collect()
    }
}

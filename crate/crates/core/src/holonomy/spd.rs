use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Default relative singular-value cutoff for the invariance null space.
pub const NULL_EPS: f64 = 1e-8;
/// A unit-Frobenius form counts as positive definite above this
/// minimum eigenvalue.
pub const PD_THRESHOLD: f64 = 1e-8;

const RESTARTS: usize = 3;
const ITERATIONS: usize = 400;

/// Orthonormal (Frobenius) basis of the symmetric `k×k` matrices.
fn sym_basis(k: usize) -> Vec<DMatrix<f64>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    for i in 0..k {
        for j in i..k {
            let mut b = DMatrix::zeros(k, k);
            if i == j {
                b[(i, i)] = 1.0;
            } else {
                b[(i, j)] = r;
                b[(j, i)] = r;
            }
            out.push(b);
        }
    }
    out
}

/// Coordinates of a symmetric matrix in [`sym_basis`].
fn sym_coords(g: &DMatrix<f64>) -> DVector<f64> {
    let k = g.nrows();
    let s = std::f64::consts::SQRT_2;
    let mut v = Vec::with_capacity(k * (k + 1) / 2);
    for i in 0..k {
        for j in i..k {
            v.push(if i == j {
                g[(i, i)]
            } else {
                s * 0.5 * (g[(i, j)] + g[(j, i)])
            });
        }
    }
    DVector::from_vec(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpdSearch {
    /// Invariant positive definite form normalized to unit trace.
    #[serde(serialize_with = "crate::holonomy::serialize_opt_matrix")]
    pub form: Option<DMatrix<f64>>,
    /// Dimension of the space of invariant symmetric forms.
    pub null_dim: usize,
    /// Best minimum eigenvalue found over unit-Frobenius invariant forms
    /// (`None` when only the zero form is invariant).
    pub best_min_eigenvalue: Option<f64>,
}

/// Search the symmetric forms `G` with `HᵀGH = G` for every `H` in
/// `sample` for a positive definite one.
///
/// The invariant forms are the numerical null space of the stacked maps
/// `G ↦ HᵀGH − G`. Over the unit sphere of that space the minimum
/// eigenvalue is maximized by projected subgradient ascent, started from
/// the projection of the identity and from `3` seeded random points.
pub fn invariant_spd_search(sample: &[DMatrix<f64>], eps: f64, seed: u64) -> Result<SpdSearch> {
    let k = sample.first().ok_or(Error::EmptySample)?.nrows();
    let basis = sym_basis(k);
    let d = basis.len();
    let mut op = DMatrix::zeros(sample.len() * d, d);
    for (s, h) in sample.iter().enumerate() {
        for (q, b) in basis.iter().enumerate() {
            let img = h.transpose() * b * h - b;
            op.view_mut((s * d, q), (d, 1)).copy_from(&sym_coords(&img));
        }
    }
    let null = linalg::null_space(&op, eps);
    let r = null.ncols();
    if r == 0 {
        return Ok(SpdSearch {
            form: None,
            null_dim: 0,
            best_min_eigenvalue: None,
        });
    }
    let form_of = |c: &DVector<f64>| -> DMatrix<f64> {
        let coords = &null * c;
        let mut g = DMatrix::zeros(k, k);
        for (q, b) in basis.iter().enumerate() {
            g += b * coords[q];
        }
        g
    };
    let score = |c: &DVector<f64>| linalg::min_eigenvalue(&form_of(c));

    let mut starts = Vec::with_capacity(RESTARTS + 1);
    let proj = null.transpose() * sym_coords(&DMatrix::identity(k, k));
    if proj.norm() > 1e-12 {
        starts.push(proj.normalize());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RESTARTS {
        let v = DVector::from_iterator(r, (0..r).map(|_| rng.random_range(-1.0..1.0)));
        starts.push(if v.norm() > 0.0 {
            v.normalize()
        } else {
            DVector::from_element(r, 1.0).normalize()
        });
    }

    let mut best: Option<(f64, DVector<f64>)> = None;
    for start in starts {
        let (value, c) = if r == 1 {
            let c = DVector::from_element(1, 1.0);
            let (a, b) = (score(&c), score(&(-&c)));
            if a >= b {
                (a, c)
            } else {
                (b, -c)
            }
        } else {
            ascend(&null, &basis, start, &score)
        };
        // strict improvement keeps the identity-projected start on ties
        if best.as_ref().is_none_or(|(v, _)| value > *v + 1e-12) {
            best = Some((value, c));
        }
    }
    let (value, c) = best.expect("at least one start");
    let form = (value > PD_THRESHOLD).then(|| {
        let g = form_of(&c);
        let g = (&g + g.transpose()) * 0.5;
        let tr = g.trace();
        g / tr
    });
    Ok(SpdSearch {
        form,
        null_dim: r,
        best_min_eigenvalue: Some(value),
    })
}

fn ascend(
    null: &DMatrix<f64>,
    basis: &[DMatrix<f64>],
    start: DVector<f64>,
    score: &dyn Fn(&DVector<f64>) -> f64,
) -> (f64, DVector<f64>) {
    let k = basis[0].nrows();
    let mut c = start;
    let mut best = (score(&c), c.clone());
    for it in 0..ITERATIONS {
        let coords = null * &c;
        let mut g = DMatrix::zeros(k, k);
        for (q, b) in basis.iter().enumerate() {
            g += b * coords[q];
        }
        let (_, vecs) = linalg::symmetric_eigen(&g);
        let v = vecs.column(0);
        // d λ_min / d c_j = vᵀ N_j v
        let grad = DVector::from_iterator(
            c.len(),
            (0..c.len()).map(|j| {
                let col = null.column(j);
                let mut nj = DMatrix::zeros(k, k);
                for (q, b) in basis.iter().enumerate() {
                    nj += b * col[q];
                }
                (v.transpose() * nj * v)[(0, 0)]
            }),
        );
        let tangent = &grad - &c * c.dot(&grad);
        if tangent.norm() < 1e-14 {
            break;
        }
        let step = 0.5 / (1.0 + it as f64).sqrt();
        c = (&c + tangent * step).normalize();
        let value = score(&c);
        if value > best.0 {
            best = (value, c.clone());
        }
    }
    best
}

/// `‖HᵀGH − G‖_∞` over the sample, with the worst index.
pub fn isometry_defect(sample: &[DMatrix<f64>], g: &DMatrix<f64>) -> (usize, f64) {
    let mut worst = (0, 0.0f64);
    for (i, h) in sample.iter().enumerate() {
        let d = linalg::max_abs(&(h.transpose() * g * h - g));
        if d > worst.1 {
            worst = (i, d);
        }
    }
    worst
}

/// `max ‖QᵀQ − I‖_∞` for `Q = C H C⁻¹`, `G = CᵀC`; `None` if `G` is not
/// positive definite.
pub fn orthogonality_defect(sample: &[DMatrix<f64>], g: &DMatrix<f64>) -> Option<f64> {
    let c = linalg::cholesky_upper(g)?;
    let c_inv = c.clone().try_inverse()?;
    let k = g.nrows();
    Some(sample.iter().fold(0.0f64, |acc, h| {
        let q = &c * h * &c_inv;
        acc.max(linalg::max_abs(
            &(q.transpose() * &q - DMatrix::identity(k, k)),
        ))
    }))
}

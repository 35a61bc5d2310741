//! Sampled holonomy at a base point and the metrizability test.
//!
//! The holonomy group is never computed exhaustively. A [`LoopFamily`]
//! fixes the generators (coordinate-plane squares at a ladder of scales,
//! vertical loops along the anchor kernel, their reverses and some
//! concatenations); [`HolonomySample`] holds their transport matrices and
//! pairwise products.
//!
//! A connection preserving a fiber metric `g` has all transports isometric,
//! so every `H` in the sample satisfies `HᵀgH = g` and `|det H| = 1`.
//! [`metrizability_test`] looks for such a form at `x0` and then propagates
//! it by transport to check it is parallel nearby.

mod loops;
mod metrize;
mod spd;

pub use loops::{
    anchor_kernel, generate_loops, holonomy_matrices, Coherence, HolonomySample, LoopFamily,
    LoopKind, LoopOptions, SampleSource, SkippedLoop, DEFAULT_SCALES,
};
pub use metrize::{
    metrizability_test, reconstruct_metric, Certificate, MetrizeOptions, MetrizeOutcome,
    MetrizeReport, Probe, ProbeOptions, Reconstruction, Verdict,
};
pub use spd::{
    invariant_spd_search, isometry_defect, orthogonality_defect, SpdSearch, NULL_EPS, PD_THRESHOLD,
};

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

/// Result of [`isometry_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsometryReport {
    pub max_defect: f64,
    pub worst_entry: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// `max ‖HᵀgH − g‖_∞` over the sample against `g`, the metric at `x0`.
pub fn isometry_check(sample: &HolonomySample, g: &DMatrix<f64>, tol: f64) -> IsometryReport {
    let (worst_entry, max_defect) = isometry_defect(&sample.matrices, g);
    IsometryReport {
        max_defect,
        worst_entry,
        tolerance: tol,
        pass: max_defect <= tol,
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn serialize_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    rows(m).serialize(s)
}

pub(crate) fn serialize_opt_matrix<S: Serializer>(
    m: &Option<DMatrix<f64>>,
    s: S,
) -> Result<S::Ok, S::Error> {
    m.as_ref().map(rows).serialize(s)
}

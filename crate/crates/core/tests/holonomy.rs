use lieroid::connection::curvature;
use lieroid::holonomy::{
    generate_loops, holonomy_matrices, invariant_spd_search, isometry_check, metrizability_test,
    Certificate, LoopOptions, MetrizeOptions, Verdict, NULL_EPS,
};
use lieroid::linalg::cholesky_upper;
use lieroid::transport::{lift_base_path, transport_map, Circle, Polyline, Segment};
use lieroid::{catalog, AConnection, Problem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const METRIC_EXAMPLES: [&str; 4] = ["euclidean-tm", "distribution", "so3-point", "hyperbolic-tm"];

fn metrize(p: &Problem, seed: u64) -> lieroid::holonomy::MetrizeOutcome {
    let conn = p.effective_connection().unwrap();
    let opts = MetrizeOptions {
        seed,
        ..MetrizeOptions::default()
    };
    metrizability_test(&conn, &p.algebroid, &p.base_point, &opts, Some(&p.domain)).unwrap()
}

#[test]
fn levi_civita_transport_is_isometric_along_open_paths() {
    let p = catalog::load("hyperbolic-tm").unwrap();
    let metric = p.metric.clone().unwrap();
    let conn = AConnection::levi_civita(metric.clone());
    let seg = Segment {
        from: vec![-0.4, 0.7],
        to: vec![0.9, 1.8],
        duration: 1.0,
    };
    let path = lift_base_path(&p.algebroid, &seg, 1000).unwrap();
    let map = transport_map(&conn, &p.algebroid, &path).unwrap();
    let (g0, g1) = (
        metric.matrix(&map.from).unwrap(),
        metric.matrix(&map.to).unwrap(),
    );
    let defect = (map.matrix.transpose() * g1 * &map.matrix - g0).abs().max();
    assert!(defect <= 1e-8, "{defect:e}");
}

#[test]
fn holonomy_of_compatible_pairs_preserves_the_metric() {
    for name in METRIC_EXAMPLES {
        let p = catalog::load(name).unwrap();
        let metric = p.metric.clone().unwrap();
        let conn = AConnection::levi_civita(metric.clone());
        let opts = LoopOptions::default();
        let family = generate_loops(&p.algebroid, &p.base_point, &opts, Some(&p.domain)).unwrap();
        let sample = holonomy_matrices(&conn, &p.algebroid, &family, opts.max_generators).unwrap();
        let r = isometry_check(&sample, &metric.matrix(&p.base_point).unwrap(), 1e-6);
        assert!(r.pass, "{name}: {r:?}");
        let c = sample.coherence();
        assert!(c.composition <= 1e-10 && c.inverse <= 1e-8, "{name}: {c:?}");
    }
}

#[test]
fn small_hyperbolic_square_follows_the_curvature() {
    // H − I ≈ −R_12 s² for a counterclockwise square of side s
    let p = catalog::load("hyperbolic-tm").unwrap();
    let conn = p.effective_connection().unwrap();
    let s = 0.05;
    let rect = Polyline::rectangle(vec![0.0, 1.0], (0, 1), (s, s), 1.0);
    let path = lift_base_path(&p.algebroid, &rect, 1000).unwrap();
    let h = transport_map(&conn, &p.algebroid, &path).unwrap().matrix;
    let r = curvature(&conn, &p.algebroid, &[0.0, 1.0]).unwrap();
    let r12 = DMatrix::from_fn(2, 2, |b, a| r[[b, a, 0, 1]]);
    // Gaussian curvature −1: R^1_{212} = −1/x2²
    assert!((r12[(0, 1)] + 1.0).abs() <= 1e-12 && (r12[(1, 0)] - 1.0).abs() <= 1e-12);
    let predicted = -r12 * (s * s);
    let rel = (&h - DMatrix::identity(2, 2) - &predicted).abs().max() / predicted.abs().max();
    assert!(rel <= 0.1, "relative deviation {rel}");
}

#[test]
fn scaling_holonomy_is_a_matrix_exponential() {
    // A_2 = x1 M, A_1 = 0 with M = I + J/2: only the leg x1 = s contributes,
    // so H = exp(−s² M) = e^{−s²} (cos(s²/2) I − sin(s²/2) J)
    let p = catalog::load("scaling-holonomy").unwrap();
    let conn = p.effective_connection().unwrap();
    for s in [0.05, 0.1, 0.2, 0.4] {
        let rect = Polyline::rectangle(vec![0.0, 0.0], (0, 1), (s, s), 1.0);
        let path = lift_base_path(&p.algebroid, &rect, 1000).unwrap();
        let h = transport_map(&conn, &p.algebroid, &path).unwrap().matrix;
        let (q, e) = (0.5 * s * s, (-s * s).exp());
        let oracle =
            DMatrix::from_row_slice(2, 2, &[e * q.cos(), e * q.sin(), -e * q.sin(), e * q.cos()]);
        assert!(
            (&h - &oracle).abs().max() <= 1e-12,
            "s = {s}: {h} vs {oracle}"
        );
        assert!((h.determinant() - (-2.0 * s * s).exp()).abs() <= 1e-12);
    }
}

#[test]
fn catalog_metrics_are_recovered_from_their_levi_civita_connections() {
    for name in METRIC_EXAMPLES {
        let p = catalog::load(name).unwrap();
        let metric = p.metric.clone().unwrap();
        let out = metrize(&p, p.seed);
        let Verdict::Metrizable {
            orthogonality_defect,
            ..
        } = out.report.verdict
        else {
            panic!("{name}: {:?}", out.report.verdict);
        };
        assert!(orthogonality_defect <= 1e-6);
        let rec = out.reconstruction.unwrap();
        assert!(rec.reachable() > 0);
        for probe in rec.probes.iter().filter(|pr| pr.g.is_some()) {
            let g = probe.g.as_ref().unwrap();
            let truth = metric.matrix(&probe.x).unwrap();
            let (a, b) = (g / g.trace(), &truth / truth.trace());
            let dev = (&a - &b).abs().max() / b.abs().max();
            assert!(dev <= 1e-5, "{name} at {:?}: {dev:e}", probe.x);
        }
    }
}

#[test]
fn scaling_holonomy_has_a_determinant_certificate() {
    let p = catalog::load("scaling-holonomy").unwrap();
    let out = metrize(&p, p.seed);
    match out.report.verdict {
        Verdict::NotMetrizable {
            certificate: Certificate::Determinant { determinant, .. },
        } => assert!((determinant.abs() - 1.0).abs() > 1e-3),
        v => panic!("{v:?}"),
    }
}

#[test]
fn rank_deficient_anchor_is_inconclusive_about_x2() {
    let p = catalog::load("rank-deficient-anchor").unwrap();
    match metrize(&p, p.seed).report.verdict {
        Verdict::Inconclusive {
            untested_directions,
            ..
        } => assert_eq!(untested_directions, vec!["x2".to_string()]),
        v => panic!("{v:?}"),
    }
}

#[test]
fn distribution_reports_its_transverse_direction() {
    let p = catalog::load("distribution").unwrap();
    match metrize(&p, p.seed).report.verdict {
        Verdict::Metrizable {
            untested_directions,
            ..
        } => assert_eq!(untested_directions, vec!["x3".to_string()]),
        v => panic!("{v:?}"),
    }
}

#[test]
fn verdicts_are_reproducible() {
    for name in catalog::names() {
        let p = catalog::load(name).unwrap();
        let a = serde_json::to_string(&metrize(&p, 17).report).unwrap();
        let b = serde_json::to_string(&metrize(&p, 17).report).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn invariant_form_of_a_conjugated_orthogonal_group() {
    // H_i = P Q_i P⁻¹ preserves G = P⁻ᵀ P⁻¹ and nothing else when the Q_i
    // generate an irreducible subgroup of O(3)
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = DMatrix::from_fn(3, 3, |i, j| {
        if i == j {
            2.0
        } else {
            rng.random_range(-0.5..0.5)
        }
    });
    let p_inv = p.clone().try_inverse().unwrap();
    let rot = |axis: usize, a: f64| {
        let (c, s) = (a.cos(), a.sin());
        let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut q = DMatrix::identity(3, 3);
        q[(i, i)] = c;
        q[(j, j)] = c;
        q[(i, j)] = -s;
        q[(j, i)] = s;
        q
    };
    let sample: Vec<DMatrix<f64>> = [(0, 0.4), (1, 1.3), (2, -0.7)]
        .iter()
        .map(|&(ax, a)| &p * rot(ax, a) * &p_inv)
        .collect();
    let found = invariant_spd_search(&sample, NULL_EPS, 3).unwrap();
    assert_eq!(found.null_dim, 1);
    let g = found.form.unwrap();
    let truth = p_inv.transpose() * &p_inv;
    let truth = &truth / truth.trace();
    assert!((&g - &truth).abs().max() <= 1e-10);
    let c = cholesky_upper(&g).unwrap();
    let c_inv = c.clone().try_inverse().unwrap();
    for h in &sample {
        let q = &c * h * &c_inv;
        assert!((q.transpose() * &q - DMatrix::identity(3, 3)).abs().max() <= 1e-10);
    }
}

#[test]
fn circle_holonomy_on_the_hyperbolic_plane_is_a_rotation() {
    let p = catalog::load("hyperbolic-tm").unwrap();
    let conn = p.effective_connection().unwrap();
    let path = lift_base_path(
        &p.algebroid,
        &Circle::unit_speed(vec![0.0, 1.0], 0.3, (0, 1)),
        2000,
    )
    .unwrap();
    let h = transport_map(&conn, &p.algebroid, &path).unwrap().matrix;
    // the metric at the start point (0.3, 1) is conformal, so H is orthogonal
    assert!((h.transpose() * &h - DMatrix::identity(2, 2)).abs().max() <= 1e-9);
    assert!((h.determinant() - 1.0).abs() <= 1e-9);
}

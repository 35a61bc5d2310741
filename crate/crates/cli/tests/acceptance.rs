//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use lieroid::connection::{compatibility_residual, curvature, torsion};
use lieroid::geodesics::{integrate_geodesic, spray_vs_geodesic_check};
use lieroid::holonomy::{
    generate_loops, holonomy_matrices, isometry_check, metrizability_test, Certificate,
    LoopOptions, MetrizeOptions, MetrizeOutcome, Verdict,
};
use lieroid::levi_civita::{levi_civita_coeffs, SprayCoefficients};
use lieroid::transport::{
    lift_base_path, make_vertical_path, transport_limit_check, transport_map, Polyline, Segment,
};
use lieroid::{catalog, AConnection, AlphaSection, CoordPoint, Problem, RiemannMetric};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const METRIC_EXAMPLES: [&str; 4] = ["euclidean-tm", "distribution", "so3-point", "hyperbolic-tm"];

const PERTURBED_SO3: &str = r#"{
    "name": "so3-perturbed",
    "base_dim": 0,
    "fiber_rank": 3,
    "domain": [],
    "anchor": [[], [], []],
    "brackets": [
        [["0", "0", "0"], ["0", "0", "1"], ["0", "-1", "0"]],
        [["0", "0", "-1"], ["0", "0", "0"], ["1", "0", "0"]],
        [["0", "1.01", "0"], ["-1", "0", "0"], ["0", "0", "0"]]
    ]
}"#;

fn load(name: &str) -> Result<Problem, String> {
    catalog::load(name).map_err(|e| format!("{name}: {e}"))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_points(p: &Problem, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if p.algebroid.base_dim() == 0 {
        return vec![Vec::new(); count];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    p.domain.random_points(count, &mut rng)
}

fn structure_identities() -> Outcome {
    let mut worst = 0.0f64;
    for name in catalog::names() {
        let p = load(name)?;
        let r = p
            .algebroid
            .check_structure_identities(&p.identity_sample(), 1e-10)
            .map_err(|e| e.to_string())?;
        if !r.pass {
            return Err(format!("{name}: residual {:e}", r.max_residual()));
        }
        worst = worst.max(r.max_residual());
    }
    let p = Problem::from_json(PERTURBED_SO3).map_err(|e| e.to_string())?;
    let r = p
        .algebroid
        .check_structure_identities(&p.identity_sample(), 1e-10)
        .map_err(|e| e.to_string())?;
    let bad = r.max_residual();
    check(
        !r.pass && bad >= 9e-3,
        format!("catalog max residual {worst:e}, perturbed so(3) residual {bad:e}"),
    )
}

/// `Γ^k_ij = ½ g^{kl} (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
fn christoffel(metric: &RiemannMetric, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let p = CoordPoint::base(x.to_vec());
    let g = DMatrix::from_fn(n, n, |i, j| metric.entry(i, j).eval(&p).unwrap());
    let ginv = g.try_inverse().unwrap();
    let dg = |l: usize, i: usize, j: usize| metric.entry(i, j).partial(l, &p).unwrap();
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out[(k * n + i) * n + j] = (0..n)
                    .map(|l| 0.5 * ginv[(k, l)] * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j)))
                    .sum();
            }
        }
    }
    out
}

fn levi_civita() -> Outcome {
    let mut oracle_dev = 0.0f64;
    for name in ["euclidean-tm", "hyperbolic-tm"] {
        let p = load(name)?;
        let metric = p.metric.as_ref().unwrap();
        let n = p.algebroid.base_dim();
        for x in random_points(&p, 100, 11) {
            let lc = levi_civita_coeffs(&p.algebroid, metric, &x).map_err(|e| e.to_string())?;
            let oracle = christoffel(metric, &x);
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        oracle_dev =
                            oracle_dev.max((lc[[k, i, j]] - oracle[(k * n + i) * n + j]).abs());
                    }
                }
            }
        }
    }
    let (mut comp, mut tors) = (0.0f64, 0.0f64);
    for name in METRIC_EXAMPLES {
        let p = load(name)?;
        let metric = p.metric.clone().unwrap();
        let conn = AConnection::levi_civita(metric.clone());
        for x in random_points(&p, 100, 12) {
            comp = comp.max(
                compatibility_residual(&conn, &metric, &p.algebroid, &x)
                    .map_err(|e| e.to_string())?
                    .max_abs(),
            );
            tors = tors.max(
                torsion(&conn, &p.algebroid, &x)
                    .map_err(|e| e.to_string())?
                    .max_abs(),
            );
        }
    }
    check(
        oracle_dev <= 1e-12 && comp <= 1e-9 && tors <= 1e-9,
        format!("Christoffel deviation {oracle_dev:e}, compatibility {comp:e}, torsion {tors:e}"),
    )
}

fn spray_identity() -> Outcome {
    let mut worst = 0.0f64;
    for name in METRIC_EXAMPLES {
        let p = load(name)?;
        let spray = SprayCoefficients::energy(&p.algebroid, p.metric.as_ref().unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for x in random_points(&p, 100, 14) {
            let y: Vec<f64> = (0..p.algebroid.rank())
                .map(|_| rng.random_range(-2.0..2.0))
                .collect();
            let g = spray.g(&x, &y).map_err(|e| e.to_string())?;
            let h = spray.half_gamma_yy(&x, &y).map_err(|e| e.to_string())?;
            worst = g
                .iter()
                .zip(&h)
                .fold(worst, |w, (a, b)| w.max((a - b).abs()));
        }
    }
    let p = load("hyperbolic-tm")?;
    let c = spray_vs_geodesic_check(
        &p.algebroid,
        p.metric.as_ref().unwrap(),
        &[0.0, 1.0],
        &[1.0, 0.5],
        2.0,
        2000,
        Some(&p.domain),
    )
    .map_err(|e| e.to_string())?;
    check(
        worst <= 1e-9 && !c.truncated && c.max_distance <= 1e-8,
        format!(
            "|G - Γyy/2| {worst:e}, spray vs geodesic {:e}",
            c.max_distance
        ),
    )
}

fn hyperbolic_endpoint_error(p: &Problem, conn: &AConnection, steps: usize) -> Result<f64, String> {
    // x1 = tanh t, x2 = sech t
    let t = 3.0f64;
    let r = integrate_geodesic(
        &p.algebroid,
        conn,
        &[0.0, 1.0],
        &[1.0, 0.0],
        t,
        steps,
        Some(&p.domain),
    )
    .map_err(|e| e.to_string())?;
    let x = r.path.end_x();
    Ok((x[0] - t.tanh()).hypot(x[1] - 1.0 / t.cosh()))
}

fn geodesic_oracle() -> Outcome {
    let p = load("hyperbolic-tm")?;
    let conn = p.effective_connection().map_err(|e| e.to_string())?;
    let e1 = hyperbolic_endpoint_error(&p, &conn, 1000)?;
    let e2 = hyperbolic_endpoint_error(&p, &conn, 2000)?;
    let ratio = e1 / e2;
    check(
        e2 <= 1e-6 && (12.0..=20.0).contains(&ratio),
        format!("error {e2:e} at N=2000, ratio {ratio:.2}"),
    )
}

fn vertical_confinement() -> Outcome {
    let p = load("rank-deficient-anchor")?;
    let conn = p.effective_connection().map_err(|e| e.to_string())?;
    let x0 = [0.2, -0.3];
    let y0 = [0.0, 0.5, -0.3];
    let rho = p
        .algebroid
        .anchor_at::<f64>(&x0)
        .map_err(|e| e.to_string())?;
    let n = x0.len();
    let image = (0..n)
        .map(|i| {
            (0..y0.len())
                .map(|a| rho[a * n + i] * y0[a])
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    let r = integrate_geodesic(&p.algebroid, &conn, &x0, &y0, 5.0, 5000, Some(&p.domain))
        .map_err(|e| e.to_string())?;
    let mut max_dx = 0.0f64;
    for (s, j) in r.path.node_indices() {
        let x = r.path.x(s, j);
        max_dx = max_dx.max((x[0] - x0[0]).hypot(x[1] - x0[1]));
    }
    check(
        image == 0.0 && max_dx == 0.0,
        format!("|rho(x0) y0| = {image}, max |x(t) - x0| = {max_dx}"),
    )
}

fn energy_conservation() -> Outcome {
    let cases: [(&str, &[f64], &[f64]); 4] = [
        ("euclidean-tm", &[-0.5, 0.2], &[0.8, -0.3]),
        ("distribution", &[0.1, -0.2, 0.3], &[0.5, 0.4]),
        ("so3-point", &[], &[0.4, -1.1, 0.7]),
        ("hyperbolic-tm", &[0.0, 1.0], &[1.0, 0.5]),
    ];
    let mut worst = 0.0f64;
    for (name, x0, y0) in cases {
        let p = load(name)?;
        let metric = p.metric.clone().unwrap();
        let conn = AConnection::levi_civita(metric.clone());
        let r = integrate_geodesic(&p.algebroid, &conn, x0, y0, 1.0, 2000, Some(&p.domain))
            .and_then(|r| r.with_energy(&metric))
            .map_err(|e| e.to_string())?;
        if r.truncated {
            return Err(format!("{name}: geodesic left the domain"));
        }
        worst = worst.max(r.energy_drift().unwrap_or(f64::INFINITY));
    }
    check(worst <= 1e-8, format!("max relative drift {worst:e}"))
}

fn transport_algebra() -> Outcome {
    let (mut comp, mut inv) = (0.0f64, 0.0f64);
    for name in catalog::names() {
        let p = load(name)?;
        let conn = p.effective_connection().map_err(|e| e.to_string())?;
        let opts = LoopOptions::default();
        let family = generate_loops(&p.algebroid, &p.base_point, &opts, Some(&p.domain))
            .map_err(|e| e.to_string())?;
        let sample = holonomy_matrices(&conn, &p.algebroid, &family, opts.max_generators)
            .map_err(|e| e.to_string())?;
        let c = sample.coherence();
        comp = comp.max(c.composition);
        inv = inv.max(c.inverse);
    }
    check(
        comp <= 1e-10 && inv <= 1e-8,
        format!("composition {comp:e}, inverse {inv:e}"),
    )
}

fn limit_formula() -> Outcome {
    let hyp = load("hyperbolic-tm")?;
    let hyp_conn = hyp.effective_connection().map_err(|e| e.to_string())?;
    let hyp_path = lift_base_path(
        &hyp.algebroid,
        &Segment {
            from: vec![-0.5, 1.0],
            to: vec![0.5, 1.5],
            duration: 1.0,
        },
        1024,
    )
    .map_err(|e| e.to_string())?;
    let hyp_sigma = AlphaSection::from_fn(&hyp_path, 2, |_, x| vec![x[0].cos(), x[1] * x[1]])
        .map_err(|e| e.to_string())?;

    let sc = load("scaling-holonomy")?;
    let sc_conn = sc.effective_connection().map_err(|e| e.to_string())?;
    let sc_path = lift_base_path(
        &sc.algebroid,
        &Segment {
            from: vec![0.3, -0.2],
            to: vec![0.5, 0.4],
            duration: 1.0,
        },
        1024,
    )
    .map_err(|e| e.to_string())?;
    let sc_sigma = AlphaSection::from_fn(&sc_path, 2, |_, x| vec![1.0 + x[0], x[1]])
        .map_err(|e| e.to_string())?;

    let so3 = load("so3-point")?;
    let so3_conn = so3.effective_connection().map_err(|e| e.to_string())?;
    let so3_path = make_vertical_path(&so3.algebroid, &[], |_| vec![1.0, 0.5, -0.2], 1.0, 1024)
        .map_err(|e| e.to_string())?;
    let so3_sigma = AlphaSection::from_fn(&so3_path, 3, |t, _| vec![t.cos(), t.sin(), t])
        .map_err(|e| e.to_string())?;

    let cases = [
        (
            "hyperbolic",
            transport_limit_check(&hyp_conn, &hyp.algebroid, &hyp_path, &hyp_sigma),
        ),
        (
            "scaling",
            transport_limit_check(&sc_conn, &sc.algebroid, &sc_path, &sc_sigma),
        ),
        (
            "so3",
            transport_limit_check(&so3_conn, &so3.algebroid, &so3_path, &so3_sigma),
        ),
    ];
    let mut orders = Vec::new();
    let mut ok = true;
    for (name, r) in cases {
        let r = r.map_err(|e| format!("{name}: {e}"))?;
        let order = r.order.unwrap_or(f64::NAN);
        ok &= order >= 0.9;
        orders.push(format!("{name} {order:.3}"));
    }
    check(ok, format!("fitted orders: {}", orders.join(", ")))
}

fn isometry_criterion() -> Outcome {
    let mut worst = 0.0f64;
    for name in METRIC_EXAMPLES {
        let p = load(name)?;
        let metric = p.metric.clone().unwrap();
        let conn = AConnection::levi_civita(metric.clone());
        let opts = LoopOptions::default();
        let family = generate_loops(&p.algebroid, &p.base_point, &opts, Some(&p.domain))
            .map_err(|e| e.to_string())?;
        let sample = holonomy_matrices(&conn, &p.algebroid, &family, opts.max_generators)
            .map_err(|e| e.to_string())?;
        let g0 = metric.matrix(&p.base_point).map_err(|e| e.to_string())?;
        worst = worst.max(isometry_check(&sample, &g0, 1e-6).max_defect);
    }

    let p = load("hyperbolic-tm")?;
    let conn = p.effective_connection().map_err(|e| e.to_string())?;
    let s = 0.05;
    let rect = Polyline::rectangle(vec![0.0, 1.0], (0, 1), (s, s), 1.0);
    let path = lift_base_path(&p.algebroid, &rect, 1000).map_err(|e| e.to_string())?;
    let h = transport_map(&conn, &p.algebroid, &path)
        .map_err(|e| e.to_string())?
        .matrix;
    let r = curvature(&conn, &p.algebroid, &[0.0, 1.0]).map_err(|e| e.to_string())?;
    let predicted = -DMatrix::from_fn(2, 2, |b, a| r[[b, a, 0, 1]]) * (s * s);
    let rel = (&h - DMatrix::identity(2, 2) - &predicted).abs().max() / predicted.abs().max();
    check(
        worst <= 1e-6 && rel <= 0.1,
        format!(
            "max |HᵀgH - g| {worst:e}, curvature-area deviation {:.2}%",
            100.0 * rel
        ),
    )
}

fn metrize(p: &Problem) -> Result<MetrizeOutcome, String> {
    let conn = p.effective_connection().map_err(|e| e.to_string())?;
    let opts = MetrizeOptions {
        seed: p.seed,
        ..MetrizeOptions::default()
    };
    metrizability_test(&conn, &p.algebroid, &p.base_point, &opts, Some(&p.domain))
        .map_err(|e| e.to_string())
}

fn metrize_round_trip() -> Outcome {
    let (mut worst, mut probes) = (0.0f64, 0usize);
    for name in METRIC_EXAMPLES {
        let p = load(name)?;
        let metric = p.metric.clone().unwrap();
        let out = metrize(&p)?;
        if !matches!(out.report.verdict, Verdict::Metrizable { .. }) {
            return Err(format!("{name}: {:?}", out.report.verdict));
        }
        let rec = out
            .reconstruction
            .ok_or(format!("{name}: no reconstruction"))?;
        for probe in &rec.probes {
            let Some(g) = &probe.g else { continue };
            let truth = metric.matrix(&probe.x).map_err(|e| e.to_string())?;
            let (a, b) = (g / g.trace(), &truth / truth.trace());
            worst = worst.max((&a - &b).abs().max() / b.abs().max());
            probes += 1;
        }
    }
    check(
        probes > 0 && worst <= 1e-5,
        format!("{probes} reachable probes, max relative deviation {worst:e}"),
    )
}

fn negative_certificate() -> Outcome {
    let p = load("scaling-holonomy")?;
    let det = match metrize(&p)?.report.verdict {
        Verdict::NotMetrizable {
            certificate: Certificate::Determinant { determinant, .. },
        } => determinant,
        v => return Err(format!("scaling-holonomy: {v:?}")),
    };
    let mut worst = 0.0f64;
    for name in catalog::names() {
        if let Verdict::Metrizable {
            orthogonality_defect,
            ..
        } = metrize(&load(name)?)?.report.verdict
        {
            worst = worst.max(orthogonality_defect);
        }
    }
    check(
        (det.abs() - 1.0).abs() > 1e-3 && worst <= 1e-6,
        format!("witness determinant {det:.6}, max orthogonality defect {worst:e}"),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_lieroid");
    let tmp = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    let mut identical = 0;
    for name in catalog::names() {
        let mut runs = Vec::new();
        for run in 0..2 {
            let dir = tmp.join(format!("{name}-{run}"));
            let out = Command::new(bin)
                .args(["metrize", "--example", name, "--seed", "42", "--out"])
                .arg(&dir)
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!("{name}: exit {:?}", out.status.code()));
            }
            let file = std::fs::read(dir.join("metrize.json")).map_err(|e| e.to_string())?;
            runs.push((out.stdout, file));
        }
        if runs[0] != runs[1] {
            return Err(format!("{name}: outputs differ"));
        }
        identical += 1;
    }
    Ok(format!(
        "{identical} examples byte-identical across two runs"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("structure identities", structure_identities),
        ("Levi-Civita coefficients", levi_civita),
        ("spray identity", spray_identity),
        ("geodesic oracle", geodesic_oracle),
        ("vertical confinement", vertical_confinement),
        ("energy conservation", energy_conservation),
        ("transport algebra", transport_algebra),
        ("limit formula", limit_formula),
        ("isometry criterion", isometry_criterion),
        ("metrizability round trip", metrize_round_trip),
        ("negative certificate", negative_certificate),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] {:>2}. {name}: {detail} ({secs:.1}s)", i + 1);
        failed += outcome.is_err() as usize;
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

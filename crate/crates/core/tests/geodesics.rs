use lieroid::geodesics::{integrate_geodesic, spray_vs_geodesic_check};
use lieroid::{catalog, AConnection};

fn hyperbolic_endpoint_error(steps: usize) -> f64 {
    // unit-speed geodesic through (0, 1) with horizontal initial velocity:
    // x1 = tanh t, x2 = sech t
    let p = catalog::load("hyperbolic-tm").unwrap();
    let conn = p.effective_connection().unwrap();
    let t_end = 3.0;
    let r = integrate_geodesic(
        &p.algebroid,
        &conn,
        &[0.0, 1.0],
        &[1.0, 0.0],
        t_end,
        steps,
        Some(&p.domain),
    )
    .unwrap();
    assert!(!r.truncated);
    let x = r.path.end_x();
    let (ex, ey) = (x[0] - t_end.tanh(), x[1] - 1.0 / t_end.cosh());
    (ex * ex + ey * ey).sqrt()
}

#[test]
fn hyperbolic_geodesic_matches_closed_form_at_fourth_order() {
    let (e1, e2) = (
        hyperbolic_endpoint_error(1000),
        hyperbolic_endpoint_error(2000),
    );
    assert!(e2 <= 1e-6, "{e2:e}");
    let ratio = e1 / e2;
    assert!(
        (12.0..=20.0).contains(&ratio),
        "ratio {ratio} ({e1:e}, {e2:e})"
    );
}

#[test]
fn vertical_geodesic_stays_in_its_fiber() {
    let p = catalog::load("rank-deficient-anchor").unwrap();
    let conn = p.effective_connection().unwrap();
    let x0 = [0.2, -0.3];
    let y0 = [0.0, 0.5, -0.3];
    let r = integrate_geodesic(&p.algebroid, &conn, &x0, &y0, 5.0, 5000, Some(&p.domain)).unwrap();
    let mut max_dx = 0.0f64;
    for (s, j) in r.path.node_indices() {
        let x = r.path.x(s, j);
        max_dx = max_dx.max(((x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2)).sqrt());
        let y = r.path.y(s, j);
        assert_eq!(y[0], 0.0);
        // the connection rotates (y2, y3), so their norm is conserved
        assert!((y[1].hypot(y[2]) - 0.5f64.hypot(0.3)).abs() <= 1e-10);
    }
    assert_eq!(max_dx, 0.0);
    assert!(r.path.is_vertical());
}

#[test]
fn energy_is_conserved_along_levi_civita_geodesics() {
    let cases: [(&str, &[f64], &[f64]); 4] = [
        ("euclidean-tm", &[-0.5, 0.2], &[0.8, -0.3]),
        ("distribution", &[0.1, -0.2, 0.3], &[0.5, 0.4]),
        ("so3-point", &[], &[0.4, -1.1, 0.7]),
        ("hyperbolic-tm", &[0.0, 1.0], &[1.0, 0.5]),
    ];
    for (name, x0, y0) in cases {
        let p = catalog::load(name).unwrap();
        let metric = p.metric.clone().unwrap();
        let conn = AConnection::levi_civita(metric.clone());
        let r = integrate_geodesic(&p.algebroid, &conn, x0, y0, 1.0, 2000, Some(&p.domain))
            .unwrap()
            .with_energy(&metric)
            .unwrap();
        assert!(!r.truncated, "{name}");
        let drift = r.energy_drift().unwrap();
        assert!(drift <= 1e-8, "{name}: drift {drift:e}");
    }
}

#[test]
fn spray_flow_is_the_geodesic_flow() {
    let p = catalog::load("hyperbolic-tm").unwrap();
    let metric = p.metric.as_ref().unwrap();
    let c = spray_vs_geodesic_check(
        &p.algebroid,
        metric,
        &[0.0, 1.0],
        &[1.0, 0.5],
        2.0,
        2000,
        Some(&p.domain),
    )
    .unwrap();
    assert!(!c.truncated);
    assert!(c.max_distance <= 1e-8, "{c:?}");
}

#[test]
fn leaving_the_domain_truncates() {
    let p = catalog::load("euclidean-tm").unwrap();
    let conn = p.effective_connection().unwrap();
    let r = integrate_geodesic(
        &p.algebroid,
        &conn,
        &[0.0, 0.0],
        &[1.0, 0.0],
        2.0,
        200,
        Some(&p.domain),
    )
    .unwrap();
    assert!(r.truncated);
    assert!(r.path.end_x()[0] <= 1.0);
    assert!(r.path.end_x()[0] > 0.98);
}

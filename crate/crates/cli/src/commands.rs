use std::fs;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use lieroid::connection::{compatibility_residual, torsion};
use lieroid::geodesics::{integrate_geodesic, integrate_spray, GeodesicReport};
use lieroid::holonomy::{
    generate_loops, holonomy_matrices, isometry_check, metrizability_test, Coherence,
    IsometryReport, LoopKind, LoopOptions, MetrizeOptions, MetrizeReport, SampleSource,
    SkippedLoop,
};
use lieroid::levi_civita::{levi_civita_coeffs, SprayCoefficients};
use lieroid::transport::{
    lift_base_path, make_vertical_path, parallel_transport, transport_map, BaseCurve, Circle,
    Polyline, Segment,
};
use lieroid::{catalog, AConnection, Error, Problem, ProblemConfig, TransportMap};

use crate::output::{emit, to_json, Sink};
use crate::{Common, PathKind};

/// 2 for usage and configuration problems, 1 for mathematical failures.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(
            Error::Config { .. }
            | Error::UnknownExample(_)
            | Error::InvalidArgument(_)
            | Error::Dimension(_)
            | Error::Parse { .. },
        ) => 2,
        Some(_) => 1,
        None => 2,
    }
}

fn load(c: &Common) -> Result<Problem> {
    let cfg = match (&c.source.config, &c.source.example) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            ProblemConfig::from_json(&text)?
        }
        (None, Some(name)) => catalog::config(name)?,
        (None, None) => bail!(Error::InvalidArgument(
            "one of --config or --example is required".into()
        )),
    };
    let mut p = Problem::from_config(&cfg)?;
    if let Some(seed) = c.seed {
        p.seed = seed;
    }
    Ok(p)
}

fn base_point(c: &Common, p: &Problem) -> Result<Vec<f64>> {
    let x0 =
        c.x0.as_ref()
            .map_or_else(|| p.base_point.clone(), |v| v.0.clone());
    if x0.len() != p.algebroid.base_dim() {
        bail!(Error::InvalidArgument(format!(
            "--x0 has {} coordinates, base dimension is {}",
            x0.len(),
            p.algebroid.base_dim()
        )));
    }
    if !p.domain.contains(&x0) {
        bail!(Error::InvalidArgument(format!(
            "x0 = {x0:?} lies outside the domain"
        )));
    }
    Ok(x0)
}

fn steps_for(c: &Common, t_end: f64) -> usize {
    c.steps
        .unwrap_or_else(|| ((1000.0 * t_end.abs()).ceil() as usize).max(1))
}

fn status(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

pub fn validate(c: &Common) -> Result<ExitCode> {
    let p = load(c)?;
    let tol = c.tol.unwrap_or(p.tolerances.identity);
    let report = p
        .algebroid
        .check_structure_identities(&p.identity_sample(), tol)?;
    Sink::new(c.out.clone())?.report("validate.json", &report)?;
    Ok(status(report.pass))
}

#[derive(Serialize)]
struct LcReport {
    x0: Vec<f64>,
    /// `Γ^β_{αa}` indexed `[β][α][a]`.
    gamma: serde_json::Value,
    samples: usize,
    min_metric_eigenvalue: f64,
    compatibility_residual: f64,
    torsion_residual: f64,
    tolerance: f64,
    pass: bool,
}

pub fn lc(c: &Common) -> Result<ExitCode> {
    let p = load(c)?;
    let metric = p
        .metric
        .clone()
        .ok_or_else(|| Error::InvalidArgument(format!("problem `{}` has no metric", p.name)))?;
    let x0 = base_point(c, &p)?;
    let tol = c.tol.unwrap_or(1e-9);
    let sample = p.identity_sample();
    let min_eig = metric.check_positive_definite(&sample, 0.0)?;
    let conn = AConnection::levi_civita(metric.clone());
    let (mut compat, mut tors) = (0.0f64, 0.0f64);
    for x in &sample {
        compat = compat.max(compatibility_residual(&conn, &metric, &p.algebroid, x)?.max_abs());
        tors = tors.max(torsion(&conn, &p.algebroid, x)?.max_abs());
    }
    let report = LcReport {
        gamma: levi_civita_coeffs(&p.algebroid, &metric, &x0)?.to_nested(),
        x0,
        samples: sample.len(),
        min_metric_eigenvalue: min_eig,
        compatibility_residual: compat,
        torsion_residual: tors,
        tolerance: tol,
        pass: compat <= tol && tors <= tol,
    };
    Sink::new(c.out.clone())?.report("lc.json", &report)?;
    Ok(status(report.pass))
}

#[derive(Serialize)]
struct GeodesicOutput {
    x0: Vec<f64>,
    y0: Vec<f64>,
    method: &'static str,
    #[serde(flatten)]
    report: GeodesicReport,
}

pub fn geodesic(c: &Common, y0: &[f64], t_end: f64, spray: bool) -> Result<ExitCode> {
    let p = load(c)?;
    let x0 = base_point(c, &p)?;
    let steps = steps_for(c, t_end);
    let result = if spray {
        let metric = p
            .metric
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("--spray needs a metric".into()))?;
        let s = SprayCoefficients::energy(&p.algebroid, metric);
        integrate_spray(&s, &p.algebroid, &x0, y0, t_end, steps, Some(&p.domain))?
    } else {
        let conn = p.effective_connection()?;
        integrate_geodesic(&p.algebroid, &conn, &x0, y0, t_end, steps, Some(&p.domain))?
    };
    let result = match &p.metric {
        Some(g) if g.rank() == p.algebroid.rank() => result.with_energy(g)?,
        _ => result,
    };
    let sink = Sink::new(c.out.clone())?;
    sink.csv(
        "geodesic.csv",
        &result.path.csv_header(0),
        result.path.csv_rows(None),
    )?;
    sink.report(
        "geodesic.json",
        &GeodesicOutput {
            x0,
            y0: y0.to_vec(),
            method: if spray { "spray" } else { "geodesic" },
            report: result.report(),
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

pub struct PathSpec {
    pub kind: PathKind,
    pub to: Option<Vec<f64>>,
    pub radius: f64,
    pub sides: Option<Vec<f64>>,
    pub axes: (usize, usize),
    pub y0: Option<Vec<f64>>,
    pub z0: Option<Vec<f64>>,
    pub t_end: f64,
}

#[derive(Serialize)]
struct TransportOutput {
    path: &'static str,
    steps: usize,
    duration: f64,
    admissibility_residual: f64,
    vertical: bool,
    z0: Vec<f64>,
    z_end: Vec<f64>,
    map: TransportMap,
}

pub fn transport(c: &Common, spec: &PathSpec) -> Result<ExitCode> {
    let p = load(c)?;
    let x0 = base_point(c, &p)?;
    let conn = p.effective_connection()?;
    let alg = &p.algebroid;
    let n = alg.base_dim();
    let steps = steps_for(c, spec.t_end);
    let (i, j) = spec.axes;
    if matches!(spec.kind, PathKind::Circle | PathKind::Rectangle) && (i >= n || j >= n) {
        bail!(Error::InvalidArgument(format!(
            "--axes out of range for base dimension {n}"
        )));
    }
    let curve: Option<Box<dyn BaseCurve>> = match spec.kind {
        PathKind::Segment => {
            let to = spec
                .to
                .clone()
                .ok_or_else(|| Error::InvalidArgument("segment needs --to".into()))?;
            Some(Box::new(Segment {
                from: x0.clone(),
                to,
                duration: spec.t_end,
            }))
        }
        PathKind::Circle => {
            let mut center = x0.clone();
            center[i] -= spec.radius;
            Some(Box::new(Circle {
                center,
                radius: spec.radius,
                axes: (i, j),
                phase: 0.0,
                turns: 1.0,
                duration: spec.t_end,
            }))
        }
        PathKind::Rectangle => {
            let sides = spec.sides.clone().unwrap_or_else(|| vec![0.1, 0.1]);
            if sides.len() != 2 {
                bail!(Error::InvalidArgument("--sides takes two lengths".into()));
            }
            Some(Box::new(Polyline::rectangle(
                x0.clone(),
                (i, j),
                (sides[0], sides[1]),
                spec.t_end,
            )))
        }
        PathKind::Vertical => None,
    };
    let path = match curve {
        Some(curve) => lift_base_path(alg, curve.as_ref(), steps)?,
        None => {
            let y0 = spec
                .y0
                .clone()
                .ok_or_else(|| Error::InvalidArgument("vertical path needs --y0".into()))?;
            make_vertical_path(alg, &x0, |_| y0.clone(), spec.t_end, steps)?
        }
    };
    let k = conn.bundle_rank();
    let z0 = spec
        .z0
        .clone()
        .unwrap_or_else(|| (0..k).map(|b| if b == 0 { 1.0 } else { 0.0 }).collect());
    let z = parallel_transport(&conn, alg, &path, &z0)?;
    let map = transport_map(&conn, alg, &path)?;
    let sink = Sink::new(c.out.clone())?;
    sink.csv(
        "transport.csv",
        &path.csv_header(k),
        path.csv_rows(Some(&z)),
    )?;
    sink.report(
        "transport.json",
        &TransportOutput {
            path: match spec.kind {
                PathKind::Segment => "segment",
                PathKind::Circle => "circle",
                PathKind::Rectangle => "rectangle",
                PathKind::Vertical => "vertical",
            },
            steps: path.steps(),
            duration: path.duration(),
            admissibility_residual: path.admissibility_residual(),
            vertical: path.is_vertical(),
            z0,
            z_end: z.end().to_vec(),
            map,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct HolonomyEntry {
    #[serde(flatten)]
    source: SampleSource,
    matrix: Vec<Vec<f64>>,
    determinant: f64,
}

#[derive(Serialize)]
struct HolonomyOutput {
    x0: Vec<f64>,
    loops: Vec<LoopKind>,
    skipped: Vec<SkippedLoop>,
    kernel: Vec<Vec<f64>>,
    entries: Vec<HolonomyEntry>,
    coherence: Coherence,
    isometry: Option<IsometryReport>,
}

pub fn holonomy(c: &Common) -> Result<ExitCode> {
    let p = load(c)?;
    let x0 = base_point(c, &p)?;
    let conn = p.effective_connection()?;
    let opts = LoopOptions {
        steps: c.steps.unwrap_or(1000),
        ..LoopOptions::default()
    };
    let family = generate_loops(&p.algebroid, &x0, &opts, Some(&p.domain))?;
    let sample = holonomy_matrices(&conn, &p.algebroid, &family, opts.max_generators)?;
    let isometry = match &p.metric {
        Some(g) if g.rank() == conn.bundle_rank() => Some(isometry_check(
            &sample,
            &g.matrix(&x0)?,
            c.tol.unwrap_or(1e-6),
        )),
        _ => None,
    };
    let entries = sample
        .sources
        .iter()
        .zip(sample.matrix_rows())
        .zip(&sample.matrices)
        .map(|((source, matrix), h)| HolonomyEntry {
            source: source.clone(),
            matrix,
            determinant: h.determinant(),
        })
        .collect();
    let out = HolonomyOutput {
        coherence: sample.coherence(),
        x0,
        loops: family.kinds,
        skipped: family.skipped,
        kernel: family.kernel,
        entries,
        isometry,
    };
    Sink::new(c.out.clone())?.report("holonomy.json", &out)?;
    Ok(status(isometry.is_none_or(|r| r.pass)))
}

pub fn metrize(c: &Common, expect_metrizable: bool) -> Result<ExitCode> {
    let p = load(c)?;
    let x0 = base_point(c, &p)?;
    let conn = p.effective_connection()?;
    let mut opts = MetrizeOptions {
        null_eps: p.tolerances.null_space,
        det_tolerance: p.tolerances.determinant,
        tolerance: c.tol.unwrap_or(p.tolerances.metrize),
        seed: p.seed,
        ..MetrizeOptions::default()
    };
    if let Some(s) = c.steps {
        opts.loops.steps = s;
    }
    let outcome = metrizability_test(&conn, &p.algebroid, &x0, &opts, Some(&p.domain))?;
    let sink = Sink::new(c.out.clone())?;
    if let Some(rec) = &outcome.reconstruction {
        let n = p.algebroid.base_dim();
        let k = conn.bundle_rank();
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        for a in 1..=k {
            for b in a..=k {
                header.push(format!("g{a}{b}"));
            }
        }
        let rows = rec.probes.iter().filter_map(|pr| {
            let g = pr.g.as_ref()?;
            let mut row = pr.x.clone();
            for a in 0..k {
                for b in a..k {
                    row.push(g[(a, b)]);
                }
            }
            Some(row)
        });
        sink.csv("metric.csv", &header, rows)?;
    }
    let report: &MetrizeReport = &outcome.report;
    sink.report("metrize.json", report)?;
    Ok(status(
        !expect_metrizable || report.verdict.name() == "metrizable",
    ))
}

#[derive(Serialize)]
struct ExampleEntry {
    name: &'static str,
    description: &'static str,
}

pub fn examples_list() -> Result<ExitCode> {
    let entries: Vec<ExampleEntry> = catalog::names()
        .into_iter()
        .map(|name| ExampleEntry {
            name,
            description: catalog::description(name).expect("listed name"),
        })
        .collect();
    emit(&to_json(&entries)?)?;
    Ok(ExitCode::SUCCESS)
}

pub fn examples_show(name: &str) -> Result<ExitCode> {
    emit(catalog::source(name)?.trim_end())?;
    Ok(ExitCode::SUCCESS)
}

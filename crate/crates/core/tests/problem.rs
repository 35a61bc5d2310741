use lieroid::{catalog, Error, Problem, ProblemConfig};

fn config_error(text: &str) -> String {
    match Problem::from_json(text) {
        Err(Error::Config { path, .. }) => path,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn catalog_configs_survive_a_round_trip() {
    for name in catalog::names() {
        let cfg = catalog::config(name).unwrap();
        let again = ProblemConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg, "{name}");
        let (a, b) = (
            Problem::from_config(&cfg).unwrap(),
            Problem::from_config(&again).unwrap(),
        );
        let x = a.base_point.clone();
        assert_eq!(
            a.algebroid.anchor_at::<f64>(&x).unwrap(),
            b.algebroid.anchor_at::<f64>(&x).unwrap()
        );
        assert_eq!(
            a.algebroid.brackets_at::<f64>(&x).unwrap(),
            b.algebroid.brackets_at::<f64>(&x).unwrap()
        );
    }
}

#[test]
fn base_point_defaults_to_the_domain_center() {
    let p = Problem::from_json(
        r#"{"base_dim": 2, "fiber_rank": 2, "domain": [[0, 2], [-1, 3]],
            "anchor": [["1", "0"], ["0", "1"]]}"#,
    )
    .unwrap();
    assert_eq!(p.base_point, vec![1.0, 1.0]);
    assert_eq!(p.seed, 0);
}

#[test]
fn shape_errors_name_the_offending_entry() {
    assert_eq!(
        config_error(
            r#"{"base_dim": 2, "fiber_rank": 1, "domain": [[0, 1]], "anchor": [["1", "0"]]}"#
        ),
        "domain"
    );
    assert_eq!(
        config_error(
            r#"{"base_dim": 2, "fiber_rank": 2, "domain": [[0, 1], [0, 1]], "anchor": [["1", "0"], ["1"]]}"#
        ),
        "anchor[1]"
    );
    assert_eq!(
        config_error(
            r#"{"base_dim": 1, "fiber_rank": 2, "domain": [[0, 1]], "anchor": [["1"], ["0"]],
                "metric": [["1", "0"], ["1 + y1"]]}"#
        ),
        "metric[1][0]"
    );
    assert_eq!(
        config_error(
            r#"{"base_dim": 1, "fiber_rank": 1, "domain": [[0, 1]], "anchor": [["1"]],
                "base_point": [2]}"#
        ),
        "base_point"
    );
    assert_eq!(
        config_error(
            r#"{"base_dim": 1, "fiber_rank": 1, "domain": [[0, 1]], "anchor": [["1"]], "seed": -1}"#
        ),
        "seed"
    );
}

#[test]
fn unknown_example_is_reported_by_name() {
    match catalog::load("klein-bottle") {
        Err(Error::UnknownExample(name)) => assert_eq!(name, "klein-bottle"),
        other => panic!("{other:?}"),
    }
}

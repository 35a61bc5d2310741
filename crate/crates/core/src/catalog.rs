//! Built-in example problems.

use crate::error::{Error, Result};
use crate::problem::{Problem, ProblemConfig};

const ENTRIES: [(&str, &str, &str); 6] = [
    (
        "euclidean-tm",
        "tangent bundle of the plane, anchor the identity map, flat metric",
        include_str!("../catalog/euclidean-tm.json"),
    ),
    (
        "distribution",
        "integrable rank-2 subbundle of TR^3 spanned by d/dx1 and exp(x1) d/dx2",
        include_str!("../catalog/distribution.json"),
    ),
    (
        "so3-point",
        "the Lie algebra so(3) as an algebroid over a point",
        include_str!("../catalog/so3-point.json"),
    ),
    (
        "hyperbolic-tm",
        "tangent bundle of the upper half-plane with the hyperbolic metric",
        include_str!("../catalog/hyperbolic-tm.json"),
    ),
    (
        "scaling-holonomy",
        "connection on TR^2 whose holonomy rescales the fiber",
        include_str!("../catalog/scaling-holonomy.json"),
    ),
    (
        "rank-deficient-anchor",
        "rank-3 bundle over the plane with rank-1 anchor and a flat vertical connection",
        include_str!("../catalog/rank-deficient-anchor.json"),
    ),
];

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.0).collect()
}

pub fn description(name: &str) -> Result<&'static str> {
    lookup(name).map(|e| e.1)
}

/// Raw JSON of a catalog entry.
pub fn source(name: &str) -> Result<&'static str> {
    lookup(name).map(|e| e.2)
}

pub fn config(name: &str) -> Result<ProblemConfig> {
    ProblemConfig::from_json(source(name)?)
}

pub fn load(name: &str) -> Result<Problem> {
    Problem::from_config(&config(name)?)
}

fn lookup(name: &str) -> Result<&'static (&'static str, &'static str, &'static str)> {
    ENTRIES
        .iter()
        .find(|e| e.0 == name)
        .ok_or_else(|| Error::UnknownExample(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_loads_with_its_name() {
        for name in names() {
            let p = load(name).unwrap();
            assert_eq!(p.name, name);
            assert!(p.effective_connection().is_ok(), "{name}");
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(load("nope"), Err(Error::UnknownExample(_))));
    }
}

//! JSON problem descriptions and the objects built from them.
//!
//! ```json
//! {
//!   "name": "hyperbolic-tm",
//!   "base_dim": 2,
//!   "fiber_rank": 2,
//!   "domain": [[-2, 2], [0.05, 10]],
//!   "anchor": [["1", "0"], ["0", "1"]],
//!   "metric": [["1/x2^2", "0"], ["1/x2^2"]],
//!   "base_point": [0, 1],
//!   "seed": 7
//! }
//! ```
//!
//! `anchor[a][i]` is `ρ_a^i`. `brackets[c][a]` is either the strictly lower
//! row `[L^c_a1, ..., L^c_a(a-1)]` (mirrored to `L^c_ba = −L^c_ab`) or a full
//! row of length `m` taken as given. `metric[α]` lists `g_αβ` for `β ≥ α`.
//! `connection[β][α][a]` is `Γ^β_{αa}`. All indices in the JSON are 0-based
//! positions; variables inside expressions are 1-based (`x1`, `x2`, ...).

use serde::{Deserialize, Serialize};

use crate::algebroid::LieAlgebroid;
use crate::connection::{AConnection, RiemannMetric};
use crate::domain::DomainBox;
use crate::error::{Error, Result};
use crate::scalar_field::Expr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Structure identities.
    #[serde(default = "Tolerances::default_identity")]
    pub identity: f64,
    /// Admissibility of lifted paths.
    #[serde(default = "Tolerances::default_admissibility")]
    pub admissibility: f64,
    /// Reconstruction residuals in the metrizability test.
    #[serde(default = "Tolerances::default_metrize")]
    pub metrize: f64,
    /// `| |det H| − 1 |` threshold for the determinant certificate.
    #[serde(default = "Tolerances::default_determinant")]
    pub determinant: f64,
    /// Relative singular-value cutoff of the invariant-form null space.
    #[serde(default = "Tolerances::default_null_space")]
    pub null_space: f64,
}

impl Tolerances {
    fn default_identity() -> f64 {
        1e-10
    }
    fn default_admissibility() -> f64 {
        1e-6
    }
    fn default_metrize() -> f64 {
        1e-5
    }
    fn default_determinant() -> f64 {
        1e-6
    }
    fn default_null_space() -> f64 {
        1e-8
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: Self::default_identity(),
            admissibility: Self::default_admissibility(),
            metrize: Self::default_metrize(),
            determinant: Self::default_determinant(),
            null_space: Self::default_null_space(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub name: String,
    pub base_dim: usize,
    pub fiber_rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle_rank: Option<usize>,
    pub domain: Vec<[f64; 2]>,
    pub anchor: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub brackets: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<Vec<Vec<Vec<String>>>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Vec<f64>>,
}

fn config_err(path: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        msg: msg.into(),
    }
}

impl ProblemConfig {
    /// Parse JSON, reporting the JSON path of schema violations.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(
                if path.is_empty() { ".".into() } else { path },
                e.into_inner().to_string(),
            )
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn bundle_rank(&self) -> usize {
        self.bundle_rank.unwrap_or(self.fiber_rank)
    }
}

/// A validated problem: algebroid, domain, and optional metric and
/// connection.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub algebroid: LieAlgebroid,
    pub domain: DomainBox,
    pub metric: Option<RiemannMetric>,
    pub connection: Option<AConnection>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub base_point: Vec<f64>,
}

fn parse_at(text: &str, n: usize, path: &str) -> Result<Expr> {
    Expr::parse(text, n).map_err(|e| config_err(path, e.to_string()))
}

impl Problem {
    pub fn from_config(cfg: &ProblemConfig) -> Result<Self> {
        let (n, m, k) = (cfg.base_dim, cfg.fiber_rank, cfg.bundle_rank());
        if m == 0 {
            return Err(config_err("fiber_rank", "must be at least 1"));
        }
        if cfg.domain.len() != n {
            return Err(config_err(
                "domain",
                format!("expected {n} intervals, found {}", cfg.domain.len()),
            ));
        }
        let domain =
            DomainBox::new(cfg.domain.clone()).map_err(|e| config_err("domain", e.to_string()))?;

        if cfg.anchor.len() != m {
            return Err(config_err(
                "anchor",
                format!("expected {m} rows, found {}", cfg.anchor.len()),
            ));
        }
        let mut rows = Vec::with_capacity(m);
        for (a, row) in cfg.anchor.iter().enumerate() {
            if row.len() != n {
                return Err(config_err(
                    format!("anchor[{a}]"),
                    format!("expected {n} entries, found {}", row.len()),
                ));
            }
            rows.push(
                row.iter()
                    .enumerate()
                    .map(|(i, t)| parse_at(t, n, &format!("anchor[{a}][{i}]")))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let mut alg = LieAlgebroid::new(cfg.name.clone(), n, m, rows)?;

        if !cfg.brackets.is_empty() && cfg.brackets.len() != m {
            return Err(config_err(
                "brackets",
                format!("expected {m} tables, found {}", cfg.brackets.len()),
            ));
        }
        for (c, table) in cfg.brackets.iter().enumerate() {
            if table.len() != m {
                return Err(config_err(
                    format!("brackets[{c}]"),
                    format!("expected {m} rows, found {}", table.len()),
                ));
            }
            let full = table.iter().all(|row| row.len() == m);
            for (a, row) in table.iter().enumerate() {
                let path = format!("brackets[{c}][{a}]");
                if !full && row.len() != a {
                    return Err(config_err(
                        path,
                        format!("expected a strictly lower row of {a} entries or full rows of {m}"),
                    ));
                }
                for (b, t) in row.iter().enumerate() {
                    let e = parse_at(t, n, &format!("{path}[{b}]"))?;
                    alg = if full {
                        alg.with_raw_bracket(c, a, b, e)?
                    } else if e.is_zero() {
                        alg
                    } else {
                        alg.with_bracket(c, a, b, e)?
                    };
                }
            }
        }

        let metric = match &cfg.metric {
            None => None,
            Some(upper) => {
                if upper.len() != k {
                    return Err(config_err(
                        "metric",
                        format!("expected {k} rows, found {}", upper.len()),
                    ));
                }
                let mut rows = Vec::with_capacity(k);
                for (alpha, row) in upper.iter().enumerate() {
                    if row.len() != k - alpha {
                        return Err(config_err(
                            format!("metric[{alpha}]"),
                            format!(
                                "expected {} upper-triangular entries, found {}",
                                k - alpha,
                                row.len()
                            ),
                        ));
                    }
                    rows.push(
                        row.iter()
                            .enumerate()
                            .map(|(b, t)| parse_at(t, n, &format!("metric[{alpha}][{b}]")))
                            .collect::<Result<Vec<_>>>()?,
                    );
                }
                Some(RiemannMetric::new(n, rows)?)
            }
        };

        let connection = match &cfg.connection {
            None => None,
            Some(gamma) => {
                if gamma.len() != k {
                    return Err(config_err(
                        "connection",
                        format!("expected {k} planes, found {}", gamma.len()),
                    ));
                }
                let mut grid = Vec::with_capacity(k);
                for (beta, plane) in gamma.iter().enumerate() {
                    if plane.len() != k {
                        return Err(config_err(
                            format!("connection[{beta}]"),
                            format!("expected {k} rows"),
                        ));
                    }
                    let mut rows = Vec::with_capacity(k);
                    for (alpha, row) in plane.iter().enumerate() {
                        let path = format!("connection[{beta}][{alpha}]");
                        if row.len() != m {
                            return Err(config_err(
                                path,
                                format!("expected {m} entries, found {}", row.len()),
                            ));
                        }
                        rows.push(
                            row.iter()
                                .enumerate()
                                .map(|(a, t)| parse_at(t, n, &format!("{path}[{a}]")))
                                .collect::<Result<Vec<_>>>()?,
                        );
                    }
                    grid.push(rows);
                }
                Some(AConnection::from_exprs(n, m, grid, k == m)?)
            }
        };

        let base_point = match &cfg.base_point {
            Some(p) if p.len() != n => {
                return Err(config_err(
                    "base_point",
                    format!("expected {n} coordinates, found {}", p.len()),
                ))
            }
            Some(p) if !domain.contains(p) => {
                return Err(config_err("base_point", "outside the domain"))
            }
            Some(p) => p.clone(),
            None => domain.center(),
        };

        Ok(Problem {
            name: cfg.name.clone(),
            algebroid: alg,
            domain,
            metric,
            connection,
            seed: cfg.seed,
            tolerances: cfg.tolerances.clone(),
            base_point,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Problem::from_config(&ProblemConfig::from_json(text)?)
    }

    /// The explicit connection if one is given, else the Levi-Civita
    /// connection of the metric.
    pub fn effective_connection(&self) -> Result<AConnection> {
        if let Some(c) = &self.connection {
            return Ok(c.clone());
        }
        match &self.metric {
            Some(g) if g.rank() == self.algebroid.rank() => Ok(AConnection::levi_civita(g.clone())),
            Some(_) => Err(Error::InvalidArgument(
                "metric lives on a bundle of different rank; a connection must be given".into(),
            )),
            None => Err(Error::InvalidArgument(format!(
                "problem `{}` has neither a connection nor a metric",
                self.name
            ))),
        }
    }

    /// Structure-identity sample: a `5^n` lattice plus 100 seeded random
    /// points of the domain.
    pub fn identity_sample(&self) -> Vec<Vec<f64>> {
        self.domain.sample(self.seed, 5, 100)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SO3: &str = r#"{
        "name": "so3", "base_dim": 0, "fiber_rank": 3, "domain": [],
        "anchor": [[], [], []],
        "brackets": [[[], ["0"], ["0", "-1"]], [[], ["0"], ["1", "0"]], [[], ["-1"], ["0", "0"]]]
    }"#;

    #[test]
    fn lower_brackets_are_mirrored() {
        let p = Problem::from_json(SO3).unwrap();
        let l = p.algebroid.brackets_at::<f64>(&[]).unwrap();
        // L^2_01 = 1, L^2_10 = -1
        assert_eq!(l[(2 * 3) * 3 + 1], 1.0);
        assert_eq!(l[(2 * 3 + 1) * 3], -1.0);
        let r = p
            .algebroid
            .check_structure_identities(&p.identity_sample(), 1e-12)
            .unwrap();
        assert!(r.pass);
    }

    #[test]
    fn json_path_in_schema_errors() {
        let bad = SO3.replace("\"fiber_rank\": 3", "\"fiber_rank\": \"three\"");
        match ProblemConfig::from_json(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "fiber_rank"),
            other => panic!("{other:?}"),
        }
        let bad = SO3.replace("[\"0\", \"-1\"]", "[\"0\", \"x1\"]");
        match Problem::from_json(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "brackets[0][2][1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let cfg = ProblemConfig::from_json(SO3).unwrap();
        assert_eq!(ProblemConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn missing_connection_and_metric() {
        let p = Problem::from_json(SO3).unwrap();
        assert!(p.effective_connection().is_err());
    }
}

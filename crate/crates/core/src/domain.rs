use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `∏ [lo_i, hi_i]` declaring where the chart's expressions
/// are meant to be valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainBox {
    bounds: Vec<[f64; 2]>,
}

impl DomainBox {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        for (i, [lo, hi]) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!(
                    "domain axis {} has invalid interval [{lo}, {hi}]",
                    i + 1
                )));
            }
        }
        Ok(DomainBox { bounds })
    }

    /// The zero-dimensional box (base is a point).
    pub fn point() -> Self {
        DomainBox { bounds: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.bounds.len()
            && x.iter()
                .zip(&self.bounds)
                .all(|(v, [lo, hi])| *v >= *lo && *v <= *hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect()
    }

    /// Regular lattice with `per_axis` nodes on every axis (endpoints included).
    pub fn lattice(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for [lo, hi] in &self.bounds {
            let nodes: Vec<f64> = if per_axis <= 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..per_axis)
                    .map(|j| lo + (hi - lo) * j as f64 / (per_axis - 1) as f64)
                    .collect()
            };
            points = points
                .into_iter()
                .flat_map(|p| {
                    nodes.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn random_points(&self, count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                self.bounds
                    .iter()
                    .map(|[lo, hi]| {
                        if lo == hi {
                            *lo
                        } else {
                            rng.random_range(*lo..*hi)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Lattice plus seeded uniform random points. A zero-dimensional box
    /// yields the single empty point.
    pub fn sample(&self, seed: u64, per_axis: usize, random: usize) -> Vec<Vec<f64>> {
        if self.bounds.is_empty() {
            return vec![Vec::new()];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = self.lattice(per_axis);
        pts.extend(self.random_points(random, &mut rng));
        pts
    }
}

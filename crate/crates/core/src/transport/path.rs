use crate::error::{Error, Result};

/// One smooth piece of an A-path on a uniform time grid.
///
/// Pieces of a path share their junction node (same `t` and `x`), but may
/// carry different fiber values there: the fiber curve of a polyline lift
/// jumps at corners. Interpolation and finite differences never reach
/// across a junction.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    pub(crate) times: Vec<f64>,
    /// `x(t_j)` at `j * n .. (j + 1) * n`
    pub(crate) xs: Vec<f64>,
    /// `y(t_j)` at `j * m .. (j + 1) * m`
    pub(crate) ys: Vec<f64>,
}

impl PathSegment {
    pub fn nodes(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// A discretized curve `t ↦ (x(t), y(t))` in the algebroid.
#[derive(Debug, Clone, PartialEq)]
pub struct APath {
    n: usize,
    m: usize,
    segments: Vec<PathSegment>,
    admissibility: f64,
    vertical: bool,
}

/// Lagrange weights for evaluating at `t` from nodes `ts`.
fn lagrange_weights(ts: &[f64], t: f64) -> Vec<f64> {
    (0..ts.len())
        .map(|i| {
            ts.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(1.0, |w, (_, &tj)| w * (t - tj) / (ts[i] - tj))
        })
        .collect()
}

fn combine(values: &[f64], dim: usize, idx: &[usize], w: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for d in 0..dim {
        let first = values[idx[0] * dim + d];
        if idx.iter().all(|&j| values[j * dim + d] == first) {
            out.push(first);
        } else {
            out.push(
                idx.iter()
                    .zip(w)
                    .map(|(&j, &wj)| wj * values[j * dim + d])
                    .sum(),
            );
        }
    }
}

/// Derivative estimate at each node: centered inside, one-sided second order
/// at the ends. Assumes a uniform grid.
pub(crate) fn node_derivatives(times: &[f64], values: &[f64], dim: usize) -> Vec<f64> {
    let nodes = times.len();
    let mut out = vec![0.0; nodes * dim];
    if nodes < 2 {
        return out;
    }
    let h = (times[nodes - 1] - times[0]) / (nodes - 1) as f64;
    let v = |j: usize, d: usize| values[j * dim + d];
    for d in 0..dim {
        if nodes == 2 {
            let s = (v(1, d) - v(0, d)) / h;
            out[d] = s;
            out[dim + d] = s;
            continue;
        }
        out[d] = (-3.0 * v(0, d) + 4.0 * v(1, d) - v(2, d)) / (2.0 * h);
        let last = nodes - 1;
        out[last * dim + d] =
            (3.0 * v(last, d) - 4.0 * v(last - 1, d) + v(last - 2, d)) / (2.0 * h);
        for j in 1..last {
            out[j * dim + d] = (v(j + 1, d) - v(j - 1, d)) / (2.0 * h);
        }
    }
    out
}

impl APath {
    /// Assemble a path from segments; `admissibility` is the already measured
    /// residual `max |ρ(x) y − dx/dt|`.
    pub(crate) fn from_segments(
        n: usize,
        m: usize,
        segments: Vec<PathSegment>,
        admissibility: f64,
        vertical: bool,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidPath("path has no segments".into()));
        }
        let mut prev_end: Option<(f64, Vec<f64>)> = None;
        for seg in &segments {
            if seg.times.len() < 2 {
                return Err(Error::InvalidPath(
                    "segment needs at least two nodes".into(),
                ));
            }
            if seg.xs.len() != seg.times.len() * n || seg.ys.len() != seg.times.len() * m {
                return Err(Error::InvalidPath(
                    "segment arrays do not match the node count".into(),
                ));
            }
            if seg.times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidPath(
                    "time grid must be strictly increasing".into(),
                ));
            }
            if let Some((t_end, x_end)) = &prev_end {
                let gap = x_end
                    .iter()
                    .zip(&seg.xs[..n])
                    .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
                if (seg.times[0] - t_end).abs() > 1e-12 * t_end.abs().max(1.0) || gap > 1e-10 {
                    return Err(Error::InvalidPath(
                        "segments do not join continuously".into(),
                    ));
                }
            }
            let last = seg.times.len() - 1;
            prev_end = Some((seg.times[last], seg.xs[last * n..].to_vec()));
        }
        Ok(APath {
            n,
            m,
            segments,
            admissibility,
            vertical,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    /// Stored admissibility residual `max |ρ_a^i(x) y^a − dx^i/dt|`.
    pub fn admissibility_residual(&self) -> f64 {
        self.admissibility
    }

    pub fn is_vertical(&self) -> bool {
        self.vertical
    }

    pub fn start_time(&self) -> f64 {
        self.segments[0].times[0]
    }

    pub fn end_time(&self) -> f64 {
        let last = self.segments.last().expect("nonempty");
        *last.times.last().expect("nonempty")
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    pub fn steps(&self) -> usize {
        self.segments.iter().map(|s| s.nodes() - 1).sum()
    }

    pub fn start_x(&self) -> &[f64] {
        &self.segments[0].xs[..self.n]
    }

    pub fn end_x(&self) -> &[f64] {
        let last = self.segments.last().expect("nonempty");
        &last.xs[last.xs.len() - self.n..]
    }

    pub fn start_y(&self) -> &[f64] {
        &self.segments[0].ys[..self.m]
    }

    /// `x` at node `j` of segment `s`.
    pub fn x(&self, s: usize, j: usize) -> &[f64] {
        &self.segments[s].xs[j * self.n..(j + 1) * self.n]
    }

    pub fn y(&self, s: usize, j: usize) -> &[f64] {
        &self.segments[s].ys[j * self.m..(j + 1) * self.m]
    }

    pub fn t(&self, s: usize, j: usize) -> f64 {
        self.segments[s].times[j]
    }

    /// Cubic (or lower, for short segments) interpolation of `(x, y)` at time
    /// `t` inside step `j → j + 1` of segment `s`, using nodes of that
    /// segment only.
    pub fn interpolate(&self, s: usize, j: usize, t: f64, x: &mut Vec<f64>, y: &mut Vec<f64>) {
        let seg = &self.segments[s];
        let nodes = seg.nodes();
        let width = nodes.min(4);
        let start = j.saturating_sub(1).min(nodes - width);
        let idx: Vec<usize> = (start..start + width).collect();
        let ts: Vec<f64> = idx.iter().map(|&i| seg.times[i]).collect();
        let w = lagrange_weights(&ts, t);
        combine(&seg.xs, self.n, &idx, &w, x);
        combine(&seg.ys, self.m, &idx, &w, y);
    }

    /// The reverse path `t ↦ α(T − t)` with fiber values negated.
    pub fn reversed(&self) -> APath {
        let (t0, t1) = (self.start_time(), self.end_time());
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|seg| {
                let nodes = seg.nodes();
                let times = seg.times.iter().rev().map(|&t| t0 + (t1 - t)).collect();
                let mut xs = Vec::with_capacity(seg.xs.len());
                let mut ys = Vec::with_capacity(seg.ys.len());
                for j in (0..nodes).rev() {
                    xs.extend_from_slice(&seg.xs[j * self.n..(j + 1) * self.n]);
                    ys.extend(seg.ys[j * self.m..(j + 1) * self.m].iter().map(|v| -v));
                }
                PathSegment { times, xs, ys }
            })
            .collect();
        APath {
            segments,
            ..self.clone()
        }
    }

    /// This path followed by `next`, which is shifted in time to start where
    /// this one ends. Transport along the result is `P_next · P_self`.
    pub fn then(&self, next: &APath) -> Result<APath> {
        if next.n != self.n || next.m != self.m {
            return Err(Error::InvalidPath(
                "cannot join paths of different dimensions".into(),
            ));
        }
        let shift = self.end_time() - next.start_time();
        let mut segments = self.segments.clone();
        segments.extend(next.segments.iter().map(|seg| PathSegment {
            times: seg.times.iter().map(|t| t + shift).collect(),
            ..seg.clone()
        }));
        APath::from_segments(
            self.n,
            self.m,
            segments,
            self.admissibility.max(next.admissibility),
            self.vertical && next.vertical,
        )
    }

    /// Global node list `(segment, node)`, skipping the duplicated first node
    /// of every segment after the first.
    pub fn node_indices(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (s, seg) in self.segments.iter().enumerate() {
            let first = if s == 0 { 0 } else { 1 };
            out.extend((first..seg.nodes()).map(|j| (s, j)));
        }
        out
    }

    /// Every node including junction duplicates, segment by segment.
    pub fn all_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.segments
            .iter()
            .enumerate()
            .flat_map(|(s, seg)| (0..seg.nodes()).map(move |j| (s, j)))
    }

    /// CSV header for [`APath::csv_rows`].
    pub fn csv_header(&self, k: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=self.n).map(|i| format!("x{i}")));
        h.extend((1..=self.m).map(|a| format!("y{a}")));
        h.extend((1..=k).map(|b| format!("z{b}")));
        h
    }

    /// One row per node: `t, x..., y..., z...` (junction nodes appear once per
    /// adjoining segment so the fiber jump is visible).
    pub fn csv_rows(&self, section: Option<&AlphaSection>) -> Vec<Vec<f64>> {
        self.all_nodes()
            .map(|(s, j)| {
                let mut row = vec![self.t(s, j)];
                row.extend_from_slice(self.x(s, j));
                row.extend_from_slice(self.y(s, j));
                if let Some(sec) = section {
                    row.extend_from_slice(sec.z(s, j));
                }
                row
            })
            .collect()
    }
}

/// Values `z(t_j) ∈ R^k` of a section along an A-path, on the path's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSection {
    k: usize,
    /// per segment, `z` at `j * k .. (j + 1) * k`
    values: Vec<Vec<f64>>,
    /// node counts, for grid checks
    shape: Vec<usize>,
}

impl AlphaSection {
    pub(crate) fn from_values(k: usize, values: Vec<Vec<f64>>) -> Self {
        let shape = values.iter().map(|v| v.len() / k.max(1)).collect();
        AlphaSection { k, values, shape }
    }

    /// Sample `f(t, x(t))` at every node of `path`.
    pub fn from_fn(
        path: &APath,
        k: usize,
        mut f: impl FnMut(f64, &[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(path.segments.len());
        for (s, seg) in path.segments.iter().enumerate() {
            let mut v = Vec::with_capacity(seg.nodes() * k);
            for j in 0..seg.nodes() {
                let z = f(path.t(s, j), path.x(s, j));
                if z.len() != k {
                    return Err(Error::Dimension(format!(
                        "section value has {} entries, expected {k}",
                        z.len()
                    )));
                }
                v.extend(z);
            }
            values.push(v);
        }
        Ok(AlphaSection::from_values(k, values))
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn z(&self, s: usize, j: usize) -> &[f64] {
        &self.values[s][j * self.k..(j + 1) * self.k]
    }

    pub fn start(&self) -> &[f64] {
        self.z(0, 0)
    }

    pub fn end(&self) -> &[f64] {
        let last = self.values.last().expect("nonempty");
        &last[last.len() - self.k..]
    }

    pub(crate) fn segment_values(&self, s: usize) -> &[f64] {
        &self.values[s]
    }

    pub fn matches(&self, path: &APath) -> bool {
        self.shape.len() == path.segments.len()
            && self
                .shape
                .iter()
                .zip(&path.segments)
                .all(|(&n, seg)| n == seg.nodes())
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n_nodes: usize) -> APath {
        let times: Vec<f64> = (0..n_nodes)
            .map(|j| j as f64 / (n_nodes - 1) as f64)
            .collect();
        let xs = times.iter().map(|t| t * t * t).collect();
        let ys = times.iter().map(|t| 3.0 * t * t).collect();
        APath::from_segments(1, 1, vec![PathSegment { times, xs, ys }], 0.0, false).unwrap()
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let p = line(11);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for j in [0, 4, 9] {
            let t = p.t(0, j) + 0.05;
            p.interpolate(0, j, t, &mut x, &mut y);
            assert!((x[0] - t * t * t).abs() < 1e-15);
            assert!((y[0] - 3.0 * t * t).abs() < 1e-15);
        }
    }

    #[test]
    fn reversal_negates_fiber() {
        let p = line(5);
        let r = p.reversed();
        assert_eq!(r.start_x(), p.end_x());
        assert_eq!(r.y(0, 0), &[-3.0]);
        assert_eq!(r.t(0, 4), 1.0);
        assert_eq!(r.reversed(), p);
    }

    #[test]
    fn join_requires_continuity() {
        let p = line(5);
        assert!(p.then(&p).is_err());
        let joined = p.then(&p.reversed()).unwrap();
        assert_eq!(joined.segments().len(), 2);
        assert_eq!(joined.end_time(), 2.0);
        assert_eq!(joined.node_indices().len(), 9);
    }

    #[test]
    fn one_sided_derivatives_are_second_order_exact_on_quadratics() {
        let times = [0.0, 0.5, 1.0, 1.5];
        let vals: Vec<f64> = times.iter().map(|t| t * t).collect();
        let d = node_derivatives(&times, &vals, 1);
        for (t, dv) in times.iter().zip(d) {
            assert!((dv - 2.0 * t).abs() < 1e-14);
        }
    }
}

use std::f64::consts::TAU;

/// A piecewise smooth curve in the base, parametrized on consecutive time
/// spans. Piece `p` is smooth on its closed span; velocities may jump
/// between pieces.
pub trait BaseCurve: Sync {
    fn dim(&self) -> usize;

    fn pieces(&self) -> usize {
        1
    }

    /// `(t_start, t_end)` of piece `p`.
    fn span(&self, p: usize) -> (f64, f64);

    fn position(&self, p: usize, t: f64) -> Vec<f64>;

    /// Velocity on piece `p`. The default is a fourth-order central
    /// difference of [`BaseCurve::position`].
    fn velocity(&self, p: usize, t: f64) -> Vec<f64> {
        let (t0, t1) = self.span(p);
        let h = 1e-3 * (t1 - t0).abs().max(1e-300);
        let at = |s: f64| self.position(p, t + s * h);
        let (a, b, c, d) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
        (0..self.dim())
            .map(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h))
            .collect()
    }
}

/// Straight segment traversed at constant speed on `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub duration: f64,
}

impl BaseCurve for Segment {
    fn dim(&self) -> usize {
        self.from.len()
    }

    fn span(&self, _: usize) -> (f64, f64) {
        (0.0, self.duration)
    }

    fn position(&self, _: usize, t: f64) -> Vec<f64> {
        let s = t / self.duration;
        self.from
            .iter()
            .zip(&self.to)
            .map(|(a, b)| a + s * (b - a))
            .collect()
    }

    fn velocity(&self, _: usize, _: f64) -> Vec<f64> {
        self.from
            .iter()
            .zip(&self.to)
            .map(|(a, b)| (b - a) / self.duration)
            .collect()
    }
}

/// Circle in the coordinate plane `(axes.0, axes.1)` through
/// `center + radius (cos φ, sin φ)`, with `φ = phase + 2π turns t / duration`.
#[derive(Debug, Clone, PartialEq)]
pub struct Circle {
    pub center: Vec<f64>,
    pub radius: f64,
    pub axes: (usize, usize),
    pub phase: f64,
    pub turns: f64,
    pub duration: f64,
}

impl Circle {
    /// One counterclockwise turn starting at angle 0 and lasting 2π.
    pub fn unit_speed(center: Vec<f64>, radius: f64, axes: (usize, usize)) -> Self {
        Circle {
            center,
            radius,
            axes,
            phase: 0.0,
            turns: 1.0,
            duration: TAU * radius,
        }
    }

    fn omega(&self) -> f64 {
        TAU * self.turns / self.duration
    }
}

impl BaseCurve for Circle {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn span(&self, _: usize) -> (f64, f64) {
        (0.0, self.duration)
    }

    fn position(&self, _: usize, t: f64) -> Vec<f64> {
        let phi = self.phase + self.omega() * t;
        let mut x = self.center.clone();
        x[self.axes.0] += self.radius * phi.cos();
        x[self.axes.1] += self.radius * phi.sin();
        x
    }

    fn velocity(&self, _: usize, t: f64) -> Vec<f64> {
        let w = self.omega();
        let phi = self.phase + w * t;
        let mut v = vec![0.0; self.center.len()];
        v[self.axes.0] = -self.radius * w * phi.sin();
        v[self.axes.1] = self.radius * w * phi.cos();
        v
    }
}

/// Polygonal curve through `vertices`, every leg taking `duration / legs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<Vec<f64>>,
    pub duration: f64,
}

impl Polyline {
    /// Closed axis-parallel rectangle with corner `corner` and side lengths
    /// `sides` along the coordinate axes `axes`, traversed counterclockwise.
    pub fn rectangle(
        corner: Vec<f64>,
        axes: (usize, usize),
        sides: (f64, f64),
        duration: f64,
    ) -> Self {
        let (i, j) = axes;
        let mut v = vec![corner.clone(); 5];
        v[1][i] += sides.0;
        v[2][i] += sides.0;
        v[2][j] += sides.1;
        v[3][j] += sides.1;
        Polyline {
            vertices: v,
            duration,
        }
    }

    fn leg_time(&self) -> f64 {
        self.duration / (self.vertices.len() - 1) as f64
    }
}

impl BaseCurve for Polyline {
    fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    fn pieces(&self) -> usize {
        self.vertices.len() - 1
    }

    fn span(&self, p: usize) -> (f64, f64) {
        let h = self.leg_time();
        (p as f64 * h, (p + 1) as f64 * h)
    }

    fn position(&self, p: usize, t: f64) -> Vec<f64> {
        let (t0, _) = self.span(p);
        let s = (t - t0) / self.leg_time();
        let (a, b) = (&self.vertices[p], &self.vertices[p + 1]);
        a.iter().zip(b).map(|(u, v)| u + s * (v - u)).collect()
    }

    fn velocity(&self, p: usize, _: f64) -> Vec<f64> {
        let h = self.leg_time();
        let (a, b) = (&self.vertices[p], &self.vertices[p + 1]);
        a.iter().zip(b).map(|(u, v)| (v - u) / h).collect()
    }
}

/// A single smooth piece given by a closure; velocity by central differences.
pub struct FnCurve<F> {
    pub dim: usize,
    pub duration: f64,
    pub f: F,
}

impl<F: Fn(f64) -> Vec<f64> + Sync> BaseCurve for FnCurve<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn span(&self, _: usize) -> (f64, f64) {
        (0.0, self.duration)
    }

    fn position(&self, _: usize, t: f64) -> Vec<f64> {
        (self.f)(t)
    }
}

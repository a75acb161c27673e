//! Bounded planar domains with C² boundary.
//!
//! Signed distance is positive inside and negative outside. Curvature is
//! measured against the inner normal, so convex pieces have κ > 0 and the
//! unit circle has κ ≡ 1.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{DiffExpr, ExprError};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }
    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
    pub fn padded(&self, m: f64) -> BBox {
        BBox {
            min: Point::new(self.min.x - m, self.min.y - m),
            max: Point::new(self.max.x + m, self.max.y + m),
        }
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("malformed domain: {0}")]
    Malformed(String),
    #[error("focal point reached: 1 - t*kappa = {0:.3e} <= 0")]
    FocalPoint(f64),
    #[error("arclength {s} outside [0, {length}]")]
    ArclengthOutOfRange { s: f64, length: f64 },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Shape descriptor. Level-set shapes (dumbbell and generic) are `f < 0`
/// inside and must be star-shaped about `seed`.
#[derive(Debug, Clone)]
pub enum Shape {
    Disk { center: Point, radius: f64 },
    Ellipse { center: Point, a: f64, b: f64 },
    RoundedRect { center: Point, half_width: f64, half_height: f64, radius: f64 },
    Dumbbell { c: f64, b: f64, level: LevelSet },
    LevelSet(LevelSet),
}

#[derive(Debug, Clone)]
pub struct LevelSet {
    pub f: DiffExpr,
    pub seed: Point,
    pub extent: f64,
    // r(θ) at uniformly spaced angles, used as Newton starting points
    table: Vec<f64>,
}

const RADIUS_TABLE: usize = 1024;

impl LevelSet {
    pub fn new(src: &str, seed: Point, extent: f64) -> Result<Self, GeometryError> {
        let f = DiffExpr::parse(src)?;
        if !(f.value(seed.x, seed.y) < 0.0) {
            return Err(GeometryError::Malformed(format!(
                "level-set seed {seed} is not inside (f = {})",
                f.value(seed.x, seed.y)
            )));
        }
        let mut ls = LevelSet {
            f,
            seed,
            extent,
            table: Vec::new(),
        };
        let mut table = Vec::with_capacity(RADIUS_TABLE);
        for i in 0..RADIUS_TABLE {
            table.push(ls.march_radius(TAU * i as f64 / RADIUS_TABLE as f64)?);
        }
        ls.table = table;
        Ok(ls)
    }

    fn value(&self, p: Point) -> f64 {
        self.f.value(p.x, p.y)
    }

    fn grad(&self, p: Point) -> Point {
        let g = self.f.gradient(p.x, p.y);
        Point::new(g[0], g[1])
    }

    fn curvature_at(&self, p: Point) -> f64 {
        let [fx, fy] = self.f.gradient(p.x, p.y);
        let h = self.f.hessian(p.x, p.y);
        let g = fx.hypot(fy);
        (h[0][0] * fy * fy - 2.0 * fx * fy * h[0][1] + h[1][1] * fx * fx) / (g * g * g)
    }

    /// First crossing along the ray at angle θ, found by marching outward.
    fn march_radius(&self, theta: f64) -> Result<f64, GeometryError> {
        let e = Point::new(theta.cos(), theta.sin());
        let g = |r: f64| self.value(self.seed + e * r);
        let steps = 2000;
        let dr = self.extent / steps as f64;
        let mut lo = 0.0;
        for i in 1..=steps {
            let r = dr * i as f64;
            if g(r) >= 0.0 {
                return Ok(self.refine_radius(e, lo, r));
            }
            lo = r;
        }
        Err(GeometryError::Malformed(format!(
            "no boundary crossing within extent {} along angle {theta:.4}",
            self.extent
        )))
    }

    /// Safeguarded Newton on a bracket with g(lo) < 0 <= g(hi).
    fn refine_radius(&self, e: Point, mut lo: f64, mut hi: f64) -> f64 {
        let mut r = 0.5 * (lo + hi);
        for _ in 0..100 {
            let p = self.seed + e * r;
            let g = self.value(p);
            if g < 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            let dg = self.grad(p).dot(e);
            let mut next = r - g / dg;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - r).abs() <= 1e-15 * (1.0 + r) || hi - lo <= 1e-15 * (1.0 + r) {
                return next;
            }
            r = next;
        }
        r
    }

    /// Radius of the boundary along direction θ from the seed.
    fn radius(&self, theta: f64) -> Result<f64, GeometryError> {
        let e = Point::new(theta.cos(), theta.sin());
        let x = theta.rem_euclid(TAU) / TAU * RADIUS_TABLE as f64;
        let i = (x.floor() as usize).min(RADIUS_TABLE - 1);
        let t = x - i as f64;
        let guess = (1.0 - t) * self.table[i] + t * self.table[(i + 1) % RADIUS_TABLE];
        let g = |r: f64| self.value(self.seed + e * r);
        let (mut lo, mut hi) = (0.95 * guess, 1.05 * guess);
        let mut widen = 0;
        while !(g(lo) < 0.0 && g(hi) >= 0.0) {
            widen += 1;
            if widen > 8 {
                return self.march_radius(theta);
            }
            lo *= 0.8;
            hi = (hi * 1.25).min(self.extent);
        }
        Ok(self.refine_radius(e, lo, hi))
    }

    fn param(&self, theta: f64) -> Result<Point, GeometryError> {
        let r = self.radius(theta)?;
        Ok(self.seed + Point::new(theta.cos(), theta.sin()) * r)
    }

    /// dγ/dθ by implicit differentiation of f(seed + r(θ) e(θ)) = 0.
    fn param_velocity(&self, theta: f64, p: Point) -> Result<Point, GeometryError> {
        let e = Point::new(theta.cos(), theta.sin());
        let r = (p - self.seed).norm();
        let g = self.grad(p);
        let fr = g.dot(e);
        if !(fr > 0.0) {
            return Err(GeometryError::Malformed(format!(
                "level set is not star-shaped about {} near {p}",
                self.seed
            )));
        }
        let ft = g.dot(e.perp()) * r;
        let rp = -ft / fr;
        Ok(e * rp + e.perp() * r)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundarySample {
    pub s: f64,
    pub point: Point,
    /// Inner unit normal.
    pub normal: Point,
    pub kappa: f64,
}

/// Closest boundary point to a query.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    pub foot: Point,
    pub normal: Point,
    pub distance: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub shape: Shape,
    pub bbox: BBox,
    pub boundary_samples: Vec<BoundarySample>,
    pub length: f64,
    pub diameter: f64,
    pub tau: f64,
    // arclength table for parametrized shapes: (theta, s)
    arc_table: Vec<(f64, f64)>,
}

pub const DEFAULT_SAMPLES: usize = 4096;

impl DomainSpec {
    pub fn disk(center: Point, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0) {
            return Err(GeometryError::Malformed(format!("disk radius {radius} must be positive")));
        }
        Self::build(Shape::Disk { center, radius }, DEFAULT_SAMPLES)
    }

    pub fn unit_disk() -> Self {
        Self::disk(Point::new(0.0, 0.0), 1.0).expect("unit disk")
    }

    pub fn ellipse(center: Point, a: f64, b: f64) -> Result<Self, GeometryError> {
        if !(a > 0.0 && b > 0.0) {
            return Err(GeometryError::Malformed("ellipse semi-axes must be positive".into()));
        }
        Self::build(Shape::Ellipse { center, a, b }, DEFAULT_SAMPLES)
    }

    pub fn rounded_rect(center: Point, half_width: f64, half_height: f64, radius: f64) -> Result<Self, GeometryError> {
        if !(radius >= 0.0 && radius <= half_width && radius <= half_height && half_width > 0.0 && half_height > 0.0) {
            return Err(GeometryError::Malformed(
                "rounded rectangle needs 0 <= radius <= min(half_width, half_height)".into(),
            ));
        }
        Self::build(
            Shape::RoundedRect {
                center,
                half_width,
                half_height,
                radius,
            },
            DEFAULT_SAMPLES,
        )
    }

    /// Axis-aligned rectangle with sharp corners. The boundary is not C²;
    /// it is meant for problems with explicitly known solutions.
    pub fn rect(center: Point, half_width: f64, half_height: f64) -> Result<Self, GeometryError> {
        Self::rounded_rect(center, half_width, half_height, 0.0)
    }

    /// Cassini oval (x²+y²)² − 2c²(x²−y²) + c⁴ − b⁴ = 0. For c < b < √2·c
    /// it is a single peanut-shaped loop with a concave neck on the y axis.
    pub fn dumbbell(c: f64, b: f64) -> Result<Self, GeometryError> {
        if !(c > 0.0 && b > c && b < 2f64.sqrt() * c) {
            return Err(GeometryError::Malformed(
                "dumbbell needs 0 < c < b < sqrt(2)*c".into(),
            ));
        }
        let src = format!("(x^2 + y^2)^2 - 2*{c}^2*(x^2 - y^2) + {c}^4 - {b}^4");
        let level = LevelSet::new(&src, Point::new(0.0, 0.0), 4.0 * b)?;
        Self::build(Shape::Dumbbell { c, b, level }, DEFAULT_SAMPLES)
    }

    pub fn level_set(src: &str, seed: Point, extent: f64) -> Result<Self, GeometryError> {
        let level = LevelSet::new(src, seed, extent)?;
        Self::build(Shape::LevelSet(level), DEFAULT_SAMPLES)
    }

    pub fn with_samples(self, samples: usize) -> Result<Self, GeometryError> {
        Self::build(self.shape, samples)
    }

    pub fn build(shape: Shape, samples: usize) -> Result<Self, GeometryError> {
        if samples < 16 {
            return Err(GeometryError::Malformed(format!("{samples} boundary samples is too few")));
        }
        let mut dom = DomainSpec {
            shape,
            bbox: BBox {
                min: Point::default(),
                max: Point::default(),
            },
            boundary_samples: Vec::new(),
            length: 0.0,
            diameter: 0.0,
            tau: 0.0,
            arc_table: Vec::new(),
        };
        dom.length = dom.compute_length()?;
        let mut out = Vec::with_capacity(samples);
        for i in 0..samples {
            let s = dom.length * i as f64 / samples as f64;
            let (point, normal, kappa) = dom.sample_at(s)?;
            out.push(BoundarySample { s, point, normal, kappa });
        }
        for w in out.windows(2) {
            if w[0].point.dist(w[1].point) < 1e-14 {
                return Err(GeometryError::Malformed(format!(
                    "coincident boundary samples at s = {}",
                    w[0].s
                )));
            }
        }
        dom.boundary_samples = out;
        let (mut lo, mut hi) = (Point::new(f64::MAX, f64::MAX), Point::new(f64::MIN, f64::MIN));
        for b in &dom.boundary_samples {
            lo = Point::new(lo.x.min(b.point.x), lo.y.min(b.point.y));
            hi = Point::new(hi.x.max(b.point.x), hi.y.max(b.point.y));
        }
        dom.bbox = match &dom.shape {
            Shape::Disk { center, radius } => BBox {
                min: *center - Point::new(*radius, *radius),
                max: *center + Point::new(*radius, *radius),
            },
            Shape::Ellipse { center, a, b } => BBox {
                min: *center - Point::new(*a, *b),
                max: *center + Point::new(*a, *b),
            },
            Shape::RoundedRect {
                center,
                half_width,
                half_height,
                ..
            } => BBox {
                min: *center - Point::new(*half_width, *half_height),
                max: *center + Point::new(*half_width, *half_height),
            },
            _ => BBox { min: lo, max: hi },
        };
        dom.diameter = match &dom.shape {
            Shape::Disk { radius, .. } => 2.0 * radius,
            Shape::Ellipse { a, b, .. } => 2.0 * a.max(*b),
            _ => sampled_diameter(&dom.boundary_samples),
        };
        dom.tau = dom.compute_tau();
        Ok(dom)
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            Shape::Disk { .. } => "disk",
            Shape::Ellipse { .. } => "ellipse",
            Shape::RoundedRect { radius: 0.0, .. } => "rect",
            Shape::RoundedRect { .. } => "rounded_rect",
            Shape::Dumbbell { .. } => "dumbbell",
            Shape::LevelSet(_) => "levelset",
        }
    }

    fn level(&self) -> Option<&LevelSet> {
        match &self.shape {
            Shape::Dumbbell { level, .. } | Shape::LevelSet(level) => Some(level),
            _ => None,
        }
    }

    fn compute_length(&mut self) -> Result<f64, GeometryError> {
        match &self.shape {
            Shape::Disk { radius, .. } => Ok(TAU * radius),
            Shape::RoundedRect {
                half_width,
                half_height,
                radius,
                ..
            } => Ok(4.0 * (half_width - radius) + 4.0 * (half_height - radius) + TAU * radius),
            _ => {
                let panels = 512;
                let mut table = Vec::with_capacity(panels + 1);
                table.push((0.0, 0.0));
                let mut s = 0.0;
                for i in 0..panels {
                    let t0 = TAU * i as f64 / panels as f64;
                    let t1 = TAU * (i + 1) as f64 / panels as f64;
                    let mut err = None;
                    let q = quadrature::integrate(
                        |t| match self.speed(t) {
                            Ok(v) => v,
                            Err(e) => {
                                err.get_or_insert(e);
                                0.0
                            }
                        },
                        t0,
                        t1,
                        1e-13,
                        64,
                    );
                    if let Some(e) = err {
                        return Err(e);
                    }
                    s += q.value;
                    table.push((t1, s));
                }
                self.arc_table = table;
                Ok(s)
            }
        }
    }

    /// Parametrization by angle for ellipse and level-set shapes.
    fn param(&self, theta: f64) -> Result<Point, GeometryError> {
        match &self.shape {
            Shape::Ellipse { center, a, b } => Ok(*center + Point::new(a * theta.cos(), b * theta.sin())),
            Shape::Dumbbell { level, .. } | Shape::LevelSet(level) => level.param(theta),
            _ => unreachable!("param is only used for angle-parametrized shapes"),
        }
    }

    fn speed(&self, theta: f64) -> Result<f64, GeometryError> {
        match &self.shape {
            Shape::Ellipse { a, b, .. } => Ok((a * theta.sin()).hypot(b * theta.cos())),
            Shape::Dumbbell { level, .. } | Shape::LevelSet(level) => {
                let p = level.param(theta)?;
                Ok(level.param_velocity(theta, p)?.norm())
            }
            _ => unreachable!(),
        }
    }

    /// Parameter angle for arclength s (angle-parametrized shapes).
    fn theta_of_s(&self, s: f64) -> Result<f64, GeometryError> {
        let t = &self.arc_table;
        let idx = t.partition_point(|&(_, si)| si <= s).clamp(1, t.len() - 1);
        let (t0, s0) = t[idx - 1];
        let (t1, s1) = t[idx];
        let mut theta = t0 + (t1 - t0) * (s - s0) / (s1 - s0);
        for _ in 0..30 {
            let (q, _) = quadrature::gk15(&mut |u| self.speed(u).unwrap_or(0.0), t0, theta);
            let f = s0 + q - s;
            let sp = self.speed(theta)?;
            if sp < 1e-14 {
                return Err(GeometryError::Malformed(format!("degenerate parametrization at angle {theta}")));
            }
            let step = f / sp;
            theta = (theta - step).clamp(t0, t1);
            if step.abs() < 1e-15 {
                break;
            }
        }
        Ok(theta)
    }

    /// Point, inner normal and curvature at arclength s.
    pub fn sample_at(&self, s: f64) -> Result<(Point, Point, f64), GeometryError> {
        let s = s.rem_euclid(self.length);
        match &self.shape {
            Shape::Disk { center, radius } => {
                let th = s / radius;
                let e = Point::new(th.cos(), th.sin());
                Ok((*center + e * *radius, -e, 1.0 / radius))
            }
            Shape::Ellipse { center, a, b } => {
                let th = self.theta_of_s(s)?;
                let p = *center + Point::new(a * th.cos(), b * th.sin());
                let n = -Point::new(b * th.cos(), a * th.sin()).normalized();
                Ok((p, n, ellipse_curvature(*a, *b, th)))
            }
            Shape::RoundedRect {
                center,
                half_width,
                half_height,
                radius,
            } => Ok(rounded_rect_at(*center, *half_width, *half_height, *radius, s)),
            Shape::Dumbbell { level, .. } | Shape::LevelSet(level) => {
                let th = self.theta_of_s(s)?;
                let p = level.param(th)?;
                let n = -level.grad(p).normalized();
                Ok((p, n, level.curvature_at(p)))
            }
        }
    }

    /// Signed distance to the boundary: positive inside.
    pub fn signed_distance(&self, x: Point) -> f64 {
        self.project(x).distance
    }

    /// A function with the same zero set and sign as the signed distance,
    /// cheap to evaluate. Used to locate boundary crossings.
    pub fn level_value(&self, x: Point) -> f64 {
        match self.level() {
            Some(l) => -l.value(x),
            None => self.signed_distance(x),
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        self.level_value(x) > 0.0
    }

    pub fn project(&self, x: Point) -> Projection {
        match &self.shape {
            Shape::Disk { center, radius } => {
                let v = x - *center;
                let r = v.norm();
                let e = if r > 0.0 { v * (1.0 / r) } else { Point::new(1.0, 0.0) };
                Projection {
                    foot: *center + e * *radius,
                    normal: -e,
                    distance: radius - r,
                    kappa: 1.0 / radius,
                }
            }
            Shape::Ellipse { center, a, b } => ellipse_project(*center, *a, *b, x),
            Shape::RoundedRect {
                center,
                half_width,
                half_height,
                radius,
            } => rounded_rect_project(*center, *half_width, *half_height, *radius, x),
            Shape::Dumbbell { level, .. } | Shape::LevelSet(level) => self.level_project(level, x),
        }
    }

    fn nearest_sample(&self, x: Point) -> usize {
        let mut best = (f64::MAX, 0);
        for (i, b) in self.boundary_samples.iter().enumerate() {
            let d2 = (b.point - x).norm2();
            if d2 < best.0 {
                best = (d2, i);
            }
        }
        best.1
    }

    fn level_project(&self, level: &LevelSet, x: Point) -> Projection {
        let i0 = self.nearest_sample(x);
        let start = self.boundary_samples[i0].point;
        let inside = level.value(x) < 0.0;
        let finish = |y: Point| {
            let n = -level.grad(y).normalized();
            let dist = x.dist(y);
            Projection {
                foot: y,
                normal: n,
                distance: if inside { dist } else { -dist },
                kappa: level.curvature_at(y),
            }
        };
        // Newton on F(y) = [f(y), (x - y) × ∇f(y)]
        let mut y = start;
        let mut ok = false;
        for _ in 0..50 {
            let [fx, fy] = level.f.gradient(y.x, y.y);
            let h = level.f.hessian(y.x, y.y);
            let r = x - y;
            let f0 = level.value(y);
            let g0 = r.x * fy - r.y * fx;
            let j00 = fx;
            let j01 = fy;
            let j10 = -fy + r.x * h[0][1] - r.y * h[0][0];
            let j11 = r.x * h[1][1] + fx - r.y * h[0][1];
            let det = j00 * j11 - j01 * j10;
            if !(det.abs() > 1e-300) {
                break;
            }
            let dx = (f0 * j11 - j01 * g0) / det;
            let dy = (j00 * g0 - j10 * f0) / det;
            y = Point::new(y.x - dx, y.y - dy);
            if !y.is_finite() {
                break;
            }
            if dx.hypot(dy) < 1e-14 * (1.0 + y.norm()) {
                ok = true;
                break;
            }
        }
        let sample_d = x.dist(start);
        let spacing = self.length / self.boundary_samples.len() as f64;
        if ok && x.dist(y) <= sample_d + 1e-12 && y.dist(start) < 4.0 * spacing + sample_d {
            return finish(y);
        }
        // fallback: golden-section over the angle about the nearest sample
        let th0 = (start - level.seed).y.atan2((start - level.seed).x);
        let dth = 4.0 * TAU / self.boundary_samples.len() as f64;
        let obj = |t: f64| level.param(t).map(|p| p.dist(x)).unwrap_or(f64::MAX);
        let (mut lo, mut hi) = (th0 - dth, th0 + dth);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = hi - g * (hi - lo);
        let mut d = lo + g * (hi - lo);
        let (mut fc, mut fd) = (obj(c), obj(d));
        for _ in 0..200 {
            if hi - lo < 1e-15 {
                break;
            }
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - g * (hi - lo);
                fc = obj(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + g * (hi - lo);
                fd = obj(d);
            }
        }
        let y = level.param(0.5 * (lo + hi)).unwrap_or(start);
        finish(y)
    }

    /// Curvature at arclength s. Analytic where a closed form exists,
    /// otherwise a fourth-order central difference of the parametrization.
    pub fn boundary_curvature(&self, s: f64) -> Result<f64, GeometryError> {
        if !(s >= 0.0 && s <= self.length) {
            return Err(GeometryError::ArclengthOutOfRange { s, length: self.length });
        }
        match &self.shape {
            Shape::Disk { radius, .. } => Ok(1.0 / radius),
            Shape::Ellipse { a, b, .. } => Ok(ellipse_curvature(*a, *b, self.theta_of_s(s)?)),
            Shape::RoundedRect { .. } => Ok(self.sample_at(s)?.2),
            _ => {
                let th = self.theta_of_s(s)?;
                self.fd_curvature(th)
            }
        }
    }

    /// Curvature of the angle parametrization by five-point differences.
    pub fn fd_curvature(&self, theta: f64) -> Result<f64, GeometryError> {
        let hs = 1e-2;
        let p: Vec<Point> = (-2..=2)
            .map(|k| self.param(theta + hs * k as f64))
            .collect::<Result<_, _>>()?;
        for w in p.windows(2) {
            if w[0].dist(w[1]) < 1e-14 {
                return Err(GeometryError::Malformed(format!(
                    "coincident parametrization samples near angle {theta}"
                )));
            }
        }
        let d1 = (p[0] - p[1] * 8.0 + p[3] * 8.0 - p[4]) * (1.0 / (12.0 * hs));
        let d2 = (-p[0] + p[1] * 16.0 - p[2] * 30.0 + p[3] * 16.0 - p[4]) * (1.0 / (12.0 * hs * hs));
        let sp = d1.norm();
        if sp < 1e-12 {
            return Err(GeometryError::Malformed(format!("degenerate parametrization at angle {theta}")));
        }
        Ok(d1.cross(d2) / (sp * sp * sp))
    }

    /// Angle-parametrized point, exposed for curvature cross-checks.
    pub fn param_point(&self, theta: f64) -> Option<Point> {
        match &self.shape {
            Shape::Disk { center, radius } => Some(*center + Point::new(theta.cos(), theta.sin()) * *radius),
            Shape::RoundedRect { .. } => None,
            _ => self.param(theta).ok(),
        }
    }

    fn compute_tau(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius, .. } => *radius,
            Shape::Ellipse { a, b, .. } => {
                let (big, small) = if a >= b { (*a, *b) } else { (*b, *a) };
                small * small / big
            }
            // sharp corners: no interior ball touches there
            Shape::RoundedRect { radius, .. } if *radius == 0.0 => 0.0,
            _ => {
                let kmax = self
                    .boundary_samples
                    .iter()
                    .map(|b| b.kappa)
                    .fold(0.0f64, f64::max);
                let focal = if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY };
                focal.min(inscribed_clearance(&self.boundary_samples))
            }
        }
    }

    /// κ_t = κ/(1 − tκ), the curvature of the parallel curve at depth t.
    pub fn parallel_curvature(&self, s: f64, t: f64) -> Result<f64, GeometryError> {
        let k = self.boundary_curvature(s)?;
        parallel_curvature(k, t)
    }

    pub fn smoothness_radius(&self) -> f64 {
        self.tau
    }

    /// Boundary sample closest to a point (usually a boundary point).
    pub fn closest_sample(&self, x: Point) -> &BoundarySample {
        &self.boundary_samples[self.nearest_sample(x)]
    }
}

pub fn parallel_curvature(kappa: f64, t: f64) -> Result<f64, GeometryError> {
    let q = 1.0 - t * kappa;
    if q <= 0.0 {
        return Err(GeometryError::FocalPoint(q));
    }
    Ok(kappa / q)
}

/// Radius of the largest disk tangent at each sample that contains no other
/// sample, minimized over the boundary. Captures both focal distance and
/// the medial axis clearance.
pub fn inscribed_clearance(samples: &[BoundarySample]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, y) in samples.iter().enumerate() {
        let mut r = f64::INFINITY;
        for (j, z) in samples.iter().enumerate() {
            if i == j {
                continue;
            }
            let v = z.point - y.point;
            let vn = v.dot(y.normal);
            if vn > 0.0 {
                r = r.min(v.norm2() / (2.0 * vn));
            }
        }
        best = best.min(r);
    }
    best
}

fn sampled_diameter(samples: &[BoundarySample]) -> f64 {
    let mut d2: f64 = 0.0;
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            d2 = d2.max((a.point - b.point).norm2());
        }
    }
    d2.sqrt()
}

fn ellipse_curvature(a: f64, b: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    a * b / (a * a * s * s + b * b * c * c).powf(1.5)
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let r0s = n0 / (s + r0);
        let r1s = z1 / (s + 1.0);
        let gs = r0s * r0s + r1s * r1s - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Closest point on the axis-aligned ellipse (e0 ≥ e1) to (y0, y1) in the
/// closed first quadrant. Robust bisection on the Lagrange multiplier.
fn ellipse_foot_quadrant(e0: f64, e1: f64, y0: f64, y1: f64) -> (f64, f64) {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1) * (e0 / e1);
                let sb = ellipse_root(r0, z0, z1, g);
                (r0 * y0 / (sb + r0), y1 / (sb + 1.0))
            } else {
                (y0, y1)
            }
        } else {
            (0.0, e1)
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            (e0 * xde0, e1 * (1.0 - xde0 * xde0).max(0.0).sqrt())
        } else {
            (e0, 0.0)
        }
    }
}

fn ellipse_project(center: Point, a: f64, b: f64, x: Point) -> Projection {
    let v = x - center;
    let swap = b > a;
    let (e0, e1, y0, y1) = if swap { (b, a, v.y, v.x) } else { (a, b, v.x, v.y) };
    let (f0, f1) = ellipse_foot_quadrant(e0, e1, y0.abs(), y1.abs());
    let (f0, f1) = (f0.copysign(y0), f1.copysign(y1));
    let foot_local = if swap { Point::new(f1, f0) } else { Point::new(f0, f1) };
    let foot = center + foot_local;
    let inside = (v.x / a).powi(2) + (v.y / b).powi(2) < 1.0;
    let dist = x.dist(foot);
    let n = -Point::new(foot_local.x / (a * a), foot_local.y / (b * b)).normalized();
    let theta = (foot_local.y / b).atan2(foot_local.x / a);
    Projection {
        foot,
        normal: n,
        distance: if inside { dist } else { -dist },
        kappa: ellipse_curvature(a, b, theta),
    }
}

// Boundary pieces of a rounded rectangle, counterclockwise from the
// bottom-right end of the bottom edge... starting at (hw - r, -hh) going
// along the right corner arc first.
enum Piece {
    Arc { c: Point, r: f64, a0: f64 },
    Seg { p: Point, d: Point, len: f64 },
}

fn rounded_rect_pieces(center: Point, hw: f64, hh: f64, r: f64) -> Vec<Piece> {
    let ix = hw - r;
    let iy = hh - r;
    let corners = [
        (Point::new(ix, -iy), -PI / 2.0),
        (Point::new(ix, iy), 0.0),
        (Point::new(-ix, iy), PI / 2.0),
        (Point::new(-ix, -iy), PI),
    ];
    let mut out = Vec::new();
    for (k, (c, a0)) in corners.iter().enumerate() {
        if r > 0.0 {
            out.push(Piece::Arc {
                c: center + *c,
                r,
                a0: *a0,
            });
        }
        let end_angle = a0 + PI / 2.0;
        let p = center + *c + Point::new(end_angle.cos(), end_angle.sin()) * r;
        let next = corners[(k + 1) % 4].0;
        let d = next - *c;
        let len = d.norm();
        out.push(Piece::Seg {
            p,
            d: if len > 0.0 { d * (1.0 / len) } else { Point::new(0.0, 0.0) },
            len,
        });
    }
    out
}

fn rounded_rect_at(center: Point, hw: f64, hh: f64, r: f64, s: f64) -> (Point, Point, f64) {
    let mut rem = s;
    let pieces = rounded_rect_pieces(center, hw, hh, r);
    for piece in &pieces {
        match piece {
            Piece::Arc { c, r, a0 } => {
                let len = r * PI / 2.0;
                if rem <= len {
                    let a = a0 + rem / r;
                    let e = Point::new(a.cos(), a.sin());
                    return (*c + e * *r, -e, 1.0 / r);
                }
                rem -= len;
            }
            Piece::Seg { p, d, len } => {
                if rem <= *len {
                    return (*p + *d * rem, d.perp(), 0.0);
                }
                rem -= len;
            }
        }
    }
    match pieces[0] {
        Piece::Arc { c, r, a0 } => {
            let e = Point::new(a0.cos(), a0.sin());
            (c + e * r, -e, 1.0 / r)
        }
        Piece::Seg { p, d, .. } => (p, d.perp(), 0.0),
    }
}

fn rounded_rect_project(center: Point, hw: f64, hh: f64, r: f64, x: Point) -> Projection {
    let q = Point::new((x.x - center.x).abs() - (hw - r), (x.y - center.y).abs() - (hh - r));
    let outside_sd = Point::new(q.x.max(0.0), q.y.max(0.0)).norm() + q.x.max(q.y).min(0.0) - r;
    let mut best: Option<(f64, Point, Point, f64)> = None;
    for piece in rounded_rect_pieces(center, hw, hh, r) {
        let cand = match piece {
            Piece::Arc { c, r, a0 } => {
                let v = x - c;
                let mut ang = v.y.atan2(v.x);
                // clamp the angle into [a0, a0 + π/2]
                let mut rel = (ang - a0).rem_euclid(TAU);
                if rel > PI / 2.0 {
                    rel = if rel - PI / 2.0 < TAU - rel { PI / 2.0 } else { 0.0 };
                }
                ang = a0 + rel;
                let e = Point::new(ang.cos(), ang.sin());
                (c + e * r, -e, 1.0 / r)
            }
            Piece::Seg { p, d, len } => {
                let t = (x - p).dot(d).clamp(0.0, len);
                (p + d * t, d.perp(), 0.0)
            }
        };
        let dist = x.dist(cand.0);
        if best.is_none_or(|b| dist < b.0) {
            best = Some((dist, cand.0, cand.1, cand.2));
        }
    }
    let (dist, foot, normal, kappa) = best.unwrap();
    Projection {
        foot,
        normal,
        distance: if outside_sd < 0.0 { dist } else { -dist },
        kappa,
    }
}

/// The function H of the prescribed mean curvature problem.
#[derive(Debug, Clone)]
pub enum CurvatureKind {
    Constant(f64),
    Expression(DiffExpr),
    Tabulated(Tabulated),
}

#[derive(Debug, Clone)]
pub struct Tabulated {
    pub bbox: BBox,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `values[j * nx + i]`.
    pub values: Vec<f64>,
}

impl Tabulated {
    fn eval(&self, p: Point) -> f64 {
        let fx = ((p.x - self.bbox.min.x) / (self.bbox.max.x - self.bbox.min.x) * (self.nx - 1) as f64)
            .clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.bbox.min.y) / (self.bbox.max.y - self.bbox.min.y) * (self.ny - 1) as f64)
            .clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let v = |i: usize, j: usize| self.values[j * self.nx + i];
        (1.0 - tx) * (1.0 - ty) * v(i, j)
            + tx * (1.0 - ty) * v(i + 1, j)
            + (1.0 - tx) * ty * v(i, j + 1)
            + tx * ty * v(i + 1, j + 1)
    }
}

#[derive(Debug, Clone)]
pub struct PrescribedCurvature {
    pub kind: CurvatureKind,
    pub h0: f64,
    pub h1: f64,
}

impl PrescribedCurvature {
    pub fn constant(c: f64) -> Self {
        PrescribedCurvature {
            kind: CurvatureKind::Constant(c),
            h0: c.abs(),
            h1: 0.0,
        }
    }

    pub fn expression(src: &str, domain: &DomainSpec) -> Result<Self, ExprError> {
        let e = DiffExpr::parse(src)?;
        if e.f.is_constant() {
            return Ok(Self::constant(e.value(0.0, 0.0)));
        }
        Ok(Self::with_norms(CurvatureKind::Expression(e), domain))
    }

    pub fn tabulated(table: Tabulated, domain: &DomainSpec) -> Self {
        Self::with_norms(CurvatureKind::Tabulated(table), domain)
    }

    fn with_norms(kind: CurvatureKind, domain: &DomainSpec) -> Self {
        let mut pc = PrescribedCurvature { kind, h0: 0.0, h1: 0.0 };
        let (mut h0, mut h1) = (0.0f64, 0.0f64);
        for p in closure_lattice(domain, 200) {
            h0 = h0.max(pc.value(p).abs());
            h1 = h1.max(pc.gradient(p).norm());
        }
        pc.h0 = h0;
        pc.h1 = h1;
        pc
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, CurvatureKind::Constant(_))
    }

    pub fn value(&self, p: Point) -> f64 {
        match &self.kind {
            CurvatureKind::Constant(c) => *c,
            CurvatureKind::Expression(e) => e.value(p.x, p.y),
            CurvatureKind::Tabulated(t) => t.eval(p),
        }
    }

    pub fn gradient(&self, p: Point) -> Point {
        match &self.kind {
            CurvatureKind::Constant(_) => Point::new(0.0, 0.0),
            CurvatureKind::Expression(e) => {
                let g = e.gradient(p.x, p.y);
                Point::new(g[0], g[1])
            }
            CurvatureKind::Tabulated(t) => {
                let hx = (t.bbox.max.x - t.bbox.min.x) / (t.nx - 1) as f64 * 0.5;
                let hy = (t.bbox.max.y - t.bbox.min.y) / (t.ny - 1) as f64 * 0.5;
                Point::new(
                    (t.eval(p + Point::new(hx, 0.0)) - t.eval(p - Point::new(hx, 0.0))) / (2.0 * hx),
                    (t.eval(p + Point::new(0.0, hy)) - t.eval(p - Point::new(0.0, hy))) / (2.0 * hy),
                )
            }
        }
    }

    /// ‖H‖₁ = h₀ + h₁.
    pub fn c1_norm(&self) -> f64 {
        self.h0 + self.h1
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            CurvatureKind::Constant(c) => format!("{c}"),
            CurvatureKind::Expression(e) => e.source.clone(),
            CurvatureKind::Tabulated(t) => format!("tabulated {}x{}", t.nx, t.ny),
        }
    }
}

/// Interior lattice points plus the boundary samples: the set over which
/// sup norms on the closure are taken.
pub fn closure_lattice(domain: &DomainSpec, per_side: usize) -> Vec<Point> {
    let bb = domain.bbox;
    let mut pts: Vec<Point> = domain.boundary_samples.iter().map(|b| b.point).collect();
    for j in 0..=per_side {
        for i in 0..=per_side {
            let p = Point::new(
                bb.min.x + (bb.max.x - bb.min.x) * i as f64 / per_side as f64,
                bb.min.y + (bb.max.y - bb.min.y) * j as f64 / per_side as f64,
            );
            if domain.contains(p) {
                pts.push(p);
            }
        }
    }
    pts
}

#[derive(Debug, Clone, Serialize)]
pub struct SerrinAudit {
    pub satisfied: bool,
    pub margin: f64,
    pub worst_point: Point,
    pub worst_s: f64,
}

/// Samples (n−1)κ(y) − n|H(y)| along the boundary.
pub fn check_serrin(domain: &DomainSpec, h: &PrescribedCurvature, n: usize) -> SerrinAudit {
    let nf = n as f64;
    let mut worst = (f64::INFINITY, Point::default(), 0.0);
    for b in &domain.boundary_samples {
        let m = (nf - 1.0) * b.kappa - nf * h.value(b.point).abs();
        if m < worst.0 {
            worst = (m, b.point, b.s);
        }
    }
    SerrinAudit {
        satisfied: worst.0 >= 0.0,
        margin: worst.0,
        worst_point: worst.1,
        worst_s: worst.2,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientConditionAudit {
    pub satisfied: bool,
    pub margin: f64,
    pub worst_point: Point,
}

/// Samples n/(n−1)·H² − ‖∇H‖ over the closure.
pub fn check_gradient_condition(domain: &DomainSpec, h: &PrescribedCurvature, n: usize) -> GradientConditionAudit {
    let nf = n as f64;
    let mut worst = (f64::INFINITY, Point::default());
    for p in closure_lattice(domain, 200) {
        let hv = h.value(p);
        let m = nf / (nf - 1.0) * hv * hv - h.gradient(p).norm();
        if m < worst.0 {
            worst = (m, p);
        }
    }
    GradientConditionAudit {
        satisfied: worst.0 >= 0.0,
        margin: worst.0,
        worst_point: worst.1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DUMBBELL_B: f64 = 1.068_382_233_209_409_5;

    #[test]
    fn disk_distance_and_curvature() {
        let d = DomainSpec::unit_disk();
        assert_eq!(d.signed_distance(Point::new(0.0, 0.0)), 1.0);
        assert_eq!(d.signed_distance(Point::new(0.5, 0.0)), 0.5);
        assert_eq!(d.signed_distance(Point::new(2.0, 0.0)), -1.0);
        assert_eq!(d.boundary_curvature(1.234).unwrap(), 1.0);
        let d2 = DomainSpec::disk(Point::new(0.0, 0.0), 2.0).unwrap();
        assert_eq!(d2.boundary_curvature(0.1).unwrap(), 0.5);
        assert_eq!(d.smoothness_radius(), 1.0);
        let d3 = DomainSpec::disk(Point::new(1.0, -1.0), 3.0).unwrap();
        assert_eq!(d3.smoothness_radius(), 3.0);
    }

    #[test]
    fn normals_are_unit_and_inward() {
        for dom in [
            DomainSpec::unit_disk(),
            DomainSpec::ellipse(Point::new(0.0, 0.0), 2.0, 1.0).unwrap(),
            DomainSpec::rounded_rect(Point::new(0.0, 0.0), 1.0, 0.6, 0.25).unwrap(),
            DomainSpec::dumbbell(1.0, 1.2).unwrap(),
        ] {
            for b in &dom.boundary_samples {
                assert!((b.normal.norm() - 1.0).abs() < 1e-12);
                assert!(dom.contains(b.point + b.normal * 1e-6), "{} at {}", dom.name(), b.point);
            }
        }
    }

    #[test]
    fn ellipse_curvature_at_major_end_and_tau() {
        let e = DomainSpec::ellipse(Point::new(0.0, 0.0), 2.0, 1.0).unwrap();
        // s = 0 is the end of the major axis
        assert!((e.boundary_curvature(0.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((e.smoothness_radius() - 0.5).abs() < 1e-15);
        let sq = DomainSpec::rect(Point::default(), 0.6, 0.6).unwrap();
        assert_eq!(sq.smoothness_radius(), 0.0);
        let sampled = inscribed_clearance(&e.boundary_samples);
        assert!((sampled - 0.5).abs() < 1e-4, "{sampled}");
        // perimeter of the (2,1) ellipse
        assert!((e.length - 9.688_448_220_547_675).abs() < 1e-9);
    }

    #[test]
    fn ellipse_distance_matches_brute_force() {
        let e = DomainSpec::ellipse(Point::new(0.3, -0.2), 2.0, 1.0).unwrap();
        for &(x, y) in &[(0.1, 0.05), (1.5, 0.4), (-2.5, 1.7), (0.3, -0.2), (2.1, -0.2)] {
            let p = Point::new(x, y);
            let brute = (0..200_000)
                .map(|k| {
                    let t = TAU * k as f64 / 200_000.0;
                    p.dist(Point::new(0.3 + 2.0 * t.cos(), -0.2 + t.sin()))
                })
                .fold(f64::MAX, f64::min);
            assert!((e.signed_distance(p).abs() - brute).abs() < 1e-8);
        }
    }

    #[test]
    fn curvature_agrees_with_parametrization() {
        let dom = DomainSpec::dumbbell(1.0, 1.2).unwrap();
        for k in 0..64 {
            let th = TAU * k as f64 / 64.0;
            let p = dom.param_point(th).unwrap();
            let Shape::Dumbbell { level, .. } = &dom.shape else { unreachable!() };
            let exact = level.curvature_at(p);
            let fd = dom.fd_curvature(th).unwrap();
            assert!((exact - fd).abs() < 1e-6, "angle {th}: {exact} vs {fd}");
        }
    }

    #[test]
    fn dumbbell_neck_is_reentrant() {
        let dom = DomainSpec::dumbbell(1.0, DUMBBELL_B).unwrap();
        let kmin = dom.boundary_samples.iter().map(|b| b.kappa).fold(f64::MAX, f64::min);
        assert!((kmin + 2.0).abs() < 1e-3, "{kmin}");
        let audit = check_serrin(&dom, &PrescribedCurvature::constant(0.0), 2);
        assert!(!audit.satisfied);
        assert!(audit.worst_point.x.abs() < 1e-2);
        // neck half width bounds the strip
        assert!(dom.smoothness_radius() < 0.5);
    }

    #[test]
    fn level_set_distance_is_accurate() {
        let dom = DomainSpec::level_set("x^2/4 + y^2 - 1", Point::new(0.0, 0.0), 5.0).unwrap();
        let exact = DomainSpec::ellipse(Point::new(0.0, 0.0), 2.0, 1.0).unwrap();
        for &(x, y) in &[(0.1, 0.05), (1.5, 0.4), (-2.5, 1.7), (0.0, 0.0), (1.99, 0.0), (0.7, -0.95)] {
            let p = Point::new(x, y);
            let a = dom.signed_distance(p);
            let b = exact.signed_distance(p);
            assert!((a - b).abs() < 1e-8, "{p}: {a} vs {b}");
        }
        assert!((dom.length - exact.length).abs() < 1e-8);
    }

    #[test]
    fn rounded_rect_distance() {
        let dom = DomainSpec::rounded_rect(Point::new(0.0, 0.0), 1.0, 0.5, 0.2).unwrap();
        assert!((dom.signed_distance(Point::new(0.0, 0.0)) - 0.5).abs() < 1e-15);
        assert!((dom.signed_distance(Point::new(0.9, 0.0)) - 0.1).abs() < 1e-15);
        let corner = Point::new(0.8, 0.3) + Point::new(1.0, 1.0).normalized() * 0.3;
        assert!((dom.signed_distance(corner) + 0.1).abs() < 1e-12);
        assert!((dom.length - (4.0 * 0.8 + 4.0 * 0.3 + TAU * 0.2)).abs() < 1e-12);

        let sq = DomainSpec::rect(Point::new(0.0, 0.0), 0.6, 0.6).unwrap();
        assert_eq!(sq.name(), "rect");
        assert!((sq.signed_distance(Point::new(0.5, 0.1)) - 0.1).abs() < 1e-15);
        assert!((sq.signed_distance(Point::new(0.7, 0.7)) + 0.1 * 2f64.sqrt()).abs() < 1e-15);
        assert!((sq.length - 4.8).abs() < 1e-12);
        assert!(sq.boundary_samples.iter().all(|b| b.kappa == 0.0));
    }

    #[test]
    fn parallel_curvature_examples() {
        assert!((parallel_curvature(1.0, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(parallel_curvature(0.7, 0.0).unwrap(), 0.7);
        assert!((parallel_curvature(-1.0, 0.5).unwrap() + 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(parallel_curvature(1.0, 1.0), Err(GeometryError::FocalPoint(_))));
        let d = DomainSpec::unit_disk();
        for k in 0..20 {
            let t = 0.045 * k as f64;
            let parallel = d.parallel_curvature(0.3, t).unwrap();
            let shrunk = DomainSpec::disk(Point::new(0.0, 0.0), 1.0 - t).unwrap();
            assert!((parallel - shrunk.boundary_curvature(0.0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn serrin_examples() {
        let d = DomainSpec::unit_disk();
        let a = check_serrin(&d, &PrescribedCurvature::constant(0.5), 2);
        assert!(a.satisfied && a.margin.abs() < 1e-12);
        let a = check_serrin(&d, &PrescribedCurvature::constant(0.55), 2);
        assert!(!a.satisfied && (a.margin + 0.1).abs() < 1e-9);
    }

    #[test]
    fn gradient_condition_examples() {
        let d = DomainSpec::unit_disk();
        let c = check_gradient_condition(&d, &PrescribedCurvature::constant(0.3), 2);
        assert!(c.satisfied && (c.margin - 2.0 * 0.09).abs() < 1e-15);
        let h = PrescribedCurvature::expression("0.4 + 0.001*x", &d).unwrap();
        let c = check_gradient_condition(&d, &h, 2);
        // dense sampling oracle: min of 2(0.4 + 0.001x)² − 0.001 is at x = −1
        assert!(c.satisfied && (c.margin - (2.0 * 0.399f64.powi(2) - 0.001)).abs() < 1e-12);
        let h = PrescribedCurvature::expression("x", &d).unwrap();
        assert!(!check_gradient_condition(&d, &h, 2).satisfied);
    }

    #[test]
    fn curvature_norms() {
        let d = DomainSpec::unit_disk();
        let h = PrescribedCurvature::constant(-0.3);
        assert_eq!((h.h0, h.h1), (0.3, 0.0));
        let h = PrescribedCurvature::expression("0.4 + 0.1*x - 0.2*y", &d).unwrap();
        assert!((h.h0 - (0.4 + 0.05f64.sqrt())).abs() < 1e-6);
        assert!((h.h1 - 0.05f64.sqrt()).abs() < 1e-14);
        let table = Tabulated {
            bbox: BBox {
                min: Point::new(-1.0, -1.0),
                max: Point::new(1.0, 1.0),
            },
            nx: 21,
            ny: 21,
            values: (0..441).map(|k| 0.5 + 0.1 * ((k % 21) as f64 / 10.0 - 1.0)).collect(),
        };
        let h = PrescribedCurvature::tabulated(table, &d);
        assert!((h.value(Point::new(0.35, 0.2)) - 0.535).abs() < 1e-12);
        assert!((h.h1 - 0.1).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn distance_gradient_is_unit_in_strip(r in 0.05f64..0.95, th in 0.0f64..TAU) {
            let e = DomainSpec::ellipse(Point::new(0.0, 0.0), 2.0, 1.0).unwrap();
            // points on the inner normal at depth < τ
            let s = th / TAU * e.length;
            let (p, n, _) = e.sample_at(s).unwrap();
            let x = p + n * (r * 0.45);
            let h = 1e-5;
            let gx = (e.signed_distance(x + Point::new(h, 0.0)) - e.signed_distance(x - Point::new(h, 0.0))) / (2.0 * h);
            let gy = (e.signed_distance(x + Point::new(0.0, h)) - e.signed_distance(x - Point::new(0.0, h))) / (2.0 * h);
            prop_assert!((gx.hypot(gy) - 1.0).abs() < 1e-6);
        }

        #[test]
        fn serrin_margin_scales(lambda in 0.2f64..5.0, hval in 0.0f64..1.0) {
            let d = DomainSpec::disk(Point::new(0.0, 0.0), 1.0).unwrap();
            let ds = DomainSpec::disk(Point::new(0.0, 0.0), lambda).unwrap();
            let m1 = check_serrin(&d, &PrescribedCurvature::constant(hval), 2).margin;
            let m2 = check_serrin(&ds, &PrescribedCurvature::constant(hval / lambda), 2).margin;
            prop_assert!((m2 - m1 / lambda).abs() < 1e-12);
            prop_assert_eq!(m1 >= 0.0, m2 >= 0.0);
        }

        #[test]
        fn parallel_curvature_is_monotone(k in 0.01f64..5.0, f1 in 0.0f64..0.99, f2 in 0.0f64..0.99) {
            let (t1, t2) = (f1.min(f2) / k, f1.max(f2) / k);
            prop_assert!(parallel_curvature(k, t1).unwrap() <= parallel_curvature(k, t2).unwrap());
        }
    }
}

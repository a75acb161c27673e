//! Dirichlet data φ on ∂Ω.

use std::fmt;
use std::sync::Arc;

use crate::expr::{DiffExpr, ExprError};
use crate::geometry::{closure_lattice, DomainSpec, Point};
use crate::grid::Grid;

#[derive(Clone)]
pub enum BoundaryData {
    Zero,
    Expression(DiffExpr),
    /// Trace of the Scherk surface log(cos x / cos y).
    Scherk,
    /// height·exp(1 − 1/(1 − (|y − center|/a)²)) inside B_a(center), 0
    /// outside. The radius is stored as ln a: certified radii can be far
    /// below the smallest positive double.
    Bump { center: Point, ln_radius: f64, height: f64 },
    Custom(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

/// Value, gradient and Hessian of a C² extension of the data.
pub type Jet = (f64, [f64; 2], [[f64; 2]; 2]);

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Zero => write!(f, "Zero"),
            BoundaryData::Expression(e) => write!(f, "Expression({})", e.source),
            BoundaryData::Scherk => write!(f, "Scherk"),
            BoundaryData::Bump {
                center,
                ln_radius,
                height,
            } => write!(f, "Bump {{ center: {center}, ln_radius: {ln_radius}, height: {height} }}"),
            BoundaryData::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl BoundaryData {
    pub fn expression(src: &str) -> Result<Self, ExprError> {
        let e = DiffExpr::parse(src)?;
        if e.f.is_constant() && e.value(0.0, 0.0) == 0.0 {
            return Ok(BoundaryData::Zero);
        }
        Ok(BoundaryData::Expression(e))
    }

    pub fn custom<F: Fn(Point) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        BoundaryData::Custom(Arc::new(f))
    }

    pub fn bump(center: Point, radius: f64, height: f64) -> Self {
        BoundaryData::Bump {
            center,
            ln_radius: radius.ln(),
            height,
        }
    }

    pub fn value(&self, p: Point) -> f64 {
        match self {
            BoundaryData::Zero => 0.0,
            BoundaryData::Expression(e) => e.value(p.x, p.y),
            BoundaryData::Scherk => (p.x.cos() / p.y.cos()).ln(),
            BoundaryData::Bump {
                center,
                ln_radius,
                height,
            } => {
                let rho = p.dist(*center);
                if rho == 0.0 {
                    return *height;
                }
                bump((rho.ln() - ln_radius).exp()) * height
            }
            BoundaryData::Custom(f) => f(p),
        }
    }

    /// Derivatives up to second order where the data carries a closed
    /// form extension into Ω.
    pub fn jet(&self, p: Point) -> Option<Jet> {
        match self {
            BoundaryData::Zero => Some((0.0, [0.0; 2], [[0.0; 2]; 2])),
            BoundaryData::Expression(e) => Some((e.value(p.x, p.y), e.gradient(p.x, p.y), e.hessian(p.x, p.y))),
            BoundaryData::Scherk => {
                let (tx, ty) = (p.x.tan(), p.y.tan());
                Some((
                    self.value(p),
                    [-tx, ty],
                    [[-(1.0 + tx * tx), 0.0], [0.0, 1.0 + ty * ty]],
                ))
            }
            BoundaryData::Bump { .. } | BoundaryData::Custom(_) => None,
        }
    }

    /// (‖φ‖₀, ‖φ‖₁, ‖φ‖₂) over the closure, with ‖f‖_k the sum of the sup
    /// norms of the derivatives of order ≤ k.
    pub fn c2_norms(&self, domain: &DomainSpec) -> Option<[f64; 3]> {
        if let BoundaryData::Zero = self {
            return Some([0.0; 3]);
        }
        self.jet(Point::default())?;
        let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
        for p in closure_lattice(domain, 200) {
            let (v, g, hs) = self.jet(p)?;
            s0 = s0.max(v.abs());
            s1 = s1.max(g[0].hypot(g[1]));
            // operator norm of the symmetric Hessian
            let half_tr = 0.5 * (hs[0][0] + hs[1][1]);
            let rad = (0.5 * (hs[0][0] - hs[1][1])).hypot(hs[0][1]);
            s2 = s2.max(half_tr.abs() + rad);
        }
        Some([s0, s0 + s1, s0 + s1 + s2])
    }

    /// Values at the grid's boundary foot points.
    pub fn trace(&self, grid: &Grid) -> Vec<f64> {
        grid.links.iter().map(|l| self.value(l.foot)).collect()
    }

    pub fn describe(&self) -> String {
        match self {
            BoundaryData::Zero => "zero".into(),
            BoundaryData::Expression(e) => format!("expression {}", e.source),
            BoundaryData::Scherk => "scherk".into(),
            BoundaryData::Bump {
                center,
                ln_radius,
                height,
            } => format!("bump at {center}, radius exp({ln_radius}), height {height}"),
            BoundaryData::Custom(_) => "custom".into(),
        }
    }
}

/// exp(1 − 1/(1 − r²)) for r < 1, else 0. Equals 1 at r = 0.
pub fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - r * r;
    (1.0 - 1.0 / q).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_profile() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(3.0), 0.0);
        let mut prev = 1.0;
        for k in 1..100 {
            let v = bump(k as f64 / 100.0);
            assert!(v >= 0.0 && v <= prev);
            prev = v;
        }
    }

    #[test]
    fn bump_with_underflowing_radius() {
        let y0 = Point::new(1.0, 0.0);
        let b = BoundaryData::Bump {
            center: y0,
            ln_radius: -3000.0,
            height: 0.05,
        };
        assert_eq!(b.value(y0), 0.05);
        assert_eq!(b.value(Point::new(1.0, 1e-300)), 0.0);
        let b = BoundaryData::bump(y0, 0.1, 0.05);
        assert!((b.value(Point::new(1.0, 0.05)) - 0.05 * (1.0f64 - 1.0 / 0.75).exp()).abs() < 1e-15);
    }

    #[test]
    fn scherk_trace_and_jet() {
        let b = BoundaryData::Scherk;
        assert_eq!(b.value(Point::new(0.0, 0.0)), 0.0);
        assert!((b.value(Point::new(0.6, 0.0)) - 0.6f64.cos().ln()).abs() < 1e-15);
        let p = Point::new(0.3, -0.2);
        let (_, g, hs) = b.jet(p).unwrap();
        let e = DiffExpr::parse("log(cos(x)) - log(cos(y))").unwrap();
        let (ge, he) = (e.gradient(p.x, p.y), e.hessian(p.x, p.y));
        for i in 0..2 {
            assert!((g[i] - ge[i]).abs() < 1e-14);
            for j in 0..2 {
                assert!((hs[i][j] - he[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn norms_of_an_affine_function() {
        let d = DomainSpec::unit_disk();
        let n = BoundaryData::expression("3*x + 4*y").unwrap().c2_norms(&d).unwrap();
        // sampled sup of |3x + 4y| misses the exact maximiser by O(ds²)
        assert!((n[0] - 5.0).abs() < 1e-5);
        assert!((n[1] - n[0] - 5.0).abs() < 1e-12);
        assert_eq!(n[2], n[1]);
        assert_eq!(BoundaryData::expression("0").unwrap().c2_norms(&d), Some([0.0; 3]));
        assert!(BoundaryData::bump(Point::new(1.0, 0.0), 0.1, 1.0).c2_norms(&d).is_none());
    }
}

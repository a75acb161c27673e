//! M(ψ∘ϱ + φ) by the transformation formula. With p = ψ′∇ϱ + ∇φ and
//! W² = 1 + ‖p‖², and ‖∇ϱ‖ = 1 (so Hess ϱ ∇ϱ = 0),
//!
//! ```text
//! M w = W²(ψ″ + ψ′Δϱ + Δφ) − ψ″⟨∇ϱ, p⟩² − ψ′⟨Hess ϱ ∇φ, ∇φ⟩ − ⟨Hess φ p, p⟩
//! ```
//!
//! For constant φ this is ψ′(1 + ψ′²)Δϱ + ψ″.

use std::sync::Arc;

use serde::Serialize;

use super::profiles::Profile;
use crate::boundary_data::{BoundaryData, Jet};
use crate::field::ScalarField;
use crate::geometry::{DomainSpec, Point, PrescribedCurvature};
use crate::grid::Grid;

/// A function with unit gradient where it is C².
#[derive(Debug, Clone, Copy)]
pub enum Distance<'a> {
    /// d(x) = dist(x, ∂Ω), smooth for 0 ≤ d < τ (and for a disk away from
    /// its center).
    Boundary(&'a DomainSpec),
    /// ρ(x) = |x − y₀|, smooth away from y₀.
    Radial(Point),
    /// Distance to a circle from the side its curvature bends toward:
    /// sgn(κ)(1/|κ| − |x − c|), or a straight line when κ = 0.
    Circle { touch: Point, normal: Point, curvature: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    /// False where the function is not C² (medial axis, focal points,
    /// center of a radial distance).
    pub smooth: bool,
}

fn outer(v: [f64; 2]) -> [[f64; 2]; 2] {
    [[v[0] * v[0], v[0] * v[1]], [v[1] * v[0], v[1] * v[1]]]
}

impl Distance<'_> {
    pub fn jet(&self, x: Point) -> DistanceJet {
        match *self {
            Distance::Boundary(domain) => {
                let pr = domain.project(x);
                let t = pr.distance;
                let n = [pr.normal.x, pr.normal.y];
                let tg = [-n[1], n[0]];
                let q = 1.0 - t * pr.kappa;
                let smooth = t >= 0.0 && q > 0.0 && (t < domain.tau || matches!(domain.shape, crate::geometry::Shape::Disk { .. }));
                let kt = if q > 0.0 { pr.kappa / q } else { f64::INFINITY };
                let tt = outer(tg);
                DistanceJet {
                    value: t,
                    grad: n,
                    hess: [[-kt * tt[0][0], -kt * tt[0][1]], [-kt * tt[1][0], -kt * tt[1][1]]],
                    smooth: smooth && kt.is_finite(),
                }
            }
            Distance::Radial(y0) => {
                let v = x - y0;
                let r = v.norm();
                if r == 0.0 {
                    return DistanceJet {
                        value: 0.0,
                        grad: [0.0; 2],
                        hess: [[0.0; 2]; 2],
                        smooth: false,
                    };
                }
                let e = [v.x / r, v.y / r];
                let ee = outer(e);
                DistanceJet {
                    value: r,
                    grad: e,
                    hess: [
                        [(1.0 - ee[0][0]) / r, -ee[0][1] / r],
                        [-ee[1][0] / r, (1.0 - ee[1][1]) / r],
                    ],
                    smooth: true,
                }
            }
            Distance::Circle {
                touch,
                normal,
                curvature,
            } => {
                if curvature.abs() < 1e-14 {
                    return DistanceJet {
                        value: (x - touch).dot(normal),
                        grad: [normal.x, normal.y],
                        hess: [[0.0; 2]; 2],
                        smooth: true,
                    };
                }
                let r0 = 1.0 / curvature.abs();
                let s = curvature.signum();
                let c = touch + normal * (s * r0);
                let v = x - c;
                let r = v.norm();
                if r == 0.0 {
                    return DistanceJet {
                        value: s * r0,
                        grad: [0.0; 2],
                        hess: [[0.0; 2]; 2],
                        smooth: false,
                    };
                }
                let e = [v.x / r, v.y / r];
                let ee = outer(e);
                DistanceJet {
                    value: s * (r0 - r),
                    grad: [-s * e[0], -s * e[1]],
                    hess: [
                        [-s * (1.0 - ee[0][0]) / r, s * ee[0][1] / r],
                        [s * ee[1][0] / r, -s * (1.0 - ee[1][1]) / r],
                    ],
                    smooth: true,
                }
            }
        }
    }
}

/// (w, M w, W) at one point for w = sign·ψ∘ϱ + φ.
pub fn m_transformed<P: Profile + ?Sized>(psi: &P, rho: &DistanceJet, phi: &Jet, sign: f64) -> (f64, f64, f64) {
    let t = rho.value;
    let (p0, p1, p2) = (sign * psi.value(t), sign * psi.d1(t), sign * psi.d2(t));
    let (f, gf, hf) = phi;
    let gr = rho.grad;
    let p = [p1 * gr[0] + gf[0], p1 * gr[1] + gf[1]];
    let w2 = 1.0 + p[0] * p[0] + p[1] * p[1];
    let lap_r = rho.hess[0][0] + rho.hess[1][1];
    let lap_f = hf[0][0] + hf[1][1];
    let quad = |m: &[[f64; 2]; 2], v: [f64; 2]| {
        m[0][0] * v[0] * v[0] + (m[0][1] + m[1][0]) * v[0] * v[1] + m[1][1] * v[1] * v[1]
    };
    let rp = gr[0] * p[0] + gr[1] * p[1];
    let mw = w2 * (p2 + p1 * lap_r + lap_f) - p2 * rp * rp - p1 * quad(&rho.hess, *gf) - quad(hf, p);
    (p0 + f, mw, w2.sqrt())
}

#[derive(Debug, Clone)]
pub struct Transformed {
    /// The barrier w = ±ψ∘ϱ + φ as a grid field.
    pub w: ScalarField,
    /// M w per unknown; NaN where excluded.
    pub m: Vec<f64>,
    /// Q w = M w − nH W³ per unknown; NaN where excluded.
    pub q: Vec<f64>,
    pub excluded: usize,
}

/// Evaluates w = sign·ψ∘ϱ + φ and M w at every interior node of `grid`
/// through the closed formula. Nodes where ϱ is not C², or where `keep`
/// rejects the node's ϱ value, are excluded.
#[allow(clippy::too_many_arguments)]
pub fn transform_radial<P: Profile + ?Sized>(
    grid: &Arc<Grid>,
    psi: &P,
    rho: Distance<'_>,
    phi: &BoundaryData,
    sign: f64,
    h: &PrescribedCurvature,
    n: usize,
    keep: &dyn Fn(f64) -> bool,
) -> Option<Transformed> {
    let zero: Jet = (0.0, [0.0; 2], [[0.0; 2]; 2]);
    phi.jet(Point::default())?;
    let value_at = |x: Point| {
        let j = rho.jet(x);
        sign * psi.value(j.value) + phi.jet(x).unwrap_or(zero).0
    };
    let w = ScalarField::from_fn(grid, value_at);
    let mut m = Vec::with_capacity(grid.n_unknowns());
    let mut q = Vec::with_capacity(grid.n_unknowns());
    let mut excluded = 0;
    for &k in &grid.interior {
        let x = grid.position(k);
        let j = rho.jet(x);
        if !j.smooth || !keep(j.value) {
            excluded += 1;
            m.push(f64::NAN);
            q.push(f64::NAN);
            continue;
        }
        let (_, mw, ww) = m_transformed(psi, &j, &phi.jet(x).unwrap_or(zero), sign);
        m.push(mw);
        q.push(mw - n as f64 * h.value(x) * ww * ww * ww);
    }
    Some(Transformed { w, m, q, excluded })
}

/// Extremes of a sign check over the evaluated points.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SignCheck {
    pub points: usize,
    pub excluded: usize,
    /// max Q w (for a required negative sign) or min Q w (positive sign).
    pub extreme: f64,
    pub pass: bool,
}

impl SignCheck {
    /// Every evaluated value satisfies sign·v < 0 (strict) or ≤ 0.
    pub fn of(values: impl Iterator<Item = f64>, negative: bool, strict: bool) -> SignCheck {
        let mut points = 0;
        let mut excluded = 0;
        let mut extreme = if negative { f64::NEG_INFINITY } else { f64::INFINITY };
        for v in values {
            if v.is_nan() {
                excluded += 1;
                continue;
            }
            points += 1;
            extreme = if negative { extreme.max(v) } else { extreme.min(v) };
        }
        let pass = points > 0
            && match (negative, strict) {
                (true, true) => extreme < 0.0,
                (true, false) => extreme <= 0.0,
                (false, true) => extreme > 0.0,
                (false, false) => extreme >= 0.0,
            };
        SignCheck {
            points,
            excluded,
            extreme,
            pass,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::profiles::{HeightProfile, Identity, Zero};
    use super::*;
    use crate::field::apply_m;

    #[test]
    fn identity_profile_on_the_disk_gives_twice_the_laplacian() {
        let domain = DomainSpec::unit_disk();
        let g = Grid::build(&domain, 1.0 / 16.0).unwrap();
        let hc = PrescribedCurvature::constant(0.0);
        let t = transform_radial(&g, &Identity, Distance::Boundary(&domain), &BoundaryData::Zero, 1.0, &hc, 2, &|_| true)
            .unwrap();
        assert_eq!(t.excluded, 1);
        for (i, &k) in g.interior.iter().enumerate() {
            let r = g.position(k).norm();
            if r > 0.0 {
                assert!((t.m[i] + 2.0 / r).abs() < 1e-12 * (1.0 + 2.0 / r));
            }
        }
    }

    #[test]
    fn zero_profile_reduces_to_the_discrete_operator() {
        let domain = DomainSpec::unit_disk();
        let phi = BoundaryData::expression("sin(x) * exp(0.5*y) + x*y*y").unwrap();
        let hc = PrescribedCurvature::constant(0.0);
        let mut errs = Vec::new();
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let g = Grid::build(&domain, h).unwrap();
            let t = transform_radial(&g, &Zero, Distance::Boundary(&domain), &phi, 1.0, &hc, 2, &|_| true).unwrap();
            let f = ScalarField::from_fn(&g, |p| phi.value(p));
            let m = apply_m(&f).unwrap();
            let mut e: f64 = 0.0;
            for (i, _) in g.interior.iter().enumerate() {
                if g.away_from_boundary(i, 2.0 * h) {
                    e = e.max((m[i] - t.m[i]).abs());
                }
            }
            errs.push(e);
        }
        let ratio = errs[0] / errs[1];
        assert!(errs[1] < 1e-3 && (3.0..=5.0).contains(&ratio), "{errs:?}");
    }

    #[test]
    fn height_barrier_formula() {
        let domain = DomainSpec::unit_disk();
        let psi = HeightProfile { mu: 0.8, delta: 2.0 };
        let x = Point::new(0.3, -0.4);
        let j = Distance::Boundary(&domain).jet(x);
        let (_, mw, _) = m_transformed(&psi, &j, &(0.0, [0.0; 2], [[0.0; 2]; 2]), 1.0);
        let t = 0.5;
        let d1 = psi.d1(t);
        let expected = d1 * (1.0 + d1 * d1) * (-1.0 / 0.5) + psi.d2(t);
        assert!((mw - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn circle_distance_has_unit_gradient() {
        let c = Distance::Circle {
            touch: Point::new(1.0, 0.0),
            normal: Point::new(-1.0, 0.0),
            curvature: 2.0,
        };
        let j = c.jet(Point::new(0.9, 0.1));
        assert!((j.grad[0].hypot(j.grad[1]) - 1.0).abs() < 1e-15);
        let expected = 0.5 - (Point::new(0.9, 0.1) - Point::new(0.5, 0.0)).norm();
        assert!((j.value - expected).abs() < 1e-15);
        assert!((j.hess[0][0] + j.hess[1][1] + 1.0 / (0.5 - expected)).abs() < 1e-12);
    }
}

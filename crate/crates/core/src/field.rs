//! Nodal fields on a [`Grid`] and the discrete operators M and Q.
//!
//! M u = Σ (W²δ_ij − ∂_i u ∂_j u) ∂_ij u,  Q u = M u − τ n H W³,
//! with W = √(1 + ‖∇u‖²). Derivatives use the grid's precomputed stencils,
//! so every operator here is evaluated at interior nodes only and returns
//! one value per unknown.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Point, PrescribedCurvature};
use crate::grid::{Grid, NodeClass, Tap, DIRS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("non-finite value {value} at node {node} {position}")]
    NonFinite { node: usize, position: Point, value: f64 },
    #[error("non-finite boundary trace {value} on link {link}")]
    NonFiniteTrace { link: usize, value: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
}

/// Values at every grid node (exterior nodes hold 0) plus the boundary
/// trace, one value per boundary link foot point.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub trace: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.nx * grid.ny],
            trace: vec![0.0; grid.links.len()],
        }
    }

    /// Samples a function at interior and ghost nodes and at foot points.
    pub fn from_fn<F: Fn(Point) -> f64>(grid: &Arc<Grid>, f: F) -> Self {
        let mut values = vec![0.0; grid.nx * grid.ny];
        for (k, v) in values.iter_mut().enumerate() {
            if grid.class[k] != NodeClass::Exterior {
                *v = f(grid.position(k));
            }
        }
        let trace = grid.links.iter().map(|l| f(l.foot)).collect();
        ScalarField {
            grid: grid.clone(),
            values,
            trace,
        }
    }

    /// Builds a field from interior unknowns and a boundary trace. Ghost
    /// values are the linear extrapolation through each link's foot point,
    /// averaged when a ghost closes several links.
    pub fn from_interior(grid: &Arc<Grid>, interior: &[f64], trace: Vec<f64>) -> Result<Self, FieldError> {
        if interior.len() != grid.n_unknowns() {
            return Err(FieldError::Length {
                expected: grid.n_unknowns(),
                got: interior.len(),
            });
        }
        if trace.len() != grid.links.len() {
            return Err(FieldError::Length {
                expected: grid.links.len(),
                got: trace.len(),
            });
        }
        let mut values = vec![0.0; grid.nx * grid.ny];
        for (u, &k) in grid.interior.iter().enumerate() {
            values[k] = interior[u];
        }
        let mut count = vec![0u32; grid.nx * grid.ny];
        for (l, link) in grid.links.iter().enumerate() {
            let up = values[link.node];
            values[link.ghost] += up + (trace[l] - up) / link.theta;
            count[link.ghost] += 1;
        }
        for (k, c) in count.iter().enumerate() {
            if *c > 1 {
                values[k] /= *c as f64;
            }
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
            trace,
        })
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        for &k in &self.grid.interior {
            let v = self.values[k];
            if !v.is_finite() {
                return Err(FieldError::NonFinite {
                    node: k,
                    position: self.grid.position(k),
                    value: v,
                });
            }
        }
        for (l, &v) in self.trace.iter().enumerate() {
            if !v.is_finite() {
                return Err(FieldError::NonFiniteTrace { link: l, value: v });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn tap(&self, t: Tap) -> f64 {
        match t {
            Tap::Node(k) => self.values[k],
            Tap::Foot(l) => self.trace[l],
        }
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.grid.interior.iter().map(|&k| self.values[k]).collect()
    }

    /// sup over interior nodes and boundary foot points.
    pub fn sup_norm(&self) -> f64 {
        self.grid
            .interior
            .iter()
            .map(|&k| self.values[k].abs())
            .chain(self.trace.iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }

    pub fn boundary_sup(&self) -> f64 {
        self.trace.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
    }

    /// max |self − other| over interior nodes.
    pub fn max_diff(&self, other: &ScalarField) -> Result<f64, FieldError> {
        if !self.same_grid(other) {
            return Err(FieldError::GridMismatch);
        }
        Ok(self
            .grid
            .interior
            .iter()
            .map(|&k| (self.values[k] - other.values[k]).abs())
            .fold(0.0, f64::max))
    }
}

fn apply(line: &[(Tap, f64)], u: &ScalarField) -> f64 {
    line.iter().map(|&(t, w)| w * u.tap(t)).sum()
}

/// Discrete ∇u at each interior node.
pub fn gradient(u: &ScalarField) -> Result<Vec<[f64; 2]>, FieldError> {
    u.validate()?;
    Ok(u.grid
        .stencils
        .par_iter()
        .map(|s| [apply(&s.dx, u), apply(&s.dy, u)])
        .collect())
}

/// Discrete Hessian (u_xx, u_xy, u_yy) at each interior node.
pub fn hessian(u: &ScalarField) -> Result<Vec<[f64; 3]>, FieldError> {
    u.validate()?;
    Ok(u.grid
        .stencils
        .par_iter()
        .map(|s| [apply(&s.dxx, u), apply(&s.dxy, u), apply(&s.dyy, u)])
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientMatrix {
    pub a: [[f64; 2]; 2],
    /// Smallest eigenvalue and its unit eigenvector.
    pub lambda: f64,
    pub lambda_vec: [f64; 2],
    /// Largest eigenvalue and its unit eigenvector.
    pub big_lambda: f64,
    pub big_lambda_vec: [f64; 2],
}

/// A(p) = W(p)²I − p pᵀ with its eigen-decomposition, computed from the
/// entries rather than assumed.
pub fn coefficient_matrix(p: [f64; 2]) -> CoefficientMatrix {
    let w2 = 1.0 + p[0] * p[0] + p[1] * p[1];
    let a = [[w2 - p[0] * p[0], -p[0] * p[1]], [-p[0] * p[1], w2 - p[1] * p[1]]];
    let half_tr = 0.5 * (a[0][0] + a[1][1]);
    let half_gap = 0.5 * (a[0][0] - a[1][1]);
    let rad = half_gap.hypot(a[0][1]);
    let big = half_tr + rad;
    let det = a[0][0] * a[1][1] - a[0][1] * a[0][1];
    let small = det / big;
    let vec_for = |l: f64| {
        let v1 = [a[0][1], l - a[0][0]];
        let v2 = [l - a[1][1], a[0][1]];
        let v = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) { v1 } else { v2 };
        let n = v[0].hypot(v[1]);
        if n == 0.0 {
            None
        } else {
            Some([v[0] / n, v[1] / n])
        }
    };
    let big_vec = vec_for(big).unwrap_or([0.0, 1.0]);
    let small_vec = [big_vec[1], -big_vec[0]];
    CoefficientMatrix {
        a,
        lambda: small,
        lambda_vec: small_vec,
        big_lambda: big,
        big_lambda_vec: big_vec,
    }
}

#[inline]
pub(crate) fn m_of(g: [f64; 2], hs: [f64; 3]) -> f64 {
    let [ux, uy] = g;
    let [uxx, uxy, uyy] = hs;
    (1.0 + uy * uy) * uxx - 2.0 * ux * uy * uxy + (1.0 + ux * ux) * uyy
}

/// M u at interior nodes.
pub fn apply_m(u: &ScalarField) -> Result<Vec<f64>, FieldError> {
    u.validate()?;
    Ok(u.grid
        .stencils
        .par_iter()
        .map(|s| {
            m_of(
                [apply(&s.dx, u), apply(&s.dy, u)],
                [apply(&s.dxx, u), apply(&s.dxy, u), apply(&s.dyy, u)],
            )
        })
        .collect())
}

/// M u in the form W²Δu − ⟨Hess u ∇u, ∇u⟩ with the same stencils.
pub fn apply_m_laplacian_form(u: &ScalarField) -> Result<Vec<f64>, FieldError> {
    let g = gradient(u)?;
    let hs = hessian(u)?;
    Ok(g.iter()
        .zip(&hs)
        .map(|(&[ux, uy], &[uxx, uxy, uyy])| {
            let w2 = 1.0 + ux * ux + uy * uy;
            w2 * (uxx + uyy) - (ux * ux * uxx + 2.0 * ux * uy * uxy + uy * uy * uyy)
        })
        .collect())
}

/// Q u = M u − τ n H(x) W³ at interior nodes.
pub fn apply_q(u: &ScalarField, h: &PrescribedCurvature, n: usize, tau: f64) -> Result<Vec<f64>, FieldError> {
    u.validate()?;
    let grid = &u.grid;
    let nf = n as f64;
    Ok(grid
        .stencils
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let g = [apply(&s.dx, u), apply(&s.dy, u)];
            let m = m_of(g, [apply(&s.dxx, u), apply(&s.dxy, u), apply(&s.dyy, u)]);
            let w = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
            m - tau * nf * h.value(grid.position(grid.interior[i])) * w * w * w
        })
        .collect())
}

/// |∇u| at each boundary foot point: a one-sided quadratic along the link
/// combined with the transverse difference at the adjacent interior node.
pub fn boundary_gradient(u: &ScalarField) -> Result<Vec<f64>, FieldError> {
    u.validate()?;
    let grid = &u.grid;
    let h = grid.h;
    Ok(grid
        .links
        .iter()
        .enumerate()
        .map(|(l, link)| {
            let up = u.values[link.node];
            let g = u.trace[l];
            let th = link.theta * h;
            let (di, dj) = DIRS[link.dir];
            let i = (link.node % grid.nx) as i64 - di;
            let j = (link.node / grid.nx) as i64 - dj;
            let back = j as usize * grid.nx + i as usize;
            let along = if grid.is_interior(back) {
                let (x0, x2) = (-h, th);
                let upp = u.values[back];
                upp * x2 / (x0 * (x0 - x2)) + up * (x2 - x0) / ((-x0) * (-x2)) + g * (2.0 * x2 - x0) / ((x2 - x0) * x2)
            } else {
                (g - up) / th
            };
            let st = &grid.stencils[grid.unknown_of(link.node).unwrap()];
            let across = if link.dir < 2 { apply(&st.dy, u) } else { apply(&st.dx, u) };
            along.hypot(across)
        })
        .collect())
}

/// u at each foot point extrapolated from the interior along the link:
/// quadratic through three interior nodes, linear when only two exist.
/// Comparing with the trace shows whether the data is attained or only
/// imposed through a boundary layer.
pub fn extrapolated_trace(u: &ScalarField) -> Result<Vec<f64>, FieldError> {
    u.validate()?;
    let grid = &u.grid;
    Ok(grid
        .links
        .iter()
        .map(|link| {
            let t = link.theta;
            let (di, dj) = DIRS[link.dir];
            let behind = |m: i64| {
                let i = (link.node % grid.nx) as i64 - m * di;
                let j = (link.node / grid.nx) as i64 - m * dj;
                let k = j as usize * grid.nx + i as usize;
                grid.is_interior(k).then(|| u.values[k])
            };
            let u0 = u.values[link.node];
            match (behind(1), behind(2)) {
                // Lagrange through 0, −1, −2 (units of h) evaluated at t
                (Some(u1), Some(u2)) => {
                    u0 * (t + 1.0) * (t + 2.0) / 2.0 - u1 * t * (t + 2.0) + u2 * t * (t + 1.0) / 2.0
                }
                (Some(u1), None) => u0 + t * (u0 - u1),
                _ => u0,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use proptest::prelude::*;

    fn disk_grid(h: f64) -> Arc<Grid> {
        Grid::build(&DomainSpec::unit_disk(), h).unwrap()
    }

    #[test]
    fn linear_and_quadratic_derivatives() {
        let g = disk_grid(1.0 / 16.0);
        let u = ScalarField::from_fn(&g, |p| p.x);
        for d in gradient(&u).unwrap() {
            assert!((d[0] - 1.0).abs() < 1e-12 && d[1].abs() < 1e-12);
        }
        let u = ScalarField::from_fn(&g, |p| p.x * p.x);
        let grad = gradient(&u).unwrap();
        let u_half = g.interior.iter().position(|&k| {
            let p = g.position(k);
            (p.x - 0.5).abs() < 1e-12 && p.y.abs() < 1e-12
        });
        assert!((grad[u_half.unwrap()][0] - 1.0).abs() < 1e-12);
        let u = ScalarField::from_fn(&g, |p| p.x * p.y);
        for (s, hs) in g.stencils.iter().zip(hessian(&u).unwrap()) {
            if s.cross != crate::grid::CrossKind::Missing {
                assert!((hs[1] - 1.0).abs() < 1e-9);
            }
        }
        let u = ScalarField::from_fn(&g, |p| p.x * p.x + p.y * p.y);
        for hs in hessian(&u).unwrap() {
            assert!((hs[0] - 2.0).abs() < 1e-8 && hs[1].abs() < 1e-8 && (hs[2] - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn constants_and_affine_fields_are_minimal() {
        let g = disk_grid(1.0 / 16.0);
        for f in [ScalarField::from_fn(&g, |_| 3.5), ScalarField::from_fn(&g, |p| 0.7 * p.x - 1.2 * p.y + 4.0)] {
            assert!(apply_m(&f).unwrap().iter().all(|v| v.abs() < 1e-9));
            let q = apply_q(&f, &PrescribedCurvature::constant(0.0), 2, 1.0).unwrap();
            assert_eq!(q, apply_m(&f).unwrap());
        }
        let z = ScalarField::zeros(&g);
        let q = apply_q(&z, &PrescribedCurvature::constant(0.3), 2, 1.0).unwrap();
        assert!(q.iter().all(|v| (*v + 0.6).abs() < 1e-15));
    }

    #[test]
    fn coefficient_matrix_examples() {
        let c = coefficient_matrix([0.0, 0.0]);
        assert_eq!(c.a, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!((c.lambda, c.big_lambda), (1.0, 1.0));
        let c = coefficient_matrix([1.0, 0.0]);
        assert_eq!(c.a, [[1.0, 0.0], [0.0, 2.0]]);
        assert_eq!((c.lambda, c.big_lambda), (1.0, 2.0));
        assert!((c.lambda_vec[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_fields_are_rejected() {
        let g = disk_grid(0.25);
        let mut u = ScalarField::zeros(&g);
        u.values[g.interior[3]] = f64::NAN;
        assert!(matches!(apply_m(&u), Err(FieldError::NonFinite { .. })));
        let mut u = ScalarField::zeros(&g);
        u.trace[0] = f64::INFINITY;
        assert!(matches!(gradient(&u), Err(FieldError::NonFiniteTrace { .. })));
    }

    #[test]
    fn ghost_extrapolation_attains_the_trace() {
        let g = disk_grid(1.0 / 8.0);
        let exact = ScalarField::from_fn(&g, |p| 2.0 * p.x - p.y);
        let rebuilt = ScalarField::from_interior(&g, &exact.interior_values(), exact.trace.clone()).unwrap();
        for (k, c) in g.class.iter().enumerate() {
            if *c == NodeClass::Ghost {
                assert!((rebuilt.values[k] - exact.values[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn extrapolation_reproduces_quadratics() {
        let g = disk_grid(0.1);
        let f = |p: Point| 0.3 * p.x * p.x - p.x * p.y + 2.0 * p.y + 1.0;
        let u = ScalarField::from_fn(&g, f);
        let ext = extrapolated_trace(&u).unwrap();
        let mut quadratic = 0;
        for (l, link) in g.links.iter().enumerate() {
            let (di, dj) = DIRS[link.dir];
            let i = (link.node % g.nx) as i64 - 2 * di;
            let j = (link.node / g.nx) as i64 - 2 * dj;
            if g.is_interior(j as usize * g.nx + i as usize) {
                quadratic += 1;
                assert!((ext[l] - f(link.foot)).abs() < 1e-12);
            }
        }
        assert!(quadratic > g.links.len() / 2);
    }

    #[test]
    fn boundary_gradient_of_affine_field() {
        let g = disk_grid(1.0 / 16.0);
        let u = ScalarField::from_fn(&g, |p| 3.0 * p.x + 4.0 * p.y);
        for v in boundary_gradient(&u).unwrap() {
            assert!((v - 5.0).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn eigenvalues_are_one_and_w_squared(px in -10.0f64..10.0, py in -10.0f64..10.0) {
            let c = coefficient_matrix([px, py]);
            let w2 = 1.0 + px * px + py * py;
            prop_assert!((c.lambda - 1.0).abs() < 1e-12);
            prop_assert!((c.big_lambda - w2).abs() < 1e-12 * w2);
            // A v = λ v for both eigenpairs
            for (l, v) in [(c.lambda, c.lambda_vec), (c.big_lambda, c.big_lambda_vec)] {
                let av = [c.a[0][0] * v[0] + c.a[0][1] * v[1], c.a[1][0] * v[0] + c.a[1][1] * v[1]];
                prop_assert!((av[0] - l * v[0]).abs() < 1e-11 * w2 && (av[1] - l * v[1]).abs() < 1e-11 * w2);
            }
        }

        #[test]
        fn the_two_forms_of_m_agree(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
            let g = disk_grid(1.0 / 12.0);
            let u = ScalarField::from_fn(&g, |p| (a * p.x).sin() + b * p.x * p.y * p.y + c * (p.y).exp());
            let m1 = apply_m(&u).unwrap();
            let m2 = apply_m_laplacian_form(&u).unwrap();
            for (x, y) in m1.iter().zip(&m2) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}

//! Closed-form solutions used as oracles: fields with known H whose
//! discrete residual must be O(h²).

use std::sync::Arc;

use serde::Serialize;

use crate::boundary_data::BoundaryData;
use crate::field::{self, FieldError, ScalarField};
use crate::geometry::{DomainSpec, Point, PrescribedCurvature};
use crate::grid::{Grid, GridError};
use crate::solver::Problem;

#[derive(Clone)]
pub struct ReferenceSolution {
    pub name: &'static str,
    pub u: fn(Point) -> f64,
    pub h: f64,
    /// Where the closed form is a valid graph.
    pub validity: &'static str,
    pub domain: DomainSpec,
    pub data: BoundaryData,
}

fn scherk(p: Point) -> f64 {
    (p.x.cos() / p.y.cos()).ln()
}

/// Lower spherical cap of radius 1/H = 2.5 through the unit circle.
fn cap(p: Point) -> f64 {
    5.25f64.sqrt() - (6.25 - p.norm2()).sqrt()
}

fn catenoid(p: Point) -> f64 {
    p.norm().acosh()
}

fn zero(_: Point) -> f64 {
    0.0
}

pub const NAMES: [&str; 4] = ["scherk", "cap", "catenoid-annulus", "zero"];

pub fn lookup(name: &str) -> Option<ReferenceSolution> {
    let r = match name {
        "scherk" => ReferenceSolution {
            name: "scherk",
            u: scherk,
            h: 0.0,
            validity: "|x|, |y| < pi/2",
            domain: DomainSpec::rect(Point::default(), 0.6, 0.6).expect("square"),
            data: BoundaryData::Scherk,
        },
        "cap" => ReferenceSolution {
            name: "cap",
            u: cap,
            h: 0.4,
            validity: "r < 2.5",
            domain: DomainSpec::unit_disk(),
            // the cap vanishes on the unit circle
            data: BoundaryData::Zero,
        },
        "catenoid-annulus" => ReferenceSolution {
            name: "catenoid-annulus",
            u: catenoid,
            h: 0.0,
            validity: "r > 1 (tested on the disk of radius 1 about (2.25, 0))",
            domain: DomainSpec::disk(Point::new(2.25, 0.0), 1.0).expect("disk"),
            data: BoundaryData::custom(catenoid),
        },
        "zero" => ReferenceSolution {
            name: "zero",
            u: zero,
            h: 0.0,
            validity: "everywhere",
            domain: DomainSpec::unit_disk(),
            data: BoundaryData::Zero,
        },
        _ => return None,
    };
    Some(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfTest {
    pub name: String,
    pub spacings: [f64; 2],
    /// ‖Q u‖∞ over nodes at least 1/8 from ∂Ω.
    pub residuals: [f64; 2],
    pub ratio: Option<f64>,
    pub pass: bool,
}

/// Error against the closed form.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorNorms {
    pub sup: f64,
    pub at: Point,
}

impl ReferenceSolution {
    pub fn problem(&self) -> Problem {
        Problem {
            domain: self.domain.clone(),
            curvature: PrescribedCurvature::constant(self.h),
            data: self.data.clone(),
            n: 2,
        }
    }

    pub fn field(&self, grid: &Arc<Grid>) -> ScalarField {
        ScalarField::from_fn(grid, self.u)
    }

    /// ‖Q u‖∞ of the sampled closed form over nodes at least `collar`
    /// from ∂Ω.
    pub fn residual(&self, grid: &Arc<Grid>, collar: f64) -> Result<f64, FieldError> {
        let q = field::apply_q(&self.field(grid), &PrescribedCurvature::constant(self.h), 2, 1.0)?;
        Ok(q.iter()
            .enumerate()
            .filter(|(i, _)| grid.away_from_boundary(*i, collar))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max))
    }

    /// The residual away from a fixed collar of width 1/8 must fall by
    /// [3, 5] under h → h/2, or vanish.
    pub fn self_test(&self, h: f64) -> Result<SelfTest, GridError> {
        let spacings = [h, 0.5 * h];
        let mut residuals = [0.0; 2];
        for (r, &s) in residuals.iter_mut().zip(&spacings) {
            let g = Grid::build(&self.domain, s)?;
            *r = self.residual(&g, 0.125).unwrap_or(f64::NAN);
        }
        let exact = residuals.iter().all(|&r| r < 1e-12);
        let ratio = (!exact).then(|| residuals[0] / residuals[1]);
        Ok(SelfTest {
            name: self.name.to_string(),
            spacings,
            residuals,
            ratio,
            pass: exact || ratio.is_some_and(|r| (3.0..=5.0).contains(&r)),
        })
    }

    pub fn error(&self, u: &ScalarField) -> ErrorNorms {
        let g = &u.grid;
        let mut worst = ErrorNorms {
            sup: 0.0,
            at: Point::default(),
        };
        for &k in &g.interior {
            let x = g.position(k);
            let e = (u.values[k] - (self.u)(x)).abs();
            if e > worst.sup {
                worst = ErrorNorms { sup: e, at: x };
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_self_tests() {
        for name in NAMES {
            let r = lookup(name).unwrap();
            let t = r.self_test(1.0 / 16.0).unwrap();
            assert!(t.pass, "{t:?}");
        }
        assert!(lookup("helicoid").is_none());
    }

    #[test]
    fn cap_has_the_right_curvature() {
        // div(∇u/W) = 2H for the cap, checked by central differences
        let h = 1e-4;
        let flux = |p: Point, i: usize| {
            let gx = (cap(Point::new(p.x + h, p.y)) - cap(Point::new(p.x - h, p.y))) / (2.0 * h);
            let gy = (cap(Point::new(p.x, p.y + h)) - cap(Point::new(p.x, p.y - h))) / (2.0 * h);
            [gx, gy][i] / (1.0 + gx * gx + gy * gy).sqrt()
        };
        let p = Point::new(0.3, -0.2);
        let div = (flux(Point::new(p.x + h, p.y), 0) - flux(Point::new(p.x - h, p.y), 0)
            + flux(Point::new(p.x, p.y + h), 1)
            - flux(Point::new(p.x, p.y - h), 1))
            / (2.0 * h);
        assert!((div - 0.8).abs() < 1e-5, "{div}");
    }
}

//! Uniform Cartesian grid with an embedded Dirichlet boundary.
//!
//! Nodes sit at `origin + (i, j)·h` with the origin aligned to multiples of
//! `h`. A node is interior when it lies strictly inside the domain, ghost
//! when it is outside but 4-adjacent to an interior node, and exterior
//! otherwise. Every interior-to-ghost edge carries a [`BoundaryLink`] with
//! the crossing fraction θ and the foot point on ∂Ω; the difference
//! stencils below use the foot point directly (Shortley–Weller), which is
//! the same as eliminating a linearly extrapolated ghost value.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{DomainSpec, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeClass {
    Interior,
    Ghost,
    Exterior,
}

impl NodeClass {
    pub fn label(self) -> &'static str {
        match self {
            NodeClass::Interior => "interior",
            NodeClass::Ghost => "ghost",
            NodeClass::Exterior => "exterior",
        }
    }
}

/// Directions in arm order: E, W, N, S.
pub const DIRS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryLink {
    pub node: usize,
    pub ghost: usize,
    pub dir: usize,
    pub theta: f64,
    pub foot: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tap {
    Node(usize),
    Foot(usize),
}

/// A three-point stencil along one axis: (minus, center, plus).
pub type Line = [(Tap, f64); 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CrossKind {
    Centered,
    Diagonal,
    Quadrant,
    Missing,
}

#[derive(Debug, Clone)]
pub struct NodeStencil {
    pub dx: Line,
    pub dy: Line,
    pub dxx: Line,
    pub dyy: Line,
    pub dxy: Vec<(Tap, f64)>,
    pub cross: CrossKind,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid spacing {0} must be positive and finite")]
    BadSpacing(f64),
    #[error("grid h = {h} leaves no interior nodes in the domain")]
    EmptyInterior { h: f64 },
    #[error("grid of {0} nodes is too large")]
    TooLarge(usize),
    #[error("boundary crossing not found on link at {0}")]
    NoCrossing(Point),
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct CrossStats {
    pub centered: usize,
    pub diagonal: usize,
    pub quadrant: usize,
    pub missing: usize,
}

#[derive(Debug)]
pub struct Grid {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub origin: Point,
    pub class: Vec<NodeClass>,
    /// Interior node ids in lexicographic order; position = unknown index.
    pub interior: Vec<usize>,
    unknown: Vec<u32>,
    pub links: Vec<BoundaryLink>,
    /// Per unknown, the link on each arm (E, W, N, S) if that arm crosses ∂Ω.
    pub arm_links: Vec<[Option<u32>; 4]>,
    /// Signed distance at interior and ghost nodes.
    pub distance: Vec<f64>,
    pub stencils: Vec<NodeStencil>,
    pub cross_stats: CrossStats,
}

const NONE: u32 = u32::MAX;

impl Grid {
    pub fn build(domain: &DomainSpec, h: f64) -> Result<Arc<Grid>, GridError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(GridError::BadSpacing(h));
        }
        let bb = domain.bbox;
        let i0 = (bb.min.x / h).floor() as i64 - 2;
        let j0 = (bb.min.y / h).floor() as i64 - 2;
        let i1 = (bb.max.x / h).ceil() as i64 + 2;
        let j1 = (bb.max.y / h).ceil() as i64 + 2;
        let nx = (i1 - i0 + 1) as usize;
        let ny = (j1 - j0 + 1) as usize;
        if nx.saturating_mul(ny) > 20_000_000 {
            return Err(GridError::TooLarge(nx * ny));
        }
        let origin = Point::new(i0 as f64 * h, j0 as f64 * h);
        let pos = |i: usize, j: usize| Point::new(origin.x + i as f64 * h, origin.y + j as f64 * h);

        let mut level = vec![0.0; nx * ny];
        let mut class = vec![NodeClass::Exterior; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                level[k] = domain.level_value(pos(i, j));
                if level[k] > 0.0 {
                    class[k] = NodeClass::Interior;
                }
            }
        }
        let mut interior = Vec::new();
        let mut unknown = vec![NONE; nx * ny];
        for k in 0..nx * ny {
            if class[k] == NodeClass::Interior {
                unknown[k] = interior.len() as u32;
                interior.push(k);
            }
        }
        if interior.is_empty() {
            return Err(GridError::EmptyInterior { h });
        }

        let mut links = Vec::new();
        let mut arm_links = vec![[None; 4]; interior.len()];
        for (u, &k) in interior.iter().enumerate() {
            let (i, j) = (k % nx, k / nx);
            for (d, (di, dj)) in DIRS.iter().enumerate() {
                let ni = (i as i64 + di) as usize;
                let nj = (j as i64 + dj) as usize;
                let nk = nj * nx + ni;
                if class[nk] == NodeClass::Interior {
                    continue;
                }
                class[nk] = NodeClass::Ghost;
                let a = pos(i, j);
                let b = pos(ni, nj);
                let theta = crossing(|t| domain.level_value(a + (b - a) * t), level[k], level[nk])
                    .ok_or(GridError::NoCrossing(a))?;
                arm_links[u][d] = Some(links.len() as u32);
                links.push(BoundaryLink {
                    node: k,
                    ghost: nk,
                    dir: d,
                    theta,
                    foot: a + (b - a) * theta,
                });
            }
        }

        let mut distance = vec![f64::NAN; nx * ny];
        for k in 0..nx * ny {
            if class[k] != NodeClass::Exterior {
                distance[k] = domain.signed_distance(pos(k % nx, k / nx));
            }
        }

        let mut grid = Grid {
            h,
            nx,
            ny,
            origin,
            class,
            interior,
            unknown,
            links,
            arm_links,
            distance,
            stencils: Vec::new(),
            cross_stats: CrossStats::default(),
        };
        grid.stencils = (0..grid.interior.len()).map(|u| grid.make_stencil(u)).collect();
        let mut stats = CrossStats::default();
        for s in &grid.stencils {
            match s.cross {
                CrossKind::Centered => stats.centered += 1,
                CrossKind::Diagonal => stats.diagonal += 1,
                CrossKind::Quadrant => stats.quadrant += 1,
                CrossKind::Missing => stats.missing += 1,
            }
        }
        grid.cross_stats = stats;
        Ok(Arc::new(grid))
    }

    pub fn position(&self, k: usize) -> Point {
        Point::new(
            self.origin.x + (k % self.nx) as f64 * self.h,
            self.origin.y + (k / self.nx) as f64 * self.h,
        )
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn unknown_of(&self, k: usize) -> Option<usize> {
        match self.unknown.get(k) {
            Some(&u) if u != NONE => Some(u as usize),
            _ => None,
        }
    }

    pub fn n_unknowns(&self) -> usize {
        self.interior.len()
    }

    pub fn is_interior(&self, k: usize) -> bool {
        self.class[k] == NodeClass::Interior
    }

    fn offset(&self, k: usize, di: i64, dj: i64) -> Option<usize> {
        let i = (k % self.nx) as i64 + di;
        let j = (k / self.nx) as i64 + dj;
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            return None;
        }
        Some(j as usize * self.nx + i as usize)
    }

    fn interior_at(&self, k: usize, di: i64, dj: i64) -> Option<usize> {
        self.offset(k, di, dj).filter(|&n| self.is_interior(n))
    }

    /// Arm `d` of unknown `u`: the neighbour tap and its distance in units of h.
    fn arm(&self, u: usize, d: usize) -> (Tap, f64) {
        match self.arm_links[u][d] {
            Some(l) => (Tap::Foot(l as usize), self.links[l as usize].theta),
            None => {
                let (di, dj) = DIRS[d];
                (Tap::Node(self.offset(self.interior[u], di, dj).unwrap()), 1.0)
            }
        }
    }

    fn line(&self, u: usize, plus: usize, minus: usize) -> (Line, Line) {
        let k = self.interior[u];
        let (tp, sp) = self.arm(u, plus);
        let (tm, sm) = self.arm(u, minus);
        let (hp, hm) = (sp * self.h, sm * self.h);
        let first = [
            (tm, -hp / (hm * (hp + hm))),
            (Tap::Node(k), (hp - hm) / (hp * hm)),
            (tp, hm / (hp * (hp + hm))),
        ];
        let second = [
            (tm, 2.0 / (hm * (hp + hm))),
            (Tap::Node(k), -2.0 / (hp * hm)),
            (tp, 2.0 / (hp * (hp + hm))),
        ];
        (first, second)
    }

    fn make_stencil(&self, u: usize) -> NodeStencil {
        let k = self.interior[u];
        let (dx, dxx) = self.line(u, 0, 1);
        let (dy, dyy) = self.line(u, 2, 3);
        let h2 = self.h * self.h;
        let ne = self.interior_at(k, 1, 1);
        let sw = self.interior_at(k, -1, -1);
        let nw = self.interior_at(k, -1, 1);
        let se = self.interior_at(k, 1, -1);

        let (dxy, cross) = if let (Some(ne), Some(sw), Some(nw), Some(se)) = (ne, sw, nw, se) {
            let w = 1.0 / (4.0 * h2);
            (
                vec![(Tap::Node(ne), w), (Tap::Node(sw), w), (Tap::Node(nw), -w), (Tap::Node(se), -w)],
                CrossKind::Centered,
            )
        } else if let Some((a, b, sign)) = ne.zip(sw).map(|(a, b)| (a, b, 1.0)).or(nw.zip(se).map(|(a, b)| (a, b, -1.0))) {
            // (u_a + u_b − 2u_P)/h² = u_xx ± 2u_xy + u_yy + O(h²)
            let mut taps = vec![
                (Tap::Node(a), sign / (2.0 * h2)),
                (Tap::Node(b), sign / (2.0 * h2)),
                (Tap::Node(k), -sign / h2),
            ];
            for &(t, w) in dxx.iter().chain(dyy.iter()) {
                taps.push((t, -sign * 0.5 * w));
            }
            (merge_taps(taps), CrossKind::Diagonal)
        } else {
            let mut found = None;
            for (sx, sy) in [(1i64, 1i64), (-1, 1), (-1, -1), (1, -1)] {
                if let (Some(dg), Some(ax), Some(ay)) = (
                    self.interior_at(k, sx, sy),
                    self.interior_at(k, sx, 0),
                    self.interior_at(k, 0, sy),
                ) {
                    let w = (sx * sy) as f64 / h2;
                    found = Some(vec![
                        (Tap::Node(dg), w),
                        (Tap::Node(ax), -w),
                        (Tap::Node(ay), -w),
                        (Tap::Node(k), w),
                    ]);
                    break;
                }
            }
            match found {
                Some(t) => (t, CrossKind::Quadrant),
                None => (Vec::new(), CrossKind::Missing),
            }
        };
        NodeStencil {
            dx,
            dy,
            dxx,
            dyy,
            dxy,
            cross,
        }
    }

    /// Interior nodes at least `width` from the boundary.
    pub fn away_from_boundary(&self, u: usize, width: f64) -> bool {
        self.distance[self.interior[u]] >= width
    }
}

fn merge_taps(taps: Vec<(Tap, f64)>) -> Vec<(Tap, f64)> {
    let mut out: Vec<(Tap, f64)> = Vec::with_capacity(taps.len());
    for (t, w) in taps {
        match out.iter_mut().find(|(o, _)| *o == t) {
            Some(e) => e.1 += w,
            None => out.push((t, w)),
        }
    }
    out
}

/// Fraction t ∈ (0, 1] where g changes sign, given g(0) = g0 > 0 ≥ g1 = g(1).
fn crossing<G: Fn(f64) -> f64>(g: G, g0: f64, g1: f64) -> Option<f64> {
    if !(g0 > 0.0) || g1 > 0.0 {
        return None;
    }
    if g1 == 0.0 {
        return Some(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut glo, mut ghi) = (g0, g1);
    // Illinois regula falsi, then bisection cleanup
    let mut side = 0;
    for _ in 0..100 {
        let t = (lo * ghi - hi * glo) / (ghi - glo);
        let t = if t > lo && t < hi { t } else { 0.5 * (lo + hi) };
        let gt = g(t);
        if gt > 0.0 {
            lo = t;
            glo = gt;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            ghi = gt;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_and_links_on_unit_disk() {
        let d = DomainSpec::unit_disk();
        let g = Grid::build(&d, 1.0 / 16.0).unwrap();
        for &k in &g.interior {
            assert!(g.distance[k] > 0.0);
        }
        for (k, c) in g.class.iter().enumerate() {
            if *c == NodeClass::Ghost {
                assert!(g.distance[k] <= 0.0 && g.distance[k].abs() <= 2.0 * g.h);
            }
        }
        for l in &g.links {
            assert!(l.theta > 0.0 && l.theta <= 1.0);
            assert!(d.signed_distance(l.foot).abs() <= 1e-8);
        }
        // node (1, 0) is on the circle, hence a ghost reached with θ = 1
        let k = g.index((1.0 / g.h - g.origin.x / g.h).round() as usize, (-g.origin.y / g.h).round() as usize);
        assert_eq!(g.class[k], NodeClass::Ghost);
    }

    #[test]
    fn stencils_are_exact_for_quadratics() {
        let d = DomainSpec::ellipse(Point::new(0.05, -0.02), 1.0, 0.7).unwrap();
        let g = Grid::build(&d, 0.05).unwrap();
        let f = |p: Point| 0.3 + 1.1 * p.x - 0.4 * p.y + 0.7 * p.x * p.x - 1.3 * p.x * p.y + 0.9 * p.y * p.y;
        let val = |t: Tap| match t {
            Tap::Node(k) => f(g.position(k)),
            Tap::Foot(l) => f(g.links[l].foot),
        };
        let apply = |taps: &[(Tap, f64)]| taps.iter().map(|&(t, w)| w * val(t)).sum::<f64>();
        for (u, s) in g.stencils.iter().enumerate() {
            let p = g.position(g.interior[u]);
            assert!((apply(&s.dx) - (1.1 + 1.4 * p.x - 1.3 * p.y)).abs() < 1e-9);
            assert!((apply(&s.dy) - (-0.4 - 1.3 * p.x + 1.8 * p.y)).abs() < 1e-9);
            assert!((apply(&s.dxx) - 1.4).abs() < 1e-7);
            assert!((apply(&s.dyy) - 1.8).abs() < 1e-7);
            if s.cross != CrossKind::Missing {
                assert!((apply(&s.dxy) + 1.3).abs() < 1e-7, "{:?}", s.cross);
            }
        }
        assert!(g.cross_stats.centered > 0);
    }

    #[test]
    fn empty_interior_is_an_error() {
        let d = DomainSpec::disk(Point::new(0.5, 0.5), 0.1).unwrap();
        assert!(matches!(Grid::build(&d, 1.0), Err(GridError::EmptyInterior { .. })));
        assert!(matches!(Grid::build(&d, -1.0), Err(GridError::BadSpacing(_))));
    }
}

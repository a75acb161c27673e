//! Text artifacts: CSV tables and an SVG heatmap.

use std::fmt::Write as _;

use crate::field::ScalarField;
use crate::geometry::Point;
use crate::solver::IterationRecord;

pub fn traces_csv(runs: &[(f64, &[IterationRecord])]) -> String {
    let mut s = String::from("h,iteration,stage,tau,sup_u,sup_grad,residual,collar_residual,update,damping\n");
    for (h, recs) in runs {
        for r in recs.iter() {
            let _ = writeln!(
                s,
                "{h},{},{},{},{:e},{:e},{:e},{:e},{:e},{}",
                r.iteration, r.stage, r.tau, r.sup_u, r.sup_grad, r.residual, r.collar_residual, r.update, r.damping
            );
        }
    }
    s
}

/// One row per interior node; with an exact solution, also its value and
/// the error.
pub fn fields_csv(u: &ScalarField, exact: Option<&dyn Fn(Point) -> f64>) -> String {
    let g = &u.grid;
    let mut s = String::from(if exact.is_some() { "x,y,u,exact,error\n" } else { "x,y,u\n" });
    for &k in &g.interior {
        let p = g.position(k);
        let v = u.values[k];
        match exact {
            Some(f) => {
                let e = f(p);
                let _ = writeln!(s, "{},{},{:e},{:e},{:e}", p.x, p.y, v, e, v - e);
            }
            None => {
                let _ = writeln!(s, "{},{},{:e}", p.x, p.y, v);
            }
        }
    }
    s
}

const STOPS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Viridis-like ramp on [0, 1].
pub fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|j| (STOPS[i][j] + f * (STOPS[i + 1][j] - STOPS[i][j])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Interior node values as cells, colored on the field's own [min, max],
/// which the legend prints.
pub fn heatmap_svg(u: &ScalarField, title: &str) -> String {
    let g = &u.grid;
    let vals: Vec<f64> = g.interior.iter().map(|&k| u.values[k]).collect();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (w, h) = ((g.nx as f64) * g.h, (g.ny as f64) * g.h);
    let scale = 600.0 / w.max(h);
    let (pw, ph) = (w * scale, h * scale);
    let cell = g.h * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        pw + 40.0,
        ph + 90.0,
        pw + 40.0,
        ph + 90.0
    );
    let _ = writeln!(s, r#"<text x="20" y="24" font-family="monospace" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(s, r#"<g transform="translate(20,40)" shape-rendering="crispEdges">"#);
    for (&k, v) in g.interior.iter().zip(&vals) {
        let p = g.position(k);
        let x = (p.x - g.origin.x) * scale - 0.5 * cell;
        let y = ph - (p.y - g.origin.y) * scale - 0.5 * cell;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            cell + 0.05,
            cell + 0.05,
            color((v - lo) / span)
        );
    }
    let _ = writeln!(s, "</g>");
    let ly = ph + 55.0;
    for i in 0..100 {
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{ly}" width="{:.2}" height="12" fill="{}"/>"#,
            20.0 + pw * i as f64 / 100.0,
            pw / 100.0 + 0.05,
            color(i as f64 / 99.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.0}" font-family="monospace" font-size="12">min {lo:.6e}</text>"#,
        ly + 28.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.0}" y="{:.0}" font-family="monospace" font-size="12" text-anchor="end">max {hi:.6e}</text>"#,
        20.0 + pw,
        ly + 28.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use crate::grid::Grid;

    #[test]
    fn ramp_ends() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(f64::NAN), color(0.0));
    }

    #[test]
    fn heatmap_has_one_cell_per_node_and_a_legend() {
        let g = Grid::build(&DomainSpec::unit_disk(), 0.25).unwrap();
        let u = ScalarField::from_fn(&g, |p| p.x);
        let svg = heatmap_svg(&u, "x < 1 & y");
        assert_eq!(svg.matches("<rect").count(), g.interior.len() + 100);
        assert!(svg.contains("min -7.5") && svg.contains("max 7.5"));
        assert!(svg.contains("x &lt; 1 &amp; y"));
        let csv = fields_csv(&u, Some(&|p: Point| p.x));
        assert_eq!(csv.lines().count(), g.interior.len() + 1);
    }
}

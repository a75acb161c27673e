//! Scenario files: what to solve, on which grids, and what to audit.
//!
//! Sections: `[domain]`, `[curvature]`, `[data]`, `[grid]`, `[solver]`,
//! `[audits]`, `[reference]`, `[output]`, `[sweep]`, `[estimates]`. The
//! README lists every key.

use std::path::PathBuf;

use serde::Serialize;

use crate::config::{ConfigError, RawConfig, Section};
use crate::geometry::{DomainSpec, Point, PrescribedCurvature, DEFAULT_SAMPLES};
use crate::reference;
use crate::solver::SolveConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSpec {
    Zero,
    Expression { source: String },
    Scherk,
    /// Bump of height ε at the boundary point nearest y₀. Without a radius
    /// the certified radius of the non-existence construction is used.
    Bump { y0: Point, epsilon: f64, ln_radius: Option<f64> },
    /// Trace of the reference solution.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditName {
    Height,
    GlobalGradient,
    BoundaryGradient,
    HeightBarrier,
    BoundaryBarriers,
    Nonexistence,
}

impl AuditName {
    pub const ALL: [(&'static str, AuditName); 6] = [
        ("height", AuditName::Height),
        ("global_gradient", AuditName::GlobalGradient),
        ("boundary_gradient", AuditName::BoundaryGradient),
        ("height_barrier", AuditName::HeightBarrier),
        ("boundary_barriers", AuditName::BoundaryBarriers),
        ("nonexistence", AuditName::Nonexistence),
    ];

    pub fn as_str(self) -> &'static str {
        Self::ALL.iter().find(|(_, a)| *a == self).expect("listed").0
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurvatureSpec {
    Constant { value: f64 },
    Expression { source: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub name: String,
    #[serde(skip)]
    pub domain: DomainSpec,
    pub domain_description: String,
    pub curvature: CurvatureSpec,
    pub n: usize,
    pub data: DataSpec,
    /// Strictly decreasing.
    pub spacings: Vec<f64>,
    pub solver: SolveConfig,
    pub audits: Vec<AuditName>,
    pub reference: Option<String>,
    pub out_dir: PathBuf,
    /// Constant H values for `sweep`.
    pub sweep_curvature: Option<Vec<f64>>,
    /// Value of sup|u| assumed by `estimates`; the height bound otherwise.
    pub assumed_sup: Option<f64>,
}

fn shape_description(s: &Section) -> String {
    s.entries
        .iter()
        .map(|(k, e)| format!("{k} = {}", e.value))
        .collect::<Vec<_>>()
        .join("; ")
}

fn domain_from(s: &Section) -> Result<DomainSpec, ConfigError> {
    let shape = s.require_string("shape")?;
    let center = s.point("center")?.unwrap_or_default();
    let geo = |r: Result<DomainSpec, crate::geometry::GeometryError>| r.map_err(|e| s.invalid("shape", e.to_string()));
    let d = match shape {
        "disk" => {
            s.only(&["shape", "center", "radius", "samples"])?;
            geo(DomainSpec::disk(center, s.positive("radius")?.unwrap_or(1.0)))?
        }
        "ellipse" => {
            s.only(&["shape", "center", "a", "b", "samples"])?;
            geo(DomainSpec::ellipse(center, s.require_number("a")?, s.require_number("b")?))?
        }
        "rect" => {
            s.only(&["shape", "center", "half_width", "half_height", "samples"])?;
            geo(DomainSpec::rect(center, s.require_number("half_width")?, s.require_number("half_height")?))?
        }
        "rounded_rect" => {
            s.only(&["shape", "center", "half_width", "half_height", "corner_radius", "samples"])?;
            geo(DomainSpec::rounded_rect(
                center,
                s.require_number("half_width")?,
                s.require_number("half_height")?,
                s.require_number("corner_radius")?,
            ))?
        }
        "dumbbell" => {
            s.only(&["shape", "c", "b", "samples"])?;
            geo(DomainSpec::dumbbell(s.require_number("c")?, s.require_number("b")?))?
        }
        "level_set" => {
            s.only(&["shape", "expression", "seed", "extent", "samples"])?;
            geo(DomainSpec::level_set(
                s.require_string("expression")?,
                s.point("seed")?.unwrap_or_default(),
                s.require_number("extent")?,
            ))?
        }
        other => {
            return Err(s.invalid(
                "shape",
                format!("unknown shape '{other}'; expected disk, ellipse, rect, rounded_rect, dumbbell or level_set"),
            ))
        }
    };
    match s.count("samples")? {
        Some(n) if n != DEFAULT_SAMPLES => geo(d.with_samples(n)),
        _ => Ok(d),
    }
}

fn solver_from(s: Option<&Section>) -> Result<SolveConfig, ConfigError> {
    let mut c = SolveConfig::default();
    let Some(s) = s else { return Ok(c) };
    s.only(&[
        "tol_update",
        "tol_residual",
        "max_iters",
        "damping",
        "damping_floor",
        "tau_schedule",
        "gradient_cap",
        "stagnation_window",
    ])?;
    if let Some(x) = s.number("tol_update")? {
        c.tol_update = x;
    }
    c.tol_residual = s.number("tol_residual")?;
    if let Some(x) = s.count("max_iters")? {
        c.max_iters = x;
    }
    if let Some(x) = s.number("damping")? {
        c.damping = x;
    }
    if let Some(x) = s.number("damping_floor")? {
        c.damping_floor = x;
    }
    if let Some(x) = s.numbers("tau_schedule")? {
        c.tau_schedule = x;
    }
    if let Some(x) = s.number("gradient_cap")? {
        c.gradient_cap = x;
    }
    if let Some(x) = s.count("stagnation_window")? {
        c.stagnation_window = x;
    }
    c.validate().map_err(|e| ConfigError {
        line: Some(s.line),
        key: Some("solver".into()),
        message: e.to_string(),
    })?;
    Ok(c)
}

fn data_from(s: &Section) -> Result<DataSpec, ConfigError> {
    match s.require_string("kind")? {
        "zero" => {
            s.only(&["kind"])?;
            Ok(DataSpec::Zero)
        }
        "expression" => {
            s.only(&["kind", "expression"])?;
            let src = s.require_string("expression")?;
            crate::expr::DiffExpr::parse(src).map_err(|e| s.invalid("expression", e.to_string()))?;
            Ok(DataSpec::Expression { source: src.to_string() })
        }
        "scherk" => {
            s.only(&["kind"])?;
            Ok(DataSpec::Scherk)
        }
        "bump" => {
            s.only(&["kind", "y0", "epsilon", "radius", "ln_radius"])?;
            let epsilon = s
                .positive("epsilon")?
                .ok_or_else(|| s.invalid("epsilon", "missing key in [data]"))?;
            let ln_radius = match (s.positive("radius")?, s.number("ln_radius")?) {
                (Some(_), Some(_)) => return Err(s.invalid("radius", "give radius or ln_radius, not both")),
                (Some(r), None) => Some(r.ln()),
                (None, l) => l,
            };
            Ok(DataSpec::Bump {
                y0: s.point("y0")?.ok_or_else(|| s.invalid("y0", "missing key in [data]"))?,
                epsilon,
                ln_radius,
            })
        }
        "reference" => {
            s.only(&["kind"])?;
            Ok(DataSpec::Reference)
        }
        other => Err(s.invalid(
            "kind",
            format!("unknown data kind '{other}'; expected zero, expression, scherk, bump or reference"),
        )),
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ConfigError> {
        Self::from_config(&RawConfig::parse(text)?)
    }

    pub fn from_config(raw: &RawConfig) -> Result<Scenario, ConfigError> {
        let known = [
            "domain",
            "curvature",
            "data",
            "grid",
            "solver",
            "audits",
            "reference",
            "output",
            "sweep",
            "estimates",
            "scenario",
        ];
        if let Some(s) = raw.sections.values().find(|s| !known.contains(&s.name.as_str())) {
            return Err(ConfigError {
                line: Some(s.line),
                key: Some(s.name.clone()),
                message: format!("unknown section [{}]", s.name),
            });
        }
        let reference = match raw.section("reference") {
            None => None,
            Some(s) => {
                s.only(&["name"])?;
                let name = s.require_string("name")?;
                if reference::lookup(name).is_none() {
                    return Err(s.invalid(
                        "name",
                        format!("no reference solution '{name}'; catalog: {}", reference::NAMES.join(", ")),
                    ));
                }
                Some(name.to_string())
            }
        };
        let refsol = reference.as_deref().and_then(reference::lookup);

        let (domain, domain_description) = match (raw.section("domain"), &refsol) {
            (Some(s), _) => (domain_from(s)?, shape_description(s)),
            (None, Some(r)) => (r.domain.clone(), format!("reference {}", r.name)),
            (None, None) => return Err(raw.require("domain").unwrap_err()),
        };

        let (curvature, n) = match (raw.section("curvature"), &refsol) {
            (Some(s), _) => {
                s.only(&["value", "expression", "n"])?;
                let n = s.count("n")?.unwrap_or(2);
                if n < 2 {
                    return Err(s.invalid("n", "n must be at least 2"));
                }
                let c = match (s.number("value")?, s.string("expression")?) {
                    (Some(v), None) => CurvatureSpec::Constant { value: v },
                    (None, Some(e)) => {
                        PrescribedCurvature::expression(e, &domain).map_err(|err| s.invalid("expression", err.to_string()))?;
                        CurvatureSpec::Expression { source: e.to_string() }
                    }
                    (None, None) if raw.section("sweep").is_some_and(|w| w.has("curvature")) => {
                        CurvatureSpec::Constant { value: f64::NAN }
                    }
                    _ => return Err(s.invalid("value", "give exactly one of value or expression")),
                };
                (c, n)
            }
            (None, Some(r)) => (CurvatureSpec::Constant { value: r.h }, 2),
            (None, None) => return Err(raw.require("curvature").unwrap_err()),
        };

        let data = match (raw.section("data"), &refsol) {
            (Some(s), _) => data_from(s)?,
            (None, Some(_)) => DataSpec::Reference,
            (None, None) => return Err(raw.require("data").unwrap_err()),
        };
        if data == DataSpec::Reference && refsol.is_none() {
            return Err(ConfigError {
                line: raw.section("data").map(|s| s.line),
                key: Some("data.kind".into()),
                message: "kind = \"reference\" needs a [reference] section".into(),
            });
        }

        let grid = raw.require("grid")?;
        grid.only(&["h"])?;
        let spacings = grid
            .numbers("h")?
            .ok_or_else(|| grid.invalid("h", "missing key in [grid]"))?;
        if spacings.is_empty() || spacings.iter().any(|&h| !(h > 0.0)) {
            return Err(grid.invalid("h", "spacings must be positive"));
        }
        if !strictly_decreasing(&spacings) {
            return Err(grid.invalid("h", "multiple spacings must be strictly decreasing"));
        }

        let solver = solver_from(raw.section("solver"))?;

        let audits = match raw.section("audits") {
            None => vec![AuditName::Height, AuditName::GlobalGradient, AuditName::BoundaryGradient],
            Some(s) => {
                s.only(&["names"])?;
                let mut out = Vec::new();
                for name in s.strings("names")?.unwrap_or_default() {
                    let a = AuditName::ALL
                        .iter()
                        .find(|(n, _)| *n == name)
                        .ok_or_else(|| s.invalid("names", format!("unknown audit '{name}'")))?
                        .1;
                    if !out.contains(&a) {
                        out.push(a);
                    }
                }
                out
            }
        };

        let out_dir = match raw.section("output") {
            None => PathBuf::from("out"),
            Some(s) => {
                s.only(&["dir"])?;
                PathBuf::from(s.string("dir")?.unwrap_or("out"))
            }
        };

        let sweep_curvature = match raw.section("sweep") {
            None => None,
            Some(s) => {
                s.only(&["curvature"])?;
                let v = s.numbers("curvature")?.unwrap_or_default();
                if v.is_empty() {
                    return Err(s.invalid("curvature", "sweep list is empty"));
                }
                Some(v)
            }
        };
        if matches!(curvature, CurvatureSpec::Constant { value } if value.is_nan()) && sweep_curvature.is_none() {
            return Err(raw.require("curvature")?.invalid("value", "missing key in [curvature]"));
        }

        let assumed_sup = match raw.section("estimates") {
            None => None,
            Some(s) => {
                s.only(&["sup_u"])?;
                s.number("sup_u")?
            }
        };

        let name = match raw.section("scenario") {
            None => "scenario".to_string(),
            Some(s) => {
                s.only(&["name"])?;
                s.string("name")?.unwrap_or("scenario").to_string()
            }
        };

        Ok(Scenario {
            name,
            domain,
            domain_description,
            curvature,
            n,
            data,
            spacings,
            solver,
            audits,
            reference,
            out_dir,
            sweep_curvature,
            assumed_sup,
        })
    }

    /// The prescribed curvature, with a constant override for sweeps.
    pub fn prescribed(&self, constant: Option<f64>) -> PrescribedCurvature {
        match (constant, &self.curvature) {
            (Some(v), _) => PrescribedCurvature::constant(v),
            (None, CurvatureSpec::Constant { value }) => PrescribedCurvature::constant(*value),
            (None, CurvatureSpec::Expression { source }) => {
                PrescribedCurvature::expression(source, &self.domain).expect("validated at parse time")
            }
        }
    }
}

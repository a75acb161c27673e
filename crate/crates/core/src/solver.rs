//! Damped Picard iteration for Q u = 0 with continuation in τ.
//!
//! One Picard step is the map T: freeze the coefficients at the current
//! iterate v, solve the linear problem LP_v, return its solution. Stages
//! run through the related family P_τ (H and φ scaled by τ), each warm
//! started from the previous stage.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::boundary_data::BoundaryData;
use crate::estimates::{self, BarrierParams, EstimateAudit};
use crate::field::{self, FieldError, ScalarField};
use crate::geometry::{DomainSpec, PrescribedCurvature};
use crate::grid::{CrossStats, Grid};
use crate::linear::{self, LinearError, LinearSolver, MMatrixReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be positive and finite")]
    NotPositive(&'static str),
    #[error("damping must lie in (0, 1], got {0}")]
    Damping(f64),
    #[error("damping floor must lie in (0, damping], got {0}")]
    DampingFloor(f64),
    #[error("tau schedule must be non-empty, strictly increasing in (0, 1] and end at 1")]
    Schedule,
    #[error("max_iters and stagnation_window must be at least 1")]
    Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveConfig {
    pub tol_update: f64,
    /// None selects 1e−6·(1 + n·h₀).
    pub tol_residual: Option<f64>,
    pub max_iters: usize,
    pub damping: f64,
    pub damping_floor: f64,
    pub tau_schedule: Vec<f64>,
    pub gradient_cap: f64,
    pub stagnation_window: usize,
    /// Keep the converged field of every stage in the result.
    #[serde(skip)]
    pub keep_stages: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol_update: 1e-9,
            tol_residual: None,
            max_iters: 200,
            damping: 1.0,
            damping_floor: 0.125,
            tau_schedule: vec![0.25, 0.5, 0.75, 1.0],
            gradient_cap: 1e4,
            stagnation_window: 20,
            keep_stages: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.tol_update) {
            return Err(ConfigError::NotPositive("tol_update"));
        }
        if let Some(t) = self.tol_residual {
            if !pos(t) {
                return Err(ConfigError::NotPositive("tol_residual"));
            }
        }
        if !pos(self.gradient_cap) {
            return Err(ConfigError::NotPositive("gradient_cap"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(ConfigError::Damping(self.damping));
        }
        if !(self.damping_floor > 0.0 && self.damping_floor <= self.damping) {
            return Err(ConfigError::DampingFloor(self.damping_floor));
        }
        let s = &self.tau_schedule;
        if s.is_empty()
            || s[0] <= 0.0
            || s.windows(2).any(|w| w[1] <= w[0])
            || *s.last().unwrap() != 1.0
        {
            return Err(ConfigError::Schedule);
        }
        if self.max_iters == 0 || self.stagnation_window == 0 {
            return Err(ConfigError::Counts);
        }
        Ok(())
    }

    pub fn residual_tolerance(&self, n: usize, h: &PrescribedCurvature) -> f64 {
        self.tol_residual.unwrap_or(1e-6 * (1.0 + n as f64 * h.h0))
    }
}

/// A Dirichlet problem for Q u = 0.
#[derive(Debug, Clone)]
pub struct Problem {
    pub domain: DomainSpec,
    pub curvature: PrescribedCurvature,
    pub data: BoundaryData,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    DivergedGradient,
    Stagnated,
    LinearFailure,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::DivergedGradient => "diverged_gradient",
            Verdict::Stagnated => "stagnated",
            Verdict::LinearFailure => "linear_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    /// Global iteration counter, strictly increasing.
    pub iteration: usize,
    pub stage: usize,
    pub tau: f64,
    pub sup_u: f64,
    pub sup_grad: f64,
    pub residual: f64,
    pub collar_residual: f64,
    pub update: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageSummary {
    pub stage: usize,
    pub tau: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub update: f64,
    pub sup_u: f64,
    pub sup_grad: f64,
    pub final_damping: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub unknowns: usize,
    pub boundary_links: usize,
    pub cross_stencils: CrossStats,
}

impl GridSummary {
    pub fn of(grid: &Grid) -> Self {
        GridSummary {
            h: grid.h,
            nx: grid.nx,
            ny: grid.ny,
            unknowns: grid.n_unknowns(),
            boundary_links: grid.links.len(),
            cross_stencils: grid.cross_stats,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub verdict: Verdict,
    pub message: Option<String>,
    pub grid: GridSummary,
    pub config: SolveConfig,
    pub tol_residual: f64,
    pub iterations: Vec<IterationRecord>,
    pub stages: Vec<StageSummary>,
    /// max |λ_min(A(p)) − 1| over every assembled row.
    pub ellipticity_defect: f64,
    /// M-matrix check of the last assembled system.
    pub m_matrix: Option<MMatrixReport>,
    pub boundary_gradient_sup: f64,
    pub audits: Vec<EstimateAudit>,
    pub barrier_params: BarrierParams,
    pub wall_time_s: f64,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }

    /// Every audit passes, except possibly those whose hypotheses fail.
    pub fn audits_pass(&self) -> bool {
        self.audits.iter().all(|a| a.acceptable())
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.iterations.last()
    }

    pub fn max_iterations_per_stage(&self) -> usize {
        self.stages.iter().map(|s| s.iterations).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub field: ScalarField,
    pub report: SolveReport,
    /// Converged field per stage, when requested.
    pub stages: Vec<ScalarField>,
}

/// Sup norm of Q u over interior nodes at least 2h from ∂Ω, and separately
/// over the collar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualNorm {
    pub interior: f64,
    pub collar: f64,
}

pub fn residual_norm(u: &ScalarField, h: &PrescribedCurvature, n: usize, tau: f64) -> Result<ResidualNorm, FieldError> {
    let q = field::apply_q(u, h, n, tau)?;
    let grid = &u.grid;
    let width = 2.0 * grid.h;
    let mut out = ResidualNorm {
        interior: 0.0,
        collar: 0.0,
    };
    for (i, v) in q.iter().enumerate() {
        if grid.away_from_boundary(i, width) {
            out.interior = out.interior.max(v.abs());
        } else {
            out.collar = out.collar.max(v.abs());
        }
    }
    Ok(out)
}

/// One application of T: solve LP_u. No damping.
pub fn picard_step(
    u: &ScalarField,
    h: &PrescribedCurvature,
    phi: &BoundaryData,
    n: usize,
    tau: f64,
) -> Result<ScalarField, LinearError> {
    let sys = linear::assemble(u, h, phi, n, tau)?;
    linear::solve(&sys)
}

fn blend(u: &ScalarField, t: &ScalarField, theta: f64) -> ScalarField {
    let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
        if theta == 1.0 {
            b.to_vec()
        } else {
            a.iter().zip(b).map(|(x, y)| (1.0 - theta) * x + theta * y).collect()
        }
    };
    ScalarField {
        grid: u.grid.clone(),
        values: mix(&u.values, &t.values),
        trace: mix(&u.trace, &t.trace),
    }
}

fn sup_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    let interior = a.max_diff(b).unwrap_or(f64::INFINITY);
    a.trace
        .iter()
        .zip(&b.trace)
        .fold(interior, |m, (x, y)| m.max((x - y).abs()))
}

fn sup_gradient(u: &ScalarField) -> Result<f64, FieldError> {
    Ok(field::gradient(u)?
        .iter()
        .map(|g| g[0].hypot(g[1]))
        .fold(0.0, f64::max))
}

/// Consecutive decreasing steps after which a halved damping is doubled
/// back toward the configured value.
const RECOVERY_STREAK: usize = 5;

/// Continuation over the τ schedule with damped Picard steps, warm started
/// from u ≡ 0. Never fails: problems surface as the report's verdict.
pub fn solve_dirichlet(problem: &Problem, grid: &Arc<Grid>, config: &SolveConfig) -> SolveOutcome {
    let start = Instant::now();
    let Problem {
        domain,
        curvature: hc,
        data: phi,
        n,
    } = problem;
    let n = *n;
    let tol_res = config.residual_tolerance(n, hc);
    let mut report = SolveReport {
        verdict: Verdict::Converged,
        message: None,
        grid: GridSummary::of(grid),
        config: config.clone(),
        tol_residual: tol_res,
        iterations: Vec::new(),
        stages: Vec::new(),
        ellipticity_defect: 0.0,
        m_matrix: None,
        boundary_gradient_sup: f64::NAN,
        audits: Vec::new(),
        barrier_params: BarrierParams::default(),
        wall_time_s: 0.0,
    };
    let mut stages = Vec::new();
    let mut u = ScalarField::zeros(grid);
    if let Err(e) = config.validate() {
        report.verdict = Verdict::LinearFailure;
        report.message = Some(format!("invalid solver configuration: {e}"));
        return SolveOutcome {
            field: u,
            report,
            stages,
        };
    }
    let mut solver = LinearSolver::new();
    let mut counter = 0;

    'stages: for (si, &tau) in config.tau_schedule.iter().enumerate() {
        let mut theta = config.damping;
        let mut prev_res = f64::INFINITY;
        let mut rising = 0;
        let mut falling = 0;
        let mut summary = StageSummary {
            stage: si,
            tau,
            iterations: 0,
            converged: false,
            residual: f64::NAN,
            update: f64::NAN,
            sup_u: f64::NAN,
            sup_grad: f64::NAN,
            final_damping: theta,
        };
        for it in 1..=config.max_iters {
            let step = linear::assemble(&u, hc, phi, n, tau).and_then(|sys| {
                report.ellipticity_defect = report.ellipticity_defect.max(sys.ellipticity_defect);
                let out = solver.solve(&sys).map(|(f, _)| f);
                report.m_matrix = Some(sys.m_matrix_check());
                out
            });
            let t = match step {
                Ok(t) => t,
                Err(e) => {
                    report.verdict = Verdict::LinearFailure;
                    report.message = Some(format!("stage {si} (tau = {tau}), iteration {it}: {e}"));
                    report.stages.push(summary);
                    break 'stages;
                }
            };
            let next = blend(&u, &t, theta);
            let update = sup_diff(&next, &u);
            let measured = residual_norm(&next, hc, n, tau).and_then(|r| Ok((r, sup_gradient(&next)?)));
            let (res, grad) = match measured {
                Ok(v) => v,
                Err(e) => {
                    report.verdict = Verdict::DivergedGradient;
                    report.message = Some(format!("stage {si} (tau = {tau}), iteration {it}: {e}"));
                    report.stages.push(summary);
                    break 'stages;
                }
            };
            counter += 1;
            let sup_u = next.sup_norm();
            report.iterations.push(IterationRecord {
                iteration: counter,
                stage: si,
                tau,
                sup_u,
                sup_grad: grad,
                residual: res.interior,
                collar_residual: res.collar,
                update,
                damping: theta,
            });
            summary.iterations = it;
            summary.residual = res.interior.max(res.collar);
            summary.update = update;
            summary.sup_u = sup_u;
            summary.sup_grad = grad;
            u = next;

            if !(grad <= config.gradient_cap) {
                report.verdict = Verdict::DivergedGradient;
                report.message = Some(format!(
                    "stage {si} (tau = {tau}): sup |grad u| = {grad:.3e} exceeds cap {:.3e}",
                    config.gradient_cap
                ));
                summary.final_damping = theta;
                report.stages.push(summary);
                break 'stages;
            }
            let total = res.interior.max(res.collar);
            if update <= config.tol_update && total <= tol_res {
                summary.converged = true;
                break;
            }
            if total >= prev_res {
                rising += 1;
                falling = 0;
                theta = (theta * 0.5).max(config.damping_floor);
            } else {
                rising = 0;
                falling += 1;
                if falling >= RECOVERY_STREAK && theta < config.damping {
                    theta = (theta * 2.0).min(config.damping);
                    falling = 0;
                }
            }
            prev_res = total;
            if rising >= config.stagnation_window {
                break;
            }
        }
        summary.final_damping = theta;
        let ok = summary.converged;
        let iters = summary.iterations;
        report.stages.push(summary);
        if !ok {
            report.verdict = Verdict::Stagnated;
            report.message = Some(if rising >= config.stagnation_window {
                format!("stage {si} (tau = {tau}): residual did not decrease for {rising} steps")
            } else {
                format!("stage {si} (tau = {tau}): not converged after {iters} iterations")
            });
            break;
        }
        if config.keep_stages {
            stages.push(u.clone());
        }
    }

    report.boundary_gradient_sup = field::boundary_gradient(&u)
        .map(|b| b.into_iter().fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    if report.converged() {
        let (audits, params) = estimates::solution_audits(domain, hc, phi, n, &u);
        report.audits = audits;
        report.barrier_params = params;
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    SolveOutcome {
        field: u,
        report,
        stages,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_problem(hc: f64) -> Problem {
        Problem {
            domain: DomainSpec::unit_disk(),
            curvature: PrescribedCurvature::constant(hc),
            data: BoundaryData::Zero,
            n: 2,
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let p = disk_problem(0.0);
        let g = Grid::build(&p.domain, 1.0 / 16.0).unwrap();
        let u = ScalarField::zeros(&g);
        let t = picard_step(&u, &p.curvature, &p.data, 2, 1.0).unwrap();
        assert!(t.sup_norm() < 1e-14);
    }

    #[test]
    fn first_step_is_a_poisson_solve() {
        let p = disk_problem(0.4);
        let g = Grid::build(&p.domain, 1.0 / 32.0).unwrap();
        let t = picard_step(&ScalarField::zeros(&g), &p.curvature, &p.data, 2, 1.0).unwrap();
        for &k in &g.interior {
            let r2 = g.position(k).norm2();
            assert!((t.values[k] - 0.2 * (r2 - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn residual_of_zero_field_is_n_times_h() {
        let g = Grid::build(&DomainSpec::unit_disk(), 1.0 / 16.0).unwrap();
        let r = residual_norm(&ScalarField::zeros(&g), &PrescribedCurvature::constant(0.3), 2, 1.0).unwrap();
        assert_eq!(r.interior, 0.6);
        assert_eq!(r.collar, 0.6);
    }

    #[test]
    fn config_validation() {
        assert!(SolveConfig::default().validate().is_ok());
        let bad = SolveConfig {
            tau_schedule: vec![0.5, 0.25, 1.0],
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::Schedule));
        let bad = SolveConfig {
            tau_schedule: vec![0.5, 0.9],
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::Schedule));
        let bad = SolveConfig {
            damping: 0.1,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::DampingFloor(0.125)));
    }

    #[test]
    fn coarse_cap_converges_and_is_audited() {
        let p = disk_problem(0.4);
        let g = Grid::build(&p.domain, 1.0 / 16.0).unwrap();
        let out = solve_dirichlet(&p, &g, &SolveConfig::default());
        assert_eq!(out.report.verdict, Verdict::Converged, "{:?}", out.report.message);
        assert!(out.report.audits_pass());
        let centre = g.interior.iter().position(|&k| g.position(k).norm() < 1e-12).unwrap();
        let exact = 5.25f64.sqrt() - 2.5;
        assert!((out.field.values[g.interior[centre]] - exact).abs() < 2e-2);
        let iters: Vec<usize> = out.report.iterations.iter().map(|r| r.iteration).collect();
        assert!(iters.windows(2).all(|w| w[1] == w[0] + 1));
    }
}

//! The command implementations behind the binary: each returns its exit
//! code and writes its artifacts; nothing here calls `process::exit`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::boundary_data::BoundaryData;
use crate::config::ConfigError;
use crate::estimates::{
    self, adversarial_boundary_data, check_boundary_barriers, height_barrier, nonexistence_bound, nonexistence_witness,
    step_barrier_checks, witness_sample, EstimateAudit, NonexistenceParams, StepChecks, WitnessSample, WitnessVerdict,
};
use crate::geometry::{check_gradient_condition, check_serrin, GradientConditionAudit, Point, PrescribedCurvature, SerrinAudit};
use crate::grid::Grid;
use crate::output;
use crate::reference::{self, ErrorNorms, SelfTest};
use crate::scenario::{AuditName, DataSpec, Scenario};
use crate::solver::{solve_dirichlet, Problem, SolveReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_AUDIT: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub grid_h: Option<f64>,
    pub quiet: bool,
}

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Io(PathBuf, io::Error),
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "config error: {e}"),
            HarnessError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Io(..) => 1,
        }
    }
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load(path: &Path) -> Result<(String, Scenario), HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(path.to_path_buf(), e))?;
    let s = Scenario::parse(&text)?;
    Ok((text, s))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub h: f64,
    pub solve: SolveReport,
    pub reference_error: Option<ErrorNorms>,
    /// Audits computed after the solve (barrier sign checks).
    pub extra_audits: Vec<EstimateAudit>,
    pub witness_sample: Option<WitnessSample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonexistenceSection {
    pub params: Option<NonexistenceParams>,
    pub not_applicable: Option<String>,
    pub step_checks: Option<StepChecks>,
    /// Bump radius actually used, as ln a.
    pub ln_radius: f64,
    pub y0: Point,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub config_hash: String,
    pub scenario: Scenario,
    /// Constant H replacing the scenario's curvature (sweeps).
    pub curvature_override: Option<f64>,
    pub curvature: String,
    pub data: String,
    pub serrin: SerrinAudit,
    pub gradient_condition: GradientConditionAudit,
    pub reference_self_test: Option<SelfTest>,
    pub nonexistence: Option<NonexistenceSection>,
    pub runs: Vec<RunRecord>,
    /// Ratios of consecutive reference errors.
    pub error_ratios: Vec<f64>,
    pub nonexistence_witness: Option<WitnessVerdict>,
    pub failed_audits: Vec<String>,
    pub exit_code: i32,
}

struct Resolved {
    data: BoundaryData,
    nonexistence: Option<NonexistenceSection>,
}

fn resolve_data(s: &Scenario, hc: &PrescribedCurvature) -> Result<Resolved, HarnessError> {
    let data = match &s.data {
        DataSpec::Zero => BoundaryData::Zero,
        DataSpec::Expression { source } => {
            BoundaryData::expression(source).map_err(|e| ConfigError::new(format!("data.expression: {e}")))?
        }
        DataSpec::Scherk => BoundaryData::Scherk,
        DataSpec::Reference => {
            reference::lookup(s.reference.as_deref().unwrap_or_default())
                .expect("validated at parse time")
                .data
        }
        DataSpec::Bump { y0, epsilon, ln_radius } => {
            let bound = nonexistence_bound(&s.domain, hc, s.n, *y0, *epsilon);
            let (params, not_applicable) = match bound {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let ln_a = match (ln_radius, &params) {
                (Some(l), _) => *l,
                (None, Some(p)) => p.ln_a,
                (None, None) => {
                    return Err(ConfigError::new(format!(
                        "data: bump without radius needs the certified radius, but the construction is not applicable: {}",
                        not_applicable.unwrap_or_default()
                    ))
                    .into())
                }
            };
            let step_checks = params.as_ref().map(|p| step_barrier_checks(p, &s.domain, hc, 0.5 * p.r2));
            let data = adversarial_boundary_data(&s.domain, *y0, ln_a, *epsilon);
            let BoundaryData::Bump { center, .. } = data else { unreachable!() };
            return Ok(Resolved {
                data,
                nonexistence: Some(NonexistenceSection {
                    params,
                    not_applicable,
                    step_checks,
                    ln_radius: ln_a,
                    y0: center,
                    epsilon: *epsilon,
                }),
            });
        }
    };
    Ok(Resolved {
        data,
        nonexistence: None,
    })
}

fn sign_audit(name: &str, extreme: f64, pass: bool, hypotheses: bool, note: Option<String>) -> EstimateAudit {
    let mut a = EstimateAudit::new(name, 0.0, extreme, 0.0);
    a.pass = pass;
    a.hypotheses_hold = hypotheses;
    a.note = note;
    a
}

/// Solves the scenario on every spacing and evaluates the requested audits.
/// No files are written.
pub fn execute(s: &Scenario, config_text: &str, curvature_override: Option<f64>) -> Result<(RunReport, Vec<crate::field::ScalarField>), HarnessError> {
    let hc = s.prescribed(curvature_override);
    let resolved = resolve_data(s, &hc)?;
    let refsol = s.reference.as_deref().and_then(reference::lookup);
    let serrin = check_serrin(&s.domain, &hc, s.n);
    let gradient_condition = check_gradient_condition(&s.domain, &hc, s.n);
    let problem = Problem {
        domain: s.domain.clone(),
        curvature: hc.clone(),
        data: resolved.data.clone(),
        n: s.n,
    };
    let reference_self_test = refsol.as_ref().and_then(|r| r.self_test(1.0 / 16.0).ok());

    let mut runs = Vec::new();
    let mut fields = Vec::new();
    for &h in &s.spacings {
        let grid = Grid::build(&s.domain, h).map_err(|e| ConfigError::new(format!("grid.h = {h}: {e}")))?;
        let out = solve_dirichlet(&problem, &grid, &s.solver);
        let mut extra = Vec::new();
        if out.report.converged() {
            let serrin_ok = serrin.satisfied;
            if s.audits.contains(&AuditName::HeightBarrier) {
                let b = height_barrier(&s.domain, &grid, &hc, s.n, out.field.boundary_sup());
                extra.push(sign_audit(
                    "height_barrier",
                    b.sign.extreme,
                    b.sign.pass,
                    serrin_ok && gradient_condition.satisfied,
                    None,
                ));
            }
            if s.audits.contains(&AuditName::BoundaryBarriers) {
                match estimates::boundary_gradient_package(&s.domain, &hc, s.n, &resolved.data, out.field.sup_norm()) {
                    Ok(p) => match check_boundary_barriers(&p, &s.domain, &grid, &hc, s.n, &resolved.data, Some(&out.field), 8) {
                        Ok(c) => {
                            let worst = c.plus.extreme.max(-c.minus.extreme);
                            let note = c.sandwich.map(|w| {
                                format!("sandwich over {} nodes: below {:.3e}, above {:.3e}", w.nodes, w.below, w.above)
                            });
                            extra.push(sign_audit("boundary_barriers", worst, c.pass(), true, note));
                        }
                        Err(e) => extra.push(sign_audit("boundary_barriers", f64::NAN, false, false, Some(e.to_string()))),
                    },
                    Err(e) => extra.push(sign_audit("boundary_barriers", f64::NAN, false, false, Some(e.to_string()))),
                }
            }
        }
        let reference_error = refsol.as_ref().filter(|_| out.report.converged()).map(|r| r.error(&out.field));
        let witness = resolved
            .nonexistence
            .as_ref()
            .map(|n| witness_sample(&out, n.y0, n.ln_radius));
        runs.push(RunRecord {
            h,
            solve: out.report,
            reference_error,
            extra_audits: extra,
            witness_sample: witness,
        });
        fields.push(out.field);
    }

    let error_ratios = runs
        .windows(2)
        .filter_map(|w| match (w[0].reference_error, w[1].reference_error) {
            (Some(a), Some(b)) if b.sup > 0.0 => Some(a.sup / b.sup),
            _ => None,
        })
        .collect();

    let nonexistence_witness = match &resolved.nonexistence {
        Some(n) if runs.len() >= 2 => {
            let samples: Vec<WitnessSample> = runs.iter().filter_map(|r| r.witness_sample.clone()).collect();
            nonexistence_witness(&samples, n.epsilon, 1e-3).ok()
        }
        _ => None,
    };

    let mut failed_audits = Vec::new();
    for r in &runs {
        let requested = r
            .solve
            .audits
            .iter()
            .filter(|a| s.audits.iter().any(|n| n.as_str() == a.name))
            .chain(&r.extra_audits);
        for a in requested {
            if !a.acceptable() {
                failed_audits.push(format!("{} (h = {})", a.name, r.h));
            }
        }
    }
    if s.audits.contains(&AuditName::Nonexistence) {
        if let Some(c) = resolved.nonexistence.as_ref().and_then(|n| n.step_checks.as_ref()) {
            if !c.pass() {
                failed_audits.push("nonexistence barrier signs".into());
            }
        }
    }
    let all_converged = runs.iter().all(|r| r.solve.converged());
    let witnessed = nonexistence_witness.as_ref().is_some_and(|w| w.witness);
    let exit_code = run_exit_code(all_converged, failed_audits.len(), witnessed);

    Ok((
        RunReport {
            schema: 1,
            config_hash: config_hash(config_text),
            scenario: s.clone(),
            curvature_override,
            curvature: hc.describe(),
            data: resolved.data.describe(),
            serrin,
            gradient_condition,
            reference_self_test,
            nonexistence: resolved.nonexistence,
            runs,
            error_ratios,
            nonexistence_witness,
            failed_audits,
            exit_code,
        },
        fields,
    ))
}

/// Solver failure outranks audit failure; a non-existence witness counts
/// as an audit outcome.
pub fn run_exit_code(all_converged: bool, failed_audits: usize, witnessed: bool) -> i32 {
    if !all_converged {
        EXIT_SOLVER
    } else if failed_audits > 0 || witnessed {
        EXIT_AUDIT
    } else {
        EXIT_OK
    }
}

fn write(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| HarnessError::Io(path.to_path_buf(), e))
}

/// report.json, traces.csv, fields.csv (finest grid) and heatmap.svg.
pub fn write_artifacts(dir: &Path, report: &RunReport, fields: &[crate::field::ScalarField]) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io(dir.to_path_buf(), e))?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write(&dir.join("report.json"), &(json + "\n"))?;
    let traces: Vec<(f64, &[_])> = report.runs.iter().map(|r| (r.h, r.solve.iterations.as_slice())).collect();
    write(&dir.join("traces.csv"), &output::traces_csv(&traces))?;
    if let Some(u) = fields.last() {
        let refsol = report.scenario.reference.as_deref().and_then(reference::lookup);
        let exact = refsol.as_ref().map(|r| r.u);
        let f = exact.map(|f| move |p: Point| f(p));
        write(
            &dir.join("fields.csv"),
            &output::fields_csv(u, f.as_ref().map(|f| f as &dyn Fn(Point) -> f64)),
        )?;
        let title = format!("{}: u, h = {}", report.scenario.name, u.grid.h);
        write(&dir.join("heatmap.svg"), &output::heatmap_svg(u, &title))?;
    }
    Ok(())
}

fn summary(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} ({}; H: {}; data: {})", report.scenario.name, report.scenario.domain_description, report.curvature, report.data);
    let _ = writeln!(
        s,
        "serrin: {} (margin {:.6e})",
        if report.serrin.satisfied { "satisfied" } else { "violated" },
        report.serrin.margin
    );
    for r in &report.runs {
        let last = r.solve.last();
        let _ = write!(
            s,
            "h = {:<10} {:<18} iterations {:>4}  sup|u| {:.6e}  residual {:.3e}",
            r.h,
            r.solve.verdict.label(),
            r.solve.iterations.len(),
            last.map_or(f64::NAN, |l| l.sup_u),
            last.map_or(f64::NAN, |l| l.residual),
        );
        if let Some(e) = r.reference_error {
            let _ = write!(s, "  error {:.3e}", e.sup);
        }
        s.push('\n');
        for a in r.solve.audits.iter().chain(&r.extra_audits) {
            let _ = writeln!(
                s,
                "    {:<18} {:<5} measured {:.6e}  bound {:.6e}{}",
                a.name,
                match (a.hypotheses_hold, a.pass) {
                    (false, _) => "n/a",
                    (true, true) => "pass",
                    (true, false) => "FAIL",
                },
                a.measured,
                a.bound,
                if a.hypotheses_hold { String::new() } else { format!("  ({})", a.note.as_deref().unwrap_or("hypotheses not met")) }
            );
        }
    }
    if !report.error_ratios.is_empty() {
        let _ = writeln!(s, "error ratios: {:?}", report.error_ratios);
    }
    if let Some(n) = &report.nonexistence {
        match &n.params {
            Some(p) => {
                let _ = writeln!(s, "nonexistence: nu = {:.6e}, ln a = {:.6}, psi(a) + sqrt(2a/nu) = {:.6e} < eps = {}", p.nu, p.ln_a, p.certified, p.eps);
                for w in &p.warnings {
                    let _ = writeln!(s, "    warning: {w}");
                }
            }
            None => {
                let _ = writeln!(s, "nonexistence: {}", n.not_applicable.as_deref().unwrap_or("-"));
            }
        }
    }
    if let Some(w) = &report.nonexistence_witness {
        let _ = writeln!(
            s,
            "witness: {} (gradient ratio {:?}, excess {:?})",
            w.label(),
            w.gradient_ratio,
            w.excess
        );
        for n in &w.notes {
            let _ = writeln!(s, "    note: {n}");
        }
    }
    let _ = writeln!(s, "exit {}", report.exit_code);
    s
}

/// The `run` command.
pub fn run(config: &Path, opts: &RunOptions) -> Result<i32, HarnessError> {
    let (text, mut s) = load(config)?;
    if let Some(h) = opts.grid_h {
        if !(h > 0.0 && h.is_finite()) {
            return Err(ConfigError::new(format!("--grid-h must be positive, got {h}")).into());
        }
        s.spacings = vec![h];
    }
    let dir = opts.out.clone().unwrap_or_else(|| s.out_dir.clone());
    let (report, fields) = execute(&s, &text, None)?;
    write_artifacts(&dir, &report, &fields)?;
    if !opts.quiet {
        print!("{}", summary(&report));
    }
    Ok(report.exit_code)
}

/// The `sweep` command: H values from `[sweep] curvature`, or the grid
/// spacings alone. Each H gets its own subdirectory; a combined
/// sweep.csv and a ratio table are written to the output directory.
pub fn sweep(config: &Path, opts: &RunOptions) -> Result<i32, HarnessError> {
    let (text, s) = load(config)?;
    let values: Vec<Option<f64>> = match &s.sweep_curvature {
        Some(v) => v.iter().map(|&x| Some(x)).collect(),
        None if s.spacings.len() >= 2 => vec![None],
        None => return Err(ConfigError::new("sweep: nothing to sweep; give [sweep] curvature or several grid.h").into()),
    };
    let dir = opts.out.clone().unwrap_or_else(|| s.out_dir.clone());
    let mut csv = String::from("curvature,h,verdict,iterations,sup_u,reference_error,error_ratio,witness,exit_code\n");
    let mut table = String::new();
    for v in values {
        let (report, fields) = execute(&s, &text, v)?;
        let sub = match v {
            Some(x) => dir.join(format!("H_{x}")),
            None => dir.clone(),
        };
        write_artifacts(&sub, &report, &fields)?;
        let witness = report.nonexistence_witness.as_ref().map_or("-", |w| w.label());
        for (i, r) in report.runs.iter().enumerate() {
            let ratio = if i == 0 { None } else { report.error_ratios.get(i - 1).copied() };
            let _ = writeln!(
                csv,
                "{},{},{},{},{:e},{},{},{},{}",
                v.map_or(report.curvature.clone(), |x| x.to_string()),
                r.h,
                r.solve.verdict.label(),
                r.solve.iterations.len(),
                r.solve.last().map_or(f64::NAN, |l| l.sup_u),
                r.reference_error.map_or(String::new(), |e| format!("{:e}", e.sup)),
                ratio.map_or(String::new(), |x| format!("{x:.4}")),
                witness,
                report.exit_code
            );
        }
        let _ = writeln!(
            table,
            "H = {:<8} exit {}  witness {:<10}  error ratios {:?}",
            v.map_or(report.curvature.clone(), |x| x.to_string()),
            report.exit_code,
            witness,
            report.error_ratios.iter().map(|r| (r * 1e4).round() / 1e4).collect::<Vec<_>>()
        );
    }
    fs::create_dir_all(&dir).map_err(|e| HarnessError::Io(dir.clone(), e))?;
    write(&dir.join("sweep.csv"), &csv)?;
    if !opts.quiet {
        print!("{table}");
    }
    Ok(EXIT_OK)
}

/// The `estimates` command: the full constant ledger without solving.
pub fn estimates_ledger(s: &Scenario) -> Result<String, HarnessError> {
    let hc = s.prescribed(None);
    let resolved = resolve_data(s, &hc);
    let mut o = String::new();
    let _ = writeln!(o, "domain: {}", s.domain_description);
    let _ = writeln!(o, "  diameter delta = {:.9}, smoothness radius tau = {:.9}", s.domain.diameter, s.domain.tau);
    let _ = writeln!(o, "H: {}, n = {}", hc.describe(), s.n);
    let serrin = check_serrin(&s.domain, &hc, s.n);
    let _ = writeln!(
        o,
        "serrin condition (n-1)H_boundary >= n|H|: {} (margin {:.9e} at {})",
        if serrin.satisfied { "satisfied" } else { "violated" },
        serrin.margin,
        serrin.worst_point
    );
    let grad = check_gradient_condition(&s.domain, &hc, s.n);
    let _ = writeln!(
        o,
        "|grad H| <= n/(n-1) H^2: {} (margin {:.9e})",
        if grad.satisfied { "satisfied" } else { "violated" },
        grad.margin
    );
    let data = match &resolved {
        Ok(r) => r.data.clone(),
        Err(e) => {
            let _ = writeln!(o, "data: {e}");
            BoundaryData::Zero
        }
    };
    let phi_sup = data.c2_norms(&s.domain).map(|n| n[0]);
    let boundary_sup = phi_sup.unwrap_or_else(|| s.domain.boundary_samples.iter().map(|b| data.value(b.point).abs()).fold(0.0, f64::max));
    let (hb, hp) = estimates::height_bound(&s.domain, &hc, s.n, boundary_sup);
    let _ = writeln!(o, "height estimate:");
    let _ = writeln!(o, "  mu = {:.9e}, delta = {:.9}, h0 = {}", hp.mu, hp.delta, hp.h0);
    let _ = writeln!(o, "  sup|u| <= sup|phi| + increment = {boundary_sup:.9e} + {:.9e} = {hb:.9e}", hp.increment);
    let _ = writeln!(o, "global gradient estimate:");
    let _ = writeln!(o, "  A = 1 + 8n|H|_1 = {:.9e}", 1.0 + 8.0 * s.n as f64 * hc.c1_norm());
    let _ = writeln!(o, "  sup|grad u| <= (sqrt 3 + sup_boundary|grad u|) exp(2 A sup|u|)");
    let m = s.assumed_sup.unwrap_or(hb);
    let _ = writeln!(o, "boundary gradient estimate (sup|u| = {m:.9e}{}):", if s.assumed_sup.is_some() { ", assumed" } else { ", height bound" });
    match estimates::boundary_gradient_package(&s.domain, &hc, s.n, &data, m) {
        Ok(p) => {
            let _ = writeln!(o, "  |d|_2 = {:.9}, C = {:.9e}", p.d_norm2, p.c);
            let _ = writeln!(o, "  phi norms = {:?}, |H|_1 = {:.9e}", p.phi_norms, p.h_c1);
            let _ = writeln!(o, "  nu = {:.9e}, M = {:.9e}, k = {:.9e}, a = {:.9e}", p.nu, p.m, p.k, p.a);
            let _ = writeln!(o, "  psi'(0) = {:.9e}, sup_boundary|grad u| <= {:.9e}", p.psi_prime0, p.gradient_bound);
            let _ = writeln!(o, "  a < 1/nu < tau: {}", p.ordering_ok);
        }
        Err(e) => {
            let _ = writeln!(o, "  refused: {e}");
        }
    }
    if let Ok(Resolved {
        nonexistence: Some(n), ..
    }) = &resolved
    {
        let _ = writeln!(o, "nonexistence construction at {} with epsilon = {}:", n.y0, n.epsilon);
        match &n.params {
            Some(p) => {
                let _ = writeln!(o, "  nu = {:.9e}, R1 = {:.6e}, kappa_S = {:.9}, R2 = {:.6e}", p.nu, p.r1, p.kappa_s, p.r2);
                let _ = writeln!(o, "  log(delta/a) = {:.9}, ln a = {:.9}", p.log_ratio, p.ln_a);
                let _ = writeln!(o, "  psi(a) + sqrt(2a/nu) = {:.12e}", p.certified);
                for w in &p.warnings {
                    let _ = writeln!(o, "  warning: {w}");
                }
            }
            None => {
                let _ = writeln!(o, "  not applicable: {}", n.not_applicable.as_deref().unwrap_or("-"));
            }
        }
    }
    Ok(o)
}

pub fn estimates(config: &Path) -> Result<i32, HarnessError> {
    let (_, s) = load(config)?;
    print!("{}", estimates_ledger(&s)?);
    Ok(EXIT_OK)
}

/// The `check-serrin` command; 0 when satisfied, 1 when violated.
pub fn check_serrin_report(s: &Scenario, curvature: Option<f64>) -> (i32, String) {
    let hc = s.prescribed(curvature);
    let a = check_serrin(&s.domain, &hc, s.n);
    let text = format!(
        "domain: {}\nH: {}, n = {}\nserrin condition (n-1)H_boundary >= n|H|: {}\nmargin: {:.12e}\nworst boundary point: {} (arclength {:.9})\n",
        s.domain_description,
        hc.describe(),
        s.n,
        if a.satisfied { "satisfied" } else { "violated" },
        a.margin,
        a.worst_point,
        a.worst_s
    );
    (if a.satisfied { 0 } else { 1 }, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_precedence() {
        assert_eq!(run_exit_code(true, 0, false), EXIT_OK);
        assert_eq!(run_exit_code(true, 1, false), EXIT_AUDIT);
        assert_eq!(run_exit_code(true, 0, true), EXIT_AUDIT);
        assert_eq!(run_exit_code(false, 3, true), EXIT_SOLVER);
    }

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(
            config_hash(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mcgraph::harness::{self, HarnessError, RunOptions};
use mcgraph::scenario::Scenario;

#[derive(Parser)]
#[command(name = "mcgraph", version, about = "Prescribed mean curvature graphs over planar domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress the printed summary.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding [output] dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve on this single spacing instead of [grid] h.
    #[arg(long)]
    grid_h: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write report.json, traces.csv, fields.csv, heatmap.svg.
    Run(Common),
    /// Solve for every H in [sweep] curvature (or every spacing) and tabulate.
    Sweep(Common),
    /// Print the constants of every estimate without solving.
    Estimates {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check (n-1) H_boundary >= n |H| along the boundary. Exit 0 if it holds, 1 if not.
    CheckSerrin(Box<SerrinArgs>),
}

#[derive(Args)]
struct SerrinArgs {
    /// Scenario file supplying the domain and H; the flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// disk, ellipse, rect, rounded_rect, dumbbell or level_set.
    #[arg(long, default_value = "disk")]
    shape: String,
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    center: String,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    half_height: Option<f64>,
    #[arg(long)]
    corner_radius: Option<f64>,
    /// Level-set expression, negative inside.
    #[arg(long)]
    expression: Option<String>,
    #[arg(long)]
    extent: Option<f64>,
    /// Constant H.
    #[arg(long = "curvature", allow_hyphen_values = true)]
    curvature: Option<f64>,
    /// H as an expression in x and y.
    #[arg(long)]
    curvature_expr: Option<String>,
    #[arg(long, default_value_t = 2)]
    n: usize,
}

impl SerrinArgs {
    /// The flags as a scenario file, so both paths share one parser.
    fn scenario_text(&self) -> String {
        let mut s = format!("[domain]\nshape = \"{}\"\n", self.shape);
        if self.shape != "dumbbell" {
            let key = if self.shape == "level_set" { "seed" } else { "center" };
            s += &format!("{key} = {}\n", self.center);
        }
        let nums = [
            ("radius", self.radius),
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("half_width", self.half_width),
            ("half_height", self.half_height),
            ("corner_radius", self.corner_radius),
            ("extent", self.extent),
        ];
        for (k, v) in nums {
            if let Some(v) = v {
                s += &format!("{k} = {v}\n");
            }
        }
        if let Some(e) = &self.expression {
            s += &format!("expression = \"{e}\"\n");
        }
        s += &format!("[curvature]\nn = {}\n", self.n);
        match (&self.curvature_expr, self.curvature) {
            (Some(e), _) => s += &format!("expression = \"{e}\"\n"),
            (None, v) => s += &format!("value = {}\n", v.unwrap_or(0.0)),
        }
        s + "[data]\nkind = \"zero\"\n[grid]\nh = 0.1\n"
    }
}

fn check_serrin(args: &SerrinArgs) -> Result<i32, HarnessError> {
    let scenario = match &args.config {
        Some(p) => harness::load(p)?.1,
        None => Scenario::parse(&args.scenario_text())?,
    };
    let (code, text) = harness::check_serrin_report(&scenario, None);
    print!("{text}");
    Ok(code)
}

fn configure_threads() {
    if let Some(n) = std::env::var("MCGRAPH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let opts = |c: &Common| RunOptions {
        out: c.out.clone(),
        grid_h: c.grid_h,
        quiet: cli.quiet,
    };
    let result = match &cli.command {
        Command::Run(c) => harness::run(&c.config, &opts(c)),
        Command::Sweep(c) => harness::sweep(&c.config, &opts(c)),
        Command::Estimates { config } => harness::estimates(config),
        Command::CheckSerrin(a) => check_serrin(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("mcgraph: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

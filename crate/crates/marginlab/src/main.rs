use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use marginlab::run::{run, Command, Overrides, RunError};
use marginlab::spec::{parse_grid, parse_spec};

#[derive(Parser)]
#[command(name = "marginlab", version, about = "Gridded marginal functions, conjugates and duality checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Marginal function and its structural checks.
    Marginal(Opts),
    /// Conjugate, biconjugate and the conjugate representation.
    Conjugate(Opts),
    /// ε-subdifferential and coderivative inclusions.
    Subdiff(Opts),
    /// Primal and dual values and the duality gap.
    Duality(Opts),
    /// Lagrangian dual function against the marginal conjugate.
    Lagrangian(Opts),
    /// Near-convexity checks on raster sets.
    Nearconvex(Opts),
    /// Every layer in order.
    VerifyAll(Opts),
}

#[derive(Args)]
struct Opts {
    /// Problem spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for report.json and report.csv.
    #[arg(long)]
    out: PathBuf,
    /// Refine every grid and raster by this factor.
    #[arg(long)]
    refine: Option<usize>,
    /// Single ε for subdifferential tasks.
    #[arg(long)]
    eps: Option<f64>,
    /// Base point for subdifferential tasks, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Dual grid for x, as lo:hi:count per axis.
    #[arg(long, allow_hyphen_values = true)]
    dual_range: Option<String>,
}

fn overrides(o: &Opts) -> Result<Overrides, RunError> {
    let x0 = match &o.x0 {
        Some(s) => Some(
            s.split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| RunError::Usage(format!("--x0: bad number `{p}`"))))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let dual_range = o.dual_range.as_deref().map(parse_grid).transpose()?;
    if o.refine == Some(0) {
        return Err(RunError::Usage("--refine must be at least 1".into()));
    }
    Ok(Overrides { refine: o.refine, eps: o.eps, x0, dual_range })
}

fn execute(command: Command, o: &Opts) -> Result<bool, RunError> {
    let text = std::fs::read_to_string(&o.spec).map_err(|source| RunError::Io { path: o.spec.clone(), source })?;
    let base = o.spec.parent().unwrap_or(Path::new("."));
    let spec = parse_spec(&text, base)?;
    let report = run(command, &spec, &overrides(o)?)?;
    report.write(&o.out).map_err(|source| RunError::Io { path: o.out.clone(), source })?;
    print!("{}", report.summary());
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = std::env::var("MARGINLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (command, opts) = match &cli.command {
        Cmd::Marginal(o) => (Command::Marginal, o),
        Cmd::Conjugate(o) => (Command::Conjugate, o),
        Cmd::Subdiff(o) => (Command::Subdiff, o),
        Cmd::Duality(o) => (Command::Duality, o),
        Cmd::Lagrangian(o) => (Command::Lagrangian, o),
        Cmd::Nearconvex(o) => (Command::Nearconvex, o),
        Cmd::VerifyAll(o) => (Command::VerifyAll, o),
    };
    match execute(command, opts) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("marginlab: {e}");
            ExitCode::from(1)
        }
    }
}

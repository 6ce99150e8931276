use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ipdhg::validation::{Suite, SuiteParams};
use ipdhg_cli::commands::{EXIT_IO, EXIT_VALIDATION};
use ipdhg_cli::{cmd_compare, cmd_oracle, cmd_solve, cmd_validate, cmd_validate_pair, CliError, RawConfig};

#[derive(Parser)]
#[command(name = "ipdhg", version, about = "Preconditioned PDHG with fixed inner iterations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write trace, solution and summary.
    Solve(RunArgs),
    /// Run a sweep of solver settings on one problem.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run the theory-check suites.
    Validate {
        /// Suites to run (comma separated); all by default.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<Suite>,
        /// Seeds: a list `1,2,3` or a range `1..5`.
        #[arg(long, default_value = "1")]
        seeds: String,
        /// Coordinate-format matrix for a custom Schur check of `(m1 I, m2 I)`.
        #[arg(long, requires_all = ["m1", "m2"])]
        matrix: Option<PathBuf>,
        #[arg(long)]
        m1: Option<f64>,
        #[arg(long)]
        m2: Option<f64>,
    },
    /// Compute a high-accuracy reference solution.
    Oracle {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1e-10)]
        oracle_tol: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key=value config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override any config key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    inner: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_outer: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory; overrides the environment and the file.
    #[arg(long)]
    out: Option<String>,
}

impl RunArgs {
    fn raw(&self) -> Result<RawConfig, CliError> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                    path: path.clone(),
                    msg: e.to_string(),
                })?;
                let mut raw = RawConfig::parse(&text)?;
                raw.resolve_paths(path.parent().unwrap_or(Path::new(".")));
                raw
            }
            None => RawConfig::default(),
        };
        let mut pairs: Vec<(&str, &str)> = Vec::new();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("--set expects KEY=VALUE, got `{s}`")))?;
            pairs.push((k.trim(), v));
        }
        let typed = [
            ("problem", &self.problem),
            ("input", &self.input),
            ("synthetic", &self.synthetic),
            ("algorithm", &self.algorithm),
            ("inner", &self.inner),
            ("tau", &self.tau),
            ("p", &self.p),
            ("tol", &self.tol),
            ("max_outer", &self.max_outer),
            ("seed", &self.seed),
            ("out", &self.out),
        ];
        pairs.extend(typed.iter().filter_map(|(k, v)| v.as_deref().map(|v| (*k, v))));
        raw.apply_flags(pairs)?;
        Ok(raw)
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Invalid(format!("bad seed list `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve(run) => cmd_solve(&run.raw()?),
        Command::Compare { run, jobs } => cmd_compare(&run.raw()?, jobs),
        Command::Oracle { run, oracle_tol } => cmd_oracle(&run.raw()?, oracle_tol),
        Command::Validate {
            suite,
            seeds,
            matrix,
            m1,
            m2,
        } => {
            if let Some(path) = matrix {
                return cmd_validate_pair(&path, m1.expect("required"), m2.expect("required"));
            }
            let suites = if suite.is_empty() { Suite::ALL.to_vec() } else { suite };
            cmd_validate(&suites, &parse_seeds(&seeds)?, &SuiteParams::default())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            debug_assert!(code == EXIT_IO || code == EXIT_VALIDATION);
            ExitCode::from(code as u8)
        }
    }
}

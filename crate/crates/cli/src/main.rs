//! `moreau`: conjugacies, pre-image coverings, rate identification and the
//! Merton tail-rate experiment from JSON scenarios.
//!
//! Exit status: 0 complete or PASS, 2 FAIL verdict, 3 invalid input, 1 I/O.

mod run;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moreau::merton::{MertonParams, TailRateConfig, XiGrid};

use crate::scenario::Kind;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Io(String),
}

#[derive(Parser, Debug)]
#[command(name = "moreau", version, about = "Moreau conjugacies, coverings and large-deviation rates on grids")]
struct Cli {
    /// Scenario JSON; its `kind` selects the workflow when no subcommand is given.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print a one-screen digest.
    #[arg(long, global = true)]
    summary: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    Conjugate,
    Covering,
    Ldp,
    Merton(Box<MertonArgs>),
}

impl Command {
    fn kind(&self) -> Kind {
        match self {
            Command::Conjugate => Kind::Conjugate,
            Command::Covering => Kind::Covering,
            Command::Ldp => Kind::Ldp,
            Command::Merton(_) => Kind::Merton,
        }
    }
}

/// Flags override the scenario payload; without a scenario the defaults are
/// `r = 0.05, alpha = 0.10, sigma = 0.20, w0 = 1, c = 0.12, T = 25 50 100 200`.
#[derive(Args, Debug, Default)]
struct MertonArgs {
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    w0: Option<f64>,
    /// Growth level of the event `log(W_T)/T >= c`.
    #[arg(long)]
    c: Option<f64>,
    /// Horizon; repeat for several.
    #[arg(long = "T", id = "horizons")]
    horizons: Vec<f64>,
    /// Monte Carlo paths per cell; 0 disables sampling.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    xi_min: Option<f64>,
    #[arg(long)]
    xi_max: Option<f64>,
    #[arg(long)]
    xi_step: Option<f64>,
    /// Also sample every n-th xi node.
    #[arg(long)]
    mc_stride: Option<usize>,
    /// Truncation level `a`.
    #[arg(long)]
    a: Option<f64>,
    /// Single output file; `.csv` writes the table, anything else the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_tail() -> TailRateConfig {
    TailRateConfig {
        params: MertonParams { r: 0.05, alpha: 0.10, sigma: 0.20, w0: 1.0 },
        c: 0.12,
        t_list: vec![25.0, 50.0, 100.0, 200.0],
        n_paths: 100_000,
        seed: 0,
        xi: XiGrid { min: 0.0, max: 10.0, step: 1e-3 },
        mc_stride: 0,
        truncation: None,
    }
}

impl MertonArgs {
    fn apply(&self, cfg: &mut TailRateConfig) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut cfg.params.r, self.r);
        set(&mut cfg.params.alpha, self.alpha);
        set(&mut cfg.params.sigma, self.sigma);
        set(&mut cfg.params.w0, self.w0);
        set(&mut cfg.c, self.c);
        set(&mut cfg.xi.min, self.xi_min);
        set(&mut cfg.xi.max, self.xi_max);
        set(&mut cfg.xi.step, self.xi_step);
        if !self.horizons.is_empty() {
            cfg.t_list = self.horizons.clone();
        }
        if let Some(n) = self.paths {
            cfg.n_paths = n;
        }
        if let Some(s) = self.mc_stride {
            cfg.mc_stride = s;
        }
        if self.a.is_some() {
            cfg.truncation = self.a;
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Validation(format!("--threads: {e}")))?;
    }
    let scenario = cli.config.as_deref().map(scenario::load).transpose()?;
    let kind = match (&cli.command, &scenario) {
        (Some(c), Some(s)) if c.kind() != s.kind => {
            return Err(Failure::Validation(format!(
                "subcommand `{}` does not match scenario kind `{}`",
                c.kind().name(),
                s.kind.name()
            )))
        }
        (Some(c), _) => c.kind(),
        (None, Some(s)) => s.kind,
        (None, None) => return Err(Failure::Validation("give a subcommand or --config".into())),
    };

    let (outcome, single_out) = match (kind, &cli.command, scenario) {
        (Kind::Merton, cmd, s) => {
            let mut cfg = match &s {
                Some(s) => scenario::payload::<TailRateConfig>(s)?,
                None => default_tail(),
            };
            if let Some(seed) = cli.seed.or(s.as_ref().and_then(|s| s.seed)) {
                cfg.seed = seed;
            }
            let mut out = None;
            if let Some(Command::Merton(args)) = cmd {
                args.apply(&mut cfg);
                out = args.out.clone();
            }
            let (j, c) = s.map(|s| (s.outputs.json, s.outputs.csv)).unwrap_or_default();
            (run::merton_outcome(&cfg, &j, &c)?, out)
        }
        (_, _, Some(s)) => (run::run(&s, cli.seed)?, None),
        (k, _, None) => return Err(Failure::Validation(format!("`{}` needs --config", k.name()))),
    };

    match single_out {
        Some(path) => {
            let csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            let art = &outcome.artifacts[if csv { 1 } else { 0 }];
            write_file(&path, &art.bytes)?;
        }
        None => {
            for a in &outcome.artifacts {
                write_file(&cli.out_dir.join(&a.name), &a.bytes)?;
            }
        }
    }
    println!("{}: {}", kind.name(), outcome.status);
    if cli.summary {
        println!("{}", outcome.digest);
    }
    Ok(!outcome.failed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

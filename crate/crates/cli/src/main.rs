//! `wedgeforge`: runs verification campaigns and writes their reports.
//!
//! Exit status: 0 all checks pass, 1 some check fails, 2 configuration
//! error, 3 internal error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use wedgeforge::campaign::{Campaign, Report};
use wedgeforge::config::{Config, WedgeSpec};
use wedgeforge::exec::{init_threads, Mode};
use wedgeforge::fock::GridSpec;
use wedgeforge::funcs::{Family, FunctionSpec};
use wedgeforge::geom3d::{k_factor, winding_number};
use wedgeforge::quad::Rule;
use wedgeforge::Error;

#[derive(Parser, Debug)]
#[command(name = "wedgeforge", version, about = "Numerical checks for charged wedge-local deformations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each overrides the matching config key.
#[derive(Args, Debug, Default)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of the randomized trials.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report.jsonl, summary.txt and CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fock-space truncation (particles plus antiparticles).
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Node count of the 2D rapidity grid.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Randomized samples of the covering-group, winding and intertwiner suites.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Randomized deformation pairs in the exchange suites.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Run without the thread pool.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Canonical commutation relations and adjointness.
    VerifyCcr,
    /// Real-line, boundary and crossing conditions of a deformation function.
    CheckFunction(FunctionArgs),
    /// 2D ladder and field exchange relations, controls and the charge twist.
    #[command(name = "verify-exchange-2d")]
    VerifyExchange2d(Exchange2dArgs),
    /// 3D exchange relations, phase collapse and statistics limits.
    #[command(name = "verify-exchange-3d")]
    VerifyExchange3d(Deform3dArgs),
    /// Covering-group law, Lorentz action and Wigner cocycle.
    Cocycle,
    /// Winding numbers and the relation -k = 2N + 1.
    Winding(WindingArgs),
    /// Intertwiner conditions and the constant ratio of u between complements.
    URatio(Deform3dArgs),
    /// Contour-shift checks for separated packets in 2D and 3D.
    CrossingShift(Deform3dArgs),
    /// Scattering states, S-matrix elements and narrow-packet phases.
    Smatrix(Deform3dArgs),
    /// Functional operators against their dense occupation-basis matrices.
    OracleDiff,
    /// Every suite.
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Standard,
    #[value(alias = "cross-breaker")]
    Crossbreaker,
    Charged,
}

#[derive(Args, Debug)]
struct FunctionArgs {
    /// Replaces the configured function blocks with a single one.
    #[arg(long)]
    family: Option<FamilyArg>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    sign: i8,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    /// Zero `b + i c` of the standard factor, as `b,c`; repeatable.
    #[arg(long, value_parser = parse_root)]
    root: Vec<[f64; 2]>,
}

#[derive(Args, Debug)]
struct Exchange2dArgs {
    /// Statistics parameter of the charge-twist check.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Phase of the configured deformation pair.
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
}

#[derive(Args, Debug)]
struct Deform3dArgs {
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args, Debug)]
struct WindingArgs {
    #[arg(long, requires = "wedge2")]
    wedge1: Option<String>,
    #[arg(long, requires = "wedge1")]
    wedge2: Option<String>,
}

fn parse_root(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `re,im`, got `{s}`"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}"));
    Ok([p(a)?, p(b)?])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(report)) => ExitCode::from(if report.ok() { 0 } else { 1 }),
        Ok(Err(e @ Error::Config(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(_) => ExitCode::from(3),
    }
}

fn run(cli: Cli) -> Result<Report, Error> {
    if let Ok(v) = std::env::var("WEDGEFORGE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("WEDGEFORGE_THREADS must be a positive integer, got {v:?}")))?;
        init_threads(n);
    }
    let mut config = match &cli.common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    apply_common(&mut config, &cli.common);
    let check = apply_command(&mut config, &cli.command)?;
    config.campaign.checks = vec![check.to_string()];
    let out = config.campaign.output_dir.clone();
    let mode = if cli.common.sequential { Mode::Sequential } else { Mode::Parallel };
    let campaign = Campaign::new(config)?.with_mode(mode);
    let report = campaign.run()?;
    if let Command::Winding(WindingArgs { wedge1: Some(a), wedge2: Some(b) }) = &cli.command {
        if let Some(r) = report.records.iter().find(|r| r.id == "winding/pair/wedge1,wedge2") {
            println!("{a} -> {b}: N = {}, k = {}", r.params["N"], r.params["k"]);
        }
    }
    match out {
        Some(dir) => {
            print!("{}", report.summary());
            println!("report written to {}", dir.display());
        }
        None => {
            print!("{}", report.jsonl());
            eprint!("{}", report.summary());
        }
    }
    Ok(report)
}

fn apply_common(config: &mut Config, c: &Common) {
    if let Some(s) = c.seed {
        config.campaign.seed = s;
    }
    if let Some(o) = &c.out {
        config.campaign.output_dir = Some(o.clone());
    }
    if let Some(n) = c.nmax {
        config.campaign.nmax = n;
    }
    if let Some(n) = c.samples {
        config.campaign.samples = n;
    }
    if let Some(n) = c.trials {
        config.campaign.trials = n;
    }
    if let Some(n) = c.nodes {
        match config.grid.as_mut().filter(|g| g.dimension == 2) {
            Some(g) => g.theta_count = n,
            None => {
                config.grid = Some(GridSpec {
                    dimension: 2,
                    mass: config.mass2(),
                    theta_range: [-2.5, 2.5],
                    theta_count: n,
                    p2_range: None,
                    p2_count: None,
                    rule: Rule::GaussLegendre,
                })
            }
        }
    }
}

/// Applies subcommand flags and returns the check identifier.
fn apply_command(config: &mut Config, cmd: &Command) -> Result<&'static str, Error> {
    let d3 = |config: &mut Config, a: &Deform3dArgs| {
        if let Some(l) = a.lambda {
            config.deform3d.lambda = l;
        }
        if let Some(k) = a.kappa {
            config.deform3d.kappa = k;
        }
    };
    Ok(match cmd {
        Command::VerifyCcr => "ccr",
        Command::CheckFunction(f) => {
            if let Some(fam) = f.family {
                let (family, name) = match fam {
                    FamilyArg::Standard => (Family::Standard, "standard"),
                    FamilyArg::Crossbreaker => (Family::CrossBreaker, "crossbreaker"),
                    FamilyArg::Charged => (Family::Charged, "charged"),
                };
                let spec = FunctionSpec { family, sign: f.sign, a: f.a, roots: f.root.clone(), w: f.w, mu: f.mu };
                // a crossing breaker alone cannot drive the 2D suites
                if config.deform2d.function.as_ref().is_some_and(|n| config.function.get(n).map(|s| s.family) != Some(family)) {
                    config.deform2d.function = None;
                }
                config.function.clear();
                config.function.insert(name.to_string(), spec);
            }
            "function"
        }
        Command::VerifyExchange2d(a) => {
            if let Some(l) = a.lambda {
                config.deform2d.lambda = l;
            }
            if let Some(m) = a.mu {
                config.deform2d.mu = Some(m);
            }
            "exchange-2d"
        }
        Command::VerifyExchange3d(a) => {
            d3(config, a);
            "exchange-3d"
        }
        Command::Cocycle => "cocycle",
        Command::Winding(w) => {
            if let (Some(a), Some(b)) = (&w.wedge1, &w.wedge2) {
                let (s1, s2) = (WedgeSpec { word: a.clone() }, WedgeSpec { word: b.clone() });
                let bad = |e: Error| Error::Config(e.to_string());
                let (p1, p2) = (s1.build().map_err(bad)?, s2.build().map_err(bad)?);
                winding_number(&p1, &p2).and_then(|_| k_factor(&p1, &p2)).map_err(bad)?;
                config.wedges.clear();
                config.wedges.insert("wedge1".into(), s1);
                config.wedges.insert("wedge2".into(), s2);
            }
            "winding"
        }
        Command::URatio(a) => {
            d3(config, a);
            "u-ratio"
        }
        Command::CrossingShift(a) => {
            d3(config, a);
            "crossing-shift"
        }
        Command::Smatrix(a) => {
            d3(config, a);
            "smatrix"
        }
        Command::OracleDiff => "oracle-diff",
        Command::All => "all",
    })
}

//! Verification campaigns: named suites of checks, each producing records
//! with a residual, a tolerance and a verdict.
//!
//! Every suite draws from its own ChaCha8 stream derived from the campaign
//! seed, so a suite's records do not depend on which other suites run.

mod record;
mod suites2d;
mod suites3d;

pub use record::{CheckRecord, Comparison, Report};

use crate::config::Config;
use crate::exec::{map_slice, Mode};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Ccr,
    Function,
    Exchange2d,
    Cocycle,
    Winding,
    URatio,
    Exchange3d,
    CrossingShift,
    Smatrix,
    OracleDiff,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Ccr,
        Suite::Function,
        Suite::Exchange2d,
        Suite::Cocycle,
        Suite::Winding,
        Suite::URatio,
        Suite::Exchange3d,
        Suite::CrossingShift,
        Suite::Smatrix,
        Suite::OracleDiff,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Suite::Ccr => "ccr",
            Suite::Function => "function",
            Suite::Exchange2d => "exchange-2d",
            Suite::Cocycle => "cocycle",
            Suite::Winding => "winding",
            Suite::URatio => "u-ratio",
            Suite::Exchange3d => "exchange-3d",
            Suite::CrossingShift => "crossing-shift",
            Suite::Smatrix => "smatrix",
            Suite::OracleDiff => "oracle-diff",
        }
    }

    /// Stream index of the suite's random generator.
    fn stream(self) -> u64 {
        Suite::ALL.iter().position(|s| *s == self).expect("listed") as u64
    }

    pub fn parse(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL.iter().find(|x| x.id() == s).map(|x| vec![*x]).ok_or_else(|| Error::Config(format!("unknown check `{s}`")))
    }

    pub fn parse_list(items: &[String]) -> Result<Vec<Suite>> {
        let mut out = Vec::new();
        for s in items {
            out.extend(Suite::parse(s)?);
        }
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Config("no checks selected".into()));
        }
        Ok(out)
    }
}

/// A configured run.
#[derive(Clone, Debug)]
pub struct Campaign {
    pub config: Config,
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub mode: Mode,
}

impl Campaign {
    /// Validates the configuration and resolves the selected checks.
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        let suites = Suite::parse_list(&config.campaign.checks)?;
        Ok(Campaign { seed: config.campaign.seed, output_dir: config.campaign.output_dir.clone(), config, suites, mode: Mode::Parallel })
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// Runs the suites (concurrently when allowed) and merges records in suite order.
    pub fn run(&self) -> Result<Report> {
        let outs = map_slice(self.mode, &self.suites, |s| self.run_suite(*s));
        let mut report = Report::default();
        for out in outs {
            let out = out?;
            report.records.extend(out.records);
            report.tables.extend(out.tables);
        }
        if let Some(dir) = &self.output_dir {
            report.write(dir)?;
        }
        Ok(report)
    }

    pub fn run_suite(&self, suite: Suite) -> Result<Report> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(suite.stream());
        let mut ctx = Ctx { config: &self.config, mode: self.mode, rng, out: Report::default() };
        match suite {
            Suite::Ccr => suites2d::ccr(&mut ctx),
            Suite::Function => suites2d::function(&mut ctx),
            Suite::Exchange2d => suites2d::exchange(&mut ctx),
            Suite::Cocycle => suites3d::cocycle(&mut ctx),
            Suite::Winding => suites3d::winding(&mut ctx),
            Suite::URatio => suites3d::intertwiners(&mut ctx),
            Suite::Exchange3d => suites3d::exchange(&mut ctx),
            Suite::CrossingShift => {
                suites2d::crossing_shift(&mut ctx)?;
                suites3d::crossing_shift(&mut ctx)
            }
            Suite::Smatrix => suites3d::smatrix(&mut ctx),
            Suite::OracleDiff => {
                suites2d::oracle_diff(&mut ctx)?;
                suites3d::oracle_diff(&mut ctx)
            }
        }?;
        Ok(ctx.out)
    }
}

/// CSV table of contour-shift residuals, one row per separation.
pub(crate) fn shift_table(dimension: u8, rows: &[(f64, f64, f64)]) -> Result<String> {
    let err = |e: &dyn std::fmt::Display| Error::Internal(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dimension", "separation", "pointwise", "total"]).map_err(|e| err(&e))?;
    for (sep, pointwise, total) in rows {
        w.serialize((dimension, sep, pointwise, total)).map_err(|e| err(&e))?;
    }
    String::from_utf8(w.into_inner().map_err(|e| err(&e))?).map_err(|e| err(&e))
}

/// State threaded through one suite.
pub(crate) struct Ctx<'a> {
    pub config: &'a Config,
    pub mode: Mode,
    pub rng: ChaCha8Rng,
    pub out: Report,
}

impl Ctx<'_> {
    pub fn nmax(&self) -> usize {
        self.config.campaign.nmax
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.out.records.push(r);
    }
}

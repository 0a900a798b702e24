//! Campaign configuration file (TOML).
//!
//! Every block is optional; omitted blocks fall back to desk-scale defaults.
//! Parsing and validation failures are reported as [`Error::Config`].

use crate::deform3d::{Deform3DParams, R3Spec};
use crate::fock::{GridMeasure, GridSpec};
use crate::funcs::{Family, FunctionSpec};
use crate::geom3d::WedgePath;
use crate::quad::Rule;
use crate::waves::{PacketSpec, TestPacket};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Replaces the default grid of its own dimension.
    pub grid: Option<GridSpec>,
    pub function: BTreeMap<String, FunctionSpec>,
    pub deform2d: Deform2DConfig,
    pub deform3d: Deform3DConfig,
    pub wedges: BTreeMap<String, WedgeSpec>,
    pub packets: BTreeMap<String, PacketSpec>,
    pub campaign: CampaignConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseModeName {
    #[default]
    Strict,
    Exploratory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Deform2DConfig {
    /// Name of a `[function.*]` block used as an extra fixed exchange trial.
    pub function: Option<String>,
    /// Overrides the `mu` of the referenced function.
    pub mu: Option<f64>,
    /// Statistics parameter of the charge-twist check.
    pub lambda: f64,
    pub mode: PhaseModeName,
    /// Exploratory mode only: `nu` and `rho` set independently of `mu`.
    pub nu: Option<f64>,
    pub rho: Option<f64>,
    /// Effective packet support is `center +- k * spread`.
    pub separation_sigma_multiplier: f64,
}

impl Default for Deform2DConfig {
    fn default() -> Self {
        Deform2DConfig {
            function: None,
            mu: None,
            lambda: 0.37,
            mode: PhaseModeName::Strict,
            nu: None,
            rho: None,
            separation_sigma_multiplier: crate::waves::DEFAULT_SUPPORT_K,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Deform3DConfig {
    pub lambda: f64,
    pub kappa: f64,
    pub f_sign: i8,
    pub r: R3Spec,
    /// Only `"rest"` (the rest momentum) is supported.
    pub branch_base: String,
    /// Accepted for compatibility; covariance checks here use grid-exact maps.
    pub interpolation_degree: u32,
}

impl Default for Deform3DConfig {
    fn default() -> Self {
        Deform3DConfig {
            lambda: 0.37,
            kappa: 1.0,
            f_sign: 1,
            r: R3Spec { c: 0.3, b: vec![0.8, 2.0] },
            branch_base: "rest".into(),
            interpolation_degree: 3,
        }
    }
}

impl Deform3DConfig {
    pub fn params(&self, mass: f64) -> Result<Deform3DParams> {
        if self.branch_base != "rest" {
            return Err(Error::Config(format!("branch_base must be \"rest\", got {:?}", self.branch_base)));
        }
        Deform3DParams::new(self.lambda, mass, self.f_sign, self.r.build()?, self.kappa)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WedgeSpec {
    /// Generator word, e.g. `"rot(pi/2) boost1(0.3)"`.
    pub word: String,
}

impl WedgeSpec {
    pub fn build(&self) -> Result<WedgePath> {
        WedgePath::parse(&self.word)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Check identifiers; `"all"` expands to every suite.
    pub checks: Vec<String>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Truncation of the Fock space.
    pub nmax: usize,
    /// Randomized samples for the covering-group and winding suites.
    pub samples: usize,
    /// Randomized admissible pairs in the 2D exchange suite.
    pub trials: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig { checks: vec!["all".into()], seed: 2024, output_dir: None, nmax: 3, samples: 1000, trials: 3 }
    }
}

/// Largest grid the dense oracle suites accept.
pub const MAX_DESK_NODES: usize = 12;

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Builds every referenced object once so that bad input fails before any check runs.
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.grid2d().map_err(cfg)?;
        self.grid3d().map_err(cfg)?;
        for (name, f) in &self.function {
            f.build().map_err(|e| in_block("function", name, e))?;
        }
        if let Some(name) = &self.deform2d.function {
            let f = self
                .function
                .get(name)
                .ok_or_else(|| Error::Config(format!("deform2d.function refers to missing block function.{name}")))?;
            if f.family == Family::CrossBreaker {
                return Err(Error::Config(format!("function.{name}: a crossing breaker alone is not a deformation pair")));
            }
        }
        if self.deform2d.mode == PhaseModeName::Strict && (self.deform2d.nu.is_some() || self.deform2d.rho.is_some()) {
            return Err(Error::Config("deform2d.nu and deform2d.rho need mode = \"exploratory\"".into()));
        }
        self.deform3d.params(self.mass3()).map_err(cfg)?;
        for (name, w) in &self.wedges {
            w.build().map_err(|e| in_block("wedges", name, e))?;
        }
        for (name, p) in &self.packets {
            p.build().map_err(|e| in_block("packets", name, e))?;
        }
        if self.campaign.nmax == 0 || self.campaign.nmax > 3 {
            return Err(Error::Config(format!("campaign.nmax must be 1..=3, got {}", self.campaign.nmax)));
        }
        if self.campaign.samples == 0 {
            return Err(Error::Config("campaign.samples must be positive".into()));
        }
        Ok(())
    }

    fn grid_of(&self, dim: u8) -> Option<&GridSpec> {
        self.grid.as_ref().filter(|g| g.dimension == dim)
    }

    /// Rapidity grid of the 2D suites.
    pub fn grid2d(&self) -> Result<Arc<GridMeasure>> {
        let g = match self.grid_of(2) {
            Some(s) => {
                check_desk(s.theta_count)?;
                s.build()?
            }
            None => GridMeasure::rapidity(1.0, Rule::GaussLegendre, 5, 2.5)?,
        };
        Ok(Arc::new(g))
    }

    /// `theta x p2` grid of the 3D suites.
    pub fn grid3d(&self) -> Result<Arc<GridMeasure>> {
        let g = match self.grid_of(3) {
            Some(s) => {
                check_desk(s.theta_count * s.p2_count.unwrap_or(1))?;
                s.build()?
            }
            None => GridMeasure::shell3(1.0, Rule::GaussLegendre, 3, 1.5, 2, 1.2)?,
        };
        Ok(Arc::new(g))
    }

    pub fn mass3(&self) -> f64 {
        self.grid_of(3).map_or(1.0, |g| g.mass)
    }

    pub fn mass2(&self) -> f64 {
        self.grid_of(2).map_or(1.0, |g| g.mass)
    }

    pub fn packet(&self, name: &str) -> Result<Option<TestPacket>> {
        self.packets.get(name).map(PacketSpec::build).transpose()
    }
}

/// Prefixes an error with the config block it came from.
fn in_block(table: &str, name: &str, e: Error) -> Error {
    let why = match e {
        Error::Config(m) => m,
        other => other.to_string(),
    };
    Error::Config(format!("{table}.{name}: {why}"))
}

fn check_desk(nodes: usize) -> Result<()> {
    if nodes > MAX_DESK_NODES {
        return Err(Error::Config(format!("grid has {nodes} nodes, desk scale allows at most {MAX_DESK_NODES}")));
    }
    Ok(())
}

//! JSON run configuration. Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::SweepConfig;
use crate::domain::{DomainSpec, GridDomain, Shape};
use crate::energy::EnergySpec;
use crate::error::{Error, Result};
use crate::solver::SolverOpts;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Domain,
    Eigen,
    Solve,
    Sweep,
    Viscosity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Domain => "domain",
            Command::Eigen => "eigen",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Viscosity => "viscosity",
        }
    }
}

/// Problem block of `solve`. Exactly one of `mu`, `log_mu`, `Lambda`
/// (meaning `mu = Lambda^p`) must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyBlock {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub log_mu: Option<f64>,
    #[serde(default, rename = "Lambda")]
    pub lambda: Option<f64>,
    /// Surrogate exponent as a multiple of `max(p, q)`.
    #[serde(default = "two")]
    pub r_multiplier: f64,
}

fn two() -> f64 {
    2.0
}

impl EnergyBlock {
    pub fn log_mu(&self) -> Result<f64> {
        let given = [
            self.mu.is_some(),
            self.log_mu.is_some(),
            self.lambda.is_some(),
        ];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(Error::InvalidParams(
                "energy needs exactly one of mu, log_mu, Lambda".into(),
            ));
        }
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(v.ln())
            } else {
                Err(Error::InvalidParams(format!(
                    "{what} must be positive, got {v}"
                )))
            }
        };
        match (self.mu, self.log_mu, self.lambda) {
            (Some(mu), _, _) => positive(mu, "mu"),
            (_, Some(l), _) => Ok(l),
            (_, _, Some(lam)) => Ok(self.p * positive(lam, "Lambda")?),
            _ => unreachable!(),
        }
    }

    pub fn spec(&self, dom: &GridDomain) -> Result<EnergySpec> {
        EnergySpec::with_log_mu(
            self.alpha,
            self.beta,
            self.p,
            self.q,
            self.log_mu()?,
            self.r_multiplier * self.p.max(self.q),
            dom,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenBlock {
    pub s: f64,
    pub m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityBlock {
    /// A `node_index,x,y,value` file on the configured domain.
    pub solution: PathBuf,
    #[serde(rename = "Q")]
    pub q_ratio: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Defaults to three grid spacings.
    #[serde(default)]
    pub exclude_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory; the command line flag takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub energy: Option<EnergyBlock>,
    #[serde(default)]
    pub solver: Option<SolverOpts>,
    #[serde(default)]
    pub eigen: Option<EigenBlock>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub viscosity: Option<ViscosityBlock>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse(&crate::io::read_file(path)?)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for spec in [
            self.domain.as_mut(),
            self.sweep.as_mut().map(|s| &mut s.domain),
        ]
        .into_iter()
        .flatten()
        {
            if let Shape::MaskFile { path } = &mut spec.shape {
                fix(path);
            }
        }
        if let Some(v) = self.viscosity.as_mut() {
            fix(&mut v.solution);
        }
        if let Some(out) = self.out.as_mut() {
            fix(out);
        }
    }

    /// Solver options with the seed override applied.
    pub fn solver_opts(&self) -> SolverOpts {
        let mut opts = self.solver.clone().unwrap_or_default();
        if let Some(seed) = self.seed {
            opts.seed = seed;
        }
        opts
    }

    pub fn domain_spec(&self) -> Result<&DomainSpec> {
        self.domain.as_ref().ok_or_else(|| missing("domain"))
    }
}

pub(crate) fn missing(block: &str) -> Error {
    Error::InvalidParams(format!("the config has no \"{block}\" block"))
}

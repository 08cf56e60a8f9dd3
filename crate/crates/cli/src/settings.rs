//! Training settings: command-line flags over a TOML file over defaults.

use std::path::Path;

use bcdt::boost::BoostConfig;
use clap::Args;
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Clone, Default, Args)]
pub struct TrainingArgs {
    /// Number of boosted trees
    #[arg(long = "trees", short = 'K')]
    pub trees: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Majority fraction at which a node becomes a leaf
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Weight of a tree with zero training error
    #[arg(long = "M")]
    pub m_weight: Option<f64>,
    /// Retries for a tree no better than chance
    #[arg(long)]
    pub max_retries: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub pso_swarm: Option<usize>,
    #[arg(long)]
    pub pso_iters: Option<usize>,
    #[arg(long)]
    pub pso_omega: Option<f64>,
    #[arg(long)]
    pub pso_c1: Option<f64>,
    #[arg(long)]
    pub pso_c2: Option<f64>,
    /// TOML file with any of the above settings
    #[arg(long, value_name = "FILE")]
    pub config: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoFile {
    pub swarm: Option<usize>,
    pub iters: Option<usize>,
    pub omega: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsFile {
    pub trees: Option<usize>,
    pub max_depth: Option<usize>,
    pub lambda: Option<f64>,
    #[serde(rename = "M")]
    pub m_weight: Option<f64>,
    pub max_retries: Option<usize>,
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    #[serde(default)]
    pub pso: PsoFile,
}

impl SettingsFile {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::User(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
    }
}

pub struct Resolved {
    pub boost: BoostConfig,
    pub seed: u64,
    pub folds: Option<usize>,
}

impl TrainingArgs {
    pub fn resolve(&self) -> Result<Resolved, Failure> {
        let file = match &self.config {
            Some(p) => SettingsFile::load(p)?,
            None => SettingsFile::default(),
        };
        let mut cfg = BoostConfig::default();
        let pick = |cli: Option<usize>, file: Option<usize>, dflt: usize| cli.or(file).unwrap_or(dflt);
        let pickf = |cli: Option<f64>, file: Option<f64>, dflt: f64| cli.or(file).unwrap_or(dflt);
        cfg.trees = pick(self.trees, file.trees, cfg.trees);
        cfg.max_retries = pick(self.max_retries, file.max_retries, cfg.max_retries);
        cfg.m_weight = pickf(self.m_weight, file.m_weight, cfg.m_weight);
        cfg.cdt.max_depth = pick(self.max_depth, file.max_depth, cfg.cdt.max_depth);
        cfg.cdt.lambda = pickf(self.lambda, file.lambda, cfg.cdt.lambda);
        let pso = &mut cfg.cdt.pso;
        pso.swarm_size = pick(self.pso_swarm, file.pso.swarm, pso.swarm_size);
        pso.iterations = pick(self.pso_iters, file.pso.iters, pso.iterations);
        pso.inertia = pickf(self.pso_omega, file.pso.omega, pso.inertia);
        pso.cognitive = pickf(self.pso_c1, file.pso.c1, pso.cognitive);
        pso.social = pickf(self.pso_c2, file.pso.c2, pso.social);
        let seed = self.seed.or(file.seed).unwrap_or(0);
        pso.seed = seed;
        cfg.validate().map_err(|e| Failure::User(e.to_string()))?;
        Ok(Resolved {
            boost: cfg,
            seed,
            folds: file.folds,
        })
    }
}

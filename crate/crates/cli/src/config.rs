use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use axtnn::complib::{derive_seed, LibraryConfig};
use axtnn::moo::NsgaConfig;
use axtnn::tech::{CellLibrary, InterfaceCostTable};
use axtnn::tnn::TrainConfig;
use axtnn::varsim::VariationConfig;
use serde::{Deserialize, Serialize};

/// Everything one experiment needs. Loaded from TOML or JSON; command-line
/// flags override individual fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub label: String,
    /// Input precisions to train and optimize.
    pub ks: Vec<u32>,
    /// Hidden sizes tried per precision.
    pub hidden: Vec<usize>,
    /// Smallest hidden size whose validation accuracy is within this much
    /// of the best one wins.
    pub hidden_tolerance: f64,
    pub train: TrainConfig,
    pub library: LibraryConfig,
    pub nsga: NsgaConfig,
    pub variation: VariationConfig,
    pub tech: Option<PathBuf>,
    pub interface_table: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::new(),
            label: "label".into(),
            ks: vec![1, 2],
            hidden: vec![2, 4, 6, 8, 10],
            hidden_tolerance: 0.005,
            train: TrainConfig::default(),
            library: LibraryConfig::default(),
            nsga: NsgaConfig::default(),
            variation: VariationConfig::default(),
            tech: None,
            interface_table: None,
            out: PathBuf::from("run"),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.dataset);
        rebase(&mut cfg.out);
        if let Some(p) = cfg.tech.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.interface_table.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.as_os_str().is_empty() {
            bail!("no dataset given; set `dataset` in the config or pass --dataset");
        }
        if !self.dataset.is_file() {
            bail!("dataset {} does not exist", self.dataset.display());
        }
        for p in self.tech.iter().chain(&self.interface_table) {
            if !p.is_file() {
                bail!("{} does not exist", p.display());
            }
        }
        if self.ks.is_empty() || self.ks.iter().any(|k| !(1..=4).contains(k)) {
            bail!("ks must be a non-empty subset of 1..=4, got {:?}", self.ks);
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|m| !(1..=50).contains(m)) {
            bail!("hidden sizes must lie in 1..=50, got {:?}", self.hidden);
        }
        self.variation.validate()?;
        Ok(())
    }

    pub fn tech(&self) -> Result<CellLibrary> {
        match &self.tech {
            Some(p) => CellLibrary::load(p).with_context(|| format!("loading technology {}", p.display())),
            None => Ok(CellLibrary::default_lib()),
        }
    }

    pub fn interface_table(&self) -> Result<InterfaceCostTable> {
        let table = InterfaceCostTable::default();
        match &self.interface_table {
            Some(p) => table.with_overrides(p).with_context(|| format!("loading interface table {}", p.display())),
            None => Ok(table),
        }
    }

    /// Stage seeds: `derive_seed(seed, label)` with labels such as
    /// `split`, `train/k2/m6`, `library`, `nsga/k2`, `variation/k2`.
    pub fn stage_seed(&self, label: &str) -> u64 {
        derive_seed(self.seed, label)
    }
}

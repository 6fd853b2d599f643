use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lanet_core::pipeline::{Extractor, PipelineOptions};
use serde::Deserialize;

/// Build inputs, read from TOML. Relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildManifest {
    pub corpus: PathBuf,
    pub snapshot: PathBuf,
    pub lexicon: PathBuf,
    pub output: PathBuf,
    #[serde(default)]
    pub skip_filter: bool,
    #[serde(default)]
    pub skip_merge: bool,
    #[serde(default)]
    pub extractor: Option<String>,
    #[serde(default)]
    pub log_level: Option<String>,
}

impl BuildManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let mut m: BuildManifest =
            toml::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut m.corpus, &mut m.snapshot, &mut m.lexicon, &mut m.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(m)
    }

    /// Every input must exist before anything is processed.
    pub fn check_inputs(&self) -> Result<()> {
        for (what, p) in [("corpus", &self.corpus), ("snapshot", &self.snapshot), ("lexicon", &self.lexicon)] {
            if !p.is_file() {
                bail!("{what} file {} does not exist", p.display());
            }
        }
        Ok(())
    }

    pub fn options(&self) -> Result<PipelineOptions> {
        let extractor = match self.extractor.as_deref() {
            None | Some("dependency") => Extractor::Dependency,
            Some("baseline") => Extractor::Baseline,
            Some(other) => bail!("unknown extractor `{other}` (expected dependency or baseline)"),
        };
        Ok(PipelineOptions { extractor, relevance_filter: !self.skip_filter, merge: !self.skip_merge })
    }
}

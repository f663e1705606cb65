use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::GanConfig;
use crate::classifiers::ClassifierSpec;
use crate::convgen::{ConvGenConfig, NebSetting};
use crate::error::{Error, Result};

/// Environment variable that overrides the configured master seed.
pub const SEED_ENV: &str = "CONVGEN_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub path: PathBuf,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default = "default_minority_label")]
    pub minority_label: String,
    /// Report name; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
}

fn default_label_column() -> String {
    "Class".into()
}

fn default_minority_label() -> String {
    "positive".into()
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            label_column: default_label_column(),
            minority_label: default_minority_label(),
            name: None,
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map_or_else(|| self.path.display().to_string(), |s| s.to_string_lossy().into_owned())
        })
    }
}

/// ConvGeN settings as written in a config file: an optional named preset
/// plus individual overrides. Seeds always come from the harness.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvGenSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neb: Option<NebSetting>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maj_proximal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neb_epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disc_train_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_epochs: Option<usize>,
}

impl ConvGenSpec {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.into()),
            ..Self::default()
        }
    }

    pub fn resolve(&self, seed: u64) -> Result<ConvGenConfig> {
        let mut c = match &self.preset {
            Some(p) => ConvGenConfig::preset(p)
                .ok_or_else(|| Error::validation(format!("unknown ConvGeN preset {p:?}")))?,
            None => ConvGenConfig::default(),
        };
        c.seed = seed;
        if let Some(v) = self.neb {
            c.neb = v;
        }
        if let Some(v) = self.maj_proximal {
            c.maj_proximal = v;
        }
        if let Some(v) = self.neb_epochs {
            c.neb_epochs = v;
        }
        if let Some(v) = self.disc_train_count {
            c.disc_train_count = v;
        }
        if self.conv_rows.is_some() {
            c.conv_rows = self.conv_rows;
        }
        if let Some(v) = self.learning_rate {
            c.learning_rate = v;
        }
        if let Some(v) = self.doc_epochs {
            c.doc_epochs = v;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OversamplerKind {
    Repeater,
    Gan(#[serde(default)] GanConfig),
    Interpolation {
        #[serde(default = "default_interpolation_k")]
        k: usize,
    },
    Convgen(#[serde(default)] ConvGenSpec),
    /// Pre-generated synthetic minority rows (features only, with header).
    FromFile { path: PathBuf },
}

fn default_interpolation_k() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OversamplerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub kind: OversamplerKind,
}

impl OversamplerSpec {
    pub fn new(kind: OversamplerKind) -> Self {
        Self { name: None, kind }
    }

    pub fn convgen(preset: &str) -> Self {
        Self::new(OversamplerKind::Convgen(ConvGenSpec::preset(preset)))
    }

    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match &self.kind {
            OversamplerKind::Repeater => "repeater".into(),
            OversamplerKind::Gan(_) => "gan".into(),
            OversamplerKind::Interpolation { .. } => "interpolation".into(),
            OversamplerKind::Convgen(spec) => match &spec.preset {
                Some(p) => format!("convgen({p})"),
                None => "convgen".into(),
            },
            OversamplerKind::FromFile { path } => format!(
                "file:{}",
                path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
            ),
        }
    }

    pub fn is_convgen(&self) -> bool {
        matches!(self.kind, OversamplerKind::Convgen(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub datasets: Vec<DatasetSpec>,
    pub oversamplers: Vec<OversamplerSpec>,
    pub classifiers: Vec<ClassifierSpec>,
    #[serde(default = "default_five")]
    pub n_folds: usize,
    #[serde(default = "default_five")]
    pub n_shuffles: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Also write every fold's training set (real + synthetic) and test set
    /// as CSV, for scoring with external tools.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub export_folds: bool,
}

fn default_five() -> usize {
    5
}

impl BenchmarkConfig {
    pub fn new(datasets: Vec<DatasetSpec>, oversamplers: Vec<OversamplerSpec>, classifiers: Vec<ClassifierSpec>) -> Self {
        Self {
            datasets,
            oversamplers,
            classifiers,
            n_folds: 5,
            n_shuffles: 5,
            seed: 0,
            output_dir: None,
            export_folds: false,
        }
    }

    /// Reads a JSON config. Relative paths inside it are taken relative to
    /// the config file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.datasets.iter_mut().for_each(|d| rebase(&mut d.path));
        for o in &mut cfg.oversamplers {
            if let OversamplerKind::FromFile { path } = &mut o.kind {
                rebase(path);
            }
        }
        for c in &mut cfg.classifiers {
            if let ClassifierSpec::External { path } = c {
                let mut p = PathBuf::from(&*path);
                rebase(&mut p);
                *path = p.to_string_lossy().into_owned();
            }
        }
        if let Some(out) = &mut cfg.output_dir {
            rebase(out);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 2 {
            return Err(Error::validation("n_folds must be at least 2"));
        }
        if self.n_shuffles == 0 {
            return Err(Error::validation("n_shuffles must be at least 1"));
        }
        let unique = |labels: Vec<String>, what: &str| {
            let mut sorted = labels.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() == labels.len() {
                Ok(())
            } else {
                Err(Error::validation(format!("duplicate {what} names: {labels:?}")))
            }
        };
        unique(self.datasets.iter().map(DatasetSpec::display_name).collect(), "dataset")?;
        unique(self.oversamplers.iter().map(OversamplerSpec::label).collect(), "oversampler")?;
        unique(self.classifiers.iter().map(ClassifierSpec::label).collect(), "classifier")?;
        for o in &self.oversamplers {
            if let OversamplerKind::Convgen(spec) = &o.kind {
                spec.resolve(0)?;
            }
        }
        Ok(())
    }
}

/// Seed precedence: explicit flag, then [`SEED_ENV`], then the config.
pub fn resolve_seed(config_seed: u64, env_value: Option<&str>, flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env_value {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        None => Ok(config_seed),
    }
}

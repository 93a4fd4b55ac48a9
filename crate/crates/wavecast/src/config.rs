//! Flat `key = value` experiment files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use wavecast_core::model::{ArchOptions, Architecture, HyperParams};

use crate::dataset::Site;
use crate::error::{AppError, AppResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CvMode {
    /// One 70/30 split.
    Holdout,
    KFold(usize),
}

impl CvMode {
    pub fn name(self) -> String {
        match self {
            CvMode::Holdout => "holdout_70_30".into(),
            CvMode::KFold(k) => format!("kfold_{k}"),
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        if s == "holdout_70_30" || s == "holdout" {
            return Ok(CvMode::Holdout);
        }
        s.strip_prefix("kfold_")
            .and_then(|k| k.parse().ok())
            .filter(|&k| k >= 2)
            .map(CvMode::KFold)
            .ok_or_else(|| format!("unknown cv mode `{s}` (holdout_70_30 or kfold_<k>)"))
    }
}

/// What to do with rows that break a dataset invariant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OnViolation {
    Error,
    /// Leave the reported rows out of training.
    Drop,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub site: Option<Site>,
    pub data: Option<PathBuf>,
    pub model: Architecture,
    pub hp: HyperParams,
    pub options: ArchOptions,
    pub seed: u64,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub validation_fraction: f64,
    pub cv: CvMode,
    pub output: PathBuf,
    /// Train on this many seeded rows instead of the whole file.
    pub subsample: Option<usize>,
    pub on_violation: OnViolation,
}

impl ExperimentConfig {
    pub fn new(model: Architecture, seed: u64) -> Self {
        ExperimentConfig {
            site: None,
            data: None,
            model,
            hp: HyperParams::reference(),
            options: ArchOptions::default(),
            seed,
            epochs: 100,
            patience: Some(10),
            validation_fraction: 0.1,
            cv: CvMode::KFold(10),
            output: PathBuf::from("runs").join(model.name()),
            subsample: None,
            on_violation: OnViolation::Error,
        }
    }

    /// Reads a config file; relative paths resolve against its directory and
    /// a referenced data file must exist.
    pub fn load(path: &Path, default_seed: u64) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut cfg = Self::parse(&text, path, default_seed)?;
        cfg.data = cfg.data.map(|d| base.join(d));
        cfg.output = base.join(&cfg.output);
        if let Some(d) = &cfg.data {
            if !d.is_file() {
                return Err(AppError::io(
                    d,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "data file not found"),
                ));
            }
        }
        Ok(cfg)
    }

    /// `origin` only labels errors.
    pub fn parse(text: &str, origin: &Path, default_seed: u64) -> AppResult<Self> {
        let mut entries: Vec<(usize, &str, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| AppError::Config {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (k, v) = (k.trim(), v.trim());
            if entries.iter().any(|e| e.1 == k) {
                return Err(err(format!("duplicate key `{k}`")));
            }
            entries.push((i + 1, k, v));
        }
        let model = match entries.iter().find(|e| e.1 == "model") {
            Some(&(line, _, v)) => v.parse::<Architecture>().map_err(|e| AppError::Config {
                path: origin.to_path_buf(),
                line,
                message: e.to_string(),
            })?,
            None => {
                return Err(AppError::Config {
                    path: origin.to_path_buf(),
                    line: 0,
                    message: "missing `model`".into(),
                })
            }
        };
        let mut cfg = ExperimentConfig::new(model, default_seed);
        let mut hp = cfg.hp.to_vector();
        for &(line, key, value) in &entries {
            cfg.apply(key, value, &mut hp)
                .map_err(|message| AppError::Config {
                    path: origin.to_path_buf(),
                    line,
                    message,
                })?;
        }
        cfg.hp = HyperParams::from_vector(&hp).map_err(|e| AppError::Config {
            path: origin.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str, hp: &mut [f64; 12]) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse()
                .map_err(|_| format!("`{key}`: cannot parse `{v}`"))
        }
        if let Some(i) = HyperParams::NAMES.iter().position(|&n| n == key) {
            hp[i] = num(key, value)?;
            return Ok(());
        }
        match key {
            "model" => {}
            "site" => self.site = Some(value.parse()?),
            "data" => self.data = Some(PathBuf::from(value)),
            "seed" => self.seed = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "patience" => {
                self.patience = if value == "none" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "validation_fraction" => {
                let v: f64 = num(key, value)?;
                if !(0.0..1.0).contains(&v) {
                    return Err("`validation_fraction` must lie in [0, 1)".into());
                }
                self.validation_fraction = v;
            }
            "cv" => self.cv = CvMode::parse(value)?,
            "output" => self.output = PathBuf::from(value),
            "subsample" => self.subsample = Some(num(key, value)?),
            "on_violation" => {
                self.on_violation = match value {
                    "error" => OnViolation::Error,
                    "drop" => OnViolation::Drop,
                    _ => {
                        return Err(format!(
                            "`on_violation` must be error or drop, not `{value}`"
                        ))
                    }
                }
            }
            "kernel_width" => self.options.kernel_width = num(key, value)?,
            "stride" => self.options.stride = num(key, value)?,
            "alpha" => self.options.alpha = num(key, value)?,
            "attention_hops" => self.options.attention_hops = num(key, value)?,
            "se_block" => self.options.se_block = num(key, value)?,
            "se_ratio" => self.options.se_ratio = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Text that [`ExperimentConfig::parse`] reads back to an equal value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("model", self.model.name().into());
        if let Some(site) = self.site {
            put("site", site.name().into());
        }
        if let Some(d) = &self.data {
            put("data", d.display().to_string());
        }
        put("seed", self.seed.to_string());
        put("epochs", self.epochs.to_string());
        put(
            "patience",
            self.patience.map_or("none".into(), |p| p.to_string()),
        );
        put(
            "validation_fraction",
            format!("{:?}", self.validation_fraction),
        );
        put("cv", self.cv.name());
        put("output", self.output.display().to_string());
        if let Some(n) = self.subsample {
            put("subsample", n.to_string());
        }
        put(
            "on_violation",
            match self.on_violation {
                OnViolation::Error => "error".into(),
                OnViolation::Drop => "drop".into(),
            },
        );
        for (name, v) in HyperParams::NAMES.iter().zip(self.hp.to_vector()) {
            put(name, format!("{v:?}"));
        }
        let o = &self.options;
        put("kernel_width", o.kernel_width.to_string());
        put("stride", o.stride.to_string());
        put("alpha", format!("{:?}", o.alpha));
        put("attention_hops", o.attention_hops.to_string());
        put("se_block", o.se_block.to_string());
        put("se_ratio", o.se_ratio.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::new(Architecture::CnnBiLstmSa, 7);
        cfg.site = Some(Site::Perth);
        cfg.data = Some("perth.csv".into());
        cfg.hp.learning_rate = 2.11e-3;
        cfg.hp.pdo = [0.1, 0.35];
        cfg.cv = CvMode::Holdout;
        cfg.patience = None;
        cfg.subsample = Some(2000);
        let back = ExperimentConfig::parse(&cfg.to_text(), Path::new("x"), 0).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn comments_defaults_and_errors() {
        let cfg = ExperimentConfig::parse(
            "# demo\nmodel = cnn  # trailing\nnhu1 = 8\n",
            Path::new("x"),
            42,
        )
        .unwrap();
        assert_eq!(cfg.model, Architecture::Cnn);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.hp.nhu, [8, 16]);
        for (bad, line) in [
            ("model = cnn\nfoo = 1\n", 2),
            ("model = transformer\n", 1),
            ("model = cnn\nepochs = many\n", 2),
            ("model = cnn\ncv = loo\n", 2),
            ("model = cnn\nseed = 1\nseed = 2\n", 3),
            ("model = cnn\njust text\n", 2),
        ] {
            match ExperimentConfig::parse(bad, Path::new("x"), 0) {
                Err(AppError::Config { line: l, .. }) => assert_eq!(l, line, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
        assert!(ExperimentConfig::parse("seed = 1\n", Path::new("x"), 0).is_err());
        assert!(
            ExperimentConfig::parse("model = cnn\nbatch_size = 0\n", Path::new("x"), 0).is_err()
        );
    }
}

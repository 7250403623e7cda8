//! Experiment configuration: a `key = value` file overlaid with command-line
//! overrides, resolved into typed settings with defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use mice_core::baseline::SvmParams;
use mice_core::corpus::SplitMode;
use mice_core::ensemble::MmConfig;
use mice_core::eval::SystemSpec;
use mice_core::model::{Task, TrainConfig};

/// Every recognised key with its default (`None` = unset).
const KEYS: &[(&str, Option<&str>)] = &[
    ("corpus", None),
    ("corpus_format", Some("auto")),
    ("language", Some("sl")),
    ("categories", Some("VID")),
    ("agreement_filter", Some("true")),
    ("archive", None),
    ("out", Some("out")),
    ("task", Some("sentence")),
    ("protocol", Some("in-training")),
    ("split_mode", Some("random")),
    ("split_ratios", Some("0.63:0.30:0.07")),
    ("test_fraction", Some("0.30")),
    ("split_file", None),
    ("expression", None),
    ("systems", Some("majority,all-positive,svm,gru")),
    ("seed", None),
    ("epochs", Some("10")),
    ("learning_rate", Some("0.001")),
    ("rho", Some("0.9")),
    ("epsilon", Some("1e-7")),
    ("batch_size", Some("32")),
    ("clip_norm", Some("none")),
    ("hidden", Some("100")),
    ("dropout", Some("0.5")),
    ("svm_lambda", Some("1e-4")),
    ("svm_epochs", Some("20")),
    ("mm_components", Some("1")),
    ("fractions", Some("1.0,0.8,0.6,0.4,0.2,0.1")),
    ("synth_sentences", Some("1000")),
    ("synth_expressions", Some("20")),
    ("synth_idiomatic_rate", Some("0.5")),
    ("synth_dim", Some("16")),
    ("synth_signal", Some("2.0")),
];

fn normalise(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected `key = value`, got `{raw}`", i + 1))?;
        let k = normalise(k);
        if !KEYS.iter().any(|(name, _)| *name == k) {
            bail!("config line {}: unknown key `{k}`", i + 1);
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Defaults, then the config file, then `overrides` (later wins).
    pub fn resolve(config_file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut values: BTreeMap<String, String> = KEYS
            .iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v.to_string())))
            .collect();
        if let Some(path) = config_file {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            values.extend(parse_config_text(&text).with_context(|| format!("in {}", path.display()))?);
        }
        for (k, v) in overrides {
            let k = normalise(k);
            if !KEYS.iter().any(|(name, _)| *name == k) {
                bail!("unknown setting `{k}`");
            }
            values.insert(k, v.clone());
        }
        Ok(Settings { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(KEYS.iter().any(|(k, _)| *k == key), "unregistered key {key}");
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| anyhow!("`{key}` must be set (in the config file or with --{})", key.replace('_', "-")))
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.require(key)?;
        raw.parse().map_err(|e| anyhow!("bad value `{raw}` for `{key}`: {e}"))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        Ok(PathBuf::from(self.require(key)?))
    }

    pub fn existing_path(&self, key: &str) -> Result<PathBuf> {
        let p = self.path(key)?;
        if !p.exists() {
            bail!("{key} path {} does not exist", p.display());
        }
        Ok(p)
    }

    pub fn seed(&self) -> Result<u64> {
        self.get("seed")
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out").unwrap_or("out"))
    }

    pub fn task(&self) -> Result<Task> {
        self.get("task")
    }

    pub fn list(&self, key: &str) -> Result<Vec<String>> {
        Ok(self
            .require(key)?
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect())
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.list(key)?
            .iter()
            .map(|s| s.parse().map_err(|_| anyhow!("bad number `{s}` in `{key}`")))
            .collect()
    }

    pub fn split_mode(&self) -> Result<SplitMode> {
        self.get("split_mode")
    }

    pub fn split_ratios(&self) -> Result<(f64, f64, f64)> {
        let raw = self.require("split_ratios")?;
        let parts: Vec<f64> = raw
            .split(':')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| anyhow!("bad split ratios `{raw}`"))?;
        match parts[..] {
            [a, b, c] => Ok((a, b, c)),
            [a, b] => Ok((a, b, 0.0)),
            _ => bail!("split ratios need two or three parts, got `{raw}`"),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let clip = self.require("clip_norm")?;
        let cfg = TrainConfig {
            epochs: self.get("epochs")?,
            learning_rate: self.get("learning_rate")?,
            rho: self.get("rho")?,
            epsilon: self.get("epsilon")?,
            batch_size: self.get("batch_size")?,
            seed: self.seed()?,
            clip_norm: match clip {
                "none" | "" => None,
                v => Some(v.parse().map_err(|_| anyhow!("bad clip_norm `{v}`"))?),
            },
            hidden: self.get("hidden")?,
            dropout: self.get("dropout")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn svm_params(&self) -> Result<SvmParams> {
        Ok(SvmParams {
            lambda: self.get("svm_lambda")?,
            epochs: self.get("svm_epochs")?,
            seed: self.seed()?,
        })
    }

    pub fn mm_config(&self) -> Result<MmConfig> {
        Ok(MmConfig {
            components: self.get("mm_components")?,
            seed: self.seed()?,
            ..MmConfig::default()
        })
    }

    /// `vote` and `mm` combine three GRUs trained from consecutive seeds.
    pub fn systems(&self) -> Result<Vec<SystemSpec>> {
        let gru = self.train_config()?;
        let members = || -> Vec<SystemSpec> {
            (0..3u64)
                .map(|k| SystemSpec::Gru(TrainConfig { seed: gru.seed.wrapping_add(k), ..gru.clone() }))
                .collect()
        };
        self.list("systems")?
            .iter()
            .map(|name| {
                Ok(match name.as_str() {
                    "majority" => SystemSpec::Majority,
                    "all-positive" | "all_positive" => SystemSpec::AllPositive,
                    "svm" => SystemSpec::Svm(self.svm_params()?),
                    "gru" => SystemSpec::Gru(gru.clone()),
                    "vote" => SystemSpec::Vote(members()),
                    "mm" => SystemSpec::Mixture { members: members(), config: self.mm_config()? },
                    other => bail!("unknown system `{other}` (expected majority, all-positive, svm, gru, vote or mm)"),
                })
            })
            .collect()
    }

    /// The resolved configuration in config-file syntax, one line per key in
    /// registry order; unset keys are commented out.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, _) in KEYS {
            match self.values.get(*k) {
                Some(v) => writeln!(out, "{k} = {v}").unwrap(),
                None => writeln!(out, "# {k} =").unwrap(),
            }
        }
        out
    }

    /// Writes `resolved_config.txt` into the output directory.
    pub fn echo(&self, out: &Path) -> Result<()> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let path = out.join("resolved_config.txt");
        fs::write(&path, self.to_text()).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("exp.conf");
        fs::write(&p, "# experiment\nseed = 3\nepochs = 4 # short\ntask=token\n").unwrap();
        let s = Settings::resolve(Some(&p), &[("epochs".into(), "2".into())]).unwrap();
        assert_eq!(s.seed().unwrap(), 3);
        assert_eq!(s.get::<usize>("epochs").unwrap(), 2);
        assert_eq!(s.task().unwrap(), Task::Token);
        assert_eq!(s.get::<usize>("hidden").unwrap(), 100);
        let text = s.to_text();
        assert!(text.contains("epochs = 2\n") && text.contains("# corpus =\n"));
        assert_eq!(parse_config_text(&text).unwrap().get("seed").unwrap(), "3");
    }

    #[test]
    fn errors() {
        assert!(parse_config_text("nonsense").is_err());
        assert!(parse_config_text("colour = red").is_err());
        let s = Settings::resolve(None, &[]).unwrap();
        assert!(s.seed().is_err());
        assert!(Settings::resolve(None, &[("bogus".into(), "1".into())]).is_err());
        let s = Settings::resolve(None, &[("seed".into(), "1".into()), ("systems".into(), "gru,nope".into())]).unwrap();
        assert!(s.systems().is_err());
    }

    #[test]
    fn ratios_and_systems() {
        let s = Settings::resolve(None, &[("seed".into(), "5".into()), ("systems".into(), "mm,vote,svm".into())]).unwrap();
        assert_eq!(s.split_ratios().unwrap(), (0.63, 0.30, 0.07));
        let sys = s.systems().unwrap();
        assert_eq!(sys[0].name(), "mm(gru+gru+gru)");
        assert_eq!(sys[2].name(), "svm");
    }
}

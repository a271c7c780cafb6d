//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [train]
//! m_messages = 16
//! lambda = 0.5
//! [eh]
//! b_scale = physical
//! [sweep]
//! lambda_grid = 0, 1, 10
//! ```
//!
//! Every key is optional. `#` and `;` start comments.

use std::fmt;
use std::str::FromStr;

use swipt_core::SweepConfig;
use thiserror::Error;

/// Where a setting came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override(s) => write!(f, "--set {s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{origin}: expected `key = value` or `[section]`")]
    Syntax { origin: Origin },
    #[error("{origin}: unknown section `{section}`")]
    UnknownSection { origin: Origin, section: String },
    #[error("{origin}: key `{key}` appears before any section")]
    NoSection { origin: Origin, key: String },
    #[error("{origin}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        origin: Origin,
        section: String,
        key: String,
    },
    #[error("{origin}: key `{key}`: cannot parse `{value}`: {reason}")]
    BadValue {
        origin: Origin,
        key: String,
        value: String,
        reason: String,
    },
    #[error("{origin}: key `{key}` set twice (first on line {first})")]
    Duplicate {
        origin: Origin,
        key: String,
        first: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Train,
    Eh,
    Sweep,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        match name {
            "train" => Some(Section::Train),
            "eh" => Some(Section::Eh),
            "sweep" => Some(Section::Sweep),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Section::Train => "train",
            Section::Eh => "eh",
            Section::Sweep => "sweep",
        }
    }
}

/// Parsed configuration. Train and rectenna settings live in
/// `sweep.base`, which is also the template for single runs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub sweep: SweepConfig,
}

fn value<T>(origin: &Origin, key: &str, raw: &str) -> Result<T, ConfigError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    raw.parse().map_err(|e: T::Err| ConfigError::BadValue {
        origin: origin.clone(),
        key: key.to_string(),
        value: raw.to_string(),
        reason: e.to_string(),
    })
}

/// `none`, `auto` or a positive width.
fn optional_width(origin: &Origin, key: &str, raw: &str) -> Result<Option<usize>, ConfigError> {
    match raw {
        "none" | "auto" => Ok(None),
        _ => value(origin, key, raw).map(Some),
    }
}

fn list(origin: &Origin, key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',')
        .map(|s| value(origin, key, s.trim()))
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section = None;
        let mut seen: Vec<(Section, String, usize)> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let origin = Origin::Line(line_no);
            let line = raw_line.split(['#', ';']).next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or(ConfigError::Syntax {
                        origin: origin.clone(),
                    })?
                    .trim();
                section =
                    Some(
                        Section::parse(name).ok_or_else(|| ConfigError::UnknownSection {
                            origin: origin.clone(),
                            section: name.to_string(),
                        })?,
                    );
                continue;
            }
            let (key, val) = line.split_once('=').ok_or(ConfigError::Syntax {
                origin: origin.clone(),
            })?;
            let (key, val) = (key.trim(), val.trim());
            let Some(sec) = section else {
                return Err(ConfigError::NoSection {
                    origin,
                    key: key.to_string(),
                });
            };
            if let Some((_, _, first)) = seen.iter().find(|(s, k, _)| *s == sec && k == key) {
                return Err(ConfigError::Duplicate {
                    origin,
                    key: key.to_string(),
                    first: *first,
                });
            }
            seen.push((sec, key.to_string(), line_no));
            cfg.set(sec, key, val, &origin)?;
        }
        Ok(cfg)
    }

    /// Applies one `section.key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let origin = Origin::Override(spec.to_string());
        let (path, val) = spec.split_once('=').ok_or(ConfigError::Syntax {
            origin: origin.clone(),
        })?;
        let (sec, key) = path.trim().split_once('.').ok_or(ConfigError::Syntax {
            origin: origin.clone(),
        })?;
        let section = Section::parse(sec).ok_or_else(|| ConfigError::UnknownSection {
            origin: origin.clone(),
            section: sec.to_string(),
        })?;
        self.set(section, key.trim(), val.trim(), &origin)
    }

    fn set(
        &mut self,
        section: Section,
        key: &str,
        raw: &str,
        origin: &Origin,
    ) -> Result<(), ConfigError> {
        let sweep = &mut self.sweep;
        let train = &mut sweep.base;
        let eh = &mut train.rectenna;
        match (section, key) {
            (Section::Train, "m_messages") => train.m_messages = value(origin, key, raw)?,
            (Section::Train, "n_channel_uses") => train.n_channel_uses = value(origin, key, raw)?,
            (Section::Train, "snr_db") => train.snr_db = value(origin, key, raw)?,
            (Section::Train, "lambda") => train.lambda = value(origin, key, raw)?,
            (Section::Train, "avg_power") => train.avg_power = value(origin, key, raw)?,
            (Section::Train, "batch_size") => train.batch_size = value(origin, key, raw)?,
            (Section::Train, "train_set_size") => train.train_set_size = value(origin, key, raw)?,
            (Section::Train, "epochs") => train.epochs = value(origin, key, raw)?,
            (Section::Train, "seed") => train.seed = value(origin, key, raw)?,
            (Section::Train, "learning_rate") => train.learning_rate = value(origin, key, raw)?,
            (Section::Train, "encoder_hidden") => {
                train.encoder_hidden = optional_width(origin, key, raw)?
            }
            (Section::Train, "decoder_hidden") => {
                train.decoder_hidden = optional_width(origin, key, raw)?
            }
            (Section::Eh, "i_s") => eh.i_s = value(origin, key, raw)?,
            (Section::Eh, "eta") => eh.eta = value(origin, key, raw)?,
            (Section::Eh, "v_t") => eh.v_t = value(origin, key, raw)?,
            (Section::Eh, "r_a") => eh.r_a = value(origin, key, raw)?,
            (Section::Eh, "r_l") => eh.r_l = value(origin, key, raw)?,
            (Section::Eh, "b_scale") => {
                eh.b_scale = match raw {
                    "physical" | "none" => None,
                    _ => Some(value(origin, key, raw)?),
                }
            }
            (Section::Sweep, "lambda_grid") => sweep.lambda_grid = list(origin, key, raw)?,
            (Section::Sweep, "ser_max") => sweep.ser_max = value(origin, key, raw)?,
            (Section::Sweep, "num_seeds") => sweep.num_seeds = value(origin, key, raw)?,
            (Section::Sweep, "ser_samples") => sweep.ser_samples = value(origin, key, raw)?,
            (Section::Sweep, "max_lambda") => sweep.max_lambda = value(origin, key, raw)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    origin: origin.clone(),
                    section: section.name().to_string(),
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        assert_eq!(
            RunConfig::parse("# only a comment\n\n").unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn parses_all_sections() {
        let text = "\
[train]
m_messages = 8   # small
lambda = 2.5
encoder_hidden = 32
[eh]
b_scale = physical
eta = 1.2
[sweep]
lambda_grid = 0, 1, 10
num_seeds = 3
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.sweep.base.m_messages, 8);
        assert_eq!(cfg.sweep.base.lambda, 2.5);
        assert_eq!(cfg.sweep.base.encoder_hidden, Some(32));
        assert_eq!(cfg.sweep.base.rectenna.b_scale, None);
        assert_eq!(cfg.sweep.base.rectenna.eta, 1.2);
        assert_eq!(cfg.sweep.lambda_grid, vec![0.0, 1.0, 10.0]);
        assert_eq!(cfg.sweep.num_seeds, 3);
    }

    #[test]
    fn errors_name_line_and_key() {
        let err = RunConfig::parse("[train]\n\nlamda = 1\n").unwrap_err();
        assert_eq!(
            err.to_string(),
            "line 3: unknown key `lamda` in section [train]"
        );

        let err = RunConfig::parse("[train]\nepochs = ten\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("line 2: key `epochs`"), "{msg}");

        let err = RunConfig::parse("[optim]\n").unwrap_err();
        assert!(matches!(
            err,
            ConfigError::UnknownSection {
                origin: Origin::Line(1),
                ..
            }
        ));

        let err = RunConfig::parse("seed = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::NoSection { .. }));

        let err = RunConfig::parse("[train]\nseed = 1\nseed = 2\n").unwrap_err();
        assert_eq!(
            err.to_string(),
            "line 3: key `seed` set twice (first on line 2)"
        );

        let err = RunConfig::parse("[train]\njust words\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Syntax {
                origin: Origin::Line(2)
            }
        );
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::parse("[train]\nseed = 1\n").unwrap();
        cfg.apply_override("train.seed=7").unwrap();
        cfg.apply_override("sweep.ser_max = 0.5").unwrap();
        assert_eq!(cfg.sweep.base.seed, 7);
        assert_eq!(cfg.sweep.ser_max, 0.5);

        let err = cfg.apply_override("train.sed=7").unwrap_err();
        assert!(err.to_string().contains("--set train.sed=7"));
        assert!(err.to_string().contains("`sed`"));
        assert!(cfg.apply_override("seed=7").is_err());
    }
}

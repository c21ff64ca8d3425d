//! JSON configuration for channels, codes and experiments. Unknown keys are
//! rejected, and every error names the offending key path.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelKind, ChannelModel, RankPmf};
use crate::error::{Error, Result};
use crate::field::FieldConfig;
use crate::linalg::MatrixLiteral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    PurelyRandom,
    FullRank,
    RankUniform,
    Fixed,
    Network,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub field: FieldConfig,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub kind: KindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_pmf: Option<Vec<f64>>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<MatrixLiteral>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Fixed `[a1, a2, b1, b2]` for the network example.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<[u32; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ChannelConfig {
    pub fn build(&self) -> Result<ChannelModel> {
        let field = self.field.build().map_err(|e| Error::config("field", e.to_string()))?;
        let missing = |key: &str| Error::config(key, format!("required for kind {:?}", self.kind));
        let kind = match self.kind {
            KindName::PurelyRandom => ChannelKind::PurelyRandom,
            KindName::FullRank => ChannelKind::FullRankUniform,
            KindName::RankUniform => {
                let probs = self.rank_pmf.clone().ok_or_else(|| missing("rank_pmf"))?;
                ChannelKind::RankUniform(RankPmf::new(probs).map_err(|e| Error::config("rank_pmf", e.to_string()))?)
            }
            KindName::Fixed => {
                let lit = self.h.as_ref().ok_or_else(|| missing("H"))?;
                ChannelKind::FixedMatrix(lit.build(&field).map_err(|e| Error::config("H", e.to_string()))?)
            }
            KindName::Network => ChannelKind::NetworkExample {
                coefficients: self.coefficients,
            },
            KindName::Z => ChannelKind::ZChannel(self.p.ok_or_else(|| missing("p"))?),
        };
        ChannelModel::new(field, self.t, self.m, self.n, kind).map_err(|e| Error::config("kind", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodeConfig {
    /// Lifted Gabidulin code; `basis` lists evaluation points in `GF(q^{T-M})`.
    Gabidulin {
        n: usize,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<Vec<u32>>,
    },
    /// Lifted linear matrix code with a seeded generator.
    Linear {
        n: usize,
        s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generator_seed: Option<u64>,
    },
    Rateless {
        #[serde(rename = "R")]
        r: usize,
        max_blocks: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        series_seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Integer range `a:b` or `a:b:step`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_range: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

impl ExperimentConfig {
    /// Validates the channel and the sweep before anything runs.
    pub fn validate(&self) -> Result<ChannelModel> {
        let model = self.channel.build().map_err(|e| prefix("channel", e))?;
        if let Some(SweepConfig { t_range: Some(r), .. }) = &self.sweep {
            parse_int_range(r, "sweep.t_range")?;
        }
        Ok(model)
    }
}

fn prefix(head: &str, e: Error) -> Error {
    match e {
        Error::Config { path, msg } => Error::config(format!("{head}.{path}"), msg),
        other => Error::config(head, other.to_string()),
    }
}

/// Parses JSON into `T`, reporting the key path of the first error.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path.is_empty() { ".".into() } else { path }, e.into_inner().to_string())
    })
}

/// A channel file on its own, or an experiment file with a `channel` key.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigFile {
    Channel(ChannelConfig),
    Experiment(ExperimentConfig),
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::config(".", e.to_string()))?;
        if value.get("channel").is_some() {
            let exp: ExperimentConfig = parse(text)?;
            exp.validate()?;
            Ok(ConfigFile::Experiment(exp))
        } else {
            let ch: ChannelConfig = parse(text)?;
            ch.build()?;
            Ok(ConfigFile::Channel(ch))
        }
    }

    pub fn channel(&self) -> &ChannelConfig {
        match self {
            ConfigFile::Channel(c) => c,
            ConfigFile::Experiment(e) => &e.channel,
        }
    }

    pub fn experiment(&self) -> Option<&ExperimentConfig> {
        match self {
            ConfigFile::Experiment(e) => Some(e),
            ConfigFile::Channel(_) => None,
        }
    }
}

/// `a:b` or `a:b:step` over integers, inclusive.
pub fn parse_int_range(text: &str, path: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::config(path, format!("`{s}` is not a nonnegative integer")))
    };
    let (a, b, step) = match parts.as_slice() {
        [a] => (num(a)?, num(a)?, 1),
        [a, b] => (num(a)?, num(b)?, 1),
        [a, b, s] => (num(a)?, num(b)?, num(s)?),
        _ => return Err(Error::config(path, format!("`{text}` is not a range a:b[:step]"))),
    };
    if step == 0 || a > b {
        return Err(Error::config(path, format!("`{text}` is an empty range")));
    }
    Ok((a..=b).step_by(step).collect())
}

/// `a:b` (unit steps) or `a:b:step` over reals, inclusive of `b` up to
/// rounding.
pub fn parse_real_range(text: &str, path: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::config(path, format!("`{s}` is not a number")))
    };
    let (a, b, step) = match parts.as_slice() {
        [a] => (num(a)?, num(a)?, 1.0),
        [a, b] => (num(a)?, num(b)?, 1.0),
        [a, b, s] => (num(a)?, num(b)?, num(s)?),
        _ => return Err(Error::config(path, format!("`{text}` is not a range a:b[:step]"))),
    };
    if step <= 0.0 || a > b {
        return Err(Error::config(path, format!("`{text}` is an empty range")));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| a + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_round_trip() {
        let text = r#"{"field": {"p": 2, "k": 1}, "T": 4, "M": 2, "N": 2, "kind": "rank_uniform", "rank_pmf": [0, 0.5, 0.5]}"#;
        let cfg: ChannelConfig = parse(text).unwrap();
        let model = cfg.build().unwrap();
        assert_eq!(model.rank_pmf().unwrap().mean(), 1.5);
    }

    #[test]
    fn unknown_key_names_path() {
        let text = r#"{"field": {"p": 2, "k": 1, "extra": 1}, "T": 4, "M": 2, "N": 2, "kind": "full_rank"}"#;
        match parse::<ChannelConfig>(text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "field.extra"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_pmf() {
        let text = r#"{"field": {"p": 2, "k": 1}, "T": 4, "M": 2, "N": 2, "kind": "rank_uniform"}"#;
        let cfg: ChannelConfig = parse(text).unwrap();
        assert!(matches!(cfg.build(), Err(Error::Config { path, .. }) if path == "rank_pmf"));
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_int_range("5:5", "t").unwrap(), vec![5]);
        assert_eq!(parse_int_range("1:7:3", "t").unwrap(), vec![1, 4, 7]);
        assert!(parse_int_range("1.5:4", "t").is_err());
        assert_eq!(parse_real_range("1:6", "c").unwrap().len(), 6);
        assert_eq!(parse_real_range("0.5:1.5:0.5", "c").unwrap(), vec![0.5, 1.0, 1.5]);
    }

    #[test]
    fn experiment_file() {
        let text = r#"{"channel": {"field": {"p": 2, "k": 1}, "T": 4, "M": 2, "N": 2, "kind": "full_rank"},
                       "code": {"type": "linear", "n": 8, "s": 0.75}, "trials": 10, "seed": 3,
                       "sweep": {"t_range": "4:8"}}"#;
        let f = ConfigFile::parse(text).unwrap();
        assert!(matches!(f.experiment().unwrap().code, Some(CodeConfig::Linear { n: 8, .. })));
        let bad = text.replace("4:8", "4:x");
        assert!(matches!(ConfigFile::parse(&bad), Err(Error::Config { path, .. }) if path == "sweep.t_range"));
    }
}

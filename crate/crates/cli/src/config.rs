//! Run configuration: schema, validation and conversion into core objects.

use serde::{Deserialize, Serialize};
use std::path::Path;

use lethargy_core::space::{Chain, DeviationSequence, NormKind, Point, Subspace};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Konyagin,
    Probe,
    Finite,
    Converge,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Mode::Exact => "exact",
            Mode::Konyagin => "konyagin",
            Mode::Probe => "probe",
            Mode::Finite => "finite",
            Mode::Converge => "converge",
        };
        write!(f, "{s}")
    }
}

/// Chain literal: coordinate ranks or explicit bases.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainSpec {
    Dims { dims: Vec<usize> },
    Bases { bases: Vec<Vec<Vec<f64>>> },
}

impl ChainSpec {
    pub fn len(&self) -> usize {
        match self {
            ChainSpec::Dims { dims } => dims.len(),
            ChainSpec::Bases { bases } => bases.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn build(&self, ambient: usize) -> Result<Chain, CliError> {
        match self {
            ChainSpec::Dims { dims } => {
                Chain::coordinate(dims, ambient).map_err(CliError::Core)
            }
            ChainSpec::Bases { bases } => {
                let mut subspaces = Vec::with_capacity(bases.len());
                for rows in bases {
                    let basis: Result<Vec<Point>, _> =
                        rows.iter().cloned().map(Point::new).collect();
                    subspaces
                        .push(Subspace::new(basis.map_err(CliError::Core)?, ambient)
                            .map_err(CliError::Core)?);
                }
                Ok(Chain::new(subspaces, ambient))
            }
        }
    }
}

/// Deviation sequence literal.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SequenceSpec {
    /// d_n = scale * ratio^n with the analytic geometric tail.
    Geometric { scale: f64, ratio: f64 },
    /// Explicit values plus the analytic tail beyond the last one.
    Explicit { values: Vec<f64>, tail_value: f64 },
    /// d_n = n^{-p}.
    Power { p: f64 },
}

impl SequenceSpec {
    pub fn build(&self, len: usize) -> Result<DeviationSequence, CliError> {
        match self {
            SequenceSpec::Geometric { scale, ratio } => {
                DeviationSequence::geometric(*scale, *ratio, len).map_err(CliError::Core)
            }
            SequenceSpec::Explicit { values, tail_value } => {
                if values.len() != len {
                    return Err(CliError::CrossField {
                        context: format!(
                            "sequence has {} values but the chain has {} members",
                            values.len(),
                            len
                        ),
                    });
                }
                DeviationSequence::explicit(values.clone(), *tail_value).map_err(CliError::Core)
            }
            SequenceSpec::Power { p } => {
                DeviationSequence::power(*p, len).map_err(CliError::Core)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    pub solver: f64,
    pub root: f64,
    pub accept: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: 1e-10,
            root: 1e-10,
            accept: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub norm: String,
    pub ambient_dim: usize,
    pub chain: ChainSpec,
    pub sequence: SequenceSpec,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<usize>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn norm_kind(&self) -> Result<NormKind, CliError> {
        match self.norm.to_ascii_uppercase().as_str() {
            "L1" => Ok(NormKind::L1),
            "L2" => Ok(NormKind::L2),
            "LINF" => Ok(NormKind::Linf),
            other => Err(CliError::Schema {
                context: format!("norm: unknown tag {other:?} (expected L1, L2 or LINF)"),
            }),
        }
    }

    /// Cross-field checks beyond what serde enforces.
    pub fn validate(&self) -> Result<(), CliError> {
        self.norm_kind()?;
        if self.ambient_dim == 0 {
            return Err(CliError::Schema {
                context: "ambient_dim must be positive".into(),
            });
        }
        if self.chain.is_empty() {
            return Err(CliError::Schema {
                context: "chain must have at least one member".into(),
            });
        }
        match self.mode {
            Mode::Konyagin => {
                if self.c.is_none() {
                    return Err(CliError::CrossField {
                        context: "mode konyagin requires the field c".into(),
                    });
                }
                let has_zero = matches!(
                    &self.sequence,
                    SequenceSpec::Explicit { values, .. } if values.contains(&0.0)
                );
                if has_zero && self.eps.is_none() {
                    return Err(CliError::CrossField {
                        context: "konyagin with a zero tail requires the field eps".into(),
                    });
                }
            }
            Mode::Converge => {
                if self.ns.is_none() {
                    return Err(CliError::CrossField {
                        context: "mode converge requires the field ns".into(),
                    });
                }
            }
            Mode::Exact | Mode::Probe | Mode::Finite => {}
        }
        Ok(())
    }

    pub fn accept_tol(&self) -> f64 {
        self.tolerances.accept
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigIo {
        context: format!("{}: {e}", path.display()),
    })?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| {
        if e.classify() == serde_json::error::Category::Syntax {
            CliError::Parse {
                context: e.to_string(),
            }
        } else {
            CliError::Schema {
                context: e.to_string(),
            }
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{
            "norm": "L2",
            "ambient_dim": 5,
            "chain": {"dims": [1, 2, 3]},
            "sequence": {"kind": "geometric", "scale": 1.0, "ratio": 0.5},
            "mode": "exact"
        }"#
    }

    #[test]
    fn minimal_parses() {
        let cfg: RunConfig = serde_json::from_str(minimal()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.mode, Mode::Exact);
        assert_eq!(cfg.tolerances.accept, 1e-6);
    }

    #[test]
    fn missing_norm_is_schema_error() {
        let text = minimal().replace("\"norm\": \"L2\",", "");
        let err = serde_json::from_str::<RunConfig>(&text).unwrap_err();
        assert!(err.to_string().contains("norm"));
    }

    #[test]
    fn konyagin_without_c_is_cross_field() {
        let text = minimal().replace("\"mode\": \"exact\"", "\"mode\": \"konyagin\"");
        let cfg: RunConfig = serde_json::from_str(&text).unwrap();
        assert!(matches!(
            cfg.validate(),
            Err(CliError::CrossField { .. })
        ));
    }

    #[test]
    fn explicit_length_mismatch() {
        let cfg: RunConfig = serde_json::from_str(
            &minimal().replace(
                r#"{"kind": "geometric", "scale": 1.0, "ratio": 0.5}"#,
                r#"{"kind": "explicit", "values": [1.0, 0.5], "tail_value": 0.0}"#,
            ),
        )
        .unwrap();
        let chain_len = cfg.chain.len();
        assert!(matches!(
            cfg.sequence.build(chain_len),
            Err(CliError::CrossField { .. })
        ));
    }

    #[test]
    fn explicit_bases_chain() {
        let spec = ChainSpec::Bases {
            bases: vec![vec![vec![1.0, 0.0, 0.0]], vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
            ]],
        };
        let chain = spec.build(3).unwrap();
        assert!(chain.validate().pass);
    }
}

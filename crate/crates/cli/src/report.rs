//! Report structure, emission and independent re-verification.
//!
//! Reports embed the constructed point (or points) together with the chain
//! and sequence literals, so verification is a pure replay: every
//! certificate is recomputed from scratch and compared against the stored
//! claims without trusting anything about the original run.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use lethargy_core::oracle::certify_distance;
use lethargy_core::space::{NormKind, Point};

use crate::config::{ChainSpec, Mode, SequenceSpec};
use crate::runner::{documented_probe_findings, pass_band};
use crate::CliError;

/// Stored claims disagreeing with a fresh replay by more than this relative
/// amount are treated as tampering rather than numerical noise.
const TAMPER_REL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    pub d_n: f64,
    pub rho: f64,
    pub cert_lower: f64,
    pub cert_upper: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InsertedEntry {
    pub value: f64,
    pub rank: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReusedEntry {
    pub original: usize,
    pub geometric: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundsInfo {
    pub c: f64,
    pub base: f64,
    pub scale_factor: f64,
    pub scale_k: f64,
    pub inserted: Vec<InsertedEntry>,
    pub reused: Vec<ReusedEntry>,
    /// Present when the zero-tail case delegated to the head perturbation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteInfo {
    pub lambda: f64,
    pub anchor: Vec<f64>,
    pub anchor_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Finding {
    pub name: String,
    pub norm: String,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub delta: f64,
    pub orientation: String,
    pub nu: f64,
    pub required_norm: f64,
    pub achieved_norm: f64,
    pub margin: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairEntry {
    pub m: usize,
    pub n: usize,
    pub diff: f64,
    pub tail_component: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prev_value: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceInfo {
    /// Truncation index (as a string key) to constructed point.
    pub points: BTreeMap<String, Vec<f64>>,
    pub pairs: Vec<PairEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub metadata: Metadata,
    pub mode: Mode,
    pub norm: String,
    pub ambient_dim: usize,
    pub chain: ChainSpec,
    pub sequence: SequenceSpec,
    pub accept_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    pub rows: Vec<Row>,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite: Option<FiniteInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub findings: Option<Vec<Finding>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceInfo>,
}

impl Report {
    pub fn passes(&self) -> bool {
        self.verdict == "pass"
    }
}

/// Locale-independent 17-significant-digit float formatting.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the CSV table: header plus one row per index, stable column order.
pub fn write_csv(report: &Report, path: &Path) -> Result<(), CliError> {
    let mut out = String::from("n,d_n,rho,cert_lower,cert_upper,ratio,pass\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            format_float(r.d_n),
            format_float(r.rho),
            format_float(r.cert_lower),
            format_float(r.cert_upper),
            format_float(r.ratio),
            r.pass
        ));
    }
    let mut file = std::fs::File::create(path).map_err(|e| CliError::EmitIo {
        context: format!("{}: {e}", path.display()),
    })?;
    file.write_all(out.as_bytes()).map_err(|e| CliError::EmitIo {
        context: format!("{}: {e}", path.display()),
    })
}

/// Writes the structured report.
pub fn write_report(report: &Report, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::EmitIo {
        context: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::EmitIo {
        context: format!("{}: {e}", path.display()),
    })
}

pub fn load_report(path: &Path) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigIo {
        context: format!("{}: {e}", path.display()),
    })?;
    serde_json::from_str(&text).map_err(|e| {
        if e.classify() == serde_json::error::Category::Syntax {
            CliError::Parse {
                context: e.to_string(),
            }
        } else {
            CliError::Schema {
                context: e.to_string(),
            }
        }
    })
}

fn tampered(context: String) -> CliError {
    CliError::Tamper { context }
}

/// Replays every certificate in the report from scratch.
///
/// Returns the recomputed overall verdict. Stored values that a fresh
/// computation cannot reproduce raise [`CliError::Tamper`].
pub fn verify_report(report: &Report) -> Result<bool, CliError> {
    let norm = match report.norm.to_ascii_uppercase().as_str() {
        "L1" => NormKind::L1,
        "L2" => NormKind::L2,
        "LINF" => NormKind::Linf,
        other => {
            return Err(CliError::Schema {
                context: format!("report norm {other:?}"),
            });
        }
    };
    let chain = report.chain.build(report.ambient_dim)?;
    let seq = report.sequence.build(chain.len())?;

    match report.mode {
        Mode::Probe => {
            let fresh = documented_probe_findings()?;
            let stored = report.findings.as_ref().ok_or_else(|| CliError::Schema {
                context: "probe report lacks the findings block".into(),
            })?;
            if stored.len() != fresh.len() {
                return Err(tampered("findings count differs from the replay".into()));
            }
            for (s, f) in stored.iter().zip(&fresh) {
                if s.feasible != f.feasible
                    || (s.margin - f.margin).abs() > 1e-6 * (1.0 + f.margin)
                    || (s.nu - f.nu).abs() > 1e-6 * (1.0 + f.nu.abs())
                {
                    return Err(tampered(format!("finding {} differs from the replay", s.name)));
                }
            }
            Ok(true)
        }
        Mode::Converge => {
            let info = report.convergence.as_ref().ok_or_else(|| CliError::Schema {
                context: "convergence report lacks its points".into(),
            })?;
            let mut points: BTreeMap<usize, Point> = BTreeMap::new();
            for (key, coords) in &info.points {
                let n: usize = key.parse().map_err(|_| CliError::Schema {
                    context: format!("bad truncation key {key:?}"),
                })?;
                points.insert(n, Point::new(coords.clone()).map_err(CliError::Core)?);
            }
            for pair in &info.pairs {
                let (a, b) = (
                    points.get(&pair.m).ok_or_else(|| CliError::Schema {
                        context: format!("missing point for truncation {}", pair.m),
                    })?,
                    points.get(&pair.n).ok_or_else(|| CliError::Schema {
                        context: format!("missing point for truncation {}", pair.n),
                    })?,
                );
                let diff = lethargy_core::oracle::norm_of(&a.sub(b), norm);
                if (diff - pair.diff).abs() > 1e-9 * (1.0 + diff) {
                    return Err(tampered(format!(
                        "pair ({}, {}) distance differs from the replay",
                        pair.m, pair.n
                    )));
                }
            }
            // the stored points themselves must hit their truncated targets
            for (&n, p) in &points {
                let sub_chain = chain.truncate(n);
                let sub_seq = seq.truncate(n);
                for i in 1..=n {
                    let d = sub_seq.value_at(i);
                    let band = pass_band(report.accept_tol, d);
                    let (_, pass) = certify_distance(p, sub_chain.member_at(i), norm, d, band)
                        .map_err(CliError::Core)?;
                    if !pass {
                        return Err(tampered(format!(
                            "stored truncation {n} misses its target at index {i}"
                        )));
                    }
                }
            }
            Ok(true)
        }
        Mode::Exact | Mode::Finite | Mode::Konyagin => {
            let coords = report.point.as_ref().ok_or_else(|| CliError::Schema {
                context: "report lacks the constructed point".into(),
            })?;
            let x = Point::new(coords.clone()).map_err(CliError::Core)?;
            if report.rows.len() != chain.len() {
                return Err(CliError::Schema {
                    context: "row count differs from the chain length".into(),
                });
            }
            let mut all_pass = true;
            for row in &report.rows {
                let y = chain.member_at(row.n);
                let (cert, _) = certify_distance(&x, y, norm, row.rho, 1e-8)
                    .map_err(CliError::Core)?;
                let fresh = cert.upper;
                if (fresh - row.rho).abs() > TAMPER_REL * (1.0 + row.rho.abs()) {
                    return Err(tampered(format!(
                        "stored rho at index {} is {} but the replay finds {fresh}",
                        row.n, row.rho
                    )));
                }
                let pass = match report.mode {
                    Mode::Konyagin => {
                        let b = report.bounds.as_ref().ok_or_else(|| CliError::Schema {
                            context: "konyagin report lacks its bounds block".into(),
                        })?;
                        let d = seq.value_at(row.n);
                        match b.eps {
                            Some(eps) => {
                                let positive = d > 0.0;
                                let (lo, hi) =
                                    if positive { (d, (1.0 + eps) * d) } else { (0.0, 0.0) };
                                cert.lower >= lo - report.accept_tol
                                    && cert.upper <= hi + report.accept_tol
                            }
                            None => {
                                let lo = b.c * d;
                                let hi = b.base * b.base * b.c * d;
                                cert.lower >= lo - report.accept_tol
                                    && cert.upper <= hi + report.accept_tol
                            }
                        }
                    }
                    _ => {
                        let d = row.d_n;
                        let band = pass_band(report.accept_tol, d);
                        cert.lower >= d - band && cert.upper <= d + band
                    }
                };
                all_pass &= pass;
            }
            if let Some(fin) = &report.finite {
                let anchor = Point::new(fin.anchor.clone()).map_err(CliError::Core)?;
                let shifted = x.add_scaled(-fin.lambda, &anchor);
                let inside = chain
                    .member_at(chain.len())
                    .member(&shifted, 1e-8)
                    .map_err(CliError::Core)?;
                if !inside {
                    return Err(tampered("anchor relation fails in the replay".into()));
                }
            }
            Ok(all_pass)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_width() {
        assert_eq!(format_float(0.25), "2.5000000000000000e-1");
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
    }
}

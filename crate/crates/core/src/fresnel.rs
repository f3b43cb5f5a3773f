//! Reader for multistatic experimental tables (Institut Fresnel first-opus
//! `.exp` files) and extraction of fixed-bistatic-angle subsets.
//!
//! A table is plain ASCII: comment lines start with a configurable prefix,
//! every other non-blank line holds whitespace-separated numbers whose
//! meaning is given by a [`ColumnMap`]. The layout is configuration rather
//! than guesswork; [`ColumnMap::first_opus_tm`] is a preset that can be
//! overridden from JSON when a file deviates from it.

use std::collections::{BTreeSet, HashSet};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{Provenance, Sample, ScatteredDataset};
use crate::scene::{wrap_angle, MeasurementConfig};
use crate::specfun::{ComplexScalar, Point2};

/// Transmitter ring radius of the first-opus arrangement, m.
pub const FRESNEL_TX_RADIUS: f64 = 0.72;
/// Receiver ring radius of the first-opus arrangement, m.
pub const FRESNEL_RX_RADIUS: f64 = 0.76;

const ANGLE_EPS: f64 = 1e-9;

const MIN_FREQUENCY_GHZ: f64 = 0.1;
const MAX_FREQUENCY_GHZ: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    TxAngle,
    RxAngle,
    Frequency,
    TotalRe,
    TotalIm,
    IncidentRe,
    IncidentIm,
    /// Column present in the file but not used.
    Ignore,
}

const REQUIRED_ROLES: [ColumnRole; 7] = [
    ColumnRole::TxAngle,
    ColumnRole::RxAngle,
    ColumnRole::Frequency,
    ColumnRole::TotalRe,
    ColumnRole::TotalIm,
    ColumnRole::IncidentRe,
    ColumnRole::IncidentIm,
];

/// How an angle column is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngleConvention {
    Degrees,
    Radians,
    /// 1-based index `i` meaning `origin_deg + (i - 1) * stride_deg`.
    Index { origin_deg: f64, stride_deg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyUnit {
    Hz,
    Mhz,
    Ghz,
}

impl FrequencyUnit {
    fn to_hz(self) -> f64 {
        match self {
            FrequencyUnit::Hz => 1.0,
            FrequencyUnit::Mhz => 1e6,
            FrequencyUnit::Ghz => 1e9,
        }
    }
}

fn default_comment_prefix() -> String {
    "#".to_string()
}

/// Column layout of a multistatic table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    pub columns: Vec<ColumnRole>,
    pub tx_angle: AngleConvention,
    pub rx_angle: AngleConvention,
    /// Receiver angle measured from the transmitter direction.
    #[serde(default)]
    pub rx_relative_to_tx: bool,
    pub frequency_unit: FrequencyUnit,
    #[serde(default = "default_comment_prefix")]
    pub comment_prefix: String,
}

impl ColumnMap {
    /// Preset for the first-opus TM files: transmitter angle, receiver angle
    /// (absolute, degrees), frequency in GHz, then Re/Im of the total and
    /// incident fields.
    pub fn first_opus_tm() -> Self {
        ColumnMap {
            columns: vec![
                ColumnRole::TxAngle,
                ColumnRole::RxAngle,
                ColumnRole::Frequency,
                ColumnRole::TotalRe,
                ColumnRole::TotalIm,
                ColumnRole::IncidentRe,
                ColumnRole::IncidentIm,
            ],
            tx_angle: AngleConvention::Degrees,
            rx_angle: AngleConvention::Degrees,
            rx_relative_to_tx: false,
            frequency_unit: FrequencyUnit::Ghz,
            comment_prefix: default_comment_prefix(),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "first_opus_tm" | "dielTM_dec8f" | "twodielTM_dec8f" | "rectTM_dece" => {
                Some(ColumnMap::first_opus_tm())
            }
            _ => None,
        }
    }

    /// Every required role assigned exactly once.
    pub fn validate(&self) -> Result<()> {
        for role in REQUIRED_ROLES {
            let count = self.columns.iter().filter(|&&r| r == role).count();
            if count != 1 {
                return Err(Error::precondition(format!(
                    "column role {role:?} assigned {count} times, expected exactly once"
                )));
            }
        }
        for conv in [self.tx_angle, self.rx_angle] {
            if let AngleConvention::Index { stride_deg, origin_deg } = conv {
                if !(stride_deg.is_finite() && stride_deg != 0.0 && origin_deg.is_finite()) {
                    return Err(Error::precondition("index angle convention needs a finite nonzero stride"));
                }
            }
        }
        if self.comment_prefix.is_empty() {
            return Err(Error::precondition("comment prefix must not be empty"));
        }
        Ok(())
    }

    fn position(&self, role: ColumnRole) -> usize {
        self.columns.iter().position(|&r| r == role).expect("validated map")
    }
}

/// One measured transmitter/receiver/frequency triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    /// Radians in `[0, 2π)`.
    pub tx_angle: f64,
    /// Radians in `[0, 2π)`, absolute.
    pub rx_angle: f64,
    /// Hz.
    pub frequency: f64,
    pub total: ComplexScalar,
    pub incident: ComplexScalar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistaticRecords {
    pub records: Vec<Record>,
    pub source_name: String,
    /// Set once `total` holds the scattered field (see [`scattered_records`]).
    pub scattered: bool,
}

impl MultistaticRecords {
    /// Distinct frequencies, ascending, in Hz.
    pub fn frequencies(&self) -> Vec<f64> {
        let set: BTreeSet<u64> = self.records.iter().map(|r| r.frequency.to_bits()).collect();
        let mut v: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Serializes back to the table layout described by `map`.
    pub fn to_table(&self, map: &ColumnMap) -> Result<String> {
        map.validate()?;
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", map.comment_prefix, self.source_name);
        for r in &self.records {
            let rx = if map.rx_relative_to_tx {
                wrap_angle(r.rx_angle - r.tx_angle)
            } else {
                r.rx_angle
            };
            let fields: Vec<String> = map
                .columns
                .iter()
                .map(|role| match role {
                    ColumnRole::TxAngle => encode_angle(r.tx_angle, map.tx_angle),
                    ColumnRole::RxAngle => encode_angle(rx, map.rx_angle),
                    ColumnRole::Frequency => (r.frequency / map.frequency_unit.to_hz()).to_string(),
                    ColumnRole::TotalRe => r.total.re.to_string(),
                    ColumnRole::TotalIm => r.total.im.to_string(),
                    ColumnRole::IncidentRe => r.incident.re.to_string(),
                    ColumnRole::IncidentIm => r.incident.im.to_string(),
                    ColumnRole::Ignore => "0".to_string(),
                })
                .collect();
            let _ = writeln!(out, "{}", fields.join(" "));
        }
        Ok(out)
    }
}

fn encode_angle(angle: f64, conv: AngleConvention) -> String {
    match conv {
        AngleConvention::Degrees => angle.to_degrees().to_string(),
        AngleConvention::Radians => angle.to_string(),
        AngleConvention::Index { origin_deg, stride_deg } => {
            let steps = (wrap_angle((angle.to_degrees() - origin_deg).to_radians()).to_degrees() / stride_deg).round();
            let count = (360.0 / stride_deg.abs()).round();
            let steps = if count > 0.0 { steps.rem_euclid(count) } else { steps };
            format!("{}", steps as i64 + 1)
        }
    }
}

fn decode_angle(value: f64, conv: AngleConvention, line: usize, token: &str) -> Result<f64> {
    let rad = match conv {
        AngleConvention::Degrees => value.to_radians(),
        AngleConvention::Radians => value,
        AngleConvention::Index { origin_deg, stride_deg } => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::Parse {
                    line,
                    token: token.to_string(),
                    message: "angle index must be an integer >= 1".into(),
                });
            }
            (origin_deg + (value - 1.0) * stride_deg).to_radians()
        }
    };
    Ok(rad)
}

/// Reads a multistatic table from disk.
pub fn parse_fresnel(path: &Path, map: &ColumnMap) -> Result<MultistaticRecords> {
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let text = String::from_utf8(text).map_err(|e| {
        let offset = e.utf8_error().valid_up_to();
        Error::Parse {
            line: 1 + e.as_bytes()[..offset].iter().filter(|&&b| b == b'\n').count(),
            token: String::new(),
            message: "file is not ASCII text".into(),
        }
    })?;
    parse_fresnel_str(&text, map, &name)
}

/// Parses table text; see [`parse_fresnel`].
pub fn parse_fresnel_str(text: &str, map: &ColumnMap, source_name: &str) -> Result<MultistaticRecords> {
    map.validate()?;
    let idx = |role| map.position(role);
    let (i_tx, i_rx, i_f) = (idx(ColumnRole::TxAngle), idx(ColumnRole::RxAngle), idx(ColumnRole::Frequency));
    let (i_tr, i_ti) = (idx(ColumnRole::TotalRe), idx(ColumnRole::TotalIm));
    let (i_ir, i_ii) = (idx(ColumnRole::IncidentRe), idx(ColumnRole::IncidentIm));
    let unit = map.frequency_unit.to_hz();

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if !raw.is_ascii() {
            return Err(Error::Parse {
                line,
                token: raw.chars().filter(|c| !c.is_ascii()).collect(),
                message: "non-ASCII character".into(),
            });
        }
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with(map.comment_prefix.as_str()) {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != map.columns.len() {
            return Err(Error::Parse {
                line,
                token: trimmed.to_string(),
                message: format!("expected {} columns, found {}", map.columns.len(), tokens.len()),
            });
        }
        let mut values = Vec::with_capacity(tokens.len());
        for tok in &tokens {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line,
                token: tok.to_string(),
                message: "not a number".into(),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    token: tok.to_string(),
                    message: "non-finite value".into(),
                });
            }
            values.push(v);
        }
        let tx = wrap_angle(decode_angle(values[i_tx], map.tx_angle, line, tokens[i_tx])?);
        let mut rx = decode_angle(values[i_rx], map.rx_angle, line, tokens[i_rx])?;
        if map.rx_relative_to_tx {
            rx += tx;
        }
        let rx = wrap_angle(rx);
        let frequency = values[i_f] * unit;
        let ghz = frequency / 1e9;
        if !(MIN_FREQUENCY_GHZ..=MAX_FREQUENCY_GHZ).contains(&ghz) {
            return Err(Error::Unit(format!(
                "line {line}: frequency {ghz} GHz outside [{MIN_FREQUENCY_GHZ}, {MAX_FREQUENCY_GHZ}] GHz; check the frequency unit"
            )));
        }
        if !seen.insert((tx.to_bits(), rx.to_bits(), frequency.to_bits())) {
            return Err(Error::Parse {
                line,
                token: trimmed.to_string(),
                message: "duplicate (transmitter, receiver, frequency) triple".into(),
            });
        }
        records.push(Record {
            tx_angle: tx,
            rx_angle: rx,
            frequency,
            total: ComplexScalar::new(values[i_tr], values[i_ti]),
            incident: ComplexScalar::new(values[i_ir], values[i_ii]),
        });
    }
    Ok(MultistaticRecords {
        records,
        source_name: source_name.to_string(),
        scattered: false,
    })
}

/// Replaces each total field by `total − incident` and zeroes the incident field.
pub fn scattered_records(records: &MultistaticRecords) -> MultistaticRecords {
    MultistaticRecords {
        records: records
            .records
            .iter()
            .map(|r| Record {
                total: r.total - r.incident,
                incident: ComplexScalar::new(0.0, 0.0),
                ..*r
            })
            .collect(),
        source_name: records.source_name.clone(),
        scattered: true,
    }
}

/// Receiver chosen (or not) for one transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageEntry {
    /// 1-based transmitter index in ascending angle order.
    pub tx_index: usize,
    pub tx_angle_deg: f64,
    pub wanted_rx_deg: f64,
    pub matched_rx_deg: Option<f64>,
    pub offset_deg: Option<f64>,
    #[serde(skip)]
    record: Option<usize>,
}

/// Per-transmitter coverage of the bistatic angle `alpha` among receivers
/// within `tol` radians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub alpha_deg: f64,
    pub frequency_ghz: f64,
    pub tolerance_deg: f64,
    pub rx_stride_deg: f64,
    pub entries: Vec<CoverageEntry>,
}

impl CoverageReport {
    pub fn missing(&self) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.matched_rx_deg.is_none())
            .map(|e| e.tx_index)
            .collect()
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn select_frequency(records: &MultistaticRecords, frequency: f64) -> Result<f64> {
    let available = records.frequencies();
    available
        .iter()
        .copied()
        .find(|&f| (f - frequency).abs() <= 1e-9 * frequency.abs())
        .ok_or_else(|| Error::FrequencyUnavailable {
            requested_ghz: frequency / 1e9,
            available_ghz: available.iter().map(|f| f / 1e9).collect(),
        })
}

/// Smallest angular gap between distinct receiver angles. Gaps below
/// `ANGLE_EPS`, including across 0 = 2π, count as the same angle.
fn receiver_stride(angles: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = angles.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup_by(|a, b| (*a - *b).abs() < ANGLE_EPS);
    let mut stride = TAU;
    if sorted.len() < 2 {
        return stride;
    }
    let wrap = TAU - (sorted[sorted.len() - 1] - sorted[0]);
    for gap in sorted.windows(2).map(|w| w[1] - w[0]).chain(std::iter::once(wrap)) {
        if gap >= ANGLE_EPS {
            stride = stride.min(gap);
        }
    }
    stride
}

/// Matches every transmitter with the receiver nearest to `tx + alpha`.
pub fn coverage(
    records: &MultistaticRecords,
    alpha: f64,
    frequency: f64,
    tol: f64,
) -> Result<CoverageReport> {
    if !records.scattered {
        return Err(Error::precondition(
            "extraction needs scattered fields; apply scattered_records first",
        ));
    }
    let freq = select_frequency(records, frequency)?;
    let at_freq: Vec<(usize, &Record)> = records
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.frequency == freq)
        .collect();
    let stride = receiver_stride(&at_freq.iter().map(|(_, r)| r.rx_angle).collect::<Vec<_>>());
    if !(tol >= 0.0 && tol < 0.5 * stride) {
        return Err(Error::precondition(format!(
            "tolerance {:.4} deg must be below half the receiver stride ({:.4} deg)",
            tol.to_degrees(),
            0.5 * stride.to_degrees()
        )));
    }
    let alpha = wrap_angle(alpha);
    let mut tx_angles: Vec<f64> = at_freq.iter().map(|(_, r)| r.tx_angle).collect();
    tx_angles.sort_by(f64::total_cmp);
    tx_angles.dedup();

    let entries = tx_angles
        .iter()
        .enumerate()
        .map(|(i, &tx)| {
            let wanted = wrap_angle(tx + alpha);
            let best = at_freq
                .iter()
                .filter(|(_, r)| r.tx_angle == tx)
                .map(|&(j, r)| (j, r.rx_angle, circular_distance(r.rx_angle, wanted)))
                .filter(|&(_, _, d)| d <= tol)
                .min_by(|a, b| a.2.total_cmp(&b.2).then(a.1.total_cmp(&b.1)));
            CoverageEntry {
                tx_index: i + 1,
                tx_angle_deg: tx.to_degrees(),
                wanted_rx_deg: wanted.to_degrees(),
                matched_rx_deg: best.map(|b| b.1.to_degrees()),
                offset_deg: best.map(|b| b.2.to_degrees()),
                record: best.map(|b| b.0),
            }
        })
        .collect();
    Ok(CoverageReport {
        alpha_deg: alpha.to_degrees(),
        frequency_ghz: freq / 1e9,
        tolerance_deg: tol.to_degrees(),
        rx_stride_deg: stride.to_degrees(),
        entries,
    })
}

/// Fixed-bistatic-angle dataset at `frequency`, positions rebuilt on rings
/// of radii `(tx_radius, rx_radius)`.
pub fn extract_bistatic(
    records: &MultistaticRecords,
    alpha: f64,
    frequency: f64,
    tol: f64,
    radii: (f64, f64),
) -> Result<ScatteredDataset> {
    let report = coverage(records, alpha, frequency, tol)?;
    let missing = report.missing();
    if !missing.is_empty() {
        return Err(Error::Coverage {
            alpha_deg: report.alpha_deg,
            missing,
        });
    }
    let (tx_radius, rx_radius) = radii;
    let samples: Vec<Sample> = report
        .entries
        .iter()
        .map(|e| {
            let r = &records.records[e.record.expect("covered")];
            Sample {
                tx: Point2::polar(tx_radius, r.tx_angle),
                rx: Point2::polar(rx_radius, r.rx_angle),
                u_scat: r.total,
            }
        })
        .collect();
    let config = MeasurementConfig::new(
        samples.len(),
        wrap_angle(alpha),
        tx_radius,
        rx_radius,
        report.frequency_ghz * 1e9,
    )?;
    Ok(ScatteredDataset {
        config,
        samples,
        provenance: Provenance::Fresnel,
    })
}

/// Angular half-width of the sector with no receivers around each source,
/// useful when choosing which bistatic angles are physically available.
pub fn blind_sector_half_width(records: &MultistaticRecords, frequency: f64) -> Result<f64> {
    let freq = select_frequency(records, frequency)?;
    let mut widest: f64 = 0.0;
    let mut by_tx: Vec<(f64, f64)> = records
        .records
        .iter()
        .filter(|r| r.frequency == freq)
        .map(|r| (r.tx_angle, circular_distance(r.rx_angle, r.tx_angle)))
        .collect();
    by_tx.sort_by(|a, b| a.0.total_cmp(&b.0));
    for chunk in by_tx.chunk_by(|a, b| a.0 == b.0) {
        let nearest = chunk.iter().map(|c| c.1).fold(PI, f64::min);
        widest = widest.max(nearest);
    }
    Ok(widest)
}

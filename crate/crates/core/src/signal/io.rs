//! Record persistence: headered CSV with a JSON sidecar, and a raw
//! little-endian float32 payload with a JSON header.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EcgRecord, Lead, SignalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Csv,
    Rawbin,
}

impl RecordFormat {
    /// Guess the format from a path: `.csv` is CSV, `.bin` or `.meta.json`
    /// is rawbin.
    pub fn infer(path: &Path) -> Option<Self> {
        let name = path.file_name()?.to_str()?.to_ascii_lowercase();
        if name.ends_with(".csv") {
            Some(RecordFormat::Csv)
        } else if name.ends_with(".bin") || name.ends_with(".meta.json") {
            Some(RecordFormat::Rawbin)
        } else {
            None
        }
    }
}

impl std::str::FromStr for RecordFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(RecordFormat::Csv),
            "rawbin" | "bin" => Ok(RecordFormat::Rawbin),
            other => Err(format!("unknown record format `{other}`")),
        }
    }
}

/// Amplitude units a sidecar may declare. Everything is converted to mV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AmplitudeUnit {
    #[default]
    #[serde(rename = "mV")]
    Millivolt,
    #[serde(rename = "uV")]
    Microvolt,
    #[serde(rename = "V")]
    Volt,
}

impl AmplitudeUnit {
    fn to_mv(self) -> f32 {
        match self {
            AmplitudeUnit::Millivolt => 1.0,
            AmplitudeUnit::Microvolt => 1e-3,
            AmplitudeUnit::Volt => 1e3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CsvSidecar {
    record_id: String,
    sampling_rate_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    units: Option<AmplitudeUnit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawbinHeader {
    record_id: String,
    sampling_rate_hz: f64,
    leads: Vec<String>,
    n_samples: usize,
    dtype: String,
    layout: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    units: Option<AmplitudeUnit>,
}

/// `foo.csv`, `foo.bin` and `foo.meta.json` all share the stem `foo`.
fn stem_path(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .to_string();
    let stem = name
        .strip_suffix(".meta.json")
        .or_else(|| name.strip_suffix(".csv"))
        .or_else(|| name.strip_suffix(".bin"))
        .unwrap_or(&name)
        .to_string();
    path.with_file_name(stem)
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    with_suffix(&stem_path(path), ".meta.json")
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, SignalError> {
    let text = fs::read_to_string(path).map_err(|e| SignalError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| SignalError::MalformedHeader(format!("{}: {e}", path.display())))
}

pub fn load_record(path: &Path, format: RecordFormat) -> Result<EcgRecord, SignalError> {
    match format {
        RecordFormat::Csv => load_csv(path),
        RecordFormat::Rawbin => load_rawbin(path),
    }
}

pub fn save_record(rec: &EcgRecord, path: &Path, format: RecordFormat) -> Result<(), SignalError> {
    match format {
        RecordFormat::Csv => save_csv(rec, path),
        RecordFormat::Rawbin => save_rawbin(rec, path),
    }
}

fn parse_lead_header(names: &[String]) -> Result<Vec<Lead>, SignalError> {
    let mut leads = Vec::with_capacity(names.len());
    for name in names {
        let lead: Lead = name.parse().map_err(SignalError::UnknownLead)?;
        if leads.contains(&lead) {
            return Err(SignalError::MalformedHeader(format!("duplicate lead `{name}`")));
        }
        leads.push(lead);
    }
    if leads.is_empty() {
        return Err(SignalError::MalformedHeader("no lead columns".into()));
    }
    Ok(leads)
}

fn load_csv(path: &Path) -> Result<EcgRecord, SignalError> {
    let meta: CsvSidecar = read_json(&sidecar_path(path))?;
    let scale = meta.units.unwrap_or_default().to_mv();

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| SignalError::Csv(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| SignalError::MalformedHeader(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let leads = parse_lead_header(&header)?;

    let mut columns: Vec<Vec<f32>> = vec![Vec::new(); leads.len()];
    for (row_idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| SignalError::Csv(e.to_string()))?;
        if row.len() != leads.len() {
            return Err(SignalError::RaggedRow {
                row: row_idx + 1,
                expected: leads.len(),
                found: row.len(),
            });
        }
        for (col, field) in row.iter().enumerate() {
            let v: f32 = field.parse().map_err(|_| {
                SignalError::Csv(format!("row {}: cannot parse `{field}` as a number", row_idx + 1))
            })?;
            if !v.is_finite() {
                return Err(SignalError::NonFinite { lead: leads[col], index: row_idx });
            }
            columns[col].push(v * scale);
        }
    }
    let map: BTreeMap<Lead, Vec<f32>> = leads.into_iter().zip(columns).collect();
    EcgRecord::new(meta.record_id, meta.sampling_rate_hz, map)
}

fn save_csv(rec: &EcgRecord, path: &Path) -> Result<(), SignalError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| SignalError::Csv(e.to_string()))?;
    let leads: Vec<Lead> = rec.lead_names().collect();
    writer
        .write_record(leads.iter().map(|l| l.name()))
        .map_err(|e| SignalError::Csv(e.to_string()))?;
    for i in 0..rec.n_samples() {
        let row = leads.iter().map(|l| format!("{:.6}", rec.lead(*l).unwrap()[i]));
        writer.write_record(row).map_err(|e| SignalError::Csv(e.to_string()))?;
    }
    writer.flush().map_err(|e| SignalError::io(path, e))?;

    let meta = CsvSidecar {
        record_id: rec.record_id().to_string(),
        sampling_rate_hz: rec.sampling_rate_hz(),
        units: Some(AmplitudeUnit::Millivolt),
    };
    let sidecar = sidecar_path(path);
    fs::write(&sidecar, serde_json::to_string_pretty(&meta).expect("sidecar serializes"))
        .map_err(|e| SignalError::io(&sidecar, e))
}

fn load_rawbin(path: &Path) -> Result<EcgRecord, SignalError> {
    let stem = stem_path(path);
    let header: RawbinHeader = read_json(&with_suffix(&stem, ".meta.json"))?;
    if header.dtype != "f32le" {
        return Err(SignalError::MalformedHeader(format!("unsupported dtype `{}`", header.dtype)));
    }
    if header.layout != "lead-major" {
        return Err(SignalError::MalformedHeader(format!("unsupported layout `{}`", header.layout)));
    }
    let leads = parse_lead_header(&header.leads)?;
    let bin_path = with_suffix(&stem, ".bin");
    let bytes = fs::read(&bin_path).map_err(|e| SignalError::io(&bin_path, e))?;
    let expected = leads.len() * header.n_samples * 4;
    if bytes.len() != expected {
        return Err(SignalError::PayloadSize { expected, found: bytes.len() });
    }
    let scale = header.units.unwrap_or_default().to_mv();
    let mut map = BTreeMap::new();
    for (i, lead) in leads.into_iter().enumerate() {
        let chunk = &bytes[i * header.n_samples * 4..(i + 1) * header.n_samples * 4];
        let samples: Vec<f32> = chunk
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) * scale)
            .collect();
        map.insert(lead, samples);
    }
    EcgRecord::new(header.record_id, header.sampling_rate_hz, map)
}

fn save_rawbin(rec: &EcgRecord, path: &Path) -> Result<(), SignalError> {
    let stem = stem_path(path);
    let header = RawbinHeader {
        record_id: rec.record_id().to_string(),
        sampling_rate_hz: rec.sampling_rate_hz(),
        leads: rec.lead_names().map(|l| l.name().to_string()).collect(),
        n_samples: rec.n_samples(),
        dtype: "f32le".into(),
        layout: "lead-major".into(),
        units: None,
    };
    let mut payload = Vec::with_capacity(rec.leads().len() * rec.n_samples() * 4);
    for samples in rec.leads().values() {
        for v in samples {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let bin_path = with_suffix(&stem, ".bin");
    fs::write(&bin_path, payload).map_err(|e| SignalError::io(&bin_path, e))?;
    let meta_path = with_suffix(&stem, ".meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&header).expect("header serializes"))
        .map_err(|e| SignalError::io(&meta_path, e))
}

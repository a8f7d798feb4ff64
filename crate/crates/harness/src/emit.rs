//! Writing reports to disk as JSON, CSV and SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::report::{GroupAggregate, RunReport, TraceEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// One row per (model_tag, task) group.
pub fn report_csv(report: &RunReport) -> Result<String, EmitError> {
    let ks = &report.config.ks;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "model_tag",
        "task",
        "n_rows",
        "n_failed",
        "global_accuracy",
        "global_accuracy_macro",
        "acc_at_thresh_50",
        "acc_at_thresh_100",
    ]
    .map(String::from)
    .to_vec();
    header.extend(ks.iter().map(|k| format!("precision_at_{k}")));
    header.push("final_accuracy".into());
    w.write_record(&header)?;
    for g in &report.aggregates.groups {
        let mut row = vec![
            g.model_tag.clone(),
            g.task.clone(),
            g.n_rows.to_string(),
            g.n_failed.to_string(),
            cell(g.global_accuracy.value),
            cell(g.global_accuracy_macro.value),
            cell(g.acc_at_thresh_50.value),
            cell(g.acc_at_thresh_100.value),
        ];
        row.extend(ks.iter().map(|k| cell(g.precision_at.get(k).copied().flatten())));
        row.push(cell(g.final_accuracy.value));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| EmitError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Per-model aggregates pooled over tasks.
pub fn by_model(report: &RunReport) -> Vec<GroupAggregate> {
    let mut m: BTreeMap<&str, Vec<&TraceEntry>> = BTreeMap::new();
    for t in &report.traces {
        m.entry(t.model_tag.as_str()).or_default().push(t);
    }
    m.into_iter().map(|(tag, ts)| GroupAggregate::compute(tag, "*", &ts, &report.config.ks)).collect()
}

/// Grouped bars of Acc@Thresh100 and P@5, one group per model tag.
pub fn report_svg(report: &RunReport) -> String {
    let models = by_model(report);
    let series: [(&str, &str, fn(&GroupAggregate) -> Option<f64>); 2] = [
        ("Acc@Thresh100", "#4c72b0", |g| g.acc_at_thresh_100.value),
        ("P@5", "#dd8452", |g| g.precision_at.get(&5).copied().flatten()),
    ];
    let (bar_w, gap, left, top, plot_h) = (28.0, 24.0, 50.0, 30.0, 200.0);
    let group_w = bar_w * series.len() as f64 + gap;
    let width = left + group_w * models.len().max(1) as f64 + 20.0;
    let height = top + plot_h + 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let base = top + plot_h;
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{base}" x2="{:.1}" y2="{base}" stroke="black"/>"#, width - 10.0);
    for tick in 0..=4 {
        let v = f64::from(tick) / 4.0;
        let y = base - v * plot_h;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#, left - 4.0, y + 4.0);
    }
    for (i, (name, color, _)) in series.iter().enumerate() {
        let x = left + 10.0 + i as f64 * 110.0;
        let _ = writeln!(s, r#"<rect x="{x:.1}" y="8" width="10" height="10" fill="{color}"/>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="17">{name}</text>"#, x + 14.0);
    }
    for (gi, g) in models.iter().enumerate() {
        let x0 = left + gap / 2.0 + gi as f64 * group_w;
        let _ = writeln!(s, r#"<g class="model" data-model="{}">"#, escape(&g.model_tag));
        for (si, (name, color, get)) in series.iter().enumerate() {
            let v = get(g).unwrap_or(0.0).clamp(0.0, 1.0);
            let h = v * plot_h;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{bar_w}" height="{h:.1}" fill="{color}"><title>{} {name}: {}</title></rect>"#,
                x0 + si as f64 * bar_w,
                base - h,
                escape(&g.model_tag),
                get(g).map_or("undefined".to_string(), |v| format!("{v:.3}"))
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x0 + bar_w * series.len() as f64 / 2.0,
            base + 16.0,
            escape(&g.model_tag)
        );
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, EmitError> {
    std::fs::write(&path, text).map_err(|source| EmitError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Write `report.{json,csv,svg}` into `dir`, creating it if needed.
pub fn emit_report(report: &RunReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, EmitError> {
    std::fs::create_dir_all(dir).map_err(|source| EmitError::Io { path: dir.to_path_buf(), source })?;
    let mut out = Vec::new();
    for f in formats {
        out.push(match f {
            Format::Json => write(dir.join("report.json"), &report.to_json())?,
            Format::Csv => write(dir.join("report.csv"), &report_csv(report)?)?,
            Format::Svg => write(dir.join("report.svg"), &report_svg(report))?,
        });
    }
    Ok(out)
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{MultiOmicsDataset, SurvivalLabels};
use crate::error::{Error, Result};
use crate::pipeline::CvReport;
use crate::survival::{km_estimate, logrank_test, KmCurve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmGroup {
    pub label: String,
    pub size: usize,
    pub curve: KmCurve,
    /// Times of censored samples, ascending, for tick marks.
    pub censored_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmExport {
    /// High-risk group first.
    pub groups: Vec<KmGroup>,
    pub logrank_p: f64,
}

fn group(label: &str, labels: &SurvivalLabels) -> KmGroup {
    let mut censored_times: Vec<f64> = labels.time().iter().zip(labels.event()).filter(|(_, &e)| !e).map(|(&t, _)| t).collect();
    censored_times.sort_by(f64::total_cmp);
    KmGroup { label: label.to_owned(), size: labels.len(), curve: km_estimate(labels), censored_times }
}

/// Curves and logrank test for a two-way split; `high_risk[i]` marks
/// sample `i` as high risk.
pub fn km_export(labels: &SurvivalLabels, high_risk: &[bool]) -> Result<KmExport> {
    let test = logrank_test(labels, high_risk)?;
    let pick = |want: bool| -> Vec<usize> { (0..labels.len()).filter(|&i| high_risk[i] == want).collect() };
    Ok(KmExport {
        groups: vec![group("high_risk", &labels.select(&pick(true))), group("low_risk", &labels.select(&pick(false)))],
        logrank_p: test.p_value,
    })
}

/// Pools the test-fold cluster labels of one repeat (each sample is tested
/// exactly once per repeat) and builds the export.
pub fn km_export_from_report(report: &CvReport, dataset: &MultiOmicsDataset, repeat: usize) -> Result<KmExport> {
    let mut samples = Vec::new();
    let mut high = Vec::new();
    for f in report.folds.iter().filter(|f| f.repeat_index == repeat && f.succeeded()) {
        if f.cluster_labels.len() != f.test_indices.len() || f.test_indices.is_empty() {
            return Err(Error::InvalidInput(format!("fold ({}, {}) has no cluster labels", f.repeat_index, f.fold_index)));
        }
        for (&i, &l) in f.test_indices.iter().zip(&f.cluster_labels) {
            if i >= dataset.n_samples() {
                return Err(Error::IndexOutOfRange { index: i, width: dataset.n_samples() });
            }
            samples.push(i);
            high.push(l == 1);
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidInput(format!("report has no cluster labels for repeat {repeat}")));
    }
    km_export(&dataset.survival().select(&samples), &high)
}

impl KmExport {
    /// Step-curve table with one row per group and event time, plus a
    /// starting row at time 0.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["group", "time", "survival", "at_risk", "events"])?;
        for g in &self.groups {
            w.write_record([g.label.as_str(), "0", "1", &g.size.to_string(), "0"])?;
            for i in 0..g.curve.event_times.len() {
                w.write_record([
                    g.label.clone(),
                    g.curve.event_times[i].to_string(),
                    g.curve.survival[i].to_string(),
                    g.curve.at_risk[i].to_string(),
                    g.curve.events[i].to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 2] = ["#c0392b", "#2471a3"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Self-contained SVG with one step line per group, censor ticks and the
/// logrank p-value in the title.
pub fn km_svg(export: &KmExport) -> String {
    let t_max =
        export.groups.iter().flat_map(|g| g.curve.event_times.iter().chain(&g.censored_times)).copied().fold(0.0, f64::max);
    let t_max = if t_max > 0.0 { t_max } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |t: f64| LEFT + plot_w * t / t_max;
    let y = |s: f64| TOP + plot_h * (1.0 - s);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">Kaplan-Meier survival, logrank p = {:.3e}</text>"#,
        WIDTH / 2.0,
        export.logrank_p
    );
    // axes
    let _ = writeln!(
        out,
        r#"<path d="M {LEFT:.2} {TOP:.2} V {:.2} H {:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    for k in 0..=4 {
        let s = k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{s:.2}</text>"#,
            LEFT - 6.0,
            y(s) + 4.0
        );
        let t = t_max * s;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{t:.0}</text>"#,
            x(t),
            TOP + plot_h + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">time</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.2})">survival</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (gi, g) in export.groups.iter().enumerate() {
        let color = COLORS[gi % COLORS.len()];
        let mut d = format!("M {:.2} {:.2}", x(0.0), y(1.0));
        for (t, s) in g.curve.event_times.iter().zip(&g.curve.survival) {
            let _ = write!(d, " H {:.2} V {:.2}", x(*t), y(*s));
        }
        let _ = write!(d, " H {:.2}", x(t_max));
        let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="2"/>"#);
        for &t in &g.censored_times {
            let yy = y(g.curve.survival_at(t));
            let _ = writeln!(
                out,
                r#"<path d="M {:.2} {:.2} V {:.2}" stroke="{color}" stroke-width="1.5"/>"#,
                x(t),
                yy - 4.0,
                yy + 4.0
            );
        }
        let ly = TOP + 14.0 + 18.0 * gi as f64;
        let _ = writeln!(
            out,
            r#"<path d="M {:.2} {ly:.2} H {:.2}" stroke="{color}" stroke-width="2"/>"#,
            WIDTH - RIGHT - 150.0,
            WIDTH - RIGHT - 125.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{} (n = {})</text>"#,
            WIDTH - RIGHT - 118.0,
            ly + 4.0,
            escape(&g.label),
            g.size
        );
    }
    out.push_str("</svg>\n");
    out
}

//! Self-contained SVG charts of replication reports:
//!
//! - `efficiency-{dist}-a{alpha}.svg`: summed-MSE efficiency against `n`, one line per method;
//! - `bias-variance-{cell}.svg`: stacked bias² / variance bars per method and endpoint;
//! - `coverage-{cell}.svg`: histograms of per-replicate true coverage.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::ReplicationReport;
use crate::samples::Method;
use crate::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#66429b", "#555555"];
const HISTOGRAM_BINS: usize = 20;

/// Padded range covering every value and every entry of `include`.
pub fn axis_range(values: &[f64], include: &[f64]) -> (f64, f64) {
    let finite = values.iter().chain(include).copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let pad = if lo == 0.0 { 0.5 } else { 0.1 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Plot area with linear data-to-pixel maps.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Frame {
    pub fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    pub fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }

    pub fn contains_px(&self, (x, y): (f64, f64)) -> bool {
        let tol = 1e-9;
        x >= MARGIN_LEFT - tol && x <= WIDTH - MARGIN_RIGHT + tol && y >= MARGIN_TOP - tol && y <= HEIGHT - MARGIN_BOTTOM + tol
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = write!(body, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = write!(
            body,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        Self { body }
    }

    fn line(&mut self, (x1, y1): (f64, f64), (x2, y2): (f64, f64), stroke: &str, dash: bool) {
        let dash = if dash { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = write!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"{dash}/>"#
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = write!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }

    fn circle(&mut self, (x, y): (f64, f64), fill: &str) {
        let _ = write!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{fill}"/>"#);
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = write!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            w.max(0.0),
            h.max(0.0)
        );
    }

    fn text(&mut self, (x, y): (f64, f64), anchor: &str, s: &str) {
        let _ = write!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        );
    }

    fn axes(&mut self, frame: &Frame, xlabel: &str, ylabel: &str, xticks: bool) {
        let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
        self.line((x0, y0), (x1, y0), "black", false);
        self.line((x0, y0), (x0, y1), "black", false);
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let yv = frame.y.0 + t * (frame.y.1 - frame.y.0);
            let py = frame.py(yv);
            self.line((x0 - 4.0, py), (x0, py), "black", false);
            self.text((x0 - 6.0, py + 4.0), "end", &tick_label(yv));
            if xticks {
                let xv = frame.x.0 + t * (frame.x.1 - frame.x.0);
                let px = frame.px(xv);
                self.line((px, y0), (px, y0 + 4.0), "black", false);
                self.text((px, y0 + 17.0), "middle", &tick_label(xv));
            }
        }
        self.text(((x0 + x1) / 2.0, HEIGHT - 12.0), "middle", xlabel);
        let _ = write!(
            self.body,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }

    fn legend(&mut self, entries: &[(String, &str)]) {
        let x = WIDTH - MARGIN_RIGHT + 14.0;
        for (k, (label, color)) in entries.iter().enumerate() {
            let y = MARGIN_TOP + 10.0 + 18.0 * k as f64;
            self.rect(x, y - 9.0, 12.0, 12.0, color);
            self.text((x + 18.0, y + 1.0), "start", label);
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn color(k: usize) -> &'static str {
    PALETTE[k % PALETTE.len()]
}

/// Summed-MSE efficiency against `n` for one `(dist, alpha)` group. `None`
/// if no report in the group has the empirical shortest reference.
pub fn efficiency_chart(group: &[&ReplicationReport]) -> Option<String> {
    let mut series: BTreeMap<&'static str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in group {
        if r.method(Method::EmpiricalShortest).is_none() {
            continue;
        }
        for m in r.methods.iter().filter(|m| m.method != Method::EmpiricalShortest) {
            if m.both.efficiency.is_finite() {
                series.entry(m.method.label()).or_default().push((r.n as f64, m.both.efficiency));
            }
        }
    }
    if series.is_empty() {
        return None;
    }
    let xs: Vec<f64> = series.values().flatten().map(|p| p.0).collect();
    let ys: Vec<f64> = series.values().flatten().map(|p| p.1).collect();
    let frame = Frame {
        x: axis_range(&xs, &[]),
        y: axis_range(&ys, &[1.0]),
    };
    let first = group[0];
    let mut svg = Svg::new(&format!("Efficiency vs n: {}, alpha = {}", first.dist, first.alpha));
    svg.axes(&frame, "n", "MSE(shortest) / MSE(method)", true);
    svg.line((frame.px(frame.x.0), frame.py(1.0)), (frame.px(frame.x.1), frame.py(1.0)), "#999999", true);
    let mut legend = Vec::new();
    for (k, (label, points)) in series.iter_mut().enumerate() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let px: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (frame.px(x), frame.py(y))).collect();
        svg.polyline(&px, color(k));
        for p in &px {
            svg.circle(*p, color(k));
        }
        legend.push((label.to_string(), color(k)));
    }
    svg.legend(&legend);
    Some(svg.finish())
}

pub fn bias_variance_chart(report: &ReplicationReport) -> String {
    let bars: Vec<(String, f64, f64)> = report
        .methods
        .iter()
        .flat_map(|m| {
            [("L", &m.lower), ("U", &m.upper)]
                .map(|(tag, s)| (format!("{} {tag}", m.method.label()), s.bias * s.bias, s.variance))
        })
        .collect();
    let tops: Vec<f64> = bars.iter().map(|b| b.1 + b.2).collect();
    let frame = Frame {
        x: (0.0, bars.len() as f64),
        y: (0.0, axis_range(&tops, &[0.0]).1),
    };
    let mut svg = Svg::new(&format!("Bias-variance decomposition: {}", report.cell_id));
    svg.axes(&frame, "method / endpoint", "squared error", false);
    for (k, (label, b2, var)) in bars.iter().enumerate() {
        let x = frame.px(k as f64 + 0.15);
        let w = frame.px(k as f64 + 0.85) - x;
        svg.rect(x, frame.py(*b2), w, frame.py(0.0) - frame.py(*b2), color(0));
        svg.rect(x, frame.py(b2 + var), w, frame.py(*b2) - frame.py(b2 + var), color(1));
        svg.text((frame.px(k as f64 + 0.5), HEIGHT - MARGIN_BOTTOM + 15.0), "middle", label);
    }
    svg.legend(&[("bias²".to_string(), color(0)), ("variance".to_string(), color(1))]);
    svg.finish()
}

/// Bin counts of `values` over `range` with `bins` equal bins.
pub fn histogram(values: &[f64], range: (f64, f64), bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    let width = (range.1 - range.0) / bins as f64;
    for &v in values {
        let k = (((v - range.0) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
}

pub fn coverage_chart(report: &ReplicationReport) -> String {
    let all: Vec<f64> = report.methods.iter().flat_map(|m| m.coverages.iter().copied()).collect();
    let nominal = 1.0 - report.alpha;
    let xr = axis_range(&all, &[nominal]);
    let hists: Vec<Vec<usize>> = report
        .methods
        .iter()
        .map(|m| histogram(&m.coverages, xr, HISTOGRAM_BINS))
        .collect();
    let max_count = hists.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let frame = Frame {
        x: xr,
        y: (0.0, max_count * 1.05),
    };
    let mut svg = Svg::new(&format!("Coverage: {}", report.cell_id));
    svg.axes(&frame, "true coverage F(u) - F(l)", "replicates", true);
    let width = (xr.1 - xr.0) / HISTOGRAM_BINS as f64;
    let mut legend = Vec::new();
    for (k, (m, counts)) in report.methods.iter().zip(&hists).enumerate() {
        let mut pts = vec![(frame.px(xr.0), frame.py(0.0))];
        for (b, &c) in counts.iter().enumerate() {
            let (l, r) = (xr.0 + b as f64 * width, xr.0 + (b + 1) as f64 * width);
            pts.push((frame.px(l), frame.py(c as f64)));
            pts.push((frame.px(r), frame.py(c as f64)));
        }
        pts.push((frame.px(xr.1), frame.py(0.0)));
        svg.polyline(&pts, color(k));
        legend.push((m.method.label().to_string(), color(k)));
    }
    svg.line((frame.px(nominal), frame.py(0.0)), (frame.px(nominal), frame.py(frame.y.1)), "#999999", true);
    svg.legend(&legend);
    svg.finish()
}

/// Writes all charts for `reports` into `dir` and returns their paths.
/// An empty report set writes nothing.
pub fn emit_plots(reports: &[ReplicationReport], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if reports.is_empty() {
        return Ok(written);
    }
    fs::create_dir_all(dir)?;
    let mut groups: BTreeMap<(String, String), Vec<&ReplicationReport>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.dist.clone(), r.alpha.to_string())).or_default().push(r);
    }
    for ((dist, alpha), group) in &groups {
        if let Some(svg) = efficiency_chart(group) {
            let path = dir.join(format!("efficiency-{dist}-a{alpha}.svg"));
            fs::write(&path, svg)?;
            written.push(path);
        }
    }
    for r in reports {
        for (kind, svg) in [("bias-variance", bias_variance_chart(r)), ("coverage", coverage_chart(r))] {
            let path = dir.join(format!("{kind}-{}.svg", r.cell_id));
            fs::write(&path, svg)?;
            written.push(path);
        }
    }
    Ok(written)
}

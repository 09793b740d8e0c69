//! Self-contained SVG plots of the lab's reports.

use std::fmt::Write as _;
use std::str::FromStr;

use piezo_lab_core::spectral::fit_power_law;
use piezo_lab_core::verification::decay_fit_series;
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::output::read_csv;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    EnergyDecayLoglog,
    SpectrumScatter,
    ResolventSweep,
    AbscissaTrend,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [
        PlotKind::EnergyDecayLoglog,
        PlotKind::SpectrumScatter,
        PlotKind::ResolventSweep,
        PlotKind::AbscissaTrend,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PlotKind::EnergyDecayLoglog => "energy_decay_loglog",
            PlotKind::SpectrumScatter => "spectrum_scatter",
            PlotKind::ResolventSweep => "resolvent_sweep",
            PlotKind::AbscissaTrend => "abscissa_trend",
        }
    }
}

impl FromStr for PlotKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = PlotKind::ALL.iter().map(|k| k.name()).collect();
                CliError::Input(format!(
                    "unknown plot kind {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return None;
        }
        if log {
            let (a, b) = (lo.log10().floor(), hi.log10().ceil());
            let b = if b <= a { a + 1.0 } else { b };
            Some(Axis {
                lo: 10f64.powf(a),
                hi: 10f64.powf(b),
                log,
            })
        } else {
            let pad = if hi > lo {
                0.05 * (hi - lo)
            } else {
                lo.abs().max(1.0) * 0.5
            };
            Some(Axis {
                lo: lo - pad,
                hi: hi + pad,
                log,
            })
        }
    }

    fn unit(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (
                self.lo.log10().round() as i32,
                self.hi.log10().round() as i32,
            );
            let step = ((b - a) / 8).max(1);
            (a..=b)
                .step_by(step as usize)
                .map(|e| 10f64.powi(e))
                .collect()
        } else {
            let raw = (self.hi - self.lo) / 6.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .into_iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let start = (self.lo / step).ceil() as i64;
            let end = (self.hi / step).floor() as i64;
            (start..=end).map(|k| k as f64 * step).collect()
        }
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

struct Canvas {
    x: Axis,
    y: Axis,
    body: String,
}

impl Canvas {
    fn new(x: Axis, y: Axis, title: &str, xlabel: &str, ylabel: &str) -> Self {
        let mut c = Canvas {
            x,
            y,
            body: String::new(),
        };
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let _ = writeln!(
            c.body,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for t in x.ticks() {
            let px = c.px(t);
            let _ = writeln!(
                c.body,
                r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#ddd"/><text x="{px:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"##,
                H - BOTTOM,
                H - BOTTOM + 18.0,
                label(t)
            );
        }
        for t in y.ticks() {
            let py = c.py(t);
            let _ = writeln!(
                c.body,
                r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"##,
                W - RIGHT,
                LEFT - 6.0,
                py + 4.0,
                label(t)
            );
        }
        let _ = writeln!(
            c.body,
            r#"<text x="{:.2}" y="24" font-size="16" text-anchor="middle">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        let _ = writeln!(
            c.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 16.0,
            escape(xlabel)
        );
        let _ = writeln!(
            c.body,
            r#"<text x="18" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(ylabel)
        );
        c
    }

    fn px(&self, v: f64) -> f64 {
        LEFT + self.x.unit(v) * (W - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        H - BOTTOM - self.y.unit(v) * (H - TOP - BOTTOM)
    }

    fn visible(&self, x: f64, y: f64) -> bool {
        let ok = |a: &Axis, v: f64| v.is_finite() && (!a.log || v > 0.0);
        ok(&self.x, x) && ok(&self.y, y)
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, dash: Option<&str>) {
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| self.visible(*x, *y))
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        if coords.len() < 2 {
            return;
        }
        let dash = dash
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"{dash}/>"#,
            coords.join(" ")
        );
    }

    fn points(&mut self, pts: &[(f64, f64)], fill: &str, r: f64) {
        for &(x, y) in pts {
            if self.visible(x, y) {
                let _ = writeln!(
                    self.body,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{fill}"/>"#,
                    self.px(x),
                    self.py(y)
                );
            }
        }
    }

    fn note(&mut self, line: usize, text: &str, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" fill="{fill}">{}</text>"#,
            LEFT + 12.0,
            TOP + 20.0 + 18.0 * line as f64,
            escape(text)
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn empty() -> CliError {
    CliError::Input("empty report: nothing to plot".into())
}

fn floats(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(Value::as_f64).collect()
}

fn pairs(v: &Value) -> Option<Vec<(f64, f64)>> {
    v.as_array()?
        .iter()
        .map(|p| {
            let a = floats(p)?;
            (a.len() == 2).then(|| (a[0], a[1]))
        })
        .collect()
}

/// Parses a report written by one of the subcommands: JSON, or CSV with a
/// metadata line.
enum Report {
    Json(Value),
    Csv {
        meta: Option<Value>,
        header: Vec<String>,
        rows: Vec<Vec<f64>>,
    },
}

fn parse_report(text: &str) -> CliResult<Report> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        serde_json::from_str(trimmed)
            .map(Report::Json)
            .map_err(|e| CliError::Input(format!("malformed JSON report: {e}")))
    } else {
        let (meta, header, rows) = read_csv(text).map_err(CliError::Input)?;
        Ok(Report::Csv { meta, header, rows })
    }
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> CliResult<Vec<f64>> {
    let i = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Input(format!("CSV has no column {name:?}")))?;
    Ok(rows.iter().map(|r| r[i]).collect())
}

pub fn render(kind: PlotKind, report_text: &str) -> CliResult<String> {
    let report = parse_report(report_text)?;
    match kind {
        PlotKind::EnergyDecayLoglog => energy_decay(report),
        PlotKind::SpectrumScatter => spectrum_scatter(report),
        PlotKind::ResolventSweep => resolvent(report),
        PlotKind::AbscissaTrend => abscissa(report),
    }
}

fn energy_decay(report: Report) -> CliResult<String> {
    let (times, energies, window) = match report {
        Report::Csv { meta, header, rows } => {
            let window = meta.as_ref().and_then(|m| floats(&m["config"]["window"]));
            (
                column(&header, &rows, "t")?,
                column(&header, &rows, "E_total")?,
                window,
            )
        }
        Report::Json(v) => {
            let t =
                floats(&v["times"]).ok_or_else(|| CliError::Input("report has no times".into()))?;
            let e = floats(&v["energies"])
                .ok_or_else(|| CliError::Input("report has no energies".into()))?;
            (t, e, floats(&v["fit"]["window"]))
        }
    };
    if times.len() < 2 || energies.is_empty() {
        return Err(empty());
    }
    let e0 = energies[0];
    if !(e0 > 0.0) {
        return Err(CliError::Input("initial energy must be positive".into()));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(&energies)
        .filter(|(t, e)| **t > 0.0 && **e > 0.0)
        .map(|(t, e)| (*t, e / e0))
        .collect();
    if pts.len() < 2 {
        return Err(empty());
    }
    let t_max = pts.last().unwrap().0;
    let win = match window {
        Some(w) if w.len() == 2 && w[0] > 0.0 && w[0] < t_max => [w[0], w[1].min(t_max)],
        _ => [t_max / 10.0, t_max],
    };
    let x = Axis::fit(pts.iter().map(|p| p.0), true).ok_or_else(empty)?;
    let y = Axis::fit(pts.iter().map(|p| p.1), true).ok_or_else(empty)?;
    let mut c = Canvas::new(x, y, "Energy decay", "t", "E(t) / E(0)");
    c.polyline(&pts, "#1f77b4", None);

    // Reference slope -1 through the first sample inside the window.
    let anchor = pts
        .iter()
        .find(|p| p.0 >= win[0])
        .copied()
        .unwrap_or(pts[0]);
    let guide = [
        (win[0], anchor.1 * anchor.0 / win[0]),
        (win[1], anchor.1 * anchor.0 / win[1]),
    ];
    c.polyline(&guide, "#555", Some("6 4"));
    c.note(0, "dashed: reference slope -1", "#555");

    let (ts, es): (Vec<f64>, Vec<f64>) = times.iter().zip(&energies).map(|(t, e)| (*t, *e)).unzip();
    if let Ok(fit) = decay_fit_series(&ts, &es, win, None) {
        let line =
            [win[0], win[1]].map(|t| (t, (fit.intercept + fit.exponent * t.ln()).exp() / e0));
        c.polyline(&line, "#d62728", None);
        c.note(
            1,
            &format!(
                "fit over [{}, {}]: slope = {:.3}",
                label(win[0]),
                label(win[1]),
                fit.exponent
            ),
            "#d62728",
        );
    }
    Ok(c.finish())
}

fn spectrum_scatter(report: Report) -> CliResult<String> {
    let Report::Json(v) = report else {
        return Err(CliError::Input(
            "spectrum_scatter needs the JSON written by `spectrum`".into(),
        ));
    };
    let ev = pairs(&v["eigenvalues"])
        .ok_or_else(|| CliError::Input("report has no eigenvalues".into()))?;
    if ev.is_empty() {
        return Err(empty());
    }
    let x = Axis::fit(ev.iter().map(|p| p.0).chain([0.0]), false).ok_or_else(empty)?;
    let y = Axis::fit(ev.iter().map(|p| p.1), false).ok_or_else(empty)?;
    let mut c = Canvas::new(x, y, "Spectrum of the discrete generator", "Re z", "Im z");
    c.polyline(&[(0.0, y.lo), (0.0, y.hi)], "#555", Some("4 3"));
    if let Some(cut) = v["cutoff"].as_f64() {
        for s in [cut, -cut] {
            if s > y.lo && s < y.hi {
                c.polyline(&[(x.lo, s), (x.hi, s)], "#aaa", Some("2 3"));
            }
        }
    }
    c.points(&ev, "#1f77b4", 2.0);
    if let Some(a) = v["spectral_abscissa"].as_f64() {
        c.note(0, &format!("spectral abscissa = {a:.4e}"), "black");
    }
    if let Some(k) = v["branch_fit"]["exponent"].as_f64() {
        c.note(1, &format!("branch fit: -Re z ~ |Im z|^{k:.3}"), "#d62728");
    }
    Ok(c.finish())
}

fn resolvent(report: Report) -> CliResult<String> {
    let (lambdas, norms, meta) = match report {
        Report::Csv { meta, header, rows } => (
            column(&header, &rows, "lambda")?,
            column(&header, &rows, "resolvent_norm")?,
            meta.unwrap_or(Value::Null),
        ),
        Report::Json(v) => {
            let l = floats(&v["lambdas"])
                .ok_or_else(|| CliError::Input("report has no lambdas".into()))?;
            let n =
                floats(&v["norms"]).ok_or_else(|| CliError::Input("report has no norms".into()))?;
            (l, n, v)
        }
    };
    let pts: Vec<(f64, f64)> = lambdas
        .into_iter()
        .zip(norms)
        .filter(|(l, r)| *l > 0.0 && *r > 0.0)
        .collect();
    if pts.len() < 2 {
        return Err(empty());
    }
    let peaks = pairs(&meta["peaks"]).unwrap_or_default();
    let x = Axis::fit(pts.iter().map(|p| p.0), true).ok_or_else(empty)?;
    let y = Axis::fit(pts.iter().chain(&peaks).map(|p| p.1), true).ok_or_else(empty)?;
    let mut c = Canvas::new(
        x,
        y,
        "Resolvent norm on the imaginary axis",
        "lambda",
        "||(i lambda - A)^-1||_W",
    );
    c.polyline(&pts, "#1f77b4", None);
    c.points(&peaks, "#ff7f0e", 3.0);
    let fit = &meta["growth_fit"];
    if let (Some(k), Some(cst), Some(band)) = (
        fit["exponent"].as_f64(),
        fit["constant"].as_f64(),
        floats(&fit["band"]),
    ) {
        let line: Vec<(f64, f64)> = band.iter().map(|&l| (l, cst * l.powf(k))).collect();
        c.polyline(&line, "#d62728", Some("6 4"));
        c.note(0, &format!("envelope fit: norm ~ lambda^{k:.3}"), "#d62728");
    }
    Ok(c.finish())
}

fn abscissa(report: Report) -> CliResult<String> {
    let Report::Json(v) = report else {
        return Err(CliError::Input(
            "abscissa_trend needs the JSON written by `abscissa-trend`".into(),
        ));
    };
    let rows = v["trend"]
        .as_array()
        .ok_or_else(|| CliError::Input("report has no trend".into()))?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r["n"].as_f64()?, r["spectral_abscissa"].as_f64()?)))
        .collect();
    if pts.is_empty() {
        return Err(empty());
    }
    let negative = pts.iter().all(|p| p.1 < 0.0);
    let mut c = if negative {
        let mags: Vec<(f64, f64)> = pts.iter().map(|&(n, a)| (n, -a)).collect();
        let x = Axis::fit(mags.iter().map(|p| p.0), true).ok_or_else(empty)?;
        let y = Axis::fit(mags.iter().map(|p| p.1), true).ok_or_else(empty)?;
        let mut c = Canvas::new(
            x,
            y,
            "Spectral abscissa under refinement",
            "n",
            "-(spectral abscissa)",
        );
        c.polyline(&mags, "#1f77b4", None);
        c.points(&mags, "#1f77b4", 3.5);
        if let Some(fit) =
            fit_power_law(&mags, [mags[0].0, mags[mags.len() - 1].0]).filter(|f| f.points >= 2)
        {
            c.note(0, &format!("-abscissa ~ n^{:.3}", fit.slope), "#d62728");
        }
        c
    } else {
        let x = Axis::fit(pts.iter().map(|p| p.0), true).ok_or_else(empty)?;
        let y = Axis::fit(pts.iter().map(|p| p.1), false).ok_or_else(empty)?;
        let mut c = Canvas::new(
            x,
            y,
            "Spectral abscissa under refinement",
            "n",
            "spectral abscissa",
        );
        c.polyline(&pts, "#1f77b4", None);
        c.points(&pts, "#1f77b4", 3.5);
        c
    };
    if let Some(inc) = v["strictly_increasing"].as_bool() {
        c.note(
            if negative { 1 } else { 0 },
            &format!("strictly increasing: {inc}"),
            "black",
        );
    }
    Ok(c.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn kinds_round_trip() {
        for k in PlotKind::ALL {
            assert_eq!(k.name().parse::<PlotKind>().unwrap(), k);
        }
        assert!("histogram".parse::<PlotKind>().is_err());
    }

    #[test]
    fn log_axis_snaps_to_decades() {
        let a = Axis::fit([3.0, 450.0].into_iter(), true).unwrap();
        assert_eq!((a.lo, a.hi), (1.0, 1000.0));
        assert_eq!(a.ticks(), vec![1.0, 10.0, 100.0, 1000.0]);
        assert!((a.unit(10.0) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn linear_ticks_inside_range() {
        let a = Axis::fit([-0.3, 0.0].into_iter(), false).unwrap();
        let t = a.ticks();
        assert!(t.len() >= 3);
        assert!(t.iter().all(|v| *v >= a.lo && *v <= a.hi));
    }

    #[test]
    fn decay_plot_has_reference_guide() {
        let mut csv = String::from("t,E_total\n");
        for k in 0..200 {
            let t = k as f64 * 0.5;
            csv.push_str(&format!("{t},{}\n", 1.0 / (1.0 + t)));
        }
        let svg = render(PlotKind::EnergyDecayLoglog, &csv).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("reference slope -1"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("slope = -0.9"));
    }

    #[test]
    fn spectrum_plot_marks_every_eigenvalue() {
        let report = json!({
            "eigenvalues": [[-0.1, 1.0], [-0.1, -1.0], [-0.02, 5.0], [-0.02, -5.0]],
            "spectral_abscissa": -0.02,
            "branch_fit": {"exponent": -2.0},
        });
        let svg = render(PlotKind::SpectrumScatter, &report.to_string()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.contains("|Im z|^-2.000"));
    }

    #[test]
    fn resolvent_plot_labels_exponent() {
        let report = json!({
            "lambdas": [1.0, 2.0, 4.0, 8.0],
            "norms": [1.0, 4.0, 16.0, 64.0],
            "peaks": [[2.0, 4.0], [8.0, 64.0]],
            "growth_fit": {"exponent": 2.0, "constant": 1.0, "band": [1.0, 8.0]},
        });
        let svg = render(PlotKind::ResolventSweep, &report.to_string()).unwrap();
        assert!(svg.contains("lambda^2.000"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn abscissa_plot_uses_log_magnitudes() {
        let report = json!({
            "trend": [{"n": 50, "spectral_abscissa": -1e-2}, {"n": 100, "spectral_abscissa": -2.5e-3}],
            "strictly_increasing": true,
        });
        let svg = render(PlotKind::AbscissaTrend, &report.to_string()).unwrap();
        assert!(svg.contains("n^-2.000"));
    }

    #[test]
    fn empty_reports_rejected() {
        assert!(render(PlotKind::SpectrumScatter, r#"{"eigenvalues": []}"#).is_err());
        assert!(render(PlotKind::EnergyDecayLoglog, "t,E_total\n").is_err());
        assert!(render(PlotKind::AbscissaTrend, r#"{"trend": []}"#).is_err());
        assert!(render(PlotKind::ResolventSweep, "lambda,resolvent_norm\n").is_err());
    }

    #[test]
    fn labels_escape_markup() {
        assert_eq!(escape("a<b & c>d"), "a&lt;b &amp; c&gt;d");
    }
}

//! Minimal SVG line plots.

use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers only.
    pub markers: bool,
}

impl Series {
    pub fn line(label: &str, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, markers: false }
    }

    pub fn markers(label: &str, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, markers: true }
    }
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 36.0;
const MB: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64, scale: Scale) -> Vec<f64> {
    match scale {
        Scale::Log => {
            let (a, b) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
            (a..=b).map(|k| 10f64.powi(k)).filter(|v| *v >= lo * 0.999 && *v <= hi * 1.001).collect()
        }
        Scale::Linear => {
            let span = (hi - lo).max(1e-300);
            let raw = span / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
            let first = (lo / step).ceil() as i64;
            let last = (hi / step).floor() as i64;
            (first..=last).map(|k| k as f64 * step).collect()
        }
    }
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), x_scale: Scale::Linear, y_scale: Scale::Linear, series: vec![] }
    }

    pub fn log_x(mut self) -> Self {
        self.x_scale = Scale::Log;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.y_scale = Scale::Log;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn render(&self) -> String {
        let usable = |v: f64, s: Scale| v.is_finite() && (s == Scale::Linear || v > 0.0);
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|&(x, y)| usable(x, self.x_scale) && usable(y, self.y_scale))
            .collect();
        let range = |vals: Vec<f64>, s: Scale| -> (f64, f64) {
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                return (0.0, 1.0);
            }
            match s {
                Scale::Log => {
                    if hi / lo < 10.0 {
                        (lo / 2.0, hi * 2.0)
                    } else {
                        (lo, hi)
                    }
                }
                Scale::Linear => {
                    if hi - lo < 1e-300 {
                        (lo - 0.5, hi + 0.5)
                    } else {
                        let pad = 0.05 * (hi - lo);
                        (lo - pad, hi + pad)
                    }
                }
            }
        };
        let (x0, x1) = range(pts.iter().map(|p| p.0).collect(), self.x_scale);
        let (y0, y1) = range(pts.iter().map(|p| p.1).collect(), self.y_scale);
        let t = |v: f64, s: Scale| if s == Scale::Log { v.log10() } else { v };
        let px = |x: f64| ML + (t(x, self.x_scale) - t(x0, self.x_scale)) / (t(x1, self.x_scale) - t(x0, self.x_scale)) * (W - ML - MR);
        let py = |y: f64| H - MB - (t(y, self.y_scale) - t(y0, self.y_scale)) / (t(y1, self.y_scale) - t(y0, self.y_scale)) * (H - MT - MB);

        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        let _ = writeln!(out, r##"<rect x="{ML}" y="{MT}" width="{}" height="{}" fill="none" stroke="#333"/>"##, W - ML - MR, H - MT - MB);
        for v in ticks(x0, x1, self.x_scale) {
            let x = px(v);
            let _ = writeln!(out, r##"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="#ccc"/>"##, MT, H - MB);
            let _ = writeln!(out, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#, H - MB + 16.0, fmt_tick(v, self.x_scale));
        }
        for v in ticks(y0, y1, self.y_scale) {
            let y = py(v);
            let _ = writeln!(out, r##"<line x1="{ML}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ccc"/>"##, W - MR);
            let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, ML - 6.0, y + 4.0, fmt_tick(v, self.y_scale));
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (ML + W - MR) / 2.0, H - 12.0, escape(&self.x_label));
        let _ = writeln!(out, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, (MT + H - MB) / 2.0, (MT + H - MB) / 2.0, escape(&self.y_label));
        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let p: Vec<(f64, f64)> = s.points.iter().copied().filter(|&(x, y)| usable(x, self.x_scale) && usable(y, self.y_scale)).map(|(x, y)| (px(x), py(y))).collect();
            if s.markers {
                for (x, y) in &p {
                    let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{color}"/>"#);
                }
            } else if !p.is_empty() {
                let d: Vec<String> = p.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, d.join(" "));
            }
            let ly = MT + 16.0 + 16.0 * k as f64;
            let _ = writeln!(out, r#"<rect x="{}" y="{}" width="12" height="3" fill="{color}"/>"#, W - MR - 150.0, ly - 4.0);
            let _ = writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, W - MR - 132.0, escape(&s.label));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn fmt_tick(v: f64, scale: Scale) -> String {
    if scale == Scale::Log {
        format!("1e{}", v.log10().round() as i32)
    } else if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_log_axes() {
        let svg = Plot::new("t", "x", "y").log_x().log_y().with(Series::markers("a", vec![(1e-3, 0.1), (1e-2, 0.3), (0.0, 1.0)])).render();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("1e-3"));
    }

    #[test]
    fn linear_ticks_are_round() {
        assert_eq!(ticks(0.0, 1.0, Scale::Linear), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
    }
}

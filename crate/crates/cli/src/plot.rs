//! Standalone SVG output for constellations and rate-power curves.

use std::fmt::Write;

use swipt_core::experiment::RatePoint;
use swipt_core::Complex64;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Linear map from a data window onto the plot area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    plot_w: f64,
    plot_h: f64,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64), square: bool) -> Self {
        let side = HEIGHT - 2.0 * MARGIN;
        let plot_w = if square {
            side
        } else {
            WIDTH - 2.0 * MARGIN - 120.0
        };
        Self {
            x,
            y,
            plot_w,
            plot_h: side,
        }
    }

    fn px(&self, v: f64) -> f64 {
        MARGIN + (v - self.x.0) / (self.x.1 - self.x.0) * self.plot_w
    }

    fn py(&self, v: f64) -> f64 {
        MARGIN + (self.y.1 - v) / (self.y.1 - self.y.0) * self.plot_h
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (x0, x1) = (MARGIN, MARGIN + self.plot_w);
        let (y0, y1) = (MARGIN, MARGIN + self.plot_h);
        let _ = writeln!(
            out,
            r##"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            self.plot_w, self.plot_h
        );
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let vx = self.x.0 + t * (self.x.1 - self.x.0);
            let vy = self.y.0 + t * (self.y.1 - self.y.0);
            let (tx, ty) = (self.px(vx), self.py(vy));
            let _ = writeln!(
                out,
                r##"<line x1="{tx:.2}" y1="{y1}" x2="{tx:.2}" y2="{:.2}" stroke="#444"/><text x="{tx:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
                y1 + 5.0,
                y1 + 18.0,
                tick(vx)
            );
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{ty:.2}" x2="{x0}" y2="{ty:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"##,
                x0 - 5.0,
                x0 - 8.0,
                ty + 4.0,
                tick(vy)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{x_label}</text>"#,
            (x0 + x1) / 2.0,
            y1 + 40.0
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.2})">{y_label}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0
        );
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn header(title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="30" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn legend(out: &mut String, frame: &Frame, labels: &[&str]) {
    let x = MARGIN + frame.plot_w + 20.0;
    for (i, label) in labels.iter().enumerate() {
        let y = MARGIN + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<g class="legend-entry"><circle cx="{x}" cy="{y}" r="5" fill="{}"/><text x="{}" y="{}" font-size="12">{}</text></g>"#,
            PALETTE[i % PALETTE.len()],
            x + 10.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// Scatter of one or more constellations over the unit-power circle.
pub fn constellation_svg(title: &str, series: &[(String, Vec<Complex64>)]) -> String {
    let extent = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.re.abs().max(p.im.abs())))
        .fold(1.0, f64::max)
        * 1.15;
    let frame = Frame::new((-extent, extent), (-extent, extent), true);
    let mut out = header(title);
    frame.axes(&mut out, "in-phase", "quadrature");
    let (cx, cy) = (frame.px(0.0), frame.py(0.0));
    let r = frame.px(1.0) - cx;
    let _ = writeln!(
        out,
        r##"<circle class="unit-circle" cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="none" stroke="#888" stroke-dasharray="4 3"/>"##
    );
    for (i, (_, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for p in pts {
            let _ = writeln!(
                out,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#,
                frame.px(p.re),
                frame.py(p.im)
            );
        }
    }
    if series.len() > 1 {
        let labels: Vec<&str> = series.iter().map(|(l, _)| l.as_str()).collect();
        legend(&mut out, &frame, &labels);
    }
    out.push_str("</svg>\n");
    out
}

/// `p_del` against `1 − SER`, one series per label.
pub fn rate_power_svg(title: &str, series: &[(String, Vec<RatePoint>)]) -> String {
    let all: Vec<&RatePoint> = series.iter().flat_map(|(_, c)| c.iter()).collect();
    let x_min = all.iter().map(|p| p.one_minus_ser).fold(1.0, f64::min);
    let x_lo = ((x_min * 10.0).floor() / 10.0).min(0.9);
    let y_max = all.iter().map(|p| p.p_del).fold(2.0, f64::max);
    let frame = Frame::new((x_lo, 1.0), (1.0, y_max * 1.05), false);
    let mut out = header(title);
    frame.axes(&mut out, "1 - SER", "delivered power metric");
    if all.is_empty() {
        let _ = writeln!(
            out,
            r#"<text class="annotation" x="{:.2}" y="{:.2}" font-size="16" text-anchor="middle">no accepted runs</text>"#,
            MARGIN + frame.plot_w / 2.0,
            MARGIN + frame.plot_h / 2.0
        );
    }
    for (i, (_, curve)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = curve
            .iter()
            .map(|p| format!("{:.2},{:.2}", frame.px(p.one_minus_ser), frame.py(p.p_del)))
            .collect();
        if pts.len() > 1 {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        for p in curve {
            let _ = writeln!(
                out,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                frame.px(p.one_minus_ser),
                frame.py(p.p_del)
            );
        }
    }
    let labels: Vec<&str> = series.iter().map(|(l, _)| l.as_str()).collect();
    legend(&mut out, &frame, &labels);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_markers() {
        let pts: Vec<Complex64> = (0..16)
            .map(|k| Complex64::from_polar(1.0, k as f64 * 0.4))
            .collect();
        let svg = constellation_svg("c", &[("run".into(), pts)]);
        assert_eq!(svg.matches(r#"class="marker""#).count(), 16);
        assert_eq!(svg.matches("unit-circle").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_curves_are_annotated() {
        let svg = rate_power_svg("rp", &[("M=8".into(), vec![])]);
        assert!(svg.contains("no accepted runs"));
        assert!(svg.contains("1 - SER"));
        let none = rate_power_svg("rp", &[]);
        assert!(none.contains("no accepted runs"));
    }

    #[test]
    fn one_legend_entry_per_series() {
        let curve = |p: f64| {
            vec![
                RatePoint {
                    one_minus_ser: 0.99,
                    p_del: p,
                },
                RatePoint {
                    one_minus_ser: 0.6,
                    p_del: 2.0 * p,
                },
            ]
        };
        let svg = rate_power_svg(
            "rp",
            &[
                ("M=8".into(), curve(1.5)),
                ("M=16".into(), curve(2.0)),
                ("M=32".into(), curve(3.0)),
            ],
        );
        assert_eq!(svg.matches("legend-entry").count(), 3);
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(!svg.contains("no accepted runs"));
    }

    #[test]
    fn labels_are_escaped() {
        let svg = constellation_svg("a<b", &[]);
        assert!(svg.contains("a&lt;b"));
    }
}

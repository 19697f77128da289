//! Two-axis plot of a rotation sweep: `|S|` on the left axis, coincidence
//! probability on the right, with the classical and Tsirelson bounds.

use std::f64::consts::SQRT_2;
use std::fmt::Write;

use sagnac_core::bell::SweepRow;

const W: f64 = 800.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 80.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const S_MAX: f64 = 3.0;

struct Frame {
    f_min: f64,
    f_max: f64,
    p_max: f64,
}

impl Frame {
    fn x(&self, f: f64) -> f64 {
        let span = (self.f_max - self.f_min).max(f64::MIN_POSITIVE);
        LEFT + (f - self.f_min) / span * (W - LEFT - RIGHT)
    }

    fn y_s(&self, s: f64) -> f64 {
        H - BOTTOM - s / S_MAX * (H - TOP - BOTTOM)
    }

    fn y_p(&self, p: f64) -> f64 {
        H - BOTTOM - p / self.p_max * (H - TOP - BOTTOM)
    }
}

fn polyline(out: &mut String, pts: impl Iterator<Item = (f64, f64)>, style: &str) {
    let coords: Vec<String> = pts.map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" {style} points="{}"/>"#,
        coords.join(" ")
    );
}

fn hline(out: &mut String, frame: &Frame, y: f64, style: &str, label: &str) {
    let (x0, x1) = (frame.x(frame.f_min), frame.x(frame.f_max));
    let _ = writeln!(
        out,
        r#"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" {style}/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"#,
        x1 - 4.0,
        y - 4.0
    );
}

/// Renders the sweep. Rows must be sorted by frequency.
pub fn render(rows: &[SweepRow]) -> String {
    let f_min = rows.first().map_or(0.0, |r| r.f_hz);
    let f_max = rows.last().map_or(1.0, |r| r.f_hz);
    let p_top = rows.iter().map(|r| r.p_coincidence).fold(0.0, f64::max);
    let frame = Frame {
        f_min,
        f_max,
        p_max: if p_top > 0.0 { p_top * 1.25 } else { 1.0 },
    };
    let (x0, x1) = (frame.x(f_min), frame.x(f_max));
    let (y0, y1) = (frame.y_s(0.0), frame.y_s(S_MAX));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0} L{x1},{y1}" fill="none" stroke="black"/>"#
    );

    for i in 0..=6 {
        let s = S_MAX * f64::from(i) / 6.0;
        let y = frame.y_s(s);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{s:.1}</text>"#,
            x0 - 8.0,
            y + 4.0
        );
        let p = frame.p_max * f64::from(i) / 6.0;
        let _ = writeln!(
            out,
            r#"<line x1="{x1}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
            x1 + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{p:.4}</text>"#,
            x1 + 8.0,
            y + 4.0
        );
    }
    for i in 0..=8 {
        let f = f_min + (f_max - f_min) * f64::from(i) / 8.0;
        let x = frame.x(f);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{f:.2}</text>"#,
            y0 + 20.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">rotation frequency f (Hz)</text>"#,
        (x0 + x1) / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        out,
        r##"<text x="18" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.2})" fill="#1f4e9c">|S|</text>"##,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(90 {:.2} {:.2})" fill="#b5451b">P coincidence</text>"##,
        W - 20.0,
        (y0 + y1) / 2.0,
        W - 20.0,
        (y0 + y1) / 2.0
    );

    hline(
        &mut out,
        &frame,
        frame.y_s(2.0),
        r#"stroke="gray" stroke-dasharray="6 4""#,
        "|S| = 2",
    );
    hline(
        &mut out,
        &frame,
        frame.y_s(2.0 * SQRT_2),
        r#"stroke="gray" stroke-dasharray="2 3""#,
        "|S| = 2√2",
    );
    polyline(
        &mut out,
        rows.iter().map(|r| (frame.x(r.f_hz), frame.y_s(r.s_abs))),
        r##"stroke="#1f4e9c" stroke-width="1.5""##,
    );
    polyline(
        &mut out,
        rows.iter()
            .map(|r| (frame.x(r.f_hz), frame.y_p(r.p_coincidence))),
        r##"stroke="#b5451b" stroke-width="1.5""##,
    );
    out.push_str("</svg>\n");
    out
}

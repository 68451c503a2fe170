//! Minimal SVG line plots: labeled axes, ticks, a few traces per panel.

use std::fmt::Write as _;
use std::path::Path;

use twpac::Result;

pub struct Trace {
    pub label: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub traces: Vec<Trace>,
}

const W: f64 = 760.0;
const H: f64 = 300.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 30.0;
const MB: f64 = 45.0;

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| (hi - lo) / s <= target as f64 + 0.5)
        .unwrap_or(mag * 10.0);
    let first = (lo / step).ceil() * step;
    let mut t = Vec::new();
    let mut v = first;
    while v <= hi + 1e-9 * step {
        t.push(v);
        v += step;
    }
    t
}

fn render_panel(svg: &mut String, panel: &Panel, y_off: f64) {
    let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite();
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for tr in &panel.traces {
        for p in tr.points.iter().filter(finite) {
            x0 = x0.min(p.0);
            x1 = x1.max(p.0);
            y0 = y0.min(p.1);
            y1 = y1.max(p.1);
        }
    }
    if !x0.is_finite() {
        return;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let sy = |y: f64| y_off + MT + (1.0 - (y - y0) / (y1 - y0)) * (H - MT - MB);

    let _ = write!(
        svg,
        r#"<rect x="{ML}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        y_off + MT,
        W - ML - MR,
        H - MT - MB
    );
    let _ = write!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        ML + (W - ML - MR) / 2.0,
        y_off + 18.0,
        panel.title
    );
    for tx in nice_ticks(x0, x1, 8) {
        let x = sx(tx);
        let _ = write!(
            svg,
            r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="black"/><text x="{x:.1}" y="{}" text-anchor="middle" font-size="11">{tx:.4}</text>"#,
            y_off + H - MB,
            y_off + H - MB + 5.0,
            y_off + H - MB + 18.0
        );
    }
    for ty in nice_ticks(y0, y1, 5) {
        let y = sy(ty);
        let _ = write!(
            svg,
            r#"<line x1="{}" y1="{y:.1}" x2="{ML}" y2="{y:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end" font-size="11">{ty:.4}</text>"#,
            ML - 5.0,
            ML - 8.0,
            y + 4.0
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        ML + (W - ML - MR) / 2.0,
        y_off + H - 8.0,
        panel.x_label
    );
    let _ = write!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        y_off + MT + (H - MT - MB) / 2.0,
        y_off + MT + (H - MT - MB) / 2.0,
        panel.y_label
    );
    for (i, tr) in panel.traces.iter().enumerate() {
        let mut d = String::new();
        let mut pen_up = true;
        for p in &tr.points {
            if p.0.is_finite() && p.1.is_finite() {
                let cmd = if pen_up { 'M' } else { 'L' };
                let _ = write!(d, "{cmd}{:.2} {:.2} ", sx(p.0), sy(p.1));
                pen_up = false;
            } else {
                pen_up = true;
            }
        }
        let _ = write!(
            svg,
            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.3"/>"#,
            tr.color
        );
        let _ = write!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" fill="{}">{}</text>"#,
            W - MR - 150.0,
            y_off + MT + 16.0 + 14.0 * i as f64,
            tr.color,
            tr.label
        );
    }
}

/// Write a stack of panels into one SVG file.
pub fn emit_svg(path: &Path, panels: &[Panel]) -> Result<()> {
    let total_h = H * panels.len() as f64;
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{total_h}" viewBox="0 0 {W} {total_h}"><rect width="100%" height="100%" fill="white"/>"#
    );
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut svg, p, H * i as f64);
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

//! Static SVG heatmaps with an embedded PNG raster and labeled axes.

use std::fmt::Write as _;
use std::io::Cursor;

use base64::Engine;
use image::{ImageFormat, Rgb, RgbImage};

pub struct Axis {
    pub label: String,
    /// Value at the first and last sample centre.
    pub first: f64,
    pub last: f64,
}

pub struct Heatmap {
    pub title: String,
    /// `values[x][y]`, expected in `[0, 1]`; y grows upwards in the image.
    pub columns: Vec<Vec<f32>>,
    pub x: Axis,
    pub y: Axis,
}

// viridis sampled at five points
const PALETTE: [[f32; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

fn colour(v: f32) -> Rgb<u8> {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let pos = v * (PALETTE.len() - 1) as f32;
    let i = (pos.floor() as usize).min(PALETTE.len() - 2);
    let f = pos - i as f32;
    let (a, b) = (PALETTE[i], PALETTE[i + 1]);
    Rgb(std::array::from_fn(|c| (a[c] + f * (b[c] - a[c])).round() as u8))
}

fn raster_png(columns: &[Vec<f32>]) -> anyhow::Result<Vec<u8>> {
    let w = columns.len() as u32;
    let h = columns.first().map_or(0, |c| c.len()) as u32;
    anyhow::ensure!(w > 0 && h > 0, "nothing to plot");
    let img = RgbImage::from_fn(w, h, |x, y| colour(columns[x as usize][(h - 1 - y) as usize]));
    let mut png = Vec::new();
    img.write_to(&mut Cursor::new(&mut png), ImageFormat::Png)?;
    Ok(png)
}

/// Round tick spacing giving roughly `target` ticks over `span`.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span.abs() / target;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    if lo.is_nan() || hi.is_nan() || hi <= lo {
        return vec![lo];
    }
    let step = tick_step(hi - lo, 6.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(map: &Heatmap) -> anyhow::Result<String> {
    let png = raster_png(&map.columns)?;
    let data = base64::engine::general_purpose::STANDARD.encode(png);
    let (left, top, pw, ph) = (80.0, 40.0, 640.0, 400.0);
    let (width, height) = (left + pw + 30.0, top + ph + 60.0);

    // pixel edges sit half a sample outside the first and last centres
    let nx = map.columns.len() as f64;
    let ny = map.columns[0].len() as f64;
    let half = |a: &Axis, n: f64| {
        if n > 1.0 {
            0.5 * (a.last - a.first) / (n - 1.0)
        } else {
            0.5
        }
    };
    let (x0, x1) = (map.x.first - half(&map.x, nx), map.x.last + half(&map.x, nx));
    let (y0, y1) = (map.y.first - half(&map.y, ny), map.y.last + half(&map.y, ny));
    let px = |v: f64| left + (v - x0) / (x1 - x0) * pw;
    let py = |v: f64| top + ph - (v - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        left + pw / 2.0,
        escape(&map.title)
    )?;
    writeln!(
        s,
        r#"<image x="{left}" y="{top}" width="{pw}" height="{ph}" preserveAspectRatio="none" style="image-rendering:pixelated" href="data:image/png;base64,{data}"/>"#
    )?;
    writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )?;
    for t in ticks(x0, x1) {
        let x = px(t);
        writeln!(
            s,
            r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#,
            top + ph,
            top + ph + 5.0
        )?;
        writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            top + ph + 18.0,
            fmt_tick(t)
        )?;
    }
    for t in ticks(y0, y1) {
        let y = py(t);
        writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{left}" y2="{y}" stroke="black"/>"#,
            left - 5.0
        )?;
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 8.0,
            y + 4.0,
            fmt_tick(t)
        )?;
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        top + ph + 42.0,
        escape(&map.x.label)
    )?;
    writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(&map.y.label)
    )?;
    s.push_str("</svg>\n");
    Ok(s)
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

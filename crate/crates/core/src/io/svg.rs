//! Minimal deterministic SVG charts: candlesticks, scree plots and loading bars.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::ohlc::{Direction, OhlcBar};

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub width: f64,
    pub height: f64,
    pub margin_left: f64,
    pub margin_right: f64,
    pub margin_top: f64,
    pub margin_bottom: f64,
    pub title: String,
    pub y_label: String,
    pub bull_color: String,
    pub bear_color: String,
    pub neutral_color: String,
}

impl Default for ChartSpec {
    fn default() -> Self {
        Self {
            width: 800.0,
            height: 400.0,
            margin_left: 60.0,
            margin_right: 20.0,
            margin_top: 40.0,
            margin_bottom: 90.0,
            title: String::new(),
            y_label: String::new(),
            bull_color: "green".into(),
            bear_color: "red".into(),
            neutral_color: "gray".into(),
        }
    }
}

impl ChartSpec {
    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn with_y_label(mut self, label: impl Into<String>) -> Self {
        self.y_label = label.into();
        self
    }

    fn plot_width(&self) -> f64 {
        self.width - self.margin_left - self.margin_right
    }

    fn plot_height(&self) -> f64 {
        self.height - self.margin_top - self.margin_bottom
    }

    fn validate(&self) -> Result<()> {
        let ok = [self.width, self.height, self.margin_left, self.margin_right, self.margin_top, self.margin_bottom]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
            && self.plot_width() > 0.0
            && self.plot_height() > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidChart("chart size leaves no room for the plot area".into()))
        }
    }

    fn color(&self, d: Direction) -> &str {
        match d {
            Direction::Bull => &self.bull_color,
            Direction::Bear => &self.bear_color,
            Direction::Neutral => &self.neutral_color,
        }
    }
}

/// Affine map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearScale {
    d0: f64,
    d1: f64,
    r0: f64,
    r1: f64,
}

impl LinearScale {
    /// A degenerate domain is widened symmetrically so the map stays finite.
    pub fn new(mut d0: f64, mut d1: f64, r0: f64, r1: f64) -> Self {
        if d1 - d0 <= f64::EPSILON * d0.abs().max(d1.abs()).max(1.0) {
            let pad = 0.5 * d0.abs().max(1.0);
            d0 -= pad;
            d1 += pad;
        }
        Self { d0, d1, r0, r1 }
    }

    pub fn map(&self, x: f64) -> f64 {
        self.r0 + (x - self.d0) / (self.d1 - self.d0) * (self.r1 - self.r0)
    }

    /// Padded domain with 5% headroom on both sides.
    pub fn padded(lo: f64, hi: f64, r0: f64, r1: f64) -> Self {
        let pad = 0.05 * (hi - lo);
        Self::new(lo - pad, hi + pad, r0, r1)
    }
}

pub fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct Canvas {
    out: String,
}

impl Canvas {
    fn new(spec: &ChartSpec) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#,
            w = spec.width,
            h = spec.height
        );
        let _ =
            writeln!(out, r#"<rect x="0" y="0" width="{:.2}" height="{:.2}" fill="white"/>"#, spec.width, spec.height);
        let mut c = Self { out };
        if !spec.title.is_empty() {
            c.text(spec.width / 2.0, spec.margin_top / 2.0 + 5.0, "middle", &spec.title, Some("14"));
        }
        if !spec.y_label.is_empty() {
            let (x, y) = (14.0, spec.margin_top + spec.plot_height() / 2.0);
            let _ = writeln!(
                c.out,
                r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle" transform="rotate(-90 {x:.2} {y:.2})">{}</text>"#,
                escape_xml(&spec.y_label)
            );
        }
        c
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.out,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{}" stroke-width="{width:.2}"/>"#,
            escape_xml(stroke)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, class: &str) {
        let _ = writeln!(
            self.out,
            r#"<rect class="{}" x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{}" stroke="{}"/>"#,
            escape_xml(class),
            escape_xml(fill),
            escape_xml(fill)
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, body: &str, size: Option<&str>) {
        let size = size.map(|s| format!(r#" font-size="{s}""#)).unwrap_or_default();
        let _ = writeln!(
            self.out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}"{size}>{}</text>"#,
            escape_xml(body)
        );
    }

    fn rotated_label(&mut self, x: f64, y: f64, body: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="end" transform="rotate(-45 {x:.2} {y:.2})">{}</text>"#,
            escape_xml(body)
        );
    }

    fn axes(&mut self, spec: &ChartSpec, scale: &LinearScale, lo: f64, hi: f64) {
        let (x0, x1) = (spec.margin_left, spec.margin_left + spec.plot_width());
        let (y0, y1) = (spec.margin_top, spec.margin_top + spec.plot_height());
        self.line(x0, y0, x0, y1, "black", 1.0);
        self.line(x0, y1, x1, y1, "black", 1.0);
        for k in 0..=4 {
            let v = lo + (hi - lo) * f64::from(k) / 4.0;
            let y = scale.map(v);
            self.line(x0 - 4.0, y, x0, y, "black", 1.0);
            self.text(x0 - 6.0, y + 4.0, "end", &format!("{v:.2}"), None);
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Draws one candle per labelled bar; the body colour follows the bar direction.
pub fn render_candlestick_svg(bars: &[(String, OhlcBar<f64>)], spec: &ChartSpec) -> Result<String> {
    spec.validate()?;
    if bars.is_empty() {
        return Err(Error::EmptyInput);
    }
    let lo = bars.iter().map(|(_, b)| b.low()).fold(f64::INFINITY, f64::min);
    let hi = bars.iter().map(|(_, b)| b.high()).fold(f64::NEG_INFINITY, f64::max);
    let bottom = spec.margin_top + spec.plot_height();
    let y = LinearScale::padded(lo, hi, bottom, spec.margin_top);
    let slot = spec.plot_width() / bars.len() as f64;
    let body_w = (slot * 0.6).max(1.0);

    let mut c = Canvas::new(spec);
    c.axes(spec, &y, lo, hi);
    for (i, (label, bar)) in bars.iter().enumerate() {
        let cx = spec.margin_left + slot * (i as f64 + 0.5);
        let color = spec.color(bar.direction()).to_string();
        c.line(cx, y.map(bar.high()), cx, y.map(bar.low()), &color, 1.0);
        let top = y.map(bar.open().max(bar.close()));
        let base = y.map(bar.open().min(bar.close()));
        let class = match bar.direction() {
            Direction::Bull => "candle bull",
            Direction::Bear => "candle bear",
            Direction::Neutral => "candle neutral",
        };
        c.rect(cx - body_w / 2.0, top, body_w, (base - top).max(1.0), &color, class);
        c.rotated_label(cx, bottom + 12.0, label);
    }
    Ok(c.finish())
}

/// Bars for each component's share of variance plus the running cumulative share.
pub fn render_scree_svg(eigenvalues: &[f64], spec: &ChartSpec) -> Result<String> {
    spec.validate()?;
    if eigenvalues.is_empty() {
        return Err(Error::EmptyInput);
    }
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenvalue".into()));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidChart("eigenvalues sum to a non-positive total".into()));
    }
    let bottom = spec.margin_top + spec.plot_height();
    let y = LinearScale::new(0.0, 1.0, bottom, spec.margin_top);
    let slot = spec.plot_width() / eigenvalues.len() as f64;

    let mut c = Canvas::new(spec);
    c.axes(spec, &y, 0.0, 1.0);
    let mut cumulative = 0.0;
    let mut points = Vec::with_capacity(eigenvalues.len());
    for (h, v) in eigenvalues.iter().enumerate() {
        let share = v / total;
        cumulative += share;
        let cx = spec.margin_left + slot * (h as f64 + 0.5);
        let top = y.map(share.max(0.0));
        c.rect(cx - slot * 0.3, top, slot * 0.6, bottom - top, "steelblue", "vcr");
        c.text(cx, bottom + 16.0, "middle", &format!("PC{}", h + 1), None);
        c.text(cx, top - 4.0, "middle", &format!("{:.1}%", share * 100.0), None);
        points.push((cx, y.map(cumulative)));
    }
    let path: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        c.out,
        r#"<polyline class="cvcr" points="{}" fill="none" stroke="darkorange" stroke-width="2.00"/>"#,
        path.join(" ")
    );
    for (x, yv) in &points {
        let _ = writeln!(c.out, r#"<circle cx="{x:.2}" cy="{yv:.2}" r="3.00" fill="darkorange"/>"#);
    }
    Ok(c.finish())
}

/// Horizontal zero line with one signed bar per variable loading.
pub fn render_loading_svg(labels: &[String], loadings: &[f64], spec: &ChartSpec) -> Result<String> {
    spec.validate()?;
    if loadings.is_empty() {
        return Err(Error::EmptyInput);
    }
    if labels.len() != loadings.len() {
        return Err(Error::LengthMismatch { left: labels.len(), right: loadings.len() });
    }
    let bound = loadings.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let bottom = spec.margin_top + spec.plot_height();
    let y = LinearScale::new(-bound, bound, bottom, spec.margin_top);
    let slot = spec.plot_width() / loadings.len() as f64;

    let mut c = Canvas::new(spec);
    c.axes(spec, &y, -bound, bound);
    let zero = y.map(0.0);
    c.line(spec.margin_left, zero, spec.margin_left + spec.plot_width(), zero, "black", 0.5);
    for (j, (label, v)) in labels.iter().zip(loadings).enumerate() {
        let cx = spec.margin_left + slot * (j as f64 + 0.5);
        let yv = y.map(*v);
        let (top, h) = if *v >= 0.0 { (yv, zero - yv) } else { (zero, yv - zero) };
        let fill = if *v >= 0.0 { "steelblue" } else { "indianred" };
        c.rect(cx - slot * 0.3, top, slot * 0.6, h, fill, "loading");
        c.rotated_label(cx, bottom + 12.0, label);
    }
    Ok(c.finish())
}

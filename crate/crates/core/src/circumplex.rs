//! The valence/arousal disc: projecting quadrant probabilities onto it,
//! distances to emotion targets, and SVG plots.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::emotion::{Quadrant, QuadrantProbs, PROBABILITY_TOLERANCE};
use crate::{Error, Result};

pub const DEFAULT_RADIUS: f64 = 1.0;
const CONTAINMENT_SLACK: f64 = 1e-9;

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRadius(r))
    }
}

/// A point on the disc of radius `r`; `x` is valence, `y` is arousal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircumplexPoint {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl CircumplexPoint {
    pub fn new(x: f64, y: f64, r: f64) -> Result<Self> {
        check_radius(r)?;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite(format!("point ({x}, {y})")));
        }
        if x * x + y * y > r * r + CONTAINMENT_SLACK {
            return Err(Error::InvalidTarget(format!(
                "({x}, {y}) lies outside the disc of radius {r}"
            )));
        }
        Ok(CircumplexPoint { x, y, r })
    }

    pub fn origin(r: f64) -> Result<Self> {
        CircumplexPoint::new(0.0, 0.0, r)
    }

    /// Centroid of a quadrant, at (±r/2, ±r/2).
    pub fn centroid(q: Quadrant, r: f64) -> Result<Self> {
        let (sx, sy) = q.signs();
        CircumplexPoint::new(sx * r / 2.0, sy * r / 2.0, r)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance_to(&self, other: &CircumplexPoint) -> Result<f64> {
        if self.r != other.r {
            return Err(Error::RadiusMismatch(self.r, other.r));
        }
        Ok((self.x - other.x).hypot(self.y - other.y))
    }
}

/// Result of [`project`], including whether the rescaling branch fired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: CircumplexPoint,
    pub raw_distance: f64,
    pub normalized: bool,
}

/// `x = (p1 - p3) r`, `y = (p2 - p4) r`, rescaled by `r / d` when `d > r`.
pub fn project(p: [f64; 4], r: f64) -> Result<Projection> {
    check_radius(r)?;
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidProbabilities(format!(
            "{p:?} has negative or non-finite entries"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::InvalidProbabilities(format!("{p:?} sums to {sum}")));
    }
    let mut x = (p[0] - p[2]) * r;
    let mut y = (p[1] - p[3]) * r;
    let d = x.hypot(y);
    let normalized = d > r;
    if normalized {
        x *= r / d;
        y *= r / d;
    }
    Ok(Projection {
        point: CircumplexPoint { x, y, r },
        raw_distance: d,
        normalized,
    })
}

pub fn map_to_plane(probs: &QuadrantProbs, r: f64) -> Result<CircumplexPoint> {
    Ok(project(probs.as_array(), r)?.point)
}

/// Either a whole quadrant (scored against its centroid) or an explicit point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionTarget {
    Quadrant(Quadrant),
    Point(CircumplexPoint),
}

impl EmotionTarget {
    /// Parses a quadrant name or alias, or a `valence,arousal` pair on the
    /// disc of radius `r`.
    pub fn parse(s: &str, r: f64) -> Result<Self> {
        check_radius(r)?;
        if let Some((v, a)) = s.split_once(',') {
            let num = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidTarget(format!("{s:?} is not a valence,arousal pair")))
            };
            return Ok(EmotionTarget::Point(CircumplexPoint::new(num(v)?, num(a)?, r)?));
        }
        Ok(EmotionTarget::Quadrant(Quadrant::from_str(s)?))
    }

    /// The point this target is scored against.
    pub fn anchor(&self, r: f64) -> Result<CircumplexPoint> {
        match self {
            EmotionTarget::Quadrant(q) => CircumplexPoint::centroid(*q, r),
            EmotionTarget::Point(p) if p.r == r => Ok(*p),
            EmotionTarget::Point(p) => Err(Error::RadiusMismatch(r, p.r)),
        }
    }
}

impl fmt::Display for EmotionTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmotionTarget::Quadrant(q) => write!(f, "{q}"),
            EmotionTarget::Point(p) => write!(f, "{},{}", p.x, p.y),
        }
    }
}

pub fn distance(point: &CircumplexPoint, target: &EmotionTarget) -> Result<f64> {
    point.distance_to(&target.anchor(point.r)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Circle,
    Square,
    Diamond,
    Triangle,
    Cross,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointStyle {
    pub marker: Marker,
    pub color: String,
    pub size: f64,
}

impl PointStyle {
    pub fn new(marker: Marker, color: &str) -> Self {
        PointStyle {
            marker,
            color: color.to_string(),
            size: 7.0,
        }
    }

    pub fn before() -> Self {
        PointStyle::new(Marker::Circle, "#1f77b4")
    }

    pub fn after() -> Self {
        PointStyle::new(Marker::Square, "#d62728")
    }

    pub fn target() -> Self {
        PointStyle::new(Marker::Cross, "#2ca02c")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub label: String,
    pub point: CircumplexPoint,
    pub style: PointStyle,
}

impl PlotPoint {
    pub fn new(label: impl Into<String>, point: CircumplexPoint, style: PointStyle) -> Self {
        PlotPoint {
            label: label.into(),
            point,
            style,
        }
    }
}

/// Layout and colours for [`plot_svg`].
#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    /// Width and height of the square canvas in pixels.
    pub size: f64,
    /// Space between the disc and the canvas edge.
    pub margin: f64,
    pub title: Option<String>,
    pub background: String,
    pub disc_stroke: String,
    pub axis_stroke: String,
    pub text_color: String,
    pub font_size: f64,
    pub target_style: PointStyle,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            size: 480.0,
            margin: 60.0,
            title: None,
            background: "#ffffff".into(),
            disc_stroke: "#333333".into(),
            axis_stroke: "#888888".into(),
            text_color: "#222222".into(),
            font_size: 13.0,
            target_style: PointStyle::target(),
        }
    }
}

fn escape(s: &str) -> String {
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

fn marker(out: &mut String, cx: f64, cy: f64, style: &PointStyle, class: &str) {
    let s = style.size;
    let c = escape(&style.color);
    let _ = match style.marker {
        Marker::Circle => writeln!(
            out,
            r#"  <circle class="{class}" cx="{cx:.2}" cy="{cy:.2}" r="{s:.2}" fill="{c}"/>"#
        ),
        Marker::Square => writeln!(
            out,
            r#"  <rect class="{class}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}"/>"#,
            cx - s,
            cy - s,
            2.0 * s,
            2.0 * s
        ),
        Marker::Diamond => writeln!(
            out,
            r#"  <polygon class="{class}" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{c}"/>"#,
            cx,
            cy - s,
            cx + s,
            cy,
            cx,
            cy + s,
            cx - s,
            cy
        ),
        Marker::Triangle => writeln!(
            out,
            r#"  <polygon class="{class}" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{c}"/>"#,
            cx,
            cy - s,
            cx + s,
            cy + s,
            cx - s,
            cy + s
        ),
        Marker::Cross => writeln!(
            out,
            r#"  <path class="{class}" d="M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}" stroke="{c}" stroke-width="3" fill="none"/>"#,
            cx - s,
            cy - s,
            cx + s,
            cy + s,
            cx - s,
            cy + s,
            cx + s,
            cy - s
        ),
    };
}

/// Renders the disc with axes, quadrant annotations, one marker and label per
/// point, and an optional target marker. Points are drawn relative to their
/// own radius, so the disc always spans the same canvas area. Arousal points
/// up.
pub fn plot_svg(points: &[PlotPoint], target: Option<&EmotionTarget>, opts: &SvgOptions) -> String {
    let size = opts.size;
    let centre = size / 2.0;
    let scale = centre - opts.margin;
    let to_px = |p: &CircumplexPoint| (centre + scale * p.x / p.r, centre - scale * p.y / p.r);
    let fs = opts.font_size;
    let text = escape(&opts.text_color);
    let axis = escape(&opts.axis_stroke);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size:.0}" height="{size:.0}" viewBox="0 0 {size:.0} {size:.0}" font-family="sans-serif" font-size="{fs:.1}">"#
    );
    let _ = writeln!(
        out,
        r#"  <rect width="100%" height="100%" fill="{}"/>"#,
        escape(&opts.background)
    );
    if let Some(title) = &opts.title {
        let _ = writeln!(out, r#"  <title>{}</title>"#, escape(title));
        let _ = writeln!(
            out,
            r#"  <text x="{centre:.2}" y="{:.2}" text-anchor="middle" fill="{text}">{}</text>"#,
            fs * 1.5,
            escape(title)
        );
    }
    let _ = writeln!(
        out,
        r#"  <circle class="disc" cx="{centre:.2}" cy="{centre:.2}" r="{scale:.2}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
        escape(&opts.disc_stroke)
    );
    let (lo, hi) = (centre - scale - 10.0, centre + scale + 10.0);
    let _ = writeln!(
        out,
        r#"  <line class="axis valence" x1="{lo:.2}" y1="{centre:.2}" x2="{hi:.2}" y2="{centre:.2}" stroke="{axis}"/>"#
    );
    let _ = writeln!(
        out,
        r#"  <line class="axis arousal" x1="{centre:.2}" y1="{hi:.2}" x2="{centre:.2}" y2="{lo:.2}" stroke="{axis}"/>"#
    );
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" text-anchor="end" fill="{text}">Valence</text>"#,
        hi,
        centre + fs * 1.4
    );
    let _ = writeln!(
        out,
        r#"  <text x="{:.2}" y="{:.2}" text-anchor="start" fill="{text}">Arousal</text>"#,
        centre + 6.0,
        lo - 4.0
    );
    for q in Quadrant::ALL {
        let (sx, sy) = q.signs();
        let x = centre + sx * (scale * 0.75 + 8.0);
        let y = centre - sy * (scale * 0.75 + 8.0);
        let _ = writeln!(
            out,
            r#"  <text class="quadrant" x="{x:.2}" y="{y:.2}" text-anchor="middle" fill="{text}">{q} {}</text>"#,
            q.emotion()
        );
    }
    if let Some(t) = target {
        let anchor = match t {
            EmotionTarget::Quadrant(q) => {
                let (sx, sy) = q.signs();
                (centre + sx * scale / 2.0, centre - sy * scale / 2.0)
            }
            EmotionTarget::Point(p) => to_px(p),
        };
        marker(&mut out, anchor.0, anchor.1, &opts.target_style, "target");
        let _ = writeln!(
            out,
            r#"  <text class="label" x="{:.2}" y="{:.2}" fill="{text}">target {}</text>"#,
            anchor.0 + opts.target_style.size + 3.0,
            anchor.1 + opts.target_style.size + fs,
            escape(&t.to_string())
        );
    }
    for p in points {
        let (cx, cy) = to_px(&p.point);
        marker(&mut out, cx, cy, &p.style, "point");
        let _ = writeln!(
            out,
            r#"  <text class="label" x="{:.2}" y="{:.2}" fill="{text}">{}</text>"#,
            cx + p.style.size + 3.0,
            cy - p.style.size,
            escape(&p.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

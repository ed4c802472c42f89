//! Self-contained SVG phase portraits and control profiles.
//!
//! Every trajectory becomes one `<path class="trajectory">`; overlays use
//! `class="manifold"`. Paths only contain `M`/`L` commands so the drawn
//! coordinates can be read back.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::control::{control_sinusoidal_cancelled, ChiParams};
use crate::dynamics::{wrap_angle, ControlBounds, PolarState};
use crate::integrator::Sample;
use crate::manifold::ManifoldParams;

/// Points used for each overlay curve.
pub const CURVE_POINTS: usize = 512;
pub const TRAJECTORY_STROKE: f64 = 1.2;
pub const MANIFOLD_STROKE: f64 = 2.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    /// `theta` (wrapped) on the horizontal axis, `r` vertical.
    Polar,
    Cartesian,
}

/// Affine map from data coordinates to SVG pixels (y axis flipped).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub width: f64,
    pub height: f64,
    pub margin: f64,
}

impl Frame {
    pub fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        let w = self.width - 2.0 * self.margin;
        let h = self.height - 2.0 * self.margin;
        (
            self.margin + (x - self.x_min) / (self.x_max - self.x_min) * w,
            self.height - self.margin - (y - self.y_min) / (self.y_max - self.y_min) * h,
        )
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Extent {
    lo_x: f64,
    hi_x: f64,
    lo_y: f64,
    hi_y: f64,
    any: bool,
}

impl Extent {
    fn add(&mut self, x: f64, y: f64) {
        if !(x.is_finite() && y.is_finite()) {
            return;
        }
        if !self.any {
            *self = Extent {
                lo_x: x,
                hi_x: x,
                lo_y: y,
                hi_y: y,
                any: true,
            };
            return;
        }
        self.lo_x = self.lo_x.min(x);
        self.hi_x = self.hi_x.max(x);
        self.lo_y = self.lo_y.min(y);
        self.hi_y = self.hi_y.max(y);
    }
}

/// Polyline pieces; a new piece starts where the wrapped angle jumps.
type Pieces = Vec<Vec<(f64, f64)>>;

fn split_on_wrap(points: impl Iterator<Item = (f64, f64)>) -> Pieces {
    let mut out: Pieces = Vec::new();
    let mut prev: Option<f64> = None;
    for (x, y) in points {
        if !(x.is_finite() && y.is_finite()) {
            prev = None;
            continue;
        }
        match prev {
            Some(px) if (x - px).abs() <= std::f64::consts::PI => {
                out.last_mut().expect("piece started").push((x, y))
            }
            _ => out.push(vec![(x, y)]),
        }
        prev = Some(x);
    }
    out
}

fn path_data(frame: &Frame, pieces: &Pieces, close: bool) -> String {
    let mut d = String::new();
    for piece in pieces {
        for (i, &(x, y)) in piece.iter().enumerate() {
            let (px, py) = frame.to_px(x, y);
            let cmd = if i == 0 { 'M' } else { 'L' };
            if !d.is_empty() {
                d.push(' ');
            }
            let _ = write!(d, "{cmd}{px:.2},{py:.2}");
        }
        if close && piece.len() > 2 {
            d.push_str(" Z");
        }
    }
    d
}

fn trajectory_points(samples: &[Sample], view: View) -> Pieces {
    match view {
        View::Polar => split_on_wrap(samples.iter().map(|s| (wrap_angle(s.theta), s.r))),
        View::Cartesian => {
            let pts: Vec<_> = samples
                .iter()
                .map(|s| (s.x, s.y))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            if pts.is_empty() {
                Vec::new()
            } else {
                vec![pts]
            }
        }
    }
}

/// Overlay curve of one manifold, closed over a full period.
pub fn manifold_points(b: &ManifoldParams, view: View) -> Vec<(f64, f64)> {
    (0..=CURVE_POINTS)
        .map(|i| {
            let theta = TAU * i as f64 / CURVE_POINTS as f64;
            let r = b.g(theta);
            match view {
                View::Polar => (theta, r),
                View::Cartesian => {
                    let p = PolarState::new(r, theta).to_cartesian();
                    (p.x, p.y)
                }
            }
        })
        .collect()
}

struct Doc {
    out: String,
    frame: Frame,
}

impl Doc {
    fn new(frame: Frame, title: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = frame.width,
            h = frame.height
        );
        let _ = writeln!(out, "<title>{title}</title>");
        let _ = writeln!(
            out,
            r#"<defs><clipPath id="plot-area"><rect x="{m}" y="{m}" width="{pw}" height="{ph}"/></clipPath></defs>"#,
            m = frame.margin,
            pw = frame.width - 2.0 * frame.margin,
            ph = frame.height - 2.0 * frame.margin
        );
        let _ = writeln!(
            out,
            r#"<rect width="{}" height="{}" fill="white"/>"#,
            frame.width, frame.height
        );
        Self { out, frame }
    }

    fn axes(&mut self, x_label: &str, y_label: &str, angle_x: bool) {
        let f = self.frame;
        let (x0, y0) = (f.margin, f.height - f.margin);
        let (x1, y1) = (f.width - f.margin, f.margin);
        let x_ticks = if angle_x {
            angle_ticks()
        } else {
            nice_ticks(f.x_min, f.x_max)
        };
        for (fx, label) in x_ticks {
            let (px, _) = f.to_px(fx, f.y_min);
            let _ = writeln!(
                self.out,
                r##"<line class="grid" x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{y1}" stroke="#e4e4e4"/>"##
            );
            let _ = writeln!(
                self.out,
                r#"<text class="tick" x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
                y0 + 16.0
            );
        }
        for (fy, label) in nice_ticks(f.y_min, f.y_max) {
            let (_, py) = f.to_px(f.x_min, fy);
            let _ = writeln!(
                self.out,
                r##"<line class="grid" x1="{x0}" y1="{py:.2}" x2="{x1}" y2="{py:.2}" stroke="#e4e4e4"/>"##
            );
            let _ = writeln!(
                self.out,
                r#"<text class="tick" x="{:.2}" y="{py:.2}" text-anchor="end" dominant-baseline="middle">{label}</text>"#,
                x0 - 6.0
            );
        }
        let _ = writeln!(
            self.out,
            r##"<rect class="axes" x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            x1 - x0,
            y0 - y1
        );
        let _ = writeln!(
            self.out,
            r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
            0.5 * (x0 + x1),
            f.height - 8.0
        );
        let _ = writeln!(
            self.out,
            r#"<text class="axis-label" x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{y_label}</text>"#,
            0.5 * (y0 + y1),
            0.5 * (y0 + y1)
        );
    }

    fn path(&mut self, class: &str, idx: usize, d: &str, stroke: &str, width: f64, dash: bool) {
        let dash = if dash {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            self.out,
            r#"<path class="{class}" data-index="{idx}" clip-path="url(#plot-area)" fill="none" stroke="{stroke}" stroke-width="{width}"{dash} d="{d}"/>"#
        );
    }

    fn marker(&mut self, idx: usize, x: f64, y: f64, color: &str) {
        let (px, py) = self.frame.to_px(x, y);
        let _ = writeln!(
            self.out,
            r#"<circle class="start" data-index="{idx}" cx="{px:.2}" cy="{py:.2}" r="3.5" fill="{color}"/>"#
        );
    }

    fn hline(&mut self, class: &str, y: f64) {
        let f = self.frame;
        let (x0, py) = f.to_px(f.x_min, y);
        let (x1, _) = f.to_px(f.x_max, y);
        let _ = writeln!(
            self.out,
            r##"<line class="{class}" x1="{x0:.2}" y1="{py:.2}" x2="{x1:.2}" y2="{py:.2}" stroke="#888" stroke-dasharray="2 3"/>"##
        );
    }

    fn legend(&mut self, entries: &[(String, &str, bool)]) {
        if entries.is_empty() {
            return;
        }
        let f = self.frame;
        let chars = entries
            .iter()
            .map(|e| e.0.chars().count())
            .max()
            .unwrap_or(0);
        let w = 46.0 + 6.8 * chars as f64;
        let x = f.width - f.margin - 8.0 - w;
        let y = f.margin + 8.0;
        let _ = writeln!(
            self.out,
            r##"<rect class="legend" x="{x:.2}" y="{y}" width="{w:.2}" height="{}" fill="white" fill-opacity="0.85" stroke="#bbb"/>"##,
            8.0 + 16.0 * entries.len() as f64
        );
        for (i, (label, color, dashed)) in entries.iter().enumerate() {
            let ly = y + 14.0 + 16.0 * i as f64;
            let dash = if *dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                self.out,
                r#"<line class="legend-key" x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
                x + 8.0,
                x + 32.0
            );
            let _ = writeln!(
                self.out,
                r#"<text x="{:.2}" y="{ly:.2}" dominant-baseline="middle">{label}</text>"#,
                x + 38.0
            );
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Ticks at round multiples of 1, 2 or 5 times a power of ten.
fn nice_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let raw = (hi - lo) / 5.0;
    if !(raw > 0.0 && raw.is_finite()) {
        return Vec::new();
    }
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last)
        .map(|k| {
            let x = k as f64 * step;
            // avoid "-0"
            let x = if x == 0.0 { 0.0 } else { x };
            (x, format!("{x:.decimals$}"))
        })
        .collect()
}

fn angle_ticks() -> Vec<(f64, String)> {
    ["0", "π/2", "π", "3π/2", "2π"]
        .iter()
        .enumerate()
        .map(|(k, l)| (k as f64 * std::f64::consts::FRAC_PI_2, l.to_string()))
        .collect()
}

fn padded(lo: f64, hi: f64, frac: f64) -> (f64, f64) {
    let span = (hi - lo).max(1e-9);
    (lo - frac * span, hi + frac * span)
}

/// Frame the portrait would be drawn in; exposed for geometric checks.
pub fn portrait_frame<T: AsRef<[Sample]>>(
    trajectories: &[T],
    manifolds: &[ManifoldParams],
    view: View,
) -> Frame {
    let mut ext = Extent::default();
    for t in trajectories {
        for p in trajectory_points(t.as_ref(), view).iter().flatten() {
            ext.add(p.0, p.1);
        }
    }
    for b in manifolds {
        for p in manifold_points(b, view) {
            ext.add(p.0, p.1);
        }
    }
    match view {
        View::Polar => {
            let hi = if ext.any { ext.hi_y } else { 1.0 };
            Frame {
                x_min: 0.0,
                x_max: TAU,
                y_min: 0.0,
                y_max: hi * 1.05,
                width: 640.0,
                height: 420.0,
                margin: 50.0,
            }
        }
        View::Cartesian => {
            let (cx, cy, half) = if ext.any {
                (
                    0.5 * (ext.lo_x + ext.hi_x),
                    0.5 * (ext.lo_y + ext.hi_y),
                    0.5 * (ext.hi_x - ext.lo_x).max(ext.hi_y - ext.lo_y).max(1e-9) * 1.05,
                )
            } else {
                (0.0, 0.0, 1.0)
            };
            Frame {
                x_min: cx - half,
                x_max: cx + half,
                y_min: cy - half,
                y_max: cy + half,
                width: 560.0,
                height: 560.0,
                margin: 50.0,
            }
        }
    }
}

fn start_label(samples: &[Sample]) -> String {
    samples.first().map_or_else(
        || "(empty)".to_string(),
        |s| format!("r0 = {}, θ0 = {}", trim(s.r), trim(wrap_angle(s.theta))),
    )
}

fn trim(x: f64) -> String {
    let s = format!("{x:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn render_phase_portrait<T: AsRef<[Sample]>>(
    trajectories: &[T],
    manifolds: &[ManifoldParams],
    view: View,
) -> String {
    let frame = portrait_frame(trajectories, manifolds, view);
    let title = match view {
        View::Polar => "Phase portrait, polar coordinates",
        View::Cartesian => "Phase portrait, Cartesian coordinates",
    };
    let mut doc = Doc::new(frame, title);
    match view {
        View::Polar => doc.axes("θ (rad)", "r", true),
        View::Cartesian => doc.axes("x", "y", false),
    }
    let mut legend = Vec::new();
    for (k, t) in trajectories.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pieces = trajectory_points(t.as_ref(), view);
        doc.path(
            "trajectory",
            k,
            &path_data(&frame, &pieces, false),
            color,
            TRAJECTORY_STROKE,
            false,
        );
        if let Some(&(x, y)) = pieces.first().and_then(|p| p.first()) {
            doc.marker(k, x, y, color);
        }
        legend.push((start_label(t.as_ref()), color, false));
    }
    // overlays go last so they stay visible over converged trajectories
    for (k, b) in manifolds.iter().enumerate() {
        let pts = manifold_points(b, view);
        let close = view == View::Cartesian;
        doc.path(
            "manifold",
            k,
            &path_data(&frame, &vec![pts], close),
            "#000",
            MANIFOLD_STROKE,
            true,
        );
        legend.push((
            format!("r = {} + {} sin θ", trim(b.b0), trim(b.b1)),
            "#000",
            true,
        ));
    }
    doc.legend(&legend);
    doc.finish()
}

/// Control on the manifold itself (`v = 0`), where it does not depend on the gains.
pub fn manifold_control_points(b: &ManifoldParams, mu: f64) -> Vec<(f64, f64)> {
    let a = ChiParams::new(0.0, 1.0);
    (0..=CURVE_POINTS)
        .map(|i| {
            let theta = TAU * i as f64 / CURVE_POINTS as f64;
            let u = control_sinusoidal_cancelled(PolarState::new(b.g(theta), theta), &a, b, mu)
                .map_or(f64::NAN, |e| e.u_raw);
            (theta, u)
        })
        .collect()
}

/// `u` against the wrapped angle for each trajectory, with the on-manifold
/// control of every `(b, mu)` overlaid and finite bounds drawn as lines.
pub fn render_control_profile<T: AsRef<[Sample]>>(
    trajectories: &[T],
    segments: &[(ManifoldParams, f64)],
    bounds: &ControlBounds,
) -> String {
    const U_CLIP: f64 = 1e3;
    let clip = |u: f64| u.clamp(-U_CLIP, U_CLIP);
    let curves: Vec<_> = segments
        .iter()
        .map(|(b, mu)| manifold_control_points(b, *mu))
        .collect();
    let mut ext = Extent::default();
    for t in trajectories {
        for s in t.as_ref() {
            ext.add(0.0, clip(s.u_applied));
        }
    }
    for c in &curves {
        for &(_, u) in c {
            ext.add(0.0, clip(u));
        }
    }
    if !bounds.is_unbounded() {
        ext.add(0.0, bounds.u_min);
        ext.add(0.0, bounds.u_max);
    }
    let (lo, hi) = if ext.any {
        padded(ext.lo_y, ext.hi_y, 0.05)
    } else {
        (-1.0, 1.0)
    };
    let frame = Frame {
        x_min: 0.0,
        x_max: TAU,
        y_min: lo,
        y_max: hi,
        width: 640.0,
        height: 420.0,
        margin: 50.0,
    };
    let mut doc = Doc::new(frame, "Control against angle");
    doc.axes("θ (rad)", "u", true);
    if !bounds.is_unbounded() {
        doc.hline("bound", bounds.u_min);
        doc.hline("bound", bounds.u_max);
    }
    let mut legend = Vec::new();
    for (k, t) in trajectories.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pieces = split_on_wrap(
            t.as_ref()
                .iter()
                .map(|s| (wrap_angle(s.theta), clip(s.u_applied))),
        );
        doc.path(
            "trajectory",
            k,
            &path_data(&frame, &pieces, false),
            color,
            TRAJECTORY_STROKE,
            false,
        );
        if let Some(&(x, y)) = pieces.first().and_then(|p| p.first()) {
            doc.marker(k, x, y, color);
        }
        legend.push((start_label(t.as_ref()), color, false));
    }
    for (k, (c, (b, mu))) in curves.into_iter().zip(segments).enumerate() {
        let pieces = split_on_wrap(c.into_iter().map(|(x, u)| (x, clip(u))));
        doc.path(
            "manifold",
            k,
            &path_data(&frame, &pieces, false),
            "#000",
            MANIFOLD_STROKE,
            true,
        );
        legend.push((
            format!(
                "on r = {} + {} sin θ, μ = {}",
                trim(b.b0),
                trim(b.b1),
                trim(*mu)
            ),
            "#000",
            true,
        ));
    }
    doc.legend(&legend);
    doc.finish()
}

/// Pixel coordinates of every `<path>` with the given class, in document order.
pub fn parse_paths(svg: &str, class: &str) -> Vec<Vec<(f64, f64)>> {
    let needle = format!(r#"<path class="{class}""#);
    svg.lines()
        .filter(|l| l.starts_with(&needle))
        .map(|l| {
            let start = l.find(" d=\"").map_or(l.len(), |i| i + 4);
            let d = &l[start..l[start..].find('"').map_or(l.len(), |j| start + j)];
            d.split_whitespace()
                .filter(|tok| *tok != "Z")
                .filter_map(|tok| {
                    let (x, y) = tok[1..].split_once(',')?;
                    Some((x.parse().ok()?, y.parse().ok()?))
                })
                .collect()
        })
        .collect()
}

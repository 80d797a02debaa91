//! Deterministic SVG figures of planar skeletons, strips, image samples and
//! characteristics. Coordinates are written with fixed precision so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;

use crate::hypersurface::Characteristic;
use crate::skeleton::{Component, PlanarSkeleton};
use crate::strip::StripWithQuotient;

const PAD: f64 = 0.1;
const WIDTH_PX: f64 = 800.0;

/// A fixed viewport `[lo, hi]` in the plane, flipped so `v` grows upwards.
pub struct Canvas {
    lo: [f64; 2],
    hi: [f64; 2],
    body: String,
}

fn fmt(x: f64) -> String {
    let r = format!("{x:.4}");
    if r == "-0.0000" {
        "0.0000".into()
    } else {
        r
    }
}

impl Canvas {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        let pad = PAD * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        Self {
            lo: [lo[0] - pad, lo[1] - pad],
            hi: [hi[0] + pad, hi[1] + pad],
            body: String::new(),
        }
    }

    fn scale(&self) -> f64 {
        WIDTH_PX / (self.hi[0] - self.lo[0])
    }

    fn px(&self, p: [f64; 2]) -> (String, String) {
        let k = self.scale();
        (fmt((p[0] - self.lo[0]) * k), fmt((self.hi[1] - p[1]) * k))
    }

    pub fn rect(&mut self, lo: [f64; 2], hi: [f64; 2], class: &str) {
        let (x, y) = self.px([lo[0], hi[1]]);
        let k = self.scale();
        let _ = writeln!(
            self.body,
            r#"<rect class="{class}" x="{x}" y="{y}" width="{}" height="{}"/>"#,
            fmt((hi[0] - lo[0]) * k),
            fmt((hi[1] - lo[1]) * k)
        );
    }

    pub fn polyline(&mut self, pts: &[[f64; 2]], class: &str) {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.px(*p);
            if i > 0 {
                d.push(' ');
            }
            let _ = write!(d, "{x},{y}");
        }
        let _ = writeln!(self.body, r#"<polyline class="{class}" points="{d}"/>"#);
    }

    pub fn points(&mut self, pts: &[[f64; 2]], class: &str) {
        for p in pts {
            let (x, y) = self.px(*p);
            let _ = writeln!(self.body, r#"<circle class="{class}" cx="{x}" cy="{y}" r="1.5"/>"#);
        }
    }

    pub fn render(&self, title: &str) -> String {
        let k = self.scale();
        let (w, h) = (fmt(WIDTH_PX), fmt((self.hi[1] - self.lo[1]) * k));
        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
        let _ = writeln!(out, "<title>{title}</title>");
        out.push_str(
            "<style>.rect{fill:#cfe0f3;stroke:#1f4e79;stroke-width:1}.nbhd{fill:none;stroke:#9aa;stroke-dasharray:4 3}\
             .seg{fill:none;stroke:#1f4e79;stroke-width:2}.edge{fill:none;stroke:#7a3b00;stroke-width:1.5}\
             .pocket{fill:#f6dcc0;stroke:#7a3b00;stroke-width:1}.pt{fill:#b22222}.path{fill:none;stroke:#2e7d32;stroke-width:1.5}</style>\n",
        );
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

fn skeleton_bounds(s: &PlanarSkeleton, margin: f64) -> ([f64; 2], [f64; 2]) {
    let (lo, hi) = s.bounds();
    ([lo[0] - margin, lo[1] - margin], [hi[0] + margin, hi[1] + margin])
}

fn draw_skeleton(c: &mut Canvas, s: &PlanarSkeleton, margin: f64) {
    for comp in &s.components {
        match comp {
            Component::Rect(r) => {
                if margin > 0.0 {
                    c.rect([r.u_min - margin, r.v_min - margin], [r.u_max + margin, r.v_max + margin], "nbhd");
                }
                c.rect([r.u_min, r.v_min], [r.u_max, r.v_max], "rect");
            }
            Component::Segment(g) => {
                if margin > 0.0 {
                    c.rect([g.start[0], g.start[1] - margin], [g.end[0], g.end[1] + margin], "nbhd");
                }
                c.polyline(&[g.start, g.end], "seg");
            }
        }
    }
}

/// The skeleton with its margin neighbourhood dashed.
pub fn skeleton_svg(s: &PlanarSkeleton, margin: f64, title: &str) -> String {
    let (lo, hi) = skeleton_bounds(s, margin);
    let mut c = Canvas::new(lo, hi);
    draw_skeleton(&mut c, s, margin);
    c.render(title)
}

/// The skeleton and the planar projections (last coordinate pair) of points.
pub fn samples_svg(s: &PlanarSkeleton, margin: f64, pts: &[Vec<f64>], title: &str) -> String {
    let (mut lo, mut hi) = skeleton_bounds(s, margin);
    let planar: Vec<[f64; 2]> = pts.iter().map(|p| [p[p.len() - 2], p[p.len() - 1]]).collect();
    for p in &planar {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let mut c = Canvas::new(lo, hi);
    draw_skeleton(&mut c, s, margin);
    c.points(&planar, "pt");
    c.render(title)
}

/// Rectangles, pockets and the smoothed envelope of the strip over its
/// rectangles and one period either side.
pub fn strip_svg(strip: &StripWithQuotient, title: &str) -> String {
    let env = strip.envelope;
    let (u0, u1) = (env.origin - strip.step, env.origin + (strip.count as f64 + 1.0) * strip.step);
    let mut c = Canvas::new([u0, env.v_min()], [u1, env.v_max()]);
    for r in &strip.q_rects {
        c.rect([r.u_min, r.v_min], [r.u_max, r.v_max], "pocket");
    }
    for r in &strip.p_rects {
        c.rect([r.u_min, r.v_min], [r.u_max, r.v_max], "rect");
    }
    let steps = 400 * (strip.count + 2);
    let grid = |f: &dyn Fn(f64) -> f64| -> Vec<[f64; 2]> {
        (0..=steps)
            .map(|i| {
                let u = u0 + (u1 - u0) * i as f64 / steps as f64;
                [u, f(u)]
            })
            .collect()
    };
    c.polyline(&grid(&|u| env.top(u)), "edge");
    c.polyline(&grid(&|u| env.bottom(u)), "edge");
    c.render(title)
}

/// The projection of a characteristic to the `(x_i, y_i)` plane.
pub fn characteristic_svg(ch: &Characteristic, pair: usize, title: &str) -> String {
    let pts: Vec<[f64; 2]> = ch.points.iter().map(|p| [p.x[2 * pair], p.x[2 * pair + 1]]).collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pts {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    if pts.is_empty() {
        (lo, hi) = ([0.0; 2], [1.0; 2]);
    }
    let mut c = Canvas::new(lo, hi);
    c.polyline(&pts, "path");
    if let (Some(a), Some(b)) = (pts.first(), pts.last()) {
        c.points(&[*a, *b], "pt");
    }
    c.render(title)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::build_yn;

    #[test]
    fn skeleton_figure_is_deterministic() {
        let y = build_yn(2, 1.0).unwrap();
        let a = skeleton_svg(&y, y.default_margin(), "Y_2");
        assert_eq!(a, skeleton_svg(&y, y.default_margin(), "Y_2"));
        assert_eq!(a.matches("<rect class=\"rect\"").count(), 2);
        assert_eq!(a.matches("class=\"seg\"").count(), 1);
        assert!(!a.contains("NaN"));
    }

    #[test]
    fn strip_figure_has_pockets() {
        let s = StripWithQuotient::for_yn(3, 1.0, 0.5, 0.01, 0.01, 0.005).unwrap();
        let f = strip_svg(&s, "S");
        assert_eq!(f.matches("class=\"pocket\"").count(), 3);
    }
}

//! SVG pictures of an arrangement restricted to a coordinate 2-plane: zero
//! curves by marching squares, the shaded domain, `t_j` ticks and hole poles.
//! Output bytes depend only on the arrangement and the config.

use std::fmt::Write as _;

use crate::arrangement::Arrangement;
use crate::error::invalid;
use crate::geom::{Metadata, Orientation};
use crate::poly::rational_to_f64;
use crate::Result;

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];
const MARGIN: f64 = 48.0;
const MAX_NODES: usize = 1500;

#[derive(Clone, Debug, PartialEq)]
pub struct PlotConfig {
    /// Zero-based ambient axes (horizontal, vertical).
    pub axes: (usize, usize),
    /// `[h_min, h_max, v_min, v_max]`; derived from the t-values when absent.
    pub viewport: Option<[f64; 4]>,
    /// Marching-squares grid step in plane units.
    pub step: Option<f64>,
    /// Values of the coordinates off the plane (default: the seed point).
    pub at: Option<Vec<f64>>,
    pub width: u32,
    pub height: u32,
}

impl Default for PlotConfig {
    fn default() -> Self {
        PlotConfig {
            axes: (0, 1),
            viewport: None,
            step: None,
            at: None,
            width: 640,
            height: 480,
        }
    }
}

/// One zero-curve segment in plane coordinates.
pub type Segment = [(f64, f64); 2];

/// Marching squares for `g` on the node grid `xs` x `ys`: one or two
/// segments per cell whose corner signs differ, endpoints interpolated
/// linearly on the cell edges. Saddles are split by the cell-centre value.
pub fn marching_squares(xs: &[f64], ys: &[f64], g: impl Fn(f64, f64) -> f64) -> Vec<Segment> {
    let vals: Vec<Vec<f64>> = ys.iter().map(|&y| xs.iter().map(|&x| g(x, y)).collect()).collect();
    let mut out = Vec::new();
    for j in 0..ys.len().saturating_sub(1) {
        for i in 0..xs.len().saturating_sub(1) {
            // corners counter-clockwise from bottom-left
            let c = [
                (xs[i], ys[j]),
                (xs[i + 1], ys[j]),
                (xs[i + 1], ys[j + 1]),
                (xs[i], ys[j + 1]),
            ];
            let v = [vals[j][i], vals[j][i + 1], vals[j + 1][i + 1], vals[j + 1][i]];
            let inside = v.map(|a| a > 0.0);
            let case = inside
                .iter()
                .enumerate()
                .fold(0, |m, (k, &b)| m | (usize::from(b) << k));
            if case == 0 || case == 15 {
                continue;
            }
            let cross = |e: usize| -> (f64, f64) {
                let (a, b) = (e, (e + 1) % 4);
                let s = v[a] / (v[a] - v[b]);
                (c[a].0 + s * (c[b].0 - c[a].0), c[a].1 + s * (c[b].1 - c[a].1))
            };
            let edges: Vec<usize> = (0..4).filter(|&e| inside[e] != inside[(e + 1) % 4]).collect();
            if edges.len() == 2 {
                out.push([cross(edges[0]), cross(edges[1])]);
                continue;
            }
            // saddle: pair edges around the corners that share the centre's sign
            let centre = g(0.5 * (c[0].0 + c[2].0), 0.5 * (c[0].1 + c[2].1)) > 0.0;
            let pairs = if inside[0] == centre {
                [(3, 0), (1, 2)]
            } else {
                [(0, 1), (2, 3)]
            };
            for (a, b) in pairs {
                out.push([cross(a), cross(b)]);
            }
        }
    }
    out
}

fn nodes(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = (((hi - lo) / step).ceil() as usize).clamp(2, MAX_NODES);
    (0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect()
}

fn default_viewport(arr: &Arrangement, axes: (usize, usize)) -> [f64; 4] {
    let (t1, tl) = arr.x1_range();
    let pad = (0.25 * (tl - t1)).max(0.5);
    let range = |a: usize| if a == 0 { (t1 - pad, tl + pad) } else { (-2.0, 3.0) };
    let (h, v) = (range(axes.0), range(axes.1));
    [h.0, h.1, v.0, v.1]
}

/// Hole poles along `x1`, as full points.
fn hole_poles(arr: &Arrangement, base: &[f64]) -> Vec<(usize, Vec<f64>)> {
    let mut out = Vec::new();
    for (j, p) in arr.primitives.iter().enumerate() {
        let Metadata::Ellipsoid {
            centers,
            squared_semi_axes,
            orientation: Orientation::Hole,
        } = &p.metadata
        else {
            continue;
        };
        let Some(i0) = p.axes.iter().position(|&a| a == 0) else {
            continue;
        };
        let r = rational_to_f64(&squared_semi_axes[i0]).sqrt();
        let mut x = base.to_vec();
        for (i, &a) in p.axes.iter().enumerate() {
            x[a] = rational_to_f64(&centers[i]);
        }
        for s in [-1.0, 1.0] {
            let mut q = x.clone();
            q[0] += s * r;
            out.push((j, q));
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn trim(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

pub fn render_svg(arr: &Arrangement, cfg: &PlotConfig) -> Result<String> {
    let n = arr.n;
    let (ha, va) = cfg.axes;
    if ha == va || ha >= n || va >= n {
        return Err(invalid(format!(
            "plot needs two distinct axes among x1..x{n}, got x{} and x{}",
            ha + 1,
            va + 1
        )));
    }
    let vp = cfg.viewport.unwrap_or_else(|| default_viewport(arr, cfg.axes));
    if !(vp[0] < vp[1] && vp[2] < vp[3]) || vp.iter().any(|v| !v.is_finite()) {
        return Err(invalid("viewport must satisfy h_min < h_max and v_min < v_max"));
    }
    let base = match &cfg.at {
        Some(a) if a.len() != n => return Err(invalid(format!("--at needs {n} coordinates, got {}", a.len()))),
        Some(a) => a.clone(),
        None => arr.seed_f64(),
    };
    let step = cfg.step.unwrap_or(((vp[1] - vp[0]).max(vp[3] - vp[2])) / 300.0);
    if !(step > 0.0) {
        return Err(invalid("grid step must be positive"));
    }
    let (w, h) = (f64::from(cfg.width), f64::from(cfg.height));
    let px = |x: f64| MARGIN + (x - vp[0]) / (vp[1] - vp[0]) * (w - 2.0 * MARGIN);
    let py = |y: f64| h - MARGIN - (y - vp[2]) / (vp[3] - vp[2]) * (h - 2.0 * MARGIN);
    let point = |a: f64, b: f64| {
        let mut x = base.clone();
        x[ha] = a;
        x[va] = b;
        x
    };
    let comp = arr.compiled();
    let xs = nodes(vp[0], vp[1], step);
    let ys = nodes(vp[2], vp[3], step);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        cfg.width, cfg.height, cfg.width, cfg.height
    );
    let _ = writeln!(
        s,
        "<title>{} on the (x{}, x{}) plane</title>",
        escape(&arr.provenance),
        ha + 1,
        va + 1
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        cfg.width, cfg.height
    );

    // domain: runs of cells whose centre lies in D
    let _ = writeln!(
        s,
        r##"<g id="domain" fill="#9ecae1" fill-opacity="0.6" stroke="none" shape-rendering="crispEdges">"##
    );
    for j in 0..ys.len() - 1 {
        let yc = 0.5 * (ys[j] + ys[j + 1]);
        let mut i = 0;
        while i < xs.len() - 1 {
            if !comp.is_open(&point(0.5 * (xs[i] + xs[i + 1]), yc)) {
                i += 1;
                continue;
            }
            let start = i;
            while i < xs.len() - 1 && comp.is_open(&point(0.5 * (xs[i] + xs[i + 1]), yc)) {
                i += 1;
            }
            let (x0, x1) = (px(xs[start]), px(xs[i]));
            let (y0, y1) = (py(ys[j + 1]), py(ys[j]));
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
                fmt(x0),
                fmt(y0),
                fmt(x1 - x0),
                fmt(y1 - y0)
            );
        }
    }
    let _ = writeln!(s, "</g>");

    // zero curves
    for (j, f) in comp.f.iter().enumerate() {
        let segs = marching_squares(&xs, &ys, |a, b| f.eval(&point(a, b)));
        if segs.is_empty() {
            continue;
        }
        let mut d = String::new();
        for [(a0, b0), (a1, b1)] in segs {
            let _ = write!(d, "M{} {}L{} {}", fmt(px(a0)), fmt(py(b0)), fmt(px(a1)), fmt(py(b1)));
        }
        let _ = writeln!(
            s,
            r#"<path id="f{}" data-kind="{}" fill="none" stroke="{}" stroke-width="1.5" d="{d}"/>"#,
            j + 1,
            arr.primitives[j].kind_tag(),
            PALETTE[j % PALETTE.len()]
        );
    }

    // frame, axis names, t ticks
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        fmt(w - 2.0 * MARGIN),
        fmt(h - 2.0 * MARGIN),
        m = fmt(MARGIN)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">x{}</text>"#,
        fmt(w / 2.0),
        fmt(h - 8.0),
        ha + 1
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{}" text-anchor="middle">x{}</text>"#,
        fmt(h / 2.0),
        va + 1
    );
    for (k, v) in [(0, vp[0]), (1, vp[1])] {
        let anchor = if k == 0 { "start" } else { "end" };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="{anchor}">{}</text>"#,
            fmt(px(v)),
            fmt(h - 24.0),
            trim(v)
        );
    }
    for (k, v) in [(0, vp[2]), (1, vp[3])] {
        let dy = if k == 0 { 0.0 } else { 10.0 };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            fmt(MARGIN - 4.0),
            fmt(py(v) + dy),
            trim(v)
        );
    }
    let _ = writeln!(s, r#"<g id="ticks" stroke="black">"#);
    for (i, t) in arr.t_values.iter().enumerate() {
        let tv = rational_to_f64(t);
        if ha == 0 && tv >= vp[0] && tv <= vp[1] {
            let x = fmt(px(tv));
            let y0 = h - MARGIN;
            let _ = writeln!(
                s,
                r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}"/>"#,
                fmt(y0),
                fmt(y0 + 6.0)
            );
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{}" stroke="none" text-anchor="middle">t{}={t}</text>"#,
                fmt(y0 + 18.0),
                i + 1
            );
        } else if va == 0 && tv >= vp[2] && tv <= vp[3] {
            let y = fmt(py(tv));
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}"/>"#,
                fmt(MARGIN - 6.0),
                fmt(MARGIN)
            );
        }
    }
    let _ = writeln!(s, "</g>");

    // hole poles
    let _ = writeln!(s, r#"<g id="poles" fill="black">"#);
    for (j, q) in hole_poles(arr, &base) {
        let (a, b) = (q[ha], q[va]);
        if a >= vp[0] && a <= vp[1] && b >= vp[2] && b <= vp[3] {
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="3" data-primitive="f{}"/>"#,
                fmt(px(a)),
                fmt(py(b)),
                j + 1
            );
        }
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::tests::unit_square;
    use crate::construct::{build, ConstructionInput, Variant};
    use crate::poly::int;

    #[test]
    fn circle_segments_lie_near_the_curve() {
        let xs = nodes(-2.0, 2.0, 0.05);
        let segs = marching_squares(&xs, &xs, |x, y| 1.0 - x * x - y * y);
        assert!(!segs.is_empty());
        for s in &segs {
            for (x, y) in s {
                assert!((x.hypot(*y) - 1.0).abs() < 2e-3);
            }
        }
    }

    // every cell with mixed corner signs carries a segment, and no other does
    #[test]
    fn segments_match_sign_grid() {
        let g = |x: f64, y: f64| x * y - 0.3 + 0.2 * x;
        let xs = nodes(-1.0, 1.0, 0.1);
        let segs = marching_squares(&xs, &xs, g);
        let k = xs.len() - 1;
        let mut mixed = 0;
        for j in 0..k {
            for i in 0..k {
                let s = [
                    g(xs[i], xs[j]),
                    g(xs[i + 1], xs[j]),
                    g(xs[i + 1], xs[j + 1]),
                    g(xs[i], xs[j + 1]),
                ];
                let pos = s.iter().filter(|v| **v > 0.0).count();
                if pos == 0 || pos == 4 {
                    continue;
                }
                mixed += 1;
                let inside = |p: &(f64, f64)| {
                    p.0 >= xs[i] - 1e-12 && p.0 <= xs[i + 1] + 1e-12 && p.1 >= xs[j] - 1e-12 && p.1 <= xs[j + 1] + 1e-12
                };
                assert!(
                    segs.iter().any(|sg| inside(&sg[0]) && inside(&sg[1])),
                    "cell ({i}, {j})"
                );
            }
        }
        assert!(segs.len() >= mixed);
    }

    #[test]
    fn square_picture() {
        let a = build(&ConstructionInput::new(vec![int(0), int(1)], vec![0], Variant::Mt2).unwrap()).unwrap();
        let svg = render_svg(&a, &PlotConfig::default()).unwrap();
        assert_eq!(svg.matches("<path").count(), 4);
        assert!(svg.contains("t1=0") && svg.contains("t2=1"));
        assert_eq!(svg, render_svg(&a, &PlotConfig::default()).unwrap());
    }

    #[test]
    fn hole_poles_are_marked() {
        let t = (0..4).map(int).collect();
        let a = build(&ConstructionInput::new(t, vec![0, 0, 0], Variant::Mt2).unwrap()).unwrap();
        let svg = render_svg(&a, &PlotConfig::default()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn rejects_degenerate_planes() {
        let a = unit_square();
        for axes in [(0, 0), (0, 2)] {
            let cfg = PlotConfig {
                axes,
                ..PlotConfig::default()
            };
            assert!(render_svg(&a, &cfg).is_err());
        }
    }
}

//! Deterministic SVG figures: CA map with ellipses, p-value curve, hedonic bars.

use std::fmt::Write as _;

use sensory_core::correspondence::{CaResult, ConfidenceEllipse};
use sensory_core::hedonic::{AnovaResult, TukeyResult};
use sensory_core::power::PowerCurve;

use crate::format::fmt_sig;

const PRODUCT_COLOR: &str = "#1f4e9c";
const ATTRIBUTE_COLOR: &str = "#c0392b";
const THRESHOLD_COLOR: &str = "#d62728";
const FONT: &str = "font-family=\"Helvetica, Arial, sans-serif\"";

fn n(x: f64) -> String {
    format!("{x:.2}")
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        n(w),
        n(h),
        n(w),
        n(h)
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
}

/// Linear map from data interval to pixel interval.
#[derive(Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn at(&self, x: f64) -> f64 {
        self.p0 + (x - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

/// "Dim k (x.x%)".
pub fn axis_label(result: &CaResult, k: usize) -> String {
    match result.inertia_pct.get(k) {
        Some(p) => format!("Dim {} ({p:.1}%)", k + 1),
        None => format!("Dim {}", k + 1),
    }
}

fn ellipse_outline(e: &ConfidenceEllipse, segments: usize) -> Vec<[f64; 2]> {
    let (c, s) = (e.angle.cos(), e.angle.sin());
    (0..segments)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / segments as f64;
            let (u, v) = (e.semi_axes[0] * t.cos(), e.semi_axes[1] * t.sin());
            [e.center[0] + u * c - v * s, e.center[1] + u * s + v * c]
        })
        .collect()
}

/// Products (blue) and attributes (red) on axes 1-2 with product ellipses.
pub fn ca_map(result: &CaResult, ellipses: &[ConfidenceEllipse], size: f64) -> String {
    let coord = |c: &[f64], k: usize| c.get(k).copied().unwrap_or(0.0);
    let mut pts: Vec<[f64; 2]> = result
        .row_coords
        .iter()
        .chain(&result.col_coords)
        .map(|c| [coord(c, 0), coord(c, 1)])
        .collect();
    for e in ellipses {
        pts.extend(ellipse_outline(e, 72));
    }
    let extent = pts.iter().flat_map(|p| [p[0].abs(), p[1].abs()]).fold(0.0f64, f64::max);
    let extent = if extent > 0.0 { extent * 1.15 } else { 1.0 };
    let margin = 60.0;
    let sx = Scale { d0: -extent, d1: extent, p0: margin, p1: size - margin };
    let sy = Scale { d0: -extent, d1: extent, p0: size - margin, p1: margin };
    let mut out = String::new();
    open(&mut out, size, size);
    let (ox, oy) = (sx.at(0.0), sy.at(0.0));
    let _ = writeln!(out, "<g stroke=\"#888\" stroke-dasharray=\"4 4\">");
    let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", n(margin), n(oy), n(size - margin), n(oy));
    let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", n(ox), n(margin), n(ox), n(size - margin));
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"#888\"/>", n(ox), n(oy));
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT} font-size=\"14\">{}</text>",
        n(size / 2.0),
        n(size - 20.0),
        esc(&axis_label(result, 0))
    );
    let _ = writeln!(
        out,
        "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" {FONT} font-size=\"14\" transform=\"rotate(-90 20 {})\">{}</text>",
        n(size / 2.0),
        n(size / 2.0),
        esc(&axis_label(result, 1))
    );
    if result.n_axes() == 0 {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT} font-size=\"14\">0 axes</text>",
            n(size / 2.0),
            n(margin / 2.0)
        );
        let _ = writeln!(out, "</svg>");
        return out;
    }
    for e in ellipses {
        let outline: Vec<String> = ellipse_outline(e, 72).iter().map(|p| format!("{},{}", n(sx.at(p[0])), n(sy.at(p[1])))).collect();
        let _ = writeln!(
            out,
            "<polygon points=\"{}\" fill=\"{PRODUCT_COLOR}\" fill-opacity=\"0.08\" stroke=\"{PRODUCT_COLOR}\" stroke-width=\"1\"/>",
            outline.join(" ")
        );
    }
    for (label, c) in result.col_labels.iter().zip(&result.col_coords) {
        let (x, y) = (sx.at(coord(c, 0)), sy.at(coord(c, 1)));
        let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{ATTRIBUTE_COLOR}\"/>", n(x), n(y));
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" {FONT} font-size=\"12\" fill=\"{ATTRIBUTE_COLOR}\">{}</text>",
            n(x + 4.0),
            n(y - 4.0),
            esc(label)
        );
    }
    for (label, c) in result.row_labels.iter().zip(&result.row_coords) {
        let (x, y) = (sx.at(coord(c, 0)), sy.at(coord(c, 1)));
        let _ = writeln!(out, "<rect x=\"{}\" y=\"{}\" width=\"6\" height=\"6\" fill=\"{PRODUCT_COLOR}\"/>", n(x - 3.0), n(y - 3.0));
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" {FONT} font-size=\"13\" font-weight=\"bold\" fill=\"{PRODUCT_COLOR}\">{}</text>",
            n(x + 5.0),
            n(y + 14.0),
            esc(label)
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}

/// Summary curve with the 10-90% band, a red line at the threshold and the crossing size.
pub fn power_plot(curve: &PowerCurve, width: f64, height: f64) -> String {
    let (ml, mr, mt, mb) = (70.0, 30.0, 30.0, 60.0);
    let first = *curve.sizes.first().unwrap_or(&0) as f64;
    let last = *curve.sizes.last().unwrap_or(&1) as f64;
    let (d0, d1) = if last > first { (first, last) } else { (first - 1.0, first + 1.0) };
    let sx = Scale { d0, d1, p0: ml, p1: width - mr };
    let sy = Scale { d0: 0.0, d1: 1.0, p0: height - mb, p1: mt };
    let mut out = String::new();
    open(&mut out, width, height);
    let _ = writeln!(out, "<g stroke=\"black\" fill=\"none\">");
    let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", n(ml), n(height - mb), n(width - mr), n(height - mb));
    let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", n(ml), n(mt), n(ml), n(height - mb));
    let _ = writeln!(out, "</g>");
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = sy.at(v);
        let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", n(ml - 5.0), n(y), n(ml), n(y));
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" {FONT} font-size=\"12\">{}</text>",
            n(ml - 8.0),
            n(y + 4.0),
            fmt_sig(v, 2)
        );
    }
    for &s in &curve.sizes {
        let x = sx.at(s as f64);
        let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", n(x), n(height - mb), n(x), n(height - mb + 5.0));
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT} font-size=\"12\">{s}</text>",
            n(x),
            n(height - mb + 20.0)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT} font-size=\"14\">Number of panelists</text>",
        n((ml + width - mr) / 2.0),
        n(height - 15.0)
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" {FONT} font-size=\"14\" transform=\"rotate(-90 18 {})\">p-value ({})</text>",
        n((mt + height - mb) / 2.0),
        n((mt + height - mb) / 2.0),
        curve.summary
    );
    let upper: Vec<String> = curve.sizes.iter().zip(&curve.q90_p).map(|(&s, &q)| format!("{},{}", n(sx.at(s as f64)), n(sy.at(q)))).collect();
    let lower: Vec<String> =
        curve.sizes.iter().zip(&curve.q10_p).rev().map(|(&s, &q)| format!("{},{}", n(sx.at(s as f64)), n(sy.at(q)))).collect();
    let _ = writeln!(out, "<polygon points=\"{} {}\" fill=\"#999\" fill-opacity=\"0.3\" stroke=\"none\"/>", upper.join(" "), lower.join(" "));
    let ty = sy.at(curve.threshold);
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{THRESHOLD_COLOR}\" stroke-width=\"1.5\"/>",
        n(ml),
        n(ty),
        n(width - mr),
        n(ty)
    );
    let line: Vec<String> =
        curve.sizes.iter().zip(curve.summary_values()).map(|(&s, &p)| format!("{},{}", n(sx.at(s as f64)), n(sy.at(p)))).collect();
    let _ = writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>", line.join(" "));
    for (&s, &p) in curve.sizes.iter().zip(curve.summary_values()) {
        let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"black\"/>", n(sx.at(s as f64)), n(sy.at(p)));
    }
    if let Some(c) = curve.crossing_size {
        let x = sx.at(c);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{THRESHOLD_COLOR}\" stroke-dasharray=\"4 3\"/>",
            n(x),
            n(mt),
            n(x),
            n(height - mb)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" {FONT} font-size=\"12\" fill=\"{THRESHOLD_COLOR}\">p &lt; {} from {} panelists</text>",
            n(x + 4.0),
            n(mt + 14.0),
            fmt_sig(curve.threshold, 3),
            fmt_sig(c, 3)
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}

/// Mean score per product with standard-error bars and compact letters.
pub fn hedonic_bars(anova: &AnovaResult, tukey: &TukeyResult, width: f64, height: f64) -> String {
    let (ml, mr, mt, mb) = (60.0, 20.0, 30.0, 70.0);
    let se = anova.standard_errors();
    let top = anova.group_means.iter().zip(&se).map(|(m, s)| m + s).fold(1.0f64, f64::max);
    let ymax = (top.ceil() + 1.0).min(10.0).max(top + 0.5);
    let sy = Scale { d0: 0.0, d1: ymax, p0: height - mb, p1: mt };
    let k = anova.group_labels.len();
    let slot = (width - ml - mr) / k as f64;
    let mut out = String::new();
    open(&mut out, width, height);
    let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", n(ml), n(mt), n(ml), n(height - mb));
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        n(ml),
        n(height - mb),
        n(width - mr),
        n(height - mb)
    );
    let mut tick = 0.0;
    while tick <= ymax + 1e-9 {
        let y = sy.at(tick);
        let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", n(ml - 5.0), n(y), n(ml), n(y));
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" {FONT} font-size=\"12\">{}</text>",
            n(ml - 8.0),
            n(y + 4.0),
            fmt_sig(tick, 3)
        );
        tick += 1.0;
    }
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" {FONT} font-size=\"14\" transform=\"rotate(-90 16 {})\">Mean hedonic score</text>",
        n((mt + height - mb) / 2.0),
        n((mt + height - mb) / 2.0)
    );
    for i in 0..k {
        let cx = ml + slot * (i as f64 + 0.5);
        let bw = slot * 0.6;
        let m = anova.group_means[i];
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#9db4d6\" stroke=\"black\"/>",
            n(cx - bw / 2.0),
            n(sy.at(m)),
            n(bw),
            n(sy.at(0.0) - sy.at(m))
        );
        let (lo, hi) = (sy.at(m - se[i]), sy.at(m + se[i]));
        let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", n(cx), n(lo), n(cx), n(hi));
        for y in [lo, hi] {
            let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", n(cx - 6.0), n(y), n(cx + 6.0), n(y));
        }
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" {FONT} font-size=\"14\">{}</text>",
            n(cx),
            n(hi - 8.0),
            esc(&tukey.letters[i])
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" {FONT} font-size=\"12\" transform=\"rotate(-35 {} {})\">{}</text>",
            n(cx),
            n(height - mb + 16.0),
            n(cx),
            n(height - mb + 16.0),
            esc(&anova.group_labels[i])
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use sensory_core::association::ContingencyTable;
    use sensory_core::correspondence::ca;
    use sensory_core::hedonic::{anova, tukey_hsd, HedonicGroups};

    fn balanced(svg: &str) -> bool {
        svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>") && svg.matches("<g").count() == svg.matches("</g>").count()
    }

    #[test]
    fn outline_lies_on_the_ellipse() {
        let e = ConfidenceEllipse::from_cloud(
            "P",
            &[[0.0, 0.0], [1.0, 0.5], [2.0, 0.7], [0.5, 1.5], [1.5, -0.2], [0.2, 0.9]],
            0.95,
            0,
        )
        .unwrap();
        let (c, s) = (e.angle.cos(), e.angle.sin());
        for p in ellipse_outline(&e, 72) {
            let (dx, dy) = (p[0] - e.center[0], p[1] - e.center[1]);
            let (u, v) = (dx * c + dy * s, -dx * s + dy * c);
            let r = (u / e.semi_axes[0]).powi(2) + (v / e.semi_axes[1]).powi(2);
            assert!((r - 1.0).abs() < 1e-9, "{r}");
        }
    }

    #[test]
    fn ca_map_labels_and_colours() {
        let t = ContingencyTable::new(
            vec!["W<1>".into(), "W2".into(), "W3".into()],
            vec!["Fruity".into(), "Woody".into(), "Acid".into()],
            vec![vec![20, 5, 3], vec![4, 18, 6], vec![5, 6, 19]],
        )
        .unwrap();
        let r = ca(&t).unwrap();
        let svg = ca_map(&r, &[], 500.0);
        assert!(balanced(&svg));
        assert!(svg.contains("W&lt;1&gt;") && svg.contains(PRODUCT_COLOR) && svg.contains(ATTRIBUTE_COLOR));
        assert!(svg.contains(&esc(&axis_label(&r, 0))) && svg.contains(&esc(&axis_label(&r, 1))));
        assert_eq!(svg, ca_map(&r, &[], 500.0));
        assert!(axis_label(&r, 0).starts_with("Dim 1 (") && axis_label(&r, 0).ends_with("%)"));
    }

    #[test]
    fn hedonic_chart_shows_letters() {
        let g = HedonicGroups::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![vec![7.0, 8.0, 7.0, 8.0], vec![4.0, 5.0, 4.0, 5.0], vec![4.0, 4.0, 5.0, 5.0]],
        )
        .unwrap();
        let a = anova(&g).unwrap();
        let t = tukey_hsd(&a, 0.05).unwrap();
        let svg = hedonic_bars(&a, &t, 400.0, 300.0);
        assert!(balanced(&svg));
        assert_eq!(svg.matches("<rect x=").count(), 3);
        assert!(svg.contains(">a</text>") && svg.contains(">b</text>"));
    }
}

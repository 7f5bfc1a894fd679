//! Minimal static SVG charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 56.0;
const COLOURS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let m = 0.05 * (hi - lo);
    (lo - m, hi + m)
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
}

/// Scatter plot; `groups` pairs a legend name with its points.
pub fn scatter(title: &str, x_label: &str, y_label: &str, groups: &[(String, Vec<[f64; 2]>)]) -> String {
    let (x0, x1) = range(groups.iter().flat_map(|g| g.1.iter().map(|p| p[0])));
    let (y0, y1) = range(groups.iter().flat_map(|g| g.1.iter().map(|p| p[1])));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    header(&mut s, W, H, title);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (i, (name, pts)) in groups.iter().enumerate() {
        let c = COLOURS[i % COLOURS.len()];
        for p in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{c}" fill-opacity="0.7"/>"#, sx(p[0]), sy(p[1]));
        }
        let ly = PAD + 16.0 * i as f64 + 12.0;
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{ly:.1}" r="4" fill="{c}"/>"#, W - PAD - 90.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, W - PAD - 80.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, f) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// One cluster of box plots per category; every category holds one series per `series` name.
pub fn boxes(title: &str, series: &[&str], categories: &[(String, Vec<Vec<f64>>)]) -> String {
    let slot = 18.0;
    let gap = 14.0;
    let group_w = slot * series.len() as f64 + gap;
    let plot_h = 300.0;
    let bottom = PAD + plot_h;
    let width = (2.0 * PAD + group_w * categories.len() as f64).max(320.0);
    let height = bottom + 220.0;
    let (y0, y1) = range(categories.iter().flat_map(|c| c.1.iter().flatten().copied()));
    let sy = |y: f64| bottom - (y - y0) / (y1 - y0) * plot_h;
    let mut s = String::new();
    header(&mut s, width, height, title);
    let _ = writeln!(s, r#"<line x1="{PAD}" y1="{bottom}" x2="{:.1}" y2="{bottom}" stroke="black"/>"#, width - PAD);
    let _ = writeln!(s, r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{bottom}" stroke="black"/>"#);
    for v in [y0, 0.5 * (y0 + y1), y1] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#, PAD - 4.0, sy(v) + 4.0);
    }
    for (i, name) in series.iter().enumerate() {
        let c = COLOURS[i % COLOURS.len()];
        let x = PAD + 10.0 + 70.0 * i as f64;
        let _ = writeln!(s, r#"<rect x="{x:.1}" y="30" width="10" height="10" fill="{c}"/>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="39">{}</text>"#, x + 14.0, escape(name));
    }
    for (g, (name, values)) in categories.iter().enumerate() {
        let gx = PAD + group_w * g as f64 + gap / 2.0;
        for (i, v) in values.iter().enumerate() {
            if v.is_empty() {
                continue;
            }
            let mut v = v.clone();
            v.sort_by(f64::total_cmp);
            let c = COLOURS[i % COLOURS.len()];
            let x = gx + slot * i as f64;
            let mid = x + slot / 2.0 - 2.0;
            let (lo, q1, med, q3, hi) = (v[0], quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75), v[v.len() - 1]);
            let _ = writeln!(s, r#"<line x1="{mid:.1}" y1="{:.2}" x2="{mid:.1}" y2="{:.2}" stroke="{c}"/>"#, sy(lo), sy(hi));
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.2}" width="{:.1}" height="{:.2}" fill="{c}" fill-opacity="0.4" stroke="{c}"/>"#,
                x + 2.0,
                sy(q3),
                slot - 8.0,
                (sy(q1) - sy(q3)).max(0.5)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{:.2}" x2="{:.1}" y2="{:.2}" stroke="black"/>"#,
                x + 2.0,
                sy(med),
                x + slot - 6.0,
                sy(med)
            );
        }
        let lx = gx + group_w / 2.0 - gap / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{:.1}" text-anchor="end" transform="rotate(-60 {lx:.1} {:.1})" font-size="10">{}</text>"#,
            bottom + 12.0,
            bottom + 12.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

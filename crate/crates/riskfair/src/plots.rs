//! Density grids as CSV and as small hand-written SVG charts.

use std::fmt::Write as _;

use riskfair_core::explore::{Density1d, Density2d};

use crate::report::{csv_table, fmt_sig};

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 2] = ["#1f77b4", "#d62728"];

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(s, r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#, H - PAD, W - PAD);
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axis_labels(s: &mut String, x_lo: f64, x_hi: f64, y_hi: f64, x_label: &str) {
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}" text-anchor="middle">{}</text>"#, H - PAD + 16.0, fmt_sig(x_lo));
    let _ =
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W - PAD, H - PAD + 16.0, fmt_sig(x_hi));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, escape(x_label));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 4.0, fmt_sig(y_hi));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">0</text>"#, PAD - 4.0, H - PAD);
}

fn legend(s: &mut String, labels: &[String]) {
    for (i, l) in labels.iter().enumerate() {
        let y = PAD + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            W - PAD - 90.0,
            y - 9.0,
            COLORS[i % 2],
            W - PAD - 75.0,
            y,
            escape(l)
        );
    }
}

fn sx(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        PAD + (v - lo) / (hi - lo) * (W - 2.0 * PAD)
    } else {
        W / 2.0
    }
}

fn sy(v: f64, hi: f64) -> f64 {
    if hi > 0.0 {
        H - PAD - v / hi * (H - 2.0 * PAD)
    } else {
        H - PAD
    }
}

/// `x, <group>...` rows of smoothed density; groups without smoothing are
/// left blank.
pub fn smoothed_csv(d: &Density1d) -> String {
    let mut header = vec!["x".to_string()];
    header.extend(d.groups.iter().map(|g| g.label.clone()));
    let rows: Vec<Vec<String>> = d
        .grid
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut r = vec![format!("{x}")];
            r.extend(d.groups.iter().map(|g| g.smoothed.as_ref().map(|s| format!("{}", s[i])).unwrap_or_default()));
            r
        })
        .collect();
    csv_table(&header.iter().map(String::as_str).collect::<Vec<_>>(), &rows)
}

pub fn histogram_csv(d: &Density1d) -> String {
    let mut header = vec!["bin_lo".to_string(), "bin_hi".to_string()];
    header.extend(d.groups.iter().map(|g| g.label.clone()));
    let rows: Vec<Vec<String>> = d
        .bin_edges
        .windows(2)
        .enumerate()
        .map(|(i, e)| {
            let mut r = vec![format!("{}", e[0]), format!("{}", e[1])];
            r.extend(d.groups.iter().map(|g| g.counts[i].to_string()));
            r
        })
        .collect();
    csv_table(&header.iter().map(String::as_str).collect::<Vec<_>>(), &rows)
}

pub fn grid2d_csv(d: &Density2d) -> String {
    let mut rows = Vec::new();
    for (ix, col) in d.counts.iter().enumerate() {
        for (iy, c) in col.iter().enumerate() {
            rows.push(vec![
                format!("{}", d.x_edges[ix]),
                format!("{}", d.x_edges[ix + 1]),
                format!("{}", d.y_edges[iy]),
                format!("{}", d.y_edges[iy + 1]),
                c.to_string(),
            ]);
        }
    }
    csv_table(&["x_lo", "x_hi", "y_lo", "y_hi", "count"], &rows)
}

pub fn smoothed_svg(d: &Density1d, title: &str, x_label: &str) -> String {
    let (lo, hi) = (d.grid[0], d.grid[d.grid.len() - 1]);
    let y_hi = d.groups.iter().filter_map(|g| g.smoothed.as_ref()).flatten().copied().fold(0.0, f64::max);
    let mut s = svg_open(title);
    for (gi, g) in d.groups.iter().enumerate() {
        let Some(ys) = &g.smoothed else { continue };
        let mut path = String::new();
        for (i, (x, y)) in d.grid.iter().zip(ys).enumerate() {
            let _ = write!(path, "{}{:.2} {:.2}", if i == 0 { "M" } else { " L" }, sx(*x, lo, hi), sy(*y, y_hi));
        }
        let _ = writeln!(s, r#"<path d="{path}" fill="none" stroke="{}" stroke-width="1.5"/>"#, COLORS[gi % 2]);
    }
    axis_labels(&mut s, lo, hi, y_hi, x_label);
    legend(&mut s, &d.groups.iter().map(|g| format!("{} (n={})", g.label, g.size)).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

pub fn histogram_svg(d: &Density1d, title: &str, x_label: &str) -> String {
    let (lo, hi) = (d.bin_edges[0], d.bin_edges[d.bin_edges.len() - 1]);
    let y_hi = d.groups.iter().flat_map(|g| &g.counts).copied().max().unwrap_or(0) as f64;
    let mut s = svg_open(title);
    let k = d.groups.len().max(1) as f64;
    for (gi, g) in d.groups.iter().enumerate() {
        for (i, &c) in g.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let x0 = sx(d.bin_edges[i], lo, hi);
            let x1 = sx(d.bin_edges[i + 1], lo, hi);
            let bw = ((x1 - x0) / k).max(0.5);
            let top = sy(c as f64, y_hi);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.8"/>"#,
                x0 + bw * gi as f64,
                top,
                bw,
                H - PAD - top,
                COLORS[gi % 2]
            );
        }
    }
    axis_labels(&mut s, lo, hi, y_hi, x_label);
    legend(&mut s, &d.groups.iter().map(|g| format!("{} (n={})", g.label, g.size)).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

pub fn heatmap_svg(d: &Density2d, title: &str, x_label: &str, y_label: &str) -> String {
    let (xlo, xhi) = (d.x_edges[0], d.x_edges[d.x_edges.len() - 1]);
    let (ylo, yhi) = (d.y_edges[0], d.y_edges[d.y_edges.len() - 1]);
    let max = d.counts.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let gx = d.counts.len() as f64;
    let gy = d.counts.first().map_or(1, Vec::len) as f64;
    let cw = (W - 2.0 * PAD) / gx;
    let ch = (H - 2.0 * PAD) / gy;
    let mut s = svg_open(title);
    for (ix, col) in d.counts.iter().enumerate() {
        for (iy, &c) in col.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let shade = 1.0 - c as f64 / max;
            let v = (40.0 + 215.0 * shade).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({v},{v},255)"/>"#,
                PAD + cw * ix as f64,
                H - PAD - ch * (iy + 1) as f64,
                cw,
                ch
            );
        }
    }
    axis_labels(&mut s, xlo, xhi, 0.0, x_label);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 4.0, fmt_sig(yhi));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, H - PAD - 12.0, fmt_sig(ylo));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    s.push_str("</svg>\n");
    s
}

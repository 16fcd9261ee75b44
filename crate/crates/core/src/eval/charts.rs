//! Minimal SVG bar and line charts for the benchmark summary.

use std::fmt::Write;

use super::Summary;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 4] = ["#4C72B0", "#DD8452", "#55A868", "#C44E52"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(title: &str, y_max: f64, body: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = write!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (x0, y0, y1) = (PAD, H - PAD, PAD);
    let _ = write!(s, r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#, W - PAD / 2.0);
    let _ = write!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for t in 0..=4 {
        let v = y_max * t as f64 / 4.0;
        let y = y0 - (y0 - y1) * t as f64 / 4.0;
        let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x0 - 4.0, y + 4.0, short(v));
    }
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

fn short(v: f64) -> String {
    if v == 0.0 || (0.01..1000.0).contains(&v.abs()) {
        format!("{v:.2}")
    } else {
        format!("{v:.1e}")
    }
}

fn nice_max(v: f64) -> f64 {
    if v > 0.0 {
        v * 1.1
    } else {
        1.0
    }
}

/// Vertical bars, one per `(label, value)`.
pub fn bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let y_max = nice_max(bars.iter().map(|b| b.1).fold(0.0, f64::max));
    let plot_w = W - 1.5 * PAD;
    let slot = plot_w / bars.len().max(1) as f64;
    let mut body = String::new();
    for (i, (label, v)) in bars.iter().enumerate() {
        let h = (H - 2.0 * PAD) * v / y_max;
        let x = PAD + slot * i as f64 + slot * 0.15;
        let _ = write!(
            body,
            r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{}"/>"#,
            H - PAD - h,
            slot * 0.7,
            COLORS[i % COLORS.len()]
        );
        let _ = write!(
            body,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            x + slot * 0.35,
            H - PAD + 14.0,
            escape(label)
        );
    }
    frame(title, y_max, &body)
}

/// Polylines with point markers; each series is `(name, points)`.
pub fn line_chart(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let all = series.iter().flat_map(|s| s.1.iter());
    let (mut x_lo, mut x_hi, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_hi = y_hi.max(y);
    }
    if !(x_hi > x_lo) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    let y_max = nice_max(y_hi);
    let px = |x: f64| PAD + (W - 1.5 * PAD) * (x - x_lo) / (x_hi - x_lo);
    let py = |y: f64| H - PAD - (H - 2.0 * PAD) * y / y_max;
    let mut body = String::new();
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = write!(body, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, path.join(" "));
        for &(x, y) in pts {
            let _ = write!(body, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
        let _ = write!(
            body,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - 1.5 * PAD - 80.0,
            PAD + 14.0 * i as f64,
            escape(name)
        );
    }
    let _ = write!(
        body,
        r#"<text x="{}" y="{}" text-anchor="middle">{} .. {}</text>"#,
        W / 2.0,
        H - PAD + 28.0,
        short(x_lo),
        short(x_hi)
    );
    frame(title, y_max, &body)
}

/// Bars over `bins` equal-width buckets of `values`.
pub fn histogram(title: &str, values: &[f64], bins: usize) -> String {
    let hi = values.iter().copied().fold(0.0, f64::max);
    let width = if hi > 0.0 { hi / bins as f64 } else { 1.0 };
    let mut counts = vec![0.0; bins];
    for v in values {
        counts[((v / width) as usize).min(bins - 1)] += 1.0;
    }
    let bars: Vec<(String, f64)> = counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (if i % 2 == 0 { short(i as f64 * width) } else { String::new() }, c))
        .collect();
    bar_chart(title, &bars)
}

/// All summary charts as `(file name, svg)`.
pub fn render_all(s: &Summary) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let rates: Vec<(String, f64)> = s.k_detection_rate.iter().map(|(k, v)| (k.clone(), *v)).collect();
    out.push(("k_detection.svg".into(), bar_chart("Correct number of clusters (fraction)", &rates)));
    out.push((
        "centroid_distance.svg".into(),
        histogram("Mean centroid distance / bounding-box diagonal", &s.centroid_distance.normalized, 10),
    ));
    let mut ar = Vec::new();
    let mut it = Vec::new();
    let mut ratio = Vec::new();
    for (a, x) in &s.accuracy {
        ar.push((format!("{a} det"), x.detected_mean));
        ar.push((format!("{a} rnd"), x.random_mean));
    }
    for (a, x) in &s.iterations {
        it.push((format!("{a} det"), x.detected_median));
        it.push((format!("{a} rnd"), x.random_median));
    }
    for (a, x) in &s.time_ratio {
        ratio.push((format!("{a}"), x.cluster));
        ratio.push((format!("{a} +det"), x.pipeline));
    }
    out.push(("accuracy.svg".into(), bar_chart("Mean accuracy rate", &ar)));
    out.push(("iterations.svg".into(), bar_chart("Median iterations", &it)));
    out.push(("time_ratio.svg".into(), bar_chart("Time with detected init / random init", &ratio)));
    let detect: Vec<(f64, f64)> = s.time_vs_n.iter().map(|p| (p.n as f64, p.time_detect_s)).collect();
    let sweep: Vec<(f64, f64)> = s.time_vs_n.iter().map(|p| (p.n as f64, p.time_index_sweep_s)).collect();
    out.push((
        "time_vs_n.svg".into(),
        line_chart(
            "Seconds against number of points",
            &[("detector".to_string(), detect), ("index sweep".to_string(), sweep)],
        ),
    ));
    out
}

//! Self-contained SVG plot of the mean-density curve.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 56.0;

#[derive(Debug, Clone, Default)]
pub struct PlotMarks {
    pub knee: Option<usize>,
    pub k_star: Option<usize>,
    pub region: Option<(usize, usize)>,
}

pub fn render_svg(title: &str, curve: &[(usize, f64)], marks: &PlotMarks) -> String {
    let finite: Vec<(usize, f64)> = curve.iter().copied().filter(|p| p.1.is_finite()).collect();
    let (k_lo, k_hi) = match (curve.first(), curve.last()) {
        (Some(a), Some(b)) => (a.0 as f64, b.0 as f64),
        _ => (1.0, 2.0),
    };
    let (k_lo, k_hi) = if k_hi > k_lo {
        (k_lo, k_hi)
    } else {
        (k_lo - 1.0, k_hi + 1.0)
    };
    let y_max = finite.iter().map(|p| p.1).fold(0.0, f64::max);
    let y_step = nice_step(if y_max > 0.0 { y_max } else { 1.0 } / 5.0);
    let y_top = (y_max / y_step).ceil().max(1.0) * y_step;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |k: f64| LEFT + (k - k_lo) / (k_hi - k_lo) * plot_w;
    let y = |v: f64| TOP + plot_h - v / y_top * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    if let Some((lo, hi)) = marks.region {
        let x0 = x(lo as f64 - 0.5).max(LEFT);
        let x1 = x(hi as f64 + 0.5).min(LEFT + plot_w);
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.2}" y="{TOP}" width="{:.2}" height="{plot_h}" fill="#f2c14e" fill-opacity="0.3"><title>elbow region [{lo}, {hi}]</title></rect>"##,
            x1 - x0
        );
    }

    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    let span = (k_hi - k_lo) as usize;
    let x_step = (span / 20).max(1);
    let mut k = k_lo as usize;
    while k as f64 <= k_hi {
        let px = x(k as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{0}" x2="{px:.2}" y2="{1}" stroke="black"/><text x="{px:.2}" y="{2}" text-anchor="middle">{k}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 19.0
        );
        k += x_step;
    }
    let mut i = 0.0;
    while i * y_step <= y_top * (1.0 + 1e-9) {
        let v = i * y_step;
        let py = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{0}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><line x1="{LEFT}" y1="{py:.2}" x2="{1}" y2="{py:.2}" stroke="#dddddd"/><text x="{2}" y="{3:.2}" text-anchor="end">{4}</text>"##,
            LEFT - 5.0,
            LEFT + plot_w,
            LEFT - 8.0,
            py + 4.0,
            tick_label(v, y_step)
        );
        i += 1.0;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">k</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {}) rotate(-90)" text-anchor="middle">mean density (volume per point)</text>"#,
        TOP + plot_h / 2.0
    );

    let points: Vec<String> = finite
        .iter()
        .map(|&(k, v)| format!("{:.2},{:.2}", x(k as f64), y(v)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="2"/>"##,
        points.join(" ")
    );
    for &(k, v) in &finite {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f5fa8"><title>k={k} density={v:e}</title></circle>"##,
            x(k as f64),
            y(v)
        );
    }

    let value_at = |k: usize| finite.iter().find(|p| p.0 == k).map(|p| p.1);
    if let Some((k, v)) = marks.knee.and_then(|k| value_at(k).map(|v| (k, v))) {
        let (px, py) = (x(k as f64), y(v));
        let _ = writeln!(
            s,
            r##"<circle cx="{px:.2}" cy="{py:.2}" r="7" fill="none" stroke="#c0392b" stroke-width="2"/><text x="{:.2}" y="{:.2}" fill="#c0392b">knee k={k}</text>"##,
            px + 9.0,
            py - 9.0
        );
    }
    if let Some((k, v)) = marks.k_star.and_then(|k| value_at(k).map(|v| (k, v))) {
        let (px, py) = (x(k as f64), y(v));
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="none" stroke="#1e8449" stroke-width="2"/><text x="{:.2}" y="{:.2}" fill="#1e8449">K={k}</text>"##,
            px - 5.0,
            py - 5.0,
            px + 9.0,
            py + 18.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn tick_label(v: f64, step: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !(1e-3..1e5).contains(&step) {
        return format!("{v:.1e}");
    }
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

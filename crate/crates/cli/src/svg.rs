//! Grade-versus-day scatter plots.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

pub struct Point {
    pub subject: String,
    /// `None` for control subjects, drawn in a column left of day 0.
    pub day: Option<f64>,
    pub grade: f64,
}

pub struct Bounds {
    pub g_min: f64,
    pub g_avg: f64,
    pub g_max: f64,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn scatter(title: &str, points: &[Point], bounds: &Bounds) -> String {
    let max_day = points.iter().filter_map(|p| p.day).fold(1.0, f64::max);
    let x_lo = -0.08 * max_day;
    let x_hi = max_day * 1.05;
    let mut y_lo = bounds.g_min;
    let mut y_hi = bounds.g_max;
    for p in points {
        y_lo = y_lo.min(p.grade);
        y_hi = y_hi.max(p.grade);
    }
    let pad = ((y_hi - y_lo) * 0.08).max(1e-6);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (W - LEFT - RIGHT);
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.1},{y0:.1} L{x0:.1},{y1:.1} L{x1:.1},{y1:.1}" stroke="black" fill="none"/>"#
    );
    for k in 0..=5 {
        let day = max_day * k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#,
            sx(day),
            y1 + 15.0,
            day
        );
        let g = y_lo + (y_hi - y_lo) * k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.2}</text>"#,
            x0 - 5.0,
            sy(g) + 4.0,
            g
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">days post-op</text>"#,
        (x0 + x1) / 2.0,
        H - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">grade G</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for (name, g, dash) in [
        ("G_max", bounds.g_max, "6,3"),
        ("G_avg", bounds.g_avg, "2,3"),
        ("G_min", bounds.g_min, "6,3"),
    ] {
        let _ = writeln!(
            s,
            r#"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="gray" stroke-dasharray="{dash}"/><text x="{:.1}" y="{:.1}" text-anchor="end" fill="gray">{name}</text>"#,
            x1 - 2.0,
            sy(g) - 3.0,
            y = sy(g)
        );
    }

    let mut subjects: Vec<&str> = Vec::new();
    for p in points {
        if p.day.is_some() && !subjects.contains(&p.subject.as_str()) {
            subjects.push(&p.subject);
        }
    }
    for p in points {
        let y = sy(p.grade);
        match p.day {
            Some(d) => {
                let k = subjects.iter().position(|s| *s == p.subject).unwrap_or(0);
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.1}" cy="{y:.1}" r="3.5" fill="{}"><title>{} day {d}: {:.4}</title></circle>"#,
                    sx(d),
                    PALETTE[k % PALETTE.len()],
                    escape(&p.subject),
                    p.grade
                );
            }
            None => {
                let x = sx(x_lo * 0.5);
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.1}" y="{:.1}" width="6" height="6" fill="none" stroke="black"><title>{} (control): {:.4}</title></rect>"#,
                    x - 3.0,
                    y - 3.0,
                    escape(&p.subject),
                    p.grade
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

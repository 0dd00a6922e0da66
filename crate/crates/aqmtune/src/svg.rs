//! Dependency-free SVG line and polygon plots.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
    /// Filled closed shapes drawn under the series.
    pub polygons: Vec<Vec<(f64, f64)>>,
    /// Isolated markers `(x, y, label)`.
    pub markers: Vec<(f64, f64, String)>,
    /// Fixed axis ranges; computed from the data when absent.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Self::default() }
    }

    fn tx(&self, x: f64) -> f64 {
        if self.log_x {
            x.log10()
        } else {
            x
        }
    }

    fn data_range(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ys = xs;
        let all = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .chain(self.polygons.iter().flatten().copied())
            .chain(self.markers.iter().map(|m| (m.0, m.1)));
        for (x, y) in all {
            let x = self.tx(x);
            if x.is_finite() && y.is_finite() {
                xs = (xs.0.min(x), xs.1.max(x));
                ys = (ys.0.min(y), ys.1.max(y));
            }
        }
        let pad = |r: (f64, f64)| {
            if !r.0.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 <= f64::EPSILON * r.0.abs().max(1.0) {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                r
            }
        };
        let x = self.x_range.map(|(a, b)| (self.tx(a), self.tx(b))).unwrap_or_else(|| pad(xs));
        (x, self.y_range.unwrap_or_else(|| pad(ys)))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.data_range();
        let px = |x: f64| MARGIN + (self.tx(x) - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);

        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let xlab = if self.log_x { format!("1e{xv:.1}") } else { format!("{xv:.3}") };
            let gx = l + f * (r - l);
            let gy = b - f * (b - t);
            let _ = writeln!(s, r##"<line x1="{gx:.2}" y1="{t}" x2="{gx:.2}" y2="{b}" stroke="#ddd"/>"##);
            let _ = writeln!(s, r##"<line x1="{l}" y1="{gy:.2}" x2="{r}" y2="{gy:.2}" stroke="#ddd"/>"##);
            let _ = writeln!(s, r#"<text x="{gx:.2}" y="{}" text-anchor="middle">{xlab}</text>"#, b + 16.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#, l - 4.0, gy + 4.0);
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );

        for poly in &self.polygons {
            let pts: Vec<String> = poly.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.6" stroke="#3182bd"/>"##,
                pts.join(" ")
            );
        }
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|(x, y)| self.tx(*x).is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
            let ly = t + 14.0 + 16.0 * k as f64;
            let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, r - 150.0, r - 130.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, r - 125.0, ly + 4.0, escape(&series.label));
        }
        for (x, y, label) in &self.markers {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="black"/>"#, px(*x), py(*y));
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, px(*x) + 6.0, py(*y) - 6.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

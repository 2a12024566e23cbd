//! Minimal SVG plots: line/scatter charts with linear or log-log axes,
//! and ECDF overlays. No dependencies; enough for the report figures.

use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub draw_line: bool,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn color(i: usize) -> &'static str {
    COLORS[i % COLORS.len()]
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Chart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Chart {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn loglog(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn line(mut self, label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        let color = color(self.series.len());
        self.series.push(Series {
            label: label.into(),
            points,
            color,
            draw_line: true,
        });
        self
    }

    pub fn scatter(mut self, label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        let color = color(self.series.len());
        self.series.push(Series {
            label: label.into(),
            points,
            color,
            draw_line: false,
        });
        self
    }

    /// Add the empirical CDF of a sample as a step-ish line.
    pub fn ecdf(self, label: impl Into<String>, sample: &[f64]) -> Self {
        let mut xs = sample.to_vec();
        xs.sort_by(|a, b| a.total_cmp(b));
        let n = xs.len() as f64;
        let points = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, (i + 1) as f64 / n))
            .collect();
        self.line(label, points)
    }

    pub fn render(&self) -> String {
        let (w, h) = (640.0f64, 420.0f64);
        let (ml, mr, mt, mb) = (62.0, 16.0, 34.0, 48.0);
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };

        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                if (self.log_x && x <= 0.0) || (self.log_y && y <= 0.0) {
                    continue;
                }
                xs.push(tx(x));
                ys.push(ty(y));
            }
        }
        let (x0, x1) = span(&xs);
        let (y0, y1) = span(&ys);
        let px = |x: f64| ml + (tx(x) - x0) / (x1 - x0) * (w - ml - mr);
        let py = |y: f64| h - mb - (ty(y) - y0) / (y1 - y0) * (h - mt - mb);

        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">"
        );
        let _ = writeln!(out, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
            w / 2.0,
            escape(&self.title)
        );
        // axes
        let _ = writeln!(
            out,
            "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>",
            h - mb,
            w - mr,
            h - mb
        );
        let _ = writeln!(
            out,
            "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"#333\"/>",
            h - mb
        );
        // ticks
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let vx = if self.log_x { 10f64.powf(fx) } else { fx };
            let sx = ml + (w - ml - mr) * i as f64 / 4.0;
            let _ = writeln!(
                out,
                "<text x=\"{sx}\" y=\"{}\" text-anchor=\"middle\" fill=\"#333\">{}</text>",
                h - mb + 16.0,
                fmt_tick(vx)
            );
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let vy = if self.log_y { 10f64.powf(fy) } else { fy };
            let sy = h - mb - (h - mt - mb) * i as f64 / 4.0;
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" fill=\"#333\">{}</text>",
                ml - 6.0,
                sy + 4.0,
                fmt_tick(vy)
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"#333\">{}</text>",
            (ml + w - mr) / 2.0,
            h - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\" fill=\"#333\">{}</text>",
            (mt + h - mb) / 2.0,
            (mt + h - mb) / 2.0,
            escape(&self.y_label)
        );
        // series
        for (si, s) in self.series.iter().enumerate() {
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter(|(x, y)| !(self.log_x && *x <= 0.0) && !(self.log_y && *y <= 0.0))
                .map(|&(x, y)| (px(x), py(y)))
                .collect();
            if s.draw_line && pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    out,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
                    path.join(" "),
                    s.color
                );
            } else {
                for (x, y) in &pts {
                    let _ = writeln!(
                        out,
                        "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.4\" fill=\"{}\"/>",
                        s.color
                    );
                }
            }
            let ly = mt + 16.0 * si as f64;
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{}\" y=\"{}\" fill=\"#333\">{}</text>",
                w - mr - 150.0,
                ly,
                s.color,
                w - mr - 136.0,
                ly + 9.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn write(&self, path: &std::path::Path) -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.render())
    }
}

fn span(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * 0.04;
        (lo - pad, hi + pad)
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

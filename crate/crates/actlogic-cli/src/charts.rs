//! Minimal hand-rolled SVG output for `compare`. The CSV stays the canonical
//! artifact; these charts are derived views, so they aim for legibility, not
//! configurability.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 48.0;

const PALETTE: [&str; 7] = [
    "#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951", "#ff8ab7", "#a463f2",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn new() -> Self {
        Frame {
            x0: MARGIN_LEFT,
            y0: MARGIN_TOP,
            w: WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            h: HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
        }
    }

    fn x(&self, frac: f64) -> f64 {
        self.x0 + frac * self.w
    }

    fn y(&self, frac: f64) -> f64 {
        self.y0 + (1.0 - frac) * self.h
    }
}

fn open_svg(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"16\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        escape(title),
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let _ = write!(
        out,
        "<line x1=\"{x0}\" y1=\"{y1}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y1}\" x2=\"{x1}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <text x=\"{xc}\" y=\"{HEIGHT}\" dy=\"-8\" text-anchor=\"middle\">{xl}</text>\n\
         <text x=\"14\" y=\"{yc}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {yc})\">{yl}</text>\n",
        x0 = f.x0,
        x1 = f.x0 + f.w,
        y0 = f.y0,
        y1 = f.y0 + f.h,
        xc = f.x(0.5),
        yc = f.y(0.5),
        xl = escape(x_label),
        yl = escape(y_label),
    );
}

/// Average AUC per iteration, one polyline per method, with a dashed line at
/// the stopping target.
pub fn auc_line_chart(series: &[(String, Vec<f64>)], target: f64) -> String {
    let f = Frame::new();
    let max_len = series.iter().map(|(_, ys)| ys.len()).max().unwrap_or(1).max(1);
    let y_min = series
        .iter()
        .flat_map(|(_, ys)| ys.iter().copied())
        .fold(target, f64::min)
        .min(target);
    let y_lo = ((y_min - 0.02).max(0.0) * 20.0).floor() / 20.0;
    let y_span = (1.0 - y_lo).max(1e-9);

    let mut out = String::new();
    open_svg(&mut out, "average AUC by iteration");
    axes(&mut out, &f, "iteration", "average AUC");

    for tick in 0..=4 {
        let v = y_lo + y_span * tick as f64 / 4.0;
        let y = f.y((v - y_lo) / y_span);
        let _ = write!(
            out,
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#ddd\"/>\n\
             <text x=\"{x0}\" y=\"{y}\" dx=\"-6\" dy=\"4\" text-anchor=\"end\">{v:.3}</text>\n",
            x0 = f.x0,
            x1 = f.x0 + f.w,
        );
    }
    for tick in 0..=4 {
        let it = 1.0 + (max_len - 1) as f64 * tick as f64 / 4.0;
        let x = f.x(if max_len > 1 { (it - 1.0) / (max_len - 1) as f64 } else { 0.5 });
        let _ = write!(
            out,
            "<text x=\"{x}\" y=\"{y}\" dy=\"14\" text-anchor=\"middle\">{}</text>\n",
            it.round() as usize,
            y = f.y0 + f.h,
        );
    }
    let ty = f.y((target - y_lo) / y_span);
    let _ = write!(
        out,
        "<line x1=\"{x0}\" y1=\"{ty}\" x2=\"{x1}\" y2=\"{ty}\" stroke=\"#888\" \
         stroke-dasharray=\"5 4\"/>\n",
        x0 = f.x0,
        x1 = f.x0 + f.w,
    );

    for (i, (name, ys)) in series.iter().enumerate() {
        if ys.is_empty() {
            continue;
        }
        let points: Vec<String> = ys
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let xf = if max_len > 1 { j as f64 / (max_len - 1) as f64 } else { 0.5 };
                let yf = ((v - y_lo) / y_span).clamp(0.0, 1.0);
                format!("{:.1},{:.1}", f.x(xf), f.y(yf))
            })
            .collect();
        let _ = write!(
            out,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
            color(i),
            points.join(" "),
        );
        let ly = f.y0 + 14.0 + 16.0 * i as f64;
        let _ = write!(
            out,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{}\" stroke-width=\"3\"/>\n\
             <text x=\"{}\" y=\"{ly}\" dy=\"4\">{}</text>\n",
            f.x0 + f.w - 130.0,
            color(i),
            f.x0 + f.w - 124.0,
            escape(name),
            lx = f.x0 + f.w - 156.0,
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Iterations needed to reach the target, one bar per method; methods that
/// never reached it get a hatched full-height bar labeled NA.
pub fn iterations_bar_chart(bars: &[(String, Option<usize>)], max_iterations: usize) -> String {
    let f = Frame::new();
    let ceiling = bars
        .iter()
        .map(|(_, v)| v.unwrap_or(max_iterations + 1))
        .max()
        .unwrap_or(1)
        .max(1);

    let mut out = String::new();
    open_svg(&mut out, "iterations to reach target AUC");
    axes(&mut out, &f, "method", "iterations");
    for tick in 0..=4 {
        let v = ceiling as f64 * tick as f64 / 4.0;
        let y = f.y(v / ceiling as f64);
        let _ = write!(
            out,
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#ddd\"/>\n\
             <text x=\"{x0}\" y=\"{y}\" dx=\"-6\" dy=\"4\" text-anchor=\"end\">{}</text>\n",
            v.round() as usize,
            x0 = f.x0,
            x1 = f.x0 + f.w,
        );
    }

    let slot = f.w / bars.len() as f64;
    for (i, (name, reached)) in bars.iter().enumerate() {
        let value = reached.unwrap_or(max_iterations + 1);
        let height = f.h * value as f64 / ceiling as f64;
        let bw = (slot * 0.6).min(70.0);
        let x = f.x0 + slot * (i as f64 + 0.5) - bw / 2.0;
        let y = f.y0 + f.h - height;
        let fill_extra = if reached.is_some() { "" } else { " fill-opacity=\"0.35\"" };
        let label = match reached {
            Some(v) => v.to_string(),
            None => "NA".to_string(),
        };
        let _ = write!(
            out,
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{bw:.1}\" height=\"{height:.1}\" \
             fill=\"{}\"{fill_extra}/>\n\
             <text x=\"{cx:.1}\" y=\"{y:.1}\" dy=\"-4\" text-anchor=\"middle\">{label}</text>\n\
             <text x=\"{cx:.1}\" y=\"{by}\" dy=\"14\" text-anchor=\"middle\">{}</text>\n",
            color(i),
            escape(name),
            cx = x + bw / 2.0,
            by = f.y0 + f.h,
        );
    }
    out.push_str("</svg>\n");
    out
}

//! Minimal static SVG emission: bar, semilog, overlay, and polar charts.
//!
//! Every chart is a single self-contained document built from rect, line,
//! circle, and text primitives. Bars carry `data-n` and `data-value`
//! attributes so emitted figures stay machine-checkable.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
/// Values below this floor are clamped on logarithmic axes.
const LOG_FLOOR: f64 = 1e-18;

struct Canvas {
    body: String,
}

impl Canvas {
    /// Opens a document; the creation timestamp is omitted when
    /// `deterministic` is set so reruns are byte-identical.
    fn new(title: &str, deterministic: bool) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        if !deterministic {
            let stamp = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let _ = writeln!(body, "  <metadata>generated-unix:{stamp}</metadata>");
        }
        let _ = writeln!(
            body,
            "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
        );
        let _ = writeln!(
            body,
            "  <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
             text-anchor=\"middle\">{}</text>",
            WIDTH / 2.0,
            escape(title)
        );
        Canvas { body }
    }

    fn frame(&mut self) {
        let _ = writeln!(
            self.body,
            "  <rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{}\" height=\"{}\" \
             fill=\"none\" stroke=\"black\"/>",
            plot_w(),
            plot_h()
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            "  <line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" \
             stroke=\"{stroke}\" stroke-width=\"{width}\"/>"
        );
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "  <circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r}\" fill=\"{fill}\"/>"
        );
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.body,
            "  <text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"{size}\" \
             text-anchor=\"{anchor}\">{}</text>",
            escape(content)
        );
    }

    #[allow(clippy::too_many_arguments)]
    fn bar(&mut self, n: usize, value: f64, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "  <rect data-n=\"{n}\" data-value=\"{value:e}\" x=\"{x:.2}\" y=\"{y:.2}\" \
             width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{fill}\" stroke=\"black\" \
             stroke-width=\"0.5\"/>"
        );
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn plot_w() -> f64 {
    WIDTH - MARGIN_LEFT - MARGIN_RIGHT
}

fn plot_h() -> f64 {
    HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// x pixel of category slot i out of count.
fn slot_x(i: usize, count: usize) -> (f64, f64) {
    let w = plot_w() / count.max(1) as f64;
    (MARGIN_LEFT + i as f64 * w, w)
}

/// Linear-scale bar chart of per-degree values.
pub fn bar_chart(title: &str, values: &[f64], deterministic: bool) -> String {
    let mut c = Canvas::new(title, deterministic);
    c.frame();
    let max = values.iter().cloned().fold(0.0f64, f64::max).max(LOG_FLOOR);
    for (i, &v) in values.iter().enumerate() {
        let (x0, w) = slot_x(i, values.len());
        let h = (v.max(0.0) / max) * plot_h();
        c.bar(i, v, x0 + 0.15 * w, MARGIN_TOP + plot_h() - h, 0.7 * w, h, "#4477aa");
        c.text(x0 + 0.5 * w, HEIGHT - MARGIN_BOTTOM + 16.0, 11.0, "middle", &i.to_string());
    }
    c.text(MARGIN_LEFT - 8.0, MARGIN_TOP + 12.0, 11.0, "end", &format!("{max:.2e}"));
    c.text(MARGIN_LEFT - 8.0, MARGIN_TOP + plot_h(), 11.0, "end", "0");
    c.text(WIDTH / 2.0, HEIGHT - 12.0, 12.0, "middle", "degree n");
    c.finish()
}

/// Semilog decay plot: log10 of each value against degree.
pub fn semilog_chart(title: &str, values: &[f64], deterministic: bool) -> String {
    let mut c = Canvas::new(title, deterministic);
    c.frame();
    let logs: Vec<f64> = values.iter().map(|&v| v.max(LOG_FLOOR).log10()).collect();
    let top = logs.iter().cloned().fold(f64::MIN, f64::max).ceil();
    let bottom = logs.iter().cloned().fold(f64::MAX, f64::min).floor().min(top - 1.0);
    let y_of = |lv: f64| MARGIN_TOP + (top - lv) / (top - bottom) * plot_h();
    let mut prev: Option<(f64, f64)> = None;
    for (i, &lv) in logs.iter().enumerate() {
        let (x0, w) = slot_x(i, logs.len());
        let x = x0 + 0.5 * w;
        let y = y_of(lv);
        c.circle(x, y, 3.0, "#cc3311");
        if let Some((px, py)) = prev {
            c.line(px, py, x, y, "#cc3311", 1.0);
        }
        prev = Some((x, y));
        c.text(x, HEIGHT - MARGIN_BOTTOM + 16.0, 11.0, "middle", &i.to_string());
    }
    c.text(MARGIN_LEFT - 8.0, y_of(top) + 4.0, 11.0, "end", &format!("1e{top:.0}"));
    c.text(MARGIN_LEFT - 8.0, y_of(bottom) + 4.0, 11.0, "end", &format!("1e{bottom:.0}"));
    c.text(WIDTH / 2.0, HEIGHT - 12.0, 12.0, "middle", "degree n");
    c.finish()
}

/// Exact bars overlaid with estimates and 3-sigma error whiskers.
pub fn overlay_chart(
    title: &str,
    exact: &[f64],
    estimates: &[(f64, f64)],
    deterministic: bool,
) -> String {
    let mut c = Canvas::new(title, deterministic);
    c.frame();
    let max = exact
        .iter()
        .chain(estimates.iter().map(|(v, _)| v))
        .cloned()
        .fold(0.0f64, f64::max)
        .max(LOG_FLOOR);
    let count = exact.len().max(estimates.len());
    let y_of = |v: f64| MARGIN_TOP + plot_h() * (1.0 - (v / max).clamp(0.0, 1.0));
    for (i, &v) in exact.iter().enumerate() {
        let (x0, w) = slot_x(i, count);
        let h = (v.max(0.0) / max) * plot_h();
        c.bar(i, v, x0 + 0.2 * w, MARGIN_TOP + plot_h() - h, 0.6 * w, h, "#ccddee");
        c.text(x0 + 0.5 * w, HEIGHT - MARGIN_BOTTOM + 16.0, 11.0, "middle", &i.to_string());
    }
    for (i, &(v, err)) in estimates.iter().enumerate() {
        let (x0, w) = slot_x(i, count);
        let x = x0 + 0.5 * w;
        c.line(x, y_of(v - 3.0 * err), x, y_of(v + 3.0 * err), "#cc3311", 1.2);
        c.circle(x, y_of(v), 3.5, "#cc3311");
    }
    c.text(MARGIN_LEFT - 8.0, MARGIN_TOP + 12.0, 11.0, "end", &format!("{max:.2e}"));
    c.text(WIDTH / 2.0, HEIGHT - 12.0, 12.0, "middle", "degree n");
    c.finish()
}

/// Two aligned series on a shared semilog axis.
pub fn twin_semilog(
    title: &str,
    label_a: &str,
    series_a: &[f64],
    label_b: &str,
    series_b: &[f64],
    deterministic: bool,
) -> String {
    let mut c = Canvas::new(title, deterministic);
    c.frame();
    let logs = |xs: &[f64]| -> Vec<f64> { xs.iter().map(|&v| v.max(LOG_FLOOR).log10()).collect() };
    let la = logs(series_a);
    let lb = logs(series_b);
    let top = la.iter().chain(&lb).cloned().fold(f64::MIN, f64::max).ceil();
    let bottom = la
        .iter()
        .chain(&lb)
        .cloned()
        .fold(f64::MAX, f64::min)
        .floor()
        .min(top - 1.0);
    let count = la.len().max(lb.len());
    let y_of = |lv: f64| MARGIN_TOP + (top - lv) / (top - bottom) * plot_h();
    for (series, color) in [(&la, "#4477aa"), (&lb, "#cc3311")] {
        let mut prev: Option<(f64, f64)> = None;
        for (i, &lv) in series.iter().enumerate() {
            let (x0, w) = slot_x(i, count);
            let x = x0 + 0.5 * w;
            let y = y_of(lv);
            c.circle(x, y, 3.0, color);
            if let Some((px, py)) = prev {
                c.line(px, py, x, y, color, 1.0);
            }
            prev = Some((x, y));
        }
    }
    for i in 0..count {
        let (x0, w) = slot_x(i, count);
        c.text(x0 + 0.5 * w, HEIGHT - MARGIN_BOTTOM + 16.0, 11.0, "middle", &i.to_string());
    }
    c.text(MARGIN_LEFT + 10.0, MARGIN_TOP + 16.0, 12.0, "start", &format!("o {label_a}"));
    c.text(MARGIN_LEFT + 10.0, MARGIN_TOP + 32.0, 12.0, "start", &format!("o {label_b}"));
    c.text(MARGIN_LEFT - 8.0, y_of(top) + 4.0, 11.0, "end", &format!("1e{top:.0}"));
    c.text(MARGIN_LEFT - 8.0, y_of(bottom) + 4.0, 11.0, "end", &format!("1e{bottom:.0}"));
    c.text(WIDTH / 2.0, HEIGHT - 12.0, 12.0, "middle", "degree n");
    c.finish()
}

/// Polar scatter of coefficients: radius |c_n|, angle arg(c_n). Entries
/// with undefined phase are skipped.
pub fn polar_plot(title: &str, points: &[(f64, Option<f64>)], deterministic: bool) -> String {
    let mut c = Canvas::new(title, deterministic);
    let cx = WIDTH / 2.0;
    let cy = MARGIN_TOP + plot_h() / 2.0;
    let r_px = plot_h() / 2.0 - 6.0;
    let max = points
        .iter()
        .map(|(a, _)| *a)
        .fold(0.0f64, f64::max)
        .max(LOG_FLOOR);
    for frac in [0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            c.body,
            "  <circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\" fill=\"none\" \
             stroke=\"#cccccc\"/>",
            r_px * frac
        );
    }
    c.line(cx - r_px, cy, cx + r_px, cy, "#cccccc", 1.0);
    c.line(cx, cy - r_px, cx, cy + r_px, "#cccccc", 1.0);
    for (n, &(abs, phase)) in points.iter().enumerate() {
        let Some(phi) = phase else { continue };
        let rr = abs / max * r_px;
        let x = cx + rr * phi.cos();
        let y = cy - rr * phi.sin();
        c.circle(x, y, 4.0, "#4477aa");
        c.text(x + 6.0, y - 6.0, 11.0, "start", &format!("n={n}"));
    }
    c.text(cx + r_px - 4.0, cy - 6.0, 11.0, "end", &format!("|c| = {max:.2e}"));
    c.finish()
}

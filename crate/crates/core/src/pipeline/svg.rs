//! Minimal static SVG charts.

use std::fmt::Write as _;

const W: f64 = 800.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    s
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

/// Line chart of several equally long series against their index.
pub fn line_plot(title: &str, series: &[(&str, &[f64], &str)]) -> String {
    let mut s = header(title);
    let n = series.iter().map(|(_, v, _)| v.len()).max().unwrap_or(0);
    let (lo, hi) = bounds(series.iter().flat_map(|(_, v, _)| v.iter()));
    let x = |i: usize| PAD + (W - 2.0 * PAD) * i as f64 / (n.max(2) - 1) as f64;
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);
    let _ = writeln!(
        s,
        r#"<g stroke="black"><line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}"/></g>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{hi:.3}</text>"#, PAD - 4.0, PAD + 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{lo:.3}</text>"#, PAD - 4.0, H - PAD);
    for (k, (name, values, color)) in series.iter().enumerate() {
        let pts: Vec<String> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = PAD + 16.0 * k as f64;
        let lx = W - PAD - 140.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 24.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Horizontal bar chart, bars drawn in the order given.
pub fn bar_plot(title: &str, labels: &[String], values: &[f64]) -> String {
    let mut s = header(title);
    let max = values.iter().cloned().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    let max = if max > 0.0 { max } else { 1.0 };
    let left = 160.0;
    let band = (H - 2.0 * PAD) / labels.len().max(1) as f64;
    for (i, (label, &v)) in labels.iter().zip(values).enumerate() {
        let top = PAD + band * i as f64;
        let width = (W - left - PAD) * (v.max(0.0) / max);
        let _ = writeln!(
            s,
            r##"<rect x="{left}" y="{:.2}" width="{width:.2}" height="{:.2}" fill="#4472c4"/>"##,
            top + band * 0.15,
            band * 0.7
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text><text x="{:.2}" y="{:.2}">{v:.4}</text>"#,
            left - 6.0,
            top + band * 0.55,
            escape(label),
            left + width + 4.0,
            top + band * 0.55
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_has_one_polyline_per_series() {
        let a = [1.0, 2.0, 3.0];
        let b = [1.5, 2.5, f64::NAN];
        let svg = line_plot("t", &[("actual", &a, "black"), ("predicted", &b, "red")]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn bar_plot_escapes_labels() {
        let svg = bar_plot("imp", &["a<b".into(), "c".into()], &[0.5, 0.0]);
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<rect").count(), 3);
    }
}

//! Minimal self-contained SVG line charts for sweep reports.
//!
//! The y axis is always log10 (costs span orders of magnitude); the x axis
//! is linear or log10. Points with non-finite or non-positive y are
//! dropped rather than plotted.

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 830.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 460.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// One plotted line.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.0e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Renders a line chart; y values are plotted on a log10 scale.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_x: bool,
) -> String {
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() && y > 0.0 && (!log_x || x > 0.0) {
                xs.push(tx(x));
                ys.push(y.log10());
            }
        }
    }
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.0}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        (LEFT + RIGHT) / 2.0,
        esc(title)
    ));
    if xs.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{:.0}\" y=\"{:.0}\" text-anchor=\"middle\">no finite data</text>\n</svg>\n",
            (LEFT + RIGHT) / 2.0,
            (TOP + BOTTOM) / 2.0
        ));
        return svg;
    }
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&ys);
    let px = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * (RIGHT - LEFT);
    let py = |y: f64| BOTTOM - (y - y_min) / (y_max - y_min) * (BOTTOM - TOP);

    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n\
         <line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n"
    ));

    // y ticks at integer decades (or thirds of the range when it is narrow)
    let mut y_ticks: Vec<f64> = (y_min.ceil() as i64..=y_max.floor() as i64)
        .map(|d| d as f64)
        .collect();
    if y_ticks.len() < 2 {
        y_ticks = vec![y_min, 0.5 * (y_min + y_max), y_max];
    }
    for t in &y_ticks {
        let y = py(*t);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{RIGHT}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            fmt_tick(10f64.powf(*t))
        ));
    }
    // x ticks: six evenly spaced in transformed coordinates
    for i in 0..=5 {
        let t = x_min + (x_max - x_min) * i as f64 / 5.0;
        let x = px(t);
        let v = if log_x { 10f64.powf(t) } else { t };
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{BOTTOM}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
             <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            BOTTOM + 5.0,
            BOTTOM + 20.0,
            fmt_tick(v)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.0}\" y=\"{:.0}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"20\" y=\"{:.0}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.0})\">{}</text>\n",
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 45.0,
        esc(x_label),
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
        esc(y_label)
    ));

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|&&(x, y)| {
                x.is_finite() && y.is_finite() && y > 0.0 && (!log_x || x > 0.0)
            })
            .map(|&(x, y)| (px(tx(x)), py(y.log10())))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        for (x, y) in &pts {
            svg.push_str(&format!(
                "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3\" fill=\"{color}\"/>\n"
            ));
        }
        let ly = TOP + 18.0 * si as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.0}\" y1=\"{ly:.1}\" x2=\"{:.0}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.0}\" y=\"{:.1}\">{}</text>\n",
            RIGHT - 150.0,
            RIGHT - 120.0,
            RIGHT - 112.0,
            ly + 4.0,
            esc(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// A single success rate with its confidence interval, drawn as a bar.
pub fn rate_chart(title: &str, rate: f64, low: f64, high: f64) -> String {
    let px = |v: f64| BOTTOM - v.clamp(0.0, 1.0) * (BOTTOM - TOP);
    let cx = (LEFT + RIGHT) / 2.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{cx:.0}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n\
         <line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n",
        esc(title)
    ));
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = px(v);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{RIGHT}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.1}</text>\n",
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"120\" height=\"{:.1}\" fill=\"{}\"/>\n\
         <line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"black\" stroke-width=\"2\"/>\n\
         <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\" stroke-width=\"2\"/>\n\
         <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\" stroke-width=\"2\"/>\n\
         <text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">rate {rate:.3} [{low:.3}, {high:.3}]</text>\n</svg>\n",
        cx - 60.0,
        px(rate),
        BOTTOM - px(rate),
        PALETTE[0],
        px(low),
        px(high),
        cx - 20.0,
        px(low),
        cx + 20.0,
        px(low),
        cx - 20.0,
        px(high),
        cx + 20.0,
        px(high),
        BOTTOM + 25.0,
    ));
    svg
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_contains_each_series_once() {
        let series = vec![
            Series {
                label: "first".into(),
                points: vec![(1.0, 10.0), (2.0, 100.0), (3.0, 50.0)],
            },
            Series {
                label: "second".into(),
                points: vec![(1.0, 5.0), (2.0, f64::NAN), (3.0, 500.0)],
            },
        ];
        let svg = line_chart("Costs", "x", "total", &series, false);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("first"));
        assert!(svg.contains("second"));
        // the NaN point is dropped: second series has 2 circles, first has 3
        assert_eq!(svg.matches("<circle").count(), 5);
    }

    #[test]
    fn log_x_skips_nonpositive_x() {
        let series = vec![Series {
            label: "s".into(),
            points: vec![(0.0, 10.0), (10.0, 10.0), (100.0, 20.0)],
        }];
        let svg = line_chart("t", "kappa", "cost", &series, true);
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn empty_data_renders_placeholder() {
        let svg = line_chart("t", "x", "y", &[], false);
        assert!(svg.contains("no finite data"));
    }

    #[test]
    fn rate_chart_renders() {
        let svg = rate_chart("correctness", 0.95, 0.91, 0.975);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("0.95"));
    }
}

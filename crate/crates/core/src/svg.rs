//! Minimal deterministic SVG emitters: labeled scatter plots, Pareto
//! frontier plots, and histograms. Pure string builders — identical inputs
//! yield byte-identical documents.

pub const WIDTH: u32 = 640;
pub const HEIGHT: u32 = 480;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;

/// Fixed palette indexed by series position.
pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn from_points<'a>(pts: impl Iterator<Item = &'a (f64, f64)>) -> Frame {
        let mut x_lo = f64::INFINITY;
        let mut x_hi = f64::NEG_INFINITY;
        let mut y_lo = f64::INFINITY;
        let mut y_hi = f64::NEG_INFINITY;
        for (x, y) in pts {
            x_lo = x_lo.min(*x);
            x_hi = x_hi.max(*x);
            y_lo = y_lo.min(*y);
            y_hi = y_hi.max(*y);
        }
        if !x_lo.is_finite() {
            (x_lo, x_hi, y_lo, y_hi) = (0.0, 1.0, 0.0, 1.0);
        }
        // Pad degenerate or tight ranges so markers stay inside the frame.
        let pad = |lo: &mut f64, hi: &mut f64| {
            let span = *hi - *lo;
            let p = if span > 0.0 { 0.06 * span } else { 0.5 + lo.abs() * 0.1 };
            *lo -= p;
            *hi += p;
        };
        let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (x_lo, x_hi, y_lo, y_hi);
        pad(&mut x_lo, &mut x_hi);
        pad(&mut y_lo, &mut y_hi);
        Frame { x_lo, x_hi, y_lo, y_hi }
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH as f64 - MARGIN_L - MARGIN_R)
    }

    /// SVG y axis points down; data y axis points up.
    fn sy(&self, y: f64) -> f64 {
        HEIGHT as f64
            - MARGIN_B
            - (y - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT as f64 - MARGIN_T - MARGIN_B)
    }
}

fn fmt(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 10_000.0 || v.abs() < 0.01) {
        format!("{v:.2e}")
    } else {
        fmt(v)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn document_open(out: &mut String, title: &str, comment: Option<&str>) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    if let Some(c) = comment {
        out.push_str(&format!("<!-- {} -->\n", escape(c)));
    }
    out.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{}</text>\n",
        WIDTH / 2,
        escape(title)
    ));
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_L;
    let x1 = WIDTH as f64 - MARGIN_R;
    let y0 = HEIGHT as f64 - MARGIN_B;
    let y1 = MARGIN_T;
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = frame.x_lo + t * (frame.x_hi - frame.x_lo);
        let yv = frame.y_lo + t * (frame.y_hi - frame.y_lo);
        let sx = frame.sx(xv);
        let sy = frame.sy(yv);
        out.push_str(&format!(
            "<line x1=\"{sx:.2}\" y1=\"{y0}\" x2=\"{sx:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            y0 + 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{sx:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"10\">{}</text>\n",
            y0 + 16.0,
            tick_label(xv)
        ));
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{sy:.2}\" x2=\"{x0}\" y2=\"{sy:.2}\" stroke=\"black\"/>\n",
            x0 - 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"10\">{}</text>\n",
            x0 - 7.0,
            sy + 3.5,
            tick_label(yv)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT as f64 - 14.0,
        escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    ));
}

fn legend(out: &mut String, labels: &[&str]) {
    let lx = MARGIN_L + 10.0;
    for (i, label) in labels.iter().enumerate() {
        let ly = MARGIN_T + 8.0 + 16.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        out.push_str(&format!(
            "<g class=\"legend-entry\"><rect x=\"{lx}\" y=\"{ly}\" width=\"10\" height=\"10\" \
             fill=\"{color}\"/><text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" \
             font-size=\"11\">{}</text></g>\n",
            lx + 14.0,
            ly + 9.0,
            escape(label)
        ));
    }
}

/// Labeled scatter plot: one circle per point, color per series, legend with
/// one entry per series.
pub fn scatter_svg(
    series: &[Series],
    title: &str,
    x_label: &str,
    y_label: &str,
    comment: Option<&str>,
) -> String {
    let mut out = String::new();
    document_open(&mut out, title, comment);
    let frame = Frame::from_points(series.iter().flat_map(|s| s.points.iter()));
    axes(&mut out, &frame, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for (x, y) in &s.points {
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\" \
                 fill-opacity=\"0.8\"/>\n",
                frame.sx(*x),
                frame.sy(*y)
            ));
        }
    }
    let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// Pareto frontier plot: dominated evaluations as grey dots, front members as
/// colored markers joined by the dominance staircase, the reference point as
/// a cross.
pub fn frontier_svg(
    front: &[(f64, f64)],
    dominated: &[(f64, f64)],
    reference: Option<(f64, f64)>,
    title: &str,
    x_label: &str,
    y_label: &str,
    comment: Option<&str>,
) -> String {
    let mut out = String::new();
    document_open(&mut out, title, comment);
    let mut all: Vec<(f64, f64)> = Vec::new();
    all.extend_from_slice(front);
    all.extend_from_slice(dominated);
    if let Some(r) = reference {
        all.push(r);
    }
    let frame = Frame::from_points(all.iter());
    axes(&mut out, &frame, x_label, y_label);
    for (x, y) in dominated {
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"#9a9a9a\" \
             fill-opacity=\"0.7\"/>\n",
            frame.sx(*x),
            frame.sy(*y)
        ));
    }
    let mut sorted = front.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.len() > 1 {
        let mut path = String::new();
        for (i, (x, y)) in sorted.iter().enumerate() {
            if i == 0 {
                path.push_str(&format!("M {:.2} {:.2}", frame.sx(*x), frame.sy(*y)));
            } else {
                // Minimization staircase: horizontal then vertical.
                path.push_str(&format!(
                    " L {:.2} {:.2} L {:.2} {:.2}",
                    frame.sx(*x),
                    frame.sy(sorted[i - 1].1),
                    frame.sx(*x),
                    frame.sy(*y)
                ));
            }
        }
        out.push_str(&format!(
            "<path d=\"{path}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            PALETTE[0]
        ));
    }
    for (x, y) in &sorted {
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{}\"/>\n",
            frame.sx(*x),
            frame.sy(*y),
            PALETTE[1]
        ));
    }
    if let Some((rx, ry)) = reference {
        let (sx, sy) = (frame.sx(rx), frame.sy(ry));
        out.push_str(&format!(
            "<path d=\"M {:.2} {sy:.2} L {:.2} {sy:.2} M {sx:.2} {:.2} L {sx:.2} {:.2}\" \
             stroke=\"black\" stroke-width=\"1.5\"/>\n",
            sx - 5.0,
            sx + 5.0,
            sy - 5.0,
            sy + 5.0
        ));
    }
    legend(&mut out, &["frontier", "front members"]);
    out.push_str("</svg>\n");
    out
}

/// Histogram of pre-binned counts over `[lo, hi]`.
pub fn histogram_svg(
    counts: &[f64],
    lo: f64,
    hi: f64,
    title: &str,
    x_label: &str,
    y_label: &str,
    comment: Option<&str>,
) -> String {
    let mut out = String::new();
    document_open(&mut out, title, comment);
    let peak = counts.iter().copied().fold(0.0f64, f64::max).max(1e-300);
    let frame = Frame::from_points([(lo, 0.0), (hi, peak)].iter());
    axes(&mut out, &frame, x_label, y_label);
    let n = counts.len().max(1);
    for (i, c) in counts.iter().enumerate() {
        let x0 = lo + (hi - lo) * i as f64 / n as f64;
        let x1 = lo + (hi - lo) * (i + 1) as f64 / n as f64;
        let sx0 = frame.sx(x0);
        let sx1 = frame.sx(x1);
        let sy = frame.sy(*c);
        let base = frame.sy(0.0);
        out.push_str(&format!(
            "<rect x=\"{sx0:.2}\" y=\"{sy:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"{}\" stroke=\"white\" stroke-width=\"0.5\"/>\n",
            (sx1 - sx0).max(0.0),
            (base - sy).max(0.0),
            PALETTE[0]
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_marks_every_point_and_legend_entry() {
        let series = vec![
            Series {
                label: "a".into(),
                points: vec![(0.0, 0.0), (1.0, 2.0)],
            },
            Series {
                label: "b".into(),
                points: vec![(0.5, -1.0)],
            },
        ];
        let svg = scatter_svg(&series, "t", "x", "y", Some("config=abc"));
        assert!(svg.starts_with("<svg "));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches("legend-entry").count(), 2);
        assert!(svg.contains("<!-- config=abc -->"));
    }

    #[test]
    fn scatter_single_point_is_valid() {
        let series = vec![Series {
            label: "only".into(),
            points: vec![(3.0, 3.0)],
        }];
        let svg = scatter_svg(&series, "t", "x", "y", None);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn emission_is_deterministic() {
        let series = vec![Series {
            label: "s".into(),
            points: vec![(0.123456, 9.87), (-2.0, 4.5)],
        }];
        let a = scatter_svg(&series, "t", "x", "y", None);
        let b = scatter_svg(&series, "t", "x", "y", None);
        assert_eq!(a, b);
    }

    #[test]
    fn frontier_draws_staircase_and_reference() {
        let front = vec![(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)];
        let dominated = vec![(2.5, 2.5), (3.0, 3.0)];
        let svg = frontier_svg(
            &front,
            &dominated,
            Some((4.0, 4.0)),
            "front",
            "f1",
            "f2",
            None,
        );
        assert_eq!(svg.matches("<circle").count(), 5);
        assert!(svg.contains("<path d=\"M "));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn histogram_draws_one_bar_per_bin() {
        let svg = histogram_svg(&[1.0, 4.0, 2.0], -2.0, 2.0, "h", "value", "count", None);
        // 3 bars plus the background rect
        assert_eq!(svg.matches("<rect").count(), 4);
    }
}

//! Minimal self-contained SVG line plots for sweep exports. No external
//! assets, fonts, or scripts — a single `<svg>` element with axes, tick
//! labels, polylines, and a legend.

use std::fmt::Write as FmtWrite;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// One plotted line.
pub struct Series<'a> {
    pub label: &'a str,
    pub ys: &'a [f64],
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const COLORS: [&str; 4] = ["#1f6fb2", "#c4461f", "#2e7d32", "#6a3ab2"];

fn nice_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Write a line plot of the series over shared x values. Errors on empty or
/// mismatched inputs and non-finite values.
pub fn line_plot(
    title: &str,
    x_label: &str,
    xs: &[f64],
    series: &[Series],
    path: &Path,
) -> Result<()> {
    if xs.is_empty() || series.is_empty() {
        return Err(Error::InvalidInput("plot needs data".into()));
    }
    for s in series {
        if s.ys.len() != xs.len() {
            return Err(Error::InvalidInput(format!(
                "series \"{}\" has {} points, x axis has {}",
                s.label,
                s.ys.len(),
                xs.len()
            )));
        }
    }
    let all_finite = xs
        .iter()
        .chain(series.iter().flat_map(|s| s.ys.iter()))
        .all(|v| v.is_finite());
    if !all_finite {
        return Err(Error::InvalidInput("plot values must be finite".into()));
    }

    let (mut x_min, mut x_max) = min_max(xs);
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        let (lo, hi) = min_max(s.ys);
        y_min = y_min.min(lo);
        y_max = y_max.max(hi);
    }
    // Degenerate ranges expand symmetrically so lines stay visible.
    if x_min == x_max {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if y_min == y_max {
        let pad = if y_min == 0.0 { 0.5 } else { y_min.abs() * 0.1 };
        y_min -= pad;
        y_max += pad;
    } else {
        let pad = (y_max - y_min) * 0.05;
        y_min -= pad;
        y_max += pad;
    }

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |v: f64| MARGIN_L + (v - x_min) / (x_max - x_min) * plot_w;
    let sy = |v: f64| MARGIN_T + (y_max - v) / (y_max - y_min) * plot_h;

    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );

    // Axes.
    let _ = write!(
        out,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n"
    );
    // 5 ticks per axis with labels and light grid lines.
    for i in 0..=4 {
        let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
        let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
        let px = sx(fx);
        let py = sy(fy);
        let _ = write!(
            out,
            "<line x1=\"{px}\" y1=\"{MARGIN_T}\" x2=\"{px}\" y2=\"{}\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n\
             <text x=\"{px}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 16.0,
            nice_num(fx)
        );
        let _ = write!(
            out,
            "<line x1=\"{MARGIN_L}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L + plot_w,
            MARGIN_L - 6.0,
            py + 4.0,
            nice_num(fy)
        );
    }
    let _ = write!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );

    // Series polylines + legend.
    for (idx, s) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let mut points = String::new();
        for (x, y) in xs.iter().zip(s.ys) {
            let _ = write!(points, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        let _ = write!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            points.trim_end()
        );
        for (x, y) in xs.iter().zip(s.ys) {
            let _ = write!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{color}\"/>\n",
                sx(*x),
                sy(*y)
            );
        }
        let ly = MARGIN_T + 14.0 + idx as f64 * 18.0;
        let _ = write!(
            out,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            MARGIN_L + plot_w - 150.0,
            MARGIN_L + plot_w - 125.0,
            MARGIN_L + plot_w - 118.0,
            ly + 4.0,
            escape(s.label)
        );
    }
    out.push_str("</svg>\n");

    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in xs {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_writes_self_contained_svg() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        let xs = [1.0, 2.0, 3.0];
        let gap = [0.5, 0.4, 0.9];
        let bound = [1.0, 1.2, 1.5];
        line_plot(
            "gap & bound",
            "x <parameter>",
            &xs,
            &[
                Series { label: "mean gap", ys: &gap },
                Series { label: "bound / 25", ys: &bound },
            ],
            &path,
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg "));
        assert!(text.ends_with("</svg>\n"));
        assert_eq!(text.matches("<polyline").count(), 2);
        // No external references; labels are escaped.
        assert!(!text.contains("http://") || text.contains("xmlns"));
        assert!(!text.contains("href"));
        assert!(text.contains("x &lt;parameter&gt;"));
    }

    #[test]
    fn plot_rejects_bad_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        assert!(line_plot("t", "x", &[], &[], &path).is_err());
        let xs = [1.0, 2.0];
        assert!(line_plot(
            "t",
            "x",
            &xs,
            &[Series { label: "a", ys: &[1.0] }],
            &path
        )
        .is_err());
        assert!(line_plot(
            "t",
            "x",
            &xs,
            &[Series { label: "a", ys: &[1.0, f64::NAN] }],
            &path
        )
        .is_err());
    }

    #[test]
    fn constant_series_still_plot() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.svg");
        line_plot(
            "flat",
            "x",
            &[1.0, 1.0],
            &[Series { label: "c", ys: &[2.0, 2.0] }],
            &path,
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("<polyline"));
    }
}

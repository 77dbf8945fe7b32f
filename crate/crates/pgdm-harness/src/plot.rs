//! Deterministic SVG plots. Every coordinate is formatted to three
//! decimal places and every structural choice is a pure function of the
//! input, so identical data always renders byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use pgdm_core::Circle;

use crate::artifacts;
use crate::error::{HarnessError, Stage};

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 52.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Line,
    Bar,
}

/// One named sequence of (x, y) points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Tick label: trims trailing zeros from a fixed-precision rendering.
fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(1e-3..1e6).contains(&a) {
        return format!("{v:.1e}");
    }
    let text = format!("{v:.4}");
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct AxisRange {
    lo: f64,
    hi: f64,
}

impl AxisRange {
    fn from_values(values: impl Iterator<Item = f64>, pad_fraction: f64) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Self { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            let pad = lo.abs().max(1.0) * 0.5;
            return Self {
                lo: lo - pad,
                hi: hi + pad,
            };
        }
        let pad = (hi - lo) * pad_fraction;
        Self {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn to_px(&self, v: f64, px_lo: f64, px_hi: f64) -> f64 {
        px_lo + (v - self.lo) / (self.hi - self.lo) * (px_hi - px_lo)
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Renders named series as a line or bar chart and writes the SVG.
pub fn emit_plot(
    series: &[Series],
    kind: PlotKind,
    title: &str,
    path: &Path,
) -> Result<(), HarnessError> {
    let svg = render_plot(series, kind, title)?;
    if let Some(parent) = path.parent() {
        artifacts::ensure_dir(parent)?;
    }
    std::fs::write(path, svg.as_bytes())
        .map_err(|e| HarnessError::new(Stage::Plot, format!("write {}: {e}", path.display())))
}

/// The SVG text for [`emit_plot`], exposed for byte-determinism tests.
pub fn render_plot(series: &[Series], kind: PlotKind, title: &str) -> Result<String, HarnessError> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(HarnessError::new(
            Stage::Plot,
            format!("nothing to plot for '{title}'"),
        ));
    }
    for s in series {
        if s.points
            .iter()
            .any(|&(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(HarnessError::new(
                Stage::Plot,
                format!("series '{}' contains non-finite points", s.name),
            ));
        }
    }

    let xr = AxisRange::from_values(
        series.iter().flat_map(|s| s.points.iter().map(|p| p.0)),
        0.04,
    );
    let mut yr = AxisRange::from_values(
        series.iter().flat_map(|s| s.points.iter().map(|p| p.1)),
        0.08,
    );
    if kind == PlotKind::Bar {
        yr.lo = yr.lo.min(0.0);
    }

    let px = |x: f64| xr.to_px(x, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let py = |y: f64| yr.to_px(y, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" \
         text-anchor=\"middle\">{}</text>",
        fmt(WIDTH / 2.0),
        escape(title)
    );

    // Grid and tick labels.
    for t in yr.ticks(5) {
        let y = fmt(py(t));
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#dddddd\" \
             stroke-width=\"1\"/>",
            fmt(MARGIN_LEFT),
            fmt(WIDTH - MARGIN_RIGHT)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>",
            fmt(MARGIN_LEFT - 6.0),
            fmt(py(t) + 4.0),
            tick_label(t)
        );
    }
    for t in xr.ticks(5) {
        let x = fmt(px(t));
        let _ = writeln!(
            svg,
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#dddddd\" \
             stroke-width=\"1\"/>",
            fmt(MARGIN_TOP),
            fmt(HEIGHT - MARGIN_BOTTOM)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>",
            fmt(HEIGHT - MARGIN_BOTTOM + 18.0),
            tick_label(t)
        );
    }
    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"#000000\" stroke-width=\"1.5\"/>\
         \n<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"#000000\" stroke-width=\"1.5\"/>",
        l = fmt(MARGIN_LEFT),
        t = fmt(MARGIN_TOP),
        b = fmt(HEIGHT - MARGIN_BOTTOM),
        r = fmt(WIDTH - MARGIN_RIGHT)
    );

    match kind {
        PlotKind::Line => {
            for (si, s) in series.iter().enumerate() {
                let color = PALETTE[si % PALETTE.len()];
                if s.points.len() > 1 {
                    let coords: Vec<String> = s
                        .points
                        .iter()
                        .map(|&(x, y)| format!("{},{}", fmt(px(x)), fmt(py(y))))
                        .collect();
                    let _ = writeln!(
                        svg,
                        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                         stroke-width=\"2\"/>",
                        coords.join(" ")
                    );
                }
                for &(x, y) in &s.points {
                    let _ = writeln!(
                        svg,
                        "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>",
                        fmt(px(x)),
                        fmt(py(y))
                    );
                }
            }
        }
        PlotKind::Bar => {
            let n_slots: usize = series.iter().map(|s| s.points.len()).max().unwrap_or(1);
            let slot_w = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / n_slots as f64;
            let bar_w = slot_w * 0.8 / series.len() as f64;
            let base = py(yr.lo.max(0.0).min(yr.hi));
            for (si, s) in series.iter().enumerate() {
                let color = PALETTE[si % PALETTE.len()];
                for (pi, &(_, y)) in s.points.iter().enumerate() {
                    let x0 = MARGIN_LEFT + slot_w * (pi as f64 + 0.1) + bar_w * si as f64;
                    let y_px = py(y);
                    let (top, h) = if y_px <= base {
                        (y_px, base - y_px)
                    } else {
                        (base, y_px - base)
                    };
                    let _ = writeln!(
                        svg,
                        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\"/>",
                        fmt(x0),
                        fmt(top),
                        fmt(bar_w),
                        fmt(h)
                    );
                }
            }
        }
    }

    // Legend.
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let y = MARGIN_TOP + 16.0 * si as f64 + 6.0;
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"4\" fill=\"{color}\"/>",
            fmt(WIDTH - MARGIN_RIGHT - 150.0),
            fmt(y)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            fmt(WIDTH - MARGIN_RIGHT - 134.0),
            fmt(y + 5.0),
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders a unit-square map: obstacle discs (training in gray,
/// inference additions in red outline) and paths as polylines.
pub fn render_map(
    training_obstacles: &[Circle],
    inference_obstacles: &[Circle],
    paths: &[(String, Vec<f64>)],
    title: &str,
) -> String {
    const SIDE: f64 = 480.0;
    const PAD: f64 = 30.0;
    let to_px = |v: f64| PAD + v * (SIDE - 2.0 * PAD);
    // Flip y so larger y plots upward.
    let to_py = |v: f64| SIDE - PAD - v * (SIDE - 2.0 * PAD);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIDE}\" height=\"{SIDE}\" \
         viewBox=\"0 0 {SIDE} {SIDE}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{SIDE}\" height=\"{SIDE}\" fill=\"#ffffff\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">{}</text>",
        fmt(SIDE / 2.0),
        escape(title)
    );
    let _ = writeln!(
        svg,
        "<rect x=\"{p}\" y=\"{p}\" width=\"{w}\" height=\"{w}\" fill=\"none\" \
         stroke=\"#000000\" stroke-width=\"1\"/>",
        p = fmt(PAD),
        w = fmt(SIDE - 2.0 * PAD)
    );
    for o in training_obstacles {
        let _ = writeln!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#bbbbbb\" stroke=\"#666666\" \
             stroke-width=\"1\"/>",
            fmt(to_px(o.center[0])),
            fmt(to_py(o.center[1])),
            fmt(o.radius * (SIDE - 2.0 * PAD))
        );
    }
    for o in inference_obstacles {
        let _ = writeln!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#f4c7c7\" stroke=\"#d62728\" \
             stroke-width=\"1.5\"/>",
            fmt(to_px(o.center[0])),
            fmt(to_py(o.center[1])),
            fmt(o.radius * (SIDE - 2.0 * PAD))
        );
    }
    for (pi, (name, flat)) in paths.iter().enumerate() {
        let color = PALETTE[pi % PALETTE.len()];
        let coords: Vec<String> = flat
            .chunks_exact(2)
            .map(|p| format!("{},{}", fmt(to_px(p[0])), fmt(to_py(p[1]))))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
             opacity=\"0.85\"><title>{}</title></polyline>",
            coords.join(" "),
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Renders a stack of grayscale frames side by side: pixel values in
/// [-1, 1] map to black..white.
pub fn render_pixel_frames(
    data: &[f64],
    height: usize,
    width: usize,
    frames: usize,
    title: &str,
) -> Result<String, HarnessError> {
    if data.len() != height * width * frames || data.is_empty() {
        return Err(HarnessError::new(
            Stage::Plot,
            format!(
                "frame data has {} values, expected {}x{}x{}",
                data.len(),
                height,
                width,
                frames
            ),
        ));
    }
    const CELL: f64 = 6.0;
    const GAP: f64 = 8.0;
    const TOP: f64 = 30.0;
    let frame_w = width as f64 * CELL;
    let total_w = GAP + frames as f64 * (frame_w + GAP);
    let total_h = TOP + height as f64 * CELL + GAP;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\">",
        fmt(total_w),
        fmt(total_h),
        fmt(total_w),
        fmt(total_h)
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
        fmt(total_w),
        fmt(total_h)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>",
        fmt(total_w / 2.0),
        escape(title)
    );
    for f in 0..frames {
        let x0 = GAP + f as f64 * (frame_w + GAP);
        for r in 0..height {
            for c in 0..width {
                let v = data[f * height * width + r * width + c];
                let level = (((v.clamp(-1.0, 1.0) + 1.0) / 2.0) * 255.0).round() as u8;
                let _ = writeln!(
                    svg,
                    "<rect x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" \
                     fill=\"#{level:02x}{level:02x}{level:02x}\"/>",
                    fmt(x0 + c as f64 * CELL),
                    fmt(TOP + r as f64 * CELL)
                );
            }
        }
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" \
             stroke=\"#888888\" stroke-width=\"1\"/>",
            fmt(x0),
            fmt(TOP),
            fmt(frame_w),
            fmt(height as f64 * CELL)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes [`render_pixel_frames`] output to a file.
pub fn emit_pixel_frames(
    data: &[f64],
    height: usize,
    width: usize,
    frames: usize,
    title: &str,
    path: &Path,
) -> Result<(), HarnessError> {
    let svg = render_pixel_frames(data, height, width, frames, title)?;
    if let Some(parent) = path.parent() {
        artifacts::ensure_dir(parent)?;
    }
    std::fs::write(path, svg.as_bytes())
        .map_err(|e| HarnessError::new(Stage::Plot, format!("write {}: {e}", path.display())))
}

/// Writes [`render_map`] output to a file.
pub fn emit_map(
    training_obstacles: &[Circle],
    inference_obstacles: &[Circle],
    paths: &[(String, Vec<f64>)],
    title: &str,
    path: &Path,
) -> Result<(), HarnessError> {
    let svg = render_map(training_obstacles, inference_obstacles, paths, title);
    if let Some(parent) = path.parent() {
        artifacts::ensure_dir(parent)?;
    }
    std::fs::write(path, svg.as_bytes())
        .map_err(|e| HarnessError::new(Stage::Plot, format!("write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_yields_a_valid_svg_with_one_marker() {
        let series = [Series::new("single", vec![(2.0, 3.0)])];
        let svg = render_plot(&series, PlotKind::Line, "one point").unwrap();
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle ").count(), 1);
        assert_eq!(svg.matches("<polyline ").count(), 0, "no line for one point");
    }

    #[test]
    fn identical_invocations_are_byte_identical() {
        let series = [
            Series::new("a", vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.25)]),
            Series::new("b", vec![(0.0, 0.1), (1.0, 0.2), (2.0, 0.4)]),
        ];
        let x = render_plot(&series, PlotKind::Line, "twice").unwrap();
        let y = render_plot(&series, PlotKind::Line, "twice").unwrap();
        assert_eq!(x, y);
        let bx = render_plot(&series, PlotKind::Bar, "twice").unwrap();
        let by = render_plot(&series, PlotKind::Bar, "twice").unwrap();
        assert_eq!(bx, by);
    }

    #[test]
    fn monotone_series_renders_monotone_polyline_coordinates() {
        let series = [Series::new(
            "up",
            (0..8).map(|i| (i as f64, (i * i) as f64)).collect(),
        )];
        let svg = render_plot(&series, PlotKind::Line, "monotone").unwrap();
        let start = svg.find("points=\"").unwrap() + "points=\"".len();
        let end = svg[start..].find('"').unwrap() + start;
        let pairs: Vec<(f64, f64)> = svg[start..end]
            .split(' ')
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect();
        for w in pairs.windows(2) {
            assert!(w[1].0 > w[0].0, "x pixels increase");
            assert!(w[1].1 < w[0].1, "y pixels decrease (SVG y is flipped)");
        }
    }

    #[test]
    fn empty_and_nonfinite_input_is_rejected() {
        assert!(render_plot(&[], PlotKind::Line, "none").is_err());
        let nan = [Series::new("bad", vec![(0.0, f64::NAN)])];
        assert!(render_plot(&nan, PlotKind::Line, "nan").is_err());
    }

    #[test]
    fn bar_chart_draws_one_rect_per_point_plus_legend() {
        let series = [
            Series::new("m1", vec![(0.0, 0.9), (1.0, 0.7)]),
            Series::new("m2", vec![(0.0, 0.5), (1.0, 0.6)]),
        ];
        let svg = render_plot(&series, PlotKind::Bar, "bars").unwrap();
        // background + 4 bars + 2 legend swatches
        assert_eq!(svg.matches("<rect ").count(), 1 + 4 + 2);
    }

    #[test]
    fn map_render_is_deterministic_and_complete() {
        let training = topographies();
        let inference = vec![Circle::new([0.5, 0.5], 0.05)];
        let paths = vec![("p0".to_string(), vec![0.05, 0.5, 0.5, 0.8, 0.95, 0.5])];
        let a = render_map(&training, &inference, &paths, "map");
        let b = render_map(&training, &inference, &paths, "map");
        assert_eq!(a, b);
        assert_eq!(a.matches("<circle ").count(), training.len() + 1);
        assert_eq!(a.matches("<polyline ").count(), 1);
    }

    fn topographies() -> Vec<Circle> {
        vec![
            Circle::new([0.3, 0.3], 0.1),
            Circle::new([0.7, 0.6], 0.12),
        ]
    }

    #[test]
    fn pixel_frames_render_one_rect_per_pixel() {
        let data: Vec<f64> = (0..2 * 3 * 2).map(|i| i as f64 / 11.0 - 0.5).collect();
        let svg = render_pixel_frames(&data, 2, 3, 2, "frames").unwrap();
        // 12 pixels + 2 frame borders + background.
        assert_eq!(svg.matches("<rect ").count(), 12 + 2 + 1);
        assert!(render_pixel_frames(&data, 2, 3, 3, "bad").is_err());
        let again = render_pixel_frames(&data, 2, 3, 2, "frames").unwrap();
        assert_eq!(svg, again);
    }

    #[test]
    fn titles_are_xml_escaped() {
        let series = [Series::new("a<b&c", vec![(0.0, 1.0)])];
        let svg = render_plot(&series, PlotKind::Line, "x < y & z").unwrap();
        assert!(svg.contains("x &lt; y &amp; z"));
        assert!(svg.contains("a&lt;b&amp;c"));
        assert!(!svg.contains("x < y"));
    }
}

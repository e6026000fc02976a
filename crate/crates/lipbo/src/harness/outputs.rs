//! Artifact writers: per-run trace JSON, the aggregate CSV table, and an SVG
//! error-curve plot with one polyline per method.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;

use super::{MethodSummary, RunTrace};

/// Aggregate CSV schema (fixed).
pub const CSV_HEADER: &str = "iteration,method,mean_abs_error,std_abs_error,q10,q90";

const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

/// Fail fast if the output directory cannot be created or written to. Run
/// before any experiment starts.
pub fn validate_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"ok")?;
    fs::remove_file(&probe)?;
    Ok(())
}

/// Write traces, the aggregate table, and the plot. Returns the paths written.
pub fn emit_outputs(
    traces: &[RunTrace],
    summaries: &[MethodSummary],
    benchmark: &str,
    log_scale_error: bool,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    validate_output_dir(dir)?;
    let mut written = Vec::new();

    for trace in traces {
        let path = dir.join(format!("trace_{}_{}_{}.json", benchmark, trace.method, trace.seed));
        let mut file = fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut file, trace)?;
        file.write_all(b"\n")?;
        written.push(path);
    }

    let csv_path = dir.join(format!("aggregate_{benchmark}.csv"));
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for summary in summaries {
        for row in &summary.rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.iteration,
                summary.method,
                row.mean_abs_error,
                row.std_abs_error,
                row.q10,
                row.q90
            ));
        }
    }
    fs::write(&csv_path, csv)?;
    written.push(csv_path);

    let svg_path = dir.join(format!("errors_{benchmark}.svg"));
    fs::write(&svg_path, render_svg(summaries, benchmark, log_scale_error))?;
    written.push(svg_path);

    Ok(written)
}

/// Read one trace back.
pub fn load_trace(path: &Path) -> Result<RunTrace> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Mean absolute error versus evaluations, one polyline per method plus a
/// shaded 10th-90th quantile band. Public so the theory subcommands can plot
/// their curves with the same machinery.
pub fn render_svg(summaries: &[MethodSummary], benchmark: &str, log_scale: bool) -> String {
    const W: f64 = 860.0;
    const H: f64 = 520.0;
    const LEFT: f64 = 75.0;
    const RIGHT: f64 = 170.0;
    const TOP: f64 = 35.0;
    const BOTTOM: f64 = 55.0;
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;

    // Floor keeps zero errors plottable on the log axis.
    let y_value = |v: f64| if log_scale { v.max(1e-12).log10() } else { v };

    let max_iter = summaries.iter().flat_map(|s| s.rows.iter()).map(|r| r.iteration).max().unwrap_or(1);
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in summaries {
        for r in &s.rows {
            for v in [r.mean_abs_error, r.q10, r.q90] {
                let v = y_value(v);
                y_min = y_min.min(v);
                y_max = y_max.max(v);
            }
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if (y_max - y_min).abs() < 1e-15 {
        y_max = y_min + 1.0;
    }

    let x_of = |iter: usize| LEFT + plot_w * (iter as f64 - 1.0) / (max_iter.max(2) as f64 - 1.0);
    let y_of = |v: f64| TOP + plot_h * (1.0 - (y_value(v) - y_min) / (y_max - y_min));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"15\">absolute error vs evaluations: {}</text>\n",
        LEFT, benchmark
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{}\" stroke=\"black\"/>\n",
        TOP + plot_h
    ));
    // ticks
    for k in 0..=5 {
        let iter = 1 + k * (max_iter.saturating_sub(1)) / 5;
        let x = x_of(iter);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            TOP + plot_h,
            TOP + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{iter}</text>\n",
            TOP + plot_h + 18.0
        ));
        let yv = y_min + (y_max - y_min) * k as f64 / 5.0;
        let y = TOP + plot_h * (1.0 - k as f64 / 5.0);
        let label = if log_scale { format!("1e{yv:.1}") } else { format!("{yv:.3}") };
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{label}</text>\n",
            LEFT - 8.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">function evaluations</text>\n",
        LEFT + plot_w / 2.0,
        H - 12.0
    ));

    for (i, s) in summaries.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.rows.is_empty() {
            continue;
        }
        // quantile band
        let mut band = String::new();
        for r in &s.rows {
            band.push_str(&format!("{:.2},{:.2} ", x_of(r.iteration), y_of(r.q90)));
        }
        for r in s.rows.iter().rev() {
            band.push_str(&format!("{:.2},{:.2} ", x_of(r.iteration), y_of(r.q10)));
        }
        svg.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.12\" stroke=\"none\"/>\n",
            band.trim_end()
        ));
        // mean curve: the one polyline for this method
        let pts: Vec<String> = s
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", x_of(r.iteration), y_of(r.mean_abs_error)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            pts.join(" ")
        ));
        // legend
        let ly = TOP + 16.0 * i as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"4\" fill=\"{color}\"/>\n",
            LEFT + plot_w + 12.0,
            ly
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            LEFT + plot_w + 32.0,
            ly + 5.0,
            s.method
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

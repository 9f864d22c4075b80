//! Deterministic SVG figures from an experiment report: per-method forest
//! plots of group TPR intervals, and a per-attribute scatter of EOD
//! against balanced accuracy with the fair band shaded.
//!
//! Output is plain text with fixed-precision coordinates and stable
//! element ordering, so identical reports render identical bytes.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::report::{CellReport, ExperimentReport};
use super::BASE_METHOD;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Color-safe palette; methods map to entries by sorted position.
const PALETTE: [&str; 8] = [
    "#332288", "#117733", "#44aa99", "#88ccee", "#ddcc77", "#cc6677", "#aa4499", "#882255",
];

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<title>{title}</title>\n\
         <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n",
        w = WIDTH,
        h = HEIGHT,
    )
}

/// TPR in [0, 1] to plot x.
fn tpr_x(tpr: f64) -> f64 {
    MARGIN_LEFT + tpr.clamp(0.0, 1.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
}

/// Forest plot of per-group mean TPR with Tukey display half-widths,
/// base rows paired with one mitigation's rows.
fn forest_svg(attribute: &str, base: &CellReport, method: Option<&CellReport>) -> Result<String> {
    let base_groups = base
        .groups
        .as_ref()
        .ok_or_else(|| Error::IncompleteReport(format!("base groups missing for '{attribute}'")))?;
    let mut rows: Vec<(String, f64, f64, &str)> = Vec::new();
    for g in base_groups {
        rows.push((
            format!("{} ({})", g.group, BASE_METHOD),
            g.mean_tpr,
            g.half_width,
            PALETTE[0],
        ));
        if let Some(cell) = method {
            let mg = cell
                .groups
                .as_ref()
                .and_then(|gs| gs.iter().find(|m| m.group == g.group))
                .ok_or_else(|| {
                    Error::IncompleteReport(format!(
                        "group '{}' missing in {} cell",
                        g.group, cell.method
                    ))
                })?;
            rows.push((
                format!("{} ({})", mg.group, cell.method),
                mg.mean_tpr,
                mg.half_width,
                PALETTE[1],
            ));
        }
    }

    let title = match method {
        Some(cell) => format!("TPR by {attribute}: {} vs {}", BASE_METHOD, cell.method),
        None => format!("TPR by {attribute}: {BASE_METHOD}"),
    };
    let mut svg = svg_header(&title);
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"16\" fill=\"#000000\">{title}</text>\n",
        fmt(MARGIN_LEFT)
    ));

    // Axis with 0.0, 0.25, ..., 1.0 ticks.
    let axis_y = HEIGHT - MARGIN_BOTTOM;
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
        fmt(tpr_x(0.0)),
        fmt(axis_y),
        fmt(tpr_x(1.0)),
        fmt(axis_y)
    ));
    for i in 0..=4 {
        let tick = i as f64 * 0.25;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#000000\" text-anchor=\"middle\">{tick:.2}</text>\n",
            fmt(tpr_x(tick)),
            fmt(axis_y + 18.0)
        ));
    }

    let span = axis_y - MARGIN_TOP - 20.0;
    let step = span / rows.len() as f64;
    for (i, (label, mean, half, color)) in rows.iter().enumerate() {
        let y = MARGIN_TOP + 20.0 + step * (i as f64 + 0.5);
        svg.push_str(&format!(
            "<line class=\"interval\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>\n",
            fmt(tpr_x(mean - half)),
            fmt(y),
            fmt(tpr_x(mean + half)),
            fmt(y)
        ));
        svg.push_str(&format!(
            "<circle class=\"mean\" cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{color}\"/>\n",
            fmt(tpr_x(*mean)),
            fmt(y)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#000000\" text-anchor=\"end\">{label}</text>\n",
            fmt(MARGIN_LEFT - 8.0),
            fmt(y + 4.0)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// EOD in [-1, 1] to plot x; BAcc in [0, 1] to plot y.
fn eod_x(eod: f64) -> f64 {
    let half = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0;
    MARGIN_LEFT + half + eod.clamp(-1.0, 1.0) * half
}

fn bacc_y(bacc: f64) -> f64 {
    let span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    HEIGHT - MARGIN_BOTTOM - bacc.clamp(0.0, 1.0) * span
}

/// Scatter of (EOD, BAcc): one marker per method plus base, fair band
/// shaded.
fn scatter_svg(attribute: &str, band: f64, cells: &[&CellReport]) -> Result<String> {
    let title = format!("EOD vs balanced accuracy by {attribute}");
    let mut svg = svg_header(&title);
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"16\" fill=\"#000000\">{title}</text>\n",
        fmt(MARGIN_LEFT)
    ));

    svg.push_str(&format!(
        "<rect class=\"band\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" \
         fill=\"#cceecc\" fill-opacity=\"0.6\"/>\n",
        fmt(eod_x(-band)),
        fmt(MARGIN_TOP),
        fmt(eod_x(band) - eod_x(-band)),
        fmt(HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    ));

    // Axes: EOD horizontal (zero line dashed), BAcc vertical.
    let axis_y = HEIGHT - MARGIN_BOTTOM;
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
        fmt(eod_x(-1.0)),
        fmt(axis_y),
        fmt(eod_x(1.0)),
        fmt(axis_y)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888888\" stroke-dasharray=\"4 4\"/>\n",
        fmt(eod_x(0.0)),
        fmt(MARGIN_TOP),
        fmt(eod_x(0.0)),
        fmt(axis_y)
    ));
    for i in 0..=4 {
        let tick = -1.0 + i as f64 * 0.5;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#000000\" text-anchor=\"middle\">{tick:.1}</text>\n",
            fmt(eod_x(tick)),
            fmt(axis_y + 18.0)
        ));
    }
    for i in 0..=4 {
        let tick = i as f64 * 0.25;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#000000\" text-anchor=\"end\">{tick:.2}</text>\n",
            fmt(MARGIN_LEFT - 8.0),
            fmt(bacc_y(tick) + 4.0)
        ));
    }

    for (i, cell) in cells.iter().enumerate() {
        let fairness = cell.fairness.as_ref().ok_or_else(|| {
            Error::IncompleteReport(format!("fairness missing in {} cell", cell.method))
        })?;
        let bacc = cell
            .balanced_accuracy
            .as_ref()
            .ok_or_else(|| {
                Error::IncompleteReport(format!("balanced accuracy missing in {} cell", cell.method))
            })?
            .mean;
        let color = PALETTE[i % PALETTE.len()];
        svg.push_str(&format!(
            "<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"{color}\"/>\n",
            fmt(eod_x(fairness.eod)),
            fmt(bacc_y(bacc))
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#000000\">{}</text>\n",
            fmt(eod_x(fairness.eod) + 8.0),
            fmt(bacc_y(bacc) - 6.0),
            cell.method
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders all figures for a report into `outdir`, returning the created
/// paths in deterministic order.
pub fn render_figures(report: &ExperimentReport, outdir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let outdir = outdir.as_ref();
    std::fs::create_dir_all(outdir)?;
    let band = report.config["fair_band"].as_f64().unwrap_or(0.1);
    let mut paths = Vec::new();
    for attribute in report.attributes() {
        let base = report.base_cell(attribute)?;
        let methods: Vec<&CellReport> = report
            .cells
            .iter()
            .filter(|c| c.attribute == attribute && c.method != BASE_METHOD && c.is_ok())
            .collect();

        if methods.is_empty() {
            let path = outdir.join(format!("forest_{attribute}_{BASE_METHOD}.svg"));
            std::fs::write(&path, forest_svg(attribute, base, None)?)?;
            paths.push(path);
        }
        for cell in &methods {
            let path = outdir.join(format!("forest_{attribute}_{}.svg", cell.method));
            std::fs::write(&path, forest_svg(attribute, base, Some(cell))?)?;
            paths.push(path);
        }

        let mut scatter_cells: Vec<&CellReport> = vec![base];
        scatter_cells.extend(methods.iter().copied());
        let path = outdir.join(format!("scatter_{attribute}.svg"));
        std::fs::write(&path, scatter_svg(attribute, band, &scatter_cells)?)?;
        paths.push(path);
    }
    Ok(paths)
}

//! Hand-emitted SVG sweep plots: for one (environment, planner) pair, the
//! achieved return and the observer's rollout return against the threshold
//! fraction, with the optimal return as a reference line. No timestamps and
//! fixed-precision coordinates, so output bytes depend only on the rows.

use std::fmt::Write as _;
use std::path::Path;

use super::ResultRow;
use crate::error::{Error, Result};
use crate::util::fmt_sig;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 62.0;
const RIGHT: f64 = 18.0;
const TOP: f64 = 22.0;
const BOTTOM: f64 = 52.0;

struct FracStats {
    frac: f64,
    e_min: f64,
    achieved: f64,
    rollout: Option<f64>,
}

fn collect(rows: &[ResultRow], env_name: &str, planner: &str) -> Vec<FracStats> {
    let mut fracs: Vec<f64> = rows
        .iter()
        .filter(|r| r.env_name == env_name && r.planner == planner && r.error.is_none())
        .map(|r| r.threshold_frac)
        .collect();
    fracs.sort_by(|a, b| a.partial_cmp(b).expect("finite fracs"));
    fracs.dedup();
    let mut out = Vec::new();
    for f in fracs {
        let cells: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| {
                r.env_name == env_name
                    && r.planner == planner
                    && r.error.is_none()
                    && r.threshold_frac == f
                    && r.e_min.is_some()
            })
            .collect();
        if cells.is_empty() {
            continue;
        }
        let mean = |g: &dyn Fn(&ResultRow) -> Option<f64>| -> Option<f64> {
            let vals: Vec<f64> = cells.iter().filter_map(|r| g(r)).collect();
            if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        };
        out.push(FracStats {
            frac: f,
            e_min: mean(&|r| r.e_min).expect("filtered on e_min"),
            achieved: match mean(&|r| r.achieved_return) {
                Some(v) => v,
                None => continue,
            },
            rollout: mean(&|r| r.irl_rollout_return),
        });
    }
    out
}

/// Least-squares line through (frac, e_min), evaluated at frac = 1. The
/// threshold map is linear in the fraction with the optimal return at 1, so
/// this recovers the mean optimal return across seeds.
fn optimal_return_estimate(stats: &[FracStats]) -> f64 {
    let n = stats.len() as f64;
    let mx = stats.iter().map(|s| s.frac).sum::<f64>() / n;
    let my = stats.iter().map(|s| s.e_min).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for s in stats {
        sxx += (s.frac - mx) * (s.frac - mx);
        sxy += (s.frac - mx) * (s.e_min - my);
    }
    if sxx == 0.0 {
        return my;
    }
    let slope = sxy / sxx;
    my + slope * (1.0 - mx)
}

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

pub fn plot_to_svg(rows: &[ResultRow], env_name: &str, planner: &str) -> Result<String> {
    let stats = collect(rows, env_name, planner);
    if stats.is_empty() {
        return Err(Error::Invalid(format!(
            "no plottable rows for env '{env_name}' planner '{planner}'"
        )));
    }
    let e_star = optimal_return_estimate(&stats);
    let mut ymin = e_star;
    let mut ymax = e_star;
    for s in &stats {
        ymin = ymin.min(s.achieved).min(s.rollout.unwrap_or(s.achieved));
        ymax = ymax.max(s.achieved).max(s.rollout.unwrap_or(s.achieved));
    }
    let pad = ((ymax - ymin) * 0.08).max(1e-6);
    ymin -= pad;
    ymax += pad;
    let (x0, x1) = (0.0f64, 1.0f64);
    let px = |f: f64| LEFT + (f - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
    let py = |v: f64| HEIGHT - BOTTOM - (v - ymin) / (ymax - ymin) * (HEIGHT - TOP - BOTTOM);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"14\" text-anchor=\"middle\">{} / {}</text>",
        coord(WIDTH / 2.0),
        env_name,
        planner
    );
    // Axes.
    let _ = writeln!(
        svg,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        coord(LEFT),
        coord(HEIGHT - BOTTOM),
        coord(WIDTH - RIGHT),
        coord(HEIGHT - BOTTOM)
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        coord(LEFT),
        coord(TOP),
        coord(LEFT),
        coord(HEIGHT - BOTTOM)
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let x = px(f);
        let _ = writeln!(
            svg,
            "  <line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>",
            coord(x),
            coord(HEIGHT - BOTTOM),
            coord(HEIGHT - BOTTOM + 5.0)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            coord(x),
            coord(HEIGHT - BOTTOM + 20.0),
            fmt_sig(f, 3)
        );
        let v = ymin + f * (ymax - ymin);
        let y = py(v);
        let _ = writeln!(
            svg,
            "  <line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>",
            coord(y),
            coord(LEFT - 5.0),
            coord(LEFT)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            coord(LEFT - 8.0),
            coord(y + 4.0),
            fmt_sig(v, 4)
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">threshold fraction</text>",
        coord((LEFT + WIDTH - RIGHT) / 2.0),
        coord(HEIGHT - 12.0)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">return</text>",
        coord((TOP + HEIGHT - BOTTOM) / 2.0),
        coord((TOP + HEIGHT - BOTTOM) / 2.0)
    );
    // Optimal-return reference.
    let _ = writeln!(
        svg,
        "  <line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>",
        coord(LEFT),
        coord(py(e_star)),
        coord(WIDTH - RIGHT)
    );
    let series: [(&str, &str, Vec<(f64, f64)>); 2] = [
        (
            "achieved return",
            "#1f77b4",
            stats.iter().map(|s| (s.frac, s.achieved)).collect(),
        ),
        (
            "observer rollout",
            "#d62728",
            stats
                .iter()
                .filter_map(|s| s.rollout.map(|r| (s.frac, r)))
                .collect(),
        ),
    ];
    for (name, color, points) in &series {
        if points.is_empty() {
            continue;
        }
        let path: Vec<String> = points
            .iter()
            .map(|&(f, v)| format!("{},{}", coord(px(f)), coord(py(v))))
            .collect();
        let _ = writeln!(
            svg,
            "  <polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>",
            color,
            path.join(" ")
        );
        for &(f, v) in points {
            let _ = writeln!(
                svg,
                "  <circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>",
                coord(px(f)),
                coord(py(v)),
                color
            );
        }
        let _ = name;
    }
    // Legend.
    let lx = WIDTH - RIGHT - 170.0;
    for (i, (name, color, _)) in series.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            "  <line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>",
            coord(lx),
            coord(y),
            coord(lx + 24.0),
            color
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\">{}</text>",
            coord(lx + 30.0),
            coord(y + 4.0),
            name
        );
    }
    let ly = TOP + 10.0 + 18.0 * series.len() as f64;
    let _ = writeln!(
        svg,
        "  <line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>",
        coord(lx),
        coord(ly),
        coord(lx + 24.0)
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\">optimal return</text>",
        coord(lx + 30.0),
        coord(ly + 4.0)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_plot(
    rows: &[ResultRow],
    env_name: &str,
    planner: &str,
    path: &Path,
) -> Result<()> {
    let svg = plot_to_svg(rows, env_name, planner)?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, svg.as_bytes())?;
    Ok(())
}

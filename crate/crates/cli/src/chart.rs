//! SVG convergence charts: converged nodes per round, one line per run.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{CliError, Result};
use crate::results::ResultRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// One polyline's vertices, in round order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub preset: String,
    pub run_id: String,
    pub rng_seed: u64,
    pub points: Vec<(u32, usize)>,
}

type SeriesKey<'a> = (&'a str, u64, &'a str);

/// Groups rows into series ordered by preset, seed, then run id.
pub fn series(rows: &[ResultRow]) -> Vec<Series> {
    let mut groups: BTreeMap<SeriesKey, Vec<(u32, usize)>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((&r.preset, r.rng_seed, &r.run_id))
            .or_default()
            .push((r.round, r.converged_nodes));
    }
    groups
        .into_iter()
        .map(|((preset, rng_seed, run_id), mut points)| {
            points.sort_unstable();
            Series {
                preset: preset.to_string(),
                run_id: run_id.to_string(),
                rng_seed,
                points,
            }
        })
        .collect()
}

fn family(preset: &str) -> &str {
    preset.split('-').next().unwrap_or(preset)
}

pub fn render_svg(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(CliError::usage("no rows to chart"));
    }
    let first = family(&rows[0].preset);
    if let Some(other) = rows.iter().find(|r| family(&r.preset) != first) {
        return Err(CliError::usage(format!(
            "rows mix preset families `{}` and `{}`",
            rows[0].preset, other.preset
        )));
    }
    let all = series(rows);
    let presets: Vec<&str> = {
        let mut p: Vec<&str> = all.iter().map(|s| s.preset.as_str()).collect();
        p.dedup();
        p
    };
    let color = |preset: &str| {
        let i = presets.iter().position(|p| *p == preset).unwrap_or(0);
        PALETTE[i % PALETTE.len()]
    };

    let max_round = rows.iter().map(|r| r.round).max().unwrap_or(0).max(1);
    let max_conv = rows
        .iter()
        .map(|r| r.converged_nodes)
        .max()
        .unwrap_or(0)
        .max(1);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |round: u32| LEFT + plot_w * f64::from(round) / f64::from(max_round);
    let y = |conv: usize| TOP + plot_h * (1.0 - conv as f64 / max_conv as f64);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    for tick in ticks(max_round as usize) {
        let tx = x(tick as u32);
        let _ = writeln!(
            svg,
            r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{tick}</text>"#,
            y0 + 18.0
        );
    }
    for tick in ticks(max_conv) {
        let ty = y(tick);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{tick}</text>"#,
            x0 - 6.0,
            ty + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">round</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">converged nodes</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for s in &all {
        let points: Vec<String> = s
            .points
            .iter()
            .map(|&(r, c)| format!("{:.2},{:.2}", x(r), y(c)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-preset="{}" data-seed="{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            s.preset,
            s.rng_seed,
            color(&s.preset),
            points.join(" ")
        );
    }

    for (i, preset) in presets.iter().enumerate() {
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = x1 + 16.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="3"/>"#,
            lx + 24.0,
            color(preset)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{preset}</text>"#,
            lx + 30.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

// Roughly five evenly spaced integer ticks including 0 and max.
fn ticks(max: usize) -> Vec<usize> {
    let step = max.div_ceil(5).max(1);
    let mut t: Vec<usize> = (0..=max).step_by(step).collect();
    if *t.last().unwrap() != max {
        t.push(max);
    }
    t
}

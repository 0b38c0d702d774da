//! Standalone SVG figures for beam-profiling datasets.
//!
//! Two views are supported: a heatmap of the metric over (spot index, beam
//! direction alpha), and per-beta profile curves for a few selected alpha
//! values (each point is the mean over distances at that spot angle). All
//! numeric output uses fixed precision, so identical datasets render
//! byte-identical files.

use std::fmt::Write as _;

use beamscope_core::profiler::{Dataset, MeasurementRecord};

pub const WIDTH: f64 = 900.0;
pub const HEIGHT: f64 = 620.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_TOP: f64 = 60.0;
const MARGIN_BOTTOM: f64 = 70.0;
const COLORBAR_GAP: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    HeatmapAlphaD,
    ProfileBeta,
}

#[derive(Debug)]
pub enum PlotError {
    EmptyDataset,
}

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlotError::EmptyDataset => f.write_str("dataset has no records to plot"),
        }
    }
}

impl std::error::Error for PlotError {}

/// Render a dataset to a self-contained SVG document.
pub fn render(dataset: &Dataset, kind: PlotKind) -> Result<String, PlotError> {
    if dataset.records.is_empty() {
        return Err(PlotError::EmptyDataset);
    }
    match kind {
        PlotKind::HeatmapAlphaD => Ok(heatmap(dataset)),
        PlotKind::ProfileBeta => Ok(beta_profile(dataset)),
    }
}

fn sorted_unique(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = values.collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

fn value_span(records: &[MeasurementRecord]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in records {
        lo = lo.min(r.value);
        hi = hi.max(r.value);
    }
    if lo == hi {
        // flat data still needs a non-degenerate scale
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Five-stop sequential colormap, interpolated linearly.
fn color(t: f64) -> String {
    const STOPS: [(u8, u8, u8); 5] = [
        (0x44, 0x01, 0x54),
        (0x3b, 0x52, 0x8b),
        (0x21, 0x91, 0x8c),
        (0x5e, 0xc9, 0x62),
        (0xfd, 0xe7, 0x25),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let lerp = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    let (r, g, b) = (
        lerp(STOPS[i].0, STOPS[i + 1].0),
        lerp(STOPS[i].1, STOPS[i + 1].1),
        lerp(STOPS[i].2, STOPS[i + 1].2),
    );
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn svg_open(title: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"30\" font-size=\"18\" text-anchor=\"middle\">{title}</text>",
        WIDTH / 2.0
    );
    s
}

fn heatmap(dataset: &Dataset) -> String {
    let records = &dataset.records;
    let unit = records[0].metric_kind.unit();
    let alphas = sorted_unique(records.iter().map(|r| r.alpha_deg));

    // rows follow each beam's record order (lines outer, distances inner)
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); alphas.len()];
    for r in records {
        let col = alphas.iter().position(|&a| a == r.alpha_deg).unwrap();
        columns[col].push(r.value);
    }
    let n_rows = columns.iter().map(Vec::len).max().unwrap();
    let (vmin, vmax) = value_span(records);

    let plot_w = WIDTH - MARGIN_LEFT - COLORBAR_GAP;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let cell_w = plot_w / alphas.len() as f64;
    let cell_h = plot_h / n_rows as f64;

    let title = format!(
        "{} ({unit}) over spot index and beam direction — {}",
        records[0].metric_kind,
        dataset.profile_name
    );
    let mut s = svg_open(&title);

    for (col, values) in columns.iter().enumerate() {
        let x = MARGIN_LEFT + col as f64 * cell_w;
        for (row, &v) in values.iter().enumerate() {
            // row 0 at the bottom
            let y = MARGIN_TOP + plot_h - (row + 1) as f64 * cell_h;
            let t = (v - vmin) / (vmax - vmin);
            let _ = writeln!(
                s,
                "<rect class=\"cell\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell_w:.2}\" \
                 height=\"{cell_h:.2}\" fill=\"{}\"/>",
                color(t)
            );
        }
    }

    // x axis: alpha labels, thinned when crowded
    let label_every = alphas.len().div_ceil(13);
    for (col, &a) in alphas.iter().enumerate() {
        if col % label_every != 0 && col != alphas.len() - 1 {
            continue;
        }
        let x = MARGIN_LEFT + (col as f64 + 0.5) * cell_w;
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{a}</text>",
            MARGIN_TOP + plot_h + 16.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">beam direction alpha (deg)</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 22.0
    );
    // y axis: spot index ticks
    let y_every = n_rows.div_ceil(11).max(1);
    for row in (0..n_rows).step_by(y_every) {
        let y = MARGIN_TOP + plot_h - (row as f64 + 0.5) * cell_h;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{y:.2}\" font-size=\"11\" text-anchor=\"end\">{row}</text>",
            MARGIN_LEFT - 6.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"20\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 20 {:.1})\">spot index (beta outer, distance inner)</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    // colorbar
    let bar_x = WIDTH - COLORBAR_GAP + 30.0;
    let bar_w = 18.0;
    let steps = 64;
    let step_h = plot_h / steps as f64;
    for i in 0..steps {
        let t = (i as f64 + 0.5) / steps as f64;
        let y = MARGIN_TOP + plot_h - (i + 1) as f64 * step_h;
        let _ = writeln!(
            s,
            "<rect x=\"{bar_x:.1}\" y=\"{y:.2}\" width=\"{bar_w:.1}\" height=\"{:.2}\" fill=\"{}\"/>",
            step_h + 0.5,
            color(t)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{vmax:.2} {unit}</text>",
        bar_x + bar_w + 6.0,
        MARGIN_TOP + 10.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{vmin:.2} {unit}</text>",
        bar_x + bar_w + 6.0,
        MARGIN_TOP + plot_h
    );

    s.push_str("</svg>\n");
    s
}

fn beta_profile(dataset: &Dataset) -> String {
    let records = &dataset.records;
    let unit = records[0].metric_kind.unit();
    let alphas = sorted_unique(records.iter().map(|r| r.alpha_deg));
    let betas = sorted_unique(records.iter().map(|r| r.beta_deg));

    // up to three representative beams: first, middle, last
    let mut picks = vec![0usize];
    if alphas.len() > 2 {
        picks.push(alphas.len() / 2);
    }
    if alphas.len() > 1 {
        picks.push(alphas.len() - 1);
    }

    // per (alpha, beta): mean value over distances
    let curve = |alpha: f64| -> Vec<(f64, f64)> {
        betas
            .iter()
            .filter_map(|&b| {
                let vals: Vec<f64> = records
                    .iter()
                    .filter(|r| r.alpha_deg == alpha && r.beta_deg == b)
                    .map(|r| r.value)
                    .collect();
                if vals.is_empty() {
                    None
                } else {
                    Some((b, vals.iter().sum::<f64>() / vals.len() as f64))
                }
            })
            .collect()
    };
    let curves: Vec<(f64, Vec<(f64, f64)>)> =
        picks.iter().map(|&i| (alphas[i], curve(alphas[i]))).collect();

    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in &curves {
        for &(_, v) in pts {
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
    }
    if vmin == vmax {
        vmin -= 0.5;
        vmax += 0.5;
    }
    let (bmin, bmax) = (betas[0], *betas.last().unwrap());
    let b_span = if bmax > bmin { bmax - bmin } else { 1.0 };

    let plot_w = WIDTH - MARGIN_LEFT - COLORBAR_GAP;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_x = |b: f64| MARGIN_LEFT + (b - bmin) / b_span * plot_w;
    let to_y = |v: f64| MARGIN_TOP + plot_h - (v - vmin) / (vmax - vmin) * plot_h;

    let title = format!(
        "{} ({unit}) per spot angle, mean over distances — {}",
        records[0].metric_kind,
        dataset.profile_name
    );
    let mut s = svg_open(&title);

    // frame and gridlines
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" \
         fill=\"none\" stroke=\"#888\"/>"
    );
    for &b in &betas {
        let x = to_x(b);
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{MARGIN_TOP}\" x2=\"{x:.2}\" y2=\"{:.1}\" stroke=\"#eee\"/>",
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{b}</text>",
            MARGIN_TOP + plot_h + 16.0
        );
    }
    for i in 0..=5 {
        let v = vmin + (vmax - vmin) * i as f64 / 5.0;
        let y = to_y(v);
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{y:.2}\" font-size=\"11\" text-anchor=\"end\">{v:.2}</text>",
            MARGIN_LEFT - 6.0
        );
    }

    const PALETTE: [&str; 3] = ["#d95f02", "#1b9e77", "#7570b3"];
    for (i, (alpha, pts)) in curves.iter().enumerate() {
        let path: Vec<String> = pts.iter().map(|(b, v)| format!("{:.2},{:.2}", to_x(*b), to_y(*v))).collect();
        let _ = writeln!(
            s,
            "<polyline class=\"curve\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>",
            path.join(" "),
            PALETTE[i % PALETTE.len()]
        );
        for (b, v) in pts {
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{}\"/>",
                to_x(*b),
                to_y(*v),
                PALETTE[i % PALETTE.len()]
            );
        }
        // legend
        let ly = MARGIN_TOP + 14.0 + i as f64 * 18.0;
        let lx = WIDTH - COLORBAR_GAP + 10.0;
        let _ = writeln!(
            s,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" stroke-width=\"2\"/>",
            lx + 18.0,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">alpha {alpha}</text>",
            lx + 24.0,
            ly + 4.0
        );
    }

    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">spot angle beta (deg)</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 22.0
    );
    let _ = writeln!(
        s,
        "<text x=\"20\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 20 {:.1})\">{} ({unit})</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        records[0].metric_kind
    );

    s.push_str("</svg>\n");
    s
}

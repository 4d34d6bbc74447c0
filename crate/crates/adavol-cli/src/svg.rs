//! Minimal single-file SVG line plot: mean objective vs iteration on a
//! log-10 vertical axis. Pure string assembly, no external assets, and a
//! pure function of the data so emitting it can never perturb the CSVs.

use std::fmt::Write as _;

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 200.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Renders one polyline per named series. Points with a nonpositive value
/// are dropped (they have no log image); series left empty after filtering
/// are listed in the legend but draw nothing.
pub fn mean_objective_plot(title: &str, series: &[(String, Vec<(u64, f64)>)]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let mut x_max = 0u64;
    let mut log_min = f64::INFINITY;
    let mut log_max = f64::NEG_INFINITY;
    for (_, pts) in series {
        for &(k, v) in pts {
            x_max = x_max.max(k);
            if v > 0.0 && v.is_finite() {
                log_min = log_min.min(v.log10());
                log_max = log_max.max(v.log10());
            }
        }
    }
    let has_data = log_min.is_finite();
    let (lo, mut hi) = if has_data {
        (log_min.floor(), log_max.ceil())
    } else {
        (0.0, 1.0)
    };
    if hi - lo < 1.0 {
        hi = lo + 1.0;
    }
    let x_max = x_max.max(1) as f64;

    let x_of = |k: f64| MARGIN_LEFT + k / x_max * plot_w;
    let y_of = |logv: f64| MARGIN_TOP + (hi - logv) / (hi - lo) * plot_h;

    let mut out = String::with_capacity(4096);
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );

    // Axes.
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{MARGIN_TOP}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{:.1}\" y2=\"{y0}\" stroke=\"black\"/>",
        MARGIN_LEFT + plot_w
    );

    // Decade ticks; thin the labels when the range is wide.
    let decades = (hi - lo) as i64;
    let label_step = (decades / 10).max(1);
    let mut d = lo as i64;
    while d <= hi as i64 {
        let y = y_of(d as f64);
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{x0}\" y2=\"{y:.1}\" stroke=\"black\"/>",
            x0 - 5.0
        );
        if (d - lo as i64) % label_step == 0 {
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{d}</text>",
                x0 - 9.0,
                y + 4.0
            );
        }
        d += 1;
    }
    for i in 0..=4u32 {
        let frac = f64::from(i) / 4.0;
        let x = x_of(frac * x_max);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.1}\" y1=\"{y0}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.0}</text>",
            y0 + 20.0,
            frac * x_max
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">iteration</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        "<text x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1})\">mean objective</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    if !has_data {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"#888\">no positive data</text>",
            MARGIN_LEFT + plot_w / 2.0,
            MARGIN_TOP + plot_h / 2.0
        );
    }

    for (idx, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut coords = String::new();
        for &(k, v) in pts {
            if v > 0.0 && v.is_finite() {
                let _ = write!(coords, "{:.1},{:.1} ", x_of(k as f64), y_of(v.log10()));
            }
        }
        if !coords.is_empty() {
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                coords.trim_end()
            );
        }
        let ly = MARGIN_TOP + 20.0 + idx as f64 * 22.0;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            lx + 24.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 30.0,
            ly + 4.0,
            escape(name)
        );
    }

    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

//! Static SVG line charts of curve tables.
//!
//! Each chart is a grid of panels, one row per item count and one column per
//! sample size, with a line per series. Output is plain text built with fixed
//! precision so identical tables give byte-identical files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::curves::{curves_file, deltas_file, Metric};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSeries {
    pub name: String,
    pub items: u32,
    pub n: u32,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartTable {
    pub mode: String,
    pub title: String,
    pub y_label: String,
    pub series: Vec<ChartSeries>,
}

const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 210.0;
const GAP: f64 = 40.0;
const LEFT: f64 = 80.0;
const TOP: f64 = 70.0;
const BOTTOM: f64 = 60.0;
const LEGEND_W: f64 = 210.0;

const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

const CATEGORICAL: [&str; 6] = [
    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn gradient(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

/// Colors per series: low-to-high error runs purple to yellow in independent
/// mode; named profiles get blue, green and orange.
fn series_colors(mode: &str, names: &[String]) -> Vec<String> {
    if mode == "independent" {
        let m = names.len().max(2) - 1;
        return (0..names.len())
            .map(|i| gradient(i as f64 / m as f64))
            .collect();
    }
    let mut extra = CATEGORICAL.iter().cycle();
    names
        .iter()
        .map(|n| match n.as_str() {
            "small" => "#1f77b4".to_string(),
            "medium" => "#2ca02c".to_string(),
            "large" => "#ff7f0e".to_string(),
            _ => extra.next().expect("cycle").to_string(),
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round step for about `target` ticks over `[lo, hi]`.
fn nice_step(lo: f64, hi: f64, target: f64) -> f64 {
    let raw = (hi - lo) / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64, target: f64) -> (f64, f64, Vec<f64>) {
    let step = nice_step(lo, hi, target);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let count = ((end - start) / step).round() as usize;
    let ticks = (0..=count).map(|i| start + i as f64 * step).collect();
    (start, end, ticks)
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

/// Render one faceted line chart.
pub fn render_svg(table: &ChartTable) -> String {
    let rows: Vec<u32> = table
        .series
        .iter()
        .map(|s| s.items)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let cols: Vec<u32> = table
        .series
        .iter()
        .map(|s| s.n)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut names: Vec<String> = Vec::new();
    for s in &table.series {
        if !names.contains(&s.name) {
            names.push(s.name.clone());
        }
    }
    let colors = series_colors(&table.mode, &names);

    let all = || table.series.iter().flat_map(|s| s.points.iter());
    let (x_lo, x_hi) = value_range(all().map(|p| p.0));
    let (y_lo, y_hi) = value_range(all().map(|p| p.1));
    let (x_lo, x_hi, x_ticks) = ticks(x_lo, x_hi, 6.0);
    let (y_lo, y_hi, y_ticks) = ticks(y_lo, y_hi, 5.0);
    let x_step = nice_step(x_lo, x_hi, 6.0);
    let y_step = if y_ticks.len() > 1 {
        y_ticks[1] - y_ticks[0]
    } else {
        1.0
    };

    let width = LEFT + cols.len() as f64 * (PANEL_W + GAP) + LEGEND_W;
    let height = TOP + rows.len() as f64 * (PANEL_H + GAP) + BOTTOM;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="Helvetica, Arial, sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="28" font-size="18" text-anchor="middle">{}</text>"#,
        (width - LEGEND_W) / 2.0,
        escape(&table.title)
    );

    for (ri, &items) in rows.iter().enumerate() {
        for (ci, &n) in cols.iter().enumerate() {
            let px = LEFT + ci as f64 * (PANEL_W + GAP);
            let py = TOP + ri as f64 * (PANEL_H + GAP);
            let sx = |x: f64| px + (x - x_lo) / (x_hi - x_lo) * PANEL_W;
            let sy = |y: f64| py + PANEL_H - (y - y_lo) / (y_hi - y_lo) * PANEL_H;

            let _ = writeln!(
                svg,
                r#"<g class="panel" data-items="{items}" data-n="{n}">"#
            );
            let _ = writeln!(
                svg,
                r##"<rect x="{px:.2}" y="{py:.2}" width="{PANEL_W:.2}" height="{PANEL_H:.2}" fill="#f7f7f7" stroke="#444" stroke-width="1"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{} item{}, N = {n}</text>"#,
                px + PANEL_W / 2.0,
                py - 8.0,
                items,
                if items == 1 { "" } else { "s" }
            );
            for &t in &x_ticks {
                let x = sx(t);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"##,
                    py,
                    py + PANEL_H,
                    py + PANEL_H + 14.0,
                    tick_label(t, x_step)
                );
            }
            for &t in &y_ticks {
                let y = sy(t);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{px:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"##,
                    px + PANEL_W,
                    px - 5.0,
                    y + 3.0,
                    tick_label(t, y_step)
                );
            }
            for s in table.series.iter().filter(|s| s.items == items && s.n == n) {
                let idx = names
                    .iter()
                    .position(|x| x == &s.name)
                    .expect("known series");
                let path: Vec<String> = s
                    .points
                    .iter()
                    .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
                    colors[idx],
                    path.join(" "),
                    escape(&s.name)
                );
            }
            let _ = writeln!(svg, "</g>");
        }
    }

    let grid_bottom = TOP + rows.len() as f64 * (PANEL_H + GAP) - GAP;
    let grid_right = LEFT + cols.len() as f64 * (PANEL_W + GAP) - GAP;
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">Number of response options (K)</text>"#,
        (LEFT + grid_right) / 2.0,
        grid_bottom + 42.0
    );
    let mid_y = (TOP + grid_bottom) / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="22" y="{mid_y:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 22 {mid_y:.2})">{}</text>"#,
        escape(&table.y_label)
    );

    let lx = grid_right + 25.0;
    let _ = writeln!(
        svg,
        r#"<g class="legend"><text x="{lx:.2}" y="{:.2}" font-size="13" font-weight="bold">{}</text>"#,
        TOP,
        if table.mode == "independent" {
            "Measurement error"
        } else {
            "Error dependency"
        }
    );
    for (i, (name, color)) in names.iter().zip(&colors).enumerate() {
        let y = TOP + 20.0 + i as f64 * 18.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="3"/><text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            y - 4.0,
            lx + 24.0,
            y - 4.0,
            lx + 30.0,
            y,
            escape(name)
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    svg
}

/// Read a curve (`deltas = false`) or delta table written by the curves step.
pub fn read_curve_table(path: &Path, metric: Metric, deltas: bool) -> Result<ChartTable> {
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let (x_col, y_col) = if deltas { (5, 6) } else { (4, 5) };

    let mut mode = String::new();
    let mut series: Vec<ChartSeries> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let row = line + 2;
        let get = |i: usize| {
            record
                .get(i)
                .ok_or_else(|| bad(format!("line {row}: missing column {i}")))
        };
        let num = |i: usize| -> Result<f64> {
            get(i)?
                .parse()
                .map_err(|_| bad(format!("line {row}: column {i} is not a number")))
        };
        let int = |i: usize| -> Result<u32> {
            get(i)?
                .parse()
                .map_err(|_| bad(format!("line {row}: column {i} is not an integer")))
        };
        mode = get(0)?.to_string();
        let name = get(1)?.to_string();
        let (items, n) = (int(2)?, int(3)?);
        let point = (num(x_col)?, num(y_col)?);
        match series.last_mut() {
            Some(s) if s.name == name && s.items == items && s.n == n => s.points.push(point),
            _ => series.push(ChartSeries {
                name,
                items,
                n,
                points: vec![point],
            }),
        }
    }

    let (title, y_label) = if deltas {
        (
            format!("Delta of {}", metric.description()),
            format!("Change in {}", metric.description()),
        )
    } else {
        (
            metric.description().to_string(),
            metric.description().to_string(),
        )
    };
    Ok(ChartTable {
        mode,
        title,
        y_label,
        series,
    })
}

#[derive(Debug, Default)]
pub struct ChartOutcome {
    pub written: Vec<PathBuf>,
    pub notices: Vec<String>,
}

/// Render every curve and delta table found in `dir` to `<mode>_<metric>[_delta].svg`.
pub fn render_charts(dir: &Path) -> Result<ChartOutcome> {
    let mut outcome = ChartOutcome::default();
    for metric in Metric::ALL {
        for deltas in [false, true] {
            let name = if deltas {
                deltas_file(metric)
            } else {
                curves_file(metric)
            };
            let path = dir.join(&name);
            if !path.exists() {
                continue;
            }
            let table = read_curve_table(&path, metric, deltas)?;
            if table.series.is_empty() {
                outcome
                    .notices
                    .push(format!("{name}: no data, chart skipped"));
                continue;
            }
            let suffix = if deltas { "_delta" } else { "" };
            let out = dir.join(format!("{}_{}{}.svg", table.mode, metric, suffix));
            fs::write(&out, render_svg(&table)).map_err(|e| Error::io(&out, e))?;
            outcome.written.push(out);
        }
    }
    if outcome.written.is_empty() && outcome.notices.is_empty() {
        outcome.notices.push(format!(
            "no curve tables in {}, nothing to chart",
            dir.display()
        ));
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(mode: &str, names: &[&str]) -> ChartTable {
        let mut series = Vec::new();
        for items in [1, 3] {
            for n in [100, 500, 1000] {
                for (i, name) in names.iter().enumerate() {
                    series.push(ChartSeries {
                        name: name.to_string(),
                        items,
                        n,
                        points: (2..=10)
                            .map(|k| (k as f64, 0.5 + 0.01 * (k + i) as f64))
                            .collect(),
                    });
                }
            }
        }
        ChartTable {
            mode: mode.into(),
            title: "t".into(),
            y_label: "y".into(),
            series,
        }
    }

    #[test]
    fn facet_grid_is_items_by_n() {
        let svg = render_svg(&table(
            "independent",
            &["sigma=0.1", "sigma=0.5", "sigma=1"],
        ));
        assert_eq!(svg.matches(r#"class="panel""#).count(), 6);
        assert!(svg.contains(r#"data-items="3" data-n="1000""#));
        assert_eq!(svg.matches("<polyline").count(), 18);
        assert!(svg.contains("#440154") && svg.contains("#fde725"));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn dependency_colors() {
        let svg = render_svg(&table("dependency", &["small", "medium", "large"]));
        for c in ["#1f77b4", "#2ca02c", "#ff7f0e"] {
            assert!(svg.contains(c));
        }
        assert!(svg.contains("Error dependency"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let t = table("dependency", &["small", "a<b"]);
        assert_eq!(render_svg(&t), render_svg(&t));
        assert!(render_svg(&t).contains("a&lt;b"));
    }

    #[test]
    fn ticks_cover_range() {
        let (lo, hi, t) = ticks(2.0, 100.0, 6.0);
        assert!(lo <= 2.0 && hi >= 100.0);
        assert_eq!(t.first().copied(), Some(lo));
        assert_eq!(tick_label(-0.0, 0.1), "0.0");
        assert_eq!(gradient(0.0), "#440154");
        assert_eq!(gradient(1.0), "#fde725");
    }

    #[test]
    fn empty_dir_is_a_notice() {
        let dir = tempfile::tempdir().unwrap();
        let out = render_charts(dir.path()).unwrap();
        assert!(out.written.is_empty());
        assert_eq!(out.notices.len(), 1);
    }
}

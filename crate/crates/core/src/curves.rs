//! Metric-vs-K curves, their delta series and optimum reports.
//!
//! Summaries are grouped by series (sigma in independent mode, profile in
//! dependency mode), item count and sample size. Within a group the metric is
//! ordered by K, differenced, and scanned for its best K: the maximum for
//! recovery and bias, the minimum for the slope standard error.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::{Mode, RunConfig};
use crate::dependency::DependencyProfile;
use crate::engine::CellSummary;
use crate::error::{Error, Result};
use crate::output::format_sig;
use crate::stats::delta_series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Spearman,
    SlopeSe,
    Bias,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Spearman, Metric::SlopeSe, Metric::Bias];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Spearman => "spearman",
            Metric::SlopeSe => "slope_se",
            Metric::Bias => "bias",
        }
    }

    /// Axis label for charts.
    pub fn description(self) -> &'static str {
        match self {
            Metric::Spearman => "Spearman correlation with true score",
            Metric::SlopeSe => "SE of regression slope",
            Metric::Bias => "Bias of regression slope",
        }
    }

    pub fn value(self, s: &CellSummary) -> f64 {
        match self {
            Metric::Spearman => s.spearman.mean,
            Metric::SlopeSe => s.slope_se.mean,
            Metric::Bias => s.bias.mean,
        }
    }

    /// Whether larger values are better.
    pub fn prefers_max(self) -> bool {
        !matches!(self, Metric::SlopeSe)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spearman" => Ok(Metric::Spearman),
            "slope_se" => Ok(Metric::SlopeSe),
            "bias" => Ok(Metric::Bias),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric `{other}` (expected spearman, slope_se or bias)"
            ))),
        }
    }
}

/// Assigns each summary to a named series.
#[derive(Debug, Clone)]
pub enum SeriesLabeler {
    BySigma,
    /// Rows are matched to the profile whose sigma at that K equals the row's sigma.
    ByProfile(Vec<(String, DependencyProfile)>),
}

impl SeriesLabeler {
    pub fn from_config(config: &RunConfig) -> Self {
        match config.mode {
            Mode::Independent => SeriesLabeler::BySigma,
            Mode::Dependency => SeriesLabeler::ByProfile(config.labelled_profiles()),
        }
    }

    /// `(sort key, label)` for a summary.
    fn label(&self, s: &CellSummary) -> Result<(f64, String)> {
        let sigma = s.cell.sigma;
        match self {
            SeriesLabeler::BySigma => Ok((sigma, format!("sigma={}", format_sig(sigma)))),
            SeriesLabeler::ByProfile(profiles) => profiles
                .iter()
                .enumerate()
                .find(|(_, (_, p))| {
                    p.sigma_for(s.cell.num_categories)
                        .map(|expected| (expected - sigma).abs() <= 1e-8 * expected)
                        .unwrap_or(false)
                })
                .map(|(i, (name, _))| (i as f64, name.clone()))
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "row K={} sigma={} matches no configured profile",
                        s.cell.num_categories, sigma
                    ))
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub series: String,
    pub items: u32,
    pub n: u32,
    /// `(K, value)` ordered by K.
    pub points: Vec<(u32, f64)>,
    /// `deltas[i] = points[i + 1].1 - points[i].1`.
    pub deltas: Vec<f64>,
    pub best_k: u32,
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveReport {
    pub mode: Mode,
    pub metric: Metric,
    pub curves: Vec<Curve>,
    /// Groups dropped because they cover a single K.
    pub warnings: Vec<String>,
}

/// Index of the best value; ties resolve to the earliest (smallest K).
pub fn best_index(values: &[f64], prefer_max: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) if prefer_max => v > values[b],
            Some(b) => v < values[b],
        };
        if better {
            best = Some(i);
        }
    }
    best
}

pub fn summarize_curves(
    summaries: &[CellSummary],
    labeler: &SeriesLabeler,
    mode: Mode,
    metric: Metric,
) -> Result<CurveReport> {
    // (items, n, series key bits) -> (label, points)
    type GroupKey = (u32, u32, u64);
    type Group = (f64, String, Vec<(u32, f64)>);
    let mut groups: BTreeMap<GroupKey, Group> = BTreeMap::new();
    for s in summaries {
        let (order, label) = labeler.label(s)?;
        let key = (s.cell.num_items, s.cell.sample_size, order_bits(order));
        groups
            .entry(key)
            .or_insert_with(|| (order, label, Vec::new()))
            .2
            .push((s.cell.num_categories, metric.value(s)));
    }

    let mut curves = Vec::new();
    let mut warnings = Vec::new();
    for ((items, n, _), (_, series, mut points)) in groups {
        points.sort_by_key(|p| p.0);
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateCell(format!(
                "series {series}, items={items}, n={n} has repeated K"
            )));
        }
        if points.len() < 2 {
            warnings.push(format!(
                "excluded series {series} (items={items}, n={n}): only one K value"
            ));
            continue;
        }
        let values: Vec<f64> = points.iter().map(|p| p.1).collect();
        let deltas = delta_series(&values)?;
        let best = best_index(&values, metric.prefers_max()).expect("non-empty");
        curves.push(Curve {
            series,
            items,
            n,
            best_k: points[best].0,
            best_value: points[best].1,
            points,
            deltas,
        });
    }
    Ok(CurveReport {
        mode,
        metric,
        curves,
        warnings,
    })
}

/// Order-preserving bit pattern for non-negative sort keys.
fn order_bits(x: f64) -> u64 {
    x.to_bits()
}

pub fn curves_file(metric: Metric) -> String {
    format!("curves_{metric}.csv")
}

pub fn deltas_file(metric: Metric) -> String {
    format!("deltas_{metric}.csv")
}

pub fn optimum_file(metric: Metric) -> String {
    format!("optimum_{metric}.csv")
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Write the curve, delta and optimum tables for one metric.
pub fn write_report(report: &CurveReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mode = report.mode.as_str();
    let metric = report.metric;

    let curves_path = dir.join(curves_file(metric));
    let mut lines = vec!["mode,series,items,n,k,value".to_string()];
    for c in &report.curves {
        for &(k, v) in &c.points {
            lines.push(format!(
                "{mode},{},{},{},{k},{}",
                csv_field(&c.series),
                c.items,
                c.n,
                format_sig(v)
            ));
        }
    }
    write_lines(&curves_path, lines)?;

    let deltas_path = dir.join(deltas_file(metric));
    let mut lines = vec!["mode,series,items,n,k_from,k_to,delta".to_string()];
    for c in &report.curves {
        for (w, d) in c.points.windows(2).zip(&c.deltas) {
            lines.push(format!(
                "{mode},{},{},{},{},{},{}",
                csv_field(&c.series),
                c.items,
                c.n,
                w[0].0,
                w[1].0,
                format_sig(*d)
            ));
        }
    }
    write_lines(&deltas_path, lines)?;

    let optimum_path = dir.join(optimum_file(metric));
    let criterion = if metric.prefers_max() { "max" } else { "min" };
    let mut lines = vec!["mode,series,items,n,criterion,best_k,best_value".to_string()];
    for c in &report.curves {
        lines.push(format!(
            "{mode},{},{},{},{criterion},{},{}",
            csv_field(&c.series),
            c.items,
            c.n,
            c.best_k,
            format_sig(c.best_value)
        ));
    }
    write_lines(&optimum_path, lines)?;

    Ok(vec![curves_path, deltas_path, optimum_path])
}

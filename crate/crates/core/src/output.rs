//! Tabular results files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::engine::{CellSummary, ConditionCell, Moments, ReplicationResult};
use crate::error::{Error, Result};

pub const SUMMARY_FILE: &str = "cell_summaries.csv";
pub const REPLICATIONS_FILE: &str = "replications.csv";

pub const SUMMARY_HEADER: &str = "k,sigma,items,n,replications,mean_spearman,sd_spearman,mean_slope,sd_slope,mean_slope_se,sd_slope_se,mean_bias,sd_bias,discards";
pub const REPLICATIONS_HEADER: &str = "k,sigma,items,n,rep,spearman,slope,slope_se,bias,discarded";

/// Plain decimal with 9 significant digits and trailing zeros removed.
///
/// Very large or small magnitudes fall back to exponent notation. Output
/// never depends on locale.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();

    if !(-7..=15).contains(&exp) {
        let m = trim_fraction(mantissa.to_string());
        return format!("{m}e{exp}");
    }
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp >= 0 {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    } else {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    }
    trim_fraction(out)
}

fn trim_fraction(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

/// Metrics use `format_sig`; sigma is written in shortest round-trip form so
/// the cell (and its seed) can be recovered exactly.
fn summary_row(s: &CellSummary) -> String {
    let c = &s.cell;
    [
        c.num_categories.to_string(),
        c.sigma.to_string(),
        c.num_items.to_string(),
        c.sample_size.to_string(),
        s.replications_used.to_string(),
        format_sig(s.spearman.mean),
        format_sig(s.spearman.sd),
        format_sig(s.slope.mean),
        format_sig(s.slope.sd),
        format_sig(s.slope_se.mean),
        format_sig(s.slope_se.sd),
        format_sig(s.bias.mean),
        format_sig(s.bias.sd),
        s.discards.to_string(),
    ]
    .join(",")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Write `cell_summaries.csv`, rows sorted by k, sigma, items, n.
pub fn write_summaries(summaries: &[CellSummary], output_dir: &Path) -> Result<PathBuf> {
    if summaries.is_empty() {
        return Err(Error::InvalidArgument("no summaries to write".into()));
    }
    let mut sorted: Vec<&CellSummary> = summaries.iter().collect();
    sorted.sort_by(|a, b| a.cell.output_order(&b.cell));

    let path = output_dir.join(SUMMARY_FILE);
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    writeln!(w, "{SUMMARY_HEADER}").map_err(io)?;
    for s in sorted {
        writeln!(w, "{}", summary_row(s)).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(path)
}

/// Write one row per replication, cells in output order.
pub fn write_replications(
    records: &[(CellSummary, Vec<ReplicationResult>)],
    output_dir: &Path,
) -> Result<PathBuf> {
    let mut sorted: Vec<&(CellSummary, Vec<ReplicationResult>)> = records.iter().collect();
    sorted.sort_by(|a, b| a.0.cell.output_order(&b.0.cell));

    let path = output_dir.join(REPLICATIONS_FILE);
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    writeln!(w, "{REPLICATIONS_HEADER}").map_err(io)?;
    for (summary, reps) in sorted {
        let c = &summary.cell;
        for (i, r) in reps.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                c.num_categories,
                c.sigma,
                c.num_items,
                c.sample_size,
                i,
                format_sig(r.spearman_true_obs),
                format_sig(r.slope),
                format_sig(r.slope_se),
                format_sig(r.slope_bias),
                r.discarded_regenerations
            )
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)?;
    Ok(path)
}

/// Read `cell_summaries.csv` back.
///
/// Cell seeds are not stored in the file; they are re-derived from
/// `master_seed`, which reproduces the seeds of the run that wrote it.
pub fn read_summaries(path: &Path, master_seed: u64) -> Result<Vec<CellSummary>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };

    let header = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != SUMMARY_HEADER {
        return Err(bad(format!("unexpected header `{header}`")));
    }

    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let row = line + 2;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| bad(format!("line {row}: missing column {i}")))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)?
                .parse::<u64>()
                .map_err(|_| bad(format!("line {row}: column {i} is not an integer")))
        };
        let num = |i: usize| -> Result<f64> {
            field(i)?
                .parse::<f64>()
                .map_err(|_| bad(format!("line {row}: column {i} is not a number")))
        };
        let moments = |i: usize| -> Result<Moments> {
            Ok(Moments {
                mean: num(i)?,
                sd: num(i + 1)?,
            })
        };
        let replications = int(4)? as u32;
        let cell = ConditionCell {
            num_categories: int(0)? as u32,
            sigma: num(1)?,
            num_items: int(2)? as u32,
            sample_size: int(3)? as u32,
            replications,
            cell_seed: 0,
        }
        .seeded(master_seed);
        out.push(CellSummary {
            cell,
            replications_used: replications,
            spearman: moments(5)?,
            slope: moments(7)?,
            slope_se: moments(9)?,
            bias: moments(11)?,
            discards: int(13)?,
        });
    }
    Ok(out)
}

//! Reading and writing series as CSV.
//!
//! Output files hold one value per line, preceded by `# key: value` comment
//! lines. Input files may have several comma-separated columns and an
//! optional header row; `#` lines are ignored.

use std::fs;
use std::io::Write;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FractalError, Result};
use crate::path::Path;

/// Which input column holds the series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnSelector {
    /// One-based column number.
    Index(usize),
    /// Header name.
    Name(String),
}

impl Default for ColumnSelector {
    fn default() -> Self {
        ColumnSelector::Index(1)
    }
}

impl std::str::FromStr for ColumnSelector {
    type Err = FractalError;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<usize>() {
            Ok(0) => Err(invalid("column numbers start at 1")),
            Ok(i) => Ok(ColumnSelector::Index(i)),
            Err(_) if !s.is_empty() => Ok(ColumnSelector::Name(s.to_string())),
            Err(_) => Err(invalid("empty column selector")),
        }
    }
}

/// Values and comment lines read from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub values: Vec<f64>,
    pub comments: Vec<String>,
}

fn parse_field(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses CSV text. A first data row that does not parse as numbers in the
/// selected column is treated as a header.
pub fn parse_series(text: &str, column: &ColumnSelector) -> Result<Series> {
    let mut comments = Vec::new();
    for line in text.lines() {
        if let Some(c) = line.trim_start().strip_prefix('#') {
            comments.push(c.trim().to_string());
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut col: Option<usize> = match column {
        ColumnSelector::Index(i) => Some(i - 1),
        ColumnSelector::Name(_) => None,
    };
    let mut values = Vec::new();
    let mut bad_lines = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| FractalError::Parse(e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if first {
            first = false;
            if let ColumnSelector::Name(name) = column {
                let idx = record.iter().position(|h| h == name).ok_or_else(|| {
                    invalid(format!("no column named '{name}' in the header"))
                })?;
                col = Some(idx);
                continue;
            }
            let c = col.expect("index selector");
            if c >= record.len() {
                return Err(invalid(format!(
                    "column {} requested but line {line} has {} fields",
                    c + 1,
                    record.len()
                )));
            }
            if parse_field(&record[c]).is_none() {
                continue;
            }
        }
        let c = col.expect("column resolved");
        match record.get(c).and_then(parse_field) {
            Some(v) => values.push(v),
            None => bad_lines.push(line),
        }
    }
    if !bad_lines.is_empty() {
        let shown: Vec<String> = bad_lines.iter().take(20).map(|l| l.to_string()).collect();
        let more = if bad_lines.len() > 20 { ", ..." } else { "" };
        return Err(FractalError::Parse(format!(
            "non-numeric values on lines {}{more}",
            shown.join(", ")
        )));
    }
    Ok(Series { values, comments })
}

pub fn read_series(file: &FsPath, column: &ColumnSelector) -> Result<Series> {
    parse_series(&fs::read_to_string(file)?, column)
}

/// Reads a single-column path file.
pub fn read_path(file: &FsPath) -> Result<Path> {
    Path::new(read_series(file, &ColumnSelector::Index(1))?.values)
}

/// Renders a path with its annotations (and `extra` lines) as header comments.
pub fn render_path(path: &Path, extra: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in path.annotations().iter().chain(extra) {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    for v in path.values() {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

pub fn write_path(file: &FsPath, path: &Path, extra: &[(String, String)]) -> Result<()> {
    let mut f = fs::File::create(file)?;
    f.write_all(render_path(path, extra).as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub demean: bool,
    /// Demean and scale to unit sample variance.
    pub standardize: bool,
    /// Keep every `k`-th observation, starting with the first.
    pub subsample: Option<usize>,
}

/// Applies demeaning, standardization and subsampling, in that order.
pub fn ingest(values: Vec<f64>, opts: &IngestOptions) -> Result<Path> {
    if values.len() < 2 {
        return Err(FractalError::PathTooShort {
            got: values.len(),
            need: 2,
        });
    }
    let n = values.len() as f64;
    let mut v = values;
    let mean = v.iter().sum::<f64>() / n;
    let mut notes: Vec<(String, String)> = Vec::new();
    if opts.demean || opts.standardize {
        v.iter_mut().for_each(|x| *x -= mean);
        notes.push(("demeaned_by".into(), mean.to_string()));
    }
    if opts.standardize {
        let sd = (v.iter().map(|x| x * x).sum::<f64>() / (n - 1.0)).sqrt();
        if !(sd > 0.0) {
            return Err(invalid("cannot standardize a constant series"));
        }
        v.iter_mut().for_each(|x| *x /= sd);
        notes.push(("scaled_by".into(), (1.0 / sd).to_string()));
    }
    if let Some(k) = opts.subsample {
        if k == 0 {
            return Err(invalid("subsampling stride must be positive"));
        }
        v = v.into_iter().step_by(k).collect();
        notes.push(("subsample_stride".into(), k.to_string()));
    }
    let mut path = Path::new(v)?;
    for (k, val) in notes {
        path = path.annotate(k, val);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_column_with_comments() {
        let s = parse_series("# model: fbm\n1.5\n-2\n\n3e-1\n", &ColumnSelector::default()).unwrap();
        assert_eq!(s.values, vec![1.5, -2.0, 0.3]);
        assert_eq!(s.comments, vec!["model: fbm"]);
    }

    #[test]
    fn header_and_named_column() {
        let text = "time,velocity\n0,1.0\n1,2.0\n2,4.0\n";
        let s = parse_series(text, &"velocity".parse().unwrap()).unwrap();
        assert_eq!(s.values, vec![1.0, 2.0, 4.0]);
        let s = parse_series(text, &"2".parse().unwrap()).unwrap();
        assert_eq!(s.values, vec![1.0, 2.0, 4.0]);
        assert!(parse_series(text, &"pressure".parse().unwrap()).is_err());
        assert!(parse_series(text, &ColumnSelector::Index(3)).is_err());
    }

    #[test]
    fn bad_rows_are_listed() {
        let err = parse_series("1\n2\nx\n4\nnan\n", &ColumnSelector::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("3") && msg.contains("5"), "{msg}");
    }

    #[test]
    fn round_trip_is_exact() {
        let p = Path::new(vec![0.1, -1.0 / 3.0, 1e-300, 12345.678_9])
            .unwrap()
            .annotate("seed", 7);
        let text = render_path(&p, &[]);
        let back = parse_series(&text, &ColumnSelector::default()).unwrap();
        assert_eq!(back.values, p.values());
        assert_eq!(back.comments, vec!["seed: 7"]);
    }

    #[test]
    fn standardize_then_subsample() {
        let v: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.5 + 3.0).collect();
        let opts = IngestOptions {
            standardize: true,
            ..Default::default()
        };
        let p = ingest(v.clone(), &opts).unwrap();
        let n = p.len() as f64;
        let mean = p.values().iter().sum::<f64>() / n;
        let var = p.values().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        let sub = ingest(
            v,
            &IngestOptions {
                standardize: true,
                subsample: Some(10),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(sub.len(), 100);
        assert_eq!(sub.values()[1], p.values()[10]);
        assert!(ingest(vec![1.0; 5], &opts).is_err());
    }
}

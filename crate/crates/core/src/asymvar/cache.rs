//! On-disk store for Monte Carlo covariance matrices.
//!
//! One text file per matrix:
//!
//! ```text
//! fracindex-lambda 1
//! kind star
//! alpha -0.2
//! p 2
//! m 5
//! kappa 10
//! n_inner 3200
//! replications 10000
//! master_seed 42
//! lags 1 2 3 4 5 10 20 30 40 50
//! entries
//! <one row per line>
//! std_errors
//! <one row per line>
//! end
//! ```
//!
//! Floats are written in shortest round-trip form, so a reloaded matrix is
//! bit-identical to the computed one. Files that fail to parse or whose header
//! differs from the requested key are ignored and overwritten.

use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use nalgebra::DMatrix;

use super::lambda::{LambdaMatrix, McProvenance};

const MAGIC: &str = "fracindex-lambda";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum MatrixKind {
    Plain,
    Star { kappa: usize },
}

/// Everything the Monte Carlo output depends on. `alpha_e4` is the fractal
/// index in units of `1e-4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct CacheKey {
    pub kind: MatrixKind,
    pub alpha_e4: i64,
    pub p_bits: u64,
    pub m: usize,
    pub n_inner: usize,
    pub replications: usize,
    pub master_seed: u64,
}

impl CacheKey {
    pub fn alpha(&self) -> f64 {
        self.alpha_e4 as f64 * 1e-4
    }

    pub fn p(&self) -> f64 {
        f64::from_bits(self.p_bits)
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            MatrixKind::Plain => "plain",
            MatrixKind::Star { .. } => "star",
        }
    }

    fn kappa(&self) -> usize {
        match self.kind {
            MatrixKind::Plain => 0,
            MatrixKind::Star { kappa } => kappa,
        }
    }

    fn file_name(&self) -> String {
        format!(
            "{}_a{}_p{}_m{}_k{}_n{}_b{}_s{}.txt",
            self.kind_name(),
            self.alpha_e4,
            self.p(),
            self.m,
            self.kappa(),
            self.n_inner,
            self.replications,
            self.master_seed
        )
    }

    fn header(&self) -> Vec<(&'static str, String)> {
        vec![
            ("kind", self.kind_name().to_string()),
            ("alpha", self.alpha().to_string()),
            ("p", self.p().to_string()),
            ("m", self.m.to_string()),
            ("kappa", self.kappa().to_string()),
            ("n_inner", self.n_inner.to_string()),
            ("replications", self.replications.to_string()),
            ("master_seed", self.master_seed.to_string()),
        ]
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DiskCache {
    dir: PathBuf,
}

fn write_rows(out: &mut String, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn parse_rows<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    d: usize,
) -> Option<DMatrix<f64>> {
    let mut data = Vec::with_capacity(d * d);
    for _ in 0..d {
        let row: Vec<f64> = lines
            .next()?
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .ok()?;
        if row.len() != d || row.iter().any(|v| !v.is_finite()) {
            return None;
        }
        data.extend(row);
    }
    Some(DMatrix::from_row_slice(d, d, &data))
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &FsPath {
        &self.dir
    }

    fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    pub fn load(&self, key: &CacheKey) -> Option<LambdaMatrix> {
        let text = fs::read_to_string(self.path_for(key)).ok()?;
        let parsed = Self::parse(&text, key);
        if parsed.is_none() {
            log::warn!("ignoring corrupt or stale cache file {}", key.file_name());
        }
        parsed
    }

    fn parse(text: &str, key: &CacheKey) -> Option<LambdaMatrix> {
        let mut lines = text.lines();
        let mut magic = lines.next()?.split_whitespace();
        if magic.next()? != MAGIC || magic.next()?.parse::<u32>().ok()? != VERSION {
            return None;
        }
        for (name, value) in key.header() {
            let line = lines.next()?;
            let (k, v) = line.split_once(' ')?;
            if k != name || v != value {
                return None;
            }
        }
        let lag_line = lines.next()?.strip_prefix("lags ")?;
        let lags: Vec<usize> = lag_line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .ok()?;
        let d = lags.len();
        if lines.next()? != "entries" {
            return None;
        }
        let entries = parse_rows(&mut lines, d)?;
        if lines.next()? != "std_errors" {
            return None;
        }
        let std_errors = parse_rows(&mut lines, d)?;
        if lines.next()? != "end" {
            return None;
        }
        Some(LambdaMatrix {
            lags,
            entries,
            std_errors,
            provenance: Some(McProvenance {
                alpha: key.alpha(),
                p: key.p(),
                n_inner: key.n_inner,
                replications: key.replications,
                master_seed: key.master_seed,
            }),
        })
    }

    fn render(key: &CacheKey, lambda: &LambdaMatrix) -> String {
        let mut out = format!("{MAGIC} {VERSION}\n");
        for (name, value) in key.header() {
            out.push_str(&format!("{name} {value}\n"));
        }
        let lags: Vec<String> = lambda.lags.iter().map(|l| l.to_string()).collect();
        out.push_str(&format!("lags {}\nentries\n", lags.join(" ")));
        write_rows(&mut out, &lambda.entries);
        out.push_str("std_errors\n");
        write_rows(&mut out, &lambda.std_errors);
        out.push_str("end\n");
        out
    }

    /// Writes through a temporary file and an atomic rename, so concurrent
    /// readers see either the old file or the complete new one.
    pub fn store(&self, key: &CacheKey, lambda: &LambdaMatrix) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let target = self.path_for(key);
        let tmp = self.dir.join(format!(
            ".{}.{}.tmp",
            key.file_name(),
            std::process::id()
        ));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(Self::render(key, lambda).as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)
    }
}

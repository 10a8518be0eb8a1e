//! Sequence containers and delay-embedding (Hankel) constructions.
//!
//! A finite real sequence `a(0), ..., a(T_max)` of expectation values is the
//! raw input to all estimation routines. The `N×N` Hankel pair
//! `V[k][l] = a(k+l)` and `V'[k][l] = a(k+l+1)` (0-based indices) is a finite
//! window of the delayed vectors; its rank carries the dimension information.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

/// A finite real-valued time series `a(t)`, `t = 0..=t_max`.
///
/// All values are finite; this is enforced on every construction path.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSequence {
    values: Vec<f64>,
}

impl RealSequence {
    /// Wraps raw samples, rejecting NaN and infinite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("sequence must be nonempty".into()));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sequence value at t = {bad} is not finite"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest absolute sample value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest admissible Hankel size for this sequence, `floor(len / 2)`.
    pub fn default_hankel_size(&self) -> usize {
        self.values.len() / 2
    }

    /// Parses the `t,value` CSV format: header line, then one row per time
    /// step with `t` monotone from 0 and no gaps.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        if header.trim() != "t,value" {
            return Err(Error::Parse(format!(
                "expected header `t,value`, got `{}`",
                header.trim()
            )));
        }
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (t_str, v_str) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("row {i}: expected `t,value`")))?;
            let t: usize = t_str
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {i}: bad time index `{t_str}`")))?;
            if t != values.len() {
                return Err(Error::Parse(format!(
                    "row {i}: time index {t} out of order (expected {})",
                    values.len()
                )));
            }
            let v: f64 = v_str
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {i}: bad value `{v_str}`")))?;
            values.push(v);
        }
        Self::new(values)
    }

    /// Serializes to the `t,value` CSV format with round-trip-stable floats.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.values.iter().enumerate() {
            writeln!(out, "{t},{v}").unwrap();
        }
        out
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_csv_string())?)
    }
}

/// Several observables sampled on the same time grid; row `α`, column `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSequence {
    /// Rectangular: `rows[α].len()` equals `len` for every observable.
    rows: Vec<Vec<f64>>,
}

impl MultiSequence {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidParameter(
                "multi-sequence must have at least one observable and one sample".into(),
            ));
        }
        let len = rows[0].len();
        for (alpha, row) in rows.iter().enumerate() {
            if row.len() != len {
                return Err(Error::DimensionMismatch {
                    context: "multi-sequence row length",
                    expected: len,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "observable {alpha} contains a non-finite value"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn observable_count(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn row(&self, alpha: usize) -> &[f64] {
        &self.rows[alpha]
    }

    /// Parses the `t,a1,...,am` CSV format.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 2 || cols[0] != "t" {
            return Err(Error::Parse(format!(
                "expected header `t,a1,...,am`, got `{}`",
                header.trim()
            )));
        }
        for (k, c) in cols[1..].iter().enumerate() {
            if *c != format!("a{}", k + 1) {
                return Err(Error::Parse(format!(
                    "expected column `a{}`, got `{c}`",
                    k + 1
                )));
            }
        }
        let m = cols.len() - 1;
        let mut rows: Vec<Vec<f64>> = vec![Vec::new(); m];
        let mut t_expect = 0usize;
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != m + 1 {
                return Err(Error::Parse(format!(
                    "row {i}: expected {} fields, got {}",
                    m + 1,
                    fields.len()
                )));
            }
            let t: usize = fields[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {i}: bad time index `{}`", fields[0])))?;
            if t != t_expect {
                return Err(Error::Parse(format!(
                    "row {i}: time index {t} out of order (expected {t_expect})"
                )));
            }
            t_expect += 1;
            for (k, f) in fields[1..].iter().enumerate() {
                let v: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {i}: bad value `{f}`")))?;
                rows[k].push(v);
            }
        }
        Self::new(rows)
    }

    pub fn to_csv_string(&self) -> String {
        let m = self.observable_count();
        let mut out = String::from("t");
        for k in 1..=m {
            write!(out, ",a{k}").unwrap();
        }
        out.push('\n');
        for t in 0..self.len() {
            write!(out, "{t}").unwrap();
            for row in &self.rows {
                write!(out, ",{}", row[t]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_csv_string())?)
    }
}

/// The `N×N` Hankel matrix `v[k][l] = a(k+l)` together with its one-step
/// shift `v_shift[k][l] = a(k+l+1)` (0-based indices).
#[derive(Debug, Clone, PartialEq)]
pub struct HankelPair {
    n: usize,
    v: RMatrix,
    v_shift: RMatrix,
}

impl HankelPair {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn v(&self) -> &RMatrix {
        &self.v
    }

    pub fn v_shift(&self) -> &RMatrix {
        &self.v_shift
    }
}

/// Builds the Hankel pair of size `n` from a sequence of length at least `2n`
/// (entries up to `a(2n-1)` are needed for the shifted matrix).
pub fn build_hankel(seq: &RealSequence, n: usize) -> Result<HankelPair> {
    if n == 0 {
        return Err(Error::InvalidParameter("Hankel size must be positive".into()));
    }
    if seq.len() < 2 * n {
        return Err(Error::SequenceTooShort {
            needed: 2 * n,
            got: seq.len(),
        });
    }
    let a = seq.values();
    let v = RMatrix::from_fn(n, n, |k, l| a[k + l]);
    let v_shift = RMatrix::from_fn(n, n, |k, l| a[k + l + 1]);
    Ok(HankelPair { n, v, v_shift })
}

/// Stacks the per-observable Hankel windows row-block by observable: block
/// row `(α, k)` and column `l` holds `a_α(k+l)`. The result has shape
/// `(m·n) × n`; its rank counts the linearly independent delayed matrices.
///
/// For a single observable this reduces exactly to [`build_hankel`]'s `v`.
pub fn build_block_hankel(mseq: &MultiSequence, n: usize) -> Result<RMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("Hankel size must be positive".into()));
    }
    if mseq.len() < 2 * n {
        return Err(Error::SequenceTooShort {
            needed: 2 * n,
            got: mseq.len(),
        });
    }
    let m = mseq.observable_count();
    Ok(RMatrix::from_fn(m * n, n, |row, l| {
        let (alpha, k) = (row / n, row % n);
        mseq.row(alpha)[k + l]
    }))
}

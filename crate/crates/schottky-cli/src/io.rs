//! Matrix and family file formats.
//!
//! Matrices are JSON objects `{"schema": "schottky-matrix/1", "kind":
//! "rational" | "complex", "entries": [[...]]}`. Rational entries are
//! strings `"p/q"` (or `"p"`), complex entries are `[re, im]` pairs.
//! Families are affine pencils `base + s * s_term + t * t_term` with
//! inclusive grid ranges.

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use schottky::exact::{rational_from_str, rational_to_string, QuadForm, Rational};
use schottky::theta_classical::RiemannMatrix;
use serde::Deserialize;
use std::path::Path;

pub const MATRIX_SCHEMA: &str = "schottky-matrix/1";
pub const FAMILY_SCHEMA: &str = "schottky-family/1";

#[derive(Deserialize)]
struct MatrixFile {
    schema: Option<String>,
    kind: String,
    entries: serde_json::Value,
}

pub enum ParsedMatrix {
    Rational(QuadForm),
    Complex(RiemannMatrix),
}

pub fn read_matrix_file(path: &Path) -> Result<ParsedMatrix> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let file: MatrixFile =
        serde_json::from_str(&text).with_context(|| format!("malformed JSON in {}", path.display()))?;
    if let Some(schema) = &file.schema {
        if schema != MATRIX_SCHEMA {
            bail!("unsupported schema {schema:?}, expected {MATRIX_SCHEMA:?}");
        }
    }
    match file.kind.as_str() {
        "rational" => Ok(ParsedMatrix::Rational(parse_rational_matrix(&file.entries)?)),
        "complex" => Ok(ParsedMatrix::Complex(parse_complex_matrix(&file.entries)?)),
        other => bail!("unknown matrix kind {other:?} (expected \"rational\" or \"complex\")"),
    }
}

fn parse_rational_rows(entries: &serde_json::Value) -> Result<Vec<Vec<Rational>>> {
    let rows = entries.as_array().ok_or_else(|| anyhow!("entries must be an array of rows"))?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let cells = row.as_array().ok_or_else(|| anyhow!("row {i} is not an array"))?;
        let mut r = Vec::with_capacity(cells.len());
        for (j, c) in cells.iter().enumerate() {
            let s = c
                .as_str()
                .map(str::to_string)
                .or_else(|| c.as_i64().map(|v| v.to_string()))
                .ok_or_else(|| anyhow!("entry ({i},{j}) must be a rational string"))?;
            r.push(
                rational_from_str(&s)
                    .map_err(|e| anyhow!("entry ({i},{j}): {e}"))?,
            );
        }
        out.push(r);
    }
    Ok(out)
}

pub fn parse_rational_matrix(entries: &serde_json::Value) -> Result<QuadForm> {
    let rows = parse_rational_rows(entries)?;
    QuadForm::new(rows).map_err(|e| anyhow!("not a valid tropical Riemann matrix: {e}"))
}

pub fn parse_complex_matrix(entries: &serde_json::Value) -> Result<RiemannMatrix> {
    let rows = entries.as_array().ok_or_else(|| anyhow!("entries must be an array of rows"))?;
    if rows.len() != 4 {
        bail!("expected a 4x4 matrix, got {} rows", rows.len());
    }
    let mut data = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (i, row) in rows.iter().enumerate() {
        let cells = row.as_array().ok_or_else(|| anyhow!("row {i} is not an array"))?;
        if cells.len() != 4 {
            bail!("row {i} has {} entries, expected 4", cells.len());
        }
        for (j, c) in cells.iter().enumerate() {
            let pair = c.as_array().ok_or_else(|| anyhow!("entry ({i},{j}) must be [re, im]"))?;
            if pair.len() != 2 {
                bail!("entry ({i},{j}) must be [re, im]");
            }
            let re = pair[0].as_f64().ok_or_else(|| anyhow!("entry ({i},{j}): bad real part"))?;
            let im = pair[1].as_f64().ok_or_else(|| anyhow!("entry ({i},{j}): bad imaginary part"))?;
            data[i][j] = Complex64::new(re, im);
        }
    }
    RiemannMatrix::new(data).map_err(|e| anyhow!("not a valid Riemann matrix: {e}"))
}

/// A range `lo..=hi` sampled at `steps` equally spaced points.
#[derive(Deserialize, Clone, Debug)]
pub struct GridRange {
    pub lo: String,
    pub hi: String,
    pub steps: usize,
}

impl GridRange {
    pub fn rational_points(&self) -> Result<Vec<Rational>> {
        let lo = rational_from_str(&self.lo).map_err(|e| anyhow!("range lo: {e}"))?;
        let hi = rational_from_str(&self.hi).map_err(|e| anyhow!("range hi: {e}"))?;
        if self.steps == 0 {
            bail!("steps must be positive");
        }
        if self.steps == 1 {
            return Ok(vec![lo]);
        }
        let steps = Rational::from_integer((self.steps as i64 - 1).into());
        let width = &hi - &lo;
        Ok((0..self.steps)
            .map(|k| &lo + &width * Rational::from_integer((k as i64).into()) / &steps)
            .collect())
    }
}

#[derive(Deserialize)]
pub struct FamilyFile {
    pub schema: Option<String>,
    pub kind: String,
    pub base: serde_json::Value,
    pub s_term: serde_json::Value,
    #[serde(default)]
    pub t_term: Option<serde_json::Value>,
    pub s_range: GridRange,
    #[serde(default)]
    pub t_range: Option<GridRange>,
}

pub enum ParsedFamily {
    /// exact rational pencil
    Rational {
        base: Vec<Vec<Rational>>,
        s_term: Vec<Vec<Rational>>,
        t_term: Option<Vec<Vec<Rational>>>,
        s_points: Vec<Rational>,
        t_points: Vec<Rational>,
    },
    /// complex base with real symmetric pencil terms
    Complex {
        base: [[Complex64; 4]; 4],
        s_term: [[f64; 4]; 4],
        t_term: Option<[[f64; 4]; 4]>,
        s_points: Vec<f64>,
        t_points: Vec<f64>,
    },
}

pub fn read_family_file(path: &Path) -> Result<ParsedFamily> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let file: FamilyFile =
        serde_json::from_str(&text).with_context(|| format!("malformed JSON in {}", path.display()))?;
    if let Some(schema) = &file.schema {
        if schema != FAMILY_SCHEMA {
            bail!("unsupported schema {schema:?}, expected {FAMILY_SCHEMA:?}");
        }
    }
    match file.kind.as_str() {
        "rational" => {
            let base = parse_rational_rows(&file.base)?;
            let s_term = parse_rational_rows(&file.s_term)?;
            let t_term = file.t_term.as_ref().map(parse_rational_rows).transpose()?;
            let s_points = file.s_range.rational_points()?;
            let t_points = match (&file.t_range, &t_term) {
                (Some(r), Some(_)) => r.rational_points()?,
                (None, None) => vec![Rational::from_integer(0.into())],
                _ => bail!("t_term and t_range must be given together"),
            };
            Ok(ParsedFamily::Rational { base, s_term, t_term, s_points, t_points })
        }
        "complex" => {
            let base_rm = parse_complex_matrix(&file.base)?;
            let base: [[Complex64; 4]; 4] =
                std::array::from_fn(|i| std::array::from_fn(|j| base_rm.entries()[(i, j)]));
            let parse_real = |v: &serde_json::Value| -> Result<[[f64; 4]; 4]> {
                let rows = parse_rational_rows(v)?;
                if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
                    bail!("pencil terms must be 4x4");
                }
                use num_traits::ToPrimitive;
                Ok(std::array::from_fn(|i| {
                    std::array::from_fn(|j| rows[i][j].to_f64().unwrap_or(f64::NAN))
                }))
            };
            let s_term = parse_real(&file.s_term)?;
            let t_term = file.t_term.as_ref().map(|v| parse_real(v)).transpose()?;
            use num_traits::ToPrimitive;
            let to_f = |pts: Vec<Rational>| -> Vec<f64> {
                pts.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
            };
            let s_points = to_f(file.s_range.rational_points()?);
            let t_points = match (&file.t_range, &t_term) {
                (Some(r), Some(_)) => to_f(r.rational_points()?),
                (None, None) => vec![0.0],
                _ => bail!("t_term and t_range must be given together"),
            };
            Ok(ParsedFamily::Complex { base, s_term, t_term, s_points, t_points })
        }
        other => bail!("unknown family kind {other:?}"),
    }
}

pub fn quadform_to_json(q: &QuadForm) -> serde_json::Value {
    serde_json::json!({
        "schema": MATRIX_SCHEMA,
        "kind": "rational",
        "entries": q.entries().iter()
            .map(|row| row.iter().map(rational_to_string).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

pub fn complex_to_json(c: &Complex64) -> serde_json::Value {
    serde_json::json!([c.re, c.im])
}

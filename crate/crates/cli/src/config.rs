//! JSON configuration files: parsing into a [`HamiltonianSpec`] and the
//! normalized echo.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shs_core::coefficients::{CoefficientField, HamiltonianSpec, Piece, PiecewisePoly};
use shs_core::linalg::Mat;

use crate::error::CliError;

const UPPER_BLOCKS: [(usize, usize); 9] = [(1, 1), (1, 2), (1, 3), (1, 4), (2, 2), (2, 3), (2, 4), (3, 3), (4, 4)];

/// A matrix written as a scalar (`n = 1`), a row-major flat list or a list of rows.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum MatrixValue {
    Scalar(f64),
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl MatrixValue {
    fn to_mat(&self, rows: usize, cols: usize, field: &str) -> Result<Mat, CliError> {
        let flat: Vec<f64> = match self {
            MatrixValue::Scalar(x) => vec![*x],
            MatrixValue::Flat(v) => v.clone(),
            MatrixValue::Rows(r) => {
                if r.iter().any(|row| row.len() != cols) {
                    return Err(CliError::config(field, format!("every row needs {cols} entries")));
                }
                r.concat()
            }
        };
        if flat.len() != rows * cols {
            return Err(CliError::config(
                field,
                format!("expected {rows}x{cols} = {} entries, got {}", rows * cols, flat.len()),
            ));
        }
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(CliError::config(field, "entries must be finite"));
        }
        Ok(Mat::from_row_slice(rows, cols, &flat))
    }

    fn from_mat(m: &Mat) -> MatrixValue {
        if m.shape() == (1, 1) {
            MatrixValue::Scalar(m[(0, 0)])
        } else {
            MatrixValue::Rows(m.row_iter().map(|r| r.iter().copied().collect()).collect())
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PieceEntry {
    pub t0: f64,
    pub t1: f64,
    /// Coefficients of `(t - t0)^k`, lowest degree first.
    pub coeffs: Vec<MatrixValue>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub k: usize,
    pub l: usize,
    pub pieces: Vec<PieceEntry>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub beta: f64,
    pub delta: f64,
    pub delta1: f64,
    /// Generator, row-major.
    #[serde(rename = "Q")]
    pub q: MatrixValue,
    pub blocks: Vec<BlockEntry>,
    #[serde(default)]
    pub hbar_blocks: Vec<BlockEntry>,
    /// Initial chain state, 1-based.
    #[serde(default = "default_initial_state")]
    pub initial_state: usize,
}

fn default_initial_state() -> usize {
    1
}

/// A parsed configuration together with its source bytes.
pub struct LoadedConfig {
    pub spec: HamiltonianSpec,
    pub normalized: ConfigFile,
    pub bytes: Vec<u8>,
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::config(path.display().to_string(), format!("cannot read: {e}")))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::config(path.display().to_string(), e.to_string()))?;
    let (spec, normalized) = parse(text)?;
    Ok(LoadedConfig { spec, normalized, bytes })
}

/// Parses config text; syntax errors carry line and column.
pub fn parse(text: &str) -> Result<(HamiltonianSpec, ConfigFile), CliError> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| {
        CliError::config(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let spec = build_spec(&file)?;
    let normalized = normalize(&spec);
    Ok((spec, normalized))
}

fn field_from(entries: &[BlockEntry], n: usize, horizon: f64, name: &str) -> Result<CoefficientField, CliError> {
    let mut f = CoefficientField::new(n, horizon).map_err(CliError::from_core)?;
    for (i, b) in entries.iter().enumerate() {
        let at = format!("{name}[{i}]");
        if b.pieces.is_empty() {
            return Err(CliError::config(at, "a block needs at least one piece"));
        }
        let mut pieces = Vec::with_capacity(b.pieces.len());
        for (j, p) in b.pieces.iter().enumerate() {
            let at = format!("{at}.pieces[{j}]");
            if p.coeffs.is_empty() {
                return Err(CliError::config(at, "coeffs must not be empty"));
            }
            let coeffs = p
                .coeffs
                .iter()
                .enumerate()
                .map(|(c, m)| m.to_mat(n, n, &format!("{at}.coeffs[{c}]")))
                .collect::<Result<Vec<_>, _>>()?;
            pieces.push(Piece {
                t0: p.t0,
                t1: p.t1,
                coeffs,
            });
        }
        let poly = PiecewisePoly::new(pieces).map_err(|e| CliError::config(at.clone(), e.to_string()))?;
        f.set_block(b.k, b.l, poly)
            .map_err(|e| CliError::config(at, e.to_string()))?;
    }
    Ok(f)
}

fn build_spec(file: &ConfigFile) -> Result<HamiltonianSpec, CliError> {
    let n = file.n;
    let h = field_from(&file.blocks, n, file.horizon, "blocks")?;
    let hbar = field_from(&file.hbar_blocks, n, file.horizon, "hbar_blocks")?;
    let m = match &file.q {
        MatrixValue::Scalar(_) => 1,
        MatrixValue::Flat(v) => (v.len() as f64).sqrt().round() as usize,
        MatrixValue::Rows(r) => r.len(),
    };
    let q = file.q.to_mat(m, m, "Q")?;
    if (0..m).any(|i| (0..m).any(|j| i != j && q[(i, j)] <= 0.0)) {
        log::warn!("Q has zero off-diagonal rates; the chain has absorbing or unreachable states");
    }
    if file.initial_state == 0 || file.initial_state > m {
        return Err(CliError::config("initial_state", format!("must lie in 1..={m}")));
    }
    HamiltonianSpec::new(h, hbar, q, file.beta, file.delta, file.delta1)
        .and_then(|s| s.with_initial_state(file.initial_state - 1))
        .map_err(CliError::from_core)
}

fn entries(field: &CoefficientField) -> Vec<BlockEntry> {
    UPPER_BLOCKS
        .iter()
        .filter_map(|&(k, l)| {
            field.block(k, l).map(|poly| BlockEntry {
                k,
                l,
                pieces: poly
                    .pieces()
                    .iter()
                    .map(|p| PieceEntry {
                        t0: p.t0,
                        t1: p.t1,
                        coeffs: p.coeffs.iter().map(MatrixValue::from_mat).collect(),
                    })
                    .collect(),
            })
        })
        .collect()
}

/// Canonical form: upper blocks only, in block order, matrices as rows.
pub fn normalize(spec: &HamiltonianSpec) -> ConfigFile {
    ConfigFile {
        n: spec.n(),
        horizon: spec.horizon(),
        beta: spec.beta,
        delta: spec.delta,
        delta1: spec.delta1,
        q: MatrixValue::Rows(spec.q.row_iter().map(|r| r.iter().copied().collect()).collect()),
        blocks: entries(&spec.h),
        hbar_blocks: entries(&spec.hbar),
        initial_state: spec.initial_state + 1,
    }
}

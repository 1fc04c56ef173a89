//! Influence matrices: validation, random generation and file I/O.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows whose sum is within this distance of 1 are accepted without rescaling.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Row-stochastic, non-negative weight matrix. Entry `(i, j)` is the weight
/// node `i` assigns to the opinion of node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    n: usize,
    weights: Vec<f64>,
}

impl InfluenceMatrix {
    /// Same as [`validate_and_normalize`].
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        validate_and_normalize(rows)
    }

    pub fn identity(n: usize) -> Self {
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            weights[i * n + i] = 1.0;
        }
        Self { n, weights }
    }

    /// Every node spreads its weight evenly over all nodes, itself included.
    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            weights: vec![1.0 / n as f64; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.chunks_exact(self.n)
    }

    /// Out-neighbors of `i`: every `j` with `w_ij > 0`, in increasing order.
    pub fn out_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(j, _)| j)
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_neighbors(i).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

/// Checks that `raw` is a square non-negative matrix without zero rows and
/// rescales every row to sum to one. Rows that already sum to one within
/// [`ROW_SUM_TOL`] are kept bit-for-bit, so exact ties such as `0.5 + 0.5`
/// survive loading.
pub fn validate_and_normalize(raw: &[Vec<f64>]) -> Result<InfluenceMatrix> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut weights = Vec::with_capacity(n * n);
    for (i, row) in raw.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NonSquare {
                row: i,
                len: row.len(),
                expected: n,
            });
        }
        for (j, &w) in row.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
            if w < 0.0 {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: w,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if sum <= 0.0 {
            return Err(Error::ZeroRow(i));
        }
        if (sum - 1.0).abs() <= ROW_SUM_TOL {
            weights.extend_from_slice(row);
        } else {
            weights.extend(row.iter().map(|w| w / sum));
        }
    }
    Ok(InfluenceMatrix { n, weights })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphModel {
    ErdosRenyi,
    WattsStrogatz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphGenConfig {
    pub model: GraphModel,
    pub n: usize,
    /// Link probability (Erdős–Rényi) or rewiring probability (Watts–Strogatz).
    pub p: f64,
    /// Ring-lattice out-degree before rewiring; ignored for Erdős–Rényi.
    pub mean_out_degree: usize,
    pub seed: u64,
}

impl GraphGenConfig {
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Self {
        Self {
            model: GraphModel::ErdosRenyi,
            n,
            p,
            mean_out_degree: 0,
            seed,
        }
    }

    pub fn watts_strogatz(n: usize, mean_out_degree: usize, p: f64, seed: u64) -> Self {
        Self {
            model: GraphModel::WattsStrogatz,
            n,
            p,
            mean_out_degree,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::ConfigInvalid("n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::ConfigInvalid(format!("probability {} outside [0, 1]", self.p)));
        }
        if self.model == GraphModel::WattsStrogatz {
            let k = self.mean_out_degree;
            if k == 0 || !k.is_multiple_of(2) {
                return Err(Error::ConfigInvalid(format!(
                    "mean_out_degree must be a positive even integer, got {k}"
                )));
            }
            if k >= self.n {
                return Err(Error::ConfigInvalid(format!(
                    "mean_out_degree {k} must be smaller than n = {}",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// Generates a directed random network, assigns every edge an independent
/// weight uniform on `(0, 1]` and row-normalizes. Nodes left without
/// out-edges get a self-loop of weight one. The output is a pure function of
/// `cfg`.
pub fn gen_network(cfg: &GraphGenConfig) -> Result<InfluenceMatrix> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let adjacency = match cfg.model {
        GraphModel::ErdosRenyi => erdos_renyi_edges(cfg.n, cfg.p, &mut rng),
        GraphModel::WattsStrogatz => watts_strogatz_edges(cfg.n, cfg.mean_out_degree, cfg.p, &mut rng),
    };

    let n = cfg.n;
    let mut rows = vec![vec![0.0; n]; n];
    for (i, targets) in adjacency.iter().enumerate() {
        for &j in targets {
            // (0, 1]: never a zero weight on a declared edge
            rows[i][j] = 1.0 - rng.random::<f64>();
        }
        if targets.is_empty() {
            rows[i][i] = 1.0;
        }
    }
    validate_and_normalize(&rows)
}

fn erdos_renyi_edges(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| (0..n).filter(|&j| j != i && rng.random_bool(p)).collect())
        .collect()
}

fn watts_strogatz_edges(n: usize, k: usize, beta: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let half = k / 2;
    let mut targets: Vec<Vec<usize>> = (0..n)
        .map(|i| (1..=half).flat_map(|d| [(i + d) % n, (i + n - d) % n]).collect())
        .collect();

    for (i, row) in targets.iter_mut().enumerate() {
        for slot in 0..row.len() {
            if !rng.random_bool(beta) {
                continue;
            }
            let free: Vec<usize> = (0..n).filter(|&v| v != i && !row.contains(&v)).collect();
            if free.is_empty() {
                continue;
            }
            row[slot] = free[rng.random_range(0..free.len())];
        }
        row.sort_unstable();
    }
    targets
}

/// On-disk JSON wrapper around a dense matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub meta: serde_json::Map<String, serde_json::Value>,
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Loads a matrix from CSV (one row per line, no header) or, for `.json`
/// paths, from the JSON wrapper. The result is validated and normalized.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<InfluenceMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    if is_json(path) {
        let file: MatrixFile = serde_json::from_str(&text)?;
        if file.weights.len() != file.n {
            return Err(Error::ConfigInvalid(format!(
                "declared n = {} but found {} rows",
                file.n,
                file.weights.len()
            )));
        }
        validate_and_normalize(&file.weights)
    } else {
        validate_and_normalize(&parse_csv_matrix(&text)?)
    }
}

/// Parses the dense CSV matrix format. Lines are 1-based, columns 1-based.
pub fn parse_csv_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, field)| {
                field.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    column: col + 1,
                    message: format!("{e}: {:?}", field.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    column: row.len().min(first.len()) + 1,
                    message: format!("row has {} fields, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Writes `m` as CSV, or as the JSON wrapper for `.json` paths. Values are
/// written in shortest round-trip form, so loading restores `m` exactly.
pub fn save_matrix(m: &InfluenceMatrix, path: impl AsRef<Path>) -> Result<()> {
    save_matrix_with_meta(m, path, serde_json::Map::new())
}

pub fn save_matrix_with_meta(
    m: &InfluenceMatrix,
    path: impl AsRef<Path>,
    meta: serde_json::Map<String, serde_json::Value>,
) -> Result<()> {
    let path = path.as_ref();
    if is_json(path) {
        let file = MatrixFile {
            n: m.n(),
            weights: m.to_rows(),
            meta,
        };
        fs::write(path, serde_json::to_string_pretty(&file)?)?;
    } else {
        fs::write(path, matrix_to_csv(m))?;
    }
    Ok(())
}

pub fn matrix_to_csv(m: &InfluenceMatrix) -> String {
    let mut out = String::new();
    for row in m.rows() {
        for (j, w) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{w:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

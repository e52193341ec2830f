//! Weight matrices for common coupling graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    Complete { weight: f64 },
    Ring { weight: f64 },
    Path { weight: f64 },
    /// Nearest-neighbour lattice, `rows * cols` nodes numbered row-major.
    Grid { rows: usize, cols: usize, weight: f64 },
    /// Every pair `i < j` draws an i.i.d. uniform weight from `[low, high]`.
    Random { low: f64, high: f64 },
}

impl Topology {
    pub fn kind(&self) -> &'static str {
        match self {
            Topology::Complete { .. } => "complete",
            Topology::Ring { .. } => "ring",
            Topology::Path { .. } => "path",
            Topology::Grid { .. } => "grid",
            Topology::Random { .. } => "random",
        }
    }
}

/// Builds the symmetric weight matrix for `n` nodes. `seed` only matters for
/// [`Topology::Random`].
pub fn generate_topology(topology: &Topology, n: usize, seed: u64) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::validation("network size N must be at least 1"));
    }
    let mut w = Matrix::zeros(n);
    let link = |w: &mut Matrix, i: usize, j: usize, v: f64| {
        if i != j {
            w.set(i, j, v);
            w.set(j, i, v);
        }
    };
    let check_weight = |v: f64| {
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(Error::validation(format!("topology weight {v} must be finite and nonnegative")))
        }
    };

    match *topology {
        Topology::Complete { weight } => {
            let v = check_weight(weight)?;
            for i in 0..n {
                for j in (i + 1)..n {
                    link(&mut w, i, j, v);
                }
            }
        }
        Topology::Ring { weight } => {
            let v = check_weight(weight)?;
            if n > 1 {
                for i in 0..n {
                    link(&mut w, i, (i + 1) % n, v);
                }
            }
        }
        Topology::Path { weight } => {
            let v = check_weight(weight)?;
            for i in 1..n {
                link(&mut w, i - 1, i, v);
            }
        }
        Topology::Grid { rows, cols, weight } => {
            let v = check_weight(weight)?;
            if rows * cols != n {
                return Err(Error::validation(format!("grid {rows}x{cols} does not have N = {n} nodes")));
            }
            for r in 0..rows {
                for c in 0..cols {
                    let i = r * cols + c;
                    if c + 1 < cols {
                        link(&mut w, i, i + 1, v);
                    }
                    if r + 1 < rows {
                        link(&mut w, i, i + cols, v);
                    }
                }
            }
        }
        Topology::Random { low, high } => {
            if !(low.is_finite() && high.is_finite() && 0.0 <= low && low <= high) {
                return Err(Error::validation(format!("random weight range [{low}, {high}] is invalid")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = if high > low { rng.random_range(low..=high) } else { low };
                    link(&mut w, i, j, v);
                }
            }
        }
    }
    Ok(w)
}

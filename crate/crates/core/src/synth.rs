//! Synthetic VAR data generation for oracle tests and demo runs.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robust::companion_eigen_max;
use crate::series::Month;

/// A fully specified data-generating process. The generator never emits an
/// explosive truth: random draws are rescaled until the companion matrix is
/// stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticDgp {
    pub m: usize,
    pub p: usize,
    pub t: usize,
    pub seed: u64,
    /// True `m x mp` coefficient matrix.
    pub a: Vec<Vec<f64>>,
    /// Lower-triangular factor of the true innovation covariance.
    pub b0: Vec<Vec<f64>>,
}

impl SyntheticDgp {
    /// Random sparse DGP: each coefficient is nonzero with probability
    /// `density`; the coefficient matrix is shrunk until stable.
    pub fn random(m: usize, p: usize, t: usize, density: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::Input("density must lie in [0, 1]".into()));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut a = DMatrix::from_fn(m, m * p, |_, _| {
            if rng.gen::<f64>() < density {
                0.4 * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            }
        });
        for _ in 0..200 {
            if companion_eigen_max(&a, m, p) < 0.98 {
                break;
            }
            a *= 0.9;
        }
        if companion_eigen_max(&a, m, p) >= 1.0 {
            return Err(Error::Input("could not stabilize random DGP".into()));
        }
        // mild lower-triangular contemporaneous correlation
        let mut b0 = DMatrix::identity(m, m);
        for i in 0..m {
            b0[(i, i)] = 0.5 + rng.gen::<f64>();
            for j in 0..i {
                b0[(i, j)] = 0.3 * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Self::from_matrices(&a, &b0, t, seed)
    }

    /// DGP with explicit coefficients; rejects explosive input.
    pub fn from_matrices(a: &DMatrix<f64>, b0: &DMatrix<f64>, t: usize, seed: u64) -> Result<Self> {
        let m = a.nrows();
        if a.ncols() % m != 0 || a.ncols() == 0 {
            return Err(Error::Input("coefficient matrix must be m x mp".into()));
        }
        let p = a.ncols() / m;
        if companion_eigen_max(a, m, p) >= 1.0 {
            return Err(Error::Input("DGP coefficients are explosive".into()));
        }
        if b0.shape() != (m, m) {
            return Err(Error::Input("innovation factor must be m x m".into()));
        }
        Ok(SyntheticDgp {
            m,
            p,
            t,
            seed,
            a: matrix_rows(a),
            b0: matrix_rows(b0),
        })
    }

    pub fn a_matrix(&self) -> DMatrix<f64> {
        rows_matrix(&self.a)
    }

    pub fn b0_matrix(&self) -> DMatrix<f64> {
        rows_matrix(&self.b0)
    }

    pub fn sigma(&self) -> DMatrix<f64> {
        let b0 = self.b0_matrix();
        &b0 * b0.transpose()
    }

    /// Simulates a `t x m` path after a 200-step warm-up. Deterministic in
    /// the seed.
    pub fn simulate(&self) -> DMatrix<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed.wrapping_add(0x5151_5151));
        let a = self.a_matrix();
        let b0 = self.b0_matrix();
        let warmup = 200;
        let total = warmup + self.t;
        let mut path = DMatrix::zeros(total, self.m);
        for row in self.p..total {
            let z = nalgebra::DVector::from_fn(self.m, |_, _| rng.sample(StandardNormal));
            let mut y = &b0 * z;
            for lag in 1..=self.p {
                let a_l = a.view((0, (lag - 1) * self.m), (self.m, self.m));
                y += a_l * path.row(row - lag).transpose();
            }
            path.row_mut(row).copy_from(&y.transpose());
        }
        path.rows(warmup, self.t).into_owned()
    }

    /// Writes the simulated panel as ingest-schema CSV plus a `truth.json`
    /// sidecar holding the generating coefficients.
    pub fn write_csv(&self, dir: &Path, start: Month) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let data = self.simulate();
        let csv_path = dir.join("synthetic.csv");
        let mut f = std::fs::File::create(&csv_path)?;
        writeln!(f, "date,series_id,value")?;
        for c in 0..self.m {
            let id = Self::series_id(c);
            for r in 0..self.t {
                writeln!(f, "{},{},{}", start.offset(r as i32), id, data[(r, c)])?;
            }
        }
        let truth_path = dir.join("truth.json");
        let truth = serde_json::json!({
            "m": self.m,
            "p": self.p,
            "t": self.t,
            "seed": self.seed,
            "a": self.a,
            "b0": self.b0,
            "sigma": matrix_rows(&self.sigma()),
        });
        std::fs::write(&truth_path, serde_json::to_string_pretty(&truth)?)?;
        Ok((csv_path, truth_path))
    }

    pub fn series_id(index: usize) -> String {
        format!("var_{:02}", index + 1)
    }

    pub fn ordering(&self) -> Vec<String> {
        (0..self.m).map(Self::series_id).collect()
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

fn rows_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c])
}

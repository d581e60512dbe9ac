//! Data matrix, penalty and mixture-parameter types.

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp for every component variance.
pub const SCALE_FLOOR: f64 = 1e-6;
/// Smallest admissible degrees of freedom.
pub const DOF_MIN: f64 = 0.5;
/// Largest admissible degrees of freedom; also the value used in Gaussian mode.
pub const DOF_MAX: f64 = 200.0;
/// Distance from the shrinkage targets (0 for means, 1 for variances) beyond
/// which a parameter marks its variable as informative.
pub const MASK_TOL: f64 = 1e-8;

/// Standardized `n × p` observations (rows are samples) with column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
    column_names: Vec<String>,
    constant_columns: Vec<bool>,
}

impl DataMatrix {
    /// Wraps values as-is after validation; no standardization is applied.
    pub fn new(values: Array2<f64>, column_names: Vec<String>) -> Result<Self> {
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().into_owned()
        };
        let (n, p) = values.dim();
        if n < 2 || p < 1 {
            return Err(Error::Validation(format!(
                "data matrix needs at least 2 rows and 1 column, got {n}x{p}"
            )));
        }
        if column_names.len() != p {
            return Err(Error::Validation(format!(
                "{} column names for {p} columns",
                column_names.len()
            )));
        }
        let bad: Vec<String> = values
            .indexed_iter()
            .filter(|(_, v)| !v.is_finite())
            .take(10)
            .map(|((r, c), v)| format!("({r}, {c})={v}"))
            .collect();
        if !bad.is_empty() {
            return Err(Error::Validation(format!("non-finite entries at {}", bad.join(", "))));
        }
        let constant_columns = values
            .axis_iter(Axis(1))
            .map(|col| col.iter().all(|&v| v == col[0]))
            .collect();
        Ok(Self {
            values,
            column_names,
            constant_columns,
        })
    }

    /// Centers every column and scales it to unit sample standard deviation
    /// (denominator `n - 1`). Constant columns become all zeros and are flagged.
    pub fn standardize(raw: Array2<f64>, column_names: Vec<String>) -> Result<Self> {
        let mut data = Self::new(raw, column_names)?;
        let n = data.n_samples() as f64;
        for (mut col, constant) in data
            .values
            .axis_iter_mut(Axis(1))
            .zip(data.constant_columns.iter_mut())
        {
            let mean = col.sum() / n;
            col.mapv_inplace(|v| v - mean);
            let ss: f64 = col.iter().map(|v| v * v).sum();
            let sd = (ss / (n - 1.0)).sqrt();
            if *constant || sd == 0.0 || !sd.is_finite() {
                col.fill(0.0);
                *constant = true;
            } else {
                col.mapv_inplace(|v| v / sd);
                // second pass removes the rounding residue of the first
                let mean = col.sum() / n;
                col.mapv_inplace(|v| v - mean);
            }
        }
        Ok(data)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.row(j)
    }

    /// Row `j` as a contiguous slice.
    pub fn row_slice(&self, j: usize) -> &[f64] {
        let p = self.n_vars();
        &self.values.as_slice().expect("standard layout")[j * p..(j + 1) * p]
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn constant_columns(&self) -> &[bool] {
        &self.constant_columns
    }

    /// Rows in the given order (repeats allowed), without re-standardizing.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_samples()) {
            return Err(Error::Validation(format!("row index {bad} out of range")));
        }
        let values = self.values.select(Axis(0), rows);
        Self::new(values, self.column_names.clone())
    }

    /// Columns in the given order, without re-standardizing.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.n_vars()) {
            return Err(Error::Validation(format!("column index {bad} out of range")));
        }
        let values = self.values.select(Axis(1), cols);
        let names = cols.iter().map(|&c| self.column_names[c].clone()).collect();
        Self::new(values, names)
    }
}

/// L1 regularization strengths for locations and log-variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub lambda_mu: f64,
    pub lambda_sigma: f64,
}

impl PenaltyConfig {
    pub fn new(lambda_mu: f64, lambda_sigma: f64) -> Result<Self> {
        for (name, v) in [("lambda_mu", lambda_mu), ("lambda_sigma", lambda_sigma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self {
            lambda_mu,
            lambda_sigma,
        })
    }

    pub const fn zero() -> Self {
        Self {
            lambda_mu: 0.0,
            lambda_sigma: 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.lambda_mu + self.lambda_sigma
    }
}

/// Distribution family of every mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentFamily {
    #[default]
    StudentT,
    /// The `ν → ∞` limit; `dof` entries are held at [`DOF_MAX`] for reporting.
    Gaussian,
}

/// Weights, diagonal-scale locations and variances, and degrees of freedom
/// of a `g`-component mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    /// `g × p`
    pub locations: Array2<f64>,
    /// `g × p`, diagonal of each component's scale matrix
    pub scales: Array2<f64>,
    pub dof: Vec<f64>,
    pub family: ComponentFamily,
}

impl MixtureParams {
    pub fn g(&self) -> usize {
        self.weights.len()
    }

    pub fn p(&self) -> usize {
        self.locations.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.g();
        if g == 0 {
            return Err(Error::Validation("mixture has no components".into()));
        }
        if self.locations.nrows() != g || self.scales.dim() != self.locations.dim() || self.dof.len() != g {
            return Err(Error::Validation("inconsistent mixture parameter shapes".into()));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Validation("negative or NaN mixing weight".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("mixing weights sum to {total}")));
        }
        if self.locations.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite location".into()));
        }
        if self.scales.iter().any(|&s| !(s >= SCALE_FLOOR) || !s.is_finite()) {
            return Err(Error::Validation("scale below floor or non-finite".into()));
        }
        if self.dof.iter().any(|&v| !(DOF_MIN..=DOF_MAX).contains(&v)) {
            return Err(Error::Validation(format!("degrees of freedom outside [{DOF_MIN}, {DOF_MAX}]")));
        }
        Ok(())
    }

    /// `true` for variables where some component escapes the shrinkage targets.
    pub fn informative_mask(&self) -> Vec<bool> {
        (0..self.p())
            .map(|d| {
                (0..self.g()).any(|i| {
                    self.locations[[i, d]].abs() > MASK_TOL || (self.scales[[i, d]] - 1.0).abs() > MASK_TOL
                })
            })
            .collect()
    }

    /// Reorders components so that new component `k` is old component `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            weights: order.iter().map(|&i| self.weights[i]).collect(),
            locations: self.locations.select(Axis(0), order),
            scales: self.scales.select(Axis(0), order),
            dof: order.iter().map(|&i| self.dof[i]).collect(),
            family: self.family,
        }
    }

    /// Component order by descending weight, ties by index.
    pub fn weight_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.g()).collect();
        order.sort_by(|&a, &b| self.weights[b].total_cmp(&self.weights[a]).then(a.cmp(&b)));
        order
    }

    /// Component order by descending weight, ties broken by comparing
    /// locations, scales and degrees of freedom. Identical for any relabelling
    /// of the same components.
    pub fn canonical_order(&self) -> Vec<usize> {
        let cmp_rows = |m: &Array2<f64>, a: usize, b: usize| {
            m.row(a)
                .iter()
                .zip(m.row(b).iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        };
        let mut order: Vec<usize> = (0..self.g()).collect();
        order.sort_by(|&a, &b| {
            self.weights[b]
                .total_cmp(&self.weights[a])
                .then_with(|| cmp_rows(&self.locations, a, b))
                .then_with(|| cmp_rows(&self.scales, a, b))
                .then_with(|| self.dof[a].total_cmp(&self.dof[b]))
        });
        order
    }

    /// `λ_μ Σ|μ| + λ_σ Σ|ln σ²|`.
    pub fn penalty(&self, penalty: &PenaltyConfig) -> f64 {
        let mut total = 0.0;
        if penalty.lambda_mu > 0.0 {
            total += penalty.lambda_mu * self.locations.iter().map(|m| m.abs()).sum::<f64>();
        }
        if penalty.lambda_sigma > 0.0 {
            total += penalty.lambda_sigma * self.scales.iter().map(|s| s.ln().abs()).sum::<f64>();
        }
        total
    }
}

/// E-step output; every matrix is `n × g`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentExpectations {
    /// Posterior component probabilities.
    pub tau: Array2<f64>,
    /// Conditional expectations of the precision factor.
    pub u: Array2<f64>,
    /// Conditional expectations of its logarithm.
    pub log_u: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: MixtureParams,
    pub penalty: PenaltyConfig,
    pub tau: Array2<f64>,
    pub assignments: Vec<usize>,
    pub penalized_loglik: f64,
    pub loglik_trace: Vec<f64>,
    pub informative_mask: Vec<bool>,
    pub n_iterations: usize,
    pub converged: bool,
    pub n_samples: usize,
}

impl FitResult {
    /// Indices of the variables flagged informative.
    pub fn selected_variables(&self) -> Vec<usize> {
        self.informative_mask
            .iter()
            .enumerate()
            .filter_map(|(d, &m)| m.then_some(d))
            .collect()
    }
}

/// Row-wise argmax of a responsibility matrix; ties go to the lowest index.
pub fn hard_assignments(tau: &Array2<f64>) -> Vec<usize> {
    tau.axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

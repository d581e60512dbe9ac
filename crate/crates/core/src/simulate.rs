//! Synthetic Student-t mixtures with informative and pure-noise variables.
//!
//! Cluster separation is specified as a pairwise overlap: the summed
//! misclassification rates of the equal-weight Bayes rule between two
//! unit-scale univariate t components, `P(err | first) + P(err | second)`,
//! i.e. the marginal overlap seen on one informative coordinate when the
//! pair's separation is spread evenly over the `m` informative coordinates.
//! For Gaussian components this is `2Φ(−Δ/2)`, the area shared by the two
//! densities.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::density::{sample_gamma, sample_t_with};
use crate::error::{Error, Result};
use crate::model::{ComponentFamily, DataMatrix, MixtureParams};
use crate::numerics::RngHandle;

/// Monte Carlo draws per component in [`calibrate_separation`].
pub const CALIBRATION_DRAWS: usize = 100_000;
const SEPARATION_BRACKET: (f64, f64) = (0.01, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DofRegime {
    /// ν = 3: heavy tails, finite variance.
    Low,
    /// ν = 50: practically Gaussian.
    High,
}

impl DofRegime {
    pub fn dof(self) -> f64 {
        match self {
            DofRegime::Low => 3.0,
            DofRegime::High => 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub n: usize,
    /// Informative variables.
    pub m: usize,
    /// Uninformative variables.
    pub q: usize,
    pub g: usize,
    pub dof_regime: DofRegime,
    /// Symmetric `g × g` matrix of pairwise overlaps; the diagonal is ignored.
    pub target_overlaps: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub seed: RngHandle,
    /// Randomly permute the generated columns.
    pub shuffle_columns: bool,
}

impl SimDesign {
    pub fn new(n: usize, m: usize, q: usize, overlaps: Vec<Vec<f64>>, dof_regime: DofRegime, seed: RngHandle) -> Self {
        let g = overlaps.len();
        Self {
            n,
            m,
            q,
            g,
            dof_regime,
            target_overlaps: overlaps,
            weights: vec![1.0 / g as f64; g],
            seed,
            shuffle_columns: false,
        }
    }

    /// A single component.
    pub fn one_cluster(n: usize, m: usize, q: usize, dof_regime: DofRegime, seed: RngHandle) -> Self {
        Self::new(n, m, q, vec![vec![0.0]], dof_regime, seed)
    }

    /// Two components with 30% overlap.
    pub fn two_clusters(n: usize, m: usize, q: usize, dof_regime: DofRegime, seed: RngHandle) -> Self {
        Self::new(n, m, q, vec![vec![0.0, 0.30], vec![0.30, 0.0]], dof_regime, seed)
    }

    /// Components A, B, C with overlaps 25% (A–B), 30% (A–C) and 5% (B–C).
    pub fn three_clusters(n: usize, m: usize, q: usize, dof_regime: DofRegime, seed: RngHandle) -> Self {
        let o = vec![vec![0.0, 0.25, 0.30], vec![0.25, 0.0, 0.05], vec![0.30, 0.05, 0.0]];
        Self::new(n, m, q, o, dof_regime, seed)
    }

    pub fn p(&self) -> usize {
        self.m + self.q
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.g;
        if g < 1 || self.n < g || self.n < 2 {
            return Err(Error::Validation(format!("need n >= max(g, 2), got n = {}, g = {g}", self.n)));
        }
        if self.p() < 1 {
            return Err(Error::Validation("design has no variables".into()));
        }
        if g > 1 && self.m < g - 1 {
            return Err(Error::Validation(format!("{g} components need at least {} informative variables", g - 1)));
        }
        if self.weights.len() != g || self.target_overlaps.len() != g || self.target_overlaps.iter().any(|r| r.len() != g) {
            return Err(Error::Validation("weights and overlaps must match g".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation("weights must form a probability vector".into()));
        }
        for i in 0..g {
            for k in 0..g {
                if i == k {
                    continue;
                }
                let o = self.target_overlaps[i][k];
                if !(o > 0.0 && o < 0.5) {
                    return Err(Error::Validation(format!("overlap ({i}, {k}) = {o} not in (0, 0.5)")));
                }
                if o != self.target_overlaps[k][i] {
                    return Err(Error::Validation("overlap matrix is not symmetric".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDataset {
    /// Standardized observations.
    pub data: DataMatrix,
    pub true_labels: Vec<usize>,
    /// Columns carrying cluster signal, ascending.
    pub informative_indices: Vec<usize>,
    /// Parameters on the raw (pre-standardization) scale.
    pub generating_params: MixtureParams,
    /// Per-coordinate separations actually used, `g × g`. Targets that
    /// violate the triangle inequality are shortened to the longest
    /// realizable distance.
    pub separations: Vec<Vec<f64>>,
}

fn t_draws(nu: f64, count: usize, rng: &RngHandle) -> Vec<f64> {
    let mut gen = rng.generator();
    (0..count)
        .map(|_| {
            let u = sample_gamma(nu / 2.0, nu / 2.0, &mut gen);
            let z: f64 = StandardNormal.sample(&mut gen);
            z / u.sqrt()
        })
        .collect()
}

/// Sorted standard t draws; the overlap at separation Δ is `2 P(T > Δ/2)`,
/// estimated from both sides.
struct OverlapEstimator {
    left: Vec<f64>,
    right: Vec<f64>,
}

impl OverlapEstimator {
    fn new(nu: f64, draws: usize, rng: &RngHandle) -> Self {
        let mut left = t_draws(nu, draws, &rng.derive(0));
        let mut right = t_draws(nu, draws, &rng.derive(1));
        left.sort_by(f64::total_cmp);
        right.sort_by(f64::total_cmp);
        Self { left, right }
    }

    fn overlap(&self, delta: f64) -> f64 {
        let half = delta / 2.0;
        // component at 0 misclassified when x > Δ/2; component at Δ when its noise < -Δ/2
        let wrong_left = self.left.len() - self.left.partition_point(|&x| x <= half);
        let wrong_right = self.right.partition_point(|&x| x < -half);
        wrong_left as f64 / self.left.len() as f64 + wrong_right as f64 / self.right.len() as f64
    }
}

/// Monte Carlo overlap (summed Bayes misclassification rates) between
/// unit-scale t(ν) components at 0 and `delta` with equal weights.
pub fn bayes_overlap(nu: f64, delta: f64, draws: usize, rng: &RngHandle) -> f64 {
    OverlapEstimator::new(nu, draws, rng).overlap(delta)
}

/// Per-coordinate shift Δ at which two unit-scale t(ν) components have the
/// target overlap; bisection on `[0.01, 20]` over a fixed
/// set of Monte Carlo draws.
pub fn calibrate_separation(nu: f64, target_overlap: f64, rng: &RngHandle) -> Result<f64> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Validation(format!("degrees of freedom must be positive, got {nu}")));
    }
    if !(target_overlap > 0.0 && target_overlap < 0.5) {
        return Err(Error::Validation(format!("target overlap {target_overlap} not in (0, 0.5)")));
    }
    let est = OverlapEstimator::new(nu, CALIBRATION_DRAWS, rng);
    let (mut lo, mut hi) = SEPARATION_BRACKET;
    if est.overlap(lo) < target_overlap || est.overlap(hi) > target_overlap {
        return Err(Error::Calibration(format!(
            "target overlap {target_overlap} not bracketed by Δ in [{lo}, {hi}] at ν = {nu}"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if est.overlap(mid) > target_overlap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Orthonormal directions in `R^m` with entries of equal magnitude where
/// possible (Walsh sign patterns, Gram–Schmidt for odd sizes).
fn spread_directions(m: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut pattern = 0usize;
    while out.len() < count {
        if pattern > 4 * m + 64 {
            return Err(Error::Validation(format!("cannot build {count} directions in {m} dimensions")));
        }
        let mut v: Vec<f64> = (0..m)
            .map(|d| if (d & pattern).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        pattern += 1;
        for e in &out {
            let dot: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(e).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            out.push(v);
        }
    }
    Ok(out)
}

/// Replaces each distance by the shortest path length through other points,
/// which enforces the triangle inequality and changes nothing when it holds.
fn close_metric(dist: &mut [Vec<f64>]) {
    let g = dist.len();
    for j in 0..g {
        for i in 0..g {
            for k in 0..g {
                let via = dist[i][j] + dist[j][k];
                if via < dist[i][k] {
                    dist[i][k] = via;
                }
            }
        }
    }
}

/// Points in `R^{g-1}` with the given pairwise distances (Cholesky of the
/// Gram matrix relative to point 0).
fn embed_distances(dist: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let g = dist.len();
    let k = g.saturating_sub(1);
    let gram = |a: usize, b: usize| 0.5 * (dist[0][a].powi(2) + dist[0][b].powi(2) - dist[a][b].powi(2));
    let mut l = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..=a {
            let s: f64 = (0..b).map(|c| l[a][c] * l[b][c]).sum();
            if a == b {
                let diag = gram(a + 1, a + 1) - s;
                if diag < -1e-9 * gram(a + 1, a + 1).abs().max(1.0) {
                    return Err(Error::Validation("pairwise separations are not realizable".into()));
                }
                l[a][a] = diag.max(0.0).sqrt();
            } else {
                l[a][b] = if l[b][b] > 0.0 { (gram(a + 1, b + 1) - s) / l[b][b] } else { 0.0 };
            }
        }
    }
    let mut points = vec![vec![0.0; k]];
    points.extend(l);
    Ok(points)
}

struct RawDraw {
    values: Array2<f64>,
    labels: Vec<usize>,
    informative_indices: Vec<usize>,
    locations: Array2<f64>,
    separations: Vec<Vec<f64>>,
}

fn draw_raw(design: &SimDesign) -> Result<RawDraw> {
    design.validate()?;
    let (n, m, g) = (design.n, design.m, design.g);
    let p = design.p();
    let nu = design.dof_regime.dof();

    let mut separations = vec![vec![0.0; g]; g];
    let calibration = design.seed.derive(1);
    for i in 0..g {
        for k in (i + 1)..g {
            let delta = calibrate_separation(nu, design.target_overlaps[i][k], &calibration.derive((i * g + k) as u64))?;
            separations[i][k] = delta;
            separations[k][i] = delta;
        }
    }
    close_metric(&mut separations);
    let total: Vec<Vec<f64>> = separations
        .iter()
        .map(|row| row.iter().map(|d| d * (m as f64).sqrt()).collect())
        .collect();
    let coords = embed_distances(&total)?;
    let directions = spread_directions(m, g.saturating_sub(1))?;
    let mut locations = Array2::zeros((g, p));
    for i in 0..g {
        for (c, e) in coords[i].iter().zip(&directions) {
            for d in 0..m {
                locations[[i, d]] += c * e[d];
            }
        }
    }

    let mut gen = design.seed.derive(2).generator();
    let cumulative: Vec<f64> = design
        .weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let ones = vec![1.0; p];
    let mut values = Array2::zeros((n, p));
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let r: f64 = gen.random::<f64>() * cumulative[g - 1];
        let label = cumulative.iter().position(|&c| r < c).unwrap_or(g - 1);
        labels.push(label);
        let mu: Vec<f64> = locations.row(label).to_vec();
        let mut row = values.row_mut(j);
        for (d, v) in sample_t_with(&mu, &ones, nu, &mut gen).into_iter().enumerate() {
            row[d] = v;
        }
    }

    let mut order: Vec<usize> = (0..p).collect();
    if design.shuffle_columns {
        order.shuffle(&mut design.seed.derive(3).generator());
    }
    Ok(RawDraw {
        values: values.select(ndarray::Axis(1), &order),
        labels,
        informative_indices: (0..p).filter(|&c| order[c] < m).collect(),
        locations: locations.select(ndarray::Axis(1), &order),
        separations,
    })
}

/// Draws a dataset: labels from the weights, then each sample as one
/// `p`-dimensional t draw with unit diagonal scale, so a single precision
/// factor is shared by all of its coordinates. Noise coordinates have location
/// 0 in every component. The result is standardized.
pub fn generate(design: &SimDesign) -> Result<SimDataset> {
    let raw = draw_raw(design)?;
    let names = (1..=design.p()).map(|d| format!("v{d}")).collect();
    Ok(SimDataset {
        data: DataMatrix::standardize(raw.values, names)?,
        true_labels: raw.labels,
        informative_indices: raw.informative_indices,
        generating_params: MixtureParams {
            weights: design.weights.clone(),
            locations: raw.locations,
            scales: Array2::ones((design.g, design.p())),
            dof: vec![design.dof_regime.dof(); design.g],
            family: ComponentFamily::StudentT,
        },
        separations: raw.separations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_orthonormal() {
        for (m, count) in [(20, 2), (20, 4), (7, 3), (1, 1)] {
            let dirs = spread_directions(m, count).unwrap();
            for a in 0..count {
                for b in 0..count {
                    let dot: f64 = dirs[a].iter().zip(&dirs[b]).map(|(x, y)| x * y).sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expected).abs() < 1e-12);
                }
            }
        }
        assert!(spread_directions(1, 2).is_err());
    }

    #[test]
    fn embedding_reproduces_distances() {
        let dist = vec![vec![0.0, 3.0, 4.0], vec![3.0, 0.0, 5.0], vec![4.0, 5.0, 0.0]];
        let pts = embed_distances(&dist).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                let d: f64 = pts[i].iter().zip(&pts[k]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                assert!((d - dist[i][k]).abs() < 1e-12);
            }
        }
        let bad = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(embed_distances(&bad).is_err());
    }

    #[test]
    fn metric_closure_shortens_violations_only() {
        let mut d = vec![vec![0.0, 2.0, 2.5], vec![2.0, 0.0, 6.0], vec![2.5, 6.0, 0.0]];
        close_metric(&mut d);
        assert_eq!(d[1][2], 4.5);
        assert_eq!(d[2][1], 4.5);
        assert_eq!(d[0][1], 2.0);
        let mut ok = vec![vec![0.0, 3.0, 4.0], vec![3.0, 0.0, 5.0], vec![4.0, 5.0, 0.0]];
        close_metric(&mut ok);
        assert_eq!(ok[1][2], 5.0);
        assert!(embed_distances(&d).is_ok());
    }

    #[test]
    fn design_validation() {
        let mut d = SimDesign::two_clusters(200, 20, 10, DofRegime::High, RngHandle::new(1));
        assert!(d.validate().is_ok());
        d.target_overlaps[0][1] = 0.6;
        assert!(d.validate().is_err());
        let d = SimDesign::three_clusters(2, 20, 10, DofRegime::High, RngHandle::new(1));
        assert!(d.validate().is_err());
    }
    #[test]
    fn gaussian_limit_separations() {
        let rng = RngHandle::new(11);
        let d30 = calibrate_separation(crate::model::DOF_MAX, 0.30, &rng).unwrap();
        assert!((d30 - 2.073).abs() < 0.05, "{d30}");
        let d05 = calibrate_separation(crate::model::DOF_MAX, 0.05, &rng).unwrap();
        assert!((d05 - 3.92).abs() < 0.07, "{d05}");
    }

    #[test]
    fn heavy_tails_need_more_separation() {
        let rng = RngHandle::new(12);
        let heavy = calibrate_separation(3.0, 0.30, &rng).unwrap();
        let light = calibrate_separation(crate::model::DOF_MAX, 0.30, &rng).unwrap();
        assert!(heavy > light);
        assert!((bayes_overlap(3.0, heavy, CALIBRATION_DRAWS, &rng) - 0.30).abs() < 0.01);
    }

    #[test]
    fn calibration_rejects_bad_targets() {
        assert!(calibrate_separation(3.0, 0.5, &RngHandle::new(1)).is_err());
        assert!(calibrate_separation(0.0, 0.3, &RngHandle::new(1)).is_err());
        // no separation in [0.01, 20] leaves a Cauchy pair this close
        assert!(matches!(
            calibrate_separation(1.0, 1e-4, &RngHandle::new(1)),
            Err(Error::Calibration(_))
        ));
    }

    #[test]
    fn single_cloud_without_noise() {
        let sim = generate(&SimDesign::one_cluster(50, 4, 0, DofRegime::Low, RngHandle::new(3))).unwrap();
        assert!(sim.true_labels.iter().all(|&l| l == 0));
        assert_eq!((sim.data.n_samples(), sim.data.n_vars()), (50, 4));
        assert!(sim.generating_params.locations.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_size_design_shape() {
        let sim = generate(&SimDesign::three_clusters(200, 20, 2000, DofRegime::Low, RngHandle::new(4))).unwrap();
        assert_eq!((sim.data.n_samples(), sim.data.n_vars()), (200, 2020));
        assert!(sim.true_labels.iter().all(|&l| l < 3));
        assert_eq!(sim.informative_indices, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_dataset() {
        let design = SimDesign::three_clusters(60, 5, 7, DofRegime::High, RngHandle::new(5));
        assert_eq!(generate(&design).unwrap(), generate(&design).unwrap());
        let other = SimDesign { seed: RngHandle::new(6), ..design.clone() };
        assert_ne!(generate(&design).unwrap().data, generate(&other).unwrap().data);
    }

    #[test]
    fn shuffled_columns_track_informative_indices() {
        let mut design = SimDesign::two_clusters(40, 4, 12, DofRegime::High, RngHandle::new(8));
        design.shuffle_columns = true;
        let sim = generate(&design).unwrap();
        assert_eq!(sim.informative_indices.len(), 4);
        for d in 0..16 {
            let moved = sim.generating_params.locations.column(d).iter().any(|&v| v != 0.0);
            assert_eq!(moved, sim.informative_indices.contains(&d));
        }
    }

    #[test]
    fn label_frequencies_follow_weights() {
        let mut design = SimDesign::three_clusters(3000, 4, 0, DofRegime::High, RngHandle::new(9));
        design.weights = vec![0.5, 0.3, 0.2];
        let sim = generate(&design).unwrap();
        for (i, &w) in design.weights.iter().enumerate() {
            let count = sim.true_labels.iter().filter(|&&l| l == i).count() as f64;
            let se = (3000.0 * w * (1.0 - w)).sqrt();
            assert!((count - 3000.0 * w).abs() < 3.0 * se, "component {i}: {count}");
        }
    }

    fn welch_rejects(a: &[f64], b: &[f64]) -> bool {
        let moments = |x: &[f64]| {
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, var / n)
        };
        let ((ma, va), (mb, vb)) = (moments(a), moments(b));
        ((ma - mb) / (va + vb).sqrt()).abs() > 1.96
    }

    #[test]
    fn noise_columns_carry_no_cluster_signal() {
        for regime in [DofRegime::Low, DofRegime::High] {
            let sim = generate(&SimDesign::two_clusters(400, 5, 100, regime, RngHandle::new(10))).unwrap();
            let rejections = (5..105)
                .filter(|&d| {
                    let col = sim.data.values().column(d);
                    let split = |c: usize| -> Vec<f64> {
                        (0..400).filter(|&j| sim.true_labels[j] == c).map(|j| col[j]).collect()
                    };
                    welch_rejects(&split(0), &split(1))
                })
                .count();
            let rate = rejections as f64 / 100.0;
            assert!((0.01..=0.12).contains(&rate), "{regime:?}: {rate}");
        }
    }

    fn mean_excess_kurtosis(sim: &SimDataset, cols: std::ops::Range<usize>) -> f64 {
        let n = sim.data.n_samples() as f64;
        let count = cols.len() as f64;
        cols.map(|d| {
            let col = sim.data.values().column(d);
            let m2 = col.iter().map(|v| v * v).sum::<f64>() / n;
            let m4 = col.iter().map(|v| v.powi(4)).sum::<f64>() / n;
            m4 / (m2 * m2) - 3.0
        })
        .sum::<f64>()
            / count
    }

    #[test]
    fn noise_kurtosis_reflects_regime() {
        let low = generate(&SimDesign::one_cluster(2000, 1, 50, DofRegime::Low, RngHandle::new(13))).unwrap();
        assert!(mean_excess_kurtosis(&low, 1..51) > 2.0);
        let high = generate(&SimDesign::one_cluster(2000, 1, 50, DofRegime::High, RngHandle::new(13))).unwrap();
        let k = mean_excess_kurtosis(&high, 1..51);
        assert!(k.abs() < 0.5, "{k}");
    }

    #[test]
    fn achieved_overlap_matches_target() {
        for regime in [DofRegime::Low, DofRegime::High] {
            let design = SimDesign::two_clusters(4000, 20, 0, regime, RngHandle::new(14));
            let raw = draw_raw(&design).unwrap();
            let (a, b) = (raw.locations.row(0), raw.locations.row(1));
            let size = |c: usize| raw.labels.iter().filter(|&&l| l == c).count() as f64;
            let mut total = 0.0;
            for d in 0..20 {
                let mid = 0.5 * (a[d] + b[d]);
                let mut wrong = [0.0; 2];
                for (j, &l) in raw.labels.iter().enumerate() {
                    let own = if l == 0 { a[d] } else { b[d] };
                    if (raw.values[[j, d]] - mid) * (own - mid) < 0.0 {
                        wrong[l] += 1.0;
                    }
                }
                total += wrong[0] / size(0) + wrong[1] / size(1);
            }
            let overlap = total / 20.0;
            assert!((overlap - 0.30).abs() < 0.03, "{regime:?}: {overlap}");
        }
    }

    #[test]
    fn infeasible_triangle_is_shortened() {
        let sim = generate(&SimDesign::three_clusters(30, 20, 0, DofRegime::Low, RngHandle::new(15))).unwrap();
        let s = &sim.separations;
        assert!(s[1][2] <= s[0][1] + s[0][2] + 1e-12);
        for i in 0..3 {
            for k in 0..3 {
                let d: f64 = (0..20)
                    .map(|c| (sim.generating_params.locations[[i, c]] - sim.generating_params.locations[[k, c]]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!((d - s[i][k] * 20f64.sqrt()).abs() < 1e-9);
            }
        }
    }
}

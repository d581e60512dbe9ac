use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ComponentFamily, DataMatrix, MixtureParams, DOF_MAX, SCALE_FLOOR};
use crate::numerics::RngHandle;

/// Starting degrees of freedom for t components.
pub const INITIAL_DOF: f64 = 10.0;
const LLOYD_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    /// k-means++ and Lloyd iterations on rows rescaled to unit root mean
    /// square, which removes the per-sample scale of heavy-tailed draws.
    #[default]
    KmeansPp,
    /// k-means++ and Lloyd iterations on the data as given.
    KmeansPpRaw,
    /// Uniform random labels, every component non-empty.
    RandomPartition,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Hard partition into `g` groups by k-means with k-means++ seeding.
/// Groups are kept at two or more members whenever `n >= 2g`.
pub fn kmeans_partition(data: &DataMatrix, g: usize, rng: &RngHandle) -> Vec<usize> {
    let n = data.n_samples();
    let p = data.n_vars();
    let mut gen = rng.generator();

    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(g);
    centers.push(data.row_slice(gen.random_range(0..n)).to_vec());
    let mut nearest: Vec<f64> = (0..n).map(|j| sq_dist(data.row_slice(j), &centers[0])).collect();
    while centers.len() < g {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = gen.random::<f64>() * total;
            let mut chosen = n - 1;
            for (j, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = j;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            gen.random_range(0..n)
        };
        let c = data.row_slice(pick).to_vec();
        for (j, near) in nearest.iter_mut().enumerate() {
            *near = near.min(sq_dist(data.row_slice(j), &c));
        }
        centers.push(c);
    }

    let min_size = if n >= 2 * g { 2 } else { 1 };
    let mut labels = vec![usize::MAX; n];
    for _ in 0..LLOYD_MAX_ITERATIONS {
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for j in 0..n {
            let y = data.row_slice(j);
            let (best, d) = centers
                .iter()
                .enumerate()
                .map(|(i, c)| (i, sq_dist(y, c)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            dist[j] = d;
            if labels[j] != best {
                labels[j] = best;
                changed = true;
            }
        }
        // refill undersized groups with the worst-fitting points elsewhere
        let mut counts = vec![0usize; g];
        labels.iter().for_each(|&l| counts[l] += 1);
        for i in 0..g {
            while counts[i] < min_size {
                let donor = (0..n)
                    .filter(|&j| labels[j] != i && counts[labels[j]] > min_size)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
                let Some(j) = donor else { break };
                counts[labels[j]] -= 1;
                labels[j] = i;
                dist[j] = 0.0;
                counts[i] += 1;
                changed = true;
            }
        }
        for (i, c) in centers.iter_mut().enumerate() {
            let mut acc = vec![0.0; p];
            for j in (0..n).filter(|&j| labels[j] == i) {
                acc.iter_mut().zip(data.row_slice(j)).for_each(|(a, y)| *a += y);
            }
            if counts[i] > 0 {
                acc.iter_mut().for_each(|a| *a /= counts[i] as f64);
                *c = acc;
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Rows divided by their root mean square; all-zero rows are kept.
pub fn row_scaled(data: &DataMatrix) -> Result<DataMatrix> {
    let mut values = data.values().clone();
    for mut row in values.rows_mut() {
        let rms = (row.iter().map(|x| x * x).sum::<f64>() / row.len() as f64).sqrt();
        if rms > 0.0 {
            row.mapv_inplace(|x| x / rms);
        }
    }
    DataMatrix::new(values, data.column_names().to_vec())
}

/// Uniform labels with each of the `g` groups seeded by one distinct sample.
pub fn random_partition(n: usize, g: usize, rng: &RngHandle) -> Vec<usize> {
    let mut gen = rng.generator();
    let mut labels: Vec<usize> = (0..n).map(|_| gen.random_range(0..g)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..g.min(n) {
        let swap = gen.random_range(k..n);
        order.swap(k, swap);
        labels[order[k]] = k;
    }
    labels
}

/// One unpenalized M-step from a hard partition with unit precision factors.
pub fn params_from_partition(
    data: &DataMatrix,
    labels: &[usize],
    g: usize,
    family: ComponentFamily,
) -> Result<MixtureParams> {
    let (n, p) = (data.n_samples(), data.n_vars());
    if labels.len() != n {
        return Err(Error::Validation(format!("{} labels for {n} samples", labels.len())));
    }
    let mut counts = vec![0usize; g];
    let mut locations = Array2::zeros((g, p));
    for (j, &l) in labels.iter().enumerate() {
        if l >= g {
            return Err(Error::Validation(format!("label {l} >= g = {g}")));
        }
        counts[l] += 1;
        let mut row = locations.row_mut(l);
        row.iter_mut().zip(data.row_slice(j)).for_each(|(a, y)| *a += y);
    }
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(Error::DegenerateComponent {
            component: i,
            reason: "empty initial partition".into(),
        });
    }
    for (i, mut row) in locations.rows_mut().into_iter().enumerate() {
        row.mapv_inplace(|v| v / counts[i] as f64);
    }
    let mut scales = Array2::zeros((g, p));
    for (j, &l) in labels.iter().enumerate() {
        for d in 0..p {
            let r = data.row_slice(j)[d] - locations[[l, d]];
            scales[[l, d]] += r * r;
        }
    }
    for (i, mut row) in scales.rows_mut().into_iter().enumerate() {
        row.mapv_inplace(|v: f64| (v / counts[i] as f64).max(SCALE_FLOOR));
    }
    let dof = match family {
        ComponentFamily::StudentT => INITIAL_DOF,
        ComponentFamily::Gaussian => DOF_MAX,
    };
    Ok(MixtureParams {
        weights: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        locations,
        scales,
        dof: vec![dof; g],
        family,
    })
}

pub fn initial_params(
    data: &DataMatrix,
    g: usize,
    method: InitMethod,
    family: ComponentFamily,
    rng: &RngHandle,
) -> Result<MixtureParams> {
    let labels = match method {
        InitMethod::KmeansPp => kmeans_partition(&row_scaled(data)?, g, rng),
        InitMethod::KmeansPpRaw => kmeans_partition(data, g, rng),
        InitMethod::RandomPartition => random_partition(data.n_samples(), g, rng),
    };
    params_from_partition(data, &labels, g, family)
}

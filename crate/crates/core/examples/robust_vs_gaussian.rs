//! Compare the t mixture with its Gaussian limit on heavy-tailed data.
//!
//! cargo run --release --example robust_vs_gaussian

use ptmix::prelude::*;

fn main() -> Result<(), Error> {
    let grid = default_lambda_grid(200);
    println!("{:>5} {:>8} {:>9}", "seed", "t ARI", "gauss ARI");
    for seed in 1..=3u64 {
        let sim = generate(&SimDesign::two_clusters(200, 20, 100, DofRegime::Low, RngHandle::new(seed)))?;
        let t_config = EmConfig::default().with_rng(RngHandle::new(seed));
        let g_config = EmConfig {
            gaussian_mode: true,
            ..t_config
        };
        let mut ari = Vec::new();
        for config in [&t_config, &g_config] {
            let (lambda, _) = select_lambda(&sim.data, 2, &grid, config)?;
            let f = fit(&sim.data, 2, &lambda, config)?;
            ari.push(adjusted_rand_index(&f.assignments, &sim.true_labels)?);
        }
        println!("{seed:>5} {:>8.3} {:>9.3}", ari[0], ari[1]);
    }
    Ok(())
}

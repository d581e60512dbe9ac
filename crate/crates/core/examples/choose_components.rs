//! Choose the number of components with and without the bootstrap stage.
//!
//! cargo run --release --example choose_components -- [seed]

use ptmix::prelude::*;

fn main() -> Result<(), Error> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let sim = generate(&SimDesign::three_clusters(200, 20, 100, DofRegime::High, RngHandle::new(seed)))?;
    let config = EmConfig::default().with_rng(RngHandle::new(seed));
    let mut cfg = SelectGConfig::new(vec![2, 3, 4], default_lambda_grid(200));
    cfg.replicates = 20;

    let report = select_g(&sim.data, &cfg, &config)?;
    for model in &report.models {
        println!(
            "g = {}: lambda ({:.2}, {:.2}), BIC {:.1}, {} variables",
            model.g,
            model.lambda.lambda_mu,
            model.lambda.lambda_sigma,
            model.bic,
            model.selected.len()
        );
    }
    println!("full data choice g = {}", report.full_data_g);
    println!("bootstrap choice g = {} (bootstrap used: {})", report.chosen_g, report.used_bootstrap);
    println!("ARI {:.3}", adjusted_rand_index(&report.assignments, &sim.true_labels)?);
    Ok(())
}

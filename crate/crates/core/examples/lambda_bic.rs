//! Scan the default penalty grid on simulated data and print the BIC table.
//!
//! cargo run --release --example lambda_bic -- [seed]

use ptmix::metrics::{adjusted_rand_index, selection_scores};
use ptmix::prelude::*;
use ptmix::selection::{search_lambda, BicSettings};

fn main() -> Result<(), Error> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let sim = generate(&SimDesign::two_clusters(200, 20, 500, DofRegime::High, RngHandle::new(seed)))?;
    let config = EmConfig::default().with_rng(RngHandle::new(seed));
    let grid = default_lambda_grid(sim.data.n_samples());
    let search = search_lambda(&sim.data, 2, &grid, &config, BicSettings::default())?;

    println!("{:>9} {:>9} {:>5} {:>12} {:>12}", "lambda_mu", "lambda_sg", "m", "pen_loglik", "bic");
    for r in &search.table {
        println!(
            "{:>9.2} {:>9.2} {:>5} {:>12.2} {:>12.2}",
            r.lambda.lambda_mu, r.lambda.lambda_sigma, r.m_selected, r.penalized_loglik, r.bic
        );
    }
    let fit = &search.fit;
    let scores = selection_scores(&fit.selected_variables(), &sim.informative_indices, sim.data.n_vars())?;
    println!(
        "chosen lambda_mu = {:.2}, lambda_sigma = {:.2}",
        search.chosen.lambda_mu, search.chosen.lambda_sigma
    );
    println!(
        "ARI = {:.3}, sensitivity = {:?}, specificity = {:?}",
        adjusted_rand_index(&fit.assignments, &sim.true_labels)?,
        scores.sensitivity,
        scores.specificity
    );
    Ok(())
}

//! Rank variables by bootstrap selection probability at a fixed penalty.
//!
//! cargo run --release --example bootstrap_ranking

use ptmix::prelude::*;

fn main() -> Result<(), Error> {
    let sim = generate(&SimDesign::two_clusters(200, 20, 60, DofRegime::High, RngHandle::new(5)))?;
    let config = EmConfig::default().with_rng(RngHandle::new(5));
    let (lambda, _) = select_lambda(&sim.data, 2, &default_lambda_grid(200), &config)?;
    let report = bootstrap_selection(&sim.data, 2, &lambda, 30, 0.5, &config)?;

    println!("lambda_mu {:.2}, lambda_sigma {:.2}", lambda.lambda_mu, lambda.lambda_sigma);
    println!("{:>5} {:>6} {:>11}", "rank", "var", "probability");
    for (rank, &v) in report.ranked_variables.iter().take(30).enumerate() {
        let tag = if sim.informative_indices.contains(&v) { "*" } else { "" };
        println!("{:>5} {:>6} {:>11.3} {tag}", rank + 1, sim.data.column_names()[v], report.selection_probabilities[v]);
    }
    println!("stable set size {} (informative marked *)", report.stable_set.len());
    Ok(())
}

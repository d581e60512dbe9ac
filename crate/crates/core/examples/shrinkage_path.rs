//! Follow how many variables survive as the penalty grows.
//!
//! cargo run --release --example shrinkage_path

use ptmix::prelude::*;

fn main() -> Result<(), Error> {
    let sim = generate(&SimDesign::two_clusters(200, 20, 80, DofRegime::High, RngHandle::new(11)))?;
    let config = EmConfig::default().with_rng(RngHandle::new(11));
    println!("{:>7} {:>10} {:>8} {:>6}", "lambda", "selected", "true", "ARI");
    for lambda in [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        let fit = fit(&sim.data, 2, &PenaltyConfig::new(lambda, lambda)?, &config)?;
        let kept = fit.selected_variables();
        let hits = kept.iter().filter(|v| sim.informative_indices.contains(v)).count();
        println!(
            "{lambda:>7.1} {:>10} {hits:>8} {:>6.3}",
            kept.len(),
            adjusted_rand_index(&fit.assignments, &sim.true_labels)?
        );
    }
    Ok(())
}

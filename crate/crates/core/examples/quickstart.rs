//! Simulate two clusters hidden among noise variables, pick the penalty by
//! BIC, fit a penalized t mixture and score it.
//!
//! cargo run --release --example quickstart

use ptmix::prelude::*;

fn main() -> Result<(), Error> {
    let sim = generate(&SimDesign::two_clusters(200, 20, 100, DofRegime::High, RngHandle::new(7)))?;
    let config = EmConfig::default().with_rng(RngHandle::new(7));
    let (lambda, _) = select_lambda(&sim.data, 2, &default_lambda_grid(200), &config)?;
    let fit = fit(&sim.data, 2, &lambda, &config)?;

    println!("lambda_mu {:.2}, lambda_sigma {:.2}", lambda.lambda_mu, lambda.lambda_sigma);

    println!("converged after {} iterations: {}", fit.n_iterations, fit.converged);
    println!("weights {:.3?}", fit.params.weights);
    println!("degrees of freedom {:.2?}", fit.params.dof);
    println!("informative variables {:?}", fit.selected_variables());
    println!("ARI {:.3}", adjusted_rand_index(&fit.assignments, &sim.true_labels)?);
    Ok(())
}

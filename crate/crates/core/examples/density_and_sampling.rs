//! Evaluate the t log-density and check sampled moments.
//!
//! cargo run --release --example density_and_sampling

use ptmix::density::{gaussian_log_pdf, sample_t, t_log_pdf};
use ptmix::prelude::*;

fn main() -> Result<(), Error> {
    let mu = [0.0, 1.0];
    let sigma2 = [1.0, 2.0];
    println!("{:>6} {:>10} {:>10} {:>10}", "x", "nu=1", "nu=5", "gaussian");
    for x in [0.0, 1.0, 2.0, 4.0, 8.0] {
        let y = [x, 1.0];
        println!(
            "{x:>6.1} {:>10.4} {:>10.4} {:>10.4}",
            t_log_pdf(&y, &mu, &sigma2, 1.0)?,
            t_log_pdf(&y, &mu, &sigma2, 5.0)?,
            gaussian_log_pdf(&y, &mu, &sigma2)?
        );
    }

    let nu = 6.0;
    let rng = RngHandle::new(1);
    let draws: Vec<Vec<f64>> = (0..20_000u64).map(|i| sample_t(&mu, &sigma2, nu, &rng.derive(i))).collect::<Result<_, _>>()?;
    for d in 0..2 {
        let m = draws.iter().map(|v| v[d]).sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|v| (v[d] - m).powi(2)).sum::<f64>() / draws.len() as f64;
        println!("coordinate {d}: mean {m:.3} (expect {}), variance {var:.3} (expect {:.3})", mu[d], sigma2[d] * nu / (nu - 2.0));
    }
    Ok(())
}

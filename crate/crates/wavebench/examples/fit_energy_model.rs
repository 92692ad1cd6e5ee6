//! Constrained polynomial fuel-model fitting.
//!
//! Generates noisy (speed, accel, fuel-rate) samples from a physics
//! surrogate, fits the 9-coefficient polynomial with non-negative least
//! squares, and reports the fit quality plus the properties the
//! constraints guarantee (non-negative rates, fuel-cut floor, convexity
//! in acceleration).
//!
//! Run with: `cargo run --example fit_energy_model`

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use wavebench::energy::fit::fit_poly;
use wavebench::energy::placeholder::SURROGATES;
use wavebench::energy::EnergyQuery;

fn main() {
    let spec = &SURROGATES[1].0; // midsize sedan surrogate
    let mut rng = StdRng::seed_from_u64(42);

    // Noisy samples away from the fuel-cut clamp (the clamp region is
    // reproduced by the beta floor, not by the polynomial itself).
    let samples: Vec<(f64, f64, f64)> = spec
        .samples()
        .into_iter()
        .filter(|&(v, a, _)| spec.rate(v, a) > spec.beta + 0.05)
        .map(|(v, a, r)| (v, a, r + rng.gen_range(-0.02..0.02)))
        .collect();

    let outcome = fit_poly(&samples, spec.beta).expect("fit");
    let model = &outcome.model;

    println!("class               {}", spec.name);
    println!("samples             {}", samples.len());
    println!("residual norm       {:.4} g/s (rms {:.4})", outcome.residual_norm,
        outcome.residual_norm / (samples.len() as f64).sqrt());
    println!("rank deficient      {}", outcome.rank_deficient);
    println!("coefficients (all constrained >= 0):");
    println!("  C = {:?}", model.c.map(|x| (x * 1e4).round() / 1e4));
    println!("  p = {:?}", model.p.map(|x| (x * 1e4).round() / 1e4));
    println!("  q = {:?}", model.q.map(|x| (x * 1e4).round() / 1e4));

    // Guaranteed properties of the fitted model.
    let mut min_rate = f64::INFINITY;
    for i in 0..=35 {
        for j in 0..=30 {
            let (v, a) = (i as f64, -3.0 + j as f64 * 0.2);
            min_rate = min_rate.min(model.fuel_rate(&EnergyQuery::flat(v, a)));
        }
    }
    println!("min fuel rate on grid {:.4} g/s (floor beta = {:.2})", min_rate, model.beta);

    let probe = |a: f64| model.fuel_rate(&EnergyQuery::flat(15.0, a));
    println!(
        "convexity at 15 m/s: f(-1)+f(+1) - 2 f(0) = {:+.4} g/s (>= 0)",
        probe(-1.0) + probe(1.0) - 2.0 * probe(0.0)
    );
}

//! Fit `A0 (1 - exp(-i / tau))` to a synthetic noisy coverage curve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shellsep::metrics::{fit_saturation, saturation_model};

fn main() -> shellsep::Result<()> {
    let (a0, tau) = (0.97, 6424.3);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let samples: Vec<(f64, f64)> = (1..=500)
        .map(|k| {
            let i = k as f64 * 100.0;
            (i, saturation_model(a0, tau, i) + rng.random_range(-0.005..0.005))
        })
        .collect();
    let fit = fit_saturation(&samples)?;
    println!("true:   A0 = {a0:.4}, tau = {tau:.1}");
    println!(
        "fitted: A0 = {:.4}, tau = {:.1}, rms = {:.4}",
        fit.a0, fit.tau, fit.residual_rms
    );
    println!("r(20000) = {:.4}", fit.eval(20_000.0));
    Ok(())
}

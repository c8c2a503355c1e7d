use fringe_core::field::ComplexField;
use fringe_core::rootmusic::{estimate_field, EstimatorConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller is fine for a probe
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[test]
#[ignore]
fn probe() {
    let n = 64usize;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // smooth multi-lobe phase + 0 dB AWGN, like the benchmark workload
    let sigma = 1.0f64;
    let field = ComplexField::from_fn(n, n, |x, y| {
        let xx = x as f64 / n as f64 - 0.4;
        let yy = y as f64 / n as f64 - 0.55;
        let phi = 10.0 * (-4.0 * (xx * xx + yy * yy)).exp();
        Complex64::from_polar(1.0, phi)
            + Complex64::new(
                gauss(&mut rng) * sigma / 2f64.sqrt(),
                gauss(&mut rng) * sigma / 2f64.sqrt(),
            )
    });
    let mut total = 0.0;
    for l in [1usize, 2, 3, 4, 5, 6, 7, 8] {
        let cfg = EstimatorConfig::new(l);
        let t = Instant::now();
        let (_map, diag) = estimate_field(&field, &cfg, 2).unwrap();
        let dt = t.elapsed().as_secs_f64();
        let per_pixel = dt / (n * n) as f64 * 1e6;
        let t512 = per_pixel * 512.0 * 512.0 / 1e6;
        total += t512;
        println!(
            "L={l}: {:.2} us/pixel -> 512^2 = {:.1} s  degen={}",
            per_pixel, t512, diag.degenerate_pixels
        );
    }
    println!("full sweep at 512^2: {:.0} s -> x3 seeds = {:.0} s", total, 3.0 * total);
}

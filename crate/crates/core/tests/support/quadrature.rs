//! Action probabilities by numerical integration of the Normal density,
//! independent of any erfc implementation.

use std::f64::consts::PI;

fn pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// ∫ φ over [a, b] by composite Simpson with `n` (even) intervals.
fn simpson(a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    let mut s = pdf(a) + pdf(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Mass of Normal(mu, sigma) to the right of `x`, integrated in standard
/// units over [(x - mu) / sigma, 12].
pub fn tail_mass(x: f64, mu: f64, sigma: f64) -> f64 {
    let lo = ((x - mu) / sigma).max(-12.0);
    simpson(lo, 12.0, 20_000)
}

/// (mu, sigma) pairs; the reference action is the first with maximal mu.
pub fn probabilities(params: &[(f64, f64)]) -> Vec<f64> {
    let mut best = 0;
    for (i, p) in params.iter().enumerate() {
        if p.0 > params[best].0 {
            best = i;
        }
    }
    let l = params[best].0 - params[best].1;
    let w: Vec<f64> = params.iter().map(|&(m, s)| tail_mass(l, m, s)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

//! Small deterministic RNG helpers.

use rand::Rng;

/// Standard normal draw via Box-Muller; consumes exactly two uniforms.
pub(crate) fn randn(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniform draw from `[lo, hi]`; degenerate intervals return `lo` without
/// consuming randomness asymmetrically (one uniform is always drawn).
pub(crate) fn uniform_in(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    if hi <= lo {
        lo
    } else {
        lo + u * (hi - lo)
    }
}

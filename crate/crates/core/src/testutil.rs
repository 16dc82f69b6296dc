//! Helpers shared by unit tests across modules.

use rand::Rng;

/// Box-Muller pair of N(0, sigma) draws; keeps the test RNG stream simple
/// and avoids a distribution dev-dependency.
pub(crate) fn gauss_pair<R: Rng>(rng: &mut R, sigma: f64) -> (f64, f64) {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let r = (-2.0 * u1.ln()).sqrt() * sigma;
    let t = 2.0 * core::f64::consts::PI * u2;
    (r * t.cos(), r * t.sin())
}

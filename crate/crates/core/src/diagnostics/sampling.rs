use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operators::sublaplacian_eigenvalue;
use crate::sphere::SpectralField;

/// Independent standard normal coefficients weighted by
/// `(1 + |mu_Delta|)^{-smoothness}`.
pub fn random_field<R: Rng>(rng: &mut R, n: usize, smoothness: f64) -> SpectralField {
    let mut f = SpectralField::zeros(n);
    for (k, m) in f.modes().into_iter().enumerate() {
        let g: f64 = rng.sample(StandardNormal);
        f.coeffs_mut()[k] = g * (1.0 + sublaplacian_eigenvalue(m.p, m.q).abs()).powf(-smoothness);
    }
    f
}

/// As [`random_field`] with the Paneitz-kernel modes removed.
pub fn random_perp_field<R: Rng>(rng: &mut R, n: usize, smoothness: f64) -> SpectralField {
    random_field(rng, n, smoothness).map_modes(|m, c| if m.in_paneitz_kernel() { 0.0 } else { c })
}

/// `count` fields from one seeded stream.
pub fn sample_fields(seed: u64, count: usize, n: usize, smoothness: f64, perp: bool) -> Vec<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| if perp { random_perp_field(&mut rng, n, smoothness) } else { random_field(&mut rng, n, smoothness) })
        .collect()
}

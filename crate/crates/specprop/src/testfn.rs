//! Deterministic test-function factories: Gaussian bumps, seeded
//! band-limited random fields, and compactly supported space-time bumps.

use crate::error::{Error, Result};
use crate::grid::{inverse_transform, Field, Space, SpacetimeField, SpectralGrid, MAX_DIM};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// exp(-|x - center|^2 / (2 width^2)) sampled on the grid.
pub fn gaussian_bump(grid: SpectralGrid, width: f64, center: &[f64]) -> Field {
    let d = grid.dimension();
    let c: Vec<f64> = (0..d).map(|a| center.get(a).copied().unwrap_or(0.0)).collect();
    Field::from_physical_fn(grid, |x| {
        let r2: f64 = x.iter().zip(&c).map(|(&xi, &ci)| (xi - ci) * (xi - ci)).sum();
        Complex64::new((-0.5 * r2 / (width * width)).exp(), 0.0)
    })
}

/// Standard-normal pair via Box-Muller, driven by a seeded generator.
fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}

/// Frequency-space field with independent unit-variance complex Gaussian
/// coefficients on the annulus `lo <= |xi| <= hi`, Hermitian-symmetrized.
pub fn band_limited_random_hat(
    grid: SpectralGrid,
    annulus: (f64, f64),
    seed: u64,
) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    band_limited_random_hat_rng(grid, annulus, &mut rng)
}

/// [`band_limited_random_hat`] driven by a caller-owned generator.
pub fn band_limited_random_hat_rng(
    grid: SpectralGrid,
    annulus: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Result<Field> {
    let (lo, hi) = annulus;
    if !(0.0 < lo && lo < hi) {
        return Err(Error::invalid("annulus must satisfy 0 < lo < hi"));
    }
    if hi >= grid.nyquist() {
        return Err(Error::resolution(format!(
            "annulus top {hi} reaches the Nyquist frequency {}",
            grid.nyquist()
        )));
    }
    let d = grid.dimension();
    let mut hat = Field::zeros(grid, Space::Frequency);
    let mut ax = [0usize; MAX_DIM];
    let mut xi = [0.0; MAX_DIM];
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for idx in 0..grid.total_points() {
        grid.axis_indices(idx, &mut ax);
        grid.xi_at(idx, &mut xi);
        let r: f64 = xi[..d].iter().map(|&x| x * x).sum::<f64>().sqrt();
        if r < lo || r > hi {
            continue;
        }
        // draw once per conjugate pair, at the lexicographically positive member
        let signed: Vec<i64> = ax[..d].iter().map(|&j| grid.signed_index(j)).collect();
        let first_nonzero = signed.iter().find(|&&k| k != 0).copied().unwrap_or(0);
        if first_nonzero <= 0 {
            continue;
        }
        let (g1, g2) = normal_pair(rng);
        let c = Complex64::new(g1 * inv_sqrt2, g2 * inv_sqrt2);
        hat.values_mut()[idx] = c;
        let mut mirror = 0usize;
        let n = grid.points_per_axis();
        for &k in &signed {
            mirror = mirror * n + grid.storage_index(-k);
        }
        hat.values_mut()[mirror] = c.conj();
    }
    Ok(hat)
}

/// Physical-space real field built from [`band_limited_random_hat`].
pub fn band_limited_random(grid: SpectralGrid, annulus: (f64, f64), seed: u64) -> Result<Field> {
    let hat = band_limited_random_hat(grid, annulus, seed)?;
    let mut f = inverse_transform(&hat)?;
    for v in f.values_mut() {
        *v = Complex64::new(v.re, 0.0);
    }
    Ok(f)
}

/// Smooth bump on (0, 1): exp(4 - 1/(u(1-u))), identically 0 outside, peak 1.
pub fn unit_time_bump(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        (4.0 - 1.0 / (u * (1.0 - u))).exp()
    }
}

/// Smooth radial bump supported on r < 1 with peak 1.
pub fn unit_space_bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// Parameters of a compactly supported space-time bump test function.
#[derive(Debug, Clone)]
pub struct BumpSpec {
    /// Support (t0, t1) strictly inside (0, t_end).
    pub t_support: (f64, f64),
    /// Spatial support radius; the bump vanishes at |x - center| >= radius.
    pub x_radius: f64,
    pub x_center: Vec<f64>,
    pub amplitude: f64,
}

/// phi(t, x) = amplitude * bump_t(t) * bump_x(x), compactly supported in
/// (0, t_end) x grid interior; samples at t = 0 and t = t_end are exactly 0.
pub fn compact_bump_spacetime(
    grid: SpectralGrid,
    t_end: f64,
    steps: usize,
    spec: &BumpSpec,
) -> Result<SpacetimeField> {
    let (t0, t1) = spec.t_support;
    if !(0.0 < t0 && t0 < t1 && t1 < t_end) {
        return Err(Error::precondition(format!(
            "bump time support ({t0}, {t1}) must lie strictly inside (0, {t_end})"
        )));
    }
    let d = grid.dimension();
    let l = grid.half_width();
    for a in 0..d {
        let c = spec.x_center.get(a).copied().unwrap_or(0.0);
        if c.abs() + spec.x_radius > 0.95 * l {
            return Err(Error::precondition(
                "bump spatial support reaches the domain boundary",
            ));
        }
    }
    let c: Vec<f64> = (0..d).map(|a| spec.x_center.get(a).copied().unwrap_or(0.0)).collect();
    SpacetimeField::from_fn(grid, t_end, steps, |t, x| {
        let u = (t - t0) / (t1 - t0);
        let w = unit_time_bump(u);
        if w == 0.0 {
            return Complex64::default();
        }
        let r: f64 = x
            .iter()
            .zip(&c)
            .map(|(&xi, &ci)| (xi - ci) * (xi - ci))
            .sum::<f64>()
            .sqrt()
            / spec.x_radius;
        Complex64::new(spec.amplitude * w * unit_space_bump(r), 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_tail_is_negligible_at_the_boundary() {
        let g = SpectralGrid::new(1, 256, 16.0).unwrap();
        let f = gaussian_bump(g, 1.0, &[0.0]);
        let boundary = f.values()[0].norm(); // x = -16
        assert!(boundary < 1e-20);
    }

    #[test]
    fn band_limited_random_is_deterministic_and_real() {
        let g = SpectralGrid::new(1, 256, 16.0).unwrap();
        let a = band_limited_random(g, (2.0, 4.0), 7).unwrap();
        let b = band_limited_random(g, (2.0, 4.0), 7).unwrap();
        assert_eq!(a.values(), b.values());
        let c = band_limited_random(g, (2.0, 4.0), 8).unwrap();
        assert_ne!(a.values(), c.values());
        assert!(a.values().iter().all(|v| v.im == 0.0));
        assert!(a.sup_norm() > 0.0);
    }

    #[test]
    fn band_limited_random_2d_spectrum_stays_in_annulus() {
        let g = SpectralGrid::new(2, 32, 8.0).unwrap();
        let hat = band_limited_random_hat(g, (1.0, 3.0), 3).unwrap();
        let mut xi = [0.0; MAX_DIM];
        for idx in 0..g.total_points() {
            g.xi_at(idx, &mut xi);
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            if hat.values()[idx].norm() > 0.0 {
                assert!((1.0..=3.0).contains(&r));
            }
        }
    }

    #[test]
    fn band_above_nyquist_is_rejected() {
        let g = SpectralGrid::new(1, 64, 16.0).unwrap();
        assert!(matches!(
            band_limited_random(g, (2.0, 100.0), 1),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn compact_bump_vanishes_at_the_time_endpoints() {
        let g = SpectralGrid::new(1, 64, 16.0).unwrap();
        let spec = BumpSpec {
            t_support: (0.25, 0.75),
            x_radius: 4.0,
            x_center: vec![0.0],
            amplitude: 1.0,
        };
        let phi = compact_bump_spacetime(g, 1.0, 16, &spec).unwrap();
        assert!(phi.field(0).values().iter().all(|v| v.norm() == 0.0));
        assert!(phi.field(16).values().iter().all(|v| v.norm() == 0.0));
        assert!(phi.field(8).sup_norm() > 0.5);
    }

    #[test]
    fn bump_touching_t_zero_is_rejected() {
        let g = SpectralGrid::new(1, 64, 16.0).unwrap();
        let spec = BumpSpec {
            t_support: (0.0, 0.5),
            x_radius: 4.0,
            x_center: vec![0.0],
            amplitude: 1.0,
        };
        assert!(matches!(
            compact_bump_spacetime(g, 1.0, 16, &spec),
            Err(Error::Precondition(_))
        ));
    }
}

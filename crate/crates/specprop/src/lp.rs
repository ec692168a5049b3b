//! Littlewood-Paley bank and function-space norms.
//!
//! The bank holds a radial bump eta (1 on |xi| <= 1, 0 on |xi| >= 2) and the
//! dyadic pieces delta_n(xi) = eta(2^{-n} xi) - eta(2^{-n+1} xi); S_0 and
//! Delta_n act by frequency multiplication. Lipschitz norms come in two
//! independent routes: the band characterization sup_n 2^{nm} ||Delta_n f||_inf
//! and the iterated-difference definition sup |D_h^{floor(m)+1} f| / |h|^m.

use crate::error::{Error, Result};
use crate::grid::{forward_transform, inverse_transform, to_physical, Field, Space, SpectralGrid, MAX_DIM};
use num_complex::Complex64;

/// Smooth glue s(r) = exp(-1/r) on r > 0, extended by 0.
fn glue(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        (-1.0 / r).exp()
    }
}

/// The radial bump: exactly 1 on r <= 1 and exactly 0 on r >= 2.
pub fn eta_profile(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let a = glue(2.0 - r);
        a / (a + glue(r - 1.0))
    }
}

/// delta_n(r) = eta(2^{-n} r) - eta(2^{-n+1} r); support in (2^{n-1}, 2^{n+1}).
pub fn delta_profile(n: i32, r: f64) -> f64 {
    eta_profile(2f64.powi(-n) * r) - eta_profile(2f64.powi(-n + 1) * r)
}

/// Smooth cutoff equal to 1 on [1/2, 2] and supported in [1/4, 4], built
/// from the same glue; used for band-kernel experiments.
pub fn zeta_profile(r: f64) -> f64 {
    let up = if r <= 0.25 {
        0.0
    } else if r >= 0.5 {
        1.0
    } else {
        let a = glue((r - 0.25) * 4.0);
        a / (a + glue((0.5 - r) * 4.0))
    };
    let down = if r <= 2.0 {
        1.0
    } else if r >= 4.0 {
        0.0
    } else {
        let a = glue((4.0 - r) * 0.5);
        a / (a + glue((r - 2.0) * 0.5))
    };
    up * down
}

/// Precomputed eta and delta_n samples on one grid's frequency lattice.
#[derive(Debug, Clone)]
pub struct LpBank {
    grid: SpectralGrid,
    n_min: i32,
    n_max: i32,
    radii: Vec<f64>,
    eta: Vec<f64>,
    /// deltas[i] holds delta_{n_min + i}.
    deltas: Vec<Vec<f64>>,
}

impl LpBank {
    /// Build the bank with bands up to `n_max`; fails when the top band
    /// support 2^{n_max+1} reaches the Nyquist frequency.
    pub fn build(grid: SpectralGrid, n_max: i32) -> Result<Self> {
        if 2f64.powi(n_max + 1) >= grid.nyquist() {
            return Err(Error::resolution(format!(
                "band {n_max} needs frequencies up to {} but Nyquist is {}",
                2f64.powi(n_max + 1),
                grid.nyquist()
            )));
        }
        let d = grid.dimension();
        let mut radii = vec![0.0; grid.total_points()];
        let mut xi = [0.0; MAX_DIM];
        for idx in 0..grid.total_points() {
            grid.xi_at(idx, &mut xi);
            radii[idx] = xi[..d].iter().map(|&x| x * x).sum::<f64>().sqrt();
        }
        let eta = radii.iter().map(|&r| eta_profile(r)).collect();
        // lowest band that still touches the lattice
        let min_r = radii.iter().cloned().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
        let n_floor = (min_r.log2() - 1.0).floor() as i32;
        let mut n_min = n_max;
        let mut deltas_rev: Vec<Vec<f64>> = Vec::new();
        for n in (n_floor..=n_max).rev() {
            let band: Vec<f64> = radii.iter().map(|&r| delta_profile(n, r)).collect();
            if band.iter().all(|&v| v == 0.0) {
                break;
            }
            n_min = n;
            deltas_rev.push(band);
        }
        deltas_rev.reverse();
        Ok(LpBank { grid, n_min, n_max, radii, eta, deltas: deltas_rev })
    }

    pub fn grid(&self) -> SpectralGrid {
        self.grid
    }
    pub fn n_min(&self) -> i32 {
        self.n_min
    }
    pub fn n_max(&self) -> i32 {
        self.n_max
    }
    pub fn bands(&self) -> impl Iterator<Item = i32> {
        self.n_min..=self.n_max
    }

    pub fn delta_samples(&self, n: i32) -> Result<&[f64]> {
        if n < self.n_min || n > self.n_max {
            return Err(Error::invalid(format!(
                "band {n} outside the bank range [{}, {}]",
                self.n_min, self.n_max
            )));
        }
        Ok(&self.deltas[(n - self.n_min) as usize])
    }

    pub fn eta_samples(&self) -> &[f64] {
        &self.eta
    }

    /// max |eta + sum_{n=1..n_max} delta_n - 1| over lattice |xi| <= 2^{n_max - 1}.
    pub fn partition_defect(&self) -> f64 {
        let cover = 2f64.powi(self.n_max - 1);
        let mut worst = 0.0f64;
        for idx in 0..self.radii.len() {
            if self.radii[idx] > cover {
                continue;
            }
            let mut s = self.eta[idx];
            for n in 1..=self.n_max {
                if n >= self.n_min {
                    s += self.deltas[(n - self.n_min) as usize][idx];
                }
            }
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }
}

fn multiply_samples(bank: &LpBank, samples: &[f64], f: &Field) -> Result<Field> {
    if f.grid() != bank.grid {
        return Err(Error::invalid("field and bank grids differ"));
    }
    match f.space() {
        Space::Frequency => {
            let mut out = f.clone();
            for (v, &w) in out.values_mut().iter_mut().zip(samples) {
                *v *= w;
            }
            Ok(out)
        }
        Space::Physical => {
            let mut hat = forward_transform(f)?;
            for (v, &w) in hat.values_mut().iter_mut().zip(samples) {
                *v *= w;
            }
            inverse_transform(&hat)
        }
    }
}

/// S_0 f: frequency multiplication by eta. Output space matches input space.
pub fn apply_s0(bank: &LpBank, f: &Field) -> Result<Field> {
    multiply_samples(bank, &bank.eta.clone(), f)
}

/// Delta_n f: frequency multiplication by delta_n. Output space matches input.
pub fn apply_delta_n(bank: &LpBank, n: i32, f: &Field) -> Result<Field> {
    let samples = bank.delta_samples(n)?.to_vec();
    multiply_samples(bank, &samples, f)
}

/// Homogeneous (all bands) or inhomogeneous (||S_0 f||_inf + bands n >= 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormVariant {
    Homogeneous,
    Inhomogeneous,
}

/// Band route for the Lipschitz norm; returns the norm and the per-band
/// table (n, 2^{nm} ||Delta_n f||_inf) over the bank's representable range.
pub fn lipschitz_norm_lp(
    bank: &LpBank,
    f: &Field,
    m: f64,
    variant: NormVariant,
) -> Result<(f64, Vec<(i32, f64)>)> {
    if !(m > 0.0) {
        return Err(Error::invalid("order m must be positive"));
    }
    let hat = crate::grid::to_frequency(f)?;
    let mut table = Vec::new();
    let mut sup_all = 0.0f64;
    let mut sup_pos = 0.0f64;
    for n in bank.bands() {
        let piece = apply_delta_n(bank, n, &hat)?;
        let v = inverse_transform(&piece)?.sup_norm() * 2f64.powi(n).powf(m);
        table.push((n, v));
        sup_all = sup_all.max(v);
        if n >= 1 {
            sup_pos = sup_pos.max(v);
        }
    }
    let norm = match variant {
        NormVariant::Homogeneous => sup_all,
        NormVariant::Inhomogeneous => {
            let s0 = inverse_transform(&apply_s0(bank, &hat)?)?.sup_norm();
            s0 + sup_pos
        }
    };
    Ok((norm, table))
}

/// Sampled difference steps and directions for the finite-difference route.
/// Steps are integer lattice multiples, so every shift is an exact periodic
/// rotation of the samples.
#[derive(Debug, Clone)]
pub struct DiffPlan {
    steps: Vec<usize>,
    directions: Vec<Vec<i64>>,
}

impl DiffPlan {
    /// Dyadic magnitudes L/4, L/8, ..., down to the spacing.
    pub fn dyadic(grid: SpectralGrid) -> Self {
        let mut steps = Vec::new();
        let mut k = grid.points_per_axis() / 8;
        while k >= 1 {
            steps.push(k);
            k /= 2;
        }
        DiffPlan { steps, directions: Self::default_directions(grid.dimension()) }
    }

    /// Every lattice multiple in [spacing, L/4], strided to at most 512 steps.
    pub fn dense(grid: SpectralGrid) -> Self {
        let top = grid.points_per_axis() / 8;
        let stride = (top / 512).max(1);
        let steps = (1..=top).step_by(stride).collect();
        DiffPlan { steps, directions: Self::default_directions(grid.dimension()) }
    }

    fn default_directions(d: usize) -> Vec<Vec<i64>> {
        let mut dirs: Vec<Vec<i64>> = Vec::new();
        for axis in 0..d {
            let mut v = vec![0i64; d];
            v[axis] = 1;
            dirs.push(v);
        }
        // pairwise diagonals widen the sampled h set beyond the axes
        for i in 0..d {
            for j in i + 1..d {
                for sign in [1i64, -1] {
                    let mut v = vec![0i64; d];
                    v[i] = 1;
                    v[j] = sign;
                    dirs.push(v);
                }
            }
        }
        dirs
    }

    fn validate(&self, grid: SpectralGrid) -> Result<()> {
        if self.steps.is_empty() || self.directions.is_empty() {
            return Err(Error::invalid("difference plan must be nonempty"));
        }
        if self.steps.iter().any(|&k| k == 0) {
            return Err(Error::invalid("difference magnitude below the grid spacing"));
        }
        if self.steps.iter().any(|&k| k > grid.points_per_axis() / 4) {
            return Err(Error::invalid("difference magnitude above L/4"));
        }
        Ok(())
    }
}

/// Iterated-difference route: sampled sup of |D_h^{floor(m)+1} f| / |h|^m.
/// A lower bound for the continuum supremum.
pub fn lipschitz_norm_fd(f: &Field, m: f64, plan: &DiffPlan) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::invalid("order m must be positive"));
    }
    let order = m.floor() as usize + 1;
    difference_sup(f, order, m, plan)
}

/// sup over sampled (x, h) of |D_h^order f(x)| / |h|^exponent.
fn difference_sup(f: &Field, order: usize, exponent: f64, plan: &DiffPlan) -> Result<f64> {
    let phys = to_physical(f)?;
    let grid = phys.grid();
    plan.validate(grid)?;
    let d = grid.dimension();
    let n = grid.points_per_axis();
    let vals = phys.values();
    // binomial weights of the iterated difference
    let mut binom = vec![1i64];
    for _ in 0..order {
        let mut next = vec![1i64; binom.len() + 1];
        for i in 1..binom.len() {
            next[i] = binom[i - 1] + binom[i];
        }
        binom = next;
    }
    let signs: Vec<f64> = (0..=order)
        .map(|i| if (order - i) % 2 == 0 { binom[i] as f64 } else { -(binom[i] as f64) })
        .collect();
    let mut ax = [0usize; MAX_DIM];
    let mut worst = 0.0f64;
    for dir in &plan.directions {
        let dir_len: f64 = dir.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
        for &k in &plan.steps {
            let h = k as f64 * grid.spacing() * dir_len;
            let scale = h.powf(-exponent);
            let mut local = 0.0f64;
            for idx in 0..grid.total_points() {
                grid.axis_indices(idx, &mut ax);
                let mut acc = Complex64::default();
                for (i, &w) in signs.iter().enumerate() {
                    let mut shifted = 0usize;
                    for axis in 0..d {
                        let step = dir[axis] * (i * k) as i64;
                        let j = (ax[axis] as i64 + step).rem_euclid(n as i64) as usize;
                        shifted = shifted * n + j;
                    }
                    acc += vals[shifted] * w;
                }
                local = local.max(acc.norm());
            }
            worst = worst.max(local * scale);
        }
    }
    Ok(worst)
}

/// All multi-indices of total order `n` in `d` variables.
pub(crate) fn compositions(d: usize, n: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(d - 1, n - first) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

/// Spectral derivative D^beta f via the (i xi)^beta multiplier.
pub fn spectral_derivative(f: &Field, beta: &[usize]) -> Result<Field> {
    let grid = f.grid();
    if beta.len() != grid.dimension() {
        return Err(Error::invalid("beta length must equal the dimension"));
    }
    let mut hat = crate::grid::to_frequency(f)?;
    let mut xi = [0.0; MAX_DIM];
    for idx in 0..grid.total_points() {
        grid.xi_at(idx, &mut xi);
        let mut factor = Complex64::new(1.0, 0.0);
        for (axis, &b) in beta.iter().enumerate() {
            if b > 0 {
                factor *= Complex64::new(0.0, xi[axis]).powu(b as u32);
            }
        }
        hat.values_mut()[idx] *= factor;
    }
    inverse_transform(&hat)
}

/// Classical Holder norm ||f||_inf + sum_{|beta|=n} sup |D_h D^beta f| / |h|^alpha,
/// with D^beta computed spectrally and first differences over the plan.
pub fn holder_norm(f: &Field, n: usize, alpha: f64, plan: &DiffPlan) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1)"));
    }
    if n > 0 {
        check_derivative_resolvable(f, n)?;
    }
    let phys = to_physical(f)?;
    let mut total = phys.sup_norm();
    for beta in compositions(phys.grid().dimension(), n) {
        let df = if n == 0 { phys.clone() } else { spectral_derivative(&phys, &beta)? };
        total += difference_sup(&df, 1, alpha, plan)?;
        if n == 0 {
            break; // the single empty derivative
        }
    }
    Ok(total)
}

/// Spectral differentiation amplifies the top bands by |xi|^n; refuse fields
/// whose weighted mass there is not negligible.
fn check_derivative_resolvable(f: &Field, n: usize) -> Result<()> {
    let hat = crate::grid::to_frequency(f)?;
    let grid = hat.grid();
    let d = grid.dimension();
    let cut = 0.5 * grid.nyquist();
    let mut xi = [0.0; MAX_DIM];
    let mut total = 0.0;
    let mut tail = 0.0;
    for idx in 0..grid.total_points() {
        grid.xi_at(idx, &mut xi);
        let r: f64 = xi[..d].iter().map(|&x| x * x).sum::<f64>().sqrt();
        let w = hat.values()[idx].norm() * r.powi(n as i32);
        total += w;
        if r > cut {
            tail += w;
        }
    }
    if total > 0.0 && tail / total > 1e-6 {
        return Err(Error::resolution(format!(
            "order-{n} spectral derivative amplifies unresolved bands (tail fraction {:.2e})",
            tail / total
        )));
    }
    Ok(())
}

/// Exponent for time-direction norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeExponent {
    Finite(f64),
    Infinity,
}

impl TimeExponent {
    pub fn parse(text: &str) -> Result<Self> {
        if text == "inf" || text == "infinity" {
            return Ok(TimeExponent::Infinity);
        }
        let p: f64 = text
            .parse()
            .map_err(|_| Error::invalid(format!("cannot parse exponent '{text}'")))?;
        Ok(TimeExponent::Finite(p))
    }
}

/// (int v(t)^p dt)^{1/p} by composite trapezoid on a uniform grid, or the
/// sample maximum for p = infinity.
pub fn lp_time_norm(values: &[f64], dt: f64, p: TimeExponent) -> Result<f64> {
    if values.len() < 2 || !(dt > 0.0) {
        return Err(Error::invalid("time norm needs >= 2 samples and dt > 0"));
    }
    if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid("time norm values must be nonnegative and finite"));
    }
    match p {
        TimeExponent::Infinity => Ok(values.iter().cloned().fold(0.0, f64::max)),
        TimeExponent::Finite(p) => {
            if !(p > 1.0) {
                return Err(Error::invalid("exponent p must exceed 1"));
            }
            let mut acc = 0.0;
            for (i, &v) in values.iter().enumerate() {
                let w = if i == 0 || i == values.len() - 1 { 0.5 } else { 1.0 };
                acc += w * v.powf(p);
            }
            Ok((acc * dt).powf(1.0 / p))
        }
    }
}

/// Aggregate norm report for one field.
#[derive(Debug, Clone)]
pub struct NormReport {
    pub l_inf: f64,
    pub lambda_hom: f64,
    pub lambda_inhom: f64,
    pub lambda_fd: f64,
    pub holder: Option<f64>,
    /// (n, 2^{nm} ||Delta_n f||_inf) for every representable band.
    pub bands: Vec<(i32, f64)>,
}

/// Compute every norm of one field at order `m` (plus an optional Holder
/// norm at (n, alpha)) through both routes.
pub fn norm_report(
    bank: &LpBank,
    f: &Field,
    m: f64,
    holder: Option<(usize, f64)>,
    plan: &DiffPlan,
) -> Result<NormReport> {
    let phys = to_physical(f)?;
    let (lambda_hom, bands) = lipschitz_norm_lp(bank, &phys, m, NormVariant::Homogeneous)?;
    let (lambda_inhom, _) = lipschitz_norm_lp(bank, &phys, m, NormVariant::Inhomogeneous)?;
    let lambda_fd = lipschitz_norm_fd(&phys, m, plan)?;
    let holder = match holder {
        Some((n, alpha)) => Some(holder_norm(&phys, n, alpha, plan)?),
        None => None,
    };
    Ok(NormReport { l_inf: phys.sup_norm(), lambda_hom, lambda_inhom, lambda_fd, holder, bands })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::to_frequency;

    const PI: f64 = std::f64::consts::PI;

    fn trig_grid() -> SpectralGrid {
        // half_width a multiple of pi so that integer frequencies are exact
        SpectralGrid::new(1, 4096, 8.0 * PI).unwrap()
    }

    fn cosine(grid: SpectralGrid, freq: f64) -> Field {
        Field::from_physical_fn(grid, |x| Complex64::new((freq * x[0]).cos(), 0.0))
    }

    #[test]
    fn bump_profile_branch_values() {
        assert_eq!(eta_profile(0.5), 1.0);
        assert_eq!(eta_profile(3.0), 0.0);
        assert_eq!(delta_profile(3, 8.0), 1.0); // eta(1) - eta(2)
        assert!(eta_profile(1.5) > 0.0 && eta_profile(1.5) < 1.0);
        assert_eq!(zeta_profile(1.0), 1.0);
        assert_eq!(zeta_profile(0.2), 0.0);
        assert_eq!(zeta_profile(5.0), 0.0);
    }

    #[test]
    fn partition_of_unity_is_exact_on_the_covered_band() {
        let bank = LpBank::build(trig_grid(), 6).unwrap();
        assert!(bank.partition_defect() < 1e-12);
    }

    #[test]
    fn band_exceeding_nyquist_is_rejected() {
        let g = SpectralGrid::new(1, 64, 16.0).unwrap(); // nyquist ~ 6.3
        assert!(matches!(LpBank::build(g, 3), Err(Error::Resolution(_))));
    }

    #[test]
    fn single_annulus_mode_is_reproduced_exactly() {
        let g = trig_grid();
        let bank = LpBank::build(g, 6).unwrap();
        let f = cosine(g, 8.0); // 2^3
        let projected = apply_delta_n(&bank, 3, &f).unwrap();
        let diff = projected
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert!(apply_delta_n(&bank, 4, &f).unwrap().sup_norm() < 1e-12);
        assert!(apply_delta_n(&bank, 2, &f).unwrap().sup_norm() < 1e-12);
        assert!(apply_s0(&bank, &f).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn constant_field_is_pure_low_frequency() {
        let g = trig_grid();
        let bank = LpBank::build(g, 6).unwrap();
        let f = Field::from_physical_fn(g, |_| Complex64::new(2.5, 0.0));
        let s0 = apply_s0(&bank, &f).unwrap();
        let diff = s0
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
        for n in 1..=6 {
            assert!(apply_delta_n(&bank, n, &f).unwrap().sup_norm() < 1e-12);
        }
    }

    #[test]
    fn telescoping_reconstructs_band_limited_fields() {
        let g = trig_grid();
        let bank = LpBank::build(g, 6).unwrap();
        let f = crate::testfn::band_limited_random(g, (2.0, 16.0), 11).unwrap();
        let mut acc = apply_s0(&bank, &f).unwrap();
        for n in 1..=6 {
            let piece = apply_delta_n(&bank, n, &f).unwrap();
            for (a, b) in acc.values_mut().iter_mut().zip(piece.values()) {
                *a += b;
            }
        }
        let worst = acc
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10 * f.sup_norm().max(1.0));
    }

    #[test]
    fn composed_distant_bands_vanish_exactly() {
        let g = trig_grid();
        let bank = LpBank::build(g, 6).unwrap();
        let f = crate::testfn::band_limited_random(g, (2.0, 16.0), 5).unwrap();
        let hat = to_frequency(&f).unwrap();
        let first = apply_delta_n(&bank, 4, &hat).unwrap();
        let second = apply_delta_n(&bank, 2, &first).unwrap();
        assert!(second.values().iter().all(|v| v.norm() == 0.0));
        // pointwise product of the window samples is identically zero
        let d2 = bank.delta_samples(2).unwrap();
        let d4 = bank.delta_samples(4).unwrap();
        assert!(d2.iter().zip(d4).all(|(a, b)| a * b == 0.0));
    }

    #[test]
    fn band_route_matches_single_annulus_values() {
        let g = trig_grid();
        let bank = LpBank::build(g, 6).unwrap();
        let f = cosine(g, 8.0);
        let (norm, table) = lipschitz_norm_lp(&bank, &f, 1.0, NormVariant::Homogeneous).unwrap();
        assert!((norm - 8.0).abs() < 1e-6, "norm = {norm}");
        let v3 = table.iter().find(|&&(n, _)| n == 3).unwrap().1;
        assert!((v3 - 8.0).abs() < 1e-6);
        let zero = Field::zeros(g, Space::Physical);
        assert_eq!(lipschitz_norm_lp(&bank, &zero, 1.0, NormVariant::Homogeneous).unwrap().0, 0.0);
    }

    #[test]
    fn band_route_takes_the_sup_over_disjoint_annuli() {
        let g = trig_grid();
        let bank = LpBank::build(g, 6).unwrap();
        let f = Field::from_physical_fn(g, |x| {
            Complex64::new((4.0 * x[0]).cos() + (32.0 * x[0]).cos(), 0.0)
        });
        let (norm, _) = lipschitz_norm_lp(&bank, &f, 0.5, NormVariant::Homogeneous).unwrap();
        assert!((norm - 2f64.powf(2.5)).abs() < 1e-6, "norm = {norm}");
    }

    /// Dense scan of sup_h |D_h^order sin|(peak) / h^m with closed-form
    /// x-suprema; the independent oracle for the difference route.
    fn sine_difference_oracle(order: usize, m: f64) -> f64 {
        let mut best = 0.0f64;
        let mut h = 1e-4f64;
        while h < 8.0 {
            // |D_h^k sin| has x-sup (2 sin(h/2))^k
            let v = (2.0 * (h / 2.0).sin()).abs().powi(order as i32) / h.powf(m);
            best = best.max(v);
            h += 1e-4;
        }
        best
    }

    #[test]
    fn difference_route_meets_the_sine_oracle() {
        let g = trig_grid();
        let f = Field::from_physical_fn(g, |x| Complex64::new(x[0].sin(), 0.0));
        let oracle_m1 = sine_difference_oracle(2, 1.0);
        assert!((oracle_m1 - 1.449146).abs() < 1e-4, "oracle {oracle_m1}");
        let plan = DiffPlan::dense(g);
        let fd = lipschitz_norm_fd(&f, 1.0, &plan).unwrap();
        assert!((fd - oracle_m1).abs() < 2e-3, "fd {fd} oracle {oracle_m1}");
        let oracle_half = sine_difference_oracle(1, 0.5);
        assert!((oracle_half - 1.203800).abs() < 1e-4, "oracle {oracle_half}");
        let fd = lipschitz_norm_fd(&f, 0.5, &plan).unwrap();
        assert!((fd - oracle_half).abs() < 2e-3);
        let zero = Field::from_physical_fn(g, |_| Complex64::new(3.0, 0.0));
        assert_eq!(lipschitz_norm_fd(&zero, 1.0, &plan).unwrap(), 0.0);
    }

    #[test]
    fn difference_magnitude_below_spacing_is_rejected() {
        let g = trig_grid();
        let f = cosine(g, 1.0);
        let plan = DiffPlan { steps: vec![0], directions: vec![vec![1]] };
        assert!(lipschitz_norm_fd(&f, 1.0, &plan).is_err());
    }

    #[test]
    fn holder_norm_matches_the_difference_route() {
        let g = trig_grid();
        let f = Field::from_physical_fn(g, |x| Complex64::new(x[0].sin(), 0.0));
        let plan = DiffPlan::dense(g);
        let h = holder_norm(&f, 0, 0.5, &plan).unwrap();
        let oracle = 1.0 + sine_difference_oracle(1, 0.5);
        assert!((h - oracle).abs() < 2e-3, "holder {h} oracle {oracle}");
        let c = Field::from_physical_fn(g, |_| Complex64::new(-2.0, 0.0));
        assert!((holder_norm(&c, 0, 0.5, &plan).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn holder_seminorm_scales_with_the_annulus() {
        let g = trig_grid();
        let plan = DiffPlan::dense(g);
        let hi = cosine(g, 32.0);
        let lo = cosine(g, 1.0);
        let semi_hi = holder_norm(&hi, 1, 0.5, &plan).unwrap() - 1.0;
        let semi_lo = holder_norm(&lo, 0, 0.5, &plan).unwrap() - 1.0;
        let ratio = semi_hi / semi_lo;
        let want = 32f64.powf(1.5);
        assert!((ratio - want).abs() / want < 0.01, "ratio {ratio} want {want}");
    }

    #[test]
    fn time_norm_closed_forms() {
        let v = vec![2.0; 101];
        let dt = 0.02; // T = 2
        let got = lp_time_norm(&v, dt, TimeExponent::Finite(4.0)).unwrap();
        assert!((got - 2.0 * 2f64.powf(0.25)).abs() < 1e-12);
        assert_eq!(lp_time_norm(&v, dt, TimeExponent::Infinity).unwrap(), 2.0);
        let ramp: Vec<f64> = (0..=256).map(|k| k as f64 / 256.0).collect();
        let got = lp_time_norm(&ramp, 1.0 / 256.0, TimeExponent::Finite(2.0)).unwrap();
        assert!((got - 3f64.powf(-0.5)).abs() < 1e-4);
        assert!(lp_time_norm(&ramp, 1.0 / 256.0, TimeExponent::Finite(1.0)).is_err());
    }

    #[test]
    fn norm_report_is_internally_consistent() {
        let g = trig_grid();
        let bank = LpBank::build(g, 6).unwrap();
        let f = crate::testfn::band_limited_random(g, (2.0, 16.0), 3).unwrap();
        let plan = DiffPlan::dyadic(g);
        let rep = norm_report(&bank, &f, 1.0, Some((0, 0.5)), &plan).unwrap();
        assert!(rep.lambda_inhom >= rep.l_inf.max(0.0));
        assert!(rep.bands.iter().all(|&(_, v)| v >= 0.0));
        assert!(rep.lambda_fd > 0.0 && rep.lambda_hom > 0.0);
        assert!(rep.holder.unwrap() >= rep.l_inf);
    }
}

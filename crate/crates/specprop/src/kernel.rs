//! Propagator multiplier E(s,t,xi) = exp(int_s^t psi(r,xi) dr) and the two
//! kernel families built from it:
//!
//!   p_{alpha,a,b}(s,t,x) = F^{-1}[ D^alpha_xi ( psi(t,xi)^a |xi|^b E(s,t,xi) ) ](x)
//!   q_{alpha,a,b}(s,t,x) = same with xi replaced by (t-s)^{-1/gamma} xi inside
//!                          psi and E, and psi^a carrying a (t-s)^a factor,
//!
//! with L1/L2/weighted-L2 norm estimators and power-law decay fits.

use crate::error::{Error, Result};
use crate::grid::{inverse_transform, Field, Space, SpectralGrid, MAX_DIM};
use crate::symbol::SymbolSpec;
use num_complex::Complex64;

/// Which kernel of the family an operation should build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    P,
    Q,
}

/// Parameters of one kernel evaluation.
#[derive(Debug, Clone)]
pub struct KernelRequest {
    /// Multi-index with |alpha| <= d0; one entry per dimension.
    pub alpha: Vec<usize>,
    pub a: u32,
    pub b: f64,
    pub s: f64,
    pub t: f64,
}

impl KernelRequest {
    pub fn plain(a: u32, b: f64, s: f64, t: f64, dimension: usize) -> Self {
        KernelRequest { alpha: vec![0; dimension], a, b, s, t }
    }

    pub fn order(&self) -> usize {
        self.alpha.iter().sum()
    }

    fn validate(&self, spec: &SymbolSpec) -> Result<()> {
        if self.alpha.len() != spec.dimension() {
            return Err(Error::invalid("alpha length must equal the dimension"));
        }
        if self.order() > spec.d0() {
            return Err(Error::invalid(format!(
                "|alpha| = {} exceeds d0 = {}",
                self.order(),
                spec.d0()
            )));
        }
        if !(self.s < self.t) {
            return Err(Error::invalid("kernel request needs s < t"));
        }
        Ok(())
    }
}

/// |xi|^b with the removable-singularity convention at xi = 0.
fn radial_power(r: f64, b: f64) -> f64 {
    if r == 0.0 {
        if b == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        r.powf(b)
    }
}

/// psi(t,xi)^a |xi|^b exp(int_s^t psi) at one frequency.
pub fn eval_p_multiplier(
    spec: &SymbolSpec,
    a: u32,
    b: f64,
    s: f64,
    t: f64,
    xi: &[f64],
) -> Result<Complex64> {
    let r = xi.iter().map(|&x| x * x).sum::<f64>().sqrt();
    let w = radial_power(r, b);
    if w == 0.0 {
        return Ok(Complex64::default());
    }
    let mut out = spec.integrate(s, t, xi)?.exp() * w;
    if a > 0 {
        out *= spec.eval(t, xi)?.powu(a);
    }
    Ok(out)
}

/// The self-similar variant: ((t-s) psi(t, c xi))^a |xi|^b exp(int_s^t psi(r, c xi) dr)
/// with c = (t-s)^{-1/gamma}.
pub fn eval_q_multiplier(
    spec: &SymbolSpec,
    a: u32,
    b: f64,
    s: f64,
    t: f64,
    xi: &[f64],
) -> Result<Complex64> {
    let r = xi.iter().map(|&x| x * x).sum::<f64>().sqrt();
    let w = radial_power(r, b);
    if w == 0.0 {
        return Ok(Complex64::default());
    }
    let gap = t - s;
    let c = gap.powf(-1.0 / spec.gamma());
    let scaled: Vec<f64> = xi.iter().map(|&x| c * x).collect();
    let mut out = spec.integrate(s, t, &scaled)?.exp() * w;
    if a > 0 {
        out *= (spec.eval(t, &scaled)? * gap).powu(a);
    }
    Ok(out)
}

/// E(s,t,.) on the frequency lattice; E(s,s,.) = 1 and |E| <= e^{-nu (t-s)|xi|^gamma}.
pub fn propagator(spec: &SymbolSpec, s: f64, t: f64, grid: SpectralGrid) -> Result<Field> {
    if s > t {
        return Err(Error::invalid("propagator needs s <= t"));
    }
    if grid.dimension() != spec.dimension() {
        return Err(Error::invalid("grid and symbol dimensions differ"));
    }
    let mut out = Field::zeros(grid, Space::Frequency);
    let mut xi = [0.0; MAX_DIM];
    for idx in 0..grid.total_points() {
        grid.xi_at(idx, &mut xi);
        out.values_mut()[idx] = spec.integrate(s, t, &xi[..grid.dimension()])?.exp();
    }
    Ok(out)
}

fn multiplier_field(
    spec: &SymbolSpec,
    req: &KernelRequest,
    grid: SpectralGrid,
    family: Family,
) -> Result<Field> {
    let mut out = Field::zeros(grid, Space::Frequency);
    let mut xi = [0.0; MAX_DIM];
    for idx in 0..grid.total_points() {
        grid.xi_at(idx, &mut xi);
        let v = match family {
            Family::P => {
                eval_p_multiplier(spec, req.a, req.b, req.s, req.t, &xi[..grid.dimension()])?
            }
            Family::Q => {
                eval_q_multiplier(spec, req.a, req.b, req.s, req.t, &xi[..grid.dimension()])?
            }
        };
        out.values_mut()[idx] = v;
    }
    Ok(out)
}

/// Multiply a physical-space field by prod_j (-i x_j)^{alpha_j}, realizing
/// F^{-1}[D^alpha g] = (-ix)^alpha F^{-1}[g].
fn apply_position_monomial(field: &mut Field, alpha: &[usize]) {
    if alpha.iter().all(|&a| a == 0) {
        return;
    }
    let grid = field.grid();
    let mut x = [0.0; MAX_DIM];
    for idx in 0..grid.total_points() {
        grid.x_at(idx, &mut x);
        let mut factor = Complex64::new(1.0, 0.0);
        for (axis, &a) in alpha.iter().enumerate() {
            if a > 0 {
                factor *= Complex64::new(0.0, -x[axis]).powu(a as u32);
            }
        }
        field.values_mut()[idx] *= factor;
    }
}

fn kernel_common(
    spec: &SymbolSpec,
    req: &KernelRequest,
    grid: SpectralGrid,
    family: Family,
) -> Result<Field> {
    req.validate(spec)?;
    if grid.dimension() != spec.dimension() {
        return Err(Error::invalid("grid and symbol dimensions differ"));
    }
    let hat = multiplier_field(spec, req, grid, family)?;
    let mut kernel = inverse_transform(&hat)?;
    apply_position_monomial(&mut kernel, &req.alpha);
    Ok(kernel)
}

/// Physical-space kernel p_{alpha,a,b}(s,t,.) via the (-ix)^alpha identity.
pub fn kernel_p(spec: &SymbolSpec, req: &KernelRequest, grid: SpectralGrid) -> Result<Field> {
    kernel_common(spec, req, grid, Family::P)
}

/// Physical-space kernel q_{alpha,a,b}(s,t,.).
pub fn kernel_q(spec: &SymbolSpec, req: &KernelRequest, grid: SpectralGrid) -> Result<Field> {
    kernel_common(spec, req, grid, Family::Q)
}

/// Cross-check route: D^alpha of the multiplier by central differences with
/// the lattice step, then one inverse transform.
pub fn kernel_p_fd(spec: &SymbolSpec, req: &KernelRequest, grid: SpectralGrid) -> Result<Field> {
    req.validate(spec)?;
    let h = grid.freq_step();
    let d = grid.dimension();
    let mut hat = Field::zeros(grid, Space::Frequency);
    let mut xi = [0.0; MAX_DIM];
    let eval = |p: &[f64]| eval_p_multiplier(spec, req.a, req.b, req.s, req.t, p);
    for idx in 0..grid.total_points() {
        grid.xi_at(idx, &mut xi);
        hat.values_mut()[idx] = fd_apply(&eval, &xi[..d], &req.alpha, h)?;
    }
    inverse_transform(&hat)
}

/// Central-difference D^alpha of a frequency function, |alpha| <= 2.
fn fd_apply(
    eval: &impl Fn(&[f64]) -> Result<Complex64>,
    xi: &[f64],
    alpha: &[usize],
    h: f64,
) -> Result<Complex64> {
    let order: usize = alpha.iter().sum();
    let mut p = xi.to_vec();
    match order {
        0 => eval(xi),
        1 => {
            let j = alpha.iter().position(|&a| a > 0).unwrap();
            p[j] = xi[j] + h;
            let hi = eval(&p)?;
            p[j] = xi[j] - h;
            let lo = eval(&p)?;
            Ok((hi - lo) / (2.0 * h))
        }
        2 => {
            if let Some(j) = alpha.iter().position(|&a| a == 2) {
                p[j] = xi[j] + h;
                let hi = eval(&p)?;
                p[j] = xi[j] - h;
                let lo = eval(&p)?;
                Ok((hi - 2.0 * eval(xi)? + lo) / (h * h))
            } else {
                let i = alpha.iter().position(|&a| a > 0).unwrap();
                let j = alpha.iter().rposition(|&a| a > 0).unwrap();
                let mut at = |si: f64, sj: f64| -> Result<Complex64> {
                    p.copy_from_slice(xi);
                    p[i] += si * h;
                    p[j] += sj * h;
                    eval(&p)
                };
                let pp = at(1.0, 1.0)?;
                let pm = at(1.0, -1.0)?;
                let mp = at(-1.0, 1.0)?;
                let mm = at(-1.0, -1.0)?;
                Ok((pp - pm - mp + mm) / (4.0 * h * h))
            }
        }
        _ => Err(Error::invalid("finite differences support |alpha| <= 2")),
    }
}

/// Weight exponent for the weighted-L2 norm, validated against the
/// admissible range 0 < delta < 1/2 min (gamma a + b), or 1/2 min gamma
/// when a = b = 0.
#[derive(Debug, Clone, Copy)]
pub struct KernelWeight {
    pub delta: f64,
}

impl KernelWeight {
    pub fn for_kernel(gamma: f64, a: u32, b: f64, delta: f64) -> Result<Self> {
        let cap = if a == 0 && b == 0.0 {
            0.5f64.min(gamma)
        } else {
            let s = gamma * a as f64 + b;
            if !(s > 0.0) {
                return Err(Error::invalid("weighted norm needs gamma a + b > 0"));
            }
            0.5f64.min(s)
        };
        if !(delta > 0.0 && delta < cap) {
            return Err(Error::invalid(format!(
                "delta = {delta} outside the admissible range (0, {cap})"
            )));
        }
        Ok(KernelWeight { delta })
    }
}

/// Discrete L1, L2 and optional |x|^{d/2+delta}-weighted L2 norms.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelNorms {
    pub l1: f64,
    pub l2: f64,
    pub weighted_l2: Option<f64>,
}

/// Quadrature of the requested norms of a physical-space field.
pub fn kernel_norms(field: &Field, weight: Option<KernelWeight>) -> Result<KernelNorms> {
    field.expect_space(Space::Physical, "kernel_norms")?;
    let grid = field.grid();
    let d = grid.dimension();
    let w = grid.spacing().powi(d as i32);
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut wl2 = 0.0;
    let mut x = [0.0; MAX_DIM];
    for idx in 0..grid.total_points() {
        let m = field.values()[idx].norm();
        l1 += m;
        l2 += m * m;
        if let Some(kw) = weight {
            grid.x_at(idx, &mut x);
            let r: f64 = x[..d].iter().map(|&c| c * c).sum::<f64>().sqrt();
            wl2 += r.powf(d as f64 + 2.0 * kw.delta) * m * m;
        }
    }
    Ok(KernelNorms {
        l1: l1 * w,
        l2: (l2 * w).sqrt(),
        weighted_l2: weight.map(|_| (wl2 * w).sqrt()),
    })
}

/// Least-squares power-law fit of norm-vs-gap data.
#[derive(Debug, Clone)]
pub struct DecayFit {
    /// (gap, norm) pairs in increasing gap order.
    pub pairs: Vec<(f64, f64)>,
    /// Slope of log(norm) against log(gap).
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the linear fit normalized by the fitted range.
    pub residual: f64,
}

/// Linear least squares on (ln x, ln y); residual normalized by the y-range.
pub fn fit_loglog(pairs: &[(f64, f64)]) -> Result<DecayFit> {
    fit_linear(&pairs.iter().map(|&(x, y)| (x.ln(), y.ln())).collect::<Vec<_>>()).map(
        |(slope, intercept, residual)| DecayFit {
            pairs: pairs.to_vec(),
            slope,
            intercept,
            residual,
        },
    )
}

/// Linear least squares on raw (x, ln y) pairs, for exponential decay laws.
pub fn fit_semilog(pairs: &[(f64, f64)]) -> Result<DecayFit> {
    fit_linear(&pairs.iter().map(|&(x, y)| (x, y.ln())).collect::<Vec<_>>()).map(
        |(slope, intercept, residual)| DecayFit {
            pairs: pairs.to_vec(),
            slope,
            intercept,
            residual,
        },
    )
}

fn fit_linear(pts: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if pts.len() < 4 {
        return Err(Error::invalid("a decay fit needs at least 4 points"));
    }
    if pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::invalid("decay fit data must be finite and positive"));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(Error::invalid("degenerate abscissae in decay fit"));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut ssr = 0.0;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for &(x, y) in pts {
        let e = y - (slope * x + intercept);
        ssr += e * e;
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let rms = (ssr / n as f64).sqrt();
    let range = (ymax - ymin).max(1e-300);
    Ok((slope, intercept, rms / range))
}

/// Reject gaps whose kernel the grid cannot resolve: the nominal kernel
/// width (nu gap)^{1/gamma} must cover >= 4 spacings and the multiplier
/// must have decayed at the axis Nyquist point.
fn check_gap_resolvable(
    spec: &SymbolSpec,
    grid: SpectralGrid,
    gap: f64,
    hat: &Field,
) -> Result<()> {
    let width = (spec.nu() * gap).powf(1.0 / spec.gamma());
    if width < 4.0 * grid.spacing() {
        return Err(Error::resolution(format!(
            "gap {gap}: kernel width {width:.3e} below 4 grid spacings {:.3e}",
            4.0 * grid.spacing()
        )));
    }
    let peak = hat.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let nyq = hat.values()[grid.points_per_axis() / 2].norm();
    if peak > 0.0 && nyq > 1e-6 * peak {
        return Err(Error::resolution(format!(
            "gap {gap}: multiplier at the Nyquist frequency is {:.2e} of its peak",
            nyq / peak
        )));
    }
    Ok(())
}

/// Fit of log ||p_{a,b}(s,t,.)||_L1 against log(t-s) over symmetric windows
/// (s, t) = (center -/+ gap/2); the slope estimates -a - b/gamma.
pub fn l1_decay_fit(
    spec: &SymbolSpec,
    grid: SpectralGrid,
    a: u32,
    b: f64,
    gaps: &[f64],
    center: f64,
) -> Result<DecayFit> {
    if gaps.len() < 4 || gaps.windows(2).any(|w| w[1] <= w[0]) || gaps[0] <= 0.0 {
        return Err(Error::invalid("gaps must be >= 4 positive increasing values"));
    }
    if !(a == 0 && b == 0.0) && !(spec.gamma() * a as f64 + b > 0.0) {
        return Err(Error::invalid("decay fit needs a = b = 0 or gamma a + b > 0"));
    }
    let gmax = gaps[gaps.len() - 1];
    if center - 0.5 * gmax < 0.0 {
        return Err(Error::invalid("largest gap window extends below t = 0"));
    }
    let mut pairs = Vec::with_capacity(gaps.len());
    for &g in gaps {
        let req =
            KernelRequest::plain(a, b, center - 0.5 * g, center + 0.5 * g, spec.dimension());
        let hat = multiplier_field(spec, &req, grid, Family::P)?;
        check_gap_resolvable(spec, grid, g, &hat)?;
        let mut kernel = inverse_transform(&hat)?;
        apply_position_monomial(&mut kernel, &req.alpha);
        let norms = kernel_norms(&kernel, None)?;
        pairs.push((g, norms.l1));
    }
    fit_loglog(&pairs)
}

/// L1 norms of q_{a,b} over the same symmetric windows, for scaling checks.
pub fn q_l1_over_gaps(
    spec: &SymbolSpec,
    grid: SpectralGrid,
    a: u32,
    b: f64,
    gaps: &[f64],
    center: f64,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(gaps.len());
    for &g in gaps {
        let req =
            KernelRequest::plain(a, b, center - 0.5 * g, center + 0.5 * g, spec.dimension());
        let q = kernel_q(spec, &req, grid)?;
        out.push((g, kernel_norms(&q, None)?.l1));
    }
    Ok(out)
}

/// Smallest constant C with |qhat_{alpha,a,b}| <= C |xi|^e e^{-nu |xi|^gamma}
/// on the sampled lattice, with e the exponent the decomposition predicts.
pub fn qhat_frequency_bound(
    spec: &SymbolSpec,
    grid: SpectralGrid,
    req: &KernelRequest,
) -> Result<f64> {
    req.validate(spec)?;
    let order = req.order();
    let exponent = if req.a == 0 && req.b == 0.0 && order > 0 {
        spec.gamma() - order as f64
    } else {
        spec.gamma() * req.a as f64 + req.b - order as f64
    };
    let d = grid.dimension();
    let eval = |p: &[f64]| eval_q_multiplier(spec, req.a, req.b, req.s, req.t, p);
    let mut xi = [0.0; MAX_DIM];
    let mut worst = f64::NEG_INFINITY;
    for idx in 0..grid.total_points() {
        grid.xi_at(idx, &mut xi);
        let r: f64 = xi[..d].iter().map(|&x| x * x).sum::<f64>().sqrt();
        if r == 0.0 {
            continue;
        }
        // scale-adapted step: a fixed lattice step would distort the ratio
        // against the exponential envelope at large |xi|
        let v = fd_apply(&eval, &xi[..d], &req.alpha, 1e-3 * r)?.norm();
        if v == 0.0 {
            continue;
        }
        let log_ratio = v.ln() - exponent * r.ln() + spec.nu() * r.powf(spec.gamma());
        worst = worst.max(log_ratio);
    }
    Ok(worst.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{SymbolKind, TimeProfile};

    fn grid1(n: usize, l: f64) -> SpectralGrid {
        SpectralGrid::new(1, n, l).unwrap()
    }

    fn fl(gamma: f64, d: usize) -> SymbolSpec {
        SymbolSpec::fractional_laplacian(gamma, 1.0, d).unwrap()
    }

    #[test]
    fn propagator_closed_form_and_edge_cases() {
        let g = grid1(64, 16.0);
        let spec = fl(2.0, 1);
        let e = propagator(&spec, 0.0, 1.0, g).unwrap();
        // |xi| = 1 is not on this lattice; evaluate through the multiplier instead
        let v = eval_p_multiplier(&spec, 0, 0.0, 0.0, 1.0, &[1.0]).unwrap();
        assert!((v.re - (-1.0f64).exp()).abs() < 1e-12);
        assert!((e.values()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15); // xi = 0
        let id = propagator(&spec, 0.5, 0.5, g).unwrap();
        assert!(id
            .values()
            .iter()
            .all(|v| (v - Complex64::new(1.0, 0.0)).norm() == 0.0));
    }

    #[test]
    fn propagator_respects_the_ellipticity_envelope() {
        let g = grid1(128, 16.0);
        let profile = TimeProfile::new(vec![(0.0, 0.8), (0.3, 1.25)]).unwrap();
        for spec in [
            SymbolSpec::new(SymbolKind::FractionalLaplacian, 1.0, 0.8, profile.clone(), 1)
                .unwrap(),
            SymbolSpec::new(SymbolKind::ComplexRotation { rho: 0.5 }, 2.0, 0.8, profile, 1)
                .unwrap(),
        ] {
            let e = propagator(&spec, 0.1, 0.9, g).unwrap();
            for j in 0..128 {
                let xi = g.xi_coord(j).abs();
                let cap = (-spec.nu() * 0.8 * xi.powf(spec.gamma())).exp();
                assert!(e.values()[j].norm() <= cap * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn semigroup_relation_for_constant_profiles() {
        let g = grid1(64, 16.0);
        let spec = fl(1.5, 1);
        let e1 = propagator(&spec, 0.0, 0.4, g).unwrap();
        let e2 = propagator(&spec, 0.4, 1.0, g).unwrap();
        let e = propagator(&spec, 0.0, 1.0, g).unwrap();
        for j in 0..64 {
            let prod = e1.values()[j] * e2.values()[j];
            assert!((prod - e.values()[j]).norm() <= 1e-14 * e.values()[j].norm().max(1e-300));
        }
    }

    #[test]
    fn heat_kernel_matches_closed_form() {
        let g = grid1(256, 16.0);
        let spec = fl(2.0, 1);
        let req = KernelRequest::plain(0, 0.0, 0.0, 1.0, 1);
        let p = kernel_p(&spec, &req, g).unwrap();
        let peak = (4.0 * std::f64::consts::PI).powf(-0.5);
        let center = p.values()[128].re; // x = 0
        assert!((center - 0.2820948).abs() < 1e-6);
        let mut worst = 0.0f64;
        for j in 0..256 {
            let x = g.x_coord(j);
            let exact = peak * (-x * x / 4.0).exp();
            worst = worst.max((p.values()[j].re - exact).abs());
            worst = worst.max(p.values()[j].im.abs());
        }
        assert!(worst / peak < 1e-6, "sup-relative {}", worst / peak);
        let n = kernel_norms(&p, None).unwrap();
        assert!((n.l1 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn poisson_kernel_matches_closed_form() {
        let g = grid1(4096, 128.0);
        let spec = fl(1.0, 1);
        let req = KernelRequest::plain(0, 0.0, 0.0, 1.0, 1);
        let p = kernel_p(&spec, &req, g).unwrap();
        let peak = 1.0 / std::f64::consts::PI;
        let center = p.values()[2048].re;
        // periodization images contribute ~2 zeta(2)/(pi (2L)^2) at the origin
        assert!((center - 0.3183099).abs() < 5e-5);
        let mut worst = 0.0f64;
        for j in 0..4096 {
            let x = g.x_coord(j);
            let exact = peak / (1.0 + x * x);
            worst = worst.max((p.values()[j].re - exact).abs());
        }
        assert!(worst / peak < 1e-4, "sup-relative {}", worst / peak);
        let n = kernel_norms(&p, None).unwrap();
        assert!((n.l1 - 1.0).abs() < 1e-4, "l1 = {}", n.l1);
    }

    #[test]
    fn second_moment_multiplier_is_minus_heat_laplacian() {
        // |xi|^2 e^{-xi^2} inverts to -(d^2/dx^2) of the unit heat kernel.
        let g = grid1(256, 16.0);
        let spec = fl(2.0, 1);
        let req = KernelRequest::plain(0, 2.0, 0.0, 1.0, 1);
        let p = kernel_p(&spec, &req, g).unwrap();
        assert!((p.values()[128].re - 0.1410474).abs() < 1e-6);
    }

    #[test]
    fn q_kernel_is_gap_invariant_for_constant_profiles() {
        let g = grid1(256, 16.0);
        let spec = fl(2.0, 1);
        let reference = kernel_q(&spec, &KernelRequest::plain(0, 0.0, 0.0, 1.0, 1), g).unwrap();
        for gap in [0.25, 0.5] {
            let q =
                kernel_q(&spec, &KernelRequest::plain(0, 0.0, 0.3, 0.3 + gap, 1), g).unwrap();
            let worst = q
                .values()
                .iter()
                .zip(reference.values())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(worst < 1e-12);
        }
        // and it equals the unit heat kernel
        let peak = (4.0 * std::f64::consts::PI).powf(-0.5);
        assert!((reference.values()[128].re - peak).abs() < 1e-10);
    }

    #[test]
    fn differentiated_q_kernel_stays_bounded_over_gaps() {
        let g = grid1(256, 16.0);
        let spec = fl(2.0, 1);
        let mut sups = Vec::new();
        for gap in [0.0625, 0.125, 0.25, 0.5, 1.0] {
            let req = KernelRequest { alpha: vec![1], a: 0, b: 0.0, s: 1.0 - gap, t: 1.0 };
            let q = kernel_q(&spec, &req, g).unwrap();
            sups.push(q.sup_norm());
        }
        let max = sups.iter().cloned().fold(0.0, f64::max);
        let min = sups.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max.is_finite() && min > 0.0);
        assert!(max / min < 1.01, "sup spread {:?}", sups);
    }

    #[test]
    fn p_and_q_l1_norms_obey_the_scaling_identity() {
        let g = grid1(1024, 16.0);
        let spec = fl(2.0, 1);
        for gap in [0.25, 0.5, 1.0] {
            let req = KernelRequest::plain(0, 2.0, 1.0 - gap * 0.5, 1.0 + gap * 0.5, 1);
            let p = kernel_p(&spec, &req, g).unwrap();
            let q = kernel_q(&spec, &req, g).unwrap();
            let lp = kernel_norms(&p, None).unwrap().l1;
            let lq = kernel_norms(&q, None).unwrap().l1;
            let predicted = gap.powf(-1.0) * lq; // -a - b/gamma = -1
            assert!(
                (lp - predicted).abs() / predicted < 1e-3,
                "gap {gap}: {lp} vs {predicted}"
            );
        }
    }

    #[test]
    fn dual_routes_agree_in_l2() {
        // Fine lattice so the second-order difference quotient is sharp.
        let g = grid1(8192, 256.0);
        let spec = fl(2.0, 1);
        let req = KernelRequest { alpha: vec![1], a: 0, b: 0.0, s: 0.0, t: 1.0 };
        let exact = kernel_p(&spec, &req, g).unwrap();
        let fd = kernel_p_fd(&spec, &req, g).unwrap();
        let num: f64 = exact
            .values()
            .iter()
            .zip(fd.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = exact.values().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(num / den < 1e-4, "relative L2 distance {}", num / den);
    }

    #[test]
    fn decay_fit_recovers_the_exponents() {
        let g = grid1(1024, 16.0);
        let spec = fl(2.0, 1);
        let gaps: Vec<f64> = (1..=6).map(|k| 2f64.powi(-7 + k)).collect();
        for (a, b, want) in [(0u32, 0.0, 0.0), (0, 2.0, -1.0), (1, 2.0, -2.0)] {
            let fit = l1_decay_fit(&spec, g, a, b, &gaps, 1.0).unwrap();
            assert!(
                (fit.slope - want).abs() < 0.05,
                "a={a} b={b}: slope {} want {want}",
                fit.slope
            );
        }
    }

    #[test]
    fn unresolvable_gap_is_rejected() {
        let g = grid1(64, 16.0); // spacing 0.5
        let spec = fl(2.0, 1);
        let gaps = [0.001, 0.002, 0.004, 0.008];
        assert!(matches!(
            l1_decay_fit(&spec, g, 0, 0.0, &gaps, 1.0),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn weight_validation_enforces_the_admissible_range() {
        assert!(KernelWeight::for_kernel(2.0, 0, 0.0, 0.25).is_ok());
        assert!(KernelWeight::for_kernel(2.0, 0, 0.0, 0.6).is_err());
        assert!(KernelWeight::for_kernel(2.0, 0, 0.2, 0.25).is_err()); // cap = 0.2
        assert!(KernelWeight::for_kernel(2.0, 1, 0.0, 0.4).is_ok());
        assert!(KernelWeight::for_kernel(0.3, 0, 0.0, 0.25).is_ok()); // cap = 0.3
    }

    #[test]
    fn weighted_l2_of_q_is_stable_over_gaps() {
        let g = grid1(512, 16.0);
        let spec = fl(2.0, 1);
        let w = KernelWeight::for_kernel(2.0, 0, 0.0, 0.25).unwrap();
        let mut vals = Vec::new();
        for gap in [0.0625, 0.125, 0.25, 0.5, 1.0] {
            let q =
                kernel_q(&spec, &KernelRequest::plain(0, 0.0, 1.0 - gap, 1.0, 1), g).unwrap();
            vals.push(kernel_norms(&q, Some(w)).unwrap().weighted_l2.unwrap());
        }
        let max = vals.iter().cloned().fold(0.0, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max.is_finite() && max / min < 1.01, "{vals:?}");
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = grid1(64, 16.0);
        let f = Field::zeros(g, Space::Physical);
        let n = kernel_norms(&f, None).unwrap();
        assert_eq!((n.l1, n.l2), (0.0, 0.0));
    }

    #[test]
    fn qhat_frequency_bound_is_modest() {
        let g = grid1(512, 16.0);
        let spec = fl(2.0, 1);
        for req in [
            KernelRequest { alpha: vec![1], a: 0, b: 0.0, s: 0.5, t: 1.0 },
            KernelRequest::plain(0, 2.0, 0.5, 1.0, 1),
            KernelRequest::plain(1, 0.0, 0.5, 1.0, 1),
        ] {
            let c = qhat_frequency_bound(&spec, g, &req).unwrap();
            assert!(c.is_finite() && c > 0.0 && c < 100.0, "C = {c} for {req:?}");
        }
    }

    #[test]
    fn heat_kernel_2d_matches_closed_form() {
        let g = SpectralGrid::new(2, 64, 12.0).unwrap();
        let spec = fl(2.0, 2);
        let req = KernelRequest::plain(0, 0.0, 0.0, 1.0, 2);
        let p = kernel_p(&spec, &req, g).unwrap();
        let peak = 1.0 / (4.0 * std::f64::consts::PI);
        let center = p.values()[32 * 64 + 32].re; // x = (0, 0)
        assert!((center - peak).abs() / peak < 1e-6, "center {center}");
        let n = kernel_norms(&p, None).unwrap();
        assert!((n.l1 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn anisotropic_propagator_obeys_its_effective_envelope() {
        let g = SpectralGrid::new(2, 32, 8.0).unwrap();
        let spec = SymbolSpec::new(
            SymbolKind::AnisotropicSum { weights: vec![0.8, 1.2] },
            2.0,
            0.8,
            TimeProfile::constant(1.0),
            2,
        )
        .unwrap();
        let e = propagator(&spec, 0.0, 0.5, g).unwrap();
        let nu_eff = spec.effective_sym1_constant();
        let mut xi = [0.0; MAX_DIM];
        for idx in 0..g.total_points() {
            g.xi_at(idx, &mut xi);
            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
            let cap = (-nu_eff * 0.5 * r2).exp();
            assert!(e.values()[idx].norm() <= cap * (1.0 + 1e-12));
        }
    }

    #[test]
    fn alpha_above_d0_is_rejected() {
        let g = grid1(64, 16.0);
        let spec = fl(2.0, 1); // d0 = 1
        let req = KernelRequest { alpha: vec![2], a: 0, b: 0.0, s: 0.0, t: 1.0 };
        assert!(kernel_p(&spec, &req, g).is_err());
    }
}

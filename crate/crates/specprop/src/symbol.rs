//! Time-measurable Fourier multiplier symbols psi(t, xi) of order gamma,
//! elliptic in the sense Re psi <= -nu |xi|^gamma, together with exact
//! time integrals, the adjoint multiplier psi(t, -xi), and a sampling
//! validator for the ellipticity and derivative bounds.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// User-supplied symbol evaluation for the tabulated kind.
pub type SymbolFn = Arc<dyn Fn(f64, &[f64]) -> Complex64 + Send + Sync>;

/// Piecewise-constant modulation a(t); the first breakpoint is 0 and the
/// last level extends to +infinity (values clamp outside the table).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeProfile {
    points: Vec<(f64, f64)>,
}

impl TimeProfile {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("time profile needs at least one piece"));
        }
        if points[0].0 != 0.0 {
            return Err(Error::invalid("first profile breakpoint must be 0"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::invalid("profile breakpoints must be strictly increasing"));
            }
        }
        if points.iter().any(|&(_, a)| !a.is_finite()) {
            return Err(Error::invalid("profile levels must be finite"));
        }
        Ok(TimeProfile { points })
    }

    pub fn constant(level: f64) -> Self {
        TimeProfile { points: vec![(0.0, level)] }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|&(_, a)| a)
    }

    /// a(t), clamped to the first/last piece outside the table.
    pub fn value(&self, t: f64) -> f64 {
        let mut level = self.points[0].1;
        for &(bp, a) in &self.points {
            if t >= bp {
                level = a;
            } else {
                break;
            }
        }
        level
    }

    /// Exact integral of a(r) over [s, t]; sum of level * overlap terms.
    pub fn integral(&self, s: f64, t: f64) -> f64 {
        debug_assert!(s <= t);
        let mut acc = 0.0;
        for (i, &(bp, a)) in self.points.iter().enumerate() {
            let seg_end = self.points.get(i + 1).map(|&(b, _)| b).unwrap_or(f64::INFINITY);
            let lo = s.max(bp);
            let hi = t.min(seg_end);
            if hi > lo {
                acc += a * (hi - lo);
            }
        }
        // clamp below 0: first level extends to -infinity
        if s < 0.0 {
            acc += self.points[0].1 * (t.min(0.0) - s);
        }
        acc
    }
}

/// Builtin symbol families plus a user-tabulated escape hatch.
#[derive(Clone)]
pub enum SymbolKind {
    /// psi(t, xi) = -a(t) |xi|^gamma
    FractionalLaplacian,
    /// psi(t, xi) = a(t) (-1 + i rho) |xi|^gamma, |rho| <= tan(arccos(nu^2))
    ComplexRotation { rho: f64 },
    /// psi(t, xi) = -a(t) sum_j c_j |xi_j|^gamma, c_j in [nu, 1/nu], gamma <= 2
    AnisotropicSum { weights: Vec<f64> },
    /// psi evaluated through a user callback; `None` until one is attached.
    Tabulated { callback: Option<SymbolFn> },
}

impl fmt::Debug for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolKind::FractionalLaplacian => write!(f, "FractionalLaplacian"),
            SymbolKind::ComplexRotation { rho } => write!(f, "ComplexRotation {{ rho: {rho} }}"),
            SymbolKind::AnisotropicSum { weights } => {
                write!(f, "AnisotropicSum {{ weights: {weights:?} }}")
            }
            SymbolKind::Tabulated { callback } => {
                write!(f, "Tabulated {{ callback: {} }}", if callback.is_some() { "set" } else { "unset" })
            }
        }
    }
}

/// A concrete symbol: kind, order gamma, ellipticity constant nu,
/// piecewise-constant time profile, and the ambient dimension.
#[derive(Debug, Clone)]
pub struct SymbolSpec {
    kind: SymbolKind,
    gamma: f64,
    nu: f64,
    profile: TimeProfile,
    dimension: usize,
    /// Midpoint substeps used to integrate tabulated symbols in time.
    quadrature_substeps: usize,
}

impl SymbolSpec {
    pub fn new(
        kind: SymbolKind,
        gamma: f64,
        nu: f64,
        profile: TimeProfile,
        dimension: usize,
    ) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::invalid("gamma must be positive"));
        }
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(Error::invalid("nu must lie in (0, 1]"));
        }
        if !(1..=crate::grid::MAX_DIM).contains(&dimension) {
            return Err(Error::invalid("dimension must be 1, 2 or 3"));
        }
        for a in profile.levels() {
            if !(a >= nu - 1e-12 && a <= 1.0 / nu + 1e-12) {
                return Err(Error::invalid(format!(
                    "profile level {a} outside [nu, 1/nu] = [{nu}, {}]",
                    1.0 / nu
                )));
            }
        }
        match &kind {
            SymbolKind::ComplexRotation { rho } => {
                let cap = (nu * nu).acos().tan();
                if rho.abs() > cap + 1e-12 {
                    return Err(Error::invalid(format!(
                        "|rho| = {} exceeds tan(arccos(nu^2)) = {cap}",
                        rho.abs()
                    )));
                }
            }
            SymbolKind::AnisotropicSum { weights } => {
                if weights.len() != dimension {
                    return Err(Error::invalid("anisotropic weights must have length d"));
                }
                if gamma > 2.0 {
                    return Err(Error::invalid("anisotropic-sum symbols require gamma <= 2"));
                }
                for &c in weights {
                    if !(c >= nu - 1e-12 && c <= 1.0 / nu + 1e-12) {
                        return Err(Error::invalid("anisotropic weight outside [nu, 1/nu]"));
                    }
                }
            }
            _ => {}
        }
        Ok(SymbolSpec { kind, gamma, nu, profile, dimension, quadrature_substeps: 64 })
    }

    /// Fractional Laplacian with unit profile, the workhorse default.
    pub fn fractional_laplacian(gamma: f64, nu: f64, dimension: usize) -> Result<Self> {
        SymbolSpec::new(
            SymbolKind::FractionalLaplacian,
            gamma,
            nu,
            TimeProfile::constant(1.0),
            dimension,
        )
    }

    pub fn with_profile(mut self, profile: TimeProfile) -> Result<Self> {
        for a in profile.levels() {
            if !(a >= self.nu - 1e-12 && a <= 1.0 / self.nu + 1e-12) {
                return Err(Error::invalid("profile level outside [nu, 1/nu]"));
            }
        }
        self.profile = profile;
        Ok(self)
    }

    pub fn with_callback(mut self, f: SymbolFn) -> Self {
        if let SymbolKind::Tabulated { callback } = &mut self.kind {
            *callback = Some(f);
        }
        self
    }

    pub fn with_quadrature_substeps(mut self, m: usize) -> Self {
        self.quadrature_substeps = m.max(1);
        self
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn profile(&self) -> &TimeProfile {
        &self.profile
    }
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// d0 = floor(d/2) + 1, the validated number of xi-derivatives.
    pub fn d0(&self) -> usize {
        self.dimension / 2 + 1
    }


    /// Time-independent base symbol sigma(xi) with psi(t, xi) = a(t) sigma(xi)
    /// for the builtin kinds.
    fn base(&self, xi: &[f64]) -> Complex64 {
        let r = norm(xi);
        match &self.kind {
            SymbolKind::FractionalLaplacian => Complex64::new(-r.powf(self.gamma), 0.0),
            SymbolKind::ComplexRotation { rho } => {
                Complex64::new(-1.0, *rho) * r.powf(self.gamma)
            }
            SymbolKind::AnisotropicSum { weights } => {
                let s: f64 = xi
                    .iter()
                    .zip(weights)
                    .map(|(&x, &c)| c * x.abs().powf(self.gamma))
                    .sum();
                Complex64::new(-s, 0.0)
            }
            SymbolKind::Tabulated { .. } => unreachable!("tabulated symbols have no base"),
        }
    }

    /// psi(t, xi); zero at xi = 0 for every builtin kind.
    pub fn eval(&self, t: f64, xi: &[f64]) -> Result<Complex64> {
        match &self.kind {
            SymbolKind::Tabulated { callback } => match callback {
                Some(f) => Ok(f(t, xi)),
                None => Err(Error::config("tabulated symbol has no callback attached")),
            },
            _ => Ok(self.base(xi) * self.profile.value(t)),
        }
    }

    /// Integral of psi(r, xi) over [s, t]; exact for piecewise-constant
    /// profiles, composite midpoint quadrature for tabulated symbols.
    pub fn integrate(&self, s: f64, t: f64, xi: &[f64]) -> Result<Complex64> {
        if s > t {
            return Err(Error::invalid(format!("integrate: s = {s} exceeds t = {t}")));
        }
        if s == t {
            return Ok(Complex64::default());
        }
        match &self.kind {
            SymbolKind::Tabulated { callback } => {
                let f = callback
                    .as_ref()
                    .ok_or_else(|| Error::config("tabulated symbol has no callback attached"))?;
                let m = self.quadrature_substeps;
                let h = (t - s) / m as f64;
                let mut acc = Complex64::default();
                for j in 0..m {
                    let r = s + (j as f64 + 0.5) * h;
                    acc += f(r, xi);
                }
                Ok(acc * h)
            }
            _ => Ok(self.base(xi) * self.profile.integral(s, t)),
        }
    }

    /// Adjoint multiplier psi(t, -xi).
    pub fn adjoint(&self, t: f64, xi: &[f64]) -> Result<Complex64> {
        let neg: Vec<f64> = xi.iter().map(|&x| -x).collect();
        self.eval(t, &neg)
    }

    /// Integral of the adjoint multiplier over [s, t].
    pub fn integrate_adjoint(&self, s: f64, t: f64, xi: &[f64]) -> Result<Complex64> {
        let neg: Vec<f64> = xi.iter().map(|&x| -x).collect();
        self.integrate(s, t, &neg)
    }

    /// Effective ellipticity constant: the builtin's provable constant,
    /// nu itself for tabulated symbols.
    pub fn effective_sym1_constant(&self) -> f64 {
        match self.kind {
            SymbolKind::AnisotropicSum { .. } => self.nu * self.nu,
            _ => self.nu,
        }
    }

    /// Known per-kind constant in |D^alpha psi| <= kappa(|alpha|) nu^{-1} |xi|^{gamma-|alpha|};
    /// the validator normalizes measured ratios by it.
    fn sym2_normalizer(&self, order: usize) -> f64 {
        let g = self.gamma;
        let radial = match order {
            0 => 1.0,
            1 => g,
            _ => g * (1.0 + (g - 2.0).abs()),
        };
        match &self.kind {
            SymbolKind::FractionalLaplacian => radial,
            SymbolKind::ComplexRotation { rho } => radial * (1.0 + rho * rho).sqrt(),
            SymbolKind::AnisotropicSum { weights } => {
                let cmax = weights.iter().cloned().fold(0.0, f64::max);
                if order == 0 {
                    weights.iter().sum::<f64>() * self.nu.max(1e-300) / self.nu
                } else {
                    radial * cmax / self.nu * self.nu
                }
            }
            SymbolKind::Tabulated { .. } => 1.0,
        }
    }

    /// Sample the ellipticity and derivative bounds; failures set
    /// `passed = false` rather than erroring.
    pub fn validate(&self, plan: &SamplePlan, tol: f64) -> Result<ValidationReport> {
        if !(tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if plan.radii.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::invalid("sample radii must be positive"));
        }
        let d = self.dimension;
        let d0 = self.d0();
        let nu_eff = self.effective_sym1_constant();
        let dirs = directions(d, plan.directions.max(1));
        let times = self.sample_times(plan.times.max(1));
        let mut worst_margin = f64::INFINITY;
        let mut worst_ratio: f64 = 0.0;
        let mut count = 0usize;
        let mut xi = vec![0.0; d];
        for &t in &times {
            for &r in &plan.radii {
                for u in &dirs {
                    for a in 0..d {
                        xi[a] = r * u[a];
                    }
                    count += 1;
                    let val = self.eval(t, &xi)?;
                    let bound = nu_eff * r.powf(self.gamma);
                    let margin = (-val.re - bound) / bound.max(1.0);
                    worst_margin = worst_margin.min(margin);
                    for order in 0..=d0 {
                        for alpha in multi_indices(d, order) {
                            let deriv = self.fd_derivative(t, &xi, &alpha, 1e-3 * r)?;
                            let raw = deriv * r.powf(order as f64 - self.gamma) * self.nu;
                            let ratio = raw / self.sym2_normalizer(order);
                            worst_ratio = worst_ratio.max(ratio);
                        }
                    }
                }
            }
        }
        let passed = worst_margin >= -tol && worst_ratio <= 1.0 + tol;
        Ok(ValidationReport {
            passed,
            worst_sym1_margin: worst_margin,
            worst_sym2_ratio: worst_ratio,
            sample_count: count,
            d0,
        })
    }

    /// |D^alpha psi(t, .)| at xi by scale-adapted central differences.
    fn fd_derivative(&self, t: f64, xi: &[f64], alpha: &[usize], h: f64) -> Result<f64> {
        let order: usize = alpha.iter().sum();
        let mut p = xi.to_vec();
        let val = match order {
            0 => self.eval(t, xi)?,
            1 => {
                let j = alpha.iter().position(|&a| a > 0).unwrap();
                p[j] = xi[j] + h;
                let hi = self.eval(t, &p)?;
                p[j] = xi[j] - h;
                let lo = self.eval(t, &p)?;
                (hi - lo) / (2.0 * h)
            }
            2 => {
                if let Some(j) = alpha.iter().position(|&a| a == 2) {
                    p[j] = xi[j] + h;
                    let hi = self.eval(t, &p)?;
                    p[j] = xi[j] - h;
                    let lo = self.eval(t, &p)?;
                    let mid = self.eval(t, xi)?;
                    (hi - 2.0 * mid + lo) / (h * h)
                } else {
                    let i = alpha.iter().position(|&a| a > 0).unwrap();
                    let j = alpha.iter().rposition(|&a| a > 0).unwrap();
                    let mut eval_at = |si: f64, sj: f64| -> Result<Complex64> {
                        p.copy_from_slice(xi);
                        p[i] += si * h;
                        p[j] += sj * h;
                        self.eval(t, &p)
                    };
                    let pp = eval_at(1.0, 1.0)?;
                    let pm = eval_at(1.0, -1.0)?;
                    let mp = eval_at(-1.0, 1.0)?;
                    let mm = eval_at(-1.0, -1.0)?;
                    (pp - pm - mp + mm) / (4.0 * h * h)
                }
            }
            _ => {
                return Err(Error::invalid(format!(
                    "derivative order {order} exceeds the supported range"
                )))
            }
        };
        Ok(val.norm())
    }

    /// Representative times: one per profile piece plus uniform fill.
    fn sample_times(&self, count: usize) -> Vec<f64> {
        let pts = self.profile.points();
        let last = pts.last().unwrap().0;
        let horizon = if last > 0.0 { last * 1.5 } else { 1.0 };
        let mut times: Vec<f64> = Vec::new();
        for (i, &(bp, _)) in pts.iter().enumerate() {
            let end = pts.get(i + 1).map(|&(b, _)| b).unwrap_or(horizon);
            times.push(0.5 * (bp + end));
        }
        let mut k = 0usize;
        while times.len() < count {
            times.push(horizon * (k as f64 + 0.5) / count as f64);
            k += 1;
        }
        times.truncate(count.max(pts.len()));
        times
    }
}

/// How the validator samples (t, xi) space.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    pub radii: Vec<f64>,
    pub directions: usize,
    pub times: usize,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan { radii: vec![0.25, 1.0, 4.0, 16.0], directions: 8, times: 5 }
    }
}

/// Outcome of [`SymbolSpec::validate`]. The margin is relative to the local
/// bound scale max(1, nu_eff |xi|^gamma); the ratio is normalized by the
/// builtin's known derivative constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub passed: bool,
    pub worst_sym1_margin: f64,
    pub worst_sym2_ratio: f64,
    pub sample_count: usize,
    pub d0: usize,
}

fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|&x| x * x).sum::<f64>().sqrt()
}

/// Deterministic spread of unit directions; generic (off-axis) for d >= 2.
fn directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let th = 0.37 + i as f64 * 2.399963229728653;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => (0..count)
            .map(|i| {
                // spherical Fibonacci points, offset to avoid the poles/axes
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let th = 0.41 + i as f64 * 2.399963229728653;
                let r = (1.0 - z * z).sqrt();
                vec![r * th.cos(), r * th.sin(), z]
            })
            .collect(),
    }
}

/// All multi-indices of the given total order in d variables (order <= 2).
fn multi_indices(d: usize, order: usize) -> Vec<Vec<usize>> {
    match order {
        0 => vec![vec![0; d]],
        1 => (0..d)
            .map(|j| {
                let mut a = vec![0; d];
                a[j] = 1;
                a
            })
            .collect(),
        2 => {
            let mut out = Vec::new();
            for i in 0..d {
                for j in i..d {
                    let mut a = vec![0; d];
                    a[i] += 1;
                    a[j] += 1;
                    out.push(a);
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

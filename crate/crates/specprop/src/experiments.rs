//! Experiment orchestration: the acceptance criteria behind `reproduce`,
//! and the config-driven experiment dispatch used by the CLI subcommands.
//!
//! Every criterion is a pure function of (suite, seed) returning a pass
//! flag, a one-line detail string, and the CSV artifacts it produced, so
//! the command-line tool and the test suite share one code path.

use crate::config::Config;
use crate::cz::{cz_decompose, random_dyadic_step, verify_cz, DyadicInterval, StepFunction};
use crate::error::{Error, Result};
use crate::grid::{Field, SpacetimeField, SpectralGrid};
use crate::kernel::{
    kernel_norms, kernel_p, l1_decay_fit, qhat_frequency_bound, KernelRequest,
    KernelWeight,
};
use crate::lp::{
    apply_delta_n, lipschitz_norm_fd, lipschitz_norm_lp, norm_report, DiffPlan, LpBank,
    NormVariant, TimeExponent,
};
use crate::report::{fmt_f64, key_value_block, Csv};
use crate::solver::{
    adjoint_reproduce, band_kernel_decay, decade_sweep, ensemble_member,
    estimate_ratio, estimate_ratio_multi, smoothing_difference_probe, smoothing_probe,
    solve_mild,
    weak11_probe, weak_residual, EnsembleSpec, NormFamily,
};
use crate::symbol::{SamplePlan, SymbolSpec, TimeProfile};
use crate::testfn::{band_limited_random, compact_bump_spacetime, BumpSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

/// Reduced-speed or full-tolerance criterion parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Smoke,
    Full,
}

/// One acceptance criterion's outcome and artifacts.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    /// (relative path, contents) pairs for the artifact bundle.
    pub artifacts: Vec<(String, String)>,
}

impl CriterionOutcome {
    fn line(&self) -> String {
        format!(
            "{} {:<24} {}  {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.details
        )
    }
}

pub const CRITERIA: &[(&str, &str)] = &[
    ("c01", "closed-form-kernels"),
    ("c02", "decay-exponents"),
    ("c03", "scaling-identity"),
    ("c04", "partition-of-unity"),
    ("c05", "norm-equivalence"),
    ("c06", "band-kernel-decay"),
    ("c07", "smoothing-bound"),
    ("c08", "adjoint-reproduction"),
    ("c09", "weak-residual"),
    ("c10", "main-estimate"),
    ("c11", "holder-estimate"),
    ("c12", "weak-1-1"),
    ("c13", "cz-decomposition"),
    ("c14", "determinism"),
];

fn grid1(n: usize, l: f64) -> SpectralGrid {
    SpectralGrid::new(1, n, l).expect("static grid")
}

fn fl(gamma: f64, nu: f64, profile: TimeProfile) -> SymbolSpec {
    SymbolSpec::new(crate::symbol::SymbolKind::FractionalLaplacian, gamma, nu, profile, 1)
        .expect("static symbol")
}

fn two_piece() -> TimeProfile {
    TimeProfile::new(vec![(0.0, 1.0), (0.5, 0.5)]).expect("static profile")
}

/// Per-gamma kernel grids: slow-tail symbols need a wide box and a dense
/// lattice before the L1 quadrature reaches the stated tolerances.
fn kernel_grid(gamma: f64, suite: Suite) -> SpectralGrid {
    let (_, shrink, _) = resolution_scale();
    if gamma < 1.5 {
        let n = match suite {
            Suite::Full => 1usize << 19,
            Suite::Smoke => 1 << 15,
        };
        grid1((n / shrink).max(1 << 13), 128.0)
    } else {
        let n = match suite {
            Suite::Full => 8192usize,
            Suite::Smoke => 2048,
        };
        grid1((n / shrink).max(512), 32.0)
    }
}

fn sup_rel_err(field: &Field, exact: impl Fn(f64) -> f64) -> f64 {
    let grid = field.grid();
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for j in 0..grid.total_points() {
        let x = grid.x_coord(j);
        let e = exact(x);
        peak = peak.max(e.abs());
        worst = worst.max((field.values()[j].re - e).abs().max(field.values()[j].im.abs()));
    }
    worst / peak
}

/// Criterion 1: heat and Poisson kernels against their closed forms.
fn c01_closed_form(suite: Suite, seed: u64, tol_scale: f64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut table = Csv::new(&["kernel", "center_value", "sup_rel_err", "l1"]).stamp(Config::defaults().hash(), seed);
    let mut passed = true;
    let mut details = Vec::new();

    // heat kernel on the default grid
    let heat_grid = grid1(256, 16.0);
    let spec = fl(2.0, 1.0, TimeProfile::constant(1.0));
    let p = kernel_p(&spec, &KernelRequest::plain(0, 0.0, 0.0, 1.0, 1), heat_grid)?;
    let peak = (4.0 * std::f64::consts::PI).powf(-0.5);
    let err = sup_rel_err(&p, |x| peak * (-x * x / 4.0).exp());
    let l1 = kernel_norms(&p, None)?.l1;
    passed &= err < 1e-6 * tol_scale && (l1 - 1.0).abs() < 1e-4 * tol_scale;
    table.push(vec![
        "heat".into(),
        fmt_f64(p.values()[128].re),
        fmt_f64(err),
        fmt_f64(l1),
    ]);
    details.push(format!("heat err {err:.2e}"));

    // Poisson kernel on the wide slow-tail grid
    let poisson_grid = match suite {
        Suite::Full => grid1(4096, 128.0),
        Suite::Smoke => grid1(2048, 128.0),
    };
    let spec = fl(1.0, 1.0, TimeProfile::constant(1.0));
    let p = kernel_p(&spec, &KernelRequest::plain(0, 0.0, 0.0, 1.0, 1), poisson_grid)?;
    let pi = std::f64::consts::PI;
    let err = sup_rel_err(&p, |x| 1.0 / (pi * (1.0 + x * x)));
    let l1 = kernel_norms(&p, None)?.l1;
    passed &= err < 1e-4 * tol_scale && (l1 - 1.0).abs() < 1e-4 * tol_scale;
    table.push(vec![
        "poisson".into(),
        fmt_f64(p.values()[poisson_grid.points_per_axis() / 2].re),
        fmt_f64(err),
        fmt_f64(l1),
    ]);
    details.push(format!("poisson err {err:.2e}"));

    let elapsed = start.elapsed().as_secs_f64();
    passed &= elapsed < 5.0;
    details.push(format!("{elapsed:.2}s"));
    Ok(CriterionOutcome {
        id: "c01",
        name: "closed-form-kernels",
        passed,
        details: details.join(", "),
        artifacts: vec![("c01_closed_form/kernels.csv".into(), table.render())],
    })
}

/// Criteria 2 and 3 share the kernel sweep data.
struct KernelSweep {
    gamma: f64,
    a: u32,
    b: f64,
    slope: f64,
    want: f64,
    pairs: Vec<(f64, f64)>,
    q_pairs: Vec<(f64, f64)>,
}

fn kernel_sweeps(suite: Suite) -> Result<Vec<KernelSweep>> {
    let gaps: Vec<f64> = match suite {
        Suite::Full => (1..=6).map(|k| 2f64.powi(k - 7)).collect(),
        Suite::Smoke => (1..=4).map(|k| 2f64.powi(k - 5)).collect(),
    };
    let gammas: Vec<f64> = match suite {
        Suite::Full => vec![2.0, 1.0],
        Suite::Smoke => vec![2.0],
    };
    let mut out = Vec::new();
    for &gamma in &gammas {
        let spec = fl(gamma, 0.5, two_piece());
        let grid = kernel_grid(gamma, suite);
        for (a, b, want) in [(0u32, 0.0, 0.0), (0, gamma, -1.0), (1, gamma, -2.0)] {
            let fit = l1_decay_fit(&spec, grid, a, b, &gaps, 0.5)?;
            let q_pairs = crate::kernel::q_l1_over_gaps(&spec, grid, a, b, &gaps, 0.5)?;
            out.push(KernelSweep {
                gamma,
                a,
                b,
                slope: fit.slope,
                want,
                pairs: fit.pairs,
                q_pairs,
            });
        }
    }
    Ok(out)
}

/// Criterion 2: fitted L1 decay slopes match -a - b/gamma within 0.05.
fn c02_decay_exponents(suite: Suite, seed: u64, tol_scale: f64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let sweeps = kernel_sweeps(suite)?;
    let mut table = Csv::new(&["gamma", "a", "b", "gap", "l1", "slope"]).stamp(Config::defaults().hash(), seed);
    let mut passed = true;
    let mut worst = 0.0f64;
    for s in &sweeps {
        for &(g, l1) in &s.pairs {
            table.push(vec![
                fmt_f64(s.gamma),
                s.a.to_string(),
                fmt_f64(s.b),
                fmt_f64(g),
                fmt_f64(l1),
                fmt_f64(s.slope),
            ]);
        }
        let err = (s.slope - s.want).abs();
        worst = worst.max(err);
        passed &= err < 0.05 * tol_scale;
    }
    let elapsed = start.elapsed().as_secs_f64();
    passed &= elapsed < 60.0;
    Ok(CriterionOutcome {
        id: "c02",
        name: "decay-exponents",
        passed,
        details: format!("worst slope error {worst:.3}, {elapsed:.1}s"),
        artifacts: vec![("c02_decay/slopes.csv".into(), table.render())],
    })
}

/// Criterion 3: ||p_{a,b}||_1 = gap^{-a-b/gamma} ||q_{a,b}||_1 within 1e-3.
fn c03_scaling_identity(suite: Suite, seed: u64, tol_scale: f64) -> Result<CriterionOutcome> {
    let sweeps = kernel_sweeps(suite)?;
    let mut table = Csv::new(&["gamma", "a", "b", "gap", "p_l1", "q_l1", "rel_err"]).stamp(Config::defaults().hash(), seed);
    let mut passed = true;
    let mut worst = 0.0f64;
    for s in &sweeps {
        let exponent = -(s.a as f64) - s.b / s.gamma;
        for (&(g, pl1), &(_, ql1)) in s.pairs.iter().zip(&s.q_pairs) {
            let predicted = g.powf(exponent) * ql1;
            let rel = (pl1 - predicted).abs() / predicted;
            worst = worst.max(rel);
            passed &= rel < 1e-3 * tol_scale;
            table.push(vec![
                fmt_f64(s.gamma),
                s.a.to_string(),
                fmt_f64(s.b),
                fmt_f64(g),
                fmt_f64(pl1),
                fmt_f64(ql1),
                fmt_f64(rel),
            ]);
        }
    }
    Ok(CriterionOutcome {
        id: "c03",
        name: "scaling-identity",
        passed,
        details: format!("worst relative error {worst:.2e}"),
        artifacts: vec![("c03_scaling/identity.csv".into(), table.render())],
    })
}

/// Criterion 4: exact partition of unity and almost-orthogonality.
fn c04_partition(_suite: Suite, seed: u64, _ts: f64) -> Result<CriterionOutcome> {
    let grid = grid1(4096, 8.0 * std::f64::consts::PI);
    let bank = LpBank::build(grid, 6)?;
    let defect = bank.partition_defect();
    let mut passed = defect < 1e-12;
    // window products vanish identically two bands apart
    let mut product_ok = true;
    for n in bank.n_min()..=bank.n_max() {
        for np in bank.n_min()..=bank.n_max() {
            if (n - np).abs() >= 2 {
                let a = bank.delta_samples(n)?;
                let b = bank.delta_samples(np)?;
                product_ok &= a.iter().zip(b).all(|(x, y)| x * y == 0.0);
            }
        }
    }
    // and the composed projections are exactly zero on a random field
    let f = band_limited_random(grid, (2.0, 16.0), seed)?;
    let hat = crate::grid::to_frequency(&f)?;
    let mut compose_ok = true;
    for (n, np) in [(4, 2), (2, 4), (5, 3), (1, 3)] {
        let first = apply_delta_n(&bank, n, &hat)?;
        let second = apply_delta_n(&bank, np, &first)?;
        compose_ok &= second.values().iter().all(|v| v.norm() == 0.0);
    }
    passed &= product_ok && compose_ok;
    let summary = key_value_block(&[
        ("partition_defect", fmt_f64(defect)),
        ("window_products_zero", product_ok.to_string()),
        ("composed_projections_zero", compose_ok.to_string()),
    ]);
    Ok(CriterionOutcome {
        id: "c04",
        name: "partition-of-unity",
        passed,
        details: format!("defect {defect:.1e}"),
        artifacts: vec![("c04_partition/summary.txt".into(), summary)],
    })
}

/// Criterion 5: band-route and difference-route norms stay equivalent.
fn c05_norm_equivalence(suite: Suite, seed: u64, _ts: f64) -> Result<CriterionOutcome> {
    let grid = grid1(2048, 8.0 * std::f64::consts::PI);
    let bank = LpBank::build(grid, 5)?;
    let plan = DiffPlan::dense(grid);
    let members = match suite {
        Suite::Full => 50,
        Suite::Smoke => 10,
    };
    let orders: Vec<f64> = match suite {
        Suite::Full => vec![0.5, 1.0, 1.5],
        Suite::Smoke => vec![1.0],
    };
    let rows: Result<Vec<(usize, f64, f64, f64)>> = (0..members)
        .into_par_iter()
        .map(|id| {
            let f = band_limited_random(grid, (4.0, 32.0), seed.wrapping_add(id as u64))?;
            let mut out = Vec::new();
            for &m in &orders {
                let (lp, _) = lipschitz_norm_lp(&bank, &f, m, NormVariant::Homogeneous)?;
                let fd = lipschitz_norm_fd(&f, m, &plan)?;
                out.push((id, m, lp, fd));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().flatten().collect());
    let rows = rows?;
    let mut table = Csv::new(&["member", "m", "lp_norm", "fd_norm", "ratio"]).stamp(Config::defaults().hash(), seed);
    let mut rmin = f64::INFINITY;
    let mut rmax = 0.0f64;
    for &(id, m, lp, fd) in &rows {
        let ratio = lp / fd;
        rmin = rmin.min(ratio);
        rmax = rmax.max(ratio);
        table.push(vec![
            id.to_string(),
            fmt_f64(m),
            fmt_f64(lp),
            fmt_f64(fd),
            fmt_f64(ratio),
        ]);
    }
    let spread = rmax / rmin;
    let mut passed = spread < 10.0;
    // single-annulus modes reproduce 2^{nm} exactly through the band route
    let mut annulus_err = 0.0f64;
    for n in [2i32, 3, 4, 5] {
        let f = Field::from_physical_fn(grid, |x| {
            Complex64::new((2f64.powi(n) * x[0]).cos(), 0.0)
        });
        for &m in &orders {
            let (lp, _) = lipschitz_norm_lp(&bank, &f, m, NormVariant::Homogeneous)?;
            let want = 2f64.powi(n).powf(m);
            annulus_err = annulus_err.max((lp - want).abs() / want);
        }
    }
    passed &= annulus_err < 1e-6;
    Ok(CriterionOutcome {
        id: "c05",
        name: "norm-equivalence",
        passed,
        details: format!("ratio spread {spread:.2}, annulus error {annulus_err:.1e}"),
        artifacts: vec![("c05_norms/equivalence.csv".into(), table.render())],
    })
}

/// Criterion 6: band-kernel L1 decay collapses onto one exponential curve.
fn c06_band_decay(suite: Suite, seed: u64, tol_scale: f64) -> Result<CriterionOutcome> {
    let grid = match suite {
        Suite::Full => grid1(8192, 32.0),
        Suite::Smoke => grid1(4096, 32.0),
    };
    let spec = fl(2.0, 1.0, TimeProfile::constant(1.0));
    let bands: Vec<i32> = match suite {
        Suite::Full => vec![2, 3, 4],
        Suite::Smoke => vec![2, 3],
    };
    let xs = [4.0, 8.0, 16.0, 32.0, 64.0];
    let mut table = Csv::new(&["n", "gap", "x", "l1", "slope", "residual"]).stamp(Config::defaults().hash(), seed);
    let mut passed = true;
    let mut curves: Vec<Vec<f64>> = Vec::new();
    let mut worst_resid = 0.0f64;
    for &n in &bands {
        let gaps: Vec<f64> = xs.iter().map(|&x| x / 2f64.powi(n).powf(spec.gamma())).collect();
        let fit = band_kernel_decay(&spec, grid, n, &gaps, 2.5)?;
        passed &= fit.slope < 0.0 && fit.residual < 0.05 * tol_scale;
        worst_resid = worst_resid.max(fit.residual);
        for (i, &(x, l1)) in fit.pairs.iter().enumerate() {
            table.push(vec![
                n.to_string(),
                fmt_f64(gaps[i]),
                fmt_f64(x),
                fmt_f64(l1),
                fmt_f64(fit.slope),
                fmt_f64(fit.residual),
            ]);
        }
        curves.push(fit.pairs.iter().map(|&(_, y)| y).collect());
    }
    let mut spread = 0.0f64;
    for i in 0..xs.len() {
        let vals: Vec<f64> = curves.iter().map(|c| c[i]).collect();
        let max = vals.iter().cloned().fold(0.0, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        spread = spread.max(max / min - 1.0);
    }
    passed &= spread < 0.10 * tol_scale;
    Ok(CriterionOutcome {
        id: "c06",
        name: "band-kernel-decay",
        passed,
        details: format!("collapse spread {spread:.3}, worst residual {worst_resid:.3}"),
        artifacts: vec![("c06_band_decay/curves.csv".into(), table.render())],
    })
}

/// First-principles cap for the single-kernel smoothing ratio: a
/// Cauchy-Schwarz bound on the windowed kernels gives
/// ratio <= max(||p||_1, sqrt(7.5 L / pi) (kappa 4^gamma / nu)^kappa
///              e^{-kappa} g^{1-kappa}) with kappa = 1 + 1/(2 gamma).
fn smoothing_cap(gamma: f64, nu: f64, l: f64, gmin: f64) -> f64 {
    let kappa = 1.0 + 0.5 / gamma;
    let band = (7.5 * l / std::f64::consts::PI).sqrt()
        * (kappa * 4f64.powf(gamma) / nu).powf(kappa)
        * (-kappa).exp()
        * gmin.powf(1.0 - kappa);
    (1.1 * band).max(1.05)
}

/// Analogous cap for the difference-kernel ratio at lead time g*.
fn smoothing_diff_cap(gamma: f64, nu: f64, l: f64, lead: f64) -> f64 {
    let kappa = 2.0 + 0.5 / gamma;
    let band = (7.5 * l / std::f64::consts::PI).sqrt() / nu
        * 4f64.powf(gamma)
        * lead.powi(2)
        * (kappa * 4f64.powf(gamma) / (nu * lead * std::f64::consts::E)).powf(kappa);
    let low_band = (4.0 * l / std::f64::consts::PI).sqrt() / nu * 2f64.powf(gamma);
    (1.1 * band).max(low_band)
}

/// Criterion 7: convolution smoothing ratios stay under the derived caps.
fn c07_smoothing(suite: Suite, seed: u64, _ts: f64) -> Result<CriterionOutcome> {
    let l = 8.0 * std::f64::consts::PI;
    let grid = grid1(2048, l);
    let bank = LpBank::build(grid, 5)?;
    let gammas: Vec<f64> = match suite {
        Suite::Full => vec![2.0, 1.0],
        Suite::Smoke => vec![2.0],
    };
    let members = match suite {
        Suite::Full => 6,
        Suite::Smoke => 3,
    };
    let gaps: Vec<f64> = match suite {
        Suite::Full => (0..=6).map(|k| 2f64.powi(k - 6)).collect(),
        Suite::Smoke => (0..=3).map(|k| 2f64.powi(k - 3)).collect(),
    };
    let offsets: Vec<f64> = (2..=6).map(|k| 2f64.powi(-k)).collect();
    let m = 1.0;
    let mut table = Csv::new(&["gamma", "member", "gap", "ratio_inhom", "ratio_hom"])
        .stamp(Config::defaults().hash(), seed);
    let mut dtable =
        Csv::new(&["gamma", "member", "offset", "ratio_inhom"]).stamp(Config::defaults().hash(), seed);
    let mut passed = true;
    let mut max_single = 0.0f64;
    let mut max_diff = 0.0f64;
    for &gamma in &gammas {
        let spec = fl(gamma, 1.0, TimeProfile::constant(1.0));
        let cap = smoothing_cap(gamma, 1.0, l, gaps[0]);
        let dcap = smoothing_diff_cap(gamma, 1.0, l, 0.5);
        let mut fields: Vec<Field> = (0..members)
            .map(|i| band_limited_random(grid, (4.0, 32.0), seed.wrapping_add(1000 + i as u64)))
            .collect::<Result<Vec<_>>>()?;
        fields.push(Field::from_physical_fn(grid, |x| {
            Complex64::new((8.0 * x[0]).cos(), 0.0)
        }));
        fields.push(Field::from_physical_fn(grid, |x| {
            Complex64::new((16.0 * x[0]).cos(), 0.0)
        }));
        for (i, f) in fields.iter().enumerate() {
            let rows = smoothing_probe(&spec, &bank, f, m, &gaps, 1.0)?;
            for r in &rows {
                max_single = max_single.max(r.ratio_inhom.max(r.ratio_hom));
                passed &= r.ratio_inhom <= cap && r.ratio_hom <= cap;
                table.push(vec![
                    fmt_f64(gamma),
                    i.to_string(),
                    fmt_f64(r.gap),
                    fmt_f64(r.ratio_inhom),
                    fmt_f64(r.ratio_hom),
                ]);
            }
            let drows = smoothing_difference_probe(&spec, &bank, f, m, &offsets, 0.5, 1.0)?;
            for r in &drows {
                max_diff = max_diff.max(r.ratio_inhom);
                passed &= r.ratio_inhom <= dcap;
                dtable.push(vec![
                    fmt_f64(gamma),
                    i.to_string(),
                    fmt_f64(r.gap),
                    fmt_f64(r.ratio_inhom),
                ]);
            }
        }
    }
    Ok(CriterionOutcome {
        id: "c07",
        name: "smoothing-bound",
        passed,
        details: format!("max single {max_single:.3}, max difference {max_diff:.3}"),
        artifacts: vec![
            ("c07_smoothing/single.csv".into(), table.render()),
            ("c07_smoothing/difference.csv".into(), dtable.render()),
        ],
    })
}

fn adjoint_setup(grid: SpectralGrid, steps: usize) -> Result<SpacetimeField> {
    // Gaussian in x, smooth compact bump in t; the widths keep the
    // first-order quadrature term dominant over curvature effects
    SpacetimeField::from_fn(grid, 1.0, steps, |t, x| {
        let u = (t - 0.1) / 0.8;
        let w = crate::testfn::unit_time_bump(u);
        Complex64::new(w * (-x[0] * x[0] / 2.88).exp(), 0.0)
    })
}

/// Criterion 8: reconstruction error small at the base resolution and
/// halving under time refinement.
fn c08_adjoint(suite: Suite, _seed: u64, _ts: f64) -> Result<CriterionOutcome> {
    let grid = grid1(128, 16.0);
    let spec = fl(2.0, 1.0, TimeProfile::constant(1.0));
    let (k_base, bound, window) = match suite {
        Suite::Full => (512usize, 1e-3, 0.4..=0.6),
        Suite::Smoke => (128, 1e-2, 0.3..=0.7),
    };
    let refine = 4usize;
    let mut errs = Vec::new();
    for steps in [k_base, 2 * k_base] {
        let phi = adjoint_setup(grid, steps * refine)?;
        // probe near the bump peak where the time slope is mild; the same
        // probe times are exactly representable on both grids
        let off = (steps / 512).max(1);
        let probes: Vec<(usize, usize)> = [steps / 2 - off, steps / 2, steps / 2 + off]
            .iter()
            .flat_map(|&k| [(k, 64usize), (k, 56), (k, 72), (k, 48), (k, 80)])
            .collect();
        errs.push(adjoint_reproduce(&spec, &phi, refine, &probes)?);
    }
    let ratio = errs[1] / errs[0];
    let passed = errs[0] < bound && window.contains(&ratio);
    Ok(CriterionOutcome {
        id: "c08",
        name: "adjoint-reproduction",
        passed,
        details: format!("err {:.2e} at K={k_base}, refinement ratio {ratio:.3}", errs[0]),
        artifacts: vec![(
            "c08_adjoint/errors.csv".into(),
            {
                let mut t = Csv::new(&["steps", "max_error"]).stamp(Config::defaults().hash(), _seed);
                t.push(vec![k_base.to_string(), fmt_f64(errs[0])]);
                t.push(vec![(2 * k_base).to_string(), fmt_f64(errs[1])]);
                t.render()
            },
        )],
    })
}

fn weak_residual_setup(
    grid: SpectralGrid,
    steps: usize,
    seed: u64,
) -> Result<(SpacetimeField, Vec<SpacetimeField>)> {
    let g = band_limited_random(grid, (0.5, 3.0), seed)?;
    let pi = std::f64::consts::PI;
    // e^t breaks the odd symmetry of the modulation derivative around the
    // test bumps, keeping the leading time-discretization error first order
    let fields: Vec<Field> = (0..=steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            let level = t.exp() * (pi * t).sin().powi(2);
            let mut f = g.clone();
            f.scale(Complex64::new(level, 0.0));
            f
        })
        .collect();
    let f = SpacetimeField::new(1.0, fields)?;
    let phis: Vec<SpacetimeField> = (0..10)
        .map(|i| {
            compact_bump_spacetime(
                grid,
                1.0,
                steps * 4,
                &BumpSpec {
                    t_support: (0.2, 0.75),
                    x_radius: 3.0 + 0.2 * (i % 3) as f64,
                    x_center: vec![-4.5 + i as f64],
                    amplitude: 1.0,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((f, phis))
}

/// Criterion 9: weak-form residual below 1e-3 with first-order convergence.
fn c09_weak_residual(suite: Suite, seed: u64, _ts: f64) -> Result<CriterionOutcome> {
    let grid = grid1(256, 16.0);
    let spec = fl(2.0, 1.0, TimeProfile::constant(1.0));
    let (k_base, bound, window) = match suite {
        Suite::Full => (512usize, 1e-3, 0.35..=0.65),
        Suite::Smoke => (128, 4e-3, 0.3..=0.7),
    };
    let mut residuals = Vec::new();
    for steps in [k_base, 2 * k_base] {
        let (f, phis) = weak_residual_setup(grid, steps, seed)?;
        let sol = solve_mild(&spec, &f)?;
        residuals.push(weak_residual(&spec, &sol.u, &f, &phis)?);
    }
    let ratio = residuals[1] / residuals[0];
    let passed = residuals[0] < bound && window.contains(&ratio);
    Ok(CriterionOutcome {
        id: "c09",
        name: "weak-residual",
        passed,
        details: format!(
            "residual {:.2e} at K={k_base}, refinement ratio {ratio:.3}",
            residuals[0]
        ),
        artifacts: vec![(
            "c09_weak_residual/residuals.csv".into(),
            {
                let mut t = Csv::new(&["steps", "residual"]).stamp(Config::defaults().hash(), seed);
                t.push(vec![k_base.to_string(), fmt_f64(residuals[0])]);
                t.push(vec![(2 * k_base).to_string(), fmt_f64(residuals[1])]);
                t.render()
            },
        )],
    })
}

fn random_profile(seed: u64, nu: f64, pieces: usize) -> TimeProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = (0..pieces)
        .map(|i| (i as f64 / pieces as f64, rng.gen_range(nu..1.0 / nu)))
        .collect();
    TimeProfile::new(points).expect("random profile")
}

struct EstimateSetup {
    grid: SpectralGrid,
    bank_top: i32,
    band: (f64, f64),
    steps: usize,
    base_members: usize,
    grown_members: usize,
}

fn estimate_setup(suite: Suite) -> EstimateSetup {
    match suite {
        Suite::Full => EstimateSetup {
            grid: grid1(2048, 8.0 * std::f64::consts::PI),
            bank_top: 5,
            band: (4.0, 32.0),
            steps: 128,
            base_members: 30,
            grown_members: 100,
        },
        Suite::Smoke => EstimateSetup {
            grid: grid1(1024, 8.0 * std::f64::consts::PI),
            bank_top: 4,
            band: (4.0, 16.0),
            steps: 64,
            base_members: 8,
            grown_members: 16,
        },
    }
}

fn max_ratio(rows: &[crate::solver::RatioRow], upto: usize) -> f64 {
    rows.iter().filter(|r| r.member < upto).map(|r| r.ratio).fold(0.0, f64::max)
}

/// Criteria 10/11 shared protocol: max ratio finite, stable under ensemble
/// growth and under resampling the symbol's time profile.
fn boundedness_protocol(
    suite: Suite,
    seed: u64,
    gammas: &[f64],
    families: &[(String, NormFamily)],
    ps: &[TimeExponent],
    table: &mut Csv,
) -> Result<(bool, f64, f64)> {
    let setup = estimate_setup(suite);
    let nu = 0.5;
    let mut passed = true;
    let mut overall_max = 0.0f64;
    let mut worst_growth = 0.0f64;
    for &gamma in gammas {
        let base_spec =
            fl(gamma, nu, random_profile(seed.wrapping_add(17), nu, 8));
        let resampled_spec =
            fl(gamma, nu, random_profile(seed.wrapping_add(1018), nu, 8));
        let bank = LpBank::build(setup.grid, setup.bank_top)?;
        for (label, family) in families {
            let es = EnsembleSpec {
                grid: setup.grid,
                t_end: 1.0,
                steps: setup.steps,
                band: setup.band,
                members: setup.grown_members,
                seed,
                pieces_choices: vec![4, 8, 16],
            };
            // one solve + norm pass per member serves every time exponent
            let by_p = estimate_ratio_multi(&base_spec, &bank, &es, *family, ps)?;
            let es_small = EnsembleSpec { members: setup.base_members, ..es.clone() };
            let resampled_by_p =
                estimate_ratio_multi(&resampled_spec, &bank, &es_small, *family, ps)?;
            for ((p, rows_p), (_, resampled_rows)) in by_p.iter().zip(&resampled_by_p) {
                let p = *p;
                let base_max = max_ratio(rows_p, setup.base_members);
                let grown_max = max_ratio(rows_p, setup.grown_members);
                let resampled_max = max_ratio(resampled_rows, setup.base_members);
                let growth = grown_max / base_max - 1.0;
                let resample_shift = resampled_max / base_max - 1.0;
                worst_growth = worst_growth.max(growth).max(resample_shift);
                overall_max = overall_max.max(grown_max);
                passed &= base_max.is_finite() && base_max > 0.0;
                passed &= growth <= 0.10 && resample_shift <= 0.10;
                for r in rows_p {
                    table.push(vec![
                        fmt_f64(gamma),
                        label.clone(),
                        match p {
                            TimeExponent::Infinity => "inf".into(),
                            TimeExponent::Finite(v) => fmt_f64(v),
                        },
                        r.member.to_string(),
                        fmt_f64(r.numerator),
                        fmt_f64(r.denominator),
                        fmt_f64(r.ratio),
                    ]);
                }
            }
        }
    }
    Ok((passed, overall_max, worst_growth))
}

/// Criterion 10: the main space-time estimate in the Lipschitz family.
fn c10_main_estimate(suite: Suite, seed: u64, _ts: f64) -> Result<CriterionOutcome> {
    let gammas: Vec<f64> = match suite {
        Suite::Full => vec![2.0, 1.0],
        Suite::Smoke => vec![2.0],
    };
    let orders: Vec<f64> = match suite {
        Suite::Full => vec![0.5, 1.0],
        Suite::Smoke => vec![1.0],
    };
    let families: Vec<(String, NormFamily)> = orders
        .iter()
        .map(|&m| (format!("m={m}"), NormFamily::Lipschitz { m }))
        .collect();
    let ps = [TimeExponent::Finite(2.0), TimeExponent::Infinity];
    let mut table =
        Csv::new(&["gamma", "family", "p", "member", "numerator", "denominator", "ratio"])
            .stamp(Config::defaults().hash(), seed);
    let (passed, max, growth) =
        boundedness_protocol(suite, seed, &gammas, &families, &ps, &mut table)?;
    Ok(CriterionOutcome {
        id: "c10",
        name: "main-estimate",
        passed,
        details: format!("max ratio {max:.3}, worst growth {growth:+.3}"),
        artifacts: vec![("c10_main_estimate/ratios.csv".into(), table.render())],
    })
}

/// Criterion 11: the Holder-family variant plus config-level rejection of
/// integer total orders.
fn c11_holder_estimate(suite: Suite, seed: u64, _ts: f64) -> Result<CriterionOutcome> {
    let gammas: Vec<f64> = match suite {
        Suite::Full => vec![2.0, 1.0],
        Suite::Smoke => vec![2.0],
    };
    let families = vec![(
        "n=0,alpha=0.5".to_string(),
        NormFamily::Holder { n: 0, alpha: 0.5 },
    )];
    let ps = [TimeExponent::Infinity];
    let mut table =
        Csv::new(&["gamma", "family", "p", "member", "numerator", "denominator", "ratio"])
            .stamp(Config::defaults().hash(), seed);
    let (mut passed, max, growth) =
        boundedness_protocol(suite, seed, &gammas, &families, &ps, &mut table)?;
    // integer gamma + alpha must be rejected at validation
    let mut cfg = Config::defaults();
    cfg.set("experiment.family", "holder");
    cfg.set("symbol.gamma", "1.5");
    cfg.set("experiment.alpha", "0.5");
    let rejected = cfg.validate().is_err();
    passed &= rejected;
    Ok(CriterionOutcome {
        id: "c11",
        name: "holder-estimate",
        passed,
        details: format!("max ratio {max:.3}, worst growth {growth:+.3}, integer order rejected {rejected}"),
        artifacts: vec![("c11_holder/ratios.csv".into(), table.render())],
    })
}

/// Criterion 12: weak type-(1,1) level-set ratios under the band-sum cap.
fn c12_weak11(suite: Suite, seed: u64, _ts: f64) -> Result<CriterionOutcome> {
    let l = 8.0 * std::f64::consts::PI;
    let grid = grid1(1024, l);
    let bank = LpBank::build(grid, 4)?;
    let gamma = 2.0;
    let m = 1.0;
    let spec = fl(gamma, 0.5, two_piece());
    let members = match suite {
        Suite::Full => 20,
        Suite::Smoke => 6,
    };
    let es = EnsembleSpec {
        grid,
        t_end: 1.0,
        steps: 128,
        band: (2.0, 8.0),
        members,
        seed,
        pieces_choices: vec![4, 8, 16],
    };
    // pooled median of the solution norm sets the sweep center
    let probe_member = ensemble_member(&es, 0)?;
    let sol = solve_mild(&spec, &probe_member)?;
    let series = crate::solver::lambda_norm_series(
        &bank,
        &sol.u,
        m + gamma,
        NormVariant::Homogeneous,
    )?;
    let mut sorted = series.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2].max(1e-12);
    let lambdas = decade_sweep(median, 3.0, 13);
    let rows = weak11_probe(&spec, &bank, &es, m, &lambdas)?;
    // sum over the source's active bands of the windowed-kernel L1 integral
    // (Cauchy-Schwarz in frequency), a rigorous cap for every ratio
    let cap: f64 = (1..=3)
        .map(|n| {
            (7.5 * l / std::f64::consts::PI).sqrt()
                * 2f64.powi(n).sqrt()
                * 4f64.powf(gamma)
                / spec.nu()
        })
        .sum::<f64>()
        * 1.1;
    let mut table =
        Csv::new(&["member", "lambda", "ratio"]).stamp(Config::defaults().hash(), seed);
    let mut max = 0.0f64;
    for r in &rows {
        max = max.max(r.ratio);
        table.push(vec![r.member.to_string(), fmt_f64(r.lambda), fmt_f64(r.ratio)]);
    }
    let passed = max.is_finite() && max <= cap;
    Ok(CriterionOutcome {
        id: "c12",
        name: "weak-1-1",
        passed,
        details: format!("max ratio {max:.3} (cap {cap:.0})"),
        artifacts: vec![("c12_weak11/levels.csv".into(), table.render())],
    })
}

/// Criterion 13: decomposition properties hold exactly on random dyadic
/// inputs and the worked unit-block example matches its oracle.
fn c13_cz(suite: Suite, seed: u64, _ts: f64) -> Result<CriterionOutcome> {
    let trials = match suite {
        Suite::Full => 1000,
        Suite::Smoke => 100,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(13));
    let mut all_ok = true;
    let mut exact = true;
    for _ in 0..trials {
        let f = random_dyadic_step(&mut rng);
        for lambda in [0.125, 0.5, 2.0] {
            let d = cz_decompose(&f, lambda)?;
            let rep = verify_cz(&d);
            all_ok &= rep.all_ok;
            exact &= rep.max_mean_defect == 0.0 && rep.max_reconstruction_defect == 0.0;
        }
    }
    // worked example: f = 1 on [0,1) at lambda = 1/4
    let f = StepFunction::new(vec![0.0, 1.0], vec![1.0])?;
    let d = cz_decompose(&f, 0.25)?;
    let oracle_ok = d.intervals == vec![DyadicInterval { scale: 1, offset: 0 }]
        && d.averages == vec![0.5]
        && d.good.sup_norm() == 0.5
        && d.bad[0].l1_norm() == 1.0
        && d.bad[0].integral() == 0.0
        && verify_cz(&d).all_ok;
    let passed = all_ok && exact && oracle_ok;
    let summary = key_value_block(&[
        ("trials", trials.to_string()),
        ("all_properties_hold", all_ok.to_string()),
        ("dyadic_arithmetic_exact", exact.to_string()),
        ("worked_example_matches", oracle_ok.to_string()),
    ]);
    Ok(CriterionOutcome {
        id: "c13",
        name: "cz-decomposition",
        passed,
        details: format!("{trials} trials, oracle match {oracle_ok}"),
        artifacts: vec![("c13_cz/summary.txt".into(), summary)],
    })
}

/// Criterion 14: the smoke bundle is byte-identical across two runs.
fn c14_determinism(_suite: Suite, seed: u64, _ts: f64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let first = smoke_bundle(seed)?;
    let second = smoke_bundle(seed)?;
    let identical = first == second;
    let elapsed = start.elapsed().as_secs_f64();
    let passed = identical && elapsed < 120.0;
    Ok(CriterionOutcome {
        id: "c14",
        name: "determinism",
        passed,
        details: format!("byte-identical {identical}, two smoke passes in {elapsed:.1}s"),
        artifacts: Vec::new(),
    })
}

/// All smoke artifacts of criteria 1-13, concatenated deterministically.
fn smoke_bundle(seed: u64) -> Result<Vec<(String, String)>> {
    let mut bundle = Vec::new();
    for &(id, _) in CRITERIA.iter().filter(|&&(id, _)| id != "c14") {
        let outcome = run_criterion(id, Suite::Smoke, seed)?;
        bundle.extend(outcome.artifacts);
    }
    Ok(bundle)
}

/// Tolerance widening and grid shrinking when the environment forces a
/// coarser grid than the defaults; recorded in the report.
fn resolution_scale() -> (f64, usize, Option<String>) {
    if let Ok(v) = std::env::var("SPECPROP_GRID_N") {
        if let Ok(n) = v.parse::<usize>() {
            if n < 256 && n.is_power_of_two() {
                let shrink = 256 / n;
                return (
                    10.0,
                    shrink,
                    Some(format!(
                        "resolution warning: grid.n = {n} below the default 256; kernel \
                         grids shrunk {shrink}x and grid-sensitive tolerances widened 10x"
                    )),
                );
            }
        }
    }
    (1.0, 1, None)
}

/// Run one criterion by id.
pub fn run_criterion(id: &str, suite: Suite, seed: u64) -> Result<CriterionOutcome> {
    let (ts, _, _) = resolution_scale();
    match id {
        "c01" => c01_closed_form(suite, seed, ts),
        "c02" => c02_decay_exponents(suite, seed, ts),
        "c03" => c03_scaling_identity(suite, seed, ts),
        "c04" => c04_partition(suite, seed, ts),
        "c05" => c05_norm_equivalence(suite, seed, ts),
        "c06" => c06_band_decay(suite, seed, ts),
        "c07" => c07_smoothing(suite, seed, ts),
        "c08" => c08_adjoint(suite, seed, ts),
        "c09" => c09_weak_residual(suite, seed, ts),
        "c10" => c10_main_estimate(suite, seed, ts),
        "c11" => c11_holder_estimate(suite, seed, ts),
        "c12" => c12_weak11(suite, seed, ts),
        "c13" => c13_cz(suite, seed, ts),
        "c14" => c14_determinism(suite, seed, ts),
        other => Err(Error::config(format!("unknown criterion '{other}'"))),
    }
}

/// Full reproduction report.
#[derive(Debug, Clone)]
pub struct ReproduceReport {
    pub outcomes: Vec<CriterionOutcome>,
    pub all_passed: bool,
    pub text: String,
}

/// Run the whole suite, optionally writing artifacts under `out_dir`.
pub fn reproduce(
    suite: Suite,
    out_dir: Option<&std::path::Path>,
    seed: u64,
) -> Result<ReproduceReport> {
    let start = Instant::now();
    let (_, _, warning) = resolution_scale();
    let mut outcomes = Vec::new();
    let mut lines = Vec::new();
    if let Some(w) = &warning {
        lines.push(w.clone());
    }
    for &(id, _) in CRITERIA {
        let outcome = run_criterion(id, suite, seed)?;
        lines.push(outcome.line());
        if let Some(dir) = out_dir {
            for (rel, contents) in &outcome.artifacts {
                crate::report::write_atomic(&dir.join(rel), contents)?;
            }
        }
        outcomes.push(outcome);
    }
    let all_passed = outcomes.iter().all(|o| o.passed);
    lines.push(format!(
        "suite {} in {:.1}s: {}",
        match suite {
            Suite::Smoke => "smoke",
            Suite::Full => "full",
        },
        start.elapsed().as_secs_f64(),
        if all_passed { "ALL PASS" } else { "FAILURES" }
    ));
    let text = lines.join("\n") + "\n";
    if let Some(dir) = out_dir {
        crate::report::write_atomic(&dir.join("report.txt"), &text)?;
    }
    Ok(ReproduceReport { outcomes, all_passed, text })
}

/// Config-driven experiment dispatch; returns the artifact bundle.
pub fn run_experiment(cfg: &Config) -> Result<Vec<(String, String)>> {
    cfg.validate()?;
    let name = cfg.get("experiment.name")?.to_string();
    let hash = cfg.hash();
    let seed = cfg.get_u64("experiment.seed")?;
    match name.as_str() {
        "validate-symbol" => {
            let spec = cfg.build_symbol()?;
            let report = spec.validate(&SamplePlan::default(), 1e-4)?;
            let block = key_value_block(&[
                ("passed", report.passed.to_string()),
                ("worst_sym1_margin", fmt_f64(report.worst_sym1_margin)),
                ("worst_sym2_ratio", fmt_f64(report.worst_sym2_ratio)),
                ("sample_count", report.sample_count.to_string()),
                ("d0", report.d0.to_string()),
            ]);
            Ok(vec![("validate_symbol.txt".into(), block)])
        }
        "kernel-norms" => {
            let spec = cfg.build_symbol()?;
            let grid = cfg.build_grid()?;
            let a = cfg.get_usize("experiment.a")? as u32;
            let b = cfg.get_f64("experiment.b")?;
            let alpha: Vec<usize> = match cfg.get("experiment.alpha_index") {
                Ok(text) if !text.is_empty() => text
                    .split(',')
                    .map(|s| {
                        s.trim().parse().map_err(|_| {
                            Error::config(format!("experiment.alpha_index: bad entry '{s}'"))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()?,
                _ => vec![0; spec.dimension()],
            };
            let gaps = cfg.get_f64_list("experiment.gaps")?;
            let mut table =
                Csv::new(&["gap", "l1", "l2", "weighted_l2", "slope_so_far"]).stamp(hash, seed);
            let mut pairs = Vec::new();
            let weight = if alpha.iter().all(|&x| x == 0) {
                KernelWeight::for_kernel(spec.gamma(), a, b, 0.2).ok()
            } else {
                None // the weighted norm is defined for the undifferentiated family
            };
            for &g in &gaps {
                let req = KernelRequest {
                    alpha: alpha.clone(),
                    a,
                    b,
                    s: 1.0 - 0.5 * g,
                    t: 1.0 + 0.5 * g,
                };
                let p = kernel_p(&spec, &req, grid)?;
                let norms = kernel_norms(&p, weight)?;
                pairs.push((g, norms.l1));
                let slope = if pairs.len() >= 4 {
                    crate::kernel::fit_loglog(&pairs)?.slope
                } else {
                    f64::NAN
                };
                table.push(vec![
                    fmt_f64(g),
                    fmt_f64(norms.l1),
                    fmt_f64(norms.l2),
                    norms.weighted_l2.map(fmt_f64).unwrap_or_default(),
                    if slope.is_nan() { String::new() } else { fmt_f64(slope) },
                ]);
            }
            Ok(vec![("kernel_norms.csv".into(), table.render())])
        }
        "kernel-decay" => {
            let spec = cfg.build_symbol()?;
            let grid = cfg.build_grid()?;
            let a = cfg.get_usize("experiment.a")? as u32;
            let b = cfg.get_f64("experiment.b")?;
            let gaps = cfg.get_f64_list("experiment.gaps")?;
            let fit = l1_decay_fit(&spec, grid, a, b, &gaps, cfg.get_f64("time.t_end")? / 2.0)?;
            let mut table = Csv::new(&["gap", "l1", "slope", "residual"]).stamp(hash, seed);
            for &(g, l1) in &fit.pairs {
                table.push(vec![
                    fmt_f64(g),
                    fmt_f64(l1),
                    fmt_f64(fit.slope),
                    fmt_f64(fit.residual),
                ]);
            }
            Ok(vec![("kernel_decay.csv".into(), table.render())])
        }
        "band-decay" => {
            let spec = cfg.build_symbol()?;
            let grid = cfg.build_grid()?;
            let bands = cfg.get_i32_list("experiment.bands")?;
            for &n in &bands {
                if 2f64.powi(n + 2) >= grid.nyquist() {
                    return Err(Error::config(format!(
                        "experiment.bands: the band-{n} window reaches {} but Nyquist is {}",
                        2f64.powi(n + 2),
                        grid.nyquist()
                    )));
                }
            }
            let gaps = cfg.get_f64_list("experiment.gaps")?;
            let center = cfg.get_f64("time.t_end")? / 2.0;
            let mut table = Csv::new(&["n", "x", "l1", "slope", "residual"]).stamp(hash, seed);
            for &n in &bands {
                let fit = band_kernel_decay(&spec, grid, n, &gaps, center)?;
                for &(x, l1) in &fit.pairs {
                    table.push(vec![
                        n.to_string(),
                        fmt_f64(x),
                        fmt_f64(l1),
                        fmt_f64(fit.slope),
                        fmt_f64(fit.residual),
                    ]);
                }
            }
            Ok(vec![("band_decay.csv".into(), table.render())])
        }
        "qhat-bound" => {
            let spec = cfg.build_symbol()?;
            let grid = cfg.build_grid()?;
            let a = cfg.get_usize("experiment.a")? as u32;
            let b = cfg.get_f64("experiment.b")?;
            let req = KernelRequest::plain(a, b, 0.5, 1.0, spec.dimension());
            let c = qhat_frequency_bound(&spec, grid, &req)?;
            Ok(vec![(
                "qhat_bound.txt".into(),
                key_value_block(&[("constant", fmt_f64(c))]),
            )])
        }
        "verify-estimate" => {
            let spec = cfg.build_symbol()?;
            let grid = cfg.build_grid()?;
            let bank_top = cfg
                .get_i32_list("experiment.bands")?
                .into_iter()
                .max()
                .unwrap_or(3);
            let bank = LpBank::build(grid, bank_top)?;
            let p = TimeExponent::parse(cfg.get("experiment.p")?)?;
            let family = match cfg.get("experiment.family")? {
                "holder" => NormFamily::Holder {
                    n: cfg.get_usize("experiment.holder_n")?,
                    alpha: cfg.get_f64("experiment.alpha")?,
                },
                _ => NormFamily::Lipschitz { m: cfg.get_f64("experiment.m")? },
            };
            let es = EnsembleSpec {
                grid,
                t_end: cfg.get_f64("time.t_end")?,
                steps: cfg.get_usize("time.steps")?,
                band: (4.0, 2f64.powi(bank_top)),
                members: cfg.get_usize("experiment.ensemble_size")?,
                seed,
                pieces_choices: vec![4, 8, 16],
            };
            let rows = estimate_ratio(&spec, &bank, &es, family, p)?;
            let mut table =
                Csv::new(&["member", "numerator", "denominator", "ratio"]).stamp(hash, seed);
            let mut ratios: Vec<f64> = Vec::new();
            for r in &rows {
                ratios.push(r.ratio);
                table.push(vec![
                    r.member.to_string(),
                    fmt_f64(r.numerator),
                    fmt_f64(r.denominator),
                    fmt_f64(r.ratio),
                ]);
            }
            ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let summary = key_value_block(&[
                ("members", rows.len().to_string()),
                ("max_ratio", fmt_f64(*ratios.last().unwrap())),
                ("median_ratio", fmt_f64(ratios[ratios.len() / 2])),
            ]);
            Ok(vec![
                ("estimate_ratios.csv".into(), table.render()),
                ("estimate_summary.txt".into(), summary),
            ])
        }
        "weak11" => {
            let spec = cfg.build_symbol()?;
            let grid = cfg.build_grid()?;
            let bank = LpBank::build(grid, 4)?;
            let m = cfg.get_f64("experiment.m")?;
            let es = EnsembleSpec {
                grid,
                t_end: cfg.get_f64("time.t_end")?,
                steps: cfg.get_usize("time.steps")?,
                band: (2.0, 8.0),
                members: cfg.get_usize("experiment.ensemble_size")?,
                seed,
                pieces_choices: vec![4, 8],
            };
            let member = ensemble_member(&es, 0)?;
            let sol = solve_mild(&spec, &member)?;
            let series = crate::solver::lambda_norm_series(
                &bank,
                &sol.u,
                m + spec.gamma(),
                NormVariant::Homogeneous,
            )?;
            let mut sorted = series.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let lambdas = decade_sweep(sorted[sorted.len() / 2].max(1e-12), 3.0, 13);
            let rows = weak11_probe(&spec, &bank, &es, m, &lambdas)?;
            let mut table = Csv::new(&["member", "lambda", "ratio"]).stamp(hash, seed);
            for r in &rows {
                table.push(vec![r.member.to_string(), fmt_f64(r.lambda), fmt_f64(r.ratio)]);
            }
            Ok(vec![("weak11.csv".into(), table.render())])
        }
        "cz-demo" => {
            let bps = cfg.get_f64_list("experiment.breakpoints")?;
            let vals = cfg.get_f64_list("experiment.values")?;
            let lambda = cfg.get_f64("experiment.lambda")?;
            let f = StepFunction::new(bps, vals)?;
            let d = cz_decompose(&f, lambda)?;
            let rep = verify_cz(&d);
            let mut table = Csv::new(&["interval_start", "interval_end", "average"]).stamp(hash, seed);
            for (q, &avg) in d.intervals.iter().zip(&d.averages) {
                table.push(vec![fmt_f64(q.start()), fmt_f64(q.end()), fmt_f64(avg)]);
            }
            let summary = key_value_block(&[
                ("lambda", fmt_f64(lambda)),
                ("selected_intervals", d.intervals.len().to_string()),
                ("good_bounds_ok", rep.good_bounds_ok.to_string()),
                ("disjointness_ok", rep.disjointness_ok.to_string()),
                ("mean_zero_ok", rep.mean_zero_ok.to_string()),
                ("bad_l1_ok", rep.bad_l1_ok.to_string()),
                ("total_length_ok", rep.total_length_ok.to_string()),
                ("reconstruction_ok", rep.reconstruction_ok.to_string()),
                ("all_ok", rep.all_ok.to_string()),
            ]);
            Ok(vec![
                ("cz_intervals.csv".into(), table.render()),
                ("cz_report.txt".into(), summary),
            ])
        }
        "smoothing" => {
            let spec = cfg.build_symbol()?;
            let grid = cfg.build_grid()?;
            let bank = LpBank::build(grid, 5)?;
            let m = cfg.get_f64("experiment.m")?;
            let gaps = cfg.get_f64_list("experiment.gaps")?;
            let f = band_limited_random(grid, (4.0, 32.0), seed)?;
            let rows = smoothing_probe(&spec, &bank, &f, m, &gaps, cfg.get_f64("time.t_end")?)?;
            let mut table = Csv::new(&["gap", "ratio_inhom", "ratio_hom"]).stamp(hash, seed);
            for r in &rows {
                table.push(vec![
                    fmt_f64(r.gap),
                    fmt_f64(r.ratio_inhom),
                    fmt_f64(r.ratio_hom),
                ]);
            }
            Ok(vec![("smoothing.csv".into(), table.render())])
        }
        other => Err(Error::config(format!("experiment.name: unknown experiment '{other}'"))),
    }
}

/// Norm report for a field dump, for the `norms` subcommand. `route`
/// selects which of the two computation routes appear in the block.
pub fn norms_for_field(
    field: &Field,
    m: f64,
    holder: Option<(usize, f64)>,
    route: &str,
    dense: bool,
) -> Result<(String, String)> {
    let grid = field.grid();
    let n_max = (grid.nyquist().log2().floor() as i32 - 1).min(8);
    let bank = LpBank::build(grid, n_max)?;
    let plan = if dense { DiffPlan::dense(grid) } else { DiffPlan::dyadic(grid) };
    let rep = norm_report(&bank, field, m, holder, &plan)?;
    let mut pairs: Vec<(&str, String)> = vec![("l_inf", fmt_f64(rep.l_inf))];
    if route != "fd" {
        pairs.push(("lambda_hom", fmt_f64(rep.lambda_hom)));
        pairs.push(("lambda_inhom", fmt_f64(rep.lambda_inhom)));
    }
    if route != "lp" {
        pairs.push(("lambda_fd", fmt_f64(rep.lambda_fd)));
    }
    pairs.push(("holder", rep.holder.map(fmt_f64).unwrap_or_else(|| "-".into())));
    let block = key_value_block(&pairs);
    let mut table = Csv::new(&["n", "band_value"]);
    for &(n, v) in &rep.bands {
        table.push(vec![n.to_string(), fmt_f64(v)]);
    }
    Ok((block, table.render()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_experiment_is_a_config_error() {
        let mut cfg = Config::defaults();
        cfg.set("experiment.name", "no-such-thing");
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn validate_symbol_experiment_produces_a_block() {
        let mut cfg = Config::defaults();
        cfg.set("experiment.name", "validate-symbol");
        let artifacts = run_experiment(&cfg).unwrap();
        assert_eq!(artifacts.len(), 1);
        assert!(artifacts[0].1.contains("passed = true"));
    }

    #[test]
    fn criterion_ids_are_unique_and_runnable_by_name() {
        let mut seen = std::collections::HashSet::new();
        for &(id, _) in CRITERIA {
            assert!(seen.insert(id));
        }
        assert!(run_criterion("c99", Suite::Smoke, 7).is_err());
    }
}

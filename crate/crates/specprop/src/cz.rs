//! One-dimensional stopping-time decomposition on the dyadic tree: a
//! nonnegative integrable step function f splits at level lambda into a
//! good part g (bounded by 2 lambda) plus mean-zero bad pieces supported
//! on disjoint maximal dyadic intervals of total length <= ||f||_1 / lambda.
//!
//! Breakpoints and values that are dyadic rationals make every average and
//! comparison exact in f64 arithmetic; other inputs fall back to a 1e-12
//! tolerance in the verifier.

use crate::error::{Error, Result};

/// Piecewise-constant function on [x_0, x_M), zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || values.len() != breakpoints.len() - 1 {
            return Err(Error::invalid(
                "step function needs k+1 breakpoints for k values",
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("step function data must be finite"));
        }
        Ok(StepFunction { breakpoints, values })
    }

    pub fn zero() -> Self {
        StepFunction { breakpoints: vec![0.0, 1.0], values: vec![0.0] }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, x: f64) -> f64 {
        if x < self.breakpoints[0] || x >= *self.breakpoints.last().unwrap() {
            return 0.0;
        }
        // pieces are left-closed
        let i = match self.breakpoints.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        self.values[i.min(self.values.len() - 1)]
    }

    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(&v, w)| v * (w[1] - w[0]))
            .sum()
    }

    pub fn integral_over(&self, a: f64, b: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let lo = self.breakpoints[i].max(a);
            let hi = self.breakpoints[i + 1].min(b);
            if hi > lo {
                acc += v * (hi - lo);
            }
        }
        acc
    }

    pub fn l1_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(&v, w)| v.abs() * (w[1] - w[0]))
            .sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    fn sup_over(&self, a: f64, b: f64) -> f64 {
        let mut best = 0.0f64;
        for (i, &v) in self.values.iter().enumerate() {
            if self.breakpoints[i + 1].min(b) > self.breakpoints[i].max(a) {
                best = best.max(v.abs());
            }
        }
        best
    }

    /// Breakpoint span; the support is contained in it.
    pub fn span(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    fn has_interior_breakpoint(&self, a: f64, b: f64) -> bool {
        self.breakpoints.iter().any(|&x| x > a && x < b)
    }
}

/// Dyadic interval [2^k l, 2^k (l+1)).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicInterval {
    pub scale: i32,
    pub offset: i64,
}

impl DyadicInterval {
    pub fn start(&self) -> f64 {
        2f64.powi(self.scale) * self.offset as f64
    }
    pub fn end(&self) -> f64 {
        2f64.powi(self.scale) * (self.offset + 1) as f64
    }
    pub fn length(&self) -> f64 {
        2f64.powi(self.scale)
    }
    pub fn children(&self) -> [DyadicInterval; 2] {
        [
            DyadicInterval { scale: self.scale - 1, offset: 2 * self.offset },
            DyadicInterval { scale: self.scale - 1, offset: 2 * self.offset + 1 },
        ]
    }
    pub fn parent(&self) -> DyadicInterval {
        DyadicInterval { scale: self.scale + 1, offset: self.offset.div_euclid(2) }
    }
    /// The threefold enlargement [2^k(l-1), 2^k(l+2)).
    pub fn enlarged(&self) -> (f64, f64) {
        (self.start() - self.length(), self.end() + self.length())
    }
}

/// Level-lambda decomposition f = g + sum_j b_j.
#[derive(Debug, Clone)]
pub struct CzDecomposition {
    pub lambda: f64,
    pub input: StepFunction,
    pub intervals: Vec<DyadicInterval>,
    pub averages: Vec<f64>,
    pub good: StepFunction,
    pub bad: Vec<StepFunction>,
}

fn average(f: &StepFunction, q: &DyadicInterval) -> f64 {
    f.integral_over(q.start(), q.end()) / q.length()
}

/// Stopping-time descent: select a child the first time its average
/// exceeds lambda; prune branches whose sup is already <= lambda or that
/// carry no interior structure.
fn descend(f: &StepFunction, lambda: f64, q: DyadicInterval, selected: &mut Vec<DyadicInterval>) {
    for child in q.children() {
        let (a, b) = (child.start(), child.end());
        if f.sup_over(a, b) <= lambda {
            continue;
        }
        if average(f, &child) > lambda {
            selected.push(child);
        } else if f.has_interior_breakpoint(a, b) || f.sup_over(a, b) > lambda {
            descend(f, lambda, child, selected);
        }
    }
}

/// Smallest dyadic interval containing [a, b); `None` when the span
/// straddles 0 (no dyadic interval contains a neighborhood of the origin).
fn containing_dyadic(a: f64, b: f64) -> Option<DyadicInterval> {
    if a < 0.0 && b > 0.0 {
        return None;
    }
    let mut scale = (b - a).log2().ceil() as i32;
    loop {
        let len = 2f64.powi(scale);
        let offset = (a / len).floor() as i64;
        let q = DyadicInterval { scale, offset };
        if q.start() <= a && q.end() >= b {
            return Some(q);
        }
        scale += 1;
        if scale > 1100 {
            return None; // not reachable for finite inputs
        }
    }
}

/// The lambda-level decomposition of a nonnegative step function.
pub fn cz_decompose(f: &StepFunction, lambda: f64) -> Result<CzDecomposition> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("lambda must be positive and finite"));
    }
    if f.values.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("decomposition input must be nonnegative"));
    }
    let mass = f.integral();
    let mut selected: Vec<DyadicInterval> = Vec::new();
    if mass > 0.0 {
        let (a, b) = f.span();
        let roots: Vec<DyadicInterval> = match containing_dyadic(a, b) {
            Some(mut root) => {
                // ascend until the root average drops below lambda
                while average(f, &root) > lambda {
                    root = root.parent();
                }
                vec![root]
            }
            None => {
                // span straddles 0: start from the equal-scale mesh whose
                // intervals are long enough to have average <= lambda
                let scale = (mass / lambda).log2().ceil() as i32;
                let len = 2f64.powi(scale);
                let lo = (a / len).floor() as i64;
                let hi = (b / len).ceil() as i64;
                (lo..hi).map(|offset| DyadicInterval { scale, offset }).collect()
            }
        };
        for root in roots {
            if average(f, &root) > lambda {
                // only possible for mesh roots with pathological rounding
                selected.push(root);
            } else {
                descend(f, lambda, root, &mut selected);
            }
        }
    }
    selected.sort_by(|p, q| p.start().partial_cmp(&q.start()).unwrap());
    let averages: Vec<f64> = selected.iter().map(|q| average(f, q)).collect();

    // good part: f off the selected intervals, the average on each of them
    let mut cuts: Vec<f64> = f.breakpoints.clone();
    for q in &selected {
        cuts.push(q.start());
        cuts.push(q.end());
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut good_vals = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let inside = selected.iter().position(|q| q.start() <= mid && mid < q.end());
        good_vals.push(match inside {
            Some(j) => averages[j],
            None => f.value_at(mid),
        });
    }
    let good = StepFunction::new(cuts, good_vals)?;

    let mut bad = Vec::with_capacity(selected.len());
    for (q, &avg) in selected.iter().zip(&averages) {
        let mut bps: Vec<f64> = vec![q.start(), q.end()];
        for &x in &f.breakpoints {
            if x > q.start() && x < q.end() {
                bps.push(x);
            }
        }
        bps.sort_by(|p, r| p.partial_cmp(r).unwrap());
        let vals: Vec<f64> = bps
            .windows(2)
            .map(|w| f.value_at(0.5 * (w[0] + w[1])) - avg)
            .collect();
        bad.push(StepFunction::new(bps, vals)?);
    }
    Ok(CzDecomposition { lambda, input: f.clone(), intervals: selected, averages, good, bad })
}

/// Verification record for the decomposition's defining properties.
#[derive(Debug, Clone)]
pub struct CzReport {
    /// ||g||_1 <= ||f||_1 and ||g||_inf <= 2 lambda
    pub good_bounds_ok: bool,
    /// selected intervals pairwise disjoint, each b_j supported in its Q_j
    pub disjointness_ok: bool,
    /// every b_j integrates to zero over Q_j
    pub mean_zero_ok: bool,
    /// ||b_j||_1 <= 4 lambda |Q_j|
    pub bad_l1_ok: bool,
    /// sum |Q_j| <= ||f||_1 / lambda
    pub total_length_ok: bool,
    /// g + sum b_j = f pointwise on the refined partition
    pub reconstruction_ok: bool,
    /// each parent average is <= lambda (selected intervals are maximal)
    pub maximality_ok: bool,
    pub max_mean_defect: f64,
    pub max_reconstruction_defect: f64,
    pub all_ok: bool,
}

/// Check the full property list with a 1e-12 relative tolerance (exact for
/// dyadic-rational inputs).
pub fn verify_cz(d: &CzDecomposition) -> CzReport {
    let tol = 1e-12;
    let f = &d.input;
    let scale = f.sup_norm().max(f.l1_norm()).max(1.0);
    let slack = tol * scale;

    let good_bounds_ok =
        d.good.l1_norm() <= f.l1_norm() + slack && d.good.sup_norm() <= 2.0 * d.lambda + slack;

    let mut disjointness_ok = true;
    for w in d.intervals.windows(2) {
        if w[1].start() < w[0].end() {
            disjointness_ok = false;
        }
    }
    for (q, b) in d.intervals.iter().zip(&d.bad) {
        for (i, &v) in b.values().iter().enumerate() {
            if v != 0.0 {
                let lo = b.breakpoints()[i];
                let hi = b.breakpoints()[i + 1];
                if lo < q.start() - slack || hi > q.end() + slack {
                    disjointness_ok = false;
                }
            }
        }
    }

    let mut max_mean_defect = 0.0f64;
    for b in &d.bad {
        max_mean_defect = max_mean_defect.max(b.integral().abs());
    }
    let mean_zero_ok = max_mean_defect <= slack;

    let bad_l1_ok = d
        .intervals
        .iter()
        .zip(&d.bad)
        .all(|(q, b)| b.l1_norm() <= 4.0 * d.lambda * q.length() + slack);

    let total: f64 = d.intervals.iter().map(|q| q.length()).sum();
    let total_length_ok = total <= f.l1_norm() / d.lambda + slack;

    // reconstruction on the union of all partitions
    let mut cuts: Vec<f64> = f.breakpoints().to_vec();
    cuts.extend(d.good.breakpoints());
    for b in &d.bad {
        cuts.extend(b.breakpoints());
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut max_reconstruction_defect = 0.0f64;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let mut got = d.good.value_at(mid);
        for b in &d.bad {
            got += b.value_at(mid);
        }
        max_reconstruction_defect = max_reconstruction_defect.max((got - f.value_at(mid)).abs());
    }
    let reconstruction_ok = max_reconstruction_defect <= slack;

    let maximality_ok = d
        .intervals
        .iter()
        .all(|q| average(f, &q.parent()) <= d.lambda + tol * d.lambda);

    let all_ok = good_bounds_ok
        && disjointness_ok
        && mean_zero_ok
        && bad_l1_ok
        && total_length_ok
        && reconstruction_ok
        && maximality_ok;
    CzReport {
        good_bounds_ok,
        disjointness_ok,
        mean_zero_ok,
        bad_l1_ok,
        total_length_ok,
        reconstruction_ok,
        maximality_ok,
        max_mean_defect,
        max_reconstruction_defect,
        all_ok,
    }
}

/// Deterministic random step function with dyadic-rational breakpoints in
/// [0, 8] (grid 1/64) and values in [0, 4] (grid 1/256); exact in f64.
pub fn random_dyadic_step(rng: &mut rand_chacha::ChaCha8Rng) -> StepFunction {
    use rand::Rng;
    let pieces = rng.gen_range(1..=12usize);
    let mut ticks: Vec<i64> = Vec::new();
    while ticks.len() < pieces + 1 {
        let t = rng.gen_range(0..=512i64);
        if !ticks.contains(&t) {
            ticks.push(t);
        }
    }
    ticks.sort_unstable();
    let breakpoints: Vec<f64> = ticks.iter().map(|&t| t as f64 / 64.0).collect();
    let values: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0..=1024i64) as f64 / 256.0).collect();
    StepFunction::new(breakpoints, values).unwrap()
}

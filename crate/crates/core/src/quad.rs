//! Integration against `dmu = dx / M(x)`.
//!
//! Three engines share one adaptive Gauss-Legendre panel rule:
//! - [`integrate`] on a finite interval with interior split points,
//! - [`integrate_mu`] on the line for non-oscillatory integrands (core window
//!   plus tails mapped by `x = X/t`),
//! - [`integrate_mu_breaks`] for integrands that oscillate with the phase of
//!   an HB function. Panels run between consecutive break points, and the
//!   partial integrals over `2K` panels are extrapolated in `1/K`.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hb::HbFunction;
use crate::polyfact::PositivePolynomialMeasure;

const GL_ORDER: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Half-width of the initial core window.
    pub window: f64,
    /// Kinks of the integrand; panels never straddle them.
    pub split_points: Vec<f64>,
    /// Bisection depth limit for a single panel.
    pub max_depth: u32,
    /// Uniform panels per segment before adaptive refinement.
    pub initial_panels: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            window: 50.0,
            split_points: Vec::new(),
            max_depth: 40,
            initial_panels: 8,
        }
    }
}

impl QuadSpec {
    pub fn with_splits(mut self, mut splits: Vec<f64>) -> Self {
        splits.sort_by(f64::total_cmp);
        splits.dedup();
        self.split_points = splits;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.window > 0.0) {
            return Err(Error::InvalidArgument("window must be positive".into()));
        }
        if self.split_points.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("split points must be sorted".into()));
        }
        Ok(())
    }

    fn target(&self, scale: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * scale)
    }
}

/// Value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// Whether [`integrate_mu_breaks`] integrates `f` or `|f|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Signed,
    Abs,
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

fn neumaier(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().collect::<NeumaierSum>().value()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let dp = legendre(n, x).1;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// One Gauss-Legendre panel: `(integral of f, integral of |f|)`.
fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (nodes, weights) = gl20();
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = NeumaierSum::default();
    let mut sa = NeumaierSum::default();
    for (x, w) in nodes.iter().zip(weights) {
        let v = f(c + h * x) * w;
        s.add(v);
        sa.add(v.abs());
    }
    (h * s.value(), h * sa.value())
}

/// Adaptive bisection of one panel to absolute tolerance `tol`.
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    floor: f64,
    depth: u32,
) -> Result<QuadResult> {
    let (whole, _) = panel(f, a, b);
    refine(f, a, b, whole, tol, floor, depth)
}

fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    floor: f64,
    depth: u32,
) -> Result<QuadResult> {
    let m = 0.5 * (a + b);
    let (l, lm) = panel(f, a, m);
    let (r, rm) = panel(f, m, b);
    let halves = l + r;
    let err = (halves - whole).abs();
    if !halves.is_finite() {
        return Err(Error::NoConvergence(format!("non-finite integrand on [{a}, {b}]")));
    }
    // differences below the rounding level of the panel sums carry no information
    let noise = 1e-14 * (lm + rm);
    // `floor` is an absolute per-leaf allowance that does not shrink with depth
    if err <= tol.max(noise).max(floor) || (b - a) <= 1e-11 * (1.0 + a.abs().max(b.abs())) {
        return Ok(QuadResult { value: halves, error: err });
    }
    if depth == 0 {
        return Err(Error::NoConvergence(format!(
            "panel [{a}, {b}] still has error {err:e} > {tol:e}"
        )));
    }
    let left = refine(f, a, m, l, 0.5 * tol, floor, depth - 1)?;
    let right = refine(f, m, b, r, 0.5 * tol, floor, depth - 1)?;
    Ok(QuadResult {
        value: left.value + right.value,
        error: left.error + right.error,
    })
}

/// Segment endpoints of `[a, b]` cut at the interior split points, each
/// segment further cut into `n` equal pieces.
fn segments(a: f64, b: f64, splits: &[f64], n: usize) -> Vec<(f64, f64)> {
    let mut cuts = vec![a];
    cuts.extend(splits.iter().copied().filter(|&s| s > a && s < b));
    cuts.push(b);
    let n = n.max(1);
    cuts.windows(2)
        .flat_map(|w| {
            let h = (w[1] - w[0]) / n as f64;
            (0..n).map(move |i| {
                let lo = w[0] + h * i as f64;
                let hi = if i + 1 == n { w[1] } else { lo + h };
                (lo, hi)
            })
        })
        .collect()
}

/// Integrates over a list of panels in parallel to the spec tolerance.
fn integrate_panels<F>(f: &F, pieces: &[(f64, f64)], spec: &QuadSpec) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    let rough: Vec<(f64, f64)> = pieces.par_iter().map(|&(a, b)| panel(f, a, b)).collect();
    let scale = neumaier(rough.iter().map(|r| r.1));
    let total = spec.target(scale.abs());
    let parts: Vec<QuadResult> = pieces
        .par_iter()
        .zip(rough.par_iter())
        .map(|(&(a, b), &(whole, mag))| {
            // share the budget in proportion to each panel's mass
            let share = if scale > 0.0 { mag / scale } else { 1.0 / pieces.len() as f64 };
            let tol = (0.25 * total * share).max(0.25 * spec.abs_tol / pieces.len() as f64);
            refine(f, a, b, whole, tol, 0.0, spec.max_depth)
        })
        .collect::<Result<_>>()?;
    Ok(QuadResult {
        value: neumaier(parts.iter().map(|p| p.value)),
        error: parts.iter().map(|p| p.error).sum(),
    })
}

/// `int_a^b f(x) dx`, panels split at `spec.split_points`.
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("bad interval [{a}, {b}]")));
    }
    let pieces = segments(a, b, &spec.split_points, spec.initial_panels);
    integrate_panels(&f, &pieces, spec)
}

/// Fixed (non-adaptive) composite rule with `n` panels per segment.
pub fn integrate_fixed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize, splits: &[f64]) -> f64 {
    neumaier(segments(a, b, splits, n).into_iter().map(|(lo, hi)| panel(&f, lo, hi).0))
}

/// `int f dmu` over the line for integrands without sustained oscillation.
///
/// `decay` is an optional certificate `C` with `|f(x)/M(x)| <= C/(1+x^2)`;
/// without it the decay is measured and a non-integrable trend is rejected.
pub fn integrate_mu<F>(
    f: F,
    measure: &PositivePolynomialMeasure,
    spec: &QuadSpec,
    decay: Option<f64>,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    let h = |x: f64| f(x) / measure.eval(x);
    let x0 = spec.window;
    check_decay(&h, x0, decay)?;
    let mut inner_spec = spec.clone();
    inner_spec.rel_tol *= 0.25;
    let core = integrate(h, -x0, x0, &inner_spec)?;
    // x = X/t maps [X, inf) onto (0, 1]
    let right = |t: f64| h(x0 / t) * x0 / (t * t);
    let left = |t: f64| h(-x0 / t) * x0 / (t * t);
    let mut tail_spec = inner_spec.clone();
    tail_spec.split_points.clear();
    let r = integrate(right, 0.0, 1.0, &tail_spec)?;
    let l = integrate(left, 0.0, 1.0, &tail_spec)?;
    let value = neumaier([core.value, r.value, l.value]);
    let error = core.error + r.error + l.error;
    if error > spec.target(value.abs()) {
        return Err(Error::NoConvergence(format!(
            "line integral error {error:e} above tolerance"
        )));
    }
    Ok(QuadResult { value, error })
}

fn check_decay<H: Fn(f64) -> f64>(h: &H, x0: f64, decay: Option<f64>) -> Result<()> {
    for side in [1.0, -1.0] {
        let samples: Vec<f64> = (0..8)
            .map(|j| {
                let x = side * x0 * 2f64.powi(j);
                h(x).abs() * (1.0 + x * x)
            })
            .collect();
        if let Some(c) = decay {
            if let Some(s) = samples.iter().find(|&&s| s > c * (1.0 + 1e-12)) {
                return Err(Error::TailUncertified(format!(
                    "sampled (1+x^2)|f/M| = {s:e} exceeds certificate {c:e}"
                )));
            }
        } else {
            let growing = samples.windows(2).all(|w| w[1] >= 1.5 * w[0]) && samples[7] > 0.0;
            if growing {
                return Err(Error::TailUncertified(format!(
                    "(1+x^2)|f/M| grows from {:e} to {:e}",
                    samples[0], samples[7]
                )));
            }
        }
    }
    Ok(())
}

/// `int f dmu` (or `int |f| dmu`) for integrands oscillating with a phase
/// whose level crossings are `breaks(k)`, increasing in `k` and unbounded in
/// both directions. `extra` adds interior kinks.
pub fn integrate_mu_breaks<F>(
    f: F,
    measure: &PositivePolynomialMeasure,
    breaks: &(dyn Fn(i64) -> f64 + Sync),
    extra: &[f64],
    spec: &QuadSpec,
    mode: Mode,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    let h = |x: f64| f(x) / measure.eval(x);
    let center = locate(breaks, 0.0);
    // initial level: multiple of 4 panels per side covering the window
    let mut k0 = 4i64;
    while k0 < 1 << 20
        && (breaks(center + k0) < spec.window || breaks(center - k0) > -spec.window)
    {
        k0 += 4;
    }
    let mut extra = extra.to_vec();
    extra.sort_by(f64::total_cmp);
    // rough magnitude of the whole integral over the initial window
    let scale = neumaier((-k0..k0).into_par_iter().map(|j| {
        let (a, b) = (breaks(center + j), breaks(center + j + 1));
        panel(&|x: f64| h(x).abs(), a, b).1
    }).collect::<Vec<_>>());
    let floor = 1e-4 * spec.target(scale) / (2 * k0) as f64;

    let panel_value = |k: i64| -> Result<f64> {
        let (a, b) = (breaks(k), breaks(k + 1));
        let inner: Vec<f64> = extra.iter().copied().filter(|&s| s > a && s < b).collect();
        let mut cuts = vec![a];
        cuts.extend(inner);
        if mode == Mode::Abs {
            let mut refined = vec![a];
            for w in cuts.iter().copied().chain([b]).collect::<Vec<_>>().windows(2) {
                refined.extend(sign_changes_in(&h, w[0], w[1]));
                refined.push(w[1]);
            }
            refined.pop();
            cuts = refined;
        }
        cuts.push(b);
        let mut s = NeumaierSum::default();
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let g = |x: f64| match mode {
                Mode::Signed => h(x),
                Mode::Abs => h(x).abs(),
            };
            let (_, mag) = panel(&g, w[0], w[1]);
            let tol = (1e-3 * spec.rel_tol * mag).max(1e-6 * spec.abs_tol);
            s.add(adaptive(&g, w[0], w[1], tol, floor, spec.max_depth)?.value);
        }
        Ok(s.value())
    };

    // panel integrals indexed from center - K to center + K - 1
    let mut lo_vals: Vec<f64> = Vec::new(); // center-1, center-2, ...
    let mut hi_vals: Vec<f64> = Vec::new(); // center, center+1, ...
    let mut partial: Vec<f64> = Vec::new();
    let mut tableau: Vec<Vec<f64>> = Vec::new();
    let mut best = QuadResult { value: f64::NAN, error: f64::INFINITY };
    const MAX_LEVELS: usize = 12;
    for level in 0..MAX_LEVELS {
        let k = k0 << level;
        let have = hi_vals.len() as i64;
        let new_hi: Vec<f64> = (have..k)
            .into_par_iter()
            .map(|j| panel_value(center + j))
            .collect::<Result<_>>()?;
        let new_lo: Vec<f64> = (have..k)
            .into_par_iter()
            .map(|j| panel_value(center - 1 - j))
            .collect::<Result<_>>()?;
        hi_vals.extend(new_hi);
        lo_vals.extend(new_lo);
        partial.push(neumaier(hi_vals.iter().chain(lo_vals.iter()).copied()));

        // Neville-Richardson in h = 1/K with ratio 2
        let mut row = vec![partial[level]];
        if level > 0 {
            let prev = &tableau[level - 1];
            for m in 1..=level {
                let p = (1u64 << m) as f64 - 1.0;
                let v = row[m - 1] + (row[m - 1] - prev[m - 1]) / p;
                row.push(v);
            }
        }
        tableau.push(row);
        if level >= 2 {
            let cur = tableau[level][level];
            let prev = tableau[level - 1][level - 1];
            let err = (cur - prev).abs();
            if err < best.error {
                best = QuadResult { value: cur, error: err };
            }
            if err <= spec.target(cur.abs()) {
                return Ok(best);
            }
        }
    }
    if best.error <= spec.target(best.value.abs()) * 1e3 {
        return Ok(best);
    }
    Err(Error::NoConvergence(format!(
        "extrapolated line integral {:e} with error {:e}",
        best.value, best.error
    )))
}

/// Index `k` with `breaks(k) <= x < breaks(k + 1)`.
fn locate(breaks: &(dyn Fn(i64) -> f64 + Sync), x: f64) -> i64 {
    let (mut lo, mut hi) = (-1i64, 1i64);
    while breaks(lo) > x {
        lo *= 2;
    }
    while breaks(hi) <= x {
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if breaks(mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Sign changes of `h` strictly inside `(a, b)`, found on the panel nodes and
/// bisected.
fn sign_changes_in<H: Fn(f64) -> f64>(h: &H, a: f64, b: f64) -> Vec<f64> {
    let (nodes, _) = gl20();
    let (c, w) = (0.5 * (a + b), 0.5 * (b - a));
    let xs: Vec<f64> = std::iter::once(a)
        .chain(nodes.iter().map(|t| c + w * t))
        .chain(std::iter::once(b))
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| h(x)).collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 1e-13 * scale;
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&x, &v) in xs.iter().zip(&vals) {
        if !v.is_finite() || v.abs() <= noise {
            continue;
        }
        if let Some((xl, vl)) = last {
            if vl.signum() != v.signum() {
                let (mut lo, mut hi) = (xl, x);
                for _ in 0..200 {
                    let m = 0.5 * (lo + hi);
                    if m <= lo || m >= hi {
                        break;
                    }
                    if h(m).signum() == vl.signum() {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                let root = 0.5 * (lo + hi);
                if root > a && root < b {
                    out.push(root);
                }
            }
        }
        last = Some((x, v));
    }
    out
}

/// `int F psi dmu` and `||F||_{L^1(mu)}` for `psi = sgn(A B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annihilation {
    pub integral: QuadResult,
    pub norm: QuadResult,
}

impl Annihilation {
    /// `|int F psi dmu| / ||F||`; zero for `F = 0`.
    pub fn normalized(&self) -> f64 {
        if self.norm.value == 0.0 {
            0.0
        } else {
            self.integral.value.abs() / self.norm.value
        }
    }
}

/// Tests the extremal-signature property of `sgn(A B)` on one function.
pub fn annihilation_residual<F>(
    f: F,
    hb: &HbFunction,
    measure: &PositivePolynomialMeasure,
    spec: &QuadSpec,
) -> Result<Annihilation>
where
    F: Fn(f64) -> f64 + Sync,
{
    let breaks = hb_breaks(hb)?;
    let signed = |x: f64| f(x) * f64::from(hb.signature(x));
    let integral = integrate_mu_breaks(signed, measure, &breaks, &[], spec, Mode::Signed)?;
    let norm = integrate_mu_breaks(&f, measure, &breaks, &[], spec, Mode::Abs)?;
    Ok(Annihilation { integral, norm })
}

/// The sign changes of `sgn(A B)` as an indexed break sequence.
pub fn hb_breaks(hb: &HbFunction) -> Result<impl Fn(i64) -> f64 + Sync + '_> {
    if !(hb.tau() > 0.0) {
        return Err(Error::InvalidArgument(
            "break-aligned quadrature needs tau > 0".into(),
        ));
    }
    Ok(move |k: i64| hb.sign_change(k).expect("tau > 0"))
}

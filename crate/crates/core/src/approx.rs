//! Best `L^1(mu)` approximations of exponential type `2 tau`.
//!
//! Interpolants are evaluated in partial-fraction form. Exchanging the
//! residue series of `g` with the `u`-integral in the defining representation
//! gives
//!
//! ```text
//! I(L, lambda, z) = L(z) * sum_{xi > c} e^{-lambda xi} / (L'(xi) (z - xi))
//! ```
//!
//! which is checked against direct quadrature of both half-plane
//! representations by [`Interpolant::cross_check`]. The truncated exponential
//! uses `I(z) + g(-lambda) L(z)/z`, which is `I` with each term multiplied by
//! `xi / z`; the two-sided exponential uses `I(z) + I(-z)` and the Gaussian
//! `I(G, lambda, z^2)` with `G(z^2) = L(z)`.
//!
//! Every approximant `F` satisfies `sgn(f - F) = psi` off the nodes, where
//! `psi = sgn(A B)` for the matching phase shift, so the error equals
//! `int f psi dmu`.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hb::{choose_alpha, AlphaMode, HbFunction};
use crate::laplace::{GTable, LpFunction, Side};
use crate::polyfact::{factorize, PositivePolynomialMeasure, UFactor};
use crate::quad::{self, Mode, QuadResult, QuadSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const NODE_QUOTIENT_THRESHOLD: f64 = 1e-6;
const BRANCH_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetKind {
    /// `x_+^0 e^{-lambda x}`
    TruncExp,
    /// `e^{-lambda |x|}`
    AbsExp,
    /// `e^{-lambda x^2}`
    Gauss,
    /// `lambda / (pi (x^2 + lambda^2))`
    Poisson,
    /// `x / (pi (x^2 + lambda^2))`
    ConjPoisson,
}

impl TargetKind {
    pub const ALL: [TargetKind; 5] = [
        TargetKind::TruncExp,
        TargetKind::AbsExp,
        TargetKind::Gauss,
        TargetKind::Poisson,
        TargetKind::ConjPoisson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TargetKind::TruncExp => "texp",
            TargetKind::AbsExp => "absexp",
            TargetKind::Gauss => "gauss",
            TargetKind::Poisson => "poisson",
            TargetKind::ConjPoisson => "conj-poisson",
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TargetKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown target '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    kind: TargetKind,
    lambda: f64,
}

impl Target {
    pub fn new(kind: TargetKind, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} must be > 0")));
        }
        Ok(Self { kind, lambda })
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eval(&self, x: f64) -> f64 {
        let l = self.lambda;
        match self.kind {
            TargetKind::TruncExp => {
                if x >= 0.0 {
                    (-l * x).exp()
                } else {
                    0.0
                }
            }
            TargetKind::AbsExp => (-l * x.abs()).exp(),
            TargetKind::Gauss => (-l * x * x).exp(),
            TargetKind::Poisson => l / (PI * (x * x + l * l)),
            TargetKind::ConjPoisson => x / (PI * (x * x + l * l)),
        }
    }

    /// Points where the target is not smooth.
    pub fn kinks(&self) -> &'static [f64] {
        match self.kind {
            TargetKind::TruncExp | TargetKind::AbsExp => &[0.0],
            _ => &[],
        }
    }

    /// Phase shift of the HB function whose `sgn(A B)` is the signature.
    pub fn signature_alpha(&self, u: &UFactor, tau: f64) -> Result<f64> {
        match self.kind {
            TargetKind::TruncExp => choose_alpha(u, tau, AlphaMode::TruncatedExp),
            TargetKind::AbsExp | TargetKind::Gauss | TargetKind::Poisson => {
                choose_alpha(u, tau, AlphaMode::Even)
            }
            TargetKind::ConjPoisson => {
                choose_alpha(u, tau, AlphaMode::Even)?;
                Ok(0.0)
            }
        }
    }
}

/// `L(z) / (z - xi)` for a zero `xi` of `L`, by a midpoint derivative near `xi`.
fn quotient(l: &LpFunction, lz: Complex64, z: Complex64, xi: f64) -> Complex64 {
    let d = z - xi;
    if d.norm() < NODE_QUOTIENT_THRESHOLD * (1.0 + xi.abs()) {
        l.eval_derivs((z + xi) * 0.5).1
    } else {
        lz / d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `I(L, lambda, z)`
    Plain,
    /// `I(L, lambda, z) + g(-lambda) L(z)/z`
    TruncExp,
    /// `I(L, lambda, z) + I(L, lambda, -z)`
    AbsExp,
    /// `I(G_L, lambda, z^2)`
    Gauss,
}

/// Interpolant built from the zeros right of the abscissa.
#[derive(Debug, Clone)]
pub struct Interpolant {
    branch: Branch,
    /// `L`, or `G_L` for the Gaussian.
    l: LpFunction,
    lambda: f64,
    /// `(xi, e^{-lambda xi} / L'(xi))` for zeros `xi > c`.
    nodes: Vec<(f64, f64)>,
}

impl Interpolant {
    pub fn plain(l: &LpFunction, lambda: f64) -> Result<Self> {
        Self::build(Branch::Plain, l.clone(), lambda)
    }

    /// Needs a simple zero at the origin and `L > 0` just right of it.
    pub fn truncated_exp(l: &LpFunction, lambda: f64) -> Result<Self> {
        if l.origin_mult() != 1 {
            return Err(Error::InvalidArgument("L must vanish at the origin".into()));
        }
        Self::build(Branch::TruncExp, l.clone(), lambda)
    }

    /// Needs an even `L` with `L(0) > 0`.
    pub fn abs_exp(l: &LpFunction, lambda: f64) -> Result<Self> {
        if !l.is_even() {
            return Err(Error::NotEven("L must be even".into()));
        }
        if l.origin_mult() > 0 {
            return Err(Error::ZeroAtOrigin);
        }
        Self::build(Branch::AbsExp, l.clone(), lambda)
    }

    /// Needs an even `L` with `L(0) > 0`; interpolates through `G_L`.
    pub fn gauss(l: &LpFunction, lambda: f64) -> Result<Self> {
        Self::build(Branch::Gauss, l.sqrt_lift()?, lambda)
    }

    fn build(branch: Branch, l: LpFunction, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} must be > 0")));
        }
        let c = l.abscissa();
        if !(l.eval_real(c) > 0.0) {
            return Err(Error::InvalidArgument(
                "L must be positive at the abscissa alpha_L/2".into(),
            ));
        }
        let mut nodes = Vec::new();
        let mut largest = 0.0f64;
        for z in l.zeros_above(c) {
            let w = (-lambda * z.x).exp() / z.deriv;
            largest = largest.max(w.abs());
            nodes.push((z.x, w));
            if w.abs() <= 1e-20 * largest || w == 0.0 {
                break;
            }
            if nodes.len() > 1_000_000 {
                return Err(Error::SlowConvergence("interpolation series".into()));
            }
        }
        Ok(Self { branch, l, lambda, nodes })
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The LP function carrying the nodes (`G_L` for the Gaussian).
    pub fn lp(&self) -> &LpFunction {
        &self.l
    }

    /// `(xi, weight)` pairs; the weight is `e^{-lambda xi} / L'(xi)`.
    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self.branch {
            Branch::Gauss => {
                let w = z * z;
                self.plain_at(w, self.l.eval(w))
            }
            _ => self.eval_with(z, self.l.eval(z)),
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        let l = &self.l;
        match self.branch {
            Branch::Plain => self.plain_real(x, l.eval_real(x)),
            Branch::Gauss => self.plain_real(x * x, l.eval_real(x * x)),
            Branch::TruncExp => {
                let lx = l.eval_real(x);
                self.nodes
                    .iter()
                    .map(|&(xi, w)| {
                        let v = if x.abs() < (x - xi).abs() {
                            l.quotient_real(x, lx, 0.0) * xi / (x - xi)
                        } else {
                            l.quotient_real(x, lx, xi) * xi / x
                        };
                        v * w
                    })
                    .sum()
            }
            Branch::AbsExp => {
                let lx = l.eval_real(x);
                self.nodes
                    .iter()
                    .map(|&(xi, w)| {
                        let v = if (x + xi).abs() < (x - xi).abs() {
                            l.quotient_real(x, lx, -xi) * (2.0 * xi) / (x - xi)
                        } else {
                            l.quotient_real(x, lx, xi) * (2.0 * xi) / (x + xi)
                        };
                        v * w
                    })
                    .sum()
            }
        }
    }

    fn plain_real(&self, x: f64, lx: f64) -> f64 {
        self.nodes
            .iter()
            .map(|&(xi, w)| self.l.quotient_real(x, lx, xi) * w)
            .sum()
    }

    fn eval_with(&self, z: Complex64, lz: Complex64) -> Complex64 {
        let l = &self.l;
        match self.branch {
            Branch::Plain | Branch::Gauss => self.plain_at(z, lz),
            Branch::TruncExp => {
                let near_origin = z.norm() < NODE_QUOTIENT_THRESHOLD;
                let q0 = near_origin.then(|| quotient(l, lz, z, 0.0));
                self.nodes
                    .iter()
                    .map(|&(xi, w)| {
                        // w xi L(z) / (z (z - xi))
                        let v = match q0 {
                            Some(q0) => q0 * xi / (z - xi),
                            None => quotient(l, lz, z, xi) * xi / z,
                        };
                        v * w
                    })
                    .sum()
            }
            Branch::AbsExp => self
                .nodes
                .iter()
                .map(|&(xi, w)| {
                    // w L(z) 2 xi / ((z - xi)(z + xi))
                    let v = if (z + xi).norm() < (z - xi).norm() {
                        quotient(l, lz, z, -xi) * (2.0 * xi) / (z - xi)
                    } else {
                        quotient(l, lz, z, xi) * (2.0 * xi) / (z + xi)
                    };
                    v * w
                })
                .sum(),
        }
    }

    /// `L(z) sum w / (z - xi)`.
    fn plain_at(&self, z: Complex64, lz: Complex64) -> Complex64 {
        self.nodes
            .iter()
            .map(|&(xi, w)| quotient(&self.l, lz, z, xi) * w)
            .sum()
    }

    /// Table of `g` for [`Interpolant::cross_check`], with `-lambda` as a
    /// panel boundary.
    pub fn g_table(&self) -> Result<GTable> {
        let t_max = 10.0 + 2.0 * self.lambda;
        self.l.g_table(t_max, 0.25, &[-self.lambda])
    }

    /// Compares the partial-fraction evaluation of `I(L, lambda, .)` with
    /// quadrature of `L(z) int_{-inf}^0 e^{-zu} g(u - lambda) du` and of
    /// `e^{-lambda z} - L(z) int_0^inf e^{-zu} g(u - lambda) du` at two
    /// points of the zero-free strip. Returns the largest discrepancy.
    pub fn cross_check(&self, table: &GTable) -> Result<f64> {
        let c = self.l.abscissa();
        let mut worst = 0.0f64;
        for z in [Complex64::new(c, 0.0), Complex64::new(c, 0.5)] {
            let lz = self.l.eval(z);
            let fast = self.plain_at(z, lz);
            let shift = (-z * self.lambda).exp();
            let below = table.partial_laplace(z, -self.lambda, Side::Below)?;
            let above = table.partial_laplace(z, -self.lambda, Side::Above)?;
            let i1 = lz * shift * below;
            let i2 = shift - lz * shift * above;
            for q in [i1, i2] {
                let d = (q - fast).norm();
                worst = worst.max(d / fast.norm().max(1.0));
                if d > BRANCH_TOLERANCE * fast.norm().max(1.0) {
                    return Err(Error::BranchMismatch {
                        fast: fast.re,
                        quadrature: q.re,
                    });
                }
            }
        }
        Ok(worst)
    }
}

/// `K_{lambda,E}` (Poisson) or `L_{lambda,E}` (conjugate Poisson) for
/// `E = E_{tau,0}` with `E(-z) = E*(z)`.
#[derive(Debug, Clone)]
pub struct PoissonApproximant {
    hb: HbFunction,
    lambda: f64,
    conj: bool,
    /// `E(i lambda)`, `E(-i lambda)`: real by parity.
    e_plus: f64,
    e_minus: f64,
    /// `E(i lambda)^2 +- E*(i lambda)^2`.
    denom: f64,
}

impl PoissonApproximant {
    pub fn new(u: &UFactor, tau: f64, lambda: f64, conj: bool) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} must be > 0")));
        }
        let hb = HbFunction::build(u.clone(), tau, 0.0)?;
        let probes = [
            Complex64::new(0.3, 0.2),
            Complex64::new(-1.1, 0.7),
            Complex64::new(2.5, -0.4),
            Complex64::new(0.0, lambda),
        ];
        let defect = probes
            .iter()
            .map(|&z| (hb.e(-z) - hb.e_star(z)).norm() / hb.e(z).norm().max(hb.e_star(z).norm()))
            .fold(0.0, f64::max);
        if defect > 1e-10 {
            return Err(Error::ParityViolated(defect));
        }
        let e_plus = hb.e(Complex64::new(0.0, lambda)).re;
        let e_minus = hb.e(Complex64::new(0.0, -lambda)).re;
        let denom = if conj {
            e_plus * e_plus - e_minus * e_minus
        } else {
            e_plus * e_plus + e_minus * e_minus
        };
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::DegenerateDenominator);
        }
        Ok(Self { hb, lambda, conj, e_plus, e_minus, denom })
    }

    pub fn hb(&self) -> &HbFunction {
        &self.hb
    }

    /// `(E(i lambda), E(-i lambda))`.
    pub fn e_values(&self) -> (f64, f64) {
        (self.e_plus, self.e_minus)
    }

    /// `E^2 + E*^2` (or `E^2 - E*^2`) and its derivative.
    fn h(&self, z: Complex64) -> (Complex64, Complex64) {
        let (e, e1, _) = self.hb.e_derivs(z);
        let (s, s1, _) = self.hb.e_star_derivs(z);
        if self.conj {
            (e * e - s * s, (e * e1 - s * s1) * 2.0)
        } else {
            (e * e + s * s, (e * e1 + s * s1) * 2.0)
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let lam = self.lambda;
        let (ip, im) = (I * lam, -I * lam);
        let thr = NODE_QUOTIENT_THRESHOLD * lam;
        // near a pole of P the numerator vanishes; use its midpoint derivative
        let near = [(ip, im), (im, ip)]
            .into_iter()
            .find(|(z0, _)| (z - z0).norm() < thr);
        if self.conj {
            if let Some((z0, other)) = near {
                let (_, dh) = self.h((z + z0) * 0.5);
                let dn = Complex64::new(1.0, 0.0) - I * lam * dh / self.denom;
                return dn / ((z - other) * PI);
            }
            let p = lam / (PI * (z * z + lam * lam));
            let (h, _) = self.h(z);
            p * (z - I * lam * h / self.denom) / lam
        } else {
            if let Some((z0, other)) = near {
                let (_, dh) = self.h((z + z0) * 0.5);
                return -dh * lam / ((z - other) * PI * self.denom);
            }
            let p = lam / (PI * (z * z + lam * lam));
            let (h, _) = self.h(z);
            p * (Complex64::new(1.0, 0.0) - h / self.denom)
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval(Complex64::new(x, 0.0)).re
    }

    pub fn error_closed_form(&self) -> Result<f64> {
        poisson_error_closed_form(self.e_plus, self.e_minus, self.conj)
    }
}

/// `4/(pi E(i lambda) E(-i lambda)) * arctan(ratio)` (arctanh for the
/// conjugate kernel), with the limit `4/(pi E(i lambda)^2)` when the ratio
/// `E(-i lambda)/E(i lambda)` vanishes.
pub fn poisson_error_closed_form(e_plus: f64, e_minus: f64, conj: bool) -> Result<f64> {
    let ratio = e_minus / e_plus;
    if !(ratio.abs() < 1.0) {
        return Err(Error::RatioOutOfRange(ratio));
    }
    if ratio.abs() < 1e-10 {
        return Ok(4.0 / (PI * e_plus * e_plus));
    }
    let f = if conj { ratio.atanh() } else { ratio.atan() };
    Ok(4.0 / (PI * e_plus * e_minus) * f)
}

#[derive(Debug, Clone)]
pub enum Approximant {
    Interp(Interpolant),
    Poisson(PoissonApproximant),
}

impl Approximant {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Approximant::Interp(i) => i.eval(z),
            Approximant::Poisson(p) => p.eval(z),
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        match self {
            Approximant::Interp(i) => i.eval_real(x),
            Approximant::Poisson(p) => p.eval_real(x),
        }
    }

    /// `log|F(iy)| / y`, tending to at most `2 tau`.
    pub fn type_estimate(&self, y: f64) -> f64 {
        self.eval(Complex64::new(0.0, y)).norm().ln() / y
    }
}

/// The approximant for `target` together with the HB function whose
/// `sgn(A B)` is the extremal signature.
pub fn build_approximant(u: &UFactor, tau: f64, target: &Target) -> Result<(Approximant, HbFunction)> {
    let alpha = target.signature_alpha(u, tau)?;
    let psi = HbFunction::build(u.clone(), tau, alpha)?;
    let lambda = target.lambda();
    let approx = match target.kind() {
        TargetKind::TruncExp => {
            Approximant::Interp(Interpolant::truncated_exp(&LpFunction::from_hb(&psi)?, lambda)?)
        }
        TargetKind::AbsExp => {
            Approximant::Interp(Interpolant::abs_exp(&LpFunction::from_hb(&psi)?, lambda)?)
        }
        TargetKind::Gauss => {
            Approximant::Interp(Interpolant::gauss(&LpFunction::from_hb(&psi)?, lambda)?)
        }
        TargetKind::Poisson => Approximant::Poisson(PoissonApproximant::new(u, tau, lambda, false)?),
        TargetKind::ConjPoisson => {
            Approximant::Poisson(PoissonApproximant::new(u, tau, lambda, true)?)
        }
    };
    Ok((approx, psi))
}

/// `int f psi dmu`, the lower bound attained by the best approximation.
pub fn signed_error(
    target: &Target,
    psi: &HbFunction,
    measure: &PositivePolynomialMeasure,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    let breaks = quad::hb_breaks(psi)?;
    let f = |x: f64| target.eval(x) * f64::from(psi.signature(x));
    quad::integrate_mu_breaks(f, measure, &breaks, target.kinks(), spec, Mode::Signed)
}

/// `int |F - f| dmu`, with panels cut at the sign changes of `psi`.
pub fn l1_error<F>(
    approx: F,
    target: &Target,
    psi: &HbFunction,
    measure: &PositivePolynomialMeasure,
    spec: &QuadSpec,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    let breaks = quad::hb_breaks(psi)?;
    let d = |x: f64| approx(x) - target.eval(x);
    quad::integrate_mu_breaks(d, measure, &breaks, target.kinks(), spec, Mode::Abs)
}

/// Zeros of `A B` ordered by distance from the origin.
pub fn innermost_zeros(psi: &HbFunction, count: usize, skip_origin: bool) -> Result<Vec<f64>> {
    let mut r = 8.0 / psi.tau().max(1e-3);
    loop {
        let mut zs = psi.sign_changes(-r, r)?;
        if skip_origin {
            zs.retain(|&x| x != 0.0);
        }
        if zs.len() >= count + 2 {
            zs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
            zs.truncate(count);
            return Ok(zs);
        }
        r *= 2.0;
    }
}

/// `max |F(xi) - f(xi)|` over the `count` innermost nodes.
pub fn node_residual(
    approx: &Approximant,
    target: &Target,
    psi: &HbFunction,
    count: usize,
) -> Result<f64> {
    let skip = target.kind() == TargetKind::TruncExp;
    Ok(innermost_zeros(psi, count, skip)?
        .into_iter()
        .map(|x| (approx.eval_real(x) - target.eval(x)).abs())
        .fold(0.0, f64::max))
}

/// Outcome of comparing `sgn(f - F)` with `psi` on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignCheck {
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<f64>,
}

/// Evenly spaced grid of `n` points on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Counts grid points off the nodes where `sgn(f - F) != psi`.
pub fn sign_check(
    approx: &Approximant,
    target: &Target,
    psi: &HbFunction,
    xs: &[f64],
) -> Result<SignCheck> {
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let nodes = psi.sign_changes(lo - 1.0, hi + 1.0)?;
    let off_node = |x: f64| {
        let i = nodes.partition_point(|&n| n < x);
        let near = |j: usize| nodes.get(j).is_some_and(|&n| (n - x).abs() <= NODE_QUOTIENT_THRESHOLD * (1.0 + n.abs()));
        !(near(i) || (i > 0 && near(i - 1)))
    };
    let bad: Vec<(bool, f64)> = xs
        .par_iter()
        .filter(|&&x| off_node(x) && psi.signature(x) != 0)
        .map(|&x| {
            let d = target.eval(x) - approx.eval_real(x);
            let s = if d > 0.0 { 1 } else if d < 0.0 { -1 } else { 0 };
            (s != psi.signature(x), x)
        })
        .collect();
    Ok(SignCheck {
        checked: bad.len(),
        violations: bad.iter().filter(|b| b.0).count(),
        first_violation: bad.iter().find(|b| b.0).map(|b| b.1),
    })
}

/// Weight `w` with `|F - f| <= C |A B| / w` on the real line.
///
/// `1 + x^2` in general. The truncated exponential jumps at the origin where
/// `A B` vanishes, so there the weight is `|x| (1 + |x|)`.
pub fn growth_weight(target: &Target, x: f64) -> f64 {
    match target.kind() {
        TargetKind::TruncExp => x.abs() * (1.0 + x.abs()),
        _ => 1.0 + x * x,
    }
}

/// `sup |F - f| w(x) / |A B|` over the grid points away from the nodes.
pub fn growth_constant(approx: &Approximant, target: &Target, psi: &HbFunction, xs: &[f64]) -> f64 {
    xs.par_iter()
        .filter_map(|&x| {
            let (a, b) = psi.ab_real(x);
            let l = a * b;
            (l.abs() > 1e-6 * psi.modulus_sq(x)).then(|| {
                (approx.eval_real(x) - target.eval(x)).abs() * growth_weight(target, x) / l.abs()
            })
        })
        .reduce(|| 0.0, f64::max)
}

/// `Re` or `Im` of `K(w, x) K(w2, x)`: real on the line, integrable and of
/// exponential type `2 tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelProduct {
    pub w: Complex64,
    pub w2: Complex64,
    pub imag: bool,
}

impl KernelProduct {
    pub fn eval(&self, hb: &HbFunction, x: f64) -> f64 {
        let z = Complex64::new(x, 0.0);
        let v = hb.kernel(self.w, z) * hb.kernel(self.w2, z);
        if self.imag {
            v.im
        } else {
            v.re
        }
    }
}

/// `count` kernel products with seeded random parameters in
/// `[-3, 3] x [-1.5, 1.5]`, alternating real and imaginary parts.
pub fn kernel_products(count: usize, seed: u64) -> Vec<KernelProduct> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-1.5..1.5));
    (0..count)
        .map(|i| KernelProduct {
            w: point(&mut rng),
            w2: point(&mut rng),
            imag: i % 2 == 1,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationCheck {
    /// `int |F - f| dmu`.
    pub base: f64,
    /// Largest `base - int |F + delta G - f| dmu` over the trials.
    pub worst_decrease: f64,
    pub trials: usize,
}

/// Compares the error of `F` with that of `F + delta G` for random kernel
/// products `G` and step sizes `delta`.
pub fn perturbation_check(
    approx: &Approximant,
    target: &Target,
    psi: &HbFunction,
    measure: &PositivePolynomialMeasure,
    spec: &QuadSpec,
    trials: usize,
    seed: u64,
) -> Result<PerturbationCheck> {
    let base = l1_error(|x| approx.eval_real(x), target, psi, measure, spec)?.value;
    let breaks = quad::hb_breaks(psi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut worst = f64::NEG_INFINITY;
    for g in kernel_products(trials, seed) {
        let norm = quad::integrate_mu_breaks(|x| g.eval(psi, x), measure, &breaks, &[], spec, Mode::Abs)?.value;
        if norm == 0.0 {
            continue;
        }
        let size = 10f64.powf(rng.gen_range(-3.0..-1.0));
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let delta = sign * size * base / norm;
        let perturbed = l1_error(
            |x| approx.eval_real(x) + delta * g.eval(psi, x),
            target,
            psi,
            measure,
            spec,
        )?
        .value;
        worst = worst.max(base - perturbed);
    }
    Ok(PerturbationCheck {
        base,
        worst_decrease: worst,
        trials,
    })
}

#[derive(Debug, Clone)]
pub struct ApproxOptions {
    pub spec: QuadSpec,
    /// Sign-check grid `(lo, hi, n)`.
    pub grid: (f64, f64, usize),
    /// Number of innermost nodes for the residual check.
    pub node_count: usize,
    /// Run the quadrature cross-check of the partial-fraction evaluation.
    pub cross_check: bool,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            spec: QuadSpec::default(),
            grid: (-20.0, 20.0, 10_000),
            node_count: 10,
            cross_check: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub target: Target,
    pub tau: f64,
    pub approximant: Approximant,
    /// `psi = sgn(A B)` of this function.
    pub signature: HbFunction,
    pub error_quadrature: QuadResult,
    pub error_signed: QuadResult,
    pub error_closed_form: Option<f64>,
    pub node_residual: f64,
    pub sign_check: SignCheck,
    pub branch_discrepancy: Option<f64>,
}

impl ApproxResult {
    pub fn psi(&self, x: f64) -> i8 {
        self.signature.signature(x)
    }

    /// Relative gap between the quadrature error and the reference value
    /// (closed form when available, signed integral otherwise).
    pub fn relative_gap(&self) -> f64 {
        let reference = self.error_closed_form.unwrap_or(self.error_signed.value);
        (self.error_quadrature.value - reference).abs() / reference.abs()
    }
}

/// Builds the best approximation and all diagnostics.
pub fn approximate(
    measure: &PositivePolynomialMeasure,
    tau: f64,
    target: Target,
    opts: &ApproxOptions,
) -> Result<ApproxResult> {
    let u = factorize(measure)?;
    let (approximant, psi) = build_approximant(&u, tau, &target)?;
    let branch_discrepancy = match (&approximant, opts.cross_check) {
        (Approximant::Interp(i), true) => Some(i.cross_check(&i.g_table()?)?),
        _ => None,
    };
    let error_closed_form = match &approximant {
        Approximant::Poisson(p) => Some(p.error_closed_form()?),
        Approximant::Interp(_) => None,
    };
    let error_quadrature = l1_error(|x| approximant.eval_real(x), &target, &psi, measure, &opts.spec)?;
    let error_signed = signed_error(&target, &psi, measure, &opts.spec)?;
    let node_residual = node_residual(&approximant, &target, &psi, opts.node_count)?;
    let (lo, hi, n) = opts.grid;
    let sign_check = sign_check(&approximant, &target, &psi, &grid(lo, hi, n))?;
    Ok(ApproxResult {
        target,
        tau,
        approximant,
        signature: psi,
        error_quadrature,
        error_signed,
        error_closed_form,
        node_residual,
        sign_check,
        branch_discrepancy,
    })
}

/// `alpha = pi/4`: the phase shift making `A B` even.
pub const EVEN_ALPHA: f64 = FRAC_PI_4;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyfact::validate_measure;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cubic() -> LpFunction {
        LpFunction::finite(&[-1.0, 1.0], 1, 1.0).unwrap()
    }

    fn cauchy() -> (PositivePolynomialMeasure, UFactor) {
        let m = validate_measure(&[1.0, 0.0, 1.0]).unwrap();
        let u = factorize(&m).unwrap();
        (m, u)
    }

    #[test]
    fn target_names_round_trip() {
        for k in TargetKind::ALL {
            assert_eq!(k.name().parse::<TargetKind>().unwrap(), k);
        }
        assert!("bogus".parse::<TargetKind>().is_err());
        assert!(Target::new(TargetKind::Gauss, 0.0).is_err());
        let t = Target::new(TargetKind::TruncExp, 2.0).unwrap();
        assert_eq!(t.eval(0.0), 1.0);
        assert_eq!(t.eval(-1e-300), 0.0);
    }

    #[test]
    fn cubic_truncated_exp_nodes() {
        let f = Interpolant::truncated_exp(&cubic(), 1.0).unwrap();
        assert!((f.eval_real(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(f.eval_real(-1.0).abs() < 1e-15);
        // I(z) = L(z) w/(z - 1) with w = e^{-1}/L'(1) = -e^{-1}/2; g(-1) = e^{-1}/2
        let z = c(0.5, 0.0);
        let l = cubic().eval(z);
        let w = -(-1.0f64).exp() / 2.0;
        let plain = l * w / (z - 1.0);
        let expect = plain + l / z * ((-1.0f64).exp() / 2.0);
        assert!((f.eval(z) - expect).norm() < 1e-15);
    }

    #[test]
    fn cubic_fast_path_matches_quadrature() {
        let f = Interpolant::truncated_exp(&cubic(), 1.0).unwrap();
        let d = f.cross_check(&f.g_table().unwrap()).unwrap();
        assert!(d <= 1e-8, "{d:e}");
    }

    #[test]
    fn cubic_truncated_exp_sign_and_decay() {
        let l = cubic();
        let f = Interpolant::truncated_exp(&l, 1.0).unwrap();
        let target = Target::new(TargetKind::TruncExp, 1.0).unwrap();
        for x in grid(-30.0, 30.0, 3001) {
            if [-1.0, 0.0, 1.0].iter().any(|n| (x - n).abs() < 1e-6) {
                continue;
            }
            let d = f.eval_real(x) - target.eval(x);
            let lx = l.eval_real(x);
            assert!(lx * d <= 0.0, "x = {x}");
            assert!(d.abs() * growth_weight(&target, x) <= 2.0 * lx.abs(), "x = {x}");
        }
    }

    #[test]
    fn plain_interpolant_nodes() {
        let f = Interpolant::plain(&cubic(), 0.7).unwrap();
        assert!((f.eval_real(1.0) - (-0.7f64).exp()).abs() < 1e-15);
        assert!(f.eval_real(0.0).abs() < 1e-15);
        assert!(f.eval_real(-1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unsuitable_lp_functions() {
        let even = LpFunction::finite(&[-1.0, 1.0], 0, 1.0).unwrap();
        assert!(Interpolant::truncated_exp(&even, 1.0).is_err());
        assert!(matches!(Interpolant::abs_exp(&cubic(), 1.0), Err(Error::ZeroAtOrigin)));
        let negative = LpFunction::finite(&[-1.0, 1.0], 1, -1.0).unwrap();
        assert!(Interpolant::truncated_exp(&negative, 1.0).is_err());
    }

    #[test]
    fn abs_exp_is_even_and_interpolates() {
        let (_, u) = cauchy();
        let psi = HbFunction::build(u, 1.0, EVEN_ALPHA).unwrap();
        let f = Interpolant::abs_exp(&LpFunction::from_hb(&psi).unwrap(), 1.0).unwrap();
        for &x in &[0.3, 1.7, 5.2] {
            assert!((f.eval_real(x) - f.eval_real(-x)).abs() < 1e-13);
        }
        let z = c(0.4, 0.9);
        assert!((f.eval(z) - f.eval(-z)).norm() < 1e-12 * f.eval(z).norm());
        for xi in innermost_zeros(&psi, 10, false).unwrap() {
            assert!((f.eval_real(xi) - (-xi.abs()).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn gauss_interpolant_nodes_and_parity() {
        let (_, u) = cauchy();
        let psi = HbFunction::build(u, 1.0, EVEN_ALPHA).unwrap();
        let l = LpFunction::from_hb(&psi).unwrap();
        let f = Interpolant::gauss(&l, 0.5).unwrap();
        for z in l.zeros_above(0.0).take(6) {
            assert!((f.eval_real(z.x) - (-0.5 * z.x * z.x).exp()).abs() < 1e-8);
        }
        let z = c(0.8, 0.3);
        assert!((f.eval(z) - f.eval(-z)).norm() < 1e-13 * f.eval(z).norm());
    }

    #[test]
    fn hb_fast_path_matches_quadrature() {
        let (_, u) = cauchy();
        let psi = HbFunction::build(u.clone(), 1.0, 0.0).unwrap();
        let f = Interpolant::truncated_exp(&LpFunction::from_hb(&psi).unwrap(), 1.0).unwrap();
        assert!(f.cross_check(&f.g_table().unwrap()).unwrap() <= 1e-8);
        let even = HbFunction::build(u, 1.0, EVEN_ALPHA).unwrap();
        let g = Interpolant::gauss(&LpFunction::from_hb(&even).unwrap(), 1.0).unwrap();
        assert!(g.cross_check(&g.g_table().unwrap()).unwrap() <= 1e-8);
    }

    #[test]
    fn poisson_values_at_two_i() {
        let (_, u) = cauchy();
        let p = PoissonApproximant::new(&u, 1.0, 2.0, false).unwrap();
        let (ep, em) = p.e_values();
        let e2 = 2f64.exp();
        assert!((ep - 3.0 * e2).abs() < 1e-12 * ep);
        assert!((em + 1.0 / e2).abs() < 1e-14);
        let expect = 4.0 / (3.0 * PI) * ((-4.0f64).exp() / 3.0).atan();
        assert!((p.error_closed_form().unwrap() - expect).abs() < 1e-15);
        assert!((expect - 2.5911e-3).abs() < 1e-7);
        let q = PoissonApproximant::new(&u, 1.0, 2.0, true).unwrap();
        let eq = q.error_closed_form().unwrap();
        assert!(eq > expect);
        assert!((eq - 4.0 / (3.0 * PI) * ((-4.0f64).exp() / 3.0).atanh()).abs() < 1e-15);
    }

    #[test]
    fn poisson_value_at_origin_by_direct_arithmetic() {
        let (_, u) = cauchy();
        let p = PoissonApproximant::new(&u, 1.0, 2.0, false).unwrap();
        let hb = p.hb();
        let e0 = hb.e(c(0.0, 0.0));
        let s0 = hb.e_star(c(0.0, 0.0));
        let e2 = hb.e(c(0.0, 2.0));
        let s2 = hb.e_star(c(0.0, 2.0));
        let expect = (1.0 / (2.0 * PI)) * (c(1.0, 0.0) - (e0 * e0 + s0 * s0) / (e2 * e2 + s2 * s2));
        assert!((p.eval(c(0.0, 0.0)) - expect).norm() < 1e-15);
    }

    #[test]
    fn removable_singularities() {
        let (_, u) = cauchy();
        for conj in [false, true] {
            let p = PoissonApproximant::new(&u, 1.0, 2.0, conj).unwrap();
            for z0 in [c(0.0, 2.0), c(0.0, -2.0)] {
                let at = p.eval(z0);
                let h = c(2e-4, 1e-4);
                let mean = (p.eval(z0 + h) + p.eval(z0 - h)) * 0.5;
                assert!(at.norm().is_finite());
                assert!((at - mean).norm() < 1e-7 * (1.0 + at.norm()), "{conj} {z0}: {at} {mean}");
            }
        }
    }

    #[test]
    fn removable_lambda_uses_limit() {
        let (_, u) = cauchy();
        let p = PoissonApproximant::new(&u, 1.0, 1.0, false).unwrap();
        let v = p.error_closed_form().unwrap();
        assert!((v - 1.0 / (PI * 1f64.exp().powi(2))).abs() < 1e-15);
        assert!(matches!(poisson_error_closed_form(1.0, 1.0, false), Err(Error::RatioOutOfRange(_))));
    }

    #[test]
    fn parity_is_required() {
        let m = validate_measure(&[2.0, 1.0, 1.0]).unwrap();
        let u = factorize(&m).unwrap();
        assert!(matches!(
            PoissonApproximant::new(&u, 1.0, 2.0, false),
            Err(Error::ParityViolated(_))
        ));
    }

    #[test]
    fn lebesgue_poisson_differences_change_sign_at_signature_zeros() {
        let u = UFactor::constant(1.0).unwrap();
        let p = PoissonApproximant::new(&u, 1.0, 1.5, false).unwrap();
        let psi = HbFunction::build(u, 1.0, EVEN_ALPHA).unwrap();
        let target = Target::new(TargetKind::Poisson, 1.5).unwrap();
        let xs = grid(-10.0, 10.0, 4001);
        let changes = xs
            .windows(2)
            .filter(|w| {
                let d0 = target.eval(w[0]) - p.eval_real(w[0]);
                let d1 = target.eval(w[1]) - p.eval_real(w[1]);
                d0 * d1 < 0.0
            })
            .count();
        // sign changes of cos 2x on [-10, 10]
        assert_eq!(changes, psi.sign_changes(-10.0, 10.0).unwrap().len());
        assert_eq!(changes, 12);
    }

    #[test]
    fn poisson_error_matches_closed_form_by_quadrature() {
        let (m, u) = cauchy();
        let target = Target::new(TargetKind::Poisson, 2.0).unwrap();
        let (a, psi) = build_approximant(&u, 1.0, &target).unwrap();
        let q = l1_error(|x| a.eval_real(x), &target, &psi, &m, &QuadSpec::default()).unwrap();
        let exact = 4.0 / (3.0 * PI) * ((-4.0f64).exp() / 3.0).atan();
        assert!((q.value - exact).abs() < 1e-8 * exact, "{} vs {}", q.value, exact);
    }

    #[test]
    fn approximate_truncated_exp_end_to_end() {
        let (m, _) = cauchy();
        let target = Target::new(TargetKind::TruncExp, 1.0).unwrap();
        let opts = ApproxOptions {
            grid: (-20.0, 20.0, 2000),
            ..ApproxOptions::default()
        };
        let r = approximate(&m, 1.0, target, &opts).unwrap();
        assert!(r.node_residual <= 1e-8);
        assert_eq!(r.sign_check.violations, 0);
        assert!(r.relative_gap() <= 1e-6, "{:?} {:?}", r.error_quadrature, r.error_signed);
        assert!(r.error_signed.value > 0.0);
        assert!(r.branch_discrepancy.unwrap() <= 1e-8);
    }

    #[test]
    fn classical_truncated_exp_error_is_positive() {
        let m = validate_measure(&[1.0]).unwrap();
        let target = Target::new(TargetKind::TruncExp, 1.0).unwrap();
        let u = factorize(&m).unwrap();
        let psi = HbFunction::build(u, 1.0, 0.0).unwrap();
        let s = signed_error(&target, &psi, &m, &QuadSpec::default()).unwrap();
        // int_0^inf e^{-x} sgn(sin 2x) dx = tanh(pi/4)
        assert!((s.value - (PI / 4.0).tanh()).abs() < 1e-10, "{}", s.value);
    }

    #[test]
    fn exponential_type_is_at_most_two_tau() {
        let (_, u) = cauchy();
        for kind in [TargetKind::TruncExp, TargetKind::AbsExp, TargetKind::Poisson] {
            let target = Target::new(kind, 1.0).unwrap();
            let (a, _) = build_approximant(&u, 1.0, &target).unwrap();
            let t = a.type_estimate(100.0);
            assert!(t <= 2.0 + 0.01 && t > 1.8, "{kind}: {t}");
        }
        let target = Target::new(TargetKind::Gauss, 1.0).unwrap();
        let (a, _) = build_approximant(&u, 1.0, &target).unwrap();
        assert!(a.type_estimate(100.0) <= 2.01);
    }

    #[test]
    fn perturbations_do_not_help() {
        let (m, u) = cauchy();
        let target = Target::new(TargetKind::Poisson, 2.0).unwrap();
        let (a, psi) = build_approximant(&u, 1.0, &target).unwrap();
        let r = perturbation_check(&a, &target, &psi, &m, &QuadSpec::default(), 4, 7).unwrap();
        assert!(r.worst_decrease <= 1e-9, "{r:?}");
    }

    #[test]
    fn kernel_products_are_annihilated() {
        let (m, u) = cauchy();
        let psi = HbFunction::build(u, 1.0, 0.0).unwrap();
        for g in kernel_products(2, 5) {
            let r = quad::annihilation_residual(|x| g.eval(&psi, x), &psi, &m, &QuadSpec::default()).unwrap();
            assert!(r.normalized() <= 1e-6, "{g:?} {r:?}");
        }
    }

    #[test]
    fn growth_bound_is_stable() {
        let (_, u) = cauchy();
        let target = Target::new(TargetKind::AbsExp, 1.0).unwrap();
        let (a, psi) = build_approximant(&u, 1.0, &target).unwrap();
        let c1 = growth_constant(&a, &target, &psi, &grid(-50.0, 50.0, 5001));
        let c2 = growth_constant(&a, &target, &psi, &grid(-100.0, 100.0, 10001));
        assert!(c1.is_finite() && c2 <= 1.05 * c1, "{c1} {c2}");
    }
}

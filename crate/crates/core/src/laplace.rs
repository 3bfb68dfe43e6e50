//! Laguerre-Polya functions and the inverse two-sided Laplace transform of
//! their reciprocals.
//!
//! For a zero-free abscissa `c`, `1/L(z) = int g(t) e^{-zt} dt` on the strip
//! around `c`, where `g(t)` is the sum of `e^{xi t}/L'(xi)` over zeros
//! `xi < c` for `t > 0` and minus the sum over zeros `xi > c` for `t < 0`.
//! Near `t = 0` the series converge slowly for infinite zero sets, so the
//! Bromwich line integral is used there instead.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hb::HbFunction;
use crate::quad::{self, QuadSpec};

/// Below this `|t|` infinite zero sets are inverted by line integration.
pub const T_SWITCH: f64 = 0.25;

/// A real zero together with the derivative there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpZero {
    pub x: f64,
    pub deriv: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// `scale z^r prod (1 - z/xi)` with simple nonzero zeros, sorted.
    Finite { zeros: Vec<f64>, r: u32, scale: f64 },
    /// `A(z) B(z)` of an HB function; zero `k` solves `phi = k pi/2`.
    HbProduct(HbFunction),
    /// `G(w) = L(sqrt w)` for even `L` with `L(0) != 0`.
    SqrtLift(Box<LpFunction>),
}

/// Real entire function with only real zeros, given by its zero data.
#[derive(Debug, Clone, PartialEq)]
pub struct LpFunction {
    kind: Kind,
}

impl LpFunction {
    /// `scale z^r prod (1 - z/xi_j)`.
    pub fn finite(zeros: &[f64], origin_mult: u32, scale: f64) -> Result<Self> {
        if origin_mult > 1 {
            return Err(Error::InvalidArgument(
                "zeros must be simple, including the origin".into(),
            ));
        }
        if !(scale != 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument("scale must be finite and nonzero".into()));
        }
        let mut zeros = zeros.to_vec();
        if zeros.iter().any(|&z| z == 0.0 || !z.is_finite()) {
            return Err(Error::InvalidArgument(
                "list only nonzero finite zeros; the origin goes in origin_mult".into(),
            ));
        }
        zeros.sort_by(f64::total_cmp);
        if zeros.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("zeros must be simple".into()));
        }
        Ok(Self {
            kind: Kind::Finite { zeros, r: origin_mult, scale },
        })
    }

    /// `L = A B`.
    pub fn from_hb(hb: &HbFunction) -> Result<Self> {
        if !(hb.tau() > 0.0) {
            return Err(Error::InvalidArgument("A B needs tau > 0".into()));
        }
        Ok(Self {
            kind: Kind::HbProduct(hb.clone()),
        })
    }

    /// `G` with `G(z^2) = L(z)`.
    pub fn sqrt_lift(&self) -> Result<Self> {
        if self.origin_mult() > 0 {
            return Err(Error::ZeroAtOrigin);
        }
        if !self.is_even() {
            return Err(Error::NotEven("zero set is not symmetric".into()));
        }
        Ok(Self {
            kind: Kind::SqrtLift(Box::new(self.clone())),
        })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            Kind::Finite { zeros, r, scale } => {
                let mut v = Complex64::new(*scale, 0.0) * z.powu(*r);
                for &xi in zeros {
                    v *= Complex64::new(1.0, 0.0) - z / xi;
                }
                v
            }
            Kind::HbProduct(hb) => hb.a(z) * hb.b(z),
            Kind::SqrtLift(base) => base.eval(z.sqrt()),
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::HbProduct(hb) => {
                let (a, b) = hb.ab_real(x);
                a * b
            }
            Kind::SqrtLift(base) if x >= 0.0 => base.eval_real(x.sqrt()),
            _ => self.eval(Complex64::new(x, 0.0)).re,
        }
    }

    /// `(L, L', L'')` at `z`.
    pub fn eval_derivs(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        match &self.kind {
            Kind::Finite { zeros, r, scale } => {
                // expand scale z^r prod (1 - z/xi) into power coefficients
                let mut c = vec![Complex64::new(*scale, 0.0)];
                let factors = zeros
                    .iter()
                    .map(|&xi| (1.0, -1.0 / xi))
                    .chain((0..*r).map(|_| (0.0, 1.0)));
                for (a0, a1) in factors {
                    let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
                    for (k, ck) in c.iter().enumerate() {
                        next[k] += ck * a0;
                        next[k + 1] += ck * a1;
                    }
                    c = next;
                }
                horner3(&c, z)
            }
            Kind::HbProduct(hb) => {
                let (e, e1, e2) = hb.e_derivs(z);
                let (s, s1, s2) = hb.e_star_derivs(z);
                let i2 = Complex64::new(0.0, 0.5);
                let (a, a1, a2) = ((e + s) * 0.5, (e1 + s1) * 0.5, (e2 + s2) * 0.5);
                let (b, b1, b2) = ((e - s) * i2, (e1 - s1) * i2, (e2 - s2) * i2);
                (a * b, a1 * b + a * b1, a2 * b + a1 * b1 * 2.0 + a * b2)
            }
            Kind::SqrtLift(base) => {
                // G(w) = L(s), s^2 = w: G' = L'/(2s), G'' = (L'' - L'/s)/(4 s^2)
                let s = z.sqrt();
                if s.norm() < 1e-6 {
                    // L'(s)/(2s) -> L''(0)/2; the second derivative by a symmetric step
                    let (l, _, l2) = base.eval_derivs(s);
                    let h = 1e-3;
                    let d = |w: f64| self.eval_derivs(Complex64::new(w, 0.0)).1;
                    return (l, l2 * 0.5, (d(h) - d(-h)) / (2.0 * h));
                }
                let (l, l1, l2) = base.eval_derivs(s);
                (l, l1 / (s * 2.0), (l2 - l1 / s) / (z * 4.0))
            }
        }
    }

    /// `L(x) / (x - xi)` for a real zero `xi`, given `lx = L(x)`.
    ///
    /// Near `xi` the direct quotient loses `eps / |x - xi|` digits; there the
    /// product is rewritten so that the factor vanishing at `xi` cancels
    /// analytically (for `A B = M sin(2 phi) / 2` through the phase increment).
    pub fn quotient_real(&self, x: f64, lx: f64, xi: f64) -> f64 {
        let h = x - xi;
        match &self.kind {
            Kind::Finite { zeros, r, scale } => {
                let mut v = *scale;
                let mut skipped = false;
                if xi == 0.0 && *r == 1 {
                    skipped = true;
                } else {
                    v *= x.powi(*r as i32);
                }
                for &z in zeros {
                    if !skipped && z == xi {
                        skipped = true;
                        v *= -1.0 / z;
                    } else {
                        v *= 1.0 - x / z;
                    }
                }
                if skipped {
                    v
                } else {
                    lx / h
                }
            }
            Kind::HbProduct(hb) => {
                let roots = hb.u().roots();
                let near = roots.iter().map(|r| (r - xi).norm()).fold(f64::INFINITY, f64::min);
                if h == 0.0 || h.abs() >= 0.5 * near.min(1.0 / hb.tau()) {
                    if h == 0.0 {
                        return self.eval_derivs(Complex64::new(xi, 0.0)).1.re;
                    }
                    return lx / h;
                }
                // phi(x) - phi(xi) = tau h - sum arg(1 - h/(rho - xi))
                let mut dphi_h = hb.tau();
                for r in roots {
                    let q = (r - xi).inv();
                    let den = 1.0 - h * q.re;
                    let t = -h * q.im / den;
                    let atan_t = if t == 0.0 { 1.0 } else { t.atan() / t };
                    dphi_h -= atan_t * (-q.im / den);
                }
                let y = 2.0 * dphi_h * h;
                let sinc = if y == 0.0 { 1.0 } else { y.sin() / y };
                let k = (hb.phase(xi) / FRAC_PI_2).round() as i64;
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                sign * hb.modulus_sq(x) * dphi_h * sinc
            }
            Kind::SqrtLift(base) => {
                if x > 0.0 && xi > 0.0 {
                    let (s, r) = (x.sqrt(), xi.sqrt());
                    base.quotient_real(s, lx, r) / (s + r)
                } else {
                    lx / h
                }
            }
        }
    }

    /// Multiplicity of the zero at the origin (0 or 1).
    pub fn origin_mult(&self) -> u32 {
        match &self.kind {
            Kind::Finite { r, .. } => *r,
            Kind::HbProduct(hb) => u32::from(hb_origin_level(hb).is_some()),
            Kind::SqrtLift(_) => 0,
        }
    }

    /// `L^{(r)}(0) / r!`.
    pub fn scale(&self) -> f64 {
        match &self.kind {
            Kind::Finite { scale, .. } => *scale,
            _ => {
                let (l0, l1, _) = self.eval_derivs(Complex64::new(0.0, 0.0));
                if self.origin_mult() == 0 {
                    l0.re
                } else {
                    l1.re
                }
            }
        }
    }

    /// Linear coefficient `b` of the Hadamard factorization.
    pub fn hadamard_b(&self) -> f64 {
        match &self.kind {
            Kind::Finite { zeros, .. } => -zeros.iter().map(|x| 1.0 / x).sum::<f64>(),
            _ => {
                let (l0, l1, l2) = self.eval_derivs(Complex64::new(0.0, 0.0));
                if self.origin_mult() == 0 {
                    l1.re / l0.re
                } else {
                    0.5 * l2.re / l1.re
                }
            }
        }
    }

    /// Number of zeros when finite.
    pub fn degree(&self) -> Option<usize> {
        match &self.kind {
            Kind::Finite { zeros, r, .. } => Some(zeros.len() + *r as usize),
            _ => None,
        }
    }

    /// Zero set symmetric about the origin.
    pub fn is_even(&self) -> bool {
        match &self.kind {
            Kind::Finite { zeros, .. } => {
                let n = zeros.len();
                (0..n).all(|i| (zeros[i] + zeros[n - 1 - i]).abs() <= 1e-12 * (1.0 + zeros[i].abs()))
            }
            Kind::HbProduct(hb) => {
                let q = (hb.alpha() / FRAC_PI_2).fract();
                hb.u().is_even() && (q - 0.5).abs() < 1e-12
            }
            Kind::SqrtLift(_) => false,
        }
    }

    /// Index range of zeros; `None` bounds are unbounded.
    fn index_bounds(&self) -> (Option<i64>, Option<i64>) {
        match &self.kind {
            Kind::Finite { zeros, r, .. } => (Some(0), Some((zeros.len() + *r as usize) as i64 - 1)),
            Kind::HbProduct(_) => (None, None),
            Kind::SqrtLift(_) => (Some(0), None),
        }
    }

    /// Zero number `i` in increasing order.
    fn zero_at(&self, i: i64) -> Option<LpZero> {
        let (lo, hi) = self.index_bounds();
        if lo.is_some_and(|l| i < l) || hi.is_some_and(|h| i > h) {
            return None;
        }
        match &self.kind {
            Kind::Finite { zeros, r, scale } => {
                let mut all = zeros.clone();
                if *r == 1 {
                    all.push(0.0);
                    all.sort_by(f64::total_cmp);
                }
                let x = all[i as usize];
                let mut d = *scale;
                if x == 0.0 {
                    for &xi in zeros {
                        d *= 1.0 - x / xi;
                    }
                } else {
                    d *= x.powi(*r as i32) * (-1.0 / x);
                    for &xi in zeros.iter().filter(|&&xi| xi != x) {
                        d *= 1.0 - x / xi;
                    }
                }
                Some(LpZero { x, deriv: d })
            }
            Kind::HbProduct(hb) => {
                let x = if hb_origin_level(hb) == Some(i) {
                    0.0
                } else {
                    hb.sign_change(i)?
                };
                let sign = if i.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                Some(LpZero {
                    x,
                    deriv: sign * hb.modulus_sq(x) * hb.phase_deriv(x),
                })
            }
            Kind::SqrtLift(base) => {
                let first = base.first_index_above(0.0);
                let z = base.zero_at(first + i)?;
                Some(LpZero {
                    x: z.x * z.x,
                    deriv: z.deriv / (2.0 * z.x),
                })
            }
        }
    }

    /// Index of the smallest zero `> x`.
    fn first_index_above(&self, x: f64) -> i64 {
        match &self.kind {
            Kind::HbProduct(hb) => {
                let mut k = (hb.phase(x) / FRAC_PI_2).floor() as i64;
                // guard against rounding at exact levels
                while self.zero_at(k).is_some_and(|z| z.x > x) {
                    k -= 1;
                }
                while self.zero_at(k).is_some_and(|z| z.x <= x) {
                    k += 1;
                }
                k
            }
            Kind::Finite { .. } => {
                let (_, hi) = self.index_bounds();
                let hi = hi.unwrap();
                (0..=hi).find(|&i| self.zero_at(i).unwrap().x > x).unwrap_or(hi + 1)
            }
            Kind::SqrtLift(base) => {
                if x < 0.0 {
                    0
                } else {
                    base.first_index_above(x.sqrt()) - base.first_index_above(0.0)
                }
            }
        }
    }

    /// Zeros `> x` in increasing order.
    pub fn zeros_above(&self, x: f64) -> impl Iterator<Item = LpZero> + '_ {
        let start = self.first_index_above(x);
        (start..).map_while(move |i| self.zero_at(i))
    }

    /// Zeros `< x` in decreasing order.
    pub fn zeros_below(&self, x: f64) -> impl Iterator<Item = LpZero> + '_ {
        let mut start = self.first_index_above(x) - 1;
        if self.zero_at(start).is_some_and(|z| z.x >= x) {
            start -= 1;
        }
        (0..).map(move |j| start - j).map_while(move |i| self.zero_at(i))
    }

    /// All zeros in `[lo, hi]`, increasing.
    pub fn zero_window(&self, lo: f64, hi: f64) -> Vec<LpZero> {
        let mut start = self.first_index_above(lo);
        if self.zero_at(start - 1).is_some_and(|z| z.x >= lo) {
            start -= 1;
        }
        (start..)
            .map_while(|i| self.zero_at(i))
            .take_while(|z| z.x <= hi)
            .collect()
    }

    /// Smallest positive zero, `+inf` if none.
    pub fn alpha_l(&self) -> f64 {
        self.zeros_above(0.0).next().map_or(f64::INFINITY, |z| z.x)
    }

    /// Largest nonpositive zero, `-inf` if none.
    pub fn beta_l(&self) -> f64 {
        if self.origin_mult() > 0 {
            return 0.0;
        }
        self.zeros_below(0.0).next().map_or(f64::NEG_INFINITY, |z| z.x)
    }

    /// The abscissa `alpha_L / 2`, or 1 without positive zeros.
    pub fn abscissa(&self) -> f64 {
        let a = self.alpha_l();
        if a.is_finite() {
            0.5 * a
        } else {
            1.0
        }
    }

    /// `L(0) e^{bz} prod (1 - z/xi) e^{z/xi}` over zeros with `|xi| <= x_max`
    /// (times `z` when `L(0) = 0`).
    pub fn eval_windowed(&self, z: Complex64, x_max: f64) -> Complex64 {
        let b = self.hadamard_b();
        let mut v = Complex64::new(self.scale(), 0.0) * (z * b).exp();
        if self.origin_mult() == 1 {
            v *= z;
        }
        for w in self.zero_window(-x_max, x_max) {
            if w.x != 0.0 {
                v *= (Complex64::new(1.0, 0.0) - z / w.x) * (z / w.x).exp();
            }
        }
        v
    }

    /// Residue-series inverse at abscissa `c` (no zero may equal `c`).
    pub fn g_residue_at(&self, t: f64, c: f64) -> Result<f64> {
        if self.degree() == Some(0) {
            return Err(Error::InvalidArgument(
                "no zeros: the inverse transform is a point mass".into(),
            ));
        }
        if t == 0.0 {
            if self.degree() == Some(1) {
                // midpoint of the jump
                return Ok(0.5 * (self.g_residue_at(1e-300, c)? + self.g_residue_at(-1e-300, c)?));
            }
            if self.degree().is_none() {
                return Err(Error::SlowConvergence(
                    "residue series at t = 0 for an infinite zero set".into(),
                ));
            }
        }
        let terms: Box<dyn Iterator<Item = LpZero>> = if t >= 0.0 {
            Box::new(self.zeros_below(c))
        } else {
            Box::new(self.zeros_above(c))
        };
        let sign = if t >= 0.0 { 1.0 } else { -1.0 };
        let mut sum = quad::NeumaierSum::default();
        let mut small = 0;
        for (n, z) in terms.enumerate() {
            let term = (z.x * t).exp() / z.deriv;
            sum.add(sign * term);
            if term.abs() < 1e-17 * sum.value().abs().max(1e-300) || term == 0.0 {
                small += 1;
                if small >= 3 {
                    return Ok(sum.value());
                }
            } else {
                small = 0;
            }
            if n > 2_000_000 {
                return Err(Error::SlowConvergence(format!("residue series at t = {t}")));
            }
        }
        Ok(sum.value())
    }

    pub fn g_residue(&self, t: f64) -> Result<f64> {
        self.g_residue_at(t, self.abscissa())
    }

    /// `(1/pi) int_0^inf Re[e^{(c+iy)t} / L(c+iy)] dy`.
    pub fn g_bromwich_at(&self, t: f64, c: f64) -> Result<f64> {
        if let Some(n) = self.degree() {
            if n < 2 {
                return Err(Error::PrincipalValueCase);
            }
        }
        let integrand = |y: f64| {
            let s = Complex64::new(c, y);
            ((s * t).exp() / self.eval(s)).re
        };
        let envelope = |y: f64| (c * t).exp() / self.eval(Complex64::new(c, y)).norm();
        let scale = envelope(0.0);
        // grow the core window until the measured tail is negligible
        let mut y_max = 8.0;
        let tail_estimate = |y: f64| {
            let (e1, e2) = (envelope(y), envelope(1.1 * y));
            let d = (e1 / e2).ln() / (0.1 * y);
            if d > 1.0 / y {
                e1 / (d - 1.0 / y)
            } else {
                f64::INFINITY
            }
        };
        while tail_estimate(y_max) > 1e-15 * scale && y_max < 1e5 {
            y_max *= 2.0;
        }
        let tail = tail_estimate(y_max);
        if tail > 1e-10 * scale.max(1.0) {
            return Err(Error::SlowConvergence(format!(
                "line integral tail {tail:e} at |Im s| = {y_max}"
            )));
        }
        let spec = QuadSpec {
            rel_tol: 1e-13,
            abs_tol: 1e-16 * scale,
            initial_panels: (y_max * t.abs().max(1.0) / 2.0).ceil() as usize + 8,
            ..QuadSpec::default()
        };
        let r = quad::integrate(integrand, 0.0, y_max, &spec)?;
        Ok(r.value / PI)
    }

    pub fn g_bromwich(&self, t: f64) -> Result<f64> {
        self.g_bromwich_at(t, self.abscissa())
    }

    /// `g = g_c` at the default abscissa: residues away from the origin (and
    /// everywhere for finite zero sets), the line integral near it.
    pub fn g_eval(&self, t: f64) -> Result<f64> {
        match self.degree() {
            Some(_) => self.g_residue(t),
            None if t.abs() >= T_SWITCH => self.g_residue(t),
            None => self.g_bromwich(t),
        }
    }

    /// Samples of `g` on `[-t_max, t_max]` plus residue tails. Points in
    /// `align` become panel boundaries, so partial transforms may start there.
    pub fn g_table(&self, t_max: f64, panel_width: f64, align: &[f64]) -> Result<GTable> {
        GTable::build(self, t_max, panel_width, align)
    }
}

fn horner3(c: &[Complex64], z: Complex64) -> (Complex64, Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    let (mut p, mut d1, mut d2) = (zero, zero, zero);
    for &a in c.iter().rev() {
        d2 = d2 * z + d1 * 2.0;
        d1 = d1 * z + p;
        p = p * z + a;
    }
    (p, d1, d2)
}

/// Level index of a zero at the origin, if `phi(0) = alpha` is a multiple of `pi/2`.
fn hb_origin_level(hb: &HbFunction) -> Option<i64> {
    let q = hb.alpha() / FRAC_PI_2;
    let k = q.round();
    ((q - k).abs() < 1e-14).then_some(k as i64)
}

/// Tabulated `g` with residue-series tails, for transforms `int g(t) e^{-zt} dt`.
#[derive(Debug, Clone)]
pub struct GTable {
    c: f64,
    t_max: f64,
    /// Panel boundaries, increasing, from `-t_max` to `t_max`.
    bounds: Vec<f64>,
    /// `(t, weight, g(t))` on Gauss-Legendre panels, in panel order.
    samples: Vec<(f64, f64, f64)>,
    /// `(xi, 1/L'(xi))` for the tail `t > t_max`: zeros below `c`.
    right_tail: Vec<(f64, f64)>,
    /// `(xi, -1/L'(xi))` for the tail `t < -t_max`: zeros above `c`.
    left_tail: Vec<(f64, f64)>,
}

/// Which side of a cut a partial transform covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Below,
    Above,
}

const NODES_PER_PANEL: usize = 20;

impl GTable {
    fn build(l: &LpFunction, t_max: f64, panel_width: f64, align: &[f64]) -> Result<Self> {
        use rayon::prelude::*;
        if !(t_max > 0.0 && panel_width > 0.0) {
            return Err(Error::InvalidArgument("t_max and panel width must be positive".into()));
        }
        let c = l.abscissa();
        let n = (t_max / panel_width).ceil() as usize;
        let h = t_max / n as f64;
        let mut bounds: Vec<f64> = (0..=2 * n).map(|i| -t_max + i as f64 * h).collect();
        bounds[n] = 0.0;
        bounds.extend(align.iter().copied().filter(|a| a.abs() < t_max));
        bounds.sort_by(f64::total_cmp);
        bounds.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        let (nodes, weights) = quad::gauss_legendre(NODES_PER_PANEL);
        let mut pts = Vec::new();
        for w in bounds.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (x, wt) in nodes.iter().zip(&weights) {
                pts.push((mid + half * x, half * wt));
            }
        }
        let samples = pts
            .par_iter()
            .map(|&(t, w)| l.g_eval(t).map(|g| (t, w, g)))
            .collect::<Result<Vec<_>>>()?;
        let right_tail = l
            .zeros_below(c)
            .take_while(|z| (z.x * t_max).exp() / z.deriv.abs() > 1e-20 || z.x > -1.0)
            .take(10_000)
            .map(|z| (z.x, 1.0 / z.deriv))
            .collect();
        let left_tail = l
            .zeros_above(c)
            .take_while(|z| (-z.x * t_max).exp() / z.deriv.abs() > 1e-20)
            .take(10_000)
            .map(|z| (z.x, -1.0 / z.deriv))
            .collect();
        Ok(Self {
            c,
            t_max,
            bounds,
            samples,
            right_tail,
            left_tail,
        })
    }

    pub fn abscissa(&self) -> f64 {
        self.c
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples.iter().map(|&(t, _, g)| (t, g))
    }

    /// `int g(t) e^{-zt} dt` for `z` in the zero-free strip.
    pub fn laplace(&self, z: Complex64) -> Complex64 {
        self.core(z, 0, self.bounds.len() - 1) + self.right(z) + self.left(z)
    }

    /// `int_{-inf}^a` or `int_a^inf` of `g(t) e^{-zt} dt`; `a` must be a
    /// panel boundary.
    pub fn partial_laplace(&self, z: Complex64, a: f64, side: Side) -> Result<Complex64> {
        let i = self
            .bounds
            .iter()
            .position(|b| (b - a).abs() <= 1e-12 * (1.0 + a.abs()))
            .ok_or_else(|| Error::InvalidArgument(format!("{a} is not a panel boundary")))?;
        Ok(match side {
            Side::Below => self.core(z, 0, i) + self.left(z),
            Side::Above => self.core(z, i, self.bounds.len() - 1) + self.right(z),
        })
    }

    /// Panels `from..to` of the tabulated range.
    fn core(&self, z: Complex64, from: usize, to: usize) -> Complex64 {
        self.samples[from * NODES_PER_PANEL..to * NODES_PER_PANEL]
            .iter()
            .map(|&(t, w, g)| (-z * t).exp() * (w * g))
            .sum()
    }

    /// `int_T^inf`: residue terms `e^{xi u}` against `e^{-zu}`.
    fn right(&self, z: Complex64) -> Complex64 {
        let t = self.t_max;
        self.right_tail
            .iter()
            .map(|&(xi, a)| ((Complex64::new(xi, 0.0) - z) * t).exp() / (z - xi) * a)
            .sum()
    }

    /// `int_{-inf}^{-T}`.
    fn left(&self, z: Complex64) -> Complex64 {
        let t = self.t_max;
        self.left_tail
            .iter()
            .map(|&(xi, a)| ((z - xi) * t).exp() / (Complex64::new(xi, 0.0) - z) * a)
            .sum()
    }
}

//! Hermite-Biehler functions `E(z) = U(z) exp(-i tau z - i alpha)`.
//!
//! On the real line `E(x) = |U(x)| exp(-i phi(x))` with the phase
//! `phi(x) = tau x + alpha - sum_k Arg(1 - x/xi_k)`, which is continuous and
//! strictly increasing. `A = Re E` and `B = -Im E` there, so
//! `A B = |E|^2 sin(2 phi) / 2` and the zeros of `A B` are exactly the points
//! where `phi` crosses a multiple of `pi/2`: even multiples are zeros of `B`,
//! odd multiples zeros of `A`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::polyfact::UFactor;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const CONFLUENT_THRESHOLD: f64 = 1e-8;
const SIGNATURE_ZERO_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HbFunction {
    u: UFactor,
    tau: f64,
    alpha: f64,
}

impl HbFunction {
    /// Builds `E_{tau,alpha}` from `U`. `alpha` is reduced to `[0, 2 pi)`.
    pub fn build(u: UFactor, tau: f64, alpha: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau = {tau} must be >= 0")));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument("alpha must be finite".into()));
        }
        let mut alpha = alpha.rem_euclid(TAU);
        if alpha >= TAU {
            alpha = 0.0;
        }
        Ok(Self { u, tau, alpha })
    }

    /// Same `U` and `tau` with a different phase shift.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self::build(self.u.clone(), self.tau, alpha).expect("alpha finite")
    }

    pub fn u(&self) -> &UFactor {
        &self.u
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `exp(-i (tau z + alpha))`.
    fn rotation(&self, z: Complex64) -> Complex64 {
        let theta = self.tau * z.re + self.alpha;
        let r = (self.tau * z.im).exp();
        Complex64::new(r * theta.cos(), -r * theta.sin())
    }

    pub fn e(&self, z: Complex64) -> Complex64 {
        self.u.eval(z) * self.rotation(z)
    }

    pub fn e_star(&self, z: Complex64) -> Complex64 {
        self.e(z.conj()).conj()
    }

    /// `(E, E', E'')` at `z`.
    pub fn e_derivs(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let (u, du, ddu) = self.u.eval_derivs(z);
        let rot = self.rotation(z);
        let k = -I * self.tau;
        (
            u * rot,
            (du + u * k) * rot,
            (ddu + du * k * 2.0 + u * k * k) * rot,
        )
    }

    /// `(E*, E*', E*'')` at `z`.
    pub fn e_star_derivs(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let (e, d1, d2) = self.e_derivs(z.conj());
        (e.conj(), d1.conj(), d2.conj())
    }

    pub fn a(&self, z: Complex64) -> Complex64 {
        (self.e(z) + self.e_star(z)) * 0.5
    }

    pub fn b(&self, z: Complex64) -> Complex64 {
        (self.e(z) - self.e_star(z)) * (I * 0.5)
    }

    /// `(A(x), B(x))` on the real line.
    pub fn ab_real(&self, x: f64) -> (f64, f64) {
        let e = self.e(Complex64::new(x, 0.0));
        (e.re, -e.im)
    }

    /// `|E(x)|^2 = M(x)`.
    pub fn modulus_sq(&self, x: f64) -> f64 {
        self.u.modulus_sq(x)
    }

    /// Continuous increasing phase with `exp(i phi(0)) E(0) > 0`.
    pub fn phase(&self, x: f64) -> f64 {
        self.tau * x + self.alpha - self.u.arg_sum(x)
    }

    pub fn phase_deriv(&self, x: f64) -> f64 {
        self.tau + self.u.arg_sum_decrease_rate(x)
    }

    /// `sgn(A(x) B(x))`, reported as 0 when `|AB| < 1e-12 M(x)`.
    pub fn signature(&self, x: f64) -> i8 {
        let (a, b) = self.ab_real(x);
        let ab = a * b;
        if ab.abs() < SIGNATURE_ZERO_REL * self.modulus_sq(x) {
            0
        } else if ab > 0.0 {
            1
        } else {
            -1
        }
    }

    /// The unique real solution of `phi(x) = k pi/2`; `None` only when
    /// `tau = 0` and the bounded phase never reaches that level.
    pub fn sign_change(&self, k: i64) -> Option<f64> {
        let target = k as f64 * FRAC_PI_2;
        let n = self.u.degree() as f64;
        let (mut lo, mut hi) = if self.tau > 0.0 {
            let pad = (n * PI + 1e-9 * (1.0 + target.abs())) / self.tau;
            let center = (target - self.alpha) / self.tau;
            (center - pad - 1e-12, center + pad + 1e-12)
        } else {
            self.bracket_bounded_phase(target)?
        };
        let f = |x: f64| self.phase(x) - target;
        if n == 0.0 {
            return Some((target - self.alpha) / self.tau);
        }
        // safeguarded Newton on the increasing function f
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fx = f(x);
            if fx == 0.0 {
                return Some(x);
            }
            if fx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - fx / self.phase_deriv(x);
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 4e-16 * (1.0 + x.abs()) {
                return Some(next);
            }
            x = next;
        }
        Some(x)
    }

    fn bracket_bounded_phase(&self, target: f64) -> Option<(f64, f64)> {
        let f = |x: f64| self.phase(x) - target;
        let mut w = 1.0;
        for _ in 0..200 {
            if f(-w) < 0.0 && f(w) > 0.0 {
                return Some((-w, w));
            }
            w *= 2.0;
        }
        None
    }

    /// Indices `k` with `phi(x) = k pi/2` for some `x` in `[lo, hi]`.
    pub fn sign_change_index_range(&self, lo: f64, hi: f64) -> (i64, i64) {
        let k_lo = (self.phase(lo) / FRAC_PI_2).ceil() as i64;
        let k_hi = (self.phase(hi) / FRAC_PI_2).floor() as i64;
        (k_lo, k_hi)
    }

    /// Sign changes of `sgn(AB)` in `[lo, hi]`, tagged by level index.
    pub fn sign_changes_tagged(&self, lo: f64, hi: f64) -> Result<Vec<SignChange>> {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
        }
        let (k_lo, k_hi) = self.sign_change_index_range(lo, hi);
        Ok((k_lo..=k_hi)
            .filter_map(|k| self.sign_change(k).map(|x| SignChange { x, index: k }))
            .filter(|s| s.x >= lo && s.x <= hi)
            .collect())
    }

    /// All zeros of `A B` in `[lo, hi]`, in increasing order.
    pub fn sign_changes(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        Ok(self
            .sign_changes_tagged(lo, hi)?
            .into_iter()
            .map(|s| s.x)
            .collect())
    }

    /// Reproducing kernel `K(w, z) = (B(z) A(w*) - A(z) B(w*)) / (pi (z - w*))`.
    pub fn kernel(&self, w: Complex64, z: Complex64) -> Complex64 {
        let wb = w.conj();
        let (aw, bw) = (self.a(wb), self.b(wb));
        let d = z - wb;
        if d.norm() < CONFLUENT_THRESHOLD {
            let (_, e1, _) = self.e_derivs(z);
            let (_, s1, _) = self.e_star_derivs(z);
            let da = (e1 + s1) * 0.5;
            let db = (e1 - s1) * (I * 0.5);
            return (db * aw - da * bw) / PI;
        }
        (self.b(z) * aw - self.a(z) * bw) / (d * PI)
    }

    /// `log|E(iy)| / y`, whose limit is the mean type.
    pub fn mean_type_at(&self, y: f64) -> f64 {
        self.e(Complex64::new(0.0, y)).norm().ln() / y
    }
}

/// A zero of `A B` together with its phase level `phi = index * pi/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignChange {
    pub x: f64,
    pub index: i64,
}

impl SignChange {
    /// Even levels are zeros of `B`, odd levels zeros of `A`.
    pub fn is_b_zero(&self) -> bool {
        self.index.rem_euclid(2) == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaMode {
    /// `B(0) = 0` and `AB > 0` just right of the origin.
    TruncatedExp,
    /// `A B` even; needs an even weight.
    Even,
}

pub fn choose_alpha(u: &UFactor, _tau: f64, mode: AlphaMode) -> Result<f64> {
    match mode {
        AlphaMode::Even => {
            if !u.is_even() {
                return Err(Error::NotEven("weight is not even".into()));
            }
            Ok(FRAC_PI_4)
        }
        AlphaMode::TruncatedExp => {
            let u0 = u.eval(Complex64::new(0.0, 0.0));
            Ok(u0.im.atan2(u0.re).rem_euclid(TAU) + 0.0)
        }
    }
}

/// Phase tracking by unwrapping `-Arg E(x)` along a table grown outward
/// from the anchor `x = 0`. Independent of the closed-form `HbFunction::phase`.
#[derive(Debug, Clone)]
pub struct PhaseAccumulator<'a> {
    hb: &'a HbFunction,
    /// Entries right of the anchor (including it), increasing in x.
    right: Vec<(f64, f64)>,
    /// Entries left of the anchor, decreasing in x.
    left: Vec<(f64, f64)>,
    max_step: f64,
}

impl<'a> PhaseAccumulator<'a> {
    pub fn new(hb: &'a HbFunction) -> Self {
        let e0 = hb.e(Complex64::new(0.0, 0.0));
        let phi0 = (-e0.im.atan2(e0.re)).rem_euclid(TAU);
        let rate_bound = hb.tau() + hb.u().roots().iter().map(|r| -1.0 / r.im).sum::<f64>();
        let max_step = if rate_bound > 0.0 {
            FRAC_PI_4 / rate_bound
        } else {
            1.0
        };
        Self {
            hb,
            right: vec![(0.0, phi0)],
            left: Vec::new(),
            max_step,
        }
    }

    fn raw(&self, x: f64) -> f64 {
        let e = self.hb.e(Complex64::new(x, 0.0));
        -e.im.atan2(e.re)
    }

    fn step_from(&self, (x0, phi0): (f64, f64), x: f64) -> Option<f64> {
        let delta = wrap(self.raw(x) - phi0);
        let forward = x > x0;
        let ok = if forward { delta > 0.0 } else { delta < 0.0 };
        (ok && delta.abs() <= FRAC_PI_2).then_some(phi0 + delta)
    }

    fn extend(&mut self, x: f64) -> Result<()> {
        let forward = x >= 0.0;
        loop {
            let last = if forward {
                *self.right.last().unwrap()
            } else {
                *self.left.last().unwrap_or(&self.right[0])
            };
            if (forward && last.0 >= x) || (!forward && last.0 <= x) {
                return Ok(());
            }
            let mut h = self.max_step.min((x - last.0).abs().max(1e-300));
            loop {
                let cand = if forward { last.0 + h } else { last.0 - h };
                if let Some(phi) = self.step_from(last, cand) {
                    if forward {
                        self.right.push((cand, phi));
                    } else {
                        self.left.push((cand, phi));
                    }
                    break;
                }
                h *= 0.5;
                if h < 1e-12 * (1.0 + last.0.abs()) {
                    return Err(Error::UnwrapFailure(cand));
                }
            }
        }
    }

    /// Unwrapped phase at `x`; grows the table as needed.
    pub fn phase(&mut self, x: f64) -> Result<f64> {
        self.extend(x)?;
        let anchor = if x >= 0.0 {
            let i = self.right.partition_point(|p| p.0 <= x);
            self.right[i.saturating_sub(1)]
        } else {
            let i = self.left.partition_point(|p| p.0 >= x);
            if i == 0 {
                self.right[0]
            } else {
                self.left[i - 1]
            }
        };
        if anchor.0 == x {
            return Ok(anchor.1);
        }
        self.step_from(anchor, x).ok_or(Error::UnwrapFailure(x))
    }

    /// Number of cached samples.
    pub fn len(&self) -> usize {
        self.right.len() + self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn wrap(d: f64) -> f64 {
    let r = (d + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

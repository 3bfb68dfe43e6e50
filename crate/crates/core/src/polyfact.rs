//! Positive polynomial weights `M` and their factorization `M = U U*`.
//!
//! `U` keeps the zeros of `M` that lie in the open lower half plane and is
//! normalized as `U(z) = sqrt(M(0)) * prod (1 - z/xi)`. With this
//! normalization an even `M` yields `U*(z) = U(-z)` exactly, because the
//! retained root set is closed under `xi -> -conj(xi)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Roots closer to the real axis than this (relative) are rejected.
const NEAR_REAL_REL: f64 = 1e-9;
/// Critical points of `M` with imaginary part below this are treated as real.
const CRITICAL_IMAG_REL: f64 = 1e-6;
const ABERTH_MAX_ITER: usize = 1000;

/// A real polynomial that is positive on the real line, defining `dmu = dx / M(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivePolynomialMeasure {
    coeffs: Vec<f64>,
    even: bool,
}

impl PositivePolynomialMeasure {
    /// Coefficients in ascending degree.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// All odd coefficients vanish identically.
    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn eval(&self, x: f64) -> f64 {
        horner_real(&self.coeffs, x)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Lebesgue measure, `M = 1`.
    pub fn lebesgue() -> Self {
        Self {
            coeffs: vec![1.0],
            even: true,
        }
    }
}

/// Checks that `coeffs` (ascending degree) describe a polynomial positive on `R`.
pub fn validate_measure(coeffs: &[f64]) -> Result<PositivePolynomialMeasure> {
    if coeffs.is_empty() {
        return Err(Error::InvalidArgument("empty coefficient list".into()));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coefficient".into()));
    }
    let lead = *coeffs.last().unwrap();
    if lead == 0.0 {
        return Err(Error::InvalidArgument(
            "leading coefficient must be nonzero".into(),
        ));
    }
    let degree = coeffs.len() - 1;
    if degree % 2 == 1 {
        return Err(Error::OddDegree(degree));
    }
    if lead < 0.0 {
        return Err(Error::NotPositive("negative leading coefficient".into()));
    }
    if coeffs[0] <= 0.0 {
        return Err(Error::NotPositive(format!("M(0) = {} <= 0", coeffs[0])));
    }

    if degree >= 2 {
        // The minimum over R sits at a real critical point.
        let deriv = derivative_real(coeffs);
        let crit = poly_roots(&deriv)?;
        for r in crit {
            if r.im.abs() > CRITICAL_IMAG_REL * (1.0 + r.norm()) {
                continue;
            }
            let x = r.re;
            let value = horner_real(coeffs, x);
            let scale: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.abs() * x.abs().powi(k as i32))
                .sum();
            if value <= 1e-14 * scale {
                return Err(Error::NotPositive(format!("M({x}) = {value:e}")));
            }
        }
    }

    let even = coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0);
    Ok(PositivePolynomialMeasure {
        coeffs: coeffs.to_vec(),
        even,
    })
}

/// The factor `U` with `U U* = M` and all zeros in the open lower half plane.
#[derive(Debug, Clone, PartialEq)]
pub struct UFactor {
    roots: Vec<Complex64>,
    inv_roots: Vec<Complex64>,
    scale: f64,
    /// Ascending complex coefficients of `U`, used for derivatives.
    coeffs: Vec<Complex64>,
    even: bool,
}

impl UFactor {
    /// Builds `U(z) = scale * prod (1 - z/xi)`. Every root must satisfy `Im xi < 0`.
    pub fn from_roots(roots: Vec<Complex64>, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale {scale} must be positive")));
        }
        if let Some(r) = roots.iter().find(|r| !(r.im < 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "root {r} is not in the open lower half plane"
            )));
        }
        let inv_roots: Vec<Complex64> = roots.iter().map(|r| r.inv()).collect();
        let mut coeffs = vec![Complex64::new(scale, 0.0)];
        for ir in &inv_roots {
            // multiply by (1 - z * ir)
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, c) in coeffs.iter().enumerate() {
                next[k] += c;
                next[k + 1] -= c * ir;
            }
            coeffs = next;
        }
        let even = is_mirror_closed(&roots);
        Ok(Self {
            roots,
            inv_roots,
            scale,
            coeffs,
            even,
        })
    }

    /// The constant factor `U = c` for `c > 0`.
    pub fn constant(scale: f64) -> Result<Self> {
        Self::from_roots(Vec::new(), scale)
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    /// Root set closed under `xi -> -conj(xi)`, so that `U*(z) = U(-z)`.
    pub fn is_even(&self) -> bool {
        self.even
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        self.inv_roots
            .iter()
            .fold(Complex64::new(self.scale, 0.0), |acc, ir| acc * (one - z * ir))
    }

    /// `U*(z) = conj(U(conj z))`.
    pub fn eval_star(&self, z: Complex64) -> Complex64 {
        self.eval(z.conj()).conj()
    }

    /// `(U(z), U'(z), U''(z))`.
    pub fn eval_derivs(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let (mut p, mut d1, mut d2) = (zero, zero, zero);
        for c in self.coeffs.iter().rev() {
            d2 = d2 * z + d1 * 2.0;
            d1 = d1 * z + p;
            p = p * z + c;
        }
        (self.eval(z), d1, d2)
    }

    /// `|U(x)|^2`, which reproduces `M(x)` on the real line.
    pub fn modulus_sq(&self, x: f64) -> f64 {
        self.eval(Complex64::new(x, 0.0)).norm_sqr()
    }

    /// `sum_k Arg(1 - x/xi_k)`, continuous in real `x`.
    ///
    /// The image of `R` under `x -> 1 - x/xi` is a line through 1 that meets
    /// the real axis only at `x = 0`, so principal arguments never wrap.
    pub fn arg_sum(&self, x: f64) -> f64 {
        self.inv_roots
            .iter()
            .map(|ir| {
                let w = Complex64::new(1.0 - x * ir.re, -x * ir.im);
                w.im.atan2(w.re)
            })
            .sum()
    }

    /// Derivative of `-arg_sum`: `sum_k b_k / |x - xi_k|^2` with `b_k = -Im xi_k > 0`.
    pub fn arg_sum_decrease_rate(&self, x: f64) -> f64 {
        self.roots
            .iter()
            .map(|r| -r.im / ((x - r.re).powi(2) + r.im * r.im))
            .sum()
    }

    /// Second derivative of `-arg_sum`.
    pub fn arg_sum_decrease_rate_deriv(&self, x: f64) -> f64 {
        self.roots
            .iter()
            .map(|r| {
                let d = (x - r.re).powi(2) + r.im * r.im;
                2.0 * r.im * (x - r.re) / (d * d)
            })
            .sum()
    }
}

/// Factorizes `M = U U*` with the Hadamard normalization `U(0) = sqrt(M(0))`.
pub fn factorize(measure: &PositivePolynomialMeasure) -> Result<UFactor> {
    let coeffs = measure.coeffs();
    let scale = coeffs[0].sqrt();
    if measure.degree() == 0 {
        return UFactor::constant(scale);
    }
    let roots = poly_roots(coeffs)?;
    for r in &roots {
        if r.im.abs() < NEAR_REAL_REL * (1.0 + r.norm()) {
            return Err(Error::NearRealRoot { re: r.re, im: r.im });
        }
    }
    let mut lower: Vec<Complex64> = roots.into_iter().filter(|r| r.im < 0.0).collect();
    if lower.len() * 2 != measure.degree() {
        return Err(Error::RootFindingFailed(format!(
            "found {} roots below the axis, expected {}",
            lower.len(),
            measure.degree() / 2
        )));
    }
    if measure.is_even() {
        symmetrize_mirror_pairs(&mut lower);
    }
    lower.sort_by(|a, b| a.re.total_cmp(&b.re).then(b.im.total_cmp(&a.im)));
    let u = UFactor::from_roots(lower, scale)?;

    // Post-check UU* = M on a modest grid.
    let span = 2.0 + u.roots().iter().map(|r| r.norm()).fold(0.0, f64::max);
    for i in 0..=64 {
        let x = -span + 2.0 * span * i as f64 / 64.0;
        let m = measure.eval(x);
        let rel = (u.modulus_sq(x) - m).abs() / m;
        if rel > 1e-8 {
            return Err(Error::RootFindingFailed(format!(
                "|UU* - M|/M = {rel:e} at x = {x}"
            )));
        }
    }
    Ok(u)
}

fn is_mirror_closed(roots: &[Complex64]) -> bool {
    let mut used = vec![false; roots.len()];
    for (i, r) in roots.iter().enumerate() {
        if used[i] {
            continue;
        }
        let target = -r.conj();
        if r.re == 0.0 {
            used[i] = true;
            continue;
        }
        match (0..roots.len()).find(|&j| j != i && !used[j] && roots[j] == target) {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return false,
        }
    }
    true
}

/// Makes a numerically mirror-symmetric root set exactly symmetric under
/// `xi -> -conj(xi)`; self-mirrored roots are moved onto the imaginary axis.
fn symmetrize_mirror_pairs(roots: &mut [Complex64]) {
    let n = roots.len();
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let target = -roots[i].conj();
        let self_dist = 2.0 * roots[i].re.abs();
        let partner = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (roots[a] - target).norm().total_cmp(&(roots[b] - target).norm()));
        match partner {
            Some(j) if (roots[j] - target).norm() < self_dist => {
                let avg = (roots[i] - roots[j].conj()) * 0.5;
                roots[i] = avg;
                roots[j] = -avg.conj();
                used[j] = true;
            }
            _ => roots[i] = Complex64::new(0.0, roots[i].im),
        }
    }
}

pub(crate) fn horner_real(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative_real(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect()
}

fn horner_with_deriv(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    let mut p = zero;
    let mut d = zero;
    for c in coeffs.iter().rev() {
        d = d * z + p;
        p = p * z + c;
    }
    (p, d)
}

/// All complex roots of a real polynomial (ascending coefficients) by
/// Aberth-Ehrlich simultaneous iteration followed by Newton polishing.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|&a| Complex64::new(a / lead, 0.0)).collect();
    let abs_coeffs: Vec<f64> = monic.iter().map(|a| a.norm()).collect();

    // Initial guesses on a circle bounding the roots (Fujiwara), rotated off symmetry axes.
    let radius = (0..n)
        .map(|k| {
            let a = monic[k].norm();
            let e = 1.0 / (n - k) as f64;
            if k == 0 {
                (a / 2.0).powf(e)
            } else {
                a.powf(e)
            }
        })
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
        .collect();

    let mut converged = false;
    for _ in 0..ABERTH_MAX_ITER {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let (p, dp) = horner_with_deriv(&monic, z[i]);
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            converged = true;
            break;
        }
    }

    // Newton polish; accept a step only if it reduces the residual.
    for zi in z.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = horner_with_deriv(&monic, *zi);
            let cand = *zi - p / dp;
            if !cand.is_finite() {
                break;
            }
            let (pc, _) = horner_with_deriv(&monic, cand);
            if pc.norm() < p.norm() {
                *zi = cand;
            } else {
                break;
            }
        }
    }

    if !converged {
        // Multiple roots converge linearly; accept if the backward residual is small.
        for zi in &z {
            let (p, _) = horner_with_deriv(&monic, *zi);
            let r = zi.norm();
            let scale: f64 = abs_coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * r.powi(k as i32))
                .sum();
            if p.norm() > 1e-9 * scale {
                return Err(Error::RootFindingFailed(format!(
                    "residual {:e} at {zi}",
                    p.norm()
                )));
            }
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Expands `prod (x - r)` with complex roots, returning real parts.
    fn expand(roots: &[Complex64]) -> Vec<Complex64> {
        let mut p = vec![c(1.0, 0.0)];
        for r in roots {
            let mut next = vec![c(0.0, 0.0); p.len() + 1];
            for (k, a) in p.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            p = next;
        }
        p
    }

    #[test]
    fn one_plus_x_squared_is_even_and_valid() {
        let m = validate_measure(&[1.0, 0.0, 1.0]).unwrap();
        assert!(m.is_even());
        assert_eq!(m.degree(), 2);
    }

    #[test]
    fn constant_weight_is_lebesgue() {
        let m = validate_measure(&[1.0]).unwrap();
        assert!(m.is_even());
        assert_eq!(m.degree(), 0);
    }

    #[test]
    fn sign_changing_weights_are_rejected() {
        assert!(matches!(
            validate_measure(&[1.0, 1.0]),
            Err(Error::OddDegree(1)) | Err(Error::NotPositive(_))
        ));
        // (x - 1)^2 touches zero
        assert!(matches!(
            validate_measure(&[1.0, -2.0, 1.0]),
            Err(Error::NotPositive(_))
        ));
        // x^2 - 1 is negative at 0
        assert!(matches!(
            validate_measure(&[-1.0, 0.0, 1.0]),
            Err(Error::NotPositive(_))
        ));
        // (x^2 - 4)^2 + ... negative dip: x^4 - 5x^2 + 4 = (x^2-1)(x^2-4)
        assert!(matches!(
            validate_measure(&[4.0, 0.0, -5.0, 0.0, 1.0]),
            Err(Error::NotPositive(_))
        ));
        assert!(matches!(
            validate_measure(&[1.0, 0.0, -1.0]),
            Err(Error::NotPositive(_))
        ));
        assert!(validate_measure(&[]).is_err());
        assert!(validate_measure(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn odd_coefficient_breaks_parity() {
        let m = validate_measure(&[2.0, 1.0, 1.0]).unwrap();
        assert!(!m.is_even());
    }

    #[test]
    fn factor_of_one_plus_x_squared() {
        let m = validate_measure(&[1.0, 0.0, 1.0]).unwrap();
        let u = factorize(&m).unwrap();
        assert_eq!(u.degree(), 1);
        assert!((u.roots()[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((u.scale() - 1.0).abs() < 1e-15);
        // U(z) = 1 - iz, and (1 - iz)(1 + iz) = 1 + z^2
        for &z in &[c(0.3, 0.2), c(-2.0, 1.5), c(4.0, -0.7)] {
            let expect = c(1.0, 0.0) - c(0.0, 1.0) * z;
            assert!((u.eval(z) - expect).norm() < 1e-14);
            let prod = u.eval(z) * u.eval_star(z);
            assert!((prod - (c(1.0, 0.0) + z * z)).norm() < 1e-13);
        }
    }

    #[test]
    fn constant_weight_factor() {
        let m = validate_measure(&[4.0]).unwrap();
        let u = factorize(&m).unwrap();
        assert_eq!(u.degree(), 0);
        assert_eq!(u.scale(), 2.0);
        assert_eq!(u.eval(c(3.0, 1.0)), c(2.0, 0.0));
    }

    #[test]
    fn product_weight_factor() {
        // (1 + x^2)(4 + x^2) = 4 + 5x^2 + x^4
        let m = validate_measure(&[4.0, 0.0, 5.0, 0.0, 1.0]).unwrap();
        let u = factorize(&m).unwrap();
        let mut roots = u.roots().to_vec();
        roots.sort_by(|a, b| b.im.total_cmp(&a.im));
        assert!((roots[0] - c(0.0, -1.0)).norm() < 1e-13);
        assert!((roots[1] - c(0.0, -2.0)).norm() < 1e-13);
        assert!((u.scale() - 2.0).abs() < 1e-15);
        // (1 - iz)(1 - iz/2) * 2
        let z = c(0.7, -0.3);
        let expect = (c(1.0, 0.0) - c(0.0, 1.0) * z) * (c(1.0, 0.0) - c(0.0, 0.5) * z) * 2.0;
        assert!((u.eval(z) - expect).norm() < 1e-13);
        // brute-force multiplication: UU* coefficients equal M
        let (mut up, mut us) = (vec![c(2.0, 0.0)], vec![c(2.0, 0.0)]);
        for r in u.roots() {
            up = mul(&up, &[c(1.0, 0.0), -r.inv()]);
            us = mul(&us, &[c(1.0, 0.0), -r.conj().inv()]);
        }
        let prod = mul(&up, &us);
        for (k, &mk) in m.coeffs().iter().enumerate() {
            assert!((prod[k] - c(mk, 0.0)).norm() < 1e-12, "coefficient {k}");
        }
    }

    fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![c(0.0, 0.0); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn near_real_roots_are_rejected() {
        // (x^2 + 1e-24)(x^2+1): roots at +-1e-12 i
        let eps = 1e-24;
        let m = validate_measure(&[eps, 0.0, 1.0 + eps, 0.0, 1.0]).unwrap();
        assert!(matches!(factorize(&m), Err(Error::NearRealRoot { .. })));
    }

    #[test]
    fn double_roots_still_factor() {
        // (1 + x^2)^2
        let m = validate_measure(&[1.0, 0.0, 2.0, 0.0, 1.0]).unwrap();
        let u = factorize(&m).unwrap();
        for i in 0..100 {
            let x = -10.0 + 0.2 * i as f64;
            assert!((u.modulus_sq(x) - m.eval(x)).abs() / m.eval(x) < 1e-10);
        }
        assert!(u.is_even());
    }

    #[test]
    fn from_roots_rejects_upper_half_plane() {
        assert!(UFactor::from_roots(vec![c(0.0, 1.0)], 1.0).is_err());
        assert!(UFactor::from_roots(vec![c(0.0, -1.0)], -1.0).is_err());
    }

    #[test]
    fn arg_sum_derivative_matches_finite_difference() {
        let u = UFactor::from_roots(vec![c(1.0, -0.5), c(-2.0, -1.0)], 1.5).unwrap();
        for &x in &[-3.0, 0.0, 0.9, 4.2] {
            let h = 1e-6;
            let fd = -(u.arg_sum(x + h) - u.arg_sum(x - h)) / (2.0 * h);
            assert!((fd - u.arg_sum_decrease_rate(x)).abs() < 1e-7);
            let fd2 = (u.arg_sum_decrease_rate(x + h) - u.arg_sum_decrease_rate(x - h)) / (2.0 * h);
            assert!((fd2 - u.arg_sum_decrease_rate_deriv(x)).abs() < 1e-6);
        }
        let (_, d1, d2) = u.eval_derivs(c(0.4, 0.3));
        let h = 1e-5;
        let z = c(0.4, 0.3);
        let fd1 = (u.eval(z + h) - u.eval(z - h)) / (2.0 * h);
        let fd2 = (u.eval(z + h) - u.eval(z) * 2.0 + u.eval(z - h)) / (h * h);
        assert!((fd1 - d1).norm() < 1e-8);
        assert!((fd2 - d2).norm() < 1e-4);
    }

    /// Random even weight `|Q|^2` where the roots of `Q` are closed under
    /// `r -> -conj(r)`; degree of `M` at most 10.
    fn even_weight_strategy() -> impl Strategy<Value = Vec<Complex64>> {
        (
            prop::collection::vec((0.2f64..3.0, 0.2f64..2.5), 0..=2),
            prop::option::of(0.2f64..2.5),
        )
            .prop_map(|(pairs, axis)| {
                let mut roots = Vec::new();
                for (re, im) in pairs {
                    roots.push(c(re, im));
                    roots.push(c(-re, im));
                }
                if let Some(im) = axis {
                    roots.push(c(0.0, im));
                }
                roots
            })
            .prop_filter("distinct roots", |roots| {
                roots.iter().enumerate().all(|(i, a)| {
                    roots.iter().skip(i + 1).all(|b| (a - b).norm() > 0.1)
                })
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn random_even_weights_factor_exactly(q_roots in even_weight_strategy()) {
            let mut all = q_roots.clone();
            all.extend(q_roots.iter().map(|r| r.conj()));
            let coeffs: Vec<f64> = expand(&all).iter().map(|a| a.re).collect();
            let m = validate_measure(
                &coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, &a)| if k % 2 == 1 { 0.0 } else { a })
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let u = factorize(&m).unwrap();
            prop_assert!(u.roots().iter().all(|r| r.im < 0.0));
            let mut worst = 0.0f64;
            for i in 0..=400 {
                let x = -20.0 + 0.1 * i as f64;
                worst = worst.max((u.modulus_sq(x) - m.eval(x)).abs() / m.eval(x));
            }
            prop_assert!(worst <= 1e-10, "relative defect {worst:e}");
            prop_assert!(u.is_even());
        }
    }

    #[test]
    fn even_weight_parity_identity_at_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        // roots of Q: 1+0.5i, -1+0.5i, 2i -> M even of degree 6
        let q = [c(1.0, 0.5), c(-1.0, 0.5), c(0.0, 2.0)];
        let mut all = q.to_vec();
        all.extend(q.iter().map(|r| r.conj()));
        let coeffs: Vec<f64> = expand(&all)
            .iter()
            .enumerate()
            .map(|(k, a)| if k % 2 == 1 { 0.0 } else { a.re })
            .collect();
        let u = factorize(&validate_measure(&coeffs).unwrap()).unwrap();
        for _ in 0..1000 {
            let z = c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let lhs = u.eval(-z.conj()).conj();
            let rhs = u.eval(z);
            assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1e-300));
        }
    }
}

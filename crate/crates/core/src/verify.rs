//! Acceptance criteria, shared by the `verify` subcommand and the acceptance
//! test target. Every tolerance is a named constant.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::{
    self, build_approximant, grid, kernel_products, ApproxOptions, Target, TargetKind,
};
use crate::error::{Error, Result};
use crate::hb::HbFunction;
use crate::laplace::LpFunction;
use crate::polyfact::{factorize, validate_measure, PositivePolynomialMeasure, UFactor};
use crate::quad::{self, Mode, QuadSpec};

pub const CLASSICAL_ZERO_TOL: f64 = 1e-10;
pub const CLASSICAL_GRID: usize = 10_000;
pub const FACTOR_TRIALS: usize = 100;
pub const FACTOR_MAX_DEGREE: usize = 10;
pub const FACTOR_REL_TOL: f64 = 1e-10;
pub const KERNEL_TOL: f64 = 1e-6;
pub const ANNIHILATION_FAMILY: usize = 10;
pub const ANNIHILATION_TOL: f64 = 1e-6;
pub const POISSON_REL_TOL: f64 = 1e-6;
pub const NODE_COUNT: usize = 10;
pub const NODE_TOL: f64 = 1e-8;
pub const SIGN_GRID: (f64, f64, usize) = (-20.0, 20.0, 10_000);
pub const ERROR_REL_TOL: f64 = 1e-6;
pub const ERROR_TAUS: [f64; 4] = [1.0, 1.5, 2.0, 3.0];
pub const LAPLACE_POINT_TOL: f64 = 1e-10;
pub const LAPLACE_ROUND_TRIP_TOL: f64 = 1e-6;
pub const PERTURBATION_TRIALS: usize = 20;
pub const PERTURBATION_TOL: f64 = 1e-9;

const SEED: u64 = 20_240_601;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} {}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "classical"),
    (2, "factorization"),
    (3, "kernel"),
    (4, "signature"),
    (5, "poisson"),
    (6, "interpolation"),
    (7, "error"),
    (8, "laplace"),
    (9, "perturbation"),
];

/// Criterion ids selected by `suite`: `all`, a number, or a name.
pub fn select(suite: &str) -> Result<Vec<u8>> {
    if suite == "all" {
        return Ok(CRITERIA.iter().map(|c| c.0).collect());
    }
    suite
        .split(',')
        .map(|s| {
            let s = s.trim();
            CRITERIA
                .iter()
                .find(|(id, name)| *name == s || id.to_string() == s)
                .map(|c| c.0)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown suite '{s}'")))
        })
        .collect()
}

pub fn run(id: u8) -> Report {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map_or("unknown", |c| c.1);
    let start = Instant::now();
    let outcome = match id {
        1 => classical(),
        2 => factorization(),
        3 => kernel(),
        4 => signature(),
        5 => poisson(),
        6 => interpolation(),
        7 => error_consistency(),
        8 => laplace(),
        9 => perturbation(),
        _ => Err(Error::InvalidArgument(format!("no criterion {id}"))),
    };
    let (passed, detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Report {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

type Outcome = Result<(bool, String)>;

fn cauchy() -> Result<PositivePolynomialMeasure> {
    validate_measure(&[1.0, 0.0, 1.0])
}

fn lebesgue() -> PositivePolynomialMeasure {
    PositivePolynomialMeasure::lebesgue()
}

/// Zeros at `k pi/4` and `psi = sgn sin 4x` for `M = 1`, `tau = 2`.
pub fn classical() -> Outcome {
    let hb = HbFunction::build(UFactor::constant(1.0)?, 2.0, 0.0)?;
    let zs = hb.sign_changes(-10.0, 10.0)?;
    let zero_err = zs
        .iter()
        .map(|&x| (x - (x / FRAC_PI_4).round() * FRAC_PI_4).abs())
        .fold(0.0, f64::max);
    let expected = (-12..=12).count();
    let mut mismatches = 0;
    let mut checked = 0;
    for x in grid(-10.0, 10.0, CLASSICAL_GRID) {
        let s = (4.0 * x).sin();
        if s.abs() < 1e-12 {
            continue;
        }
        checked += 1;
        if hb.signature(x) != if s > 0.0 { 1 } else { -1 } {
            mismatches += 1;
        }
    }
    Ok((
        zs.len() == expected && zero_err <= CLASSICAL_ZERO_TOL && mismatches == 0,
        format!(
            "{} zeros on [-10,10] (expected {expected}), max |x - k pi/4| = {zero_err:.2e}, {mismatches}/{checked} grid mismatches",
            zs.len()
        ),
    ))
}

/// A random positive even polynomial of degree at most `max_degree`.
pub fn random_even_positive(rng: &mut ChaCha8Rng, max_degree: usize) -> Vec<f64> {
    let half = rng.gen_range(0..=max_degree / 2);
    if rng.gen_bool(0.5) {
        // p(x^2) with positive coefficients
        let mut c = vec![0.0; 2 * half + 1];
        for j in 0..=half {
            c[2 * j] = rng.gen_range(0.05..2.0);
        }
        return c;
    }
    // products of x^2 + a and (x^2 - b)^2 + c
    let mut c = vec![rng.gen_range(0.5..2.0)];
    let mut deg = 0;
    while deg < 2 * half {
        let factor = if 2 * half - deg >= 4 && rng.gen_bool(0.5) {
            let b: f64 = rng.gen_range(0.0..4.0);
            let cc: f64 = rng.gen_range(0.05..2.0);
            vec![b * b + cc, 0.0, -2.0 * b, 0.0, 1.0]
        } else {
            vec![rng.gen_range(0.05..3.0), 0.0, 1.0]
        };
        deg += factor.len() - 1;
        let mut out = vec![0.0; c.len() + factor.len() - 1];
        for (i, a) in c.iter().enumerate() {
            for (j, b) in factor.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        c = out;
    }
    c
}

/// `U U* = M` for random positive even polynomials.
pub fn factorization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let xs = grid(-10.0, 10.0, 2001);
    let mut worst = 0.0f64;
    let mut worst_im = f64::NEG_INFINITY;
    for _ in 0..FACTOR_TRIALS {
        let coeffs = random_even_positive(&mut rng, FACTOR_MAX_DEGREE);
        let m = validate_measure(&coeffs)?;
        let u = factorize(&m)?;
        for &x in &xs {
            let z = Complex64::new(x, 0.0);
            let v = (u.eval(z) * u.eval_star(z)).re;
            worst = worst.max((v - m.eval(x)).abs() / m.eval(x));
        }
        worst_im = u.roots().iter().map(|r| r.im).fold(worst_im, f64::max);
    }
    let below = worst_im < 0.0 || worst_im == f64::NEG_INFINITY;
    Ok((
        worst <= FACTOR_REL_TOL && below,
        format!("{FACTOR_TRIALS} polynomials, max |UU* - M|/M = {worst:.2e}, max Im(root) = {worst_im:.3e}"),
    ))
}

/// `F(w') = int F(x) conj K(w', x) dmu` for `F = K(w, .)`.
pub fn reproducing_defect(hb: &HbFunction, m: &PositivePolynomialMeasure, w: Complex64, w2: Complex64) -> Result<f64> {
    let spec = QuadSpec::default();
    let breaks = quad::hb_breaks(hb)?;
    let prod = |x: f64| {
        let z = Complex64::new(x, 0.0);
        hb.kernel(w, z) * hb.kernel(w2, z).conj()
    };
    let re = quad::integrate_mu_breaks(|x| prod(x).re, m, &breaks, &[], &spec, Mode::Signed)?;
    let im = quad::integrate_mu_breaks(|x| prod(x).im, m, &breaks, &[], &spec, Mode::Signed)?;
    Ok((Complex64::new(re.value, im.value) - hb.kernel(w, w2)).norm())
}

pub fn kernel() -> Outcome {
    let hb = HbFunction::build(factorize(&cauchy()?)?, 1.0, 0.0)?;
    let m = cauchy()?;
    let c = Complex64::new;
    let pairs = [
        (c(0.0, 0.0), c(0.0, 0.0)),
        (c(0.5, 0.0), c(-1.2, 0.0)),
        (c(0.0, 1.0), c(2.0, 0.0)),
        (c(0.3, 0.4), c(-0.7, 0.2)),
        (c(1.0, 0.5), c(1.0, -0.5)),
    ];
    let mut worst = 0.0f64;
    for (w, w2) in pairs {
        worst = worst.max(reproducing_defect(&hb, &m, w, w2)?);
    }
    Ok((
        worst <= KERNEL_TOL,
        format!("5 pairs, max |<K(w,.),K(w',.)> - K(w,w')| = {worst:.2e}"),
    ))
}

pub fn signature() -> Outcome {
    let family = kernel_products(ANNIHILATION_FAMILY, SEED);
    let spec = QuadSpec::default();
    let mut worst = 0.0f64;
    let mut cases = Vec::new();
    for (label, m) in [("M=1", lebesgue()), ("M=1+x^2", cauchy()?)] {
        let u = factorize(&m)?;
        for tau in [1.0, 2.0] {
            let hb = HbFunction::build(u.clone(), tau, 0.0)?;
            let mut case_worst = 0.0f64;
            for g in &family {
                let r = quad::annihilation_residual(|x| g.eval(&hb, x), &hb, &m, &spec)?;
                case_worst = case_worst.max(r.normalized());
            }
            worst = worst.max(case_worst);
            cases.push(format!("{label} tau={tau}: {case_worst:.1e}"));
        }
    }
    Ok((
        worst <= ANNIHILATION_TOL,
        format!("{} functions each; {}", family.len(), cases.join(", ")),
    ))
}

pub fn poisson() -> Outcome {
    let m = cauchy()?;
    let u = factorize(&m)?;
    let spec = QuadSpec::default();
    let e4 = (-4.0f64).exp() / 3.0;
    let cases = [
        (TargetKind::Poisson, 2.0, 4.0 / (3.0 * PI) * e4.atan()),
        (TargetKind::ConjPoisson, 2.0, 4.0 / (3.0 * PI) * e4.atanh()),
        (TargetKind::Poisson, 1.0, 1.0 / (PI * 1f64.exp().powi(2))),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, lambda, oracle) in cases {
        let target = Target::new(kind, lambda)?;
        let (a, psi) = build_approximant(&u, 1.0, &target)?;
        let closed = match &a {
            approx::Approximant::Poisson(p) => p.error_closed_form()?,
            approx::Approximant::Interp(_) => unreachable!("poisson targets"),
        };
        let q = approx::l1_error(|x| a.eval_real(x), &target, &psi, &m, &spec)?.value;
        let rq = (q - oracle).abs() / oracle;
        let rc = (closed - oracle).abs() / oracle;
        ok &= rq <= POISSON_REL_TOL && rc <= POISSON_REL_TOL;
        parts.push(format!("{kind} lambda={lambda}: quad {q:.10e} vs {oracle:.10e} (rel {rq:.1e})"));
    }
    Ok((ok, parts.join("; ")))
}

pub fn interpolation() -> Outcome {
    let m = cauchy()?;
    let u = factorize(&m)?;
    let xs = grid(SIGN_GRID.0, SIGN_GRID.1, SIGN_GRID.2);
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [TargetKind::TruncExp, TargetKind::AbsExp, TargetKind::Gauss] {
        let target = Target::new(kind, 1.0)?;
        let (a, psi) = build_approximant(&u, 1.0, &target)?;
        let res = approx::node_residual(&a, &target, &psi, NODE_COUNT)?;
        let sc = approx::sign_check(&a, &target, &psi, &xs)?;
        ok &= res <= NODE_TOL && sc.violations == 0 && sc.checked + 50 >= xs.len();
        parts.push(format!(
            "{kind}: residual {res:.1e}, {}/{} sign violations",
            sc.violations, sc.checked
        ));
    }
    Ok((ok, parts.join("; ")))
}

pub fn error_consistency() -> Outcome {
    let m = cauchy()?;
    let opts = ApproxOptions {
        grid: (-20.0, 20.0, 200),
        cross_check: false,
        ..ApproxOptions::default()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [TargetKind::TruncExp, TargetKind::AbsExp, TargetKind::Gauss] {
        let target = Target::new(kind, 1.0)?;
        let mut errors = Vec::new();
        let mut worst_gap = 0.0f64;
        for tau in ERROR_TAUS {
            let r = approx::approximate(&m, tau, target, &opts)?;
            worst_gap = worst_gap.max(r.relative_gap());
            errors.push(r.error_quadrature.value);
        }
        let monotone = errors.windows(2).all(|w| w[1] <= w[0] * (1.0 + ERROR_REL_TOL));
        ok &= worst_gap <= ERROR_REL_TOL && monotone;
        let list: Vec<String> = errors.iter().map(|e| format!("{e:.4e}")).collect();
        parts.push(format!("{kind}: gap {worst_gap:.1e}, errors [{}]", list.join(", ")));
    }
    Ok((ok, parts.join("; ")))
}

pub fn laplace() -> Outcome {
    let l = LpFunction::finite(&[-1.0, 1.0], 1, 1.0)?;
    let closed = |t: f64| if t > 0.0 { 1.0 - 0.5 * (-t).exp() } else { 0.5 * t.exp() };
    let mut point_err = 0.0f64;
    let mut monotone = true;
    let mut prev = f64::NEG_INFINITY;
    for t in grid(-5.0, 5.0, 1000) {
        let g = l.g_eval(t)?;
        point_err = point_err.max((g - closed(t)).abs());
        monotone &= g > prev;
        prev = g;
    }
    let table = l.g_table(6.0, 0.25, &[])?;
    let c = l.abscissa();
    let mut trip = 0.0f64;
    for z in [
        Complex64::new(c, 0.0),
        Complex64::new(0.1, 0.0),
        Complex64::new(c, 1.0),
        Complex64::new(0.9, -2.0),
        Complex64::new(0.05, 0.3),
    ] {
        trip = trip.max((l.eval(z) * table.laplace(z) - 1.0).norm());
    }
    Ok((
        point_err <= LAPLACE_POINT_TOL && monotone && trip <= LAPLACE_ROUND_TRIP_TOL,
        format!("max |g - closed form| = {point_err:.1e}, monotone: {monotone}, max round-trip defect = {trip:.1e}"),
    ))
}

pub fn perturbation() -> Outcome {
    let m = cauchy()?;
    let u = factorize(&m)?;
    let target = Target::new(TargetKind::Poisson, 2.0)?;
    let (a, psi) = build_approximant(&u, 1.0, &target)?;
    let r = approx::perturbation_check(&a, &target, &psi, &m, &QuadSpec::default(), PERTURBATION_TRIALS, SEED)?;
    Ok((
        r.worst_decrease <= PERTURBATION_TOL,
        format!(
            "{} trials, base error {:.6e}, largest decrease {:.2e}",
            r.trials, r.base, r.worst_decrease
        ),
    ))
}

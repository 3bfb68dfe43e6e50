use std::f64::consts::FRAC_PI_4;
use std::io::Write;

use hbapprox::cli::run_with;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hbapprox").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn field(text: &str, key: &str) -> f64 {
    let tail = text.split(&format!("{key} = ")).nth(1).unwrap();
    tail.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn approx_poisson_summary() {
    let (code, out, err) = run(&["approx", "--measure", "1,0,1", "--tau", "1", "--target", "poisson", "--lambda", "2"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("x,f,F,err,psi\n"));
    assert_eq!(out.lines().count(), 202);
    let closed = field(&err, "error_closed_form");
    assert!((closed - 2.5911e-3).abs() < 1e-7, "{closed}");
    assert!((field(&err, "error_quadrature") - closed).abs() <= 1e-6 * closed);
    assert!(err.contains("agreement = true"));
}

#[test]
fn approx_rows_are_consistent() {
    let (code, out, _) = run(&["approx", "--measure", "1,0,1", "--target", "absexp", "--points", "11"]);
    assert_eq!(code, 0);
    for line in out.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(v.len(), 5);
        assert_eq!(v[1] - v[2], v[3]);
        assert!(v[4] == 1.0 || v[4] == -1.0 || v[4] == 0.0);
    }
}

#[test]
fn signature_classical_sign_changes() {
    let (code, out, err) = run(&["signature", "--measure", "1", "--tau", "2", "--range", "-5,5"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("x,A,B,psi\n"));
    let list = err.lines().find(|l| l.starts_with("sign changes")).unwrap();
    let xs: Vec<f64> = list.split(": ").nth(1).unwrap().split_whitespace().map(|s| s.parse().unwrap()).collect();
    assert_eq!(xs.len(), 13);
    for x in xs {
        let k = x / FRAC_PI_4;
        assert!((k - k.round()).abs() < 1e-9, "{x}");
    }
}

#[test]
fn factorize_lists_lower_half_plane_roots() {
    let (code, out, _) = run(&["factorize", "--measure", "2,0,3,0,1"]);
    assert_eq!(code, 0);
    let roots: Vec<&str> = out.lines().filter(|l| l.starts_with("root,")).collect();
    assert_eq!(roots.len(), 2);
    for r in roots {
        let im: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!(im < 0.0);
    }
}

#[test]
fn signature_even_alpha_shifts_zeros() {
    let (code, _, err) = run(&["signature", "--tau", "2", "--range", "-5,5", "--alpha", "even"]);
    assert_eq!(code, 0);
    assert!(err.contains("sign changes (12)"));
    assert_eq!(run(&["signature", "--measure", "1,1,1", "--alpha", "even"]).0, 1);
}

#[test]
fn kernel_table() {
    let (code, out, _) = run(&["kernel", "--measure", "1,0,1", "--w", "0.5,1", "--points", "5"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next(), Some("x,re,im"));
    assert_eq!(out.lines().count(), 6);
}

#[test]
fn output_is_deterministic() {
    let args = ["approx", "--measure", "1,0,1", "--target", "gauss", "--tau", "2", "--points", "21"];
    assert_eq!(run(&args).1, run(&args).1);
}

#[test]
fn validation_errors_exit_one() {
    assert_eq!(run(&["approx", "--measure", "1,-1"]).0, 1);
    assert_eq!(run(&["approx", "--measure", "1,0,-1"]).0, 1);
    assert_eq!(run(&["signature", "--range", "5,-5"]).0, 1);
    assert_eq!(run(&["approx", "--target", "bogus"]).0, 1);
    assert_eq!(run(&["approx", "--tau", "0"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["verify", "--suite", "nonsense"]).0, 1);
}

#[test]
fn config_file_with_flag_override() {
    let dir = std::env::temp_dir().join(format!("hbapprox-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    let table = dir.join("table.csv");
    let mut f = std::fs::File::create(&cfg).unwrap();
    writeln!(f, "measure = [1.0, 0.0, 1.0]\ntau = 1.0\ntarget = \"gauss\"\nlambda = 2.0\npoints = 7").unwrap();
    drop(f);
    let (code, out, err) = run(&[
        "approx", "--config", cfg.to_str().unwrap(), "--target", "poisson", "--output", table.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.is_empty());
    assert!(err.contains("target = poisson"));
    assert!((field(&err, "error_closed_form") - 2.5911e-3).abs() < 1e-7);
    assert_eq!(std::fs::read_to_string(&table).unwrap().lines().count(), 8);

    writeln!(std::fs::File::create(&cfg).unwrap(), "colour = 3").unwrap();
    assert_eq!(run(&["approx", "--config", cfg.to_str().unwrap()]).0, 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_single_criterion() {
    let (code, out, _) = run(&["verify", "--suite", "classical,laplace"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
}

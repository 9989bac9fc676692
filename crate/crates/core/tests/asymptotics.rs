use std::f64::consts::E;

use tcue_core::asymptotics::*;
use tcue_core::exact_law::{ExactLaw, Law};
use tcue_core::scaling::{derive_constants, EnsembleParams, ScalingConstants};

fn constants(n: u64, p: u64) -> ScalingConstants {
    derive_constants(&EnsembleParams::new(n, p).unwrap()).unwrap()
}

#[test]
fn leading_survival_term_at_a_million() {
    let c = constants(100_000, 50_000);
    let u = (2.0 * 1e6f64.ln()).sqrt();
    let x = (u - c.a_n) / c.b_n;
    let v = a_n_asym(&c, 0, x).unwrap();
    let want = 1e-6 / (2.506_628_274_631_000_7 * u);
    assert!((v.value / want - 1.0).abs() < 1e-12);
    assert!(v.in_regime);

    let law = ExactLaw::new(EnsembleParams::new(100_000, 50_000).unwrap(), Law::W).unwrap();
    let exact = law.survival_a(0, x).unwrap();
    assert!((v.value / exact - 1.0).abs() < 0.1, "{} vs {exact}", v.value);
}

#[test]
fn leading_survival_term_band_at_u4() {
    let report = check_survival_asymptotics(EnsembleParams::new(100_000, 50_000).unwrap(), &[0], &[4.0]).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn leading_term_decreases_in_x() {
    let c = constants(100_000, 50_000);
    let mut prev = f64::INFINITY;
    for k in 0..100 {
        let v = a_n_asym(&c, 10, 1.0 + 0.1 * k as f64).unwrap().value;
        assert!(v < prev);
        prev = v;
    }
}

#[test]
fn survival_bound_shape() {
    let c = constants(10_000, 5_000);
    assert!((a_n_bound(&c, 0, 3.0) - 100.0).abs() < 1e-12);
    let mut prev = f64::INFINITY;
    for j in 0..500 {
        let b = a_n_bound(&c, j, 1.0);
        assert!(b < prev);
        prev = b;
    }
    let report = check_survival_bound(EnsembleParams::new(10_000, 5_000).unwrap(), &[0], &[1.0]).unwrap();
    assert!(report.pass);
}

#[test]
fn tail_sum_decreases_in_l() {
    let c = constants(10_000, 5_000);
    let mut prev = f64::INFINITY;
    for l in 0..50 {
        let v = tail_sum_asym(&c, l, c.ell2).unwrap();
        assert!(v < prev);
        prev = v;
    }
}

#[test]
fn alpha_and_kappa_at_reference_points() {
    let c = constants(100_000, 50_000);
    let at_ell2 = alpha_asym(&c, c.ell2).unwrap();
    assert!((at_ell2 - 1.0 / (2.506_628_274_631_000_7 * c.log_s_n)).abs() < 1e-15);
    assert_eq!(kappa_n(&c, c.ell2), 0.0);
    assert!(kappa_n(&c, c.ell2 - 4.0).abs() < 1e-15);
    // approach to ell2 from below
    let mut prev = f64::INFINITY;
    for k in 1..=20 {
        let x = c.ell2 - 1.0 / k as f64;
        let gap = (alpha_asym(&c, x).unwrap() * x.exp() - 1.0).abs();
        assert!(gap < prev);
        prev = gap;
    }
}

#[test]
fn kappa_sign_structure() {
    let c = constants(1_000_000, 500_000);
    for k in 1..100 {
        let x = c.ell2 - 4.0 + 4.0 * k as f64 / 100.0;
        assert!(kappa_n(&c, x) < 0.0, "x = {x}");
        assert!(kappa_n(&c, c.ell2 + 0.05 * k as f64) > 0.0);
    }
}

#[test]
fn alpha_band_at_origin() {
    let report = check_alpha(EnsembleParams::new(100_000, 50_000).unwrap(), &[0.0]).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn leading_rates() {
    let c = constants(1_000_000, 500_000);
    let r = tcue_core::asymptotics::leading_rates(&c);
    assert!((r.w1_refined / r.ks_refined - E).abs() < 1e-14);
    let lnn = 1e6f64.ln();
    assert!((r.w1_headline - lnn.ln().powi(2) / (2.0 * lnn)).abs() < 1e-15);

    let gaps: Vec<f64> = [1e3, 1e6, 1e9, 1e12]
        .iter()
        .map(|&n| {
            let n = n as u64;
            let r = tcue_core::asymptotics::leading_rates(&constants(n, n / 2));
            (r.w1_refined / r.w1_headline - 1.0).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn report_verdict_is_conjunction() {
    let report = check_tail_integral(&[6.0, 8.0], &[0.0, 2.0]).unwrap();
    assert_eq!(report.pass, report.points.iter().all(|p| p.passes()));
    assert!(report.pass);
}

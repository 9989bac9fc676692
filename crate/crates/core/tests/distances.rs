use std::f64::consts::E;

use tcue_core::asymptotics::default_window;
use tcue_core::distances::*;
use tcue_core::exact_law::{ExactLaw, Law};
use tcue_core::quadrature::{integrate, QuadOptions};
use tcue_core::scaling::EnsembleParams;

fn law(n: u64, p: u64, which: Law) -> ExactLaw {
    ExactLaw::new(EnsembleParams::new(n, p).unwrap(), which).unwrap()
}

#[test]
fn gumbel_against_itself_and_shifted() {
    let g = GumbelReference;
    let sup = sup_distance(&|x| Ok(g.cdf(x)), &|x| Ok(g.cdf(x)), -10.0, 30.0, KsOptions::default()).unwrap();
    assert_eq!(sup.value, 0.0);
    let shift = 0.7;
    let w1 = integrate_panels(
        &|x| Ok((g.cdf(x) - g.cdf(x - shift)).abs()),
        -40.0,
        60.0,
        W1Options::default(),
    )
    .unwrap();
    assert!((w1.value - shift).abs() < 1e-9);
}

#[test]
fn ks_close_to_first_order_profile() {
    let w = law(10_000, 5_000, Law::W);
    let c = &w.constants;
    let ks = ks_distance(&w).unwrap();
    let profile = default_window(c, 2001)
        .into_iter()
        .map(|x| {
            let g = (-(-x).exp()).exp();
            g * ((-x).exp() - w.alpha_n(x).unwrap().value()).abs()
        })
        .fold(0.0, f64::max);
    assert!(
        (ks.value / profile - 1.0).abs() <= 0.35,
        "KS {} vs profile {profile}",
        ks.value
    );
    assert!((ks.ratio_refined - ks.value / ks.leading_refined).abs() < 1e-15);
    assert!(ks.value > 0.0 && ks.value <= 1.0);
}

#[test]
fn w1_ratio_in_band() {
    let w = law(10_000, 5_000, Law::W);
    let r = w1_distance(&w).unwrap();
    assert!((0.2..=3.0).contains(&r.ratio_refined), "{}", r.ratio_refined);
    assert!(r.quadrature_error_estimate < 1e-9);
    assert!((r.leading_refined / ks_distance(&w).unwrap().leading_refined - E).abs() < 1e-12);
}

#[test]
fn ks_grid_refinement() {
    let w = law(10_000, 5_000, Law::W);
    let base = ks_distance(&w).unwrap().value;
    let fine = ks_distance_with(
        &w,
        KsOptions {
            grid_points: 4096,
            ..KsOptions::default()
        },
    )
    .unwrap()
    .value;
    assert!((base - fine).abs() < 1e-9, "{base} vs {fine}");
}

#[test]
fn x_against_w_triangle_inequalities() {
    let w = law(10_000, 5_000, Law::W);
    let x = w.with_law(Law::X);
    let xw = w1_between_laws(&x, &w).unwrap();
    let w1_w = w1_distance(&w).unwrap().value;
    let w1_x = w1_distance(&x).unwrap().value;
    assert!((w1_x - w1_w).abs() <= xw.value + 1e-9);

    let ks_w = ks_distance(&w).unwrap().value;
    let ks_x = ks_distance(&x).unwrap().value;
    let sup = sup_distance(
        &|t| x.cdf(t),
        &|t| w.cdf(t),
        x.lower_cut() - 1.0,
        w.upper_cut() + 1.0,
        KsOptions::default(),
    )
    .unwrap();
    assert!((ks_x - ks_w).abs() <= sup.value + 1e-12);
}

#[test]
fn x_against_w_integrand_and_boundary_identity() {
    let w = law(10_000, 5_000, Law::W);
    let x = w.with_law(Law::X);
    let cuts = w.cuts;
    for k in 0..2000 {
        let t = cuts.y3 + (cuts.y2 - cuts.y3) * k as f64 / 1999.0;
        assert!(x.cdf(t).unwrap() - w.cdf(t).unwrap() >= 0.0);
    }
    // ∫(F_X − F_W) = ∫_{y3}^{y4} F_X − ∫_{y0}^{y2} F_W + (y2 − y4)
    let opts = QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 1e-13,
        max_panels: 100_000,
    };
    let breaks: Vec<f64> = (-40..80).map(|k| 0.25 * k as f64).collect();
    let fx = integrate(|t| x.cdf(t).unwrap(), cuts.y3, cuts.y4, &breaks, opts).value;
    let fw = integrate(|t| w.cdf(t).unwrap(), cuts.y0, cuts.y2, &breaks, opts).value;
    let identity = fx - fw + (cuts.y2 - cuts.y4);
    let xw = w1_between_laws(&x, &w).unwrap().value;
    assert!((identity - xw).abs() < 1e-8, "{identity} vs {xw}");
}

#[test]
fn rejects_mismatched_laws() {
    let a = law(1000, 500, Law::W);
    let b = law(1000, 400, Law::W);
    assert!(w1_between_laws(&a.with_law(Law::X), &b).is_err());
    assert!(w1_between_laws(&a, &a).is_err());
}

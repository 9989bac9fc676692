use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use tcue_core::asymptotics::alpha_asym;
use tcue_core::exact_law::{Alpha, ExactLaw, Law};
use tcue_core::scaling::EnsembleParams;

fn law(n: u64, p: u64, which: Law) -> ExactLaw {
    ExactLaw::new(EnsembleParams::new(n, p).unwrap(), which).unwrap()
}

fn grid(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
}

#[test]
fn survival_matches_exact_binomial_tail() {
    // P(Y_p ≥ t) = Σ_{k<p} C(p+m−1, k) t^k (1−t)^{p+m−1−k} for Y_p ~ Beta(p, m)
    let w = law(200, 100, Law::W);
    let t = BigRational::from_float(w.constants.beta_n(0.0)).unwrap();
    let s = BigRational::one() - &t;
    let (p, big_n) = (100u32, 199u32);
    let mut total = BigRational::zero();
    let mut binom = BigInt::one();
    for k in 0..p {
        total += BigRational::from_integer(binom.clone())
            * num_traits::pow(t.clone(), k as usize)
            * num_traits::pow(s.clone(), (big_n - k) as usize);
        binom = binom * BigInt::from(big_n - k) / BigInt::from(k + 1);
    }
    let exact = total.to_f64().unwrap();
    let got = w.survival_a(0, 0.0).unwrap();
    assert!((got / exact - 1.0).abs() <= 1e-10, "{got} vs {exact}");
}

#[test]
fn survival_at_the_support_edges() {
    let w = law(300, 120, Law::W);
    let cuts = w.cuts;
    assert_eq!(w.survival_a(0, cuts.y0 - 1.0).unwrap(), 1.0);
    assert_eq!(w.survival_a(5, cuts.y2 + 1.0).unwrap(), 0.0);
    assert!(w.survival_a(120, 0.0).is_err());
}

#[test]
fn cdf_is_monotone_on_a_fine_grid() {
    let w = law(2000, 1000, Law::W);
    let mut prev = 0.0;
    for x in grid(w.lower_cut() - 1.0, w.upper_cut() + 1.0, 10_000) {
        let f = w.cdf(x).unwrap();
        assert!((0.0..=1.0).contains(&f));
        assert!(f >= prev, "cdf decreased at x = {x}");
        prev = f;
    }
}

#[test]
fn recurrence_matches_direct_product() {
    let w = law(2000, 1000, Law::W);
    for x in grid(-4.0, 8.0, 50) {
        let fast = w.cdf(x).unwrap();
        let direct = w.log_cdf_direct(x).unwrap().exp();
        assert!((fast - direct).abs() <= 1e-9, "x = {x}: {fast} vs {direct}");
    }
}

#[test]
fn x_law_dominates_w_law() {
    let w = law(1000, 400, Law::W);
    let x = w.with_law(Law::X);
    for t in grid(x.lower_cut() - 1.0, w.upper_cut() + 1.0, 2000) {
        assert!(x.cdf(t).unwrap() >= w.cdf(t).unwrap(), "x = {t}");
    }
    assert_eq!(x.cdf(x.lower_cut()).unwrap(), 0.0);
    assert_eq!(x.cdf(x.upper_cut()).unwrap(), 1.0);
}

#[test]
fn alpha_is_minus_log_cdf() {
    let w = law(5000, 2500, Law::W);
    for x in grid(-2.0, 10.0, 100) {
        let Alpha::Finite(a) = w.alpha_n(x).unwrap() else {
            panic!("alpha infinite at {x}");
        };
        let f = w.cdf(x).unwrap();
        assert!(((-a).exp() - f).abs() <= 1e-14 * f.max(1e-300) + 1e-300, "x = {x}");
    }
    assert_eq!(w.alpha_n(w.upper_cut() + 0.5).unwrap(), Alpha::Finite(0.0));
    assert_eq!(w.alpha_n(w.lower_cut() - 0.5).unwrap(), Alpha::Infinite);
}

#[test]
fn alpha_approaches_its_asymptotic_value_at_ell2() {
    // the gap is O(1/log s_n), so it shrinks slowly but steadily
    let mut prev = f64::INFINITY;
    for n in [10_000u64, 100_000, 1_000_000] {
        let w = law(n, n / 2, Law::W);
        let c = &w.constants;
        let exact = w.alpha_n(c.ell2).unwrap().value();
        let asym = alpha_asym(c, c.ell2).unwrap();
        assert!((asym - (-c.ell2).exp()).abs() < 1e-15);
        let gap = (exact / asym - 1.0).abs();
        assert!(
            gap < prev && gap <= 0.25,
            "n = {n}: alpha_n(ell2) = {exact}, asymptotic {asym}"
        );
        prev = gap;
    }
}

#[test]
fn survival_decreases_in_j_and_x() {
    let w = law(4000, 2000, Law::W);
    for x in [-1.0, 0.0, 1.5, 4.0] {
        let mut prev = 1.0;
        for j in (0..2000).step_by(37) {
            let s = w.survival_a(j, x).unwrap();
            assert!(s <= prev, "j = {j}, x = {x}");
            prev = s;
        }
    }
    for j in [0, 10, 100] {
        let mut prev = 1.0;
        for x in grid(-3.0, 6.0, 200) {
            let s = w.survival_a(j, x).unwrap();
            assert!(s <= prev, "j = {j}, x = {x}");
            prev = s;
        }
    }
}

use tcue_core::scaling::{derive_constants, EnsembleParams};

#[test]
fn constants_and_roots_across_sizes() {
    for &(n, p) in &[(100u64, 50u64), (1000, 300), (123_457, 61_000), (1_000_000, 500_000)] {
        let c = derive_constants(&EnsembleParams::new(n, p).unwrap()).unwrap();
        let cuts = c.cut_points();
        let root = c.log_s_n.sqrt();
        assert!((c.b_n * c.ell2 + c.a_n - root).abs() <= 1e-12 * root);
        assert!(cuts.y0 < cuts.y1 && cuts.y1 < 0.0 && 0.0 < cuts.y2 && cuts.y3 < cuts.y4);
        assert!(c.beta_n(cuts.y0).abs() <= 1e-10);
        assert!((c.beta_n(cuts.y2) - 1.0).abs() <= 1e-10);
        assert!((c.beta_n(cuts.y1) - p as f64 / n as f64).abs() <= 1e-12);
        assert!(c.x_threshold(cuts.y3).value.abs() <= 1e-10);
        assert!((c.x_threshold(cuts.y4).value - 1.0).abs() <= 1e-10);
        assert!(c.u_n(0, cuts.y1).abs() <= 1e-9);
        assert!((c.u_n(0, c.ell2) - root).abs() <= 1e-12 * root);
    }
}

#[test]
fn u_n_square_expansion() {
    let c = derive_constants(&EnsembleParams::new(100_000, 50_000).unwrap()).unwrap();
    let l = c.log_s_n;
    for k in 0..=40 {
        let x = -2.0 + 0.25 * k as f64;
        let u = c.u_n(0, x);
        let expansion = l - 2.0 * c.ell2 + 2.0 * x + (x - c.ell2).powi(2) / l;
        assert!((u * u - expansion).abs() <= 1e-10 * expansion.abs().max(1.0), "x = {x}");
    }
}

#[test]
fn x_threshold_dominates_on_ten_thousand_points() {
    let c = derive_constants(&EnsembleParams::new(5000, 2000).unwrap()).unwrap();
    let cuts = c.cut_points();
    let (lo, hi) = (cuts.y0 - 10.0, cuts.y2 + 10.0);
    for k in 0..10_000 {
        let x = lo + (hi - lo) * k as f64 / 9999.0;
        assert!(c.x_threshold(x).squared >= c.beta_n(x), "x = {x}");
    }
}

#[test]
fn out_of_band_ratio_is_flagged_not_rejected() {
    let p = EnsembleParams::new(1000, 20).unwrap();
    assert!(p.ratio_out_of_band());
    assert!(derive_constants(&p).is_ok());
    assert!(!EnsembleParams::new(1000, 500).unwrap().ratio_out_of_band());
    assert!(EnsembleParams::new(2, 1).is_err() || derive_constants(&EnsembleParams::new(2, 1).unwrap()).is_err());
}

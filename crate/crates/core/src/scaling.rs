//! Deterministic constants and changes of variable derived from `(n, p)`.
//!
//! With `s = np/(n−p)`, `a = √ln s − ln(√(2π) ln s)/√ln s` and
//! `b = (ln s)^{-1/2}`, the square-modulus threshold of the `W` rescaling is
//! `β(x) = (p/n)(1 + (a + b x)/√s)` and the modulus threshold of the `X`
//! rescaling is `A + B x = √(p/n)(1 + (a + b x)/(2√s))`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default regime band for `p/n`; outside it the ensemble is flagged, not rejected.
pub const DEFAULT_RATIO_BAND: (f64, f64) = (0.1, 0.9);

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Truncation `p` of an `n × n` Haar unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnsembleParams {
    n: u64,
    p: u64,
    out_of_band: bool,
}

impl EnsembleParams {
    pub fn new(n: u64, p: u64) -> Result<Self> {
        Self::with_band(n, p, DEFAULT_RATIO_BAND)
    }

    pub fn with_band(n: u64, p: u64, (h1, h2): (f64, f64)) -> Result<Self> {
        if p == 0 || p >= n {
            return Err(Error::InvalidParams(format!("need 1 <= p < n, got n = {n}, p = {p}")));
        }
        if !(0.0 < h1 && h1 < h2 && h2 < 1.0) {
            return Err(Error::InvalidParams(format!("need 0 < h1 < h2 < 1, got ({h1}, {h2})")));
        }
        let c = p as f64 / n as f64;
        Ok(Self {
            n,
            p,
            out_of_band: !(h1..=h2).contains(&c),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Second Beta parameter `m = n − p`.
    pub fn m(&self) -> u64 {
        self.n - self.p
    }

    pub fn ratio(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    /// True when `p/n` falls outside the regime band given at construction.
    pub fn ratio_out_of_band(&self) -> bool {
        self.out_of_band
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingConstants {
    pub n: u64,
    pub p: u64,
    pub s_n: f64,
    pub log_s_n: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub m_n: u64,
    /// ½ ln ln n
    pub ell1: f64,
    /// ln(√(2π) ln s_n)
    pub ell2: f64,
}

pub fn derive_constants(params: &EnsembleParams) -> Result<ScalingConstants> {
    let (n, p) = (params.n(), params.p());
    if n < 3 {
        return Err(Error::InvalidParams(format!(
            "need n >= 3 so that ln ln n > 0, got n = {n}"
        )));
    }
    let nf = n as f64;
    let pf = p as f64;
    let s_n = nf * pf / (nf - pf);
    let log_s_n = s_n.ln();
    let root = log_s_n.sqrt();
    let ell2 = (SQRT_2PI * log_s_n).ln();
    Ok(ScalingConstants {
        n,
        p,
        s_n,
        log_s_n,
        a_n: root - ell2 / root,
        b_n: 1.0 / root,
        m_n: n - p,
        ell1: 0.5 * nf.ln().ln(),
        ell2,
    })
}

/// Roots of the affine thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutPoints {
    /// β(y0) = 0
    pub y0: f64,
    /// a + b·y1 = 0, so β(y1) = p/n
    pub y1: f64,
    /// β(y2) = 1
    pub y2: f64,
    /// A + B·y3 = 0
    pub y3: f64,
    /// A + B·y4 = 1
    pub y4: f64,
}

/// Value of `A + B x` together with its square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XThreshold {
    pub value: f64,
    pub squared: f64,
}

impl ScalingConstants {
    pub fn sqrt_s_n(&self) -> f64 {
        self.s_n.sqrt()
    }

    fn ratio(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    /// `a_n + b_n x`
    pub fn centred(&self, x: f64) -> f64 {
        self.a_n + self.b_n * x
    }

    /// β_n(x) = (p/n)(1 + (a_n + b_n x)/√s_n).
    pub fn beta_n(&self, x: f64) -> f64 {
        self.ratio() * (1.0 + self.centred(x) / self.sqrt_s_n())
    }

    /// 1 − β_n(x) evaluated without forming β_n first.
    pub fn beta_n_complement(&self, x: f64) -> f64 {
        let nf = self.n as f64;
        (self.m_n as f64) / nf - self.ratio() * self.centred(x) / self.sqrt_s_n()
    }

    /// u_n(j, x) = j/√s_n + a_n + b_n x.
    pub fn u_n(&self, j: u64, x: f64) -> f64 {
        j as f64 / self.sqrt_s_n() + self.centred(x)
    }

    /// A_n + B_n x, the modulus threshold of the X rescaling.
    pub fn x_threshold(&self, x: f64) -> XThreshold {
        let value = self.ratio().sqrt() * (1.0 + self.centred(x) / (2.0 * self.sqrt_s_n()));
        XThreshold {
            value,
            squared: value * value,
        }
    }

    /// (A_n + B_n x)² − β_n(x) = (p/n)(a_n + b_n x)²/(4 s_n).
    pub fn x_threshold_excess(&self, x: f64) -> f64 {
        let c = self.centred(x);
        self.ratio() * c * c / (4.0 * self.s_n)
    }

    pub fn cut_points(&self) -> CutPoints {
        let rs = self.sqrt_s_n();
        let nf = self.n as f64;
        let pf = self.p as f64;
        let mf = self.m_n as f64;
        CutPoints {
            y0: -(rs + self.a_n) / self.b_n,
            y1: -self.log_s_n + self.ell2,
            y2: ((mf * nf / pf).sqrt() - self.a_n) / self.b_n,
            y3: (-2.0 * rs - self.a_n) / self.b_n,
            y4: (2.0 * rs * ((nf / pf).sqrt() - 1.0) - self.a_n) / self.b_n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c100() -> ScalingConstants {
        derive_constants(&EnsembleParams::new(100, 50).unwrap()).unwrap()
    }

    #[test]
    fn constants_for_n100_p50() {
        let c = c100();
        assert_eq!(c.s_n, 100.0);
        assert_eq!(c.m_n, 50);
        // direct 30-digit evaluation of the defining formula
        assert!((c.a_n - 1.006_097_953_334_703).abs() < 1e-12, "{}", c.a_n);
        assert!((c.b_n * c.ell2 + c.a_n - c.log_s_n.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cut_points_are_roots() {
        let c = c100();
        let y = c.cut_points();
        assert!(c.beta_n(y.y0).abs() < 1e-10);
        assert!((c.beta_n(y.y1) - 0.5).abs() < 1e-12);
        assert!((c.beta_n(y.y2) - 1.0).abs() < 1e-10);
        assert!(c.x_threshold(y.y3).value.abs() < 1e-10);
        assert!((c.x_threshold(y.y4).value - 1.0).abs() < 1e-10);
        assert!((y.y1 - (-2.159_052_026_975_518)).abs() < 1e-12, "{}", y.y1);
        assert!(y.y0 < y.y1 && y.y1 < 0.0 && 0.0 < y.y2 && y.y3 < y.y4);
        assert!(c.u_n(0, y.y1).abs() < 1e-12);
    }

    #[test]
    fn u_n_identities() {
        let c = c100();
        assert!((c.u_n(0, c.ell2) - c.log_s_n.sqrt()).abs() < 1e-12);
        for &x in &[-3.0, -0.5, 0.0, 1.7, 9.0] {
            let u = c.u_n(0, x);
            let d = x - c.ell2;
            let expanded = c.log_s_n - 2.0 * c.ell2 + 2.0 * x + d * d / c.log_s_n;
            assert!((u * u - expanded).abs() < 1e-12);
            assert!(c.u_n(1, x) > u && c.u_n(0, x + 0.1) > u);
        }
    }

    #[test]
    fn complement_matches_difference() {
        let c = c100();
        for &x in &[-20.0, 0.0, 3.0, 40.0] {
            assert!((c.beta_n_complement(x) - (1.0 - c.beta_n(x))).abs() < 1e-14);
        }
    }

    #[test]
    fn x_threshold_dominates_beta_on_grid() {
        let c = derive_constants(&EnsembleParams::new(1000, 300).unwrap()).unwrap();
        let y = c.cut_points();
        let (lo, hi) = (y.y0 - 10.0, y.y2 + 10.0);
        for k in 0..10_000 {
            let x = lo + (hi - lo) * k as f64 / 9_999.0;
            let t = c.x_threshold(x);
            let beta = c.beta_n(x);
            assert!(t.squared >= beta);
            let gap = t.squared - beta - c.x_threshold_excess(x);
            assert!(gap.abs() <= 1e-12 * (1.0 + t.squared));
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(EnsembleParams::new(10, 0).is_err());
        assert!(EnsembleParams::new(10, 10).is_err());
        assert!(EnsembleParams::new(10, 11).is_err());
        assert!(derive_constants(&EnsembleParams::new(2, 1).unwrap()).is_err());
        assert!(EnsembleParams::with_band(10, 5, (0.6, 0.4)).is_err());
    }

    #[test]
    fn ratio_band_flag() {
        assert!(!EnsembleParams::new(100, 50).unwrap().ratio_out_of_band());
        assert!(EnsembleParams::new(100, 5).unwrap().ratio_out_of_band());
        assert!(EnsembleParams::new(100, 95).unwrap().ratio_out_of_band());
        assert!(!EnsembleParams::with_band(100, 5, (0.01, 0.99))
            .unwrap()
            .ratio_out_of_band());
    }

    #[test]
    fn bit_identical_recomputation() {
        let a = derive_constants(&EnsembleParams::new(123_457, 61_000).unwrap()).unwrap();
        let b = derive_constants(&EnsembleParams::new(123_457, 61_000).unwrap()).unwrap();
        assert_eq!(a.a_n.to_bits(), b.a_n.to_bits());
        assert_eq!(a.cut_points(), b.cut_points());
    }
}

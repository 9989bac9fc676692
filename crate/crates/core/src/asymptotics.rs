//! Leading-order asymptotic evaluators and their checks against the exact law.
//!
//! Every evaluator drops its unquantified remainder. The remainders come back
//! only as tolerance bands in [`LemmaCheckReport`], with explicit constants.

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::exact_law::{Alpha, ExactLaw, Law};
use crate::scaling::{EnsembleParams, ScalingConstants};
use crate::special::{gaussian_tail, tail_expansion_constant, TailMethod};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Band constant for the survival asymptotics.
pub const SURVIVAL_BAND_CONSTANT: f64 = 5.0;
/// Constant hidden in the survival bound, e¹⁰.
pub const BOUND_CONSTANT: f64 = 22_026.465_794_806_718;
/// Band constant for the tail-sum collapse.
pub const TAIL_SUM_BAND_CONSTANT: f64 = 3.0;
/// Band for α is this over ln n.
pub const ALPHA_BAND_NUMERATOR: f64 = 10.0;
/// Multiplicative band for κ.
pub const KAPPA_BAND: f64 = 0.5;
/// Half-width of the window excluded around each root of κ.
pub const KAPPA_ROOT_EXCLUSION: f64 = 0.2;

// Relative size of the dropped tail in `direct_tail_sum`.
const TAIL_SUM_CUTOFF: f64 = 1e-16;

/// A leading-term value together with whether its arguments lie in the
/// regime where the expansion is claimed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeValue {
    pub value: f64,
    pub in_regime: bool,
}

/// Leading term of the survival a_n(j, x): e^{−u²/2} / (√(2π) u), `u = u_n(j, x)`.
///
/// The expansion is claimed for `1 ≪ u ≪ n^{1/6}` and `j ≤ n^{3/5}`; outside
/// that range the value is still returned with `in_regime = false`.
pub fn a_n_asym(c: &ScalingConstants, j: u64, x: f64) -> Result<RegimeValue> {
    let u = c.u_n(j, x);
    if !(u > 0.0) {
        return Err(domain("a_n_asym", format!("u_n(j, x) = {u} must be positive")));
    }
    let nf = c.n as f64;
    // relative slack so that j = n^{3/5} exactly is not lost to rounding in powf
    let in_regime = u >= 1.0 && u <= nf.powf(1.0 / 6.0) && (j as f64) <= nf.powf(0.6) * (1.0 + 1e-12);
    Ok(RegimeValue {
        value: (-0.5 * u * u).exp() / (SQRT_2PI * u),
        in_regime,
    })
}

/// √n · exp(−(j/√s_n)(a_n + b_n x)), the survival bound without its constant.
pub fn a_n_bound(c: &ScalingConstants, j: u64, x: f64) -> f64 {
    let nf = c.n as f64;
    nf.sqrt() * (-(j as f64) / c.sqrt_s_n() * c.centred(x)).exp()
}

/// √s_n e^{−u²/2} / u² with `u = u_n(L, x)`, the collapse of
/// Σ_{j≥L} u_n(j, x)^{−1} e^{−u_n(j, x)²/2}.
pub fn tail_sum_asym(c: &ScalingConstants, l: u64, x: f64) -> Result<f64> {
    let u = c.u_n(l, x);
    if !(u > 1.0) {
        return Err(domain("tail_sum_asym", format!("u_n(L, x) = {u} must exceed 1")));
    }
    Ok(c.sqrt_s_n() * (-0.5 * u * u).exp() / (u * u))
}

/// Σ_{j=L}^{J} u_n(j, x)^{−1} e^{−u_n(j, x)²/2} summed directly.
///
/// Consecutive terms shrink by at least `q_j = e^{−u_j δ}`, `δ = 1/√s_n`, so
/// the tail after `J` is at most `term_J · q_J / (1 − q_J)`; the sum stops
/// once that is below 10⁻¹⁶ of the running total.
pub fn direct_tail_sum(c: &ScalingConstants, l: u64, x: f64) -> Result<f64> {
    let u0 = c.u_n(l, x);
    if !(u0 > 0.0) {
        return Err(domain("direct_tail_sum", format!("u_n(L, x) = {u0} must be positive")));
    }
    let delta = 1.0 / c.sqrt_s_n();
    // terms scaled by e^{u0²/2}
    let mut sum = 0.0;
    let mut j = l;
    loop {
        let u = c.u_n(j, x);
        let term = (-0.5 * (u - u0) * (u + u0)).exp() / u;
        sum += term;
        let q = (-u * delta).exp();
        if term * q / (1.0 - q) <= TAIL_SUM_CUTOFF * sum {
            break;
        }
        j += 1;
    }
    Ok(sum * (-0.5 * u0 * u0).exp())
}

/// (1 + (x−ℓ₂)/ln s_n)^{−2} exp(−x − (x−ℓ₂)²/(2 ln s_n)).
pub fn alpha_asym(c: &ScalingConstants, x: f64) -> Result<f64> {
    let d = x - c.ell2;
    let factor = 1.0 + d / c.log_s_n;
    if !(factor > 0.0) {
        return Err(domain(
            "alpha_asym",
            format!("x = {x} is at or beyond the pole 1 + (x − ℓ₂)/ln s_n = 0"),
        ));
    }
    Ok((-x - d * d / (2.0 * c.log_s_n)).exp() / (factor * factor))
}

/// κ_n(x) = e^{−x}(4(x−ℓ₂) + (x−ℓ₂)²)/(2 ln s_n), the leading part of e^{−x} − α_n(x).
pub fn kappa_n(c: &ScalingConstants, x: f64) -> f64 {
    let d = x - c.ell2;
    (-x).exp() * (4.0 * d + d * d) / (2.0 * c.log_s_n)
}

/// Roots of κ_n: ℓ₂ − 4 and ℓ₂.
pub fn kappa_roots(c: &ScalingConstants) -> [f64; 2] {
    [c.ell2 - 4.0, c.ell2]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingRates {
    /// ℓ₂² / (2e ln s_n)
    pub ks_refined: f64,
    /// (ln ln n)² / (2e ln n)
    pub ks_headline: f64,
    /// ℓ₂² / (2 ln s_n)
    pub w1_refined: f64,
    /// (ln ln n)² / (2 ln n)
    pub w1_headline: f64,
}

pub fn leading_rates(c: &ScalingConstants) -> LeadingRates {
    let ln_n = (c.n as f64).ln();
    let ll = ln_n.ln();
    let w1_refined = c.ell2 * c.ell2 / (2.0 * c.log_s_n);
    let w1_headline = ll * ll / (2.0 * ln_n);
    LeadingRates {
        ks_refined: w1_refined / E,
        ks_headline: w1_headline / E,
        w1_refined,
        w1_headline,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[allow(non_camel_case_types)]
pub enum LemmaId {
    /// Gaussian tail integral expansion.
    L2_2,
    /// Survival asymptotics.
    L2_3,
    /// Exponential survival bound.
    L2_4,
    /// Tail-sum collapse.
    L2_5,
    KAPPA,
    ALPHA,
    /// Haar truncation against the Beta-max law.
    CRU,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckPoint {
    pub coords: BTreeMap<String, f64>,
    pub exact: f64,
    pub approx: f64,
    pub relative_error: f64,
    pub tolerance_band: f64,
    pub in_regime: bool,
}

impl CheckPoint {
    pub fn passes(&self) -> bool {
        self.relative_error.abs() <= self.tolerance_band
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheckReport {
    pub lemma_id: LemmaId,
    pub params: Option<EnsembleParams>,
    pub points: Vec<CheckPoint>,
    /// True iff every point satisfies |relative_error| ≤ tolerance_band.
    pub pass: bool,
}

impl LemmaCheckReport {
    pub fn new(lemma_id: LemmaId, params: Option<EnsembleParams>, points: Vec<CheckPoint>) -> Self {
        let pass = !points.is_empty() && points.iter().all(CheckPoint::passes);
        Self {
            lemma_id,
            params,
            points,
            pass,
        }
    }
}

fn coords(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

/// Asymptotic against quadrature for ∫_z^∞ t^r e^{−t²/2} dt, band 3(|(r−1)(r−3)|+1) z⁻⁴.
pub fn check_tail_integral(zs: &[f64], rs: &[f64]) -> Result<LemmaCheckReport> {
    let mut points = Vec::new();
    for &z in zs {
        for &r in rs {
            let exact = gaussian_tail(z, r, TailMethod::Quadrature)?;
            let approx = gaussian_tail(z, r, TailMethod::Asymptotic)?;
            points.push(CheckPoint {
                coords: coords(&[("z", z), ("r", r)]),
                exact: exact.value,
                approx: approx.value,
                relative_error: (approx.log_value - exact.log_value).exp_m1(),
                tolerance_band: tail_expansion_constant(r) / z.powi(4),
                in_regime: z >= 3.0,
            });
        }
    }
    Ok(LemmaCheckReport::new(LemmaId::L2_2, None, points))
}

/// Leading survival term against the exact survival at points where
/// `u_n(j, x)` takes the values in `us`; band 5(u³n^{−1/2} + u²j/n + u⁻²).
pub fn check_survival_asymptotics(params: EnsembleParams, js: &[u64], us: &[f64]) -> Result<LemmaCheckReport> {
    let law = ExactLaw::new(params, Law::W)?;
    let c = &law.constants;
    let nf = c.n as f64;
    let mut points = Vec::new();
    for &j in js {
        for &u in us {
            let x = (u - j as f64 / c.sqrt_s_n() - c.a_n) / c.b_n;
            let exact = law.log_survival_a(j, x)?;
            let approx = a_n_asym(c, j, x)?;
            let band = SURVIVAL_BAND_CONSTANT * (u.powi(3) / nf.sqrt() + u * u * j as f64 / nf + 1.0 / (u * u));
            points.push(CheckPoint {
                coords: coords(&[("j", j as f64), ("x", x), ("u", u)]),
                exact: exact.exp(),
                approx: approx.value,
                relative_error: (approx.value.ln() - exact).exp_m1(),
                tolerance_band: band,
                in_regime: approx.in_regime,
            });
        }
    }
    Ok(LemmaCheckReport::new(LemmaId::L2_3, Some(params), points))
}

/// Exact survival against the bound; `relative_error` holds the ratio
/// survival / bound and the band is the constant e¹⁰.
pub fn check_survival_bound(params: EnsembleParams, js: &[u64], xs: &[f64]) -> Result<LemmaCheckReport> {
    let law = ExactLaw::new(params, Law::W)?;
    let c = &law.constants;
    let root_n = (c.n as f64).sqrt();
    let mut points = Vec::new();
    for &j in js {
        for &x in xs {
            let exact = law.log_survival_a(j, x)?;
            let bound = a_n_bound(c, j, x);
            points.push(CheckPoint {
                coords: coords(&[("j", j as f64), ("x", x)]),
                exact: exact.exp(),
                approx: bound,
                relative_error: (exact - bound.ln()).exp(),
                tolerance_band: BOUND_CONSTANT,
                in_regime: x > 0.0 && j >= 1 && (j as f64) < root_n,
            });
        }
    }
    Ok(LemmaCheckReport::new(LemmaId::L2_4, Some(params), points))
}

/// Collapsed tail sum against direct summation; band 3(u⁻² + u/√n).
pub fn check_tail_sum(params: EnsembleParams, ls: &[u64], xs: &[f64]) -> Result<LemmaCheckReport> {
    let c = crate::scaling::derive_constants(&params)?;
    let nf = c.n as f64;
    let mut points = Vec::new();
    for &l in ls {
        for &x in xs {
            let u = c.u_n(l, x);
            let exact = direct_tail_sum(&c, l, x)?;
            let approx = tail_sum_asym(&c, l, x)?;
            points.push(CheckPoint {
                coords: coords(&[("L", l as f64), ("x", x), ("u", u)]),
                exact,
                approx,
                relative_error: approx / exact - 1.0,
                tolerance_band: TAIL_SUM_BAND_CONSTANT * (1.0 / (u * u) + u / nf.sqrt()),
                in_regime: u > 1.0,
            });
        }
    }
    Ok(LemmaCheckReport::new(LemmaId::L2_5, Some(params), points))
}

/// `count` equally spaced points on [−ℓ₁, ℓ₂].
pub fn default_window(c: &ScalingConstants, count: usize) -> Vec<f64> {
    let (lo, hi) = (-c.ell1, c.ell2);
    if count < 2 {
        return vec![lo];
    }
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

fn finite_alpha(law: &ExactLaw, x: f64) -> Result<f64> {
    match law.alpha_n(x)? {
        Alpha::Finite(v) => Ok(v),
        Alpha::Infinite => Err(domain("alpha_n", format!("x = {x} is at or below the lower cut"))),
    }
}

/// alpha_asym against the exact α_n; band 10/ln n.
pub fn check_alpha(params: EnsembleParams, xs: &[f64]) -> Result<LemmaCheckReport> {
    let law = ExactLaw::new(params, Law::W)?;
    let c = &law.constants;
    let band = ALPHA_BAND_NUMERATOR / (c.n as f64).ln();
    let mut points = Vec::new();
    for &x in xs {
        let exact = finite_alpha(&law, x)?;
        let approx = alpha_asym(c, x)?;
        points.push(CheckPoint {
            coords: coords(&[("x", x)]),
            exact,
            approx,
            relative_error: approx / exact - 1.0,
            tolerance_band: band,
            in_regime: x >= -c.ell1 && x <= c.ell2,
        });
    }
    Ok(LemmaCheckReport::new(LemmaId::ALPHA, Some(params), points))
}

/// κ_n against e^{−x} − α_n(x); `relative_error` is the difference of the
/// two over |κ_n(x)| and the band is 0.5. Points within `root_exclusion` of
/// a root of κ_n are skipped.
pub fn check_kappa(params: EnsembleParams, xs: &[f64], root_exclusion: f64) -> Result<LemmaCheckReport> {
    let law = ExactLaw::new(params, Law::W)?;
    let c = &law.constants;
    let roots = kappa_roots(c);
    let mut points = Vec::new();
    for &x in xs {
        if roots.iter().any(|r| (x - r).abs() < root_exclusion) {
            continue;
        }
        let exact = (-x).exp() - finite_alpha(&law, x)?;
        let approx = kappa_n(c, x);
        points.push(CheckPoint {
            coords: coords(&[("x", x)]),
            exact,
            approx,
            relative_error: (exact - approx) / approx.abs(),
            tolerance_band: KAPPA_BAND,
            in_regime: x >= -c.ell1 && x <= c.ell2,
        });
    }
    Ok(LemmaCheckReport::new(LemmaId::KAPPA, Some(params), points))
}

//! Kolmogorov and W₁ distances between exact laws and the standard Gumbel.
//!
//! The exact supports run to |x| of several thousand at n = 10⁶ while the
//! interesting structure sits within a few units of the origin, so grids and
//! quadrature breakpoints are placed uniformly in `u` with `x = sinh(u)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{leading_rates, LeadingRates};
use crate::error::{Error, Result};
use crate::exact_law::{ExactLaw, Law};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::{exp_integral_e1, exp_integral_ein};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Standard Gumbel law Λ(x) = exp(−e^{−x}).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GumbelReference;

impl GumbelReference {
    pub fn cdf(&self, x: f64) -> f64 {
        (-(-x).exp()).exp()
    }

    /// 1 − Λ(x) without cancellation.
    pub fn survival(&self, x: f64) -> f64 {
        -(-(-x).exp()).exp_m1()
    }

    pub fn density(&self, x: f64) -> f64 {
        let e = (-x).exp();
        if e.is_infinite() {
            return 0.0;
        }
        e * (-e).exp()
    }

    /// ∫_{−∞}^{y} Λ(x) dx = E₁(e^{−y}).
    pub fn lower_tail_integral(&self, y: f64) -> Result<f64> {
        let v = (-y).exp();
        if v > 700.0 {
            return Ok(0.0);
        }
        exp_integral_e1(v)
    }

    /// ∫_y^∞ (1 − Λ(x)) dx = Ein(e^{−y}).
    pub fn upper_tail_integral(&self, y: f64) -> Result<f64> {
        exp_integral_ein((-y).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[allow(non_camel_case_types)]
pub enum Metric {
    KS,
    W1,
    /// W₁ between the X and W laws of the same ensemble.
    W1_XW,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceReport {
    pub metric: Metric,
    pub law: Law,
    pub n: u64,
    pub p: u64,
    pub value: f64,
    /// Maximiser of |F − Λ| (KS only).
    pub argmax_x: Option<f64>,
    /// Whether the maximiser lies in (−ℓ₁(n), ℓ₂(n)) (KS only).
    pub argmax_in_window: Option<bool>,
    /// Summed quadrature error plus tail remainders (W₁ metrics only).
    pub quadrature_error_estimate: f64,
    pub leading_refined: f64,
    pub leading_headline: f64,
    pub ratio_refined: f64,
    pub ratio_headline: f64,
    /// Number of CDF evaluations spent.
    pub evaluations: usize,
}

impl DistanceReport {
    fn new(metric: Metric, law: &ExactLaw, value: f64, rates: LeadingRates) -> Self {
        let (leading_refined, leading_headline) = match metric {
            Metric::KS => (rates.ks_refined, rates.ks_headline),
            Metric::W1 | Metric::W1_XW => (rates.w1_refined, rates.w1_headline),
        };
        Self {
            metric,
            law: law.law,
            n: law.params.n(),
            p: law.params.p(),
            value,
            argmax_x: None,
            argmax_in_window: None,
            quadrature_error_estimate: 0.0,
            leading_refined,
            leading_headline,
            ratio_refined: value / leading_refined,
            ratio_headline: value / leading_headline,
            evaluations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KsOptions {
    pub grid_points: usize,
    /// Widening of the exact support on each side.
    pub margin: f64,
    pub x_tol: f64,
}

impl Default for KsOptions {
    fn default() -> Self {
        Self {
            grid_points: 2048,
            margin: 6.0,
            x_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct W1Options {
    pub abs_tol: f64,
    /// Number of sinh-spaced panels the support is cut into before adapting.
    pub panels: usize,
}

impl Default for W1Options {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            panels: 64,
        }
    }
}

/// `count` points on `[lo, hi]` uniform in asinh(x), endpoints included.
pub fn sinh_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo < hi);
    let (u0, u1) = (lo.asinh(), hi.asinh());
    let mut grid: Vec<f64> = (0..count)
        .map(|k| (u0 + (u1 - u0) * k as f64 / (count - 1) as f64).sinh())
        .collect();
    grid[0] = lo;
    grid[count - 1] = hi;
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupResult {
    pub value: f64,
    pub argmax: f64,
    pub evaluations: usize,
}

/// sup_{x ∈ [lo, hi]} |f(x) − g(x)| by a sinh-spaced grid followed by
/// golden-section refinement of every grid-local maximum.
pub fn sup_distance<F, G>(f: &F, g: &G, lo: f64, hi: f64, opts: KsOptions) -> Result<SupResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
    G: Fn(f64) -> Result<f64> + Sync,
{
    let diff = |x: f64| -> Result<f64> { Ok((f(x)? - g(x)?).abs()) };
    let grid = sinh_grid(lo, hi, opts.grid_points);
    let values: Vec<f64> = grid.par_iter().map(|&x| diff(x)).collect::<Result<_>>()?;
    let mut evaluations = grid.len();

    let grid_max = values.iter().cloned().fold(0.0, f64::max);
    let mut best = SupResult {
        value: values[0],
        argmax: grid[0],
        evaluations: 0,
    };
    for (i, &v) in values.iter().enumerate() {
        if v > best.value {
            best.value = v;
            best.argmax = grid[i];
        }
    }
    if grid_max == 0.0 {
        best.evaluations = evaluations;
        return Ok(best);
    }

    let last = values.len() - 1;
    let peaks: Vec<usize> = (0..=last)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { values[i - 1] };
            let right = if i == last { f64::NEG_INFINITY } else { values[i + 1] };
            values[i] >= 0.5 * grid_max && values[i] >= left && values[i] >= right
        })
        .collect();
    let refined: Vec<(f64, f64, usize)> = peaks
        .par_iter()
        .map(|&i| golden_max(&diff, grid[i.saturating_sub(1)], grid[(i + 1).min(last)], opts.x_tol))
        .collect::<Result<_>>()?;
    for (x, v, evals) in refined {
        evaluations += evals;
        if v > best.value {
            best.value = v;
            best.argmax = x;
        }
    }
    best.evaluations = evaluations;
    Ok(best)
}

/// Golden-section search for the maximum of `h` on `[a, b]`.
fn golden_max<H: Fn(f64) -> Result<f64>>(h: &H, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64, usize)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut hc = h(c)?;
    let mut hd = h(d)?;
    let mut evals = 2;
    while (b - a).abs() > tol {
        if hc >= hd {
            b = d;
            d = c;
            hd = hc;
            c = b - INV_PHI * (b - a);
            hc = h(c)?;
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + INV_PHI * (b - a);
            hd = h(d)?;
        }
        evals += 1;
        // stop once the bracket is below floating-point resolution
        if !(c > a && d < b) {
            break;
        }
    }
    let (x, v) = if hc >= hd { (c, hc) } else { (d, hd) };
    let (ha, hb) = (h(a)?, h(b)?);
    evals += 2;
    let best = [(x, v), (a, ha), (b, hb)]
        .into_iter()
        .fold((x, v), |acc, cand| if cand.1 > acc.1 { cand } else { acc });
    Ok((best.0, best.1, evals))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L1Result {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// ∫_lo^hi h(x) dx with sinh-spaced panels integrated in parallel.
pub fn integrate_panels<H>(h: &H, lo: f64, hi: f64, opts: W1Options) -> Result<L1Result>
where
    H: Fn(f64) -> Result<f64> + Sync,
{
    let edges = sinh_grid(lo, hi, opts.panels.max(1) + 1);
    let per_panel = QuadOptions {
        abs_tol: opts.abs_tol / opts.panels.max(1) as f64,
        rel_tol: 0.0,
        max_panels: 2000,
    };
    let parts: Vec<(f64, f64, usize, bool)> = edges
        .par_windows(2)
        .map(|w| {
            let failure = std::sync::Mutex::new(None);
            let r = integrate(
                |x| match h(x) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        f64::NAN
                    }
                },
                w[0],
                w[1],
                &[],
                per_panel,
            );
            match failure.into_inner().unwrap() {
                Some(e) => Err(e),
                None => Ok((r.value, r.error, r.evaluations, r.converged)),
            }
        })
        .collect::<Result<_>>()?;
    let mut out = L1Result {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
        converged: true,
    };
    for (v, e, n, c) in parts {
        out.value += v;
        out.error += e;
        out.evaluations += n;
        out.converged &= c;
    }
    Ok(out)
}

/// sup_x |F(x) − Λ(x)| over the exact support widened by `opts.margin`.
pub fn ks_distance_with(law: &ExactLaw, opts: KsOptions) -> Result<DistanceReport> {
    let gumbel = GumbelReference;
    let lo = law.lower_cut() - opts.margin;
    let hi = law.upper_cut() + opts.margin;
    let sup = sup_distance(&|x| law.cdf(x), &|x| Ok(gumbel.cdf(x)), lo, hi, opts)?;
    let c = &law.constants;
    let mut report = DistanceReport::new(Metric::KS, law, sup.value, leading_rates(c));
    report.argmax_x = Some(sup.argmax);
    report.argmax_in_window = Some(sup.argmax > -c.ell1 && sup.argmax < c.ell2);
    report.evaluations = sup.evaluations;
    Ok(report)
}

pub fn ks_distance(law: &ExactLaw) -> Result<DistanceReport> {
    ks_distance_with(law, KsOptions::default())
}

/// ∫|F − Λ|: analytic Gumbel tails outside the exact support, adaptive
/// quadrature inside it.
pub fn w1_distance_with(law: &ExactLaw, opts: W1Options) -> Result<DistanceReport> {
    let gumbel = GumbelReference;
    let lo = law.lower_cut();
    let hi = law.upper_cut();
    let lower = gumbel.lower_tail_integral(lo)?;
    let upper = gumbel.upper_tail_integral(hi)?;
    let middle = integrate_panels(&|x| Ok((law.cdf(x)? - gumbel.cdf(x)).abs()), lo, hi, opts)?;
    if !middle.converged {
        return Err(Error::NonConvergence {
            func: "w1_distance",
            iterations: middle.evaluations,
        });
    }
    let value = lower + middle.value + upper;
    let mut report = DistanceReport::new(Metric::W1, law, value, leading_rates(&law.constants));
    // tail integrals are evaluated to working precision
    report.quadrature_error_estimate = middle.error + 1e-15 * (lower + upper);
    report.evaluations = middle.evaluations;
    Ok(report)
}

pub fn w1_distance(law: &ExactLaw) -> Result<DistanceReport> {
    w1_distance_with(law, W1Options::default())
}

/// ∫(F_X − F_W) over [y3, y2]; the integrand is nonnegative because the X
/// threshold dominates β_n.
pub fn w1_between_laws_with(law_x: &ExactLaw, law_w: &ExactLaw, opts: W1Options) -> Result<DistanceReport> {
    if law_x.params.n() != law_w.params.n() || law_x.params.p() != law_w.params.p() {
        return Err(Error::InvalidParams(format!(
            "laws differ: (n, p) = ({}, {}) vs ({}, {})",
            law_x.params.n(),
            law_x.params.p(),
            law_w.params.n(),
            law_w.params.p()
        )));
    }
    if law_x.law != Law::X || law_w.law != Law::W {
        return Err(Error::InvalidParams("expected an X law and a W law".into()));
    }
    let cuts = &law_x.cuts;
    let lo = cuts.y0.min(cuts.y3);
    let hi = cuts.y2.max(cuts.y4);
    let middle = integrate_panels(&|x| Ok(law_x.cdf(x)? - law_w.cdf(x)?), lo, hi, opts)?;
    if !middle.converged {
        return Err(Error::NonConvergence {
            func: "w1_between_laws",
            iterations: middle.evaluations,
        });
    }
    let mut report = DistanceReport::new(Metric::W1_XW, law_x, middle.value, leading_rates(&law_x.constants));
    report.quadrature_error_estimate = middle.error;
    report.evaluations = middle.evaluations;
    Ok(report)
}

pub fn w1_between_laws(law_x: &ExactLaw, law_w: &ExactLaw) -> Result<DistanceReport> {
    w1_between_laws_with(law_x, law_w, W1Options::default())
}

//! Monte Carlo draws of the squared spectral radius of truncated Haar
//! unitaries, by the Beta-max representation or by direct simulation, and
//! the Kolmogorov–Smirnov statistics that tie them to the exact law.
//!
//! Draw `i` of a batch owns the ChaCha8 stream `i` under the batch seed, so
//! a batch is a pure function of `(mode, params, seed, count)` whatever the
//! number of worker threads.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{CheckPoint, LemmaCheckReport, LemmaId};
use crate::eigen::{complex_eigenvalues, fix_phases, householder_qr, CMatrix};
use crate::error::{Error, Result};
use crate::exact_law::{ExactLaw, Law};
use crate::scaling::EnsembleParams;
use crate::special::{log_beta_survival, log_reg_inc_beta};

/// Largest `n` accepted by the dense Haar simulation.
pub const MAX_HAAR_DIM: u64 = 512;
/// Per-draw bound on the probability that truncation changes the maximum.
pub const TRUNCATION_TARGET: f64 = 1e-6;
/// Fraction of rejected Haar draws above which a batch fails.
pub const MAX_REJECTION_RATE: f64 = 1e-3;
/// One-sample KS critical value at the 1% level, times √N.
pub const KS_CRITICAL_1PCT: f64 = 1.63;

const UNITARITY_TOL: f64 = 1e-10;
const MODULUS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    BetaMax,
    HaarTruncation,
}

/// Which Beta variables a Beta-max draw includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaMaxMode {
    /// All `Y_a`, a = 1..p.
    Exact,
    /// Only the top `K` shapes `a = p−K+1..p`; `None` picks the smallest `K`
    /// whose truncation bound is below [`TRUNCATION_TARGET`].
    Truncated(Option<u64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BatchMetadata {
    pub truncation_k: Option<u64>,
    /// Upper bound on P(truncated draw ≠ full draw).
    pub truncation_bound: Option<f64>,
    pub requested: u64,
    pub rejected: u64,
    /// Largest ‖U*U − I‖_max over accepted Haar draws.
    pub max_unitarity_defect: Option<f64>,
    /// Largest eigenvalue modulus over accepted Haar draws.
    pub max_eigen_modulus: Option<f64>,
    /// Rejection reasons with their counts.
    pub rejection_reasons: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBatch {
    pub mode: SampleMode,
    pub params: EnsembleParams,
    pub seed: u64,
    pub count: u64,
    /// Realisations of max_j |z_j|² (or max_a Y_a), in draw order.
    pub draws: Vec<f64>,
    pub metadata: BatchMetadata,
}

/// Everything in a batch except the draws, for the JSON header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchHeader<'a> {
    pub mode: SampleMode,
    pub n: u64,
    pub p: u64,
    pub seed: u64,
    pub count: u64,
    pub metadata: &'a BatchMetadata,
}

impl SampleBatch {
    pub fn header(&self) -> BatchHeader<'_> {
        BatchHeader {
            mode: self.mode,
            n: self.params.n(),
            p: self.params.p(),
            seed: self.seed,
            count: self.count,
            metadata: &self.metadata,
        }
    }

    /// One draw per line under a `max_sq_modulus` header, shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "max_sq_modulus")?;
        for d in &self.draws {
            writeln!(out, "{d}")?;
        }
        Ok(())
    }
}

fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct BetaSampler {
    shapes: Vec<Gamma<f64>>,
    second: Gamma<f64>,
}

impl BetaSampler {
    fn new(first_shape: u64, last_shape: u64, m: u64) -> Result<Self> {
        let gamma = |k: f64| Gamma::new(k, 1.0).map_err(|e| Error::Sampling(format!("gamma({k}): {e}")));
        Ok(Self {
            shapes: (first_shape..=last_shape)
                .map(|a| gamma(a as f64))
                .collect::<Result<_>>()?,
            second: gamma(m as f64)?,
        })
    }

    /// max over the configured shapes of G_a / (G_a + G'), G_a ~ Γ(a), G' ~ Γ(m).
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut best: f64 = 0.0;
        for g in &self.shapes {
            let x = g.sample(rng);
            let y = self.second.sample(rng);
            best = best.max(x / (x + y));
        }
        best
    }
}

/// Bound on P(the top-K truncation changes the maximum), minimised over a
/// threshold τ: Σ_{a ≤ p−K} P(Y_a > τ) + Π_{a > p−K} P(Y_a ≤ τ).
pub fn truncation_bound(params: EnsembleParams, k: u64) -> Result<f64> {
    let (p, m) = (params.p(), params.m() as f64);
    if k == 0 || k >= p {
        return Err(Error::InvalidParams(format!("need 1 <= K < p = {p}, got K = {k}")));
    }
    let law = ExactLaw::new(params, Law::W)?;
    let c = &law.constants;
    let cut = p - k;
    let mut best = f64::INFINITY;
    for step in 0..=400 {
        let x = -10.0 + 0.125 * step as f64;
        let tau = c.beta_n(x);
        if !(tau > 0.0 && tau < 1.0) {
            continue;
        }
        // survivals shrink fast as a decreases; stop once negligible
        let mut neglected = 0.0;
        for a in (1..=cut).rev() {
            let s = log_beta_survival(tau, a as f64, m)?.exp();
            neglected += s;
            if s <= 1e-18 * neglected || neglected >= best {
                break;
            }
        }
        let mut log_kept = 0.0;
        for a in cut + 1..=p {
            log_kept += log_reg_inc_beta(tau, a as f64, m)?;
            if log_kept < -60.0 {
                break;
            }
        }
        best = best.min(neglected + log_kept.exp());
    }
    Ok(best.min(1.0))
}

fn choose_truncation(params: EnsembleParams) -> Result<(u64, f64)> {
    let p = params.p();
    if p < 2 {
        return Err(Error::InvalidParams("truncation needs p >= 2".into()));
    }
    // smallest K in [1, p−1] meeting the target; bound is nonincreasing in K
    let (mut lo, mut hi) = (1u64, p - 1);
    let top = truncation_bound(params, hi)?;
    if top > TRUNCATION_TARGET {
        return Err(Error::Sampling(format!(
            "no K < p = {p} meets the truncation target {TRUNCATION_TARGET} (best bound {top:e})"
        )));
    }
    let mut best = (hi, top);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let b = truncation_bound(params, mid)?;
        if b <= TRUNCATION_TARGET {
            best = (mid, b);
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(best)
}

/// Draws of max_a Y_a with independent Y_a ~ Beta(a, n−p).
pub fn sample_beta_max(params: EnsembleParams, count: u64, seed: u64, mode: BetaMaxMode) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidParams("count must be at least 1".into()));
    }
    let p = params.p();
    let mut metadata = BatchMetadata {
        requested: count,
        ..Default::default()
    };
    let first_shape = match mode {
        BetaMaxMode::Exact => 1,
        BetaMaxMode::Truncated(choice) => {
            let (k, bound) = match choice {
                Some(k) => {
                    if k >= p {
                        return Err(Error::InvalidParams(format!(
                            "truncation K = {k} must be below p = {p}"
                        )));
                    }
                    (k, truncation_bound(params, k)?)
                }
                None => choose_truncation(params)?,
            };
            metadata.truncation_k = Some(k);
            metadata.truncation_bound = Some(bound);
            p - k + 1
        }
    };
    let sampler = BetaSampler::new(first_shape, p, params.m())?;
    let draws: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| sampler.draw(&mut draw_rng(seed, i)))
        .collect();
    Ok(SampleBatch {
        mode: SampleMode::BetaMax,
        params,
        seed,
        count,
        draws,
        metadata,
    })
}

/// A Haar-distributed n × n unitary: phase-corrected QR of a complex Ginibre matrix.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    });
    let (mut q, diag) = householder_qr(&g);
    fix_phases(&mut q, &diag);
    q
}

enum HaarDraw {
    Accepted { value: f64, defect: f64, modulus: f64 },
    Rejected(&'static str),
}

fn haar_draw(n: usize, p: usize, rng: &mut ChaCha8Rng) -> HaarDraw {
    let u = haar_unitary(n, rng);
    let defect = u.unitarity_defect();
    if !(defect <= UNITARITY_TOL) {
        return HaarDraw::Rejected("unitarity");
    }
    let eig = match complex_eigenvalues(&u.leading_block(p)) {
        Ok(e) => e,
        Err(_) => return HaarDraw::Rejected("eigensolver"),
    };
    let modulus = eig.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if modulus > 1.0 + MODULUS_TOL {
        return HaarDraw::Rejected("modulus");
    }
    HaarDraw::Accepted {
        value: (modulus * modulus).min(1.0),
        defect,
        modulus,
    }
}

/// Draws of max_j |z_j|² from the eigenvalues of the top-left p × p block of
/// Haar unitaries; rejected draws are counted and dropped.
pub fn sample_haar_truncation(params: EnsembleParams, count: u64, seed: u64) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidParams("count must be at least 1".into()));
    }
    if params.n() > MAX_HAAR_DIM {
        return Err(Error::InvalidParams(format!(
            "Haar simulation is limited to n <= {MAX_HAAR_DIM}, got n = {}",
            params.n()
        )));
    }
    let (n, p) = (params.n() as usize, params.p() as usize);
    let results: Vec<HaarDraw> = (0..count)
        .into_par_iter()
        .map(|i| haar_draw(n, p, &mut draw_rng(seed, i)))
        .collect();

    let mut metadata = BatchMetadata {
        requested: count,
        max_unitarity_defect: Some(0.0),
        max_eigen_modulus: Some(0.0),
        ..Default::default()
    };
    let mut draws = Vec::with_capacity(results.len());
    for r in results {
        match r {
            HaarDraw::Accepted { value, defect, modulus } => {
                draws.push(value);
                metadata.max_unitarity_defect = metadata.max_unitarity_defect.map(|d| d.max(defect));
                metadata.max_eigen_modulus = metadata.max_eigen_modulus.map(|d| d.max(modulus));
            }
            HaarDraw::Rejected(reason) => {
                metadata.rejected += 1;
                *metadata.rejection_reasons.entry(reason.to_string()).or_default() += 1;
            }
        }
    }
    if metadata.rejected as f64 > MAX_REJECTION_RATE * count as f64 {
        return Err(Error::Sampling(format!(
            "{} of {count} Haar draws rejected: {:?}",
            metadata.rejected, metadata.rejection_reasons
        )));
    }
    Ok(SampleBatch {
        mode: SampleMode::HaarTruncation,
        params,
        seed,
        count: draws.len() as u64,
        draws,
        metadata,
    })
}

fn sorted_copy(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::InvalidParams("empty sample".into()));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParams("sample contains NaN".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// sup_x |F_N(x) − F(x)| for the empirical CDF of `draws`.
pub fn ks_one_sample<F: Fn(f64) -> Result<f64>>(draws: &[f64], cdf: F) -> Result<f64> {
    let xs = sorted_copy(draws)?;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // group ties so the empirical CDF jumps once per distinct value
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i])?;
        d = d.max(f - i as f64 / n).max((j + 1) as f64 / n - f);
        i = j + 1;
    }
    Ok(d)
}

/// sup_x |F_N(x) − G_M(x)| for two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let xs = sorted_copy(a)?;
    let ys = sorted_copy(b)?;
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Haar simulation against the Beta-max law: one-sample KS against the
/// exact CDF (band 1.63/√N) and two-sample KS against Beta-max draws from
/// an independent seed (band 1.63·√(2/N)).
pub fn check_haar_against_beta_max(params: EnsembleParams, count: u64, seed: u64) -> Result<LemmaCheckReport> {
    let law = ExactLaw::new(params, Law::W)?;
    let haar = sample_haar_truncation(params, count, seed)?;
    let beta = sample_beta_max(params, count, seed ^ 0x9E37_79B9_7F4A_7C15, BetaMaxMode::Exact)?;
    let n = haar.draws.len() as f64;
    let one = ks_one_sample(&haar.draws, |t| law.max_cdf(t))?;
    let two = ks_two_sample(&haar.draws, &beta.draws)?;
    let coords = |kind: f64| -> BTreeMap<String, f64> {
        [
            ("n", params.n() as f64),
            ("p", params.p() as f64),
            ("count", n),
            ("two_sample", kind),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    };
    let points = vec![
        CheckPoint {
            coords: coords(0.0),
            exact: one,
            approx: 0.0,
            relative_error: one,
            tolerance_band: KS_CRITICAL_1PCT / n.sqrt(),
            in_regime: true,
        },
        CheckPoint {
            coords: coords(1.0),
            exact: two,
            approx: 0.0,
            relative_error: two,
            tolerance_band: KS_CRITICAL_1PCT * (2.0 / n).sqrt(),
            in_regime: true,
        },
    ];
    Ok(LemmaCheckReport::new(LemmaId::CRU, Some(params), points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_batch() {
        let params = EnsembleParams::new(50, 10).unwrap();
        let a = sample_beta_max(params, 200, 7, BetaMaxMode::Exact).unwrap();
        let b = sample_beta_max(params, 200, 7, BetaMaxMode::Exact).unwrap();
        let c = sample_beta_max(params, 200, 8, BetaMaxMode::Exact).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.draws, c.draws);
        assert!(a.draws.iter().all(|d| (0.0..=1.0).contains(d)));
    }

    #[test]
    fn ks_edge_cases() {
        let xs = [0.1, 0.5, 0.5, 0.9];
        assert_eq!(ks_two_sample(&xs, &xs).unwrap(), 0.0);
        let d = ks_one_sample(&xs, Ok).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
        assert!(ks_one_sample(&[], |_| Ok(0.0)).is_err());
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_truncation() {
        let params = EnsembleParams::new(50, 10).unwrap();
        assert!(sample_beta_max(params, 10, 1, BetaMaxMode::Truncated(Some(10))).is_err());
        assert!(sample_beta_max(params, 0, 1, BetaMaxMode::Exact).is_err());
        assert!(sample_haar_truncation(EnsembleParams::new(600, 10).unwrap(), 1, 1).is_err());
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = draw_rng(3, 0);
        let u = haar_unitary(16, &mut rng);
        assert!(u.unitarity_defect() < 1e-12);
    }
}

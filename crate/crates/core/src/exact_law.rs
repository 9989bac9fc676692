//! Exact finite-n CDFs of the rescaled spectral radius.
//!
//! The squared spectral radius of the truncated ensemble has the law of
//! `max_a Y_a` with independent `Y_a ~ Beta(a, m)`, `a = 1..p`, `m = n − p`.
//! Hence `F(x) = Π_a I_t(a, m)` with `t = β_n(x)` for the `W` rescaling and
//! `t = (A_n + B_n x)²` for the `X` rescaling.
//!
//! Writing `nb(k) = C(k+m−1, k) t^k (1−t)^m` for the negative-binomial
//! weights, the survival `S_a = 1 − I_t(a, m) = Σ_{k<a} nb(k)`. The product is
//! accumulated in two stable directions: upwards through `S_a` while it is
//! at most one half, and downwards from `a = p` through `I_a` for the rest.
//! Both runs only add positive terms and restart from a direct evaluation
//! every [`RESYNC_INTERVAL`] steps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scaling::{derive_constants, CutPoints, EnsembleParams, ScalingConstants};
use crate::special::{log_beta_step_term, log_beta_survival, log_reg_inc_beta, CompensatedSum};

/// Steps between direct re-evaluations in the product recurrence.
pub const RESYNC_INTERVAL: usize = 1024;

/// Below this log-CDF the probability-scale CDF is reported as 0.
pub const LOG_CDF_FLUSH: f64 = -700.0;

// Survival factors with ln S below this are dropped from the product.
const LOG_NEGLIGIBLE: f64 = -760.0;

// Scaled accumulators are folded back into their exponent above this size.
const RESCALE: f64 = 1e200;

/// Which rescaling of the spectral radius the law describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Law {
    /// Squared modulus, threshold β_n(x).
    W,
    /// Modulus, threshold A_n + B_n x.
    X,
}

/// Position of the Beta threshold relative to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Below the support: the CDF is 0.
    Below,
    Inside(f64),
    /// At or above 1: the CDF is 1.
    Above,
}

/// α_n(x) = −ln F(x), which is infinite at and below the lower cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Alpha {
    Finite(f64),
    Infinite,
}

impl Alpha {
    pub fn value(self) -> f64 {
        match self {
            Alpha::Finite(v) => v,
            Alpha::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Alpha::Finite(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactLaw {
    pub params: EnsembleParams,
    pub constants: ScalingConstants,
    pub cuts: CutPoints,
    pub law: Law,
}

impl ExactLaw {
    pub fn new(params: EnsembleParams, law: Law) -> Result<Self> {
        let constants = derive_constants(&params)?;
        Ok(Self {
            params,
            constants,
            cuts: constants.cut_points(),
            law,
        })
    }

    pub fn with_law(&self, law: Law) -> Self {
        Self { law, ..*self }
    }

    /// Left end of the support: y0 for `W`, y3 for `X`.
    pub fn lower_cut(&self) -> f64 {
        match self.law {
            Law::W => self.cuts.y0,
            Law::X => self.cuts.y3,
        }
    }

    /// Right end of the support: y2 for `W`, y4 for `X`.
    pub fn upper_cut(&self) -> f64 {
        match self.law {
            Law::W => self.cuts.y2,
            Law::X => self.cuts.y4,
        }
    }

    /// The Beta threshold `t` with `F(x) = P(max_a Y_a ≤ t)`.
    pub fn threshold(&self, x: f64) -> Threshold {
        let t = match self.law {
            Law::W => self.constants.beta_n(x),
            Law::X => {
                let v = self.constants.x_threshold(x);
                if v.value <= 0.0 {
                    return Threshold::Below;
                }
                v.squared
            }
        };
        if t <= 0.0 {
            Threshold::Below
        } else if t >= 1.0 {
            Threshold::Above
        } else {
            Threshold::Inside(t)
        }
    }

    fn shape(&self, j: u64) -> Result<f64> {
        let p = self.params.p();
        if j >= p {
            return Err(Error::InvalidParams(format!("need 0 <= j < p = {p}, got j = {j}")));
        }
        Ok((p - j) as f64)
    }

    /// ln a_n(j, x) = ln P(Y_{p−j} ≥ t).
    pub fn log_survival_a(&self, j: u64, x: f64) -> Result<f64> {
        let a = self.shape(j)?;
        match self.threshold(x) {
            Threshold::Below => Ok(0.0),
            Threshold::Above => Ok(f64::NEG_INFINITY),
            Threshold::Inside(t) => log_beta_survival(t, a, self.params.m() as f64),
        }
    }

    /// a_n(j, x) = P(Y_{p−j} ≥ t), with `t` the threshold of this law.
    pub fn survival_a(&self, j: u64, x: f64) -> Result<f64> {
        Ok(self.log_survival_a(j, x)?.exp().clamp(0.0, 1.0))
    }

    /// ln F(x) by the O(p) recurrence.
    pub fn log_cdf(&self, x: f64) -> Result<f64> {
        self.log_cdf_floored(x, f64::NEG_INFINITY)
    }

    /// F(x), flushed to 0 when ln F(x) < [`LOG_CDF_FLUSH`].
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let l = self.log_cdf_floored(x, LOG_CDF_FLUSH)?;
        Ok(if l < LOG_CDF_FLUSH { 0.0 } else { l.exp().min(1.0) })
    }

    /// α_n(x) = −Σ_j ln(1 − a_n(j, x)).
    pub fn alpha_n(&self, x: f64) -> Result<Alpha> {
        let l = self.log_cdf(x)?;
        Ok(if l == f64::NEG_INFINITY {
            Alpha::Infinite
        } else {
            Alpha::Finite(-l)
        })
    }

    /// ln F(x) as a sum of `p` independent direct evaluations; O(p) special
    /// function calls, used to cross-check the recurrence.
    pub fn log_cdf_direct(&self, x: f64) -> Result<f64> {
        let t = match self.threshold(x) {
            Threshold::Below => return Ok(f64::NEG_INFINITY),
            Threshold::Above => return Ok(0.0),
            Threshold::Inside(t) => t,
        };
        let b = self.params.m() as f64;
        let mut acc = CompensatedSum::default();
        for a in 1..=self.params.p() {
            acc.add(log_reg_inc_beta(t, a as f64, b)?);
        }
        Ok(acc.total().min(0.0))
    }

    /// ln F(x), allowed to stop early once the partial sum is below `floor`.
    fn log_cdf_floored(&self, x: f64, floor: f64) -> Result<f64> {
        match self.threshold(x) {
            Threshold::Below => Ok(f64::NEG_INFINITY),
            Threshold::Above => Ok(0.0),
            Threshold::Inside(t) => self.log_max_cdf_floored(t, floor),
        }
    }

    /// ln P(max_a Y_a ≤ t), the law of the squared spectral radius itself.
    pub fn log_max_cdf(&self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(Error::InvalidParams("threshold is NaN".into()));
        }
        if t <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if t >= 1.0 {
            return Ok(0.0);
        }
        self.log_max_cdf_floored(t, f64::NEG_INFINITY)
    }

    /// P(max_a Y_a ≤ t).
    pub fn max_cdf(&self, t: f64) -> Result<f64> {
        Ok(self.log_max_cdf(t)?.exp().min(1.0))
    }

    fn log_max_cdf_floored(&self, t: f64, floor: f64) -> Result<f64> {
        let p = self.params.p();
        let b = self.params.m() as f64;
        let kernel = Kernel { t, b };

        // a_mid: first shape with I_a < 1/2, i.e. S_a > 1/2.
        let a_mid = first_index(1, p, |a| Ok(kernel.log_cdf(a)? < -std::f64::consts::LN_2))?;
        let mut acc = CompensatedSum::default();

        if a_mid <= p {
            kernel.sum_cdf_downward(p, a_mid, floor, &mut acc)?;
            if acc.total() < floor {
                return Ok(acc.total());
            }
        }
        if a_mid > 1 {
            let hi = a_mid - 1;
            let a_lo = first_index(1, hi, |a| Ok(kernel.log_survival(a)? >= LOG_NEGLIGIBLE))?;
            if a_lo <= hi {
                kernel.sum_survival_upward(a_lo, hi, &mut acc)?;
            }
        }
        Ok(acc.total().min(0.0))
    }
}

/// Smallest `a ∈ [lo, hi]` with `pred(a)` for a monotone predicate, or `hi + 1`.
fn first_index(lo: u64, hi: u64, pred: impl Fn(u64) -> Result<bool>) -> Result<u64> {
    let (mut lo, mut hi) = (lo, hi + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Beta(a, b) quantities at a fixed threshold `t`.
struct Kernel {
    t: f64,
    b: f64,
}

impl Kernel {
    fn log_cdf(&self, a: u64) -> Result<f64> {
        log_reg_inc_beta(self.t, a as f64, self.b)
    }

    fn log_survival(&self, a: u64) -> Result<f64> {
        log_beta_survival(self.t, a as f64, self.b)
    }

    /// ln nb(k) = ln[C(k+b−1, k) t^k (1−t)^b].
    fn log_nb(&self, k: u64) -> Result<f64> {
        if k == 0 {
            Ok(self.b * (-self.t).ln_1p())
        } else {
            log_beta_step_term(self.t, k as f64, self.b)
        }
    }

    /// Adds ln I_a for a = top, top−1, …, bottom using I_{a−1} = I_a + nb(a−1).
    fn sum_cdf_downward(&self, top: u64, bottom: u64, floor: f64, acc: &mut CompensatedSum) -> Result<()> {
        let mut a = top;
        loop {
            // block start: direct value
            let mut log_scale = self.log_cdf(a)?;
            let mut scaled = 1.0;
            acc.add(log_scale);
            if a == bottom || acc.total() < floor {
                return Ok(());
            }
            let mut nb = (self.log_nb(a - 1)? - log_scale).exp();
            for _ in 1..RESYNC_INTERVAL {
                a -= 1;
                scaled += nb;
                acc.add(log_scale + scaled.ln());
                if a == bottom {
                    return Ok(());
                }
                // nb(a−1) = nb(a)·a/(t(a−1+b))
                let k = a as f64;
                nb *= k / (self.t * (k - 1.0 + self.b));
                if scaled > RESCALE {
                    log_scale += scaled.ln();
                    nb /= scaled;
                    scaled = 1.0;
                }
            }
            if acc.total() < floor {
                return Ok(());
            }
            a -= 1;
        }
    }

    /// Adds ln(1 − S_a) for a = bottom, …, top using S_{a+1} = S_a + nb(a).
    fn sum_survival_upward(&self, bottom: u64, top: u64, acc: &mut CompensatedSum) -> Result<()> {
        let mut a = bottom;
        loop {
            let mut log_scale = self.log_survival(a)?;
            let mut scaled = 1.0;
            let mut nb = (self.log_nb(a)? - log_scale).exp();
            let mut step = 0;
            loop {
                acc.add((-(log_scale.exp() * scaled)).ln_1p());
                if a == top {
                    return Ok(());
                }
                step += 1;
                if step == RESYNC_INTERVAL {
                    a += 1;
                    break;
                }
                scaled += nb;
                // nb(a+1) = nb(a)·t(a+b)/(a+1)
                let k = a as f64;
                nb *= self.t * (k + self.b) / (k + 1.0);
                a += 1;
                if scaled > RESCALE {
                    log_scale += scaled.ln();
                    nb /= scaled;
                    scaled = 1.0;
                }
            }
        }
    }
}

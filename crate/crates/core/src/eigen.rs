//! Dense complex linear algebra for the Haar simulation: Householder QR and
//! eigenvalues by Hessenberg reduction plus single-shift QR iteration.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Top-left `p × p` block.
    pub fn leading_block(&self, p: usize) -> Self {
        assert!(p <= self.n);
        Self::from_fn(p, |i, j| self[(i, j)])
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// max_{ij} |(M*M − I)_{ij}|
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint().mul(self);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Householder vector `v` (unit norm) and `alpha` with (I − 2vv*)x = alpha·e₁.
fn householder(x: &[Complex64]) -> Option<(Vec<Complex64>, Complex64)> {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let phase = if x[0].norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        x[0] / x[0].norm()
    };
    let alpha = -phase * norm;
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if vnorm == 0.0 {
        return None;
    }
    for z in &mut v {
        *z /= vnorm;
    }
    Some((v, alpha))
}

/// QR factorisation by Householder reflections; returns `(Q, diag(R))`.
pub fn householder_qr(a: &CMatrix) -> (CMatrix, Vec<Complex64>) {
    let n = a.dim();
    let mut r = a.clone();
    let mut reflectors: Vec<Option<Vec<Complex64>>> = Vec::with_capacity(n);
    let mut diag = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let x: Vec<Complex64> = (k..n).map(|i| r[(i, k)]).collect();
        match householder(&x) {
            None => {
                diag[k] = r[(k, k)];
                reflectors.push(None);
            }
            Some((v, alpha)) => {
                // R[k.., k..] −= 2 v (v* R[k.., k..])
                for j in k..n {
                    let dot: Complex64 = (k..n).map(|i| v[i - k].conj() * r[(i, j)]).sum();
                    for i in k..n {
                        r[(i, j)] -= 2.0 * v[i - k] * dot;
                    }
                }
                diag[k] = alpha;
                reflectors.push(Some(v));
            }
        }
    }
    // Q = H_0 H_1 … H_{n−1}, accumulated from the right end
    let mut q = CMatrix::identity(n);
    for k in (0..n).rev() {
        if let Some(v) = &reflectors[k] {
            for j in 0..n {
                let dot: Complex64 = (k..n).map(|i| v[i - k].conj() * q[(i, j)]).sum();
                for i in k..n {
                    q[(i, j)] -= 2.0 * v[i - k] * dot;
                }
            }
        }
    }
    (q, diag)
}

/// Multiplies column k of `q` by the phase of `r_kk`, making the triangular
/// factor's diagonal real positive; applied to a Ginibre matrix this yields
/// an exactly Haar-distributed unitary.
pub fn fix_phases(q: &mut CMatrix, diag: &[Complex64]) {
    let n = q.dim();
    for (k, &d) in diag.iter().enumerate() {
        let norm = d.norm();
        if norm == 0.0 {
            continue;
        }
        let phase = d / norm;
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    pub eigenvalues: Vec<Complex64>,
    /// |Σλ − tr A|
    pub residual_trace: f64,
    /// |Σλ² − tr A²|
    pub residual_trace2: f64,
    pub iterations: usize,
}

/// Reduces `h` to upper Hessenberg form by unitary similarity.
fn hessenberg(h: &mut CMatrix) {
    let n = h.dim();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let Some((v, _)) = householder(&x) else {
            continue;
        };
        // left: rows k+1.., all columns from k
        for j in k..n {
            let dot: Complex64 = (k + 1..n).map(|i| v[i - k - 1].conj() * h[(i, j)]).sum();
            for i in k + 1..n {
                h[(i, j)] -= 2.0 * v[i - k - 1] * dot;
            }
        }
        // right: columns k+1.., all rows
        for i in 0..n {
            let dot: Complex64 = (k + 1..n).map(|j| h[(i, j)] * v[j - k - 1]).sum();
            for j in k + 1..n {
                h[(i, j)] -= 2.0 * dot * v[j - k - 1].conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Rotation (c, s) with c real and [c s; −s̄ c]·[x; y] = [r; 0].
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let norm = (ax * ax + y.norm_sqr()).sqrt();
    if norm == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    (ax / norm, (x / ax) * y.conj() / norm)
}

/// Eigenvalue of the trailing 2 × 2 block closer to its last diagonal entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let (l1, l2) = (m + disc, m - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// All eigenvalues of a square complex matrix.
///
/// Hessenberg reduction, then implicit single-shift QR with Wilkinson
/// shifts, Givens bulge chasing and deflation on negligible subdiagonals.
/// Fails after 30·p sweeps in total.
pub fn complex_eigenvalues(a: &CMatrix) -> Result<EigenResult> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::InvalidParams("empty matrix".into()));
    }
    if a.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParams("matrix has non-finite entries".into()));
    }
    let mut h = a.clone();
    hessenberg(&mut h);

    let max_iter = 30 * n;
    let mut total = 0;
    let mut since_deflation = 0;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let scale = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if h[(l, l - 1)].norm() <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
                h[(l, l - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if total >= max_iter {
            return Err(Error::NonConvergence {
                func: "complex_eigenvalues",
                iterations: total,
            });
        }
        total += 1;
        since_deflation += 1;

        let mu = if since_deflation % 10 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + Complex64::new(0.75, 0.5) * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for k in l..hi {
            let (x, y) = if k == l {
                (h[(l, l)] - mu, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let first_col = if k == l { l } else { k - 1 };
            for j in first_col..=hi {
                let (u, v) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = c * u + s * v;
                h[(k + 1, j)] = -s.conj() * u + c * v;
            }
            if k > l {
                h[(k + 1, k - 1)] = Complex64::new(0.0, 0.0);
            }
            let last_row = (k + 2).min(hi);
            for i in l..=last_row {
                let (u, v) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = u * c + v * s.conj();
                h[(i, k + 1)] = -u * s + v * c;
            }
        }
    }

    let eigenvalues: Vec<Complex64> = (0..n).map(|i| h[(i, i)]).collect();
    let sum: Complex64 = eigenvalues.iter().sum();
    let sum2: Complex64 = eigenvalues.iter().map(|z| z * z).sum();
    let trace2 = a.mul(a).trace();
    Ok(EigenResult {
        residual_trace: (sum - a.trace()).norm(),
        residual_trace2: (sum2 - trace2).norm(),
        eigenvalues,
        iterations: total,
    })
}

//! Fixed-energy blocks of the down-conversion Hamiltonian and their spectra.
//!
//! A block with total energy `N` is spanned by `|N - 2k>_signal |k>_pump`,
//! `k = 0..=N/2`. The Hamiltonian restricted to it is symmetric tridiagonal
//! with zero diagonal and couplings `c_k = sqrt((k+1)(N-2k)(N-2k-1))`.
//!
//! Eigenvalues come from bisection on Sturm sequences, so any index window
//! (in particular the few eigenvalues nearest zero) can be computed without
//! touching the rest of the spectrum. Eigenvectors come from inverse
//! iteration on a pivoted tridiagonal LU factorization.

use crate::error::{Error, Result};

/// Total-energy label of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubspaceSpec {
    total: usize,
}

impl SubspaceSpec {
    /// Odd and negative totals are rejected: the initial conditions used here
    /// only ever populate even `N`.
    pub fn new(total: i64) -> Result<Self> {
        if total < 0 {
            return Err(Error::domain(format!(
                "total energy N = {total} is negative"
            )));
        }
        if total % 2 != 0 {
            return Err(Error::domain(format!("total energy N = {total} is odd")));
        }
        Ok(Self {
            total: total as usize,
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// `floor(N/2) + 1`
    pub fn dim(&self) -> usize {
        self.total / 2 + 1
    }
}

/// Coupling between basis states `k` and `k + 1` of block `total`.
pub fn coupling(total: i64, k: i64) -> Result<f64> {
    let spec = SubspaceSpec::new(total)?;
    if k < 0 || k as usize + 1 >= spec.dim() {
        return Err(Error::domain(format!(
            "coupling index k = {k} outside 0..={} for N = {total}",
            spec.dim() as i64 - 2
        )));
    }
    Ok(raw_coupling(spec.total, k as usize))
}

fn raw_coupling(total: usize, k: usize) -> f64 {
    let n = total as f64;
    let k = k as f64;
    ((k + 1.0) * (n - 2.0 * k) * (n - 2.0 * k - 1.0)).sqrt()
}

/// One fixed-energy block. The diagonal is identically zero and is not
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalHamiltonian {
    spec: SubspaceSpec,
    offdiag: Vec<f64>,
}

pub fn build_hamiltonian(total: i64) -> Result<TridiagonalHamiltonian> {
    let spec = SubspaceSpec::new(total)?;
    Ok(TridiagonalHamiltonian::from_spec(spec))
}

impl TridiagonalHamiltonian {
    pub fn from_spec(spec: SubspaceSpec) -> Self {
        let offdiag = (0..spec.dim() - 1)
            .map(|k| raw_coupling(spec.total, k))
            .collect();
        Self { spec, offdiag }
    }

    pub fn spec(&self) -> SubspaceSpec {
        self.spec
    }

    pub fn total(&self) -> usize {
        self.spec.total
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn max_coupling(&self) -> f64 {
        self.offdiag.iter().copied().fold(0.0, f64::max)
    }

    /// Gershgorin bound on the spectral radius.
    pub fn gershgorin_radius(&self) -> f64 {
        let c = &self.offdiag;
        (0..self.dim())
            .map(|k| {
                let left = if k > 0 { c[k - 1] } else { 0.0 };
                let right = c.get(k).copied().unwrap_or(0.0);
                left + right
            })
            .fold(0.0, f64::max)
    }

    /// Dense matrix-vector product `H x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(
            x.len(),
            self.dim(),
            "vector length must match block dimension"
        );
        let c = &self.offdiag;
        let n = self.dim();
        (0..n)
            .map(|k| {
                let mut acc = 0.0;
                if k > 0 {
                    acc += c[k - 1] * x[k - 1];
                }
                if k + 1 < n {
                    acc += c[k] * x[k + 1];
                }
                acc
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count of
    /// negative pivots of `H - x I`).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut q = -x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        let mut count = usize::from(q < 0.0);
        for &c in &self.offdiag {
            q = -x - c * c / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            count += usize::from(q < 0.0);
        }
        count
    }

    fn pivmin(&self) -> f64 {
        let max_sq = self.offdiag.iter().map(|c| c * c).fold(1.0, f64::max);
        f64::MIN_POSITIVE * max_sq
    }

    /// Eigenvalues with ascending indices `range.start..range.end`.
    fn eigenvalues_in(&self, range: std::ops::Range<usize>) -> Vec<f64> {
        let n = self.dim();
        assert!(range.end <= n);
        if n == 1 {
            return vec![0.0; range.len()];
        }
        let bound = self.gershgorin_radius() * (1.0 + 4.0 * f64::EPSILON) + self.pivmin();
        let abs_floor = f64::EPSILON * bound;
        let len = range.len();
        let mut lo = vec![-bound; len];
        let mut hi = vec![bound; len];
        let mut out = Vec::with_capacity(len);
        for j in 0..len {
            loop {
                let (l, h) = (lo[j], hi[j]);
                let width_tol = (2.0 * f64::EPSILON * l.abs().max(h.abs())).max(abs_floor);
                let mid = 0.5 * (l + h);
                if h - l <= width_tol || mid <= l || mid >= h {
                    break;
                }
                let below = self.count_below(mid);
                // Every eigenvalue with global index < below lies under mid.
                for (i, (lo_i, hi_i)) in lo.iter_mut().zip(hi.iter_mut()).enumerate().skip(j) {
                    if range.start + i < below {
                        if mid < *hi_i {
                            *hi_i = mid;
                        }
                    } else if mid > *lo_i {
                        *lo_i = mid;
                    }
                }
            }
            out.push(0.5 * (lo[j] + hi[j]));
        }
        out
    }

    /// Normalized eigenvectors for the given (ascending, accurate) eigenvalues.
    fn eigenvectors_for(&self, eigenvalues: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dim();
        if n == 1 {
            return eigenvalues.iter().map(|_| vec![1.0]).collect();
        }
        let scale = self.gershgorin_radius();
        // Pairs closer than this are re-orthogonalized; for wider gaps inverse
        // iteration alone keeps |<x_i, x_j>| ~ eps * scale / gap.
        let cluster_gap = 1e-5 * scale;
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(eigenvalues.len());
        let mut cluster_start = 0;
        for (j, &lambda) in eigenvalues.iter().enumerate() {
            if j > 0 && lambda - eigenvalues[j - 1] > cluster_gap {
                cluster_start = j;
            }
            let lu = TridiagLu::factor(&self.offdiag, lambda, scale);
            let mut x = start_vector(n, j);
            for iter in 0..8 {
                lu.solve(&mut x);
                for prev in &vectors[cluster_start..j] {
                    let d = dot(prev, &x);
                    for (xi, pi) in x.iter_mut().zip(prev) {
                        *xi -= d * pi;
                    }
                }
                normalize(&mut x);
                if iter >= 1 && self.residual(&x, lambda) <= 1e-13 * scale.max(1.0) {
                    break;
                }
            }
            fix_sign(&mut x);
            vectors.push(x);
        }
        vectors
    }

    /// `||H x - lambda x||`
    pub fn residual(&self, x: &[f64], lambda: f64) -> f64 {
        self.apply(x)
            .iter()
            .zip(x)
            .map(|(hx, xi)| (hx - lambda * xi).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Pivoted LU of `T - lambda I` for a zero-diagonal symmetric tridiagonal `T`
/// (same elimination as LAPACK's `dgttrf`).
struct TridiagLu {
    d: Vec<f64>,
    dl: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(offdiag: &[f64], lambda: f64, scale: f64) -> Self {
        let n = offdiag.len() + 1;
        let mut d = vec![-lambda; n];
        let mut dl = offdiag.to_vec();
        let mut du = offdiag.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n - 1];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        // Singular pivots are expected: lambda is an eigenvalue.
        let tiny = f64::EPSILON * scale.max(1.0);
        for p in &mut d {
            if p.abs() < tiny {
                *p = if *p < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            d,
            dl,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        // Rescale to stay clear of overflow in the next sweep.
        let m = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if m > 0.0 && m.is_finite() {
            b.iter_mut().for_each(|v| *v /= m);
        }
    }
}

/// Deterministic, non-degenerate start vector for inverse iteration.
fn start_vector(n: usize, seed: usize) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ (seed as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) {
    let norm = dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
}

/// Components below this fraction of the largest one are treated as zero
/// when fixing the sign.
const SIGN_THRESHOLD: f64 = 1e-8;

/// First non-negligible component positive.
fn fix_sign(x: &mut [f64]) {
    let max = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if let Some(first) = x.iter().find(|v| v.abs() > SIGN_THRESHOLD * max) {
        if *first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecompositionMode {
    Full,
    /// Only the `2 n_cut + 1` eigenpairs closest to zero (or all, if fewer).
    Central {
        n_cut: usize,
    },
}

/// Eigenpairs of one block, eigenvalues ascending. Eigenvectors are stored
/// column by column, each of length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    spec: SubspaceSpec,
    mode: DecompositionMode,
    eigenvalues: Vec<f64>,
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn spec(&self) -> SubspaceSpec {
        self.spec
    }

    pub fn total(&self) -> usize {
        self.spec.total
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn mode(&self) -> DecompositionMode {
        self.mode
    }

    /// Number of eigenpairs held.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, j: usize) -> f64 {
        self.eigenvalues[j]
    }

    /// Eigenvector `j`, components indexed by pump photon number `k`.
    pub fn vector(&self, j: usize) -> &[f64] {
        let n = self.dim();
        &self.vectors[j * n..(j + 1) * n]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.dim())
    }

    fn assemble(
        h: &TridiagonalHamiltonian,
        mode: DecompositionMode,
        eigenvalues: Vec<f64>,
    ) -> Self {
        let vectors = h.eigenvectors_for(&eigenvalues).concat();
        Self {
            spec: h.spec,
            mode,
            eigenvalues,
            vectors,
        }
    }
}

pub fn eigen_full(h: &TridiagonalHamiltonian) -> EigenDecomposition {
    let eigenvalues = h.eigenvalues_in(0..h.dim());
    EigenDecomposition::assemble(h, DecompositionMode::Full, eigenvalues)
}

/// The `min(dim, 2 n_cut + 1)` eigenpairs with smallest `|lambda|`, returned
/// in ascending order. When the last slot falls on a `±lambda` pair the
/// negative member is kept.
pub fn eigen_central(h: &TridiagonalHamiltonian, n_cut: usize) -> EigenDecomposition {
    let eigenvalues = central_eigenvalues(h, n_cut);
    EigenDecomposition::assemble(h, DecompositionMode::Central { n_cut }, eigenvalues)
}

pub fn decompose(h: &TridiagonalHamiltonian, mode: DecompositionMode) -> EigenDecomposition {
    match mode {
        DecompositionMode::Full => eigen_full(h),
        DecompositionMode::Central { n_cut } => eigen_central(h, n_cut),
    }
}

fn central_eigenvalues(h: &TridiagonalHamiltonian, n_cut: usize) -> Vec<f64> {
    let n = h.dim();
    let want = (2 * n_cut + 1).min(n);
    if want == n {
        return h.eigenvalues_in(0..n);
    }
    let pivot = h.count_below(0.0);
    let start = pivot.saturating_sub(want);
    let end = (pivot + want).min(n);
    let window = h.eigenvalues_in(start..end);
    // Two-pointer expansion outward from zero.
    let split = window.partition_point(|&v| v < 0.0);
    let (mut left, mut right) = (split, split);
    let tie = 1e-9 * h.gershgorin_radius().max(1.0);
    while right - left < want {
        let take_left = match (left.checked_sub(1), right < window.len()) {
            (Some(l), true) => window[l].abs() <= window[right].abs() + tie,
            (Some(_), false) => true,
            (None, _) => false,
        };
        if take_left {
            left -= 1;
        } else {
            right += 1;
        }
    }
    window[left..right].to_vec()
}

/// Eigenvector from the forward three-term recurrence
/// `lambda x_k = c_{k-1} x_{k-1} + c_k x_{k+1}`, seeded with `x_0 = 1`.
///
/// Loses accuracy quickly with growing `N`; used as an independent check of
/// the inverse-iteration vectors on small blocks. A trial value whose
/// normalized residual exceeds `1e-6` is reported as divergence.
pub fn eigvec_by_recurrence(h: &TridiagonalHamiltonian, lambda: f64) -> Result<Vec<f64>> {
    let n = h.dim();
    let c = h.offdiag();
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    if n > 1 {
        x[1] = lambda / c[0];
    }
    for k in 1..n.saturating_sub(1) {
        x[k + 1] = (lambda * x[k] - c[k - 1] * x[k - 1]) / c[k];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            residual: f64::INFINITY,
        });
    }
    normalize(&mut x);
    let residual = h.residual(&x, lambda) / h.max_coupling().max(1.0);
    if residual.is_nan() || residual > 1e-6 {
        return Err(Error::Divergence { residual });
    }
    fix_sign(&mut x);
    Ok(x)
}

/// Fit constants for the eigenvalues nearest zero, `N/2` even:
/// `lambda_k = b(N) k^d(N)`, `b(N) = bb (bc + N)^bd`, `d(N) = da + db N^dd`.
const EVEN_FIT: PowerFit = PowerFit {
    bb: 1.43,
    bc: 6.99,
    bd: 0.41,
    da: 1.09,
    db: 0.84,
    dd: -0.39,
};
/// Same shape for `N/2` odd, plus the offset `a(N) = aa + ab N^ad`.
const ODD_FIT: PowerFit = PowerFit {
    bb: 1.58,
    bc: 6.04,
    bd: 0.41,
    da: 1.08,
    db: 0.90,
    dd: -0.41,
};
const ODD_OFFSET: (f64, f64, f64) = (2.14, 0.43, 0.46);

/// Largest index the closed-form fits were made for.
pub const APPROX_MAX_INDEX: usize = 10;

struct PowerFit {
    bb: f64,
    bc: f64,
    bd: f64,
    da: f64,
    db: f64,
    dd: f64,
}

impl PowerFit {
    fn scale(&self, n: f64) -> f64 {
        self.bb * (self.bc + n).powf(self.bd)
    }

    fn exponent(&self, n: f64) -> f64 {
        self.da + self.db * n.powf(self.dd)
    }
}

/// Closed-form approximation of the `k`-th non-negative eigenvalue of block
/// `total` (`k = 0` is the zero eigenvalue when `N/2` is even, and the
/// smallest positive eigenvalue otherwise).
pub fn approx_central_eigenvalue(total: i64, k: usize) -> Result<f64> {
    let spec = SubspaceSpec::new(total)?;
    if k > APPROX_MAX_INDEX {
        return Err(Error::domain(format!(
            "index k = {k} outside the fitted range 0..={APPROX_MAX_INDEX}"
        )));
    }
    let half_even = (spec.total / 2) % 2 == 0;
    let positives = spec.dim() / 2;
    let needed = if half_even { k } else { k + 1 };
    if needed > positives || spec.total == 0 {
        return Err(Error::domain(format!(
            "N = {total} has only {positives} positive eigenvalues, index k = {k} requested"
        )));
    }
    let n = spec.total as f64;
    let kf = k as f64;
    Ok(if half_even {
        if k == 0 {
            0.0
        } else {
            EVEN_FIT.scale(n) * kf.powf(EVEN_FIT.exponent(n))
        }
    } else {
        let (aa, ab, ad) = ODD_OFFSET;
        let offset = aa + ab * n.powf(ad);
        let power = if k == 0 {
            0.0
        } else {
            kf.powf(ODD_FIT.exponent(n))
        };
        offset + ODD_FIT.scale(n) * power
    })
}

/// The exact counterpart of [`approx_central_eigenvalue`], read off a
/// central decomposition: non-negative eigenvalues, ascending.
pub fn nonnegative_central_eigenvalues(decomposition: &EigenDecomposition) -> Vec<f64> {
    let tol = 1e-9
        * decomposition
            .eigenvalues()
            .iter()
            .fold(1.0f64, |a, v| a.max(v.abs()));
    decomposition
        .eigenvalues()
        .iter()
        .map(|&v| if v.abs() <= tol { 0.0 } else { v })
        .filter(|&v| v >= 0.0)
        .collect()
}

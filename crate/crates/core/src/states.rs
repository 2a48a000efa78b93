//! Single-mode states in the Fock basis.
//!
//! Conventions: the squeeze operator satisfies
//! `S(r)^† a S(r) = a cosh r - a^† sinh r`, so a negative `r` stretches the
//! amplitude quadrature and `S(r)|beta>` has mean photon number
//! `beta^2 e^{-2r} + sinh^2 r`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Largest tolerated norm deficit of a constructed squeezed cat.
pub const CAT_NORM_BUDGET: f64 = 1e-9;

/// Complex amplitudes over Fock levels `0..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
}

impl FockVector {
    /// # Panics
    /// On an empty amplitude vector.
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        assert!(
            !amplitudes.is_empty(),
            "a Fock vector holds at least level 0"
        );
        Self { amplitudes }
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Number state `|n>`.
    pub fn fock(n: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize) -> Complex64 {
        self.amplitudes.get(n).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability mass on odd levels.
    pub fn odd_mass(&self) -> f64 {
        self.amplitudes
            .iter()
            .skip(1)
            .step_by(2)
            .map(|a| a.norm_sqr())
            .sum()
    }

    /// Zero-pads (never truncates) to `cutoff`.
    pub fn padded(&self, cutoff: usize) -> Self {
        let mut amplitudes = self.amplitudes.clone();
        if amplitudes.len() < cutoff + 1 {
            amplitudes.resize(cutoff + 1, Complex64::new(0.0, 0.0));
        }
        Self { amplitudes }
    }

    pub fn normalized(&self) -> Self {
        let norm = self.norm_sqr().sqrt();
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a / norm).collect(),
        }
    }

    /// Global phase chosen so the largest-magnitude amplitude is real and
    /// positive (first one wins on ties).
    pub fn with_fixed_global_phase(&self) -> Self {
        let mut best = Complex64::new(0.0, 0.0);
        for a in &self.amplitudes {
            if a.norm_sqr() > best.norm_sqr() {
                best = *a;
            }
        }
        if best.norm_sqr() == 0.0 {
            return self.clone();
        }
        let phase = best.conj() / best.norm();
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }
}

/// Parameters `(beta, r)` of the squeezed even cat
/// `S(r)(|beta> + |-beta>) / sqrt(2(1 + e^{-2 beta^2}))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedCatParams {
    pub beta: f64,
    pub r: f64,
}

impl SqueezedCatParams {
    pub fn new(beta: f64, r: f64) -> Self {
        Self { beta, r }
    }

    /// Fock cutoff that holds the state to well within [`CAT_NORM_BUDGET`]:
    /// twelve standard deviations above the mean, plus room for the
    /// geometric tail of the squeezed vacuum.
    pub fn default_cutoff(&self) -> usize {
        let Self { beta, r } = *self;
        let b2 = beta * beta;
        let sh2 = r.sinh().powi(2);
        let mean = b2 * (-2.0 * r).exp() + sh2;
        let sd = (b2 * (-4.0 * r).exp() + 2.0 * sh2 * r.cosh().powi(2)).sqrt();
        let vacuum_tail = if r == 0.0 {
            0.0
        } else {
            60.0 / -(r.abs().tanh().ln())
        };
        (mean + 12.0 * sd + 20.0 + vacuum_tail).ceil() as usize
    }
}

/// Poisson(`mu`) probabilities on `start..start + len`, covering all but a
/// negligible (< 1e-40 relative to the peak) part of the mass and
/// renormalized to sum to one.
///
/// Built by ratio recurrence outward from the mode; evaluating
/// `exp(-mu + n ln mu - ln n!)` directly loses ~1e-12 relative accuracy at
/// `mu ~ 1000` through cancellation.
pub(crate) fn poisson_support(mu: f64) -> (usize, Vec<f64>) {
    if mu == 0.0 {
        return (0, vec![1.0]);
    }
    const FLOOR: f64 = 1e-40;
    let mode = mu.floor() as usize;
    let mut up = vec![1.0];
    let mut p = 1.0;
    let mut n = mode;
    while p > FLOOR {
        p *= mu / (n + 1) as f64;
        n += 1;
        up.push(p);
    }
    let mut down = Vec::new();
    let mut p = 1.0;
    let mut n = mode;
    while n > 0 && p > FLOOR {
        p *= n as f64 / mu;
        n -= 1;
        down.push(p);
    }
    let start = mode - down.len();
    let mut probs: Vec<f64> = down.into_iter().rev().chain(up).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|v| *v /= total);
    (start, probs)
}

/// Poisson weights `p_0..=p_cut` where `cut` is the smallest level whose
/// upper tail `sum_{n > cut} p_n` is at most `tail_eps`.
pub(crate) fn poisson_truncated(mu: f64, tail_eps: f64) -> Vec<f64> {
    let (start, support) = poisson_support(mu);
    let mut tail = 0.0;
    let mut cut = support.len() - 1;
    for k in (0..support.len()).rev() {
        if tail + support[k] > tail_eps {
            break;
        }
        tail += support[k];
        cut = k.saturating_sub(1);
    }
    let mut probs = vec![0.0; start];
    probs.extend_from_slice(&support[..=cut]);
    probs
}

/// Coherent state `|beta>` for real `beta >= 0`, truncated where the
/// remaining Poisson tail drops to `tail_eps`.
pub fn coherent_amplitudes(beta: f64, tail_eps: f64) -> Result<FockVector> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!(
            "coherent amplitude beta = {beta} must be >= 0"
        )));
    }
    if !(tail_eps > 0.0 && tail_eps < 1.0) {
        return Err(Error::domain(format!(
            "tail budget {tail_eps} must lie in (0, 1)"
        )));
    }
    let probs = poisson_truncated(beta * beta, tail_eps);
    Ok(FockVector::from_real(
        &probs.iter().map(|p| p.sqrt()).collect::<Vec<_>>(),
    ))
}

/// `<n| S(r) |beta>` for `n = 0..=cutoff`, real `beta`, `r`.
///
/// Uses `(a cosh r + a^† sinh r) S(r)|beta> = beta S(r)|beta>`, i.e.
/// `cosh r sqrt(n+1) c_{n+1} = beta c_n - sinh r sqrt(n) c_{n-1}`, seeded
/// with the closed form `ln c_0 = -ln(cosh r)/2 + beta^2 (tanh r - 1)/2`.
/// The recurrence runs on rescaled values so that bright states whose low
/// levels underflow are still computed accurately.
pub fn squeezed_coherent_amplitudes(beta: f64, r: f64, cutoff: usize) -> Vec<f64> {
    const RESCALE_AT: f64 = 1e150;
    let ch = r.cosh();
    let sh = r.sinh();
    let ln_c0 = -0.5 * ch.ln() + 0.5 * beta * beta * (r.tanh() - 1.0);
    // stored values and the log scale each one was produced under
    let mut raw = Vec::with_capacity(cutoff + 1);
    let mut ln_scale = Vec::with_capacity(cutoff + 1);
    let mut offset = 0.0f64;
    let (mut prev, mut cur) = (0.0f64, 1.0f64);
    raw.push(cur);
    ln_scale.push(offset);
    for n in 0..cutoff {
        let next = (beta * cur - sh * (n as f64).sqrt() * prev) / (ch * ((n + 1) as f64).sqrt());
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            prev /= RESCALE_AT;
            cur /= RESCALE_AT;
            offset += RESCALE_AT.ln();
        }
        raw.push(cur);
        ln_scale.push(offset);
    }
    raw.iter()
        .zip(&ln_scale)
        .map(|(&v, &s)| {
            if v == 0.0 {
                0.0
            } else {
                v.signum() * (v.abs().ln() + s + ln_c0).exp()
            }
        })
        .collect()
}

/// Normalized squeezed even cat. Odd levels are exactly zero.
///
/// The normalization is the analytic one, so a cutoff that is too small
/// shows up as a norm deficit; beyond [`CAT_NORM_BUDGET`] it is an error.
pub fn squeezed_cat_amplitudes(params: SqueezedCatParams, cutoff: usize) -> Result<FockVector> {
    let SqueezedCatParams { beta, r } = params;
    if !beta.is_finite() || !r.is_finite() {
        return Err(Error::domain("non-finite squeezed-cat parameters"));
    }
    let c = squeezed_coherent_amplitudes(beta, r, cutoff);
    let norm = (2.0 * (1.0 + (-2.0 * beta * beta).exp())).sqrt();
    let amps: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(n, v)| if n % 2 == 0 { 2.0 * v / norm } else { 0.0 })
        .collect();
    let state = FockVector::from_real(&amps);
    let deficit = 1.0 - state.norm_sqr();
    if deficit > CAT_NORM_BUDGET {
        return Err(Error::Truncation {
            deficit,
            budget: CAT_NORM_BUDGET,
        });
    }
    Ok(state)
}

/// Applies `exp(-i phi n)`.
pub fn phase_rotate(state: &FockVector, phi: f64) -> FockVector {
    FockVector::new(
        state
            .amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| a * Complex64::from_polar(1.0, -phi * n as f64))
            .collect(),
    )
}

/// `<a|b>`, zero-padding the shorter vector.
pub fn inner(a: &FockVector, b: &FockVector) -> Complex64 {
    a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum()
}

/// `|<a|b>|^2 / (|a|^2 |b|^2)`.
pub fn fidelity(a: &FockVector, b: &FockVector) -> Result<f64> {
    let (na, nb) = (a.norm_sqr(), b.norm_sqr());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::domain("fidelity of a zero vector"));
    }
    Ok((inner(a, b).norm_sqr() / (na * nb)).min(1.0))
}

/// Mean photon number; the state is normalized on the fly.
pub fn mean_photon(state: &FockVector) -> f64 {
    let norm = state.norm_sqr();
    state
        .probabilities()
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum::<f64>()
        / norm
}

pub fn photon_variance(state: &FockVector) -> f64 {
    let norm = state.norm_sqr();
    let probs = state.probabilities();
    let mean = mean_photon(state);
    probs
        .iter()
        .enumerate()
        .map(|(n, p)| (n as f64 - mean).powi(2) * p)
        .sum::<f64>()
        / norm
}

/// `<beta| S(r)^† n S(r) |alpha>` for real arguments:
/// `e^{-(alpha-beta)^2/2} (alpha beta cosh 2r - (alpha^2+beta^2) sinh(2r)/2 + sinh^2 r)`.
pub fn v_moment(beta: f64, alpha: f64, r: f64) -> f64 {
    let overlap = (-(alpha - beta).powi(2) / 2.0).exp();
    overlap
        * (alpha * beta * (2.0 * r).cosh() - (alpha * alpha + beta * beta) * (2.0 * r).sinh() / 2.0
            + r.sinh().powi(2))
}

/// Exact mean photon number of the squeezed even cat, all interference
/// terms included.
pub fn squeezed_cat_mean_exact(params: SqueezedCatParams) -> f64 {
    let SqueezedCatParams { beta: b, r } = params;
    (v_moment(b, b, r) + v_moment(b, -b, r) + v_moment(-b, b, r) + v_moment(-b, -b, r))
        / (2.0 * (1.0 + (-2.0 * b * b).exp()))
}

/// Mean photon number with the `e^{-2 beta^2}` terms dropped.
pub fn squeezed_cat_mean_approx(params: SqueezedCatParams) -> f64 {
    let SqueezedCatParams { beta, r } = params;
    beta * beta * (-2.0 * r).exp() + r.sinh().powi(2)
}

/// Large-`beta` photon-number variance `beta^2 e^{-4r}`.
pub fn squeezed_cat_variance_approx(params: SqueezedCatParams) -> f64 {
    params.beta * params.beta * (-4.0 * params.r).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2};

    const SQUEEZE_HALF: f64 = -0.5 * LN_2;

    /// `exp(G) v` by Taylor series for the dense real generator
    /// `G = (r/2)(a^2 - a^†2)` on a truncated basis.
    fn squeeze_by_series(v: &[f64], r: f64) -> Vec<f64> {
        let n = v.len();
        let apply = |x: &[f64]| -> Vec<f64> {
            let mut y = vec![0.0; n];
            for k in 0..n {
                // a^2 |k> = sqrt(k(k-1)) |k-2>
                if k >= 2 {
                    y[k - 2] += 0.5 * r * ((k * (k - 1)) as f64).sqrt() * x[k];
                }
                // a^†2 |k> = sqrt((k+1)(k+2)) |k+2>
                if k + 2 < n {
                    y[k + 2] -= 0.5 * r * (((k + 1) * (k + 2)) as f64).sqrt() * x[k];
                }
            }
            y
        };
        let steps = 64;
        let mut out = v.to_vec();
        for _ in 0..steps {
            let mut term = out.clone();
            let mut acc = out.clone();
            for j in 1..60 {
                term = apply(&term)
                    .iter()
                    .map(|t| t / (steps as f64 * j as f64))
                    .collect();
                acc.iter_mut().zip(&term).for_each(|(a, t)| *a += t);
            }
            out = acc;
        }
        out
    }

    #[test]
    fn coherent_examples() {
        let vac = coherent_amplitudes(0.0, DEFAULT_TAIL_EPS).unwrap();
        assert_eq!(vac.cutoff(), 0);
        assert_eq!(vac.amplitude(0), Complex64::new(1.0, 0.0));

        let two = coherent_amplitudes(2.0, DEFAULT_TAIL_EPS).unwrap();
        let p4 = (-4f64).exp() * 256.0 / 24.0;
        assert!((two.amplitude(4).norm_sqr() - p4).abs() < 1e-15);
        assert!((p4 - 0.19537).abs() < 1e-5);

        let three = coherent_amplitudes(3.0, DEFAULT_TAIL_EPS).unwrap();
        assert!((mean_photon(&three) - 9.0).abs() < 1e-9);
        assert!((photon_variance(&three) - 9.0).abs() < 1e-8);
        assert!(1.0 - three.norm_sqr() <= DEFAULT_TAIL_EPS);
        // minimal cutoff: dropping the last level breaks the budget
        let probs = three.probabilities();
        assert!(1.0 - (three.norm_sqr() - probs[three.cutoff()]) > DEFAULT_TAIL_EPS * 0.999);

        assert!(coherent_amplitudes(-1.0, 1e-12).is_err());
        assert!(coherent_amplitudes(1.0, 0.0).is_err());
    }

    #[test]
    fn squeezed_coherent_matches_series() {
        for (beta, r) in [(1.5f64, SQUEEZE_HALF), (2.0, 0.3), (0.0, -0.5)] {
            let cutoff = 120;
            // untruncated input, so the comparison only sees the squeeze
            let padded: Vec<f64> = (0..=cutoff)
                .map(|n| {
                    let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
                    let ln_p = -beta * beta + 2.0 * n as f64 * beta.ln() - ln_fact;
                    if beta == 0.0 {
                        if n == 0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        (ln_p / 2.0).exp()
                    }
                })
                .collect();
            let series = squeeze_by_series(&padded, r);
            let direct = squeezed_coherent_amplitudes(beta, r, cutoff);
            for n in 0..60 {
                assert!(
                    (series[n] - direct[n]).abs() < 1e-12,
                    "beta={beta} r={r} n={n} {} {}",
                    series[n],
                    direct[n]
                );
            }
        }
    }

    #[test]
    fn cat_examples() {
        let vac = squeezed_cat_amplitudes(SqueezedCatParams::new(0.0, 0.0), 10).unwrap();
        assert!((vac.amplitude(0).re - 1.0).abs() < 1e-15);
        assert!(vac.amplitudes()[1..].iter().all(|a| a.norm() < 1e-15));

        let p = SqueezedCatParams::new(2.0, 0.0);
        let cat = squeezed_cat_amplitudes(p, p.default_cutoff()).unwrap();
        assert_eq!(cat.amplitude(1), Complex64::new(0.0, 0.0));
        let norm = 1.0 / (2.0 * (1.0 + (-8f64).exp())).sqrt();
        let want = norm * 2.0 * (-2f64).exp() * 4.0 / 2f64.sqrt();
        assert!((cat.amplitude(2).re - want).abs() < 1e-14);

        let p = SqueezedCatParams::new(10.0, SQUEEZE_HALF);
        let cat = squeezed_cat_amplitudes(p, p.default_cutoff()).unwrap();
        assert!((mean_photon(&cat) - 200.125).abs() < 1e-6 * 200.125);
        assert!((photon_variance(&cat) - 400.0).abs() < 1e-2 * 400.0);
    }

    #[test]
    fn cat_truncation_is_reported() {
        let p = SqueezedCatParams::new(10.0, SQUEEZE_HALF);
        match squeezed_cat_amplitudes(p, 150) {
            Err(Error::Truncation { deficit, .. }) => assert!(deficit > 0.1),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn rotation_examples() {
        let s = FockVector::fock(2);
        let r = phase_rotate(&s, -FRAC_PI_4);
        assert!((r.amplitude(2) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let c = coherent_amplitudes(1.3, 1e-12).unwrap();
        assert_eq!(phase_rotate(&c, 0.0), c);
        let r = phase_rotate(&c, FRAC_PI_2);
        assert!((r.norm_sqr() - c.norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn fidelity_examples() {
        let a = coherent_amplitudes(1.1, 1e-16).unwrap();
        let b = coherent_amplitudes(0.4, 1e-16).unwrap();
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-14);
        let want = (-(1.1f64 - 0.4).powi(2)).exp();
        assert!(
            (fidelity(&a, &b).unwrap() - want).abs() < 1e-10,
            "{} {want}",
            fidelity(&a, &b).unwrap()
        );
        assert_eq!(
            fidelity(&FockVector::fock(1), &FockVector::fock(3)).unwrap(),
            0.0
        );
        let zero = FockVector::from_real(&[0.0, 0.0]);
        assert!(fidelity(&zero, &a).is_err());
    }

    #[test]
    fn number_state_moments() {
        let f = FockVector::fock(5);
        assert_eq!(mean_photon(&f), 5.0);
        assert_eq!(photon_variance(&f), 0.0);
    }

    #[test]
    fn v_moment_examples() {
        assert!((v_moment(3.0, 3.0, 0.0) - 9.0).abs() < 1e-12);
        assert!((v_moment(10.0, 10.0, SQUEEZE_HALF) - 200.125).abs() < 1e-10);
        // anti-aligned arguments are crushed by the overlap factor
        assert!(v_moment(3.0, -3.0, SQUEEZE_HALF).abs() < 1e-6);
    }

    /// Brute-force `<beta| S^† n S |alpha> = sum_n n c_n(beta) c_n(alpha)`.
    fn v_moment_numeric(beta: f64, alpha: f64, r: f64) -> f64 {
        let cut = 200;
        let cb = squeezed_coherent_amplitudes(beta, r, cut);
        let ca = squeezed_coherent_amplitudes(alpha, r, cut);
        cb.iter()
            .zip(&ca)
            .enumerate()
            .map(|(n, (x, y))| n as f64 * x * y)
            .sum()
    }

    #[test]
    fn v_moment_prefactor_is_half_the_squared_distance() {
        for (beta, alpha, r) in [
            (0.7, -0.7, SQUEEZE_HALF),
            (1.0, 0.2, 0.25),
            (0.5, -1.2, -0.6),
        ] {
            let numeric = v_moment_numeric(beta, alpha, r);
            assert!(
                (v_moment(beta, alpha, r) - numeric).abs() < 1e-12,
                "{beta} {alpha} {r}"
            );
            // the full-square exponent is measurably wrong
            let core = v_moment(beta, alpha, r) / (-(alpha - beta).powi(2) / 2.0).exp();
            let full_square = (-(alpha - beta).powi(2)).exp() * core;
            assert!((full_square - numeric).abs() > 1e-3);
        }
    }

    #[test]
    fn exact_mean_includes_interference() {
        for (beta, r) in [(0.6, SQUEEZE_HALF), (1.0, 0.2), (2.0, -0.1)] {
            let p = SqueezedCatParams::new(beta, r);
            let cat = squeezed_cat_amplitudes(p, p.default_cutoff()).unwrap();
            assert!((mean_photon(&cat) - squeezed_cat_mean_exact(p)).abs() < 1e-11);
        }
    }

    #[test]
    fn global_phase_fix() {
        let s = FockVector::new(vec![Complex64::new(0.0, 0.3), Complex64::new(0.0, -0.9)]);
        let f = s.with_fixed_global_phase();
        assert!((f.amplitude(1) - Complex64::new(0.9, 0.0)).norm() < 1e-15);
        assert!((f.amplitude(0) - Complex64::new(-0.3, 0.0)).norm() < 1e-15);
    }
}

//! Projective photon-number measurement on the pump mode.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::{self, EvolutionMode, NMState};
use crate::spectrum::EigenDecomposition;
use crate::states::FockVector;

/// Outcome probabilities below this are reported as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-300;

/// Pump reading `m` together with the collapsed signal state.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub m: usize,
    pub probability: f64,
    /// `None` for zero-probability outcomes.
    pub signal: Option<FockVector>,
}

impl MeasurementOutcome {
    pub fn is_possible(&self) -> bool {
        self.signal.is_some()
    }
}

/// Collapse on `|m>_pump`. Block `N` contributes `a(N, m)` to signal level
/// `N - 2m`.
pub fn project_pump(state: &NMState, m: usize) -> MeasurementOutcome {
    let mut probability = 0.0;
    let mut levels: Vec<(usize, Complex64)> = Vec::new();
    for (total, amps) in state.blocks() {
        if let Some(&a) = amps.get(m) {
            probability += a.norm_sqr();
            levels.push((total - 2 * m, a));
        }
    }
    if probability < ZERO_PROBABILITY {
        return MeasurementOutcome {
            m,
            probability,
            signal: None,
        };
    }
    let top = levels.iter().map(|(l, _)| *l).max().unwrap_or(0);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); top + 1];
    let scale = probability.sqrt();
    for (level, a) in levels {
        amplitudes[level] = a / scale;
    }
    MeasurementOutcome {
        m,
        probability,
        signal: Some(FockVector::new(amplitudes)),
    }
}

/// `M^n_k(tau) = chi_n chi_m exp(-i lambda_k tau)` for eigenpair `k` of
/// the block `N = 2n` held by `decomposition`.
pub fn m_coeff(
    decomposition: &EigenDecomposition,
    k: usize,
    m: usize,
    tau: f64,
) -> Result<Complex64> {
    let n = decomposition.total() / 2;
    if k >= decomposition.len() {
        return Err(Error::domain(format!(
            "eigen-index {k} outside 0..{} for N = {}",
            decomposition.len(),
            decomposition.total()
        )));
    }
    if m > n {
        return Err(Error::domain(format!(
            "pump reading m = {m} exceeds n = {n}"
        )));
    }
    let v = decomposition.vector(k);
    Ok(v[n] * v[m] * Complex64::from_polar(1.0, -decomposition.eigenvalue(k) * tau))
}

/// Transition amplitudes `A_n = sum_k M^n_k(tau)` for consecutive `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionAmplitudes {
    pub m: usize,
    pub tau: f64,
    pub first_n: usize,
    pub values: Vec<Complex64>,
}

impl TransitionAmplitudes {
    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &a)| (self.first_n + i, a))
    }

    pub fn get(&self, n: usize) -> Option<Complex64> {
        n.checked_sub(self.first_n)
            .and_then(|i| self.values.get(i))
            .copied()
    }
}

pub fn transition_amplitudes(
    n_range: std::ops::RangeInclusive<usize>,
    m: usize,
    tau: f64,
    mode: EvolutionMode,
) -> Result<TransitionAmplitudes> {
    let (first, last) = (*n_range.start(), *n_range.end());
    if m > first {
        return Err(Error::domain(format!(
            "pump reading m = {m} exceeds smallest n = {first}"
        )));
    }
    let dmode = mode.decomposition_mode();
    let values = (first..=last)
        .into_par_iter()
        .map(|n| {
            let d = evolution::decompose_block(2 * n, dmode);
            (0..d.len())
                .map(|k| m_coeff(&d, k, m, tau).expect("indices in range"))
                .sum()
        })
        .collect();
    Ok(TransitionAmplitudes {
        m,
        tau,
        first_n: first,
        values,
    })
}

/// Even/odd split of the pump photon-number distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityStatistics {
    pub p_even: f64,
    pub p_odd: f64,
    /// `per_m[m]`: probability of reading `m`.
    pub per_m: Vec<f64>,
}

pub fn parity_statistics(state: &NMState) -> ParityStatistics {
    let m_max = state.max_total().map_or(0, |n| n / 2);
    let mut per_m = vec![0.0; m_max + 1];
    for (_, amps) in state.blocks() {
        for (m, a) in amps.iter().enumerate() {
            per_m[m] += a.norm_sqr();
        }
    }
    let p_even = per_m.iter().step_by(2).sum();
    let p_odd = per_m.iter().skip(1).step_by(2).sum();
    ParityStatistics {
        p_even,
        p_odd,
        per_m,
    }
}

/// Coherent pump `beta`, evolve for `tau`, read `m` pump photons.
pub fn prepare(
    beta: f64,
    tau: f64,
    m: usize,
    mode: EvolutionMode,
    tail_eps: f64,
) -> Result<MeasurementOutcome> {
    let state = evolution::initial_state(beta, tail_eps)?;
    let evolved = evolution::evolve(&state, tau, mode)?;
    Ok(project_pump(&evolved, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{initial_state, tau_opt, DEFAULT_TAIL_EPS};
    use crate::spectrum::{build_hamiltonian, eigen_full};
    use std::collections::BTreeMap;

    #[test]
    fn untouched_pump_is_poissonian() {
        let beta = 1.8;
        let s = initial_state(beta, DEFAULT_TAIL_EPS).unwrap();
        let mu = beta * beta;
        let mut p = (-mu).exp();
        for m in 0..12 {
            let out = project_pump(&s, m);
            assert!((out.probability - p).abs() < 1e-14, "m = {m}");
            let signal = out.signal.unwrap();
            assert!((signal.amplitude(0).norm() - 1.0).abs() < 1e-14);
            assert!(signal.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
            p *= mu / (m + 1) as f64;
        }
    }

    #[test]
    fn pure_pump_fock_state() {
        let mut blocks = BTreeMap::new();
        let z = Complex64::new(0.0, 0.0);
        blocks.insert(4, vec![z, z, Complex64::new(1.0, 0.0)]);
        let s = NMState::from_blocks(blocks, 0.0).unwrap();
        let out = project_pump(&s, 2);
        assert_eq!(out.probability, 1.0);
        assert_eq!(out.signal.unwrap(), FockVector::fock(0));
        let none = project_pump(&s, 1);
        assert_eq!(none.probability, 0.0);
        assert!(!none.is_possible());
        assert!(!project_pump(&s, 7).is_possible());
    }

    #[test]
    fn m_coeff_completeness_and_orthogonality() {
        let d = eigen_full(&build_hamiltonian(20).unwrap());
        let n = 10;
        for m in 0..=n {
            let sum: Complex64 = (0..d.len()).map(|k| m_coeff(&d, k, m, 0.0).unwrap()).sum();
            let want = if m == n { 1.0 } else { 0.0 };
            assert!((sum - want).norm() < 1e-13, "m = {m}");
        }
        assert!(m_coeff(&d, d.len(), 0, 0.0).is_err());
        assert!(m_coeff(&d, 0, n + 1, 0.0).is_err());
    }

    #[test]
    fn m_coeff_null_vector_is_static() {
        let d = eigen_full(&build_hamiltonian(4).unwrap());
        let want = -(3f64.sqrt()) / 2.0 * 0.5;
        for tau in [0.0, 0.4, 3.0] {
            let c = m_coeff(&d, 1, 0, tau).unwrap();
            assert!((c - Complex64::new(want, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn transition_at_zero_time_is_delta() {
        let a = transition_amplitudes(3..=12, 3, 0.0, EvolutionMode::Full).unwrap();
        for (n, v) in a.iter() {
            let want = if n == 3 { 1.0 } else { 0.0 };
            assert!((v - want).norm() < 1e-13, "n = {n}");
        }
        assert!(transition_amplitudes(2..=5, 3, 0.1, EvolutionMode::Full).is_err());
    }

    #[test]
    fn born_rule_closure() {
        let s = initial_state(2.5, DEFAULT_TAIL_EPS).unwrap();
        let e = evolution::evolve(&s, tau_opt(2.5), EvolutionMode::Full).unwrap();
        let stats = parity_statistics(&e);
        assert!((stats.p_even + stats.p_odd - e.norm_sqr()).abs() < 1e-12);
        let total: f64 = (0..stats.per_m.len())
            .map(|m| project_pump(&e, m).probability)
            .sum();
        assert!((total - e.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn collapsed_state_is_transition_times_coherent() {
        let beta = 3.0;
        let tau = tau_opt(beta);
        let s = initial_state(beta, DEFAULT_TAIL_EPS).unwrap();
        let e = evolution::evolve(&s, tau, EvolutionMode::Full).unwrap();
        let out = project_pump(&e, 0);
        let signal = out.signal.unwrap();
        let max_n = e.max_total().unwrap() / 2;
        let a = transition_amplitudes(0..=max_n, 0, tau, EvolutionMode::Full).unwrap();
        let scale = out.probability.sqrt();
        for (n, an) in a.iter() {
            let coh = s.amplitude(2 * n, n);
            let want = an * coh / scale;
            assert!((signal.amplitude(2 * n) - want).norm() < 1e-10, "n = {n}");
        }
    }
}

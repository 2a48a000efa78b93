//! Brute-force two-mode simulator on a product Fock box.
//!
//! Slow on purpose: it knows nothing about energy blocks and serves as the
//! reference the block code is checked against on small instances.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::NMState;

/// Largest product basis the oracle accepts.
pub const MAX_STATES: usize = 2500;

/// Bound on the amplitude that can leak out of the box during evolution.
pub const LEAKAGE_BUDGET: f64 = 1e-10;

const NORM_TOLERANCE: f64 = 1e-12;

fn check_box(a: usize, b: usize) -> Result<usize> {
    let states = (a + 1)
        .checked_mul(b + 1)
        .filter(|&s| s <= MAX_STATES)
        .ok_or_else(|| Error::domain(format!("box ({a}, {b}) exceeds {MAX_STATES} states")))?;
    Ok(states)
}

/// `psi(n_a, n_b)` for `n_a <= A` (signal) and `n_b <= B` (pump).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTwoModeState {
    a: usize,
    b: usize,
    amplitudes: Vec<Complex64>,
}

impl DenseTwoModeState {
    /// `amplitudes[n_a * (B + 1) + n_b]`; must be normalized.
    pub fn new(a: usize, b: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let states = check_box(a, b)?;
        if amplitudes.len() != states {
            return Err(Error::domain(format!(
                "expected {states} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|x| x.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Precondition(format!("state norm {norm} is not 1")));
        }
        Ok(Self { a, b, amplitudes })
    }

    /// Product `|signal> (x) |pump>`; both factors must fit the box.
    pub fn product(a: usize, b: usize, signal: &[Complex64], pump: &[Complex64]) -> Result<Self> {
        if signal.len() > a + 1 || pump.len() > b + 1 {
            return Err(Error::domain("factor longer than the box"));
        }
        check_box(a, b)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); (a + 1) * (b + 1)];
        for (na, s) in signal.iter().enumerate() {
            for (nb, p) in pump.iter().enumerate() {
                amplitudes[na * (b + 1) + nb] = s * p;
            }
        }
        Self::new(a, b, amplitudes)
    }

    /// Embeds a block state. Every populated level must fit the box.
    pub fn from_nm_state(state: &NMState, a: usize, b: usize) -> Result<Self> {
        check_box(a, b)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); (a + 1) * (b + 1)];
        for (total, amps) in state.blocks() {
            for (k, &x) in amps.iter().enumerate() {
                let na = total - 2 * k;
                if na > a || k > b {
                    if x.norm_sqr() > 0.0 {
                        return Err(Error::domain(format!(
                            "level ({na}, {k}) lies outside the box"
                        )));
                    }
                    continue;
                }
                amplitudes[na * (b + 1) + k] = x;
            }
        }
        Self::new(a, b, amplitudes)
    }

    /// Regroups amplitudes into energy blocks. Odd-energy content cannot be
    /// represented and is rejected.
    pub fn to_nm_state(&self, tail_eps: f64) -> Result<NMState> {
        let mut blocks: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
        for na in 0..=self.a {
            for nb in 0..=self.b {
                let x = self.amplitude(na, nb);
                if x.norm_sqr() == 0.0 {
                    continue;
                }
                let total = na + 2 * nb;
                if total % 2 == 1 {
                    return Err(Error::Precondition(format!(
                        "odd-energy level ({na}, {nb}) is populated"
                    )));
                }
                blocks
                    .entry(total)
                    .or_insert_with(|| vec![Complex64::new(0.0, 0.0); total / 2 + 1])[nb] = x;
            }
        }
        NMState::from_blocks(blocks, tail_eps)
    }

    pub fn cutoffs(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, na: usize, nb: usize) -> Complex64 {
        if na > self.a || nb > self.b {
            return Complex64::new(0.0, 0.0);
        }
        self.amplitudes[na * (self.b + 1) + nb]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|x| x.norm_sqr()).sum()
    }

    /// `P(n_b)` for the pump mode.
    pub fn pump_marginals(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.b + 1];
        for na in 0..=self.a {
            for (nb, pb) in p.iter_mut().enumerate() {
                *pb += self.amplitude(na, nb).norm_sqr();
            }
        }
        p
    }

    /// `<n_a + 2 n_b>`.
    pub fn mean_energy(&self) -> f64 {
        let mut e = 0.0;
        for na in 0..=self.a {
            for nb in 0..=self.b {
                e += (na + 2 * nb) as f64 * self.amplitude(na, nb).norm_sqr();
            }
        }
        e
    }

    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        if self.cutoffs() != other.cutoffs() {
            return Err(Error::domain("states live in different boxes"));
        }
        let overlap: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(x, y)| x.conj() * y)
            .sum();
        Ok(overlap.norm_sqr() / (self.norm_sqr() * other.norm_sqr()))
    }
}

/// Hamiltonian restricted to the box, stored as the upper-triangle entries
/// `(row, col, value)` with `row < col`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHamiltonian {
    a: usize,
    b: usize,
    entries: Vec<(usize, usize, f64)>,
}

/// `<n_a - 2, n_b + 1| H |n_a, n_b> = sqrt(n_a (n_a - 1) (n_b + 1))` plus
/// the conjugate.
pub fn dense_hamiltonian(a: usize, b: usize) -> Result<DenseHamiltonian> {
    check_box(a, b)?;
    let mut entries = Vec::new();
    for na in 2..=a {
        for nb in 0..b {
            let from = na * (b + 1) + nb;
            let to = (na - 2) * (b + 1) + nb + 1;
            let value = ((na * (na - 1) * (nb + 1)) as f64).sqrt();
            entries.push((to.min(from), to.max(from), value));
        }
    }
    entries.sort_by_key(|e| (e.0, e.1));
    Ok(DenseHamiltonian { a, b, entries })
}

impl DenseHamiltonian {
    pub fn dim(&self) -> usize {
        (self.a + 1) * (self.b + 1)
    }

    pub fn cutoffs(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn element(&self, row: usize, col: usize) -> f64 {
        let key = (row.min(col), row.max(col));
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map_or(0.0, |i| self.entries[i].2)
    }

    /// Row-major `dim x dim` matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut m = vec![0.0; n * n];
        for &(i, j, v) in &self.entries {
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
        m
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
        y
    }

    fn max_row_sum(&self) -> f64 {
        let mut rows = vec![0.0; self.dim()];
        for &(i, j, v) in &self.entries {
            rows[i] += v.abs();
            rows[j] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Norm of the part of `H psi` that the box cuts off.
    fn leakage_rate(&self, psi: &[Complex64]) -> f64 {
        let bb = self.b + 1;
        let mut out = 0.0;
        for na in 0..=self.a {
            for nb in 0..=self.b {
                let x = psi[na * bb + nb];
                if x.norm_sqr() == 0.0 {
                    continue;
                }
                // pump gains a photon beyond the cutoff
                if na >= 2 && nb == self.b {
                    out += ((na * (na - 1) * (nb + 1)) as f64) * x.norm_sqr();
                }
                // signal gains two photons beyond the cutoff
                if nb >= 1 && na + 2 > self.a {
                    out += (((na + 2) * (na + 1) * nb) as f64) * x.norm_sqr();
                }
            }
        }
        out.sqrt()
    }
}

/// `exp(-i H tau) psi` by a Taylor series on sub-steps with `||H|| dt <= 1/2`.
///
/// The leakage bound integrates the norm of the amplitude flow out of the
/// box over the steps; exceeding [`LEAKAGE_BUDGET`] is a truncation error.
pub fn dense_evolve(state: &DenseTwoModeState, tau: f64) -> Result<DenseTwoModeState> {
    if !tau.is_finite() {
        return Err(Error::domain("tau must be finite"));
    }
    let (a, b) = state.cutoffs();
    let h = dense_hamiltonian(a, b)?;
    if tau == 0.0 {
        return Ok(state.clone());
    }
    let mut psi = state.amplitudes.clone();
    let norm = h.max_row_sum();
    let steps = ((norm * tau.abs()) / 0.5).ceil().max(1.0) as usize;
    let dt = tau / steps as f64;
    let mut leaked = 0.0;
    let mut rate = h.leakage_rate(&psi);
    for _ in 0..steps {
        let mut term = psi.clone();
        let mut next = psi.clone();
        for order in 1..200 {
            let mut t = h.apply(&term);
            let factor = Complex64::new(0.0, -dt / order as f64);
            for x in &mut t {
                *x *= factor;
            }
            let size: f64 = t.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for (n, x) in next.iter_mut().zip(&t) {
                *n += x;
            }
            term = t;
            if size < 1e-18 {
                break;
            }
        }
        psi = next;
        let end = h.leakage_rate(&psi);
        leaked += 0.5 * (rate + end) * dt.abs();
        rate = end;
    }
    if leaked > LEAKAGE_BUDGET {
        return Err(Error::Truncation {
            deficit: leaked,
            budget: LEAKAGE_BUDGET,
        });
    }
    Ok(DenseTwoModeState {
        a,
        b,
        amplitudes: psi,
    })
}

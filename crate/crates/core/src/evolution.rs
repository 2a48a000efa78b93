//! Two-mode states in the fixed-energy block representation and their
//! evolution under the down-conversion Hamiltonian.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectrum::{
    self, DecompositionMode, EigenDecomposition, SubspaceSpec, TridiagonalHamiltonian,
};
use crate::states::poisson_support;

pub use crate::states::DEFAULT_TAIL_EPS;

/// Default half-width of the central eigenvalue window.
pub const DEFAULT_N_CUT: usize = 9;

/// `a(N, k)`: amplitude of `|N - 2k>_signal |k>_pump`, stored per even `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct NMState {
    blocks: BTreeMap<usize, Vec<Complex64>>,
    tail_eps: f64,
}

impl NMState {
    /// Validates that every key is even and every block has length `N/2 + 1`.
    pub fn from_blocks(blocks: BTreeMap<usize, Vec<Complex64>>, tail_eps: f64) -> Result<Self> {
        for (&total, amps) in &blocks {
            let spec = SubspaceSpec::new(total as i64)?;
            if amps.len() != spec.dim() {
                return Err(Error::domain(format!(
                    "block N = {total} has {} amplitudes, expected {}",
                    amps.len(),
                    spec.dim()
                )));
            }
        }
        Ok(Self { blocks, tail_eps })
    }

    /// Signal vacuum times an arbitrary pump state with amplitudes
    /// `pump[n]` on `|n>_pump`.
    pub fn from_pump_amplitudes(pump: &[Complex64], tail_eps: f64) -> Self {
        let blocks = pump
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(n, &a)| {
                let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
                amps[n] = a;
                (2 * n, amps)
            })
            .collect();
        Self { blocks, tail_eps }
    }

    pub fn tail_eps(&self) -> f64 {
        self.tail_eps
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, &[Complex64])> {
        self.blocks.iter().map(|(&n, a)| (n, a.as_slice()))
    }

    pub fn block(&self, total: usize) -> Option<&[Complex64]> {
        self.blocks.get(&total).map(Vec::as_slice)
    }

    pub fn amplitude(&self, total: usize, k: usize) -> Complex64 {
        self.block(total)
            .and_then(|b| b.get(k))
            .copied()
            .unwrap_or_default()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn max_total(&self) -> Option<usize> {
        self.blocks.keys().next_back().copied()
    }

    /// `sum_k |a(N, k)|^2` per block.
    pub fn block_weights(&self) -> BTreeMap<usize, f64> {
        self.blocks
            .iter()
            .map(|(&n, a)| (n, a.iter().map(|x| x.norm_sqr()).sum()))
            .collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.block_weights().values().sum()
    }
}

/// Coherent pump `|beta>` with the signal in vacuum.
///
/// Pump levels are kept on a window centred on `beta^2`, widened
/// symmetrically until it holds at least `1 - tail_eps` of the Poisson mass.
pub fn initial_state(beta: f64, tail_eps: f64) -> Result<NMState> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!(
            "pump amplitude beta = {beta} must be >= 0"
        )));
    }
    if !(tail_eps > 0.0 && tail_eps < 1.0) {
        return Err(Error::domain(format!(
            "tail budget {tail_eps} must lie in (0, 1)"
        )));
    }
    let (lo, hi) = poisson_window(beta * beta, tail_eps);
    let (start, support) = poisson_support(beta * beta);
    let pump: Vec<Complex64> = (0..=hi)
        .map(|n| {
            let p = if n < lo || n < start {
                0.0
            } else {
                support.get(n - start).copied().unwrap_or(0.0)
            };
            Complex64::new(p.sqrt(), 0.0)
        })
        .collect();
    Ok(NMState::from_pump_amplitudes(&pump, tail_eps))
}

/// Smallest symmetric window `[centre - w, centre + w]` (clipped at 0)
/// around `round(mu)` holding `1 - tail_eps` of the Poisson(`mu`) mass.
pub(crate) fn poisson_window(mu: f64, tail_eps: f64) -> (usize, usize) {
    if mu == 0.0 {
        return (0, 0);
    }
    let (start, support) = poisson_support(mu);
    let end = start + support.len();
    let centre = mu.round() as usize;
    // prefix[i] = mass of levels below start + i, suffix likewise above
    let mut prefix = vec![0.0; support.len() + 1];
    for (i, p) in support.iter().enumerate() {
        prefix[i + 1] = prefix[i] + p;
    }
    let mut suffix = vec![0.0; support.len() + 1];
    for (i, p) in support.iter().enumerate().rev() {
        suffix[i] = suffix[i + 1] + p;
    }
    let below = |n: usize| {
        if n <= start {
            0.0
        } else {
            prefix[(n - start).min(support.len())]
        }
    };
    let above = |n: usize| {
        if n + 1 >= end {
            0.0
        } else {
            suffix[n + 1 - start.min(n + 1)]
        }
    };
    let mut w = 0usize;
    while below(centre.saturating_sub(w)) + above(centre + w) > tail_eps {
        w += 1;
    }
    (centre.saturating_sub(w), centre + w)
}

/// Which eigenpairs of each block take part in the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvolutionMode {
    /// Every eigenpair; the evolution is exactly unitary per block.
    Full,
    /// Only the `2 n_cut + 1` eigenpairs closest to zero.
    Central { n_cut: usize },
}

impl Default for EvolutionMode {
    fn default() -> Self {
        EvolutionMode::Central {
            n_cut: DEFAULT_N_CUT,
        }
    }
}

impl EvolutionMode {
    pub fn central(n_cut: usize) -> Self {
        EvolutionMode::Central { n_cut }
    }

    pub fn decomposition_mode(self) -> DecompositionMode {
        match self {
            EvolutionMode::Full => DecompositionMode::Full,
            EvolutionMode::Central { n_cut } => DecompositionMode::Central { n_cut },
        }
    }
}

type Slot = Arc<OnceLock<Arc<EigenDecomposition>>>;

/// Block decompositions shared between evolutions at different times or
/// between measurement sweeps. Each entry is computed once, even when
/// several threads ask for it concurrently.
#[derive(Debug, Default)]
pub struct SpectrumCache {
    entries: Mutex<HashMap<(usize, DecompositionMode), Slot>>,
}

impl SpectrumCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, total: usize, mode: DecompositionMode) -> Arc<EigenDecomposition> {
        let slot = {
            let mut entries = self.entries.lock().expect("spectrum cache poisoned");
            entries.entry((total, mode)).or_default().clone()
        };
        slot.get_or_init(|| Arc::new(decompose_block(total, mode)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("spectrum cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub(crate) fn decompose_block(total: usize, mode: DecompositionMode) -> EigenDecomposition {
    let spec = SubspaceSpec::new(total as i64).expect("blocks are keyed by even N");
    spectrum::decompose(&TridiagonalHamiltonian::from_spec(spec), mode)
}

/// `a <- V exp(-i Lambda tau) V^T a`
fn evolve_block(
    amps: &[Complex64],
    decomposition: &EigenDecomposition,
    tau: f64,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for (j, v) in decomposition.vectors().enumerate() {
        let projection: Complex64 = v.iter().zip(amps).map(|(x, a)| a * x).sum();
        if projection == Complex64::new(0.0, 0.0) {
            continue;
        }
        let w = projection * Complex64::from_polar(1.0, -decomposition.eigenvalue(j) * tau);
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    out
}

/// Evolves every block for dimensionless time `tau`. Decompositions are
/// computed on the fly and dropped.
pub fn evolve(state: &NMState, tau: f64, mode: EvolutionMode) -> Result<NMState> {
    evolve_inner(state, tau, mode, None)
}

/// As [`evolve`], reusing and filling `cache`.
pub fn evolve_cached(
    state: &NMState,
    tau: f64,
    mode: EvolutionMode,
    cache: &SpectrumCache,
) -> Result<NMState> {
    evolve_inner(state, tau, mode, Some(cache))
}

fn evolve_inner(
    state: &NMState,
    tau: f64,
    mode: EvolutionMode,
    cache: Option<&SpectrumCache>,
) -> Result<NMState> {
    if !tau.is_finite() {
        return Err(Error::domain(format!(
            "evolution time tau = {tau} is not finite"
        )));
    }
    if tau == 0.0 && mode == EvolutionMode::Full {
        return Ok(state.clone());
    }
    let dmode = mode.decomposition_mode();
    let blocks: Vec<(usize, Vec<Complex64>)> = state
        .blocks
        .par_iter()
        .map(|(&total, amps)| {
            let evolved = match cache {
                Some(cache) => evolve_block(amps, &cache.get(total, dmode), tau),
                None => evolve_block(amps, &decompose_block(total, dmode), tau),
            };
            (total, evolved)
        })
        .collect();
    Ok(NMState {
        blocks: blocks.into_iter().collect(),
        tail_eps: state.tail_eps,
    })
}

/// `(lambda_j, |chi^{2n,j}_n|^2)`: how the Fock state `|0>_signal |n>_pump`
/// spreads over the eigenvectors of block `N = 2n`.
pub fn overlap_spectrum(n: usize, mode: EvolutionMode) -> Vec<(f64, f64)> {
    let d = decompose_block(2 * n, mode.decomposition_mode());
    d.vectors()
        .enumerate()
        .map(|(j, v)| (d.eigenvalue(j), v[n] * v[n]))
        .collect()
}

/// Empirical interaction time maximizing the zero-photon pump outcome:
/// `1.70 / (1 + 1.16 beta)^0.84`.
pub fn tau_opt(beta: f64) -> f64 {
    const B: f64 = 1.70;
    const C: f64 = 1.16;
    const D: f64 = 0.84;
    B / (1.0 + C * beta).powf(D)
}

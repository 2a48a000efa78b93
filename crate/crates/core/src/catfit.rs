//! Fitting collapsed signal states to the squeezed even-cat family.
//!
//! The figure of merit is `|<signal| R(phi) cat(beta, r)>|^2` maximized over
//! `(beta, r, phi)`: a deterministic coarse grid picks the basin, then a
//! Nelder-Mead simplex polishes the optimum.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::{self, tau_opt, EvolutionMode};
use crate::measurement::{self, MeasurementOutcome};
use crate::states::{self, FockVector, SqueezedCatParams};

/// `-ln sqrt(2)`: squeeze parameter of the cat that matches the collapsed
/// state's mean and variance at large pump amplitude.
pub const LIMIT_SQUEEZE: f64 = -0.5 * LN_2;

/// Rotation that makes the zero-photon collapsed state real.
pub const ZERO_PHOTON_ROTATION: f64 = -FRAC_PI_4;

/// Largest odd-level probability accepted as "even parity".
pub const ODD_MASS_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatFitResult {
    pub params: SqueezedCatParams,
    /// Rotation `phi` applied to the cat, normalized to `[-pi/2, pi/2)`.
    pub phase: f64,
    pub fidelity: f64,
    pub iterations: usize,
}

/// Coarse-grid layout. Denser grids only move the starting point; the
/// refined optimum is the same.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub r_points: usize,
    pub phase_points: usize,
    /// Simplex stops once every vertex lies this close to the best one.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            r_points: 31,
            phase_points: 24,
            tolerance: 1e-8,
            max_iterations: 5000,
        }
    }
}

const R_RANGE: (f64, f64) = (-1.0, 0.5);
/// Outside this box the objective is flat (worst possible).
const R_HARD: (f64, f64) = (-2.0, 1.5);

/// Precomputed signal data for fast overlaps with real cats.
struct Objective<'a> {
    signal: &'a [Complex64],
}

impl Objective<'_> {
    fn cat(&self, beta: f64, r: f64) -> Option<Vec<f64>> {
        if !(R_HARD.0..=R_HARD.1).contains(&r) || !beta.is_finite() {
            return None;
        }
        let params = SqueezedCatParams::new(beta.abs(), r);
        let cutoff = params.default_cutoff().max(self.signal.len() - 1);
        let cat = states::squeezed_cat_amplitudes(params, cutoff).ok()?;
        Some(cat.amplitudes().iter().map(|a| a.re).collect())
    }

    /// Fidelity of the (normalized) signal with `R(phi) cat`.
    fn fidelity_with(&self, cat: &[f64], phi: f64) -> f64 {
        // only even levels are populated in the cat
        let step = Complex64::from_polar(1.0, -2.0 * phi);
        let mut rot = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, c) in self.signal.iter().step_by(2).zip(cat.iter().step_by(2)) {
            acc += s.conj() * rot * c;
            rot *= step;
        }
        acc.norm_sqr()
    }

    fn infidelity(&self, x: &[f64; 3]) -> f64 {
        match self.cat(x[0], x[1]) {
            Some(cat) => 1.0 - self.fidelity_with(&cat, x[2]),
            None => 1.0,
        }
    }
}

fn wrap_phase(phi: f64) -> f64 {
    // period pi on even-parity states
    let mut p = (phi + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    if p >= FRAC_PI_2 {
        p -= PI;
    }
    p
}

pub fn fit_squeezed_cat(signal: &FockVector) -> Result<CatFitResult> {
    fit_squeezed_cat_with(signal, &FitOptions::default())
}

pub fn fit_squeezed_cat_with(signal: &FockVector, options: &FitOptions) -> Result<CatFitResult> {
    let norm = signal.norm_sqr();
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::Precondition("cannot fit a zero signal".into()));
    }
    let signal = signal.normalized();
    let odd = signal.odd_mass();
    if odd > ODD_MASS_LIMIT {
        return Err(Error::Precondition(format!(
            "signal has odd-level probability {odd:e}; the even-cat ansatz needs <= {ODD_MASS_LIMIT:e}"
        )));
    }
    let objective = Objective {
        signal: signal.amplitudes(),
    };
    let mean = states::mean_photon(&signal);

    let mut best: ([f64; 3], f64) = ([0.0; 3], f64::INFINITY);
    let r_points = options.r_points.max(2);
    for i in 0..r_points {
        let r = R_RANGE.0 + (R_RANGE.1 - R_RANGE.0) * i as f64 / (r_points - 1) as f64;
        let beta = ((mean - r.sinh().powi(2)).max(0.0) / (-2.0 * r).exp()).sqrt();
        let Some(cat) = objective.cat(beta, r) else {
            continue;
        };
        for j in 0..options.phase_points.max(1) {
            let phi = -FRAC_PI_2 + PI * j as f64 / options.phase_points.max(1) as f64;
            let f = 1.0 - objective.fidelity_with(&cat, phi);
            let tie = (f - best.1).abs() <= 1e-15;
            if f < best.1 - 1e-15 || (tie && r.abs() < best.0[1].abs()) {
                best = ([beta, r, phi], f);
            }
        }
    }
    if !best.1.is_finite() {
        return Err(Error::Precondition(
            "no grid point produced a valid cat".into(),
        ));
    }

    let r_step = (R_RANGE.1 - R_RANGE.0) / (r_points - 1) as f64;
    let phase_step = PI / options.phase_points.max(1) as f64;
    let start = best.0;
    let steps = [0.05 * start[0].max(0.5), r_step, phase_step];
    let (x, f, iterations) = nelder_mead(
        |x| objective.infidelity(x),
        start,
        steps,
        options.tolerance,
        options.max_iterations,
    );
    Ok(CatFitResult {
        params: SqueezedCatParams::new(x[0].abs(), x[1]),
        phase: wrap_phase(x[2]),
        fidelity: 1.0 - f,
        iterations,
    })
}

/// Fidelity of `signal` with `R(phase) cat(params)`, evaluated the same way
/// the fitter does.
pub fn fit_fidelity(signal: &FockVector, params: SqueezedCatParams, phase: f64) -> Result<f64> {
    let signal = signal.normalized();
    let objective = Objective {
        signal: signal.amplitudes(),
    };
    let cat = objective
        .cat(params.beta, params.r)
        .ok_or_else(|| Error::domain("squeeze parameter outside the supported range"))?;
    Ok(objective.fidelity_with(&cat, phase))
}

/// Minimizes `f` over R^3. Returns the best vertex, its value and the
/// iteration count.
fn nelder_mead(
    f: impl Fn(&[f64; 3]) -> f64,
    start: [f64; 3],
    steps: [f64; 3],
    tolerance: f64,
    max_iterations: usize,
) -> ([f64; 3], f64, usize) {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((start, f(&start)));
    for d in 0..3 {
        let mut x = start;
        x[d] += steps[d];
        simplex.push((x, f(&x)));
    }
    let combine = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] {
        [
            a[0] + t * (b[0] - a[0]),
            a[1] + t * (b[1] - a[1]),
            a[2] + t * (b[2] - a[2]),
        ]
    };

    let mut iterations = 0;
    while iterations < max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| {
                (0..3)
                    .map(|d| (x[d] - simplex[0].0[d]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if size <= tolerance {
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; 3];
        for (x, _) in &simplex[..3] {
            for d in 0..3 {
                centroid[d] += x[d] / 3.0;
            }
        }
        let worst = simplex[3];
        let reflected = combine(&centroid, &worst.0, -ALPHA);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -GAMMA);
            let fe = f(&expanded);
            simplex[3] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[2].1 {
            simplex[3] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < worst.1 {
                let c = combine(&centroid, &reflected, RHO);
                (c, f(&c))
            } else {
                let c = combine(&centroid, &worst.0, RHO);
                (c, f(&c))
            };
            if fc < worst.1.min(fr) {
                simplex[3] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    v.0 = combine(&best, &v.0, SIGMA);
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1, iterations)
}

/// One point of the fixed-cat fidelity curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityLawPoint {
    pub beta: f64,
    pub tau: f64,
    /// Probability of reading zero pump photons.
    pub probability: f64,
    pub one_minus_f: f64,
}

/// Zero-photon collapsed state at `tau_opt(beta)` (full spectrum), rotated
/// by `-pi/4`, against the cat `(beta, -ln sqrt 2)`.
pub fn fidelity_law_point(beta: f64, tail_eps: f64) -> Result<FidelityLawPoint> {
    let tau = tau_opt(beta);
    let outcome = measurement::prepare(beta, tau, 0, EvolutionMode::Full, tail_eps)?;
    let signal = outcome
        .signal
        .as_ref()
        .ok_or_else(|| Error::Precondition("zero-photon outcome has zero probability".into()))?;
    let rotated = states::phase_rotate(signal, ZERO_PHOTON_ROTATION);
    let params = SqueezedCatParams::new(beta, LIMIT_SQUEEZE);
    let cat = states::squeezed_cat_amplitudes(params, params.default_cutoff())?;
    let fidelity = states::fidelity(&rotated, &cat)?;
    Ok(FidelityLawPoint {
        beta,
        tau,
        probability: outcome.probability,
        one_minus_f: 1.0 - fidelity,
    })
}

pub fn fidelity_law(beta_grid: &[f64], tail_eps: f64) -> Result<Vec<FidelityLawPoint>> {
    beta_grid
        .iter()
        .map(|&b| fidelity_law_point(b, tail_eps))
        .collect()
}

/// One pump reading of the per-`m` table. The fit is absent for
/// zero-probability readings.
#[derive(Debug, Clone, PartialEq)]
pub struct PerMRow {
    pub m: usize,
    pub probability: f64,
    pub fit: Option<CatFitResult>,
}

/// Evolves a coherent pump for `tau` (full spectrum) and fits the collapsed
/// signal for every reading `0..=m_max`.
pub fn per_m_characterization_at(
    beta: f64,
    tau: f64,
    m_max: usize,
    tail_eps: f64,
) -> Result<Vec<PerMRow>> {
    let state = evolution::initial_state(beta, tail_eps)?;
    let evolved = evolution::evolve(&state, tau, EvolutionMode::Full)?;
    let outcomes: Vec<MeasurementOutcome> = (0..=m_max)
        .map(|m| measurement::project_pump(&evolved, m))
        .collect();
    outcomes
        .into_par_iter()
        .map(|o| {
            let fit = match &o.signal {
                Some(signal) => Some(fit_squeezed_cat(signal)?),
                None => None,
            };
            Ok(PerMRow {
                m: o.m,
                probability: o.probability,
                fit,
            })
        })
        .collect()
}

pub fn per_m_characterization(beta: f64, m_max: usize, tail_eps: f64) -> Result<Vec<PerMRow>> {
    per_m_characterization_at(beta, tau_opt(beta), m_max, tail_eps)
}

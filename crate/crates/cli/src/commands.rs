use std::collections::BTreeMap;
use std::sync::Arc;

use nmspdc::catfit::{self, CatFitResult};
use nmspdc::evolution::{self, evolve, initial_state, tau_opt, EvolutionMode, NMState};
use nmspdc::measurement::{self, parity_statistics, project_pump, transition_amplitudes};
use nmspdc::oracle::{dense_evolve, DenseTwoModeState};
use nmspdc::spectrum::{approx_central_eigenvalue, build_hamiltonian, decompose};
use nmspdc::states::coherent_amplitudes;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Command, Figure, Readout, RunConfig, Tau};
use crate::table::{Cell, Table};
use crate::{CliError, Output};

type Res<T> = Result<T, CliError>;

pub fn execute(command: &Command, cfg: &RunConfig) -> Res<Output> {
    Ok(match command {
        Command::Eigvals { total } => Output::Table(eigvals(*total, cfg.mode)?),
        Command::Overlap { n } => Output::Table(overlap(&[*n], cfg.mode)),
        Command::Evolve { beta, tau } => {
            Output::Table(evolve_table(*beta, tau.resolve(*beta), cfg)?)
        }
        Command::Measure {
            beta,
            tau,
            m,
            parity,
        } => {
            let tau = tau.resolve(*beta);
            match (m, parity) {
                (Readout::All, _) | (_, true) => {
                    Output::Table(parity_table(&evolved(*beta, tau, cfg)?))
                }
                (Readout::One(m), false) => measure(*beta, tau, *m, cfg)?,
            }
        }
        Command::Fit { beta, tau, m } => Output::Table(sweep(&[*beta], &[*m], *tau, cfg)?),
        Command::Sweep { beta, m, tau } => {
            let ms: Vec<usize> = m.0.iter().map(|&x| x as usize).collect();
            Output::Table(sweep(&beta.0, &ms, *tau, cfg)?)
        }
        Command::Reproduce {
            figure,
            beta,
            betas,
            m_max,
        } => Output::Table(reproduce(
            *figure,
            *beta,
            betas.as_ref().map(|l| l.0.as_slice()),
            *m_max,
            cfg,
        )?),
        Command::Oracle {
            beta,
            tau,
            max_total,
        } => Output::Table(oracle(*beta, *tau, *max_total, cfg)?),
    })
}

fn evolved(beta: f64, tau: f64, cfg: &RunConfig) -> Res<NMState> {
    let state = initial_state(beta, cfg.tail_eps)?;
    Ok(evolve(&state, tau, cfg.mode)?)
}

fn eigvals(total: i64, mode: EvolutionMode) -> Res<Table> {
    let h = build_hamiltonian(total)?;
    let d = decompose(&h, mode.decomposition_mode());
    let ev = d.eigenvalues();
    let tol = 1e-9 * ev.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut t = Table::new(&["N", "j", "lambda", "approx_lambda", "rel_err"]);
    // index among non-negative eigenvalues, as used by the closed form
    let mut k = 0;
    for (j, &lambda) in ev.iter().enumerate() {
        let (approx, rel) = if lambda >= -tol {
            let approx = approx_central_eigenvalue(total, k).ok();
            k += 1;
            let exact = if lambda.abs() <= tol { 0.0 } else { lambda };
            let rel = approx.map(|a| {
                if exact == 0.0 {
                    (a - exact).abs()
                } else {
                    (a - exact).abs() / exact.abs()
                }
            });
            (approx, rel)
        } else {
            (None, None)
        };
        t.push(vec![
            Cell::Int(total),
            j.into(),
            lambda.into(),
            approx.into(),
            rel.into(),
        ]);
    }
    Ok(t)
}

fn overlap(ns: &[usize], mode: EvolutionMode) -> Table {
    let mut t = Table::new(&["n", "j", "lambda", "weight"]);
    for &n in ns {
        for (j, (lambda, w)) in evolution::overlap_spectrum(n, mode).into_iter().enumerate() {
            t.push(vec![n.into(), j.into(), lambda.into(), w.into()]);
        }
    }
    t
}

fn evolve_table(beta: f64, tau: f64, cfg: &RunConfig) -> Res<Table> {
    let state = evolved(beta, tau, cfg)?;
    let mut t = Table::new(&["N", "k", "re", "im"]);
    for (total, amps) in state.blocks() {
        for (k, a) in amps.iter().enumerate() {
            t.push(vec![total.into(), k.into(), a.re.into(), a.im.into()]);
        }
    }
    Ok(t)
}

fn parity_label(m: usize) -> Cell {
    if m.is_multiple_of(2) {
        "even".into()
    } else {
        "odd".into()
    }
}

fn parity_table(state: &NMState) -> Table {
    let stats = parity_statistics(state);
    let mut t = Table::new(&["m", "probability", "parity"]);
    for (m, p) in stats.per_m.iter().enumerate() {
        t.push(vec![m.into(), (*p).into(), parity_label(m)]);
    }
    t
}

fn measure(beta: f64, tau: f64, m: usize, cfg: &RunConfig) -> Res<Output> {
    let outcome = measurement::prepare(beta, tau, m, cfg.mode, cfg.tail_eps)?;
    let mut table = Table::new(&["m", "probability", "n", "re", "im"]);
    let signal = outcome.signal.as_ref().map(|s| s.with_fixed_global_phase());
    let levels: Vec<_> = signal
        .iter()
        .flat_map(|s| s.amplitudes().iter().copied().enumerate())
        .collect();
    for (n, a) in &levels {
        table.push(vec![
            m.into(),
            outcome.probability.into(),
            (*n).into(),
            a.re.into(),
            a.im.into(),
        ]);
    }
    let json = json!({
        "m": m,
        "beta": beta,
        "tau": tau,
        "probability": outcome.probability,
        "signal": signal.as_ref().map(|_| levels
            .iter()
            .map(|(n, a)| json!({ "n": n, "re": a.re, "im": a.im }))
            .collect::<Vec<_>>()),
    });
    Ok(Output::Document { json, table })
}

const SWEEP_COLUMNS: [&str; 8] = [
    "beta",
    "m",
    "tau",
    "probability",
    "fidelity",
    "beta_fit",
    "r_fit",
    "error",
];

fn sweep_row(
    beta: f64,
    m: usize,
    tau: f64,
    probability: Option<f64>,
    fit: Result<CatFitResult, String>,
) -> Vec<Cell> {
    let (f, b, r, err) = match fit {
        Ok(fit) => (
            Some(fit.fidelity),
            Some(fit.params.beta),
            Some(fit.params.r),
            String::new(),
        ),
        Err(e) => (None, None, None, e),
    };
    vec![
        beta.into(),
        m.into(),
        tau.into(),
        probability.into(),
        f.into(),
        b.into(),
        r.into(),
        err.into(),
    ]
}

/// One evolution per distinct beta, then one fit per cell; rows follow the
/// grid order (beta outer, m inner) whatever the completion order.
fn sweep(betas: &[f64], ms: &[usize], tau: Tau, cfg: &RunConfig) -> Res<Table> {
    let mut t = Table::new(&SWEEP_COLUMNS);
    if betas.is_empty() || ms.is_empty() {
        return Ok(t);
    }
    let states: Vec<Result<Arc<NMState>, String>> = betas
        .par_iter()
        .map(|&b| {
            evolved(b, tau.resolve(b), cfg)
                .map(Arc::new)
                .map_err(|e| e.to_string())
        })
        .collect();
    let cells: Vec<(usize, usize)> = (0..betas.len())
        .flat_map(|i| ms.iter().map(move |&m| (i, m)))
        .collect();
    let rows: Vec<Vec<Cell>> = cells
        .par_iter()
        .map(|&(i, m)| {
            let beta = betas[i];
            let tau = tau.resolve(beta);
            match &states[i] {
                Err(e) => sweep_row(beta, m, tau, None, Err(e.clone())),
                Ok(state) => {
                    let outcome = project_pump(state, m);
                    let fit = match &outcome.signal {
                        None => Err("zero-probability outcome".to_string()),
                        Some(s) => catfit::fit_squeezed_cat(s).map_err(|e| e.to_string()),
                    };
                    sweep_row(beta, m, tau, Some(outcome.probability), fit)
                }
            }
        })
        .collect();
    t.rows = rows;
    Ok(t)
}

fn m_coefficients(ns: &[usize], beta: f64, cfg: &RunConfig) -> Res<Table> {
    let tau = tau_opt(beta);
    let mut t = Table::new(&["n", "j", "lambda", "re", "im", "abs"]);
    for &n in ns {
        let d = decompose(
            &build_hamiltonian(2 * n as i64)?,
            cfg.mode.decomposition_mode(),
        );
        for j in 0..d.len() {
            let c = measurement::m_coeff(&d, j, 0, tau)?;
            t.push(vec![
                n.into(),
                j.into(),
                d.eigenvalue(j).into(),
                c.re.into(),
                c.im.into(),
                c.norm().into(),
            ]);
        }
    }
    Ok(t)
}

/// `A_n` (m = 0) at `tau_opt` next to the coherent amplitude of `|n>`,
/// over the retained pump window.
fn transition_table(beta: f64, cfg: &RunConfig) -> Res<Table> {
    let tau = tau_opt(beta);
    let window: Vec<usize> = initial_state(beta, cfg.tail_eps)?
        .blocks()
        .map(|(total, _)| total / 2)
        .collect();
    let (first, last) = (window[0], *window.last().expect("non-empty window"));
    let amps = transition_amplitudes(first..=last, 0, tau, cfg.mode)?;
    let coherent = coherent_amplitudes(beta, cfg.tail_eps)?;
    let mut t = Table::new(&["n", "re", "im", "abs", "coherent"]);
    for (n, a) in amps.iter() {
        t.push(vec![
            n.into(),
            a.re.into(),
            a.im.into(),
            a.norm().into(),
            coherent.amplitude(n).re.into(),
        ]);
    }
    Ok(t)
}

fn fidelity_law_table(betas: &[f64], cfg: &RunConfig) -> Res<Table> {
    let mut t = Table::new(&["beta", "tau", "probability", "one_minus_f", "law"]);
    for &beta in betas {
        let p = catfit::fidelity_law_point(beta, cfg.tail_eps)?;
        t.push(vec![
            beta.into(),
            p.tau.into(),
            p.probability.into(),
            p.one_minus_f.into(),
            (7e-3 / (beta * beta)).into(),
        ]);
    }
    Ok(t)
}

fn per_m_table(figure: Figure, beta: f64, m_max: usize, cfg: &RunConfig) -> Res<Table> {
    if figure == Figure::Fig6 {
        let state = evolved(beta, tau_opt(beta), cfg)?;
        let mut t = parity_table(&state);
        t.rows.truncate(m_max + 1);
        return Ok(t);
    }
    let column = match figure {
        Figure::Fig7 => "fidelity",
        Figure::Fig8 => "beta_fit",
        _ => "r_fit",
    };
    let rows = catfit::per_m_characterization(beta, m_max, cfg.tail_eps)?;
    let mut t = Table::new(&["m", "parity", "probability", column]);
    for row in rows {
        let value = row.fit.map(|f| match figure {
            Figure::Fig7 => f.fidelity,
            Figure::Fig8 => f.params.beta,
            _ => f.params.r,
        });
        t.push(vec![
            row.m.into(),
            parity_label(row.m),
            row.probability.into(),
            value.into(),
        ]);
    }
    Ok(t)
}

fn reproduce(
    figure: Figure,
    beta: Option<f64>,
    betas: Option<&[f64]>,
    m_max: usize,
    cfg: &RunConfig,
) -> Res<Table> {
    match figure {
        Figure::Fig1 => Ok(overlap(&[100, 101], cfg.mode)),
        Figure::Fig2 => m_coefficients(&[100, 101], beta.unwrap_or(10.0), cfg),
        Figure::Fig3 => transition_table(beta.unwrap_or(30.0), cfg),
        Figure::Fig4 => transition_table(beta.unwrap_or(10.0), cfg),
        Figure::Fig5 => {
            let default: Vec<f64> = (2..=10).map(|i| 2.0 * i as f64).collect();
            fidelity_law_table(betas.unwrap_or(&default), cfg)
        }
        Figure::Fig6 | Figure::Fig7 | Figure::Fig8 | Figure::Fig9 => {
            per_m_table(figure, beta.unwrap_or(8.0), m_max, cfg)
        }
    }
}

fn oracle(beta: f64, tau: f64, max_total: usize, cfg: &RunConfig) -> Res<Table> {
    let half = max_total / 2;
    let mut pump = Vec::with_capacity(half + 1);
    let mut x = (-beta * beta / 2.0).exp();
    for n in 0..=half {
        pump.push(Complex64::new(x, 0.0));
        x *= beta / ((n + 1) as f64).sqrt();
    }
    let norm = pump.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let pump: Vec<Complex64> = pump.iter().map(|a| a / norm).collect();
    let nm = NMState::from_pump_amplitudes(&pump, 0.0);
    let dense = dense_evolve(
        &DenseTwoModeState::from_nm_state(&nm, max_total, half)?,
        tau,
    )?;
    let blocks = evolve(&nm, tau, cfg.mode)?;
    let mut t = Table::new(&["m", "p_dense", "p_block", "abs_diff"]);
    let block_p: BTreeMap<usize, f64> = (0..=half)
        .map(|m| (m, project_pump(&blocks, m).probability))
        .collect();
    for (m, p) in dense.pump_marginals().into_iter().enumerate() {
        let q = block_p[&m];
        t.push(vec![m.into(), p.into(), q.into(), (p - q).abs().into()]);
    }
    Ok(t)
}

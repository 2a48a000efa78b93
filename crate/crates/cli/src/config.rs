use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nmspdc::evolution::{tau_opt, EvolutionMode};
use nmspdc::states::DEFAULT_TAIL_EPS;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "nmspdc",
    version,
    about = "SPDC with a depleting pump: spectra, evolution, pump readout and cat fits"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Output format. Defaults to csv, or json for single-outcome `measure`.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Worker threads: a positive integer or "auto".
    #[arg(long, global = true, env = "NMSPDC_THREADS", default_value = "auto")]
    pub threads: String,
    /// Keep only the 2*N_CUT+1 eigenpairs nearest zero in every block.
    #[arg(long, global = true, value_name = "N_CUT")]
    pub central: Option<usize>,
    /// Poisson mass allowed outside the retained pump window.
    #[arg(long, global = true, default_value_t = DEFAULT_TAIL_EPS)]
    pub tail_eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    Opt,
    Value(f64),
}

impl FromStr for Tau {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "opt" {
            return Ok(Tau::Opt);
        }
        s.parse()
            .map(Tau::Value)
            .map_err(|_| format!("expected a number or \"opt\", got {s:?}"))
    }
}

impl Tau {
    pub fn resolve(self, beta: f64) -> f64 {
        match self {
            Tau::Opt => tau_opt(beta),
            Tau::Value(t) => t,
        }
    }
}

/// Comma-separated numbers; `a-b` expands to the integers in between.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct List(pub Vec<f64>);

impl FromStr for List {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((lo, hi)) = part.split_once('-').filter(|(lo, _)| !lo.is_empty()) {
                let lo: u32 = lo
                    .parse()
                    .map_err(|_| format!("bad range start in {part:?}"))?;
                let hi: u32 = hi
                    .parse()
                    .map_err(|_| format!("bad range end in {part:?}"))?;
                if hi < lo {
                    return Err(format!("empty range {part:?}"));
                }
                out.extend((lo..=hi).map(f64::from));
            } else {
                out.push(part.parse().map_err(|_| format!("bad number {part:?}"))?);
            }
        }
        Ok(List(out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Readout {
    All,
    One(usize),
}

impl FromStr for Readout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(Readout::All);
        }
        s.parse()
            .map(Readout::One)
            .map_err(|_| format!("expected a non-negative integer or \"all\", got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of one energy block, with the closed-form approximation.
    Eigvals {
        /// Total energy N = n_signal + 2 n_pump (even).
        #[arg(long = "N", value_name = "N", allow_negative_numbers = true)]
        total: i64,
    },
    /// Weights of |0>_s |n>_p on the eigenvectors of block N = 2n.
    Overlap {
        #[arg(long)]
        n: usize,
    },
    /// Block amplitudes after evolving a coherent pump.
    Evolve {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value = "opt")]
        tau: Tau,
    },
    /// Pump photon-number readout and the collapsed signal state.
    Measure {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value = "opt")]
        tau: Tau,
        /// Pump reading, or "all" for the full distribution.
        #[arg(long, default_value = "0")]
        m: Readout,
        /// Emit the per-m probability table with parities.
        #[arg(long)]
        parity: bool,
    },
    /// Fit the collapsed signal state to a squeezed even cat.
    Fit {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value = "opt")]
        tau: Tau,
        #[arg(long, default_value_t = 0)]
        m: usize,
    },
    /// Fits over a (beta, m) grid, in grid order.
    Sweep {
        /// e.g. "5,8" (may be empty).
        #[arg(long, allow_hyphen_values = true)]
        beta: List,
        /// e.g. "0-10" or "0,2,4".
        #[arg(long)]
        m: List,
        #[arg(long, default_value = "opt")]
        tau: Tau,
    },
    /// Data behind one figure.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
        /// Override the figure's pump amplitude.
        #[arg(long)]
        beta: Option<f64>,
        /// Pump-amplitude grid for fig5.
        #[arg(long)]
        betas: Option<List>,
        /// Largest pump reading for fig6 to fig9.
        #[arg(long, default_value_t = 10)]
        m_max: usize,
    },
    /// Cross-check block evolution against the dense two-mode simulator.
    #[command(hide = true)]
    Oracle {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        tau: f64,
        /// Largest total energy kept (even, at most 48).
        #[arg(long, default_value_t = 12)]
        max_total: usize,
    },
}

/// Validated settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub mode: EvolutionMode,
    pub tail_eps: f64,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_beta(beta: f64) -> Result<(), CliError> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(usage(format!(
            "beta must be finite and non-negative, got {beta}"
        )))
    }
}

fn check_tau(tau: Tau) -> Result<(), CliError> {
    match tau {
        Tau::Value(t) if !t.is_finite() => Err(usage(format!("tau must be finite, got {t}"))),
        _ => Ok(()),
    }
}

impl Cli {
    /// Checks every numeric argument before any work starts.
    pub fn validate(&self) -> Result<RunConfig, CliError> {
        let g = &self.global;
        let threads = match g.threads.as_str() {
            "auto" | "" => None,
            s => match s.parse::<usize>() {
                Ok(n) if n > 0 => Some(n),
                _ => {
                    return Err(usage(format!(
                        "threads must be a positive integer or \"auto\", got {s:?}"
                    )))
                }
            },
        };
        if !(g.tail_eps > 0.0 && g.tail_eps < 1.0) {
            return Err(usage(format!(
                "tail-eps must lie in (0, 1), got {}",
                g.tail_eps
            )));
        }
        let mode = g
            .central
            .map_or(EvolutionMode::Full, EvolutionMode::central);

        match &self.command {
            Command::Eigvals { .. } | Command::Overlap { .. } => {}
            Command::Evolve { beta, tau } | Command::Fit { beta, tau, .. } => {
                check_beta(*beta)?;
                check_tau(*tau)?;
            }
            Command::Measure {
                beta,
                tau,
                m,
                parity,
            } => {
                check_beta(*beta)?;
                check_tau(*tau)?;
                if *parity && matches!(m, Readout::One(x) if *x != 0) {
                    return Err(usage("--parity reports every reading; drop --m"));
                }
            }
            Command::Sweep { beta, m, tau } => {
                beta.0.iter().try_for_each(|b| check_beta(*b))?;
                if m.0.iter().any(|x| *x < 0.0 || x.fract() != 0.0) {
                    return Err(usage("m values must be non-negative integers"));
                }
                check_tau(*tau)?;
            }
            Command::Reproduce { beta, betas, .. } => {
                if let Some(b) = beta {
                    check_beta(*b)?;
                }
                if let Some(list) = betas {
                    list.0.iter().try_for_each(|b| check_beta(*b))?;
                }
            }
            Command::Oracle {
                beta,
                tau,
                max_total,
            } => {
                check_beta(*beta)?;
                check_tau(Tau::Value(*tau))?;
                if max_total % 2 != 0 || *max_total > 48 {
                    return Err(usage("max-total must be even and at most 48"));
                }
            }
        }
        Ok(RunConfig {
            output: g.output.clone(),
            format: g.format,
            threads,
            mode,
            tail_eps: g.tail_eps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_ranges() {
        assert_eq!(
            "0-3,7".parse::<List>().unwrap().0,
            vec![0.0, 1.0, 2.0, 3.0, 7.0]
        );
        assert_eq!("5, 8.5".parse::<List>().unwrap().0, vec![5.0, 8.5]);
        assert!("".parse::<List>().unwrap().0.is_empty());
        assert!("3-1".parse::<List>().is_err());
    }

    #[test]
    fn parses_tau() {
        assert_eq!("opt".parse::<Tau>().unwrap(), Tau::Opt);
        assert_eq!("0.25".parse::<Tau>().unwrap(), Tau::Value(0.25));
        assert!("soon".parse::<Tau>().is_err());
    }
}

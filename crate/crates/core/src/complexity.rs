//! Operation counts of the bit-allocation schemes.

use std::io::Write;

use crate::bitalloc::enumerate_bset;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityScheme {
    Es,
    Crlb,
    Mmqse,
}

impl ComplexityScheme {
    pub fn name(self) -> &'static str {
        match self {
            ComplexityScheme::Es => "es",
            ComplexityScheme::Crlb => "crlb",
            ComplexityScheme::Mmqse => "mmqse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityReport {
    pub scheme: ComplexityScheme,
    pub complex_mults: u64,
    pub real_mults: u64,
    pub complex_adds: u64,
    pub real_adds: u64,
    /// Number of δ evaluations of the exhaustive search.
    pub gamma: u64,
    /// Number of K_f evaluations.
    pub mu: u64,
    /// Polynomial order used for cube roots and logarithms.
    pub t_order: u64,
}

fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

pub fn complexity_counts(
    scheme: ComplexityScheme,
    n_s: u64,
    n_b: u64,
    gamma: u64,
    mu: u64,
    t_order: u64,
) -> Result<ComplexityReport> {
    if n_s == 0 || n_b == 0 || t_order == 0 {
        return Err(Error::Domain("n_s, n_b and t_order must be at least 1".into()));
    }
    let ns2 = n_s * n_s;
    let (complex_mults, real_mults, complex_adds, real_adds) = match scheme {
        ComplexityScheme::Es => (gamma * (ns2 + 2 * n_s), 3 * ns2, gamma * ns2, 0),
        ComplexityScheme::Crlb => (0, 3 * ns2 + 3 * n_s * n_b, 0, 3 * ns2 + n_s * n_b + mu * (n_s - 1)),
        ComplexityScheme::Mmqse => (
            0,
            n_s * (3 * n_s + t_order * t_order + t_order + 1),
            0,
            2 * ns2 + n_s * (2 * t_order - 1) + 3 * (n_s - 1) * ceil_log2(n_s),
        ),
    };
    Ok(ComplexityReport {
        scheme,
        complex_mults,
        real_mults,
        complex_adds,
        real_adds,
        gamma,
        mu,
        t_order,
    })
}

/// Reports for the three searches. γ and μ come from the config when set,
/// otherwise from the size of the feasible set the config's budget admits.
pub fn complexity_for_config(cfg: &ExperimentConfig) -> Result<Vec<ComplexityReport>> {
    let measured = match (cfg.gamma, cfg.mu) {
        (Some(_), Some(_)) => 0,
        _ => enumerate_bset(cfg.n_s, cfg.n_b, &cfg.power)?.len() as u64,
    };
    let gamma = cfg.gamma.unwrap_or(measured);
    let mu = cfg.mu.unwrap_or(measured);
    [ComplexityScheme::Es, ComplexityScheme::Crlb, ComplexityScheme::Mmqse]
        .into_iter()
        .map(|s| complexity_counts(s, cfg.n_s as u64, cfg.n_b as u64, gamma, mu, cfg.t_order as u64))
        .collect()
}

pub fn write_complexity_csv<W: Write>(reports: &[ComplexityReport], n_s: usize, n_b: u8, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scheme",
        "n_s",
        "n_b",
        "gamma",
        "mu",
        "t_order",
        "complex_mults",
        "real_mults",
        "complex_adds",
        "real_adds",
    ])?;
    for r in reports {
        w.write_record([
            r.scheme.name().to_string(),
            n_s.to_string(),
            n_b.to_string(),
            r.gamma.to_string(),
            r.mu.to_string(),
            r.t_order.to_string(),
            r.complex_mults.to_string(),
            r.real_mults.to_string(),
            r.complex_adds.to_string(),
            r.real_adds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

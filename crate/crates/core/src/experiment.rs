//! SNR sweep over the configured allocation schemes.

use rayon::prelude::*;

use crate::bitalloc::{crlb_ba, enumerate_bset, es_ba, mmqse_ba, BSet, EsMetric};
use crate::channel::{generate_channel, svd_decompose, svd_decompose_with_floor};
use crate::config::{ExperimentConfig, Scheme};
use crate::error::{Error, Result};
use crate::metrics::{capacity, empirical_mse, mse_delta, LinkSetup};
use crate::quantization::{adc_power, BitVector};
use crate::report::ResultRow;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeNote {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    /// Paths kept after the singular-value floor.
    pub n_s: usize,
    /// Size of the feasible set, if the budget admits any allocation.
    pub bset_size: Option<usize>,
    /// Failures recorded per scheme and SNR point; the run continues past them.
    pub notes: Vec<SchemeNote>,
}

impl ExperimentOutput {
    /// True when every budgeted scheme was infeasible at every SNR point.
    pub fn all_infeasible(&self) -> bool {
        let mut budgeted = self
            .rows
            .iter()
            .filter(|r| r.scheme.parse::<Scheme>().is_ok_and(Scheme::is_budgeted))
            .peekable();
        budgeted.peek().is_some() && budgeted.all(|r| !r.feasible)
    }
}

pub fn snr_to_noise(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

fn substream_seed(seed: u64, point: usize, scheme: usize) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul((point * 64 + scheme + 1) as u64))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut params = cfg.channel.clone();
    params.seed = cfg.seed;
    let h = generate_channel(&params, &mut params.rng())?;
    let decomp = match cfg.sigma_floor {
        Some(floor) => svd_decompose_with_floor(&h, cfg.n_s, floor)?,
        None => svd_decompose(&h, cfg.n_s)?,
    };
    let n_s = decomp.n_s;
    let base = LinkSetup::new(&h, decomp, cfg.combiner, cfg.loading, cfg.table.clone(), 1.0, 1.0)?;
    let bset = enumerate_bset(n_s, cfg.n_b, &cfg.power);
    let bset_size = bset.as_ref().ok().map(BSet::len);

    let points: Vec<(Vec<ResultRow>, Vec<SchemeNote>)> = cfg
        .snr_db
        .par_iter()
        .enumerate()
        .map(|(i, &snr)| run_point(cfg, &base.with_noise(snr_to_noise(snr)), bset.as_ref(), i, snr))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for (r, n) in points {
        rows.extend(r);
        notes.extend(n);
    }
    Ok(ExperimentOutput {
        rows,
        n_s,
        bset_size,
        notes,
    })
}

fn run_point(
    cfg: &ExperimentConfig,
    setup: &LinkSetup,
    bset: std::result::Result<&BSet, &Error>,
    point: usize,
    snr_db: f64,
) -> Result<(Vec<ResultRow>, Vec<SchemeNote>)> {
    let n_s = setup.n_s();
    let mut rows = Vec::with_capacity(cfg.schemes.len());
    let mut notes = Vec::new();
    for (j, &scheme) in cfg.schemes.iter().enumerate() {
        let choice: Result<Option<BitVector>> = match scheme {
            Scheme::Infinite => Ok(None),
            Scheme::OneBit => Ok(Some(BitVector::uniform(1, n_s))),
            Scheme::TwoBit => Ok(Some(BitVector::uniform(2, n_s))),
            Scheme::Crlb => bset.map_err(clone_err).and_then(|b| {
                crlb_ba(&setup.decomp.sigma, &setup.loading, &setup.table, setup.sigma_n2, b, 0)
                    .map(|r| Some(r.chosen))
            }),
            Scheme::Es => bset
                .map_err(clone_err)
                .and_then(|b| es_ba(EsMetric::MseDelta, setup, b, 0).map(|r| Some(r.chosen))),
            Scheme::EsCapacity => bset
                .map_err(clone_err)
                .and_then(|b| es_ba(EsMetric::Capacity, setup, b, 0).map(|r| Some(r.chosen))),
            Scheme::Mmqse => {
                mmqse_ba(&setup.combined_rows(), cfg.n_b, &cfg.power).map(|r| Some(r.chosen))
            }
        };
        let bits = match choice {
            Ok(bits) => bits,
            Err(e) => {
                notes.push(SchemeNote {
                    snr_db,
                    scheme,
                    message: e.to_string(),
                });
                rows.push(empty_row(snr_db, scheme, n_s));
                continue;
            }
        };
        let model = setup.model(bits.as_ref())?;
        let delta = mse_delta(&model);
        let cap = match capacity(&model) {
            Ok(c) => Some(c),
            Err(e) => {
                notes.push(SchemeNote {
                    snr_db,
                    scheme,
                    message: format!("capacity: {e}"),
                });
                None
            }
        };
        let empirical = if cfg.empirical {
            Some(empirical_mse(&model, cfg.trials, substream_seed(cfg.seed, point, j))?)
        } else {
            None
        };
        let (power, feasible) = match &bits {
            Some(b) => (Some(adc_power(b, &cfg.power)), cfg.power.admits(b.as_slice())),
            None => (None, true),
        };
        rows.push(ResultRow {
            snr_db,
            scheme: scheme.name().to_string(),
            n_s,
            bits,
            delta_analytic: Some(delta),
            delta_empirical: empirical,
            capacity_bits: cap,
            adc_power_watts: power,
            feasible,
        });
    }
    Ok((rows, notes))
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::InfeasibleBudget { min_power, budget } => Error::InfeasibleBudget {
            min_power: *min_power,
            budget: *budget,
        },
        other => Error::Domain(other.to_string()),
    }
}

fn empty_row(snr_db: f64, scheme: Scheme, n_s: usize) -> ResultRow {
    ResultRow {
        snr_db,
        scheme: scheme.name().to_string(),
        n_s,
        bits: None,
        delta_analytic: None,
        delta_empirical: None,
        capacity_bits: None,
        adc_power_watts: None,
        feasible: false,
    }
}

//! Experiment configuration read from flat `key = value` files.
//!
//! ```text
//! # 8 paths, 4-bit ADCs
//! n_s = 8
//! snr_db = -10, 0, 10, 20, 30
//! schemes = one_bit, crlb, es
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::metrics::{CombinerMode, LoadingForm};
use crate::quantization::{PowerModel, QuantMode, QuantTable, MMSE_DISTORTION};

pub const DEFAULT_C_PER_STEP: f64 = 494e-15;
pub const DEFAULT_F_S: f64 = 1e9;
pub const DEFAULT_T_ORDER: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    OneBit,
    TwoBit,
    Infinite,
    /// Exhaustive search on δ.
    Es,
    /// Exhaustive search on capacity.
    EsCapacity,
    Crlb,
    Mmqse,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::OneBit,
        Scheme::TwoBit,
        Scheme::Infinite,
        Scheme::Es,
        Scheme::EsCapacity,
        Scheme::Crlb,
        Scheme::Mmqse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::OneBit => "one_bit",
            Scheme::TwoBit => "two_bit",
            Scheme::Infinite => "infinite",
            Scheme::Es => "es",
            Scheme::EsCapacity => "es_capacity",
            Scheme::Crlb => "crlb",
            Scheme::Mmqse => "mmqse",
        }
    }

    /// Whether the scheme is subject to the ADC power budget.
    pub fn is_budgeted(self) -> bool {
        self != Scheme::Infinite
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub channel: ChannelParams,
    pub n_s: usize,
    pub n_b: u8,
    pub power: PowerModel,
    pub snr_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    /// Run the Monte-Carlo δ estimate for every row.
    pub empirical: bool,
    pub seed: u64,
    pub combiner: CombinerMode,
    pub loading: LoadingForm,
    pub table: QuantTable,
    /// Drop paths with σ_i/σ_1 below this ratio.
    pub sigma_floor: Option<f64>,
    pub t_order: u32,
    /// Manual evaluation counts for the complexity report.
    pub gamma: Option<u64>,
    pub mu: Option<u64>,
}

impl ExperimentConfig {
    /// Reference link with `n_s` paths, 4-bit ADCs and a budget of 3 bits
    /// per path on average.
    pub fn reference(n_s: usize) -> Self {
        Self {
            channel: ChannelParams::reference(0),
            n_s,
            n_b: 4,
            power: PowerModel {
                c_per_step: DEFAULT_C_PER_STEP,
                f_s: DEFAULT_F_S,
                p_adc: PowerModel::budget_for_uniform(DEFAULT_C_PER_STEP, DEFAULT_F_S, n_s, 3),
            },
            snr_db: (-10..=30).step_by(5).map(f64::from).collect(),
            schemes: vec![
                Scheme::OneBit,
                Scheme::TwoBit,
                Scheme::Infinite,
                Scheme::Es,
                Scheme::Crlb,
                Scheme::Mmqse,
            ],
            trials: 1000,
            empirical: false,
            seed: 0,
            combiner: CombinerMode::Ideal,
            loading: LoadingForm::Combiner,
            table: QuantTable::default(),
            sigma_floor: None,
            t_order: DEFAULT_T_ORDER,
            gamma: None,
            mu: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.power.validate()?;
        self.table.validate()?;
        let max_paths = self.channel.array.num_tx.min(self.channel.array.num_rx);
        if self.n_s == 0 || self.n_s > max_paths {
            return Err(Error::Config(format!("n_s must be in 1..={max_paths}, got {}", self.n_s)));
        }
        if self.n_b == 0 || self.n_b > self.table.max_bits() {
            return Err(Error::Config(format!(
                "n_b must be in 1..={}, got {}",
                self.table.max_bits(),
                self.n_b
            )));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_db must be a nonempty list of finite values".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme is required".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.t_order == 0 {
            return Err(Error::Config("t_order must be at least 1".into()));
        }
        if let Some(f) = self.sigma_floor {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::Config(format!("sigma_floor must be in [0, 1), got {f}")));
            }
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }

        let n_s = match entries.get("n_s") {
            Some(v) => parse_value("n_s", v)?,
            None => 8,
        };
        let mut cfg = ExperimentConfig::reference(n_s);
        let mut p_adc = None;
        let mut table_values: BTreeMap<u8, f64> = MMSE_DISTORTION.iter().copied().collect();
        let mut table_overridden = false;
        let mut quant_mode = QuantMode::Table;
        let mut seen_schemes = BTreeSet::new();

        for (key, value) in &entries {
            let (k, v) = (key.as_str(), value.as_str());
            match k {
                "n_s" => {}
                "n_t" => cfg.channel.array.num_tx = parse_value(k, v)?,
                "n_r" => cfg.channel.array.num_rx = parse_value(k, v)?,
                "spacing" => cfg.channel.array.element_spacing = parse_value(k, v)?,
                "clusters" => cfg.channel.num_clusters = parse_value(k, v)?,
                "rays" => cfg.channel.rays_per_cluster = parse_value(k, v)?,
                "angle_spread" => cfg.channel.angle_spread = parse_value(k, v)?,
                "carrier_ghz" => cfg.channel.carrier_ghz = parse_value(k, v)?,
                "cluster_decay_db" => cfg.channel.cluster_decay_db = parse_value(k, v)?,
                "n_b" => cfg.n_b = parse_value(k, v)?,
                "c_per_step" => cfg.power.c_per_step = parse_value(k, v)?,
                "f_s" => cfg.power.f_s = parse_value(k, v)?,
                "p_adc" => p_adc = Some(parse_value(k, v)?),
                "snr_db" => cfg.snr_db = parse_list(k, v)?,
                "schemes" => {
                    cfg.schemes = parse_list(k, v)?;
                    for s in &cfg.schemes {
                        if !seen_schemes.insert(*s) {
                            return Err(Error::Config(format!("scheme `{s}` listed twice")));
                        }
                    }
                }
                "trials" => cfg.trials = parse_value(k, v)?,
                "empirical" => cfg.empirical = parse_bool(k, v)?,
                "seed" => cfg.seed = parse_value(k, v)?,
                "combiner" => {
                    cfg.combiner = match v {
                        "ideal" => CombinerMode::Ideal,
                        "factored" => CombinerMode::Factored,
                        _ => return Err(Error::Config(format!("unknown combiner `{v}`"))),
                    }
                }
                "loading" => {
                    cfg.loading = match v {
                        "combiner" => LoadingForm::Combiner,
                        "raw" => LoadingForm::Raw,
                        _ => return Err(Error::Config(format!("unknown loading form `{v}`"))),
                    }
                }
                "quant_mode" => {
                    quant_mode = match v {
                        "table" => QuantMode::Table,
                        "approximation" => QuantMode::Approximation,
                        _ => return Err(Error::Config(format!("unknown quant_mode `{v}`"))),
                    }
                }
                "sigma_floor" => cfg.sigma_floor = Some(parse_value(k, v)?),
                "t_order" => cfg.t_order = parse_value(k, v)?,
                "gamma" => cfg.gamma = Some(parse_value(k, v)?),
                "mu" => cfg.mu = Some(parse_value(k, v)?),
                _ => match k.strip_prefix("f.") {
                    Some(bits) => {
                        let b: u8 = parse_value(k, bits)?;
                        table_values.insert(b, parse_value(k, v)?);
                        table_overridden = true;
                    }
                    None => return Err(Error::Config(format!("unknown key `{k}`"))),
                },
            }
        }

        cfg.power.p_adc = p_adc.unwrap_or_else(|| {
            PowerModel::budget_for_uniform(cfg.power.c_per_step, cfg.power.f_s, cfg.n_s, 3)
        });
        cfg.table = match quant_mode {
            QuantMode::Approximation if table_overridden => {
                return Err(Error::Config("f.N overrides need quant_mode = table".into()))
            }
            QuantMode::Approximation => QuantTable::approximation(),
            QuantMode::Table => QuantTable::with_values(table_values)
                .map_err(|e| Error::Config(format!("quantizer table: {e}")))?,
        };
        cfg.channel.seed = cfg.seed;
        cfg.validate()
            .map_err(|e| match e {
                Error::Config(_) => e,
                other => Error::Config(other.to_string()),
            })?;
        Ok(cfg)
    }
}

//! Additive quantization noise model for variable-resolution ADCs.
//!
//! A b-bit quantizer on RF path i is linearized as a gain `1 − f(b)` plus an
//! uncorrelated noise of variance `f(b)(1 − f(b))·l_i`, where `f(b)` is the
//! mean-square distortion ratio of an MMSE non-uniform quantizer and `l_i`
//! the signal-plus-noise loading on that path.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Distortion ratios of the MMSE non-uniform quantizer for 1..=5 bits.
pub const MMSE_DISTORTION: [(u8, f64); 5] = [
    (1, 0.3634),
    (2, 0.1175),
    (3, 0.03454),
    (4, 0.009497),
    (5, 0.002499),
];

/// `g(b) ≈ APPROX_C · 2^(−APPROX_D·b)`.
pub const APPROX_C: f64 = 2.40667;
pub const APPROX_D: f64 = 2.0765;

/// Largest resolution accepted anywhere (keeps `2^b` exact in `f64`/`u64`).
pub const MAX_BITS: u8 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuantMode {
    #[default]
    Table,
    Approximation,
}

/// Per-path ADC resolutions, each in `1..=N_b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector(pub Vec<u8>);

impl BitVector {
    pub fn new(bits: Vec<u8>, n_b: u8) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b < 1 || b > n_b) {
            return Err(Error::Domain(format!(
                "bit resolution {b} outside 1..={n_b}"
            )));
        }
        Ok(Self(bits))
    }

    pub fn uniform(bits: u8, n_s: usize) -> Self {
        Self(vec![bits; n_s])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    /// `"1|2|3"` form used in CSV output.
    pub fn to_pipe_string(&self) -> String {
        join(&self.0, "|")
    }

    pub fn parse_pipe(s: &str) -> Result<Self> {
        s.split('|')
            .map(|t| {
                t.trim()
                    .parse::<u8>()
                    .map_err(|e| Error::Parse(format!("bad bit entry {t:?}: {e}")))
            })
            .collect::<Result<Vec<u8>>>()
            .map(Self)
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(&self.0, ","))
    }
}

fn join(bits: &[u8], sep: &str) -> String {
    bits.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(sep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantTable {
    pub f_values: BTreeMap<u8, f64>,
    pub approx_c: f64,
    pub approx_d: f64,
    pub mode: QuantMode,
}

impl Default for QuantTable {
    fn default() -> Self {
        Self {
            f_values: MMSE_DISTORTION.iter().copied().collect(),
            approx_c: APPROX_C,
            approx_d: APPROX_D,
            mode: QuantMode::Table,
        }
    }
}

impl QuantTable {
    pub fn approximation() -> Self {
        Self {
            mode: QuantMode::Approximation,
            ..Self::default()
        }
    }

    /// Table with custom `b → f(b)` entries (must be in (0,1), strictly
    /// decreasing in b).
    pub fn with_values(values: BTreeMap<u8, f64>) -> Result<Self> {
        let table = Self {
            f_values: values,
            ..Self::default()
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == QuantMode::Table && self.f_values.is_empty() {
            return Err(Error::Config("quantizer table is empty".into()));
        }
        let mut prev: Option<(u8, f64)> = None;
        for (&b, &f) in &self.f_values {
            if b == 0 || b > MAX_BITS {
                return Err(Error::Config(format!("table resolution {b} outside 1..={MAX_BITS}")));
            }
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("f({b}) = {f} is not in (0, 1)")));
            }
            if let Some((pb, pf)) = prev {
                if f >= pf {
                    return Err(Error::Config(format!(
                        "f must decrease with resolution: f({pb}) = {pf}, f({b}) = {f}"
                    )));
                }
            }
            prev = Some((b, f));
        }
        if !(self.approx_c > 0.0 && self.approx_d > 0.0) {
            return Err(Error::Config("approximation constants must be positive".into()));
        }
        Ok(())
    }

    /// Highest resolution this table can evaluate.
    pub fn max_bits(&self) -> u8 {
        match self.mode {
            QuantMode::Table => self.f_values.keys().next_back().copied().unwrap_or(0),
            QuantMode::Approximation => MAX_BITS,
        }
    }

    pub fn f_of_b(&self, b: u8) -> Result<f64> {
        if b == 0 {
            return Err(Error::UnsupportedResolution(0));
        }
        match self.mode {
            QuantMode::Table => self
                .f_values
                .get(&b)
                .copied()
                .ok_or(Error::UnsupportedResolution(b as u32)),
            QuantMode::Approximation => {
                if b > MAX_BITS {
                    return Err(Error::UnsupportedResolution(b as u32));
                }
                let g = self.approx_c * 2f64.powf(-self.approx_d * b as f64);
                Ok(g / (1.0 + g))
            }
        }
    }

    /// `g(b) = f(b)/(1 − f(b))`, quantization noise relative to the
    /// quantizer's output signal power.
    pub fn g_of_b(&self, b: u8) -> Result<f64> {
        let f = self.f_of_b(b)?;
        Ok(f / (1.0 - f))
    }
}

/// `l_i = 1 + [W_Dᴴ·diag(σ²)·W_D]_ii`, the per-RF-path loading seen by the
/// ADCs when the analog combiner is `W̃_A ≈ U·W_D`.
pub fn loading_terms(w_d: &CMat, sigma: &[f64]) -> Result<Vec<f64>> {
    if w_d.nrows() != sigma.len() {
        return Err(Error::Dimension(format!(
            "W_D has {} rows but {} singular values were given",
            w_d.nrows(),
            sigma.len()
        )));
    }
    Ok((0..w_d.ncols())
        .map(|i| {
            1.0 + w_d
                .column(i)
                .iter()
                .zip(sigma)
                .map(|(w, s)| w.norm_sqr() * s * s)
                .sum::<f64>()
        })
        .collect())
}

/// `l_i = 1 + [W_Aᴴ H (W_Aᴴ H)ᴴ]_ii` for an explicit pre-quantization
/// combiner `W_Aᴴ` (rows = RF paths).
pub fn loading_terms_raw(w_a_h: &CMat, h: &CMat) -> Result<Vec<f64>> {
    if w_a_h.ncols() != h.nrows() {
        return Err(Error::Dimension(format!(
            "combiner has {} columns but the channel has {} rows",
            w_a_h.ncols(),
            h.nrows()
        )));
    }
    let wh = w_a_h * h;
    Ok(wh.row_iter().map(|r| 1.0 + r.norm_squared()).collect())
}

/// Diagonal AQNM quantities for one bit allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct AqnmModel {
    /// Diagonal of `W_α`, entries `1 − f(b_i)`.
    pub w_alpha: Vec<f64>,
    /// Diagonal of `W_{1−α}`, entries `f(b_i)`.
    pub w_one_minus_alpha: Vec<f64>,
    /// Diagonal of `D_q²`.
    pub dq_squared: Vec<f64>,
    pub loading: Vec<f64>,
}

impl AqnmModel {
    /// Infinite resolution: unit gain, no quantization noise.
    pub fn ideal(loading: Vec<f64>) -> Self {
        let n = loading.len();
        Self {
            w_alpha: vec![1.0; n],
            w_one_minus_alpha: vec![0.0; n],
            dq_squared: vec![0.0; n],
            loading,
        }
    }

    /// Diagonal of `W_α⁻²·D_q²`, which equals `g(b_i)·l_i`.
    pub fn noise_to_gain(&self) -> Vec<f64> {
        self.w_alpha
            .iter()
            .zip(&self.dq_squared)
            .map(|(a, d)| d / (a * a))
            .collect()
    }
}

pub fn build_aqnm(bits: &BitVector, loading: &[f64], table: &QuantTable) -> Result<AqnmModel> {
    if bits.len() != loading.len() {
        return Err(Error::Dimension(format!(
            "{} bit entries for {} loading terms",
            bits.len(),
            loading.len()
        )));
    }
    let f = bits
        .as_slice()
        .iter()
        .map(|&b| table.f_of_b(b))
        .collect::<Result<Vec<f64>>>()?;
    let w_alpha: Vec<f64> = f.iter().map(|f| 1.0 - f).collect();
    let dq_squared = f
        .iter()
        .zip(loading)
        .map(|(f, l)| f * (1.0 - f) * l)
        .collect();
    Ok(AqnmModel {
        w_alpha,
        w_one_minus_alpha: f,
        dq_squared,
        loading: loading.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    /// Energy per conversion step (J).
    pub c_per_step: f64,
    /// Sampling rate (Hz).
    pub f_s: f64,
    /// ADC power budget (W).
    pub p_adc: f64,
}

impl PowerModel {
    pub fn new(c_per_step: f64, f_s: f64, p_adc: f64) -> Result<Self> {
        let pm = Self { c_per_step, f_s, p_adc };
        pm.validate()?;
        Ok(pm)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c", self.c_per_step), ("f_s", self.f_s), ("p_adc", self.p_adc)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("power model {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Budget that allows `bits_per_path` bits on every one of `n_s` paths.
    pub fn budget_for_uniform(c_per_step: f64, f_s: f64, n_s: usize, bits_per_path: u8) -> f64 {
        n_s as f64 * c_per_step * f_s * 2f64.powi(bits_per_path as i32)
    }

    /// Whether `bits` fits the budget; relative slack 1e-12 absorbs the
    /// rounding of `c·f_s`.
    pub fn admits(&self, bits: &[u8]) -> bool {
        adc_power_raw(bits, self) <= self.p_adc * (1.0 + 1e-12)
    }

    /// Cheapest possible allocation (1 bit everywhere).
    pub fn min_power(&self, n_s: usize) -> f64 {
        self.c_per_step * self.f_s * 2.0 * n_s as f64
    }
}

/// `Σ c·f_s·2^{b_i}`.
pub fn adc_power(bits: &BitVector, pm: &PowerModel) -> f64 {
    adc_power_raw(bits.as_slice(), pm)
}

pub(crate) fn adc_power_raw(bits: &[u8], pm: &PowerModel) -> f64 {
    let steps: u64 = bits.iter().map(|&b| 1u64 << b).sum();
    pm.c_per_step * pm.f_s * steps as f64
}

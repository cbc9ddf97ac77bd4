//! Link metrics for the quantized, hybrid-combined receiver.
//!
//! The received symbol vector is `y = K x + n₁` with
//! `K = W_Dᴴ W_α W_Aᴴ H_eff`, `G = W_Dᴴ W_α W_Aᴴ` and
//! `n₁ = G n + W_Dᴴ n_q`, so `Φ = E[n₁n₁ᴴ] = σ_n² G Gᴴ + W_Dᴴ D_q² W_D`.
//! `H_eff` is `U Σ` for an ideal precoder, or `H F_A F_D` for a factored one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{ChannelDecomposition, ChannelMatrix};
use crate::error::{Error, Result};
use crate::hybrid::{factor_default, HybridFactorization};
use crate::linalg::{
    c, compensated_sum, guarded_inverse, hermitian_part, log2_abs_det, log2_det_hpd, real_diag,
    CMat, CVec,
};
use crate::quantization::{build_aqnm, loading_terms, loading_terms_raw, AqnmModel, BitVector, QuantTable};

/// Linear observation model for one bit allocation.
#[derive(Debug, Clone)]
pub struct LinkModel {
    /// `K = W_Dᴴ W_α W_Aᴴ H_eff` (N_s × N_s).
    pub k_matrix: CMat,
    /// `G = W_Dᴴ W_α W_Aᴴ` (N_s × N_r).
    pub g_matrix: CMat,
    /// Post-quantization digital combiner `W_Dᴴ` (N_s × N_rs).
    pub digital: CMat,
    pub aqnm: AqnmModel,
    pub sigma_n2: f64,
    pub p: f64,
    /// Noise covariance `Φ`.
    pub phi: CMat,
}

impl LinkModel {
    pub fn new(
        k_matrix: CMat,
        g_matrix: CMat,
        digital: CMat,
        aqnm: AqnmModel,
        sigma_n2: f64,
        p: f64,
    ) -> Result<Self> {
        let n_s = k_matrix.nrows();
        if !k_matrix.is_square()
            || g_matrix.nrows() != n_s
            || digital.nrows() != n_s
            || digital.ncols() != aqnm.dq_squared.len()
        {
            return Err(Error::Dimension(format!(
                "K {:?}, G {:?}, W_Dᴴ {:?}, D_q² length {}",
                k_matrix.shape(),
                g_matrix.shape(),
                digital.shape(),
                aqnm.dq_squared.len()
            )));
        }
        if !(sigma_n2 >= 0.0) {
            return Err(Error::Domain(format!("noise power must be nonnegative, got {sigma_n2}")));
        }
        if !(p > 0.0) {
            return Err(Error::Domain(format!("symbol power must be positive, got {p}")));
        }
        let gram = &g_matrix * g_matrix.adjoint();
        Ok(Self::with_noise_gram(k_matrix, g_matrix, digital, aqnm, sigma_n2, p, &gram))
    }

    /// Same as [`LinkModel::new`] with `G Gᴴ` supplied by the caller;
    /// shapes and powers must already be checked.
    fn with_noise_gram(
        k_matrix: CMat,
        g_matrix: CMat,
        digital: CMat,
        aqnm: AqnmModel,
        sigma_n2: f64,
        p: f64,
        gram: &CMat,
    ) -> Self {
        let quant = &digital * real_diag(&aqnm.dq_squared) * digital.adjoint();
        let phi = hermitian_part(&(gram * c(sigma_n2, 0.0) + quant));
        Self {
            k_matrix,
            g_matrix,
            digital,
            aqnm,
            sigma_n2,
            p,
            phi,
        }
    }

    pub fn n_s(&self) -> usize {
        self.k_matrix.nrows()
    }
}

/// `p (K−I)(K−I)ᴴ + σ_n² G Gᴴ + W_Dᴴ D_q² W_D`, i.e. `p (K−I)(K−I)ᴴ + Φ`.
pub fn mse_matrix(model: &LinkModel) -> CMat {
    let n = model.n_s();
    let bias = &model.k_matrix - CMat::identity(n, n);
    hermitian_part(&((&bias * bias.adjoint()) * c(model.p, 0.0) + &model.phi))
}

pub fn mse_delta(model: &LinkModel) -> f64 {
    mse_matrix(model).trace().re
}

/// `(Kᴴ Φ⁻¹ K)`, the Fisher information of the linear Gaussian model.
pub fn fisher_information(model: &LinkModel) -> Result<CMat> {
    let phi_inv = guarded_inverse(&model.phi)?;
    Ok(hermitian_part(&(model.k_matrix.adjoint() * phi_inv * &model.k_matrix)))
}

/// `(Kᴴ Φ⁻¹ K)⁻¹`.
pub fn crlb(model: &LinkModel) -> Result<CMat> {
    let info = fisher_information(model)?;
    Ok(hermitian_part(&guarded_inverse(&info)?))
}

/// `N_s log₂ p + log₂ det((Kᴴ Φ⁻¹ K) + I/p)`.
pub fn capacity(model: &LinkModel) -> Result<f64> {
    let n = model.n_s();
    let info = fisher_information(model)?;
    let m = info + CMat::identity(n, n) * c(1.0 / model.p, 0.0);
    Ok(n as f64 * model.p.log2() + log2_det_hpd(&m)?)
}

/// `log₂ det(p K Kᴴ Φ⁻¹ + I)`, the mutual information before the CRLB
/// rewrite. Independent route used to cross-check [`capacity`].
pub fn capacity_mutual_information(model: &LinkModel) -> Result<f64> {
    let n = model.n_s();
    let phi_inv = guarded_inverse(&model.phi)?;
    let m = (&model.k_matrix * model.k_matrix.adjoint() * phi_inv) * c(model.p, 0.0)
        + CMat::identity(n, n);
    Ok(log2_abs_det(&m))
}

/// `log₂ det(Φ + p K Kᴴ) − log₂ det Φ`; no explicit inverse, used by the
/// exhaustive search inner loop.
pub fn capacity_det_ratio(model: &LinkModel) -> Result<f64> {
    let q = hermitian_part(&(&model.phi + (&model.k_matrix * model.k_matrix.adjoint()) * c(model.p, 0.0)));
    Ok(log2_det_hpd(&q)? - log2_det_hpd(&model.phi)?)
}

/// `q(b_i) = p σ_i² / (σ_n² + g(b_i) l_i)` for every path.
pub fn q_terms(sigma: &[f64], sigma_n2: f64, p: f64, noise_to_gain: &[f64]) -> Vec<f64> {
    sigma
        .iter()
        .zip(noise_to_gain)
        .map(|(s, gl)| p * s * s / (sigma_n2 + gl))
        .collect()
}

/// Diagonal of the CRLB for the ideal combiner structure,
/// `(σ_n² + g(b_i) l_i) / σ_i²`.
pub fn ideal_crlb_diagonal(sigma: &[f64], sigma_n2: f64, noise_to_gain: &[f64]) -> Vec<f64> {
    sigma
        .iter()
        .zip(noise_to_gain)
        .map(|(s, gl)| (sigma_n2 + gl) / (s * s))
        .collect()
}

/// Per-path capacity contribution `log₂(1 + q)`.
pub fn log_capacity_term(q: f64) -> f64 {
    q.ln_1p() / std::f64::consts::LN_2
}

/// Small-q linearization `q / ln 2` of [`log_capacity_term`].
pub fn linearized_capacity_term(q: f64) -> f64 {
    q / std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillAllocation {
    /// Power fraction per path; sums to N_s.
    pub eps: Vec<f64>,
    pub water_level: f64,
}

/// Water-filling over gains `(ρ/N_s)·σ_i²` with total `Σ ε_i = N_s`.
pub fn waterfill(sigma: &[f64], rho: f64, n_s: usize) -> Result<WaterfillAllocation> {
    if sigma.len() != n_s || n_s == 0 {
        return Err(Error::Dimension(format!(
            "{} singular values for n_s={n_s}",
            sigma.len()
        )));
    }
    if !sigma.iter().any(|&s| s > 0.0) {
        return Err(Error::Domain("water-filling needs at least one nonzero singular value".into()));
    }
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("SNR must be nonnegative, got {rho}")));
    }
    let total = n_s as f64;
    if rho == 0.0 {
        return Ok(WaterfillAllocation {
            eps: vec![1.0; n_s],
            water_level: f64::INFINITY,
        });
    }
    let gains: Vec<f64> = sigma.iter().map(|s| rho / total * s * s).collect();
    let mut order: Vec<usize> = (0..n_s).filter(|&i| gains[i] > 0.0).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));

    let mut level = 0.0;
    let mut inv_sum = 0.0;
    for (k, &i) in order.iter().enumerate() {
        inv_sum += 1.0 / gains[i];
        let candidate = (total + inv_sum) / (k + 1) as f64;
        if candidate > 1.0 / gains[i] {
            level = candidate;
        } else {
            break;
        }
    }
    let eps = gains
        .iter()
        .map(|&g| if g > 0.0 { (level - 1.0 / g).max(0.0) } else { 0.0 })
        .collect();
    Ok(WaterfillAllocation {
        eps,
        water_level: level,
    })
}

/// `Σ log₂(ε_i (ρ/N_s) σ_i² + 1)`, with `ε_i = 1` when no allocation is given.
/// `rho` is the total transmit SNR across the `n_s` streams.
pub fn capacity_inf(sigma: &[f64], rho: f64, n_s: usize, eps: Option<&WaterfillAllocation>) -> f64 {
    sigma
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let e = eps.map_or(1.0, |w| w.eps[i]);
            (e * rho / n_s as f64 * s * s).ln_1p() / std::f64::consts::LN_2
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CombinerMode {
    /// `W_Aᴴ = Uᴴ` and `H_eff = U Σ`.
    #[default]
    Ideal,
    /// `W_Aᴴ = (W̃_A W_Dᴴ)ᴴ` and `H_eff = H F_A F_D` from the hybrid factorizations.
    Factored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadingForm {
    /// `l_i = 1 + [W_Dᴴ Σ² W_D]_ii` with `W_D` from the combiner factorization.
    #[default]
    Combiner,
    /// `l_i = 1 + [W_Aᴴ H (W_Aᴴ H)ᴴ]_ii` with the model's analog combiner.
    Raw,
}

/// Everything about a link that does not depend on the bit allocation.
#[derive(Debug, Clone)]
pub struct LinkSetup {
    pub channel: CMat,
    pub decomp: ChannelDecomposition,
    pub mode: CombinerMode,
    pub loading_form: LoadingForm,
    pub combiner: HybridFactorization,
    pub precoder: Option<HybridFactorization>,
    /// Pre-quantization combiner `W_Aᴴ` (N_s × N_r).
    pub analog_combiner: CMat,
    /// `W_Aᴴ H_eff` (N_s × N_s).
    pub combined_channel: CMat,
    /// `Σ⁻¹ W_Aᴴ H_eff`; with `W_Dᴴ = Σ⁻¹ W_α⁻¹` this is `K` for every allocation.
    k_matrix: CMat,
    /// `Σ⁻¹ W_Aᴴ`, likewise `G` for every allocation.
    g_matrix: CMat,
    noise_gram: CMat,
    pub loading: Vec<f64>,
    pub table: QuantTable,
    pub sigma_n2: f64,
    pub p: f64,
}

impl LinkSetup {
    pub fn new(
        h: &ChannelMatrix,
        decomp: ChannelDecomposition,
        mode: CombinerMode,
        loading_form: LoadingForm,
        table: QuantTable,
        sigma_n2: f64,
        p: f64,
    ) -> Result<Self> {
        if decomp.u.nrows() != h.num_rx() || decomp.f_opt.nrows() != h.num_tx() {
            return Err(Error::Dimension("decomposition does not match the channel".into()));
        }
        if let Some(s) = decomp.sigma.iter().find(|&&s| !(s > 0.0)) {
            return Err(Error::Domain(format!(
                "singular value {s} is not positive; use a floor to drop dead paths"
            )));
        }
        let n_s = decomp.n_s;
        let combiner = factor_default(&decomp.u, n_s)?;
        let (precoder, analog_combiner, h_eff) = match mode {
            CombinerMode::Ideal => (None, decomp.u.adjoint(), decomp.u_sigma()),
            CombinerMode::Factored => {
                let pre = factor_default(&decomp.f_opt, n_s)?;
                let h_eff = &h.entries * pre.product();
                (Some(pre), combiner.product().adjoint(), h_eff)
            }
        };
        let loading = match loading_form {
            LoadingForm::Combiner => loading_terms(&combiner.digital.adjoint(), &decomp.sigma)?,
            LoadingForm::Raw => loading_terms_raw(&analog_combiner, &h.entries)?,
        };
        let combined_channel = &analog_combiner * h_eff;
        let inv_sigma = real_diag(&decomp.sigma.iter().map(|s| 1.0 / s).collect::<Vec<_>>());
        let k_matrix = &inv_sigma * &combined_channel;
        let g_matrix = &inv_sigma * &analog_combiner;
        let noise_gram = hermitian_part(&(&g_matrix * g_matrix.adjoint()));
        Ok(Self {
            channel: h.entries.clone(),
            decomp,
            mode,
            loading_form,
            combiner,
            precoder,
            analog_combiner,
            combined_channel,
            k_matrix,
            g_matrix,
            noise_gram,
            loading,
            table,
            sigma_n2,
            p,
        })
    }

    /// Same link at a different noise power.
    pub fn with_noise(&self, sigma_n2: f64) -> Self {
        Self {
            sigma_n2,
            ..self.clone()
        }
    }

    pub fn n_s(&self) -> usize {
        self.decomp.n_s
    }

    /// Model for `bits`, or for infinite-resolution ADCs when `None`.
    pub fn model(&self, bits: Option<&BitVector>) -> Result<LinkModel> {
        let aqnm = match bits {
            Some(b) => build_aqnm(b, &self.loading, &self.table)?,
            None => AqnmModel::ideal(self.loading.clone()),
        };
        // W_Dᴴ = Σ⁻¹ W_α⁻¹ makes K = I under the ideal structure
        let digital = real_diag(
            &self
                .decomp
                .sigma
                .iter()
                .zip(&aqnm.w_alpha)
                .map(|(s, a)| 1.0 / (s * a))
                .collect::<Vec<_>>(),
        );
        if !(self.sigma_n2 >= 0.0 && self.p > 0.0) {
            return Err(Error::Domain(format!(
                "need σ_n² ≥ 0 and p > 0, got {} and {}",
                self.sigma_n2, self.p
            )));
        }
        Ok(LinkModel::with_noise_gram(
            self.k_matrix.clone(),
            self.g_matrix.clone(),
            digital,
            aqnm,
            self.sigma_n2,
            self.p,
            &self.noise_gram,
        ))
    }

    /// Rows of the channel seen through the constant-modulus combiner,
    /// `W̃_Aᴴ H`.
    pub fn combined_rows(&self) -> CMat {
        self.combiner.analog.adjoint() * &self.channel
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> num_complex::Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(scale * re, scale * im)
}

fn real_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> num_complex::Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    c(variance.sqrt() * re, 0.0)
}

/// Noise statistics used when drawing `n` and `w` (with `n_q = D_q w`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    CircularGaussian,
    /// Real-valued Gaussian of the same variance; not circularly symmetric.
    RealGaussian,
}

fn draw_noise<R: Rng + ?Sized>(model: &LinkModel, rng: &mut R, kind: NoiseKind) -> CVec {
    let draw = |rng: &mut R, var: f64| match kind {
        NoiseKind::CircularGaussian => complex_normal(rng, var),
        NoiseKind::RealGaussian => real_normal(rng, var),
    };
    let n = CVec::from_fn(model.g_matrix.ncols(), |_, _| draw(rng, model.sigma_n2));
    let nq = CVec::from_iterator(
        model.aqnm.dq_squared.len(),
        model.aqnm.dq_squared.iter().map(|&d| draw(rng, 1.0) * d.sqrt()),
    );
    &model.g_matrix * n + &model.digital * nq
}

/// One draw of `y = K x + G n + W_Dᴴ n_q`.
pub fn simulate_rx<R: Rng + ?Sized>(x: &CVec, model: &LinkModel, rng: &mut R) -> Result<CVec> {
    if x.len() != model.n_s() {
        return Err(Error::Dimension(format!(
            "symbol vector length {} for n_s={}",
            x.len(),
            model.n_s()
        )));
    }
    Ok(&model.k_matrix * x + draw_noise(model, rng, NoiseKind::CircularGaussian))
}

const TRIAL_CHUNK: usize = 1024;

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Average of `‖y − x‖²` over `trials` draws with `x ~ CN(0, pI)`.
/// Each trial owns an RNG substream, so the result does not depend on the
/// number of worker threads.
pub fn empirical_mse(model: &LinkModel, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let n_s = model.n_s();
    let chunks: Vec<f64> = (0..trials.div_ceil(TRIAL_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let range = chunk * TRIAL_CHUNK..((chunk + 1) * TRIAL_CHUNK).min(trials);
            compensated_sum(range.map(|t| {
                let mut rng = trial_rng(seed, t);
                let x = CVec::from_fn(n_s, |_, _| complex_normal(&mut rng, model.p));
                let y = &model.k_matrix * &x + draw_noise(model, &mut rng, NoiseKind::CircularGaussian);
                (y - x).norm_squared()
            }))
        })
        .collect();
    Ok(compensated_sum(chunks) / trials as f64)
}

/// Largest `|[E n₁ n₁ᵀ]_{ij}|` estimated from `trials` noise draws.
pub fn pseudo_covariance_check(model: &LinkModel, trials: usize, seed: u64, kind: NoiseKind) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let n_s = model.n_s();
    let partials: Vec<CMat> = (0..trials.div_ceil(TRIAL_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc = CMat::zeros(n_s, n_s);
            for t in chunk * TRIAL_CHUNK..((chunk + 1) * TRIAL_CHUNK).min(trials) {
                let mut rng = trial_rng(seed, t);
                let n1 = draw_noise(model, &mut rng, kind);
                acc += &n1 * n1.transpose();
            }
            acc
        })
        .collect();
    let mut total = CMat::zeros(n_s, n_s);
    for p in partials {
        total += p;
    }
    total /= c(trials as f64, 0.0);
    Ok(total.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

//! Geometric clustered mmWave channel and its truncated SVD.
//!
//! The channel is a sum of planar-wave rays between two uniform linear
//! arrays: one deterministic line-of-sight ray of unit gain, plus scattered
//! rays with complex Gaussian gains grouped into clusters whose average power
//! drops by a fixed number of dB per cluster. Everything downstream consumes
//! only the leading singular triplets of `H`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayGeometry {
    Ula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    pub num_tx: usize,
    pub num_rx: usize,
    /// Inter-element spacing in wavelengths.
    pub element_spacing: f64,
    pub geometry: ArrayGeometry,
}

impl ArrayConfig {
    pub fn new(num_tx: usize, num_rx: usize) -> Self {
        Self {
            num_tx,
            num_rx,
            element_spacing: 0.5,
            geometry: ArrayGeometry::Ula,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_tx == 0 || self.num_rx == 0 {
            return Err(Error::Config(format!(
                "array sizes must be positive (num_tx={}, num_rx={})",
                self.num_tx, self.num_rx
            )));
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(Error::Config(format!(
                "element spacing must be positive, got {}",
                self.element_spacing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub array: ArrayConfig,
    pub num_clusters: usize,
    pub rays_per_cluster: usize,
    /// Standard deviation of ray angles around their cluster center, radians.
    pub angle_spread: f64,
    pub carrier_ghz: f64,
    /// Average power drop between consecutive clusters.
    pub cluster_decay_db: f64,
    pub seed: u64,
}

impl ChannelParams {
    /// 28 GHz line-of-sight link, 32 transmit and 64 receive ULA elements at
    /// half-wavelength spacing, two dominant clusters.
    pub fn reference(seed: u64) -> Self {
        Self {
            array: ArrayConfig::new(32, 64),
            num_clusters: 2,
            rays_per_cluster: 10,
            angle_spread: 0.2,
            carrier_ghz: 28.0,
            cluster_decay_db: 10.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if self.num_clusters == 0 || self.rays_per_cluster == 0 {
            return Err(Error::Config(
                "num_clusters and rays_per_cluster must be at least 1".into(),
            ));
        }
        if !(self.angle_spread >= 0.0 && self.angle_spread.is_finite()) {
            return Err(Error::Config(format!(
                "angle spread must be nonnegative, got {}",
                self.angle_spread
            )));
        }
        Ok(())
    }

    /// RNG stream owned by this parameter set.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// One propagation path: complex gain, angle of arrival, angle of departure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub gain: num_complex::Complex64,
    pub aoa: f64,
    pub aod: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: CMat,
}

impl ChannelMatrix {
    pub fn new(entries: CMat) -> Result<Self> {
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("channel matrix has non-finite entries".into()));
        }
        Ok(Self { entries })
    }

    pub fn num_rx(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_tx(&self) -> usize {
        self.entries.ncols()
    }

    /// `H = scale · Σ gain · a_rx(aoa) a_tx(aod)ᴴ` with
    /// `scale = √(N_t N_r / normalizing_rays)`.
    pub fn from_rays(array: &ArrayConfig, rays: &[Ray], normalizing_rays: usize) -> Result<Self> {
        array.validate()?;
        if normalizing_rays == 0 {
            return Err(Error::Config("normalizing ray count must be positive".into()));
        }
        let (nr, nt) = (array.num_rx, array.num_tx);
        let mut h = CMat::zeros(nr, nt);
        for ray in rays {
            let a_rx = ula_response(ray.aoa, nr, array.element_spacing);
            let a_tx = ula_response(ray.aod, nt, array.element_spacing);
            h += (a_rx * a_tx.adjoint()) * ray.gain;
        }
        let scale = ((nt * nr) as f64 / normalizing_rays as f64).sqrt();
        Self::new(h * c(scale, 0.0))
    }

    /// Text form: a header line `N_r N_t`, then one `re im` pair per line in
    /// row-major order. Values use the shortest round-trip representation.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.num_rx(), self.num_tx());
        for i in 0..self.num_rx() {
            for j in 0..self.num_tx() {
                let z = self.entries[(i, j)];
                let _ = writeln!(out, "{} {}", z.re, z.im);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
        };
        let nr = next_usize("row count")?;
        let nt = next_usize("column count")?;
        let values = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad entry {t:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != 2 * nr * nt {
            return Err(Error::Parse(format!(
                "expected {} numbers for a {nr}x{nt} matrix, found {}",
                2 * nr * nt,
                values.len()
            )));
        }
        let entries = CMat::from_row_iterator(
            nr,
            nt,
            values.chunks_exact(2).map(|p| c(p[0], p[1])),
        );
        Self::new(entries)
    }
}

/// Normalized ULA steering vector: entry k is `exp(j·2π·d·k·sin θ)/√n`.
pub fn ula_response(angle: f64, n_elements: usize, spacing: f64) -> CVec {
    let norm = 1.0 / (n_elements as f64).sqrt();
    let phase_step = 2.0 * PI * spacing * angle.sin();
    CVec::from_iterator(
        n_elements,
        (0..n_elements).map(|k| num_complex::Complex64::from_polar(norm, phase_step * k as f64)),
    )
}

/// Draw the rays of one channel realization.
pub fn draw_rays<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> Result<Vec<Ray>> {
    params.validate()?;
    let center = Uniform::new(-PI / 2.0, PI / 2.0).expect("valid range");
    let spread = Normal::new(0.0, params.angle_spread).expect("nonnegative spread");
    let mut rays = Vec::with_capacity(params.num_clusters * params.rays_per_cluster);
    for cluster in 0..params.num_clusters {
        let aoa_c = center.sample(rng);
        let aod_c = center.sample(rng);
        let power = 10f64.powf(-params.cluster_decay_db * cluster as f64 / 10.0);
        let amp = (power / 2.0).sqrt();
        for ray in 0..params.rays_per_cluster {
            if cluster == 0 && ray == 0 {
                rays.push(Ray {
                    gain: c(1.0, 0.0),
                    aoa: aoa_c,
                    aod: aod_c,
                });
                continue;
            }
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            rays.push(Ray {
                gain: c(amp * re, amp * im),
                aoa: aoa_c + spread.sample(rng),
                aod: aod_c + spread.sample(rng),
            });
        }
    }
    Ok(rays)
}

pub fn generate_channel<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> Result<ChannelMatrix> {
    let rays = draw_rays(params, rng)?;
    ChannelMatrix::from_rays(
        &params.array,
        &rays,
        params.num_clusters * params.rays_per_cluster,
    )
}

/// Leading singular triplets of the channel, `H ≈ U Σ F_optᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDecomposition {
    pub u: CMat,
    /// Descending singular values.
    pub sigma: Vec<f64>,
    pub f_opt: CMat,
    pub n_s: usize,
}

impl ChannelDecomposition {
    /// `U·diag(σ)·F_optᴴ`.
    pub fn reconstruct(&self) -> CMat {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.f_opt.adjoint()
    }

    /// `U·Σ`, the effective channel seen by an ideal precoder.
    pub fn u_sigma(&self) -> CMat {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us
    }
}

/// Full SVD with singular values sorted descending and each left singular
/// vector rotated so its largest-magnitude entry is real and positive.
pub fn full_svd(h: &ChannelMatrix) -> ChannelDecomposition {
    let svd = h.entries.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v_t requested").adjoint();
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));

    let k = order.len();
    let mut u_out = CMat::zeros(u.nrows(), k);
    let mut v_out = CMat::zeros(v.nrows(), k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let ucol = u.column(src);
        let mut pivot = 0;
        for i in 1..ucol.len() {
            if ucol[i].norm() > ucol[pivot].norm() {
                pivot = i;
            }
        }
        let phase = if ucol[pivot].norm() > 0.0 {
            ucol[pivot].conj() / ucol[pivot].norm()
        } else {
            c(1.0, 0.0)
        };
        u_out.set_column(dst, &(ucol * phase));
        v_out.set_column(dst, &(v.column(src) * phase));
        sigma.push(sv[src].max(0.0));
    }
    ChannelDecomposition {
        u: u_out,
        sigma,
        f_opt: v_out,
        n_s: k,
    }
}

pub fn svd_decompose(h: &ChannelMatrix, n_s: usize) -> Result<ChannelDecomposition> {
    let max_rank = h.num_rx().min(h.num_tx());
    if n_s == 0 || n_s > max_rank {
        return Err(Error::Dimension(format!(
            "n_s={n_s} must be in 1..={max_rank} for a {}x{} channel",
            h.num_rx(),
            h.num_tx()
        )));
    }
    let full = full_svd(h);
    Ok(truncate(&full, n_s))
}

/// Like [`svd_decompose`], but additionally drops trailing paths whose
/// `σ_i/σ_1` falls below `min_ratio`. At least one path is always kept.
pub fn svd_decompose_with_floor(
    h: &ChannelMatrix,
    n_s: usize,
    min_ratio: f64,
) -> Result<ChannelDecomposition> {
    let d = svd_decompose(h, n_s)?;
    let s1 = d.sigma[0];
    let kept = d
        .sigma
        .iter()
        .take_while(|&&s| s1 > 0.0 && s / s1 >= min_ratio)
        .count()
        .max(1);
    Ok(truncate(&d, kept))
}

fn truncate(d: &ChannelDecomposition, n_s: usize) -> ChannelDecomposition {
    ChannelDecomposition {
        u: d.u.columns(0, n_s).into_owned(),
        sigma: d.sigma[..n_s].to_vec(),
        f_opt: d.f_opt.columns(0, n_s).into_owned(),
        n_s,
    }
}

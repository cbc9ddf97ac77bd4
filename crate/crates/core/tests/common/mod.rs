#![allow(dead_code)]

use mimo_ba::channel::{generate_channel, svd_decompose, ArrayConfig, ChannelMatrix, ChannelParams};
use mimo_ba::linalg::{c, CMat};
use mimo_ba::metrics::{CombinerMode, LinkSetup, LoadingForm};
use mimo_ba::quantization::QuantTable;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn random_semi_unitary(rows: usize, cols: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMat::from_fn(rows, cols, |_, _| {
        c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    g.qr().q()
}

/// First `cols` columns of the unitary `rows`-point DFT.
pub fn dft_columns(rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |i, k| {
        num_complex::Complex64::from_polar(
            1.0 / (rows as f64).sqrt(),
            -2.0 * std::f64::consts::PI * (i * k) as f64 / rows as f64,
        )
    })
}

pub fn small_channel(seed: u64) -> ChannelMatrix {
    let params = ChannelParams {
        array: ArrayConfig::new(8, 16),
        num_clusters: 2,
        rays_per_cluster: 10,
        ..ChannelParams::reference(seed)
    };
    generate_channel(&params, &mut params.rng()).unwrap()
}

pub fn reference_channel(seed: u64) -> ChannelMatrix {
    let params = ChannelParams::reference(seed);
    generate_channel(&params, &mut params.rng()).unwrap()
}

pub fn link(h: &ChannelMatrix, n_s: usize, snr_db: f64, mode: CombinerMode) -> LinkSetup {
    let decomp = svd_decompose(h, n_s).unwrap();
    LinkSetup::new(
        h,
        decomp,
        mode,
        LoadingForm::Combiner,
        QuantTable::default(),
        10f64.powf(-snr_db / 10.0),
        1.0,
    )
    .unwrap()
}

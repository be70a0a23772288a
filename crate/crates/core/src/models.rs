//! Built-in test systems.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::system::StateSpaceSystem;

/// The FOM benchmark (n = 1006, SISO): three lightly damped oscillators at
/// 100, 200 and 400 rad/s plus 1000 real modes `-1, ..., -1000`.
pub fn fom() -> StateSpaceSystem {
    let n = 1006;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (k, w) in [100.0, 200.0, 400.0].into_iter().enumerate() {
        let i = 2 * k;
        a[(i, i)] = -1.0;
        a[(i + 1, i + 1)] = -1.0;
        a[(i, i + 1)] = w;
        a[(i + 1, i)] = -w;
    }
    for k in 0..1000 {
        a[(6 + k, 6 + k)] = -((k + 1) as f64);
    }
    let b = DMatrix::from_fn(n, 1, |i, _| if i < 6 { 10.0 } else { 1.0 });
    let c = b.transpose();
    StateSpaceSystem::new(a, b, c, "fom").expect("consistent by construction")
}

/// Spectrum shape for [`random_stable_system`].
#[derive(Debug, Clone, Copy)]
pub struct SpectrumSpec {
    /// Real parts are drawn log-uniformly from `[-max_decay, -min_decay]`.
    pub min_decay: f64,
    pub max_decay: f64,
    /// Fraction of the modes that come as complex-conjugate pairs.
    pub oscillatory_fraction: f64,
    /// Imaginary parts are drawn uniformly from `[0.5, max_frequency]`.
    pub max_frequency: f64,
    /// Size of the random perturbation in the eigenvector basis
    /// `S = I + coupling * G / sqrt(n)`; zero gives a block-diagonal `A`.
    pub coupling: f64,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        SpectrumSpec {
            min_decay: 0.1,
            max_decay: 10.0,
            oscillatory_fraction: 0.5,
            max_frequency: 20.0,
            coupling: 0.5,
        }
    }
}

impl SpectrumSpec {
    /// Decay rates spread over two decades, few oscillatory modes and a mild
    /// non-normal coupling: the fixed-point iterations converge from random
    /// starts on nearly every draw, which the model-level checks rely on.
    pub fn well_separated() -> Self {
        SpectrumSpec {
            min_decay: 0.5,
            max_decay: 50.0,
            oscillatory_fraction: 0.3,
            max_frequency: 10.0,
            coupling: 0.3,
        }
    }
}

/// Seeded random stable system `A = S blkdiag(...) S^{-1}` with a controlled
/// spectrum and Gaussian `B`, `C`.
pub fn random_stable_system(n: usize, m: usize, p: usize, seed: u64) -> StateSpaceSystem {
    random_system_with(n, m, p, seed, SpectrumSpec::default())
}

pub fn random_system_with(
    n: usize,
    m: usize,
    p: usize,
    seed: u64,
    spec: SpectrumSpec,
) -> StateSpaceSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (spec.min_decay.ln(), spec.max_decay.ln());
    let mut block = DMatrix::<f64>::zeros(n, n);
    let pairs = ((n as f64 * spec.oscillatory_fraction) / 2.0).floor() as usize;
    let mut i = 0;
    for _ in 0..pairs {
        let re = -rng.random_range(lo..hi).exp();
        let im = rng.random_range(0.5..spec.max_frequency.max(0.6));
        block[(i, i)] = re;
        block[(i + 1, i + 1)] = re;
        block[(i, i + 1)] = im;
        block[(i + 1, i)] = -im;
        i += 2;
    }
    while i < n {
        block[(i, i)] = -rng.random_range(lo..hi).exp();
        i += 1;
    }
    let scale = spec.coupling / (n as f64).sqrt();
    let s = DMatrix::<f64>::identity(n, n)
        + DMatrix::from_fn(n, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    let s_inv = s.clone().try_inverse().expect("near-identity basis is invertible");
    let a = &s * block * s_inv;
    let b = gaussian(&mut rng, n, m);
    let c = gaussian(&mut rng, p, n);
    StateSpaceSystem::new(a, b, c, format!("synthetic-n{n}-m{m}-p{p}-s{seed}"))
        .expect("consistent by construction")
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

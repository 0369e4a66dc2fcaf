//! Seeded generators for states, channels and distributions.
//!
//! Everything is driven by an explicit RNG so sweeps and tests are
//! reproducible from a single seed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::channels::{CQChannel, InputDistribution};
use crate::herm::{DensityOperator, HermitianOperator, C64};

fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller; exact distribution does not matter, determinism does.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn complex_gaussian_matrix(rng: &mut impl Rng, dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| C64::new(standard_normal(rng), standard_normal(rng)))
}

/// Random Hermitian operator with entries of the given scale.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize, scale: f64) -> HermitianOperator {
    let g = complex_gaussian_matrix(rng, dim);
    HermitianOperator::new(g.map(|v| v * C64::new(scale, 0.0))).expect("square by construction")
}

/// Random PSD operator (Wishart form `G G^dag`), normalized to unit trace
/// and rescaled by `scale`.
pub fn random_psd(rng: &mut impl Rng, dim: usize, scale: f64) -> HermitianOperator {
    let g = complex_gaussian_matrix(rng, dim);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    HermitianOperator::new(w.map(|v| v * C64::new(scale / tr, 0.0))).expect("square")
}

/// Random full-rank density operator.
pub fn random_density(rng: &mut impl Rng, dim: usize) -> DensityOperator {
    DensityOperator::from_noisy(&random_psd(rng, dim, 1.0), 0.0).expect("psd by construction")
}

/// Haar-ish random pure state.
pub fn random_pure(rng: &mut impl Rng, dim: usize) -> DensityOperator {
    let v = DVector::from_fn(dim, |_, _| C64::new(standard_normal(rng), standard_normal(rng)));
    DensityOperator::pure(&v).expect("nonzero with probability one")
}

/// Random classical-quantum channel with full-rank outputs.
pub fn random_cq_channel(rng: &mut impl Rng, alphabet: usize, dim: usize) -> CQChannel {
    let outputs = (0..alphabet).map(|_| random_density(rng, dim)).collect();
    CQChannel::new(outputs).expect("common dimension by construction")
}

/// Random classical-quantum channel with pure outputs.
pub fn random_pure_cq_channel(rng: &mut impl Rng, alphabet: usize, dim: usize) -> CQChannel {
    let outputs = (0..alphabet).map(|_| random_pure(rng, dim)).collect();
    CQChannel::new(outputs).expect("common dimension by construction")
}

/// Random column-stochastic matrix (`rows` outputs, `cols` inputs).
pub fn random_stochastic(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; cols]; rows];
    for c in 0..cols {
        let mut col: Vec<f64> = (0..rows).map(|_| -f64::ln(rng.gen_range(f64::MIN_POSITIVE..1.0))).collect();
        let s: f64 = col.iter().sum();
        for v in &mut col {
            *v /= s;
        }
        for (r, v) in col.into_iter().enumerate() {
            m[r][c] = v;
        }
    }
    m
}

/// Uniform (Dirichlet(1)) random point of the probability simplex.
pub fn random_simplex(rng: &mut impl Rng, k: usize) -> InputDistribution {
    let mut p: Vec<f64> = (0..k).map(|_| -f64::ln(rng.gen_range(f64::MIN_POSITIVE..1.0))).collect();
    let s: f64 = p.iter().sum();
    for v in &mut p {
        *v /= s;
    }
    InputDistribution::new(p).expect("normalized by construction")
}

//! Shared oracles for the integration suites: scalar classical
//! implementations kept independent of the library's numerical paths.

#![allow(dead_code)]

use cqns::channels::CQChannel;
use cqns::herm::{DensityOperator, HermitianOperator, C64};
use nalgebra::DMatrix;
use rand::Rng;

/// Classical Sibson objective for a column-stochastic matrix
/// (`rows` = outputs, `cols` = inputs):
/// `-(a/(1-a)) ln sum_y [sum_x p_x W(y|x)^a]^(1/a)`.
pub fn classical_sibson(p: &[f64], w: &[Vec<f64>], alpha: f64) -> f64 {
    let mut total = 0.0;
    for row in w {
        let mut inner = 0.0;
        for (x, &px) in p.iter().enumerate() {
            if px > 0.0 && row[x] > 0.0 {
                inner += px * row[x].powf(alpha);
            }
        }
        if inner > 0.0 {
            total += inner.powf(1.0 / alpha);
        }
    }
    -(alpha / (1.0 - alpha)) * total.ln()
}

/// Analytic Renyi capacity of the binary symmetric channel (uniform input
/// is optimal by symmetry).
pub fn bsc_c_alpha(delta: f64, alpha: f64) -> f64 {
    let inner = 0.5 * (delta.powf(alpha) + (1.0 - delta).powf(alpha));
    -(alpha / (1.0 - alpha)) * (2.0_f64).ln() - inner.ln() / (1.0 - alpha)
}

/// Binary entropy in nats.
pub fn binary_entropy(d: f64) -> f64 {
    if d <= 0.0 || d >= 1.0 {
        0.0
    } else {
        -d * d.ln() - (1.0 - d) * (1.0 - d).ln()
    }
}

/// Scalar sphere-packing exponent of the binary symmetric channel:
/// `sup_{alpha in (0,1]} ((1-alpha)/alpha)(C_alpha - r)` by grid search
/// with golden refinement, entirely in scalar arithmetic.
pub fn bsc_spb(delta: f64, r: f64) -> f64 {
    let f = |a: f64| (1.0 - a) / a * (bsc_c_alpha(delta, a) - r);
    let mut best_a = 1.0;
    let mut best = 0.0_f64;
    for i in 1..=2000 {
        let a = i as f64 / 2000.0;
        let v = f(a.min(1.0 - 1e-12));
        if v > best {
            best = v;
            best_a = a;
        }
    }
    let (mut lo, mut hi) = ((best_a - 1e-3).max(1e-6), (best_a + 1e-3).min(1.0 - 1e-12));
    let phi = 0.618_033_988_749_894_9;
    let (mut a1, mut a2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut v1, mut v2) = (f(a1), f(a2));
    for _ in 0..80 {
        if v1 < v2 {
            lo = a1;
            a1 = a2;
            v1 = v2;
            a2 = lo + phi * (hi - lo);
            v2 = f(a2);
        } else {
            hi = a2;
            a2 = a1;
            v2 = v1;
            a1 = hi - phi * (hi - lo);
            v1 = f(a1);
        }
    }
    best.max(v1.max(v2)).max(0.0)
}

/// Random binary-input qubit channel with nearly orthogonal, slightly
/// mixed outputs; full rank (zero order-zero capacity) with capacity
/// large enough that small blocklengths already beat the granted bit.
pub fn high_capacity_qubit_channel(rng: &mut impl Rng) -> CQChannel {
    let basis0 = cqns::random::random_pure(rng, 2);
    // An almost-orthogonal partner: rotate the orthogonal complement a bit.
    let dec = basis0.eigh().unwrap();
    let ortho = dec.eigenvectors.column(0).into_owned();
    let main = dec.eigenvectors.column(1).into_owned();
    let theta: f64 = rng.gen_range(0.05..0.20);
    let tilted = main.map(|v| v * C64::new(theta.sin(), 0.0))
        + ortho.map(|v| v * C64::new(theta.cos(), 0.0));
    let w0 = mix(&basis0, 0.02);
    let w1 = mix(&DensityOperator::pure(&tilted).unwrap(), 0.02);
    CQChannel::new(vec![w0, w1]).unwrap()
}

fn mix(rho: &DensityOperator, lam: f64) -> DensityOperator {
    let mixed = rho
        .as_herm()
        .scale(1.0 - lam)
        .add(&HermitianOperator::identity(rho.dim()).scale(lam / rho.dim() as f64))
        .unwrap();
    DensityOperator::new(mixed).unwrap()
}

/// Reorders `rho_(A B) (x) omega_(A' B')` into `(A A') (x) (B B')` so that
/// mutual-information additivity can be checked on the joint system.
pub fn reorder_bipartite_product(
    rho: &DensityOperator,
    dims_rho: (usize, usize),
    omega: &DensityOperator,
    dims_omega: (usize, usize),
) -> DensityOperator {
    let (da, db) = dims_rho;
    let (dc, dd) = dims_omega;
    let n = da * db * dc * dd;
    let raw = rho.kron(omega);
    // Input index ((a b)(a' b')); output index ((a a')(b b')).
    let to_output = |i: usize| -> usize {
        let bp = i % dd;
        let ap = (i / dd) % dc;
        let b = (i / (dd * dc)) % db;
        let a = i / (dd * dc * db);
        ((a * dc + ap) * db + b) * dd + bp
    };
    let mut out = DMatrix::zeros(n, n);
    let m = raw.matrix();
    for i in 0..n {
        for j in 0..n {
            out[(to_output(i), to_output(j))] = m[(i, j)];
        }
    }
    DensityOperator::new(HermitianOperator::new(out).unwrap()).unwrap()
}

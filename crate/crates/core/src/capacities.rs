//! Renyi capacities of classical-quantum channels via the quantum Sibson
//! identity, the Holevo capacity, the order-zero limit, and two critical
//! rates.
//!
//! For `alpha` in `(0,1)` the inner minimization over output states has
//! the closed form
//!
//! ```text
//! C_a(p, W) = -(a / (1-a)) log tr[(sum_x p_x W_x^a)^(1/a)]
//! ```
//!
//! with minimizer proportional to `(sum_x p_x W_x^a)^(1/a)`. The outer
//! supremum over input distributions is solved by projected-gradient
//! ascent with multi-start; the returned point carries a saddle
//! certificate `max_x D_a(W_x || sigma*) - value`, which upper-bounds the
//! optimality gap because `C_a(W) <= max_x D_a(W_x || sigma)` for every
//! output state `sigma`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channels::{CQChannel, InputDistribution};
use crate::divergences;
use crate::herm::{DensityOperator, HermitianOperator};
use crate::{Error, Result};

/// A capacity evaluation with its optimizing input distribution, the
/// inner minimizing output state, and a saddle certificate.
#[derive(Debug, Clone)]
pub struct CapacityResult {
    pub alpha: f64,
    pub value: f64,
    pub argmax_p: InputDistribution,
    pub inner_sigma: DensityOperator,
    /// `max_x D_alpha(W_x || sigma) - value`; values at the optimizer
    /// tolerance certify global optimality.
    pub saddle_gap: f64,
    pub certified: bool,
}

/// Log-domain evaluation of `ln tr[A(p)^(1/alpha)]` where
/// `A(p) = sum_x p_x W_x^alpha`; log-sum-exp keeps small `alpha` stable.
fn log_trace_inner(powers: &[HermitianOperator], p: &[f64], alpha: f64) -> Result<f64> {
    let mut acc = HermitianOperator::zeros(powers[0].dim());
    for (w, &px) in powers.iter().zip(p) {
        if px > 0.0 {
            acc = acc.add(&w.scale(px))?;
        }
    }
    let ev = acc.eigh()?.eigenvalues;
    let lmax = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lmax <= 0.0 {
        return Err(Error::NumericalFailure("vanishing inner operator".into()));
    }
    let inv = 1.0 / alpha;
    let top = inv * lmax.ln();
    let mut s = 0.0;
    for &l in &ev {
        if l > 0.0 {
            s += (inv * l.ln() - top).exp();
        }
    }
    Ok(top + s.ln())
}

/// Sibson objective `C_alpha(p, W) = inf_sigma D_alpha(p o W || p (x) sigma)`
/// in closed form, `alpha` in `(0, 1)`.
pub fn sibson_objective(p: &InputDistribution, w: &CQChannel, alpha: f64) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("sibson objective needs alpha in (0,1), got {alpha}")));
    }
    if p.len() != w.alphabet_size() {
        return Err(Error::DimensionMismatch(p.len(), w.alphabet_size()));
    }
    let powers: Vec<HermitianOperator> =
        w.outputs().iter().map(|o| o.as_herm().power_psd(alpha)).collect::<Result<_>>()?;
    let lt = log_trace_inner(&powers, p.probabilities(), alpha)?;
    Ok(-(alpha / (1.0 - alpha)) * lt)
}

/// Inner minimizer `sigma(p) = A(p)^(1/alpha) / tr[...]`, normalized in
/// the log domain so small `alpha` does not underflow.
pub fn sibson_minimizer(p: &InputDistribution, w: &CQChannel, alpha: f64) -> Result<DensityOperator> {
    let powers: Vec<HermitianOperator> =
        w.outputs().iter().map(|o| o.as_herm().power_psd(alpha)).collect::<Result<_>>()?;
    let mut acc = HermitianOperator::zeros(w.dim());
    for (wp, &px) in powers.iter().zip(p.probabilities()) {
        if px > 0.0 {
            acc = acc.add(&wp.scale(px))?;
        }
    }
    let dec = acc.eigh()?;
    let lmax = dec.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    if lmax <= 0.0 {
        return Err(Error::NumericalFailure("vanishing inner operator".into()));
    }
    let cutoff = crate::herm::SUPPORT_CUTOFF * lmax;
    let log_max = lmax.ln();
    let unnorm = dec.map(|l| if l > cutoff { ((l.ln() - log_max) / alpha).exp() } else { 0.0 });
    DensityOperator::from_noisy(&unnorm, 1e-12)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let s: f64 = out.iter().sum();
    if s > 0.0 {
        for x in &mut out {
            *x /= s;
        }
    }
    out
}

fn ascend_sibson(
    w: &CQChannel,
    alpha: f64,
    start: &[f64],
    powers: &[HermitianOperator],
) -> Result<(f64, Vec<f64>)> {
    let k = w.alphabet_size();
    let obj = |p: &[f64]| -> Result<f64> {
        Ok(-(alpha / (1.0 - alpha)) * log_trace_inner(powers, p, alpha)?)
    };
    let mut p: Vec<f64> = start.to_vec();
    let mut val = obj(&p)?;
    let mut eta = 0.5;
    for _ in 0..800 {
        // d/dp_x ln tr A^(1/a) = tr(W_x^a A^((1-a)/a)) / (a tr A^(1/a)).
        // Both traces underflow for small alpha, so work with spectral
        // ratios r_i = a_i / a_max, for which the quotient is
        // sum_i r_i^((1-a)/a) m^x_i / (a a_max sum_i r_i^(1/a)).
        let mut acc = HermitianOperator::zeros(w.dim());
        for (wp, &px) in powers.iter().zip(&p) {
            if px > 0.0 {
                acc = acc.add(&wp.scale(px))?;
            }
        }
        let dec = acc.eigh()?;
        let a_max = dec.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        if a_max <= 0.0 {
            return Err(Error::NumericalFailure("vanishing inner operator".into()));
        }
        let d = w.dim();
        let mut num_pow = vec![0.0; d];
        let mut den = 0.0;
        for (i, &a) in dec.eigenvalues.iter().enumerate() {
            if a > 0.0 {
                let r = a / a_max;
                num_pow[i] = r.powf((1.0 - alpha) / alpha);
                den += r.powf(1.0 / alpha);
            }
        }
        let mut grad = vec![0.0; k];
        let u = &dec.eigenvectors;
        for (x, wp) in powers.iter().enumerate() {
            let rotated = u.adjoint() * wp.matrix() * u;
            let mut num = 0.0;
            for i in 0..d {
                num += num_pow[i] * rotated[(i, i)].re;
            }
            grad[x] = -(alpha / (1.0 - alpha)) * num / (alpha * a_max * den);
        }
        let mut improved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = project_simplex(
                &p.iter().zip(&grad).map(|(pi, gi)| pi + eta * gi).collect::<Vec<f64>>(),
            );
            let vc = obj(&cand)?;
            if vc > val + 1e-14 {
                let gain = vc - val;
                p = cand;
                val = vc;
                improved = true;
                eta = (eta * 1.5).min(16.0);
                if gain < 1e-11 {
                    return Ok((val, p));
                }
                break;
            }
            eta *= 0.5;
            if eta < 1e-10 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    Ok((val, p))
}

fn normalize(p: &[f64]) -> Vec<f64> {
    let s: f64 = p.iter().map(|v| v.max(0.0)).sum();
    p.iter().map(|v| v.max(0.0) / s).collect()
}

/// Renyi capacity `C_alpha(W) = sup_p inf_sigma D_alpha(p o W || p (x) sigma)`
/// for `alpha` in `(0, 1]`; `alpha = 1` dispatches to [`holevo_capacity`].
///
/// Projected-gradient ascent with backtracking from five starts (uniform
/// plus four Dirichlet samples).
pub fn renyi_capacity(w: &CQChannel, alpha: f64, seed: u64) -> Result<CapacityResult> {
    if !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("renyi capacity needs alpha in (0,1], got {alpha}")));
    }
    if alpha == 1.0 {
        return holevo_capacity(w);
    }
    let k = w.alphabet_size();
    let powers: Vec<HermitianOperator> =
        w.outputs().iter().map(|o| o.as_herm().power_psd(alpha)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51b5);
    let mut starts = vec![vec![1.0 / k as f64; k]];
    for _ in 0..4 {
        starts.push(crate::random::random_simplex(&mut rng, k).probabilities().to_vec());
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in &starts {
        let (v, p) = ascend_sibson(w, alpha, s, &powers)?;
        if best.as_ref().map(|(bv, _)| v > *bv).unwrap_or(true) {
            best = Some((v, p));
        }
    }
    let (value, p) = best.expect("non-empty starts");
    let argmax_p = InputDistribution::new(normalize(&p))?;
    let inner_sigma = sibson_minimizer(&argmax_p, w, alpha)?;
    let mut worst = f64::NEG_INFINITY;
    for x in 0..k {
        let d = divergences::petz_divergence(w.output(x), inner_sigma.as_herm(), alpha)?.value;
        worst = worst.max(d);
    }
    let saddle_gap = worst - value;
    Ok(CapacityResult { alpha, value, argmax_p, inner_sigma, saddle_gap, certified: saddle_gap <= 1e-5 })
}

/// Holevo capacity by Blahut-Arimoto style alternating ascent; terminates
/// when the equalizer upper bound meets the running lower bound.
pub fn holevo_capacity(w: &CQChannel) -> Result<CapacityResult> {
    let k = w.alphabet_size();
    let mut p = vec![1.0 / k as f64; k];
    let mut value = 0.0;
    let mut sigma = w.average_output(&InputDistribution::new(p.clone())?)?;
    let tol = 1e-9;
    for _ in 0..20_000 {
        let dist = InputDistribution::new(normalize(&p))?;
        sigma = w.average_output(&dist)?;
        let mut d = vec![0.0; k];
        for x in 0..k {
            d[x] = divergences::relative_entropy(w.output(x), sigma.as_herm())?.value;
        }
        let lower: f64 = dist.probabilities().iter().zip(&d).map(|(pi, di)| pi * di).sum();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        value = lower;
        if upper - lower < tol {
            break;
        }
        let mut next: Vec<f64> =
            dist.probabilities().iter().zip(&d).map(|(pi, di)| pi * (di - upper).exp()).collect();
        let s: f64 = next.iter().sum();
        for v in &mut next {
            *v /= s;
        }
        p = next;
    }
    let argmax_p = InputDistribution::new(normalize(&p))?;
    let mut worst = f64::NEG_INFINITY;
    for x in 0..k {
        worst = worst.max(divergences::relative_entropy(w.output(x), sigma.as_herm())?.value);
    }
    let saddle_gap = worst - value;
    Ok(CapacityResult {
        alpha: 1.0,
        value,
        argmax_p,
        inner_sigma: sigma,
        saddle_gap,
        certified: saddle_gap <= 1e-6,
    })
}

/// Order-zero capacity estimate with its extrapolation error.
#[derive(Debug, Clone, Copy)]
pub struct C0Estimate {
    pub value: f64,
    pub error_estimate: f64,
}

/// `C_0(W)` as the `alpha -> 0` limit of the Renyi capacity, computed on
/// the grid `{0.05, 0.02, 0.01, 0.005}` with Richardson (polynomial)
/// extrapolation to zero. The error estimate is the difference between
/// the last two extrapolation orders.
pub fn c0_capacity(w: &CQChannel, seed: u64) -> Result<C0Estimate> {
    let alphas = [0.05, 0.02, 0.01, 0.005];
    let mut tableau: Vec<f64> = Vec::with_capacity(alphas.len());
    for (i, &a) in alphas.iter().enumerate() {
        tableau.push(renyi_capacity(w, a, seed.wrapping_add(i as u64))?.value);
    }
    let mut prev_corner = tableau[0];
    let mut last_corner = tableau[0];
    for level in 1..alphas.len() {
        for i in 0..(alphas.len() - level) {
            let x0 = alphas[i];
            let x1 = alphas[i + level];
            tableau[i] = (-x1 * tableau[i] + x0 * tableau[i + 1]) / (x0 - x1);
        }
        if level == alphas.len() - 2 {
            prev_corner = tableau[0];
        }
        if level == alphas.len() - 1 {
            last_corner = tableau[0];
        }
    }
    Ok(C0Estimate { value: last_corner.max(0.0), error_estimate: (last_corner - prev_corner).abs() })
}

/// Derivative-form critical rate `d/ds [ s C_{1/(1+s)}(W) ]` at `s = 1`,
/// by central differences with a step-halving consistency check. When the
/// two estimates disagree the one-sided differences are also reported and
/// the result is flagged.
#[derive(Debug, Clone, Copy)]
pub struct CriticalRateDerivative {
    pub value: f64,
    pub consistent: bool,
    pub forward: f64,
    pub backward: f64,
}

pub fn critical_rate_derivative(w: &CQChannel, seed: u64) -> Result<CriticalRateDerivative> {
    let f = |s: f64, tag: u64| -> Result<f64> {
        Ok(s * renyi_capacity(w, 1.0 / (1.0 + s), seed.wrapping_add(tag))?.value)
    };
    let h = 1e-3;
    let f_p = f(1.0 + h, 1)?;
    let f_m = f(1.0 - h, 2)?;
    let d1 = (f_p - f_m) / (2.0 * h);
    let f_p2 = f(1.0 + h / 2.0, 3)?;
    let f_m2 = f(1.0 - h / 2.0, 4)?;
    let d2 = (f_p2 - f_m2) / h;
    let consistent = (d1 - d2).abs() <= 1e-3 * d2.abs().max(1.0);
    let f_0 = f(1.0, 5)?;
    let forward = (f_p - f_0) / h;
    let backward = (f_0 - f_m) / h;
    Ok(CriticalRateDerivative { value: d2, consistent, forward, backward })
}

/// Weighted critical rate `sup_{alpha in (0,1)} (1-alpha)^2 C_alpha(W)`,
/// by a dense grid with golden-section refinement around the best point.
/// Returns the value and the maximizing `alpha`.
pub fn critical_rate_quadratic(w: &CQChannel, seed: u64) -> Result<(f64, f64)> {
    let obj = |a: f64| -> Result<f64> { Ok((1.0 - a).powi(2) * renyi_capacity(w, a, seed)?.value) };
    let mut grid: Vec<f64> = vec![1e-4, 3e-4, 1e-3, 3e-3];
    for i in 1..=98 {
        grid.push(i as f64 / 100.0);
    }
    grid.push(0.999);
    let mut best_idx = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &a) in grid.iter().enumerate() {
        let v = obj(a)?;
        if v > best_v {
            best_v = v;
            best_idx = i;
        }
    }
    let best_a = grid[best_idx];
    let mut lo = if best_idx == 0 { grid[0] * 0.5 } else { grid[best_idx - 1] };
    let mut hi = if best_idx + 1 == grid.len() { 0.9999 } else { grid[best_idx + 1] };
    let phi = 0.618_033_988_749_894_9;
    let mut a1 = hi - phi * (hi - lo);
    let mut a2 = lo + phi * (hi - lo);
    let mut v1 = obj(a1)?;
    let mut v2 = obj(a2)?;
    for _ in 0..60 {
        if v1 < v2 {
            lo = a1;
            a1 = a2;
            v1 = v2;
            a2 = lo + phi * (hi - lo);
            v2 = obj(a2)?;
        } else {
            hi = a2;
            a2 = a1;
            v2 = v1;
            a1 = hi - phi * (hi - lo);
            v1 = obj(a1)?;
        }
        if hi - lo < 1e-7 {
            break;
        }
    }
    let (va, aa) = if v1 > v2 { (v1, a1) } else { (v2, a2) };
    if va > best_v {
        Ok((va, aa))
    } else {
        Ok((best_v, best_a))
    }
}

//! Error exponents and finite-blocklength bounds for activated
//! non-signaling coding.
//!
//! The central quantity is the sphere-packing expression
//!
//! ```text
//! E(r) = sup_{alpha in (0,1]} ((1-alpha)/alpha) (C_alpha(W) - r),
//! ```
//!
//! which is the exact error exponent of activated non-signaling codes: an
//! achievability side with no prefactor (via the dual saddle, Audenaert's
//! inequality and a Young-type bound), and a converse side through
//! constant-composition reduction, Nussbaum-Szkola distributions, tilted
//! interpolations and Chebyshev good sets. Both sides are implemented at
//! finite blocklength so the semidefinite values can be sandwiched
//! numerically.

use nalgebra::DMatrix;

use crate::capacities::{self, CapacityResult};
use crate::channels::{self, CQChannel, InputDistribution, QuantumChannelChoi, TypeComposition};
use crate::divergences;
use crate::herm::{ncmin, DensityOperator, HermitianOperator};
use crate::{Error, Limits, Result};

/// One sampled point of an exponent curve. `exponent` is
/// `f64::INFINITY` below the order-zero capacity (zero-error regime).
#[derive(Debug, Clone)]
pub struct ExponentPoint {
    pub rate: f64,
    pub exponent: f64,
    pub alpha_star: f64,
    pub p_star: InputDistribution,
}

/// Sampled exponent curve with its defining channel constants.
#[derive(Debug, Clone)]
pub struct ExponentCurve {
    pub points: Vec<ExponentPoint>,
    pub capacity: f64,
    pub c0: f64,
}

impl ExponentCurve {
    /// Checks the structural invariants: nonincreasing in the rate, zero
    /// at and above capacity, finite above the order-zero capacity.
    pub fn validate(&self) -> Result<()> {
        let mut sorted = self.points.clone();
        sorted.sort_by(|a, b| a.rate.partial_cmp(&b.rate).unwrap());
        for w in sorted.windows(2) {
            if w[1].exponent > w[0].exponent + 1e-7 {
                return Err(Error::NumericalFailure(format!(
                    "exponent not monotone: E({}) = {} < E({}) = {}",
                    w[0].rate, w[0].exponent, w[1].rate, w[1].exponent
                )));
            }
        }
        for p in &sorted {
            if p.rate >= self.capacity - 1e-6 && p.exponent.abs() > 1e-6 {
                return Err(Error::NumericalFailure(format!(
                    "nonzero exponent {} above capacity at rate {}",
                    p.exponent, p.rate
                )));
            }
            if p.rate > self.c0 + 1e-4 && p.exponent.is_infinite() {
                return Err(Error::NumericalFailure(format!(
                    "divergent exponent above the order-zero capacity at rate {}",
                    p.rate
                )));
            }
        }
        Ok(())
    }
}

/// Grid scan followed by golden-section refinement of a one-dimensional
/// maximization.
fn grid_golden_max(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    grid: usize,
    tol: f64,
) -> Result<(f64, f64)> {
    let mut best_x = lo;
    let mut best_v = f64::NEG_INFINITY;
    let mut xs = Vec::with_capacity(grid + 1);
    for i in 0..=grid {
        xs.push(lo + (hi - lo) * i as f64 / grid as f64);
    }
    let mut idx = 0;
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x)?;
        if v > best_v {
            best_v = v;
            best_x = x;
            idx = i;
        }
    }
    let mut a = if idx == 0 { xs[0] } else { xs[idx - 1] };
    let mut b = if idx + 1 == xs.len() { xs[idx] } else { xs[idx + 1] };
    let phi = 0.618_033_988_749_894_9;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut v1 = f(x1)?;
    let mut v2 = f(x2)?;
    while b - a > tol {
        if v1 < v2 {
            a = x1;
            x1 = x2;
            v1 = v2;
            x2 = a + phi * (b - a);
            v2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            v2 = v1;
            x1 = b - phi * (b - a);
            v1 = f(x1)?;
        }
    }
    let (vr, xr) = if v1 > v2 { (v1, x1) } else { (v2, x2) };
    if vr > best_v {
        Ok((vr, xr))
    } else {
        Ok((best_v, best_x))
    }
}

/// Sphere-packing exponent `sup_{alpha in (0,1]} ((1-alpha)/alpha)(C_alpha - r)`.
///
/// Returns the divergence flag (`+inf`) for rates below the order-zero
/// capacity and exactly zero with `alpha = 1` at and above capacity.
pub fn sphere_packing_exponent(w: &CQChannel, rate: f64, seed: u64) -> Result<ExponentPoint> {
    if rate < 0.0 {
        return Err(Error::InvalidInput(format!("rate must be nonnegative, got {rate}")));
    }
    let cap = capacities::holevo_capacity(w)?;
    if rate >= cap.value - 1e-9 {
        return Ok(ExponentPoint { rate, exponent: 0.0, alpha_star: 1.0, p_star: cap.argmax_p });
    }
    let c0 = capacities::c0_capacity(w, seed)?;
    if rate < c0.value - c0.error_estimate.max(1e-6) {
        let low = capacities::renyi_capacity(w, 0.01, seed)?;
        return Ok(ExponentPoint {
            rate,
            exponent: f64::INFINITY,
            alpha_star: 0.0,
            p_star: low.argmax_p,
        });
    }
    let mut cache: Option<(f64, CapacityResult)> = None;
    let mut eval = |alpha: f64| -> Result<f64> {
        let a = alpha.clamp(1e-4, 1.0);
        let c = capacities::renyi_capacity(w, a, seed)?;
        let v = (1.0 - a) / a * (c.value - rate);
        if cache.as_ref().map(|(bv, _)| v > *bv).unwrap_or(true) {
            cache = Some((v, c));
        }
        Ok(v)
    };
    let (value, alpha_star) = grid_golden_max(&mut eval, 1e-4, 1.0, 40, 1e-7)?;
    let best = cache.expect("at least one evaluation").1;
    Ok(ExponentPoint { rate, exponent: value.max(0.0), alpha_star, p_star: best.argmax_p })
}

/// Samples the exponent curve on a rate grid and validates the structural
/// invariants.
pub fn exponent_curve(w: &CQChannel, rates: &[f64], seed: u64) -> Result<ExponentCurve> {
    let cap = capacities::holevo_capacity(w)?.value;
    let c0 = capacities::c0_capacity(w, seed)?.value;
    let mut points = Vec::with_capacity(rates.len());
    for &r in rates {
        points.push(sphere_packing_exponent(w, r, seed)?);
    }
    let curve = ExponentCurve { points, capacity: cap, c0 };
    curve.validate()?;
    Ok(curve)
}

/// Finite-blocklength achievability bound on the activated non-signaling
/// error probability: `exp(-n ((1-alpha)/alpha)(C_alpha(W) - r))` clipped
/// to `[0, 1]`, with no prefactor.
pub fn achievability_bound(w: &CQChannel, n: usize, rate: f64, alpha: f64, seed: u64) -> Result<f64> {
    if !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("achievability needs alpha in (0,1], got {alpha}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("blocklength must be >= 1".into()));
    }
    let c = capacities::renyi_capacity(w, alpha, seed)?;
    let e = (1.0 - alpha) / alpha * (c.value - rate);
    Ok((-(n as f64) * e).exp().clamp(0.0, 1.0))
}

/// Young-inequality constant `kappa_alpha = alpha (1-alpha)^((1-alpha)/alpha)`
/// with `sup_{s >= 0} s^(1-alpha) c - s = kappa_alpha c^(1/alpha)`.
pub fn young_kappa(alpha: f64) -> f64 {
    alpha * (1.0 - alpha).powf((1.0 - alpha) / alpha)
}

// ---------------------------------------------------------------------------
// Nussbaum-Szkola distributions and tilted families
// ---------------------------------------------------------------------------

/// Classical image of a state pair: `p` sums to `tr rho`, `q` to
/// `tr sigma`, indexed by eigenvector pairs `(i, j)` flattened as
/// `i * d + j`.
#[derive(Debug, Clone)]
pub struct ClassicalPair {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl ClassicalPair {
    pub fn support_size(&self) -> usize {
        self.p.len()
    }

    /// `sum_ij p^alpha q^(1-alpha)` over the joint support.
    pub fn renyi_sum(&self, alpha: f64) -> f64 {
        self.p
            .iter()
            .zip(&self.q)
            .filter(|(a, b)| **a > 0.0 && **b > 0.0)
            .map(|(a, b)| a.powf(alpha) * b.powf(1.0 - alpha))
            .sum()
    }

    /// Entry-wise tensor product matching the tensor product of states.
    pub fn product(&self, other: &ClassicalPair) -> ClassicalPair {
        let mut p = Vec::with_capacity(self.p.len() * other.p.len());
        let mut q = Vec::with_capacity(p.capacity());
        // The flattened pair index of a product state interleaves factor
        // indices as ((i1 i2), (j1 j2)); iteration order here only needs
        // to be consistent between p and q.
        for (p1, q1) in self.p.iter().zip(&self.q) {
            for (p2, q2) in other.p.iter().zip(&other.q) {
                p.push(p1 * p2);
                q.push(q1 * q2);
            }
        }
        ClassicalPair { p, q }
    }
}

/// Nussbaum-Szkola distributions of a state pair:
/// `p_ij = lambda_i |<phi_i|psi_j>|^2`, `q_ij = mu_j |<phi_i|psi_j>|^2`
/// from the eigendecompositions `rho = sum lambda_i |phi_i><phi_i|`,
/// `sigma = sum mu_j |psi_j><psi_j|`. Satisfies
/// `sum p^alpha q^(1-alpha) = tr(rho^alpha sigma^(1-alpha))`.
pub fn nussbaum_szkola(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<ClassicalPair> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let dr = rho.eigh()?;
    let ds = sigma.eigh()?;
    let d = rho.dim();
    let cross = dr.eigenvectors.adjoint() * &ds.eigenvectors;
    let mut p = vec![0.0; d * d];
    let mut q = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let ov = cross[(i, j)].norm_sqr();
            p[i * d + j] = dr.eigenvalues[i].max(0.0) * ov;
            q[i * d + j] = ds.eigenvalues[j].max(0.0) * ov;
        }
    }
    Ok(ClassicalPair { p, q })
}

/// Tilted interpolation `v proportional to p^alpha q^(1-alpha)`.
#[derive(Debug, Clone)]
pub struct TiltedFamily {
    pub base: ClassicalPair,
    pub alpha: f64,
    pub v: Vec<f64>,
}

pub fn tilted_distribution(base: &ClassicalPair, alpha: f64) -> Result<TiltedFamily> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("tilt needs alpha in (0,1), got {alpha}")));
    }
    let mut v: Vec<f64> = base
        .p
        .iter()
        .zip(&base.q)
        .map(|(&a, &b)| if a > 0.0 && b > 0.0 { a.powf(alpha) * b.powf(1.0 - alpha) } else { 0.0 })
        .collect();
    let s: f64 = v.iter().sum();
    if s <= 0.0 {
        return Err(Error::InvalidInput("tilted distribution has empty support".into()));
    }
    for x in &mut v {
        *x /= s;
    }
    Ok(TiltedFamily { base: base.clone(), alpha, v })
}

/// Kullback-Leibler divergence `sum v ln(v/p)`; `+inf` on support
/// violations.
pub fn kl_divergence(v: &[f64], p: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&vi, &pi) in v.iter().zip(p) {
        if vi > 0.0 {
            if pi <= 0.0 {
                return f64::INFINITY;
            }
            acc += vi * (vi / pi).ln();
        }
    }
    acc
}

/// Centered second moment `sum v (ln(v/p) - D(v||p))^2`.
pub fn divergence_variance(v: &[f64], p: &[f64]) -> f64 {
    let d = kl_divergence(v, p);
    if d.is_infinite() {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    for (&vi, &pi) in v.iter().zip(p) {
        if vi > 0.0 {
            let t = (vi / pi).ln() - d;
            acc += vi * t * t;
        }
    }
    acc
}

/// Exact mass under `v^T = (x)_x (v^x)^(n T_x)` of the Chebyshev good set
///
/// ```text
/// G = { i : ln(p^T_i / v^T_i) >= -n E_T[D(v||p)] - sqrt(4 n E_T[Var(v||p)]) },
/// ```
///
/// computed by full enumeration of the product support. The construction
/// guarantees mass `>= 3/4`.
pub fn good_set_mass(
    per_symbol: &[(Vec<f64>, Vec<f64>)],
    composition: &TypeComposition,
    limits: &Limits,
) -> Result<f64> {
    if per_symbol.len() != composition.alphabet_size() {
        return Err(Error::DimensionMismatch(per_symbol.len(), composition.alphabet_size()));
    }
    let n = composition.n();
    if n == 0 {
        return Err(Error::InvalidInput("empty composition".into()));
    }
    let mut mean = 0.0;
    let mut var = 0.0;
    let mut support: f64 = 1.0;
    for (x, (v, p)) in per_symbol.iter().enumerate() {
        if v.len() != p.len() {
            return Err(Error::DimensionMismatch(v.len(), p.len()));
        }
        let cnt = composition.counts()[x] as f64;
        if cnt == 0.0 {
            continue;
        }
        let w = cnt / n as f64;
        let d = kl_divergence(v, p);
        if d.is_infinite() {
            return Err(Error::InvalidInput("tilt support escapes the base distribution".into()));
        }
        mean += w * d;
        var += w * divergence_variance(v, p);
        let sup_x = v.iter().filter(|&&t| t > 0.0).count();
        support *= (sup_x as f64).powf(cnt);
    }
    if support > limits.max_support as f64 {
        return Err(Error::ResourceLimit(format!(
            "good-set enumeration over {support:.0} outcomes exceeds cap {}",
            limits.max_support
        )));
    }
    let threshold = -(n as f64) * mean - (4.0 * n as f64 * var).sqrt();

    // Flatten the factors in type order and enumerate.
    let mut factors: Vec<&(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n);
    for (x, pair) in per_symbol.iter().enumerate() {
        for _ in 0..composition.counts()[x] {
            factors.push(pair);
        }
    }
    let mut mass = 0.0;
    enumerate_good(&factors, 0, 1.0, 0.0, threshold, &mut mass);
    Ok(mass)
}

fn enumerate_good(
    factors: &[&(Vec<f64>, Vec<f64>)],
    pos: usize,
    weight: f64,
    log_ratio: f64,
    threshold: f64,
    mass: &mut f64,
) {
    if weight == 0.0 {
        return;
    }
    if pos == factors.len() {
        if log_ratio >= threshold {
            *mass += weight;
        }
        return;
    }
    let (v, p) = factors[pos];
    for (&vi, &pi) in v.iter().zip(p) {
        if vi <= 0.0 {
            continue;
        }
        if pi <= 0.0 {
            // ratio -inf: never in the good set
            continue;
        }
        enumerate_good(factors, pos + 1, weight * vi, log_ratio + (pi / vi).ln(), threshold, mass);
    }
}

// ---------------------------------------------------------------------------
// Finite-blocklength converse (sphere-packing route)
// ---------------------------------------------------------------------------

/// Finite-`n` lower bound on the activated non-signaling error
/// probability at `M = e^{n r}`.
#[derive(Debug, Clone)]
pub struct ConverseBound {
    pub value: f64,
    /// Per-type values `(counts, quantum route, classical route)`.
    pub per_type: Vec<(TypeComposition, Option<f64>, f64)>,
    pub sigma: DensityOperator,
    pub alpha: f64,
    pub eta: f64,
}

/// Constant-composition lower bound
///
/// ```text
/// eps >= inf_T sup_{s >= 0} gamma_n tr(W_T^n /\ M s sigma^n) - s,
/// gamma_n = (n+1)^(-|X|) / 2,
/// ```
///
/// evaluated at a fixed reference state (any fixed `sigma` lower-bounds
/// the supremum over states). Two routes are computed per type: the exact
/// non-commutative minimum when the product dimension is small, and the
/// classical relaxation `tr(A /\ B) >= sum min(p, q) / 2` through
/// Nussbaum-Szkola pairs. When no reference state is supplied it is taken
/// from the capacity saddle at the shifted rate `r + eta`.
pub fn finite_n_converse_bound(
    w: &CQChannel,
    n: usize,
    rate: f64,
    sigma: Option<DensityOperator>,
    eta: f64,
    seed: u64,
    limits: &Limits,
) -> Result<ConverseBound> {
    if n == 0 {
        return Err(Error::InvalidInput("blocklength must be >= 1".into()));
    }
    let k = w.alphabet_size();
    let m_val = ((n as f64) * rate).exp();
    let gamma = 0.5 / ((n + 1) as f64).powi(k as i32);

    let (sigma, alpha) = match sigma {
        Some(s) => (s, f64::NAN),
        None => {
            let point = sphere_packing_exponent(w, rate + eta, seed)?;
            let a = if point.alpha_star <= 0.0 { 0.01 } else { point.alpha_star };
            let c = capacities::renyi_capacity(w, a.min(1.0), seed)?;
            (c.inner_sigma, a)
        }
    };

    // sigma^n and per-symbol classical pairs are shared across types.
    let quantum_ok = (w.dim() as f64).powi(n as i32) <= 128.0;
    let mut sigma_n = sigma.clone();
    for _ in 1..n {
        sigma_n = sigma_n.kron(&sigma);
    }
    let mut pairs = Vec::with_capacity(k);
    for x in 0..k {
        pairs.push(nussbaum_szkola(w.output(x).as_herm(), sigma.as_herm())?);
    }

    let types = channels::enumerate_types(n, k)?;
    let mut per_type = Vec::with_capacity(types.len());
    let mut value = f64::INFINITY;
    for t in types {
        // Quantum route: golden search of gamma tr(A /\ M s B) - s over ln s.
        let q_route = if quantum_ok {
            let a_t = channels::type_product_state(w, &t, limits)?;
            let mut f = |ls: f64| -> Result<f64> {
                let s = ls.exp();
                Ok(gamma * ncmin(a_t.as_herm(), &sigma_n.as_herm().scale(m_val * s))?.trace() - s)
            };
            let (v, _) = grid_golden_max(&mut f, -50.0, 10.0, 40, 1e-9)?;
            Some(v.max(0.0))
        } else {
            None
        };
        // Classical route through the product Nussbaum-Szkola pair.
        let mut pair_t: Option<ClassicalPair> = None;
        for (x, cnt) in t.counts().iter().enumerate() {
            for _ in 0..*cnt {
                pair_t = Some(match pair_t {
                    None => pairs[x].clone(),
                    Some(acc) => acc.product(&pairs[x]),
                });
            }
        }
        let pair_t = pair_t.expect("n >= 1");
        if pair_t.support_size() > limits.max_support {
            return Err(Error::ResourceLimit(format!(
                "classical route support {} exceeds cap {}",
                pair_t.support_size(),
                limits.max_support
            )));
        }
        let mut g = |ls: f64| -> Result<f64> {
            let s = ls.exp();
            let mut acc = 0.0;
            for (&pi, &qi) in pair_t.p.iter().zip(&pair_t.q) {
                acc += pi.min(m_val * s * qi);
            }
            Ok(gamma * 0.5 * acc - s)
        };
        let (cv, _) = grid_golden_max(&mut g, -50.0, 10.0, 40, 1e-9)?;
        let c_route = cv.max(0.0);
        let best = q_route.map(|q| q.max(c_route)).unwrap_or(c_route);
        value = value.min(best);
        per_type.push((t, q_route, c_route));
    }
    Ok(ConverseBound { value: value.max(0.0), per_type, sigma, alpha, eta })
}

// ---------------------------------------------------------------------------
// Bounds without activation and the pure-state regime
// ---------------------------------------------------------------------------

/// One-shot upper bound on the plain non-signaling error probability,
///
/// ```text
/// eps_ns(M, W) <= (2M)^((1-a)/a) e^(-((1-a)/a) C_a(W))
///               + (2/M)        e^(-(1-a)   C_a(W)),
/// ```
///
/// optimized over inputs and reference states through the capacity
/// saddle (both terms decrease in the saddle value).
pub fn no_activation_bound(w: &CQChannel, m_val: f64, alpha: f64, seed: u64) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("bound needs alpha in (0,1), got {alpha}")));
    }
    if m_val < 1.0 {
        return Err(Error::InvalidInput("message count must be >= 1".into()));
    }
    let c = capacities::renyi_capacity(w, alpha, seed)?.value;
    let t = (1.0 - alpha) / alpha;
    Ok((2.0 * m_val).powf(t) * (-t * c).exp() + (2.0 / m_val) * (-(1.0 - alpha) * c).exp())
}

/// Consistency report for channels with pure outputs: the weighted
/// critical rate never exceeds the order-zero capacity, and the weighted
/// objective reduces to a Schatten norm,
/// `(1-a) C_a(p, W) = -log || sum_x p_x W_x ||_{1/a}`.
#[derive(Debug, Clone)]
pub struct PureStateReport {
    pub critical_rate: f64,
    pub critical_alpha: f64,
    pub c0: f64,
    pub schatten_max_err: f64,
    pub ok: bool,
}

pub fn pure_state_report(w: &CQChannel, seed: u64) -> Result<PureStateReport> {
    for x in 0..w.alphabet_size() {
        let ev = w.output(x).eigh()?.eigenvalues;
        let second = ev[..ev.len() - 1].iter().cloned().fold(0.0_f64, f64::max);
        if second > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "output {x} is not pure (second eigenvalue {second:.3e})"
            )));
        }
    }
    let (critical_rate, critical_alpha) = capacities::critical_rate_quadratic(w, seed)?;
    let c0 = capacities::c0_capacity(w, seed)?.value;

    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let mut max_err = 0.0_f64;
    for trial in 0..5 {
        let p = if trial == 0 {
            InputDistribution::uniform(w.alphabet_size())
        } else {
            crate::random::random_simplex(&mut rng, w.alphabet_size())
        };
        let avg = w.average_output(&p)?;
        for i in 1..=9 {
            let a = i as f64 / 10.0;
            let lhs = (1.0 - a) * capacities::sibson_objective(&p, w, a)?;
            let rhs = -avg.as_herm().schatten_norm(1.0 / a)?.ln();
            max_err = max_err.max((lhs - rhs).abs());
        }
    }
    let ok = critical_rate <= c0 + 1e-4 && max_err <= 1e-6;
    Ok(PureStateReport { critical_rate, critical_alpha, c0, schatten_max_err: max_err, ok })
}

// ---------------------------------------------------------------------------
// Fully quantum achievability
// ---------------------------------------------------------------------------

/// Heuristic lower bound on the activated non-signaling exponent of a
/// fully quantum channel at a fixed Renyi order,
///
/// ```text
/// E(r) >= sup_rho inf_sigma ((1-a)/a)(D_a(sqrt(rho) J sqrt(rho) || rho (x) sigma) - r),
/// ```
///
/// with the outer supremum over reference states explored by multi-start
/// Nelder-Mead on a Cholesky parameterization; the inner infimum uses the
/// iterative Renyi mutual information. The outer landscape is not known
/// to be concave, so the value is reported as a non-certified bound.
#[derive(Debug, Clone)]
pub struct QuantumAchievability {
    pub value: f64,
    pub rho_r: DensityOperator,
    pub certified: bool,
}

pub fn quantum_achievability_bound(
    j: &QuantumChannelChoi,
    rate: f64,
    alpha: f64,
    seed: u64,
) -> Result<QuantumAchievability> {
    if !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("achievability needs alpha in (0,1], got {alpha}")));
    }
    let dr = j.dim_in();
    let db = j.dim_out();
    let nparams = dr * dr;
    let factor = (1.0 - alpha) / alpha;

    let build_rho = |theta: &[f64]| -> Option<DensityOperator> {
        // Layout: dr real diagonal entries, then (re, im) pairs for the
        // strict lower triangle; dr^2 real parameters in total.
        let mut l = DMatrix::zeros(dr, dr);
        for i in 0..dr {
            l[(i, i)] = crate::herm::C64::new(theta[i], 0.0);
        }
        let mut idx = dr;
        for i in 0..dr {
            for jj in 0..i {
                l[(i, jj)] = crate::herm::C64::new(theta[idx], theta[idx + 1]);
                idx += 2;
            }
        }
        let g = &l * l.adjoint();
        let tr = g.trace().re;
        if !(tr > 1e-10) {
            return None;
        }
        DensityOperator::from_noisy(&HermitianOperator::new(g).ok()?, 0.0).ok()
    };

    let mut evals: u64 = 0;
    let mut objective = |theta: &[f64]| -> f64 {
        evals += 1;
        let Some(rho) = build_rho(theta) else { return f64::NEG_INFINITY };
        let sq = match rho.as_herm().power_psd(0.5) {
            Ok(s) => s,
            Err(_) => return f64::NEG_INFINITY,
        };
        let lift = sq.kron(&HermitianOperator::identity(db));
        let inner = match HermitianOperator::new(lift.matrix() * j.choi().matrix() * lift.matrix()) {
            Ok(h) => h,
            Err(_) => return f64::NEG_INFINITY,
        };
        let Ok(state) = DensityOperator::from_noisy(&inner, 1e-8) else {
            return f64::NEG_INFINITY;
        };
        match divergences::renyi_mutual_information(&state, (dr, db), rho.as_herm(), alpha, seed ^ evals)
        {
            Ok(mi) => factor * (mi.value - rate),
            Err(_) => f64::NEG_INFINITY,
        }
    };

    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xace);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    // Maximally mixed start: identity factor.
    let mut mixed = vec![0.0; nparams];
    for i in 0..dr {
        mixed[i] = 1.0;
    }
    starts.push(mixed);
    for _ in 0..3 {
        starts.push((0..nparams).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    // A random diagonal start covers measure-and-prepare channels.
    let mut diag = vec![0.0; nparams];
    for i in 0..dr {
        diag[i] = rng.gen_range(0.2..1.0);
    }
    starts.push(diag);

    let mut best_val = f64::NEG_INFINITY;
    let mut best_theta = starts[0].clone();
    for s in &starts {
        let (v, t) = nelder_mead_max(&mut objective, s, 0.3, 250);
        if v > best_val {
            best_val = v;
            best_theta = t;
        }
    }
    // Shrinking random polish around the best point.
    let mut radius = 0.1;
    for _ in 0..60 {
        let cand: Vec<f64> =
            best_theta.iter().map(|&t| t + rng.gen_range(-radius..radius)).collect();
        let v = objective(&cand);
        if v > best_val {
            best_val = v;
            best_theta = cand;
        } else {
            radius *= 0.93;
        }
    }
    let rho = build_rho(&best_theta)
        .ok_or_else(|| Error::NumericalFailure("degenerate reference state".into()))?;
    Ok(QuantumAchievability { value: best_val, rho_r: rho, certified: false })
}

/// Nelder-Mead maximization; returns the best value and point.
fn nelder_mead_max(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    scale: f64,
    iters: usize,
) -> (f64, Vec<f64>) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += scale;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..iters {
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        if (values[best] - values[worst]).abs() < 1e-12 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / n as f64;
            }
        }
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[worst])
            .map(|(c, w)| c + (c - w))
            .collect();
        let fr = f(&reflect);
        if fr > values[best] {
            let expand: Vec<f64> =
                centroid.iter().zip(&simplex[worst]).map(|(c, w)| c + 2.0 * (c - w)).collect();
            let fe = f(&expand);
            if fe > fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr > values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contract: Vec<f64> =
                centroid.iter().zip(&simplex[worst]).map(|(c, w)| c + 0.5 * (w - c)).collect();
            let fc = f(&contract);
            if fc > values[worst] {
                simplex[worst] = contract;
                values[worst] = fc;
            } else {
                let best_point = simplex[best].clone();
                for i in 0..simplex.len() {
                    if i == best {
                        continue;
                    }
                    simplex[i] = simplex[i]
                        .iter()
                        .zip(&best_point)
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut bi = 0;
    for i in 1..values.len() {
        if values[i] > values[bi] {
            bi = i;
        }
    }
    (values[bi], simplex[bi].clone())
}

// ---------------------------------------------------------------------------
// Finite-n sandwich table
// ---------------------------------------------------------------------------

/// One row of the finite-blocklength comparison table.
#[derive(Debug, Clone)]
pub struct SandwichRow {
    pub n: usize,
    pub rate: f64,
    /// `-(1/n) log eps_ns(e^{nr}, W^n (x) I_2)`; `None` when skipped.
    pub sdp_exponent: Option<f64>,
    pub ach_exponent: f64,
    pub formula_exponent: f64,
    pub eta: f64,
    pub note: String,
}

/// Builds the table of semidefinite exponents against the closed-form
/// achievability and sphere-packing reference for `n = 1..n_max`.
pub fn exponent_sandwich_table(
    w: &CQChannel,
    rate: f64,
    n_max: usize,
    eta: f64,
    seed: u64,
    limits: &Limits,
) -> Result<Vec<SandwichRow>> {
    let point = sphere_packing_exponent(w, rate, seed)?;
    let formula = point.exponent;
    let ach = formula.max(0.0);
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let m_val = ((n as f64) * rate).exp();
        let row = match w.tensor_power(n, limits).and_then(|wn| wn.with_ideal_bit(limits)) {
            Err(Error::ResourceLimit(msg)) => SandwichRow {
                n,
                rate,
                sdp_exponent: None,
                ach_exponent: ach,
                formula_exponent: formula,
                eta,
                note: format!("skipped: {msg}"),
            },
            Err(e) => return Err(e),
            Ok(activated) => {
                let eps = crate::oneshot::ns_error(m_val, &activated, limits)?.eps;
                let expo = if eps <= 1e-300 { f64::INFINITY } else { -eps.ln() / n as f64 };
                let mut note = String::new();
                if expo.is_finite() && ach.is_finite() && expo < ach - 1e-7 {
                    note = format!("below achievability by {:.3e}", ach - expo);
                }
                if expo.is_finite() && formula.is_finite() {
                    note = if note.is_empty() {
                        format!("slack {:.3e}", expo - formula)
                    } else {
                        note
                    };
                }
                SandwichRow {
                    n,
                    rate,
                    sdp_exponent: Some(expo),
                    ach_exponent: ach,
                    formula_exponent: formula,
                    eta,
                    note,
                }
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn limits() -> Limits {
        Limits::default()
    }

    #[test]
    fn exponent_edges() {
        let w = CQChannel::noiseless(2).unwrap();
        // Above capacity the exponent vanishes with alpha = 1.
        let p = sphere_packing_exponent(&w, LN_2 + 0.1, 42).unwrap();
        assert_eq!(p.exponent, 0.0);
        assert_eq!(p.alpha_star, 1.0);
        // Below the order-zero capacity the formula diverges.
        let p = sphere_packing_exponent(&w, 0.3, 42).unwrap();
        assert!(p.exponent.is_infinite());
    }

    #[test]
    fn achievability_arithmetic() {
        // Noiseless binary at r = log(2)/2, alpha = 1/2, n = 4:
        // exp(-4 * 1 * (log 2 - r)) = exp(-2 log 2) = 1/4.
        let w = CQChannel::noiseless(2).unwrap();
        let b = achievability_bound(&w, 4, 0.5 * LN_2, 0.5, 42).unwrap();
        assert!((b - 0.25).abs() < 1e-9, "{b}");
        // alpha = 1 clips the bound at 1 above capacity.
        let b1 = achievability_bound(&w, 2, LN_2 + 1.0, 1.0, 42).unwrap();
        assert!((b1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn achievability_dominates_sdp() {
        let lim = limits();
        let w = CQChannel::binary_symmetric(0.2).unwrap();
        let cap = capacities::holevo_capacity(&w).unwrap().value;
        let r = 0.5 * cap;
        for n in 1..=3 {
            let m = ((n as f64) * r).exp();
            let activated =
                w.tensor_power(n, &lim).unwrap().with_ideal_bit(&lim).unwrap();
            let eps = crate::oneshot::ns_error(m, &activated, &lim).unwrap().eps;
            let mut best = f64::INFINITY;
            for i in 1..=20 {
                let a = i as f64 / 20.0;
                best = best.min(achievability_bound(&w, n, r, a, 42).unwrap());
            }
            assert!(eps <= best + 1e-7, "n={n}: {eps} > {best}");
        }
    }

    #[test]
    fn ns_pair_identities() {
        // Commuting diagonal pair: the overlap matrix is a permutation, so
        // p lives on a diagonal support pattern carrying the eigenvalues.
        let rho = HermitianOperator::from_diagonal(&[0.7, 0.3]);
        let sigma = HermitianOperator::from_diagonal(&[0.2, 0.8]);
        let pair = nussbaum_szkola(&rho, &sigma).unwrap();
        let mut p_nonzero: Vec<f64> = pair.p.iter().cloned().filter(|&v| v > 1e-14).collect();
        p_nonzero.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(p_nonzero.len(), 2);
        assert!((p_nonzero[0] - 0.3).abs() < 1e-12 && (p_nonzero[1] - 0.7).abs() < 1e-12);
        for (pi, qi) in pair.p.iter().zip(&pair.q) {
            assert_eq!(*pi > 1e-14, *qi > 1e-14, "p and q share the support pattern");
        }
        let psum: f64 = pair.p.iter().sum();
        let qsum: f64 = pair.q.iter().sum();
        assert!((psum - 1.0).abs() < 1e-12 && (qsum - 1.0).abs() < 1e-12);

        // rho = sigma gives p = q.
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let state = random::random_density(&mut rng, 3);
        let same = nussbaum_szkola(state.as_herm(), state.as_herm()).unwrap();
        for (a, b) in same.p.iter().zip(&same.q) {
            assert!((a - b).abs() < 1e-10);
        }

        // The defining identity against independent spectral calculus.
        for _ in 0..20 {
            let r = random::random_density(&mut rng, 2);
            let s = random::random_density(&mut rng, 2);
            let pair = nussbaum_szkola(r.as_herm(), s.as_herm()).unwrap();
            for &a in &[0.3, 0.5, 0.8] {
                let classical = pair.renyi_sum(a);
                let quantum = r.as_herm().power_psd(a).unwrap().dot(&s.as_herm().power_psd(1.0 - a).unwrap());
                assert!((classical - quantum).abs() < 1e-9, "alpha={a}");
            }
        }
    }

    #[test]
    fn ns_pair_tensorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let r1 = random::random_density(&mut rng, 2);
        let s1 = random::random_density(&mut rng, 2);
        let r2 = random::random_density(&mut rng, 2);
        let s2 = random::random_density(&mut rng, 2);
        let joint = nussbaum_szkola(r1.kron(&r2).as_herm(), s1.kron(&s2).as_herm()).unwrap();
        let prod = nussbaum_szkola(r1.as_herm(), s1.as_herm())
            .unwrap()
            .product(&nussbaum_szkola(r2.as_herm(), s2.as_herm()).unwrap());
        // Compare as sorted multisets of (p, q) pairs: eigenvalue ordering
        // of the product state differs from the factor ordering.
        let canon = |pair: &ClassicalPair| {
            let mut v: Vec<(f64, f64)> = pair.p.iter().cloned().zip(pair.q.iter().cloned()).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        for ((pa, qa), (pb, qb)) in canon(&joint).into_iter().zip(canon(&prod)) {
            assert!((pa - pb).abs() < 1e-12 && (qa - qb).abs() < 1e-12);
        }
    }

    #[test]
    fn tilt_and_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let r = random::random_density(&mut rng, 2);
        let s = random::random_density(&mut rng, 2);
        let pair = nussbaum_szkola(r.as_herm(), s.as_herm()).unwrap();
        // Tilts approach the normalized p-direction as alpha -> 1.
        let t = tilted_distribution(&pair, 0.999999).unwrap();
        for (vi, pi) in t.v.iter().zip(&pair.p) {
            assert!((vi - pi).abs() < 1e-4);
        }
        let p = [0.25, 0.75];
        assert!(kl_divergence(&p, &p).abs() < 1e-15);
        assert!(divergence_variance(&p, &p).abs() < 1e-15);
    }

    #[test]
    fn good_set_basics() {
        let lim = limits();
        // v = p: everything is in the good set.
        let t1 = TypeComposition::new(vec![1]).unwrap();
        let v = vec![0.4, 0.6];
        let mass = good_set_mass(&[(v.clone(), v.clone())], &t1, &lim).unwrap();
        assert!((mass - 1.0).abs() < 1e-12);

        // Any pair at n = 1 keeps at least 3/4 by construction.
        let pair = (vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]);
        let mass = good_set_mass(&[pair], &t1, &lim).unwrap();
        assert!(mass >= 0.75 - 1e-9);
    }

    #[test]
    fn good_set_bsc_tilt() {
        let lim = limits();
        let bsc = CQChannel::binary_symmetric(0.2).unwrap();
        let sigma = DensityOperator::maximally_mixed(2);
        let t = TypeComposition::new(vec![3, 3]).unwrap();
        let mut per_symbol = Vec::new();
        for x in 0..2 {
            let pair = nussbaum_szkola(bsc.output(x).as_herm(), sigma.as_herm()).unwrap();
            let tilt = tilted_distribution(&pair, 0.5).unwrap();
            per_symbol.push((tilt.v, pair.p.clone()));
        }
        let mass = good_set_mass(&per_symbol, &t, &lim).unwrap();
        assert!(mass >= 0.75 - 1e-9, "{mass}");
    }

    #[test]
    fn young_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        use rand::Rng;
        for _ in 0..50 {
            let alpha: f64 = rng.gen_range(0.05..0.95);
            let c: f64 = (rng.gen_range(-3.0_f64..3.0)).exp();
            let kappa = young_kappa(alpha);
            assert!(kappa <= 1.0 + 1e-12);
            let closed = kappa * c.powf(1.0 / alpha);
            // The maximizer is s* = (1-alpha)^(1/alpha) c^(1/alpha).
            let s_star = (1.0 - alpha).powf(1.0 / alpha) * c.powf(1.0 / alpha);
            let direct = s_star.powf(1.0 - alpha) * c - s_star;
            assert!((closed - direct).abs() < 1e-10 * closed.abs().max(1.0));
        }
    }

    #[test]
    fn converse_bound_basics() {
        let lim = limits();
        // Useless channel at n = 1, M = 2: the bound stays below the true
        // error 1/2.
        let sigma = DensityOperator::maximally_mixed(2);
        let useless = CQChannel::new(vec![sigma.clone(), sigma.clone()]).unwrap();
        let r = (2.0_f64).ln();
        let b = finite_n_converse_bound(&useless, 1, r, None, 0.05, 42, &lim).unwrap();
        let eps = crate::oneshot::ns_error(
            2.0,
            &useless.with_ideal_bit(&lim).unwrap(),
            &lim,
        )
        .unwrap()
        .eps;
        assert!(b.value <= eps + 1e-9, "{} vs {eps}", b.value);
        assert!(b.value >= 0.0);
    }

    #[test]
    fn converse_below_sdp_bsc() {
        let lim = limits();
        let w = CQChannel::binary_symmetric(0.2).unwrap();
        let cap = capacities::holevo_capacity(&w).unwrap().value;
        let r = 0.5 * cap;
        for n in 1..=3 {
            let m = ((n as f64) * r).exp();
            let b = finite_n_converse_bound(&w, n, r, None, 0.05, 42, &lim).unwrap();
            let activated = w.tensor_power(n, &lim).unwrap().with_ideal_bit(&lim).unwrap();
            let eps = crate::oneshot::ns_error(m, &activated, &lim).unwrap().eps;
            assert!(b.value <= eps + 1e-7, "n={n}: {} > {eps}", b.value);
        }
    }

    #[test]
    fn no_activation_bound_cases() {
        let w = CQChannel::noiseless(2).unwrap();
        // Closed-form arithmetic at M = 2, alpha = 1/2 with C = log 2.
        let b = no_activation_bound(&w, 2.0, 0.5, 42).unwrap();
        let expected = 4.0 * 0.5 + 1.0 * (-0.5 * LN_2).exp();
        assert!((b - expected).abs() < 1e-6, "{b} vs {expected}");
        // eps_ns = 0 for the noiseless channel at M = 2.
        let eps = crate::oneshot::ns_error(2.0, &w, &limits()).unwrap().eps;
        assert!(eps <= b + 1e-7);

        // Large M: the second term vanishes relative to the first.
        let w2 = CQChannel::binary_symmetric(0.1).unwrap();
        let c = capacities::renyi_capacity(&w2, 0.5, 42).unwrap().value;
        let t = 1.0;
        let first = |m: f64| (2.0 * m).powf(t) * (-t * c).exp();
        let second = |m: f64| (2.0 / m) * (-(0.5) * c).exp();
        let r_small = second(4.0) / first(4.0);
        let r_large = second(64.0) / first(64.0);
        assert!(r_large < r_small * 0.01);
        let b2 = no_activation_bound(&w2, 4.0, 0.5, 42).unwrap();
        assert!((b2 - (first(4.0) + second(4.0))).abs() < 1e-9);
    }

    #[test]
    fn no_activation_bound_dominates_eps() {
        let lim = limits();
        let w = CQChannel::binary_symmetric(0.1).unwrap();
        let eps = crate::oneshot::ns_error(3.0, &w, &lim).unwrap().eps;
        let mut best = f64::INFINITY;
        for i in 1..=9 {
            best = best.min(no_activation_bound(&w, 3.0, i as f64 / 10.0, 42).unwrap());
        }
        assert!(eps <= best + 1e-7, "{eps} > {best}");
    }

    #[test]
    fn pure_state_cases() {
        // Orthogonal pure outputs: both quantities equal log 2.
        let zero = DensityOperator::new(HermitianOperator::from_diagonal(&[1.0, 0.0])).unwrap();
        let one = DensityOperator::new(HermitianOperator::from_diagonal(&[0.0, 1.0])).unwrap();
        let w = CQChannel::new(vec![zero.clone(), one]).unwrap();
        let rep = pure_state_report(&w, 42).unwrap();
        assert!(rep.ok);
        assert!((rep.c0 - LN_2).abs() < 1e-5);
        assert!((rep.critical_rate - LN_2).abs() < 2e-3);

        // Identical pure outputs: everything is zero.
        let w0 = CQChannel::new(vec![zero.clone(), zero.clone()]).unwrap();
        let rep0 = pure_state_report(&w0, 42).unwrap();
        assert!(rep0.ok && rep0.critical_rate.abs() < 1e-9 && rep0.c0.abs() < 1e-7);

        // {|0>, |+>}.
        let plus = DensityOperator::new(
            HermitianOperator::from_real(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap(),
        )
        .unwrap();
        let wp = CQChannel::new(vec![zero, plus]).unwrap();
        let repp = pure_state_report(&wp, 42).unwrap();
        assert!(repp.ok, "{repp:?}");

        // Mixed outputs are rejected.
        let mixed = DensityOperator::maximally_mixed(2);
        let bad = CQChannel::new(vec![mixed.clone(), mixed]).unwrap();
        assert!(pure_state_report(&bad, 42).is_err());
    }

    #[test]
    fn quantum_achievability_cases() {
        // Identity qubit channel: at the maximally mixed reference the
        // divergence value is 2 log 2, so small alpha blows the bound up.
        let j = QuantumChannelChoi::identity_channel(2).unwrap();
        let b = quantum_achievability_bound(&j, 0.3, 0.1, 42).unwrap();
        assert!(b.value >= 9.0 * (2.0 * LN_2 - 0.3) - 1e-3, "{}", b.value);

        // Fully depolarizing channel has zero capacity: the bound is
        // nonpositive at every positive rate.
        let dep = QuantumChannelChoi::depolarizing(2, 1.0).unwrap();
        let bd = quantum_achievability_bound(&dep, 0.2, 0.5, 42).unwrap();
        assert!(bd.value <= 1e-6, "{}", bd.value);
    }

    #[test]
    fn quantum_achievability_matches_cq() {
        let w = CQChannel::binary_symmetric(0.1).unwrap();
        let cap = capacities::holevo_capacity(&w).unwrap().value;
        let r = 0.5 * cap;
        let alpha = 0.5;
        let cq_value = (1.0 - alpha) / alpha
            * (capacities::renyi_capacity(&w, alpha, 42).unwrap().value - r);
        let q = quantum_achievability_bound(&w.choi().unwrap(), r, alpha, 42).unwrap();
        assert!((q.value - cq_value).abs() < 1e-4, "{} vs {cq_value}", q.value);
    }

    #[test]
    fn sandwich_table_cases() {
        let lim = limits();
        // Above capacity the formula exponent vanishes and the finite-n
        // semidefinite exponents decay toward it (the granted ideal bit
        // still dominates at the smallest blocklengths).
        let w = CQChannel::noiseless(2).unwrap();
        let rows = exponent_sandwich_table(&w, LN_2 + 0.3, 4, 0.05, 42, &lim).unwrap();
        let mut prev = f64::INFINITY;
        for row in &rows {
            let e = row.sdp_exponent.unwrap();
            assert!(e >= -1e-9, "n={}: {e}", row.n);
            assert!(e <= prev + 1e-9, "n={}: {e} > {prev}", row.n);
            assert_eq!(row.formula_exponent, 0.0);
            prev = e;
        }
        assert!(prev < 0.35, "exponent should approach zero, got {prev}");

        // Classical channel: no activation is needed, so the plain value
        // matches the activated one at doubled message count.
        let bsc = CQChannel::binary_symmetric(0.2).unwrap();
        let cap = capacities::holevo_capacity(&bsc).unwrap().value;
        let r = 0.5 * cap;
        for n in 1..=2 {
            let m = ((n as f64) * r).exp();
            let wn = bsc.tensor_power(n, &lim).unwrap();
            let plain = crate::oneshot::ns_error(m, &wn, &lim).unwrap().eps;
            let activated = crate::oneshot::ns_error(2.0 * m, &wn.with_ideal_bit(&lim).unwrap(), &lim)
                .unwrap()
                .eps;
            assert!((plain - activated).abs() < 1e-6, "n={n}: {plain} vs {activated}");
        }
    }

    #[test]
    fn formula_open_vs_closed_alpha_interval() {
        // For r above the weighted critical rate, the supremum over
        // (0,1) equals the supremum over (0,1]: the optimizer is interior.
        let w = CQChannel::binary_symmetric(0.1).unwrap();
        let (rc, _) = capacities::critical_rate_quadratic(&w, 42).unwrap();
        let cap = capacities::holevo_capacity(&w).unwrap().value;
        let r = 0.5 * (rc + cap).min(0.9 * cap);
        let p = sphere_packing_exponent(&w, r, 42).unwrap();
        let mut open_best = f64::NEG_INFINITY;
        for i in 1..=999 {
            let a = i as f64 / 1000.0;
            let c = capacities::renyi_capacity(&w, a, 42).unwrap().value;
            open_best = open_best.max((1.0 - a) / a * (c - r));
        }
        assert!((p.exponent - open_best).abs() < 1e-5, "{} vs {open_best}", p.exponent);
    }
}

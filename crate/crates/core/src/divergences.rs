//! Quantum divergences: Petz and sandwiched Renyi families, Umegaki
//! relative entropy, hypothesis-testing divergence, and Renyi mutual
//! information with an iteratively minimized reference marginal.
//!
//! Support conventions follow the usual definitions. For `alpha > 1` both
//! Renyi families require `supp(rho) <= supp(sigma)` and are `+inf`
//! otherwise; for `alpha < 1` they are `+inf` exactly when the supports
//! are orthogonal. `alpha = 1` always dispatches to the relative entropy,
//! never to a limiting formula.

use nalgebra::DMatrix;

use crate::herm::{self, DensityOperator, HermitianOperator, C64, SUPPORT_CUTOFF};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    Petz,
    Sandwiched,
    Umegaki,
    Hypothesis,
}

/// A divergence evaluation; `value` may be `f64::INFINITY` under the
/// support conventions.
#[derive(Debug, Clone, Copy)]
pub struct DivergenceValue {
    pub value: f64,
    pub alpha: f64,
    pub kind: DivergenceKind,
}

struct Spectra {
    rho_vals: Vec<f64>,
    sigma_vals: Vec<f64>,
    /// `|<phi_i|psi_j>|^2` overlap matrix between eigenbases.
    overlap: Vec<Vec<f64>>,
    rho_cut: f64,
    sigma_cut: f64,
}

fn spectra(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<Spectra> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let dr = rho.eigh()?;
    let ds = sigma.eigh()?;
    let d = rho.dim();
    let cross = dr.eigenvectors.adjoint() * &ds.eigenvectors;
    let overlap: Vec<Vec<f64>> =
        (0..d).map(|i| (0..d).map(|j| cross[(i, j)].norm_sqr()).collect()).collect();
    let rmax = dr.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let smax = ds.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    Ok(Spectra {
        rho_vals: dr.eigenvalues,
        sigma_vals: ds.eigenvalues,
        overlap,
        rho_cut: SUPPORT_CUTOFF * rmax.max(f64::MIN_POSITIVE),
        sigma_cut: SUPPORT_CUTOFF * smax.max(f64::MIN_POSITIVE),
    })
}

impl Spectra {
    /// Mass of `rho` outside the support of `sigma`.
    fn escape_mass(&self) -> f64 {
        let mut acc = 0.0;
        for (i, &l) in self.rho_vals.iter().enumerate() {
            if l <= self.rho_cut {
                continue;
            }
            for (j, &m) in self.sigma_vals.iter().enumerate() {
                if m <= self.sigma_cut {
                    acc += l * self.overlap[i][j];
                }
            }
        }
        acc
    }

    /// `tr(rho^a sigma^b)` restricted to both supports.
    fn trace_power_product(&self, a: f64, b: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &l) in self.rho_vals.iter().enumerate() {
            if l <= self.rho_cut {
                continue;
            }
            let la = l.powf(a);
            for (j, &m) in self.sigma_vals.iter().enumerate() {
                if m <= self.sigma_cut {
                    continue;
                }
                acc += la * m.powf(b) * self.overlap[i][j];
            }
        }
        acc
    }
}

/// Petz Renyi divergence `D_a(rho || sigma) = log tr(rho^a sigma^(1-a)) / (a-1)`
/// for `a` in `(0,1) + (1,2]`; `a = 1` dispatches to [`relative_entropy`].
pub fn petz_divergence(rho: &DensityOperator, sigma: &HermitianOperator, alpha: f64) -> Result<DivergenceValue> {
    if alpha <= 0.0 || alpha > 2.0 {
        return Err(Error::InvalidInput(format!("petz divergence needs alpha in (0,2], got {alpha}")));
    }
    if alpha == 1.0 {
        return relative_entropy(rho, sigma);
    }
    let sp = spectra(rho.as_herm(), sigma)?;
    let value = if alpha < 1.0 {
        let q = sp.trace_power_product(alpha, 1.0 - alpha);
        if q <= 0.0 {
            f64::INFINITY
        } else {
            q.ln() / (alpha - 1.0)
        }
    } else {
        if sp.escape_mass() > 1e-9 {
            f64::INFINITY
        } else {
            let q = sp.trace_power_product(alpha, 1.0 - alpha);
            q.ln() / (alpha - 1.0)
        }
    };
    Ok(DivergenceValue { value, alpha, kind: DivergenceKind::Petz })
}

/// Sandwiched Renyi divergence
/// `D~_a(rho || sigma) = log tr[(sigma^((1-a)/2a) rho sigma^((1-a)/2a))^a] / (a-1)`
/// for `a >= 1/2`, `a != 1` (dispatched to [`relative_entropy`]).
pub fn sandwiched_divergence(
    rho: &DensityOperator,
    sigma: &HermitianOperator,
    alpha: f64,
) -> Result<DivergenceValue> {
    if alpha < 0.5 {
        return Err(Error::InvalidInput(format!("sandwiched divergence needs alpha >= 1/2, got {alpha}")));
    }
    if alpha == 1.0 {
        let mut v = relative_entropy(rho, sigma)?;
        v.kind = DivergenceKind::Sandwiched;
        return Ok(v);
    }
    let sp = spectra(rho.as_herm(), sigma)?;
    if alpha > 1.0 && sp.escape_mass() > 1e-9 {
        return Ok(DivergenceValue { value: f64::INFINITY, alpha, kind: DivergenceKind::Sandwiched });
    }
    let t = (1.0 - alpha) / (2.0 * alpha);
    let st = sigma.power_psd(t)?;
    let sandwich = HermitianOperator::new(st.matrix() * rho.matrix() * st.matrix())?;
    let q: f64 =
        sandwich.eigh()?.eigenvalues.iter().map(|l| l.max(0.0).powf(alpha)).sum();
    let value = if q <= 0.0 { f64::INFINITY } else { q.ln() / (alpha - 1.0) };
    Ok(DivergenceValue { value, alpha, kind: DivergenceKind::Sandwiched })
}

/// Umegaki relative entropy `tr rho (log rho - log sigma)`, `+inf` unless
/// `supp(rho) <= supp(sigma)`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &HermitianOperator) -> Result<DivergenceValue> {
    let sp = spectra(rho.as_herm(), sigma)?;
    if sp.escape_mass() > 1e-9 {
        return Ok(DivergenceValue { value: f64::INFINITY, alpha: 1.0, kind: DivergenceKind::Umegaki });
    }
    let mut h = 0.0;
    for &l in &sp.rho_vals {
        if l > sp.rho_cut {
            h += l * l.ln();
        }
    }
    let mut cross = 0.0;
    for (i, &l) in sp.rho_vals.iter().enumerate() {
        if l <= sp.rho_cut {
            continue;
        }
        for (j, &m) in sp.sigma_vals.iter().enumerate() {
            if m > sp.sigma_cut {
                cross += l * sp.overlap[i][j] * m.ln();
            }
        }
    }
    Ok(DivergenceValue { value: h - cross, alpha: 1.0, kind: DivergenceKind::Umegaki })
}

/// Hypothesis-testing divergence
/// `D_H^eps(rho || sigma) = -log min{ tr(sigma O) : 0 <= O <= I, tr(rho O) >= 1 - eps }`,
/// solved as a semidefinite program.
pub fn hypothesis_testing_divergence(
    rho: &DensityOperator,
    sigma: &HermitianOperator,
    eps: f64,
) -> Result<DivergenceValue> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidInput(format!("hypothesis test needs eps in [0,1), got {eps}")));
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    if eps == 0.0 {
        // tr(rho O) = 1 forces O to act as the identity on supp(rho), and
        // the cross blocks of O then vanish; the minimum is the sigma-mass
        // of the support projector. The program has no interior here, so
        // the closed form replaces the solver.
        let proj = rho.as_herm().support_projector()?;
        let beta = proj.dot(sigma).max(0.0);
        let value = if beta <= 1e-12 { f64::INFINITY } else { -beta.ln() };
        return Ok(DivergenceValue { value, alpha: f64::NAN, kind: DivergenceKind::Hypothesis });
    }
    let d = rho.dim();
    // Blocks: O, S = I - O, scalar slack u with tr(rho O) - u = 1 - eps.
    let mut problem = crate::sdp::SdpProblem::new(vec![d, d, 1]);
    problem.set_objective(0, sigma.matrix().clone())?;
    for (i, j, re) in herm::hermitian_basis(d) {
        let basis = herm::basis_matrix(d, i, j, re);
        let rhs = if i == j { 1.0 } else { 0.0 };
        problem.add_constraint(vec![(0, basis.clone()), (1, basis)], rhs)?;
    }
    problem.add_constraint(
        vec![(0, rho.matrix().clone()), (2, DMatrix::from_element(1, 1, C64::new(-1.0, 0.0)))],
        1.0 - eps,
    )?;
    let opts = crate::sdp::SolveOptions::default();
    let sol = crate::sdp::solve(&problem, &opts)?.require_optimal()?;
    let beta = sol.primal_value.max(0.0);
    let value = if beta <= 5.0 * opts.feas_tol { f64::INFINITY } else { -beta.ln() };
    Ok(DivergenceValue { value, alpha: f64::NAN, kind: DivergenceKind::Hypothesis })
}

/// Result of the inner minimization in the Renyi mutual information.
#[derive(Debug, Clone)]
pub struct MutualInformation {
    pub value: f64,
    pub sigma: DensityOperator,
    pub converged: bool,
}

/// Renyi mutual information
/// `I_a(rho_AB || tau_A) = inf_{sigma_B} D_a(rho_AB || tau_A (x) sigma_B)`
/// for `a` in `(0, 1]`, solved by exponentiated-gradient ascent on the
/// trace functional with three starts (maximally mixed, the B-marginal,
/// and a seeded random state). Requires `supp(rho_A) <= supp(tau_A)`.
pub fn renyi_mutual_information(
    rho_ab: &DensityOperator,
    dims: (usize, usize),
    tau_a: &HermitianOperator,
    alpha: f64,
    seed: u64,
) -> Result<MutualInformation> {
    let (da, db) = dims;
    if rho_ab.dim() != da * db {
        return Err(Error::DimensionMismatch(rho_ab.dim(), da * db));
    }
    if tau_a.dim() != da {
        return Err(Error::DimensionMismatch(tau_a.dim(), da));
    }
    if !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("mutual information needs alpha in (0,1], got {alpha}")));
    }
    let rho_a = HermitianOperator::new(herm::partial_trace_right(rho_ab.matrix(), da, db)?)?;
    let rho_a_dens = DensityOperator::from_noisy(&rho_a, 1e-9)?;
    let escape = spectra(rho_a_dens.as_herm(), tau_a)?.escape_mass();
    if escape > 1e-9 {
        return Err(Error::InvalidInput("tau_A does not dominate the A-marginal".into()));
    }
    let rho_b = DensityOperator::from_noisy(
        &HermitianOperator::new(herm::partial_trace_left(rho_ab.matrix(), da, db)?)?,
        1e-9,
    )?;

    if alpha == 1.0 {
        // Gibbs argument: the minimizer is the B-marginal.
        let sigma = rho_b;
        let joint = tau_kron(tau_a, sigma.as_herm());
        let value = relative_entropy(rho_ab, &joint)?.value;
        return Ok(MutualInformation { value, sigma, converged: true });
    }

    // Maximize Q(sigma) = tr(K sigma^(1-alpha)) with
    // K = tr_A[(tau^((1-a)/2) (x) I) rho^a (tau^((1-a)/2) (x) I)] >= 0.
    let rho_pow = rho_ab.as_herm().power_psd(alpha)?;
    let tau_half = tau_a.power_psd((1.0 - alpha) / 2.0)?;
    let lift = tau_half.kron(&HermitianOperator::identity(db));
    let inner = HermitianOperator::new(lift.matrix() * rho_pow.matrix() * lift.matrix())?;
    let k_b = HermitianOperator::new(herm::partial_trace_left(inner.matrix(), da, db)?)?;

    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let starts = [
        DensityOperator::maximally_mixed(db),
        rho_b.clone(),
        crate::random::random_density(&mut rng, db),
    ];

    let mut best: Option<(f64, DensityOperator, bool)> = None;
    for start in starts {
        let (q, sigma, converged) = ascend_trace_power(&k_b, 1.0 - alpha, &start)?;
        if best.as_ref().map(|(bq, _, _)| q > *bq).unwrap_or(true) {
            best = Some((q, sigma, converged));
        }
    }
    let (q, sigma, converged) = best.expect("three starts");
    let value = if q <= 0.0 { f64::INFINITY } else { q.ln() / (alpha - 1.0) };
    Ok(MutualInformation { value, sigma, converged })
}

fn tau_kron(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    a.kron(b)
}

/// Exponentiated-gradient ascent of the concave functional
/// `sigma -> tr(K sigma^s)` over density operators, `s` in `(0,1)`.
fn ascend_trace_power(
    k: &HermitianOperator,
    s: f64,
    start: &DensityOperator,
) -> Result<(f64, DensityOperator, bool)> {
    let db = k.dim();
    let objective = |sigma: &DensityOperator| -> Result<f64> {
        Ok(k.dot(&sigma.as_herm().power_psd(s)?))
    };
    let mut sigma = start.clone();
    let mut q = objective(&sigma)?;
    let mut eta = 1.0;
    let mut stall = 0;
    let mut converged = false;
    for _ in 0..4000 {
        let dec = sigma.eigh()?;
        // Fretchet gradient of tr(K sigma^s) via first divided differences
        // of x^s on the spectrum of sigma.
        let u = &dec.eigenvectors;
        let kt = u.adjoint() * k.matrix() * u;
        let n = db;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let (li, lj) = (dec.eigenvalues[i].max(1e-300), dec.eigenvalues[j].max(1e-300));
                let dd = if (li - lj).abs() < 1e-12 * li.max(lj) {
                    s * li.powf(s - 1.0)
                } else {
                    (li.powf(s) - lj.powf(s)) / (li - lj)
                };
                g[(i, j)] = kt[(i, j)] * C64::new(dd, 0.0);
            }
        }
        let grad = HermitianOperator::new(u * g * u.adjoint())?;
        // Multiplicative (entropic mirror) update with backtracking.
        let logs = sigma.as_herm().eigh()?.map(|l| l.max(1e-280).ln());
        let mut improved = false;
        for _ in 0..40 {
            let step = logs.add(&grad.scale(eta))?;
            let dec_step = step.eigh()?;
            let shift = dec_step.eigenvalues.last().copied().unwrap_or(0.0);
            let unnorm = dec_step.map(|l| (l - shift).exp());
            let cand = DensityOperator::from_noisy(&unnorm, 0.0)?;
            let qc = objective(&cand)?;
            if qc > q {
                sigma = cand;
                let rel = (qc - q) / q.abs().max(1e-300);
                q = qc;
                improved = true;
                if rel < 0.5e-8 * (1.0 - s).max(1e-3) {
                    stall += 1;
                } else {
                    stall = 0;
                }
                eta = (eta * 1.6).min(64.0);
                break;
            }
            eta *= 0.5;
            if eta < 1e-12 {
                break;
            }
        }
        if !improved || stall >= 3 {
            converged = true;
            break;
        }
    }
    Ok((q, sigma, converged))
}

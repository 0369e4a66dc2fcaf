//! One-shot coding programs with non-signaling assistance.
//!
//! The non-signaling success probability of sending `M` messages through
//! a classical-quantum channel is the semidefinite program
//!
//! ```text
//! sup_(Lambda, p)  (1/M) sum_x tr(Lambda_x W_x)
//! s.t.             sum_x Lambda_x = I          (meta-converse: <= I)
//!                  0 <= Lambda_x <= p(x) I
//!                  sum_x p(x) = M
//! ```
//!
//! and the meta-converse relaxation replaces the equality by `<= I`. Both
//! programs admit saddle duals in terms of the non-commutative minimum,
//!
//! ```text
//! eps = inf_p sup_B  sum_x p(x) tr(W_x /\ M B) - tr(B),
//! ```
//!
//! with `B >= 0` for the meta-converse and Hermitian `B` for plain
//! non-signaling codes. Granting one perfect classical bit ties the two:
//! `eps_mc(M, W) = eps_ns(2M, W (x) I_2)`.
//!
//! Before constructing a program the outputs are jointly
//! block-diagonalized over the basis components of their common support
//! pattern; decoder operators can be restricted to the same block
//! structure without loss (a pinching argument), which turns classical
//! embeddings into linear programs.

use nalgebra::DMatrix;

use crate::channels::{CQChannel, InputDistribution, QuantumChannelChoi};
use crate::herm::{self, basis_matrix, hermitian_basis, ncmin, DensityOperator, HermitianOperator, C64};
use crate::sdp::{self, SdpProblem, SolveOptions};
use crate::{Error, Limits, Result};

/// Optimal value of a one-shot coding program with its witnesses.
#[derive(Debug, Clone)]
pub struct OneShotSolution {
    /// Error probability in `[0, 1]`.
    pub eps: f64,
    /// Input weights `p(x)` summing to `M`.
    pub weights: Vec<f64>,
    /// Decoder operators `Lambda_x`.
    pub decoder: Vec<HermitianOperator>,
}

/// Saddle point of the non-commutative-minimum dual.
#[derive(Debug, Clone)]
pub struct SaddlePoint {
    pub weights: InputDistribution,
    pub dual_op: HermitianOperator,
    pub value: f64,
    pub iterations: usize,
}

/// Two sides of the activation identity and their gap.
#[derive(Debug, Clone, Copy)]
pub struct ActivationCheck {
    pub mc_value: f64,
    pub activated_ns_value: f64,
    pub gap: f64,
}

struct Layout {
    k: usize,
    comps: Vec<Vec<usize>>,
    mc: bool,
    free_weights: bool,
}

impl Layout {
    fn nb(&self) -> usize {
        self.comps.len()
    }
    fn lambda(&self, x: usize, c: usize) -> usize {
        x * self.nb() + c
    }
    fn slack(&self, x: usize, c: usize) -> usize {
        (self.k + x) * self.nb() + c
    }
    fn cap_block(&self, c: usize) -> usize {
        debug_assert!(self.mc);
        2 * self.k * self.nb() + c
    }
    fn weight(&self, x: usize) -> usize {
        2 * self.k * self.nb() + if self.mc { self.nb() } else { 0 } + x
    }
}

fn coding_program(
    m_val: f64,
    w: &CQChannel,
    mc: bool,
    fixed_weights: Option<&[f64]>,
    limits: &Limits,
) -> Result<(SdpProblem, Layout)> {
    let k = w.alphabet_size();
    let comps = w.support_blocks();
    let layout = Layout { k, comps, mc, free_weights: fixed_weights.is_none() };
    let sum_d: usize = layout.comps.iter().map(|c| c.len()).sum();
    let total = 2 * k * sum_d + if mc { sum_d } else { 0 } + if layout.free_weights { k } else { 0 };
    if total > limits.max_dim {
        return Err(Error::ResourceLimit(format!(
            "coding program dimension {total} exceeds cap {}",
            limits.max_dim
        )));
    }

    let mut dims = Vec::new();
    for _ in 0..(2 * k) {
        for c in &layout.comps {
            dims.push(c.len());
        }
    }
    if mc {
        for c in &layout.comps {
            dims.push(c.len());
        }
    }
    if layout.free_weights {
        dims.extend(std::iter::repeat(1).take(k));
    }
    let mut problem = SdpProblem::new(dims);

    // Objective: maximize (1/M) sum_x tr(Lambda_x W_x).
    for x in 0..k {
        for (c, comp) in layout.comps.iter().enumerate() {
            let sub = w.output_submatrix(x, comp);
            problem.set_objective(layout.lambda(x, c), sub.map(|v| v * C64::new(-1.0 / m_val, 0.0)))?;
        }
    }

    // sum_x Lambda_x (+ T) = I, per component and Hermitian basis element.
    for (c, comp) in layout.comps.iter().enumerate() {
        let d = comp.len();
        for (i, j, re) in hermitian_basis(d) {
            let basis = basis_matrix(d, i, j, re);
            let mut entries: Vec<(usize, DMatrix<C64>)> =
                (0..k).map(|x| (layout.lambda(x, c), basis.clone())).collect();
            if mc {
                entries.push((layout.cap_block(c), basis.clone()));
            }
            let rhs = if i == j { 1.0 } else { 0.0 };
            problem.add_constraint(entries, rhs)?;
        }
    }

    // Lambda_x + S_x = p(x) I per component.
    for x in 0..k {
        for (c, comp) in layout.comps.iter().enumerate() {
            let d = comp.len();
            for (i, j, re) in hermitian_basis(d) {
                let basis = basis_matrix(d, i, j, re);
                let mut entries =
                    vec![(layout.lambda(x, c), basis.clone()), (layout.slack(x, c), basis.clone())];
                let mut rhs = 0.0;
                if i == j {
                    match fixed_weights {
                        Some(ws) => rhs = ws[x].max(1e-9 * m_val),
                        None => entries.push((
                            layout.weight(x),
                            DMatrix::from_element(1, 1, C64::new(-1.0, 0.0)),
                        )),
                    }
                }
                problem.add_constraint(entries, rhs)?;
            }
        }
    }

    // sum_x p(x) = M.
    if layout.free_weights {
        let entries: Vec<(usize, DMatrix<C64>)> = (0..k)
            .map(|x| (layout.weight(x), DMatrix::from_element(1, 1, C64::new(1.0, 0.0))))
            .collect();
        problem.add_constraint(entries, m_val)?;
    }

    Ok((problem, layout))
}

fn solve_coding(
    m_val: f64,
    w: &CQChannel,
    mc: bool,
    fixed_weights: Option<&[f64]>,
    limits: &Limits,
) -> Result<OneShotSolution> {
    if m_val < 1.0 {
        return Err(Error::InvalidInput(format!("message count must be >= 1, got {m_val}")));
    }
    if m_val <= 1.0 + 1e-12 {
        // A single message needs no channel information.
        let k = w.alphabet_size();
        let mut weights = vec![0.0; k];
        weights[0] = m_val;
        let mut decoder = vec![HermitianOperator::zeros(w.dim()); k];
        decoder[0] = HermitianOperator::identity(w.dim());
        return Ok(OneShotSolution { eps: 0.0, weights, decoder });
    }
    let (problem, layout) = coding_program(m_val, w, mc, fixed_weights, limits)?;
    let sol = sdp::solve(&problem, &SolveOptions::default())?.require_optimal()?;
    let eps = (1.0 + sol.primal_value).clamp(0.0, 1.0);
    let k = w.alphabet_size();
    let weights = match fixed_weights {
        Some(ws) => ws.to_vec(),
        None => (0..k).map(|x| sol.primal_point[layout.weight(x)].matrix()[(0, 0)].re).collect(),
    };
    let d = w.dim();
    let mut decoder = Vec::with_capacity(k);
    for x in 0..k {
        let mut full = DMatrix::zeros(d, d);
        for (c, comp) in layout.comps.iter().enumerate() {
            let blk = sol.primal_point[layout.lambda(x, c)].matrix();
            for (bi, &gi) in comp.iter().enumerate() {
                for (bj, &gj) in comp.iter().enumerate() {
                    full[(gi, gj)] = blk[(bi, bj)];
                }
            }
        }
        decoder.push(HermitianOperator::new(full)?);
    }
    Ok(OneShotSolution { eps, weights, decoder })
}

/// Optimal non-signaling error probability `eps_ns(M, W)`.
pub fn ns_error(m_val: f64, w: &CQChannel, limits: &Limits) -> Result<OneShotSolution> {
    solve_coding(m_val, w, false, None, limits)
}

/// Meta-converse error probability `eps_mc(M, W)`.
pub fn mc_error(m_val: f64, w: &CQChannel, limits: &Limits) -> Result<OneShotSolution> {
    solve_coding(m_val, w, true, None, limits)
}

/// Non-signaling value at fixed input weights (summing to `M`).
pub fn ns_error_fixed_weights(weights: &[f64], w: &CQChannel, limits: &Limits) -> Result<OneShotSolution> {
    if weights.len() != w.alphabet_size() {
        return Err(Error::DimensionMismatch(weights.len(), w.alphabet_size()));
    }
    let m_val: f64 = weights.iter().sum();
    solve_coding(m_val, w, false, Some(weights), limits)
}

/// Checks `eps_mc(M, W) = eps_ns(2M, W (x) I_2)` by solving both sides.
pub fn activation_check(m_val: f64, w: &CQChannel, limits: &Limits) -> Result<ActivationCheck> {
    let mc = mc_error(m_val, w, limits)?.eps;
    let activated = ns_error(2.0 * m_val, &w.with_ideal_bit(limits)?, limits)?.eps;
    Ok(ActivationCheck { mc_value: mc, activated_ns_value: activated, gap: (mc - activated).abs() })
}

/// Saddle objective `sum_x p(x) tr(W_x /\ M B) - tr(B)`, evaluated exactly
/// through the non-commutative minimum.
pub fn dual_objective(
    p: &InputDistribution,
    b: &HermitianOperator,
    m_val: f64,
    w: &CQChannel,
) -> Result<f64> {
    if p.len() != w.alphabet_size() {
        return Err(Error::DimensionMismatch(p.len(), w.alphabet_size()));
    }
    let mb = b.scale(m_val);
    let mut acc = -b.trace();
    for (x, &px) in p.probabilities().iter().enumerate() {
        if px > 0.0 {
            acc += px * ncmin(w.output(x).as_herm(), &mb)?.trace();
        }
    }
    Ok(acc)
}

/// Inner supremum over `B` for fixed normalized weights, solved through
/// the Lagrangian form `min tr(B) + M sum_x p_x tr(C_x)` with
/// `C_x >= W_x / M - B`. For the Hermitian variant `B = B+ - B-` with a
/// generous trace cap that restores a strictly feasible dual.
fn inner_dual(p: &[f64], m_val: f64, w: &CQChannel, hermitian: bool) -> Result<(f64, HermitianOperator)> {
    let k = w.alphabet_size();
    let d = w.dim();
    let p: Vec<f64> = p.iter().map(|&v| v.max(1e-8)).collect();
    let norm: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|v| v / norm).collect();

    // Blocks: B (or B+, B-), C_x.., S_x.., then the cap slack for the
    // Hermitian split.
    let nb_b = if hermitian { 2 } else { 1 };
    let mut dims = vec![d; nb_b + 2 * k];
    if hermitian {
        dims.push(1);
    }
    let mut problem = SdpProblem::new(dims);
    problem.set_objective(0, DMatrix::identity(d, d))?;
    if hermitian {
        problem.set_objective(1, DMatrix::<C64>::identity(d, d).map(|v| -v))?;
    }
    for x in 0..k {
        let scale = C64::new(m_val * p[x], 0.0);
        problem.set_objective(nb_b + x, DMatrix::<C64>::identity(d, d).map(|v| v * scale))?;
    }
    // C_x + B(+ - B-) - S_x = W_x / M.
    for x in 0..k {
        let wref = w.output(x).matrix();
        for (i, j, re) in hermitian_basis(d) {
            let basis = basis_matrix(d, i, j, re);
            let mut entries = vec![
                (nb_b + x, basis.clone()),
                (0, basis.clone()),
                (nb_b + k + x, basis.map(|v| -v)),
            ];
            if hermitian {
                entries.push((1, basis.map(|v| -v)));
            }
            let rhs = if i == j {
                wref[(i, i)].re / m_val
            } else if re {
                2.0 * wref[(i, j)].re / m_val
            } else {
                2.0 * wref[(i, j)].im / m_val
            };
            problem.add_constraint(entries, rhs)?;
        }
    }
    if hermitian {
        // tr(B+) + tr(B-) + u = R keeps the split bounded; R never binds
        // at coding optima where tr|B| stays O(1).
        let r_cap = 64.0;
        let cap_slack = nb_b + 2 * k;
        problem.add_constraint(
            vec![
                (0, DMatrix::identity(d, d)),
                (1, DMatrix::identity(d, d)),
                (cap_slack, DMatrix::from_element(1, 1, C64::new(1.0, 0.0))),
            ],
            r_cap,
        )?;
    }
    let sol = sdp::solve(&problem, &SolveOptions::default())?.require_optimal()?;
    let eps = (1.0 - (sol.primal_value)).clamp(0.0, 1.0);
    let b = if hermitian {
        sol.primal_point[0].sub(&sol.primal_point[1])?
    } else {
        sol.primal_point[0].clone()
    };
    Ok((eps, b))
}

/// Solves `inf_p sup_B` by Kelley cutting planes over the simplex: every
/// inner maximizer `B` yields the affine minorant
/// `p -> sum_x p(x) tr(W_x /\ M B) - tr(B)` of the convex objective.
fn dual_saddle(m_val: f64, w: &CQChannel, hermitian: bool) -> Result<SaddlePoint> {
    let k = w.alphabet_size();
    if m_val <= 1.0 + 1e-12 {
        return Ok(SaddlePoint {
            weights: InputDistribution::uniform(k),
            dual_op: HermitianOperator::zeros(w.dim()),
            value: 0.0,
            iterations: 0,
        });
    }
    // Cuts (a, c): eps(p) >= a . p - c. B = 0 gives eps >= 0.
    let mut cuts: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; k], 0.0)];
    let mut p = vec![1.0 / k as f64; k];
    let mut best_val = f64::INFINITY;
    let mut best_p = p.clone();
    let mut best_b = HermitianOperator::zeros(w.dim());
    let mut stall = 0;
    let mut iterations = 0;

    for it in 0..400 {
        iterations = it + 1;
        let (val, b) = inner_dual(&p, m_val, w, hermitian)?;
        let mb = b.scale(m_val);
        let mut a = vec![0.0; k];
        for x in 0..k {
            a[x] = ncmin(w.output(x).as_herm(), &mb)?.trace();
        }
        let c = b.trace();
        cuts.push((a, c));

        let improvement = best_val - val;
        if val < best_val {
            best_val = val;
            best_p = p.clone();
            best_b = b;
        }
        if improvement.abs() < 1e-7 * best_val.max(1e-3) {
            stall += 1;
        } else {
            stall = 0;
        }

        let (p_next, lower) = cutting_plane_lp(&cuts, k)?;
        if best_val - lower <= 1e-8_f64.max(1e-7 * best_val) || stall >= 5 {
            break;
        }
        p = p_next;
    }
    Ok(SaddlePoint {
        weights: InputDistribution::new(best_p)?,
        dual_op: best_b,
        value: best_val,
        iterations,
    })
}

/// LP `min t s.t. t >= a_k . p - c_k, p in simplex`, solved with the SDP
/// machinery over scalar blocks. Returns the argmin and the bound.
fn cutting_plane_lp(cuts: &[(Vec<f64>, f64)], k: usize) -> Result<(Vec<f64>, f64)> {
    let nc = cuts.len();
    // Blocks: t, p_0..p_{k-1}, s_0..s_{nc-1}.
    let dims = vec![1usize; 1 + k + nc];
    let mut problem = SdpProblem::new(dims);
    problem.set_objective(0, DMatrix::from_element(1, 1, C64::new(1.0, 0.0)))?;
    let one = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    let entries: Vec<(usize, DMatrix<C64>)> = (0..k).map(|x| (1 + x, one.clone())).collect();
    problem.add_constraint(entries, 1.0)?;
    for (ci, (a, c)) in cuts.iter().enumerate() {
        let mut entries = vec![(0, one.clone())];
        for (x, &ax) in a.iter().enumerate() {
            if ax != 0.0 {
                entries.push((1 + x, DMatrix::from_element(1, 1, C64::new(-ax, 0.0))));
            }
        }
        entries.push((1 + k + ci, DMatrix::from_element(1, 1, C64::new(-1.0, 0.0))));
        problem.add_constraint(entries, -c)?;
    }
    let sol = sdp::solve(&problem, &SolveOptions::default())?.require_optimal()?;
    let mut p: Vec<f64> = (0..k).map(|x| sol.primal_point[1 + x].matrix()[(0, 0)].re.max(0.0)).collect();
    let s: f64 = p.iter().sum();
    for v in &mut p {
        *v /= s;
    }
    Ok((p, sol.primal_value))
}

/// Meta-converse saddle `inf_p sup_{B >= 0}`; value agrees with
/// [`mc_error`] by strong duality.
pub fn mc_dual_saddle(m_val: f64, w: &CQChannel) -> Result<SaddlePoint> {
    dual_saddle(m_val, w, false)
}

/// Non-signaling saddle `inf_p sup_{B = B^dag}`; value agrees with
/// [`ns_error`].
pub fn ns_dual_saddle(m_val: f64, w: &CQChannel) -> Result<SaddlePoint> {
    dual_saddle(m_val, w, true)
}

/// Meta-converse value and witnesses for a fully quantum channel. The
/// program is jointly convex in `(rho_R, Lambda)`:
///
/// ```text
/// 1 - eps = sup  (1/M) tr(Lambda J)
///           s.t. tr_R Lambda <= I_B,  0 <= Lambda <= M rho_R (x) I_B,
///                rho_R a state,
/// ```
///
/// so a single solve returns a certified optimum.
#[derive(Debug, Clone)]
pub struct QuantumCoding {
    pub eps: f64,
    pub rho_r: DensityOperator,
    pub z_b: HermitianOperator,
}

pub fn quantum_mc_error(m_val: f64, j: &QuantumChannelChoi, limits: &Limits) -> Result<QuantumCoding> {
    if m_val < 1.0 {
        return Err(Error::InvalidInput(format!("message count must be >= 1, got {m_val}")));
    }
    let dr = j.dim_in();
    let db = j.dim_out();
    let drb = dr * db;
    let total = dr + 2 * drb + db;
    if total > limits.max_dim {
        return Err(Error::ResourceLimit(format!(
            "quantum coding dimension {total} exceeds cap {}",
            limits.max_dim
        )));
    }
    if m_val <= 1.0 + 1e-12 {
        return Ok(QuantumCoding {
            eps: 0.0,
            rho_r: DensityOperator::maximally_mixed(dr),
            z_b: HermitianOperator::zeros(db),
        });
    }
    // Blocks: rho_R, Lambda_RB, S_RB, T_B.
    let mut problem = SdpProblem::new(vec![dr, drb, drb, db]);
    problem.set_objective(1, j.choi().matrix().map(|v| v * C64::new(-1.0 / m_val, 0.0)))?;
    problem.add_constraint(vec![(0, DMatrix::identity(dr, dr))], 1.0)?;
    for (i, jj, re) in hermitian_basis(drb) {
        let basis = basis_matrix(drb, i, jj, re);
        let marg = herm::partial_trace_right(&basis, dr, db)?;
        let entries = vec![
            (1, basis.clone()),
            (2, basis.clone()),
            (0, marg.map(|v| v * C64::new(-m_val, 0.0))),
        ];
        problem.add_constraint(entries, 0.0)?;
    }
    let mut cap_duals = Vec::new();
    for (i, jj, re) in hermitian_basis(db) {
        let basis = basis_matrix(db, i, jj, re);
        let lifted = DMatrix::<C64>::identity(dr, dr).kronecker(&basis);
        let rhs = if i == jj { 1.0 } else { 0.0 };
        problem.add_constraint(vec![(1, lifted), (3, basis)], rhs)?;
        cap_duals.push((i, jj, re));
    }
    let sol = sdp::solve(&problem, &SolveOptions::default())?.require_optimal()?;
    let eps = (1.0 + sol.primal_value).clamp(0.0, 1.0);
    let rho_r = DensityOperator::from_noisy(&sol.primal_point[0], 1e-7)?;
    // Assemble the dual operator on B from the multipliers of the
    // tr_R Lambda + T = I_B family (last db^2 constraints); the sign is
    // fixed by positivity.
    let m = problem.num_constraints();
    let base = m - cap_duals.len();
    let mut zmat = DMatrix::zeros(db, db);
    for (idx, &(i, jj, re)) in cap_duals.iter().enumerate() {
        let y = sol.dual_point[base + idx];
        let basis = basis_matrix(db, i, jj, re);
        zmat += basis.map(|v| v * C64::new(y, 0.0));
    }
    let cand = HermitianOperator::new(zmat)?;
    let z_b = if cand.min_eigenvalue()? >= -1e-7 { cand } else { cand.scale(-1.0) };
    Ok(QuantumCoding { eps, rho_r, z_b })
}

/// Saddle objective of the fully quantum dual,
/// `tr(sqrt(rho) J sqrt(rho) /\ M rho (x) Z) - tr(Z)`.
pub fn quantum_dual_objective(
    rho: &DensityOperator,
    z: &HermitianOperator,
    m_val: f64,
    j: &QuantumChannelChoi,
) -> Result<f64> {
    if rho.dim() != j.dim_in() || z.dim() != j.dim_out() {
        return Err(Error::DimensionMismatch(rho.dim() * z.dim(), j.dim_in() * j.dim_out()));
    }
    let sq = rho.as_herm().power_psd(0.5)?;
    let lift = sq.kron(&HermitianOperator::identity(j.dim_out()));
    let a = HermitianOperator::new(lift.matrix() * j.choi().matrix() * lift.matrix())?;
    let b = rho.as_herm().kron(z).scale(m_val);
    Ok(ncmin(&a, &b)?.trace() - z.trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn limits() -> Limits {
        Limits::default()
    }

    #[test]
    fn noiseless_binary_values() {
        let w = CQChannel::noiseless(2).unwrap();
        assert!(ns_error(1.0, &w, &limits()).unwrap().eps.abs() < 1e-9);
        let e4 = ns_error(4.0, &w, &limits()).unwrap().eps;
        assert!((e4 - 0.5).abs() < 1e-6, "{e4}");
        let m4 = mc_error(4.0, &w, &limits()).unwrap().eps;
        assert!((m4 - 0.5).abs() < 1e-6, "{m4}");
        let e3 = ns_error(3.0, &w, &limits()).unwrap().eps;
        assert!((e3 - (1.0 - 2.0 / 3.0)).abs() < 1e-6, "{e3}");
    }

    #[test]
    fn useless_channel_values() {
        let sigma = DensityOperator::maximally_mixed(2);
        let w = CQChannel::new(vec![sigma.clone(), sigma.clone(), sigma]).unwrap();
        for m in [2.0_f64, 3.0] {
            let e = ns_error(m, &w, &limits()).unwrap().eps;
            assert!((e - (1.0 - 1.0 / m)).abs() < 1e-6, "M={m}: {e}");
        }
    }

    #[test]
    fn ordering_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let w = random::random_cq_channel(&mut rng, 2, 2);
        let mut prev = -1.0;
        for m in [1.0, 2.0, 3.0, 4.0] {
            let ns = ns_error(m, &w, &limits()).unwrap().eps;
            let mc = mc_error(m, &w, &limits()).unwrap().eps;
            assert!(mc <= ns + 1e-8, "M={m}: mc={mc} ns={ns}");
            assert!(ns >= prev - 1e-8);
            prev = ns;
        }
    }

    #[test]
    fn classical_collapse() {
        let w = CQChannel::binary_symmetric(0.1).unwrap();
        for m in [2.0_f64, 3.0] {
            let ns = ns_error(m, &w, &limits()).unwrap().eps;
            let mc = mc_error(m, &w, &limits()).unwrap().eps;
            assert!((ns - mc).abs() < 1e-6, "M={m}: {ns} vs {mc}");
        }
    }

    #[test]
    fn activation_identity_cases() {
        let lim = limits();
        let w = CQChannel::noiseless(2).unwrap();
        let chk = activation_check(2.0, &w, &lim).unwrap();
        assert!(chk.mc_value.abs() < 1e-7 && chk.activated_ns_value.abs() < 1e-7);

        let bsc = CQChannel::binary_symmetric(0.1).unwrap();
        let chk = activation_check(3.0, &bsc, &lim).unwrap();
        assert!(chk.gap <= 1e-5, "gap {}", chk.gap);

        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let q = random::random_cq_channel(&mut rng, 2, 2);
        let chk = activation_check(2.0, &q, &lim).unwrap();
        assert!(chk.gap <= 1e-5, "gap {}", chk.gap);
    }

    #[test]
    fn dual_objective_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let w = random::random_cq_channel(&mut rng, 2, 2);
        let p = random::random_simplex(&mut rng, 2);
        // B = 0 gives exactly zero.
        let zero = HermitianOperator::zeros(2);
        assert!(dual_objective(&p, &zero, 2.0, &w).unwrap().abs() < 1e-15);
        // Weak duality: any feasible (p, B >= 0) lower-bounds eps_mc.
        let eps = mc_error(2.0, &w, &limits()).unwrap().eps;
        for _ in 0..10 {
            let b = random::random_psd(&mut rng, 2, 0.5);
            let v = dual_objective(&p, &b, 2.0, &w).unwrap();
            assert!(v <= eps + 1e-7, "{v} > {eps}");
        }
    }

    #[test]
    fn saddle_values_match_primal() {
        let w = CQChannel::noiseless(2).unwrap();
        let s = mc_dual_saddle(4.0, &w).unwrap();
        assert!((s.value - 0.5).abs() < 1e-5, "{}", s.value);
        let s3 = ns_dual_saddle(3.0, &w).unwrap();
        assert!((s3.value - (1.0 - 2.0 / 3.0)).abs() < 1e-5, "{}", s3.value);
        assert!(ns_dual_saddle(1.0, &w).unwrap().value.abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let q = random::random_cq_channel(&mut rng, 2, 2);
        let mc = mc_error(3.0, &q, &limits()).unwrap().eps;
        let sd = mc_dual_saddle(3.0, &q).unwrap();
        assert!((mc - sd.value).abs() < 1e-5, "{mc} vs {}", sd.value);
        let ns = ns_error(3.0, &q, &limits()).unwrap().eps;
        let sn = ns_dual_saddle(3.0, &q).unwrap();
        assert!((ns - sn.value).abs() < 1e-5, "{ns} vs {}", sn.value);
    }

    #[test]
    fn classical_saddles_coincide() {
        let w = CQChannel::binary_symmetric(0.15).unwrap();
        let a = mc_dual_saddle(3.0, &w).unwrap().value;
        let b = ns_dual_saddle(3.0, &w).unwrap().value;
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn symmetrized_optimum_achieves_value() {
        let lim = limits();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let w = random::random_cq_channel(&mut rng, 2, 2);
        let w2 = w.tensor_power(2, &lim).unwrap();
        let sol = ns_error(3.0, &w2, &lim).unwrap();
        let m: f64 = sol.weights.iter().sum();
        let normalized: Vec<f64> = sol.weights.iter().map(|v| v / m).collect();
        let sym = crate::channels::symmetrize_distribution(&normalized, 2, 2).unwrap();
        let sym_weights: Vec<f64> = sym.iter().map(|v| v * m).collect();
        let res = ns_error_fixed_weights(&sym_weights, &w2, &lim).unwrap();
        assert!((res.eps - sol.eps).abs() < 1e-6, "{} vs {}", res.eps, sol.eps);
    }

    #[test]
    fn quantum_identity_channel() {
        // A noiseless qubit with non-signaling (hence entanglement-level)
        // assistance carries two classical bits, dense-coding style: the
        // success probability is min(1, d^2 / M). Witness for M <= d^2:
        // Lambda = d Phi with rho_R maximally mixed is feasible and exact.
        let lim = limits();
        let j = QuantumChannelChoi::identity_channel(2).unwrap();
        let e2 = quantum_mc_error(2.0, &j, &lim).unwrap().eps;
        assert!(e2.abs() < 1e-6, "{e2}");
        let e4 = quantum_mc_error(4.0, &j, &lim).unwrap().eps;
        assert!(e4.abs() < 1e-6, "{e4}");
        let e8 = quantum_mc_error(8.0, &j, &lim).unwrap().eps;
        assert!((e8 - 0.5).abs() < 1e-6, "{e8}");
    }

    #[test]
    fn quantum_matches_cq_embedding() {
        let lim = limits();
        let bsc = CQChannel::binary_symmetric(0.1).unwrap();
        let cq_val = mc_error(2.0, &bsc, &lim).unwrap().eps;
        let q = quantum_mc_error(2.0, &bsc.choi().unwrap(), &lim).unwrap();
        assert!((q.eps - cq_val).abs() < 1e-4, "{} vs {cq_val}", q.eps);
        // The recovered witnesses evaluate the saddle objective to the
        // same value.
        let v = quantum_dual_objective(&q.rho_r, &q.z_b, 2.0, &bsc.choi().unwrap()).unwrap();
        assert!((v - q.eps).abs() < 1e-4, "{v} vs {}", q.eps);
    }
}

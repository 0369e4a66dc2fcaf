//! Small dense block-diagonal semidefinite program solver.
//!
//! Standard form over complex Hermitian block variables:
//!
//! ```text
//! minimize    tr(C X)
//! subject to  tr(A_i X) = b_i   for i = 1..m
//!             X >= 0 blockwise
//! ```
//!
//! A block of dimension 1 is a nonnegative scalar, so linear programs
//! embed directly. The solver is an infeasible-start primal-dual interior
//! point method with Nesterov-Todd scaling and a Mehrotra
//! predictor-corrector step. It is deterministic: fixed identity-like
//! initial point, no randomness.

use nalgebra::DMatrix;

use crate::herm::{HermitianOperator, C64};
use crate::{Error, Result};

/// Block-diagonal semidefinite program in standard (minimization) form.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    block_dims: Vec<usize>,
    objective: Vec<DMatrix<C64>>,
    constraints: Vec<SdpConstraint>,
}

/// One linear equality `sum_b tr(A_b X_b) = rhs` with per-block Hermitian
/// coefficient matrices (only the touched blocks are stored).
#[derive(Debug, Clone)]
pub struct SdpConstraint {
    pub entries: Vec<(usize, DMatrix<C64>)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_point: Vec<HermitianOperator>,
    pub dual_point: Vec<f64>,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Achieved relative duality gap at the returned point.
    pub gap: f64,
    /// Achieved relative primal and dual residual norms.
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

impl SdpSolution {
    /// Fails unless the solver certified optimality at the requested
    /// tolerances.
    pub fn require_optimal(self) -> Result<Self> {
        match self.status {
            SdpStatus::Optimal => Ok(self),
            SdpStatus::Infeasible => Err(Error::Infeasible),
            SdpStatus::Unbounded => Err(Error::Unbounded),
            SdpStatus::NumericalFailure => {
                Err(Error::NumericalFailure("interior point method did not converge".into()))
            }
        }
    }

    /// Accepts the solution if its achieved residuals certify the value
    /// to `tol`; degenerate instances can stall a little short of the
    /// strict defaults while still carrying a usable certificate.
    pub fn require_accuracy(self, tol: f64) -> Result<Self> {
        match self.status {
            SdpStatus::Optimal => Ok(self),
            SdpStatus::Infeasible => Err(Error::Infeasible),
            SdpStatus::Unbounded => Err(Error::Unbounded),
            SdpStatus::NumericalFailure => {
                if self.gap <= tol && self.primal_infeasibility <= tol && self.dual_infeasibility <= tol
                {
                    Ok(self)
                } else {
                    Err(Error::NumericalFailure(format!(
                        "interior point method stalled at gap {:.2e}, residuals {:.2e}/{:.2e}",
                        self.gap, self.primal_infeasibility, self.dual_infeasibility
                    )))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { gap_tol: 1e-8, feas_tol: 1e-8, max_iter: 200 }
    }
}

impl SdpProblem {
    pub fn new(block_dims: Vec<usize>) -> Self {
        let objective = block_dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        SdpProblem { block_dims, objective, constraints: Vec::new() }
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
        (m + m.adjoint()).map(|v| v * C64::new(0.5, 0.0))
    }

    fn check_block(&self, block: usize, m: &DMatrix<C64>) -> Result<()> {
        if block >= self.block_dims.len() {
            return Err(Error::InvalidInput(format!("block index {block} out of range")));
        }
        let d = self.block_dims[block];
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch(m.nrows(), d));
        }
        Ok(())
    }

    /// Sets the objective coefficient on one block (added to zero default).
    pub fn set_objective(&mut self, block: usize, m: DMatrix<C64>) -> Result<()> {
        self.check_block(block, &m)?;
        self.objective[block] = Self::hermitize(&m);
        Ok(())
    }

    pub fn add_constraint(&mut self, entries: Vec<(usize, DMatrix<C64>)>, rhs: f64) -> Result<()> {
        let mut fixed = Vec::with_capacity(entries.len());
        for (b, m) in entries {
            self.check_block(b, &m)?;
            fixed.push((b, Self::hermitize(&m)));
        }
        if fixed.is_empty() {
            return Err(Error::InvalidInput("constraint touches no block".into()));
        }
        self.constraints.push(SdpConstraint { entries: fixed, rhs });
        Ok(())
    }

    /// Plain-text dump for debugging. Sections: `blocks` (dimension list),
    /// `objective` (per-block `re,im` entries, row-major, one row per
    /// line), and `constraint k` (rhs followed by the touched blocks in
    /// the same entry format). Not a stable interchange format.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "blocks").unwrap();
        writeln!(s, "{}", self.block_dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ")).unwrap();
        writeln!(s, "objective").unwrap();
        for (b, m) in self.objective.iter().enumerate() {
            write_block(&mut s, b, m);
        }
        for (k, con) in self.constraints.iter().enumerate() {
            writeln!(s, "constraint {k}").unwrap();
            writeln!(s, "rhs {:.17e}", con.rhs).unwrap();
            for (b, m) in &con.entries {
                write_block(&mut s, *b, m);
            }
        }
        s
    }
}

fn write_block(s: &mut String, index: usize, m: &DMatrix<C64>) {
    use std::fmt::Write;
    writeln!(s, "block {index}").unwrap();
    for i in 0..m.nrows() {
        let row: Vec<String> =
            (0..m.ncols()).map(|j| format!("{:.17e},{:.17e}", m[(i, j)].re, m[(i, j)].im)).collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
}

/// Negates the objective so a maximization program fits the standard
/// minimization form; `solve(max_form(p)).primal_value == -solve(p).primal_value`.
pub fn max_form(problem: &SdpProblem) -> SdpProblem {
    let mut out = problem.clone();
    for m in &mut out.objective {
        *m = m.map(|v| -v);
    }
    out
}

// ---------------------------------------------------------------------------
// Solver internals
// ---------------------------------------------------------------------------

type BlockMat = Vec<DMatrix<C64>>;

fn bm_zeros(dims: &[usize]) -> BlockMat {
    dims.iter().map(|&d| DMatrix::zeros(d, d)).collect()
}

fn bm_identity(dims: &[usize], scale: f64) -> BlockMat {
    dims.iter().map(|&d| DMatrix::identity(d, d).map(|v: C64| v * C64::new(scale, 0.0))).collect()
}

fn bm_dot(a: &BlockMat, b: &BlockMat) -> f64 {
    let mut acc = 0.0;
    for (ma, mb) in a.iter().zip(b) {
        for j in 0..ma.ncols() {
            for i in 0..ma.nrows() {
                acc += (ma[(i, j)] * mb[(j, i)]).re;
            }
        }
    }
    acc
}

fn bm_norm(a: &BlockMat) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn bm_axpy(y: &mut BlockMat, alpha: f64, x: &BlockMat) {
    let c = C64::new(alpha, 0.0);
    for (my, mx) in y.iter_mut().zip(x) {
        for (vy, vx) in my.iter_mut().zip(mx.iter()) {
            *vy += c * *vx;
        }
    }
}

fn hermitize_block(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).map(|v| v * C64::new(0.5, 0.0))
}

/// Hermitian eigendecomposition used inside the solver; stays on raw
/// matrices to avoid repeated validation.
fn raw_eigh(m: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = m.nrows();
    if n == 1 {
        let v = m[(0, 0)].re;
        if !v.is_finite() {
            return Err(Error::NumericalFailure("non-finite iterate in solver".into()));
        }
        return Ok((vec![v], DMatrix::identity(1, 1)));
    }
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite iterate in solver".into()));
    }
    let dec = HermitianOperator::new(m.clone())?.eigh()?;
    Ok((dec.eigenvalues, dec.eigenvectors))
}

fn spectral_map(m: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<C64>> {
    let (vals, vecs) = raw_eigh(m)?;
    let n = m.nrows();
    let mut diag = DMatrix::zeros(n, n);
    for k in 0..n {
        diag[(k, k)] = C64::new(f(vals[k]), 0.0);
    }
    Ok(&vecs * diag * vecs.adjoint())
}

/// Largest step `t` with `X + t D >= 0`, given `X > 0`.
fn max_step(x: &DMatrix<C64>, d: &DMatrix<C64>) -> Result<f64> {
    if x.nrows() == 1 {
        let dv = d[(0, 0)].re;
        if dv >= 0.0 {
            return Ok(f64::INFINITY);
        }
        return Ok(-x[(0, 0)].re / dv);
    }
    let chol = nalgebra::linalg::Cholesky::new(x.clone())
        .ok_or_else(|| Error::NumericalFailure("iterate left the cone".into()))?;
    let l = chol.l();
    let y1 = l
        .solve_lower_triangular(d)
        .ok_or_else(|| Error::NumericalFailure("singular factor in step computation".into()))?;
    let y2 = l
        .solve_lower_triangular(&y1.adjoint())
        .ok_or_else(|| Error::NumericalFailure("singular factor in step computation".into()))?;
    let sym = hermitize_block(&y2.adjoint());
    let (vals, _) = raw_eigh(&sym)?;
    let lmin = vals[0];
    if lmin >= -1e-300 {
        Ok(f64::INFINITY)
    } else {
        Ok(-1.0 / lmin)
    }
}

fn block_max_step(x: &BlockMat, d: &BlockMat) -> Result<f64> {
    let mut t = f64::INFINITY;
    for (mx, md) in x.iter().zip(d) {
        t = t.min(max_step(mx, md)?);
    }
    Ok(t)
}

/// Left-looking Cholesky on a column-major square matrix; returns false if
/// the matrix is not positive definite.
fn chol_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        for k in 0..j {
            let ljk = a[k * n + j];
            if ljk != 0.0 {
                let (col_k, col_j) = {
                    let base_k = k * n;
                    let base_j = j * n;
                    debug_assert!(base_k + n <= base_j || base_j + n <= base_k || k == j);
                    (base_k, base_j)
                };
                for i in j..n {
                    a[col_j + i] -= ljk * a[col_k + i];
                }
            }
        }
        let d = a[j * n + j];
        if !(d > 0.0) {
            return false;
        }
        let r = d.sqrt();
        a[j * n + j] = r;
        let inv = 1.0 / r;
        for i in (j + 1)..n {
            a[j * n + i] *= inv;
        }
    }
    true
}

fn chol_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for j in 0..n {
        y[j] /= l[j * n + j];
        let yj = y[j];
        for i in (j + 1)..n {
            y[i] -= l[j * n + i] * yj;
        }
    }
    for j in (0..n).rev() {
        let mut acc = y[j];
        for i in (j + 1)..n {
            acc -= l[j * n + i] * y[i];
        }
        y[j] = acc / l[j * n + j];
    }
    y
}

struct Preprocessed {
    // Per constraint: touched blocks with dense coefficient and the sparse
    // entry triples used for fast trace inner products. Constraints are
    // normalized to unit Frobenius scale; `scales` maps duals back.
    cons: Vec<Vec<(usize, DMatrix<C64>, Vec<(usize, usize, C64)>)>>,
    rhs: Vec<f64>,
    scales: Vec<f64>,
    // Per block: list of (constraint index, slot in that constraint).
    block_cons: Vec<Vec<(usize, usize)>>,
}

fn preprocess(problem: &SdpProblem) -> Preprocessed {
    let mut cons = Vec::with_capacity(problem.constraints.len());
    let mut block_cons = vec![Vec::new(); problem.block_dims.len()];
    let mut rhs = Vec::with_capacity(problem.constraints.len());
    let mut scales = Vec::with_capacity(problem.constraints.len());
    for (ci, c) in problem.constraints.iter().enumerate() {
        let norm: f64 =
            c.entries.iter().map(|(_, m)| m.norm_squared()).sum::<f64>().sqrt().max(1e-12);
        let inv = C64::new(1.0 / norm, 0.0);
        let mut entry = Vec::with_capacity(c.entries.len());
        for (slot, (b, m)) in c.entries.iter().enumerate() {
            let scaled = m.map(|v| v * inv);
            let mut triples = Vec::new();
            for j in 0..scaled.ncols() {
                for i in 0..scaled.nrows() {
                    let v = scaled[(i, j)];
                    if v.norm_sqr() > 0.0 {
                        triples.push((i, j, v));
                    }
                }
            }
            block_cons[*b].push((ci, slot));
            entry.push((*b, scaled, triples));
        }
        cons.push(entry);
        rhs.push(c.rhs / norm);
        scales.push(norm);
    }
    Preprocessed { cons, rhs, scales, block_cons }
}

fn apply_a(pre: &Preprocessed, x: &BlockMat) -> Vec<f64> {
    pre.cons
        .iter()
        .map(|entry| {
            let mut acc = 0.0;
            for (b, _, triples) in entry {
                let xb = &x[*b];
                for &(i, j, v) in triples {
                    acc += (v * xb[(j, i)]).re;
                }
            }
            acc
        })
        .collect()
}

fn apply_at(pre: &Preprocessed, dims: &[usize], y: &[f64]) -> BlockMat {
    let mut out = bm_zeros(dims);
    for (ci, entry) in pre.cons.iter().enumerate() {
        let c = C64::new(y[ci], 0.0);
        for (b, m, _) in entry {
            let ob = &mut out[*b];
            for (vo, vm) in ob.iter_mut().zip(m.iter()) {
                *vo += c * *vm;
            }
        }
    }
    out
}

/// Solves the program. The returned status is `Optimal` only when the
/// duality gap and both residuals meet the tolerances; infeasibility and
/// unboundedness are reported through diverging-iterate certificates.
pub fn solve(problem: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution> {
    let dims = problem.block_dims.clone();
    let m = problem.constraints.len();
    if m == 0 {
        return Err(Error::InvalidInput("program must have at least one constraint".into()));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidInput("zero-dimensional block".into()));
    }
    let nu: usize = dims.iter().sum();
    let pre = preprocess(problem);
    let b = pre.rhs.clone();
    let c: BlockMat = problem.objective.clone();

    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let cnorm = bm_norm(&c);

    let eta_p = b.iter().map(|v| v.abs()).fold(1.0_f64, f64::max);
    let eta_d = (1.0 + cnorm / (nu as f64).sqrt()).max(1.0);
    let mut x = bm_identity(&dims, eta_p);
    let mut z = bm_identity(&dims, eta_d);
    let mut y = vec![0.0; m];

    let mut status = SdpStatus::NumericalFailure;
    let mut iterations = 0;
    // Best-merit iterate: near the boundary the Schur system turns
    // ill-conditioned and late steps can regress, so the returned point
    // is the best one visited rather than the last.
    let mut best: Option<(f64, BlockMat, Vec<f64>, BlockMat)> = None;
    let mut stall = 0usize;

    for iter in 0..opts.max_iter {
        iterations = iter;
        // Residuals and merit quantities.
        let ax = apply_a(&pre, &x);
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
        let aty = apply_at(&pre, &dims, &y);
        let mut rd = c.clone();
        bm_axpy(&mut rd, -1.0, &aty);
        bm_axpy(&mut rd, -1.0, &z);
        let mu = bm_dot(&x, &z) / nu as f64;
        if !mu.is_finite() {
            status = SdpStatus::NumericalFailure;
            break;
        }

        let pobj = bm_dot(&c, &x);
        let dobj: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
        let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + bnorm);
        let dinf = bm_norm(&rd) / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());

        if std::env::var_os("CQNS_SDP_TRACE").is_some() {
            eprintln!(
                "iter {iter}: mu={mu:.3e} gap={gap:.3e} pinf={pinf:.3e} dinf={dinf:.3e} pobj={pobj:.6e} dobj={dobj:.6e}"
            );
        }
        if gap <= opts.gap_tol && pinf <= opts.feas_tol && dinf <= opts.feas_tol {
            status = SdpStatus::Optimal;
            best = None;
            break;
        }
        let merit = (gap / opts.gap_tol).max(pinf / opts.feas_tol).max(dinf / opts.feas_tol);
        match &best {
            Some((bm, ..)) if merit >= 0.99 * bm => stall += 1,
            _ => {
                stall = 0;
                best = Some((merit, x.clone(), y.clone(), z.clone()));
            }
        }
        if stall >= 25 {
            break;
        }

        // Divergence certificates.
        let ynorm = y.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
        if ynorm > 1e9 {
            let yh: Vec<f64> = y.iter().map(|v| v / ynorm).collect();
            let s = apply_at(&pre, &dims, &yh);
            let mut lmax = f64::NEG_INFINITY;
            for sb in &s {
                let (vals, _) = raw_eigh(sb)?;
                lmax = lmax.max(*vals.last().unwrap());
            }
            let bty: f64 = b.iter().zip(&yh).map(|(bi, yi)| bi * yi).sum();
            if lmax <= 1e-7 && bty > 1e-7 {
                status = SdpStatus::Infeasible;
                break;
            }
        }
        let trx: f64 = x.iter().map(|mb| mb.trace().re).sum();
        if trx > 1e9 {
            let xh: BlockMat = x.iter().map(|mb| mb.map(|v| v / C64::new(trx, 0.0))).collect();
            let axh = apply_a(&pre, &xh);
            let feas = axh.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
            let cx = bm_dot(&c, &xh);
            if feas <= 1e-7 && cx < -1e-7 {
                status = SdpStatus::Unbounded;
                break;
            }
        }

        // Nesterov-Todd scaling point W with W Z W = X, blockwise.
        let mut w = Vec::with_capacity(dims.len());
        for (xb, zb) in x.iter().zip(&z) {
            if xb.nrows() == 1 {
                let val = (xb[(0, 0)].re / zb[(0, 0)].re).sqrt();
                w.push(DMatrix::from_element(1, 1, C64::new(val, 0.0)));
                continue;
            }
            let xh = spectral_map(xb, |l| l.max(1e-300).sqrt())?;
            let inner = hermitize_block(&(&xh * zb * &xh));
            let inner_mhalf = spectral_map(&inner, |l| 1.0 / l.max(1e-300).sqrt())?;
            w.push(hermitize_block(&(&xh * inner_mhalf * &xh)));
        }
        let zinv: BlockMat = z
            .iter()
            .map(|zb| {
                if zb.nrows() == 1 {
                    Ok(DMatrix::from_element(1, 1, C64::new(1.0 / zb[(0, 0)].re, 0.0)))
                } else {
                    spectral_map(zb, |l| 1.0 / l.max(1e-300))
                }
            })
            .collect::<Result<_>>()?;

        // Schur complement M_ij = tr(A_i W A_j W), shared by both solves.
        let mut waw: Vec<Vec<DMatrix<C64>>> = Vec::with_capacity(m);
        for entry in &pre.cons {
            let mut per = Vec::with_capacity(entry.len());
            for (bidx, dense, _) in entry {
                per.push(hermitize_block(&(&w[*bidx] * dense * &w[*bidx])));
            }
            waw.push(per);
        }
        let mut schur = vec![0.0_f64; m * m];
        for (bidx, list) in pre.block_cons.iter().enumerate() {
            let _ = bidx;
            for &(cj, slot_j) in list {
                let bj = &waw[cj][slot_j];
                for &(ci, slot_i) in list {
                    if ci > cj {
                        continue;
                    }
                    let triples = &pre.cons[ci][slot_i].2;
                    let mut acc = 0.0;
                    for &(r, cc, v) in triples {
                        acc += (v * bj[(cc, r)]).re;
                    }
                    schur[cj * m + ci] += acc;
                }
            }
        }
        // Assembly fills (row, col) with row <= col; mirror into the
        // lower triangle (column-major indexing is col * m + row).
        for j in 0..m {
            for i in (j + 1)..m {
                schur[j * m + i] = schur[i * m + j];
            }
        }
        // Factor with a small static ridge (iterative refinement corrects
        // it) and escalate if the factorization still fails.
        let base = schur.iter().step_by(m + 1).fold(0.0_f64, |a, &v| a.max(v)).max(1.0);
        let mut lfac = schur.clone();
        let mut ridge = 1e-13 * base;
        for k in 0..m {
            lfac[k * m + k] += ridge;
        }
        let mut ok = chol_in_place(&mut lfac, m);
        while !ok && ridge < 1e-6 * base {
            ridge = if ridge == 0.0 { 1e-12 * base } else { ridge * 100.0 };
            lfac = schur.clone();
            for k in 0..m {
                lfac[k * m + k] += ridge;
            }
            ok = chol_in_place(&mut lfac, m);
        }
        if !ok {
            status = SdpStatus::NumericalFailure;
            break;
        }

        // Residual rhs - M d with compensated (two-product / Neumaier)
        // accumulation: the plain f64 residual saturates at eps * cond(M)
        // and blocks iterative refinement near the boundary.
        let refine_residual = |rhs: &[f64], d: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; m];
            for (row, o) in out.iter_mut().enumerate() {
                let mut s = rhs[row];
                let mut comp = 0.0;
                for col in 0..m {
                    let a = -schur[col * m + row];
                    let bv = d[col];
                    let p = a * bv;
                    let perr = f64::mul_add(a, bv, -p);
                    let t = s + p;
                    if s.abs() >= p.abs() {
                        comp += (s - t) + p;
                    } else {
                        comp += (p - t) + s;
                    }
                    s = t;
                    comp += perr;
                }
                *o = s + comp;
            }
            out
        };
        let solve_direction = |rc: &BlockMat| -> Result<(BlockMat, Vec<f64>, BlockMat)> {
            // T = Rc - W Rd W
            let mut t = rc.clone();
            for (bi, tb) in t.iter_mut().enumerate() {
                let wrdw = hermitize_block(&(&w[bi] * &rd[bi] * &w[bi]));
                *tb -= wrdw;
            }
            let at = apply_a(&pre, &t);
            let rhs: Vec<f64> = rp.iter().zip(&at).map(|(r, a)| r - a).collect();
            // Cholesky with iterative refinement; the Schur matrix turns
            // ill-conditioned near the boundary and the raw solve injects
            // primal infeasibility otherwise.
            let mut dy = chol_solve(&lfac, m, &rhs);
            for _ in 0..3 {
                let resid = refine_residual(&rhs, &dy);
                let corr = chol_solve(&lfac, m, &resid);
                for (di, ci) in dy.iter_mut().zip(&corr) {
                    *di += ci;
                }
            }
            let atdy = apply_at(&pre, &dims, &dy);
            // dZ = Rd - A*(dy); dX = T + W A*(dy) W
            let mut dz = rd.clone();
            bm_axpy(&mut dz, -1.0, &atdy);
            let mut dx = t;
            for (bi, dxb) in dx.iter_mut().enumerate() {
                let v = hermitize_block(&(&w[bi] * &atdy[bi] * &w[bi]));
                *dxb += v;
            }
            Ok((dx, dy, dz))
        };

        // Predictor (affine scaling) direction.
        let rc_aff: BlockMat = x.iter().map(|xb| xb.map(|v| -v)).collect();
        let (dx_a, _dy_a, dz_a) = solve_direction(&rc_aff)?;
        if std::env::var_os("CQNS_SDP_TRACE").is_some() {
            let adx = apply_a(&pre, &dx_a);
            let err: f64 = adx.iter().zip(&rp).map(|(a, r)| (a - r) * (a - r)).sum::<f64>().sqrt();
            eprintln!("  |A(dX) - rp| = {err:.3e}");
        }
        let ap = block_max_step(&x, &dx_a)?.min(1.0);
        let ad = block_max_step(&z, &dz_a)?.min(1.0);
        let mut xa = x.clone();
        bm_axpy(&mut xa, 0.99 * ap, &dx_a);
        let mut za = z.clone();
        bm_axpy(&mut za, 0.99 * ad, &dz_a);
        let mu_aff = bm_dot(&xa, &za) / nu as f64;
        let mut sigma = (mu_aff / mu).powi(3).clamp(1e-8, 0.9);
        if gap <= opts.gap_tol && (pinf > opts.feas_tol || dinf > opts.feas_tol) {
            // The gap criterion is already met: hold the barrier and spend
            // the step on restoring feasibility.
            sigma = 1.0;
        }

        // Corrector with second-order term sym(dX_a dZ_a Z^{-1}); fall
        // back to a pure centering step when the correction shortens the
        // step drastically (the term misbehaves near the boundary).
        let mut rc = bm_zeros(&dims);
        for (bi, rcb) in rc.iter_mut().enumerate() {
            let second = hermitize_block(&(&dx_a[bi] * &dz_a[bi] * &zinv[bi]));
            let target = zinv[bi].map(|v| v * C64::new(sigma * mu, 0.0));
            *rcb = target - &x[bi] - second;
        }
        let (mut dx, mut dy, mut dz) = solve_direction(&rc)?;
        {
            let sp = block_max_step(&x, &dx)?.min(1.0);
            let sd = block_max_step(&z, &dz)?.min(1.0);
            if sp.min(sd) < 0.1 * ap.min(ad) {
                let mut rc2 = bm_zeros(&dims);
                for (bi, rcb) in rc2.iter_mut().enumerate() {
                    let target = zinv[bi].map(|v| v * C64::new(sigma.max(0.5) * mu, 0.0));
                    *rcb = target - &x[bi];
                }
                let fallback = solve_direction(&rc2)?;
                dx = fallback.0;
                dy = fallback.1;
                dz = fallback.2;
            }
        }

        let tau = if mu > 1e-6 { 0.98 } else { 0.998 };
        let mut ap = (tau * block_max_step(&x, &dx)?).min(1.0);
        let mut ad = (tau * block_max_step(&z, &dz)?).min(1.0);

        // Keep the iterate strictly inside the cone.
        for _ in 0..40 {
            let mut xt = x.clone();
            bm_axpy(&mut xt, ap, &dx);
            if xt.iter().all(|mb| is_pd(mb)) {
                x = xt;
                break;
            }
            ap *= 0.8;
        }
        for _ in 0..40 {
            let mut zt = z.clone();
            bm_axpy(&mut zt, ad, &dz);
            if zt.iter().all(|mb| is_pd(mb)) {
                z = zt;
                break;
            }
            ad *= 0.8;
        }
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += ad * di;
        }
    }

    // Fall back to the best visited iterate when the final one regressed.
    if let Some((merit, bx, by, bz)) = best {
        if status != SdpStatus::Infeasible && status != SdpStatus::Unbounded {
            x = bx;
            y = by;
            z = bz;
            if merit <= 1.0 {
                status = SdpStatus::Optimal;
            }
        }
    }

    let primal_value = bm_dot(&c, &x);
    let dual_value: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
    let ax = apply_a(&pre, &x);
    let pinf = b
        .iter()
        .zip(&ax)
        .map(|(bi, axi)| (bi - axi) * (bi - axi))
        .sum::<f64>()
        .sqrt()
        / (1.0 + bnorm);
    let mut rd = c.clone();
    bm_axpy(&mut rd, -1.0, &apply_at(&pre, &dims, &y));
    bm_axpy(&mut rd, -1.0, &z);
    let dinf = bm_norm(&rd) / (1.0 + cnorm);
    let gap = (primal_value - dual_value).abs() / (1.0 + primal_value.abs());
    let primal_point = x
        .into_iter()
        .map(|mb| HermitianOperator::new(mb).expect("square blocks"))
        .collect();
    // Duals are reported against the caller's (unnormalized) constraints.
    let dual_point: Vec<f64> = y.iter().zip(&pre.scales).map(|(yi, s)| yi / s).collect();
    Ok(SdpSolution {
        primal_value,
        dual_value,
        primal_point,
        dual_point,
        status,
        iterations,
        gap,
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
    })
}

fn is_pd(m: &DMatrix<C64>) -> bool {
    if m.nrows() == 1 {
        return m[(0, 0)].re > 0.0;
    }
    nalgebra::linalg::Cholesky::new(m.clone()).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::{basis_matrix, hermitian_basis};

    fn e(d: usize, i: usize, j: usize) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(d, d);
        m[(i, j)] = C64::new(1.0, 0.0);
        m
    }

    #[test]
    fn forced_trace_program() {
        // minimize tr(X) s.t. X_11 = 1, X >= 0 (dim 2): value 1.
        let mut p = SdpProblem::new(vec![2]);
        p.set_objective(0, DMatrix::identity(2, 2)).unwrap();
        p.add_constraint(vec![(0, e(2, 1, 1))], 1.0).unwrap();
        let sol = solve(&p, &SolveOptions::default()).unwrap().require_optimal().unwrap();
        assert!((sol.primal_value - 1.0).abs() < 1e-7, "{}", sol.primal_value);
        assert!(sol.dual_value <= sol.primal_value + 1e-9);
    }

    #[test]
    fn smallest_eigenvalue_program() {
        // maximize t s.t. C - t I >= 0 with C = diag(1,3): t = 1.
        // Variables: slack S (2x2), t+ and t- scalars; S + (t+ - t-) I = C.
        let mut p = SdpProblem::new(vec![2, 1, 1]);
        p.set_objective(1, DMatrix::from_element(1, 1, C64::new(-1.0, 0.0))).unwrap();
        p.set_objective(2, DMatrix::from_element(1, 1, C64::new(1.0, 0.0))).unwrap();
        let cmat = [[1.0, 0.0], [0.0, 3.0]];
        for (i, j, re) in hermitian_basis(2) {
            let basis = basis_matrix(2, i, j, re);
            let mut entries = vec![(0, basis)];
            if i == j {
                entries.push((1, DMatrix::from_element(1, 1, C64::new(1.0, 0.0))));
                entries.push((2, DMatrix::from_element(1, 1, C64::new(-1.0, 0.0))));
            }
            let rhs = if i == j {
                cmat[i][i]
            } else if re {
                2.0 * 0.0
            } else {
                0.0
            };
            p.add_constraint(entries, rhs).unwrap();
        }
        let sol = solve(&p, &SolveOptions::default()).unwrap().require_optimal().unwrap();
        assert!((-sol.primal_value - 1.0).abs() < 1e-7, "{}", sol.primal_value);
    }

    #[test]
    fn trace_norm_program() {
        // ||H||_1 = min tr(P + Q) s.t. P - Q = H; H = Pauli-X has value 2.
        let mut p = SdpProblem::new(vec![2, 2]);
        p.set_objective(0, DMatrix::identity(2, 2)).unwrap();
        p.set_objective(1, DMatrix::identity(2, 2)).unwrap();
        let h = [[0.0, 1.0], [1.0, 0.0]];
        for (i, j, re) in hermitian_basis(2) {
            let basis = basis_matrix(2, i, j, re);
            let rhs = if i == j {
                h[i][i]
            } else if re {
                2.0 * h[i][j]
            } else {
                0.0
            };
            p.add_constraint(vec![(0, basis.clone()), (1, basis.map(|v| -v))], rhs).unwrap();
        }
        let sol = solve(&p, &SolveOptions::default()).unwrap().require_optimal().unwrap();
        assert!((sol.primal_value - 2.0).abs() < 1e-7, "{}", sol.primal_value);
    }

    #[test]
    fn max_form_flips_value() {
        let mut p = SdpProblem::new(vec![2]);
        p.set_objective(0, DMatrix::identity(2, 2)).unwrap();
        p.add_constraint(vec![(0, e(2, 0, 0))], 1.0).unwrap();
        p.add_constraint(vec![(0, e(2, 1, 1))], 2.0).unwrap();
        let v = solve(&p, &SolveOptions::default()).unwrap().primal_value;
        let flipped = max_form(&p);
        let vf = solve(&flipped, &SolveOptions::default()).unwrap().primal_value;
        assert!((v + vf).abs() < 1e-7);
        let back = max_form(&flipped);
        let vb = solve(&back, &SolveOptions::default()).unwrap().primal_value;
        assert!((v - vb).abs() < 1e-12);
    }

    #[test]
    fn block_diagonal_matches_monolithic() {
        // Same data posed as two blocks and as one 4x4 block.
        let mut p2 = SdpProblem::new(vec![2, 2]);
        p2.set_objective(0, DMatrix::identity(2, 2)).unwrap();
        p2.set_objective(1, DMatrix::from_fn(2, 2, |i, j| if i == j { C64::new((i + 1) as f64, 0.0) } else { C64::new(0.0, 0.0) })).unwrap();
        p2.add_constraint(vec![(0, e(2, 0, 0)), (1, e(2, 1, 1))], 1.5).unwrap();
        p2.add_constraint(vec![(0, DMatrix::identity(2, 2)), (1, DMatrix::identity(2, 2))], 3.0).unwrap();

        let mut p1 = SdpProblem::new(vec![4]);
        let mut cbig = DMatrix::zeros(4, 4);
        cbig[(0, 0)] = C64::new(1.0, 0.0);
        cbig[(1, 1)] = C64::new(1.0, 0.0);
        cbig[(2, 2)] = C64::new(1.0, 0.0);
        cbig[(3, 3)] = C64::new(2.0, 0.0);
        p1.set_objective(0, cbig).unwrap();
        let mut a1 = DMatrix::zeros(4, 4);
        a1[(0, 0)] = C64::new(1.0, 0.0);
        a1[(3, 3)] = C64::new(1.0, 0.0);
        p1.add_constraint(vec![(0, a1)], 1.5).unwrap();
        p1.add_constraint(vec![(0, DMatrix::identity(4, 4))], 3.0).unwrap();

        let v2 = solve(&p2, &SolveOptions::default()).unwrap().require_optimal().unwrap();
        let v1 = solve(&p1, &SolveOptions::default()).unwrap().require_optimal().unwrap();
        assert!((v1.primal_value - v2.primal_value).abs() < 1e-7);
    }

    #[test]
    fn detects_infeasible() {
        // tr(x) = -1 with x >= 0 scalar.
        let mut p = SdpProblem::new(vec![1]);
        p.set_objective(0, DMatrix::from_element(1, 1, C64::new(1.0, 0.0))).unwrap();
        p.add_constraint(vec![(0, DMatrix::from_element(1, 1, C64::new(1.0, 0.0)))], -1.0).unwrap();
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // minimize -X_00 s.t. X_11 = 1, X >= 0: X_00 unbounded above.
        let mut p = SdpProblem::new(vec![2]);
        p.set_objective(0, e(2, 0, 0).map(|v| -v)).unwrap();
        p.add_constraint(vec![(0, e(2, 1, 1))], 1.0).unwrap();
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Unbounded);
    }

    #[test]
    fn deterministic_resolve() {
        let mut p = SdpProblem::new(vec![3]);
        p.set_objective(0, DMatrix::identity(3, 3)).unwrap();
        p.add_constraint(vec![(0, e(3, 0, 0))], 0.7).unwrap();
        p.add_constraint(vec![(0, e(3, 2, 2))], 0.3).unwrap();
        let a = solve(&p, &SolveOptions::default()).unwrap();
        let b = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(a.primal_value.to_bits(), b.primal_value.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn dump_has_sections() {
        let mut p = SdpProblem::new(vec![2, 1]);
        p.set_objective(0, DMatrix::identity(2, 2)).unwrap();
        p.add_constraint(vec![(0, e(2, 0, 0)), (1, DMatrix::from_element(1, 1, C64::new(1.0, 0.0)))], 1.0)
            .unwrap();
        let d = p.dump();
        assert!(d.contains("blocks\n2 1"));
        assert!(d.contains("objective"));
        assert!(d.contains("constraint 0"));
        assert!(d.contains("rhs"));
    }
}

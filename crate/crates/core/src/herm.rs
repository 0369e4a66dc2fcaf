//! Dense Hermitian linear algebra.
//!
//! Operators are stored as dense complex matrices and symmetrized to
//! `(H + H^dag)/2` at construction, so spectral routines always see an
//! exactly Hermitian input. Powers of singular positive operators follow
//! the support convention: zero eigenvalues map to zero for every
//! exponent, matching the support-restricted divergence definitions.

use nalgebra::{Complex, DMatrix, DVector};

use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Relative eigenvalue cutoff below which a PSD operator is treated as
/// singular (support convention).
pub const SUPPORT_CUTOFF: f64 = 1e-10;

/// Eigenvalue clamp used when casting noisy PSD operators (e.g. solver
/// output) to exact PSD form.
pub const PSD_CLAMP: f64 = 1e-10;

/// Dense Hermitian operator of dimension `dim >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: DMatrix<C64>,
}

impl HermitianOperator {
    /// Builds an operator from a square matrix, enforcing Hermiticity by
    /// symmetrization `(H + H^dag)/2`.
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(mat.nrows(), mat.ncols()));
        }
        if mat.nrows() == 0 {
            return Err(Error::InvalidInput("operator dimension must be >= 1".into()));
        }
        let sym = (&mat + mat.adjoint()).map(|v| v * C64::new(0.5, 0.0));
        Ok(HermitianOperator { mat: sym })
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator { mat: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator { mat: DMatrix::identity(dim, dim) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mat = DMatrix::from_fn(n, n, |i, j| {
            if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) }
        });
        HermitianOperator { mat }
    }

    /// Real matrix convenience constructor (symmetrized).
    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch(n, r.len()));
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)))
    }

    /// Rank-one projector `|v><v| / <v|v>`.
    pub fn projector(v: &DVector<C64>) -> Result<Self> {
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::InvalidInput("projector of the zero vector".into()));
        }
        let n = v.len();
        let mat = DMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj() / C64::new(norm2, 0.0));
        Ok(HermitianOperator { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Real Frobenius inner product `tr(A B)`.
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        let mut acc = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                acc += (self.mat[(i, j)] * other.mat[(j, i)]).re;
            }
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(HermitianOperator { mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(HermitianOperator { mat: &self.mat - &other.mat })
    }

    pub fn scale(&self, factor: f64) -> Self {
        HermitianOperator { mat: self.mat.map(|v| v * C64::new(factor, 0.0)) }
    }

    /// Hermitian tensor product.
    pub fn kron(&self, other: &Self) -> Self {
        HermitianOperator { mat: self.mat.kronecker(&other.mat) }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    /// Eigendecomposition with eigenvalues in ascending order and
    /// orthonormal eigenvector columns.
    ///
    /// A tridiagonalization-based solve is tried first; if its
    /// reconstruction misses the tolerance the slower cyclic Jacobi
    /// iteration takes over.
    pub fn eigh(&self) -> Result<SpectralDecomposition> {
        if self.mat.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NumericalFailure("non-finite entries in eigenvalue problem".into()));
        }
        let n = self.dim();
        let scale = self.frobenius_norm().max(1.0);
        if let Some(se) = nalgebra::linalg::SymmetricEigen::try_new(self.mat.clone(), 1.0e-14, 100_000)
        {
            if se.eigenvalues.iter().all(|l| l.is_finite()) {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
                let eigenvalues: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
                let mut eigenvectors = DMatrix::zeros(n, n);
                for (col, &k) in order.iter().enumerate() {
                    eigenvectors.set_column(col, &se.eigenvectors.column(k));
                }
                let dec = SpectralDecomposition { eigenvalues, eigenvectors };
                if (dec.reconstruct().mat - &self.mat).norm() <= 1e-10 * scale {
                    return Ok(dec);
                }
            }
        }
        let dec = jacobi_eigh(&self.mat)?;
        if (dec.reconstruct().mat - &self.mat).norm() > 1e-9 * scale {
            return Err(Error::NumericalFailure(
                "eigendecomposition reconstruction error too large".into(),
            ));
        }
        Ok(dec)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigh()?.eigenvalues[0])
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue().map(|l| l >= -tol).unwrap_or(false)
    }

    /// Positive part `X_+ = sum_i max(lambda_i, 0) P_i`.
    pub fn positive_part(&self) -> Result<Self> {
        Ok(self.eigh()?.map(|l| l.max(0.0)))
    }

    /// Negative part `X_- = sum_i max(-lambda_i, 0) P_i`, itself PSD.
    pub fn negative_part(&self) -> Result<Self> {
        Ok(self.eigh()?.map(|l| (-l).max(0.0)))
    }

    /// Operator absolute value `|X| = X_+ + X_-`.
    pub fn abs(&self) -> Result<Self> {
        Ok(self.eigh()?.map(f64::abs))
    }

    /// Trace norm `||X||_1`.
    pub fn trace_norm(&self) -> Result<f64> {
        Ok(self.eigh()?.eigenvalues.iter().map(|l| l.abs()).sum())
    }

    /// Schatten p-norm of a Hermitian operator.
    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        let ev = self.eigh()?.eigenvalues;
        Ok(ev.iter().map(|l| l.abs().powf(p)).sum::<f64>().powf(1.0 / p))
    }

    /// Fractional power of a PSD operator on its support; zero eigenvalues
    /// map to zero for every exponent (pseudo-power), so negative
    /// exponents act as pseudo-inverses.
    ///
    /// Eigenvalues in `[-1e-8 * scale, 0)` are clamped to zero; a genuinely
    /// negative spectrum is an error.
    pub fn power_psd(&self, t: f64) -> Result<Self> {
        let dec = self.eigh()?;
        let lmax = dec.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let scale = lmax.max(1.0);
        if dec.eigenvalues[0] < -1e-8 * scale {
            return Err(Error::NotPsd(dec.eigenvalues[0]));
        }
        let cutoff = SUPPORT_CUTOFF * lmax.max(f64::MIN_POSITIVE);
        Ok(dec.map(|l| if l <= cutoff { 0.0 } else { l.powf(t) }))
    }

    /// Natural logarithm on the support (zero eigenvalues map to zero).
    pub fn log_psd(&self) -> Result<Self> {
        let dec = self.eigh()?;
        let lmax = dec.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let scale = lmax.max(1.0);
        if dec.eigenvalues[0] < -1e-8 * scale {
            return Err(Error::NotPsd(dec.eigenvalues[0]));
        }
        let cutoff = SUPPORT_CUTOFF * lmax.max(f64::MIN_POSITIVE);
        Ok(dec.map(|l| if l <= cutoff { 0.0 } else { l.ln() }))
    }

    /// Projector onto the support of a PSD operator.
    pub fn support_projector(&self) -> Result<Self> {
        let dec = self.eigh()?;
        let lmax = dec.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let cutoff = SUPPORT_CUTOFF * lmax.max(f64::MIN_POSITIVE);
        Ok(dec.map(|l| if l > cutoff { 1.0 } else { 0.0 }))
    }
}

/// Cyclic Jacobi diagonalization for Hermitian matrices: slower than the
/// tridiagonal route but accurate to a few ulps on the dense small blocks
/// this crate uses.
fn jacobi_eigh(h: &DMatrix<C64>) -> Result<SpectralDecomposition> {
    let n = h.nrows();
    let mut a = h.clone();
    let mut v: DMatrix<C64> = DMatrix::identity(n, n);
    let norm = h.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..120 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-18 * norm {
                    continue;
                }
                let phase = apq / C64::new(mag, 0.0);
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = phase * C64::new(t * c, 0.0);
                // Column update A <- A R, then row update A <- R^dag A,
                // with R[p,p] = R[q,q] = c, R[q,p] = -conj(s), R[p,q] = s.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * C64::new(c, 0.0) - akq * s.conj();
                    a[(k, q)] = akp * s + akq * C64::new(c, 0.0);
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * C64::new(c, 0.0) - aqk * s;
                    a[(q, k)] = apk * s.conj() + aqk * C64::new(c, 0.0);
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * C64::new(c, 0.0) - vkq * s.conj();
                    v[(k, q)] = vkp * s + vkq * C64::new(c, 0.0);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        eigenvectors.set_column(col, &v.column(k));
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// Spectral decomposition `H = U diag(lambda) U^dag` with ascending
/// eigenvalues and unitary `U`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Applies a scalar function to the spectrum.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let n = self.dim();
        let u = &self.eigenvectors;
        let mut mat = DMatrix::zeros(n, n);
        for k in 0..n {
            let fl = f(self.eigenvalues[k]);
            if fl == 0.0 {
                continue;
            }
            let col = u.column(k);
            for j in 0..n {
                let cj = col[j].conj() * C64::new(fl, 0.0);
                for i in 0..n {
                    mat[(i, j)] += col[i] * cj;
                }
            }
        }
        HermitianOperator { mat }
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        self.map(|l| l)
    }
}

/// Density operator: PSD within clamp tolerance and unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    /// Validates PSD-ness (eigenvalues `>= -1e-10`, small negatives clamped
    /// to zero) and unit trace within `1e-10`.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let dec = op.eigh()?;
        if dec.eigenvalues[0] < -PSD_CLAMP {
            return Err(Error::NotPsd(dec.eigenvalues[0]));
        }
        let clamped = dec.map(|l| l.max(0.0));
        let tr = clamped.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("density operator trace {tr} is not 1")));
        }
        Ok(DensityOperator { op: clamped })
    }

    /// Casts a noisy PSD operator to a density operator by clamping the
    /// spectrum at `floor` and renormalizing the trace. Intended for
    /// solver output.
    pub fn from_noisy(op: &HermitianOperator, floor: f64) -> Result<Self> {
        let dec = op.eigh()?;
        if dec.eigenvalues[0] < -floor.max(PSD_CLAMP) {
            return Err(Error::NotPsd(dec.eigenvalues[0]));
        }
        let clamped = dec.map(|l| l.max(0.0));
        let tr = clamped.trace();
        if tr <= 0.0 {
            return Err(Error::InvalidInput("zero-trace operator".into()));
        }
        Ok(DensityOperator { op: clamped.scale(1.0 / tr) })
    }

    pub fn pure(v: &DVector<C64>) -> Result<Self> {
        Ok(DensityOperator { op: HermitianOperator::projector(v)? })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator { op: HermitianOperator::identity(dim).scale(1.0 / dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn as_herm(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.op.matrix()
    }

    pub fn kron(&self, other: &Self) -> Self {
        DensityOperator { op: self.op.kron(&other.op) }
    }

    pub fn eigh(&self) -> Result<SpectralDecomposition> {
        self.op.eigh()
    }
}

/// Non-commutative minimum `A /\ B = (A + B - |A - B|) / 2`.
///
/// Satisfies `A /\ B = A - (A - B)_+ = B - (B - A)_+`; for PSD arguments
/// its trace is the optimal two-outcome discrimination error
/// `inf_{0 <= O <= I} tr(A O) + tr(B (I - O))` (Helstrom).
pub fn ncmin(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let diff_abs = a.sub(b)?.abs()?;
    Ok(a.add(b)?.sub(&diff_abs)?.scale(0.5))
}

/// Optimal two-outcome discrimination value
/// `inf_{0 <= O <= I} tr(A O) + tr(B (I - O))`, computed as a semidefinite
/// program. Agrees with `tr(A /\ B)` for PSD inputs.
pub fn povm_min_trace(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let d = a.dim();
    // minimize tr((A - B) O) + tr(B)  s.t.  O + S = I, O, S >= 0
    let cost = a.sub(b)?;
    let mut problem = crate::sdp::SdpProblem::new(vec![d, d]);
    problem.set_objective(0, cost.matrix().clone())?;
    for (i, j, re) in hermitian_basis(d) {
        let basis = basis_matrix(d, i, j, re);
        let rhs = if i == j { 1.0 } else { 0.0 };
        problem.add_constraint(vec![(0, basis.clone()), (1, basis)], rhs)?;
    }
    let sol = crate::sdp::solve(&problem, &crate::sdp::SolveOptions::default())?;
    Ok(sol.primal_value + b.trace())
}

/// Enumerates the Hermitian matrix-unit basis of dimension `d` as
/// `(i, j, real_part)` triples: diagonal units, symmetric off-diagonal
/// pairs, and antisymmetric (imaginary) off-diagonal pairs.
pub fn hermitian_basis(d: usize) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push((i, i, true));
    }
    for i in 0..d {
        for j in (i + 1)..d {
            out.push((i, j, true));
            out.push((i, j, false));
        }
    }
    out
}

/// Hermitian basis element: `E_ii`, `E_ij + E_ji`, or `i(E_ij - E_ji)`.
pub fn basis_matrix(d: usize, i: usize, j: usize, re: bool) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(d, d);
    if i == j {
        m[(i, i)] = C64::new(1.0, 0.0);
    } else if re {
        m[(i, j)] = C64::new(1.0, 0.0);
        m[(j, i)] = C64::new(1.0, 0.0);
    } else {
        m[(i, j)] = C64::new(0.0, 1.0);
        m[(j, i)] = C64::new(0.0, -1.0);
    }
    m
}

/// Partial trace over the second factor of a `da x db` bipartite matrix.
pub fn partial_trace_right(m: &DMatrix<C64>, da: usize, db: usize) -> Result<DMatrix<C64>> {
    if m.nrows() != da * db || m.ncols() != da * db {
        return Err(Error::DimensionMismatch(m.nrows(), da * db));
    }
    let mut out = DMatrix::zeros(da, da);
    for i in 0..da {
        for j in 0..da {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..db {
                acc += m[(i * db + k, j * db + k)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Partial trace over the first factor of a `da x db` bipartite matrix.
pub fn partial_trace_left(m: &DMatrix<C64>, da: usize, db: usize) -> Result<DMatrix<C64>> {
    if m.nrows() != da * db || m.ncols() != da * db {
        return Err(Error::DimensionMismatch(m.nrows(), da * db));
    }
    let mut out = DMatrix::zeros(db, db);
    for i in 0..db {
        for j in 0..db {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..da {
                acc += m[(k * db + i, k * db + j)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

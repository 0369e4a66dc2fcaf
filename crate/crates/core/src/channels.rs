//! Classical-quantum and fully quantum channel representations, joint
//! states, tensor constructions, Choi matrices and the method of types.
//!
//! Alphabet order is fixed and explicit in every tensor construction:
//! length-`n` strings are enumerated lexicographically with the first
//! symbol most significant, and the ideal-bit extension enumerates input
//! pairs `(x, i)` with `x` most significant. This keeps variable indexing
//! reproducible across program constructions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::herm::{self, DensityOperator, HermitianOperator, C64};
use crate::{Error, Limits, Result};

/// Classical-quantum channel `x -> W_x` with a finite input alphabet and
/// density-operator outputs of common dimension.
#[derive(Debug, Clone)]
pub struct CQChannel {
    outputs: Vec<DensityOperator>,
}

impl CQChannel {
    pub fn new(outputs: Vec<DensityOperator>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::InvalidInput("channel needs at least one input symbol".into()));
        }
        let d = outputs[0].dim();
        for w in &outputs {
            if w.dim() != d {
                return Err(Error::DimensionMismatch(w.dim(), d));
            }
        }
        Ok(CQChannel { outputs })
    }

    pub fn alphabet_size(&self) -> usize {
        self.outputs.len()
    }

    pub fn dim(&self) -> usize {
        self.outputs[0].dim()
    }

    pub fn output(&self, x: usize) -> &DensityOperator {
        &self.outputs[x]
    }

    pub fn outputs(&self) -> &[DensityOperator] {
        &self.outputs
    }

    /// Embeds a column-stochastic matrix (`rows` outputs, `cols` inputs)
    /// as a channel with commuting diagonal outputs.
    pub fn classical_embed(stochastic: &[Vec<f64>]) -> Result<Self> {
        let rows = stochastic.len();
        if rows == 0 {
            return Err(Error::InvalidInput("empty stochastic matrix".into()));
        }
        let cols = stochastic[0].len();
        for r in stochastic {
            if r.len() != cols {
                return Err(Error::DimensionMismatch(r.len(), cols));
            }
        }
        let mut outputs = Vec::with_capacity(cols);
        for x in 0..cols {
            let mut col = vec![0.0; rows];
            let mut sum = 0.0;
            for y in 0..rows {
                let v = stochastic[y][x];
                if v < -1e-12 {
                    return Err(Error::InvalidInput(format!("negative transition probability {v}")));
                }
                col[y] = v.max(0.0);
                sum += col[y];
            }
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidInput(format!("column {x} sums to {sum}, expected 1")));
            }
            outputs.push(DensityOperator::new(HermitianOperator::from_diagonal(&col))?);
        }
        CQChannel::new(outputs)
    }

    /// Noiseless channel on `k` symbols (identity stochastic matrix).
    pub fn noiseless(k: usize) -> Result<Self> {
        let m: Vec<Vec<f64>> =
            (0..k).map(|r| (0..k).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect();
        Self::classical_embed(&m)
    }

    /// Binary symmetric channel embedding with flip probability `delta`.
    pub fn binary_symmetric(delta: f64) -> Result<Self> {
        Self::classical_embed(&[vec![1.0 - delta, delta], vec![delta, 1.0 - delta]])
    }

    /// True when all outputs are diagonal in the standard basis.
    pub fn is_classical(&self) -> bool {
        self.outputs.iter().all(|w| {
            let m = w.matrix();
            let mut off = 0.0;
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if i != j {
                        off += m[(i, j)].norm_sqr();
                    }
                }
            }
            off < 1e-24
        })
    }

    /// Joint classical-quantum state `sum_x p(x) |x><x| (x) W_x`.
    pub fn joint_state(&self, p: &InputDistribution) -> Result<DensityOperator> {
        if p.len() != self.alphabet_size() {
            return Err(Error::DimensionMismatch(p.len(), self.alphabet_size()));
        }
        let d = self.dim();
        let k = self.alphabet_size();
        let mut mat = DMatrix::zeros(k * d, k * d);
        for x in 0..k {
            let block = self.outputs[x].matrix();
            for i in 0..d {
                for j in 0..d {
                    mat[(x * d + i, x * d + j)] = block[(i, j)] * C64::new(p.probabilities()[x], 0.0);
                }
            }
        }
        DensityOperator::new(HermitianOperator::new(mat)?)
    }

    /// Average output `sum_x p(x) W_x`.
    pub fn average_output(&self, p: &InputDistribution) -> Result<DensityOperator> {
        if p.len() != self.alphabet_size() {
            return Err(Error::DimensionMismatch(p.len(), self.alphabet_size()));
        }
        let mut acc = HermitianOperator::zeros(self.dim());
        for (x, w) in self.outputs.iter().enumerate() {
            acc = acc.add(&w.as_herm().scale(p.probabilities()[x]))?;
        }
        DensityOperator::from_noisy(&acc, 1e-12)
    }

    /// `n`-fold tensor power with lexicographic alphabet order.
    pub fn tensor_power(&self, n: usize, limits: &Limits) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("tensor power needs n >= 1".into()));
        }
        let joint = (self.alphabet_size() as f64).powi(n as i32) * (self.dim() as f64).powi(n as i32);
        if joint > limits.max_dim as f64 {
            return Err(Error::ResourceLimit(format!(
                "tensor power joint dimension {joint:.0} exceeds cap {}",
                limits.max_dim
            )));
        }
        let mut outputs: Vec<DensityOperator> = self.outputs.clone();
        for _ in 1..n {
            let mut next = Vec::with_capacity(outputs.len() * self.alphabet_size());
            for prefix in &outputs {
                for w in &self.outputs {
                    next.push(prefix.kron(w));
                }
            }
            outputs = next;
        }
        CQChannel::new(outputs)
    }

    /// Adjoins one perfect classical bit: alphabet `X x {0, 1}` with
    /// outputs `W_x (x) |i><i|`.
    pub fn with_ideal_bit(&self, limits: &Limits) -> Result<Self> {
        let joint = 2 * self.alphabet_size() * 2 * self.dim();
        if joint > limits.max_dim {
            return Err(Error::ResourceLimit(format!(
                "ideal-bit extension joint dimension {joint} exceeds cap {}",
                limits.max_dim
            )));
        }
        let bit0 = DensityOperator::new(HermitianOperator::from_diagonal(&[1.0, 0.0]))?;
        let bit1 = DensityOperator::new(HermitianOperator::from_diagonal(&[0.0, 1.0]))?;
        let mut outputs = Vec::with_capacity(2 * self.alphabet_size());
        for w in &self.outputs {
            outputs.push(w.kron(&bit0));
            outputs.push(w.kron(&bit1));
        }
        CQChannel::new(outputs)
    }

    /// Choi matrix of the measure-and-prepare channel realizing this
    /// classical-quantum map: `J = sum_x |x><x| (x) W_x`, block diagonal
    /// over the reference system.
    pub fn choi(&self) -> Result<QuantumChannelChoi> {
        let k = self.alphabet_size();
        let d = self.dim();
        let mut mat = DMatrix::zeros(k * d, k * d);
        for x in 0..k {
            let block = self.outputs[x].matrix();
            for i in 0..d {
                for j in 0..d {
                    mat[(x * d + i, x * d + j)] = block[(i, j)];
                }
            }
        }
        QuantumChannelChoi::new(k, d, HermitianOperator::new(mat)?)
    }

    /// Finest partition of the output basis into index sets such that
    /// every output is block-diagonal with respect to it (connected
    /// components of the union of nonzero patterns). Classical channels
    /// reduce to singleton components.
    pub fn support_blocks(&self) -> Vec<Vec<usize>> {
        let d = self.dim();
        let mut adj = vec![vec![false; d]; d];
        for w in &self.outputs {
            let m = w.matrix();
            for i in 0..d {
                for j in 0..d {
                    if m[(i, j)].norm_sqr() > 1e-24 {
                        adj[i][j] = true;
                        adj[j][i] = true;
                    }
                }
            }
        }
        let mut seen = vec![false; d];
        let mut comps = Vec::new();
        for s in 0..d {
            if seen[s] {
                continue;
            }
            let mut stack = vec![s];
            let mut comp = Vec::new();
            seen[s] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for u in 0..d {
                    if adj[v][u] && !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Output restricted to a basis-index subset.
    pub fn output_submatrix(&self, x: usize, indices: &[usize]) -> DMatrix<C64> {
        let m = self.outputs[x].matrix();
        DMatrix::from_fn(indices.len(), indices.len(), |i, j| m[(indices[i], indices[j])])
    }
}

/// Probability distribution over the channel input alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    p: Vec<f64>,
}

impl InputDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        let mut sum = 0.0;
        for &v in &p {
            if v < -1e-12 {
                return Err(Error::InvalidInput(format!("negative probability {v}")));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("probabilities sum to {sum}, expected 1")));
        }
        Ok(InputDistribution { p: p.into_iter().map(|v| v.max(0.0)).collect() })
    }

    pub fn uniform(k: usize) -> Self {
        InputDistribution { p: vec![1.0 / k as f64; k] }
    }

    pub fn point_mass(k: usize, x: usize) -> Self {
        let mut p = vec![0.0; k];
        p[x] = 1.0;
        InputDistribution { p }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }
}

/// Fully quantum channel represented by its Choi matrix on `R (x) B` with
/// the reference system a copy of the input.
#[derive(Debug, Clone)]
pub struct QuantumChannelChoi {
    dim_in: usize,
    dim_out: usize,
    choi: HermitianOperator,
}

impl QuantumChannelChoi {
    /// Validates positivity (up to clamp tolerance) and trace
    /// preservation: the partial trace over the output equals the
    /// identity on the reference system.
    pub fn new(dim_in: usize, dim_out: usize, choi: HermitianOperator) -> Result<Self> {
        if choi.dim() != dim_in * dim_out {
            return Err(Error::DimensionMismatch(choi.dim(), dim_in * dim_out));
        }
        let lmin = choi.min_eigenvalue()?;
        if lmin < -1e-10 * choi.trace().abs().max(1.0) {
            return Err(Error::NotPsd(lmin));
        }
        let marginal = herm::partial_trace_right(choi.matrix(), dim_in, dim_out)?;
        let err = (&marginal - DMatrix::<C64>::identity(dim_in, dim_in)).norm();
        if err > 1e-9 * (dim_in as f64).sqrt() {
            return Err(Error::InvalidInput(format!(
                "channel is not trace preserving (marginal deviates by {err:.3e})"
            )));
        }
        Ok(QuantumChannelChoi { dim_in, dim_out, choi })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &HermitianOperator {
        &self.choi
    }

    /// Choi matrix of a unitary channel `X -> U X U^dag`.
    pub fn from_unitary(u: &DMatrix<C64>) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::DimensionMismatch(u.nrows(), u.ncols()));
        }
        let d = u.nrows();
        let mut mat = DMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                // block (i, j) of the reference system holds U E_ij U^dag
                for a in 0..d {
                    for b in 0..d {
                        mat[(i * d + a, j * d + b)] += u[(a, i)] * u[(b, j)].conj();
                    }
                }
            }
        }
        QuantumChannelChoi::new(d, d, HermitianOperator::new(mat)?)
    }

    pub fn identity_channel(d: usize) -> Result<Self> {
        Self::from_unitary(&DMatrix::identity(d, d))
    }

    /// Depolarizing channel `X -> (1-lam) X + lam tr(X) I/d`.
    pub fn depolarizing(d: usize, lam: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lam) {
            return Err(Error::InvalidInput("depolarizing parameter must be in [0,1]".into()));
        }
        let id = Self::identity_channel(d)?;
        let mut mat = id.choi.matrix().map(|v| v * C64::new(1.0 - lam, 0.0));
        for i in 0..d {
            for a in 0..d {
                mat[(i * d + a, i * d + a)] += C64::new(lam / d as f64, 0.0);
            }
        }
        QuantumChannelChoi::new(d, d, HermitianOperator::new(mat)?)
    }
}

/// Type (empirical composition) of length-`n` strings over an alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeComposition {
    counts: Vec<usize>,
}

impl TypeComposition {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidInput("empty type".into()));
        }
        Ok(TypeComposition { counts })
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// Empirical type of a string.
    pub fn of_string(s: &[usize], alphabet: usize) -> Self {
        let mut counts = vec![0usize; alphabet];
        for &x in s {
            counts[x] += 1;
        }
        TypeComposition { counts }
    }

    /// Number of strings with this type (multinomial coefficient).
    pub fn class_size(&self) -> f64 {
        let n = self.n();
        let mut log = 0.0;
        for k in 2..=n {
            log += (k as f64).ln();
        }
        for &c in &self.counts {
            for k in 2..=c {
                log -= (k as f64).ln();
            }
        }
        log.exp().round()
    }
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)?;
        acc /= i + 1;
    }
    Some(acc)
}

/// Exhaustive, duplicate-free enumeration of the types of length `n` over
/// an alphabet of size `k`, in lexicographic order of the count vectors.
pub fn enumerate_types(n: usize, alphabet_size: usize) -> Result<Vec<TypeComposition>> {
    if n == 0 || alphabet_size == 0 {
        return Err(Error::InvalidInput("types need n >= 1 and a nonempty alphabet".into()));
    }
    let count = binomial((n + alphabet_size - 1) as u128, (alphabet_size - 1) as u128)
        .ok_or_else(|| Error::ResourceLimit("type count overflows".into()))?;
    if count > 10_000_000 {
        return Err(Error::ResourceLimit(format!("{count} types exceed enumeration cap")));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0usize; alphabet_size];
    fill_types(n, 0, &mut current, &mut out);
    Ok(out)
}

fn fill_types(remaining: usize, pos: usize, current: &mut Vec<usize>, out: &mut Vec<TypeComposition>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(TypeComposition { counts: current.clone() });
        return;
    }
    for c in 0..=remaining {
        current[pos] = c;
        fill_types(remaining - c, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// Tensor product state `(x)_x W_x^{(x) n T_x}` in ascending symbol order.
pub fn type_product_state(w: &CQChannel, t: &TypeComposition, limits: &Limits) -> Result<DensityOperator> {
    if t.alphabet_size() != w.alphabet_size() {
        return Err(Error::DimensionMismatch(t.alphabet_size(), w.alphabet_size()));
    }
    let n = t.n();
    if n == 0 {
        return Err(Error::InvalidInput("empty type".into()));
    }
    let total = (w.dim() as f64).powi(n as i32);
    if total > limits.max_dim as f64 {
        return Err(Error::ResourceLimit(format!(
            "type product dimension {total:.0} exceeds cap {}",
            limits.max_dim
        )));
    }
    let mut acc: Option<DensityOperator> = None;
    for (x, &cnt) in t.counts().iter().enumerate() {
        for _ in 0..cnt {
            acc = Some(match acc {
                None => w.output(x).clone(),
                Some(a) => a.kron(w.output(x)),
            });
        }
    }
    Ok(acc.expect("n >= 1"))
}

/// Index of a length-`n` string in the lexicographic enumeration used by
/// `tensor_power`.
pub fn string_index(s: &[usize], alphabet: usize) -> usize {
    s.iter().fold(0, |acc, &x| acc * alphabet + x)
}

fn index_string(mut idx: usize, alphabet: usize, n: usize) -> Vec<usize> {
    let mut s = vec![0usize; n];
    for pos in (0..n).rev() {
        s[pos] = idx % alphabet;
        idx /= alphabet;
    }
    s
}

/// Symmetrizes a distribution over length-`n` strings by averaging within
/// each type class. Idempotent.
pub fn symmetrize_distribution(p: &[f64], n: usize, alphabet: usize) -> Result<Vec<f64>> {
    let total = (alphabet as f64).powi(n as i32);
    if (p.len() as f64 - total).abs() > 0.5 {
        return Err(Error::DimensionMismatch(p.len(), total as usize));
    }
    let types = enumerate_types(n, alphabet)?;
    let mut type_index = std::collections::HashMap::new();
    for (ti, t) in types.iter().enumerate() {
        type_index.insert(t.counts().to_vec(), ti);
    }
    let mut mass = vec![0.0; types.len()];
    let mut class = vec![0usize; p.len()];
    let mut class_count = vec![0usize; types.len()];
    for idx in 0..p.len() {
        let s = index_string(idx, alphabet, n);
        let t = TypeComposition::of_string(&s, alphabet);
        let ti = type_index[t.counts()];
        class[idx] = ti;
        class_count[ti] += 1;
        mass[ti] += p[idx];
    }
    Ok((0..p.len()).map(|idx| mass[class[idx]] / class_count[class[idx]] as f64).collect())
}

/// Decomposes a permutation-invariant distribution into type weights and
/// uniform-on-type components; returns `(type, weight)` pairs whose
/// mixture reconstructs the symmetrized input exactly.
pub fn decompose_by_type(p: &[f64], n: usize, alphabet: usize) -> Result<Vec<(TypeComposition, f64)>> {
    let total = (alphabet as f64).powi(n as i32);
    if (p.len() as f64 - total).abs() > 0.5 {
        return Err(Error::DimensionMismatch(p.len(), total as usize));
    }
    let types = enumerate_types(n, alphabet)?;
    let mut type_index = std::collections::HashMap::new();
    for (ti, t) in types.iter().enumerate() {
        type_index.insert(t.counts().to_vec(), ti);
    }
    let mut mass = vec![0.0; types.len()];
    for idx in 0..p.len() {
        let s = index_string(idx, alphabet, n);
        let t = TypeComposition::of_string(&s, alphabet);
        mass[type_index[t.counts()]] += p[idx];
    }
    Ok(types.into_iter().zip(mass).collect())
}

/// Uniform distribution supported on one type class.
pub fn uniform_on_type(t: &TypeComposition, alphabet: usize) -> Vec<f64> {
    let n = t.n();
    let len = alphabet.pow(n as u32);
    let size = t.class_size();
    let mut out = vec![0.0; len];
    for (idx, v) in out.iter_mut().enumerate() {
        let s = index_string(idx, alphabet, n);
        if TypeComposition::of_string(&s, alphabet) == *t {
            *v = 1.0 / size;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Channel-definition file format
// ---------------------------------------------------------------------------

/// On-disk channel description. `matrices` holds complex entries as
/// `[re, im]` pairs in row-major order:
///
/// - `kind = "cq"`: `alphabet` matrices of size `dim x dim` (the outputs).
/// - `kind = "classical"`: one `dim x alphabet` column-stochastic matrix.
/// - `kind = "choi"`: one `(alphabet * dim)`-square Choi matrix, with
///   `alphabet` the input dimension and `dim` the output dimension.
#[derive(Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    pub kind: String,
    pub alphabet: usize,
    pub dim: usize,
    pub matrices: Vec<Vec<[f64; 2]>>,
}

/// A parsed channel: classical-quantum or fully quantum.
#[derive(Debug, Clone)]
pub enum ChannelKind {
    Cq(CQChannel),
    Choi(QuantumChannelChoi),
}

pub fn parse_channel(text: &str) -> Result<ChannelKind> {
    let file: ChannelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let to_matrix = |entries: &Vec<[f64; 2]>, rows: usize, cols: usize| -> Result<DMatrix<C64>> {
        if entries.len() != rows * cols {
            return Err(Error::Parse(format!(
                "matrix has {} entries, expected {}",
                entries.len(),
                rows * cols
            )));
        }
        Ok(DMatrix::from_fn(rows, cols, |i, j| {
            let e = entries[i * cols + j];
            C64::new(e[0], e[1])
        }))
    };
    match file.kind.as_str() {
        "cq" => {
            if file.matrices.len() != file.alphabet {
                return Err(Error::Parse(format!(
                    "cq channel lists {} matrices for alphabet {}",
                    file.matrices.len(),
                    file.alphabet
                )));
            }
            let mut outputs = Vec::with_capacity(file.alphabet);
            for m in &file.matrices {
                let mat = to_matrix(m, file.dim, file.dim)?;
                outputs.push(
                    DensityOperator::new(HermitianOperator::new(mat)?)
                        .map_err(|e| Error::Parse(format!("invalid output state: {e}")))?,
                );
            }
            Ok(ChannelKind::Cq(CQChannel::new(outputs)?))
        }
        "classical" => {
            if file.matrices.len() != 1 {
                return Err(Error::Parse("classical channel needs exactly one matrix".into()));
            }
            let m = to_matrix(&file.matrices[0], file.dim, file.alphabet)?;
            let mut rows = Vec::with_capacity(file.dim);
            for i in 0..file.dim {
                let mut row = Vec::with_capacity(file.alphabet);
                for j in 0..file.alphabet {
                    let v = m[(i, j)];
                    if v.im.abs() > 1e-12 {
                        return Err(Error::Parse("classical channel entries must be real".into()));
                    }
                    row.push(v.re);
                }
                rows.push(row);
            }
            Ok(ChannelKind::Cq(
                CQChannel::classical_embed(&rows).map_err(|e| Error::Parse(e.to_string()))?,
            ))
        }
        "choi" => {
            if file.matrices.len() != 1 {
                return Err(Error::Parse("choi channel needs exactly one matrix".into()));
            }
            let d = file.alphabet * file.dim;
            let m = to_matrix(&file.matrices[0], d, d)?;
            Ok(ChannelKind::Choi(
                QuantumChannelChoi::new(file.alphabet, file.dim, HermitianOperator::new(m)?)
                    .map_err(|e| Error::Parse(e.to_string()))?,
            ))
        }
        other => Err(Error::Parse(format!("unknown channel kind {other:?}"))),
    }
}

pub fn load_channel(path: &std::path::Path) -> Result<ChannelKind> {
    let text = std::fs::read_to_string(path)?;
    parse_channel(&text)
}

/// Serializes a classical-quantum channel to the file format.
pub fn cq_to_file(w: &CQChannel) -> ChannelFile {
    let d = w.dim();
    let matrices = w
        .outputs()
        .iter()
        .map(|o| {
            let m = o.matrix();
            (0..d * d).map(|idx| [m[(idx / d, idx % d)].re, m[(idx / d, idx % d)].im]).collect()
        })
        .collect();
    ChannelFile { kind: "cq".into(), alphabet: w.alphabet_size(), dim: d, matrices }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn joint_state_cases() {
        let w = CQChannel::noiseless(2).unwrap();
        // Point mass: |x0><x0| (x) W_x0.
        let joint = w.joint_state(&InputDistribution::point_mass(2, 1)).unwrap();
        assert!((joint.matrix()[(3, 3)].re - 1.0).abs() < 1e-12);
        assert!((joint.as_herm().trace() - 1.0).abs() < 1e-12);

        // Uniform input, identical outputs: uniform (x) sigma.
        let sigma = DensityOperator::new(HermitianOperator::from_diagonal(&[0.25, 0.75])).unwrap();
        let useless = CQChannel::new(vec![sigma.clone(), sigma.clone()]).unwrap();
        let j = useless.joint_state(&InputDistribution::uniform(2)).unwrap();
        let expected = DensityOperator::maximally_mixed(2).kron(&sigma);
        assert!(j.as_herm().sub(expected.as_herm()).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn joint_state_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random::random_cq_channel(&mut rng, 3, 2);
        let p = random::random_simplex(&mut rng, 3);
        let joint = w.joint_state(&p).unwrap();
        let tx = crate::herm::partial_trace_right(joint.matrix(), 3, 2).unwrap();
        for x in 0..3 {
            assert!((tx[(x, x)].re - p.probabilities()[x]).abs() < 1e-12);
        }
        let th = crate::herm::partial_trace_left(joint.matrix(), 3, 2).unwrap();
        let avg = w.average_output(&p).unwrap();
        assert!((th - avg.matrix()).norm() < 1e-10);
    }

    #[test]
    fn classical_embed_cases() {
        let w = CQChannel::noiseless(2).unwrap();
        assert!(w.is_classical());
        assert_eq!(w.alphabet_size(), 2);

        let bsc = CQChannel::binary_symmetric(0.1).unwrap();
        assert!((bsc.output(0).matrix()[(0, 0)].re - 0.9).abs() < 1e-12);
        assert!((bsc.output(1).matrix()[(0, 0)].re - 0.1).abs() < 1e-12);

        let bad = CQChannel::classical_embed(&[vec![0.9, 0.2], vec![0.2, 0.8]]);
        assert!(bad.is_err());
    }

    #[test]
    fn tensor_power_cases() {
        let limits = Limits::default();
        let w = CQChannel::noiseless(2).unwrap();
        let w1 = w.tensor_power(1, &limits).unwrap();
        assert_eq!(w1.alphabet_size(), 2);
        for x in 0..2 {
            assert!(
                w1.output(x).as_herm().sub(w.output(x).as_herm()).unwrap().frobenius_norm() < 1e-12
            );
        }
        let w2 = w.tensor_power(2, &limits).unwrap();
        assert_eq!(w2.alphabet_size(), 4);
        assert_eq!(w2.dim(), 4);
        // Noiseless binary squared is the noiseless 4-symbol channel.
        let n4 = CQChannel::noiseless(4).unwrap();
        for x in 0..4 {
            assert!(
                w2.output(x).as_herm().sub(n4.output(x).as_herm()).unwrap().frobenius_norm() < 1e-12
            );
        }
        let wb = w.with_ideal_bit(&limits).unwrap();
        assert_eq!(wb.alphabet_size(), 4);
    }

    #[test]
    fn tensor_power_entrywise() {
        let limits = Limits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random::random_cq_channel(&mut rng, 2, 2);
        let w2 = w.tensor_power(2, &limits).unwrap();
        for x0 in 0..2 {
            for x1 in 0..2 {
                let idx = string_index(&[x0, x1], 2);
                let expect = w.output(x0).kron(w.output(x1));
                assert!(
                    w2.output(idx).as_herm().sub(expect.as_herm()).unwrap().frobenius_norm() < 1e-12
                );
            }
        }
    }

    #[test]
    fn tensor_power_cap() {
        let limits = Limits { max_dim: 64, max_support: 1000 };
        let w = CQChannel::noiseless(4).unwrap();
        assert!(matches!(w.tensor_power(3, &limits), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn choi_cases() {
        let id = QuantumChannelChoi::identity_channel(2).unwrap();
        assert!((id.choi().trace() - 2.0).abs() < 1e-12);
        let ev = id.choi().eigh().unwrap().eigenvalues;
        assert!(ev[..3].iter().all(|l| l.abs() < 1e-12) && (ev[3] - 2.0).abs() < 1e-12);

        let dep = QuantumChannelChoi::depolarizing(2, 1.0).unwrap();
        let expected = HermitianOperator::identity(4).scale(0.5);
        assert!(dep.choi().sub(&expected).unwrap().frobenius_norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = random::random_cq_channel(&mut rng, 3, 2);
        let j = w.choi().unwrap();
        let marginal = crate::herm::partial_trace_right(j.choi().matrix(), 3, 2).unwrap();
        assert!((marginal - DMatrix::<C64>::identity(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn type_enumeration() {
        let t = enumerate_types(2, 2).unwrap();
        assert_eq!(t.len(), 3);
        let counts: Vec<Vec<usize>> = t.iter().map(|x| x.counts().to_vec()).collect();
        assert!(counts.contains(&vec![2, 0]));
        assert!(counts.contains(&vec![1, 1]));
        assert!(counts.contains(&vec![0, 2]));

        assert_eq!(enumerate_types(1, 5).unwrap().len(), 5);

        // |T_n(X)| <= (n+1)^{|X|} and equals the stars-and-bars count.
        for n in 1..=8 {
            for k in 1..=4 {
                let types = enumerate_types(n, k).unwrap();
                let expected = binomial((n + k - 1) as u128, (k - 1) as u128).unwrap();
                assert_eq!(types.len() as u128, expected);
                assert!(types.len() as f64 <= ((n + 1) as f64).powi(k as i32));
                let mut dedup = types.iter().map(|t| t.counts().to_vec()).collect::<Vec<_>>();
                dedup.sort();
                dedup.dedup();
                assert_eq!(dedup.len(), types.len());
            }
        }
    }

    #[test]
    fn type_product_cases() {
        let limits = Limits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let w = random::random_cq_channel(&mut rng, 2, 2);

        let point = TypeComposition::new(vec![0, 3]).unwrap();
        let prod = type_product_state(&w, &point, &limits).unwrap();
        let direct = w.output(1).kron(w.output(1)).kron(w.output(1));
        assert!(prod.as_herm().sub(direct.as_herm()).unwrap().frobenius_norm() < 1e-12);
        assert!((prod.as_herm().trace() - 1.0).abs() < 1e-10);

        let single = TypeComposition::new(vec![1, 0]).unwrap();
        let s = type_product_state(&w, &single, &limits).unwrap();
        assert!(s.as_herm().sub(w.output(0).as_herm()).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn symmetrize_and_decompose() {
        // Point mass on (0,1) over a binary alphabet, n = 2.
        let mut p = vec![0.0; 4];
        p[string_index(&[0, 1], 2)] = 1.0;
        let sym = symmetrize_distribution(&p, 2, 2).unwrap();
        assert!((sym[string_index(&[0, 1], 2)] - 0.5).abs() < 1e-12);
        assert!((sym[string_index(&[1, 0], 2)] - 0.5).abs() < 1e-12);

        // Idempotent.
        let sym2 = symmetrize_distribution(&sym, 2, 2).unwrap();
        for (a, b) in sym.iter().zip(&sym2) {
            assert!((a - b).abs() < 1e-15);
        }

        // Reconstruction and the pigeonhole weight bound.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let q = random::random_simplex(&mut rng, 8);
            let q = symmetrize_distribution(q.probabilities(), 3, 2).unwrap();
            let parts = decompose_by_type(&q, 3, 2).unwrap();
            let total: f64 = parts.iter().map(|(_, a)| a).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let mut rebuilt = vec![0.0; 8];
            for (t, a) in &parts {
                for (idx, v) in uniform_on_type(t, 2).into_iter().enumerate() {
                    rebuilt[idx] += a * v;
                }
            }
            for (a, b) in rebuilt.iter().zip(&q) {
                assert!((a - b).abs() < 1e-12);
            }
            let max_w = parts.iter().map(|(_, a)| *a).fold(0.0_f64, f64::max);
            assert!(max_w >= 1.0 / (3.0_f64 + 1.0).powi(2) - 1e-12);
        }
    }

    #[test]
    fn support_blocks_classical_and_bit() {
        let limits = Limits::default();
        let bsc = CQChannel::binary_symmetric(0.2).unwrap();
        assert_eq!(bsc.support_blocks().len(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let q = random::random_cq_channel(&mut rng, 2, 2);
        assert_eq!(q.support_blocks().len(), 1);
        let qb = q.with_ideal_bit(&limits).unwrap();
        assert_eq!(qb.support_blocks().len(), 2);
    }

    #[test]
    fn channel_file_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let w = random::random_cq_channel(&mut rng, 2, 2);
        let file = cq_to_file(&w);
        let text = serde_json::to_string(&file).unwrap();
        match parse_channel(&text).unwrap() {
            ChannelKind::Cq(w2) => {
                for x in 0..2 {
                    assert!(
                        w2.output(x).as_herm().sub(w.output(x).as_herm()).unwrap().frobenius_norm()
                            < 1e-12
                    );
                }
            }
            _ => panic!("expected cq channel"),
        }
        assert!(parse_channel("{\"kind\":\"nope\"}").is_err());
    }
}

//! Real Jordan normal form of small dense matrices.
//!
//! The decomposition returns `J` and a conjugator `P` with `P A P⁻¹ = J`.
//! Rows of `P` are the Jordan basis `v₁, …, v_n`: a point `γ` has Jordan
//! coordinates `x = γ P⁻¹` and `γ = x P`, and `γA` corresponds to `xJ`.
//!
//! Blocks are upper triangular. A real eigenvalue `λ` with a chain of length
//! `m` gives an `m×m` block with `λ` on the diagonal and ones above it. A
//! complex pair `a ± ib` (`b > 0`) gives a `2m×2m` block with
//! `[[a, b], [−b, a]]` on the block diagonal and `I₂` above it.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::eigenvalues;
use super::Matrix;
use crate::error::{Result, XsectError};

/// Default relative tolerance for spectral decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Eigen {
    Real { value: f64 },
    /// The pair `re ± i·im`, stored with `im > 0`.
    ComplexPair { re: f64, im: f64 },
}

impl Eigen {
    pub fn modulus(&self) -> f64 {
        match *self {
            Eigen::Real { value } => value.abs(),
            Eigen::ComplexPair { re, im } => re.hypot(im),
        }
    }

    /// Argument in `[0, π]`.
    pub fn argument(&self) -> f64 {
        match *self {
            Eigen::Real { value } => {
                if value < 0.0 {
                    std::f64::consts::PI
                } else {
                    0.0
                }
            }
            Eigen::ComplexPair { re, im } => im.atan2(re),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Eigen::ComplexPair { .. })
    }

    /// Real part, i.e. `α` for generator blocks.
    pub fn re(&self) -> f64 {
        match *self {
            Eigen::Real { value } => value,
            Eigen::ComplexPair { re, .. } => re,
        }
    }

    fn width(&self) -> usize {
        if self.is_complex() {
            2
        } else {
            1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanBlock {
    pub eigen: Eigen,
    /// Length of the Jordan chain (`m`); the block has size `m` or `2m`.
    pub chain: usize,
    /// Index of the block's first Jordan coordinate.
    pub offset: usize,
}

impl JordanBlock {
    pub fn size(&self) -> usize {
        self.chain * self.eigen.width()
    }

    pub fn is_nilpotent(&self) -> bool {
        self.chain >= 2
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.size()
    }

    /// The block as a dense matrix of size `self.size()`.
    pub fn matrix(&self) -> Matrix {
        let s = self.size();
        let mut m = Matrix::zeros(s);
        match self.eigen {
            Eigen::Real { value } => {
                for i in 0..s {
                    m[(i, i)] = value;
                    if i + 1 < s {
                        m[(i, i + 1)] = 1.0;
                    }
                }
            }
            Eigen::ComplexPair { re, im } => {
                for k in 0..self.chain {
                    let o = 2 * k;
                    m[(o, o)] = re;
                    m[(o, o + 1)] = im;
                    m[(o + 1, o)] = -im;
                    m[(o + 1, o + 1)] = re;
                    if k + 1 < self.chain {
                        m[(o, o + 2)] = 1.0;
                        m[(o + 1, o + 3)] = 1.0;
                    }
                }
            }
        }
        m
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub modulus: f64,
    pub argument: f64,
    pub multiplicity: usize,
    pub max_chain: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<SpectrumEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealJordanForm {
    pub blocks: Vec<JordanBlock>,
    pub conjugator: Matrix,
    pub conjugator_inverse: Matrix,
}

impl RealJordanForm {
    pub fn dim(&self) -> usize {
        self.conjugator.dim()
    }

    /// Assembled block-diagonal `J`.
    pub fn jordan_matrix(&self) -> Matrix {
        let mut j = Matrix::zeros(self.dim());
        for b in &self.blocks {
            j.set_block(b.offset, &b.matrix());
        }
        j
    }

    /// `P⁻¹ J P`, the matrix this form decomposes.
    pub fn reassemble(&self) -> Matrix {
        &(&self.conjugator_inverse * &self.jordan_matrix()) * &self.conjugator
    }

    /// Ambient point to Jordan coordinates: `x = γ P⁻¹`.
    pub fn to_jordan(&self, gamma: &[f64]) -> Vec<f64> {
        self.conjugator_inverse.apply(gamma)
    }

    /// Jordan coordinates to ambient point: `γ = x P`.
    pub fn from_jordan(&self, x: &[f64]) -> Vec<f64> {
        self.conjugator.apply(x)
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut entries: Vec<(Eigen, usize, usize)> = Vec::new();
        for b in &self.blocks {
            match entries.iter_mut().find(|(e, _, _)| *e == b.eigen) {
                Some(entry) => {
                    entry.1 += b.chain;
                    entry.2 = entry.2.max(b.chain);
                }
                None => entries.push((b.eigen, b.chain, b.chain)),
            }
        }
        let mut out = Vec::new();
        for (e, mult, chain) in entries {
            out.push(SpectrumEntry {
                modulus: e.modulus(),
                argument: e.argument(),
                multiplicity: mult,
                max_chain: chain,
            });
            if e.is_complex() {
                out.push(SpectrumEntry {
                    modulus: e.modulus(),
                    argument: -e.argument(),
                    multiplicity: mult,
                    max_chain: chain,
                });
            }
        }
        Spectrum { eigenvalues: out }
    }

    /// Jordan form of `S A S⁻¹` given this form of `A`.
    pub fn conjugated_by(&self, s: &Matrix, s_inv: &Matrix) -> RealJordanForm {
        // P' (S A S⁻¹) P'⁻¹ = J with P' = P S⁻¹.
        RealJordanForm {
            blocks: self.blocks.clone(),
            conjugator: &self.conjugator * s_inv,
            conjugator_inverse: s * &self.conjugator_inverse,
        }
    }
}

/// Real Jordan form of an invertible matrix.
///
/// Fails with `Singular` when `|det A| <= tol·‖A‖ⁿ`.
pub fn real_jordan_form(a: &Matrix, tol: f64) -> Result<RealJordanForm> {
    let n = a.dim();
    let det = a.det();
    if det.abs() <= tol * a.frobenius_norm().powi(n as i32) {
        return Err(XsectError::Singular { det });
    }
    jordan_decompose(a, tol)
}

/// Real Jordan form of any real matrix (generators may be singular).
pub fn jordan_decompose(a: &Matrix, tol: f64) -> Result<RealJordanForm> {
    if !a.is_finite() {
        return Err(XsectError::InvalidInput("non-finite matrix".into()));
    }
    if let Some(form) = parse_jordan(a) {
        return Ok(form);
    }
    general_decompose(a, tol)
}

fn block_order(a: &JordanBlock, b: &JordanBlock) -> std::cmp::Ordering {
    let key = |x: &JordanBlock| -> (u8, f64, f64) {
        match x.eigen {
            Eigen::Real { value } => (0, value, 0.0),
            Eigen::ComplexPair { re, im } => (1, re, im),
        }
    };
    let (ka, kb) = (key(a), key(b));
    ka.0.cmp(&kb.0)
        .then(ka.1.total_cmp(&kb.1))
        .then(ka.2.total_cmp(&kb.2))
        .then(b.chain.cmp(&a.chain))
}

/// Sorts blocks canonically and rebuilds offsets; `rows[i]` holds the basis
/// rows that belong to `blocks[i]`.
fn assemble(mut blocks: Vec<(JordanBlock, Vec<Vec<f64>>)>, n: usize) -> Result<RealJordanForm> {
    blocks.sort_by(|x, y| block_order(&x.0, &y.0));
    let mut offset = 0;
    let mut p_rows = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(blocks.len());
    for (mut b, rows) in blocks {
        b.offset = offset;
        offset += b.size();
        p_rows.extend(rows);
        out.push(b);
    }
    if offset != n {
        return Err(XsectError::IllConditioned {
            detail: format!("block sizes sum to {offset}, expected {n}"),
            gap: 0.0,
        });
    }
    let conjugator = Matrix::from_rows(&p_rows)?;
    let conjugator_inverse = conjugator.inverse_tol(1e-14).map_err(|_| XsectError::IllConditioned {
        detail: "Jordan basis is numerically dependent".into(),
        gap: 0.0,
    })?;
    Ok(RealJordanForm { blocks: out, conjugator, conjugator_inverse })
}

/// Recognises matrices that are already exactly in real Jordan form.
fn parse_jordan(a: &Matrix) -> Option<RealJordanForm> {
    let n = a.dim();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        let complex = i + 1 < n && a[(i + 1, i)] != 0.0;
        let eigen = if complex {
            let (re, im) = (a[(i, i)], a[(i, i + 1)]);
            if im <= 0.0 || a[(i + 1, i)] != -im || a[(i + 1, i + 1)] != re {
                return None;
            }
            Eigen::ComplexPair { re, im }
        } else {
            Eigen::Real { value: a[(i, i)] }
        };
        let w = eigen.width();
        let mut chain = 1;
        loop {
            let next = i + chain * w;
            if next + w > n {
                break;
            }
            let superdiag_is_identity = (0..w).all(|r| {
                (0..w).all(|c| a[(next - w + r, next + c)] == if r == c { 1.0 } else { 0.0 })
            });
            let same_diag = (0..w).all(|r| {
                (0..w).all(|c| a[(next + r, next + c)] == a[(i + r, i + c)])
            });
            if superdiag_is_identity && same_diag {
                chain += 1;
            } else {
                break;
            }
        }
        let block = JordanBlock { eigen, chain, offset: i };
        blocks.push(block);
        i += block.size();
    }
    let mut j = Matrix::zeros(n);
    for b in &blocks {
        j.set_block(b.offset, &b.matrix());
    }
    if j != *a {
        return None;
    }
    let with_rows = blocks
        .into_iter()
        .map(|b| {
            let rows = b
                .range()
                .map(|r| (0..n).map(|c| if c == r { 1.0 } else { 0.0 }).collect())
                .collect();
            (b, rows)
        })
        .collect();
    assemble(with_rows, n).ok()
}

struct Cluster {
    mean: Complex64,
    size: usize,
}

fn cluster_eigenvalues(eigs: &[Complex64], radius: f64) -> Vec<Cluster> {
    let n = eigs.len();
    let mut label: Vec<usize> = (0..n).collect();
    // Single linkage: repeatedly merge labels of close pairs.
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            for j in 0..n {
                if (eigs[i] - eigs[j]).norm() <= radius && label[j] > label[i] {
                    label[j] = label[i];
                    changed = true;
                }
            }
        }
    }
    let mut labels: Vec<usize> = label.clone();
    labels.sort_unstable();
    labels.dedup();
    labels
        .into_iter()
        .map(|l| {
            let members: Vec<Complex64> =
                eigs.iter().zip(&label).filter(|(_, &k)| k == l).map(|(e, _)| *e).collect();
            let sum: Complex64 = members.iter().sum();
            Cluster { mean: sum / members.len() as f64, size: members.len() }
        })
        .collect()
}

fn general_decompose(a: &Matrix, tol: f64) -> Result<RealJordanForm> {
    let n = a.dim();
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let eigs = eigenvalues(a)?;
    let radius = tol.sqrt() * scale;
    let clusters = cluster_eigenvalues(&eigs, radius);

    for (i, ci) in clusters.iter().enumerate() {
        for cj in clusters.iter().skip(i + 1) {
            let gap = (ci.mean - cj.mean).norm();
            if gap <= 10.0 * radius {
                return Err(XsectError::IllConditioned {
                    detail: format!("eigenvalues {} and {} cannot be separated", ci.mean, cj.mean),
                    gap,
                });
            }
        }
    }

    let mut blocks = Vec::new();
    for c in &clusters {
        let im = c.mean.im;
        if im.abs() <= radius {
            let mu = c.mean.re;
            let n_mat = a.transpose().to_nalgebra() - DMatrix::<f64>::identity(n, n) * mu;
            for chain in jordan_chains(n_mat, c.size, tol, scale)? {
                let len = chain.len();
                let rows = chain.iter().map(|v| v.iter().copied().collect()).collect();
                blocks.push((
                    JordanBlock { eigen: Eigen::Real { value: mu }, chain: len, offset: 0 },
                    rows,
                ));
            }
        } else if im > 0.0 {
            let mu = c.mean;
            let at = a.transpose().to_nalgebra().map(|v| Complex64::new(v, 0.0));
            let n_mat = at - DMatrix::<Complex64>::identity(n, n) * mu;
            for chain in jordan_chains(n_mat, c.size, tol, scale)? {
                let len = chain.len();
                let mut rows = Vec::with_capacity(2 * len);
                for z in &chain {
                    rows.push(z.iter().map(|c| c.re).collect());
                    rows.push(z.iter().map(|c| -c.im).collect());
                }
                blocks.push((
                    JordanBlock {
                        eigen: Eigen::ComplexPair { re: mu.re, im: mu.im },
                        chain: len,
                        offset: 0,
                    },
                    rows,
                ));
            }
        }
        // Clusters below the real axis are the conjugates of the ones above.
    }

    let form = assemble(blocks, n)?;
    let residual = (&(&form.conjugator * a) * &form.conjugator_inverse)
        .sub(&form.jordan_matrix())
        .frobenius_norm();
    if residual > tol * scale {
        return Err(XsectError::IllConditioned {
            detail: format!("Jordan residual {residual:e} exceeds tolerance"),
            gap: residual,
        });
    }
    Ok(form)
}

/// Orthonormal basis (columns) of the span of `cols`.
fn orthonormal_basis<T: ComplexField<RealField = f64>>(cols: &[DVector<T>], n: usize) -> Vec<DVector<T>> {
    if cols.is_empty() {
        return Vec::new();
    }
    let m = DMatrix::from_columns(cols);
    let svd = m.svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let _ = n;
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-8 * smax)
        .map(|i| u.column(i).into_owned())
        .collect()
}

fn normalize_phase<T: ComplexField<RealField = f64>>(v: DVector<T>) -> DVector<T> {
    let norm = v.norm();
    let mut v = v.unscale(norm);
    let (mut best, mut idx) = (0.0, 0);
    for (i, x) in v.iter().enumerate() {
        let m = x.clone().modulus();
        if m > best * (1.0 + 1e-9) {
            best = m;
            idx = i;
        }
    }
    let pivot = v[idx].clone();
    let phase = pivot.clone().conjugate().unscale(pivot.modulus());
    v *= phase;
    v
}

/// Jordan chains of the nilpotent part of `N = Aᵀ − μI` on a generalised
/// eigenspace of dimension `mult`. Each chain is `[w, Nw, …, N^{len−1}w]`.
fn jordan_chains<T: ComplexField<RealField = f64>>(
    n_mat: DMatrix<T>,
    mult: usize,
    tol: f64,
    scale: f64,
) -> Result<Vec<Vec<DVector<T>>>> {
    let n = n_mat.nrows();
    let s = 2.0 * scale;
    let mut kernels: Vec<Vec<DVector<T>>> = vec![Vec::new()];
    let mut power = DMatrix::<T>::identity(n, n);
    let mut depth = 0;
    for j in 1..=mult {
        power = &power * &n_mat;
        let svd = power.clone().svd(false, true);
        let v_t = svd.v_t.expect("v_t requested");
        let thresh = tol * s.powi(j as i32);
        let band = tol.sqrt() * s.powi(j as i32);
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        let mut basis = Vec::new();
        for &i in &idx {
            let sv = svd.singular_values[i];
            if sv <= thresh {
                basis.push(v_t.row(i).adjoint());
            } else if sv <= band {
                return Err(XsectError::IllConditioned {
                    detail: format!("rank of (A - μI)^{j} is ambiguous"),
                    gap: sv / s.powi(j as i32),
                });
            }
        }
        let prev = kernels.last().map(|k| k.len()).unwrap_or(0);
        if basis.len() <= prev || basis.len() > mult {
            return Err(XsectError::IllConditioned {
                detail: format!(
                    "kernel dimensions inconsistent with multiplicity {mult} (got {} after {})",
                    basis.len(),
                    prev
                ),
                gap: 0.0,
            });
        }
        let done = basis.len() == mult;
        kernels.push(basis);
        depth = j;
        if done {
            break;
        }
    }
    if kernels[depth].len() != mult {
        return Err(XsectError::IllConditioned {
            detail: "generalised eigenspace dimension does not match multiplicity".into(),
            gap: 0.0,
        });
    }

    let dims: Vec<usize> = kernels.iter().map(|k| k.len()).collect();
    let at_least = |j: usize| -> usize {
        if j == 0 || j > depth {
            0
        } else {
            dims[j] - dims[j - 1]
        }
    };

    let mut chains: Vec<Vec<DVector<T>>> = Vec::new();
    for level in (1..=depth).rev() {
        let new_count = at_least(level) - at_least(level + 1);
        if new_count == 0 {
            continue;
        }
        let mut spanning: Vec<DVector<T>> = kernels[level - 1].clone();
        for c in &chains {
            spanning.push(c[c.len() - level].clone());
        }
        let q = orthonormal_basis(&spanning, n);
        let projected: Vec<DVector<T>> = kernels[level]
            .iter()
            .map(|k| {
                let mut x = k.clone();
                for qi in &q {
                    let coeff = qi.dotc(&x);
                    x -= qi * coeff;
                }
                x
            })
            .collect();
        let m = DMatrix::from_columns(&projected);
        let svd = m.svd(true, false);
        let u = svd.u.expect("u requested");
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
        for &i in idx.iter().take(new_count) {
            if svd.singular_values[i] <= tol.sqrt() {
                return Err(XsectError::IllConditioned {
                    detail: "cannot extend Jordan chain".into(),
                    gap: svd.singular_values[i],
                });
            }
            let top = normalize_phase(u.column(i).into_owned());
            let mut chain = vec![top];
            for _ in 1..level {
                let next = &n_mat * chain.last().unwrap();
                chain.push(next);
            }
            chains.push(chain);
        }
    }
    Ok(chains)
}

//! Small dense real linear algebra: matrices, eigenvalues, the real Jordan
//! form, and closed-form powers `e^{tB}` and `A^k`.

pub mod eigen;
pub mod jordan;
pub mod matrix;

pub use jordan::{
    jordan_decompose, real_jordan_form, Eigen, JordanBlock, RealJordanForm, Spectrum,
    SpectrumEntry, DEFAULT_TOL,
};
pub use matrix::{dot, norm2, rel_distance, Matrix, MAX_DIM};

use crate::error::{Result, XsectError};

/// Largest `|k|` accepted by [`integer_power`].
pub const MAX_INTEGER_POWER: i64 = 1_000_000;

/// Rotation `E_β(t) = [[cos βt, sin βt], [−sin βt, cos βt]]` as `(c, s)`.
#[inline]
pub fn rotation(beta_t: f64) -> (f64, f64) {
    (beta_t.cos(), beta_t.sin())
}

/// `e^{tJ_b}` for a single Jordan block of a generator.
///
/// Entry `(i, j)` of the block-upper-triangular result is
/// `t^{j−i}/(j−i)! · e^{αt} E_β(t)`.
pub fn block_exp(block: &JordanBlock, t: f64) -> Matrix {
    let s = block.size();
    let mut m = Matrix::zeros(s);
    let mut coeff = Vec::with_capacity(block.chain);
    let mut c = 1.0;
    for k in 0..block.chain {
        if k > 0 {
            c *= t / k as f64;
        }
        coeff.push(c);
    }
    match block.eigen {
        Eigen::Real { value } => {
            let g = (value * t).exp();
            for i in 0..s {
                for j in i..s {
                    m[(i, j)] = coeff[j - i] * g;
                }
            }
        }
        Eigen::ComplexPair { re, im } => {
            let g = (re * t).exp();
            let (cs, sn) = rotation(im * t);
            for bi in 0..block.chain {
                for bj in bi..block.chain {
                    let f = coeff[bj - bi] * g;
                    let (o, p) = (2 * bi, 2 * bj);
                    m[(o, p)] = f * cs;
                    m[(o, p + 1)] = f * sn;
                    m[(o + 1, p)] = -f * sn;
                    m[(o + 1, p + 1)] = f * cs;
                }
            }
        }
    }
    m
}

/// `e^{tJ}` in Jordan coordinates (block diagonal).
pub fn jordan_exp(form: &RealJordanForm, t: f64) -> Matrix {
    let mut m = Matrix::zeros(form.dim());
    for b in &form.blocks {
        m.set_block(b.offset, &block_exp(b, t));
    }
    m
}

/// `e^{tB}` assembled from the closed block formula and conjugated back.
pub fn one_parameter_power(generator: &RealJordanForm, t: f64) -> Result<Matrix> {
    if !t.is_finite() {
        return Err(XsectError::InvalidInput("non-finite exponent".into()));
    }
    let e = &(&generator.conjugator_inverse * &jordan_exp(generator, t)) * &generator.conjugator;
    if !e.is_finite() {
        return Err(XsectError::Overflow(format!("e^(tB) overflows at t = {t}")));
    }
    Ok(e)
}

/// `A^k` by binary exponentiation; negative powers go through `A⁻¹`.
pub fn integer_power(a: &Matrix, k: i64) -> Result<Matrix> {
    if k.abs() > MAX_INTEGER_POWER {
        return Err(XsectError::InvalidInput(format!("|k| = {} exceeds {MAX_INTEGER_POWER}", k.abs())));
    }
    let base = if k < 0 { a.inverse()? } else { a.clone() };
    let mut e = k.unsigned_abs();
    let mut result = Matrix::identity(a.dim());
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &sq;
        }
        e >>= 1;
        if e > 0 {
            sq = &sq * &sq;
        }
    }
    if !result.is_finite() {
        return Err(XsectError::Overflow(format!("A^{k} overflows")));
    }
    Ok(result)
}

/// Maps ambient points to Jordan coordinates and back.
pub fn conjugate_point(gamma: &[f64], p: &Matrix) -> Vec<f64> {
    p.apply(gamma)
}

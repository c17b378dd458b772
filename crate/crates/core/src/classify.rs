//! Existence decisions for cross-sections of the continuous action
//! `γ ↦ γe^{tB}` and the discrete action `γ ↦ γAᵏ`, and for order-∞
//! multi-wavelet sets.
//!
//! Every decision is made on the real Jordan form, so "orthogonal" means
//! conjugate to an orthogonal matrix. Values within `tol` of a threshold are
//! snapped to it; values inside the band `(tol, √tol]` are refused with
//! `BorderlineModulus` since the trichotomy is discontinuous there.

use serde::{Deserialize, Serialize};

use crate::error::{Result, XsectError};
use crate::linalg::{jordan_decompose, real_jordan_form, Eigen, Matrix, RealJordanForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuousCase {
    RealNonzero,
    ComplexNonzero,
    ZeroNilpotent,
    ImaginaryNilpotent,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscreteCase {
    ModulusNotOne,
    ComplexModulusNotOne,
    RealModulusOneNilpotent,
    ComplexModulusOneNilpotent,
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuousVerdict {
    pub exists: bool,
    pub case: ContinuousCase,
    pub witness_block: Option<usize>,
    pub conjugator: Matrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscreteVerdict {
    pub exists: bool,
    pub finite_measure: bool,
    pub bounded: bool,
    pub case: DiscreteCase,
    pub witness_block: Option<usize>,
    pub det_modulus: f64,
    pub similar_to_unitary: bool,
    pub conjugator: Matrix,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Below,
    One,
    Above,
}

/// Compares `value` with `target` at relative tolerance `tol`.
fn side(value: f64, target: f64, tol: f64, scale: f64) -> Result<Side> {
    let d = value - target;
    if d.abs() <= tol * scale {
        Ok(Side::One)
    } else if d.abs() <= tol.sqrt() * scale {
        Err(XsectError::BorderlineModulus { modulus: value })
    } else if d < 0.0 {
        Ok(Side::Below)
    } else {
        Ok(Side::Above)
    }
}

/// Among the blocks satisfying `pred`, the first with the largest growth
/// rate. A fast witness keeps orbit parameters (and hence the free
/// coordinates of representatives) small.
fn fastest_block(n: usize, pred: &dyn Fn(usize) -> bool, rate: impl Fn(usize) -> f64) -> Option<usize> {
    (0..n).filter(|&i| pred(i)).fold(None, |best: Option<usize>, i| match best {
        Some(b) if rate(b) >= rate(i) => Some(b),
        _ => Some(i),
    })
}

/// Case selection for a generator whose Jordan form is already known.
pub fn continuous_case(form: &RealJordanForm, scale: f64, tol: f64) -> Result<(ContinuousCase, Option<usize>)> {
    let mut zero_real = Vec::with_capacity(form.blocks.len());
    for b in &form.blocks {
        zero_real.push(side(b.eigen.re(), 0.0, tol, scale)? == Side::One);
    }
    let find = |pred: &dyn Fn(usize) -> bool| (0..form.blocks.len()).find(|&i| pred(i));
    let blocks = &form.blocks;
    let fastest = |pred: &dyn Fn(usize) -> bool| fastest_block(blocks.len(), pred, |i| blocks[i].eigen.re().abs());
    if let Some(i) = fastest(&|i| !blocks[i].eigen.is_complex() && !zero_real[i]) {
        return Ok((ContinuousCase::RealNonzero, Some(i)));
    }
    if let Some(i) = fastest(&|i| blocks[i].eigen.is_complex() && !zero_real[i]) {
        return Ok((ContinuousCase::ComplexNonzero, Some(i)));
    }
    if let Some(i) = find(&|i| !blocks[i].eigen.is_complex() && blocks[i].is_nilpotent()) {
        return Ok((ContinuousCase::ZeroNilpotent, Some(i)));
    }
    if let Some(i) = find(&|i| blocks[i].eigen.is_complex() && blocks[i].is_nilpotent()) {
        return Ok((ContinuousCase::ImaginaryNilpotent, Some(i)));
    }
    Ok((ContinuousCase::None, None))
}

/// Decides whether `γ ↦ γe^{tB}` admits a cross-section and which
/// construction applies.
pub fn classify_continuous(b: &Matrix, tol: f64) -> Result<ContinuousVerdict> {
    let form = jordan_decompose(b, tol)?;
    let scale = b.frobenius_norm().max(1.0);
    let (case, witness_block) = continuous_case(&form, scale, tol)?;
    Ok(ContinuousVerdict {
        exists: case != ContinuousCase::None,
        case,
        witness_block,
        conjugator: form.conjugator,
    })
}

fn modulus_sides(form: &RealJordanForm, tol: f64) -> Result<Vec<Side>> {
    form.blocks.iter().map(|b| side(b.eigen.modulus(), 1.0, tol, 1.0)).collect()
}

pub fn discrete_case(form: &RealJordanForm, tol: f64) -> Result<(DiscreteCase, Option<usize>)> {
    let sides = modulus_sides(form, tol)?;
    let blocks = &form.blocks;
    let find = |pred: &dyn Fn(usize) -> bool| (0..blocks.len()).find(|&i| pred(i));
    let fastest = |pred: &dyn Fn(usize) -> bool| fastest_block(blocks.len(), pred, |i| blocks[i].eigen.modulus().ln().abs());
    if let Some(i) = fastest(&|i| !blocks[i].eigen.is_complex() && sides[i] != Side::One) {
        return Ok((DiscreteCase::ModulusNotOne, Some(i)));
    }
    if let Some(i) = fastest(&|i| blocks[i].eigen.is_complex() && sides[i] != Side::One) {
        return Ok((DiscreteCase::ComplexModulusNotOne, Some(i)));
    }
    if let Some(i) = find(&|i| !blocks[i].eigen.is_complex() && blocks[i].is_nilpotent()) {
        return Ok((DiscreteCase::RealModulusOneNilpotent, Some(i)));
    }
    if let Some(i) = find(&|i| blocks[i].eigen.is_complex() && blocks[i].is_nilpotent()) {
        return Ok((DiscreteCase::ComplexModulusOneNilpotent, Some(i)));
    }
    Ok((DiscreteCase::None, None))
}

/// Decides existence, finite-measure existence and bounded existence of a
/// cross-section for `γ ↦ γAᵏ`.
pub fn classify_discrete(a: &Matrix, tol: f64) -> Result<DiscreteVerdict> {
    let form = real_jordan_form(a, tol)?;
    let (case, witness_block) = discrete_case(&form, tol)?;
    let sides = modulus_sides(&form, tol)?;
    let det_modulus = a.det().abs();
    let finite_measure = side(det_modulus, 1.0, tol, 1.0)? != Side::One;
    let bounded = sides.iter().all(|s| *s == Side::Above) || sides.iter().all(|s| *s == Side::Below);
    let similar_to_unitary = unitary_like(&form, &sides);
    Ok(DiscreteVerdict {
        exists: case != DiscreteCase::None,
        finite_measure,
        bounded,
        case,
        witness_block,
        det_modulus,
        similar_to_unitary,
        conjugator: form.conjugator,
    })
}

fn unitary_like(form: &RealJordanForm, sides: &[Side]) -> bool {
    form.blocks.iter().zip(sides).all(|(b, s)| !b.is_nilpotent() && *s == Side::One)
}

/// True iff `A` is diagonalisable over ℂ with every eigenvalue of modulus 1,
/// i.e. iff no order-∞ orthonormal wavelet exists for `A`.
pub fn is_similar_to_unitary(a: &Matrix, tol: f64) -> Result<bool> {
    let form = real_jordan_form(a, tol)?;
    let sides = modulus_sides(&form, tol)?;
    Ok(unitary_like(&form, &sides))
}

/// Convenience: the modulus-one status of an eigenvalue at tolerance `tol`.
pub fn has_unit_modulus(e: &Eigen, tol: f64) -> Result<bool> {
    Ok(side(e.modulus(), 1.0, tol, 1.0)? == Side::One)
}

/// True iff the real part is zero at tolerance `tol` relative to `scale`.
pub fn has_zero_real_part(e: &Eigen, scale: f64, tol: f64) -> Result<bool> {
    Ok(side(e.re(), 0.0, tol, scale)? == Side::One)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_TOL;
    use std::f64::consts::LN_2;

    #[test]
    fn rotation_generator_has_no_section() {
        let v = classify_continuous(&Matrix::new(&[[0.0, 1.0], [-1.0, 0.0]]), DEFAULT_TOL).unwrap();
        assert!(!v.exists);
        assert_eq!(v.case, ContinuousCase::None);
    }

    #[test]
    fn continuous_cases() {
        let v = classify_continuous(&Matrix::scalar(LN_2), DEFAULT_TOL).unwrap();
        assert_eq!(v.case, ContinuousCase::RealNonzero);
        let v = classify_continuous(&Matrix::new(&[[0.0, 1.0], [0.0, 0.0]]), DEFAULT_TOL).unwrap();
        assert_eq!(v.case, ContinuousCase::ZeroNilpotent);
        let v = classify_continuous(&Matrix::new(&[[1.0, 6.0], [-6.0, 1.0]]), DEFAULT_TOL).unwrap();
        assert_eq!(v.case, ContinuousCase::ComplexNonzero);
    }

    #[test]
    fn discrete_table() {
        let v = classify_discrete(&Matrix::diag(&[2.0, 3.0]), DEFAULT_TOL).unwrap();
        assert!(v.exists && v.finite_measure && v.bounded);
        let v = classify_discrete(&Matrix::diag(&[2.0, 0.5]), DEFAULT_TOL).unwrap();
        assert!(v.exists && !v.finite_measure && !v.bounded);
        assert_eq!(v.case, DiscreteCase::ModulusNotOne);
        let v = classify_discrete(&Matrix::new(&[[1.0, 1.0], [0.0, 1.0]]), DEFAULT_TOL).unwrap();
        assert!(v.exists && !v.finite_measure && !v.bounded);
        assert_eq!(v.case, DiscreteCase::RealModulusOneNilpotent);
    }

    #[test]
    fn unitary_similarity() {
        let tol = DEFAULT_TOL;
        assert!(is_similar_to_unitary(&Matrix::new(&[[0.0, 1.0], [-1.0, 0.0]]), tol).unwrap());
        assert!(!is_similar_to_unitary(&Matrix::new(&[[1.0, 1.0], [0.0, 1.0]]), tol).unwrap());
        assert!(!is_similar_to_unitary(&Matrix::scalar(2.0), tol).unwrap());
    }

    #[test]
    fn borderline_modulus_is_refused() {
        let r = classify_discrete(&Matrix::diag(&[1.0 + 1e-6, 2.0]), DEFAULT_TOL);
        assert!(matches!(r, Err(XsectError::BorderlineModulus { .. })));
    }
}

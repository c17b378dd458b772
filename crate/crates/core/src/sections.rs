//! The eight explicit cross-section constructions, membership tests and
//! closed-form orbit solvers.
//!
//! All sets live in Jordan coordinates `x = γP⁻¹` of the witness block; the
//! remaining coordinates are unconstrained. Continuous sections are
//! parametrised for the action `γ ↦ γe^{tB}` and discrete ones for
//! `γ ↦ γAᵏ`.
//!
//! Orbit solutions follow two conventions, one per action:
//!
//! * continuous: `representative = γ·e^{tB}`,
//! * discrete: `representative = γ·A^{−k}`, i.e. `γ ∈ S·Aᵏ`.
//!
//! Discrete sections built from a continuous flow (complex blocks) are the
//! flow-saturated sets `T = {y·e^{sG} : y ∈ S_c, 0 ≤ s < 1}` where `e^G` is
//! the witness block of `A` (or of `A⁻¹`); `x ∈ T` iff the continuous solve
//! time of `x` lies in `(−1, 0]`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{continuous_case, discrete_case, ContinuousCase, DiscreteCase};
use crate::error::{Result, XsectError};
use crate::linalg::{
    integer_power, jordan_decompose, jordan_exp, real_jordan_form, rotation, Eigen, JordanBlock,
    Matrix, RealJordanForm, DEFAULT_TOL, MAX_INTEGER_POWER,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Continuous,
    Discrete,
}

impl FromStr for Mode {
    type Err = XsectError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(Mode::Continuous),
            "discrete" => Ok(Mode::Discrete),
            other => Err(XsectError::InvalidInput(format!("unknown mode '{other}'"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Continuous => "continuous",
            Mode::Discrete => "discrete",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionCase {
    /// `{x₁ = ±1}`.
    ContinuousRealNonzero,
    /// `{(s, 0) : 1 ≤ s < e^{|α|2π/β}}`.
    ContinuousComplexNonzero,
    /// `{(s, 0) : s ≠ 0}`.
    ContinuousZeroNilpotent,
    /// `{(p, 0, q, s) : p > 0, 0 ≤ q < 2πp/β}`.
    ContinuousImaginaryNilpotent,
    /// `{1 ≤ |x₁| < Λ}`.
    DiscreteModulusNotOne,
    /// Flow-saturated spiral.
    DiscreteComplexModulusNotOne,
    /// `{s(v₁ + qv₂) : s ≠ 0, 0 ≤ q < 1}`.
    DiscreteRealModulusOneNilpotent,
    /// Flow-saturated case-4 set.
    DiscreteComplexModulusOneNilpotent,
}

impl SectionCase {
    pub fn mode(self) -> Mode {
        use SectionCase::*;
        match self {
            ContinuousRealNonzero
            | ContinuousComplexNonzero
            | ContinuousZeroNilpotent
            | ContinuousImaginaryNilpotent => Mode::Continuous,
            _ => Mode::Discrete,
        }
    }

    /// Position 1–4 in the fixed case order of either action.
    pub fn number(self) -> u8 {
        use SectionCase::*;
        match self {
            ContinuousRealNonzero | DiscreteModulusNotOne => 1,
            ContinuousComplexNonzero | DiscreteComplexModulusNotOne => 2,
            ContinuousZeroNilpotent | DiscreteRealModulusOneNilpotent => 3,
            ContinuousImaginaryNilpotent | DiscreteComplexModulusOneNilpotent => 4,
        }
    }
}

/// Numeric data of the witness block.
///
/// * continuous: `alpha`, `beta` are the real and imaginary parts of the
///   generator eigenvalue;
/// * discrete: `lambda` is the real eigenvalue (cases 1, 3) or the modulus `ρ`
///   (case 2), `alpha = ln|λ|`, `beta` the rotation angle.
///
/// `upper` is the exclusive bound of the section's interval parameter, or 0
/// when the section has none.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub upper: f64,
}

/// A cross-section for one of the two actions, in Jordan coordinates of `jordan`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "SectionJson", try_from = "SectionJson")]
pub struct CrossSection {
    pub mode: Mode,
    pub case: SectionCase,
    pub block_index: usize,
    pub params: SectionParams,
    pub jordan: RealJordanForm,
    /// The generator `B` (continuous) or the matrix `A` (discrete).
    pub matrix: Matrix,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Parameter {
    Power(i64),
    Time(f64),
}

impl Parameter {
    pub fn as_f64(self) -> f64 {
        match self {
            Parameter::Power(k) => k as f64,
            Parameter::Time(t) => t,
        }
    }

    pub fn power(self) -> Option<i64> {
        match self {
            Parameter::Power(k) => Some(k),
            Parameter::Time(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSolution {
    pub parameter: Parameter,
    pub representative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SectionJson {
    mode: Mode,
    matrix: Matrix,
    tol: f64,
    case: SectionCase,
    block_index: usize,
    params: SectionParams,
    conjugator: Matrix,
    description: String,
    null_set: String,
}

impl From<CrossSection> for SectionJson {
    fn from(s: CrossSection) -> Self {
        SectionJson {
            description: s.describe(),
            null_set: s.null_set_description(),
            mode: s.mode,
            matrix: s.matrix,
            tol: s.tol,
            case: s.case,
            block_index: s.block_index,
            params: s.params,
            conjugator: s.jordan.conjugator,
        }
    }
}

impl TryFrom<SectionJson> for CrossSection {
    type Error = XsectError;
    fn try_from(j: SectionJson) -> Result<Self> {
        let s = CrossSection::build(j.mode, &j.matrix, j.tol)?;
        if s.case != j.case || s.block_index != j.block_index {
            return Err(XsectError::InvalidInput(format!(
                "stored case {:?}/{} does not match rebuilt {:?}/{}",
                j.case, j.block_index, s.case, s.block_index
            )));
        }
        Ok(s)
    }
}

/// Builds the section for `γ ↦ γe^{tB}`.
pub fn build_continuous_section(b: &Matrix, tol: f64) -> Result<CrossSection> {
    let jordan = jordan_decompose(b, tol)?;
    let scale = b.frobenius_norm().max(1.0);
    let (case, witness) = continuous_case(&jordan, scale, tol)?;
    let Some(block_index) = witness else {
        return Err(XsectError::NoSection);
    };
    let block = jordan.blocks[block_index];
    let (alpha, beta) = match block.eigen {
        Eigen::Real { value } => (value, 0.0),
        Eigen::ComplexPair { re, im } => (re, im),
    };
    let (case, upper) = match case {
        ContinuousCase::RealNonzero => (SectionCase::ContinuousRealNonzero, 0.0),
        ContinuousCase::ComplexNonzero => {
            (SectionCase::ContinuousComplexNonzero, (alpha.abs() * TAU / beta).exp())
        }
        ContinuousCase::ZeroNilpotent => (SectionCase::ContinuousZeroNilpotent, 0.0),
        ContinuousCase::ImaginaryNilpotent => (SectionCase::ContinuousImaginaryNilpotent, TAU / beta),
        ContinuousCase::None => return Err(XsectError::NoSection),
    };
    if !upper.is_finite() {
        return Err(XsectError::Overflow("spiral bound e^{|α|2π/β} overflows".into()));
    }
    Ok(CrossSection {
        mode: Mode::Continuous,
        case,
        block_index,
        params: SectionParams { alpha, beta, lambda: alpha.exp(), upper },
        jordan,
        matrix: b.clone(),
        tol,
    })
}

/// Builds the section for `γ ↦ γAᵏ`.
pub fn build_discrete_section(a: &Matrix, tol: f64) -> Result<CrossSection> {
    let jordan = real_jordan_form(a, tol)?;
    let (case, witness) = discrete_case(&jordan, tol)?;
    let Some(block_index) = witness else {
        return Err(XsectError::NoSection);
    };
    let block = jordan.blocks[block_index];
    let (lambda, beta) = match block.eigen {
        Eigen::Real { value } => (value, 0.0),
        Eigen::ComplexPair { .. } => (block.eigen.modulus(), block.eigen.argument()),
    };
    let alpha = lambda.abs().ln();
    let (case, upper) = match case {
        DiscreteCase::ModulusNotOne => (SectionCase::DiscreteModulusNotOne, alpha.abs().exp()),
        DiscreteCase::ComplexModulusNotOne => {
            (SectionCase::DiscreteComplexModulusNotOne, (alpha.abs() * TAU / beta).exp())
        }
        DiscreteCase::RealModulusOneNilpotent => (SectionCase::DiscreteRealModulusOneNilpotent, 1.0),
        DiscreteCase::ComplexModulusOneNilpotent => {
            (SectionCase::DiscreteComplexModulusOneNilpotent, TAU / beta)
        }
        DiscreteCase::None => return Err(XsectError::NoSection),
    };
    if !upper.is_finite() {
        return Err(XsectError::Overflow("section bound overflows".into()));
    }
    Ok(CrossSection {
        mode: Mode::Discrete,
        case,
        block_index,
        params: SectionParams { alpha, beta, lambda, upper },
        jordan,
        matrix: a.clone(),
        tol,
    })
}

/// Polar angle normalised to `[0, 2π)`.
fn angle(x1: f64, x2: f64) -> f64 {
    let a = x2.atan2(x1);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// `(x₁, x₂)·E_β(t)`.
fn rotate(x1: f64, x2: f64, beta_t: f64) -> (f64, f64) {
    let (c, s) = rotation(beta_t);
    (x1 * c - x2 * s, x1 * s + x2 * c)
}

/// Time `t` with `(x₁,x₂)e^{tD} ∈ {(s,0) : 1 ≤ s < e^{|α|2π/|β|}}` where
/// `D = [[α, β], [−β, α]]`, `α ≠ 0`, `β ≠ 0`.
fn spiral_time(x1: f64, x2: f64, alpha: f64, beta: f64) -> f64 {
    let r = x1.hypot(x2);
    let t0 = -angle(x1, x2) / beta;
    let u0 = r.ln() + alpha * t0;
    let c = alpha.abs() * TAU / beta.abs();
    let sign = (alpha * beta).signum();
    let mut t = t0 - sign * (u0 / c).floor() * TAU / beta;
    // One correction step for rounding at the period boundary.
    let m = ((r.ln() + alpha * t) / c).floor();
    if m != 0.0 {
        t -= sign * m * TAU / beta;
    }
    t
}

/// Time `t` with `x·e^{tG} ∈ {(p,0,q,s) : p > 0, 0 ≤ q < 2πp/β}` for
/// `G = [[D, I], [0, D]]`, `D = [[0, β], [−β, 0]]`.
fn shear_rotation_time(x: &[f64], beta: f64) -> f64 {
    let p = x[0].hypot(x[1]);
    let t1 = -angle(x[0], x[1]) / beta;
    let (y3, _) = rotate(x[2], x[3], beta * t1);
    let period = TAU / beta;
    let mut t = t1 - ((t1 * p + y3) / (period * p)).floor() * period;
    let q = t * p + rotate(x[2], x[3], beta * t).0;
    let m = (q / (period * p)).floor();
    if m != 0.0 {
        t -= m * period;
    }
    t
}

impl CrossSection {
    /// Builds the section for `matrix` under the given action.
    pub fn build(mode: Mode, matrix: &Matrix, tol: f64) -> Result<Self> {
        match mode {
            Mode::Continuous => build_continuous_section(matrix, tol),
            Mode::Discrete => build_discrete_section(matrix, tol),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn block(&self) -> &JordanBlock {
        &self.jordan.blocks[self.block_index]
    }

    pub fn offset(&self) -> usize {
        self.block().offset
    }

    /// Number of Jordan coordinates the section constrains; the rest are free.
    pub fn constrained_dim(&self) -> usize {
        use SectionCase::*;
        match self.case {
            ContinuousRealNonzero | DiscreteModulusNotOne => 1,
            ContinuousImaginaryNilpotent | DiscreteComplexModulusOneNilpotent => 4,
            _ => 2,
        }
    }

    /// Human-readable description of S in Jordan coordinates of the witness block.
    pub fn describe(&self) -> String {
        use SectionCase::*;
        let p = &self.params;
        let free = "remaining Jordan coordinates free";
        match self.case {
            ContinuousRealNonzero => format!("x1 in {{+1, -1}}; {free}"),
            ContinuousComplexNonzero => format!("(x1, x2) = (s, 0) with 1 <= s < {:e}; {free}", p.upper),
            ContinuousZeroNilpotent => format!("(x1, x2) = (s, 0) with s != 0; {free}"),
            ContinuousImaginaryNilpotent => format!(
                "(x1, x2, x3, x4) = (p, 0, q, s) with p > 0, 0 <= q < {:e} p; {free}",
                p.upper
            ),
            DiscreteModulusNotOne => format!("1 <= |x1| < {:e}; {free}", p.upper),
            DiscreteComplexModulusNotOne => format!(
                "spiral {{s rho^t (cos bt, sin bt) : 1 <= s < {:e}, 0 <= t < 1}} with rho = {:e}, b = {:e}; {free}",
                p.upper,
                if p.alpha > 0.0 { p.lambda } else { 1.0 / p.lambda },
                if p.alpha > 0.0 { p.beta } else { -p.beta }
            ),
            DiscreteRealModulusOneNilpotent => {
                format!("s (v1 + q v2) with s != 0, 0 <= q < 1 (eigenvalue {}); {free}", p.lambda)
            }
            DiscreteComplexModulusOneNilpotent => format!(
                "(p, 0, q, s) e^(tG) with p > 0, 0 <= q < {:e} p, 0 <= t < 1; {free}",
                p.upper
            ),
        }
    }

    /// Whether the null set is the hyperplane `x₁ = 0` (else the plane `x₁ = x₂ = 0`).
    fn null_is_hyperplane(&self) -> bool {
        use SectionCase::*;
        matches!(
            self.case,
            ContinuousRealNonzero | ContinuousZeroNilpotent | DiscreteModulusNotOne | DiscreteRealModulusOneNilpotent
        )
    }

    pub fn null_set_description(&self) -> String {
        if self.null_is_hyperplane() { "x1 = 0" } else { "x1^2 + x2^2 = 0" }.into()
    }

    /// Jordan coordinates of `γ` restricted to the witness block; points of
    /// the null set are reported as `ExceptionalPoint`.
    pub fn block_coords(&self, gamma: &[f64]) -> Result<Vec<f64>> {
        if gamma.len() != self.dim() {
            return Err(XsectError::InvalidInput(format!(
                "point has {} coordinates, expected {}",
                gamma.len(),
                self.dim()
            )));
        }
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(XsectError::InvalidInput("non-finite point".into()));
        }
        let x = self.jordan.to_jordan(gamma);
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let o = self.offset();
        let b = x[o..o + self.block().size()].to_vec();
        let null = if self.null_is_hyperplane() { b[0].abs() } else { b[0].hypot(b[1]) };
        if scale == 0.0 || null <= 4.0 * f64::EPSILON * scale {
            return Err(XsectError::ExceptionalPoint { reason: self.null_set_description() });
        }
        Ok(b)
    }

    /// Witness-block coordinates in the basis where the block power reads
    /// `λᵏ[[E, kE], [0, E]]`.
    fn adapted(&self, mut b: Vec<f64>) -> Vec<f64> {
        match self.case {
            SectionCase::DiscreteRealModulusOneNilpotent => {
                b[1] *= self.params.lambda;
                b
            }
            SectionCase::DiscreteComplexModulusOneNilpotent => {
                let (y3, y4) = rotate(b[2], b[3], self.params.beta);
                b[2] = y3;
                b[3] = y4;
                b
            }
            _ => b,
        }
    }

    /// Flow direction `σ` of the discrete spiral: `e^{σG}` is the witness block.
    fn spiral_sign(&self) -> f64 {
        self.params.alpha.signum()
    }

    /// Solve time of the flow whose unit step is the witness block of `A`
    /// (or `A⁻¹`), for the flow-saturated discrete sections.
    fn flow_time(&self, y: &[f64]) -> f64 {
        match self.case {
            SectionCase::DiscreteComplexModulusNotOne => {
                let s = self.spiral_sign();
                spiral_time(y[0], y[1], s * self.params.alpha, s * self.params.beta)
            }
            SectionCase::DiscreteComplexModulusOneNilpotent => shear_rotation_time(y, self.params.beta),
            _ => unreachable!("flow time only for flow-saturated sections"),
        }
    }

    /// Relative tolerance on the block, widened by the round-off of the
    /// change to Jordan coordinates (which scales with the whole point).
    fn eq_tol(&self, b: &[f64], gamma: &[f64]) -> f64 {
        let block = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let whole = self.jordan.to_jordan(gamma).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (self.tol * block).max(64.0 * f64::EPSILON * whole)
    }

    /// Membership of `γ` in the section. Equality constraints of continuous
    /// sections are tested at relative tolerance `tol`; inequalities exactly.
    pub fn contains(&self, gamma: &[f64]) -> Result<bool> {
        use SectionCase::*;
        let b = self.block_coords(gamma)?;
        let eps = self.eq_tol(&b, gamma);
        let p = &self.params;
        Ok(match self.case {
            ContinuousRealNonzero => (b[0].abs() - 1.0).abs() <= eps,
            ContinuousComplexNonzero => b[1].abs() <= eps && b[0] >= 1.0 && b[0] < p.upper,
            ContinuousZeroNilpotent => b[1].abs() <= eps,
            ContinuousImaginaryNilpotent => {
                b[1].abs() <= eps && b[0] > 0.0 && b[2] >= 0.0 && b[2] < p.upper * b[0]
            }
            DiscreteModulusNotOne => b[0].abs() >= 1.0 && b[0].abs() < p.upper,
            DiscreteRealModulusOneNilpotent => {
                let y = self.adapted(b);
                let q = y[1] / y[0];
                (0.0..1.0).contains(&q)
            }
            DiscreteComplexModulusNotOne | DiscreteComplexModulusOneNilpotent => {
                let tau = self.flow_time(&self.adapted(b));
                tau > -1.0 && tau <= 0.0
            }
        })
    }

    /// Equality-constraint residual of a continuous section at `γ`, and whether
    /// the inequality constraints hold (evaluated as if the equality held).
    ///
    /// A point lies in S iff the residual vanishes and the flag is set; the
    /// residual changes sign transversally along orbits.
    pub fn constraint_residual(&self, gamma: &[f64]) -> Result<(f64, bool)> {
        let b = self.block_coords(gamma)?;
        self.block_residual(&b)
    }

    /// [`Self::constraint_residual`] on witness-block Jordan coordinates.
    pub fn block_residual(&self, b: &[f64]) -> Result<(f64, bool)> {
        use SectionCase::*;
        let p = &self.params;
        match self.case {
            ContinuousRealNonzero => Ok((b[0].abs().ln(), true)),
            ContinuousComplexNonzero => Ok((b[1], b[0] >= 1.0 && b[0] < p.upper)),
            ContinuousZeroNilpotent => Ok((b[1], true)),
            ContinuousImaginaryNilpotent => {
                Ok((b[1], b[0] > 0.0 && b[2] >= 0.0 && b[2] < p.upper * b[0]))
            }
            _ => Err(XsectError::UnsupportedCase("constraint residual is for continuous sections".into())),
        }
    }

    /// The unique parameter placing `γ` on the section, and the representative.
    pub fn solve_orbit(&self, gamma: &[f64]) -> Result<OrbitSolution> {
        use SectionCase::*;
        let b = self.block_coords(gamma)?;
        let p = &self.params;
        match self.mode {
            Mode::Continuous => {
                let t = match self.case {
                    ContinuousRealNonzero => -b[0].abs().ln() / p.alpha,
                    ContinuousComplexNonzero => spiral_time(b[0], b[1], p.alpha, p.beta),
                    ContinuousZeroNilpotent => -b[1] / b[0],
                    ContinuousImaginaryNilpotent => shear_rotation_time(&b, p.beta),
                    _ => unreachable!(),
                };
                if !t.is_finite() {
                    return Err(XsectError::Overflow(format!("orbit time not finite for {gamma:?}")));
                }
                let rep = self.flow(gamma, t)?;
                Ok(OrbitSolution { parameter: Parameter::Time(t), representative: rep })
            }
            Mode::Discrete => {
                let k = match self.case {
                    DiscreteModulusNotOne => {
                        p.alpha.signum() * (b[0].abs().ln() / p.alpha.abs()).floor()
                    }
                    DiscreteRealModulusOneNilpotent => {
                        let y = self.adapted(b.clone());
                        (y[1] / y[0]).floor()
                    }
                    DiscreteComplexModulusNotOne => {
                        -self.spiral_sign() * self.flow_time(&self.adapted(b.clone())).ceil()
                    }
                    DiscreteComplexModulusOneNilpotent => -self.flow_time(&self.adapted(b.clone())).ceil(),
                    _ => unreachable!(),
                };
                if !k.is_finite() || k.abs() > MAX_INTEGER_POWER as f64 {
                    return Err(XsectError::Overflow(format!("orbit power {k} out of range")));
                }
                let k = k as i64;
                // The closed form can be off by one only at period boundaries.
                for cand in [k, k + 1, k - 1] {
                    let rep = self.step(gamma, -cand)?;
                    if self.contains(&rep)? {
                        return Ok(OrbitSolution { parameter: Parameter::Power(cand), representative: rep });
                    }
                }
                let rep = self.step(gamma, -k)?;
                Ok(OrbitSolution { parameter: Parameter::Power(k), representative: rep })
            }
        }
    }

    /// Position `r ∈ [0, 1)` of a point of a discrete section across the
    /// section's fundamental layer: `(|x₁| − 1)/(Λ − 1)` in case 1, the
    /// flow parameter `s` of `y·e^{sG}` in cases 2 and 4, and `q` in case 3.
    pub fn radial(&self, gamma: &[f64]) -> Result<f64> {
        use SectionCase::*;
        let b = self.block_coords(gamma)?;
        match self.case {
            DiscreteModulusNotOne => Ok((b[0].abs() - 1.0) / (self.params.upper - 1.0)),
            DiscreteRealModulusOneNilpotent => {
                let y = self.adapted(b);
                Ok(y[1] / y[0])
            }
            DiscreteComplexModulusNotOne | DiscreteComplexModulusOneNilpotent => {
                Ok(-self.flow_time(&self.adapted(b)))
            }
            _ => Err(XsectError::UnsupportedCase("radial coordinate is for discrete sections".into())),
        }
    }

    /// An ambient point of the section with radial coordinate `r` on the
    /// half selected by `sign` (cases 1 and 3); other Jordan coordinates 0.
    pub fn slab_point(&self, r: f64, sign: f64) -> Result<Vec<f64>> {
        use SectionCase::*;
        let p = &self.params;
        let sign = if sign < 0.0 { -1.0 } else { 1.0 };
        let b = match self.case {
            DiscreteModulusNotOne => vec![sign * (1.0 + (p.upper - 1.0) * r)],
            DiscreteRealModulusOneNilpotent => vec![sign, sign * r / p.lambda],
            DiscreteComplexModulusNotOne => {
                // y = (u, 0) on the continuous spiral section, flowed by s = r.
                let s = self.spiral_sign();
                let u = p.upper.sqrt();
                let (a, w) = (s * p.alpha, s * p.beta);
                let m = u * (a * r).exp();
                vec![m * (w * r).cos(), m * (w * r).sin()]
            }
            _ => return Err(XsectError::UnsupportedCase(format!("no slab points for {:?}", self.case))),
        };
        let mut x = vec![0.0; self.dim()];
        x[self.offset()..self.offset() + b.len()].copy_from_slice(&b);
        Ok(self.jordan.from_jordan(&x))
    }

    /// `γ·e^{tB}` evaluated in Jordan coordinates.
    pub fn flow(&self, gamma: &[f64], t: f64) -> Result<Vec<f64>> {
        let x = self.jordan.to_jordan(gamma);
        let y = jordan_exp(&self.jordan, t).apply(&x);
        let out = self.jordan.from_jordan(&y);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(XsectError::Overflow(format!("γe^(tB) overflows at t = {t}")));
        }
        Ok(out)
    }

    /// `γ·Aᵏ` evaluated in Jordan coordinates.
    pub fn step(&self, gamma: &[f64], k: i64) -> Result<Vec<f64>> {
        let x = self.jordan.to_jordan(gamma);
        let y = integer_power(&self.jordan.jordan_matrix(), k)?.apply(&x);
        let out = self.jordan.from_jordan(&y);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(XsectError::Overflow(format!("γA^k overflows at k = {k}")));
        }
        Ok(out)
    }

    /// The action by parameter `s`: `γe^{sB}` or `γAˢ` (s must be integral).
    pub fn act(&self, gamma: &[f64], s: f64) -> Result<Vec<f64>> {
        match self.mode {
            Mode::Continuous => self.flow(gamma, s),
            Mode::Discrete => self.step(gamma, s as i64),
        }
    }

    /// A section for the conjugated matrix `SMS⁻¹` obtained by transporting
    /// this one: `γ ∈ S'` iff `γS ∈ S`.
    pub fn conjugated(&self, s: &Matrix) -> Result<CrossSection> {
        let s_inv = s.inverse()?;
        let matrix = &(s * &self.matrix) * &s_inv;
        let jordan = self.jordan.conjugated_by(s, &s_inv);
        Ok(CrossSection { matrix, jordan, ..self.clone() })
    }
}

/// Convenience wrappers with the default tolerance.
pub fn contains(s: &CrossSection, gamma: &[f64]) -> Result<bool> {
    s.contains(gamma)
}

pub fn solve_orbit(s: &CrossSection, gamma: &[f64]) -> Result<OrbitSolution> {
    s.solve_orbit(gamma)
}

/// Builds a section with [`DEFAULT_TOL`].
pub fn build(mode: Mode, matrix: &Matrix) -> Result<CrossSection> {
    CrossSection::build(mode, matrix, DEFAULT_TOL)
}

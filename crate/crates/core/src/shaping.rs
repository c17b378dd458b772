//! Re-arranging an infinite-measure discrete cross-section into one of
//! finite measure (`|det A| ≠ 1`) or into a bounded one (all moduli on one
//! side of 1).
//!
//! The section `S = S₀ × span(rest)` is cut along dyadic sup-norm shells
//! `T_k` of the free Jordan coordinates into pieces `S_k = S₀ × T_k`, and
//! each piece is moved along its orbits: `S̃ = ∪ S_k·A^{n_k}`. Orbits are
//! untouched, so `S̃` is again a cross-section.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, XsectError};
use crate::linalg::{integer_power, Matrix};
use crate::sampling::{par_generate, uniform_in_box};
use crate::sections::{CrossSection, Mode, OrbitSolution, Parameter, SectionCase};

/// Pieces listed in reports; the tail beyond carries weight `2^{−K}`.
pub const REPORTED_PIECES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeTarget {
    FiniteMeasure,
    Bounded,
}

/// Dyadic sup-norm shells of `ℝᵈ`: `T₁ = {‖v‖∞ < 1}`,
/// `T_k = {2^{k−2} ≤ ‖v‖∞ < 2^{k−1}}` for `k ≥ 2`. For `d = 0` the single
/// shell `T₁ = ℝ⁰`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellPartition {
    pub dim: usize,
}

impl ShellPartition {
    pub fn index_of(&self, v: &[f64]) -> usize {
        let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if self.dim == 0 || m < 1.0 {
            return 1;
        }
        let mut k = m.log2().floor() as i64 + 2;
        // Guard the floor against rounding in log2.
        while m < 2f64.powi(k as i32 - 2) {
            k -= 1;
        }
        while m >= 2f64.powi(k as i32 - 1) {
            k += 1;
        }
        k as usize
    }

    /// Outer sup-radius `2^{k−1}`.
    pub fn outer(&self, k: usize) -> f64 {
        2f64.powi(k as i32 - 1)
    }

    /// Inner sup-radius (0 for the unit box).
    pub fn inner(&self, k: usize) -> f64 {
        if k == 1 {
            0.0
        } else {
            2f64.powi(k as i32 - 2)
        }
    }

    pub fn volume(&self, k: usize) -> f64 {
        if self.dim == 0 {
            return 1.0;
        }
        let d = self.dim as i32;
        (2.0 * self.outer(k)).powi(d) - (2.0 * self.inner(k)).powi(d)
    }

    pub fn is_single(&self) -> bool {
        self.dim == 0
    }

    /// A uniform point of `T_k` (rejection from the bounding box).
    pub fn sample<R: Rng>(&self, k: usize, rng: &mut R) -> Vec<f64> {
        let (lo, hi) = (self.inner(k), self.outer(k));
        loop {
            let v: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-hi..hi)).collect();
            if self.dim == 0 || v.iter().fold(0.0f64, |a, x| a.max(x.abs())) >= lo {
                return v;
            }
        }
    }
}

/// Monte Carlo estimate with a three-sigma Bernoulli bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub estimate: f64,
    pub bound: f64,
    pub samples: usize,
}

/// Unbiased estimate of the measure of `{γ ∈ [lo, hi) : member(γ)}`.
pub fn estimate_measure<F>(member: F, lo: &[f64], hi: &[f64], samples: usize, seed: u64) -> MeasureEstimate
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    if samples == 0 || vol == 0.0 {
        return MeasureEstimate { estimate: 0.0, bound: 0.0, samples };
    }
    let hits = par_generate(seed, samples, |_, rng| member(&uniform_in_box(rng, lo, hi)))
        .into_iter()
        .filter(|h| *h)
        .count();
    let p = hits as f64 / samples as f64;
    // Bernoulli variance, floored at one hit so an empty sample still bounds.
    let var = (p * (1.0 - p)).max(1.0 / samples as f64) / samples as f64;
    MeasureEstimate { estimate: vol * p, bound: 3.0 * vol * var.sqrt(), samples }
}

/// A cross-section rearranged piecewise along orbits.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "ShapedJson", try_from = "ShapedJson")]
pub struct ShapedSection {
    pub base: CrossSection,
    pub target: ShapeTarget,
    pub shells: ShellPartition,
    /// `|det A|`.
    pub delta: f64,
    /// `n_k` for `k = 1..=REPORTED_PIECES` (or the single piece).
    pub shifts: Vec<i64>,
    /// `|det P|`, converting Jordan-coordinate volumes to ambient ones.
    jacobian: f64,
}

#[derive(Serialize, Deserialize)]
struct ShapedJson {
    target: ShapeTarget,
    base: CrossSection,
    delta: f64,
    pieces: Vec<PieceReport>,
    tail_weight: f64,
}

/// Certificate for one piece.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PieceReport {
    pub index: usize,
    pub weight: f64,
    pub shift: i64,
    /// Ambient measure of `S_k` (an upper bound for spiral sections).
    pub base_measure: f64,
    /// `δ^{n_k}·m(S_k)` (finite-measure) or the norm bound of `S_k·A^{n_k}` (bounded).
    pub certificate: f64,
}

impl From<ShapedSection> for ShapedJson {
    fn from(s: ShapedSection) -> Self {
        ShapedJson {
            pieces: s.pieces(),
            tail_weight: if s.shells.is_single() { 0.0 } else { 2f64.powi(-(REPORTED_PIECES as i32)) },
            target: s.target,
            delta: s.delta,
            base: s.base,
        }
    }
}

impl TryFrom<ShapedJson> for ShapedSection {
    type Error = XsectError;
    fn try_from(j: ShapedJson) -> Result<Self> {
        match j.target {
            ShapeTarget::FiniteMeasure => to_finite_measure(&j.base),
            ShapeTarget::Bounded => to_bounded(&j.base),
        }
    }
}

fn check_base(s: &CrossSection) -> Result<()> {
    match s.case {
        SectionCase::DiscreteModulusNotOne | SectionCase::DiscreteComplexModulusNotOne => Ok(()),
        other => Err(XsectError::UnsupportedCase(format!(
            "shaping needs a discrete section from an eigenvalue of modulus != 1, got {other:?}"
        ))),
    }
}

/// Rearranges `s` into a cross-section of measure at most 1.
pub fn to_finite_measure(s: &CrossSection) -> Result<ShapedSection> {
    if s.mode != Mode::Discrete {
        return Err(XsectError::UnsupportedCase("shaping applies to discrete sections".into()));
    }
    let delta = s.matrix.det().abs();
    if (delta - 1.0).abs() <= s.tol {
        return Err(XsectError::DetOne { det: delta });
    }
    check_base(s)?;
    ShapedSection::new(s.clone(), ShapeTarget::FiniteMeasure)
}

/// Rearranges `s` into a cross-section inside the closed unit ball.
pub fn to_bounded(s: &CrossSection) -> Result<ShapedSection> {
    if s.mode != Mode::Discrete {
        return Err(XsectError::UnsupportedCase("shaping applies to discrete sections".into()));
    }
    let moduli: Vec<f64> = s.jordan.blocks.iter().map(|b| b.eigen.modulus()).collect();
    let all_above = moduli.iter().all(|m| *m > 1.0 + s.tol);
    let all_below = moduli.iter().all(|m| *m < 1.0 - s.tol);
    if !(all_above || all_below) {
        return Err(XsectError::MixedModuli);
    }
    check_base(s)?;
    ShapedSection::new(s.clone(), ShapeTarget::Bounded)
}

impl ShapedSection {
    fn new(base: CrossSection, target: ShapeTarget) -> Result<Self> {
        let d = base.dim() - base.constrained_dim();
        let jacobian = base.jordan.conjugator.det().abs();
        let mut shaped = ShapedSection {
            delta: base.matrix.det().abs(),
            base,
            target,
            shells: ShellPartition { dim: d },
            shifts: Vec::new(),
            jacobian,
        };
        let count = if shaped.shells.is_single() { 1 } else { REPORTED_PIECES };
        shaped.shifts = (1..=count).map(|k| shaped.compute_shift(k)).collect::<Result<_>>()?;
        Ok(shaped)
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `d_k = 2^{−k}`, or 1 for the single piece.
    pub fn weight(&self, k: usize) -> f64 {
        if self.shells.is_single() {
            1.0
        } else {
            2f64.powi(-(k as i32))
        }
    }

    /// Jordan-coordinate measure of the constrained factor `S₀` (an annulus
    /// bound for the spiral).
    fn factor_measure(&self) -> f64 {
        let p = &self.base.params;
        match self.base.case {
            SectionCase::DiscreteModulusNotOne => 2.0 * (p.upper - 1.0),
            _ => PI * (self.factor_radius().powi(2) - 1.0),
        }
    }

    /// Euclidean radius of `S₀` in Jordan coordinates.
    fn factor_radius(&self) -> f64 {
        let p = &self.base.params;
        match self.base.case {
            SectionCase::DiscreteModulusNotOne => p.upper,
            // s·e^{|α|t} with s < upper and t < 1.
            _ => p.upper * p.alpha.abs().exp(),
        }
    }

    /// Ambient measure of `S_k` (upper bound for the spiral).
    pub fn base_measure(&self, k: usize) -> f64 {
        self.jacobian * self.factor_measure() * self.shells.volume(k)
    }

    /// Euclidean radius bound of `S_k` in Jordan coordinates.
    fn piece_radius(&self, k: usize) -> f64 {
        let r = self.factor_radius();
        (r * r + self.shells.dim as f64 * self.shells.outer(k).powi(2)).sqrt()
    }

    /// `‖J^n P‖₂`: bounds `‖x·Jⁿ·P‖ / ‖x‖` for Jordan coordinates `x`.
    fn ambient_gain(&self, n: i64) -> Result<f64> {
        let j = integer_power(&self.base.jordan.jordan_matrix(), n)?;
        Ok((&j * &self.base.jordan.conjugator).operator_norm())
    }

    fn compute_shift(&self, k: usize) -> Result<i64> {
        match self.target {
            ShapeTarget::FiniteMeasure => {
                let c = self.weight(k) / self.base_measure(k);
                let r = c.ln() / self.delta.ln();
                let n = if self.delta > 1.0 { r.floor() } else { r.ceil() };
                if !n.is_finite() {
                    return Err(XsectError::Overflow(format!("shift for piece {k}")));
                }
                Ok(n as i64)
            }
            ShapeTarget::Bounded => {
                let expanding = self.base.jordan.blocks.iter().all(|b| b.eigen.modulus() > 1.0);
                let dir = if expanding { -1 } else { 1 };
                let radius = self.piece_radius(k);
                for m in 0..=crate::linalg::MAX_INTEGER_POWER.min(100_000) {
                    if radius * self.ambient_gain(dir * m)? <= 1.0 {
                        return Ok(dir * m);
                    }
                }
                Err(XsectError::Overflow(format!("no shift bounds piece {k}")))
            }
        }
    }

    /// `n_k`, cached for the reported pieces.
    pub fn shift(&self, k: usize) -> Result<i64> {
        match self.shifts.get(k - 1) {
            Some(n) => Ok(*n),
            None => self.compute_shift(k),
        }
    }

    /// Free Jordan coordinates of a point (those outside the constrained factor).
    fn free_coords(&self, gamma: &[f64]) -> Vec<f64> {
        let x = self.base.jordan.to_jordan(gamma);
        let o = self.base.offset();
        let c = self.base.constrained_dim();
        x.iter()
            .enumerate()
            .filter(|(i, _)| *i < o || *i >= o + c)
            .map(|(_, v)| *v)
            .collect()
    }

    /// Shell index of a point of the base section.
    pub fn piece_of(&self, gamma: &[f64]) -> usize {
        self.shells.index_of(&self.free_coords(gamma))
    }

    /// Membership in `S̃`: the base representative's piece must be shifted by
    /// exactly the base orbit parameter.
    pub fn contains(&self, gamma: &[f64]) -> Result<bool> {
        let sol = self.base.solve_orbit(gamma)?;
        let k = sol.parameter.power().expect("discrete");
        Ok(k == self.shift(self.piece_of(&sol.representative))?)
    }

    /// The power `k'` with `γ·A^{−k'} ∈ S̃`, and that representative.
    pub fn solve_orbit(&self, gamma: &[f64]) -> Result<OrbitSolution> {
        let sol = self.base.solve_orbit(gamma)?;
        let k = sol.parameter.power().expect("discrete");
        let n = self.shift(self.piece_of(&sol.representative))?;
        let rep = self.base.step(&sol.representative, n)?;
        Ok(OrbitSolution { parameter: Parameter::Power(k - n), representative: rep })
    }

    /// Whether `γ ∈ S_k·A^{n_k}`; null-set points count as outside.
    pub fn in_piece(&self, gamma: &[f64], k: usize) -> bool {
        let Ok(sol) = self.base.solve_orbit(gamma) else {
            return false;
        };
        self.piece_of(&sol.representative) == k && sol.parameter.power() == self.shift(k).ok()
    }

    /// A point of `S_k` in Jordan coordinates.
    fn sample_base_jordan<R: Rng>(&self, k: usize, rng: &mut R) -> Vec<f64> {
        let base = &self.base;
        let p = &base.params;
        let free = self.shells.sample(k, rng);
        let factor: Vec<f64> = match base.case {
            SectionCase::DiscreteModulusNotOne => {
                let s = rng.random_range(1.0..p.upper);
                vec![if rng.random::<bool>() { s } else { -s }]
            }
            _ => {
                // (s, 0)·e^{tG} on the pair, G = σ[[ln ρ, θ], [−θ, ln ρ]].
                let s = rng.random_range(1.0..p.upper);
                let t: f64 = rng.random();
                let sg = p.alpha.signum();
                let r = s * (sg * p.alpha * t).exp();
                let a = sg * p.beta * t;
                vec![r * a.cos(), r * a.sin()]
            }
        };
        let o = base.offset();
        let c = base.constrained_dim();
        let mut x = Vec::with_capacity(base.dim());
        let mut fi = free.into_iter();
        for i in 0..base.dim() {
            if i >= o && i < o + c {
                x.push(factor[i - o]);
            } else {
                x.push(fi.next().expect("free coordinate"));
            }
        }
        x
    }

    /// A point of the shifted piece `S_k·A^{n_k}` (ambient coordinates).
    pub fn sample_piece<R: Rng>(&self, k: usize, rng: &mut R) -> Result<Vec<f64>> {
        let x = self.sample_base_jordan(k, rng);
        let gamma = self.base.jordan.from_jordan(&x);
        self.base.step(&gamma, self.shift(k)?)
    }

    /// Ambient bounding box of `S_k·A^{n_k}` by interval arithmetic.
    pub fn piece_box(&self, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let base = &self.base;
        let n = base.dim();
        let o = base.offset();
        let c = base.constrained_dim();
        let r = self.factor_radius();
        let outer = self.shells.outer(k);
        let (mut lo_j, mut hi_j) = (vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let h = if i >= o && i < o + c { r } else { outer };
            lo_j[i] = -h;
            hi_j[i] = h;
        }
        let m = &integer_power(&base.jordan.jordan_matrix(), self.shift(k)?)? * &base.jordan.conjugator;
        let (mut lo, mut hi) = (vec![0.0; n], vec![0.0; n]);
        for j in 0..n {
            for i in 0..n {
                let (a, b) = (lo_j[i] * m[(i, j)], hi_j[i] * m[(i, j)]);
                lo[j] += a.min(b);
                hi[j] += a.max(b);
            }
        }
        Ok((lo, hi))
    }

    /// Stratified Monte Carlo estimate of `m(S̃)` over the first `pieces`
    /// pieces; the tail weight `2^{−pieces}` is added to the bound.
    pub fn estimate_measure(&self, samples: usize, seed: u64, pieces: usize) -> Result<MeasureEstimate> {
        let count = if self.shells.is_single() { 1 } else { pieces.max(1) };
        let per = (samples / count).max(1);
        let (mut est, mut var) = (0.0, 0.0);
        for k in 1..=count {
            let (lo, hi) = self.piece_box(k)?;
            let e = estimate_measure(
                |g| self.in_piece(g, k),
                &lo,
                &hi,
                per,
                seed.wrapping_add(k as u64),
            );
            est += e.estimate;
            var += (e.bound / 3.0).powi(2);
        }
        let tail = if self.shells.is_single() { 0.0 } else { 2f64.powi(-(count as i32)) };
        Ok(MeasureEstimate { estimate: est, bound: 3.0 * var.sqrt() + tail, samples: per * count })
    }

    pub fn pieces(&self) -> Vec<PieceReport> {
        (1..=self.shifts.len())
            .map(|k| {
                let shift = self.shifts[k - 1];
                let certificate = match self.target {
                    ShapeTarget::FiniteMeasure => self.delta.powi(shift as i32) * self.base_measure(k),
                    ShapeTarget::Bounded => self.piece_radius(k) * self.ambient_gain(shift).unwrap_or(f64::INFINITY),
                };
                PieceReport { index: k, weight: self.weight(k), shift, base_measure: self.base_measure(k), certificate }
            })
            .collect()
    }
}

/// Shape `s` towards `target`.
pub fn shape(s: &CrossSection, target: ShapeTarget) -> Result<ShapedSection> {
    match target {
        ShapeTarget::FiniteMeasure => to_finite_measure(s),
        ShapeTarget::Bounded => to_bounded(s),
    }
}

/// Checks that `a` is the matrix the section was built for.
pub fn check_matrix(s: &CrossSection, a: &Matrix) -> Result<()> {
    if a.dim() != s.matrix.dim() || crate::linalg::rel_distance(a, &s.matrix) > s.tol {
        return Err(XsectError::InvalidInput("matrix does not match the section".into()));
    }
    Ok(())
}

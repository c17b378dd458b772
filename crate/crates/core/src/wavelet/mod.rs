//! Lattice machinery and multi-wavelet sets.
//!
//! A set `K` is a multi-wavelet set of order `L` for `(A, Γ)` iff
//!
//! * `Σ_{γ∈Γ*} χ_K(ξ + γ) = L` (translation count), and
//! * `Σ_{j∈ℤ} χ_K(ξAʲ) = 1` (dilation count)
//!
//! for almost every `ξ`. This module counts both, partitions a set of order
//! `L` into `L` sets of order 1 via the coset selector `U(K)`, evaluates
//! dimension functions, and builds sets of infinite order.

pub mod boxes;
pub mod infinity;
pub mod lattice;
pub mod region;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use boxes::HalfOpenBox;
pub use infinity::{build_order_infinity_set, DEFAULT_PIECES};
pub use lattice::{DualPoint, Lattice};
pub use region::{PartitionPiece, PartitionState, RegionSet, ShiftedPieces};

use crate::error::{Result, XsectError};
use crate::linalg::{integer_power, norm2, real_jordan_form, Matrix, DEFAULT_TOL};
use crate::sampling::{gaussian, par_generate};
use crate::verify::{assemble, Outcome, SampleRecord, TilingReport};
use lattice::sort_selector;

/// Default enumeration radius for regions without finite reach.
pub const DEFAULT_RADIUS: f64 = 64.0;
/// Default dilation scan `j ∈ [−40, 40]`.
pub const DEFAULT_J_RANGE: (i64, i64) = (-40, 40);
/// Points of `Y` sampled for selector preconditions.
const PRECONDITION_SAMPLES: usize = 1024;

/// Order of a multi-wavelet set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Finite(usize),
    Infinite,
}

impl FromStr for Order {
    type Err = XsectError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "∞" => Ok(Order::Infinite),
            _ => match s.parse::<usize>() {
                Ok(l) if l >= 1 => Ok(Order::Finite(l)),
                _ => Err(XsectError::InvalidInput(format!("order must be a positive integer or 'inf', got '{s}'"))),
            },
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(l) => write!(f, "{l}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

/// A translation count; `truncated` marks a lower bound from a finite
/// enumeration radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationCount {
    pub count: usize,
    pub truncated: bool,
}

impl fmt::Display for TranslationCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.truncated {
            write!(f, "≥ {}, truncated", self.count)
        } else {
            write!(f, "{}", self.count)
        }
    }
}

/// `#{γ ∈ Γ* : ξ + γ ∈ K}`.
pub fn translation_count(k: &RegionSet, lattice: &Lattice, xi: &[f64], radius: f64) -> Result<TranslationCount> {
    let (hits, truncated) = k.translation_hits(lattice, xi, radius)?;
    Ok(TranslationCount { count: hits.len(), truncated })
}

/// `#{j ∈ range : ξAʲ ∈ K}`.
///
/// For a bounded box union and an expansive or contractive `A` the scan is
/// widened on each side until 16 consecutive powers leave the annulus
/// containing `K`.
pub fn dilation_count(k: &RegionSet, a: &Matrix, xi: &[f64], range: (i64, i64)) -> Result<usize> {
    let mut count = 0;
    for j in range.0..=range.1 {
        if let Ok(m) = integer_power(a, j) {
            if k.contains(&m.apply(xi))? {
                count += 1;
            }
        }
    }
    let Some(bb) = k.as_boxes().and_then(boxes::bounding_box) else { return Ok(count) };
    let form = real_jordan_form(a, DEFAULT_TOL)?;
    let moduli: Vec<f64> = form.blocks.iter().map(|b| b.eigen.modulus()).collect();
    let expansive = moduli.iter().all(|m| *m > 1.0);
    let contractive = moduli.iter().all(|m| *m < 1.0);
    if !expansive && !contractive {
        return Ok(count);
    }
    let r_max = (0..bb.dim()).map(|i| bb.lo[i].abs().max(bb.hi[i].abs()).powi(2)).sum::<f64>().sqrt();
    let r_min = (0..bb.dim())
        .map(|i| if bb.lo[i] <= 0.0 && bb.hi[i] >= 0.0 { 0.0 } else { bb.lo[i].abs().min(bb.hi[i].abs()).powi(2) })
        .sum::<f64>()
        .sqrt();
    // Growing side: beyond r_max; shrinking side: below r_min.
    let sides: [(i64, i64, bool); 2] = if expansive {
        [(range.1 + 1, 1, true), (range.0 - 1, -1, false)]
    } else {
        [(range.0 - 1, -1, true), (range.1 + 1, 1, false)]
    };
    for (start, step, growing) in sides {
        if !growing && r_min == 0.0 {
            continue;
        }
        let mut outside = 0;
        let mut j = start;
        while outside < 16 && (j - start).abs() < 2000 {
            let Ok(m) = integer_power(a, j) else { break };
            let p = m.apply(xi);
            let r = norm2(&p);
            if !r.is_finite() || r == 0.0 {
                break;
            }
            if k.contains(&p)? {
                count += 1;
            }
            let out = if growing { r > r_max } else { r < r_min };
            outside = if out { outside + 1 } else { 0 };
            j += step;
        }
    }
    Ok(count)
}

/// Sampled check of both tiling equations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiwaveletReport {
    pub order: Order,
    pub radius: f64,
    pub translation: TilingReport,
    pub dilation: TilingReport,
    pub pass: bool,
}

/// PASS iff translation counts at uniform samples of `Y` equal `L` (or are
/// at least `min_infinite` for order ∞) and dilation counts at Gaussian
/// samples equal 1.
#[allow(clippy::too_many_arguments)]
pub fn is_multiwavelet_set(
    k: &RegionSet,
    a: &Matrix,
    lattice: &Lattice,
    order: Order,
    samples: usize,
    seed: u64,
    radius: f64,
    min_infinite: usize,
) -> Result<MultiwaveletReport> {
    let n = lattice.dim();
    if a.dim() != n || k.dim().is_some_and(|d| d != n) {
        return Err(XsectError::InvalidInput("region, matrix and lattice dimensions differ".into()));
    }
    let translation = par_generate(seed, samples, |_, rng| {
        let xi = lattice.sample_y(rng);
        match translation_count(k, lattice, &xi, radius) {
            Ok(c) => {
                let failure = match order {
                    Order::Finite(l) if c.count != l => Some(format!("translation count {c}, expected {l}")),
                    Order::Infinite if c.count < min_infinite => {
                        Some(format!("translation count {c}, expected at least {min_infinite}"))
                    }
                    _ => None,
                };
                Outcome {
                    record: SampleRecord { point: xi, multiplicity: Some(c.count), parameter: None, value: None },
                    failure,
                }
            }
            Err(e) => failed(xi, e.to_string()),
        }
    });
    let dilation = par_generate(seed ^ 0x9e37_79b9_7f4a_7c15, samples, |_, rng| {
        let xi = gaussian(rng, n);
        match dilation_count(k, a, &xi, DEFAULT_J_RANGE) {
            Ok(c) => Outcome {
                record: SampleRecord { point: xi, multiplicity: Some(c), parameter: None, value: None },
                failure: (c != 1).then(|| format!("dilation count {c}")),
            },
            Err(e) => failed(xi, e.to_string()),
        }
    });
    let translation = assemble("translation_count", seed, [-radius, radius], translation, None);
    let dilation = assemble(
        "dilation_count",
        seed,
        [DEFAULT_J_RANGE.0 as f64, DEFAULT_J_RANGE.1 as f64],
        dilation,
        None,
    );
    let pass = translation.pass && dilation.pass;
    Ok(MultiwaveletReport { order, radius, translation, dilation, pass })
}

fn failed(point: Vec<f64>, msg: String) -> Outcome {
    Outcome { record: SampleRecord { point, multiplicity: Some(0), parameter: None, value: None }, failure: Some(msg) }
}

/// `Mᵗ = ∪_{γ∈Γ*} (M + γ)`.
pub fn saturate(m: &RegionSet, lattice: &Lattice, radius: f64) -> RegionSet {
    RegionSet::Saturation { inner: Box::new(m.clone()), lattice: lattice.clone(), radius }
}

/// Checks the selector precondition (translation count ≥ 1) at a fixed
/// sample of `Y`, doubling a truncating radius up to three times.
fn selector_precondition(k: &RegionSet, lattice: &Lattice, radius: f64) -> Result<f64> {
    let pts = par_generate(0, PRECONDITION_SAMPLES, |_, rng| lattice.sample_y(rng));
    let mut r = radius;
    for attempt in 0..4 {
        let mut miss = None;
        let mut truncated = false;
        for p in &pts {
            let c = translation_count(k, lattice, p, r)?;
            truncated |= c.truncated;
            if c.count == 0 {
                miss = Some(p.clone());
                break;
            }
        }
        match miss {
            None => return Ok(r),
            Some(p) if !truncated || attempt == 3 => return Err(XsectError::SelectorMiss { point: p, radius: r }),
            Some(_) => r *= 2.0,
        }
    }
    unreachable!()
}

/// `U(K) = {ξ + γ* : ξ ∈ Y, γ* first in selector order with ξ + γ* ∈ K}`.
///
/// Exact box algebra when `K` is a box union and `Y` is a box; otherwise a
/// pointwise-evaluated region.
pub fn coset_selector_u(k: &RegionSet, lattice: &Lattice, radius: f64) -> Result<RegionSet> {
    let r = selector_precondition(k, lattice, radius)?;
    if let (Some(bx), Some(cell)) = (k.as_boxes(), lattice.box_cell()) {
        return RegionSet::boxes(selector_boxes(bx, lattice, &cell));
    }
    Ok(partition_piece(k, lattice, 1, false, r))
}

fn partition_piece(k: &RegionSet, lattice: &Lattice, index: usize, infinite: bool, radius: f64) -> RegionSet {
    RegionSet::PartitionPiece(PartitionPiece {
        source: Box::new(k.clone()),
        lattice: lattice.clone(),
        index,
        infinite,
        radius,
    })
}

/// Exact `U(K)` for a box union over a box cell `Y = [0, d)`.
fn selector_boxes(k: &[HalfOpenBox], lattice: &Lattice, cell: &[f64]) -> Vec<HalfOpenBox> {
    let Some(bb) = boxes::bounding_box(k) else { return Vec::new() };
    let y = HalfOpenBox { lo: vec![0.0; cell.len()], hi: cell.to_vec() };
    let ranges: Vec<(i64, i64)> = (0..cell.len())
        .map(|i| ((bb.lo[i] / cell[i]).floor() as i64 - 1, (bb.hi[i] / cell[i]).ceil() as i64))
        .collect();
    let mut cands = Vec::new();
    let mut m: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    'enumerate: loop {
        cands.push(DualPoint { coords: m.clone(), point: lattice.dual_point(&m) });
        for i in 0..m.len() {
            if m[i] < ranges[i].1 {
                m[i] += 1;
                continue 'enumerate;
            }
            m[i] = ranges[i].0;
        }
        break;
    }
    sort_selector(&mut cands);
    let full = y.volume();
    let mut covered: Vec<HalfOpenBox> = Vec::new();
    let mut out = Vec::new();
    for g in cands {
        let neg: Vec<f64> = g.point.iter().map(|v| -v).collect();
        let shifted: Vec<HalfOpenBox> = k.iter().map(|b| b.translate(&neg)).collect();
        let piece = boxes::difference(&boxes::intersection(&shifted, std::slice::from_ref(&y)), &covered);
        if boxes::volume(&piece) > 0.0 {
            out.extend(piece.iter().map(|b| b.translate(&g.point)));
            covered = boxes::union(&covered, &piece);
            if boxes::volume(&covered) >= full {
                break;
            }
        }
    }
    boxes::simplify(out)
}

/// Splits `K` into pieces of translation count 1.
///
/// Finite order `L`: `K_i = U(L_{i−1})`, `L_i = L_{i−1} ∖ K_i` for `i ≤ L`.
/// Order ∞: `K_i = (V_i ∩ L_{i−1}) ∪ (U(L_{i−1}) ∖ (V_i ∩ L_{i−1})ᵗ)` with
/// `V_i = Y + γ_i` in selector order; the first `pieces` are returned.
pub fn partition_multiwavelet_set(
    k: &RegionSet,
    lattice: &Lattice,
    order: Order,
    pieces: usize,
    radius: f64,
) -> Result<Vec<RegionSet>> {
    match order {
        Order::Finite(l) => {
            if let (Some(bx), Some(cell)) = (k.as_boxes(), lattice.box_cell()) {
                let mut rest = bx.to_vec();
                let mut out = Vec::with_capacity(l);
                for _ in 0..l {
                    let residual = RegionSet::boxes(rest.clone())?;
                    selector_precondition(&residual, lattice, radius)?;
                    let u = selector_boxes(&rest, lattice, &cell);
                    rest = boxes::simplify(boxes::difference(&rest, &u));
                    out.push(RegionSet::boxes(u)?);
                }
                Ok(out)
            } else {
                let r = selector_precondition(k, lattice, radius)?;
                Ok((1..=l).map(|i| partition_piece(k, lattice, i, false, r)).collect())
            }
        }
        Order::Infinite => {
            let r = selector_precondition(k, lattice, radius)?;
            Ok((1..=pieces).map(|i| partition_piece(k, lattice, i, true, r)).collect())
        }
    }
}

/// Sampled check of a partition of `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub order: Order,
    /// Translation count of each piece (expected 1).
    pub pieces: Vec<TilingReport>,
    /// Every translate `ξ + γ ∈ K` lies in exactly one piece (at most one
    /// for order ∞, where only a prefix of pieces is built), and every
    /// piece lies inside `K`.
    pub cover: TilingReport,
    pub pass: bool,
}

/// Checks a partition produced by [`partition_multiwavelet_set`] at uniform
/// samples of `Y`.
pub fn check_partition(
    k: &RegionSet,
    pieces: &[RegionSet],
    lattice: &Lattice,
    order: Order,
    samples: usize,
    seed: u64,
    radius: f64,
) -> Result<PartitionReport> {
    let per_piece: Vec<TilingReport> = pieces
        .iter()
        .map(|p| {
            let outcomes = par_generate(seed, samples, |_, rng| {
                let xi = lattice.sample_y(rng);
                match translation_count(p, lattice, &xi, radius) {
                    Ok(c) => Outcome {
                        record: SampleRecord { point: xi, multiplicity: Some(c.count), parameter: None, value: None },
                        failure: (c.count != 1).then(|| format!("translation count {c}, expected 1")),
                    },
                    Err(e) => failed(xi, e.to_string()),
                }
            });
            assemble("piece_translation_count", seed, [-radius, radius], outcomes, None)
        })
        .collect();
    let cover = par_generate(seed ^ 0x9e37_79b9_7f4a_7c15, samples, |_, rng| {
        let xi = lattice.sample_y(rng);
        let shifted = |g: &DualPoint| -> Vec<f64> { xi.iter().zip(&g.point).map(|(a, b)| a + b).collect() };
        let check = || -> Result<(usize, Option<String>)> {
            let (hits, _) = k.translation_hits(lattice, &xi, radius)?;
            for g in &hits {
                let p = shifted(g);
                let mut m = 0;
                for q in pieces {
                    m += q.contains(&p)? as usize;
                }
                let bad = match order {
                    Order::Finite(_) => m != 1,
                    Order::Infinite => m > 1,
                };
                if bad {
                    return Ok((hits.len(), Some(format!("{p:?} lies in {m} pieces"))));
                }
            }
            for q in pieces {
                for g in q.translation_hits(lattice, &xi, radius)?.0 {
                    let p = shifted(&g);
                    if !k.contains(&p)? {
                        return Ok((hits.len(), Some(format!("{p:?} lies in a piece but not in the region"))));
                    }
                }
            }
            Ok((hits.len(), None))
        };
        match check() {
            Ok((count, failure)) => Outcome {
                record: SampleRecord { point: xi, multiplicity: Some(count), parameter: None, value: None },
                failure,
            },
            Err(e) => failed(xi, e.to_string()),
        }
    });
    let cover = assemble("partition_cover", seed, [-radius, radius], cover, None);
    let pass = cover.pass && per_piece.iter().all(|r| r.pass);
    Ok(PartitionReport { order, pieces: per_piece, cover, pass })
}

/// `dim_V(ξ) = #{k ∈ ℤⁿ : ξ + k ∈ W}`.
pub fn dimension_function(w: &RegionSet, xi: &[f64], radius: f64) -> Result<TranslationCount> {
    translation_count(w, &Lattice::integer(xi.len()), xi, radius)
}

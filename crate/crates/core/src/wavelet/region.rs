//! Region sets: finite unions of half-open boxes and the analytic families
//! (shifted section pieces, cones, saturations, partition pieces), each
//! with pointwise membership and a lattice-local enumerator.

use serde::{Deserialize, Serialize};

use super::boxes::{bounding_box, pairwise_disjoint, HalfOpenBox};
use super::lattice::{sort_selector, DualPoint, Lattice};
use crate::error::{Result, XsectError};
use crate::linalg::norm2;
use crate::sections::CrossSection;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateCheck {
    /// All vertices of the closed translate lie in a convex part of the piece.
    Vertices,
    /// Vertices and a regular grid of the closed translate lie in the piece.
    Sampled,
}

/// Slab `S_i A^{k_i}` of an order-∞ construction with its certificate
/// `Y + γ_i ⊂ S_i A^{k_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedPiece {
    pub index: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub power: i64,
    /// Integer coordinates of `γ_i` in the dual basis.
    pub translate: Vec<i64>,
    pub point: Vec<f64>,
    pub check: CertificateCheck,
}

/// `K = ∪_i S_i A^{k_i}` where `S_i = {γ ∈ S : r(γ) ∈ [1 − 2^{1−i}, 1 − 2^{−i})}`
/// slices a discrete section `S` by its radial coordinate.
///
/// Slabs past the certified ones use `k_i = k_M + direction·tail_step·(i − M)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShiftedPieces {
    pub section: CrossSection,
    pub pieces: Vec<CertifiedPiece>,
    pub direction: i64,
    pub tail_step: i64,
}

/// Radial bounds of slab `i ≥ 1`.
pub fn slab_bounds(i: usize) -> (f64, f64) {
    (1.0 - 0.5f64.powi(i as i32 - 1), 1.0 - 0.5f64.powi(i as i32))
}

/// Index of the slab containing `r ∈ [0, 1)`.
pub fn slab_index(r: f64) -> usize {
    if !(0.0..1.0).contains(&r) {
        return 0;
    }
    let mut i = ((-(1.0 - r).log2()).floor() as i64 + 1).max(1) as usize;
    // Guard the formula against rounding at slab boundaries.
    loop {
        let (lo, hi) = slab_bounds(i);
        if r < lo && i > 1 {
            i -= 1;
        } else if r >= hi {
            i += 1;
        } else {
            return i;
        }
    }
}

impl ShiftedPieces {
    pub fn power_of(&self, i: usize) -> i64 {
        match self.pieces.get(i.wrapping_sub(1)) {
            Some(p) => p.power,
            None => {
                let last = self.pieces.last().map_or(0, |p| p.power);
                last + self.direction * self.tail_step * (i - self.pieces.len()) as i64
            }
        }
    }

    /// Slab index and power of the piece containing `γ`.
    pub fn locate(&self, gamma: &[f64]) -> Result<(usize, i64)> {
        let sol = self.section.solve_orbit(gamma)?;
        let k = sol.parameter.power().expect("discrete section");
        let r = self.section.radial(&sol.representative)?;
        Ok((slab_index(r), k))
    }

    pub fn contains(&self, gamma: &[f64]) -> Result<bool> {
        let (i, k) = self.locate(gamma)?;
        Ok(i >= 1 && k == self.power_of(i))
    }
}

/// Piece `K_index` of the recursive partition of `source`, evaluated
/// fibrewise over the fundamental domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionPiece {
    pub source: Box<RegionSet>,
    pub lattice: Lattice,
    pub index: usize,
    /// Order ∞ uses the translates `V_i = Y + γ_i` in selector order.
    pub infinite: bool,
    pub radius: f64,
}

/// Fibre state of the partition recursion at one `y ∈ Y`: the residual
/// `L_i` as the selector-ordered translates `γ` with `y + γ ∈ L_i`, and the
/// translates emitted so far.
#[derive(Clone, Debug, Default)]
pub struct PartitionState {
    pub residual: Vec<DualPoint>,
    pub emitted: Vec<Option<Vec<i64>>>,
}

impl PartitionState {
    /// One recursion step. `v` is `γ_i` of `V_i = Y + γ_i` (order ∞) or
    /// `None` when the partition `{V_i}` is omitted (finite order).
    pub fn step(&mut self, v: Option<&[i64]>) {
        let pos = v
            .and_then(|g| self.residual.iter().position(|p| p.coords == g))
            .or(if self.residual.is_empty() { None } else { Some(0) });
        self.emitted.push(pos.map(|i| self.residual.remove(i).coords));
    }
}

impl PartitionPiece {
    /// Runs the recursion on the fibre over `y ∈ Y` up to this piece.
    pub fn state(&self, y: &[f64]) -> Result<PartitionState> {
        let (mut hits, _) = self.source.translation_hits(&self.lattice, y, self.radius)?;
        sort_selector(&mut hits);
        let mut st = PartitionState { residual: hits, emitted: Vec::new() };
        let vs = if self.infinite { self.lattice.selector_prefix(self.index) } else { Vec::new() };
        for i in 0..self.index {
            st.step(vs.get(i).map(|p| p.coords.as_slice()));
        }
        Ok(st)
    }

    /// The translate `γ` with `y + γ ∈ K_index`, if any.
    pub fn pick(&self, y: &[f64]) -> Result<Option<Vec<i64>>> {
        Ok(self.state(y)?.emitted.pop().flatten())
    }

    pub fn contains(&self, xi: &[f64]) -> Result<bool> {
        let (y, m) = self.lattice.reduce(xi);
        Ok(self.pick(&y)? == Some(m))
    }
}

/// A measurable subset of ℝⁿ with pointwise membership.
///
/// Wire format: `{"kind": "boxes", "boxes": [{"lo": [...], "hi": [...]}]}`
/// or one of the analytic descriptors.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSet {
    Boxes { boxes: Vec<HalfOpenBox> },
    ShiftedPieces(ShiftedPieces),
    Cone { section: CrossSection, certificates: Vec<Vec<f64>> },
    Saturation { inner: Box<RegionSet>, lattice: Lattice, radius: f64 },
    PartitionPiece(PartitionPiece),
}

impl RegionSet {
    pub fn boxes(boxes: Vec<HalfOpenBox>) -> Result<Self> {
        if !pairwise_disjoint(&boxes) {
            return Err(XsectError::InvalidInput("boxes of a region must be pairwise disjoint".into()));
        }
        if let Some(b) = boxes.first() {
            if boxes.iter().any(|x| x.dim() != b.dim()) {
                return Err(XsectError::InvalidInput("boxes of mixed dimension".into()));
            }
        }
        Ok(RegionSet::Boxes { boxes })
    }

    /// Re-checks the invariants of a deserialised box union.
    pub fn validate(&self) -> Result<()> {
        if let RegionSet::Boxes { boxes } = self {
            for b in boxes {
                HalfOpenBox::new(b.lo.clone(), b.hi.clone())?;
            }
            RegionSet::boxes(boxes.clone())?;
        }
        Ok(())
    }

    /// Union of 1D intervals `[a, b)`.
    pub fn intervals(iv: &[(f64, f64)]) -> Result<Self> {
        RegionSet::boxes(iv.iter().map(|&(a, b)| HalfOpenBox::interval(a, b)).collect())
    }

    pub fn empty() -> Self {
        RegionSet::Boxes { boxes: Vec::new() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RegionSet::Boxes { .. } => "boxes",
            RegionSet::ShiftedPieces(_) => "shifted_pieces",
            RegionSet::Cone { .. } => "cone",
            RegionSet::Saturation { .. } => "saturation",
            RegionSet::PartitionPiece(_) => "partition_piece",
        }
    }

    /// Ambient dimension; `None` for an empty box union.
    pub fn dim(&self) -> Option<usize> {
        match self {
            RegionSet::Boxes { boxes } => boxes.first().map(HalfOpenBox::dim),
            RegionSet::ShiftedPieces(s) => Some(s.section.dim()),
            RegionSet::Cone { section, .. } => Some(section.dim()),
            RegionSet::Saturation { lattice, .. } => Some(lattice.dim()),
            RegionSet::PartitionPiece(p) => Some(p.lattice.dim()),
        }
    }

    pub fn as_boxes(&self) -> Option<&[HalfOpenBox]> {
        match self {
            RegionSet::Boxes { boxes } => Some(boxes),
            _ => None,
        }
    }

    /// Membership; points of a section's null set are not members.
    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        let r = match self {
            RegionSet::Boxes { boxes } => Ok(boxes.iter().any(|b| b.contains(p))),
            RegionSet::ShiftedPieces(s) => s.contains(p),
            RegionSet::Cone { section, .. } => section.contains(p),
            RegionSet::Saturation { inner, lattice, radius } => {
                Ok(!inner.translation_hits(lattice, p, *radius)?.0.is_empty())
            }
            RegionSet::PartitionPiece(piece) => piece.contains(p),
        };
        match r {
            Err(XsectError::ExceptionalPoint { .. }) => Ok(false),
            other => other,
        }
    }

    /// The dual points `γ` with `ξ + γ` in the region, and whether the list
    /// may be incomplete. Box unions and partition pieces over the same
    /// lattice are enumerated exactly; other regions within `‖ξ + γ‖ ≤ radius`.
    pub fn translation_hits(&self, lattice: &Lattice, xi: &[f64], radius: f64) -> Result<(Vec<DualPoint>, bool)> {
        match self {
            RegionSet::Boxes { boxes } => {
                let Some(bb) = bounding_box(boxes) else { return Ok((Vec::new(), false)) };
                let c: Vec<f64> = bb.lo.iter().zip(&bb.hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let half: Vec<f64> = bb.lo.iter().zip(&bb.hi).map(|(a, b)| 0.5 * (b - a)).collect();
                let r = norm2(&half) * (1.0 + 1e-12) + 1e-12;
                let center: Vec<f64> = c.iter().zip(xi).map(|(a, b)| a - b).collect();
                let mut hits = Vec::new();
                for g in lattice.points_in_ball(&center, r) {
                    let p: Vec<f64> = xi.iter().zip(&g.point).map(|(a, b)| a + b).collect();
                    if boxes.iter().any(|b| b.contains(&p)) {
                        hits.push(g);
                    }
                }
                Ok((hits, false))
            }
            RegionSet::PartitionPiece(piece) if piece.lattice == *lattice => {
                let (y, m) = lattice.reduce(xi);
                let hits = piece
                    .pick(&y)?
                    .map(|g| {
                        let coords: Vec<i64> = g.iter().zip(&m).map(|(a, b)| a - b).collect();
                        let point = lattice.dual_point(&coords);
                        DualPoint { coords, point }
                    })
                    .into_iter()
                    .collect();
                Ok((hits, false))
            }
            _ => {
                let center: Vec<f64> = xi.iter().map(|v| -v).collect();
                let mut hits = Vec::new();
                for g in lattice.points_in_ball(&center, radius) {
                    let p: Vec<f64> = xi.iter().zip(&g.point).map(|(a, b)| a + b).collect();
                    if self.contains(&p)? {
                        hits.push(g);
                    }
                }
                Ok((hits, true))
            }
        }
    }
}

//! Full-rank lattices `Γ = {mB : m ∈ ℤⁿ}`, their duals and the selector
//! order on dual points.

use std::cmp::{Ordering, Reverse};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, XsectError};
use crate::linalg::{norm2, Matrix};

/// A lattice given by the rows of `basis`, together with its dual
/// `Γ* = {mD : m ∈ ℤⁿ}`, `D = (B⁻¹)ᵀ`, so that `⟨γ, γ*⟩ ∈ ℤ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeJson", into = "LatticeJson")]
pub struct Lattice {
    pub basis: Matrix,
    pub dual: Matrix,
    dual_inverse: Matrix,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LatticeJson {
    Basis { basis: Matrix },
    Plain(Matrix),
    Rows(Vec<Vec<f64>>),
}

impl TryFrom<LatticeJson> for Lattice {
    type Error = XsectError;
    fn try_from(j: LatticeJson) -> Result<Self> {
        match j {
            LatticeJson::Basis { basis } | LatticeJson::Plain(basis) => Lattice::new(basis),
            LatticeJson::Rows(rows) => Lattice::new(Matrix::from_rows(&rows)?),
        }
    }
}

impl From<Lattice> for LatticeJson {
    fn from(l: Lattice) -> Self {
        LatticeJson::Basis { basis: l.basis }
    }
}

/// One dual lattice point with its integer coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPoint {
    pub coords: Vec<i64>,
    pub point: Vec<f64>,
}

impl Lattice {
    pub fn new(basis: Matrix) -> Result<Self> {
        let inv = basis.inverse()?;
        let dual = inv.transpose();
        let dual_inverse = basis.transpose();
        Ok(Lattice { basis, dual, dual_inverse })
    }

    /// `ℤⁿ`, which is its own dual.
    pub fn integer(n: usize) -> Self {
        Lattice::new(Matrix::identity(n)).expect("identity is invertible")
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `mD`.
    pub fn dual_point(&self, m: &[i64]) -> Vec<f64> {
        let v: Vec<f64> = m.iter().map(|&x| x as f64).collect();
        self.dual.apply(&v)
    }

    /// Coordinates `u` of `ξ = uD` in the dual basis.
    pub fn dual_coords(&self, xi: &[f64]) -> Vec<f64> {
        self.dual_inverse.apply(xi)
    }

    /// Splits `ξ = y + mD` with `y` in the fundamental domain
    /// `Y = {uD : u ∈ [0, 1)ⁿ}`.
    pub fn reduce(&self, xi: &[f64]) -> (Vec<f64>, Vec<i64>) {
        let c = self.dual_inverse.apply(xi);
        let m: Vec<i64> = c.iter().map(|v| v.floor() as i64).collect();
        let y: Vec<f64> = xi.iter().zip(self.dual_point(&m)).map(|(a, b)| a - b).collect();
        (y, m)
    }

    /// Whether `ξ ∈ Y`.
    pub fn in_fundamental_domain(&self, xi: &[f64]) -> bool {
        self.dual_inverse.apply(xi).iter().all(|u| (0.0..1.0).contains(u))
    }

    /// A uniform point of `Y`.
    pub fn sample_y<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let u: Vec<f64> = (0..self.dim()).map(|_| rng.random::<f64>()).collect();
        self.dual.apply(&u)
    }

    /// Vertices of the closure of `Y`.
    pub fn y_vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                let u: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
                self.dual.apply(&u)
            })
            .collect()
    }

    /// Points `uD` for `u` on a regular grid of `[0, 1]ⁿ` with `g` points per axis.
    pub fn y_grid(&self, g: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let g = g.max(2);
        (0..g.pow(n as u32))
            .map(|mut idx| {
                let mut u = vec![0.0; n];
                for v in u.iter_mut() {
                    *v = (idx % g) as f64 / (g - 1) as f64;
                    idx /= g;
                }
                self.dual.apply(&u)
            })
            .collect()
    }

    pub fn y_centroid(&self) -> Vec<f64> {
        self.dual.apply(&vec![0.5; self.dim()])
    }

    /// Euclidean diameter of `Y`.
    pub fn y_diameter(&self) -> f64 {
        let v = self.y_vertices();
        let mut d = 0.0f64;
        for a in &v {
            for b in &v {
                d = d.max(norm2(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()));
            }
        }
        d
    }

    /// `Y` is an axis-aligned box `[0, d₁) × … × [0, dₙ)` when the dual basis is
    /// diagonal with positive entries; returns `d`.
    pub fn box_cell(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.dual[(i, j)] != 0.0 {
                    return None;
                }
            }
            if self.dual[(i, i)] <= 0.0 {
                return None;
            }
        }
        Some((0..n).map(|i| self.dual[(i, i)]).collect())
    }

    /// Dual points `γ` with `‖γ − center‖ ≤ radius`, unordered.
    pub fn points_in_ball(&self, center: &[f64], radius: f64) -> Vec<DualPoint> {
        let n = self.dim();
        let c = self.dual_inverse.apply(center);
        // |mᵢ − cᵢ| ≤ radius·‖column i of D⁻¹‖.
        let bounds: Vec<(i64, i64)> = (0..n)
            .map(|i| {
                let col = (0..n).map(|j| self.dual_inverse[(j, i)].powi(2)).sum::<f64>().sqrt();
                ((c[i] - radius * col).floor() as i64, (c[i] + radius * col).ceil() as i64)
            })
            .collect();
        let mut out = Vec::new();
        let mut m: Vec<i64> = bounds.iter().map(|b| b.0).collect();
        loop {
            let p = self.dual_point(&m);
            let d: f64 = p.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if d <= radius {
                out.push(DualPoint { coords: m.clone(), point: p });
            }
            let mut i = 0;
            loop {
                if i == n {
                    return out;
                }
                if m[i] < bounds[i].1 {
                    m[i] += 1;
                    break;
                }
                m[i] = bounds[i].0;
                i += 1;
            }
        }
    }

    /// Number of integer points a ball enumeration of `radius` would visit.
    pub fn ball_cost(&self, radius: f64) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let col = (0..n).map(|j| self.dual_inverse[(j, i)].powi(2)).sum::<f64>().sqrt();
                2.0 * radius * col + 2.0
            })
            .product()
    }

    /// The first `count` dual points in selector order.
    pub fn selector_prefix(&self, count: usize) -> Vec<DualPoint> {
        let mut r = self.y_diameter().max(1.0);
        loop {
            let mut pts = self.points_in_ball(&vec![0.0; self.dim()], r);
            if pts.len() >= count {
                sort_selector(&mut pts);
                pts.truncate(count);
                return pts;
            }
            r *= 2.0;
        }
    }
}

/// Sort key of the selector order: increasing Euclidean norm, ties broken
/// by decreasing lexicographic order of the integer coordinates (so ℤ reads
/// `0, 1, −1, 2, −2, …`).
pub fn selector_key(p: &DualPoint) -> (i128, Reverse<Vec<i64>>) {
    let n2: f64 = p.point.iter().map(|v| v * v).sum();
    ((n2 * 1e6).round() as i128, Reverse(p.coords.clone()))
}

pub fn selector_cmp(a: &DualPoint, b: &DualPoint) -> Ordering {
    selector_key(a).cmp(&selector_key(b))
}

pub fn sort_selector(pts: &mut [DualPoint]) {
    pts.sort_by_cached_key(selector_key);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::par_generate;

    #[test]
    fn dual_pairs_integrally() {
        let l = Lattice::new(Matrix::new(&[[2.0, 1.0], [0.0, 1.0]])).unwrap();
        for g in [[1, 0], [0, 1], [3, -2]] {
            let gamma = l.basis.apply(&[g[0] as f64, g[1] as f64]);
            for m in [[1, 0], [0, 1], [-2, 5]] {
                let d = l.dual_point(&m);
                let p: f64 = gamma.iter().zip(&d).map(|(a, b)| a * b).sum();
                assert!((p - p.round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn y_tiles_under_dual_translates() {
        let l = Lattice::new(Matrix::new(&[[1.0, 0.5], [0.0, 2.0]])).unwrap();
        let ok = par_generate(3, 2000, |_, rng| {
            let xi: Vec<f64> = (0..2).map(|_| rng.random_range(-20.0..20.0)).collect();
            let (y, m) = l.reduce(&xi);
            let back: Vec<f64> = y.iter().zip(l.dual_point(&m)).map(|(a, b)| a + b).collect();
            // Exactly one translate of Y contains ξ: the reduced one.
            let hits = l
                .points_in_ball(&xi, 2.0 * l.y_diameter())
                .into_iter()
                .filter(|g| l.in_fundamental_domain(&xi.iter().zip(&g.point).map(|(a, b)| a - b).collect::<Vec<_>>()))
                .count();
            l.in_fundamental_domain(&y) && (back[0] - xi[0]).abs() < 1e-9 && hits == 1
        });
        assert!(ok.into_iter().all(|b| b));
    }

    #[test]
    fn selector_order_on_integers() {
        let l = Lattice::integer(1);
        let order: Vec<i64> = l.selector_prefix(5).into_iter().map(|p| p.coords[0]).collect();
        assert_eq!(order, vec![0, 1, -1, 2, -2]);
        let l2 = Lattice::integer(2);
        let first: Vec<Vec<i64>> = l2.selector_prefix(5).into_iter().map(|p| p.coords).collect();
        assert_eq!(first, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![0, -1], vec![-1, 0]]);
    }

    #[test]
    fn box_cells() {
        assert_eq!(Lattice::integer(2).box_cell(), Some(vec![1.0, 1.0]));
        let l = Lattice::new(Matrix::diag(&[0.5, 2.0])).unwrap();
        assert_eq!(l.box_cell(), Some(vec![2.0, 0.5]));
        assert!(Lattice::new(Matrix::new(&[[1.0, 1.0], [0.0, 1.0]])).unwrap().box_cell().is_none());
    }

    #[test]
    fn json_forms() {
        let l: Lattice = serde_json::from_str("[[2.0]]").unwrap();
        assert_eq!(l.dual_point(&[1]), vec![0.5]);
        let l2: Lattice = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        assert_eq!(l, l2);
    }
}

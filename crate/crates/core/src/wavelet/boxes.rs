//! Half-open boxes `[lo, hi)` and exact algebra on finite disjoint unions.

use serde::{Deserialize, Serialize};

use crate::error::{Result, XsectError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfOpenBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl HalfOpenBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(XsectError::InvalidInput("box bounds must have equal, nonzero length".into()));
        }
        if lo.iter().chain(&hi).any(|v| v.is_nan()) {
            return Err(XsectError::InvalidInput("NaN box bound".into()));
        }
        Ok(HalfOpenBox { lo, hi })
    }

    /// The 1D interval `[a, b)`.
    pub fn interval(a: f64, b: f64) -> Self {
        HalfOpenBox { lo: vec![a], hi: vec![b] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a >= b)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *a <= *x && *x < *b)
    }

    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
        }
    }

    pub fn translate(&self, v: &[f64]) -> Self {
        HalfOpenBox {
            lo: self.lo.iter().zip(v).map(|(a, d)| a + d).collect(),
            hi: self.hi.iter().zip(v).map(|(a, d)| a + d).collect(),
        }
    }

    pub fn intersect(&self, o: &HalfOpenBox) -> Option<HalfOpenBox> {
        let b = HalfOpenBox {
            lo: self.lo.iter().zip(&o.lo).map(|(a, b)| a.max(*b)).collect(),
            hi: self.hi.iter().zip(&o.hi).map(|(a, b)| a.min(*b)).collect(),
        };
        (!b.is_empty()).then_some(b)
    }

    /// `self ∖ o` as disjoint boxes.
    pub fn subtract(&self, o: &HalfOpenBox) -> Vec<HalfOpenBox> {
        let Some(cut) = self.intersect(o) else { return vec![self.clone()] };
        let mut out = Vec::new();
        let mut rest = self.clone();
        for d in 0..self.dim() {
            if rest.lo[d] < cut.lo[d] {
                let mut below = rest.clone();
                below.hi[d] = cut.lo[d];
                out.push(below);
            }
            if cut.hi[d] < rest.hi[d] {
                let mut above = rest.clone();
                above.lo[d] = cut.hi[d];
                out.push(above);
            }
            rest.lo[d] = cut.lo[d];
            rest.hi[d] = cut.hi[d];
        }
        out
    }

    /// Merges with `o` if the union is itself a box.
    fn merge(&self, o: &HalfOpenBox) -> Option<HalfOpenBox> {
        let n = self.dim();
        let mut differ = None;
        for d in 0..n {
            if self.lo[d] != o.lo[d] || self.hi[d] != o.hi[d] {
                if differ.is_some() {
                    return None;
                }
                differ = Some(d);
            }
        }
        let Some(d) = differ else { return Some(self.clone()) };
        if self.hi[d] == o.lo[d] || o.hi[d] == self.lo[d] {
            let mut m = self.clone();
            m.lo[d] = self.lo[d].min(o.lo[d]);
            m.hi[d] = self.hi[d].max(o.hi[d]);
            Some(m)
        } else {
            None
        }
    }
}

/// `a ∖ b` for disjoint unions.
pub fn difference(a: &[HalfOpenBox], b: &[HalfOpenBox]) -> Vec<HalfOpenBox> {
    let mut cur: Vec<HalfOpenBox> = a.to_vec();
    for cut in b {
        cur = cur.iter().flat_map(|x| x.subtract(cut)).collect();
    }
    cur
}

/// `a ∩ b` for disjoint unions.
pub fn intersection(a: &[HalfOpenBox], b: &[HalfOpenBox]) -> Vec<HalfOpenBox> {
    a.iter().flat_map(|x| b.iter().filter_map(move |y| x.intersect(y))).collect()
}

/// `a ∪ b` as a disjoint union.
pub fn union(a: &[HalfOpenBox], b: &[HalfOpenBox]) -> Vec<HalfOpenBox> {
    let mut out = a.to_vec();
    out.extend(difference(b, a));
    simplify(out)
}

/// Drops empty boxes, merges face-adjacent pairs and sorts by lower corner.
pub fn simplify(mut boxes: Vec<HalfOpenBox>) -> Vec<HalfOpenBox> {
    boxes.retain(|b| !b.is_empty());
    'outer: loop {
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if let Some(m) = boxes[i].merge(&boxes[j]) {
                    boxes[i] = m;
                    boxes.swap_remove(j);
                    continue 'outer;
                }
            }
        }
        break;
    }
    boxes.sort_by(|a, b| {
        a.lo.iter().zip(&b.lo).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    boxes
}

pub fn volume(boxes: &[HalfOpenBox]) -> f64 {
    boxes.iter().map(HalfOpenBox::volume).sum()
}

/// Set equality of two disjoint unions.
pub fn same_set(a: &[HalfOpenBox], b: &[HalfOpenBox]) -> bool {
    volume(&difference(a, b)) == 0.0 && volume(&difference(b, a)) == 0.0
}

/// Whether the boxes are pairwise disjoint.
pub fn pairwise_disjoint(boxes: &[HalfOpenBox]) -> bool {
    (0..boxes.len()).all(|i| (i + 1..boxes.len()).all(|j| boxes[i].intersect(&boxes[j]).is_none()))
}

/// Smallest box containing all of `boxes`, if any is nonempty.
pub fn bounding_box(boxes: &[HalfOpenBox]) -> Option<HalfOpenBox> {
    let mut it = boxes.iter().filter(|b| !b.is_empty());
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, b| HalfOpenBox {
        lo: acc.lo.iter().zip(&b.lo).map(|(x, y)| x.min(*y)).collect(),
        hi: acc.hi.iter().zip(&b.hi).map(|(x, y)| x.max(*y)).collect(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b2(lo: [f64; 2], hi: [f64; 2]) -> HalfOpenBox {
        HalfOpenBox::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn subtract_hole() {
        let outer = b2([0.0, 0.0], [3.0, 3.0]);
        let hole = b2([1.0, 1.0], [2.0, 2.0]);
        let parts = outer.subtract(&hole);
        assert!(pairwise_disjoint(&parts));
        assert_eq!(volume(&parts), 8.0);
        assert!(!parts.iter().any(|p| p.contains(&[1.5, 1.5])));
        assert!(parts.iter().any(|p| p.contains(&[0.5, 2.5])));
    }

    #[test]
    fn interval_algebra() {
        let k = vec![HalfOpenBox::interval(-2.0, -1.0), HalfOpenBox::interval(1.0, 2.0)];
        let cut = vec![HalfOpenBox::interval(1.5, 5.0)];
        let d = difference(&k, &cut);
        assert!(same_set(&d, &[HalfOpenBox::interval(-2.0, -1.0), HalfOpenBox::interval(1.0, 1.5)]));
        assert_eq!(volume(&intersection(&k, &cut)), 0.5);
        let u = union(&d, &cut);
        assert!(same_set(&u, &[HalfOpenBox::interval(-2.0, -1.0), HalfOpenBox::interval(1.0, 5.0)]));
        assert_eq!(u.len(), 2);
    }

    #[test]
    fn bounds() {
        let bb = bounding_box(&[HalfOpenBox::interval(3.0, 4.0), HalfOpenBox::interval(-1.0, 0.0)]).unwrap();
        assert_eq!((bb.lo[0], bb.hi[0]), (-1.0, 4.0));
        assert!(bounding_box(&[]).is_none());
    }
}

//! Multi-wavelet sets of infinite order.
//!
//! With an eigenvalue of modulus ≠ 1 the discrete section `S` is sliced into
//! slabs `S_i` by its radial coordinate and each slab is dilated by the
//! first power `k_i` for which some `Y + γ_i` fits inside `S_i A^{k_i}`.
//! Otherwise (all moduli 1, nilpotent part) the cone section itself is
//! returned after certifying lattice translates of `Y` inside it.

use std::f64::consts::LN_2;

use super::lattice::{selector_cmp, sort_selector, DualPoint, Lattice};
use super::region::{slab_bounds, CertificateCheck, CertifiedPiece, RegionSet, ShiftedPieces};
use crate::classify::classify_discrete;
use crate::error::{Result, XsectError};
use crate::linalg::{norm2, Matrix};
use crate::sections::{build_discrete_section, CrossSection, SectionCase};

/// Certified slabs (case 1) or translates (case 2) by default.
pub const DEFAULT_PIECES: usize = 10;
/// Largest `|k|` tried per slab.
pub const MAX_POWER_SCAN: i64 = 64;
const NEIGHBOURS: i64 = 2;
const SAMPLE_GRID: usize = 6;
const MAX_BALL_POINTS: f64 = 4e6;

/// Builds an order-∞ multi-wavelet set for `(A, Γ)` with `pieces`
/// certified pieces. `n ≤ 3`.
pub fn build_order_infinity_set(a: &Matrix, lattice: &Lattice, pieces: usize, tol: f64) -> Result<RegionSet> {
    let n = a.dim();
    if lattice.dim() != n {
        return Err(XsectError::InvalidInput(format!("lattice has dimension {}, matrix {n}", lattice.dim())));
    }
    if n > 3 {
        return Err(XsectError::DimensionTooHigh { n, max: 3 });
    }
    if classify_discrete(a, tol)?.similar_to_unitary {
        return Err(XsectError::NoWavelet);
    }
    let s = match build_discrete_section(a, tol) {
        Err(XsectError::NoSection) => return Err(XsectError::NoWavelet),
        other => other?,
    };
    match s.case {
        SectionCase::DiscreteModulusNotOne | SectionCase::DiscreteComplexModulusNotOne => {
            shifted_pieces(s, lattice, pieces)
        }
        _ => cone(s, lattice, pieces),
    }
}

fn translated(points: &[Vec<f64>], g: &[f64]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.iter().zip(g).map(|(a, b)| a + b).collect()).collect()
}

/// Sign of the first witness-block coordinate, or `None` on the null set.
fn half(s: &CrossSection, p: &[f64]) -> Option<bool> {
    s.block_coords(p).ok().map(|b| b[0] > 0.0)
}

fn in_slab_piece(s: &CrossSection, i: usize, k: i64, p: &[f64]) -> bool {
    let Ok(sol) = s.solve_orbit(p) else { return false };
    if sol.parameter.power() != Some(k) {
        return false;
    }
    s.radial(&sol.representative).is_ok_and(|r| super::region::slab_index(r) == i)
}

fn shifted_pieces(s: CrossSection, lattice: &Lattice, count: usize) -> Result<RegionSet> {
    let convex = s.case == SectionCase::DiscreteModulusNotOne;
    let direction = if s.params.alpha > 0.0 { 1 } else { -1 };
    let tail_step = (LN_2 / s.params.alpha.abs()).ceil().max(1.0) as i64;
    let mut test_points = lattice.y_vertices();
    if !convex {
        test_points.extend(lattice.y_grid(SAMPLE_GRID));
    }
    let centroid = lattice.y_centroid();
    let signs: &[f64] = if convex { &[1.0, -1.0] } else { &[1.0] };
    let mut pieces: Vec<CertifiedPiece> = Vec::with_capacity(count);
    for i in 1..=count {
        let (r_lo, r_hi) = slab_bounds(i);
        let mid = 0.5 * (r_lo + r_hi);
        let mut found = None;
        let mut reach = 0.0f64;
        for j in 0..=MAX_POWER_SCAN {
            let k = direction * j;
            let mut best: Option<DualPoint> = None;
            for &sg in signs {
                let center = s.step(&s.slab_point(mid, sg)?, k)?;
                reach = reach.max(norm2(&center));
                let target: Vec<f64> = center.iter().zip(&centroid).map(|(a, b)| a - b).collect();
                let m0: Vec<i64> = lattice.dual_coords(&target).iter().map(|u| u.round() as i64).collect();
                for m in neighbourhood(&m0, NEIGHBOURS) {
                    let g = lattice.dual_point(&m);
                    let pts = translated(&test_points, &g);
                    let halves: Vec<Option<bool>> = pts.iter().map(|p| half(&s, p)).collect();
                    let same_half = halves.iter().all(|h| h.is_some() && *h == halves[0]);
                    if same_half && pts.iter().all(|p| in_slab_piece(&s, i, k, p)) {
                        let cand = DualPoint { coords: m, point: g };
                        if best.as_ref().is_none_or(|b| selector_cmp(&cand, b).is_lt()) {
                            best = Some(cand);
                        }
                    }
                }
            }
            if let Some(b) = best {
                found = Some((k, b));
                break;
            }
        }
        let Some((power, g)) = found else {
            return Err(XsectError::SearchExhausted { radius: reach, found: pieces.len() });
        };
        pieces.push(CertifiedPiece {
            index: i,
            r_lo,
            r_hi,
            power,
            translate: g.coords,
            point: g.point,
            check: if convex { CertificateCheck::Vertices } else { CertificateCheck::Sampled },
        });
    }
    Ok(RegionSet::ShiftedPieces(ShiftedPieces { section: s, pieces, direction, tail_step }))
}

fn neighbourhood(m0: &[i64], r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &c in m0 {
        out = out.into_iter().flat_map(|p| (c - r..=c + r).map(move |v| [p.clone(), vec![v]].concat())).collect();
    }
    out
}

/// Certifies `count` translates `Y + γ` inside the (convex halves of the)
/// cone section, breadth-first in selector order with doubling radius.
fn cone(s: CrossSection, lattice: &Lattice, count: usize) -> Result<RegionSet> {
    let verts = lattice.y_vertices();
    let fits = |g: &[f64]| {
        let pts = translated(&verts, g);
        let h = half(&s, &pts[0]);
        h.is_some() && pts.iter().all(|p| half(&s, p) == h && s.contains(p).unwrap_or(false))
    };
    let mut radius = 2.0 * lattice.y_diameter().max(1.0);
    loop {
        let mut pts = lattice.points_in_ball(&vec![0.0; s.dim()], radius);
        sort_selector(&mut pts);
        let certs: Vec<Vec<f64>> = pts.into_iter().filter(|g| fits(&g.point)).take(count).map(|g| g.point).collect();
        if certs.len() >= count {
            return Ok(RegionSet::Cone { section: s, certificates: certs });
        }
        if lattice.ball_cost(2.0 * radius) > MAX_BALL_POINTS {
            return Err(XsectError::SearchExhausted { radius, found: certs.len() });
        }
        radius *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_TOL;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn dyadic_line() {
        let k = build_order_infinity_set(&Matrix::scalar(2.0), &Lattice::integer(1), 5, DEFAULT_TOL).unwrap();
        let RegionSet::ShiftedPieces(sp) = &k else { panic!("expected shifted pieces") };
        for (i, p) in sp.pieces.iter().enumerate() {
            let i = i as i64 + 1;
            assert_eq!(p.power, i + 1);
            assert_eq!(p.translate, vec![(1 << (i + 2)) - 4]);
        }
        assert_eq!(sp.power_of(7), 8);
        for (x, inside) in [(4.0, true), (5.9, true), (6.0, false), (12.5, true), (-5.0, true), (-6.5, false), (1.5, false)] {
            assert_eq!(k.contains(&[x]).unwrap(), inside, "x = {x}");
        }
    }

    #[test]
    fn rotation_has_no_wavelet() {
        let r = Matrix::new(&[[FRAC_PI_2.cos(), FRAC_PI_2.sin()], [-FRAC_PI_2.sin(), FRAC_PI_2.cos()]]);
        assert_eq!(build_order_infinity_set(&r, &Lattice::integer(2), 3, DEFAULT_TOL).unwrap_err(), XsectError::NoWavelet);
    }

    #[test]
    fn shear_cone_certificates() {
        let a = Matrix::new(&[[1.0, 1.0], [0.0, 1.0]]);
        let k = build_order_infinity_set(&a, &Lattice::integer(2), 10, DEFAULT_TOL).unwrap();
        let RegionSet::Cone { section, certificates } = &k else { panic!("expected a cone") };
        assert_eq!(certificates.len(), 10);
        assert!(section.contains(&[1.0, 0.5]).unwrap() && !section.contains(&[1.0, -0.5]).unwrap());
    }

    #[test]
    fn spiral_pieces_are_certified() {
        let (c, s) = (0.6f64.cos() * 2.0, 0.6f64.sin() * 2.0);
        let a = Matrix::new(&[[c, s], [-s, c]]);
        let k = build_order_infinity_set(&a, &Lattice::integer(2), 3, DEFAULT_TOL).unwrap();
        let RegionSet::ShiftedPieces(sp) = &k else { panic!("expected shifted pieces") };
        for p in &sp.pieces {
            for v in Lattice::integer(2).y_grid(9) {
                let q: Vec<f64> = v.iter().zip(&p.point).map(|(a, b)| a + b).collect();
                assert!(k.contains(&q).unwrap());
            }
        }
    }
}

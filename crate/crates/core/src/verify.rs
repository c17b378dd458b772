//! Seeded numerical verification: discrete tiling counts, continuous
//! uniqueness, Calderón lengths, orbit integrals and Jacobians.
//!
//! Every sampled check draws standard Gaussian points with the sharded
//! generator in [`crate::sampling`], so a report depends only on its inputs
//! and seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, XsectError};
use crate::linalg::{block_exp, integer_power, jordan_exp, Matrix};
use crate::quadrature::{try_integrate, Estimate, QuadOptions};
use crate::sampling::{gaussian, par_generate};
use crate::sections::{CrossSection, Mode, Parameter, SectionCase};
use crate::shaping::ShapedSection;

/// Floor of the discrete scan window `[−60, 60]`.
pub const DEFAULT_K_WINDOW: i64 = 60;
/// Half-width and step of the continuous uniqueness scan.
pub const T_WINDOW: f64 = 5.0;
pub const T_STEP: f64 = 1e-3;
/// Tolerance of the Calderón length check.
pub const CALDERON_TOL: f64 = 1e-6;
const MAX_REPORTED_FAILURES: usize = 50;
const GRID_OFFSET: f64 = 0.381_966_011_250_105;
const REANCHOR: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub index: usize,
    pub point: Vec<f64>,
    pub diagnostic: String,
}

/// Per-sample outcome, kept for CSV export but not serialised.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub point: Vec<f64>,
    /// `None` for points of the null set.
    pub multiplicity: Option<usize>,
    pub parameter: Option<f64>,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingReport {
    pub check: String,
    pub samples: usize,
    pub seed: u64,
    /// Scanned parameter range `[lo, hi]` (relative to the solved parameter
    /// for continuous scans).
    pub scan: [f64; 2],
    /// Multiplicity → number of samples.
    pub multiplicities: BTreeMap<usize, usize>,
    /// Samples that fell on the null set.
    pub exceptional: usize,
    pub failure_count: usize,
    /// The first failures, in sample order.
    pub failures: Vec<Failure>,
    /// Largest deviation of a measured quantity from its target, if any.
    pub max_deviation: Option<f64>,
    pub pass: bool,
    #[serde(skip)]
    pub records: Vec<SampleRecord>,
}

pub(crate) struct Outcome {
    pub(crate) record: SampleRecord,
    pub(crate) failure: Option<String>,
}

impl Outcome {
    pub(crate) fn exceptional(point: Vec<f64>) -> Self {
        Outcome { record: SampleRecord { point, multiplicity: None, parameter: None, value: None }, failure: None }
    }
}

pub(crate) fn assemble(check: &str, seed: u64, scan: [f64; 2], outcomes: Vec<Outcome>, deviation: Option<f64>) -> TilingReport {
    let mut multiplicities = BTreeMap::new();
    let mut failures = Vec::new();
    let (mut exceptional, mut failure_count) = (0, 0);
    let mut records = Vec::with_capacity(outcomes.len());
    for (i, o) in outcomes.into_iter().enumerate() {
        match o.record.multiplicity {
            Some(m) => *multiplicities.entry(m).or_insert(0) += 1,
            None => exceptional += 1,
        }
        if let Some(d) = o.failure {
            failure_count += 1;
            if failures.len() < MAX_REPORTED_FAILURES {
                failures.push(Failure { index: i, point: o.record.point.clone(), diagnostic: d });
            }
        }
        records.push(o.record);
    }
    TilingReport {
        check: check.into(),
        samples: records.len(),
        seed,
        scan,
        multiplicities,
        exceptional,
        failure_count,
        failures,
        max_deviation: deviation,
        pass: failure_count == 0,
        records,
    }
}

fn is_exceptional(e: &XsectError) -> bool {
    matches!(e, XsectError::ExceptionalPoint { .. })
}

/// Power table `Aʲ` for `j ∈ [−w, w]`; entries that overflow are `None`.
struct Powers {
    w: i64,
    table: Vec<Option<Matrix>>,
    a: Matrix,
}

impl Powers {
    fn new(a: &Matrix, w: i64) -> Result<Self> {
        let table = (-w..=w).map(|j| integer_power(a, j).ok()).collect();
        // A⁻¹ must exist for a dilation action.
        a.inverse()?;
        Ok(Powers { w, table, a: a.clone() })
    }

    fn get(&self, j: i64) -> Option<Matrix> {
        if j.abs() <= self.w {
            self.table[(j + self.w) as usize].clone()
        } else {
            integer_power(&self.a, j).ok()
        }
    }
}

/// Counts `#{j : ξAʲ ∈ S}` over `[−w, w]` (widened around `predict(ξ)` when
/// a predictor is given) for Gaussian samples; PASS iff every count is 1
/// and, with a predictor, the hit is where the solver says.
///
/// The predictor returns the power `j` with `ξAʲ ∈ S`.
pub fn check_discrete_tiling<M, P>(
    member: M,
    predict: Option<P>,
    a: &Matrix,
    samples: usize,
    seed: u64,
    window: i64,
) -> Result<TilingReport>
where
    M: Fn(&[f64]) -> Result<bool> + Sync,
    P: Fn(&[f64]) -> Result<i64> + Sync,
{
    let w = window.max(1);
    let powers = Powers::new(a, w)?;
    let n = a.dim();
    let outcomes = par_generate(seed, samples, |_, rng| {
        let xi = gaussian(rng, n);
        let predicted = match &predict {
            Some(p) => match p(&xi) {
                Ok(j) => Some(j),
                Err(e) if is_exceptional(&e) => return Outcome::exceptional(xi),
                Err(e) => {
                    return Outcome {
                        record: SampleRecord { point: xi, multiplicity: Some(0), parameter: None, value: None },
                        failure: Some(format!("solver: {e}")),
                    }
                }
            },
            None => None,
        };
        let mut range: Vec<i64> = (-w..=w).collect();
        if let Some(j) = predicted {
            range.extend((j - 10..=j + 10).filter(|k| k.abs() > w));
        }
        let mut hits = Vec::new();
        for j in range {
            let Some(m) = powers.get(j) else { continue };
            match member(&m.apply(&xi)) {
                Ok(true) => hits.push(j),
                Ok(false) => {}
                Err(e) if is_exceptional(&e) => return Outcome::exceptional(xi),
                Err(e) => {
                    return Outcome {
                        record: SampleRecord { point: xi, multiplicity: Some(hits.len()), parameter: None, value: None },
                        failure: Some(format!("membership at j = {j}: {e}")),
                    }
                }
            }
        }
        let failure = if hits.len() != 1 {
            Some(format!("multiplicity {} (hits at {:?})", hits.len(), &hits[..hits.len().min(8)]))
        } else if predicted.is_some_and(|p| p != hits[0]) {
            Some(format!("hit at j = {} but solver predicted {}", hits[0], predicted.unwrap()))
        } else {
            None
        };
        Outcome {
            record: SampleRecord {
                multiplicity: Some(hits.len()),
                parameter: hits.first().map(|j| *j as f64),
                point: xi,
                value: None,
            },
            failure,
        }
    });
    Ok(assemble("discrete_tiling", seed, [-(w as f64), w as f64], outcomes, None))
}

/// Discrete tiling check of a section against its own solver.
pub fn check_section_tiling(s: &CrossSection, samples: usize, seed: u64) -> Result<TilingReport> {
    if s.mode != Mode::Discrete {
        return Err(XsectError::UnsupportedCase("discrete tiling needs a discrete section".into()));
    }
    check_discrete_tiling(
        |g| s.contains(g),
        Some(|g: &[f64]| Ok(-s.solve_orbit(g)?.parameter.power().expect("discrete"))),
        &s.matrix,
        samples,
        seed,
        DEFAULT_K_WINDOW,
    )
}

/// Discrete tiling check of a shaped section against its own solver.
pub fn check_shaped_tiling(s: &ShapedSection, samples: usize, seed: u64) -> Result<TilingReport> {
    check_discrete_tiling(
        |g| s.contains(g),
        Some(|g: &[f64]| Ok(-s.solve_orbit(g)?.parameter.power().expect("discrete"))),
        &s.base.matrix,
        samples,
        seed,
        DEFAULT_K_WINDOW,
    )
}

/// Roots of the section's equality constraint along the orbit of `ξ` in
/// `[t* − window, t* + window]` that satisfy the inequality constraints.
pub fn orbit_hits(s: &CrossSection, xi: &[f64], center: f64, window: f64, step: f64) -> Result<Vec<f64>> {
    let b0 = s.block_coords(xi)?;
    let block = *s.block();
    let residual = |t: f64| -> Result<(f64, bool)> {
        let b = block_exp(&block, t).apply(&b0);
        s.block_residual(&b)
    };
    // Offset the grid so that the expected root is never a grid node.
    let start = center - window + GRID_OFFSET * step;
    let steps = (2.0 * window / step).round() as usize;
    // March the grid with the one-step propagator, re-anchoring periodically
    // on the exact flow so rounding cannot accumulate.
    let e_step = block_exp(&block, step);
    let m = block.size();
    let mut b = block_exp(&block, start).apply(&b0);
    let mut next = vec![0.0; m];
    let mut hits = Vec::new();
    let mut t_prev = start;
    let (mut r_prev, _) = s.block_residual(&b)?;
    for i in 1..=steps {
        let t = start + i as f64 * step;
        if i % REANCHOR == 0 {
            b = block_exp(&block, t).apply(&b0);
        } else {
            for (j, out) in next.iter_mut().enumerate() {
                *out = (0..m).map(|k| b[k] * e_step[(k, j)]).sum();
            }
            std::mem::swap(&mut b, &mut next);
        }
        let (r, _) = s.block_residual(&b)?;
        if r_prev == 0.0 || r_prev.signum() != r.signum() {
            let (mut lo, mut hi, mut rlo) = (t_prev, t, r_prev);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let (rm, _) = residual(mid)?;
                if rm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if rm.signum() == rlo.signum() {
                    lo = mid;
                    rlo = rm;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            if residual(root)?.1 {
                hits.push(root);
            }
        }
        t_prev = t;
        r_prev = r;
    }
    hits.dedup_by(|a, b| (*a - *b).abs() < step);
    Ok(hits)
}

/// Uniqueness of the orbit hit for a continuous section: exactly one
/// admissible root in the scanned window, at the closed-form time.
pub fn check_continuous_tiling(s: &CrossSection, samples: usize, seed: u64) -> Result<TilingReport> {
    if s.mode != Mode::Continuous {
        return Err(XsectError::UnsupportedCase("continuous tiling needs a continuous section".into()));
    }
    let n = s.dim();
    let outcomes = par_generate(seed, samples, |_, rng| {
        let xi = gaussian(rng, n);
        let t_star = match s.solve_orbit(&xi) {
            Ok(sol) => sol.parameter.as_f64(),
            Err(e) if is_exceptional(&e) => return Outcome::exceptional(xi),
            Err(e) => return failed(xi, format!("solver: {e}")),
        };
        match orbit_hits(s, &xi, t_star, T_WINDOW, T_STEP) {
            Ok(hits) => {
                let off = hits.iter().map(|h| (h - t_star).abs()).fold(0.0f64, f64::max);
                let failure = if hits.len() != 1 {
                    Some(format!("{} admissible roots near t* = {t_star}: {:?}", hits.len(), hits))
                } else if off > 1e-6 * t_star.abs().max(1.0) {
                    Some(format!("root {} differs from closed form {t_star}", hits[0]))
                } else {
                    None
                };
                Outcome {
                    record: SampleRecord { point: xi, multiplicity: Some(hits.len()), parameter: Some(t_star), value: None },
                    failure,
                }
            }
            Err(e) => failed(xi, format!("scan: {e}")),
        }
    });
    Ok(assemble("continuous_uniqueness", seed, [-T_WINDOW, T_WINDOW], outcomes, None))
}

fn failed(point: Vec<f64>, msg: String) -> Outcome {
    Outcome { record: SampleRecord { point, multiplicity: Some(0), parameter: None, value: None }, failure: Some(msg) }
}

/// Membership in the derived discrete section `T = {γe^{sB} : γ ∈ S, 0 ≤ s < 1}`.
pub fn in_derived_section(s: &CrossSection, gamma: &[f64]) -> Result<bool> {
    let tau = s.solve_orbit(gamma)?.parameter.as_f64();
    Ok(tau > -1.0 && tau <= 0.0)
}

/// Lebesgue length of `{t : ξe^{tB} ∈ T}` for the derived discrete section,
/// found by a grid scan of membership with bisection of every transition.
/// Deviation from 1 beyond [`CALDERON_TOL`] is a `QuadratureDivergence`.
pub fn calderon_length(s: &CrossSection, xi: &[f64]) -> Result<f64> {
    let t_star = s.solve_orbit(xi)?.parameter.as_f64();
    let member = |t: f64| -> Result<bool> { in_derived_section(s, &s.flow(xi, t)?) };
    let (lo, hi, step) = (t_star - 2.0, t_star + 3.0, 0.05);
    let steps = ((hi - lo) / step).round() as usize;
    let mut length = 0.0;
    let mut t_prev = lo;
    let mut m_prev = member(lo)?;
    let mut entered = if m_prev { Some(lo) } else { None };
    for i in 1..=steps {
        let t = lo + i as f64 * step;
        let m = member(t)?;
        if m != m_prev {
            let (mut a, mut b) = (t_prev, t);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if member(mid)? == m_prev {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let edge = 0.5 * (a + b);
            if m {
                entered = Some(edge);
            } else if let Some(e) = entered.take() {
                length += edge - e;
            }
        }
        t_prev = t;
        m_prev = m;
    }
    if let Some(e) = entered {
        length += hi - e;
    }
    let deviation = (length - 1.0).abs();
    if deviation > CALDERON_TOL {
        return Err(XsectError::QuadratureDivergence { deviation });
    }
    Ok(length)
}

/// Calderón identity `∫ χ_T(ξe^{tB}) dt = 1` on Gaussian samples.
pub fn check_calderon(s: &CrossSection, samples: usize, seed: u64) -> Result<TilingReport> {
    if s.mode != Mode::Continuous {
        return Err(XsectError::UnsupportedCase("Calderón lengths need a continuous section".into()));
    }
    let n = s.dim();
    let outcomes = par_generate(seed, samples, |_, rng| {
        let xi = gaussian(rng, n);
        match calderon_length(s, &xi) {
            Ok(len) => Outcome {
                record: SampleRecord { point: xi, multiplicity: Some(1), parameter: None, value: Some(len) },
                failure: None,
            },
            Err(e) if is_exceptional(&e) => Outcome::exceptional(xi),
            Err(e) => failed(xi, e.to_string()),
        }
    });
    let dev = outcomes
        .iter()
        .filter_map(|o| o.record.value)
        .map(|v| (v - 1.0).abs())
        .fold(0.0f64, f64::max);
    Ok(assemble("calderon", seed, [-2.0, 3.0], outcomes, Some(dev)))
}

/// Probes of the disjointness clause: for points `γ ∈ S` (representatives of
/// Gaussian samples) and parameters `s ≠ 0` the moved point must leave `S`.
/// Returns the number of violations.
pub fn disjointness_probe(s: &CrossSection, probes: usize, seed: u64) -> Result<usize> {
    let n = s.dim();
    let v = par_generate(seed, probes, |_, rng| -> Result<bool> {
        let xi = gaussian(rng, n);
        let rep = match s.solve_orbit(&xi) {
            Ok(sol) => sol.representative,
            Err(e) if is_exceptional(&e) => return Ok(false),
            Err(e) => return Err(e),
        };
        let shift = match s.mode {
            Mode::Continuous => {
                let mag = 10f64.powf(rng.random_range(-3.0..1.0));
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
            Mode::Discrete => {
                let k = rng.random_range(1..=10) as f64;
                if rng.random::<bool>() {
                    k
                } else {
                    -k
                }
            }
        };
        s.contains(&s.act(&rep, shift)?)
    });
    let mut count = 0;
    for r in v {
        if r? {
            count += 1;
        }
    }
    Ok(count)
}

/// Result of the orthogonal-matrix impossibility probe for one candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub candidate: String,
    /// Samples whose orbit meets the candidate.
    pub hitting: usize,
    /// Of those, samples with multiplicity ≠ 1.
    pub non_unit: usize,
    pub fraction: f64,
}

/// Runs the discrete tiling count for a candidate set and summarises how
/// often orbits that meet it do so with multiplicity other than 1.
pub fn impossibility_probe<M>(name: &str, member: M, a: &Matrix, samples: usize, seed: u64) -> Result<ProbeResult>
where
    M: Fn(&[f64]) -> bool + Sync,
{
    let r = check_discrete_tiling(|g| Ok(member(g)), None::<fn(&[f64]) -> Result<i64>>, a, samples, seed, DEFAULT_K_WINDOW)?;
    let hitting: usize = r.multiplicities.iter().filter(|(m, _)| **m > 0).map(|(_, c)| c).sum();
    let non_unit: usize = r.multiplicities.iter().filter(|(m, _)| **m > 1).map(|(_, c)| c).sum();
    Ok(ProbeResult {
        candidate: name.into(),
        hitting,
        non_unit,
        fraction: if hitting == 0 { 1.0 } else { non_unit as f64 / hitting as f64 },
    })
}

/// Number of section parameters besides `t`.
fn parameter_count(s: &CrossSection) -> usize {
    s.dim() - 1
}

/// Jordan coordinates of the section point with parameters `params`
/// (`sign` selects `±v₁` in case 1).
///
/// Layout: case 1 `[free…]`; cases 2, 3 `[s, free…]`; case 4 `[p, q, s, free…]`.
pub fn section_point(s: &CrossSection, sign: f64, params: &[f64]) -> Vec<f64> {
    let n = s.dim();
    let o = s.offset();
    let c = s.constrained_dim();
    let (head, free): (Vec<f64>, &[f64]) = match s.case {
        SectionCase::ContinuousRealNonzero => (vec![sign], params),
        SectionCase::ContinuousComplexNonzero | SectionCase::ContinuousZeroNilpotent => {
            (vec![params[0], 0.0], &params[1..])
        }
        SectionCase::ContinuousImaginaryNilpotent => (vec![params[0], 0.0, params[1], params[2]], &params[3..]),
        _ => unreachable!("continuous sections only"),
    };
    let mut x = Vec::with_capacity(n);
    let mut fi = free.iter();
    for i in 0..n {
        if i >= o && i < o + c {
            x.push(head[i - o]);
        } else {
            x.push(*fi.next().expect("free parameter"));
        }
    }
    x
}

/// Signed closed-form Jacobian determinant of `(t, params) ↦ γ` in ambient
/// coordinates: `c(params)·δᵗ·det P` with `δ = e^{tr B}` and
///
/// * case 1: `c = σα`,
/// * case 2: `c = −sβ`,
/// * case 3: `c = −s`,
/// * case 4: `c = −βp`.
pub fn closed_jacobian(s: &CrossSection, sign: f64, t: f64, params: &[f64]) -> f64 {
    let p = &s.params;
    let c = match s.case {
        SectionCase::ContinuousRealNonzero => sign * p.alpha,
        SectionCase::ContinuousComplexNonzero => -params[0] * p.beta,
        SectionCase::ContinuousZeroNilpotent => -params[0],
        SectionCase::ContinuousImaginaryNilpotent => -p.beta * params[0],
        _ => unreachable!("continuous sections only"),
    };
    // The formulas take the witness block first; moving it to its offset
    // permutes columns.
    let perm = if (s.offset() * s.constrained_dim()) % 2 == 1 { -1.0 } else { 1.0 };
    perm * c * (t * s.matrix.trace()).exp() * s.jordan.conjugator.det()
}

fn parametrization(s: &CrossSection, sign: f64, v: &[f64]) -> Vec<f64> {
    let x = section_point(s, sign, &v[1..]);
    s.jordan.from_jordan(&jordan_exp(&s.jordan, v[0]).apply(&x))
}

/// Central finite-difference Jacobian determinant at `(t, params)`.
pub fn fd_jacobian(s: &CrossSection, sign: f64, t: f64, params: &[f64]) -> f64 {
    let n = s.dim();
    let mut v = vec![t];
    v.extend_from_slice(params);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let h = 1e-5 * v[i].abs().max(1.0);
        let (mut vp, mut vm) = (v.clone(), v.clone());
        vp[i] += h;
        vm[i] -= h;
        let (fp, fm) = (parametrization(s, sign, &vp), parametrization(s, sign, &vm));
        rows.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<_>>());
    }
    Matrix::from_rows(&rows).map(|m| m.det()).unwrap_or(f64::NAN)
}

fn random_parameters<R: Rng>(s: &CrossSection, rng: &mut R) -> (f64, f64, Vec<f64>) {
    let t = rng.random_range(-1.0..1.0);
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut params = gaussian(rng, parameter_count(s));
    match s.case {
        SectionCase::ContinuousComplexNonzero => params[0] = rng.random_range(1.0..s.params.upper),
        SectionCase::ContinuousImaginaryNilpotent => {
            params[0] = rng.random_range(0.1..3.0);
            params[1] = rng.random_range(0.0..s.params.upper * params[0]);
        }
        _ => {}
    }
    (sign, t, params)
}

/// Largest relative deviation between closed-form and finite-difference
/// Jacobians at `points` random parameter points.
pub fn jacobian_check(s: &CrossSection, points: usize, seed: u64) -> Result<f64> {
    if s.mode != Mode::Continuous {
        return Err(XsectError::UnsupportedCase("Jacobians are defined for continuous sections".into()));
    }
    let devs = par_generate(seed, points, |_, rng| {
        let (sign, t, params) = random_parameters(s, rng);
        let closed = closed_jacobian(s, sign, t, &params);
        let fd = fd_jacobian(s, sign, t, &params);
        (closed - fd).abs() / closed.abs()
    });
    Ok(devs.into_iter().fold(0.0, f64::max))
}

/// Default per-level options for nested orbit integration.
pub fn orbit_quad_options() -> QuadOptions {
    QuadOptions { abs_tol: 1e-10, rel_tol: 1e-7, max_evals: 20_000 }
}

/// Options for an `n`-dimensional orbit integral: four nested levels (case 4
/// in ℝ⁴) use a looser relative tolerance to stay at desk scale.
pub fn orbit_quad_options_for(n: usize) -> QuadOptions {
    if n >= 4 {
        QuadOptions { rel_tol: 1e-4, ..orbit_quad_options() }
    } else {
        orbit_quad_options()
    }
}

/// Jordan coordinate of each section parameter and whether its range is
/// unbounded (and so rescaled to the orbit's local length scale).
fn parameter_coords(s: &CrossSection) -> Vec<(usize, bool)> {
    let o = s.offset();
    let c = s.constrained_dim();
    let mut v = match s.case {
        SectionCase::ContinuousRealNonzero => vec![],
        SectionCase::ContinuousComplexNonzero => vec![(o, false)],
        SectionCase::ContinuousZeroNilpotent => vec![(o, true)],
        _ => vec![(o, true), (o + 2, false), (o + 3, true)],
    };
    v.extend((0..s.dim()).filter(|i| *i < o || *i >= o + c).map(|i| (i, true)));
    v
}

/// `∫_{ℝⁿ} f` computed in orbit coordinates `(t, section parameters)` with
/// the closed-form Jacobian weight. Nested adaptive quadrature, `n ≤ 4`.
///
/// At each `t` an unbounded parameter is integrated in units of the norm of
/// its row of `e^{tJ}`, so that integrands concentrated near the origin stay
/// resolved however strongly the flow stretches that coordinate.
pub fn orbit_integral<F>(f: &F, s: &CrossSection, opts: QuadOptions) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if s.mode != Mode::Continuous {
        return Err(XsectError::UnsupportedCase("orbit integrals use continuous sections".into()));
    }
    if s.dim() > 4 {
        return Err(XsectError::DimensionTooHigh { n: s.dim(), max: 4 });
    }
    let coords = parameter_coords(s);
    let signs: &[f64] = if s.case == SectionCase::ContinuousRealNonzero { &[1.0, -1.0] } else { &[1.0] };
    let mut total = Estimate { value: 0.0, error: 0.0, evals: 0 };
    for &sign in signs {
        let e = try_integrate(
            |t| {
                let et = jordan_exp(&s.jordan, t);
                let scale = (t * s.matrix.trace()).exp() * s.jordan.conjugator.det().abs();
                if scale == 0.0 || !scale.is_finite() {
                    return Ok(0.0);
                }
                let lengths: Vec<f64> = coords
                    .iter()
                    .map(|&(i, free)| {
                        if free {
                            let r = (0..s.dim()).map(|j| et[(i, j)].powi(2)).sum::<f64>().sqrt();
                            1.0 / r
                        } else {
                            1.0
                        }
                    })
                    .collect();
                // Flow saturated to 0 or ∞: the slice carries no mass.
                if lengths.iter().any(|l| !l.is_finite() || *l == 0.0) {
                    return Ok(0.0);
                }
                let ctx = Nest { f, s, sign, et: &et, lengths: &lengths, opts };
                Ok(scale * ctx.run(&[])?)
            },
            f64::NEG_INFINITY,
            f64::INFINITY,
            opts,
        )?;
        total.value += e.value;
        total.error += e.error;
        total.evals += e.evals;
    }
    Ok(total)
}

fn parameter_bounds(s: &CrossSection, prefix: &[f64]) -> (f64, f64) {
    let i = prefix.len();
    match (s.case, i) {
        (SectionCase::ContinuousComplexNonzero, 0) => (1.0, s.params.upper),
        (SectionCase::ContinuousImaginaryNilpotent, 0) => (0.0, f64::INFINITY),
        (SectionCase::ContinuousImaginaryNilpotent, 1) => (0.0, s.params.upper * prefix[0]),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

fn weight(s: &CrossSection, params: &[f64]) -> f64 {
    let p = &s.params;
    match s.case {
        SectionCase::ContinuousRealNonzero => p.alpha.abs(),
        SectionCase::ContinuousComplexNonzero => (params[0] * p.beta).abs(),
        SectionCase::ContinuousZeroNilpotent => params[0].abs(),
        _ => p.beta.abs() * params[0],
    }
}

struct Nest<'a, F> {
    f: &'a F,
    s: &'a CrossSection,
    sign: f64,
    et: &'a Matrix,
    lengths: &'a [f64],
    opts: QuadOptions,
}

impl<F: Fn(&[f64]) -> f64> Nest<'_, F> {
    fn run(&self, prefix: &[f64]) -> Result<f64> {
        let s = self.s;
        if prefix.len() == self.lengths.len() {
            let x = self.et.apply(&section_point(s, self.sign, prefix));
            let v = (self.f)(&s.jordan.from_jordan(&x));
            return Ok(if v == 0.0 { 0.0 } else { v * weight(s, prefix) });
        }
        let l = self.lengths[prefix.len()];
        let (lo, hi) = parameter_bounds(s, prefix);
        let e = try_integrate(
            |u| {
                let mut p = prefix.to_vec();
                p.push(u * l);
                Ok(l * self.run(&p)?)
            },
            lo / l,
            hi / l,
            self.opts,
        )?;
        Ok(e.value)
    }
}

/// Direct iterated quadrature of `f` over `ℝⁿ` (the oracle for orbit integrals).
pub fn ambient_integral<F>(f: &F, n: usize, opts: QuadOptions) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64,
{
    fn go<F: Fn(&[f64]) -> f64>(f: &F, n: usize, prefix: &[f64], opts: QuadOptions) -> Result<Estimate> {
        try_integrate(
            |v| {
                let mut p = prefix.to_vec();
                p.push(v);
                if p.len() == n {
                    Ok(f(&p))
                } else {
                    Ok(go(f, n, &p, opts)?.value)
                }
            },
            f64::NEG_INFINITY,
            f64::INFINITY,
            opts,
        )
    }
    if n == 0 {
        return Ok(Estimate { value: f(&[]), error: 0.0, evals: 1 });
    }
    go(f, n, &[], opts)
}

/// Direct quadrature of a separable `f(x) = Π fᵢ(xᵢ)` over `ℝⁿ` as a
/// product of 1D integrals; `factor(i, x) = fᵢ(x)`.
pub fn separable_integral<F>(factor: F, n: usize, opts: QuadOptions) -> Result<Estimate>
where
    F: Fn(usize, f64) -> f64,
{
    let mut out = Estimate { value: 1.0, error: 0.0, evals: 0 };
    for i in 0..n {
        let e = try_integrate(|x| Ok(factor(i, x)), f64::NEG_INFINITY, f64::INFINITY, opts)?;
        out.error = out.error * e.value.abs() + e.error * out.value.abs();
        out.value *= e.value;
        out.evals += e.evals;
    }
    Ok(out)
}

/// Importance-sampled Monte Carlo integral over `ℝⁿ` with a centred
/// Gaussian proposal of standard deviation `scale`; returns (estimate, 3σ).
pub fn monte_carlo_integral<F>(f: &F, n: usize, scale: f64, samples: usize, seed: u64) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let norm = (2.0 * std::f64::consts::PI).powf(n as f64 / 2.0) * scale.powi(n as i32);
    let vals = par_generate(seed, samples, |_, rng| {
        let z = gaussian(rng, n);
        let x: Vec<f64> = z.iter().map(|v| v * scale).collect();
        let q = (-0.5 * z.iter().map(|v| v * v).sum::<f64>()).exp() / norm;
        f(&x) / q
    });
    let m = vals.iter().sum::<f64>() / samples as f64;
    let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (samples as f64 - 1.0).max(1.0);
    (m, 3.0 * (var / samples as f64).sqrt())
}

/// Evaluates `row(γ)` on a regular grid of cell centres of the box
/// `[lo, hi)` with `resolution` cells per axis and writes CSV with the given
/// value columns. Grids are limited to three dimensions.
pub fn grid_csv<F>(lo: &[f64], hi: &[f64], resolution: usize, columns: &[&str], row: F) -> Result<String>
where
    F: Fn(&[f64]) -> Vec<String> + Sync,
{
    let n = lo.len();
    if n > 3 {
        return Err(XsectError::DimensionTooHigh { n, max: 3 });
    }
    let mut out = String::new();
    let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).chain(columns.iter().map(|c| c.to_string())).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    if resolution == 0 || n == 0 {
        return Ok(out);
    }
    let total = resolution.pow(n as u32);
    let lines: Vec<String> = par_generate(0, total, |idx, _| {
        let mut rem = idx;
        let mut p = vec![0.0; n];
        for i in (0..n).rev() {
            let c = rem % resolution;
            rem /= resolution;
            p[i] = lo[i] + (hi[i] - lo[i]) * (c as f64 + 0.5) / resolution as f64;
        }
        let mut fields: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
        fields.extend(row(&p));
        fields.join(",")
    });
    for l in lines {
        let _ = writeln!(out, "{l}");
    }
    Ok(out)
}

/// CSV rows for the sampled points of a report.
pub fn records_csv(report: &TilingReport) -> String {
    let n = report.records.first().map_or(0, |r| r.point.len());
    let mut out: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    out.extend(["multiplicity", "parameter", "value"].map(String::from));
    let mut s = out.join(",");
    s.push('\n');
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
    for r in &report.records {
        let mut f: Vec<String> = r.point.iter().map(|v| format!("{v:.16e}")).collect();
        f.push(r.multiplicity.map_or("exceptional".into(), |m| m.to_string()));
        f.push(opt(r.parameter));
        f.push(opt(r.value));
        let _ = writeln!(s, "{}", f.join(","));
    }
    s
}

/// Membership and solved parameter columns of a section, for [`grid_csv`].
pub fn section_row(s: &CrossSection, g: &[f64]) -> Vec<String> {
    match (s.contains(g), s.solve_orbit(g)) {
        (Ok(m), Ok(sol)) => vec![
            (m as u8).to_string(),
            match sol.parameter {
                Parameter::Power(k) => k.to_string(),
                Parameter::Time(t) => format!("{t:.16e}"),
            },
        ],
        _ => vec!["exceptional".into(), String::new()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_TOL;
    use std::f64::consts::{LN_2, PI};

    fn gaussian_density(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp() / (2.0 * PI).powf(n / 2.0)
    }

    #[test]
    fn dyadic_tiling_passes_and_triadic_fails() {
        let member = |g: &[f64]| Ok((1.0..2.0).contains(&g[0].abs()));
        let none = None::<fn(&[f64]) -> Result<i64>>;
        let r = check_discrete_tiling(member, none, &Matrix::scalar(2.0), 2000, 1, 60).unwrap();
        assert!(r.pass, "{:?}", r.failures.first());
        let r = check_discrete_tiling(member, none, &Matrix::scalar(3.0), 2000, 1, 60).unwrap();
        assert!(!r.pass);
        assert!(r.multiplicities.contains_key(&0));
    }

    #[test]
    fn section_tiling_with_solver() {
        let s = CrossSection::build(Mode::Discrete, &Matrix::new(&[[1.0, 1.0], [0.0, 1.0]]), DEFAULT_TOL).unwrap();
        let r = check_section_tiling(&s, 1000, 4).unwrap();
        assert!(r.pass && r.multiplicities[&1] == 1000);
    }

    #[test]
    fn shear_uniqueness() {
        let s = CrossSection::build(Mode::Continuous, &Matrix::new(&[[0.0, 1.0], [0.0, 0.0]]), DEFAULT_TOL).unwrap();
        let r = check_continuous_tiling(&s, 200, 2).unwrap();
        assert!(r.pass, "{:?}", r.failures.first());
    }

    #[test]
    fn case4_unique_hit() {
        let b = Matrix::new(&[
            [0.0, PI, 1.0, 0.0],
            [-PI, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, PI],
            [0.0, 0.0, -PI, 0.0],
        ]);
        let s = CrossSection::build(Mode::Continuous, &b, DEFAULT_TOL).unwrap();
        let hits = orbit_hits(&s, &[1.0, 0.0, 2.5, 0.0], -2.0, T_WINDOW, T_STEP).unwrap();
        assert_eq!(hits.len(), 1);
        assert!((hits[0] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn calderon_on_dyadic_ray() {
        let s = CrossSection::build(Mode::Continuous, &Matrix::scalar(LN_2), DEFAULT_TOL).unwrap();
        for x in [0.3, 1.0, 1.7, 5.0, -2.2] {
            assert!((calderon_length(&s, &[x]).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn jacobian_examples() {
        let s = CrossSection::build(Mode::Continuous, &Matrix::new(&[[0.0, 1.0], [0.0, 0.0]]), DEFAULT_TOL).unwrap();
        assert!((closed_jacobian(&s, 1.0, 2.0, &[1.5]) + 1.5).abs() < 1e-15);
        assert!((fd_jacobian(&s, 1.0, 2.0, &[1.5]) + 1.5).abs() < 1e-6);
        let b = Matrix::new(&[
            [0.0, PI, 1.0, 0.0],
            [-PI, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, PI],
            [0.0, 0.0, -PI, 0.0],
        ]);
        let s = CrossSection::build(Mode::Continuous, &b, DEFAULT_TOL).unwrap();
        assert!((closed_jacobian(&s, 1.0, 0.3, &[1.0, 0.5, 0.0]) + PI).abs() < 1e-12);
        assert!((fd_jacobian(&s, 1.0, 0.3, &[1.0, 0.5, 0.0]) + PI).abs() < 1e-6);
    }

    #[test]
    fn dyadic_orbit_integral() {
        let s = CrossSection::build(Mode::Continuous, &Matrix::scalar(LN_2), DEFAULT_TOL).unwrap();
        // Indicator of [1, 2): the weight |α|·2ᵗ makes the substitution exact.
        let f = |x: &[f64]| if (1.0..2.0).contains(&x[0]) { 1.0 } else { 0.0 };
        let e = orbit_integral(&f, &s, QuadOptions { abs_tol: 1e-9, rel_tol: 1e-9, max_evals: 200_000 }).unwrap();
        assert!((e.value - 1.0).abs() < 1e-6, "{}", e.value);
        let zero = orbit_integral(&|_: &[f64]| 0.0, &s, orbit_quad_options()).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn shear_gaussian_orbit_integral() {
        let s = CrossSection::build(Mode::Continuous, &Matrix::new(&[[0.0, 1.0], [0.0, 0.0]]), DEFAULT_TOL).unwrap();
        let e = orbit_integral(&gaussian_density, &s, orbit_quad_options()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-3, "{}", e.value);
    }

    #[test]
    fn jacobian_with_witness_after_free_block() {
        // The faster eigenvalue 1 is the witness and sits second.
        let s = CrossSection::build(Mode::Continuous, &Matrix::diag(&[-0.5, 1.0]), DEFAULT_TOL).unwrap();
        assert_eq!(s.offset(), 1);
        assert!(jacobian_check(&s, 20, 3).unwrap() < 1e-6);
    }

    #[test]
    fn diagonal_gaussian_orbit_integral() {
        let s = CrossSection::build(Mode::Continuous, &Matrix::diag(&[1.0, 2.0]), DEFAULT_TOL).unwrap();
        let e = orbit_integral(&gaussian_density, &s, orbit_quad_options()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-3, "{}", e.value);
    }

    #[test]
    fn separable_matches_nested() {
        let g = |x: f64| (-0.5 * (x - 0.3) * (x - 0.3)).exp();
        let sep = separable_integral(|_, x| g(x), 2, QuadOptions::default()).unwrap();
        let nested = ambient_integral(&|p: &[f64]| g(p[0]) * g(p[1]), 2, QuadOptions::default()).unwrap();
        assert!((sep.value - 2.0 * PI).abs() < 1e-8 && (sep.value - nested.value).abs() < 1e-8);
    }

    #[test]
    fn importance_sampling_oracle() {
        let (m, b) = monte_carlo_integral(&gaussian_density, 2, 1.5, 100_000, 9);
        assert!((m - 1.0).abs() <= b.max(1e-3));
    }

    #[test]
    fn csv_grid_rows() {
        let s = CrossSection::build(Mode::Discrete, &Matrix::new(&[[1.0, 1.0], [0.0, 1.0]]), DEFAULT_TOL).unwrap();
        let csv = grid_csv(&[-2.0, -2.0], &[2.0, 2.0], 200, &["member", "parameter"], |g| section_row(&s, g)).unwrap();
        assert_eq!(csv.lines().count(), 40_001);
        assert_eq!(csv.lines().next().unwrap(), "x1,x2,member,parameter");
        assert!(matches!(
            grid_csv(&[0.0; 4], &[1.0; 4], 2, &[], |_| vec![]),
            Err(XsectError::DimensionTooHigh { .. })
        ));
    }
}

//! Adaptive Gauss–Kronrod (7/15) quadrature with infinite-interval
//! transforms. Nested use gives low-dimensional iterated integrals.

use std::collections::BinaryHeap;

use crate::error::{Result, XsectError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-8, rel_tol: 1e-8, max_evals: 200_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

/// One G7K15 panel on `[a, b]`: (Kronrod estimate, |Kronrod − Gauss|).
fn panel<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx)? + f(c + dx)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Interval {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Adaptive bisection of the panel with the largest error on a finite interval.
fn adapt<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Estimate> {
    let (v, e) = panel(&mut f, a, b)?;
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value: v, error: e });
    let (mut total, mut err) = (v, e);
    loop {
        if !total.is_finite() {
            return Err(XsectError::QuadratureDivergence { deviation: f64::INFINITY });
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok(Estimate { value: total, error: err, evals });
        }
        if evals + 30 > opts.max_evals {
            return Err(XsectError::BudgetExceeded { partial: total, error_bound: err });
        }
        let worst = heap.pop().expect("heap never empties");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Interval cannot be split further in floating point.
            return Ok(Estimate { value: total, error: err, evals });
        }
        let (v1, e1) = panel(&mut f, worst.a, m)?;
        let (v2, e2) = panel(&mut f, m, worst.b)?;
        evals += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Interval { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Interval { a: m, b: worst.b, value: v2, error: e2 });
        // Re-sum occasionally to avoid drift from the running updates.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|i| i.value).sum();
            err = heap.iter().map(|i| i.error).sum();
        }
    }
}

/// `∫_a^b f` where either bound may be infinite; `f` may fail.
pub fn try_integrate<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Estimate> {
    if a.is_nan() || b.is_nan() {
        return Err(XsectError::InvalidInput("NaN integration bound".into()));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, evals: 0 });
    }
    if a > b {
        let e = try_integrate(f, b, a, opts)?;
        return Ok(Estimate { value: -e.value, ..e });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adapt(f, a, b, opts),
        (false, false) => adapt(
            |t| {
                let d = 1.0 - t * t;
                Ok(f(t / d)? * (1.0 + t * t) / (d * d))
            },
            -1.0,
            1.0,
            opts,
        ),
        (true, false) => adapt(
            |t| {
                let d = 1.0 - t;
                Ok(f(a + t / d)? / (d * d))
            },
            0.0,
            1.0,
            opts,
        ),
        (false, true) => adapt(
            |t| {
                let d = 1.0 - t;
                Ok(f(b - t / d)? / (d * d))
            },
            0.0,
            1.0,
            opts,
        ),
    }
}

/// `∫_a^b f` for an infallible integrand.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Estimate> {
    try_integrate(|x| Ok(f(x)), a, b, opts)
}

use std::path::Path;

use serde::Serialize;
use xsect_core::quadrature::QuadOptions;
use xsect_core::shaping::{check_matrix, shape, ShapeTarget, ShapedSection};
use xsect_core::verify::{self, TilingReport};
use xsect_core::wavelet::{
    self, boxes, build_order_infinity_set, check_partition, dimension_function, is_multiwavelet_set,
    partition_multiwavelet_set, translation_count, DEFAULT_PIECES,
};
use xsect_core::{classify_continuous, classify_discrete, CrossSection, Lattice, Matrix, Mode, Order, RegionSet};

use crate::input::{parse_point, read_lattice, read_matrix, read_region, read_section, LoadedSection};
use crate::output::{render_result, usage, write_file, CliResult, RunManifest, EXIT_FAIL, EXIT_OK};
use crate::{
    BuildArgs, CheckArg, ClassifyArgs, Command, ExportArgs, FunctionArg, GridArgs, IntegrateArgs, MatrixInput,
    SectionInput, ShapeArgs, SolveArgs, TargetArg, VerifyArgs, WaveletAction, WaveletArgs,
};

/// Relative agreement required between orbit and direct integrals.
const INTEGRAL_TOL: f64 = 0.01;
/// Largest relative Jacobian deviation accepted by `verify --check jacobian`.
const JACOBIAN_TOL: f64 = 1e-6;
const DEFAULT_EXTENT: f64 = 2.0;

pub fn dispatch(cmd: Command, m: &mut RunManifest) -> CliResult<i32> {
    match cmd {
        Command::Classify(a) => classify(a, m),
        Command::Build(a) => build(a, m),
        Command::Shape(a) => shape_cmd(a, m),
        Command::Solve(a) => solve(a, m),
        Command::Verify(a) => verify_cmd(a, m),
        Command::Integrate(a) => integrate(a, m),
        Command::Wavelet(a) => wavelet_cmd(a, m),
        Command::Export(a) => export(a, m),
    }
}

/// Prints (and optionally writes) the envelope; `pass = Some(false)` exits 3.
fn emit<T: Serialize>(m: &RunManifest, result: &T, out: Option<&Path>, pass: Option<bool>) -> CliResult<i32> {
    let json = render_result(m, result)?;
    if let Some(p) = out {
        write_file(p, &json)?;
    }
    print!("{json}");
    Ok(if pass == Some(false) { EXIT_FAIL } else { EXIT_OK })
}

fn matrix_input(m: &mut RunManifest, input: &MatrixInput) -> CliResult<(Mode, Matrix)> {
    check_tol(input.tol)?;
    m.tolerances.insert("tol".into(), input.tol);
    let mode = input.mode.ok_or_else(|| usage("--mode is required"))?;
    let (flag, path) = match (&input.matrix, &input.generator) {
        (Some(p), None) => ("matrix", p),
        (None, Some(p)) => ("generator", p),
        (Some(_), Some(_)) => return Err(usage("give --matrix or --generator, not both")),
        (None, None) => return Err(usage("--matrix (or --generator for continuous mode) is required")),
    };
    if flag == "generator" && mode == Mode::Discrete {
        return Err(usage("--generator applies to continuous mode; use --matrix"));
    }
    Ok((mode, read_matrix(m, flag, path)?))
}

fn check_tol(tol: f64) -> CliResult<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(usage(format!("--tol must be positive, got {tol}")))
    }
}

fn resolve_section(m: &mut RunManifest, input: &SectionInput) -> CliResult<LoadedSection> {
    let Some(path) = &input.section else {
        let (mode, a) = matrix_input(m, &input.matrix)?;
        return Ok(LoadedSection::Plain(CrossSection::build(mode, &a, input.matrix.tol)?));
    };
    let s = read_section(m, path)?;
    m.tolerances.insert("tol".into(), s.base().tol);
    if let Some(mode) = input.matrix.mode {
        if mode != s.base().mode {
            return Err(usage(format!("--mode {mode} does not match the {} section", s.base().mode)));
        }
    }
    for (flag, p) in [("matrix", &input.matrix.matrix), ("generator", &input.matrix.generator)] {
        if let Some(p) = p {
            let a = read_matrix(m, flag, p)?;
            check_matrix(s.base(), &a)?;
        }
    }
    Ok(s)
}

fn need_samples(samples: Option<usize>, seed: Option<u64>, m: &mut RunManifest) -> CliResult<(usize, u64)> {
    let samples = samples.ok_or_else(|| usage("--samples is required"))?;
    if samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let seed = seed.ok_or_else(|| usage("--seed is required for sampled checks"))?;
    m.seed = Some(seed);
    Ok((samples, seed))
}

fn classify(a: ClassifyArgs, m: &mut RunManifest) -> CliResult<i32> {
    let (mode, mat) = matrix_input(m, &a.input)?;
    match mode {
        Mode::Discrete => emit(m, &classify_discrete(&mat, a.input.tol)?, a.out.out.as_deref(), None),
        Mode::Continuous => emit(m, &classify_continuous(&mat, a.input.tol)?, a.out.out.as_deref(), None),
    }
}

fn build(a: BuildArgs, m: &mut RunManifest) -> CliResult<i32> {
    let (mode, mat) = matrix_input(m, &a.input)?;
    let s = CrossSection::build(mode, &mat, a.input.tol)?;
    if let Some(dump) = &a.dump {
        write_file(dump, &section_grid(&LoadedSection::Plain(s.clone()), &a.grid)?.0)?;
    }
    emit(m, &s, a.out.out.as_deref(), None)
}

fn shape_cmd(a: ShapeArgs, m: &mut RunManifest) -> CliResult<i32> {
    let LoadedSection::Plain(s) = resolve_section(m, &a.input)? else {
        return Err(usage("the section is already shaped"));
    };
    if s.mode != Mode::Discrete {
        return Err(usage("shaping applies to discrete sections"));
    }
    let target = match a.target {
        TargetArg::Finite => ShapeTarget::FiniteMeasure,
        TargetArg::Bounded => ShapeTarget::Bounded,
    };
    emit(m, &shape(&s, target)?, a.out.out.as_deref(), None)
}

fn solve(a: SolveArgs, m: &mut RunManifest) -> CliResult<i32> {
    let s = resolve_section(m, &a.input)?;
    let p = parse_point(&a.point)?;
    if p.len() != s.base().dim() {
        return Err(usage(format!("point has {} coordinates, section dimension is {}", p.len(), s.base().dim())));
    }
    let sol = match &s {
        LoadedSection::Plain(s) => s.solve_orbit(&p)?,
        LoadedSection::Shaped(s) => s.solve_orbit(&p)?,
    };
    emit(m, &sol, a.out.out.as_deref(), None)
}

#[derive(Serialize)]
struct JacobianReport {
    check: &'static str,
    points: usize,
    seed: u64,
    max_relative_deviation: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct DisjointnessReport {
    check: &'static str,
    probes: usize,
    seed: u64,
    violations: usize,
    pass: bool,
}

fn continuous_only(s: &LoadedSection, what: &str) -> CliResult<CrossSection> {
    match s {
        LoadedSection::Plain(s) if s.mode == Mode::Continuous => Ok(s.clone()),
        _ => Err(usage(format!("{what} needs a continuous (unshaped) section"))),
    }
}

fn verify_cmd(a: VerifyArgs, m: &mut RunManifest) -> CliResult<i32> {
    let (samples, seed) = need_samples(a.samples, a.seed, m)?;
    let s = resolve_section(m, &a.input)?;
    let out = a.out.out.as_deref();
    let tiling = |r: TilingReport| -> CliResult<i32> {
        if let Some(d) = &a.dump {
            write_file(d, &verify::records_csv(&r))?;
        }
        emit(m, &r, out, Some(r.pass))
    };
    let no_dump = || if a.dump.is_some() { Err(usage("--dump applies to tiling and Calderón checks")) } else { Ok(()) };
    match a.check {
        CheckArg::Tiling => tiling(match &s {
            LoadedSection::Shaped(sh) => verify::check_shaped_tiling(sh, samples, seed)?,
            LoadedSection::Plain(p) if p.mode == Mode::Discrete => verify::check_section_tiling(p, samples, seed)?,
            LoadedSection::Plain(p) => verify::check_continuous_tiling(p, samples, seed)?,
        }),
        CheckArg::Calderon => tiling(verify::check_calderon(&continuous_only(&s, "calderon")?, samples, seed)?),
        CheckArg::Jacobian => {
            no_dump()?;
            let c = continuous_only(&s, "jacobian")?;
            let dev = verify::jacobian_check(&c, samples, seed)?;
            let pass = dev <= JACOBIAN_TOL;
            m.tolerances.insert("jacobian".into(), JACOBIAN_TOL);
            let r = JacobianReport {
                check: "jacobian",
                points: samples,
                seed,
                max_relative_deviation: dev,
                tolerance: JACOBIAN_TOL,
                pass,
            };
            emit(m, &r, out, Some(pass))
        }
        CheckArg::Disjointness => {
            no_dump()?;
            let LoadedSection::Plain(p) = &s else { return Err(usage("disjointness probes need an unshaped section")) };
            let violations = verify::disjointness_probe(p, samples, seed)?;
            let r = DisjointnessReport { check: "disjointness", probes: samples, seed, violations, pass: violations == 0 };
            emit(m, &r, out, Some(r.pass))
        }
    }
}

#[derive(Serialize)]
struct EstimateJson {
    value: f64,
    error: f64,
    evals: usize,
}

impl From<xsect_core::quadrature::Estimate> for EstimateJson {
    fn from(e: xsect_core::quadrature::Estimate) -> Self {
        EstimateJson { value: e.value, error: e.error, evals: e.evals }
    }
}

#[derive(Serialize)]
struct MonteCarloJson {
    value: f64,
    three_sigma: f64,
    samples: usize,
    seed: u64,
}

#[derive(Serialize)]
struct IntegralReport {
    function: &'static str,
    dimension: usize,
    orbit: EstimateJson,
    direct: EstimateJson,
    relative_difference: f64,
    tolerance: f64,
    monte_carlo: Option<MonteCarloJson>,
    pass: bool,
}

fn integrate(a: IntegrateArgs, m: &mut RunManifest) -> CliResult<i32> {
    let mc = match (a.samples, a.seed) {
        (None, None) => None,
        (samples, seed) => Some(need_samples(samples, seed, m)?),
    };
    let s = continuous_only(&resolve_section(m, &a.input)?, "integrate")?;
    let n = s.dim();
    let (name, center) = match a.function {
        FunctionArg::Gaussian => ("gaussian", 0.0),
        FunctionArg::ShiftedGaussian => ("shifted_gaussian", 0.5),
    };
    let norm = (2.0 * std::f64::consts::PI).powf(n as f64 / 2.0);
    let f = move |x: &[f64]| (-0.5 * x.iter().map(|v| (v - center).powi(2)).sum::<f64>()).exp() / norm;
    let factor = move |_: usize, x: f64| (-0.5 * (x - center).powi(2)).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let opts = verify::orbit_quad_options_for(n);
    m.tolerances.insert("orbit_rel_tol".into(), opts.rel_tol);
    m.tolerances.insert("integral_agreement".into(), INTEGRAL_TOL);
    let orbit = verify::orbit_integral(&f, &s, opts)?;
    // Both test functions are separable, so the oracle is a product of 1D quadratures.
    let direct = verify::separable_integral(factor, n, QuadOptions::default())?;
    let rel = (orbit.value - direct.value).abs() / direct.value.abs();
    let monte_carlo = mc.map(|(samples, seed)| {
        let (value, three_sigma) = verify::monte_carlo_integral(&f, n, 1.5, samples, seed);
        MonteCarloJson { value, three_sigma, samples, seed }
    });
    let pass = rel <= INTEGRAL_TOL;
    let r = IntegralReport {
        function: name,
        dimension: n,
        orbit: orbit.into(),
        direct: direct.into(),
        relative_difference: rel,
        tolerance: INTEGRAL_TOL,
        monte_carlo,
        pass,
    };
    emit(m, &r, a.out.out.as_deref(), Some(pass))
}

#[derive(Serialize)]
struct PartitionOutput {
    order: Order,
    pieces: Vec<RegionSet>,
    verification: wavelet::PartitionReport,
    pass: bool,
}

#[derive(Serialize)]
struct DimensionValue {
    point: Vec<f64>,
    count: usize,
    truncated: bool,
}

fn required<'a, T>(v: &'a Option<T>, flag: &str, action: WaveletAction) -> CliResult<&'a T> {
    v.as_ref().ok_or_else(|| usage(format!("wavelet {} needs --{flag}", action.name())))
}

fn wavelet_cmd(a: WaveletArgs, m: &mut RunManifest) -> CliResult<i32> {
    check_tol(a.tol)?;
    if !(a.radius.is_finite() && a.radius > 0.0) {
        return Err(usage("--radius must be positive"));
    }
    m.tolerances.insert("tol".into(), a.tol);
    m.tolerances.insert("radius".into(), a.radius);
    let act = a.action;
    let out = a.out.out.as_deref();
    let matrix = match &a.matrix {
        Some(p) => Some(read_matrix(m, "matrix", p)?),
        None => None,
    };
    let region = match &a.region {
        Some(p) => Some(read_region(m, p)?),
        None => None,
    };
    let dim = matrix.as_ref().map(Matrix::dim).or_else(|| region.as_ref().and_then(RegionSet::dim));
    let lattice = match (&a.lattice, dim) {
        (Some(p), _) => read_lattice(m, p)?,
        (None, Some(n)) => Lattice::integer(n),
        (None, None) => return Err(usage("cannot infer the dimension; give --lattice")),
    };
    if a.dump.is_some() && !matches!(act, WaveletAction::BuildInf) {
        return Err(usage("--dump applies to wavelet build-inf"));
    }
    match act {
        WaveletAction::Check => {
            let k = required(&region, "region", act)?;
            let am = required(&matrix, "matrix", act)?;
            let order = *required(&a.order, "order", act)?;
            let (samples, seed) = need_samples(a.samples, a.seed, m)?;
            let min_inf = a.pieces.unwrap_or(DEFAULT_PIECES);
            let r = is_multiwavelet_set(k, am, &lattice, order, samples, seed, a.radius, min_inf)?;
            emit(m, &r, out, Some(r.pass))
        }
        WaveletAction::Partition => {
            let k = required(&region, "region", act)?;
            let order = *required(&a.order, "order", act)?;
            let (samples, seed) = need_samples(a.samples, a.seed, m)?;
            let pieces = partition_multiwavelet_set(k, &lattice, order, a.pieces.unwrap_or(DEFAULT_PIECES), a.radius)?;
            let verification = check_partition(k, &pieces, &lattice, order, samples, seed, a.radius)?;
            let pass = verification.pass;
            emit(m, &PartitionOutput { order, pieces, verification, pass }, out, Some(pass))
        }
        WaveletAction::Dimfn => {
            let w = required(&region, "region", act)?;
            let p = parse_point(required(&a.point, "point", act)?)?;
            if p.len() != lattice.dim() {
                return Err(usage(format!("point has {} coordinates, lattice dimension is {}", p.len(), lattice.dim())));
            }
            let c = if a.lattice.is_some() {
                translation_count(w, &lattice, &p, a.radius)?
            } else {
                dimension_function(w, &p, a.radius)?
            };
            emit(m, &DimensionValue { point: p, count: c.count, truncated: c.truncated }, out, None)
        }
        WaveletAction::BuildInf => {
            let am = required(&matrix, "matrix", act)?;
            let pieces = a.pieces.unwrap_or(DEFAULT_PIECES);
            if pieces == 0 {
                return Err(usage("--pieces must be at least 1"));
            }
            let k = build_order_infinity_set(am, &lattice, pieces, a.tol)?;
            if let Some(d) = &a.dump {
                write_file(d, &region_grid(&k, &a.grid)?.0)?;
            }
            emit(m, &k, out, None)
        }
    }
}

#[derive(Serialize)]
struct ExportSummary {
    kind: &'static str,
    rows: usize,
    columns: Vec<String>,
}

fn export(a: ExportArgs, m: &mut RunManifest) -> CliResult<i32> {
    let (csv, kind) = match &a.region {
        Some(p) => {
            if a.input.section.is_some() || a.input.matrix.matrix.is_some() || a.input.matrix.generator.is_some() {
                return Err(usage("export takes a section or a region, not both"));
            }
            (region_grid(&read_region(m, p)?, &a.grid)?, "region")
        }
        None => (section_grid(&resolve_section(m, &a.input)?, &a.grid)?, "section"),
    };
    write_file(&a.dump, &csv.0)?;
    let mut lines = csv.0.lines();
    let columns = lines.next().unwrap_or("").split(',').map(String::from).collect();
    emit(m, &ExportSummary { kind, rows: lines.count(), columns }, None, None)
}

struct Csv(String);

fn grid_box(n: usize, grid: &GridArgs) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let e = grid.extent.unwrap_or(DEFAULT_EXTENT);
    if !(e.is_finite() && e > 0.0) {
        return Err(usage("--extent must be positive"));
    }
    Ok((vec![-e; n], vec![e; n]))
}

fn section_grid(s: &LoadedSection, grid: &GridArgs) -> CliResult<Csv> {
    let n = s.base().dim();
    let (lo, hi) = grid_box(n, grid)?;
    let cols = ["member", "parameter"];
    let csv = match s {
        LoadedSection::Plain(s) => verify::grid_csv(&lo, &hi, grid.grid, &cols, |g| verify::section_row(s, g))?,
        LoadedSection::Shaped(s) => verify::grid_csv(&lo, &hi, grid.grid, &cols, |g| shaped_row(s, g))?,
    };
    Ok(Csv(csv))
}

fn shaped_row(s: &ShapedSection, g: &[f64]) -> Vec<String> {
    match (s.contains(g), s.solve_orbit(g)) {
        (Ok(m), Ok(sol)) => vec![(m as u8).to_string(), format!("{}", sol.parameter.as_f64())],
        _ => vec!["exceptional".into(), String::new()],
    }
}

fn region_grid(k: &RegionSet, grid: &GridArgs) -> CliResult<Csv> {
    let n = k.dim().unwrap_or(0);
    let (lo, hi, res) = match (grid.extent, k.as_boxes()) {
        (None, Some(b)) => match boxes::bounding_box(b) {
            Some(bb) => (bb.lo, bb.hi, grid.grid),
            // Nothing to sample: header only.
            None => (vec![0.0; n], vec![0.0; n], 0),
        },
        _ => {
            let (lo, hi) = grid_box(n, grid)?;
            (lo, hi, grid.grid)
        }
    };
    let csv = verify::grid_csv(&lo, &hi, res, &["member"], |g| {
        vec![match k.contains(g) {
            Ok(b) => (b as u8).to_string(),
            Err(_) => "exceptional".into(),
        }]
    })?;
    Ok(Csv(csv))
}

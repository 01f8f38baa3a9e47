use std::f64::consts::PI;
use std::path::PathBuf;

use rayon::prelude::*;
use ring_ladder::analytic::{classify as classify_one, ClassifyOptions, ModulusForm, RegimeReport};
use ring_ladder::meanfield::{integrate, IntegrateOptions};
use ring_ladder::mqst::{portrait as portrait_curves, portrait_csv, PortraitOptions};
use ring_ladder::qubit::{find_minima, QubitParams, MIN_RESOLUTION};
use ring_ladder::setup::{reduce_params, spacing, MicroParams, SystemParams};
use ring_ladder::verify::{branch_matrix, compare_case, extra_cases, Case, CompareOptions, Comparison};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{
    ClassifyBlock, CompareBlock, Format, IntegrateBlock, MicroBlock, OutputBlock, PortraitBlock, QubitBlock,
    SetupBlock, SweepBlock, SystemBlock, Violations,
};
use crate::{emit, table, Failure};

struct Initial {
    params: SystemParams,
    z0: f64,
    theta0: f64,
}

fn check_system(v: &mut Violations, s: &SystemBlock, need_z0: bool) -> Option<Initial> {
    let lr = v.required(s.lambda_rho, "lambda-rho");
    let delta = v.required(s.delta, "delta");
    let z0 = if need_z0 { v.required(s.z0, "z0") } else { s.z0.or(Some(0.0)) };
    let theta0 = s.theta0.unwrap_or(0.0);
    if let Some(x) = lr {
        v.check(x.is_finite() && x >= 0.0, "lambda-rho", x, "finite and >= 0");
    }
    if let Some(x) = delta {
        v.check(x.is_finite(), "delta", x, "finite");
    }
    if let Some(x) = z0 {
        v.check(x.abs() <= 1.0, "z0", x, "|z0| <= 1");
    }
    v.check(theta0.is_finite(), "theta0", theta0, "finite");
    Some(Initial {
        params: SystemParams::new(lr?, delta?),
        z0: z0?,
        theta0,
    })
}

fn check_integrate(v: &mut Violations, b: &IntegrateBlock, base: IntegrateOptions, s_max: f64) -> (IntegrateOptions, f64) {
    let opts = IntegrateOptions {
        rel_tol: b.rel_tol.unwrap_or(base.rel_tol),
        abs_tol: b.abs_tol.unwrap_or(base.abs_tol),
        sample_ds: b.sample_ds.unwrap_or(base.sample_ds),
        ..base
    };
    let s_max = b.s_max.unwrap_or(s_max);
    v.check(s_max.is_finite() && s_max > 0.0, "s-max", s_max, "finite and > 0");
    for (flag, x) in [("rel-tol", opts.rel_tol), ("abs-tol", opts.abs_tol)] {
        v.check(x > 0.0 && x <= 1e-3, flag, x, "0 < tol <= 1e-3");
    }
    v.check(
        opts.sample_ds.is_finite() && opts.sample_ds > 0.0,
        "sample-ds",
        opts.sample_ds,
        "finite and > 0",
    );
    (opts, s_max)
}

fn check_classify(v: &mut Violations, c: &ClassifyBlock) -> ClassifyOptions {
    let mut opts = ClassifyOptions::default();
    if let Some(x) = c.degenerate_tol {
        v.check(x.is_finite() && x >= 0.0, "degenerate-tol", x, "finite and >= 0");
        opts.degenerate_tol = x;
    }
    if let Some(x) = c.separatrix_tol {
        v.check(x.is_finite() && x >= 0.0, "separatrix-tol", x, "finite and >= 0");
        opts.separatrix_tol = x;
    }
    opts
}

fn format_or(o: &OutputBlock, default: Format) -> Format {
    o.format.unwrap_or(default)
}

pub fn simulate(s: SystemBlock, i: IntegrateBlock, out: OutputBlock) -> Result<(), Failure> {
    let mut v = Violations::default();
    let init = check_system(&mut v, &s, true);
    let (opts, s_max) = check_integrate(&mut v, &i, IntegrateOptions::default(), 20.0);
    v.finish()?;
    let init = init.expect("validated");
    let traj = integrate(&init.params, init.z0, init.theta0, s_max, &opts)?;
    if traj.meta.singular {
        eprintln!("warning: |Z| reached 1 at s = {:?}; trajectory truncated", traj.meta.s_end);
    }
    let text = match format_or(&out, Format::Csv) {
        Format::Csv => traj.to_csv(),
        Format::Json => table::json(&traj)?,
    };
    emit(&out, &text)
}

fn report_record(r: &RegimeReport) -> Result<Map<String, Value>, Failure> {
    table::record(r)
}

pub fn classify(s: SystemBlock, c: ClassifyBlock, out: OutputBlock) -> Result<(), Failure> {
    let mut v = Violations::default();
    let init = check_system(&mut v, &s, true);
    let copts = check_classify(&mut v, &c);
    v.finish()?;
    let init = init.expect("validated");
    let report = classify_one(&init.params, init.z0, init.theta0, &copts)?;
    let text = match format_or(&out, Format::Json) {
        Format::Json => table::json(&report)?,
        Format::Csv => table::csv(&[report_record(&report)?]),
    };
    emit(&out, &text)
}

fn comparison_record(c: &Comparison) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("case".into(), json!(c.case.name));
    m.insert("branch".into(), json!(c.branch.tag()));
    m.insert("lambda_rho".into(), json!(c.case.lambda_rho));
    m.insert("delta".into(), json!(c.case.delta));
    m.insert("z0".into(), json!(c.case.z0));
    m.insert("theta0".into(), json!(c.case.theta0));
    m.insert("max_abs_error".into(), json!(c.max_abs_error));
    m.insert("period_predicted".into(), json!(c.period_predicted));
    m.insert("period_measured".into(), json!(c.period_measured));
    m.insert("period_rel_error".into(), json!(c.period_rel_error));
    m.insert("mean_predicted".into(), json!(c.mean_predicted));
    m.insert("mean_measured".into(), json!(c.mean_measured));
    m.insert("mean_error".into(), json!(c.mean_error));
    m.insert("passed".into(), json!(c.passed));
    m
}

pub fn compare(
    s: SystemBlock,
    c: ClassifyBlock,
    i: IntegrateBlock,
    t: CompareBlock,
    matrix: bool,
    printed: bool,
    out: OutputBlock,
) -> Result<(), Failure> {
    let mut v = Violations::default();
    let mut opts = CompareOptions {
        classify: check_classify(&mut v, &c),
        ..CompareOptions::default()
    };
    let (integ, s_max) = check_integrate(&mut v, &i, opts.integrate, opts.s_max);
    opts.integrate = integ;
    opts.s_max = s_max;
    for (flag, val, slot) in [
        ("max-abs", t.max_abs, &mut opts.thresholds.max_abs),
        ("period-rel", t.period_rel, &mut opts.thresholds.period_rel),
        ("mean-abs", t.mean_abs, &mut opts.thresholds.mean_abs),
    ] {
        if let Some(x) = val {
            v.check(x.is_finite() && x > 0.0, flag, x, "finite and > 0");
            *slot = x;
        }
    }
    if printed {
        opts = opts.with_modulus(ModulusForm::Printed);
    }
    let cases: Vec<Case> = if matrix {
        branch_matrix().into_iter().chain(extra_cases()).collect()
    } else {
        match check_system(&mut v, &s, true) {
            Some(init) => vec![Case::new("custom", init.params.lambda_rho, init.params.delta, init.z0, init.theta0)],
            None => Vec::new(),
        }
    };
    v.finish()?;

    let results = cases
        .iter()
        .map(|c| compare_case(c, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let text = match format_or(&out, Format::Json) {
        Format::Json => table::json(&results)?,
        Format::Csv => table::csv(&results.iter().map(comparison_record).collect::<Vec<_>>()),
    };
    emit(&out, &text)?;
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{} [{}]: {}", r.case.name, r.branch.tag(), r.failures.join("; ")))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failed.join(" | ")))
    }
}

pub fn portrait(s: SystemBlock, p: PortraitBlock, out: OutputBlock) -> Result<(), Failure> {
    let mut v = Violations::default();
    let init = check_system(&mut v, &s, false);
    let list = p.z0_list.clone().or(s.z0.map(|z| vec![z]));
    if list.is_none() {
        v.push("missing required value --z0-list");
    }
    for z in list.iter().flatten() {
        v.check(z.abs() < 1.0, "z0-list", z, "|z0| < 1");
    }
    let mut opts = PortraitOptions::default();
    if let Some(n) = p.points {
        v.check(n >= 4, "points", n, ">= 4");
        opts.points = n;
    }
    v.finish()?;
    let init = init.expect("validated");
    let curves = portrait_curves(&init.params, &list.expect("validated"), init.theta0, &opts)?;
    let text = match format_or(&out, Format::Csv) {
        Format::Csv => portrait_csv(&curves),
        Format::Json => table::json(&curves)?,
    };
    emit(&out, &text)
}

pub fn landscape(q: QubitBlock, minima: Option<PathBuf>, out: OutputBlock) -> Result<(), Failure> {
    let mut v = Violations::default();
    let mut params = QubitParams::symmetric(
        q.e_j.unwrap_or(1.0),
        q.e_jp_ratio.unwrap_or(0.8),
        q.phi_diff.unwrap_or(PI),
        q.n.unwrap_or(20),
    );
    params.beta = q.beta.unwrap_or(params.beta);
    params.l_max = q.l_max.unwrap_or(params.l_max);
    if let Err(e) = params.validate() {
        v.push(e.to_string());
    }
    let resolution = q.resolution.unwrap_or(128);
    v.check(resolution >= MIN_RESOLUTION, "resolution", resolution, ">= 64");
    v.finish()?;
    let land = find_minima(&params, resolution)?;
    if let Some(path) = minima {
        emit(
            &OutputBlock {
                path: Some(path),
                format: Some(Format::Json),
            },
            &table::json(&land)?,
        )?;
    }
    let text = match format_or(&out, Format::Csv) {
        Format::Csv => land.grid_csv(),
        Format::Json => table::json(&land)?,
    };
    emit(&out, &text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Z0,
    Theta0,
    LambdaRho,
    Delta,
}

impl Axis {
    fn parse(s: &str) -> Option<Axis> {
        match s {
            "z0" => Some(Axis::Z0),
            "theta0" => Some(Axis::Theta0),
            "lambda_rho" | "lambda-rho" => Some(Axis::LambdaRho),
            "delta" => Some(Axis::Delta),
            _ => None,
        }
    }
}

fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

#[derive(Serialize)]
struct SweepRow {
    index: usize,
    #[serde(flatten)]
    report: RegimeReport,
}

pub fn sweep(s: SystemBlock, c: ClassifyBlock, w: SweepBlock, jobs: Option<usize>, out: OutputBlock) -> Result<(), Failure> {
    let mut v = Violations::default();
    let axis = match w.axis.as_deref() {
        None => {
            v.push("missing required value --axis");
            None
        }
        Some(a) => {
            let parsed = Axis::parse(a);
            v.check(parsed.is_some(), "axis", a, "one of z0, theta0, lambda_rho, delta");
            parsed
        }
    };
    let range = v.required(w.range.as_deref(), "range");
    if let Some(r) = range {
        v.check(
            r.len() == 2 && r.iter().all(|x| x.is_finite()),
            "range",
            r,
            "two finite numbers",
        );
    }
    let copts = check_classify(&mut v, &c);
    let steps = v.required(w.steps, "steps");
    if let Some(n) = steps {
        v.check(n >= 1, "steps", n, ">= 1");
    }
    if let Some(j) = jobs {
        v.check(j >= 1, "jobs", j, ">= 1");
    }
    // The swept quantity needs no base value.
    let mut base = s.clone();
    match axis {
        Some(Axis::Z0) => base.z0 = base.z0.or(Some(0.0)),
        Some(Axis::LambdaRho) => base.lambda_rho = base.lambda_rho.or(Some(0.0)),
        Some(Axis::Delta) => base.delta = base.delta.or(Some(0.0)),
        _ => {}
    }
    let init = check_system(&mut v, &base, true);
    v.finish()?;
    let (axis, init) = (axis.expect("validated"), init.expect("validated"));
    let range = range.expect("validated");
    let values = grid(range[0], range[1], steps.expect("validated"));

    let point = |x: f64| {
        let (mut p, mut z0, mut th) = (init.params, init.z0, init.theta0);
        match axis {
            Axis::Z0 => z0 = x,
            Axis::Theta0 => th = x,
            Axis::LambdaRho => p.lambda_rho = x,
            Axis::Delta => p.delta = x,
        }
        classify_one(&p, z0, th, &copts)
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::Runtime(format!("cannot start worker pool: {e}")))?;
    // Indexed collection keeps input order whatever the completion order.
    let reports: Vec<_> = pool.install(|| values.par_iter().map(|&x| point(x)).collect());
    let rows = reports
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map(|report| SweepRow { index, report })
                .map_err(|e| Failure::from(e).at(index, values[index]))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let text = match format_or(&out, Format::Csv) {
        Format::Json => table::json(&rows)?,
        Format::Csv => table::csv(&rows.iter().map(table::record).collect::<Result<Vec<_>, _>>()?),
    };
    emit(&out, &text)
}

impl Failure {
    fn at(self, index: usize, x: f64) -> Failure {
        let tag = format!("sweep point {index} ({x:?})");
        match self {
            Failure::Config(list) => Failure::Config(list.into_iter().map(|m| format!("{tag}: {m}")).collect()),
            Failure::Runtime(m) => Failure::Runtime(format!("{tag}: {m}")),
            other => other,
        }
    }
}

fn micro_params(v: &mut Violations, m: &MicroBlock) -> Option<MicroParams> {
    let req = |v: &mut Violations, x: Option<f64>, name: &str| {
        if x.is_none() {
            v.push(format!("missing required value micro.{name}"));
        }
        x
    };
    let g = req(v, m.g, "g");
    let u = req(v, m.u, "U");
    let n_t = req(v, m.n_t, "N_T");
    let n = m.n;
    if n.is_none() {
        v.push("missing required value micro.N");
    }
    Some(MicroParams {
        t: m.t.unwrap_or(0.0),
        g: g?,
        u: u?,
        mu_a: m.mu_a.unwrap_or(0.0),
        mu_b: m.mu_b.unwrap_or(0.0),
        phi_a: m.phi_a.unwrap_or(0.0),
        phi_b: m.phi_b.unwrap_or(0.0),
        n: n?,
        n_t: n_t?,
    })
}

pub fn setup_params(s: SetupBlock, micro: Option<MicroBlock>, out: OutputBlock) -> Result<(), Failure> {
    let mut v = Violations::default();
    let wavelength = s.wavelength.unwrap_or(830e-9);
    let focal = s.focal_length.unwrap_or(40e-3);
    let seps = s.beam_separation.clone().unwrap_or_else(|| vec![5.5e-3, 19.6e-3]);
    v.check(wavelength.is_finite() && wavelength > 0.0, "wavelength", wavelength, "finite and > 0");
    v.check(focal.is_finite() && focal > 0.0, "focal-length", focal, "finite and > 0");
    v.check(!seps.is_empty(), "beam-separation", &seps, "at least one value");
    for d in &seps {
        v.check(d.is_finite() && *d > 0.0, "beam-separation", d, "finite and > 0");
    }
    let micro = micro.as_ref().map(|m| micro_params(&mut v, m));
    v.finish()?;

    let mut rows = Vec::new();
    for &d in &seps {
        let mut m = Map::new();
        m.insert("wavelength".into(), json!(wavelength));
        m.insert("focal_length".into(), json!(focal));
        m.insert("beam_separation".into(), json!(d));
        m.insert("spacing".into(), json!(spacing(wavelength, focal, d)?));
        rows.push(m);
    }
    let reduced = match micro {
        Some(m) => Some(reduce_params(&m.expect("validated"))?),
        None => None,
    };
    let text = match format_or(&out, Format::Json) {
        Format::Csv => table::csv(&rows),
        Format::Json => table::json(&json!({ "spacings": rows, "reduced": reduced }))?,
    };
    emit(&out, &text)
}

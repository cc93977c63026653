use std::f64::consts::PI;

use num_complex::Complex64;
use weaktherm_core::pointer::{
    estimate_temperature_end_to_end, evolve_and_postselect, first_order_pointer_state, gaussian_pointer, jozsa_readout,
    CouplingParams, PointerConfig, PointerGrid, PointerMoments,
};
use weaktherm_core::precision::{
    build_precision_curve, optimal_temperature_postselection, optimal_temperature_postselection_argmax,
    optimal_temperature_thermalization, rms_error_postselection, strong_scheme_reference, PrecisionModel,
};
use weaktherm_core::qcore::{gibbs_state, CMatrix, HermitianOperator};
use weaktherm_core::weakproto::{
    invert_beta_exact_qubit, invert_beta_high_temperature_qubit, weak_value, weak_value_high_temperature,
    ThermometrySetup, WeakValue, WeakValueMethod,
};

use crate::audit::{run_audit, AUDIT_NAMES};
use crate::config::{CommandSpec, Kind, ParamSpec, Params};
use crate::csv::Table;
use crate::error::{CliError, CliResult};

const fn p(key: &'static str, kind: Kind, default: Option<&'static str>, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind, default, help }
}

const HALF_PI: &str = "1.5707963267948966";
const METHODS: &[&str] = &["exact", "high-t"];

macro_rules! setup_params {
    () => {
        [
            p("e", Kind::FloatList, Some("0,1"), "energy levels E1,E2"),
            p("obs", Kind::Text, Some("sy"), "observable: sx, sy, sz or a file with a 2x2 complex matrix"),
            p("xi", Kind::Float, Some(HALF_PI), "post-selection polar angle (radians)"),
            p("nu", Kind::Float, Some("0"), "post-selection azimuthal angle (radians)"),
        ]
    };
}

macro_rules! pointer_params {
    () => {
        [
            p("g-tau", Kind::Float, Some("0.01"), "coupling strength g*tau"),
            p("sigma", Kind::Float, Some("1"), "pointer width"),
            p("half-width", Kind::Float, Some("20"), "pointer grid half width L"),
            p("n-points", Kind::Count, Some("512"), "pointer grid points (power of two)"),
        ]
    };
}

const fn cat<const A: usize, const B: usize, const C: usize>(a: [ParamSpec; A], b: [ParamSpec; B]) -> [ParamSpec; C] {
    let mut out = [p("", Kind::Text, None, ""); C];
    let mut i = 0;
    while i < A {
        out[i] = a[i];
        i += 1;
    }
    let mut j = 0;
    while j < B {
        out[A + j] = b[j];
        j += 1;
    }
    out
}

const WEAKVALUE: [ParamSpec; 7] = cat(
    setup_params!(),
    [
        p("beta", Kind::FloatList, None, "inverse temperature(s); default 1"),
        p("t", Kind::FloatList, None, "temperature(s), alternative to beta"),
        p("method", Kind::Choice(METHODS), Some("exact"), "exact or high-t expansion"),
    ],
);

const INVERT: [ParamSpec; 4] = [
    p("re", Kind::Float, Some("0"), "real part of the weak value"),
    p("im", Kind::Float, None, "imaginary part of the weak value"),
    p("gap", Kind::Float, Some("1"), "level spacing E2 - E1"),
    p("method", Kind::Choice(METHODS), Some("exact"), "exact or high-t inversion"),
];

const SWEEP: [ParamSpec; 8] = [
    p("model", Kind::Choice(&["thermalization", "postselection", "qfi"]), None, "error model"),
    p("t-min", Kind::Float, Some("0.05"), "first temperature"),
    p("t-max", Kind::Float, Some("5"), "last temperature"),
    p("t-step", Kind::Float, Some("0.005"), "temperature step"),
    p("xi", Kind::Float, Some(HALF_PI), "post-selection polar angle (thermalization, postselection)"),
    p("nu", Kind::Float, Some("0"), "post-selection azimuthal angle (thermalization)"),
    p("theta", Kind::Float, Some(HALF_PI), "post-selection polar angle (qfi)"),
    p("phi", Kind::Float, Some("0"), "post-selection azimuthal angle (qfi)"),
];

const OPTIMAL_WINDOW: [ParamSpec; 3] = [
    p("model", Kind::Choice(&["thermalization", "postselection"]), None, "error model"),
    p("n-xi", Kind::Count, Some("32"), "polar angle samples"),
    p("n-nu", Kind::Count, Some("32"), "azimuthal angle samples (thermalization)"),
];

const POINTER_SIM: [ParamSpec; 9] = cat(
    setup_params!(),
    cat::<1, 4, 5>([p("beta", Kind::Float, Some("1"), "inverse temperature")], pointer_params!()),
);

const ESTIMATE: [ParamSpec; 11] = cat(
    setup_params!(),
    cat::<3, 4, 7>(
        [
            p("t-true", Kind::Float, Some("1"), "bath temperature"),
            p("shots", Kind::Count, Some("0"), "pointer measurements; 0 uses exact moments"),
            p("seed", Kind::Count, Some("1"), "random seed"),
        ],
        pointer_params!(),
    ),
);

const AUDIT: [ParamSpec; 5] = [
    p("name", Kind::Choice(AUDIT_NAMES), None, "audit to run"),
    p("shots", Kind::Count, Some("100000"), "largest shot count (qcrb)"),
    p("seed", Kind::Count, Some("7"), "random seed"),
    p("replicates", Kind::Count, Some("40"), "repeated estimates per shot count (qcrb)"),
    p("samples", Kind::Count, Some("1000"), "random setups per temperature (temperature-bound, beta-identity)"),
];

pub const COMMANDS: &[CommandSpec] = &[
    CommandSpec { name: "weakvalue", about: "Weak value of the observable on a thermal state", positional: None, params: &WEAKVALUE },
    CommandSpec { name: "invert", about: "Temperature from a measured weak value", positional: None, params: &INVERT },
    CommandSpec { name: "sweep", about: "Precision against temperature for an error model", positional: None, params: &SWEEP },
    CommandSpec {
        name: "optimal-window",
        about: "Optimal temperature over post-selection angles",
        positional: None,
        params: &OPTIMAL_WINDOW,
    },
    CommandSpec { name: "pointer-sim", about: "Exact pointer dynamics against the first-order state", positional: None, params: &POINTER_SIM },
    CommandSpec { name: "estimate", about: "End-to-end temperature estimate from pointer readout", positional: None, params: &ESTIMATE },
    CommandSpec { name: "audit", about: "Numerical consistency audits", positional: Some("name"), params: &AUDIT },
];

pub struct Output {
    pub table: Table,
    pub audit_failures: Vec<String>,
}

impl From<Table> for Output {
    fn from(table: Table) -> Self {
        Self { table, audit_failures: Vec::new() }
    }
}

pub fn run(params: &Params) -> CliResult<Output> {
    match params.command() {
        "weakvalue" => cmd_weakvalue(params).map(Into::into),
        "invert" => cmd_invert(params).map(Into::into),
        "sweep" => cmd_sweep(params).map(Into::into),
        "optimal-window" => cmd_optimal_window(params).map(Into::into),
        "pointer-sim" => cmd_pointer_sim(params).map(Into::into),
        "estimate" => cmd_estimate(params).map(Into::into),
        "audit" => run_audit(params),
        other => Err(CliError::usage(format!("unknown command `{other}`"))),
    }
}

fn parse_observable(spec: &str) -> CliResult<HermitianOperator> {
    match spec {
        "sx" => Ok(HermitianOperator::pauli_x()),
        "sy" => Ok(HermitianOperator::pauli_y()),
        "sz" => Ok(HermitianOperator::pauli_z()),
        path => {
            let text = std::fs::read_to_string(path).map_err(|_| {
                CliError::usage(format!(
                    "observable `{path}` is neither sx, sy, sz nor a readable file with two rows of two complex entries (e.g. `0 -1i`)"
                ))
            })?;
            let entries: Result<Vec<Complex64>, _> =
                text.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).map(str::parse).collect();
            let entries = entries.map_err(|_| CliError::usage(format!("observable file `{path}`: unparseable complex entry")))?;
            if entries.len() != 4 {
                return Err(CliError::usage(format!("observable file `{path}`: expected 4 entries, found {}", entries.len())));
            }
            Ok(HermitianOperator::new(CMatrix::from_row_major(2, entries)?)?)
        }
    }
}

fn setup_from(params: &Params) -> CliResult<ThermometrySetup> {
    let e = params.list("e")?;
    if e.len() != 2 {
        return Err(CliError::usage(format!("`e` needs exactly two levels, got {}", e.len())));
    }
    let obs = parse_observable(params.text("obs")?)?;
    let setup = ThermometrySetup::qubit(e[0], e[1], obs, params.f64("xi")?, params.f64("nu")?)?;
    if !setup.warnings().is_empty() {
        eprintln!("warning: observable commutes with H; weak value carries no temperature information");
    }
    Ok(setup)
}

fn coupling_from(params: &Params) -> CliResult<(PointerConfig, CouplingParams)> {
    let n = usize::try_from(params.count("n-points")?).map_err(|_| CliError::usage("`n-points` is too large"))?;
    let grid = PointerGrid::new(params.f64("half-width")?, n)?;
    let cp = CouplingParams::from_strength(params.f64("g-tau")?)?;
    Ok((PointerConfig { grid, sigma: params.f64("sigma")? }, cp))
}

fn method_name(m: WeakValueMethod) -> &'static str {
    match m {
        WeakValueMethod::Exact => "exact",
        WeakValueMethod::HighTemperature => "high-t",
        WeakValueMethod::ReadoutEstimate => "readout",
    }
}

fn cmd_weakvalue(params: &Params) -> CliResult<Table> {
    let setup = setup_from(params)?;
    let betas = match (params.has("beta"), params.has("t")) {
        (true, true) => return Err(CliError::usage("give either `beta` or `t`, not both")),
        (false, true) => {
            let ts = params.list("t")?;
            if ts.iter().any(|&t| t <= 0.0) {
                return Err(CliError::usage("temperatures must be positive"));
            }
            ts.into_iter().map(|t| 1.0 / t).collect()
        }
        (true, false) => params.list("beta")?,
        (false, false) => vec![1.0],
    };
    let high_t = params.text("method")? == "high-t";
    let mut table = Table::new(&["beta", "T", "re_Aw", "im_Aw", "method"]);
    for beta in betas {
        let aw: WeakValue = if high_t { weak_value_high_temperature(&setup, beta) } else { weak_value(&setup, beta)? };
        table.push(vec![
            beta.into(),
            (1.0 / beta).into(),
            aw.value.re.into(),
            aw.value.im.into(),
            method_name(aw.method).into(),
        ]);
    }
    Ok(table)
}

fn cmd_invert(params: &Params) -> CliResult<Table> {
    let value = Complex64::new(params.f64("re")?, params.f64("im")?);
    let gap = params.f64("gap")?;
    let method = params.text("method")?;
    let aw = WeakValue::new(value, WeakValueMethod::ReadoutEstimate)?;
    let beta = if method == "high-t" {
        Complex64::new(invert_beta_high_temperature_qubit(&aw, gap)?, 0.0)
    } else {
        invert_beta_exact_qubit(&aw, gap)?
    };
    let mut table = Table::new(&["re_Aw", "im_Aw", "beta_re", "beta_im", "T", "method"]);
    table.push(vec![value.re.into(), value.im.into(), beta.re.into(), beta.im.into(), (1.0 / beta.re).into(), method.into()]);
    Ok(table)
}

fn temperature_grid(params: &Params) -> CliResult<Vec<f64>> {
    let (lo, hi, step) = (params.f64("t-min")?, params.f64("t-max")?, params.f64("t-step")?);
    if !(lo > 0.0 && hi >= lo && step > 0.0) {
        return Err(CliError::usage("temperature grid needs 0 < t-min <= t-max and t-step > 0"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if n > 10_000_000 {
        return Err(CliError::usage("temperature grid has more than 10^7 points"));
    }
    Ok((0..n).map(|i| lo + step * i as f64).collect())
}

fn cmd_sweep(params: &Params) -> CliResult<Table> {
    let grid = temperature_grid(params)?;
    let model_name = params.text("model")?;
    let (model, angle_names, angles) = match model_name {
        "thermalization" => {
            let (xi, nu) = (params.f64("xi")?, params.f64("nu")?);
            (PrecisionModel::Thermalization { xi, nu }, ["xi", "nu"], [xi, nu])
        }
        "postselection" => {
            let xi = params.f64("xi")?;
            (PrecisionModel::Postselection { xi }, ["xi", "nu"], [xi, f64::NAN])
        }
        _ => {
            let (theta, phi) = (params.f64("theta")?, params.f64("phi")?);
            (PrecisionModel::Qfi { theta, phi }, ["theta", "phi"], [theta, phi])
        }
    };
    let curve = build_precision_curve(model, &grid)?;
    let mut table = Table::new(&["T", "error", "precision", "model", angle_names[0], angle_names[1]]);
    for ((&t, &e), &prec) in curve.t_grid.iter().zip(&curve.error).zip(&curve.precision) {
        table.push(vec![t.into(), e.into(), prec.into(), model_name.into(), angles[0].into(), angles[1].into()]);
    }
    table.summary("T_opt", curve.t_opt);
    table.summary("peak", curve.peak_value);
    table.summary("peak_at_boundary", curve.peak_at_boundary);
    table.summary("flat", curve.flat);
    Ok(table)
}

fn cmd_optimal_window(params: &Params) -> CliResult<Table> {
    let n_xi = params.count("n-xi")? as usize;
    if n_xi == 0 {
        return Err(CliError::usage("`n-xi` must be positive"));
    }
    let strong = strong_scheme_reference()?;
    if params.text("model")? == "thermalization" {
        let n_nu = params.count("n-nu")? as usize;
        if n_nu == 0 {
            return Err(CliError::usage("`n-nu` must be positive"));
        }
        let mut table = Table::new(&["xi", "nu", "T_opt", "peak_precision", "at_boundary"]);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n_xi {
            let xi = PI * (i as f64 + 0.5) / n_xi as f64;
            for j in 0..n_nu {
                let nu = 2.0 * PI * j as f64 / n_nu as f64;
                let opt = optimal_temperature_thermalization(xi, nu)?;
                lo = lo.min(opt.t_opt);
                hi = hi.max(opt.t_opt);
                table.push(vec![xi.into(), nu.into(), opt.t_opt.into(), (1.0 / opt.n_min).into(), opt.at_boundary.into()]);
            }
        }
        table.summary("T_opt_min", lo);
        table.summary("T_opt_max", hi);
        table.summary("strong_reference_T", strong);
        Ok(table)
    } else {
        let mut table = Table::new(&["xi", "T_opt", "T_argmax", "peak_precision"]);
        let mut temps = Vec::with_capacity(n_xi);
        for i in 0..n_xi {
            let xi = if n_xi == 1 { 0.0 } else { PI * i as f64 / (n_xi - 1) as f64 };
            let t = optimal_temperature_postselection(xi)?;
            let ta = optimal_temperature_postselection_argmax(xi)?;
            let peak = 1.0 / rms_error_postselection(1.0 / t, 1.0, xi)?;
            temps.push(t);
            table.push(vec![xi.into(), t.into(), ta.into(), peak.into()]);
        }
        table.summary("T_opt_min", temps.iter().copied().fold(f64::INFINITY, f64::min));
        table.summary("T_opt_max", temps.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        table.summary("strong_reference_T", strong);
        Ok(table)
    }
}

fn cmd_pointer_sim(params: &Params) -> CliResult<Table> {
    let setup = setup_from(params)?;
    let (cfg, cp) = coupling_from(params)?;
    let beta = params.f64("beta")?;
    let pointer = gaussian_pointer(cfg.grid, cfg.sigma)?;
    let rho = gibbs_state(setup.spectrum(), beta)?;
    let (out, success) = evolve_and_postselect(&rho, &setup, &pointer, cp)?;
    let aw = weak_value(&setup, beta)?;
    let eta = first_order_pointer_state(&aw, &pointer, cp)?;
    let exact_p = out.position_probabilities();
    let first_p = eta.position_probabilities();
    let dx = cfg.grid.dx();
    let mut table = Table::new(&["x", "density_exact", "density_first_order"]);
    for (j, x) in cfg.grid.positions().into_iter().enumerate() {
        table.push(vec![x.into(), (exact_p[j] / dx).into(), (first_p[j] / dx).into()]);
    }
    table.summary("re_Aw", aw.value.re);
    table.summary("im_Aw", aw.value.im);
    match jozsa_readout(&out, &pointer, cp) {
        Ok(read) => {
            table.summary("re_Aw_readout", read.value.re);
            table.summary("im_Aw_readout", read.value.im);
        }
        Err(e) => eprintln!("note: moment readout skipped: {e}"),
    }
    table.summary("trace_distance", out.trace_distance_to_pure(&eta)?);
    table.summary("success_probability", success);
    Ok(table)
}

fn cmd_estimate(params: &Params) -> CliResult<Table> {
    let setup = setup_from(params)?;
    let (cfg, cp) = coupling_from(params)?;
    let t_true = params.f64("t-true")?;
    let shots = params.count("shots")?;
    let seed = params.count("seed")?;
    let n = usize::try_from(shots).map_err(|_| CliError::usage("`shots` is too large"))?;
    let est = estimate_temperature_end_to_end(t_true, &setup, cfg, cp, n, seed)?;
    let mut table = Table::new(&["T_true", "T_hat", "stderr", "n_shots", "seed", "failed"]);
    table.push(vec![t_true.into(), est.t_hat.into(), est.stderr.into(), shots.into(), seed.into(), est.failed.into()]);
    table.summary("re_Aw_readout", est.weak_value.value.re);
    table.summary("im_Aw_readout", est.weak_value.value.im);
    table.summary("pointer_moment", est.pointer_moment);
    table.summary("success_probability", est.success_probability);
    table.summary("bootstrap_failures", est.bootstrap_failures);
    if est.failed {
        eprintln!("warning: inversion gave a non-positive inverse temperature");
    }
    Ok(table)
}

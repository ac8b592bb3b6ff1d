//! One function per command. Each returns the CSV files it produced and a
//! small set of summary values for the manifest.

use std::fs;

use pdlab::analysis::{self, DecayFit};
use pdlab::classical::classical_trajectory;
use pdlab::dtwa::{self, DtwaOptions};
use pdlab::floquet::{self, FloquetOperator, QuantumState};
use pdlab::fock::{EvenSector, FockBasis};
use pdlab::gpe::{self, FreeIntegrator, GpeEngine, GpeState};
use pdlab::io::{format_float, write_table};
use pdlab::mirror_block;
use pdlab::oracle::full_floquet_evolve;
use pdlab::{ModelParams, RecordMeta, TrajectoryRecord, TwiceSpin};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{CliError, Config, RunOutput};

const COMMON: &[&str] = &["command", "name", "out", "workers"];
const PHYSICS: &[&str] = &["J", "h", "K", "tau", "phi"];

/// Periods and tolerance of the step-doubling convergence check.
const CONVERGENCE_PERIODS: usize = 100;
const CONVERGENCE_TOL: f64 = 1e-8;
/// Trajectories used to probe DTWA step convergence.
const CONVERGENCE_PROBES: usize = 8;
/// First step count tried when `steps = auto`.
const AUTO_START: usize = 16;

pub const COMMANDS: &[&str] = &[
    "ed-evolve",
    "ed-tstar-scan",
    "ed-rstat",
    "oracle-compare",
    "gpe-evolve",
    "gpe-rabi-scan",
    "gpe-lyapunov-scan",
    "dtwa-evolve",
    "dtwa-decay-scan",
    "classical-evolve",
    "fit",
    "crossings",
];

/// Accepted configuration keys for `command`, or `None` if unknown.
pub fn allowed_keys(command: &str) -> Option<Vec<&'static str>> {
    let specific: &[&str] = match command {
        "ed-evolve" => &["l", "N", "n_max"],
        "ed-tstar-scan" => &["l_list", "N_list", "n_max"],
        "ed-rstat" => &["l", "N", "K_list", "sector"],
        "oracle-compare" => &["l", "N", "n_max"],
        "gpe-evolve" => &["l", "n_max", "integrator", "steps", "init", "epsilon"],
        "gpe-rabi-scan" => &["l_list", "K_list", "samples_log2", "integrator", "steps"],
        "gpe-lyapunov-scan" => &["l_list", "K_list", "periods", "d0", "integrator", "steps"],
        "dtwa-evolve" => &["l", "N", "n_max", "trajectories", "seed", "steps", "include_diagonal"],
        "dtwa-decay-scan" => &["l_list", "N", "n_max", "trajectories", "seed", "steps", "include_diagonal"],
        "classical-evolve" => &["N", "n_max", "steps"],
        "fit" => &["input", "kind", "x", "y", "error", "l", "tau", "n_cut"],
        "crossings" => &["input", "label", "x", "y"],
        _ => return None,
    };
    let physics = !matches!(command, "fit" | "crossings");
    let mut keys: Vec<&str> = COMMON.iter().chain(specific).copied().collect();
    if physics {
        keys.extend_from_slice(PHYSICS);
    }
    Some(keys)
}

pub fn dispatch(command: &str, cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    match command {
        "ed-evolve" => ed_evolve(cfg, name),
        "ed-tstar-scan" => ed_tstar_scan(cfg, name),
        "ed-rstat" => ed_rstat(cfg, name),
        "oracle-compare" => oracle_compare(cfg, name),
        "gpe-evolve" => gpe_evolve(cfg, name),
        "gpe-rabi-scan" => gpe_rabi_scan(cfg, name),
        "gpe-lyapunov-scan" => gpe_lyapunov_scan(cfg, name),
        "dtwa-evolve" => dtwa_evolve(cfg, name),
        "dtwa-decay-scan" => dtwa_decay_scan(cfg, name),
        "classical-evolve" => classical_evolve(cfg, name),
        "fit" => fit(cfg, name),
        "crossings" => crossings(cfg, name),
        other => Err(CliError::Config(format!("unknown command `{other}`"))),
    }
}

fn table(header: &[&str], rows: &[Vec<f64>]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_table(header, rows, &mut buf).expect("writing to memory");
    buf
}

fn csv_name(name: &str) -> String {
    format!("{name}.csv")
}

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn json_f64(x: f64) -> Value {
    if x.is_finite() { json!(x) } else { Value::Null }
}

/// `steps = auto | <integer>`; `None` means auto.
fn steps_setting(cfg: &Config, default: usize) -> Result<Option<usize>, CliError> {
    let text = cfg.str_or("steps", &default.to_string());
    if text == "auto" {
        return Ok(None);
    }
    match text.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Some(n)),
        _ => Err(CliError::Config(format!("`steps` must be `auto` or a positive integer, got `{text}`"))),
    }
}

fn rk4_steps(params: &ModelParams, beta0: &GpeState, setting: Option<usize>) -> Result<usize, CliError> {
    let start = setting.unwrap_or(AUTO_START);
    let found = gpe::converged_steps(params, beta0, start, CONVERGENCE_PERIODS, CONVERGENCE_TOL)?;
    if setting.is_some() && found != start {
        return Err(CliError::Numerical(pdlab::Error::InvalidParams(format!(
            "{start} RK4 steps per period fail the convergence check; {found} needed"
        ))));
    }
    Ok(found)
}

fn gpe_integrator(cfg: &Config, params: &ModelParams, default: &str) -> Result<FreeIntegrator, CliError> {
    match cfg.choice("integrator", default, &["rk4", "exact"])?.as_str() {
        "exact" => Ok(FreeIntegrator::Exact),
        _ => {
            let setting = steps_setting(cfg, gpe::DEFAULT_STEPS_PER_PERIOD)?;
            let steps = rk4_steps(params, &GpeState::fully_up(params), setting)?;
            Ok(FreeIntegrator::Rk4 { steps_per_period: steps })
        }
    }
}

fn record_rows(rec: &TrajectoryRecord) -> Vec<Vec<f64>> {
    let l = rec.meta.params.l();
    rec.times.iter().zip(&rec.values).map(|(n, v)| vec![*n as f64, *v, v / l]).collect()
}

fn ed_evolve(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let p = cfg.model_params(true)?;
    let n_max = cfg.usize_or("n_max", 1000)?;
    let basis = FockBasis::enumerate(p.n_sites, p.spin)?;
    let u = FloquetOperator::build(&basis, &p)?;
    let rec = floquet::evolve_stroboscopic(&u, &QuantumState::fully_up(&basis), n_max)?;
    let mut out = RunOutput::new("ed");
    out.add_file(csv_name(name), table(&["n", "O", "O_over_l"], &record_rows(&rec)));
    out.result("dimension", json!(basis.dim()));
    out.result("first_zero", json!(floquet::first_zero(&rec.values)));
    Ok(out)
}

fn ed_tstar_scan(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let base = cfg.model_params(false)?;
    let spins = cfg.spin_list_or("l_list", "1")?;
    let sizes = cfg.usize_list_or("N_list", "20, 40, 80")?;
    let n_max = cfg.usize_or("n_max", 100_000)?;
    let mut rows = Vec::new();
    // Sequential: each item already runs a parallel dense eigensolver.
    for &spin in &spins {
        for &n in &sizes {
            let p = base.with_spin(spin).with_sites(n);
            let basis = FockBasis::enumerate(n, spin)?;
            let u = FloquetOperator::build(&basis, &p)?;
            let t = floquet::evolve_until_zero(&u, &QuantumState::fully_up(&basis), n_max)?;
            rows.push(vec![spin.value(), n as f64, basis.dim() as f64, opt(t.map(|x| x as f64))]);
        }
    }
    let mut out = RunOutput::new("ed");
    out.add_file(csv_name(name), table(&["l", "N", "dim", "tstar"], &rows));
    Ok(out)
}

fn ed_rstat(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let base = cfg.model_params(true)?;
    let ks = cfg.f64_list_or("K_list", "0.3")?;
    let sector = cfg.choice("sector", "even", &["even", "full", "even-orbitals"])?;
    let mut rows = Vec::new();
    let mut out = RunOutput::new("ed");
    if sector == "even-orbitals" {
        for &k in &ks {
            rows.push(vec![k, mirror_block::even_orbital_ratio(&base.with_k(k))?]);
        }
        out.result("dimension", json!(mirror_block::even_orbital_dimension(base.spin, base.n_sites)));
    } else {
        let basis = FockBasis::enumerate(base.n_sites, base.spin)?;
        for &k in &ks {
            let u = FloquetOperator::build(&basis, &base.with_k(k))?;
            let r = if sector == "even" {
                floquet::level_spacing_ratio(&u, &basis)?
            } else {
                floquet::full_spectrum_ratio(&u)?
            };
            rows.push(vec![k, r]);
        }
        out.result("dimension", json!(basis.dim()));
        out.result("even_dimension", json!(EvenSector::new(&basis).dim()));
    }
    out.add_file(csv_name(name), table(&["K", "r"], &rows));
    Ok(out)
}

fn oracle_compare(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let p = cfg.model_params(true)?;
    let n_max = cfg.usize_or("n_max", 200)?;
    let oracle = full_floquet_evolve(&p, n_max)?;
    let basis = FockBasis::enumerate(p.n_sites, p.spin)?;
    let u = FloquetOperator::build(&basis, &p)?;
    let ed = floquet::evolve_stroboscopic(&u, &QuantumState::fully_up(&basis), n_max)?;
    let mut worst = 0.0f64;
    let rows: Vec<Vec<f64>> = (0..=n_max)
        .map(|n| {
            let d = (ed.values[n] - oracle.values[n]).abs();
            worst = worst.max(d);
            vec![n as f64, ed.values[n], oracle.values[n], d]
        })
        .collect();
    let mut out = RunOutput::new("oracle");
    out.add_file(csv_name(name), table(&["n", "O_sector", "O_oracle", "abs_diff"], &rows));
    out.result("max_abs_deviation", json!(worst));
    Ok(out)
}

fn gpe_evolve(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let p = cfg.model_params(true)?;
    let n_max = cfg.usize_or("n_max", 10_000)?;
    let beta0 = match cfg.choice("init", "up", &["up", "perturbed"])?.as_str() {
        "perturbed" => GpeState::perturbed(&p, cfg.f64_or("epsilon", gpe::DEFAULT_EPSILON)?)?,
        _ => GpeState::fully_up(&p),
    };
    let integrator = match cfg.choice("integrator", "rk4", &["rk4", "exact"])?.as_str() {
        "exact" => FreeIntegrator::Exact,
        _ => {
            let setting = steps_setting(cfg, gpe::DEFAULT_STEPS_PER_PERIOD)?;
            FreeIntegrator::Rk4 { steps_per_period: rk4_steps(&p, &beta0, setting)? }
        }
    };
    let engine = GpeEngine::new(&p, integrator)?;
    let sz = engine.sz_series(&beta0, n_max)?;
    let l = p.l();
    let rows: Vec<Vec<f64>> = sz
        .iter()
        .enumerate()
        .map(|(n, s)| {
            let o = pdlab::order_parameter(n as u64, *s, 1);
            vec![n as f64, *s, o, o / l]
        })
        .collect();
    let mut out = RunOutput::new("gpe");
    out.add_file(csv_name(name), table(&["n", "sz", "O", "O_over_l"], &rows));
    if let FreeIntegrator::Rk4 { steps_per_period } = integrator {
        out.result("steps_per_period", json!(steps_per_period));
    }
    Ok(out)
}

fn scan_grid(spins: &[TwiceSpin], ks: &[f64]) -> Vec<(TwiceSpin, f64)> {
    spins.iter().flat_map(|&s| ks.iter().map(move |&k| (s, k))).collect()
}

fn gpe_rabi_scan(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let base = cfg.model_params(false)?;
    let spins = cfg.spin_list_or("l_list", "1, 3/2, 2, 5/2")?;
    let ks = cfg.f64_list_or("K_list", "0.3")?;
    let log2 = cfg.usize_or("samples_log2", 18)?;
    if !(12..=26).contains(&log2) {
        return Err(CliError::Config("`samples_log2` must lie in 12..=26".into()));
    }
    let integrators = spins
        .iter()
        .flat_map(|&s| ks.iter().map(move |&k| (s, k)))
        .map(|(s, k)| gpe_integrator(cfg, &base.with_spin(s).with_k(k), "exact"))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = scan_grid(&spins, &ks);
    let rows = grid
        .par_iter()
        .zip(integrators.par_iter())
        .map(|(&(s, k), &integ)| -> Result<Vec<f64>, pdlab::Error> {
            let p = base.with_spin(s).with_k(k);
            let e = GpeEngine::new(&p, integ)?;
            let sz = e.sz_series(&GpeState::fully_up(&p), (1usize << log2) - 1)?;
            let r = gpe::rabi_analysis(&sz)?;
            Ok(vec![s.value(), k, opt(r.omega_rabi), opt(r.omega_peak), r.amplitude, r.amplitude / s.value()])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = RunOutput::new("gpe");
    out.add_file(
        csv_name(name),
        table(&["l", "K", "omega_rabi", "omega_peak", "amplitude", "amplitude_over_l"], &rows),
    );
    Ok(out)
}

fn gpe_lyapunov_scan(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let base = cfg.model_params(false)?;
    let spins = cfg.spin_list_or("l_list", "1")?;
    let ks = cfg.f64_list_or("K_list", "0.3")?;
    let periods = cfg.usize_or("periods", 20_000)?;
    let d0 = cfg.f64_or("d0", gpe::DEFAULT_D0)?;
    let grid = scan_grid(&spins, &ks);
    let integrators = grid
        .iter()
        .map(|&(s, k)| gpe_integrator(cfg, &base.with_spin(s).with_k(k), "exact"))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = grid
        .par_iter()
        .zip(integrators.par_iter())
        .map(|(&(s, k), &integ)| -> Result<Vec<f64>, pdlab::Error> {
            let p = base.with_spin(s).with_k(k);
            let e = GpeEngine::new(&p, integ)?;
            let r = gpe::lyapunov(&e, &GpeState::fully_up(&p), periods, d0)?;
            Ok(vec![s.value(), k, r.per_period, r.per_time])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = RunOutput::new("gpe");
    out.add_file(csv_name(name), table(&["l", "K", "lambda_per_period", "lambda_per_time"], &rows));
    Ok(out)
}

fn dtwa_options(cfg: &Config, params: &ModelParams, seed: u64) -> Result<DtwaOptions, CliError> {
    let include_diagonal = cfg.bool_or("include_diagonal", true)?;
    let setting = steps_setting(cfg, dtwa::DEFAULT_STEPS_PER_PERIOD)?;
    let base = DtwaOptions { steps_per_period: setting.unwrap_or(AUTO_START), include_diagonal };
    let start = base.steps_per_period;
    let found =
        dtwa::converged_steps(params, CONVERGENCE_PROBES, seed, &base, start, CONVERGENCE_PERIODS, CONVERGENCE_TOL)?;
    if setting.is_some() && found != start {
        return Err(CliError::Numerical(pdlab::Error::InvalidParams(format!(
            "{start} steps per period fail the convergence check; {found} needed"
        ))));
    }
    Ok(DtwaOptions { steps_per_period: found, include_diagonal })
}

fn dtwa_evolve(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let p = cfg.model_params(true)?;
    let n_max = cfg.usize_or("n_max", 1000)?;
    let n_r = cfg.usize_or("trajectories", dtwa::DEFAULT_TRAJECTORIES)?;
    let seed = cfg.u64_or("seed", 0)?;
    let opts = dtwa_options(cfg, &p, seed)?;
    let rec = dtwa::dtwa_order_parameter(&p, n_max, n_r, seed, &opts)?.normalized();
    let errors = rec.errors.clone().unwrap_or_default();
    let rows: Vec<Vec<f64>> =
        rec.times.iter().zip(&rec.values).zip(&errors).map(|((n, v), e)| vec![*n as f64, *v, *e]).collect();
    let mut out = RunOutput::new("dtwa");
    out.seed = Some(seed);
    out.add_file(csv_name(name), table(&["n", "O_over_l", "error"], &rows));
    out.result("steps_per_period", json!(opts.steps_per_period));
    Ok(out)
}

fn fit_summary(fit: &DecayFit) -> Value {
    json!({
        "A": fit.a, "delta": fit.delta, "delta_error": fit.delta_error,
        "r_squared": fit.fit.r_squared, "window": [fit.window.0, fit.window.1],
    })
}

fn dtwa_decay_scan(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let base = cfg.model_params(false)?;
    let spins = cfg.spin_list_or("l_list", "1, 3/2, 2, 5/2, 3")?;
    let n_sites = cfg.usize_or("N", 50)?;
    let n_max = cfg.usize_or("n_max", 200_000)?;
    let n_r = cfg.usize_or("trajectories", dtwa::DEFAULT_TRAJECTORIES)?;
    let seed = cfg.u64_or("seed", 0)?;
    let mut rows = Vec::new();
    let mut traj_rows = Vec::new();
    let mut fits = Vec::new();
    let (mut ls, mut deltas, mut tds) = (Vec::new(), Vec::new(), Vec::new());
    for &spin in &spins {
        let p = base.with_spin(spin).with_sites(n_sites);
        let opts = dtwa_options(cfg, &p, seed)?;
        let rec = dtwa::dtwa_until_zero(&p, n_max, n_r, seed, &opts)?;
        let l = spin.value();
        let errs = rec.errors.clone().unwrap_or_default();
        for ((n, v), e) in rec.times.iter().zip(&rec.values).zip(&errs) {
            traj_rows.push(vec![l, *n as f64, v / l, e / l]);
        }
        let fit = analysis::fit_exponential_decay(&rec)?;
        let td = analysis::decay_time(&rec, None).ok();
        let tstar = rec.values.last().filter(|v| **v <= 0.0).map(|_| (rec.len() - 1) as f64);
        rows.push(vec![
            l,
            f64::from(spin.twice()),
            fit.delta,
            fit.delta_error,
            fit.a,
            fit.fit.r_squared,
            opt(tstar),
            opt(td.map(|t| t.t_d)),
            opt(td.and_then(|t| t.error)),
            opts.steps_per_period as f64,
        ]);
        fits.push(json!({ "l": l, "fit": fit_summary(&fit) }));
        ls.push(l);
        deltas.push(fit.delta);
        tds.push(td.map(|t| t.t_d));
    }
    let mut out = RunOutput::new("dtwa");
    out.seed = Some(seed);
    out.add_file(
        csv_name(name),
        table(
            &["l", "twice_l", "delta", "delta_error", "A", "r_squared", "tstar", "t_d", "t_d_error", "steps_per_period"],
            &rows,
        ),
    );
    out.add_file(format!("{name}.trajectories.csv"), table(&["l", "n", "O_over_l", "error"], &traj_rows));
    out.result("fits", Value::Array(fits));
    if ls.len() >= 2 {
        if let Ok(f) = analysis::fit_power_law(&ls, &deltas) {
            out.result("delta_power_law", json!({ "gamma": f.gamma, "gamma_error": f.exponent_error, "r_squared": f.fit.r_squared }));
        }
        let complete: Option<Vec<f64>> = tds.iter().copied().collect();
        if let Some(t) = complete {
            if let Ok(f) = analysis::fit_power_law(&ls, &t) {
                out.result("t_d_power_law", json!({ "gamma": f.exponent, "gamma_error": f.exponent_error, "r_squared": f.fit.r_squared }));
            }
        }
    }
    Ok(out)
}

fn classical_evolve(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let base = cfg.model_params(false)?;
    let p = base.with_sites(cfg.usize_or("N", 50)?);
    let n_max = cfg.usize_or("n_max", 4000)?;
    let steps = match steps_setting(cfg, pdlab::classical::DEFAULT_STEPS_PER_PERIOD)? {
        Some(s) => s,
        None => return Err(CliError::Config("classical-evolve needs an integer `steps`".into())),
    };
    let rec = classical_trajectory(&p, n_max, steps)?;
    let rows: Vec<Vec<f64>> = rec.times.iter().zip(&rec.values).map(|(n, v)| vec![*n as f64, *v]).collect();
    let mut out = RunOutput::new("classical");
    out.add_file(csv_name(name), table(&["n", "O_normalized"], &rows));
    Ok(out)
}

/// Header and numeric columns of a CSV table.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn read(path: &str) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read `{path}`: {e}")))?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Config(format!("`{path}` is empty")))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|_| CliError::Config(format!("`{path}` row {}: non-numeric cell", i + 2)))?;
            if row.len() != header.len() {
                return Err(CliError::Config(format!("`{path}` row {}: wrong number of cells", i + 2)));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("input has no column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn fit(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let input = cfg.required_str("input")?;
    let kind = cfg.choice("kind", "exponential", &["exponential", "power-law", "decay-time"])?;
    let t = Table::read(&input)?;
    let mut out = RunOutput::new("analysis");
    match kind.as_str() {
        "power-law" => {
            let xs = t.column(&cfg.str_or("x", "l"))?;
            let ys = t.column(&cfg.str_or("y", "delta"))?;
            let f = analysis::fit_power_law(&xs, &ys)?;
            let rows: Vec<Vec<f64>> = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| {
                    let model = f.prefactor * x.powf(f.exponent);
                    vec![*x, *y, model, y.ln() - model.ln()]
                })
                .collect();
            out.add_file(csv_name(name), table(&["x", "y", "fitted", "log_residual"], &rows));
            out.result("fit", serde_json::to_value(f).expect("serializable"));
        }
        _ => {
            let spin = cfg.spin_or("l", "1")?;
            let tau = cfg.f64_or("tau", ModelParams::default().tau)?;
            let ns = t.column(&cfg.str_or("x", "n"))?;
            let values = t.column(&cfg.str_or("y", "value"))?;
            let err_col = cfg.str_or("error", "");
            let errors = if err_col.is_empty() { None } else { Some(t.column(&err_col)?) };
            let times: Vec<u64> = ns.iter().map(|n| *n as u64).collect();
            let params = ModelParams { tau, spin, ..ModelParams::default() };
            let meta = RecordMeta { engine: "input".into(), params, seed: None };
            let rec = TrajectoryRecord::new(times, values, errors, meta)?;
            if kind == "exponential" {
                let f = analysis::fit_exponential_decay(&rec)?;
                let rows: Vec<Vec<f64>> = (f.window.0..=f.window.1)
                    .map(|i| {
                        let tt = rec.times[i] as f64 * tau;
                        let y = (rec.values[i] / spin.value()).ln();
                        let model = f.a - f.delta * tt;
                        vec![tt, y, model, y - model]
                    })
                    .collect();
                out.add_file(csv_name(name), table(&["t", "log_O_over_l", "fitted", "residual"], &rows));
                out.result("fit", fit_summary(&f));
            } else {
                let d = analysis::decay_time(&rec, cfg.optional_u64("n_cut")?)?;
                out.add_file(
                    csv_name(name),
                    table(&["t_d", "t_d_error", "n_cut"], &[vec![d.t_d, opt(d.error), d.n_cut as f64]]),
                );
                out.result("decay_time", json!({ "t_d": d.t_d, "error": d.error.map(json_f64), "n_cut": d.n_cut }));
            }
        }
    }
    let fit_json = serde_json::to_string_pretty(&out.results).expect("serializable");
    out.add_file(format!("{name}.json"), (fit_json + "\n").into_bytes());
    Ok(out)
}

fn crossings(cfg: &Config, name: &str) -> Result<RunOutput, CliError> {
    let input = cfg.required_str("input")?;
    let t = Table::read(&input)?;
    let labels = t.column(&cfg.str_or("label", "l"))?;
    let xs_all = t.column(&cfg.str_or("x", "K"))?;
    let ys_all = t.column(&cfg.required_str("y")?)?;
    let mut order: Vec<f64> = Vec::new();
    for l in &labels {
        if !order.contains(l) {
            order.push(*l);
        }
    }
    let mut grid: Option<Vec<f64>> = None;
    let mut curves = Vec::new();
    for &l in &order {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == l).collect();
        let xs: Vec<f64> = idx.iter().map(|&i| xs_all[i]).collect();
        match &grid {
            None => grid = Some(xs),
            Some(g) if *g == xs => {}
            Some(_) => return Err(CliError::Numerical(pdlab::Error::GridMismatch)),
        }
        curves.push((l, idx.iter().map(|&i| ys_all[i]).collect::<Vec<f64>>()));
    }
    let grid = grid.unwrap_or_default();
    let pairs = analysis::crossing_points(&grid, &curves)?;
    let rows: Vec<Vec<f64>> = pairs.iter().map(|(a, b, k)| vec![*a, *b, opt(*k)]).collect();
    let mut out = RunOutput::new("analysis");
    out.add_file(csv_name(name), table(&["label_a", "label_b", "crossing"], &rows));
    out.result(
        "crossings",
        Value::Array(pairs.iter().map(|(a, b, k)| json!({ "a": a, "b": b, "crossing": k.map(json_f64) })).collect()),
    );
    Ok(out)
}

/// Renders a float the way every CSV cell is written.
pub fn cell(x: f64) -> String {
    format_float(x)
}

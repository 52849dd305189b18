//! Experiment pipelines: an N-sweep of local propagations plus one grid
//! oracle run, reduced to error tables and CSV series.

use std::time::Instant;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{Result, ZevcaError};
use crate::grid::{initialize_gaussian, local_density, rayleigh_energy, transmitted_probability, GridState, SplitOperator};
use crate::jet::gaussian_phase_jet;
use crate::observables::{
    accumulate_tunneling, detect_asymptote, detect_plateau, energy_series, validate_setup, EnergySeries,
    TunnelingSeries,
};
use crate::output::{relative_error, OracleSummary, OrderResult, RunOutput, RunSummary, Table, SCHEMA_VERSION};
use crate::par;
use crate::propagator::{propagate, BlowUp, TimeMode, TrajectoryRecord};

/// Width of each edge band watched by the oracle, as a fraction of the box.
pub const ORACLE_EDGE_FRACTION: f64 = 0.02;
/// Density in an edge band above which the periodic box is considered breached.
pub const ORACLE_EDGE_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Leave wall-clock timings out of the summary so reruns are byte-identical.
    pub deterministic: bool,
}

/// Dispatches on `cfg.experiment`.
pub fn run(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput> {
    match cfg.experiment {
        Experiment::Tunnel => run_tunnel(cfg, opts),
        Experiment::Eigen => run_eigen(cfg, opts),
        Experiment::Compare => run_compare(cfg, opts),
    }
}

struct Timed<T> {
    value: T,
    seconds: f64,
}

fn timed<T>(f: impl FnOnce() -> T) -> Timed<T> {
    let start = Instant::now();
    let value = f();
    Timed {
        value,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn check_experiment(cfg: &ExperimentConfig, want: Experiment) -> Result<()> {
    if cfg.experiment != want {
        return Err(ZevcaError::arg(format!(
            "configuration is for {:?}, not {:?}",
            cfg.experiment, want
        )));
    }
    cfg.validate()
        .map_err(|(_, msg)| ZevcaError::config(None, msg))
}

fn propagate_order(cfg: &ExperimentConfig, order: usize, mode: TimeMode) -> Timed<Result<TrajectoryRecord>> {
    timed(|| {
        let g = cfg.gaussian_params()?;
        let jet = gaussian_phase_jet(&g, cfg.x0, order, cfg.hbar);
        propagate(&jet, &cfg.potential, &cfg.integration.to_config(), mode, cfg.particle())
    })
}

/// Samples recorded by the grid oracle.
struct OracleTrace<R> {
    times: Vec<f64>,
    samples: Vec<R>,
    max_edge: f64,
}

/// Runs the split-operator oracle to `cfg.oracle_t_final()`, sampling every
/// `record_stride` steps and at the end. Steps are `dt` except a shorter
/// final one, so the sample times line up with the local propagator's.
fn run_oracle<R>(
    cfg: &ExperimentConfig,
    mode: TimeMode,
    mut sample: impl FnMut(&GridState) -> R,
) -> Result<OracleTrace<R>> {
    let o = &cfg.oracle;
    let spec = o.grid();
    let particle = cfg.particle();
    let g = cfg.gaussian_params()?;
    let t_final = cfg.oracle_t_final();
    let mut state = initialize_gaussian(spec, &g, particle)?;
    let n_steps = (t_final / o.dt - 1e-9).ceil() as usize;
    let last_dt = t_final - (n_steps - 1) as f64 * o.dt;
    let mut op = SplitOperator::new(spec, &cfg.potential, particle, o.dt, mode)?;
    let mut last_op = if (last_dt - o.dt).abs() > 1e-12 * o.dt {
        Some(SplitOperator::new(spec, &cfg.potential, particle, last_dt, mode)?)
    } else {
        None
    };

    let mut trace = OracleTrace {
        times: vec![0.0],
        samples: vec![sample(&state)],
        max_edge: state.edge_density(ORACLE_EDGE_FRACTION),
    };
    for i in 1..=n_steps {
        let last = i == n_steps;
        match (&mut last_op, last) {
            (Some(op_end), true) => op_end.step(&mut state)?,
            _ => op.step(&mut state)?,
        }
        if i % o.record_stride == 0 || last {
            let t = if last { t_final } else { i as f64 * o.dt };
            if !state.is_finite() {
                return Err(ZevcaError::Oracle(format!("grid state turned non-finite at t = {t}")));
            }
            let edge = state.edge_density(ORACLE_EDGE_FRACTION);
            trace.max_edge = trace.max_edge.max(edge);
            if edge > ORACLE_EDGE_LIMIT {
                return Err(ZevcaError::Oracle(format!(
                    "density {edge:.3e} reached the box edge at t = {t}; widen [xmin, xmax]"
                )));
            }
            trace.times.push(t);
            trace.samples.push(sample(&state));
        }
    }
    Ok(trace)
}

fn oracle_summary<R>(trace: &OracleTrace<R>, value: f64, seconds: f64, opts: RunOptions) -> OracleSummary {
    OracleSummary {
        value,
        samples: trace.times.len(),
        max_edge_density: trace.max_edge,
        wall_seconds: (!opts.deterministic).then_some(seconds),
    }
}

fn failed_order(order: usize, err: &ZevcaError, seconds: f64, opts: RunOptions) -> OrderResult {
    OrderResult {
        order,
        value: None,
        relative_error: None,
        converged: false,
        blow_up: None,
        failure: Some(err.to_string()),
        saturated_samples: 0,
        max_deviation: None,
        rms_deviation: None,
        wall_seconds: (!opts.deterministic).then_some(seconds),
    }
}

fn window(cfg: &ExperimentConfig, times: &[f64]) -> f64 {
    let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    cfg.analysis.window_fraction * span
}

fn max_order(cfg: &ExperimentConfig) -> usize {
    cfg.n_list.iter().copied().max().unwrap_or(0)
}

/// Real-time N-sweep of the cumulative flux through `x0`, against the
/// oracle's transmitted probability `P(x > x0, t) - P(x > x0, 0)`.
pub fn run_tunnel(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput> {
    check_experiment(cfg, Experiment::Tunnel)?;
    let g = cfg.gaussian_params()?;
    let warnings = validate_setup(&cfg.potential, &g, cfg.x0, max_order(cfg), cfg.analysis.thresholds(), cfg.hbar);

    let (sweep, oracle) = par::join(
        || {
            par::map(&cfg.n_list, |&n| {
                let run = propagate_order(cfg, n, TimeMode::RealTime);
                let series = run.value.and_then(|rec| Ok((accumulate_tunneling(&rec)?, rec.blow_up)));
                (n, series, run.seconds)
            })
        },
        || {
            timed(|| {
                let mut p0 = None;
                run_oracle(cfg, TimeMode::RealTime, |s| {
                    let right = transmitted_probability(s, cfg.x0);
                    let base = *p0.get_or_insert(right);
                    (local_density(s, cfg.x0), right - base)
                })
            })
        },
    );
    let oracle_seconds = oracle.seconds;
    let oracle = oracle.value?;
    let reference = oracle.samples.last().map(|s| s.1).unwrap_or(0.0);

    let mut tables = Vec::new();
    let mut results = Vec::new();
    for (n, series, seconds) in sweep {
        let (mut series, blow_up): (TunnelingSeries, Option<BlowUp>) = match series {
            Ok(s) => s,
            Err(e) => {
                results.push(failed_order(n, &e, seconds, opts));
                continue;
            }
        };
        series.asymptote = detect_asymptote(&series, window(cfg, &series.times), cfg.analysis.tol);
        let value = blow_up.is_none().then(|| series.terminal());
        results.push(OrderResult {
            order: n,
            value,
            relative_error: value.map(|v| relative_error(v, reference)),
            converged: series.asymptote.is_some(),
            blow_up,
            failure: None,
            saturated_samples: series.saturated_samples,
            max_deviation: None,
            rms_deviation: None,
            wall_seconds: (!opts.deterministic).then_some(seconds),
        });
        tables.push(Table::from_columns(
            format!("tunnel_N{n}.csv"),
            ["t", "density", "current", "cumulative_T"].map(String::from).to_vec(),
            &[&series.times, &series.density, &series.current, &series.cumulative],
        ));
    }
    let (density, exact): (Vec<f64>, Vec<f64>) = oracle.samples.iter().copied().unzip();
    tables.push(Table::from_columns(
        "oracle_tunnel.csv",
        ["t", "density_at_x0", "T_exact"].map(String::from).to_vec(),
        &[&oracle.times, &density, &exact],
    ));

    Ok(RunOutput {
        summary: RunSummary {
            schema_version: SCHEMA_VERSION,
            experiment: Experiment::Tunnel,
            reference,
            oracle: oracle_summary(&oracle, reference, oracle_seconds, opts),
            results,
            warnings,
            interpolated: None,
            config: cfg.clone(),
        },
        tables,
    })
}

/// Imaginary-time N-sweep of the local energy estimator, against the
/// oracle's Rayleigh quotient at the end of its own imaginary-time run.
pub fn run_eigen(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput> {
    check_experiment(cfg, Experiment::Eigen)?;
    let g = cfg.gaussian_params()?;
    let warnings = validate_setup(&cfg.potential, &g, cfg.x0, max_order(cfg), cfg.analysis.thresholds(), cfg.hbar);

    let (sweep, oracle) = par::join(
        || {
            par::map(&cfg.n_list, |&n| {
                let run = propagate_order(cfg, n, TimeMode::ImaginaryTime);
                let series = run.value.and_then(|rec| Ok((energy_series(&rec)?, rec.blow_up)));
                (n, series, run.seconds)
            })
        },
        || timed(|| run_oracle(cfg, TimeMode::ImaginaryTime, |s| rayleigh_energy(s, &cfg.potential))),
    );
    let oracle_seconds = oracle.seconds;
    let oracle = oracle.value?;
    let reference = *oracle.samples.last().expect("oracle records its initial state");

    let mut tables = Vec::new();
    let mut results = Vec::new();
    for (n, series, seconds) in sweep {
        let (mut series, blow_up): (EnergySeries, Option<BlowUp>) = match series {
            Ok(s) => s,
            Err(e) => {
                results.push(failed_order(n, &e, seconds, opts));
                continue;
            }
        };
        series.plateau = detect_plateau(&series, window(cfg, &series.taus), cfg.analysis.tol);
        let value = blow_up.is_none().then(|| series.terminal());
        results.push(OrderResult {
            order: n,
            value,
            relative_error: value.map(|v| relative_error(v, reference)),
            converged: series.plateau.is_some(),
            blow_up,
            failure: None,
            saturated_samples: 0,
            max_deviation: None,
            rms_deviation: None,
            wall_seconds: (!opts.deterministic).then_some(seconds),
        });
        tables.push(Table::from_columns(
            format!("eigen_N{n}.csv"),
            ["tau", "E1"].map(String::from).to_vec(),
            &[&series.taus, &series.estimates],
        ));
    }
    tables.push(Table::from_columns(
        "oracle_eigen.csv",
        ["tau", "rayleigh_energy"].map(String::from).to_vec(),
        &[&oracle.times, &oracle.samples],
    ));

    Ok(RunOutput {
        summary: RunSummary {
            schema_version: SCHEMA_VERSION,
            experiment: Experiment::Eigen,
            reference,
            oracle: oracle_summary(&oracle, reference, oracle_seconds, opts),
            results,
            warnings,
            interpolated: None,
            config: cfg.clone(),
        },
        tables,
    })
}

/// Piecewise-linear resampling of `(xs, ys)` at `at`; `None` outside `xs`.
pub fn interpolate(xs: &[f64], ys: &[f64], at: f64) -> Option<f64> {
    let (&first, &last) = (xs.first()?, xs.last()?);
    if at < first || at > last {
        return None;
    }
    let i = xs.partition_point(|&x| x <= at);
    if i == xs.len() {
        return ys.last().copied();
    }
    if i == 0 {
        return ys.first().copied();
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    let f = (at - x0) / (x1 - x0);
    Some(ys[i - 1] + f * (ys[i] - ys[i - 1]))
}

/// Whether two sample grids agree to within a small fraction of their spacing.
fn same_times(a: &[f64], b: &[f64]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let scale = a.last().copied().unwrap_or(1.0).abs().max(1.0);
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * scale)
}

/// Real-time local density of every order next to the oracle's, on the
/// local propagator's time grid.
pub fn run_compare(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput> {
    check_experiment(cfg, Experiment::Compare)?;
    let g = cfg.gaussian_params()?;
    let warnings = validate_setup(&cfg.potential, &g, cfg.x0, max_order(cfg), cfg.analysis.thresholds(), cfg.hbar);

    let (sweep, oracle) = par::join(
        || {
            par::map(&cfg.n_list, |&n| {
                let run = propagate_order(cfg, n, TimeMode::RealTime);
                let series = run.value.and_then(|rec| Ok((accumulate_tunneling(&rec)?, rec.blow_up)));
                (n, series, run.seconds)
            })
        },
        || timed(|| run_oracle(cfg, TimeMode::RealTime, |s| local_density(s, cfg.x0))),
    );
    let oracle_seconds = oracle.seconds;
    let oracle = oracle.value?;

    // The shared time axis is the longest local record.
    let times: Vec<f64> = sweep
        .iter()
        .filter_map(|(_, s, _)| s.as_ref().ok().map(|(s, _)| &s.times))
        .max_by_key(|t| t.len())
        .cloned()
        .unwrap_or_default();
    let interpolated = !same_times(&times, &oracle.times);
    let oracle_density: Vec<f64> = if interpolated {
        times
            .iter()
            .map(|&t| interpolate(&oracle.times, &oracle.samples, t).unwrap_or(f64::NAN))
            .collect()
    } else {
        oracle.samples.clone()
    };
    let reference = *oracle.samples.last().expect("oracle records its initial state");

    let mut results = Vec::new();
    let mut header = vec!["t".to_string()];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (n, series, seconds) in sweep {
        let (series, blow_up) = match series {
            Ok(s) => s,
            Err(e) => {
                results.push(failed_order(n, &e, seconds, opts));
                continue;
            }
        };
        let deviations: Vec<f64> = series
            .density
            .iter()
            .zip(&oracle_density)
            .map(|(a, b)| (a - b).abs())
            .collect();
        let max_dev = deviations.iter().copied().fold(0.0, f64::max);
        let rms_dev = (deviations.iter().map(|d| d * d).sum::<f64>() / deviations.len() as f64).sqrt();
        let value = blow_up.is_none().then(|| *series.density.last().expect("non-empty record"));
        results.push(OrderResult {
            order: n,
            value,
            relative_error: value.map(|v| relative_error(v, reference)),
            converged: blow_up.is_none(),
            blow_up,
            failure: None,
            saturated_samples: series.saturated_samples,
            max_deviation: Some(max_dev),
            rms_deviation: Some(rms_dev),
            wall_seconds: (!opts.deterministic).then_some(seconds),
        });
        header.push(format!("zevca_density_N{n}"));
        columns.push(series.density);
    }
    header.push("oracle_density".into());
    let mut cols: Vec<&[f64]> = vec![&times];
    cols.extend(columns.iter().map(Vec::as_slice));
    cols.push(&oracle_density);
    let table = Table::from_columns("compare.csv", header, &cols);

    Ok(RunOutput {
        summary: RunSummary {
            schema_version: SCHEMA_VERSION,
            experiment: Experiment::Compare,
            reference,
            oracle: oracle_summary(&oracle, reference, oracle_seconds, opts),
            results,
            warnings,
            interpolated: Some(interpolated),
            config: cfg.clone(),
        },
        tables: vec![table],
    })
}

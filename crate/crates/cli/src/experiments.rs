use std::path::PathBuf;

use nonmarkov::channels::{superop_to_kraus, ChannelTensor, KrausChannel};
use nonmarkov::io::{from_json, ChannelFile, ProcessTensorFile, TensorFile};
use nonmarkov::measures::{measure_series, MeasureKind, MeasureSeries};
use nonmarkov::models::{ruqdm_channel, uqdm_memory_series, uqdm_model, xx_chain_model, SystemPreparation, UqdmParams, XxChainParams};
use nonmarkov::process_tensor::ProcessTensor;
use nonmarkov::reconstruct::{fit, AnsatzFile, FitConfig, FitReport, ReconstructionAnsatz};
use nonmarkov::tensorops::DensityMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Experiment, ModelKind, Settings};
use crate::error::CliError;
use crate::output::{tag, write_data, write_report, write_table, Cell, Table};

type Written = Vec<PathBuf>;

pub fn run(s: &Settings) -> Result<Written, CliError> {
    match s.experiment {
        Experiment::Fig2a | Experiment::Fig2b => per_gamma(s, fig2_job),
        Experiment::Fig3 => fig3(s),
        Experiment::Reconstruct => per_model(s, reconstruct_job),
        Experiment::Measure => per_model(s, measure_job),
        Experiment::Build => per_model(s, build_job),
    }
}

/// Runs one job per rate concurrently and returns the written files in
/// job order.
fn per_gamma(s: &Settings, job: fn(&Settings, f64, &str) -> Result<Written, CliError>) -> Result<Written, CliError> {
    let results: Vec<Result<Written, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = s
            .model
            .gamma
            .iter()
            .map(|&g| {
                let name = format!("{}_{}", s.experiment.name(), tag("G", g));
                scope.spawn(move || job(s, g, &name))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("job thread panicked")).collect()
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Rate sweeps apply to the built-in models; file and random sources run
/// once.
fn per_model(s: &Settings, job: fn(&Settings, f64, &str) -> Result<Written, CliError>) -> Result<Written, CliError> {
    match s.model.kind {
        ModelKind::Xx | ModelKind::Ruqdm | ModelKind::Uqdm => per_gamma(s, job),
        _ => job(s, f64::NAN, s.experiment.name()),
    }
}

fn system(s: &Settings) -> Result<SystemPreparation, CliError> {
    s.model.system.parse().map_err(CliError::model)
}

fn xx_params(s: &Settings, gamma: f64) -> Result<XxChainParams, CliError> {
    Ok(XxChainParams { j: s.model.coupling, gamma, n: s.model.n, delta: s.model.delta, system: system(s)? })
}

fn uqdm_params(s: &Settings, gamma: f64) -> UqdmParams {
    UqdmParams {
        gamma,
        g: s.uqdm.g,
        delta: s.model.delta,
        grid_points: s.uqdm.grid_points,
        grid_halfwidth: s.uqdm.halfwidth,
    }
}

fn read_json<T: for<'de> serde::Deserialize<'de>>(path: &std::path::Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    from_json(&text).map_err(|e| CliError::input(path, e))
}

/// The model's channel (when it has one) and its `k`-step process tensor.
fn model(s: &Settings, gamma: f64) -> Result<(Option<ChannelTensor>, ProcessTensor), CliError> {
    let k = s.k;
    let built = |ch: ChannelTensor, rho: DensityMatrix| {
        let pt = ProcessTensor::build(&ch, &rho, k).map_err(CliError::model)?;
        Ok((Some(ch), pt))
    };
    match s.model.kind {
        ModelKind::Xx => {
            let (ch, rho) = xx_chain_model(&xx_params(s, gamma)?).map_err(CliError::model)?;
            built(ch, rho)
        }
        ModelKind::Ruqdm => built(ruqdm_channel(gamma, s.model.delta).map_err(CliError::model)?, system(s)?.density()),
        ModelKind::Uqdm => {
            let m = uqdm_model(&uqdm_params(s, gamma)).map_err(CliError::model)?;
            built(m.channel_tensor().map_err(CliError::model)?, m.initial_state(&system(s)?.density()))
        }
        ModelKind::Channel => {
            let path = s.model.channel.as_ref().ok_or_else(|| CliError::Config("model.channel is required".into()))?;
            let file: ChannelFile = read_json(path)?;
            let ch = file.to_channel().map_err(|e| CliError::input(path, e))?;
            let mut env = vec![nonmarkov::C64::new(0.0, 0.0); ch.env_dim()];
            env[0] = nonmarkov::C64::new(1.0, 0.0);
            let sys = system(s)?.density();
            if sys.dim() != ch.d() {
                return Err(CliError::Config(format!("system preparation is for d = {}, channel has d = {}", sys.dim(), ch.d())));
            }
            let rho = sys.tensor(&DensityMatrix::pure(&env).expect("unit vector"));
            built(ch, rho)
        }
        ModelKind::Target => {
            let path = s.model.target.as_ref().ok_or_else(|| CliError::Config("model.target is required".into()))?;
            let file: ProcessTensorFile = read_json(path)?;
            let pt = file.to_process_tensor().map_err(|e| CliError::input(path, e))?;
            let pt = if s.k < pt.k() { pt.truncated(s.k).map_err(CliError::compute)? } else { pt };
            Ok((None, pt))
        }
        ModelKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            rng.set_stream(1);
            let ch = KrausChannel::random(2, s.fit.env_dim, s.fit.kraus_rank, &mut rng);
            let psi = ReconstructionAnsatz::random(2, s.fit.env_dim, 1, &mut rng).psi0().clone();
            let truth = ReconstructionAnsatz::from_kraus(&ch, psi, s.fit.kraus_rank).map_err(CliError::model)?;
            Ok((Some(truth.channel()), truth.predict(k).map_err(CliError::compute)?))
        }
    }
}

/// Rows `j, N^osee, N^ee, boundary_flag` for `1 <= j <= k`; the OSEE is
/// undefined at `j = k`.
fn measures_table(name: String, pt: &ProcessTensor, notes: Vec<String>) -> Result<Table, CliError> {
    let ee = measure_series(pt, MeasureKind::Ee).map_err(CliError::compute)?;
    let osee = if pt.k() > 1 { Some(measure_series(pt, MeasureKind::Osee).map_err(CliError::compute)?) } else { None };
    let osee_at = |j| osee.as_ref().and_then(|o: &MeasureSeries| o.value_at(j));
    let flagged = |j| osee.as_ref().is_some_and(|o| o.is_flagged(j)) || j == pt.k();
    let rows = (1..=pt.k())
        .map(|j| {
            vec![
                Cell::Int(j),
                osee_at(j).map_or(Cell::Missing, Cell::Float),
                Cell::Float(ee.value_at(j).expect("ee covers 1..=k")),
                Cell::Int(flagged(j) as usize),
            ]
        })
        .collect();
    Ok(Table { name, columns: vec!["j", "osee_bits", "ee_bits", "boundary_flag"], rows, notes })
}

fn fit_config(s: &Settings) -> FitConfig {
    FitConfig {
        env_dim: s.fit.env_dim,
        rank: s.fit.kraus_rank,
        k_schedule: s.fit.k_schedule.clone(),
        max_iter: s.fit.max_iter,
        ftol: s.fit.ftol,
        seed: s.seed,
        restarts: s.fit.restarts,
        penalty: s.fit.penalty,
        ..Default::default()
    }
}

/// Fits the target and writes the ansatz, the report and the measures of
/// the fitted model.
fn fit_and_write(s: &Settings, target: &ProcessTensor, name: &str) -> Result<(Written, FitReport), CliError> {
    let cfg = fit_config(s);
    cfg.validate(target).map_err(CliError::model)?;
    let (ansatz, report) = fit(target, &cfg).map_err(CliError::compute)?;
    if !report.converged {
        eprintln!("{name}: fit did not converge (final loss {:.3e})", report.final_loss);
    }
    let note = format!(
        "measures of the fitted model; final loss {} ({})",
        nonmarkov::io::fmt_float(report.final_loss),
        if report.converged { "converged" } else { "not converged" }
    );
    let predicted = ansatz.predict(s.k).map_err(CliError::compute)?;
    let mut out = write_table(s, &measures_table(name.to_string(), &predicted, vec![note])?)?;
    out.push(write_report(s, &format!("{name}_fit"), &report)?);
    out.push(write_data(s, &format!("{name}_ansatz"), &AnsatzFile::from_ansatz(&ansatz))?);
    Ok((out, report))
}

fn fig2_job(s: &Settings, gamma: f64, name: &str) -> Result<Written, CliError> {
    let (ch, rho) = xx_chain_model(&xx_params(s, gamma)?).map_err(CliError::model)?;
    let target = ProcessTensor::build(&ch, &rho, s.k).map_err(CliError::model)?;
    Ok(fit_and_write(s, &target, name)?.0)
}

fn reconstruct_job(s: &Settings, gamma: f64, name: &str) -> Result<Written, CliError> {
    let (_, target) = model(s, gamma)?;
    Ok(fit_and_write(s, &target, name)?.0)
}

fn measure_job(s: &Settings, gamma: f64, name: &str) -> Result<Written, CliError> {
    let (_, pt) = model(s, gamma)?;
    write_table(s, &measures_table(name.to_string(), &pt, vec!["measures of the generating model".into()])?)
}

fn build_job(s: &Settings, gamma: f64, name: &str) -> Result<Written, CliError> {
    let (ch, pt) = model(s, gamma)?;
    // refuse before anything is written
    let choi = if s.materialize { Some(pt.materialize().map_err(CliError::compute)?) } else { None };
    let mut out = vec![write_data(s, &format!("{name}_pt"), &ProcessTensorFile::from_process_tensor(&pt))?];
    if let Some(ch) = ch {
        let kraus = superop_to_kraus(ch.superop(), ch.d(), ch.env_dim(), 1e-12).map_err(CliError::compute)?;
        out.push(write_data(s, &format!("{name}_channel"), &ChannelFile::from_kraus(&kraus))?);
    }
    if let Some(choi) = choi {
        out.push(write_data(s, &format!("{name}_choi"), &TensorFile::from_tensor(choi.tensor()))?);
    }
    Ok(out)
}

fn fig3(s: &Settings) -> Result<Written, CliError> {
    let results: Vec<Result<MeasureSeries, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = s
            .model
            .gamma
            .iter()
            .map(|&g| {
                scope.spawn(move || {
                    let m = uqdm_model(&uqdm_params(s, g)).map_err(CliError::model)?;
                    uqdm_memory_series(&m, s.uqdm.j_max).map_err(CliError::compute)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("job thread panicked")).collect()
    });
    let mut rows = Vec::new();
    for (&g, series) in s.model.gamma.iter().zip(results) {
        let series = series?;
        for (&j, &v) in series.steps.iter().zip(&series.values) {
            rows.push(vec![Cell::Float(g), Cell::Int(j), Cell::Float(v)]);
        }
    }
    let notes = vec!["the gamma sweep is implementation-chosen; the source figure does not state its values".to_string()];
    write_table(s, &Table { name: "fig3".into(), columns: vec!["gamma", "j", "C_j_bits"], rows, notes })
}

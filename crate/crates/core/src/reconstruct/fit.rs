use super::ansatz::ReconstructionAnsatz;
use super::bfgs::{minimize, BfgsOptions, Termination};
use super::objective::Objective;
use crate::error::{Error, Result};
use crate::process_tensor::ProcessTensor;
use crate::C64;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Relative resolution of the loss used by the line search.
const F_NOISE: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    #[serde(rename = "D")]
    pub env_dim: usize,
    #[serde(rename = "R")]
    pub rank: usize,
    pub k_schedule: Vec<usize>,
    /// Iteration budget per stage of the schedule.
    pub max_iter: usize,
    pub gtol: f64,
    /// Final losses below this count as converged.
    pub ftol: f64,
    pub seed: u64,
    pub restarts: usize,
    /// Weight of the optional normalization penalty.
    pub penalty: f64,
    pub stall_window: usize,
    pub stall_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            env_dim: 2,
            rank: 16,
            k_schedule: vec![2, 3, 4, 5, 6],
            max_iter: 10_000,
            gtol: 1e-8,
            ftol: 1e-8,
            seed: 0,
            restarts: 5,
            penalty: 0.0,
            stall_window: 50,
            stall_tol: 1e-10,
        }
    }
}

impl FitConfig {
    pub fn validate(&self, target: &ProcessTensor) -> Result<()> {
        let kmax = self.k_schedule.iter().copied().max().unwrap_or(0);
        if self.k_schedule.is_empty() || self.k_schedule.contains(&0) {
            return Err(Error::InvalidArgument("k_schedule must be a nonempty list of positive steps".into()));
        }
        if kmax > target.k() {
            return Err(Error::OutOfRange { index: kmax, max: target.k() });
        }
        let n = target.d() * self.env_dim;
        if self.env_dim == 0 || self.rank == 0 || self.rank > n * n {
            return Err(Error::InvalidArgument(format!("need D >= 1 and 1 <= R <= {}", n * n)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("need at least one restart".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub k: usize,
    pub loss: f64,
    pub iterations: usize,
    pub termination: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub final_loss: f64,
    /// Accepted-step losses, stage after stage.
    pub loss_history: Vec<f64>,
    pub k_schedule: Vec<usize>,
    pub normalization_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stages: Vec<StageReport>,
    pub seed: u64,
    pub restart: usize,
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Gradient => "gradient",
        Termination::Target => "target",
        Termination::Stalled => "stalled",
        Termination::MaxIter => "max_iter",
        Termination::LineSearch => "line_search",
    }
}

/// Value and gradient over the flat parameters, with `ψ = φ/|φ|`.
fn flat_objective(obj: &Objective, x: &[f64], d: usize, env: usize, rank: usize) -> (f64, Vec<f64>) {
    let Ok(a) = ReconstructionAnsatz::from_params(x, d, env, rank) else {
        return (f64::INFINITY, vec![0.0; x.len()]);
    };
    let (loss, g) = obj.loss_and_gradient(&a).expect("shapes checked before optimizing");
    let n = d * env;
    let off = 2 * rank * n * n;
    let phi_norm = DVector::from_fn(n, |i, _| C64::new(x[off + 2 * i], x[off + 2 * i + 1])).norm();
    let gpsi = g.psi_tangential(a.psi0(), phi_norm);
    let mut out = Vec::with_capacity(x.len());
    for blk in &g.a_bar {
        for r in 0..n {
            for c in 0..n {
                out.extend([blk[(r, c)].re, blk[(r, c)].im]);
            }
        }
    }
    for z in gpsi.iter() {
        out.extend([z.re, z.im]);
    }
    (loss, out)
}

/// Runs the `k` schedule from `init`, warm-starting each stage from the
/// previous one.
pub fn fit_from(target: &ProcessTensor, cfg: &FitConfig, init: ReconstructionAnsatz) -> Result<(ReconstructionAnsatz, FitReport)> {
    cfg.validate(target)?;
    if init.env_dim() != cfg.env_dim || init.rank() != cfg.rank || init.d() != target.d() {
        return Err(Error::DimensionMismatch("initial ansatz does not match (d, D, R)".into()));
    }
    let (d, env, rank) = (init.d(), cfg.env_dim, cfg.rank);
    let mut x = init.to_params();
    let mut history = Vec::new();
    let mut stages = Vec::new();
    let mut iterations = 0;
    let opts = BfgsOptions {
        max_iter: cfg.max_iter,
        gtol: cfg.gtol,
        f_target: 0.0,
        stall_window: cfg.stall_window,
        stall_tol: cfg.stall_tol,
        ..Default::default()
    };
    let mut final_loss = f64::INFINITY;
    for &k in &cfg.k_schedule {
        let mut obj = Objective::new(target, k)?;
        obj.penalty = cfg.penalty;
        let opts = BfgsOptions { f_noise: F_NOISE * obj.target_norm(), ..opts };
        let res = minimize(|p| flat_objective(&obj, p, d, env, rank), x, &opts);
        x = res.x;
        iterations += res.iterations;
        history.extend_from_slice(&res.history);
        final_loss = res.f.max(0.0);
        stages.push(StageReport {
            k,
            loss: final_loss,
            iterations: res.iterations,
            termination: termination_name(res.termination).to_string(),
        });
    }
    let mut ansatz = ReconstructionAnsatz::from_params(&x, d, env, rank)?;
    // re-evaluate without the penalty so the reported loss is the distance
    let kmax = *cfg.k_schedule.last().unwrap();
    if cfg.penalty != 0.0 {
        final_loss = Objective::new(target, kmax)?.loss(&ansatz)?;
    }
    ansatz = ReconstructionAnsatz::new(ansatz.a_bar().to_vec(), ansatz.psi0().clone(), d, env)?;
    let report = FitReport {
        final_loss,
        loss_history: history,
        k_schedule: cfg.k_schedule.clone(),
        normalization_residual: ansatz.normalization_residual(),
        iterations,
        converged: final_loss < cfg.ftol,
        stages,
        seed: cfg.seed,
        restart: 0,
    };
    Ok((ansatz, report))
}

/// Seed of restart `r` derived from the configured seed.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(r as u64)
}

/// Every restart, in order.
pub fn fit_restarts(target: &ProcessTensor, cfg: &FitConfig) -> Result<Vec<(ReconstructionAnsatz, FitReport)>> {
    cfg.validate(target)?;
    (0..cfg.restarts)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(cfg.seed, r));
            let init = ReconstructionAnsatz::random(target.d(), cfg.env_dim, cfg.rank, &mut rng);
            let (a, mut rep) = fit_from(target, cfg, init)?;
            rep.restart = r;
            Ok((a, rep))
        })
        .collect()
}

/// Best of `cfg.restarts` seeded random starts.
pub fn fit(target: &ProcessTensor, cfg: &FitConfig) -> Result<(ReconstructionAnsatz, FitReport)> {
    let runs = fit_restarts(target, cfg)?;
    Ok(runs
        .into_iter()
        .min_by(|a, b| a.1.final_loss.total_cmp(&b.1.final_loss))
        .expect("at least one restart"))
}

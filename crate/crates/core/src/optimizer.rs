//! Global minimization over per-sender encoding unitaries.
//!
//! An evolution strategy with stochastic ranking (unconstrained, so ranking reduces
//! to sorting by objective) explores the angle box, then a bounded Nelder-Mead
//! simplex polishes the incumbent. Every run is one deterministic stream of
//! evaluations; `max_evaluations` only truncates that stream.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::{mix_seed, UnitaryParams};
use crate::error::{QdcError, Result};
use crate::exec::{map_indexed, Execution};

/// Upper corner of the search box for one sender: `(omega, theta, delta)`.
pub const PARAM_UPPER: [f64; 3] = [4.0 * PI, 2.0 * PI, 4.0 * PI];

const GAMMA: f64 = 0.85;
const SIGMA_SMOOTHING: f64 = 0.2;
const MAX_RESAMPLE: usize = 10;
const MAX_GENERATIONS: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Offspring per generation; `None` means 20 per parameter (60 per sender).
    pub population: Option<usize>,
    pub max_evaluations: usize,
    /// Absolute objective improvement that still counts as progress.
    pub tolerance: f64,
    pub seed: u64,
    /// Independent evolution-strategy runs in the stream.
    pub restarts: usize,
    /// Generations without `tolerance` progress before a run stops.
    pub stall_generations: usize,
    pub polish: bool,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population: None,
            max_evaluations: 20_000,
            tolerance: 1e-6,
            seed: 0,
            restarts: 3,
            stall_generations: 10,
            polish: true,
            execution: Execution::Parallel,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn population_for(&self, n_senders: usize) -> usize {
        self.population.unwrap_or(60 * n_senders.max(1))
    }

    pub fn validate(&self, n_senders: usize) -> Result<()> {
        let pop = self.population_for(n_senders);
        if pop < 4 {
            return Err(QdcError::Domain(format!("population {pop} must be at least 4")));
        }
        if self.max_evaluations < pop {
            return Err(QdcError::Domain(format!(
                "max_evaluations {} smaller than population {pop}",
                self.max_evaluations
            )));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(QdcError::Domain(format!("tolerance {} invalid", self.tolerance)));
        }
        if self.restarts == 0 || self.stall_generations == 0 {
            return Err(QdcError::Domain("restarts and stall_generations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodingParams {
    pub per_sender: Vec<UnitaryParams>,
}

impl EncodingParams {
    pub fn identity(n_senders: usize) -> Self {
        Self { per_sender: vec![UnitaryParams::IDENTITY; n_senders] }
    }

    pub fn from_flat(v: &[f64]) -> Self {
        Self { per_sender: v.chunks_exact(3).map(UnitaryParams::from_slice).collect() }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.per_sender.iter().flat_map(|u| u.to_array()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.per_sender.iter().all(|u| *u == UnitaryParams::IDENTITY)
    }

    /// All angles inside the search box.
    pub fn in_box(&self) -> bool {
        self.per_sender
            .iter()
            .all(|u| u.to_array().iter().zip(PARAM_UPPER).all(|(&v, hi)| (0.0..=hi).contains(&v)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub best_value: f64,
    pub best_params: EncodingParams,
    pub evaluations: usize,
}

struct Budget<'a, F> {
    objective: &'a F,
    used: usize,
    limit: usize,
    best: f64,
    best_x: Vec<f64>,
    exec: Execution,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Budget<'_, F> {
    fn exhausted(&self) -> bool {
        self.used >= self.limit
    }

    /// Evaluates as many points as the budget allows, in order; `None` for the rest.
    fn eval_batch(&mut self, xs: &[Vec<f64>]) -> Result<Vec<Option<f64>>> {
        let take = xs.len().min(self.limit - self.used);
        let obj = self.objective;
        let vals = map_indexed(take, self.exec, |i| obj(&xs[i]));
        self.used += take;
        for (x, &v) in xs.iter().zip(&vals) {
            if !v.is_finite() {
                return Err(QdcError::Numeric(format!("objective returned {v} at {x:?}")));
            }
            if v < self.best {
                self.best = v;
                self.best_x.clone_from(x);
            }
        }
        let mut out: Vec<Option<f64>> = vals.into_iter().map(Some).collect();
        out.resize(xs.len(), None);
        Ok(out)
    }
}

fn hi(j: usize) -> f64 {
    PARAM_UPPER[j % 3]
}

/// Minimizes `objective` over `n_senders` unitaries.
pub fn minimize<F>(objective: F, n_senders: usize, config: &OptimizerConfig) -> Result<OptimResult>
where
    F: Fn(&EncodingParams) -> f64 + Sync,
{
    minimize_flat(|x: &[f64]| objective(&EncodingParams::from_flat(x)), n_senders, config)
}

/// As [`minimize`], with the objective taking the flat `(omega, theta, delta)*` vector.
pub fn minimize_flat<F>(objective: F, n_senders: usize, config: &OptimizerConfig) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate(n_senders)?;
    let d = 3 * n_senders;
    let mut budget = Budget {
        objective: &objective,
        used: 0,
        limit: config.max_evaluations,
        best: f64::INFINITY,
        best_x: vec![0.0; d],
        exec: config.execution,
    };
    budget.eval_batch(&[vec![0.0; d]])?;
    for run in 0..config.restarts {
        if budget.exhausted() {
            break;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, run as u64));
        let start = evolve(&mut budget, &mut rng, d, config)?;
        if config.polish && !budget.exhausted() {
            nelder_mead(&mut budget, &start, config.tolerance)?;
        }
    }
    Ok(OptimResult {
        best_value: budget.best,
        best_params: EncodingParams::from_flat(&budget.best_x),
        evaluations: budget.used,
    })
}

/// One stochastic-ranking ES run; returns its best point.
fn evolve<F: Fn(&[f64]) -> f64 + Sync>(
    budget: &mut Budget<'_, F>,
    rng: &mut ChaCha8Rng,
    d: usize,
    config: &OptimizerConfig,
) -> Result<Vec<f64>> {
    let lambda = config.population_for(d / 3);
    let mu = (lambda / 7).max(2);
    let tau_global = 1.0 / (2.0 * d as f64).sqrt();
    let tau_local = 1.0 / (2.0 * (d as f64).sqrt()).sqrt();
    let sigma0: Vec<f64> = (0..d).map(|j| hi(j) / (d as f64).sqrt()).collect();

    let mut xs: Vec<Vec<f64>> = (0..lambda).map(|_| (0..d).map(|j| rng.random::<f64>() * hi(j)).collect()).collect();
    xs[0] = vec![0.0; d];
    let mut sigmas = vec![sigma0.clone(); lambda];
    let mut run_best = f64::INFINITY;
    let mut run_best_x = xs[0].clone();
    let mut history: Vec<f64> = Vec::new();

    for _ in 0..MAX_GENERATIONS {
        let vals = budget.eval_batch(&xs)?;
        // Unevaluated offspring rank last; there are no constraints, so ranking is a sort.
        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| {
            let va = vals[a].unwrap_or(f64::INFINITY);
            let vb = vals[b].unwrap_or(f64::INFINITY);
            va.total_cmp(&vb).then(a.cmp(&b))
        });
        if let Some(v) = vals[order[0]] {
            if v < run_best {
                run_best = v;
                run_best_x = xs[order[0]].clone();
            }
        }
        history.push(run_best);
        if budget.exhausted() {
            break;
        }
        let w = config.stall_generations;
        if history.len() > w && history[history.len() - 1 - w] - run_best < config.tolerance {
            break;
        }

        let parents: Vec<(Vec<f64>, Vec<f64>)> =
            order[..mu].iter().map(|&i| (xs[i].clone(), sigmas[i].clone())).collect();
        let mut next_x = Vec::with_capacity(lambda);
        let mut next_s = Vec::with_capacity(lambda);
        for k in 0..lambda {
            let i = k % mu;
            if k + 1 < mu {
                // Differential step along the best-parent direction.
                let mut x: Vec<f64> = (0..d)
                    .map(|j| parents[i].0[j] + GAMMA * (parents[0].0[j] - parents[i + 1].0[j]))
                    .collect();
                for (j, v) in x.iter_mut().enumerate() {
                    if !(0.0..=hi(j)).contains(v) {
                        *v = parents[i].0[j];
                    }
                }
                next_x.push(x);
                next_s.push(parents[i].1.clone());
                continue;
            }
            let global: f64 = tau_global * rng.sample::<f64, _>(StandardNormal);
            let s_new: Vec<f64> = parents[i]
                .1
                .iter()
                .map(|&s| (s * (global + tau_local * rng.sample::<f64, _>(StandardNormal)).exp()).min(hi(0)))
                .collect();
            let mut x = vec![0.0; d];
            for j in 0..d {
                let mut v = f64::NAN;
                for _ in 0..MAX_RESAMPLE {
                    v = parents[i].0[j] + s_new[j] * rng.sample::<f64, _>(StandardNormal);
                    if (0.0..=hi(j)).contains(&v) {
                        break;
                    }
                }
                x[j] = v.clamp(0.0, hi(j));
            }
            let s_smoothed: Vec<f64> = parents[i]
                .1
                .iter()
                .zip(&s_new)
                .map(|(&old, &new)| old + SIGMA_SMOOTHING * (new - old))
                .collect();
            next_x.push(x);
            next_s.push(s_smoothed);
        }
        xs = next_x;
        sigmas = next_s;
    }
    Ok(run_best_x)
}

fn clamp_box(x: &mut [f64]) {
    for (j, v) in x.iter_mut().enumerate() {
        *v = v.clamp(0.0, PARAM_UPPER[j % 3]);
    }
}

/// Bounded Nelder-Mead from `x0` (points projected onto the box).
fn nelder_mead<F: Fn(&[f64]) -> f64 + Sync>(budget: &mut Budget<'_, F>, x0: &[f64], tol: f64) -> Result<()> {
    let d = x0.len();
    let step = 0.25;
    let max_iter = 200 * d;
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for j in 0..d {
        let mut x = x0.to_vec();
        x[j] += if x[j] + step <= PARAM_UPPER[j % 3] { step } else { -step };
        simplex.push(x);
    }
    let vals = budget.eval_batch(&simplex)?;
    if vals.iter().any(Option::is_none) {
        return Ok(());
    }
    let mut f: Vec<f64> = vals.into_iter().flatten().collect();

    let eval1 = |budget: &mut Budget<'_, F>, x: &[f64]| -> Result<Option<f64>> {
        Ok(budget.eval_batch(&[x.to_vec()])?[0])
    };

    for _ in 0..max_iter {
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        f = idx.iter().map(|&i| f[i]).collect();
        let spread = f[d] - f[0];
        let size = simplex[1..]
            .iter()
            .map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= 0.01 * tol || size < 1e-9 {
            break;
        }
        let centroid: Vec<f64> = (0..d).map(|j| simplex[..d].iter().map(|x| x[j]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = (0..d).map(|j| centroid[j] + t * (simplex[d][j] - centroid[j])).collect();
            clamp_box(&mut x);
            x
        };
        let xr = along(-1.0);
        let Some(fr) = eval1(budget, &xr)? else { return Ok(()) };
        if fr < f[0] {
            let xe = along(-2.0);
            let Some(fe) = eval1(budget, &xe)? else { return Ok(()) };
            if fe < fr {
                simplex[d] = xe;
                f[d] = fe;
            } else {
                simplex[d] = xr;
                f[d] = fr;
            }
        } else if fr < f[d - 1] {
            simplex[d] = xr;
            f[d] = fr;
        } else {
            let (xc, outside) = if fr < f[d] { (along(-0.5), true) } else { (along(0.5), false) };
            let Some(fc) = eval1(budget, &xc)? else { return Ok(()) };
            if (outside && fc <= fr) || (!outside && fc < f[d]) {
                simplex[d] = xc;
                f[d] = fc;
            } else {
                let best = simplex[0].clone();
                let shrunk: Vec<Vec<f64>> = simplex[1..]
                    .iter()
                    .map(|x| x.iter().zip(&best).map(|(a, b)| b + 0.5 * (a - b)).collect())
                    .collect();
                let vals = budget.eval_batch(&shrunk)?;
                if vals.iter().any(Option::is_none) {
                    return Ok(());
                }
                for (k, (x, v)) in shrunk.into_iter().zip(vals).enumerate() {
                    simplex[k + 1] = x;
                    f[k + 1] = v.expect("checked");
                }
            }
        }
        if budget.exhausted() {
            break;
        }
    }
    Ok(())
}

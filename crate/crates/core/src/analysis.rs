//! Critical noise strengths, sweeps and quenched averages.

use serde::{Deserialize, Serialize};

use crate::capacity::{noisy_capacity, CapacityResult, EncodingStrategy, PartyLayout};
use crate::channels::{mix_seed, realization_rng, sample_realization, ChannelSpec};
use crate::error::{domain, QdcError, Result};
use crate::exec::{map_indexed, ordered_sum, try_map_indexed, Execution};
use crate::optimizer::OptimizerConfig;
use crate::qmath::DensityMatrix;
use crate::states::{build, ResourceState};

/// A complete single-point problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub state: ResourceState,
    pub layout: PartyLayout,
    pub channel: ChannelSpec,
    pub encoding: EncodingStrategy,
}

impl Problem {
    pub fn new(state: ResourceState, layout: PartyLayout, channel: ChannelSpec, encoding: EncodingStrategy) -> Result<Self> {
        state.validate()?;
        layout.validate()?;
        channel.validate()?;
        if state.n_qubits() != layout.total_qubits() {
            return Err(QdcError::Dimension(format!(
                "state has {} qubits but layout {} needs {}",
                state.n_qubits(),
                layout.label(),
                layout.total_qubits()
            )));
        }
        Ok(Self { state, layout, channel, encoding })
    }

    pub fn rho(&self) -> Result<DensityMatrix> {
        build(&self.state)
    }

    /// Deterministic-channel capacity (or two-receiver bound).
    pub fn capacity(&self) -> Result<CapacityResult> {
        noisy_capacity(&self.rho()?, &self.layout, &self.channel, None, &self.encoding)
    }

    pub fn with_channel(&self, channel: ChannelSpec) -> Self {
        Self { channel, ..self.clone() }
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Ok(self.with_channel(self.channel.with_p(p)?))
    }

    pub fn with_encoding(&self, encoding: EncodingStrategy) -> Self {
        Self { encoding, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub scan_step: f64,
    pub refine: f64,
    /// Surplus over the classical bound that still counts as collapsed.
    pub collapse_tol: f64,
    pub execution: Execution,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { scan_step: 1e-3, refine: 1e-4, collapse_tol: 1e-9, execution: Execution::Parallel }
    }
}

impl ScanConfig {
    fn validate(&self) -> Result<()> {
        if !(self.scan_step > 0.0 && self.refine > 0.0 && self.refine <= self.scan_step && self.collapse_tol >= 0.0) {
            return domain(format!("invalid scan configuration {self:?}"));
        }
        Ok(())
    }

    /// `0, step, 2 step, ...` up to and including `hi`.
    fn grid(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n = ((hi - lo) / self.scan_step - 1e-9).ceil().max(0.0) as usize;
        let mut g: Vec<f64> = (0..n).map(|i| lo + i as f64 * self.scan_step).collect();
        g.push(hi);
        g
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CriticalStrengths {
    pub p_c: Option<f64>,
    pub p_r: Option<f64>,
    pub p_a: Option<f64>,
    /// Width of the final bracket around each reported value.
    pub bracket_resolution: f64,
}

/// Bracketed threshold: `below` fails the predicate, `at` satisfies it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub below: f64,
    pub at: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.at - self.below
    }
}

/// Surplus `capacity - classical bound` as a function of `p`, with the identity
/// encoding as a cheap lower bound on the optimized value.
struct SurplusCurve<'a> {
    problem: &'a Problem,
    rho: DensityMatrix,
    tol: f64,
}

impl<'a> SurplusCurve<'a> {
    fn new(problem: &'a Problem, tol: f64) -> Result<Self> {
        Ok(Self { problem, rho: problem.rho()?, tol })
    }

    fn identity(&self, p: f64) -> Result<f64> {
        let spec = self.problem.channel.with_p(p)?;
        Ok(noisy_capacity(&self.rho, &self.problem.layout, &spec, None, &EncodingStrategy::Identity)?.raw_advantage_bits)
    }

    fn full(&self, p: f64) -> Result<f64> {
        let spec = self.problem.channel.with_p(p)?;
        Ok(noisy_capacity(&self.rho, &self.problem.layout, &spec, None, &self.problem.encoding)?.raw_advantage_bits)
    }

    /// Optimized surplus `<= tol`, skipping the optimizer when the lower bound already exceeds it.
    fn collapsed_given(&self, p: f64, identity: f64) -> Result<bool> {
        if identity > self.tol {
            return Ok(false);
        }
        if !self.problem.encoding.is_optimized() || self.problem.channel.is_covariant() {
            return Ok(true);
        }
        Ok(self.full(p)? <= self.tol)
    }

    fn collapsed(&self, p: f64) -> Result<bool> {
        self.collapsed_given(p, self.identity(p)?)
    }
}

/// Narrows `[lo, hi]` with `pred(lo) = false`, `pred(hi) = true` down to `width`.
fn bisect(mut lo: f64, mut hi: f64, width: f64, mut pred: impl FnMut(f64) -> Result<bool>) -> Result<Bracket> {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Bracket { below: lo, at: hi })
}

/// Minimizer of `f` on `[a, b]` by golden-section search.
fn golden_min(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

fn p_range(problem: &Problem) -> f64 {
    problem.channel.p_max()
}

/// First collapse of the surplus onto the classical bound.
pub fn find_pc_bracket(problem: &Problem, scan: &ScanConfig) -> Result<Option<Bracket>> {
    scan.validate()?;
    let curve = SurplusCurve::new(problem, scan.collapse_tol)?;
    let grid = scan.grid(0.0, p_range(problem));
    let ident = try_map_indexed(grid.len(), scan.execution, |i| curve.identity(grid[i]))?;
    if curve.collapsed_given(grid[0], ident[0])? {
        return Ok(None);
    }
    let mut first = None;
    for (i, (&p, &s)) in grid.iter().zip(&ident).enumerate() {
        if curve.collapsed_given(p, s)? {
            first = Some(i);
            break;
        }
    }
    // Tangential touches between grid points show up as local minima of the lower bound.
    let end = first.unwrap_or(grid.len() - 1);
    for j in 1..end {
        if ident[j] <= ident[j - 1] && ident[j] <= ident[j + 1] {
            let (pm, vm) = golden_min(grid[j - 1], grid[j + 1], 1e-12, |p| curve.identity(p))?;
            if vm <= scan.collapse_tol && curve.collapsed_given(pm, vm)? {
                return bisect(grid[j - 1], pm, scan.refine, |p| curve.collapsed(p)).map(Some);
            }
        }
    }
    match first {
        Some(i) => bisect(grid[i - 1], grid[i], scan.refine, |p| curve.collapsed(p)).map(Some),
        None => Ok(None),
    }
}

pub fn find_pc(problem: &Problem, scan: &ScanConfig) -> Result<Option<f64>> {
    Ok(find_pc_bracket(problem, scan)?.map(|b| b.at))
}

/// First revival above the classical bound after `p_c`.
pub fn find_pr_bracket(problem: &Problem, scan: &ScanConfig, p_c: f64) -> Result<Option<Bracket>> {
    scan.validate()?;
    let curve = SurplusCurve::new(problem, scan.collapse_tol)?;
    let p_max = p_range(problem);
    if p_c >= p_max {
        return Ok(None);
    }
    let grid = scan.grid(p_c, p_max);
    let ident = try_map_indexed(grid.len(), scan.execution, |i| curve.identity(grid[i]))?;
    let mut last_collapsed = p_c;
    for (&p, &s) in grid.iter().zip(&ident).skip(1) {
        if curve.collapsed_given(p, s)? {
            last_collapsed = p;
        } else {
            let b = bisect(last_collapsed, p, scan.refine, |q| Ok(!curve.collapsed(q)?))?;
            return Ok(Some(b));
        }
    }
    Ok(None)
}

pub fn find_pr(problem: &Problem, scan: &ScanConfig, p_c: f64) -> Result<Option<f64>> {
    Ok(find_pr_bracket(problem, scan, p_c)?.map(|b| b.at))
}

/// First `p` where the clipped capacity under `problem` exceeds the one under `markovian` by more than the tolerance.
pub fn find_pa_bracket(problem: &Problem, markovian: &Problem, scan: &ScanConfig) -> Result<Option<Bracket>> {
    scan.validate()?;
    if problem.channel.kind != markovian.channel.kind || problem.channel.epsilon != markovian.channel.epsilon {
        return domain("p_a compares channels of the same kind and disorder");
    }
    let (rho_nm, rho_m) = (problem.rho()?, markovian.rho()?);
    let clipped = |pr: &Problem, rho: &DensityMatrix, p: f64| -> Result<f64> {
        let spec = pr.channel.with_p(p)?;
        Ok(noisy_capacity(rho, &pr.layout, &spec, None, &pr.encoding)?.capacity_bits)
    };
    let advantage = |p: f64| -> Result<bool> {
        Ok(clipped(problem, &rho_nm, p)? - clipped(markovian, &rho_m, p)? > scan.collapse_tol)
    };
    let p_max = p_range(problem).min(p_range(markovian));
    let grid = scan.grid(0.0, p_max);
    let flags = if problem.encoding.is_optimized() || markovian.encoding.is_optimized() {
        // Optimized points are expensive; stop at the first hit.
        let mut v = Vec::new();
        for &p in &grid {
            let a = advantage(p)?;
            v.push(a);
            if a {
                break;
            }
        }
        v
    } else {
        try_map_indexed(grid.len(), scan.execution, |i| advantage(grid[i]))?
    };
    match flags.iter().position(|&a| a) {
        None => Ok(None),
        Some(0) => Ok(Some(Bracket { below: 0.0, at: 0.0 })),
        Some(i) => bisect(grid[i - 1], grid[i], scan.refine, advantage).map(Some),
    }
}

pub fn find_pa(problem: &Problem, markovian: &Problem, scan: &ScanConfig) -> Result<Option<f64>> {
    Ok(find_pa_bracket(problem, markovian, scan)?.map(|b| b.at))
}

/// `p_c`, `p_r` and (for `alpha > 0`) `p_a` of one problem.
pub fn critical_strengths(problem: &Problem, scan: &ScanConfig) -> Result<CriticalStrengths> {
    let mut out = CriticalStrengths { bracket_resolution: 0.0, ..Default::default() };
    let mut widen = |b: &Bracket| out.bracket_resolution = out.bracket_resolution.max(b.width());
    let pc = find_pc_bracket(problem, scan)?;
    if let Some(b) = pc {
        widen(&b);
        out.p_c = Some(b.at);
        if let Some(r) = find_pr_bracket(problem, scan, b.at)? {
            widen(&r);
            out.p_r = Some(r.at);
        }
    }
    if problem.channel.alpha > 0.0 {
        let markovian = problem.with_channel(problem.channel.with_alpha(0.0)?);
        if let Some(a) = find_pa_bracket(problem, &markovian, scan)? {
            widen(&a);
            out.p_a = Some(a.at);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchConfig {
    pub realizations: usize,
    pub master_seed: u64,
    /// Run the encoding optimizer in every realization instead of using the identity.
    pub optimize_per_realization: bool,
    pub optimizer: OptimizerConfig,
    pub execution: Execution,
}

impl Default for QuenchConfig {
    fn default() -> Self {
        Self {
            realizations: 4000,
            master_seed: 0,
            optimize_per_realization: false,
            optimizer: OptimizerConfig::default(),
            execution: Execution::Parallel,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchedResult {
    pub mean_capacity_bits: f64,
    pub std_error_bits: f64,
    pub realizations_used: usize,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = ordered_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = ordered_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Clipped capacities of each disorder realization, in realization order.
pub fn realization_capacities(state: &ResourceState, layout: &PartyLayout, spec: &ChannelSpec, qc: &QuenchConfig) -> Result<Vec<f64>> {
    if qc.realizations == 0 {
        return domain("at least one realization is required");
    }
    let problem = Problem::new(*state, *layout, *spec, EncodingStrategy::Identity)?;
    let rho = problem.rho()?;
    let encoding_for = |k: usize| {
        if qc.optimize_per_realization {
            EncodingStrategy::Optimized(qc.optimizer.clone().with_seed(mix_seed(qc.optimizer.seed, k as u64)))
        } else {
            EncodingStrategy::Identity
        }
    };
    try_map_indexed(qc.realizations, qc.execution, |k| {
        let mut rng = realization_rng(qc.master_seed, k as u64);
        let kraus = sample_realization(spec, layout.n_senders, &mut rng)?;
        Ok(noisy_capacity(&rho, layout, spec, Some(&kraus), &encoding_for(k))?.capacity_bits)
    })
}

/// Mean and standard error of the clipped capacity over disorder realizations.
pub fn quenched_capacity(state: &ResourceState, layout: &PartyLayout, spec: &ChannelSpec, qc: &QuenchConfig) -> Result<QuenchedResult> {
    let caps = realization_capacities(state, layout, spec, qc)?;
    let (mean, se) = mean_and_stderr(&caps);
    Ok(QuenchedResult { mean_capacity_bits: mean, std_error_bits: se, realizations_used: caps.len() })
}

/// `p_c` of the quenched mean curve. Realization streams are shared across `p`.
pub fn find_pc_quenched(state: &ResourceState, layout: &PartyLayout, spec: &ChannelSpec, qc: &QuenchConfig, scan: &ScanConfig) -> Result<Option<Bracket>> {
    scan.validate()?;
    let bound = layout.classical_bound();
    let collapsed = |p: f64| -> Result<bool> {
        let r = quenched_capacity(state, layout, &spec.with_p(p)?, qc)?;
        Ok(r.mean_capacity_bits - bound <= scan.collapse_tol)
    };
    let grid = scan.grid(0.0, spec.p_max());
    if collapsed(grid[0])? {
        return Ok(None);
    }
    for i in 1..grid.len() {
        if collapsed(grid[i])? {
            return bisect(grid[i - 1], grid[i], scan.refine, collapsed).map(Some);
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    P,
    Alpha,
    /// `x` for gGHZ, `b` for gW states.
    StateParam,
}

impl std::str::FromStr for SweepAxis {
    type Err = QdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p" => Ok(Self::P),
            "alpha" => Ok(Self::Alpha),
            "state" | "state_param" | "state-param" | "x" | "b" => Ok(Self::StateParam),
            other => Err(QdcError::Parse(format!("unknown sweep axis '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SweepOutput {
    Capacity(CapacityResult),
    Quenched(QuenchedResult),
}

impl SweepOutput {
    pub fn capacity_bits(&self) -> f64 {
        match self {
            Self::Capacity(c) => c.capacity_bits,
            Self::Quenched(q) => q.mean_capacity_bits,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub problem: Problem,
    pub output: SweepOutput,
}

/// Rounds to 12 significant digits so printed grid values re-run bit-exactly.
pub fn round_sig12(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// Evenly spaced grid with `steps` points (a single point at `lo` when `steps == 1`).
pub fn linear_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return domain(format!("invalid grid [{lo}, {hi}] with {steps} steps"));
    }
    if steps == 1 {
        return Ok(vec![round_sig12(lo)]);
    }
    Ok((0..steps).map(|i| round_sig12(lo + (hi - lo) * i as f64 / (steps - 1) as f64)).collect())
}

/// Point problem for one axis value.
pub fn sweep_point(base: &Problem, axis: SweepAxis, v: f64) -> Result<Problem> {
    Ok(match axis {
        SweepAxis::P => base.with_p(v)?,
        SweepAxis::Alpha => base.with_channel(base.channel.with_alpha(v)?),
        SweepAxis::StateParam => Problem { state: base.state.with_primary_param(v)?, ..base.clone() },
    })
}

/// Evaluates `base` along `axis`; quenched averages when the channel is random.
pub fn sweep(base: &Problem, axis: SweepAxis, grid: &[f64], quench: Option<&QuenchConfig>, exec: Execution) -> Result<Vec<SweepRow>> {
    let points = grid.iter().map(|&v| sweep_point(base, axis, v)).collect::<Result<Vec<_>>>()?;
    let eval = |i: usize| -> Result<SweepRow> {
        let pr = &points[i];
        let output = if pr.channel.is_random() {
            let default = QuenchConfig::default();
            let qc = quench.unwrap_or(&default);
            let qc = QuenchConfig { execution: Execution::Sequential, ..qc.clone() };
            SweepOutput::Quenched(quenched_capacity(&pr.state, &pr.layout, &pr.channel, &qc)?)
        } else {
            SweepOutput::Capacity(pr.capacity()?)
        };
        Ok(SweepRow { axis_value: grid[i], problem: pr.clone(), output })
    };
    let mut rows = map_indexed(points.len(), exec, eval).into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value));
    Ok(rows)
}

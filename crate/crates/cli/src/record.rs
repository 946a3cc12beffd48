//! Flat output record shared by every subcommand.

use std::io::Write;

use qdc::analysis::{round_sig12, CriticalStrengths, Problem, QuenchedResult};
use qdc::capacity::{CapacityResult, EncodingStrategy};
use serde::Serialize;

pub const TOOL_VERSION: &str = concat!("qdc ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunRecord {
    pub state: String,
    pub state_params: String,
    pub n_senders: usize,
    pub receivers: usize,
    pub split: Option<usize>,
    pub channel: String,
    pub alpha: f64,
    pub p: f64,
    pub epsilon: f64,
    pub draw_policy: String,
    pub optimized: bool,
    pub capacity_bits: Option<f64>,
    pub classical_bound: f64,
    pub dense_codeable: Option<bool>,
    pub std_error: Option<f64>,
    pub realizations: Option<usize>,
    pub master_seed: Option<u64>,
    pub opt_seed: Option<u64>,
    pub tool_version: String,
    // extra columns, appended after the fixed ones
    pub opt_population: Option<usize>,
    pub opt_max_evaluations: Option<usize>,
    pub opt_restarts: Option<usize>,
    pub opt_tolerance: Option<f64>,
    pub p_c: Option<f64>,
    pub p_r: Option<f64>,
    pub p_a: Option<f64>,
    pub bracket_resolution: Option<f64>,
}

fn r12(v: f64) -> f64 {
    round_sig12(v)
}

impl RunRecord {
    pub fn from_problem(problem: &Problem) -> Self {
        let ch = &problem.channel;
        let mut rec = Self {
            state: problem.state.kind_name().to_string(),
            state_params: problem.state.params_string(),
            n_senders: problem.layout.n_senders,
            receivers: problem.layout.n_receivers(),
            split: problem.layout.split(),
            channel: ch.kind.name().to_string(),
            alpha: ch.alpha,
            p: ch.p,
            epsilon: ch.epsilon,
            draw_policy: ch.draw_policy.name().to_string(),
            optimized: problem.encoding.is_optimized(),
            classical_bound: problem.layout.classical_bound(),
            tool_version: TOOL_VERSION.to_string(),
            ..Default::default()
        };
        if let EncodingStrategy::Optimized(cfg) = &problem.encoding {
            rec.opt_seed = Some(cfg.seed);
            rec.opt_population = Some(cfg.population_for(problem.layout.n_senders));
            rec.opt_max_evaluations = Some(cfg.max_evaluations);
            rec.opt_restarts = Some(cfg.restarts);
            rec.opt_tolerance = Some(cfg.tolerance);
        }
        rec
    }

    pub fn with_capacity(mut self, c: &CapacityResult) -> Self {
        self.capacity_bits = Some(r12(c.capacity_bits));
        self.dense_codeable = Some(c.dense_codeable);
        self
    }

    pub fn with_quench(mut self, q: &QuenchedResult, master_seed: u64, bound: f64) -> Self {
        self.capacity_bits = Some(r12(q.mean_capacity_bits));
        self.std_error = Some(r12(q.std_error_bits));
        self.dense_codeable = Some(q.mean_capacity_bits > bound + qdc::capacity::DENSE_CODING_SLACK);
        self.realizations = Some(q.realizations_used);
        self.master_seed = Some(master_seed);
        self
    }

    pub fn with_strengths(mut self, cs: &CriticalStrengths) -> Self {
        self.p_c = cs.p_c.map(r12);
        self.p_r = cs.p_r.map(r12);
        self.p_a = cs.p_a.map(r12);
        self.bracket_resolution = Some(r12(cs.bracket_resolution));
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Writes rows as CSV (with header) or one JSON object per line.
pub fn write_rows<T: Serialize>(out: &mut dyn Write, rows: &[T], format: Format) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r).map_err(csv_err)?;
            }
            w.flush()
        }
        Format::Json => {
            for r in rows {
                serde_json::to_writer(&mut *out, r)?;
                writeln!(out)?;
            }
            Ok(())
        }
    }
}

//! Reference critical-strength tables and the computations that reproduce them.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{critical_strengths, find_pc_quenched, CriticalStrengths, Problem, QuenchConfig, ScanConfig};
use crate::capacity::{EncodingStrategy, PartyLayout};
use crate::channels::{ChannelKind, ChannelSpec, DrawPolicy};
use crate::error::{QdcError, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::states::ResourceState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    /// Deterministic dephasing: `p_c`, `p_r`, `p_a`.
    I,
    /// Deterministic depolarizing: `p_c`.
    II,
    /// Random depolarizing, quenched mean: `p_c`.
    III,
}

impl TableId {
    pub fn tolerance(&self) -> f64 {
        match self {
            Self::I | Self::II => 0.01,
            Self::III => 0.02,
        }
    }
}

impl FromStr for TableId {
    type Err = QdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Self::I),
            "II" | "2" => Ok(Self::II),
            "III" | "3" => Ok(Self::III),
            other => Err(QdcError::Parse(format!("unknown table '{other}' (expected I, II or III)"))),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Pc,
    Pr,
    Pa,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Pc => "p_c",
            Self::Pr => "p_r",
            Self::Pa => "p_a",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Ghz,
    W,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ghz => "GHZ",
            Self::W => "W",
        }
    }

    pub fn state(&self, n_qubits: usize) -> ResourceState {
        match self {
            Self::Ghz => ResourceState::Gghz { n_qubits, x: FRAC_1_SQRT_2 },
            Self::W => ResourceState::WUniform { n_qubits },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub table: TableId,
    pub quantity: Quantity,
    pub family: Family,
    pub layout: PartyLayout,
    pub alpha: f64,
    pub epsilon: f64,
    /// `None` where the reference table is blank.
    pub reference: Option<f64>,
}

impl TableCell {
    pub fn kind(&self) -> ChannelKind {
        match self.table {
            TableId::I => ChannelKind::Dephasing,
            TableId::II | TableId::III => ChannelKind::Depolarizing,
        }
    }

    pub fn state(&self) -> ResourceState {
        self.family.state(self.layout.total_qubits())
    }

    pub fn label(&self) -> String {
        let eps = if self.table == TableId::III { format!(" eps={}", self.epsilon) } else { String::new() };
        format!("{} {} {} alpha={}{}", self.quantity.name(), self.family.name(), self.layout.label(), self.alpha, eps)
    }
}

const ALPHAS: [f64; 5] = [0.0, 0.3, 0.5, 0.7, 0.9];
const ALPHAS_III: [f64; 3] = [0.3, 0.5, 0.9];
const EPSILONS_III: [f64; 3] = [0.5, 0.7, 1.0];

fn l1(n: usize) -> PartyLayout {
    PartyLayout { n_senders: n, receivers: crate::capacity::Receivers::One }
}

fn l22() -> PartyLayout {
    PartyLayout { n_senders: 2, receivers: crate::capacity::Receivers::Two { split: 1 } }
}

type Column = (Quantity, Family, PartyLayout, [Option<f64>; 5]);

fn table_one_columns() -> Vec<Column> {
    let s = Some;
    vec![
        (Quantity::Pc, Family::Ghz, l1(2), [s(0.48), s(0.41), s(0.36), s(0.33), s(0.29)]),
        (Quantity::Pc, Family::Ghz, l1(3), [s(0.42), s(0.35), s(0.31), s(0.28), s(0.25)]),
        (Quantity::Pc, Family::W, l1(2), [s(0.13), s(0.10), s(0.09), s(0.08), s(0.07)]),
        (Quantity::Pc, Family::W, l1(3), [s(0.07), s(0.06), s(0.05), s(0.05), s(0.04)]),
        (Quantity::Pr, Family::Ghz, l1(2), [None, s(0.46), s(0.41), s(0.37), s(0.33)]),
        (Quantity::Pr, Family::Ghz, l1(3), [None, None, s(0.47), s(0.42), s(0.38)]),
        (Quantity::Pa, Family::Ghz, l1(2), [None, s(0.48), s(0.44), s(0.42), s(0.40)]),
        (Quantity::Pa, Family::Ghz, l1(3), [None, None, s(0.47), s(0.42), s(0.40)]),
        (Quantity::Pa, Family::W, l22(), [None, None, s(0.45), s(0.41), s(0.39)]),
    ]
}

fn table_two_columns() -> Vec<Column> {
    let s = Some;
    vec![
        (Quantity::Pc, Family::Ghz, l1(2), [s(0.09), s(0.07), s(0.05), s(0.04), s(0.03)]),
        (Quantity::Pc, Family::Ghz, l1(3), [s(0.06), s(0.03), s(0.03), s(0.02), s(0.02)]),
        (Quantity::Pc, Family::Ghz, l22(), [s(0.75), s(0.58), s(0.45), s(0.32), s(0.25)]),
        (Quantity::Pc, Family::W, l1(2), [s(0.08), s(0.05), s(0.04), s(0.03), s(0.02)]),
        (Quantity::Pc, Family::W, l1(3), [s(0.05), s(0.03), s(0.02), s(0.02), s(0.02)]),
        (Quantity::Pc, Family::W, l22(), [s(0.31), s(0.26), s(0.21), s(0.16), s(0.10)]),
    ]
}

/// Rows are alpha in {0.3, 0.5, 0.9}, columns epsilon in {0.5, 0.7, 1.0}.
fn table_three_blocks() -> Vec<(Family, PartyLayout, [[f64; 3]; 3])> {
    vec![
        (Family::Ghz, l1(2), [[0.09, 0.11, 0.14], [0.06, 0.08, 0.10], [0.04, 0.05, 0.07]]),
        (Family::Ghz, l1(3), [[0.04, 0.05, 0.06], [0.03, 0.04, 0.05], [0.02, 0.03, 0.04]]),
        (Family::W, l1(2), [[0.08, 0.09, 0.12], [0.05, 0.06, 0.09], [0.03, 0.04, 0.07]]),
        (Family::W, l1(3), [[0.03, 0.04, 0.05], [0.03, 0.03, 0.04], [0.02, 0.02, 0.01]]),
    ]
}

/// Every cell of a reference table, in row-major reading order.
pub fn table_cells(which: TableId) -> Vec<TableCell> {
    let mut out = Vec::new();
    match which {
        TableId::I | TableId::II => {
            let cols = if which == TableId::I { table_one_columns() } else { table_two_columns() };
            for (row, &alpha) in ALPHAS.iter().enumerate() {
                for (quantity, family, layout, vals) in &cols {
                    out.push(TableCell {
                        table: which,
                        quantity: *quantity,
                        family: *family,
                        layout: *layout,
                        alpha,
                        epsilon: 0.0,
                        reference: vals[row],
                    });
                }
            }
        }
        TableId::III => {
            for (row, &alpha) in ALPHAS_III.iter().enumerate() {
                for (family, layout, vals) in table_three_blocks() {
                    for (col, &epsilon) in EPSILONS_III.iter().enumerate() {
                        out.push(TableCell {
                            table: which,
                            quantity: Quantity::Pc,
                            family,
                            layout,
                            alpha,
                            epsilon,
                            reference: Some(vals[row][col]),
                        });
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableContext {
    pub scan: ScanConfig,
    /// Encoding used for the deterministic tables.
    pub encoding: EncodingStrategy,
    pub quench: QuenchConfig,
    pub draw_policy: DrawPolicy,
    pub execution: Execution,
}

impl Default for TableContext {
    fn default() -> Self {
        Self {
            scan: ScanConfig::default(),
            encoding: EncodingStrategy::Identity,
            quench: QuenchConfig::default(),
            draw_policy: DrawPolicy::IndependentPerQubit,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub cell: TableCell,
    pub computed: Option<f64>,
    pub bracket_resolution: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CellOutcome {
    fn new(cell: TableCell, computed: Option<f64>, bracket_resolution: f64) -> Self {
        let tolerance = cell.table.tolerance();
        let pass = match (cell.reference, computed) {
            (Some(want), Some(got)) => (got - want).abs() <= tolerance + 1e-12,
            (None, None) => true,
            _ => false,
        };
        Self { cell, computed, bracket_resolution, tolerance, pass }
    }
}

fn pick(cs: &CriticalStrengths, q: Quantity) -> Option<f64> {
    match q {
        Quantity::Pc => cs.p_c,
        Quantity::Pr => cs.p_r,
        Quantity::Pa => cs.p_a,
    }
}

/// Computes one critical strength for a deterministic table cell.
pub fn deterministic_strengths(cell: &TableCell, ctx: &TableContext) -> Result<CriticalStrengths> {
    let spec = ChannelSpec::new(cell.kind(), cell.alpha, 0.0)?;
    let problem = Problem::new(cell.state(), cell.layout, spec, ctx.encoding.clone())?;
    critical_strengths(&problem, &ctx.scan)
}

/// Evaluates the given cells. Deterministic cells sharing a problem reuse one scan.
pub fn compute_cells(cells: &[TableCell], ctx: &TableContext) -> Result<Vec<CellOutcome>> {
    // Distinct problems, so p_c/p_r/p_a of one column group come from a single scan.
    let mut keys: Vec<TableCell> = Vec::new();
    for c in cells {
        let same = |k: &TableCell| {
            k.table == c.table && k.family == c.family && k.layout == c.layout && k.alpha == c.alpha && k.epsilon == c.epsilon
        };
        if !keys.iter().any(same) {
            keys.push(*c);
        }
    }
    let inner = ScanConfig { execution: Execution::Sequential, ..ctx.scan };
    let qc = QuenchConfig { execution: Execution::Sequential, ..ctx.quench.clone() };
    let results = try_map_indexed(keys.len(), ctx.execution, |i| -> Result<CriticalStrengths> {
        let k = &keys[i];
        if k.table == TableId::III {
            let spec = ChannelSpec::random(k.kind(), k.alpha, 0.0, k.epsilon, ctx.draw_policy)?;
            let b = find_pc_quenched(&k.state(), &k.layout, &spec, &qc, &inner)?;
            Ok(CriticalStrengths { p_c: b.map(|b| b.at), bracket_resolution: b.map_or(0.0, |b| b.width()), ..Default::default() })
        } else {
            let local = TableContext { scan: inner, ..ctx.clone() };
            deterministic_strengths(k, &local)
        }
    })?;
    Ok(cells
        .iter()
        .map(|c| {
            let i = keys
                .iter()
                .position(|k| k.table == c.table && k.family == c.family && k.layout == c.layout && k.alpha == c.alpha && k.epsilon == c.epsilon)
                .expect("key present");
            CellOutcome::new(*c, pick(&results[i], c.quantity), results[i].bracket_resolution)
        })
        .collect())
}

pub fn compute_table(which: TableId, ctx: &TableContext) -> Result<Vec<CellOutcome>> {
    compute_cells(&table_cells(which), ctx)
}

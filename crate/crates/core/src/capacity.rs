//! Noiseless and noisy dense-coding capacities.
//!
//! One receiver: `max[N, N + S(rho_R) - min_U S(L(U rho U^dag))]`.
//! Two receivers (LOCC upper bound): `max[N, N + S(rho_R1) + S(rho_R2) - max_x S(xi_x)]`,
//! where `xi_1` keeps the first `r` senders with `R1` and `xi_2` the rest with `R2`.

use serde::{Deserialize, Serialize};

use crate::channels::{apply_raw, mix_seed, unitary_entries, ChannelSpec, KrausSet, UnitaryParams};
use crate::error::{domain, QdcError, Result};
use crate::optimizer::{minimize_flat, EncodingParams, OptimizerConfig};
use crate::qmath::{hermitian_eigenvalues, partial_trace, spectrum_entropy, von_neumann_entropy, ComplexMatrix, DensityMatrix, MAX_QUBITS};

/// Slack on the classical bound when deciding dense-codeability.
pub const DENSE_CODING_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "receivers", rename_all = "snake_case")]
pub enum Receivers {
    One,
    /// Senders `1..=split` report to `R1`, the others to `R2`.
    Two { split: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartyLayout {
    pub n_senders: usize,
    pub receivers: Receivers,
}

impl PartyLayout {
    pub fn one_receiver(n_senders: usize) -> Result<Self> {
        let l = Self { n_senders, receivers: Receivers::One };
        l.validate()?;
        Ok(l)
    }

    pub fn two_receivers(n_senders: usize, split: usize) -> Result<Self> {
        let l = Self { n_senders, receivers: Receivers::Two { split } };
        l.validate()?;
        Ok(l)
    }

    pub fn n_receivers(&self) -> usize {
        match self.receivers {
            Receivers::One => 1,
            Receivers::Two { .. } => 2,
        }
    }

    pub fn total_qubits(&self) -> usize {
        self.n_senders + self.n_receivers()
    }

    pub fn split(&self) -> Option<usize> {
        match self.receivers {
            Receivers::One => None,
            Receivers::Two { split } => Some(split),
        }
    }

    /// Sender qubits are `0..n_senders`; the channel acts on exactly these.
    pub fn sender_qubits(&self) -> Vec<usize> {
        (0..self.n_senders).collect()
    }

    pub fn receiver_qubits(&self) -> Vec<usize> {
        (self.n_senders..self.total_qubits()).collect()
    }

    /// Log2 of the senders' dimension.
    pub fn classical_bound(&self) -> f64 {
        self.n_senders as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_senders == 0 {
            return domain("at least one sender is required");
        }
        if self.total_qubits() > MAX_QUBITS {
            return domain(format!("{} qubits exceed the {MAX_QUBITS}-qubit limit", self.total_qubits()));
        }
        if let Receivers::Two { split } = self.receivers {
            if split == 0 || split >= self.n_senders {
                return domain(format!("split {split} must satisfy 1 <= split < {}", self.n_senders));
            }
        }
        Ok(())
    }

    pub fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        self.validate()?;
        if rho.n_qubits() != self.total_qubits() {
            return Err(QdcError::Dimension(format!(
                "layout needs {} qubits, state has {}",
                self.total_qubits(),
                rho.n_qubits()
            )));
        }
        Ok(())
    }

    /// Label such as `2S-1R`.
    pub fn label(&self) -> String {
        format!("{}S-{}R", self.n_senders, self.n_receivers())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EncodingStrategy {
    /// Senders apply no unitary; gives a lower bound on the capacity.
    Identity,
    Optimized(OptimizerConfig),
}

impl EncodingStrategy {
    pub fn optimized() -> Self {
        Self::Optimized(OptimizerConfig::default())
    }

    pub fn is_optimized(&self) -> bool {
        matches!(self, Self::Optimized(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity_bits: f64,
    pub classical_bound_bits: f64,
    /// `S(rho_R)`, or `[S(rho_R1), S(rho_R2)]`.
    pub receiver_entropy_terms: Vec<f64>,
    /// Minimized output entropy (the larger of the two for two receivers).
    pub channel_output_entropy: f64,
    /// Per-block minimized entropies, in block order.
    pub block_entropies: Vec<f64>,
    pub encoding: EncodingParams,
    pub dense_codeable: bool,
    /// Capacity minus classical bound before clipping at zero.
    pub raw_advantage_bits: f64,
    pub optimized: bool,
    pub evaluations: usize,
}

/// A reduced state whose first `kraus.len()` qubits are encoded and then sent through noise.
struct Block {
    rho: ComplexMatrix,
    kraus: Vec<KrausSet>,
}

fn blocks(rho: &DensityMatrix, layout: &PartyLayout, kraus: &[KrausSet]) -> Result<Vec<Block>> {
    let n = layout.n_senders;
    Ok(match layout.receivers {
        Receivers::One => vec![Block { rho: rho.matrix().clone(), kraus: kraus.to_vec() }],
        Receivers::Two { split } => {
            let keep1: Vec<usize> = (0..split).chain([n]).collect();
            let keep2: Vec<usize> = (split..n).chain([n + 1]).collect();
            vec![
                Block { rho: partial_trace(rho, &keep1)?.into_matrix(), kraus: kraus[..split].to_vec() },
                Block { rho: partial_trace(rho, &keep2)?.into_matrix(), kraus: kraus[split..].to_vec() },
            ]
        }
    })
}

fn receiver_entropies(rho: &DensityMatrix, layout: &PartyLayout) -> Result<Vec<f64>> {
    layout
        .receiver_qubits()
        .into_iter()
        .map(|q| von_neumann_entropy(&partial_trace(rho, &[q])?))
        .collect()
}

/// State after encoding with `enc` (flat angles, one triple per encoded qubit) and the channel.
fn encoded_output(rho: &ComplexMatrix, kraus: &[KrausSet], enc: &[f64]) -> ComplexMatrix {
    let mut m = rho.clone();
    for (q, k) in kraus.iter().enumerate() {
        let p = UnitaryParams::from_slice(&enc[3 * q..3 * q + 3]);
        m = if p == UnitaryParams::IDENTITY {
            apply_raw(&m, k.raw(), q)
        } else {
            apply_raw(&m, &k.after_unitary(&unitary_entries(p)), q)
        };
    }
    m
}

fn block_entropy(b: &Block, enc: &[f64]) -> Result<f64> {
    spectrum_entropy(&hermitian_eigenvalues(&encoded_output(&b.rho, &b.kraus, enc))?)
}

/// Output entropy of `rho` after per-sender encodings and channels, on the full register.
pub fn channel_output_entropy(rho: &DensityMatrix, kraus: &[KrausSet], encoding: &EncodingParams) -> Result<f64> {
    if encoding.per_sender.len() != kraus.len() || kraus.len() >= rho.n_qubits() {
        return domain("encoding and Kraus lists must cover the senders only");
    }
    let b = Block { rho: rho.matrix().clone(), kraus: kraus.to_vec() };
    block_entropy(&b, &encoding.to_flat())
}

fn finish(
    layout: &PartyLayout,
    receiver_terms: Vec<f64>,
    block_entropies: Vec<f64>,
    encoding: EncodingParams,
    optimized: bool,
    evaluations: usize,
) -> CapacityResult {
    let n = layout.classical_bound();
    let worst = block_entropies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw = receiver_terms.iter().sum::<f64>() - worst;
    let capacity = n.max(n + raw);
    CapacityResult {
        capacity_bits: capacity,
        classical_bound_bits: n,
        receiver_entropy_terms: receiver_terms,
        channel_output_entropy: worst,
        block_entropies,
        encoding,
        dense_codeable: capacity > n + DENSE_CODING_SLACK,
        raw_advantage_bits: raw,
        optimized,
        evaluations,
    }
}

/// Capacity (one receiver) or LOCC bound (two receivers) without noise.
pub fn capacity_noiseless(rho: &DensityMatrix, layout: &PartyLayout) -> Result<CapacityResult> {
    layout.check_state(rho)?;
    let kraus = vec![KrausSet::identity(); layout.n_senders];
    let bl = blocks(rho, layout, &kraus)?;
    let ents = bl
        .iter()
        .map(|b| von_neumann_entropy(&DensityMatrix::new_unchecked(b.rho.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(layout, receiver_entropies(rho, layout)?, ents, EncodingParams::identity(layout.n_senders), false, 0))
}

fn kraus_for(layout: &PartyLayout, spec: &ChannelSpec, kraus_override: Option<&[KrausSet]>) -> Result<Vec<KrausSet>> {
    spec.validate()?;
    match kraus_override {
        Some(k) if k.len() == layout.n_senders => Ok(k.to_vec()),
        Some(k) => domain(format!("{} Kraus sets supplied for {} senders", k.len(), layout.n_senders)),
        None if spec.is_random() => domain(
            "a channel with epsilon > 0 needs sampled Kraus sets; use the quenched average instead",
        ),
        None => Ok(vec![spec.deterministic_kraus()?; layout.n_senders]),
    }
}

/// Noisy capacity for either layout; dispatches on `layout.receivers`.
pub fn noisy_capacity(
    rho: &DensityMatrix,
    layout: &PartyLayout,
    spec: &ChannelSpec,
    kraus_override: Option<&[KrausSet]>,
    encoding: &EncodingStrategy,
) -> Result<CapacityResult> {
    layout.check_state(rho)?;
    let kraus = kraus_for(layout, spec, kraus_override)?;
    let bl = blocks(rho, layout, &kraus)?;
    let receiver_terms = receiver_entropies(rho, layout)?;
    let covariant = spec.is_covariant() && kraus_override.is_none();
    let cfg = match encoding {
        EncodingStrategy::Optimized(cfg) if !covariant => cfg,
        _ => {
            let ents = bl
                .iter()
                .map(|b| block_entropy(b, &vec![0.0; 3 * b.kraus.len()]))
                .collect::<Result<Vec<_>>>()?;
            let enc = EncodingParams::identity(layout.n_senders);
            return Ok(finish(layout, receiver_terms, ents, enc, false, 0));
        }
    };
    let mut ents = Vec::with_capacity(bl.len());
    let mut flat = Vec::with_capacity(3 * layout.n_senders);
    let mut evaluations = 0;
    for (i, b) in bl.iter().enumerate() {
        let block_cfg = if i == 0 { cfg.clone() } else { cfg.clone().with_seed(mix_seed(cfg.seed, i as u64)) };
        let r = minimize_flat(|x: &[f64]| block_entropy(b, x).unwrap_or(f64::NAN), b.kraus.len(), &block_cfg)?;
        ents.push(r.best_value);
        flat.extend(r.best_params.to_flat());
        evaluations += r.evaluations;
    }
    Ok(finish(layout, receiver_terms, ents, EncodingParams::from_flat(&flat), true, evaluations))
}

/// One-receiver noisy capacity.
pub fn capacity_one_receiver(
    rho: &DensityMatrix,
    layout: &PartyLayout,
    spec: &ChannelSpec,
    kraus_override: Option<&[KrausSet]>,
    encoding: &EncodingStrategy,
) -> Result<CapacityResult> {
    if layout.receivers != Receivers::One {
        return domain("capacity_one_receiver needs a one-receiver layout");
    }
    noisy_capacity(rho, layout, spec, kraus_override, encoding)
}

/// Two-receiver noisy LOCC upper bound; the two blocks are minimized independently.
pub fn bound_two_receivers(
    rho: &DensityMatrix,
    layout: &PartyLayout,
    spec: &ChannelSpec,
    kraus_override: Option<&[KrausSet]>,
    encoding: &EncodingStrategy,
) -> Result<CapacityResult> {
    if layout.receivers == Receivers::One {
        return domain("bound_two_receivers needs a two-receiver layout");
    }
    noisy_capacity(rho, layout, spec, kraus_override, encoding)
}

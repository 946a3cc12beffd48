//! Local Pauli noise channels with non-Markovian Kraus weights and Gaussian
//! disorder on the Pauli unitaries.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, QdcError, Result};
use crate::qmath::{accumulate_conjugated, c, op2, ComplexMatrix, DensityMatrix, C64};
use crate::states::KvArgs;

/// Tolerance on `sum K^dag K = I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Dephasing,
    Depolarizing,
}

impl ChannelKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dephasing => "dephasing",
            Self::Depolarizing => "depolarizing",
        }
    }

    /// Largest admissible noise strength for the given non-Markovianity.
    pub fn p_max(&self, alpha: f64) -> f64 {
        match self {
            Self::Dephasing => 0.5,
            Self::Depolarizing if alpha > 0.0 => (1.0 / (3.0 * alpha)).min(1.0),
            Self::Depolarizing => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrawPolicy {
    /// Every noisy qubit gets its own disorder draw.
    #[default]
    IndependentPerQubit,
    /// One draw per realization, reused on every noisy qubit.
    SharedAcrossQubits,
}

impl DrawPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            Self::IndependentPerQubit => "per-qubit",
            Self::SharedAcrossQubits => "shared",
        }
    }
}

impl FromStr for DrawPolicy {
    type Err = QdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "per-qubit" | "independent" | "independent-per-qubit" => Ok(Self::IndependentPerQubit),
            "shared" | "shared-across-qubits" => Ok(Self::SharedAcrossQubits),
            other => Err(QdcError::Parse(format!("unknown draw policy '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub alpha: f64,
    pub p: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub draw_policy: DrawPolicy,
}

impl ChannelSpec {
    /// Deterministic Pauli channel.
    pub fn new(kind: ChannelKind, alpha: f64, p: f64) -> Result<Self> {
        Self::random(kind, alpha, p, 0.0, DrawPolicy::default())
    }

    pub fn random(kind: ChannelKind, alpha: f64, p: f64, epsilon: f64, draw_policy: DrawPolicy) -> Result<Self> {
        let spec = Self { kind, alpha, p, epsilon, draw_policy };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dephasing(alpha: f64, p: f64) -> Result<Self> {
        Self::new(ChannelKind::Dephasing, alpha, p)
    }

    pub fn depolarizing(alpha: f64, p: f64) -> Result<Self> {
        Self::new(ChannelKind::Depolarizing, alpha, p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && (0.0..=1.0).contains(&self.alpha)) {
            return domain(format!("alpha = {} outside [0, 1]", self.alpha));
        }
        let p_max = self.p_max();
        if !(self.p.is_finite() && self.p >= 0.0 && self.p <= p_max + 1e-12) {
            return domain(format!("{} p = {} outside [0, {p_max}]", self.kind.name(), self.p));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return domain(format!("epsilon = {} must be a finite nonnegative number", self.epsilon));
        }
        Ok(())
    }

    pub fn p_max(&self) -> f64 {
        self.kind.p_max(self.alpha)
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        let s = Self { p, ..*self };
        s.validate()?;
        Ok(s)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let s = Self { alpha, ..*self };
        s.validate()?;
        Ok(s)
    }

    pub fn is_random(&self) -> bool {
        self.epsilon > 0.0
    }

    /// Deterministic depolarizing noise commutes with every Pauli, so the encoding
    /// optimization is redundant.
    pub fn is_covariant(&self) -> bool {
        self.kind == ChannelKind::Depolarizing && !self.is_random()
    }

    /// The deterministic Kraus set (exact Paulis).
    pub fn deterministic_kraus(&self) -> Result<KrausSet> {
        match self.kind {
            ChannelKind::Dephasing => kraus_dephasing(self.alpha, self.p, &pauli(Pauli::Z)),
            ChannelKind::Depolarizing => {
                kraus_depolarizing(self.alpha, self.p, &pauli(Pauli::X), &pauli(Pauli::Y), &pauli(Pauli::Z))
            }
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:alpha={},p={},eps={},draw={}",
            self.kind.name(),
            self.alpha,
            self.p,
            self.epsilon,
            self.draw_policy.name()
        )
    }
}

impl FromStr for ChannelSpec {
    type Err = QdcError;

    /// `dephasing:alpha=0.5,p=0.3,eps=0`, `depolarizing:alpha=0.3,p=0.1,eps=0.7,draw=per-qubit`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        let kind = match kind.trim().to_ascii_lowercase().as_str() {
            "dephasing" | "dph" => ChannelKind::Dephasing,
            "depolarizing" | "depolarising" | "dp" => ChannelKind::Depolarizing,
            other => return Err(QdcError::Parse(format!("unknown channel kind '{other}'"))),
        };
        let mut kv = KvArgs::parse(body)?;
        let alpha = kv.f64("alpha")?.unwrap_or(0.0);
        let p = kv.f64("p")?.unwrap_or(0.0);
        let epsilon = match kv.f64("eps")? {
            Some(e) => e,
            None => kv.f64("epsilon")?.unwrap_or(0.0),
        };
        let draw_policy = kv.take("draw").map(|d| d.parse()).transpose()?.unwrap_or_default();
        kv.finish("channel")?;
        Self::random(kind, alpha, p, epsilon, draw_policy)
    }
}

/// Euler-type angles of a single-qubit unitary (global phase fixed to zero).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UnitaryParams {
    pub omega: f64,
    pub theta: f64,
    pub delta: f64,
}

impl UnitaryParams {
    pub const IDENTITY: Self = Self { omega: 0.0, theta: 0.0, delta: 0.0 };

    pub fn new(omega: f64, theta: f64, delta: f64) -> Self {
        Self { omega, theta, delta }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.omega, self.theta, self.delta]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self { omega: v[0], theta: v[1], delta: v[2] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
}

/// Angles at which the parameterized unitary reproduces each Pauli up to a phase.
pub fn pauli_means(which: Pauli) -> UnitaryParams {
    match which {
        Pauli::X => UnitaryParams::new(2.0 * PI, PI, PI),
        Pauli::Y => UnitaryParams::new(3.0 * PI, PI, PI),
        Pauli::Z => UnitaryParams::new(2.0 * PI, 0.0, 3.0 * PI),
    }
}

/// The exact Pauli matrix.
pub fn pauli(which: Pauli) -> ComplexMatrix {
    let (z, o, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    let data = match which {
        Pauli::X => vec![z, o, o, z],
        Pauli::Y => vec![z, -i, i, z],
        Pauli::Z => vec![o, z, z, -o],
    };
    ComplexMatrix::new(2, data).expect("2x2 Pauli")
}

/// `Rz(omega) Ry(theta) Rz(delta)` with half angles in every factor.
pub fn unitary_from_params(u: UnitaryParams) -> ComplexMatrix {
    ComplexMatrix::new(2, unitary_entries(u).to_vec()).expect("2x2 unitary")
}

pub(crate) fn unitary_entries(u: UnitaryParams) -> [C64; 4] {
    let (s, cth) = (0.5 * u.theta).sin_cos();
    let sum = 0.5 * (u.omega + u.delta);
    let diff = 0.5 * (u.omega - u.delta);
    [
        C64::from_polar(cth, sum),
        C64::from_polar(-s, diff),
        C64::from_polar(s, -diff),
        C64::from_polar(cth, -sum),
    ]
}

/// Ordered Kraus operators of one single-qubit channel.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    ops: Vec<[C64; 4]>,
}

impl KrausSet {
    /// Checks dimensions and completeness.
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        if operators.is_empty() {
            return domain("Kraus set needs at least one operator");
        }
        if operators.iter().any(|k| k.dim() != 2) {
            return Err(QdcError::Dimension("Kraus operators must be 2x2".into()));
        }
        let set = Self { ops: operators.iter().map(op2).collect() };
        let defect = set.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return domain(format!("Kraus set violates completeness by {defect:.3e}"));
        }
        Ok(set)
    }

    pub fn identity() -> Self {
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        Self { ops: vec![[o, z, z, o]] }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn operators(&self) -> Vec<ComplexMatrix> {
        self.ops.iter().map(|o| ComplexMatrix::new(2, o.to_vec()).expect("2x2")).collect()
    }

    pub(crate) fn raw(&self) -> &[[C64; 4]] {
        &self.ops
    }

    /// Max entrywise `|sum K^dag K - I|`.
    pub fn completeness_defect(&self) -> f64 {
        let mut acc = [c(0.0, 0.0); 4];
        for k in &self.ops {
            for i in 0..2 {
                for j in 0..2 {
                    acc[2 * i + j] += k[i].conj() * k[j] + k[2 + i].conj() * k[2 + j];
                }
            }
        }
        let id = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        acc.iter().zip(id).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Kraus operators of `rho -> K(U rho U^dag)`.
    pub(crate) fn after_unitary(&self, u: &[C64; 4]) -> Vec<[C64; 4]> {
        self.ops.iter().map(|k| mul2(k, u)).collect()
    }
}

pub(crate) fn mul2(a: &[C64; 4], b: &[C64; 4]) -> [C64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn check_unitary(u: &ComplexMatrix, name: &str) -> Result<()> {
    if u.dim() != 2 || !u.is_unitary(1e-10) {
        return domain(format!("{name} must be a 2x2 unitary"));
    }
    Ok(())
}

/// Dephasing weights `((1 - alpha p)(1 - p), (1 + alpha(1 - p)) p)`.
pub fn dephasing_weights(alpha: f64, p: f64) -> (f64, f64) {
    ((1.0 - alpha * p) * (1.0 - p), (1.0 + alpha * (1.0 - p)) * p)
}

/// Depolarizing weights: identity, then each of the three Paulis.
pub fn depolarizing_weights(alpha: f64, p: f64) -> (f64, f64) {
    ((1.0 - 3.0 * alpha * p) * (1.0 - p), (1.0 + 3.0 * alpha * (1.0 - p)) * p / 3.0)
}

pub fn kraus_dephasing(alpha: f64, p: f64, uz: &ComplexMatrix) -> Result<KrausSet> {
    ChannelSpec::dephasing(alpha, p)?;
    check_unitary(uz, "Uz")?;
    let (w0, w1) = dephasing_weights(alpha, p);
    let id = ComplexMatrix::identity(2)?;
    KrausSet::new(vec![id.scale(c(w0.max(0.0).sqrt(), 0.0)), uz.scale(c(w1.max(0.0).sqrt(), 0.0))])
}

pub fn kraus_depolarizing(
    alpha: f64,
    p: f64,
    ux: &ComplexMatrix,
    uy: &ComplexMatrix,
    uz: &ComplexMatrix,
) -> Result<KrausSet> {
    if 1.0 - 3.0 * alpha * p < -1e-12 {
        return domain(format!("1 - 3 alpha p = {} is negative", 1.0 - 3.0 * alpha * p));
    }
    ChannelSpec::depolarizing(alpha, p)?;
    for (u, name) in [(ux, "Ux"), (uy, "Uy"), (uz, "Uz")] {
        check_unitary(u, name)?;
    }
    let (w0, w1) = depolarizing_weights(alpha, p);
    let (s0, s1) = (c(w0.max(0.0).sqrt(), 0.0), c(w1.max(0.0).sqrt(), 0.0));
    KrausSet::new(vec![ComplexMatrix::identity(2)?.scale(s0), ux.scale(s1), uy.scale(s1), uz.scale(s1)])
}

fn sample_unitary(mean: UnitaryParams, eps: f64, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    if eps == 0.0 {
        return unitary_from_params(mean);
    }
    let draw = |m: f64, rng: &mut ChaCha8Rng| Normal::new(m, eps).expect("finite eps").sample(rng);
    let omega = draw(mean.omega, rng);
    let theta = draw(mean.theta, rng);
    let delta = draw(mean.delta, rng);
    unitary_from_params(UnitaryParams { omega, theta, delta })
}

/// One Kraus set whose Pauli unitaries carry Gaussian angle disorder of width `epsilon`.
pub fn sample_random_kraus(spec: &ChannelSpec, rng: &mut ChaCha8Rng) -> Result<KrausSet> {
    spec.validate()?;
    match spec.kind {
        ChannelKind::Dephasing => {
            let uz = sample_unitary(pauli_means(Pauli::Z), spec.epsilon, rng);
            kraus_dephasing(spec.alpha, spec.p, &uz)
        }
        ChannelKind::Depolarizing => {
            let [ux, uy, uz] = Pauli::ALL.map(|w| sample_unitary(pauli_means(w), spec.epsilon, rng));
            kraus_depolarizing(spec.alpha, spec.p, &ux, &uy, &uz)
        }
    }
}

/// SplitMix64 finalizer applied to `master ^ golden * (index + 1)`.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream for realization `index` under `master`.
pub fn realization_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(master, index))
}

/// Kraus sets for `n_targets` noisy qubits in one disorder realization.
pub fn sample_realization(spec: &ChannelSpec, n_targets: usize, rng: &mut ChaCha8Rng) -> Result<Vec<KrausSet>> {
    match spec.draw_policy {
        DrawPolicy::IndependentPerQubit => (0..n_targets).map(|_| sample_random_kraus(spec, rng)).collect(),
        DrawPolicy::SharedAcrossQubits => {
            let k = sample_random_kraus(spec, rng)?;
            Ok(vec![k; n_targets])
        }
    }
}

pub(crate) fn apply_raw(m: &ComplexMatrix, ops: &[[C64; 4]], q: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros_unchecked(m.dim());
    for op in ops {
        accumulate_conjugated(m, op, q, &mut out);
    }
    out
}

/// Applies `per_qubit_kraus[i]` to qubit `targets[i]`, in order.
pub fn apply_local_channel(rho: &DensityMatrix, per_qubit_kraus: &[KrausSet], targets: &[usize]) -> Result<DensityMatrix> {
    if per_qubit_kraus.len() != targets.len() {
        return domain(format!("{} Kraus sets for {} targets", per_qubit_kraus.len(), targets.len()));
    }
    let n = rho.n_qubits();
    for (i, &t) in targets.iter().enumerate() {
        if t >= n {
            return domain(format!("target qubit {t} out of range for {n} qubits"));
        }
        if targets[..i].contains(&t) {
            return domain(format!("target qubit {t} repeated"));
        }
    }
    let mut m = rho.matrix().clone();
    for (k, &t) in per_qubit_kraus.iter().zip(targets) {
        m = apply_raw(&m, k.raw(), t);
    }
    Ok(DensityMatrix::new_unchecked(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::hermitian_eigenvalues;
    use crate::states::{build, ResourceState};
    use approx::assert_abs_diff_eq;

    fn phase_equal(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
        // a = e^{i phi} b for some phi
        let idx = (0..4).max_by(|&i, &j| b.data()[i].norm().total_cmp(&b.data()[j].norm())).unwrap();
        let ph = a.data()[idx] / b.data()[idx];
        a.max_abs_diff(&b.scale(ph)) < 1e-12 && (ph.norm() - 1.0).abs() < 1e-12
    }

    #[test]
    fn pauli_triples() {
        assert_eq!(pauli_means(Pauli::X).to_array(), [2.0 * PI, PI, PI]);
        assert_eq!(pauli_means(Pauli::Y).to_array(), [3.0 * PI, PI, PI]);
        assert_eq!(pauli_means(Pauli::Z).to_array(), [2.0 * PI, 0.0, 3.0 * PI]);
    }

    #[test]
    fn triples_give_paulis_up_to_phase() {
        for w in Pauli::ALL {
            let u = unitary_from_params(pauli_means(w));
            assert!(phase_equal(&u, &pauli(w)), "{w:?}");
        }
        let i = c(0.0, 1.0);
        let uz = unitary_from_params(pauli_means(Pauli::Z));
        assert!(uz.max_abs_diff(&pauli(Pauli::Z).scale(i)) < 1e-12);
        let ux = unitary_from_params(pauli_means(Pauli::X));
        assert!(ux.max_abs_diff(&pauli(Pauli::X).scale(-i)) < 1e-12);
        let id = unitary_from_params(UnitaryParams::IDENTITY);
        assert!(id.max_abs_diff(&ComplexMatrix::identity(2).unwrap()) < 1e-15);
    }

    #[test]
    fn dephasing_weights_examples() {
        let k = kraus_dephasing(0.0, 0.5, &pauli(Pauli::Z)).unwrap();
        let ops = k.operators();
        assert_abs_diff_eq!(ops[0].get(0, 0).re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(ops[1].get(1, 1).re, -(0.5f64.sqrt()), epsilon = 1e-15);
        let (a, b) = dephasing_weights(0.5, 0.3);
        assert_abs_diff_eq!(a, 0.595, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 0.405, epsilon = 1e-12);
        let k0 = kraus_dephasing(0.0, 0.0, &pauli(Pauli::Z)).unwrap();
        assert_eq!(k0.operators()[1].max_abs_diff(&ComplexMatrix::zeros(2).unwrap()), 0.0);
    }

    #[test]
    fn depolarizing_weights_examples() {
        let (a, b) = depolarizing_weights(0.0, 0.75);
        assert_abs_diff_eq!(a, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 0.25, epsilon = 1e-12);
        let (a, b) = depolarizing_weights(0.5, 0.2);
        assert_abs_diff_eq!(a, 0.56, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 2.2 * 0.2 / 3.0, epsilon = 1e-12);
        let (x, y, z) = (pauli(Pauli::X), pauli(Pauli::Y), pauli(Pauli::Z));
        assert!(kraus_depolarizing(0.5, 0.2, &x, &y, &z).unwrap().completeness_defect() < 1e-12);
        assert!(kraus_depolarizing(0.5, 0.7, &x, &y, &z).is_err());
    }

    #[test]
    fn spec_ranges() {
        assert!(ChannelSpec::dephasing(0.3, 0.5).is_ok());
        assert!(ChannelSpec::dephasing(0.3, 0.51).is_err());
        assert!(ChannelSpec::depolarizing(0.0, 1.0).is_ok());
        assert!(ChannelSpec::depolarizing(0.5, 2.0 / 3.0).is_ok());
        assert!(ChannelSpec::depolarizing(0.5, 0.7).is_err());
        assert!(ChannelSpec::depolarizing(1.2, 0.1).is_err());
        assert!(ChannelSpec::random(ChannelKind::Dephasing, 0.0, 0.1, -1.0, DrawPolicy::default()).is_err());
    }

    #[test]
    fn spec_parse_round_trip() {
        let s: ChannelSpec = "depolarizing:alpha=0.3,p=0.1,eps=0.7,draw=shared".parse().unwrap();
        assert_eq!(s.kind, ChannelKind::Depolarizing);
        assert_eq!(s.draw_policy, DrawPolicy::SharedAcrossQubits);
        assert_eq!(s.to_string().parse::<ChannelSpec>().unwrap(), s);
        let d: ChannelSpec = "dephasing:alpha=0.5,p=0.3".parse().unwrap();
        assert_eq!(d.epsilon, 0.0);
        assert_eq!(d.draw_policy, DrawPolicy::IndependentPerQubit);
        assert!("dephasing:alpha=0.5,p=0.6".parse::<ChannelSpec>().is_err());
        assert!("amplitude:p=0.1".parse::<ChannelSpec>().is_err());
        assert!("dephasing:q=0.1".parse::<ChannelSpec>().is_err());
    }

    #[test]
    fn zero_disorder_matches_deterministic_channel() {
        let rho = build(&ResourceState::Gghz { n_qubits: 3, x: 0.6 }).unwrap();
        for kind in [ChannelKind::Dephasing, ChannelKind::Depolarizing] {
            let spec = ChannelSpec::new(kind, 0.4, 0.2).unwrap();
            let mut rng = realization_rng(1, 2);
            let ks = sample_realization(&spec, 2, &mut rng).unwrap();
            let det = vec![spec.deterministic_kraus().unwrap(); 2];
            let a = apply_local_channel(&rho, &ks, &[0, 1]).unwrap();
            let b = apply_local_channel(&rho, &det, &[0, 1]).unwrap();
            assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
        }
    }

    #[test]
    fn full_dephaser_kills_ghz_coherence() {
        let rho = build(&ResourceState::Gghz { n_qubits: 3, x: std::f64::consts::FRAC_1_SQRT_2 }).unwrap();
        let k = ChannelSpec::dephasing(0.0, 0.5).unwrap().deterministic_kraus().unwrap();
        let out = apply_local_channel(&rho, &[k.clone(), k], &[0, 1]).unwrap();
        assert!(out.matrix().get(0, 7).norm() < 1e-15);
        assert_abs_diff_eq!(out.matrix().get(0, 0).re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn single_dephasing_on_ghz_keeps_coherence_sign() {
        // One full dephaser already kills it; a partial one scales it by 1 - 2 w1.
        let rho = build(&ResourceState::Gghz { n_qubits: 3, x: std::f64::consts::FRAC_1_SQRT_2 }).unwrap();
        let spec = ChannelSpec::dephasing(0.5, 0.3).unwrap();
        let out = apply_local_channel(&rho, &[spec.deterministic_kraus().unwrap()], &[0]).unwrap();
        let (_, w1) = dephasing_weights(0.5, 0.3);
        assert_abs_diff_eq!(out.matrix().get(0, 7).re, 0.5 * (1.0 - 2.0 * w1), epsilon = 1e-14);
    }

    #[test]
    fn apply_rejects_bad_targets() {
        let rho = build(&ResourceState::Bell).unwrap();
        let k = KrausSet::identity();
        assert!(apply_local_channel(&rho, &[k.clone()], &[2]).is_err());
        assert!(apply_local_channel(&rho, &[k.clone(), k.clone()], &[0, 0]).is_err());
        assert!(apply_local_channel(&rho, &[k], &[]).is_err());
    }

    #[test]
    fn identity_channel_is_noop() {
        let rho = build(&ResourceState::Gw3 { a: 0.2, b: 0.3 }).unwrap();
        let ks = vec![KrausSet::identity(); 3];
        let out = apply_local_channel(&rho, &ks, &[0, 1, 2]).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn kraus_new_rejects_incomplete_sets() {
        let half = ComplexMatrix::identity(2).unwrap().scale(c(0.5, 0.0));
        assert!(KrausSet::new(vec![half]).is_err());
        assert!(KrausSet::new(vec![]).is_err());
        assert!(KrausSet::new(vec![ComplexMatrix::identity(4).unwrap()]).is_err());
    }

    #[test]
    fn mix_seed_is_stable() {
        assert_eq!(mix_seed(7, 0), mix_seed(7, 0));
        assert_ne!(mix_seed(7, 0), mix_seed(7, 1));
        assert_ne!(mix_seed(7, 0), mix_seed(8, 0));
        // Frozen so that realization streams never drift between releases.
        assert_eq!(mix_seed(0, 0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn depolarized_bell_spectrum() {
        let rho = build(&ResourceState::Bell).unwrap();
        let spec = ChannelSpec::depolarizing(0.5, 0.2).unwrap();
        let out = apply_local_channel(&rho, &[spec.deterministic_kraus().unwrap()], &[0]).unwrap();
        let ev = hermitian_eigenvalues(out.matrix()).unwrap();
        assert_abs_diff_eq!(ev[0], 0.56, epsilon = 1e-12);
        for e in &ev[1..] {
            assert_abs_diff_eq!(*e, 0.44 / 3.0, epsilon = 1e-12);
        }
    }
}

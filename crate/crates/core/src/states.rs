//! Resource states shared between senders and receivers.
//!
//! Qubit order is always senders first, receiver(s) last.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, QdcError, Result};
use crate::qmath::{c, DensityMatrix, C64};

const PARAM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResourceState {
    /// `x|0...0> + sqrt(1 - x^2)|1...1>` on `n_qubits` qubits.
    Gghz { n_qubits: usize, x: f64 },
    /// `sqrt(a)|001> + sqrt(b)|010> + sqrt(1-a-b)|100>`.
    Gw3 { a: f64, b: f64 },
    /// `sqrt(a)|0001> + sqrt(b)|0010> + sqrt(c)|0100> + sqrt(1-a-b-c)|1000>`.
    Gw4 { a: f64, b: f64, c: f64 },
    /// Equal-weight W state.
    WUniform { n_qubits: usize },
    /// `(|00> + |11>)/sqrt(2)`.
    Bell,
}

impl ResourceState {
    pub fn n_qubits(&self) -> usize {
        match *self {
            Self::Gghz { n_qubits, .. } | Self::WUniform { n_qubits } => n_qubits,
            Self::Gw3 { .. } => 3,
            Self::Gw4 { .. } => 4,
            Self::Bell => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64, name: &str| -> Result<()> {
            if !(v.is_finite() && (-PARAM_TOL..=1.0 + PARAM_TOL).contains(&v)) {
                return domain(format!("{name} = {v} outside [0, 1]"));
            }
            Ok(())
        };
        match *self {
            Self::Gghz { n_qubits, x } => {
                if !(3..=5).contains(&n_qubits) {
                    return domain(format!("gGHZ needs 3..=5 qubits, got {n_qubits}"));
                }
                unit(x, "x")
            }
            Self::Gw3 { a, b } => {
                unit(a, "a")?;
                unit(b, "b")?;
                unit(a + b, "a + b")
            }
            Self::Gw4 { a, b, c } => {
                unit(a, "a")?;
                unit(b, "b")?;
                unit(c, "c")?;
                unit(a + b + c, "a + b + c")
            }
            Self::WUniform { n_qubits } => {
                if !(3..=4).contains(&n_qubits) {
                    return domain(format!("W state needs 3 or 4 qubits, got {n_qubits}"));
                }
                Ok(())
            }
            Self::Bell => Ok(()),
        }
    }

    /// The parameter that `sweep --axis state` varies: `x` for gGHZ, `b` for gW.
    pub fn primary_param(&self) -> Option<f64> {
        match *self {
            Self::Gghz { x, .. } => Some(x),
            Self::Gw3 { b, .. } | Self::Gw4 { b, .. } => Some(b),
            Self::WUniform { .. } | Self::Bell => None,
        }
    }

    pub fn with_primary_param(&self, v: f64) -> Result<Self> {
        let s = match *self {
            Self::Gghz { n_qubits, .. } => Self::Gghz { n_qubits, x: v },
            Self::Gw3 { a, .. } => Self::Gw3 { a, b: v },
            Self::Gw4 { a, c, .. } => Self::Gw4 { a, b: v, c },
            Self::WUniform { .. } | Self::Bell => {
                return domain(format!("state '{}' has no free parameter", self.kind_name()))
            }
        };
        s.validate()?;
        Ok(s)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Gghz { .. } => "gghz",
            Self::Gw3 { .. } => "gw3",
            Self::Gw4 { .. } => "gw4",
            Self::WUniform { .. } => "w",
            Self::Bell => "bell",
        }
    }

    /// Comma-separated `key=value` list; the part after `:` in the specifier.
    pub fn params_string(&self) -> String {
        match *self {
            Self::Gghz { n_qubits, x } => format!("n={n_qubits},x={x}"),
            Self::Gw3 { a, b } => format!("a={a},b={b}"),
            Self::Gw4 { a, b, c } => format!("a={a},b={b},c={c}"),
            Self::WUniform { n_qubits } => format!("n={n_qubits}"),
            Self::Bell => String::new(),
        }
    }
}

fn basis(n: usize, bits: &str) -> usize {
    debug_assert_eq!(bits.len(), n);
    usize::from_str_radix(bits, 2).expect("binary literal")
}

fn sqrt_weight(w: f64) -> f64 {
    w.max(0.0).sqrt()
}

/// Amplitude vector of a resource state.
pub fn amplitudes(state: &ResourceState) -> Result<Vec<C64>> {
    state.validate()?;
    let n = state.n_qubits();
    let mut v = vec![c(0.0, 0.0); 1 << n];
    match *state {
        ResourceState::Gghz { x, .. } => {
            v[0] = c(x, 0.0);
            v[(1 << n) - 1] = c(sqrt_weight(1.0 - x * x), 0.0);
        }
        ResourceState::Gw3 { a, b } => {
            v[basis(3, "001")] = c(sqrt_weight(a), 0.0);
            v[basis(3, "010")] = c(sqrt_weight(b), 0.0);
            v[basis(3, "100")] = c(sqrt_weight(1.0 - a - b), 0.0);
        }
        ResourceState::Gw4 { a, b, c: cw } => {
            v[basis(4, "0001")] = c(sqrt_weight(a), 0.0);
            v[basis(4, "0010")] = c(sqrt_weight(b), 0.0);
            v[basis(4, "0100")] = c(sqrt_weight(cw), 0.0);
            v[basis(4, "1000")] = c(sqrt_weight(1.0 - a - b - cw), 0.0);
        }
        ResourceState::WUniform { .. } => {
            let amp = (1.0 / n as f64).sqrt();
            for k in 0..n {
                v[1 << k] = c(amp, 0.0);
            }
        }
        ResourceState::Bell => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            v[0] = c(h, 0.0);
            v[3] = c(h, 0.0);
        }
    }
    Ok(v)
}

pub fn build(state: &ResourceState) -> Result<DensityMatrix> {
    DensityMatrix::pure(&amplitudes(state)?)
}

/// The `|W_1/2>` family: a gW state whose receiver-excitation weight is fixed to 1/2.
pub fn w_half(n_qubits: usize, b: f64, c: Option<f64>) -> Result<ResourceState> {
    let state = match (n_qubits, c) {
        (3, None) => ResourceState::Gw3 { a: 0.5, b },
        (4, Some(c)) => ResourceState::Gw4 { a: 0.5, b, c },
        (4, None) => return domain("w_half(4, ..) needs both b and c"),
        (3, Some(_)) => return domain("w_half(3, ..) takes only b"),
        _ => return domain(format!("w_half needs 3 or 4 qubits, got {n_qubits}")),
    };
    let rest = b + c.unwrap_or(0.0);
    if b < 0.0 || c.is_some_and(|c| c < 0.0) || rest > 0.5 + PARAM_TOL {
        return domain(format!("remaining weights must be nonnegative and sum to <= 1/2, got {rest}"));
    }
    Ok(state)
}

fn parse_kv(body: &str) -> Result<Vec<(String, String)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| QdcError::Parse(format!("expected key=value, got '{kv}'")))?;
            Ok((k.trim().to_ascii_lowercase(), v.trim().to_string()))
        })
        .collect()
}

pub(crate) struct KvArgs(Vec<(String, String)>);

impl KvArgs {
    pub(crate) fn parse(body: &str) -> Result<Self> {
        parse_kv(body).map(Self)
    }

    pub(crate) fn take(&mut self, key: &str) -> Option<String> {
        let pos = self.0.iter().position(|(k, _)| k == key)?;
        Some(self.0.remove(pos).1)
    }

    pub(crate) fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|v| v.parse::<f64>().map_err(|e| QdcError::Parse(format!("{key}={v}: {e}"))))
            .transpose()
    }

    pub(crate) fn req_f64(&mut self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| QdcError::Parse(format!("missing '{key}'")))
    }

    pub(crate) fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key)
            .map(|v| v.parse::<usize>().map_err(|e| QdcError::Parse(format!("{key}={v}: {e}"))))
            .transpose()
    }

    pub(crate) fn finish(self, what: &str) -> Result<()> {
        match self.0.first() {
            Some((k, _)) => Err(QdcError::Parse(format!("unknown {what} parameter '{k}'"))),
            None => Ok(()),
        }
    }
}

impl FromStr for ResourceState {
    type Err = QdcError;

    /// `gghz:n=3,x=0.7071`, `gw3:a=0.5,b=0.25`, `gw4:a=..,b=..,c=..`, `w:n=4`,
    /// `whalf:n=3,b=0.25`, `bell`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = KvArgs::parse(body)?;
        let state = match kind.trim().to_ascii_lowercase().as_str() {
            "gghz" | "ghz" => {
                let n_qubits = kv.usize("n")?.unwrap_or(3);
                let x = kv.f64("x")?.unwrap_or(std::f64::consts::FRAC_1_SQRT_2);
                Self::Gghz { n_qubits, x }
            }
            "gw3" => Self::Gw3 { a: kv.req_f64("a")?, b: kv.req_f64("b")? },
            "gw4" => Self::Gw4 { a: kv.req_f64("a")?, b: kv.req_f64("b")?, c: kv.req_f64("c")? },
            "w" => Self::WUniform { n_qubits: kv.usize("n")?.unwrap_or(3) },
            "whalf" => {
                let n = kv.usize("n")?.unwrap_or(3);
                let b = kv.req_f64("b")?;
                let c = kv.f64("c")?;
                w_half(n, b, c)?
            }
            "bell" => Self::Bell,
            other => return Err(QdcError::Parse(format!("unknown state kind '{other}'"))),
        };
        kv.finish("state")?;
        state.validate()?;
        Ok(state)
    }
}

impl fmt::Display for ResourceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.params_string();
        if p.is_empty() {
            write!(f, "{}", self.kind_name())
        } else {
            write!(f, "{}:{}", self.kind_name(), p)
        }
    }
}

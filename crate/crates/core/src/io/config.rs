use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gates::{
    explicit_gate, haar_gate, kak_gate_from_params, lossless_gate_from_params, qutrit_gate_from_params, swap_gate,
    Gate, GateFamily,
};
use crate::lightcone::{LayerOrder, DEFAULT_LAMBDA0, DEFAULT_MAX_CHAIN_QUBITS, DEFAULT_P_FLOOR, DEFAULT_QFI_STEP};
use crate::linalg::{HermitianBasis, RngStream};
use crate::search::{SearchFamily, HIT_THRESHOLD, PATTERN_TOL};

use super::matrix::load_matrix;

/// Substream of the run seed used to draw a `haar` gate.
pub const GATE_STREAM: u64 = 1 << 40;
/// Substream of the run seed used for random input states.
pub const STATE_STREAM: u64 = (1 << 40) + 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Lightcone,
    Verify,
    HaarSweep,
    Search,
    Scan,
    Floquet,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Spectrum => "spectrum",
            Command::Lightcone => "lightcone",
            Command::Verify => "verify",
            Command::HaarSweep => "haar-sweep",
            Command::Search => "search",
            Command::Scan => "scan",
            Command::Floquet => "floquet",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub family: GateFamily,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    /// Local dimension for `swap` and `haar`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Matrix document for `explicit`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,
}

impl GateSpec {
    pub fn local_dim(&self) -> usize {
        match self.family {
            GateFamily::Kak | GateFamily::Lossless7 => 2,
            GateFamily::Qutrit24 => 3,
            GateFamily::Swap | GateFamily::Haar | GateFamily::Explicit => self.d.unwrap_or(2),
        }
    }

    pub fn build(&self, seed: u64, base: &Path) -> Result<Gate> {
        let p = &self.params;
        match self.family {
            GateFamily::Kak => kak_gate_from_params(p),
            GateFamily::Qutrit24 => qutrit_gate_from_params(p),
            GateFamily::Lossless7 => lossless_gate_from_params(p),
            GateFamily::Swap => swap_gate(self.local_dim()),
            GateFamily::Haar => haar_gate(self.local_dim(), &mut RngStream::new(seed, GATE_STREAM)),
            GateFamily::Explicit => {
                let rel = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::validation("gate.matrix", "required for explicit gates"))?;
                let m = load_matrix(&base.join(rel))?;
                let d = (m.nrows() as f64).sqrt().round() as usize;
                if self.d.is_some_and(|x| x != d) {
                    return Err(Error::validation(
                        "gate.d",
                        format!("matrix is {0}x{0}, not d²", m.nrows()),
                    ));
                }
                explicit_gate(d, m)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.params.len();
        let ok = match self.family {
            GateFamily::Kak => matches!(n, 3 | 15),
            GateFamily::Qutrit24 => matches!(n, 8 | 24 | 40),
            GateFamily::Lossless7 => matches!(n, 6 | 12),
            GateFamily::Swap | GateFamily::Haar | GateFamily::Explicit => n == 0,
        };
        if !ok {
            return Err(Error::validation(
                "gate.params",
                format!("{n} parameters do not fit family {:?}", self.family),
            ));
        }
        if self.params.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("gate.params", "non-finite parameter"));
        }
        if let Some(d) = self.d {
            if d < 2 {
                return Err(Error::validation("gate.d", "local dimension must be at least 2"));
            }
            if matches!(
                self.family,
                GateFamily::Kak | GateFamily::Lossless7 | GateFamily::Qutrit24
            ) && d != self.local_dim()
            {
                return Err(Error::validation("gate.d", "fixed by the gate family"));
            }
        }
        if self.family == GateFamily::Explicit && self.matrix.is_none() {
            return Err(Error::validation("gate.matrix", "required for explicit gates"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    /// Window size `M`.
    #[serde(default = "one")]
    pub sites: usize,
    /// Chain parameter `N` (the chain has `N + 1` sites).
    #[serde(default = "four")]
    pub n: usize,
    #[serde(default = "two_hundred")]
    pub t_max: usize,
}

fn one() -> usize {
    1
}
fn four() -> usize {
    4
}
fn two_hundred() -> usize {
    200
}

impl Default for ChainSpec {
    fn default() -> Self {
        ChainSpec {
            sites: 1,
            n: 4,
            t_max: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    Peripheral7,
    Lossy7,
    PhasePlus,
    /// Trace distance between two `phase_plus` states at `pair[0]` and `pair[1]`.
    PhasePlusPair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingSpec {
    pub kind: EncodingKind,
    #[serde(default = "default_lambda0")]
    pub lambda0: f64,
    /// Hermitian-exponent coordinates of `w`; taken from a `lossless7` gate when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<[f64; 2]>,
}

fn default_lambda0() -> f64 {
    DEFAULT_LAMBDA0
}

impl Default for EncodingSpec {
    fn default() -> Self {
        EncodingSpec {
            kind: EncodingKind::PhasePlus,
            lambda0: DEFAULT_LAMBDA0,
            w: None,
            theta_bar: None,
            pair: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Peripheral cutoff; `1e−9` for spectra and `1e−6` for the Haar sweep when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peripheral_eps: Option<f64>,
    pub qfi_delta: f64,
    pub p_floor: f64,
    pub oracle: f64,
    pub hit_threshold: f64,
    pub pattern: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            peripheral_eps: None,
            qfi_delta: DEFAULT_QFI_STEP,
            p_floor: DEFAULT_P_FLOOR,
            oracle: 1e-10,
            hit_threshold: HIT_THRESHOLD,
            pattern: PATTERN_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpec {
    pub family: SearchFamily,
    pub restarts: usize,
    pub evals: usize,
    /// Haar sweep sample count.
    pub samples: usize,
    pub grid: usize,
    pub fixed_axis: usize,
    pub restarts_per_point: usize,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            family: SearchFamily::Kak,
            restarts: 50,
            evals: 2000,
            samples: 1000,
            grid: 9,
            fixed_axis: 0,
            restarts_per_point: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FloquetSpec {
    pub order: LayerOrder,
    /// Site for Pauli expectations; the last site when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
    pub bins: usize,
}

impl Default for FloquetSpec {
    fn default() -> Self {
        FloquetSpec {
            order: LayerOrder::EvenFirst,
            site: None,
            bins: crate::diagnostics::DEFAULT_HISTOGRAM_BINS,
        }
    }
}

/// A complete run description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateSpec>,
    #[serde(default)]
    pub chain: ChainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<EncodingSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub search: SearchSpec,
    #[serde(default)]
    pub floquet: FloquetSpec,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Format {
            path: None,
            reason: e.to_string(),
        })
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Format {
            path: Some(path.to_path_buf()),
            reason: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format {
            path: None,
            reason: e.to_string(),
        })
    }

    fn gate_spec(&self) -> Result<&GateSpec> {
        self.gate
            .as_ref()
            .ok_or_else(|| Error::validation("gate", format!("required by `{}`", self.command)))
    }

    /// Check every range and size cap the command will touch.
    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        for (key, v) in [
            ("tolerances.peripheral_eps", t.peripheral_eps.unwrap_or(1.0)),
            ("tolerances.qfi_delta", t.qfi_delta),
            ("tolerances.oracle", t.oracle),
            ("tolerances.hit_threshold", t.hit_threshold),
            ("tolerances.pattern", t.pattern),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(key, "must be positive and finite"));
            }
        }
        if !(t.p_floor >= 0.0 && t.p_floor.is_finite()) {
            return Err(Error::validation("tolerances.p_floor", "must be non-negative"));
        }
        let c = &self.chain;
        if c.sites == 0 {
            return Err(Error::validation("chain.sites", "must be at least 1"));
        }
        match self.command {
            Command::Spectrum | Command::Lightcone | Command::Verify | Command::Floquet => {
                let g = self.gate_spec()?;
                g.validate()?;
                let d = g.local_dim();
                if self.command != Command::Floquet {
                    HermitianBasis::new(d, c.sites)?;
                }
                if matches!(self.command, Command::Verify | Command::Floquet) {
                    if !c.n.is_multiple_of(2) {
                        return Err(Error::validation("chain.n", format!("N = {} must be even", c.n)));
                    }
                    if c.n == 0 {
                        return Err(Error::validation("chain.n", "must be at least 2"));
                    }
                }
                if self.command == Command::Verify {
                    if c.sites > c.n + 1 {
                        return Err(Error::validation("chain.sites", "window larger than the chain"));
                    }
                    crate::lightcone::check_chain(d, c.n + 1, DEFAULT_MAX_CHAIN_QUBITS)?;
                }
                if self.command == Command::Floquet {
                    let sites = c.n + 1;
                    crate::lightcone::check_chain(
                        d,
                        sites,
                        (crate::diagnostics::DEFAULT_MAX_FLOQUET_DIM as f64).log2(),
                    )?;
                    if let Some(s) = self.floquet.site {
                        if s >= sites {
                            return Err(Error::validation("floquet.site", format!("outside a chain of {sites}")));
                        }
                    }
                    if self.floquet.bins == 0 {
                        return Err(Error::validation("floquet.bins", "must be at least 1"));
                    }
                }
                if self.command == Command::Lightcone {
                    if c.t_max < c.sites {
                        return Err(Error::validation("chain.t_max", "must be at least chain.sites"));
                    }
                    let e = self
                        .encoding
                        .as_ref()
                        .ok_or_else(|| Error::validation("encoding", "required by `lightcone`"))?;
                    self.validate_encoding(e, g)?;
                }
            }
            Command::HaarSweep => {
                let d = self.gate.as_ref().map_or(2, GateSpec::local_dim);
                HermitianBasis::new(d, c.sites)?;
                if self.search.samples == 0 {
                    return Err(Error::validation("search.samples", "must be at least 1"));
                }
            }
            Command::Search => {
                HermitianBasis::new(self.search.family.local_dim(), c.sites)?;
                if self.search.restarts == 0 || self.search.evals == 0 {
                    return Err(Error::validation(
                        "search.restarts",
                        "restarts and evals must be positive",
                    ));
                }
            }
            Command::Scan => {
                if c.sites != 2 {
                    return Err(Error::validation(
                        "chain.sites",
                        "the conjecture scan is defined for M = 2",
                    ));
                }
                if self.search.fixed_axis > 2 {
                    return Err(Error::validation("search.fixed_axis", "must be 0, 1 or 2"));
                }
                if self.search.grid < 2 || self.search.restarts_per_point == 0 {
                    return Err(Error::validation("search.grid", "grid ≥ 2 and restarts_per_point ≥ 1"));
                }
            }
        }
        Ok(())
    }

    fn validate_encoding(&self, e: &EncodingSpec, g: &GateSpec) -> Result<()> {
        if !e.lambda0.is_finite() {
            return Err(Error::validation("encoding.lambda0", "must be finite"));
        }
        match e.kind {
            EncodingKind::Peripheral7 | EncodingKind::Lossy7 => {
                if self.chain.sites != 1 || g.local_dim() != 2 {
                    return Err(Error::validation(
                        "encoding.kind",
                        "peripheral7 and lossy7 are single-qubit encodings",
                    ));
                }
                if e.w.is_none() && g.family != GateFamily::Lossless7 {
                    return Err(Error::validation("encoding.w", "required unless the gate is lossless7"));
                }
                if e.kind == EncodingKind::Lossy7 && e.theta_bar.is_none() && g.family != GateFamily::Lossless7 {
                    return Err(Error::validation(
                        "encoding.theta_bar",
                        "required unless the gate is lossless7",
                    ));
                }
            }
            EncodingKind::PhasePlus => {
                if g.local_dim() != 2 {
                    return Err(Error::validation("encoding.kind", "phase_plus needs qubits"));
                }
            }
            EncodingKind::PhasePlusPair => {
                if g.local_dim() != 2 {
                    return Err(Error::validation("encoding.kind", "phase_plus_pair needs qubits"));
                }
                match e.pair {
                    Some([a, b]) if a.is_finite() && b.is_finite() => {}
                    _ => return Err(Error::validation("encoding.pair", "two finite λ values required")),
                }
            }
        }
        Ok(())
    }
}

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{Command, EncodingKind, EncodingSpec, GateSpec, RunConfig, STATE_STREAM};
use super::matrix::write_atomic;
use crate::channel::{
    build_phi, channel_spectrum, singular_values_phi, validate_channel, ChannelReport, SpectrumEntry,
    DEFAULT_PERIPHERAL_EPS,
};
use crate::diagnostics::{
    eigenphase_statistics, eigenstate_site_expectations, floquet_spectrum, half_chain_entropy, EigenphaseReport,
    CUE_GAP_RATIO_PILOT, DEFAULT_HISTOGRAM_MAX,
};
use crate::error::{Error, Result};
use crate::gates::{dual_unitarity_residual, local_unitary, operator_schmidt, Gate, GateFamily};
use crate::lightcone::{
    brute_force_reduced_state_with, eta_curves, lightcone_reduced_state, DensityMatrix, Encoding, LayerOrder,
    QfiOptions, StateFamily, TransferCurve, DEFAULT_MAX_CHAIN_QUBITS,
};
use crate::linalg::{adjoint, c, max_abs_diff, sample_cue, trace, RngStream, C64, ZERO};
use crate::search::{
    conjecture_scan, haar_sweep, optimize_peripheral, scan_to_tsv, ScanOptions, ScanReport, SearchFamily,
    SearchOptions, SearchOutcome, SweepResult, SWEEP_PERIPHERAL_EPS,
};

/// Bumped whenever the record layout changes.
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct GateSummary {
    pub family: GateFamily,
    pub local_dim: usize,
    pub params: Vec<f64>,
    pub linear_entropy: f64,
    pub dual_unitarity_residual: f64,
}

impl GateSummary {
    fn new(g: &Gate) -> Result<Self> {
        Ok(GateSummary {
            family: g.family(),
            local_dim: g.local_dim(),
            params: g.params().to_vec(),
            linear_entropy: operator_schmidt(g)?.linear_entropy,
            dual_unitarity_residual: dual_unitarity_residual(g),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumPayload {
    pub gate: GateSummary,
    pub sites: usize,
    pub peripheral_eps: f64,
    pub z_max_modulus: f64,
    pub one_minus_z_max: f64,
    pub peripheral_count: usize,
    pub diagonalizability_condition: f64,
    pub near_defective: bool,
    pub eigenvalues: Vec<SpectrumEntry>,
    pub singular_values: Vec<f64>,
    pub channel: ChannelReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct LightconePayload {
    pub gate: GateSummary,
    pub encoding: EncodingSpec,
    pub qfi: QfiOptions,
    pub curve: TransferCurve,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyPayload {
    pub gate: GateSummary,
    pub n: usize,
    pub sites: usize,
    pub order: LayerOrder,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenstateRow {
    pub phase: f64,
    pub half_chain_entropy: f64,
    /// `⟨σ^x⟩, ⟨σ^y⟩, ⟨σ^z⟩` on the probe site; qubit chains only.
    pub pauli: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FloquetPayload {
    pub gate: GateSummary,
    pub n: usize,
    pub sites: usize,
    pub order: LayerOrder,
    pub probe_site: usize,
    pub statistics: EigenphaseReport,
    pub cue_gap_ratio: f64,
    pub eigenstates: Vec<EigenstateRow>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Spectrum(SpectrumPayload),
    Lightcone(LightconePayload),
    Verify(VerifyPayload),
    HaarSweep(SweepResult),
    Search(SearchOutcome),
    Scan(ScanReport),
    Floquet(FloquetPayload),
}

impl Payload {
    /// A completed run whose own check failed (exit code 3).
    pub fn failed(&self) -> bool {
        matches!(self, Payload::Verify(v) if !v.passed)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub artifact_version: u32,
    pub crate_version: &'static str,
    pub command: Command,
    pub seed: u64,
    pub config: RunConfig,
    pub config_sha256: String,
    /// Hash of the payload alone; equal configs give equal hashes.
    pub payload_sha256: String,
    pub wall_time_seconds: f64,
    pub payload: Payload,
}

fn sha256_json<T: Serialize>(x: &T) -> Result<String> {
    let bytes = serde_json::to_vec(x).map_err(|e| Error::Format {
        path: None,
        reason: e.to_string(),
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunRecord {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format {
            path: None,
            reason: e.to_string(),
        })
    }

    /// A few lines for the terminal.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} (seed {}, {:.2} s)\n",
            self.command, self.seed, self.wall_time_seconds
        );
        let _ = match &self.payload {
            Payload::Spectrum(p) => writeln!(
                s,
                "M = {}: |z_max| = {:.12}, 1 - |z_max| = {:.3e}, peripheral = {}, near-defective = {}",
                p.sites, p.z_max_modulus, p.one_minus_z_max, p.peripheral_count, p.near_defective
            ),
            Payload::Lightcone(p) => writeln!(
                s,
                "{:?} curve, {} points, eta(t_max) = {:.6e}, |z_max| = {:.12}",
                p.curve.metric,
                p.curve.steps.len(),
                p.curve.eta.last().copied().unwrap_or(f64::NAN),
                p.curve.z_max_modulus
            ),
            Payload::Verify(p) => writeln!(
                s,
                "oracle-equivalence {}, residual {:.3e} (tolerance {:.0e})",
                if p.passed { "PASS" } else { "FAIL" },
                p.residual,
                p.tolerance
            ),
            Payload::HaarSweep(p) => writeln!(
                s,
                "{} samples, mean |z_max| = {:.6}, peripheral = {}",
                p.samples,
                p.mean(),
                p.peripheral_count
            ),
            Payload::Search(p) => writeln!(
                s,
                "{} restarts, {} hits, {} below the entropy flag",
                p.restart_best.len(),
                p.hits.len(),
                p.low_entropy_hits
            ),
            Payload::Scan(p) => writeln!(
                s,
                "{} grid points, {} peripheral",
                p.points.len(),
                p.points.iter().filter(|q| q.peripheral).count()
            ),
            Payload::Floquet(p) => writeln!(
                s,
                "{} levels, mean gap ratio {:.4} (CUE {:.4})",
                p.statistics.levels, p.statistics.mean_gap_ratio, p.cue_gap_ratio
            ),
        };
        let _ = write!(s, "payload sha256 {}", self.payload_sha256);
        s
    }
}

/// Everything a run produced; nothing is on disk until [`RunOutput::write`].
pub struct RunOutput {
    pub record: RunRecord,
    /// Extra artifacts as (file name relative to the output directory, contents).
    pub files: Vec<(PathBuf, String)>,
}

impl RunOutput {
    /// Write `record.json` and the extra files into `dir`; returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.files.len() + 1);
        for (name, text) in &self.files {
            let p = dir.join(name);
            write_atomic(&p, text.as_bytes())?;
            written.push(p);
        }
        let p = dir.join("record.json");
        write_atomic(&p, self.record.to_json()?.as_bytes())?;
        written.push(p);
        Ok(written)
    }
}

/// Validate and execute `config`. Relative paths inside it resolve against `base`.
pub fn run(config: &RunConfig, base: &Path) -> Result<RunOutput> {
    config.validate()?;
    let start = Instant::now();
    let mut files = Vec::new();
    let payload = match config.command {
        Command::Spectrum => Payload::Spectrum(run_spectrum(config, base)?),
        Command::Lightcone => {
            let p = run_lightcone(config, base)?;
            files.push((PathBuf::from("curve.tsv"), curve_to_tsv(&p.curve)?));
            Payload::Lightcone(p)
        }
        Command::Verify => Payload::Verify(run_verify(config, base)?),
        Command::HaarSweep => {
            let d = config.gate.as_ref().map_or(2, GateSpec::local_dim);
            let eps = config.tolerances.peripheral_eps.unwrap_or(SWEEP_PERIPHERAL_EPS);
            let r = haar_sweep(
                d,
                config.chain.sites,
                config.search.samples,
                eps,
                &RngStream::new(config.seed, 0),
            )?;
            files.push((PathBuf::from("sweep.tsv"), sweep_to_tsv(&r)));
            Payload::HaarSweep(r)
        }
        Command::Search => {
            let s = &config.search;
            let opts = SearchOptions {
                restarts: s.restarts,
                evals_per_restart: s.evals,
                hit_threshold: config.tolerances.hit_threshold,
                pattern_tol: config.tolerances.pattern,
                ..SearchOptions::default()
            };
            let out = optimize_peripheral(s.family, config.chain.sites, &RngStream::new(config.seed, 0), opts)?;
            for (i, hit) in out.hits.iter().enumerate() {
                let replay = replay_config(config, hit.family, &hit.params);
                files.push((PathBuf::from(format!("hits/hit_{i:03}.toml")), replay.to_toml()?));
            }
            Payload::Search(out)
        }
        Command::Scan => {
            let s = &config.search;
            let opts = ScanOptions {
                fixed_axis: s.fixed_axis,
                grid: s.grid,
                restarts_per_point: s.restarts_per_point,
                evals_per_restart: s.evals,
                hit_threshold: config.tolerances.hit_threshold,
                pattern_tol: config.tolerances.pattern,
            };
            let r = conjecture_scan(config.chain.sites, &RngStream::new(config.seed, 0), opts)?;
            files.push((PathBuf::from("scan.tsv"), scan_to_tsv(&r)));
            Payload::Scan(r)
        }
        Command::Floquet => {
            let p = run_floquet(config, base)?;
            files.push((PathBuf::from("eigenstates.tsv"), eigenstates_to_tsv(&p)));
            Payload::Floquet(p)
        }
    };
    let record = RunRecord {
        artifact_version: ARTIFACT_VERSION,
        crate_version: env!("CARGO_PKG_VERSION"),
        command: config.command,
        seed: config.seed,
        config: config.clone(),
        config_sha256: sha256_json(config)?,
        payload_sha256: sha256_json(&payload)?,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        payload,
    };
    Ok(RunOutput { record, files })
}

/// A `spectrum` config that rebuilds a search hit.
pub fn replay_config(config: &RunConfig, family: SearchFamily, params: &[f64]) -> RunConfig {
    let gate_family = match family {
        SearchFamily::Kak => GateFamily::Kak,
        SearchFamily::Qutrit24 => GateFamily::Qutrit24,
    };
    RunConfig {
        command: Command::Spectrum,
        gate: Some(GateSpec {
            family: gate_family,
            params: params.to_vec(),
            d: None,
            matrix: None,
        }),
        encoding: None,
        ..config.clone()
    }
}

fn build_gate(config: &RunConfig, base: &Path) -> Result<(Gate, GateSummary)> {
    let spec = config
        .gate
        .as_ref()
        .ok_or_else(|| Error::validation("gate", "missing"))?;
    let g = spec.build(config.seed, base)?;
    let summary = GateSummary::new(&g)?;
    Ok((g, summary))
}

fn run_spectrum(config: &RunConfig, base: &Path) -> Result<SpectrumPayload> {
    let (g, gate) = build_gate(config, base)?;
    let m = config.chain.sites;
    let s = build_phi(&g, m)?;
    let eps = config.tolerances.peripheral_eps.unwrap_or(DEFAULT_PERIPHERAL_EPS);
    let spec = channel_spectrum(&s, eps)?;
    let z = spec.z_max().map_or(0.0, |z| z.norm());
    Ok(SpectrumPayload {
        gate,
        sites: m,
        peripheral_eps: eps,
        z_max_modulus: z,
        one_minus_z_max: spec.one_minus_z_max(),
        peripheral_count: spec.peripheral_indices().len(),
        diagonalizability_condition: spec.diagonalizability_condition(),
        near_defective: spec.is_near_defective(),
        eigenvalues: spec.export(),
        singular_values: singular_values_phi(&s)?,
        channel: validate_channel(&s)?,
    })
}

fn encoding_family(e: &EncodingSpec, g: &GateSpec, sites: usize) -> Result<StateFamily> {
    let w = || -> Result<_> {
        let coords = match e.w {
            Some(w) => w,
            None => [g.params[3], g.params[4], g.params[5]],
        };
        local_unitary(2, &coords)
    };
    match e.kind {
        EncodingKind::Peripheral7 => StateFamily::peripheral7(&w()?, e.lambda0),
        EncodingKind::Lossy7 => {
            let theta_bar = e.theta_bar.unwrap_or_else(|| g.params[1] + g.params[2]);
            StateFamily::lossy7(&w()?, theta_bar, e.lambda0)
        }
        EncodingKind::PhasePlus | EncodingKind::PhasePlusPair => StateFamily::phase_plus(sites, e.lambda0),
    }
}

fn run_lightcone(config: &RunConfig, base: &Path) -> Result<LightconePayload> {
    let (g, gate) = build_gate(config, base)?;
    let spec = config
        .gate
        .as_ref()
        .ok_or_else(|| Error::validation("gate", "missing"))?;
    let e = config
        .encoding
        .as_ref()
        .ok_or_else(|| Error::validation("encoding", "missing"))?;
    let m = config.chain.sites;
    let s = build_phi(&g, m)?;
    let qfi = QfiOptions {
        delta: config.tolerances.qfi_delta,
        p_floor: config.tolerances.p_floor,
    };
    let fam = encoding_family(e, spec, m)?;
    let curve = match (e.kind, e.pair) {
        (EncodingKind::PhasePlusPair, Some([a, b])) => {
            let (r1, r2) = (fam.state(a)?, fam.state(b)?);
            eta_curves(Encoding::Pair(&r1, &r2), &s, config.chain.t_max, qfi)?
        }
        _ => eta_curves(Encoding::Family(&fam), &s, config.chain.t_max, qfi)?,
    };
    Ok(LightconePayload {
        gate,
        encoding: e.clone(),
        qfi,
        curve,
    })
}

/// A full-rank random density matrix: Haar eigenvectors, uniform weights.
fn random_state(d: usize, sites: usize, rng: &mut RngStream) -> Result<DensityMatrix> {
    let dim = d.pow(sites as u32);
    let u = sample_cue(dim, rng);
    let w: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 1e-3).collect();
    let diag = Array2::from_shape_fn((dim, dim), |(i, j)| if i == j { c(w[i], 0.0) } else { ZERO });
    let x = u.dot(&diag).dot(&adjoint(&u));
    let tr: C64 = trace(&x);
    DensityMatrix::new(d, sites, x.mapv(|z| z / tr.re))
}

fn run_verify(config: &RunConfig, base: &Path) -> Result<VerifyPayload> {
    let (g, gate) = build_gate(config, base)?;
    let (n, m) = (config.chain.n, config.chain.sites);
    let rho = random_state(g.local_dim(), m, &mut RngStream::new(config.seed, STATE_STREAM))?;
    let order = LayerOrder::for_window(m);
    let brute = brute_force_reduced_state_with(&g, n, m, &rho, order, DEFAULT_MAX_CHAIN_QUBITS)?;
    let cone = lightcone_reduced_state(&g, n, m, &rho)?;
    let residual = max_abs_diff(brute.matrix(), cone.matrix());
    Ok(VerifyPayload {
        gate,
        n,
        sites: m,
        order,
        residual,
        tolerance: config.tolerances.oracle,
        passed: residual <= config.tolerances.oracle,
    })
}

fn run_floquet(config: &RunConfig, base: &Path) -> Result<FloquetPayload> {
    let (g, gate) = build_gate(config, base)?;
    let n = config.chain.n;
    let order = config.floquet.order;
    let f = floquet_spectrum(&g, n, order)?;
    let probe = config.floquet.site.unwrap_or(n);
    let pauli = if g.local_dim() == 2 {
        Some(eigenstate_site_expectations(&f, probe)?)
    } else {
        None
    };
    let entropy = half_chain_entropy(&f)?;
    let mut statistics = eigenphase_statistics(&f);
    if config.floquet.bins != statistics.histogram.counts.len() {
        let h = crate::diagnostics::histogram(
            &statistics.unfolded_spacings,
            config.floquet.bins,
            DEFAULT_HISTOGRAM_MAX,
        );
        statistics.histogram = h;
    }
    let eigenstates = f
        .phases()
        .iter()
        .enumerate()
        .map(|(i, &phase)| EigenstateRow {
            phase,
            half_chain_entropy: entropy[i],
            pauli: pauli.as_ref().map(|p| p[i]),
        })
        .collect();
    Ok(FloquetPayload {
        gate,
        n,
        sites: n + 1,
        order,
        probe_site: probe,
        statistics,
        cue_gap_ratio: CUE_GAP_RATIO_PILOT,
        eigenstates,
    })
}

/// `t  applications  eta  bound`, every float with 17 significant digits.
pub fn curve_to_tsv(curve: &TransferCurve) -> Result<String> {
    if curve.is_empty() {
        return Err(Error::validation("curve", "refusing to emit an empty curve"));
    }
    let mut s = String::from("t\tapplications\teta\tbound\n");
    for ((t, eta), bound) in curve.steps.iter().zip(&curve.eta).zip(&curve.bound) {
        let _ = writeln!(s, "{t}\t{}\t{eta:.16e}\t{bound:.16e}", t + 1 - curve.sites);
    }
    Ok(s)
}

/// Write the curve of a `lightcone` record to `path`.
pub fn emit_curve(record: &RunRecord, path: &Path) -> Result<()> {
    match &record.payload {
        Payload::Lightcone(p) => write_atomic(path, curve_to_tsv(&p.curve)?.as_bytes()),
        _ => Err(Error::validation(
            "command",
            format!("`{}` records carry no curve", record.command),
        )),
    }
}

fn sweep_to_tsv(r: &SweepResult) -> String {
    let mut s = String::from("sample\tz_max_modulus\n");
    for (i, z) in r.z_max_moduli.iter().enumerate() {
        let _ = writeln!(s, "{i}\t{z:.16e}");
    }
    s
}

fn eigenstates_to_tsv(p: &FloquetPayload) -> String {
    let mut s = String::from("phase\thalf_chain_entropy\tsx\tsy\tsz\n");
    for r in &p.eigenstates {
        let _ = write!(s, "{:.16e}\t{:.16e}", r.phase, r.half_chain_entropy);
        match r.pauli {
            Some([x, y, z]) => {
                let _ = writeln!(s, "\t{x:.16e}\t{y:.16e}\t{z:.16e}");
            }
            None => s.push_str("\tNA\tNA\tNA\n"),
        }
    }
    s
}

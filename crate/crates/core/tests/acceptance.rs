//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use brickwork::channel::{
    build_phi, channel_spectrum, nontrivial_eigenvalues, phi1_qubit_analytic, singular_values_phi,
    spectrum_nesting_check, validate_channel, DEFAULT_PERIPHERAL_EPS,
};
use brickwork::diagnostics::{
    eigenphase_statistics, eigenstate_site_expectations, floquet_spectrum, CUE_GAP_RATIO_PILOT,
};
use brickwork::gates::{
    haar_gate, kak_gate_from_params, local_unitary, lossless_gate_from_params, max_linear_entropy,
    qutrit_gate_from_params, swap_gate, wrap_coupling, Gate,
};
use brickwork::lightcone::{
    brute_force_reduced_state, eta_curves, lightcone_reduced_state, DensityMatrix, Encoding, LayerOrder, QfiOptions,
    StateFamily,
};
use brickwork::linalg::{adjoint, c, max_abs_diff, paulis, sample_cue, trace, RngStream, C64, ZERO};
use brickwork::search::{haar_sweep, optimize_peripheral, SearchFamily, SearchOptions};
use ndarray::Array2;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

fn random_state(d: usize, sites: usize, rng: &mut RngStream) -> DensityMatrix {
    let dim = d.pow(sites as u32);
    let u = sample_cue(dim, rng);
    let diag = Array2::from_shape_fn((dim, dim), |(i, j)| {
        if i == j {
            c(rng.random::<f64>() + 1e-3, 0.0)
        } else {
            ZERO
        }
    });
    let x = u.dot(&diag).dot(&adjoint(&u));
    let tr: C64 = trace(&x);
    DensityMatrix::new(d, sites, x.mapv(|z| z / tr.re)).expect("valid state")
}

fn random_lossless(rng: &mut RngStream) -> Gate {
    let mut p: Vec<f64> = (0..12).map(|_| rng.random_range(-3.0..3.0)).collect();
    p[0] = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
    lossless_gate_from_params(&p).expect("lossless gate")
}

fn criterion_1() -> Outcome {
    let mut rng = RngStream::new(101, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let j: Vec<f64> = (0..3).map(|_| rng.random_range(-FRAC_PI_2..FRAC_PI_2)).collect();
        let phi = build_phi(&kak_gate_from_params(&j).map_err(fail)?, 1).map_err(fail)?;
        let diag = phi1_qubit_analytic(j[0], j[1], j[2]);
        let m = phi.matrix();
        for a in 0..4 {
            for b in 0..4 {
                let expected = match (a, b) {
                    (0, 0) => 1.0,
                    (a, b) if a == b => diag[a - 1],
                    _ => 0.0,
                };
                worst = worst.max((m[[a, b]] - expected).abs());
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("max entry error {worst:.2e} over 100 couplings (tol 1e-12)"),
    )
}

fn quarter_distance(x: f64) -> f64 {
    (x - FRAC_PI_4).abs().min((x + FRAC_PI_4).abs())
}

fn criterion_2() -> Outcome {
    let mut rng = RngStream::new(102, 0);
    let (mut tested, mut worst_weyl, mut max_sv, mut peripheral) = (0, f64::NEG_INFINITY, 0.0f64, 0);
    while tested < 1000 {
        let mut p: Vec<f64> = (0..15).map(|_| rng.random_range(-3.0..3.0)).collect();
        for x in &mut p[..3] {
            *x = wrap_coupling(*x);
        }
        if p[..3].iter().any(|&x| quarter_distance(x) < 0.05) {
            continue;
        }
        tested += 1;
        let phi = build_phi(&kak_gate_from_params(&p).map_err(fail)?, 1).map_err(fail)?;
        let spec = channel_spectrum(&phi, 1e-6).map_err(fail)?;
        let z = spec.z_max().map_or(0.0, |z| z.norm());
        let sv = singular_values_phi(&phi).map_err(fail)?[0];
        worst_weyl = worst_weyl.max(z - sv);
        max_sv = max_sv.max(sv);
        peripheral += spec.peripheral_indices().len();
    }
    check(
        worst_weyl <= 1e-10 && max_sv < 1.0 && peripheral == 0,
        format!("max(|z_max| - s_max) = {worst_weyl:.2e}, max s_max = {max_sv:.6}, peripheral = {peripheral}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = RngStream::new(103, 0);
    let (mut worst_val, mut worst_overlap) = (0.0f64, 1.0f64);
    let z_op = paulis()[2].clone();
    for _ in 0..50 {
        let mut p: Vec<f64> = (0..12).map(|_| rng.random_range(-3.0..3.0)).collect();
        p[0] = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
        let g = lossless_gate_from_params(&p).map_err(fail)?;
        let phi = build_phi(&g, 1).map_err(fail)?;
        let s = (2.0 * p[0]).sin();
        let mut got = nontrivial_eigenvalues(&phi).map_err(fail)?;
        let mut want = [c(-1.0, 0.0), c(s, 0.0), c(-s, 0.0)];
        let key = |a: &C64, b: &C64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
        got.sort_by(key);
        want.sort_by(key);
        for (a, b) in got.iter().zip(&want) {
            worst_val = worst_val.max((a - b).norm());
        }
        let spec = channel_spectrum(&phi, DEFAULT_PERIPHERAL_EPS).map_err(fail)?;
        let k = (0..spec.len())
            .filter(|&i| i != spec.trivial_index())
            .min_by(|&a, &b| {
                (spec.eigenvalues()[a] + 1.0)
                    .norm()
                    .total_cmp(&(spec.eigenvalues()[b] + 1.0).norm())
            })
            .ok_or("empty spectrum")?;
        let a = spec.eigenoperator(k).map_err(fail)?;
        let w = local_unitary(2, &p[3..6]).map_err(fail)?;
        let b = w.dot(&z_op).dot(&adjoint(&w));
        let inner = trace(&adjoint(&a).dot(&b)).norm();
        let norm = |x: &Array2<C64>| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        worst_overlap = worst_overlap.min(inner / (norm(&a) * norm(&b)));
    }
    check(
        worst_val <= 1e-10 && worst_overlap >= 1.0 - 1e-8,
        format!(
            "eigenvalue error {worst_val:.2e} (tol 1e-10), min overlap 1 - {:.2e} (tol 1e-8)",
            1.0 - worst_overlap
        ),
    )
}

fn slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let (mt, my) = (t.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    sxy / sxx
}

fn criterion_4() -> Outcome {
    let p = [FRAC_PI_8, 0.4, -0.9, 0.0, 0.6, 0.0];
    let g = lossless_gate_from_params(&p).map_err(fail)?;
    let s = build_phi(&g, 1).map_err(fail)?;
    let w = local_unitary(2, &p[3..6]).map_err(fail)?;
    let opts = QfiOptions::default();

    let per = StateFamily::peripheral7(&w, 0.3).map_err(fail)?;
    let c1 = eta_curves(Encoding::Family(&per), &s, 200, opts).map_err(fail)?;
    let lossless_dev = c1.eta.iter().map(|e| (e - 1.0).abs()).fold(0.0, f64::max);

    let lossy = StateFamily::lossy7(&w, p[1] + p[2], 0.3).map_err(fail)?;
    let c2 = eta_curves(Encoding::Family(&lossy), &s, 60, opts).map_err(fail)?;
    let (ts, ys): (Vec<f64>, Vec<f64>) = c2
        .steps
        .iter()
        .zip(&c2.eta)
        .filter(|(t, _)| (5..=60).contains(*t))
        .map(|(&t, e)| (t as f64, e.ln()))
        .unzip();
    let expected = FRAC_PI_4.sin().ln();
    let rel = (slope(&ts, &ys) - expected).abs() / expected.abs();

    let plus = StateFamily::phase_plus(1, 0.3).map_err(fail)?;
    let c3 = eta_curves(Encoding::Family(&plus), &s, 200, opts).map_err(fail)?;
    let floor = *c3.eta.last().ok_or("empty curve")?;
    let tail_drift = c3.eta[150..].iter().map(|e| (e - floor).abs()).fold(0.0, f64::max);
    let saturates = floor > 1e-3 && tail_drift <= 1e-8 && floor < c3.eta[0] - 1e-3;
    check(
        lossless_dev <= 1e-6 && rel <= 0.02 && saturates,
        format!(
            "peripheral7 max|eta-1| = {lossless_dev:.2e}; lossy7 slope off by {:.2}%; phase_plus floor {floor:.4} (tail drift {tail_drift:.1e})",
            100.0 * rel
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = RngStream::new(105, 0);
    let mut worst: f64 = 0.0;
    for n in [2, 4, 6] {
        for m in [1, 2, 3] {
            for _ in 0..5 {
                let g = haar_gate(2, &mut rng).map_err(fail)?;
                let rho = random_state(2, m, &mut rng);
                let a = brute_force_reduced_state(&g, n, m, &rho).map_err(fail)?;
                let b = lightcone_reduced_state(&g, n, m, &rho).map_err(fail)?;
                worst = worst.max(max_abs_diff(a.matrix(), b.matrix()));
            }
        }
    }
    check(
        worst <= 1e-10,
        format!("max |brute - lightcone| = {worst:.2e} over 45 cases (tol 1e-10)"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = RngStream::new(106, 0);
    let (mut dist, mut resid) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let r = spectrum_nesting_check(&haar_gate(2, &mut rng).map_err(fail)?, 1).map_err(fail)?;
        dist = dist.max(r.max_distance);
        resid = resid.max(r.eigenoperator_residual);
    }
    check(
        dist <= 1e-8,
        format!("max eigenvalue distance {dist:.2e} (tol 1e-8), eigenoperator residual {resid:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let rng = RngStream::new(107, 0);
    let one = haar_sweep(2, 1, 1000, 1e-6, &rng).map_err(fail)?;
    let two = haar_sweep(2, 2, 1000, 1e-6, &rng).map_err(fail)?;
    check(
        one.peripheral_count == 0 && two.mean() > one.mean(),
        format!(
            "M=1 peripheral {}/1000, mean |z_max| M=1 {:.4} < M=2 {:.4}",
            one.peripheral_count,
            one.mean(),
            two.mean()
        ),
    )
}

fn std_devs(g: &Gate, n: usize) -> Result<[f64; 3], String> {
    let f = floquet_spectrum(g, n, LayerOrder::EvenFirst).map_err(fail)?;
    let e = eigenstate_site_expectations(&f, n).map_err(fail)?;
    let len = e.len() as f64;
    Ok(std::array::from_fn(|mu| {
        let mean = e.iter().map(|v| v[mu]).sum::<f64>() / len;
        (e.iter().map(|v| (v[mu] - mean).powi(2)).sum::<f64>() / len).sqrt()
    }))
}

fn criterion_8() -> Outcome {
    let mut rng = RngStream::new(108, 0);
    let gates = [
        ("haar", haar_gate(2, &mut rng).map_err(fail)?),
        ("lossless", random_lossless(&mut rng)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, g) in &gates {
        let f = floquet_spectrum(g, 8, LayerOrder::EvenFirst).map_err(fail)?;
        let r = eigenphase_statistics(&f).mean_gap_ratio;
        let s7 = std_devs(g, 6)?;
        let s9 = std_devs(g, 8)?;
        let shrinks = (0..3).all(|mu| s9[mu] < s7[mu]);
        ok &= (r - CUE_GAP_RATIO_PILOT).abs() <= 0.02 && shrinks;
        parts.push(format!(
            "{name}: r = {r:.4}, std(x,y,z) 7 sites [{:.3} {:.3} {:.3}] -> 9 sites [{:.3} {:.3} {:.3}]",
            s7[0], s7[1], s7[2], s9[0], s9[1], s9[2]
        ));
    }
    check(ok, format!("CUE {CUE_GAP_RATIO_PILOT:.4} ± 0.02; {}", parts.join("; ")))
}

fn criterion_9() -> Outcome {
    let mut rng = RngStream::new(109, 0);
    let mut cases: Vec<(Gate, usize)> = Vec::new();
    for m in 1..=3 {
        cases.push((haar_gate(2, &mut rng).map_err(fail)?, m));
        cases.push((random_lossless(&mut rng), m));
        cases.push((swap_gate(2).map_err(fail)?, m));
        let mut p: Vec<f64> = (0..15).map(|_| rng.random_range(-3.0..3.0)).collect();
        for x in &mut p[..3] {
            *x = wrap_coupling(*x);
        }
        cases.push((kak_gate_from_params(&p).map_err(fail)?, m));
    }
    for m in 1..=2 {
        cases.push((haar_gate(3, &mut rng).map_err(fail)?, m));
        cases.push((swap_gate(3).map_err(fail)?, m));
        let p: Vec<f64> = (0..24).map(|_| rng.random_range(-1.5..1.5)).collect();
        cases.push((qutrit_gate_from_params(&p).map_err(fail)?, m));
    }
    let (mut failures, mut conj, mut traceless, mut modulus) = (Vec::new(), 0.0f64, 0.0f64, 0.0f64);
    for (g, m) in &cases {
        let phi = build_phi(g, *m).map_err(fail)?;
        let report = validate_channel(&phi).map_err(fail)?;
        if !report.passed() {
            failures.push(format!("{} M={m}: {:?}", g.family(), report.failures));
        }
        let spec = channel_spectrum(&phi, DEFAULT_PERIPHERAL_EPS).map_err(fail)?;
        let vals = spec.eigenvalues();
        if (vals[spec.trivial_index()] - 1.0).norm() > 1e-8 {
            failures.push(format!("{} M={m}: trivial eigenvalue", g.family()));
        }
        let id_like = spec.eigenoperator(spec.trivial_index()).map_err(fail)?;
        let scale = id_like[[0, 0]];
        let dim = id_like.nrows();
        let off = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| (id_like[[i, j]] - if i == j { scale } else { ZERO }).norm())
            .fold(0.0, f64::max);
        if off > 1e-8 {
            failures.push(format!("{} M={m}: trivial eigenoperator not ∝ I", g.family()));
        }
        for (i, z) in vals.iter().enumerate() {
            modulus = modulus.max(z.norm() - 1.0);
            conj = conj.max(vals.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min));
            if i != spec.trivial_index() {
                traceless = traceless.max(trace(&spec.eigenoperator(i).map_err(fail)?).norm());
            }
        }
    }
    let ok = failures.is_empty() && conj <= 1e-8 && traceless <= 1e-8 && modulus <= 1e-9;
    check(
        ok,
        format!(
            "{} channels; CPTP failures {:?}; conj closure {conj:.1e}, max |Tr A| {traceless:.1e}, max |z|-1 {modulus:.1e}",
            cases.len(),
            failures
        ),
    )
}

fn criterion_10() -> Outcome {
    let rng = RngStream::new(2024, 0);
    let kak = optimize_peripheral(SearchFamily::Kak, 2, &rng, SearchOptions::default()).map_err(fail)?;
    let good = kak
        .hits
        .iter()
        .filter(|h| {
            !h.dual_unitary
                && h.linear_entropy <= max_linear_entropy(2) - 0.01
                && h.one_minus_z_max <= 1e-6
                && h.pattern.as_ref().is_some_and(|p| p.matches)
        })
        .count();
    let qutrit = optimize_peripheral(SearchFamily::Qutrit24, 1, &rng, SearchOptions::default()).map_err(fail)?;
    let low = qutrit
        .hits
        .iter()
        .filter(|h| h.linear_entropy <= max_linear_entropy(3) - 0.01)
        .count();
    let flagged = kak.low_entropy_hits + qutrit.low_entropy_hits;
    check(
        good >= 1 && low >= 1 && flagged == 0,
        format!(
            "kak M=2: {} hits, {good} non-dual pattern hits; qutrit M=1: {} hits, {low} below 8/9 - 0.01; entropy flags {flagged}",
            kak.hits.len(),
            qutrit.hits.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "analytic single-site channel", criterion_1, Duration::from_secs(1)),
        (
            2,
            "strict contraction away from dual-unitarity",
            criterion_2,
            Duration::from_secs(10),
        ),
        (3, "lossless gate spectrum", criterion_3, Duration::from_secs(5)),
        (
            4,
            "lossless and lossy transfer curves",
            criterion_4,
            Duration::from_secs(30),
        ),
        (5, "lightcone vs brute force", criterion_5, Duration::from_secs(60)),
        (6, "spectrum nesting", criterion_6, Duration::from_secs(10)),
        (7, "Haar sweep rarity", criterion_7, Duration::from_secs(120)),
        (8, "Floquet diagnostics", criterion_8, Duration::from_secs(300)),
        (9, "CPTP and spectral invariants", criterion_9, Duration::from_secs(30)),
        (10, "peripheral search", criterion_10, Duration::from_secs(900)),
    ];
    let mut failed = 0;
    for (id, name, f, limit) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {detail} [{:.2} s, limit {} s{}]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", over time" }
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

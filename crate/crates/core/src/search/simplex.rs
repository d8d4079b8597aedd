//! Nelder–Mead simplex descent with dimension-adaptive coefficients.

/// Stopping rules for [`minimize`].
#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop once the best value is at or below this.
    pub target: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Rebuild the simplex around the best vertex when its value spread drops below this.
    pub restart_spread: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_evals: 2000,
            target: f64::NEG_INFINITY,
            initial_step: 0.5,
            restart_spread: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

fn build_simplex<F: FnMut(&[f64]) -> f64>(x0: &[f64], step: f64, f: &mut F, evals: &mut usize) -> Vec<(Vec<f64>, f64)> {
    let mut pts = Vec::with_capacity(x0.len() + 1);
    let v0 = f(x0);
    *evals += 1;
    pts.push((x0.to_vec(), v0));
    for i in 0..x0.len() {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        *evals += 1;
        pts.push((x, v));
    }
    pts
}

/// Minimise `f` from `x0`. Non-finite values count as `+∞`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: SimplexOptions) -> SimplexResult {
    let n = x0.len();
    let mut f = move |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let nf = n.max(1) as f64;
    // Gao–Han coefficients
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let mut evals = 0;
    let mut step = opts.initial_step;
    let mut pts = build_simplex(x0, step, &mut f, &mut evals);
    loop {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = pts[0].1;
        if best <= opts.target || evals >= opts.max_evals || n == 0 {
            break;
        }
        if pts[n].1 - best <= opts.restart_spread {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
            let x = pts[0].0.clone();
            pts = build_simplex(&x, step, &mut f, &mut evals);
            continue;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| pts[..n].iter().map(|p| p.0[k]).sum::<f64>() / nf)
            .collect();
        let towards = |coef: f64, worst: &[f64]| -> Vec<f64> {
            centroid.iter().zip(worst).map(|(c, w)| c + coef * (c - w)).collect()
        };
        let worst = pts[n].0.clone();
        let xr = towards(alpha, &worst);
        let fr = f(&xr);
        evals += 1;
        if fr < pts[0].1 {
            let xe = towards(alpha * gamma, &worst);
            let fe = f(&xe);
            evals += 1;
            pts[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < pts[n - 1].1 {
            pts[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < pts[n].1 {
                let xc = towards(alpha * rho, &worst);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = towards(-rho, &worst);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < pts[n].1.min(fr) {
                pts[n] = (xc, fc);
            } else {
                let x0 = pts[0].0.clone();
                for p in pts.iter_mut().skip(1) {
                    let x: Vec<f64> = x0.iter().zip(&p.0).map(|(a, b)| a + sigma * (b - a)).collect();
                    let v = f(&x);
                    evals += 1;
                    *p = (x, v);
                }
            }
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = pts.swap_remove(0);
    SimplexResult { x, value, evals }
}

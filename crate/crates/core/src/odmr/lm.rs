use nalgebra::{DMatrix, DVector};

/// Outcome of a Levenberg–Marquardt run.
#[derive(Debug, Clone)]
pub(crate) struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub converged: bool,
    /// `(JᵀJ)⁻¹` at the solution.
    pub jtj_inv: Option<DMatrix<f64>>,
}

fn jacobian<F>(f: &F, p: &[f64], r0: &DVector<f64>, scales: &[f64]) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let mut j = DMatrix::zeros(r0.len(), p.len());
    let mut q = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-6 * scales[k];
        q[k] = p[k] + h;
        let up = f(&q);
        q[k] = p[k] - h;
        let dn = f(&q);
        q[k] = p[k];
        match (up, dn) {
            (Some(u), Some(d)) => {
                for i in 0..r0.len() {
                    j[(i, k)] = (u[i] - d[i]) / (2.0 * h);
                }
            }
            (Some(u), None) => {
                for i in 0..r0.len() {
                    j[(i, k)] = (u[i] - r0[i]) / h;
                }
            }
            (None, Some(d)) => {
                for i in 0..r0.len() {
                    j[(i, k)] = (r0[i] - d[i]) / h;
                }
            }
            (None, None) => {}
        }
    }
    j
}

/// Minimises `Σ r_i(p)²`. `residuals` returns `None` for parameter sets
/// outside the model's domain; such steps are rejected. `scales` sets the
/// finite-difference step and the convergence yardstick per parameter.
pub(crate) fn levenberg_marquardt<F>(residuals: F, p0: &[f64], scales: &[f64], max_iter: usize) -> LmResult
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let mut p = p0.to_vec();
    let Some(r) = residuals(&p) else {
        return LmResult { params: p, cost: f64::INFINITY, converged: false, jtj_inv: None };
    };
    let mut r = DVector::from_vec(r);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..max_iter {
        let j = jacobian(&residuals, &p, &r, scales);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..p.len() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Some(rt) = residuals(&trial) {
                let rt = DVector::from_vec(rt);
                let ct = rt.norm_squared();
                if ct < cost {
                    let small = step.iter().zip(scales).all(|(s, sc)| s.abs() < 1e-8 * sc);
                    let flat = (cost - ct) <= 1e-12 * cost;
                    p = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    converged = small || flat;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: a (local) minimum
            converged = lambda > 1e6;
            break;
        }
        if converged {
            break;
        }
    }
    let j = jacobian(&residuals, &p, &r, scales);
    let jtj_inv = (j.transpose() * &j).try_inverse();
    LmResult { params: p, cost, converged, jtj_inv }
}

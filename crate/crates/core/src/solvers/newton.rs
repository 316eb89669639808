//! Newton iteration on the mass-constrained stationary system.

use crate::discretization::{RadialField, RieszKernel};
use crate::functionals::{nonlinearity, signed_pow};
use crate::model::ModelParams;
use nalgebra::{DMatrix, DVector};

/// Residual vector `W⁻¹(Au) − λu − N(u)` and its weighted norm.
pub fn residual(
    u: &[f64],
    lambda: f64,
    params: &ModelParams,
    kernel: &RieszKernel,
) -> (Vec<f64>, f64) {
    let grid = kernel.grid();
    let lap = grid.laplacian_values(u);
    let nl = nonlinearity(u, params, kernel);
    let r: Vec<f64> = (0..u.len())
        .map(|i| -lap[i] - lambda * u[i] - nl[i])
        .collect();
    let norm = grid.inner(&r, &r).sqrt();
    (r, norm)
}

pub struct NewtonOutcome {
    pub u: Vec<f64>,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Runs damped Newton from `(u, λ)`; returns `None` if no progress is made.
pub fn polish(
    u0: &RadialField,
    lambda0: f64,
    params: &ModelParams,
    kernel: &RieszKernel,
    tol: f64,
    max_iter: usize,
) -> Option<NewtonOutcome> {
    let grid = kernel.grid();
    let n = grid.len();
    let w = grid.weights();
    let a_dense = grid.stiffness().to_dense();
    let gram = kernel.gram();
    let pb = params.p_bar();
    let q = params.q;
    let mut u = u0.values.clone();
    let mut lambda = lambda0;
    let (_, mut res) = residual(&u, lambda, params, kernel);
    let start = res;
    let mut it = 0;
    while res > tol && it < max_iter {
        it += 1;
        let floor = 1e-14 * u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let g: Vec<f64> = u.iter().map(|v| v.abs().powf(pb)).collect();
        let bg = kernel.gram_apply(&g);
        let s: Vec<f64> = u.iter().map(|&v| signed_pow(v, pb - 1.0, floor)).collect();
        let ds: Vec<f64> = u
            .iter()
            .map(|&v| {
                if v.abs() < floor && pb < 2.0 {
                    0.0
                } else {
                    (pb - 1.0) * v.abs().powf(pb - 2.0)
                }
            })
            .collect();
        let dl: Vec<f64> = u
            .iter()
            .map(|&v| {
                if v.abs() < floor && q < 2.0 {
                    0.0
                } else {
                    params.mu * (q - 1.0) * v.abs().powf(q - 2.0)
                }
            })
            .collect();
        let mut jac = DMatrix::<f64>::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = a_dense[i * n + j] - pb * s[i] * gram[i * n + j] * s[j];
            }
            jac[(i, i)] -= bg[i] * ds[i] + w[i] * (dl[i] + lambda);
            jac[(i, n)] = -w[i] * u[i];
            jac[(n, i)] = w[i] * u[i];
        }
        let au = grid.stiffness().matvec(&u);
        let nl = nonlinearity(&u, params, kernel);
        let mut f = DVector::<f64>::zeros(n + 1);
        for i in 0..n {
            f[i] = au[i] - w[i] * (nl[i] + lambda * u[i]);
        }
        f[n] = 0.5 * (grid.inner(&u, &u) - params.a);
        let step = jac.lu().solve(&(-f))?;
        let mut damping = 1.0;
        loop {
            let mut trial: Vec<f64> = (0..n).map(|i| u[i] + damping * step[i]).collect();
            let scale = (params.a / grid.inner(&trial, &trial)).sqrt();
            trial.iter_mut().for_each(|v| *v *= scale);
            let tl = lambda + damping * step[n];
            let (_, tr) = residual(&trial, tl, params, kernel);
            if tr.is_finite() && tr < res {
                u = trial;
                lambda = tl;
                res = tr;
                break;
            }
            damping *= 0.5;
            if damping < 1e-3 {
                return (res < start).then_some(NewtonOutcome {
                    u,
                    lambda,
                    residual: res,
                    iterations: it,
                });
            }
        }
    }
    Some(NewtonOutcome {
        u,
        lambda,
        residual: res,
        iterations: it,
    })
}

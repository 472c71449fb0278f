//! Damped Newton iteration with a forward-difference Jacobian, confined to a ball.

use nalgebra::{DMatrix, DVector};

use crate::basis::euclid;
use crate::error::Result;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Convergence threshold on `||F||`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative step of the Jacobian difference quotients: `h_j = fd_step (1 + |x_j|)`.
    pub fd_step: f64,
    /// Sufficient-decrease constant of the Armijo test on `||F||^2 / 2`.
    pub armijo: f64,
    /// Smallest damping factor tried before giving up.
    pub min_damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 60, fd_step: 1e-7, armijo: 1e-4, min_damping: 1e-10 }
    }
}

/// Outcome of one Newton run.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonRun {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Forward-difference Jacobian; columns are computed independently.
pub fn fd_jacobian<F>(f: &F, x: &[f64], fx: &[f64], fd_step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let m = x.len();
    let cols: Vec<Result<Vec<f64>>> = par::map_range(m, |j| {
        let h = fd_step * (1.0 + x[j].abs());
        let mut xp = x.to_vec();
        xp[j] += h;
        let h = xp[j] - x[j];
        let fp = f(&xp)?;
        Ok(fp.iter().zip(fx).map(|(a, b)| (a - b) / h).collect())
    });
    let mut jac = DMatrix::zeros(fx.len(), m);
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col?.into_iter().enumerate() {
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}

fn solve_linear(jac: DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let b = DVector::from_column_slice(rhs);
    if let Some(x) = jac.clone().lu().solve(&b) {
        if x.iter().all(|v| v.is_finite()) {
            return Some(x.iter().copied().collect());
        }
    }
    let x = jac.svd(true, true).solve(&b, 1e-14).ok()?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

fn project(x: &mut [f64], radius: f64) {
    let norm = euclid(x);
    if norm > radius {
        let s = radius / norm;
        x.iter_mut().for_each(|v| *v *= s);
    }
}

/// Damped Newton from `x0`, with every iterate projected onto `||x|| <= radius`.
///
/// Assembly errors propagate; failing to converge is reported through
/// [`NewtonRun::converged`].
pub fn newton<F>(f: &F, x0: &[f64], radius: f64, opts: &NewtonOptions) -> Result<NewtonRun>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let mut x = x0.to_vec();
    project(&mut x, radius);
    let mut fx = f(&x)?;
    let mut res = euclid(&fx);
    for it in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok(NewtonRun { x, residual: res, iterations: it, converged: true });
        }
        let jac = fd_jacobian(f, &x, &fx, opts.fd_step)?;
        let neg: Vec<f64> = fx.iter().map(|v| -v).collect();
        let Some(dx) = solve_linear(jac, &neg) else {
            break;
        };
        let phi = 0.5 * res * res;
        let mut t = 1.0;
        let mut accepted = false;
        while t >= opts.min_damping {
            let mut trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
            project(&mut trial, radius);
            let ft = f(&trial)?;
            let rt = euclid(&ft);
            if 0.5 * rt * rt <= (1.0 - 2.0 * opts.armijo * t) * phi {
                x = trial;
                fx = ft;
                res = rt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let converged = res <= opts.tol;
    Ok(NewtonRun { x, residual: res, iterations: opts.max_iter, converged })
}

//! Small dense least-squares and simplex minimizers for few-parameter fits.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step for central-difference Jacobians.
    pub jacobian_step: f64,
    /// Converged when the relative cost decrease of an accepted step is below
    /// this and the step is small.
    pub cost_tolerance: f64,
    pub step_tolerance: f64,
    pub gradient_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            jacobian_step: 1e-6,
            cost_tolerance: 1e-14,
            step_tolerance: 1e-11,
            gradient_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub params: Vec<f64>,
    /// `Σ r²` at `params`.
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Central-difference Jacobian `∂rᵢ/∂θⱼ`.
pub fn jacobian<F>(residuals: &F, params: &[f64], rel_step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m = residuals(params).len();
    let mut jac = DMatrix::zeros(m, params.len());
    let mut probe = params.to_vec();
    for j in 0..params.len() {
        let h = rel_step * params[j].abs().max(1.0);
        probe[j] = params[j] + h;
        let up = residuals(&probe);
        probe[j] = params[j] - h;
        let down = residuals(&probe);
        probe[j] = params[j];
        if up.len() != m || down.len() != m || !all_finite(&up) || !all_finite(&down) {
            return None;
        }
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    Some(jac)
}

/// Levenberg–Marquardt with Marquardt's diagonal scaling. Returns `None` when
/// a Jacobian cannot be formed or the damped system cannot be solved, so the
/// caller can fall back to [`nelder_mead`].
pub fn levenberg_marquardt<F>(residuals: F, start: &[f64], options: &LmOptions) -> Option<Minimum>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut params = start.to_vec();
    let mut r = residuals(&params);
    if !all_finite(&r) {
        return None;
    }
    let mut cost = cost_of(&r);
    let mut lambda = 1e-3;
    let p = params.len();

    for iteration in 1..=options.max_iterations {
        let jac = jacobian(&residuals, &params, options.jacobian_step)?;
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * rv;
        if grad.amax() <= options.gradient_tolerance * cost.max(1e-300).sqrt() || cost == 0.0 {
            return Some(Minimum {
                params,
                cost,
                converged: true,
                iterations: iteration,
            });
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj.clone();
            for k in 0..p {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial_r = residuals(&trial);
            let trial_cost = cost_of(&trial_r);
            if trial_cost.is_finite() && trial_cost <= cost {
                let decrease = (cost - trial_cost) / cost.max(1e-300);
                let step_size = step
                    .iter()
                    .zip(&params)
                    .map(|(s, x)| s.abs() / (x.abs() + 1e-8))
                    .fold(0.0, f64::max);
                params = trial;
                r = trial_r;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if decrease <= options.cost_tolerance && step_size <= options.step_tolerance.sqrt()
                {
                    return Some(Minimum {
                        params,
                        cost,
                        converged: true,
                        iterations: iteration,
                    });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: a minimum to working precision
            return Some(Minimum {
                params,
                cost,
                converged: true,
                iterations: iteration,
            });
        }
    }
    Some(Minimum {
        params,
        cost,
        converged: false,
        iterations: options.max_iterations,
    })
}

/// Derivative-free simplex minimization of `f`.
pub fn nelder_mead<F>(f: F, start: &[f64], scale: f64, max_iterations: usize, tol: f64) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start)));
    for j in 0..n {
        let mut x = start.to_vec();
        x[j] += scale * x[j].abs().max(1.0);
        let v = eval(&x);
        simplex.push((x, v));
    }

    for iteration in 1..=max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if (worst - best).abs() <= tol * (best.abs() + tol) {
            let (params, cost) = simplex.swap_remove(0);
            return Minimum {
                params,
                cost,
                converged: true,
                iterations: iteration,
            };
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let reflected = along(-1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[n].1 {
                along(-0.5)
            } else {
                along(0.5)
            };
            let fc = eval(&contracted);
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let best_x = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&best_x) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    *v = eval(x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (params, cost) = simplex.swap_remove(0);
    Minimum {
        params,
        cost,
        converged: false,
        iterations: max_iterations,
    }
}

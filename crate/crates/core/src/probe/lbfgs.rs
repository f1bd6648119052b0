//! Limited-memory BFGS with a diagonal preconditioner and Armijo backtracking.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LbfgsConfig {
    pub max_iters: usize,
    pub grad_tolerance: f64,
    pub memory: usize,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const DIVERGENCE_RUN: usize = 10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f`, which writes the gradient into its second argument and
/// returns the objective. `diag` approximates the inverse Hessian diagonal
/// and seeds every two-loop recursion.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, diag: &[f64], cfg: &LbfgsConfig) -> Result<Minimum>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut value = f(&x, &mut g);
    if !value.is_finite() {
        return Err(Error::Diverged {
            iterations: 0,
            objective: value,
        });
    }
    let mut trace = vec![value];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut gamma = 1.0;
    let mut rising = 0;

    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        if inf_norm(&g) < cfg.grad_tolerance {
            break;
        }
        let mut dir = two_loop(&g, &history, diag, gamma);
        let mut slope = dot(&g, &dir);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            dir = two_loop(&g, &history, diag, 1.0);
            slope = dot(&g, &dir);
        }

        let mut accepted = None;
        for attempt in 0..2 {
            let mut step = 1.0;
            for _ in 0..MAX_BACKTRACKS {
                for i in 0..n {
                    x_new[i] = x[i] + step * dir[i];
                }
                let v = f(&x_new, &mut g_new);
                if v.is_finite() && v <= value + ARMIJO_C1 * step * slope {
                    accepted = Some(v);
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() || attempt == 1 || history.is_empty() {
                break;
            }
            // Quasi-Newton direction failed; retry along the preconditioned gradient.
            history.clear();
            dir = two_loop(&g, &history, diag, 1.0);
            slope = dot(&g, &dir);
        }
        let Some(v) = accepted else {
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            let ydy: f64 = y.iter().zip(diag).map(|(yi, d)| yi * yi * d).sum();
            if ydy > 0.0 {
                gamma = sy / ydy;
            }
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        rising = if v > value { rising + 1 } else { 0 };
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        value = v;
        trace.push(value);
        iterations += 1;
        if rising >= DIVERGENCE_RUN {
            return Err(Error::Diverged {
                iterations,
                objective: value,
            });
        }
    }

    let grad_inf_norm = inf_norm(&g);
    Ok(Minimum {
        x,
        value,
        grad_inf_norm,
        iterations,
        converged: grad_inf_norm < cfg.grad_tolerance,
        trace,
    })
}

/// Returns `-H g` for the L-BFGS inverse Hessian seeded with `gamma * diag`.
fn two_loop(
    g: &[f64],
    history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    diag: &[f64],
    gamma: f64,
) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    let mut r: Vec<f64> = q.iter().zip(diag).map(|(qi, d)| gamma * d * qi).collect();
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &r);
        r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}

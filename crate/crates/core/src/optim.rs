//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Curvature pairs with `s.y` at or below this are dropped.
const MIN_CURVATURE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEvaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
}

impl ObjectiveEvaluation {
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.gradient.iter().all(|g| g.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: usize,
    /// Convergence threshold on the infinity norm of the gradient.
    pub grad_tol: f64,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    /// Function evaluations allowed per line search.
    pub max_line_search_steps: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iters: 200,
            grad_tol: 1e-5,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_search_steps: 40,
        }
    }
}

impl LbfgsConfig {
    fn check(&self) -> Result<()> {
        if self.memory == 0 || self.max_iters == 0 || self.max_line_search_steps == 0 {
            return Err(Error::invalid(
                "memory, max_iters and max_line_search_steps must be >= 1",
            ));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::invalid("grad_tol must be > 0"));
        }
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(Error::invalid("need 0 < c1 < c2 < 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub status: Status,
    pub iterations: usize,
}

/// One accepted step, reported to observers of [`minimize_observed`].
#[derive(Debug)]
pub struct StepRecord<'a> {
    pub iteration: usize,
    /// Iterate the step started from.
    pub x: &'a [f64],
    pub value: f64,
    pub gradient: &'a [f64],
    pub direction: &'a [f64],
    pub step: f64,
    pub new_value: f64,
}

pub fn minimize<F>(objective: F, x0: &[f64], cfg: &LbfgsConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> ObjectiveEvaluation,
{
    minimize_observed(objective, x0, cfg, |_| {})
}

pub fn minimize_observed<F, O>(
    mut objective: F,
    x0: &[f64],
    cfg: &LbfgsConfig,
    mut observer: O,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> ObjectiveEvaluation,
    O: FnMut(&StepRecord<'_>),
{
    cfg.check()?;
    let n = x0.len();
    let mut eval = |x: &[f64]| -> Result<ObjectiveEvaluation> {
        let e = objective(x);
        if e.gradient.len() != n {
            return Err(Error::invalid(format!(
                "gradient has length {}, expected {n}",
                e.gradient.len()
            )));
        }
        if !e.is_finite() {
            return Err(Error::NumericalFailure);
        }
        Ok(e)
    };

    let mut x = x0.to_vec();
    let mut cur = eval(&x)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);

    for iteration in 0..cfg.max_iters {
        if inf_norm(&cur.gradient) <= cfg.grad_tol {
            return Ok(Minimum {
                x,
                value: cur.value,
                status: Status::Converged,
                iterations: iteration,
            });
        }
        let mut direction = two_loop(&cur.gradient, &history);
        let mut slope = dot(&cur.gradient, &direction);
        if !(slope < 0.0) {
            history.clear();
            direction = cur.gradient.iter().map(|g| -g).collect();
            slope = dot(&cur.gradient, &direction);
        }

        let found = line_search(&mut eval, &x, &cur, &direction, slope, cfg)?;
        let Some((step, x_new, next)) = found else {
            return Ok(Minimum {
                x,
                value: cur.value,
                status: Status::LineSearchFailed,
                iterations: iteration,
            });
        };
        observer(&StepRecord {
            iteration,
            x: &x,
            value: cur.value,
            gradient: &cur.gradient,
            direction: &direction,
            step,
            new_value: next.value,
        });

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next
            .gradient
            .iter()
            .zip(&cur.gradient)
            .map(|(a, b)| a - b)
            .collect();
        let sy = dot(&s, &y);
        if sy > MIN_CURVATURE {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        cur = next;
    }

    let status = if inf_norm(&cur.gradient) <= cfg.grad_tol {
        Status::Converged
    } else {
        Status::MaxIters
    };
    Ok(Minimum {
        x,
        value: cur.value,
        status,
        iterations: cfg.max_iters,
    })
}

/// Computes `-H g` from the stored curvature pairs, oldest first.
fn two_loop(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = vec![0.0; history.len()];
    for (i, (s, y, rho)) in history.iter().enumerate().rev() {
        let a = rho * dot(s, &q);
        alphas[i] = a;
        axpy(-a, y, &mut q);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (i, (s, y, rho)) in history.iter().enumerate() {
        let b = rho * dot(y, &q);
        axpy(alphas[i] - b, s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

struct Trial {
    alpha: f64,
    value: f64,
    slope: f64,
    x: Vec<f64>,
    eval: ObjectiveEvaluation,
}

type Accepted = Option<(f64, Vec<f64>, ObjectiveEvaluation)>;

/// Bracketing then zoom, returning the first step that satisfies the strong
/// Wolfe conditions, or `None` when the evaluation budget runs out.
fn line_search<E>(
    eval: &mut E,
    x: &[f64],
    start: &ObjectiveEvaluation,
    dir: &[f64],
    slope0: f64,
    cfg: &LbfgsConfig,
) -> Result<Accepted>
where
    E: FnMut(&[f64]) -> Result<ObjectiveEvaluation>,
{
    let f0 = start.value;
    let (c1, c2) = (cfg.wolfe_c1, cfg.wolfe_c2);
    let mut budget = cfg.max_line_search_steps;
    let mut probe = |alpha: f64, budget: &mut usize| -> Result<Trial> {
        *budget -= 1;
        let xt: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + alpha * di).collect();
        let e = eval(&xt)?;
        Ok(Trial {
            alpha,
            value: e.value,
            slope: dot(&e.gradient, dir),
            x: xt,
            eval: e,
        })
    };
    let armijo = |t: &Trial| t.value <= f0 + c1 * t.alpha * slope0;
    let curvature = |t: &Trial| t.slope.abs() <= -c2 * slope0;

    let mut prev = Trial {
        alpha: 0.0,
        value: f0,
        slope: slope0,
        x: x.to_vec(),
        eval: start.clone(),
    };
    let mut alpha = 1.0;
    let mut first = true;
    let (mut lo, mut hi) = loop {
        if budget == 0 {
            return Ok(None);
        }
        let t = probe(alpha, &mut budget)?;
        if !armijo(&t) || (!first && t.value >= prev.value) {
            break (prev, t);
        }
        if curvature(&t) {
            return Ok(Some((t.alpha, t.x, t.eval)));
        }
        if t.slope >= 0.0 {
            break (t, prev);
        }
        first = false;
        alpha = 2.0 * t.alpha;
        prev = t;
    };

    while budget > 0 {
        let width = (hi.alpha - lo.alpha).abs();
        if width <= f64::EPSILON * lo.alpha.abs().max(1.0) {
            break;
        }
        let a = interpolate(&lo, &hi);
        let t = probe(a, &mut budget)?;
        if !armijo(&t) || t.value >= lo.value {
            hi = t;
        } else {
            if curvature(&t) {
                return Ok(Some((t.alpha, t.x, t.eval)));
            }
            if t.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = std::mem::replace(&mut lo, t);
            } else {
                lo = t;
            }
        }
    }
    Ok(None)
}

/// Cubic interpolation between two trials, kept away from the interval ends.
fn interpolate(a: &Trial, b: &Trial) -> f64 {
    let (lo, hi) = if a.alpha < b.alpha {
        (a.alpha, b.alpha)
    } else {
        (b.alpha, a.alpha)
    };
    let margin = 0.1 * (hi - lo);
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    let bisect = 0.5 * (lo + hi);
    if !(disc >= 0.0) {
        return bisect;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let denom = b.slope - a.slope + 2.0 * d2;
    if denom == 0.0 {
        return bisect;
    }
    let c = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom;
    if c.is_finite() && c >= lo + margin && c <= hi - margin {
        c
    } else {
        bisect
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shifted_sphere(a: Vec<f64>) -> impl FnMut(&[f64]) -> ObjectiveEvaluation {
        move |x| ObjectiveEvaluation {
            value: x.iter().zip(&a).map(|(xi, ai)| (xi - ai).powi(2)).sum(),
            gradient: x.iter().zip(&a).map(|(xi, ai)| 2.0 * (xi - ai)).collect(),
        }
    }

    pub(crate) fn rosenbrock(x: &[f64]) -> ObjectiveEvaluation {
        let (a, b) = (x[0], x[1]);
        ObjectiveEvaluation {
            value: (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
            gradient: vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ],
        }
    }

    #[test]
    fn shifted_sphere_converges() {
        let res = minimize(
            shifted_sphere(vec![3.0, -1.0]),
            &[0.0, 0.0],
            &LbfgsConfig::default(),
        )
        .unwrap();
        assert_eq!(res.status, Status::Converged);
        assert!((res.x[0] - 3.0).abs() < 1e-8 && (res.x[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let cfg = LbfgsConfig {
            grad_tol: 1e-10,
            ..Default::default()
        };
        let res = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert!(
            (res.x[0] - 1.0).abs() < 1e-6 && (res.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            res.x
        );
        assert!(res.value <= rosenbrock(&[-1.2, 1.0]).value);
    }

    #[test]
    fn unbounded_objective_terminates() {
        let f = |x: &[f64]| ObjectiveEvaluation {
            value: x[0],
            gradient: vec![1.0],
        };
        let res = minimize(f, &[0.0], &LbfgsConfig::default()).unwrap();
        assert!(matches!(
            res.status,
            Status::MaxIters | Status::LineSearchFailed
        ));
        assert!(res.value <= 0.0);
        assert_eq!(res.value, res.x[0]);
    }

    #[test]
    fn non_finite_objective_is_a_numerical_failure() {
        let f = |x: &[f64]| ObjectiveEvaluation {
            value: if x[0] > 0.5 { f64::NAN } else { -x[0] },
            gradient: vec![-1.0],
        };
        assert!(matches!(
            minimize(f, &[0.0], &LbfgsConfig::default()),
            Err(Error::NumericalFailure)
        ));
    }

    #[test]
    fn bad_config_is_rejected() {
        let cfg = LbfgsConfig {
            wolfe_c1: 0.9,
            wolfe_c2: 0.5,
            ..Default::default()
        };
        assert!(minimize(rosenbrock, &[0.0, 0.0], &cfg).is_err());
    }

    #[test]
    fn already_optimal_start_returns_immediately() {
        let res = minimize(shifted_sphere(vec![1.0]), &[1.0], &LbfgsConfig::default()).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn two_loop_without_history_is_steepest_descent() {
        let d = two_loop(&[1.0, -2.0], &VecDeque::new());
        assert_eq!(d, vec![-1.0, 2.0]);
    }
}

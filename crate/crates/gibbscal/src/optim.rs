//! Box-constrained Nelder-Mead minimization and numeric derivatives.
//!
//! The optimizer is deliberately small: objectives here are low dimensional
//! (kernel hyperparameters, posterior modes) and cheap, so a projected
//! simplex search with restarts is robust and dependency-free.

use crate::num::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Stop once the simplex objective spread falls below this.
    pub f_tol: f64,
    /// Initial simplex step, relative to the box width (or to
    /// `max(|x0|, 1)` for unbounded coordinates).
    pub init_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self { max_iter: 400, f_tol: 1e-10, init_step: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult<S> {
    pub x: Vec<S>,
    pub value: S,
    pub iterations: usize,
}

fn clamp_into<S: Scalar>(x: &mut [S], bounds: &[(S, S)]) {
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        if *xi < lo {
            *xi = lo;
        }
        if *xi > hi {
            *xi = hi;
        }
    }
}

fn worst_aware_cmp<S: Scalar>(a: &S, b: &S) -> std::cmp::Ordering {
    // Non-finite objective values sort last so the simplex flees them.
    match (a.is_finite(), b.is_finite()) {
        (true, true) => a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal),
        (true, false) => std::cmp::Ordering::Less,
        (false, true) => std::cmp::Ordering::Greater,
        (false, false) => std::cmp::Ordering::Equal,
    }
}

/// Minimizes `f` over the box `bounds` starting from `x0` (projected into
/// the box). Standard Nelder-Mead moves with candidates projected back onto
/// the box; suited to smooth low-dimensional objectives.
pub fn nelder_mead<S, F>(
    f: F,
    x0: &[S],
    bounds: &[(S, S)],
    opts: &OptimOptions,
) -> OptimResult<S>
where
    S: Scalar,
    F: Fn(&[S]) -> S,
{
    assert_eq!(x0.len(), bounds.len(), "bounds must match dimension");
    let n = x0.len();
    let mut start = x0.to_vec();
    clamp_into(&mut start, bounds);

    // Initial simplex: start point plus one perturbed vertex per coordinate.
    let mut simplex: Vec<Vec<S>> = Vec::with_capacity(n + 1);
    simplex.push(start.clone());
    for i in 0..n {
        let (lo, hi) = bounds[i];
        let width = if lo.is_finite() && hi.is_finite() {
            hi - lo
        } else {
            nalgebra::ComplexField::abs(start[i]).max(S::one())
        };
        let mut v = start.clone();
        let step = S::of(opts.init_step) * width;
        v[i] = if v[i] + step <= hi { v[i] + step } else { v[i] - step };
        clamp_into(&mut v, bounds);
        simplex.push(v);
    }
    let mut values: Vec<S> = simplex.iter().map(|v| f(v)).collect();

    let alpha = S::one();
    let gamma = S::of(2.0);
    let rho = S::of(0.5);
    let sigma = S::of(0.5);

    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        // Order vertices by objective.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| worst_aware_cmp(&values[i], &values[j]));
        let simplex_sorted: Vec<Vec<S>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let values_sorted: Vec<S> = order.iter().map(|&i| values[i]).collect();
        simplex = simplex_sorted;
        values = values_sorted;

        let spread = if values[n].is_finite() && values[0].is_finite() {
            (values[n] - values[0]).f64().abs()
        } else {
            f64::INFINITY
        };
        if spread < opts.f_tol {
            // Equal values on a wide simplex (e.g. symmetric about the
            // minimum) are not convergence; shrink and keep going.
            let wide = simplex.iter().skip(1).any(|v| {
                v.iter().zip(&simplex[0]).zip(bounds).any(|((&vi, &bi), &(lo, hi))| {
                    let scale = if lo.is_finite() && hi.is_finite() {
                        (hi - lo).f64()
                    } else {
                        bi.f64().abs().max(1.0)
                    };
                    (vi - bi).f64().abs() > 1e-8 * scale
                })
            });
            if !wide {
                break;
            }
            let best = simplex[0].clone();
            for v in simplex.iter_mut().skip(1) {
                for (vi, &bi) in v.iter_mut().zip(&best) {
                    *vi = bi + sigma * (*vi - bi);
                }
                clamp_into(v, bounds);
            }
            for (val, v) in values.iter_mut().zip(&simplex).skip(1) {
                *val = f(v);
            }
            continue;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![S::zero(); n];
        for v in simplex.iter().take(n) {
            for (c, &vi) in centroid.iter_mut().zip(v) {
                *c += vi;
            }
        }
        for c in centroid.iter_mut() {
            *c /= S::of_usize(n);
        }

        let blend = |a: &[S], b: &[S], t: S| -> Vec<S> {
            let mut out: Vec<S> =
                a.iter().zip(b).map(|(&ai, &bi)| ai + t * (ai - bi)).collect();
            clamp_into(&mut out, bounds);
            out
        };

        let reflected = blend(&centroid, &simplex[n], alpha);
        let f_ref = f(&reflected);

        if worst_aware_cmp(&f_ref, &values[0]) == std::cmp::Ordering::Less {
            let expanded = blend(&centroid, &simplex[n], gamma);
            let f_exp = f(&expanded);
            if worst_aware_cmp(&f_exp, &f_ref) == std::cmp::Ordering::Less {
                simplex[n] = expanded;
                values[n] = f_exp;
            } else {
                simplex[n] = reflected;
                values[n] = f_ref;
            }
        } else if worst_aware_cmp(&f_ref, &values[n - 1]) == std::cmp::Ordering::Less {
            simplex[n] = reflected;
            values[n] = f_ref;
        } else {
            let contracted = blend(&centroid, &simplex[n], -rho);
            let f_con = f(&contracted);
            if worst_aware_cmp(&f_con, &values[n]) == std::cmp::Ordering::Less {
                simplex[n] = contracted;
                values[n] = f_con;
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].clone();
                for v in simplex.iter_mut().skip(1) {
                    for (vi, &bi) in v.iter_mut().zip(&best) {
                        *vi = bi + sigma * (*vi - bi);
                    }
                    clamp_into(v, bounds);
                }
                for (val, v) in values.iter_mut().zip(&simplex).skip(1) {
                    *val = f(v);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if worst_aware_cmp(&values[i], &values[best]) == std::cmp::Ordering::Less {
            best = i;
        }
    }
    OptimResult { x: simplex[best].clone(), value: values[best], iterations }
}

/// Runs the simplex search from several starts and keeps the best optimum.
pub fn multistart_nelder_mead<S, F>(
    f: F,
    starts: &[Vec<S>],
    bounds: &[(S, S)],
    opts: &OptimOptions,
) -> OptimResult<S>
where
    S: Scalar,
    F: Fn(&[S]) -> S,
{
    assert!(!starts.is_empty(), "need at least one start point");
    let mut best: Option<OptimResult<S>> = None;
    for s in starts {
        let r = nelder_mead(&f, s, bounds, opts);
        let replace = match &best {
            None => true,
            Some(b) => worst_aware_cmp(&r.value, &b.value) == std::cmp::Ordering::Less,
        };
        if replace {
            best = Some(r);
        }
    }
    best.unwrap()
}

/// Central-difference second derivative of `f` along coordinate `i`.
pub fn second_derivative<S, F>(f: &F, x: &[S], i: usize, h: S) -> S
where
    S: Scalar,
    F: Fn(&[S]) -> S,
{
    let mut plus = x.to_vec();
    plus[i] += h;
    let mut minus = x.to_vec();
    minus[i] -= h;
    let two = S::of(2.0);
    (f(&plus) - two * f(x) + f(&minus)) / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum_in_box() {
        let f = |x: &[f64]| (x[0] - 1.5).powi(2) + 2.0 * (x[1] + 0.5).powi(2);
        let r = nelder_mead(f, &[0.0, 0.0], &[(-3.0, 3.0), (-3.0, 3.0)], &OptimOptions::default());
        assert!((r.x[0] - 1.5).abs() < 1e-4, "x0 {}", r.x[0]);
        assert!((r.x[1] + 0.5).abs() < 1e-4, "x1 {}", r.x[1]);
    }

    #[test]
    fn respects_active_bound() {
        // Unconstrained minimum at 2 lies outside the box [−1, 1].
        let f = |x: &[f64]| (x[0] - 2.0).powi(2);
        let r = nelder_mead(f, &[0.0], &[(-1.0, 1.0)], &OptimOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-6, "hit {}", r.x[0]);
    }

    #[test]
    fn multistart_escapes_poor_basin() {
        // Double well with the deeper minimum near x = 2.
        let f = |x: &[f64]| {
            let a = (x[0] + 2.0).powi(2);
            let b = (x[0] - 2.0).powi(2) - 1.0;
            a.min(b)
        };
        let starts = vec![vec![-2.5], vec![0.5], vec![2.5]];
        let r = multistart_nelder_mead(f, &starts, &[(-5.0, 5.0)], &OptimOptions::default());
        assert!((r.x[0] - 2.0).abs() < 1e-3);
        assert!((r.value + 1.0).abs() < 1e-6);
    }

    #[test]
    fn survives_nonfinite_regions() {
        // Objective is +inf left of zero; minimum at 1.
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 1.0).powi(2)
            }
        };
        let r = nelder_mead(f, &[-0.5], &[(-4.0, 4.0)], &OptimOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-4, "got {}", r.x[0]);
    }

    #[test]
    fn second_derivative_of_quadratic() {
        let f = |x: &[f64]| 3.0 * x[0] * x[0];
        let d2 = second_derivative(&f, &[0.7], 0, 1e-4);
        assert!((d2 - 6.0).abs() < 1e-5);
    }
}

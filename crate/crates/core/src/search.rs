//! Bracketed root finding for monotone, possibly discontinuous, functions.

use crate::error::Result;

/// Settings for [`find_root`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct RootSearch {
    /// first point evaluated
    pub x0: f64,
    /// initial step when growing the bracket; doubled on every expansion
    pub step: f64,
    /// cap on the expansion step
    pub max_step: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// give up once the bracket is narrower than this
    pub x_tol: f64,
    /// cap on function evaluations
    pub max_evals: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct RootOutcome<T> {
    #[allow(dead_code)] // callers keep what they need in `value`
    pub x: f64,
    pub value: T,
    pub score: f64,
    pub evals: usize,
}

impl<T> RootOutcome<T> {
    pub fn converged(&self) -> bool {
        self.score <= 1.0
    }
}

struct Best<T> {
    x: f64,
    value: T,
    score: f64,
}

/// Finds a zero of a nonincreasing `f` on `[x_min, x_max]`.
///
/// `f` returns the signed function value and a payload. `score` grades a
/// payload; the search stops as soon as a point scores `<= 1` and otherwise
/// returns the best-scoring point seen. The bracket is grown geometrically
/// from `x0` and then narrowed with the Illinois variant of regula falsi, which
/// falls back to bisection whenever the secant step leaves the bracket.
pub(crate) fn find_root<T, F, S>(opts: RootSearch, mut f: F, score: S) -> Result<RootOutcome<T>>
where
    F: FnMut(f64) -> Result<(f64, T)>,
    S: Fn(f64, &T) -> f64,
{
    let mut best: Option<Best<T>> = None;
    let mut eval = |x: f64, best: &mut Option<Best<T>>| -> Result<(f64, bool)> {
        let (fx, value) = f(x)?;
        let s = score(fx, &value);
        if best.as_ref().is_none_or(|b| s < b.score) {
            *best = Some(Best { x, value, score: s });
        }
        Ok((fx, s <= 1.0))
    };

    let x0 = opts.x0.clamp(opts.x_min, opts.x_max);
    let (f0, done) = eval(x0, &mut best)?;
    let mut count = 1;
    let finish = |best: Option<Best<T>>, evals: usize| {
        let b = best.expect("at least one evaluation");
        RootOutcome {
            x: b.x,
            value: b.value,
            score: b.score,
            evals,
        }
    };
    if done || f0 == 0.0 {
        return Ok(finish(best, count));
    }

    // grow the bracket towards the sign change
    let up = f0 > 0.0;
    let (mut a, mut fa, mut b, mut fb) = (x0, f0, x0, f0);
    let mut step = opts.step;
    loop {
        if count >= opts.max_evals {
            return Ok(finish(best, count));
        }
        let edge = if up { opts.x_max } else { opts.x_min };
        if (up && b >= edge) || (!up && a <= edge) {
            return Ok(finish(best, count));
        }
        let x = if up { (b + step).min(edge) } else { (a - step).max(edge) };
        let (fx, done) = eval(x, &mut best)?;
        count += 1;
        if done || fx == 0.0 {
            return Ok(finish(best, count));
        }
        if up {
            if fx < 0.0 {
                b = x;
                fb = fx;
                break;
            }
            (a, fa, b) = (x, fx, x);
        } else {
            if fx > 0.0 {
                a = x;
                fa = fx;
                break;
            }
            (b, fb, a) = (x, fx, x);
        }
        step = (2.0 * step).min(opts.max_step);
    }

    // Illinois on [a, b] with fa > 0 > fb
    let mut side = 0i8;
    while count < opts.max_evals && b - a > opts.x_tol {
        let mut x = (a * fb - b * fa) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let (fx, done) = eval(x, &mut best)?;
        count += 1;
        if done || fx == 0.0 {
            break;
        }
        if fx > 0.0 {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    Ok(finish(best, count))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(x0: f64) -> RootSearch {
        RootSearch {
            x0,
            step: 0.5,
            max_step: f64::INFINITY,
            x_min: -100.0,
            x_max: 100.0,
            x_tol: 1e-14,
            max_evals: 200,
        }
    }

    #[test]
    fn finds_root_of_smooth_function() {
        let out = find_root(opts(0.0), |x| Ok((3.0 - x.powi(3), ())), |fx, _| fx.abs() / 1e-12).unwrap();
        assert!((out.x - 3f64.cbrt()).abs() < 1e-12);
        assert!(out.converged());
        assert!(out.evals < 40);
    }

    #[test]
    fn expands_bracket_downwards() {
        let out = find_root(opts(50.0), |x| Ok((-7.0 - x, x)), |fx, _| fx.abs() / 1e-12).unwrap();
        assert!((out.value + 7.0).abs() < 1e-10);
    }

    #[test]
    fn step_function_returns_best_point() {
        let out = find_root(
            opts(0.3),
            |x| Ok((if x < 1.0 { 1.0 } else { -2.0 }, ())),
            |fx, _| 2.0 * fx.abs(),
        )
        .unwrap();
        assert!(!out.converged());
        assert_eq!(out.score, 2.0);
        assert!(out.evals < 200);
    }

    #[test]
    fn respects_evaluation_cap() {
        let mut o = opts(0.0);
        o.max_evals = 3;
        let out = find_root(o, |x| Ok((10.0 - x, ())), |fx, _| fx.abs() / 1e-12).unwrap();
        assert_eq!(out.evals, 3);
        assert!(!out.converged());
    }

    #[test]
    fn no_sign_change_stops_at_domain_edge() {
        let out = find_root(opts(0.0), |x| Ok((1.0 / (1.0 + x), ())), |fx, _| fx.abs() / 1e-6).unwrap();
        assert_eq!(out.x, 100.0);
    }
}

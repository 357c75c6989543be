//! Adaptive Simpson quadrature with interval bisection.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 40;
/// Evaluation budget before giving up.
const MAX_EVALUATIONS: usize = 20_000_000;
/// Floor on the target, in units of `∫|f|`: finer accuracy is below rounding.
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the local Richardson error estimates.
    pub error: f64,
    pub evaluations: usize,
}

/// Integrate `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// The absolute target is `rel_tol` times the magnitude of a 256-panel
/// composite Simpson pre-estimate. It is floored at `abs_floor` and at a few
/// ulps of `∫|f|`, so integrals that vanish exactly, or cancel down to far
/// below the size of their integrand, still terminate.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64, abs_floor: f64) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    let mut evaluations = 0usize;
    let mut eval = |x: f64| {
        evaluations += 1;
        f(x)
    };

    // Start from a uniform partition so narrow features are not skipped.
    const PANELS: usize = 256;
    let h = (b - a) / PANELS as f64;
    let mut panels = Vec::with_capacity(PANELS);
    let mut rough = 0.0;
    let mut rough_abs = 0.0;
    let mut left = eval(a);
    for k in 0..PANELS {
        let x0 = a + h * k as f64;
        let x1 = if k + 1 == PANELS {
            b
        } else {
            a + h * (k + 1) as f64
        };
        let xm = 0.5 * (x0 + x1);
        let fm = eval(xm);
        let right = eval(x1);
        let s = (x1 - x0) / 6.0 * (left + 4.0 * fm + right);
        rough += s;
        rough_abs += (x1 - x0) / 6.0 * (left.abs() + 4.0 * fm.abs() + right.abs());
        panels.push((x0, x1, left, fm, right, s));
        left = right;
    }

    let tol = (rel_tol * rough.abs())
        .max(abs_floor)
        .max(ROUNDING_FLOOR * rough_abs);
    let per_panel = tol / PANELS as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    let mut failed = false;
    let mut budget = MAX_EVALUATIONS;
    for (x0, x1, f0, fm, f1, s) in panels {
        let (v, e, ok) = refine(
            &mut eval,
            &mut budget,
            x0,
            x1,
            f0,
            fm,
            f1,
            s,
            per_panel,
            MAX_DEPTH,
        );
        value += v;
        error += e;
        failed |= !ok;
    }
    if budget == 0 || (failed && error > tol) {
        return Err(Error::QuadratureNonConvergence { error });
    }
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}

#[allow(clippy::too_many_arguments)]
fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    budget: &mut usize,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64, bool) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let err = delta.abs() / 15.0;
    if err <= tol {
        return (left + right + delta / 15.0, err, true);
    }
    *budget = budget.saturating_sub(2);
    if depth == 0 || *budget == 0 {
        return (left + right + delta / 15.0, err, false);
    }
    let (lv, le, lok) = refine(f, budget, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
    let (rv, re, rok) = refine(f, budget, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    (lv + rv, le + re, lok && rok)
}

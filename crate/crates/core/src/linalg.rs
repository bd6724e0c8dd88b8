//! Jacobi-preconditioned conjugate gradients on grid vectors.
//!
//! Fixed (Dirichlet) entries are excluded by giving them a zero inverse
//! diagonal and a zero right-hand side; the operator must return zero on
//! those rows.

use crate::grid::NodeValue;

#[derive(Clone, Copy, Debug)]
pub(crate) enum Stop<'a> {
    /// `‖r‖₂ ≤ tol · ‖b‖₂`.
    Relative(f64),
    /// `max_i |r_i| · weight_i ≤ tol`, falling back to a relative `1e-15`
    /// reduction once rounding dominates.
    WeightedMax { weights: &'a [f64], tol: f64 },
}

#[derive(Clone, Debug)]
pub(crate) struct CgStats {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct NegativeCurvature;

const STAGNATION: f64 = 1e-15;
const REFRESH: usize = 200;

fn dot<T: NodeValue>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x.re_dot(y)).sum()
}

fn norm<T: NodeValue>(a: &[T]) -> f64 {
    dot(a, a).sqrt()
}

fn measure<T: NodeValue>(stop: &Stop<'_>, r: &[T]) -> f64 {
    match stop {
        Stop::Relative(_) => norm(r),
        Stop::WeightedMax { weights, .. } => r
            .iter()
            .zip(weights.iter())
            .map(|(v, w)| v.mag() * w)
            .fold(0.0, f64::max),
    }
}

/// Solves `K x = b` starting from the given `x`.
pub(crate) fn pcg<T: NodeValue>(
    apply: impl Fn(&[T], &mut [T]),
    inv_diag: &[f64],
    rhs: &[T],
    x: &mut [T],
    stop: Stop<'_>,
    max_iter: usize,
) -> Result<CgStats, NegativeCurvature> {
    let n = rhs.len();
    let mut r = vec![T::default(); n];
    let mut kp = vec![T::default(); n];

    let true_residual = |x: &[T], r: &mut [T], scratch: &mut [T]| {
        apply(x, scratch);
        for i in 0..n {
            r[i] = rhs[i] - scratch[i];
        }
    };
    true_residual(x, &mut r, &mut kp);

    let b_norm = norm(rhs);
    let satisfied = |r: &[T]| -> (bool, f64) {
        let m = measure(&stop, r);
        let ok = match stop {
            Stop::Relative(tol) => m <= tol * b_norm,
            Stop::WeightedMax { tol, .. } => m <= tol || norm(r) <= STAGNATION * b_norm,
        };
        (ok, m)
    };

    let mut history = Vec::new();
    let (ok, m) = satisfied(&r);
    history.push(m);
    if ok || b_norm == 0.0 && norm(&r) == 0.0 {
        return Ok(CgStats {
            iterations: 0,
            residual: m,
            converged: true,
            history,
        });
    }

    let mut z: Vec<T> = r.iter().zip(inv_diag).map(|(&v, &d)| v * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    for it in 1..=max_iter {
        apply(&p, &mut kp);
        let pkp = dot(&p, &kp);
        if pkp <= 0.0 {
            if rz == 0.0 {
                break;
            }
            return Err(NegativeCurvature);
        }
        let alpha = rz / pkp;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] = r[i] - kp[i] * alpha;
        }
        if it % REFRESH == 0 {
            true_residual(x, &mut r, &mut kp);
        }

        let (mut ok, mut m) = satisfied(&r);
        if ok {
            true_residual(x, &mut r, &mut kp);
            (ok, m) = satisfied(&r);
        }
        history.push(m);
        if ok {
            return Ok(CgStats {
                iterations: it,
                residual: m,
                converged: true,
                history,
            });
        }

        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + p[i] * beta;
        }
    }

    let residual = *history.last().unwrap_or(&f64::INFINITY);
    Ok(CgStats {
        iterations: max_iter,
        residual,
        converged: false,
        history,
    })
}

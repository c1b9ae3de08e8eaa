use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

/// Minimises `½ dᵀHd + gᵀd` subject to `lo ≤ d ≤ hi` with a primal
/// active-set method. `H` must be symmetric positive definite and
/// `lo ≤ 0 ≤ hi` so that `d = 0` is feasible.
pub(crate) fn solve_box_qp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = g.len();
    let tol = 1e-12;
    let mut d = DVector::<f64>::zeros(n);
    let mut set: Vec<Bound> = (0..n)
        .map(|i| {
            if lo[i] >= 0.0 && g[i] > 0.0 {
                Bound::Lower
            } else if hi[i] <= 0.0 && g[i] < 0.0 {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect();

    for _ in 0..(10 * n + 10) {
        let free: Vec<usize> = (0..n).filter(|&i| set[i] == Bound::Free).collect();
        let grad = h * &d + g;
        let mut p = DVector::<f64>::zeros(n);
        if !free.is_empty() {
            let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
            let rhs = DVector::from_fn(free.len(), |a, _| -grad[free[a]]);
            let chol = hff
                .cholesky()
                .ok_or_else(|| Error::Infeasible("QP Hessian is not positive definite".into()))?;
            let pf = chol.solve(&rhs);
            for (a, &i) in free.iter().enumerate() {
                p[i] = pf[a];
            }
        }

        if p.amax() <= tol * (1.0 + d.amax()) {
            let mut worst = None;
            let mut worst_val = -1e-12;
            for i in 0..n {
                let lambda = match set[i] {
                    Bound::Lower => grad[i],
                    Bound::Upper => -grad[i],
                    Bound::Free => continue,
                };
                if lambda < worst_val {
                    worst_val = lambda;
                    worst = Some(i);
                }
            }
            match worst {
                Some(i) => set[i] = Bound::Free,
                None => return Ok(d),
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for &i in &free {
            let step = if p[i] < 0.0 {
                (lo[i] - d[i]) / p[i]
            } else if p[i] > 0.0 {
                (hi[i] - d[i]) / p[i]
            } else {
                continue;
            };
            if step < alpha {
                alpha = step.max(0.0);
                blocking = Some((i, if p[i] < 0.0 { Bound::Lower } else { Bound::Upper }));
            }
        }
        d += alpha * &p;
        if let Some((i, b)) = blocking {
            d[i] = if b == Bound::Lower { lo[i] } else { hi[i] };
            set[i] = b;
        }
    }
    Ok(d)
}

//! Infeasible-start primal-dual path following for block-diagonal SDPs in
//! real symmetric standard form:
//!
//! ```text
//!   minimize    sum_j <C_j, X_j>
//!   subject to  sum_j <A_ij, X_j> = b_i,   X_j PSD.
//! ```
//!
//! Uses the HKM search direction with a Mehrotra predictor-corrector step,
//! dense factorizations throughout. Problems here are tiny (total dimension
//! well under a hundred), so every operation is O(n^3) dense without apology.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::ToleranceSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

/// Standard-form data. `a[i][j]` is the coefficient of block `j` in
/// constraint `i` (None = zero), all matrices symmetric.
pub(crate) struct StandardSdp {
    pub block_dims: Vec<usize>,
    pub objective: Vec<DMatrix<f64>>,
    pub constraints: Vec<Vec<Option<DMatrix<f64>>>>,
    pub rhs: DVector<f64>,
}

pub(crate) struct IpmOutcome {
    pub status: IpmStatus,
    pub x: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub duality_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

/// Growth factor past which the normalized dual-ray certificate declares the
/// primal problem infeasible.
const INFEASIBILITY_CERTIFICATE: f64 = 1e8;

type Blocks = Vec<DMatrix<f64>>;

fn block_inner(x: &Blocks, y: &Blocks) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| a.iter().zip(b.iter()).map(|(p, q)| p * q).sum::<f64>())
        .sum()
}

fn block_norm(x: &Blocks) -> f64 {
    block_inner(x, x).sqrt()
}

/// tr(a * b) for square matrices of equal size.
fn trace_prod(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            acc += a[(p, q)] * b[(q, p)];
        }
    }
    acc
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

impl StandardSdp {
    fn apply(&self, x: &Blocks) -> DVector<f64> {
        DVector::from_fn(self.constraints.len(), |i, _| {
            self.constraints[i]
                .iter()
                .zip(x)
                .map(|(a, xj)| a.as_ref().map_or(0.0, |m| trace_prod(m, xj)))
                .sum()
        })
    }

    fn adjoint(&self, y: &DVector<f64>) -> Blocks {
        let mut out: Blocks = self
            .block_dims
            .iter()
            .map(|&d| DMatrix::zeros(d, d))
            .collect();
        for (row, &yi) in self.constraints.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for (j, a) in row.iter().enumerate() {
                if let Some(m) = a {
                    out[j] += m * yi;
                }
            }
        }
        out
    }

    fn identity(&self, scale: f64) -> Blocks {
        self.block_dims
            .iter()
            .map(|&d| DMatrix::identity(d, d) * scale)
            .collect()
    }

    fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }
}

/// Largest step `alpha` keeping `x + alpha dx` positive definite, per block.
/// Returns +inf when the direction never hits the boundary.
fn step_to_boundary(x: &Blocks, dx: &Blocks) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (xj, dj) in x.iter().zip(dx) {
        let chol = Cholesky::new(xj.clone())?;
        let l = chol.l();
        let t1 = l.solve_lower_triangular(&dj.clone())?;
        let t2 = l.solve_lower_triangular(&t1.transpose())?;
        let mut w = t2.transpose();
        symmetrize(&mut w);
        let eig = nalgebra::SymmetricEigen::new(w);
        let min_eig = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if !min_eig.is_finite() {
            return None;
        }
        if min_eig < 0.0 {
            alpha = alpha.min(-1.0 / min_eig);
        }
    }
    Some(alpha)
}

pub(crate) fn solve(problem: &StandardSdp, tol: &ToleranceSet) -> IpmOutcome {
    let m = problem.constraints.len();
    let n_tot = problem.total_dim().max(1) as f64;

    let constraint_norms: Vec<f64> = problem
        .constraints
        .iter()
        .map(|row| {
            row.iter()
                .map(|a| {
                    a.as_ref()
                        .map_or(0.0, |m| m.iter().map(|v| v * v).sum::<f64>())
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let c_norm = block_norm(&problem.objective);
    let b_norm = problem.rhs.norm();
    let max_a_norm = constraint_norms.iter().copied().fold(0.0f64, f64::max);

    // Infeasible start on a comfortably interior point, scaled to the data.
    let init_ratio = problem
        .rhs
        .iter()
        .zip(&constraint_norms)
        .map(|(b, a)| (1.0 + b.abs()) / (1.0 + a))
        .fold(1.0f64, f64::max);
    let alpha0 = (n_tot * init_ratio).max(10.0);
    let beta0 = ((1.0 + c_norm.max(max_a_norm)) * n_tot.sqrt()).max(10.0);
    let mut x = problem.identity(alpha0);
    let mut s = problem.identity(beta0);
    let mut y = DVector::<f64>::zeros(m);

    let mu0 = block_inner(&x, &s) / n_tot;

    let fail = |x: &Blocks, iters: usize, pobj: f64, gap: f64, pres: f64, dres: f64| IpmOutcome {
        status: IpmStatus::NumericalFailure,
        x: x.clone(),
        primal_objective: pobj,
        duality_gap: gap,
        primal_residual: pres,
        dual_residual: dres,
        iterations: iters,
    };

    let mut rel_gap = f64::INFINITY;
    for iter in 0..tol.max_iterations {
        let gap = block_inner(&x, &s);
        let mu = gap / n_tot;
        let pobj = block_inner(&problem.objective, &x);
        let dobj = problem.rhs.dot(&y);

        let rp = &problem.rhs - problem.apply(&x);
        let aty = problem.adjoint(&y);
        let rd: Blocks = problem
            .objective
            .iter()
            .zip(&s)
            .zip(&aty)
            .map(|((c, sj), atj)| c - sj - atj)
            .collect();

        let p_res = rp.norm() / (1.0 + b_norm);
        let d_res = block_norm(&rd) / (1.0 + c_norm);
        rel_gap = gap.abs() / (1.0 + pobj.abs() + dobj.abs());

        log::debug!(
            "{{\"iter\":{iter},\"mu\":{mu:.3e},\"gap\":{rel_gap:.3e},\"p_res\":{p_res:.3e},\"d_res\":{d_res:.3e},\"pobj\":{pobj:.9e},\"dobj\":{dobj:.9e}}}"
        );

        if !mu.is_finite() || mu > 1e10 * mu0 {
            return fail(&x, iter, pobj, rel_gap, p_res, d_res);
        }

        if p_res <= tol.feasibility && d_res <= tol.feasibility && rel_gap <= tol.gap {
            return IpmOutcome {
                status: IpmStatus::Optimal,
                x,
                primal_objective: pobj,
                duality_gap: rel_gap,
                primal_residual: p_res,
                dual_residual: d_res,
                iterations: iter,
            };
        }

        // Dual improving ray => primal infeasible. Normalize the candidate to
        // unit objective and measure how well A^T(y) + S vanishes.
        let by = problem.rhs.dot(&y);
        if by > 0.0 {
            let mut ray = aty.clone();
            for (r, sj) in ray.iter_mut().zip(&s) {
                *r += sj;
            }
            let residual = block_norm(&ray);
            if by > INFEASIBILITY_CERTIFICATE * residual.max(1e-30) {
                return IpmOutcome {
                    status: IpmStatus::Infeasible,
                    x,
                    primal_objective: pobj,
                    duality_gap: rel_gap,
                    primal_residual: p_res,
                    dual_residual: d_res,
                    iterations: iter,
                };
            }
        }

        // Primal improving ray => unbounded objective; surfaced as a failure
        // since well-posed inputs always bound the feasible set.
        if -pobj > 1e12 * (1.0 + c_norm) && problem.apply(&x).norm() < 1e-6 * block_norm(&x) {
            return fail(&x, iter, pobj, rel_gap, p_res, d_res);
        }

        // Factor S.
        let s_inv: Option<Blocks> = s
            .iter()
            .map(|sj| Cholesky::new(sj.clone()).map(|c| c.inverse()))
            .collect();
        let Some(s_inv) = s_inv else {
            return fail(&x, iter, pobj, rel_gap, p_res, d_res);
        };

        // Schur complement M_ik = sum_j tr(A_ij X_j A_kj S_j^-1).
        let u: Vec<Blocks> = (0..m)
            .map(|k| {
                problem.constraints[k]
                    .iter()
                    .enumerate()
                    .map(|(j, a)| {
                        a.as_ref()
                            .map(|akj| &x[j] * akj * &s_inv[j])
                            .unwrap_or_else(|| {
                                DMatrix::zeros(problem.block_dims[j], problem.block_dims[j])
                            })
                    })
                    .collect()
            })
            .collect();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for k in 0..m {
                let mut acc = 0.0;
                for (j, a) in problem.constraints[i].iter().enumerate() {
                    if let Some(aij) = a {
                        acc += trace_prod(aij, &u[k][j]);
                    }
                }
                schur[(i, k)] = acc;
            }
        }
        let lu = schur.full_piv_lu();

        // V_j = X_j Rd_j S_j^-1 appears in both solves.
        let v: Blocks = x
            .iter()
            .zip(&rd)
            .zip(&s_inv)
            .map(|((xj, rdj), sij)| xj * rdj * sij)
            .collect();
        let a_of_v = problem.apply(&v);

        let solve_direction =
            |zc: &Blocks, rhs: DVector<f64>| -> Option<(Blocks, DVector<f64>, Blocks)> {
                let dy = lu.solve(&rhs)?;
                let at_dy = problem.adjoint(&dy);
                let ds: Blocks = rd.iter().zip(&at_dy).map(|(rdj, aj)| rdj - aj).collect();
                let dx: Blocks = zc
                    .iter()
                    .zip(&x)
                    .zip(&ds)
                    .zip(&s_inv)
                    .map(|(((zj, xj), dsj), sij)| {
                        let mut d = (zj - xj * dsj) * sij;
                        symmetrize(&mut d);
                        d
                    })
                    .collect();
                Some((dx, dy, ds))
            };

        // Predictor: aim at zero complementarity.
        let zc_aff: Blocks = x.iter().zip(&s).map(|(xj, sj)| -(xj * sj)).collect();
        let rhs_aff = DVector::from_fn(m, |i, _| {
            let zs: f64 = problem.constraints[i]
                .iter()
                .enumerate()
                .map(|(j, a)| {
                    a.as_ref()
                        .map_or(0.0, |aij| trace_prod(aij, &(&zc_aff[j] * &s_inv[j])))
                })
                .sum();
            rp[i] - zs + a_of_v[i]
        });
        let Some((dx_aff, _dy_aff, ds_aff)) = solve_direction(&zc_aff, rhs_aff) else {
            return fail(&x, iter, pobj, rel_gap, p_res, d_res);
        };

        let Some(ap_max) = step_to_boundary(&x, &dx_aff) else {
            return fail(&x, iter, pobj, rel_gap, p_res, d_res);
        };
        let Some(ad_max) = step_to_boundary(&s, &ds_aff) else {
            return fail(&x, iter, pobj, rel_gap, p_res, d_res);
        };
        let ap_aff = ap_max.min(1.0);
        let ad_aff = ad_max.min(1.0);

        let gap_aff = gap
            + ap_aff * block_inner(&dx_aff, &s)
            + ad_aff * block_inner(&x, &ds_aff)
            + ap_aff * ad_aff * block_inner(&dx_aff, &ds_aff);
        let mu_aff = (gap_aff / n_tot).max(0.0);
        let sigma = (mu_aff / mu).powi(3).clamp(1e-8, 1.0);

        // Corrector: recenter and compensate the second-order term.
        let zc: Blocks = x
            .iter()
            .zip(&s)
            .zip(&dx_aff)
            .zip(&ds_aff)
            .enumerate()
            .map(|(j, (((xj, sj), dxj), dsj))| {
                let d = problem.block_dims[j];
                DMatrix::identity(d, d) * (sigma * mu) - xj * sj - dxj * dsj
            })
            .collect();
        let rhs = DVector::from_fn(m, |i, _| {
            let zs: f64 = problem.constraints[i]
                .iter()
                .enumerate()
                .map(|(j, a)| {
                    a.as_ref()
                        .map_or(0.0, |aij| trace_prod(aij, &(&zc[j] * &s_inv[j])))
                })
                .sum();
            rp[i] - zs + a_of_v[i]
        });
        let Some((dx, dy, ds)) = solve_direction(&zc, rhs) else {
            return fail(&x, iter, pobj, rel_gap, p_res, d_res);
        };

        let Some(ap_max) = step_to_boundary(&x, &dx) else {
            return fail(&x, iter, pobj, rel_gap, p_res, d_res);
        };
        let Some(ad_max) = step_to_boundary(&s, &ds) else {
            return fail(&x, iter, pobj, rel_gap, p_res, d_res);
        };
        let damping = (1.0 - 10.0 * rel_gap).clamp(0.90, 0.98);
        let ap = (damping * ap_max).min(1.0);
        let ad = (damping * ad_max).min(1.0);

        for (xj, dj) in x.iter_mut().zip(&dx) {
            *xj += dj * ap;
            symmetrize(xj);
        }
        for (sj, dj) in s.iter_mut().zip(&ds) {
            *sj += dj * ad;
            symmetrize(sj);
        }
        y += dy * ad;
    }

    let pobj = block_inner(&problem.objective, &x);
    let rp = &problem.rhs - problem.apply(&x);
    fail(
        &x,
        tol.max_iterations,
        pobj,
        rel_gap,
        rp.norm() / (1.0 + b_norm),
        f64::NAN,
    )
}

//! Small dense semidefinite-program solver over complex Hermitian PSD blocks
//! and nonnegative scalars, with linear equality/inequality constraints and a
//! linear objective.
//!
//! Complex blocks are handled through the real symmetric embedding
//! `A -> [[Re A, -Im A], [Im A, Re A]]`. Since the embedding doubles traces,
//! every embedded coefficient carries a factor 1/2 so that real inner
//! products reproduce complex ones; inequalities become equalities with
//! nonnegative slack scalars. The resulting real problem goes to an
//! infeasible-start predictor-corrector interior-point core ([`ipm`]).

mod ipm;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Convergence and acceptance tolerances for [`solve`].
#[derive(Clone, Copy, Debug)]
pub struct ToleranceSet {
    /// Relative duality-gap target.
    pub gap: f64,
    /// Relative primal/dual feasibility target.
    pub feasibility: f64,
    /// PSD slack allowed when validating returned blocks.
    pub psd: f64,
    pub max_iterations: usize,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            gap: 1e-8,
            feasibility: 1e-8,
            psd: 1e-7,
            max_iterations: 200,
        }
    }
}

/// Handle to a Hermitian PSD matrix variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockId(usize);

/// Handle to a nonnegative scalar variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalarId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintSense {
    Equal,
    LessEq,
    GreaterEq,
}

/// Linear functional of the matrix blocks and scalars:
/// `sum_j tr(M_j X_j) + sum_k c_k s_k`.
#[derive(Clone, Debug, Default)]
pub struct LinearExpr {
    block_terms: Vec<(BlockId, DMatrix<Complex64>)>,
    scalar_terms: Vec<(ScalarId, f64)>,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_block(mut self, block: BlockId, coeff: DMatrix<Complex64>) -> Self {
        self.block_terms.push((block, coeff));
        self
    }

    pub fn with_scalar(mut self, scalar: ScalarId, coeff: f64) -> Self {
        self.scalar_terms.push((scalar, coeff));
        self
    }
}

#[derive(Clone, Debug)]
struct ConstraintRow {
    expr: LinearExpr,
    sense: ConstraintSense,
    rhs: f64,
}

/// A semidefinite program in Hermitian-PSD variables.
#[derive(Clone, Debug, Default)]
pub struct SdpProblem {
    block_names: Vec<String>,
    block_dims: Vec<usize>,
    scalar_names: Vec<String>,
    sense: Option<Sense>,
    objective: LinearExpr,
    rows: Vec<ConstraintRow>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_psd_block(&mut self, name: &str, dim: usize) -> BlockId {
        self.block_names.push(name.to_string());
        self.block_dims.push(dim);
        BlockId(self.block_dims.len() - 1)
    }

    pub fn add_scalar(&mut self, name: &str) -> ScalarId {
        self.scalar_names.push(name.to_string());
        ScalarId(self.scalar_names.len() - 1)
    }

    pub fn set_objective(&mut self, sense: Sense, expr: LinearExpr) {
        self.sense = Some(sense);
        self.objective = expr;
    }

    pub fn add_constraint(&mut self, expr: LinearExpr, sense: ConstraintSense, rhs: f64) {
        self.rows.push(ConstraintRow { expr, sense, rhs });
    }

    pub fn block_dim(&self, block: BlockId) -> usize {
        self.block_dims[block.0]
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    fn validate_expr(&self, expr: &LinearExpr, what: &str) -> Result<()> {
        for (id, m) in &expr.block_terms {
            if id.0 >= self.block_dims.len() {
                return Err(Error::MalformedSdp(format!("{what}: unknown block id")));
            }
            let d = self.block_dims[id.0];
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::MalformedSdp(format!(
                    "{what}: coefficient for block `{}` is {}x{}, expected {d}x{d}",
                    self.block_names[id.0],
                    m.nrows(),
                    m.ncols()
                )));
            }
            if !linalg::is_hermitian(m, 1e-12) {
                return Err(Error::MalformedSdp(format!(
                    "{what}: coefficient for block `{}` is not Hermitian",
                    self.block_names[id.0]
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::MalformedSdp(format!(
                    "{what}: non-finite coefficient"
                )));
            }
        }
        for (id, c) in &expr.scalar_terms {
            if id.0 >= self.scalar_names.len() {
                return Err(Error::MalformedSdp(format!("{what}: unknown scalar id")));
            }
            if !c.is_finite() {
                return Err(Error::MalformedSdp(format!(
                    "{what}: non-finite scalar coefficient"
                )));
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.block_dims.is_empty() && self.scalar_names.is_empty() {
            return Err(Error::MalformedSdp("no variables declared".into()));
        }
        if self.block_dims.contains(&0) {
            return Err(Error::MalformedSdp("zero-dimensional block".into()));
        }
        if self.sense.is_none() {
            return Err(Error::MalformedSdp("no objective set".into()));
        }
        if self.rows.is_empty() {
            return Err(Error::MalformedSdp(
                "no constraints; feasible set unbounded".into(),
            ));
        }
        self.validate_expr(&self.objective, "objective")?;
        for (i, row) in self.rows.iter().enumerate() {
            self.validate_expr(&row.expr, &format!("constraint {i}"))?;
            if !row.rhs.is_finite() {
                return Err(Error::MalformedSdp(format!(
                    "constraint {i}: non-finite rhs"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

/// Solver output. Matrix and scalar values follow declaration order; they are
/// meaningful only when `status == Optimal`.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub block_values: Vec<DMatrix<Complex64>>,
    pub scalar_values: Vec<f64>,
    pub objective_value: f64,
    /// Relative duality gap at termination.
    pub duality_gap: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

impl SdpSolution {
    pub fn block(&self, id: BlockId) -> &DMatrix<Complex64> {
        &self.block_values[id.0]
    }

    pub fn scalar(&self, id: ScalarId) -> f64 {
        self.scalar_values[id.0]
    }
}

/// Real symmetric embedding `[[Re A, -Im A], [Im A, Re A]]` of a Hermitian
/// matrix. The embedding is PSD iff `A` is, its eigenvalues are those of `A`
/// doubled in multiplicity, and its trace is twice the trace of `A`.
pub fn hermitian_to_real_embedding(a: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
    if !linalg::is_hermitian(a, 1e-12) {
        return Err(Error::MalformedSdp(
            "embedding input is not Hermitian".into(),
        ));
    }
    Ok(linalg::embed_hermitian(a))
}

/// Solves the program to the requested tolerances.
///
/// Non-convergence is reported through [`SdpStatus`], never as an `Err`;
/// errors are reserved for malformed problems.
pub fn solve(problem: &SdpProblem, tol: &ToleranceSet) -> Result<SdpSolution> {
    problem.validate()?;

    let n_complex = problem.block_dims.len();
    let n_scalar = problem.scalar_names.len();
    let sign = match problem.sense.unwrap() {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    // Layout of real blocks: embedded complex blocks, declared scalars, then
    // one slack scalar per inequality row.
    let n_slack = problem
        .rows
        .iter()
        .filter(|r| r.sense != ConstraintSense::Equal)
        .count();
    let mut block_dims: Vec<usize> = problem.block_dims.iter().map(|&d| 2 * d).collect();
    block_dims.extend(std::iter::repeat_n(1, n_scalar + n_slack));

    let zero_blocks = |dims: &[usize]| -> Vec<DMatrix<f64>> {
        dims.iter().map(|&d| DMatrix::zeros(d, d)).collect()
    };

    // Accumulates one expression into a row of real coefficient blocks. The
    // 1/2 on embeddings keeps <embed(M)/2, embed(X)> = tr(M X).
    let accumulate = |expr: &LinearExpr, out: &mut Vec<DMatrix<f64>>, scale: f64| {
        for (id, m) in &expr.block_terms {
            out[id.0] += linalg::embed_hermitian(m) * (0.5 * scale);
        }
        for (id, c) in &expr.scalar_terms {
            out[n_complex + id.0][(0, 0)] += c * scale;
        }
    };

    let mut objective = zero_blocks(&block_dims);
    accumulate(&problem.objective, &mut objective, sign);

    let mut constraints: Vec<Vec<Option<DMatrix<f64>>>> = Vec::with_capacity(problem.rows.len());
    let mut rhs = Vec::with_capacity(problem.rows.len());
    let mut next_slack = n_complex + n_scalar;
    for row in &problem.rows {
        let scale = if row.sense == ConstraintSense::GreaterEq {
            -1.0
        } else {
            1.0
        };
        let mut dense = zero_blocks(&block_dims);
        accumulate(&row.expr, &mut dense, scale);
        if row.sense != ConstraintSense::Equal {
            dense[next_slack][(0, 0)] = 1.0;
            next_slack += 1;
        }
        rhs.push(row.rhs * scale);
        // Keep rows sparse over blocks: most constraints touch few variables.
        constraints.push(
            dense
                .into_iter()
                .map(|m| {
                    if m.iter().all(|&v| v == 0.0) {
                        None
                    } else {
                        Some(m)
                    }
                })
                .collect(),
        );
    }

    let standard = ipm::StandardSdp {
        block_dims,
        objective,
        constraints,
        rhs: nalgebra::DVector::from_vec(rhs),
    };
    let outcome = ipm::solve(&standard, tol);
    log::debug!(
        "{{\"final\":true,\"status\":\"{:?}\",\"iters\":{},\"gap\":{:.3e},\"p_res\":{:.3e},\"d_res\":{:.3e}}}",
        outcome.status,
        outcome.iterations,
        outcome.duality_gap,
        outcome.primal_residual,
        outcome.dual_residual
    );

    let status = match outcome.status {
        ipm::IpmStatus::Optimal => SdpStatus::Optimal,
        ipm::IpmStatus::Infeasible => SdpStatus::Infeasible,
        ipm::IpmStatus::NumericalFailure => SdpStatus::NumericalFailure,
    };
    let block_values: Vec<DMatrix<Complex64>> = outcome.x[..n_complex]
        .iter()
        .map(linalg::project_embedding)
        .collect();
    let scalar_values: Vec<f64> = (0..n_scalar)
        .map(|k| outcome.x[n_complex + k][(0, 0)])
        .collect();

    debug_assert!(
        status != SdpStatus::Optimal
            || block_values.iter().all(|b| {
                let (vals, _) = linalg::hermitian_eigen(b);
                let top = vals.first().copied().unwrap_or(0.0).max(1e-300);
                vals.last().copied().unwrap_or(0.0) >= -tol.psd * top
            })
    );

    Ok(SdpSolution {
        block_values,
        scalar_values,
        objective_value: sign * outcome.primal_objective,
        duality_gap: outcome.duality_gap,
        iterations: outcome.iterations,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigen;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag2(a: f64, b: f64) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(a, 0.0), c(b, 0.0)]))
    }

    /// maximize tr(F diag(2,1)) s.t. tr(F) <= 1, F PSD: the optimum puts all
    /// trace on the dominant eigendirection, value 2.
    #[test]
    fn dominant_eigenvector_solution() {
        let mut p = SdpProblem::new();
        let f = p.add_psd_block("F", 2);
        p.set_objective(
            Sense::Maximize,
            LinearExpr::new().with_block(f, diag2(2.0, 1.0)),
        );
        p.add_constraint(
            LinearExpr::new().with_block(f, DMatrix::identity(2, 2)),
            ConstraintSense::LessEq,
            1.0,
        );
        let sol = solve(&p, &ToleranceSet::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!(sol.duality_gap <= 1e-8, "gap = {}", sol.duality_gap);
        assert_relative_eq!(sol.objective_value, 2.0, max_relative = 1e-7);
        let fval = sol.block(f);
        assert_relative_eq!(fval[(0, 0)].re, 1.0, epsilon = 1e-6);
        assert!(fval[(1, 1)].re.abs() < 1e-6);
    }

    /// maximize tr(F) s.t. tr(F) <= 0, F PSD: value 0 on the degenerate face.
    #[test]
    fn zero_trace_cap() {
        let mut p = SdpProblem::new();
        let f = p.add_psd_block("F", 2);
        p.set_objective(
            Sense::Maximize,
            LinearExpr::new().with_block(f, DMatrix::identity(2, 2)),
        );
        p.add_constraint(
            LinearExpr::new().with_block(f, DMatrix::identity(2, 2)),
            ConstraintSense::LessEq,
            0.0,
        );
        let sol = solve(&p, &ToleranceSet::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!(sol.duality_gap <= 1e-8, "gap = {}", sol.duality_gap);
        assert!(
            sol.objective_value.abs() < 1e-7,
            "value = {}",
            sol.objective_value
        );
        assert!(sol.block(f).iter().all(|z| z.norm() < 1e-6));
    }

    #[test]
    fn embedding_scalar() {
        let a = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let e = hermitian_to_real_embedding(&a).unwrap();
        assert_eq!(e, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn embedding_pauli_y() {
        let a =
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let e = hermitian_to_real_embedding(&a).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, -1.0, 0.0, //
                0.0, -1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0,
            ],
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn embedding_identity() {
        let a = DMatrix::from_diagonal_element(3, 3, c(1.0, 0.0));
        let e = hermitian_to_real_embedding(&a).unwrap();
        assert_eq!(e, DMatrix::identity(6, 6));
    }

    #[test]
    fn embedding_rejects_non_hermitian() {
        let a =
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]);
        assert!(hermitian_to_real_embedding(&a).is_err());
    }

    #[test]
    fn embedding_doubles_spectrum_and_trace() {
        let a =
            DMatrix::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.5, -1.5), c(0.5, 1.5), c(1.0, 0.0)]);
        let e = hermitian_to_real_embedding(&a).unwrap();
        assert_relative_eq!(e.trace(), 2.0 * 4.0, epsilon = 1e-12);
        let (complex_vals, _) = hermitian_eigen(&a);
        let mut real_vals: Vec<f64> = nalgebra::SymmetricEigen::new(e)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        real_vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (k, v) in complex_vals.iter().enumerate() {
            assert_relative_eq!(real_vals[2 * k], *v, epsilon = 1e-10);
            assert_relative_eq!(real_vals[2 * k + 1], *v, epsilon = 1e-10);
        }
    }

    #[test]
    fn scaling_equivariance() {
        let build = |kappa: f64| {
            let mut p = SdpProblem::new();
            let f = p.add_psd_block("F", 2);
            let obj = DMatrix::from_row_slice(
                2,
                2,
                &[c(2.0, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(1.0, 0.0)],
            );
            p.set_objective(
                Sense::Maximize,
                LinearExpr::new().with_block(f, obj * c(kappa, 0.0)),
            );
            p.add_constraint(
                LinearExpr::new().with_block(f, DMatrix::identity(2, 2)),
                ConstraintSense::LessEq,
                1.0,
            );
            solve(&p, &ToleranceSet::default()).unwrap()
        };
        let base = build(1.0);
        let scaled = build(7.5);
        assert_eq!(base.status, SdpStatus::Optimal);
        assert_eq!(scaled.status, SdpStatus::Optimal);
        assert_relative_eq!(
            scaled.objective_value,
            7.5 * base.objective_value,
            max_relative = 1e-6
        );
        let diff = (&scaled.block_values[0] - &base.block_values[0])
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-5, "blocks moved by {diff}");
    }

    #[test]
    fn weak_duality_on_maximization() {
        // Reported value must not exceed the analytic optimum beyond the gap.
        let mut p = SdpProblem::new();
        let f = p.add_psd_block("F", 2);
        p.set_objective(
            Sense::Maximize,
            LinearExpr::new().with_block(f, diag2(2.0, 1.0)),
        );
        p.add_constraint(
            LinearExpr::new().with_block(f, DMatrix::identity(2, 2)),
            ConstraintSense::LessEq,
            1.0,
        );
        let sol = solve(&p, &ToleranceSet::default()).unwrap();
        assert!(sol.objective_value <= 2.0 + 1e-6);
    }

    #[test]
    fn reported_blocks_are_psd() {
        let mut p = SdpProblem::new();
        let f = p.add_psd_block("F", 3);
        let w = p.add_psd_block("W", 3);
        let obj = DMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                c(1.0 + i as f64, 0.0)
            } else {
                c(0.1, 0.05 * (i as f64 - j as f64))
            }
        });
        p.set_objective(Sense::Maximize, LinearExpr::new().with_block(f, obj));
        p.add_constraint(
            LinearExpr::new()
                .with_block(f, DMatrix::identity(3, 3))
                .with_block(w, DMatrix::identity(3, 3)),
            ConstraintSense::LessEq,
            2.0,
        );
        p.add_constraint(
            LinearExpr::new().with_block(w, DMatrix::identity(3, 3)),
            ConstraintSense::GreaterEq,
            0.5,
        );
        let sol = solve(&p, &ToleranceSet::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        for b in &sol.block_values {
            let (vals, _) = hermitian_eigen(b);
            let top = vals[0].max(1e-300);
            assert!(vals[vals.len() - 1] >= -1e-7 * top, "eigs {vals:?}");
        }
    }

    #[test]
    fn malformed_problems_rejected() {
        let p = SdpProblem::new();
        assert!(solve(&p, &ToleranceSet::default()).is_err());

        let mut p = SdpProblem::new();
        let f = p.add_psd_block("F", 2);
        let non_herm =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        p.set_objective(Sense::Maximize, LinearExpr::new().with_block(f, non_herm));
        p.add_constraint(
            LinearExpr::new().with_block(f, DMatrix::identity(2, 2)),
            ConstraintSense::LessEq,
            1.0,
        );
        assert!(solve(&p, &ToleranceSet::default()).is_err());
    }
}

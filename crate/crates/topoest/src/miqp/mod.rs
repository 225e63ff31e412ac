//! Convex quadratic programs with linear constraints and designated binary
//! variables.
//!
//! [`QuadraticProgram`] holds the objective in coefficient form
//! (`f(x) = sum q_ij x_i x_j + sum c_i x_i + const`, one term per unordered
//! pair), linear equalities, and `<=` inequalities. [`MixedBinaryQP`] marks a
//! subset of variables as binary. [`solve_miqp`] offers two strategies:
//! exhaustive enumeration of the binary assignments (the oracle) and
//! branch-and-bound (the default).
//!
//! Internally the solver eliminates equalities by sparse substitution,
//! factors the reduced Hessian once per instance, and solves every
//! relaxation / fixed assignment through a small Schur complement over the
//! rows active at that node, falling back to an active-set loop when an
//! inequality actually binds. Matrices are assembled sparse and factored
//! dense; problems here are a few hundred variables at most.

mod presolve;
mod solve;

use std::fmt::Write as _;
use std::time::Duration;

use thiserror::Error;

pub use solve::{solve_miqp, solve_qp, QpSolution};

/// Default KKT/feasibility tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum MiqpError {
    #[error("problem is infeasible")]
    Infeasible {
        certificate: Option<InfeasibilityCertificate>,
    },
    #[error("objective is unbounded below over the feasible set")]
    Unbounded,
    #[error("objective is not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("enumeration over {0} binaries is not practical (limit 30)")]
    EnumerationTooLarge(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// A nonnegative combination of constraint rows proving `0 <= -gap` with
/// `gap > 0`, i.e. that no point satisfies them all.
#[derive(Debug, Clone)]
pub struct InfeasibilityCertificate {
    /// `(row index into the inequality list, coefficient >= 0)`.
    pub rows: Vec<(usize, f64)>,
    pub gap: f64,
}

/// One sparse linear row `sum_i terms[i].1 * x[terms[i].0]`, kept sorted and
/// deduplicated by column.
#[derive(Debug, Clone, PartialEq)]
pub struct LinRow {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinRow {
    pub fn new(mut terms: Vec<(usize, f64)>, rhs: f64) -> Self {
        terms.retain(|t| t.1 != 0.0);
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (c, v) in terms {
            match out.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => out.push((c, v)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        LinRow { terms: out, rhs }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, v)| v * x[c]).sum()
    }
}

/// Convex quadratic objective with linear constraints.
///
/// The objective is `f(x) = sum_{i<=j} q_ij x_i x_j + sum c_i x_i + const`;
/// [`QuadraticProgram::add_wls_row`] is the usual way to build it as a
/// weighted least-squares sum.
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    n: usize,
    /// Coefficient-form quadratic terms, consolidated lazily.
    quad: Vec<(usize, usize, f64)>,
    quad_dirty: bool,
    c: Vec<f64>,
    const_term: f64,
    eq: Vec<LinRow>,
    ineq: Vec<LinRow>,
}

impl QuadraticProgram {
    pub fn new(n: usize) -> Self {
        QuadraticProgram {
            n,
            quad: Vec::new(),
            quad_dirty: false,
            c: vec![0.0; n],
            const_term: 0.0,
            eq: Vec::new(),
            ineq: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds `v * x_i * x_j` to the objective.
    pub fn add_quadratic(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n);
        if v != 0.0 {
            self.quad.push((i.min(j), i.max(j), v));
            self.quad_dirty = true;
        }
    }

    /// Adds `v * x_i` to the objective.
    pub fn add_linear(&mut self, i: usize, v: f64) {
        assert!(i < self.n);
        self.c[i] += v;
    }

    pub fn add_constant(&mut self, v: f64) {
        self.const_term += v;
    }

    /// Adds the weighted residual `w * (h^T x - z)^2` to the objective.
    pub fn add_wls_row(&mut self, h: &[(usize, f64)], z: f64, w: f64) {
        for (a, &(i, hi)) in h.iter().enumerate() {
            for &(j, hj) in h.iter().skip(a + 1) {
                self.add_quadratic(i, j, 2.0 * w * hi * hj);
            }
            self.add_quadratic(i, i, w * hi * hi);
            self.add_linear(i, -2.0 * w * z * hi);
        }
        self.add_constant(w * z * z);
    }

    /// Adds the equality `sum terms = rhs`.
    pub fn add_eq(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        let row = LinRow::new(terms, rhs);
        self.check_row(&row);
        self.eq.push(row);
    }

    /// Adds the inequality `sum terms <= rhs`.
    pub fn add_ineq_le(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        let row = LinRow::new(terms, rhs);
        self.check_row(&row);
        self.ineq.push(row);
    }

    fn check_row(&self, row: &LinRow) {
        for &(c, _) in &row.terms {
            assert!(c < self.n, "constraint references variable {c} >= n={}", self.n);
        }
    }

    pub fn eq_rows(&self) -> &[LinRow] {
        &self.eq
    }

    pub fn ineq_rows(&self) -> &[LinRow] {
        &self.ineq
    }

    /// Consolidated quadratic terms (`i <= j`, one entry per pair).
    pub fn quad_terms(&mut self) -> &[(usize, usize, f64)] {
        if self.quad_dirty {
            self.quad.sort_by_key(|&(i, j, _)| (i, j));
            let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(self.quad.len());
            for &(i, j, v) in &self.quad {
                match out.last_mut() {
                    Some(last) if last.0 == i && last.1 == j => last.2 += v,
                    _ => out.push((i, j, v)),
                }
            }
            out.retain(|t| t.2 != 0.0);
            self.quad = out;
            self.quad_dirty = false;
        }
        &self.quad
    }

    /// Quadratic terms without consolidating; call [`Self::quad_terms`]
    /// first when terms may have been added since.
    pub(crate) fn quad_view(&self) -> &[(usize, usize, f64)] {
        debug_assert!(!self.quad_dirty);
        &self.quad
    }

    pub fn linear_terms(&self) -> &[f64] {
        &self.c
    }

    pub fn const_term(&self) -> f64 {
        self.const_term
    }

    /// Objective value at `x`.
    pub fn objective(&mut self, x: &[f64]) -> f64 {
        let mut f = self.const_term;
        for &(i, j, v) in self.quad_terms() {
            f += v * x[i] * x[j];
        }
        let c = self.linear_terms();
        for i in 0..x.len().min(c.len()) {
            f += c[i] * x[i];
        }
        f
    }

    /// Largest violation of any constraint at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.eq {
            worst = worst.max((row.dot(x) - row.rhs).abs());
        }
        for row in &self.ineq {
            worst = worst.max(row.dot(x) - row.rhs);
        }
        worst
    }

    /// Verifies that the quadratic form is positive semidefinite (smallest
    /// eigenvalue above `-1e-8 * scale`) and that dimensions are consistent.
    pub fn validate(&mut self) -> Result<(), MiqpError> {
        let n = self.n;
        let mut h = nalgebra::DMatrix::<f64>::zeros(n, n);
        for &(i, j, v) in self.quad_terms() {
            if i == j {
                h[(i, i)] += 2.0 * v;
            } else {
                h[(i, j)] += v;
                h[(j, i)] += v;
            }
        }
        let scale = h.amax().max(1.0);
        let eig = h.symmetric_eigenvalues();
        let min = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if min < -1e-8 * scale {
            return Err(MiqpError::NotPsd(format!(
                "smallest Hessian eigenvalue {min:.3e} (scale {scale:.3e})"
            )));
        }
        Ok(())
    }

    /// Plain-text dump of the instance for external cross-checking.
    ///
    /// Format, one item per line: `n <vars>`, `quad i j v` (term `v x_i x_j`),
    /// `lin i v`, `const v`, `eq i:v ... = rhs`, `le i:v ... <= rhs`,
    /// `binary i1 i2 ...` (emitted by [`MixedBinaryQP::dump`]).
    pub fn dump(&mut self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n {}", self.n);
        for &(i, j, v) in self.quad_terms() {
            let _ = writeln!(out, "quad {i} {j} {v}");
        }
        for (i, &v) in self.c.iter().enumerate() {
            if v != 0.0 {
                let _ = writeln!(out, "lin {i} {v}");
            }
        }
        let _ = writeln!(out, "const {}", self.const_term);
        for row in &self.eq {
            let terms: Vec<String> = row.terms.iter().map(|(c, v)| format!("{c}:{v}")).collect();
            let _ = writeln!(out, "eq {} = {}", terms.join(" "), row.rhs);
        }
        for row in &self.ineq {
            let terms: Vec<String> = row.terms.iter().map(|(c, v)| format!("{c}:{v}")).collect();
            let _ = writeln!(out, "le {} <= {}", terms.join(" "), row.rhs);
        }
        out
    }
}

/// A convex QP with designated binary variables.
#[derive(Debug, Clone)]
pub struct MixedBinaryQP {
    pub qp: QuadraticProgram,
    /// Variable indices constrained to {0, 1}; relaxations box them to
    /// `[0, 1]`.
    pub binary_idx: Vec<usize>,
}

impl MixedBinaryQP {
    pub fn new(qp: QuadraticProgram, binary_idx: Vec<usize>) -> Self {
        MixedBinaryQP { qp, binary_idx }
    }

    pub fn dump(&mut self) -> String {
        let mut out = self.qp.dump();
        if !self.binary_idx.is_empty() {
            let list: Vec<String> = self.binary_idx.iter().map(|b| b.to_string()).collect();
            let _ = writeln!(out, "binary {}", list.join(" "));
        }
        out
    }
}

/// Strategy for resolving the binary variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Try every assignment (requires at most 30 binaries).
    Enumerate,
    /// Branch-and-bound: most-fractional branching, depth-first until the
    /// first incumbent, best-bound afterwards.
    BranchAndBound,
}

/// Solver counters.
#[derive(Debug, Clone, Default)]
pub struct MiqpStats {
    pub nodes: usize,
    pub qp_solves: usize,
    pub wall: Duration,
    /// Objective of the root relaxation (branch-and-bound only).
    pub root_relaxation: Option<f64>,
}

/// Solution of a mixed-binary QP.
#[derive(Debug, Clone)]
pub struct MiqpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Resolved binary values in `binary_idx` order.
    pub binaries: Vec<bool>,
    pub stats: MiqpStats,
}

//! Dense strictly convex quadratic programming.
//!
//! ```text
//!     minimize     1/2 x' H x + c' x
//!     subject to   A_eq x  = b_eq
//!                  A_in x <= b_in
//! ```
//!
//! Solved with the Goldfarb-Idnani dual active-set method. The method starts
//! from the unconstrained minimizer and adds violated constraints one at a
//! time while keeping the active set dual feasible. Instead of updating the
//! factorization of the active set with Givens rotations, it is recomputed
//! with a Householder QR after every change; the problems solved here have at
//! most a few hundred variables.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
/// Primal feasibility required of a returned solution.
pub const PRIMAL_TOLERANCE: f64 = 1e-8;
/// Stationarity and complementarity required of a returned solution.
pub const DUAL_TOLERANCE: f64 = 1e-7;

/// `coefficients · x (= or <=) bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coefficients: Vec<f64>,
    pub bound: f64,
}

impl LinearConstraint {
    pub fn new(coefficients: Vec<f64>, bound: f64) -> Self {
        LinearConstraint {
            coefficients,
            bound,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub equalities: Vec<LinearConstraint>,
    pub inequalities: Vec<LinearConstraint>,
}

impl QuadraticProgram {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        0.5 * x.dot(&(&self.hessian * &x)) + self.linear.dot(&x)
    }

    /// Whether a Cholesky factorization of the Hessian exists.
    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(self.hessian.clone()).is_some()
    }

    /// Largest constraint violation at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let eq = self
            .equalities
            .iter()
            .map(|c| (c.value(x) - c.bound).abs());
        let ineq = self
            .inequalities
            .iter()
            .map(|c| (c.value(x) - c.bound).max(0.0));
        eq.chain(ineq).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    pub primal: f64,
    pub stationarity: f64,
    pub dual: f64,
    pub complementarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub equality_multipliers: Vec<f64>,
    /// Non-negative; zero for inactive constraints.
    pub inequality_multipliers: Vec<f64>,
    pub iterations: usize,
    pub kkt: KktResiduals,
}

struct Row {
    /// Normal in `normal · x >= bound` form.
    normal: DVector<f64>,
    bound: f64,
    equality: bool,
}

/// Orthogonal factorization of the active set: with `G = L L'`, `J = L^-T Q`
/// and `J' N = [R; 0]`.
struct ActiveFactor {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl ActiveFactor {
    fn new(l: &DMatrix<f64>, normals: &[&DVector<f64>]) -> Self {
        let n = l.nrows();
        let q = normals.len();
        let mut augmented = DMatrix::zeros(n, q + n);
        for (k, normal) in normals.iter().enumerate() {
            let col = l
                .solve_lower_triangular(normal)
                .expect("cholesky factor is nonsingular");
            augmented.set_column(k, &col);
        }
        for i in 0..n {
            augmented[(i, q + i)] = 1.0;
        }
        let qr = augmented.qr();
        let qmat = qr.q();
        let rfull = qr.r();
        let r = rfull.view((0, 0), (q, q)).into_owned();
        let j = l
            .transpose()
            .solve_upper_triangular(&qmat)
            .expect("cholesky factor is nonsingular");
        ActiveFactor { j, r }
    }
}

pub fn solve(problem: &QuadraticProgram, options: &SolverOptions) -> Result<QpSolution> {
    let n = problem.dim();
    if problem.hessian.shape() != (n, n) {
        return Err(failure("hessian shape does not match the linear term", 0, problem, None));
    }
    for c in problem.equalities.iter().chain(&problem.inequalities) {
        if c.coefficients.len() != n {
            return Err(failure("constraint length does not match the problem", 0, problem, None));
        }
    }
    let chol = Cholesky::new(problem.hessian.clone())
        .ok_or_else(|| failure("hessian is not positive definite", 0, problem, None))?;
    let l = chol.l();

    let mut rows: Vec<Row> = Vec::new();
    for c in &problem.equalities {
        rows.push(Row {
            normal: DVector::from_column_slice(&c.coefficients),
            bound: c.bound,
            equality: true,
        });
    }
    for c in &problem.inequalities {
        rows.push(Row {
            normal: -DVector::from_column_slice(&c.coefficients),
            bound: -c.bound,
            equality: false,
        });
    }
    let norms: Vec<f64> = rows.iter().map(|r| r.normal.norm().max(f64::MIN_POSITIVE)).collect();
    let mut sign = vec![1.0; rows.len()];

    let mut x = chol.solve(&(-&problem.linear));
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut factor = ActiveFactor::new(&l, &[]);
    let mut iterations = 0usize;
    let mut next_equality = 0usize;

    let slack = |x: &DVector<f64>, i: usize, sign: &[f64]| -> f64 {
        sign[i] * (rows[i].normal.dot(x) - rows[i].bound)
    };

    loop {
        // Pick the constraint to add: pending equalities first, then the
        // most violated inequality relative to its norm.
        let p = if next_equality < problem.equalities.len() {
            let p = next_equality;
            next_equality += 1;
            if rows[p].normal.dot(&x) - rows[p].bound > 0.0 {
                sign[p] = -1.0;
            }
            p
        } else {
            let mut best: Option<(usize, f64)> = None;
            for i in problem.equalities.len()..rows.len() {
                if active.contains(&i) {
                    continue;
                }
                let s = slack(&x, i, &sign) / norms[i];
                let tol = 1e-13 * (1.0 + rows[i].bound.abs() / norms[i]);
                if s < -tol && best.is_none_or(|(_, b)| s < b) {
                    best = Some((i, s));
                }
            }
            match best {
                Some((i, _)) => i,
                None => break,
            }
        };

        let mut u_p = 0.0;
        loop {
            iterations += 1;
            if iterations > options.max_iterations {
                return Err(failure(
                    "iteration budget exhausted",
                    iterations - 1,
                    problem,
                    Some(x.as_slice()),
                ));
            }
            let q = active.len();
            let np = &rows[p].normal * sign[p];
            let d = factor.j.transpose() * &np;
            let d2 = d.rows(q, n - q);
            let z = factor.j.columns(q, n - q) * d2;
            let r = if q > 0 {
                factor
                    .r
                    .solve_upper_triangular(&d.rows(0, q).into_owned())
                    .ok_or_else(|| failure("active set became dependent", iterations, problem, Some(x.as_slice())))?
            } else {
                DVector::zeros(0)
            };

            let mut t1 = f64::INFINITY;
            let mut drop: Option<usize> = None;
            for (k, &c) in active.iter().enumerate() {
                if !rows[c].equality && r[k] > 1e-14 {
                    let t = u[k] / r[k];
                    if t < t1 {
                        t1 = t;
                        drop = Some(k);
                    }
                }
            }
            let dependent = d2.norm() <= 1e-11 * d.norm().max(f64::MIN_POSITIVE);
            let t2 = if dependent {
                f64::INFINITY
            } else {
                (-slack(&x, p, &sign) / z.dot(&np)).max(0.0)
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(failure("constraints are infeasible", iterations, problem, Some(x.as_slice())));
            }

            for (uk, rk) in u.iter_mut().zip(r.iter()) {
                *uk -= t * rk;
            }
            u_p += t;
            if t2.is_finite() {
                x += &z * t;
            }
            if t2 <= t1 {
                active.push(p);
                u.push(u_p);
                factor = refactor(&l, &rows, &active, &sign);
                break;
            }
            let k = drop.expect("partial step has a blocking constraint");
            active.remove(k);
            u.remove(k);
            factor = refactor(&l, &rows, &active, &sign);
        }
    }

    let x_vec: Vec<f64> = x.iter().copied().collect();
    let mut equality_multipliers = vec![0.0; problem.equalities.len()];
    let mut inequality_multipliers = vec![0.0; problem.inequalities.len()];
    let mut gradient = &problem.hessian * &x + &problem.linear;
    for (&c, &uc) in active.iter().zip(&u) {
        gradient -= &rows[c].normal * (sign[c] * uc);
        if rows[c].equality {
            equality_multipliers[c] = sign[c] * uc;
        } else {
            inequality_multipliers[c - problem.equalities.len()] = uc;
        }
    }
    let kkt = KktResiduals {
        primal: problem.primal_residual(&x_vec),
        stationarity: gradient.amax(),
        dual: inequality_multipliers
            .iter()
            .fold(0.0, |m: f64, &l| m.max(-l)),
        complementarity: problem
            .inequalities
            .iter()
            .zip(&inequality_multipliers)
            .map(|(c, l)| l * (c.value(&x_vec) - c.bound).abs())
            .sum(),
    };
    if kkt.primal > PRIMAL_TOLERANCE
        || kkt.stationarity > DUAL_TOLERANCE
        || kkt.dual > DUAL_TOLERANCE
        || kkt.complementarity > DUAL_TOLERANCE
    {
        return Err(failure(
            &format!("KKT tolerances not met: {kkt:?}"),
            iterations,
            problem,
            Some(&x_vec),
        ));
    }
    Ok(QpSolution {
        objective: problem.objective(&x_vec),
        x: x_vec,
        equality_multipliers,
        inequality_multipliers,
        iterations,
        kkt,
    })
}

fn refactor(l: &DMatrix<f64>, rows: &[Row], active: &[usize], sign: &[f64]) -> ActiveFactor {
    let normals: Vec<DVector<f64>> = active.iter().map(|&c| &rows[c].normal * sign[c]).collect();
    let refs: Vec<&DVector<f64>> = normals.iter().collect();
    ActiveFactor::new(l, &refs)
}

fn failure(message: &str, iterations: usize, problem: &QuadraticProgram, x: Option<&[f64]>) -> Error {
    let (primal_residual, stationarity_residual) = match x {
        Some(x) => {
            let xv = DVector::from_column_slice(x);
            let g = &problem.hessian * &xv + &problem.linear;
            (problem.primal_residual(x), g.amax())
        }
        None => (f64::NAN, f64::NAN),
    };
    Error::SolverFailure {
        message: message.to_string(),
        iterations,
        primal_residual,
        stationarity_residual,
    }
}

//! Dense primal active-set method for small convex QPs and LPs
//!
//! ```text
//! minimize   ½ xᵀ diag(h) x + cᵀx
//! subject to a_jᵀx ≤ b_j   (inequality rows)
//!            a_jᵀx = b_j   (equality rows)
//! ```
//!
//! A feasible start is found by minimizing the largest violation `t` over
//! `a_jᵀx − t ≤ b_j`. Entering and leaving rows follow Bland's rule, so LPs
//! terminate on a vertex together with the basis that certifies it.

use std::collections::VecDeque;

use log::trace;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Inequality,
    Equality,
    /// Present in the matrix but not enforced.
    Ignored,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub kinds: Vec<RowKind>,
    pub c: DVector<f64>,
    /// Diagonal of the Hessian, all entries ≥ 0.
    pub h: DVector<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Relative feasibility tolerance.
    pub feas_tol: f64,
    /// Relative tolerance on multipliers and reduced gradients.
    pub opt_tol: f64,
    pub max_iter: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            opt_tol: 1e-9,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: DVector<f64>,
    /// One multiplier per row; zero outside the working set. Stationarity
    /// reads `diag(h) x + c + Aᵀλ = 0`.
    pub multipliers: DVector<f64>,
    /// Final working set in ascending row order. For an LP whose working set
    /// has `n` rows this is a basis.
    pub working_set: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Optimal(Solution),
    /// No point satisfies the rows; `worst_row` is the most violated row at
    /// the least-violation point and `violation` its excess. `violated`
    /// lists every row over tolerance there, most violated first.
    Infeasible {
        worst_row: usize,
        violation: f64,
        violated: Vec<usize>,
    },
    Unbounded,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum QpError {
    #[error("no convergence after {iterations} iterations; last steps: {trace:?}")]
    IterationLimit {
        iterations: usize,
        trace: Vec<String>,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl Problem {
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_linear(&self) -> bool {
        self.h.iter().all(|&v| v == 0.0)
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&self.h.component_mul(x)) + self.c.dot(x)
    }

    fn check(&self) -> Result<(), QpError> {
        let (m, n) = self.a.shape();
        if self.b.len() != m || self.kinds.len() != m {
            return Err(QpError::Dimension(format!(
                "{m} rows but {} bounds and {} kinds",
                self.b.len(),
                self.kinds.len()
            )));
        }
        if self.c.len() != n || self.h.len() != n {
            return Err(QpError::Dimension(format!(
                "{n} columns but {} cost terms",
                self.c.len()
            )));
        }
        Ok(())
    }
}

pub fn solve(problem: &Problem, opts: &Options) -> Result<Outcome, QpError> {
    problem.check()?;
    let (m, n) = problem.a.shape();
    let scale = problem
        .b
        .iter()
        .filter(|v| v.is_finite())
        .fold(1.0_f64, |s, v| s.max(v.abs()));
    let feas = opts.feas_tol * scale;
    let enforced: Vec<usize> = (0..m)
        .filter(|&j| problem.kinds[j] != RowKind::Ignored)
        .collect();

    let mut x = DVector::zeros(n);
    let mut iterations = 0;
    let violation = |x: &DVector<f64>, j: usize| -> f64 {
        let r = problem.a.row(j).dot(&x.transpose()) - problem.b[j];
        if problem.kinds[j] == RowKind::Equality {
            r.abs()
        } else {
            r
        }
    };
    let initial = enforced
        .iter()
        .map(|&j| violation(&x, j))
        .fold(0.0_f64, f64::max);
    if initial > 0.0 {
        let (x1, it) = phase_one(problem, &enforced, initial, feas, opts)?;
        iterations += it;
        x = x1;
        let (worst_row, worst) = enforced.iter().map(|&j| (j, violation(&x, j))).fold(
            (usize::MAX, f64::NEG_INFINITY),
            |acc, (j, v)| if v > acc.1 { (j, v) } else { acc },
        );
        if worst > feas {
            let mut violated: Vec<(usize, f64)> = enforced
                .iter()
                .map(|&j| (j, violation(&x, j)))
                .filter(|&(_, v)| v > feas)
                .collect();
            violated.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let violated = violated.into_iter().map(|(j, _)| j).collect();
            return Ok(Outcome::Infeasible {
                worst_row,
                violation: worst,
                violated,
            });
        }
    }

    let mut working = Vec::new();
    for &j in &enforced {
        if problem.kinds[j] == RowKind::Equality && independent_with(&problem.a, &working, j) {
            working.push(j);
        }
    }
    project_onto(&problem.a, &problem.b, &working, &mut x);

    let runner = Runner {
        a: &problem.a,
        b: &problem.b,
        kinds: &problem.kinds,
        c: &problem.c,
        h: &problem.h,
        opts,
    };
    match runner.run(x, working, problem.is_linear(), None)? {
        RunResult::Unbounded => Ok(Outcome::Unbounded),
        RunResult::Done {
            mut x,
            working,
            multipliers,
            iterations: it,
        } => {
            if working.len() == n {
                project_onto(&problem.a, &problem.b, &working, &mut x);
            }
            let mut sorted = working.clone();
            sorted.sort_unstable();
            let mut full = DVector::zeros(m);
            for (k, &j) in working.iter().enumerate() {
                full[j] = multipliers[k];
            }
            Ok(Outcome::Optimal(Solution {
                objective: problem.objective(&x),
                x,
                multipliers: full,
                working_set: sorted,
                iterations: iterations + it,
            }))
        }
    }
}

/// Minimizes the largest violation, stopping as soon as it falls below `feas`.
fn phase_one(
    problem: &Problem,
    enforced: &[usize],
    t0: f64,
    feas: f64,
    opts: &Options,
) -> Result<(DVector<f64>, usize), QpError> {
    let n = problem.n();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for &j in enforced {
        let a = problem.a.row(j);
        let mut r: Vec<f64> = a.iter().copied().collect();
        r.push(-1.0);
        rows.push((r, problem.b[j]));
        if problem.kinds[j] == RowKind::Equality {
            let mut r: Vec<f64> = a.iter().map(|v| -v).collect();
            r.push(-1.0);
            rows.push((r, -problem.b[j]));
        }
    }
    let mut t_row = vec![0.0; n + 1];
    t_row[n] = -1.0;
    rows.push((t_row, 0.0));

    let a = DMatrix::from_fn(rows.len(), n + 1, |i, k| rows[i].0[k]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let kinds = vec![RowKind::Inequality; rows.len()];
    let mut c = DVector::zeros(n + 1);
    c[n] = 1.0;
    let h = DVector::zeros(n + 1);
    let mut y = DVector::zeros(n + 1);
    y[n] = t0;

    let runner = Runner {
        a: &a,
        b: &b,
        kinds: &kinds,
        c: &c,
        h: &h,
        opts,
    };
    match runner.run(y, Vec::new(), false, Some((n, feas * 0.1)))? {
        RunResult::Done { x, iterations, .. } => Ok((x.rows(0, n).into_owned(), iterations)),
        RunResult::Unbounded => unreachable!("phase one objective is bounded below by t ≥ 0"),
    }
}

enum RunResult {
    Done {
        x: DVector<f64>,
        working: Vec<usize>,
        multipliers: DVector<f64>,
        iterations: usize,
    },
    Unbounded,
}

struct Runner<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    kinds: &'a [RowKind],
    c: &'a DVector<f64>,
    h: &'a DVector<f64>,
    opts: &'a Options,
}

impl Runner<'_> {
    /// Active-set iterations from a feasible `x` with `working` ⊆ active rows.
    /// With `vertex` set, zero-cost null-space moves are taken until the
    /// working set is a basis. `stop` ends the run once `x[i] ≤ value`.
    fn run(
        &self,
        mut x: DVector<f64>,
        mut working: Vec<usize>,
        vertex: bool,
        stop: Option<(usize, f64)>,
    ) -> Result<RunResult, QpError> {
        let n = x.len();
        let mut history: VecDeque<String> = VecDeque::new();
        let mut iterations = 0;
        let linear = self.h.iter().all(|&v| v == 0.0);
        loop {
            if let Some((i, value)) = stop {
                if x[i] <= value {
                    return Ok(RunResult::Done {
                        x,
                        working,
                        multipliers: DVector::zeros(0),
                        iterations,
                    });
                }
            }
            iterations += 1;
            if iterations > self.opts.max_iter {
                return Err(QpError::IterationLimit {
                    iterations,
                    trace: history.into_iter().collect(),
                });
            }

            let g = self.h.component_mul(&x) + self.c;
            let gscale = g.amax().max(1.0);
            let k = working.len();
            let (q, r) = factor(self.a, &working, n);
            let z = q.columns(k, n - k).into_owned();
            let zg = z.transpose() * &g;

            let (p, ray) = if n == k {
                (DVector::zeros(n), false)
            } else if linear {
                if zg.amax() > self.opts.opt_tol * gscale {
                    (-(&z * &zg), true)
                } else {
                    (DVector::zeros(n), false)
                }
            } else {
                self.quadratic_direction(&z, &zg, gscale)
            };

            let xscale = x.amax().max(1.0);
            if p.amax() > 1e-12 * xscale {
                let limit = if ray { f64::INFINITY } else { 1.0 };
                let (alpha, block) = self.ratio_test(&x, &p, &working, limit);
                if block.is_none() && ray {
                    return Ok(RunResult::Unbounded);
                }
                x += alpha * &p;
                if let Some(j) = block {
                    working.push(j);
                }
                note(&mut history, format!("step {alpha:.3e} add {block:?}"));
                continue;
            }

            if vertex && k < n {
                // zero-cost move along the null space to reach a vertex
                let d = z.column(0).into_owned();
                let (a_pos, b_pos) = self.ratio_test(&x, &d, &working, f64::INFINITY);
                let (a_neg, b_neg) = self.ratio_test(&x, &(-&d), &working, f64::INFINITY);
                let (alpha, block, dir) = match (b_pos, b_neg) {
                    (Some(jp), Some(jn)) if jn < jp => (a_neg, Some(jn), -1.0),
                    (Some(jp), _) => (a_pos, Some(jp), 1.0),
                    (None, Some(jn)) => (a_neg, Some(jn), -1.0),
                    (None, None) => return Ok(RunResult::Unbounded),
                };
                x += (dir * alpha) * &d;
                working.extend(block);
                note(
                    &mut history,
                    format!("vertex move {alpha:.3e} add {block:?}"),
                );
                continue;
            }

            // stationary on the working set: A_Wᵀλ = −g
            let r11 = r.view((0, 0), (k, k));
            let rhs = -(q.columns(0, k).transpose() * &g);
            let lambda = r11
                .solve_upper_triangular(&rhs)
                .unwrap_or_else(|| DVector::zeros(k));
            let tol = self.opts.opt_tol * gscale;
            let leaving = working
                .iter()
                .enumerate()
                .filter(|&(pos, &j)| self.kinds[j] == RowKind::Inequality && lambda[pos] < -tol)
                .min_by_key(|&(_, &j)| j)
                .map(|(pos, _)| pos);
            match leaving {
                Some(pos) => {
                    let j = working.remove(pos);
                    note(&mut history, format!("drop {j} (λ = {:.3e})", lambda[pos]));
                    trace!("active set drops row {j}");
                }
                None => {
                    return Ok(RunResult::Done {
                        x,
                        working,
                        multipliers: lambda,
                        iterations,
                    });
                }
            }
        }
    }

    fn quadratic_direction(
        &self,
        z: &DMatrix<f64>,
        zg: &DVector<f64>,
        gscale: f64,
    ) -> (DVector<f64>, bool) {
        let n = z.nrows();
        let hz = z.transpose() * DMatrix::from_diagonal(self.h) * z;
        let eig = SymmetricEigen::new(hz);
        let mu_max = eig.eigenvalues.amax();
        let cut = 1e-10 * mu_max.max(1e-300);
        let y = eig.eigenvectors.transpose() * zg;
        let mut null_part = DVector::zeros(y.len());
        let mut newton = DVector::zeros(y.len());
        for i in 0..y.len() {
            if eig.eigenvalues[i] <= cut {
                null_part[i] = y[i];
            } else {
                newton[i] = y[i] / eig.eigenvalues[i];
            }
        }
        if null_part.amax() > self.opts.opt_tol * gscale {
            let p = -(z * (&eig.eigenvectors * null_part));
            return (p, true);
        }
        if newton.is_empty() {
            return (DVector::zeros(n), false);
        }
        (-(z * (&eig.eigenvectors * newton)), false)
    }

    /// Largest step ≤ `limit` along `p`; ties go to the lowest row index.
    fn ratio_test(
        &self,
        x: &DVector<f64>,
        p: &DVector<f64>,
        working: &[usize],
        limit: f64,
    ) -> (f64, Option<usize>) {
        let pnorm = p.norm();
        let mut best = (limit, None);
        for j in 0..self.a.nrows() {
            if self.kinds[j] != RowKind::Inequality || working.contains(&j) {
                continue;
            }
            let row = self.a.row(j);
            let ap = row.dot(&p.transpose());
            if ap <= 1e-11 * row.norm() * pnorm {
                continue;
            }
            let slack = (self.b[j] - row.dot(&x.transpose())).max(0.0);
            let alpha = slack / ap;
            if alpha < best.0 - 1e-12 * best.0.abs().min(1e12) {
                best = (alpha, Some(j));
            }
        }
        if best.1.is_none() && limit.is_infinite() {
            return (0.0, None);
        }
        best
    }
}

/// QR of `[A_Wᵀ | I]`: the first `|W|` columns of `q` span the working rows,
/// the rest their null space.
fn factor(a: &DMatrix<f64>, working: &[usize], n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = working.len();
    let mut m = DMatrix::zeros(n, k + n);
    for (col, &j) in working.iter().enumerate() {
        m.set_column(col, &a.row(j).transpose());
    }
    for i in 0..n {
        m[(i, k + i)] = 1.0;
    }
    let qr = m.qr();
    (qr.q(), qr.r())
}

fn independent_with(a: &DMatrix<f64>, working: &[usize], j: usize) -> bool {
    let n = a.ncols();
    let mut rows: Vec<usize> = working.to_vec();
    rows.push(j);
    let (_, r) = factor(a, &rows, n);
    let k = rows.len();
    if k > n {
        return false;
    }
    let d = r[(k - 1, k - 1)].abs();
    d > 1e-9 * a.row(j).norm()
}

/// Moves `x` minimally so the listed rows hold with equality.
fn project_onto(a: &DMatrix<f64>, b: &DVector<f64>, rows: &[usize], x: &mut DVector<f64>) {
    if rows.is_empty() {
        return;
    }
    let aw = DMatrix::from_fn(rows.len(), a.ncols(), |i, k| a[(rows[i], k)]);
    let resid = DVector::from_iterator(rows.len(), rows.iter().map(|&j| b[j])) - &aw * &*x;
    let gram = &aw * aw.transpose();
    if let Some(y) = gram.lu().solve(&resid) {
        *x += aw.transpose() * y;
    }
}

fn note(history: &mut VecDeque<String>, entry: String) {
    if history.len() == 16 {
        history.pop_front();
    }
    history.push_back(entry);
}

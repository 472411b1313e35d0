//! Bounded-variable primal simplex.
//!
//! Programs have the form `min cᵀy  s.t.  M y = b,  l ≤ y ≤ u` where bounds
//! may be infinite. Nonbasic variables sit at a finite bound (or at zero when
//! free), so box constraints never become extra rows. Phase I adds one
//! artificial column per row.

use crate::error::{Error, Result};
use crate::numerics::{Lu, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T> {
    objective: Vec<T>,
    constraints: Matrix<T>,
    rhs: Vec<T>,
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(
        objective: Vec<T>,
        constraints: Matrix<T>,
        rhs: Vec<T>,
        lower: Vec<T>,
        upper: Vec<T>,
    ) -> Result<Self> {
        let m = constraints.cols();
        if objective.len() != m || lower.len() != m || upper.len() != m {
            return Err(Error::Dimension(format!(
                "objective/bounds lengths {}/{}/{} for {m} variables",
                objective.len(),
                lower.len(),
                upper.len()
            )));
        }
        if rhs.len() != constraints.rows() {
            return Err(Error::Dimension(format!(
                "rhs of length {} for {} rows",
                rhs.len(),
                constraints.rows()
            )));
        }
        if let Some(j) = (0..m).find(|&j| {
            !(lower[j] <= upper[j]) || lower[j] == T::infinity() || upper[j] == T::neg_infinity()
        }) {
            return Err(Error::Argument(format!(
                "bounds of variable {j} are inconsistent: [{}, {}]",
                lower[j], upper[j]
            )));
        }
        Ok(Self {
            objective,
            constraints,
            rhs,
            lower,
            upper,
        })
    }

    /// `min cᵀy  s.t.  M y = b,  0 ≤ y ≤ 1`.
    pub fn unit_box(objective: Vec<T>, constraints: Matrix<T>, rhs: Vec<T>) -> Result<Self> {
        let m = constraints.cols();
        Self::new(
            objective,
            constraints,
            rhs,
            vec![T::zero(); m],
            vec![T::one(); m],
        )
    }

    pub fn num_vars(&self) -> usize {
        self.constraints.cols()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.rows()
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn constraints(&self) -> &Matrix<T> {
        &self.constraints
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn set_objective(&mut self, c: Vec<T>) -> Result<()> {
        if c.len() != self.num_vars() {
            return Err(Error::Dimension("objective length".into()));
        }
        self.objective = c;
        Ok(())
    }

    pub fn set_rhs(&mut self, b: Vec<T>) -> Result<()> {
        if b.len() != self.num_rows() {
            return Err(Error::Dimension("rhs length".into()));
        }
        self.rhs = b;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub values: Vec<T>,
    pub objective: T,
    pub var_status: Vec<VarStatus>,
    /// Phase II reduced costs of the structural variables (zero for basic ones).
    pub reduced_costs: Vec<T>,
    pub iterations: usize,
}

impl<T: Scalar> LpSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Indices of structural variables that are basic.
    pub fn basic_vars(&self) -> Vec<usize> {
        self.var_status
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == VarStatus::Basic)
            .map(|(j, _)| j)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions<T> {
    pub feas_tol: T,
    pub bound_tol: T,
    pub opt_tol: T,
    pub pivot_tol: T,
    /// Pivots per phase before switching from Dantzig to Bland's rule.
    /// `None` means `10 * (vars + rows)`.
    pub bland_after: Option<usize>,
    /// Hard limit on pivots per solve. `None` means `50 * (vars + rows) + 1000`.
    pub max_iterations: Option<usize>,
    pub refactor_every: usize,
    pub verbose: bool,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            feas_tol: T::feas_tol(),
            bound_tol: T::bound_tol(),
            opt_tol: T::opt_tol(),
            pivot_tol: T::pivot_tol(),
            bland_after: None,
            max_iterations: None,
            refactor_every: 64,
            verbose: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PivotRule {
    Dantzig,
    Bland,
}

/// Reusable simplex solver. One instance per thread; not shared mid-solve.
#[derive(Clone, Debug)]
pub struct Simplex<T> {
    options: SolverOptions<T>,
}

impl<T: Scalar> Default for Simplex<T> {
    fn default() -> Self {
        Self::new(SolverOptions::default())
    }
}

struct Work<'a, T> {
    lp: &'a LinearProgram<T>,
    m: usize,
    r: usize,
    // B⁻¹ [M | D], r x (m + r)
    t: Matrix<T>,
    x: Vec<T>,
    lo: Vec<T>,
    up: Vec<T>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    art_sign: Vec<T>,
    since_refactor: usize,
    iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Simplex<T> {
    pub fn new(options: SolverOptions<T>) -> Self {
        Self { options }
    }

    pub fn options(&self) -> &SolverOptions<T> {
        &self.options
    }

    pub fn solve(&self, lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
        self.solve_with_hint(lp, None)
    }

    /// Solves `lp`, trying the basis described by `hint` first.
    ///
    /// The hint holds one status per structural variable, typically the
    /// `var_status` of a previous solve on a related program. When it names
    /// a nonsingular primal-feasible basis Phase I is skipped; otherwise the
    /// solve starts cold. The result is deterministic in `(lp, hint)`.
    pub fn solve_with_hint(
        &self,
        lp: &LinearProgram<T>,
        hint: Option<&[VarStatus]>,
    ) -> Result<LpSolution<T>> {
        let max_iter = self
            .options
            .max_iterations
            .unwrap_or(50 * (lp.num_vars() + lp.num_rows()) + 1000);
        if let Some(h) = hint {
            if let Some(mut w) = self.warm_start(lp, h)? {
                return self.finish_phase_two(&mut w, max_iter);
            }
        }
        let mut w = self.cold_start(lp);
        let phase_one_cost: Vec<T> = (0..w.m + w.r)
            .map(|j| if j >= w.m { T::one() } else { T::zero() })
            .collect();
        match self.run_phase(&mut w, &phase_one_cost, max_iter)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => {
                return Err(Error::Numerical("phase I reported unbounded".into()));
            }
        }
        self.refactor(&mut w)?;
        let infeasibility = (w.m..w.m + w.r).fold(T::zero(), |acc, j| acc.max(w.x[j].abs()));
        if infeasibility > self.options.feas_tol {
            return Ok(self.report(&w, LpStatus::Infeasible, &[]));
        }
        self.drive_out_artificials(&mut w)?;
        self.finish_phase_two(&mut w, max_iter)
    }

    /// Phase I only: does `M y = b, l ≤ y ≤ u` have a solution?
    pub fn feasibility(&self, lp: &LinearProgram<T>) -> Result<bool> {
        let max_iter = self
            .options
            .max_iterations
            .unwrap_or(50 * (lp.num_vars() + lp.num_rows()) + 1000);
        let mut w = self.cold_start(lp);
        let cost: Vec<T> = (0..w.m + w.r)
            .map(|j| if j >= w.m { T::one() } else { T::zero() })
            .collect();
        if let PhaseEnd::Unbounded = self.run_phase(&mut w, &cost, max_iter)? {
            return Err(Error::Numerical("phase I reported unbounded".into()));
        }
        self.refactor(&mut w)?;
        let infeasibility = (w.m..w.m + w.r).fold(T::zero(), |acc, j| acc.max(w.x[j].abs()));
        Ok(infeasibility <= self.options.feas_tol)
    }

    fn finish_phase_two(&self, w: &mut Work<'_, T>, max_iter: usize) -> Result<LpSolution<T>> {
        let cost: Vec<T> = (0..w.m + w.r)
            .map(|j| {
                if j < w.m {
                    w.lp.objective[j]
                } else {
                    T::zero()
                }
            })
            .collect();
        match self.run_phase(w, &cost, max_iter)? {
            PhaseEnd::Optimal => {
                self.refactor(w)?;
                Ok(self.report(w, LpStatus::Optimal, &cost))
            }
            PhaseEnd::Unbounded => Ok(self.report(w, LpStatus::Unbounded, &[])),
        }
    }

    fn cold_start<'a>(&self, lp: &'a LinearProgram<T>) -> Work<'a, T> {
        let (r, m) = (lp.num_rows(), lp.num_vars());
        let ncols = m + r;
        let mut x = vec![T::zero(); ncols];
        let mut status = vec![VarStatus::Basic; ncols];
        for j in 0..m {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            if l.is_finite() {
                x[j] = l;
                status[j] = VarStatus::AtLower;
            } else if u.is_finite() {
                x[j] = u;
                status[j] = VarStatus::AtUpper;
            } else {
                status[j] = VarStatus::Free;
            }
        }
        let mut residual = lp.rhs.clone();
        for j in 0..m {
            if x[j] != T::zero() {
                for (res, &a) in residual.iter_mut().zip(lp.constraints.col(j)) {
                    *res -= a * x[j];
                }
            }
        }
        let art_sign: Vec<T> = residual
            .iter()
            .map(|&v| if v < T::zero() { -T::one() } else { T::one() })
            .collect();
        let mut t = Matrix::zeros(r, ncols);
        for j in 0..m {
            for i in 0..r {
                t[(i, j)] = art_sign[i] * lp.constraints[(i, j)];
            }
        }
        for i in 0..r {
            t[(i, m + i)] = T::one();
            x[m + i] = residual[i].abs();
        }
        let mut lo = lp.lower.clone();
        let mut up = lp.upper.clone();
        lo.extend(std::iter::repeat_n(T::zero(), r));
        up.extend(std::iter::repeat_n(T::infinity(), r));
        Work {
            lp,
            m,
            r,
            t,
            x,
            lo,
            up,
            status,
            head: (m..m + r).collect(),
            art_sign,
            since_refactor: 0,
            iterations: 0,
        }
    }

    fn warm_start<'a>(
        &self,
        lp: &'a LinearProgram<T>,
        hint: &[VarStatus],
    ) -> Result<Option<Work<'a, T>>> {
        let (r, m) = (lp.num_rows(), lp.num_vars());
        if hint.len() != m {
            return Ok(None);
        }
        let head: Vec<usize> = (0..m).filter(|&j| hint[j] == VarStatus::Basic).collect();
        if head.len() != r {
            return Ok(None);
        }
        let ncols = m + r;
        let mut x = vec![T::zero(); ncols];
        let mut status = vec![VarStatus::AtLower; ncols];
        for j in 0..m {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            status[j] = hint[j];
            match hint[j] {
                VarStatus::Basic => {}
                VarStatus::AtLower if l.is_finite() => x[j] = l,
                VarStatus::AtUpper if u.is_finite() => x[j] = u,
                VarStatus::Free if !l.is_finite() && !u.is_finite() => {}
                _ => return Ok(None),
            }
        }
        let mut lo = lp.lower.clone();
        let mut up = lp.upper.clone();
        lo.extend(std::iter::repeat_n(T::zero(), r));
        up.extend(std::iter::repeat_n(T::zero(), r));
        let mut w = Work {
            lp,
            m,
            r,
            t: Matrix::zeros(r, ncols),
            x,
            lo,
            up,
            status,
            head,
            art_sign: vec![T::one(); r],
            since_refactor: 0,
            iterations: 0,
        };
        if self.refactor(&mut w).is_err() {
            return Ok(None);
        }
        let tol = self.options.feas_tol;
        let feasible = w
            .head
            .iter()
            .all(|&j| w.x[j] >= w.lo[j] - tol && w.x[j] <= w.up[j] + tol);
        if !feasible {
            return Ok(None);
        }
        for &j in &w.head {
            w.x[j] = w.x[j].max(w.lo[j]).min(w.up[j]);
        }
        Ok(Some(w))
    }

    fn full_column(w: &Work<'_, T>, j: usize) -> Vec<T> {
        if j < w.m {
            w.lp.constraints.col(j).to_vec()
        } else {
            let mut e = vec![T::zero(); w.r];
            e[j - w.m] = w.art_sign[j - w.m];
            e
        }
    }

    /// Recomputes `B⁻¹ [M | D]` and the basic values from scratch.
    fn refactor(&self, w: &mut Work<'_, T>) -> Result<()> {
        let (r, m) = (w.r, w.m);
        let mut basis = Matrix::zeros(r, r);
        for (p, &j) in w.head.iter().enumerate() {
            basis.col_mut(p).copy_from_slice(&Self::full_column(w, j));
        }
        let lu = Lu::new(&basis)?;
        if lu.is_singular() {
            return Err(Error::Numerical("singular simplex basis".into()));
        }
        for j in 0..m + r {
            let col = Self::full_column(w, j);
            let sol = lu.solve(&col)?;
            w.t.col_mut(j).copy_from_slice(&sol);
        }
        let mut rhs = w.lp.rhs.clone();
        for j in 0..m + r {
            if w.status[j] != VarStatus::Basic && w.x[j] != T::zero() {
                let col = Self::full_column(w, j);
                for (v, a) in rhs.iter_mut().zip(col) {
                    *v -= a * w.x[j];
                }
            }
        }
        let xb = lu.solve(&rhs)?;
        for (p, &j) in w.head.iter().enumerate() {
            w.x[j] = xb[p];
        }
        w.since_refactor = 0;
        Ok(())
    }

    fn reduced_costs(w: &Work<'_, T>, cost: &[T]) -> Vec<T> {
        let cb: Vec<T> = w.head.iter().map(|&j| cost[j]).collect();
        (0..w.m + w.r)
            .map(|j| {
                if w.status[j] == VarStatus::Basic {
                    T::zero()
                } else {
                    let col = w.t.col(j);
                    cost[j] - cb.iter().zip(col).map(|(&c, &a)| c * a).sum::<T>()
                }
            })
            .collect()
    }

    fn run_phase(&self, w: &mut Work<'_, T>, cost: &[T], max_iter: usize) -> Result<PhaseEnd> {
        let bland_after = self.options.bland_after.unwrap_or(10 * (w.m + w.r));
        let mut phase_iters = 0usize;
        loop {
            if w.iterations >= max_iter {
                return Err(Error::CyclingGuard(max_iter));
            }
            if w.since_refactor >= self.options.refactor_every {
                self.refactor(w)?;
            }
            let rule = if phase_iters >= bland_after {
                PivotRule::Bland
            } else {
                PivotRule::Dantzig
            };
            let d = Self::reduced_costs(w, cost);
            let Some((enter, dir)) = self.choose_entering(w, &d, rule) else {
                return Ok(PhaseEnd::Optimal);
            };
            match self.ratio_test(w, enter, dir, rule) {
                None => return Ok(PhaseEnd::Unbounded),
                Some(step) => self.apply_step(w, enter, dir, step),
            }
            if self.options.verbose {
                eprintln!(
                    "simplex it={} rule={rule:?} enter={enter} dir={} obj={}",
                    w.iterations,
                    dir,
                    (0..w.m + w.r).map(|j| cost[j] * w.x[j]).sum::<T>()
                );
            }
            w.iterations += 1;
            phase_iters += 1;
        }
    }

    /// Entering variable and its direction (+1 increase, -1 decrease).
    fn choose_entering(&self, w: &Work<'_, T>, d: &[T], rule: PivotRule) -> Option<(usize, T)> {
        let tol = self.options.opt_tol;
        let mut best: Option<(usize, T, T)> = None;
        for j in 0..w.m + w.r {
            if w.lo[j] == w.up[j] {
                continue;
            }
            let dir = match w.status[j] {
                VarStatus::Basic => continue,
                VarStatus::AtLower if d[j] < -tol => T::one(),
                VarStatus::AtUpper if d[j] > tol => -T::one(),
                VarStatus::Free if d[j].abs() > tol => -d[j].signum(),
                _ => continue,
            };
            let score = d[j].abs();
            match rule {
                PivotRule::Bland => return Some((j, dir)),
                PivotRule::Dantzig => {
                    if best.is_none_or(|(_, _, s)| score > s) {
                        best = Some((j, dir, score));
                    }
                }
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ratio_test(
        &self,
        w: &Work<'_, T>,
        enter: usize,
        dir: T,
        rule: PivotRule,
    ) -> Option<Step<T>> {
        let col = w.t.col(enter);
        let ptol = self.options.pivot_tol;
        let mut best: Option<(usize, T, T)> = None; // (row, theta, |alpha|)
        for (p, &alpha) in col.iter().enumerate() {
            if alpha.abs() <= ptol {
                continue;
            }
            let j = w.head[p];
            // basic variable moves by theta * delta
            let delta = -dir * alpha;
            let limit = if delta < T::zero() {
                if !w.lo[j].is_finite() {
                    continue;
                }
                ((w.x[j] - w.lo[j]) / -delta).max(T::zero())
            } else {
                if !w.up[j].is_finite() {
                    continue;
                }
                ((w.up[j] - w.x[j]) / delta).max(T::zero())
            };
            let better = match best {
                None => true,
                Some((bp, bt, ba)) => {
                    let tie = (limit - bt).abs() <= self.options.bound_tol * (T::one() + bt.abs());
                    if !tie {
                        limit < bt
                    } else {
                        match rule {
                            PivotRule::Bland => j < w.head[bp],
                            PivotRule::Dantzig => {
                                alpha.abs() > ba || (alpha.abs() == ba && j < w.head[bp])
                            }
                        }
                    }
                }
            };
            if better {
                best = Some((p, limit, alpha.abs()));
            }
        }
        let flip = w.up[enter] - w.lo[enter];
        match best {
            Some((_, theta, _)) if flip.is_finite() && flip <= theta => Some(Step::Flip(flip)),
            Some((p, theta, _)) => Some(Step::Pivot { row: p, theta }),
            None if flip.is_finite() => Some(Step::Flip(flip)),
            None => None,
        }
    }

    fn apply_step(&self, w: &mut Work<'_, T>, enter: usize, dir: T, step: Step<T>) {
        let theta = match step {
            Step::Flip(t) => t,
            Step::Pivot { theta, .. } => theta,
        };
        let col: Vec<T> = w.t.col(enter).to_vec();
        for (p, &alpha) in col.iter().enumerate() {
            let j = w.head[p];
            w.x[j] -= theta * dir * alpha;
        }
        w.x[enter] += theta * dir;
        match step {
            Step::Flip(_) => {
                if dir > T::zero() {
                    w.status[enter] = VarStatus::AtUpper;
                    w.x[enter] = w.up[enter];
                } else {
                    w.status[enter] = VarStatus::AtLower;
                    w.x[enter] = w.lo[enter];
                }
            }
            Step::Pivot { row, .. } => {
                let leave = w.head[row];
                let delta = -dir * col[row];
                if delta < T::zero() {
                    w.status[leave] = VarStatus::AtLower;
                    w.x[leave] = w.lo[leave];
                } else {
                    w.status[leave] = VarStatus::AtUpper;
                    w.x[leave] = w.up[leave];
                }
                w.status[enter] = VarStatus::Basic;
                w.head[row] = enter;
                Self::pivot(w, row, &col);
            }
        }
    }

    /// Row operations making `col` (the entering column) the unit vector `e_row`.
    fn pivot(w: &mut Work<'_, T>, row: usize, col: &[T]) {
        let piv = col[row];
        for j in 0..w.m + w.r {
            let c = w.t.col_mut(j);
            let f = c[row] / piv;
            if f == T::zero() {
                continue;
            }
            for (i, v) in c.iter_mut().enumerate() {
                if i != row {
                    *v -= col[i] * f;
                }
            }
            c[row] = f;
        }
        w.since_refactor += 1;
    }

    /// After Phase I: fix artificials at zero and pivot basic ones out where possible.
    fn drive_out_artificials(&self, w: &mut Work<'_, T>) -> Result<()> {
        for j in w.m..w.m + w.r {
            w.up[j] = T::zero();
            if w.status[j] != VarStatus::Basic {
                w.status[j] = VarStatus::AtLower;
                w.x[j] = T::zero();
            }
        }
        let mut changed = false;
        for p in 0..w.r {
            if w.head[p] < w.m {
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for j in 0..w.m {
                if w.status[j] == VarStatus::Basic || w.lo[j] == w.up[j] {
                    continue;
                }
                let a = w.t[(p, j)].abs();
                if a > self.options.pivot_tol && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                let leave = w.head[p];
                let col: Vec<T> = w.t.col(j).to_vec();
                w.status[leave] = VarStatus::AtLower;
                w.x[leave] = T::zero();
                w.status[j] = VarStatus::Basic;
                w.head[p] = j;
                Self::pivot(w, p, &col);
                changed = true;
            }
        }
        if changed {
            self.refactor(w)?;
        }
        Ok(())
    }

    fn report(&self, w: &Work<'_, T>, status: LpStatus, cost: &[T]) -> LpSolution<T> {
        let m = w.m;
        let tol = self.options.bound_tol;
        let mut values: Vec<T> = w.x[..m].to_vec();
        for (j, v) in values.iter_mut().enumerate() {
            // snap roundoff back into the box
            if w.lo[j].is_finite() && *v < w.lo[j] && *v > w.lo[j] - self.options.feas_tol {
                *v = w.lo[j];
            }
            if w.up[j].is_finite() && *v > w.up[j] && *v < w.up[j] + self.options.feas_tol {
                *v = w.up[j];
            }
            if w.lo[j].is_finite() && (*v - w.lo[j]).abs() <= tol {
                *v = w.lo[j];
            }
            if w.up[j].is_finite() && (*v - w.up[j]).abs() <= tol {
                *v = w.up[j];
            }
        }
        let objective = values
            .iter()
            .zip(&w.lp.objective)
            .map(|(&v, &c)| v * c)
            .sum();
        let reduced_costs = if cost.is_empty() {
            vec![T::zero(); m]
        } else {
            Self::reduced_costs(w, cost)[..m].to_vec()
        };
        LpSolution {
            status,
            values,
            objective,
            var_status: w.status[..m].to_vec(),
            reduced_costs,
            iterations: w.iterations,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Step<T> {
    Flip(T),
    Pivot { row: usize, theta: T },
}

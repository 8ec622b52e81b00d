//! Bounded-variable primal simplex with an explicit dense basis inverse.
//!
//! Solves `max cᵀx  s.t.  A x = b,  l ≤ x ≤ u` starting from a feasible
//! point `x0` (which also defines `b = A x0`). Bounds may be infinite, so
//! free variables are allowed. Nonbasic variables may sit strictly between
//! their bounds; this lets the method start from any feasible point, for
//! example an approximate dual from a first-order method.
//!
//! The initial basis is picked greedily from a caller-supplied priority
//! order. Rows that no structural column can cover get a fixed artificial
//! unit column with bounds `[0, 0]`, which handles redundant equations.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

/// Column access to the constraint matrix `A` (`nrows x ncols`).
pub(crate) trait LpMatrix {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn column(&self, j: usize, out: &mut DVector<f64>);
    /// `out = Aᵀ y`
    fn tr_mul(&self, y: &DVector<f64>, out: &mut DVector<f64>);
    /// `out = A x`
    fn mul(&self, x: &DVector<f64>, out: &mut DVector<f64>);
}

impl LpMatrix for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn column(&self, j: usize, out: &mut DVector<f64>) {
        out.copy_from(&self.column(j));
    }

    fn tr_mul(&self, y: &DVector<f64>, out: &mut DVector<f64>) {
        out.gemv_tr(1.0, self, y, 0.0);
    }

    fn mul(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        out.gemv(1.0, self, x, 0.0);
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct SimplexOptions {
    pub max_iters: usize,
    pub deadline: Option<Instant>,
    /// Reduced-cost tolerance relative to `max |c|`.
    pub opt_tol: f64,
    /// Bound slack used by the Harris ratio test.
    pub feas_tol: f64,
    pub pivot_tol: f64,
    /// Minimum number of pivots between refactorizations.
    pub refactor_every: usize,
    /// Start with one joint move of all nonbasic variables toward the
    /// bound their reduced cost favors.
    pub long_step: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iters: 1_000_000,
            deadline: None,
            opt_tol: 1e-11,
            feas_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_every: 100,
            long_step: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SimplexStatus {
    Optimal,
    IterLimit,
    TimeLimit,
    Unbounded,
    Singular,
}

#[derive(Clone, Debug)]
pub(crate) struct SimplexResult {
    pub status: SimplexStatus,
    /// Structural variables only.
    pub x: Vec<f64>,
    /// Row multipliers `y` with `Bᵀ y = c_B`.
    pub y: DVector<f64>,
    pub pivots: usize,
    pub flips: usize,
}

impl SimplexResult {
    pub fn iterations(&self) -> usize {
        self.pivots + self.flips
    }
}

struct State<'a, M: LpMatrix> {
    a: &'a M,
    c: &'a [f64],
    lower: Vec<f64>,
    upper: Vec<f64>,
    b: DVector<f64>,
    /// Structural columns first, then one artificial per row.
    x: Vec<f64>,
    basic: Vec<usize>,
    in_basis: Vec<bool>,
    binv: DMatrix<f64>,
    col: DVector<f64>,
}

impl<'a, M: LpMatrix> State<'a, M> {
    fn ncols(&self) -> usize {
        self.a.ncols()
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.ncols() {
            self.c[j]
        } else {
            0.0
        }
    }

    fn load_column(&mut self, j: usize) {
        if j < self.ncols() {
            self.a.column(j, &mut self.col);
        } else {
            let k = j - self.ncols();
            self.col.fill(0.0);
            self.col[k] = 1.0;
        }
    }

    fn basis_matrix(&mut self) -> DMatrix<f64> {
        let r = self.a.nrows();
        let mut bm = DMatrix::zeros(r, r);
        for (i, &j) in self.basic.clone().iter().enumerate() {
            self.load_column(j);
            bm.set_column(i, &self.col);
        }
        bm
    }

    /// Recomputes `B⁻¹` and the basic values from the nonbasic ones.
    fn refactor(&mut self) -> bool {
        let bm = self.basis_matrix();
        let Some(inv) = bm.try_inverse() else {
            return false;
        };
        self.binv = inv;
        let nc = self.ncols();
        let mut xn = DVector::zeros(nc);
        for j in 0..nc {
            if !self.in_basis[j] {
                xn[j] = self.x[j];
            }
        }
        let mut ax = DVector::zeros(self.a.nrows());
        self.a.mul(&xn, &mut ax);
        let rhs = &self.b - ax;
        let xb = &self.binv * rhs;
        for (i, &j) in self.basic.iter().enumerate() {
            self.x[j] = xb[i];
        }
        true
    }

    fn duals(&self) -> DVector<f64> {
        let cb = DVector::from_iterator(self.basic.len(), self.basic.iter().map(|&j| self.cost(j)));
        self.binv.tr_mul(&cb)
    }
}

/// Greedy choice of `R` linearly independent columns, visiting `priority`
/// first; uncovered directions are filled with artificial unit columns
/// (indices `ncols + i`).
///
/// Also returns the free columns rejected while every chosen column was
/// free. Free basic variables never leave the basis, so such a column stays
/// in the span of the basis and its reduced cost is identically zero up to
/// rounding; letting it enter would only chase that rounding.
fn initial_basis<M: LpMatrix>(a: &M, priority: &[usize], free: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let r = a.nrows();
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(r);
    let mut chosen = Vec::with_capacity(r);
    let mut dead = Vec::new();
    let mut all_free = true;
    let mut col = DVector::zeros(r);

    let try_add = |v: &mut DVector<f64>, q: &mut Vec<DVector<f64>>| -> bool {
        let norm0 = v.norm();
        if norm0 == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for qk in q.iter() {
                let d = qk.dot(v);
                v.axpy(-d, qk, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 * norm0 {
            q.push(&*v / norm);
            true
        } else {
            false
        }
    };

    for &j in priority {
        if chosen.len() == r {
            break;
        }
        a.column(j, &mut col);
        if try_add(&mut col, &mut q) {
            chosen.push(j);
            all_free &= free[j];
        } else if all_free && free[j] {
            dead.push(j);
        }
    }
    for i in 0..r {
        if chosen.len() == r {
            break;
        }
        col.fill(0.0);
        col[i] = 1.0;
        if try_add(&mut col, &mut q) {
            chosen.push(a.ncols() + i);
        }
    }
    (chosen, dead)
}

/// Moves every nonbasic variable toward the bound its reduced cost favors,
/// as far as the basic variables stay within their bounds. All moves share
/// one step length, so the objective cannot decrease.
fn long_step<M: LpMatrix>(st: &mut State<M>, eligible: &[bool]) {
    let nc = st.ncols();
    let y = st.duals();
    let mut d = DVector::zeros(nc);
    st.a.tr_mul(&y, &mut d);
    let mut dx = DVector::zeros(nc);
    for j in 0..nc {
        if st.in_basis[j] || !eligible[j] {
            continue;
        }
        let dj = st.c[j] - d[j];
        let target = if dj > 0.0 {
            st.upper[j]
        } else if dj < 0.0 {
            st.lower[j]
        } else {
            continue;
        };
        if target.is_finite() {
            dx[j] = target - st.x[j];
        }
    }
    let mut adx = DVector::zeros(st.a.nrows());
    st.a.mul(&dx, &mut adx);
    let dxb = &st.binv * adx;
    let mut step = 1.0_f64;
    for (i, &j) in st.basic.iter().enumerate() {
        let rate = -dxb[i];
        if rate < 0.0 {
            step = step.min((st.x[j] - st.lower[j]).max(0.0) / -rate);
        } else if rate > 0.0 {
            step = step.min((st.upper[j] - st.x[j]).max(0.0) / rate);
        }
    }
    if step <= 0.0 {
        return;
    }
    for j in 0..nc {
        if dx[j] != 0.0 {
            st.x[j] = if step == 1.0 { st.x[j] + dx[j] } else { st.x[j] + step * dx[j] };
        }
    }
    for (i, &j) in st.basic.iter().enumerate() {
        st.x[j] -= step * dxb[i];
    }
}

/// Maximizes `cᵀx` over `{x : A x = A x0, lower ≤ x ≤ upper}`.
///
/// `x0` is clamped into the bounds before use. `priority` lists columns in
/// the order they should be considered for the starting basis; columns not
/// listed are only considered after it is exhausted.
pub(crate) fn maximize<M: LpMatrix>(
    a: &M,
    c: &[f64],
    lower: &[f64],
    upper: &[f64],
    x0: &[f64],
    priority: &[usize],
    opts: &SimplexOptions,
) -> SimplexResult {
    let (nr, nc) = (a.nrows(), a.ncols());
    debug_assert_eq!(c.len(), nc);

    let mut lo = lower.to_vec();
    let mut up = upper.to_vec();
    lo.extend(std::iter::repeat_n(0.0, nr));
    up.extend(std::iter::repeat_n(0.0, nr));
    let mut x: Vec<f64> = x0
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&l, &u))| v.clamp(l, u))
        .collect();
    x.extend(std::iter::repeat_n(0.0, nr));

    let mut b = DVector::zeros(nr);
    a.mul(&DVector::from_column_slice(&x[..nc]), &mut b);

    let mut order: Vec<usize> = priority.to_vec();
    let mut listed = vec![false; nc];
    for &j in priority {
        listed[j] = true;
    }
    order.extend((0..nc).filter(|&j| !listed[j]));
    let free: Vec<bool> = (0..nc)
        .map(|j| lower[j] == f64::NEG_INFINITY && upper[j] == f64::INFINITY)
        .collect();
    let (basic, dead) = initial_basis(a, &order, &free);

    let mut in_basis = vec![false; nc + nr];
    for &j in &basic {
        in_basis[j] = true;
    }
    let mut eligible = vec![true; nc];
    for j in dead {
        eligible[j] = false;
    }
    let mut st = State {
        a,
        c,
        lower: lo,
        upper: up,
        b,
        x,
        basic,
        in_basis,
        binv: DMatrix::zeros(nr, nr),
        col: DVector::zeros(nr),
    };

    let fail = |st: &State<M>, status, pivots, flips| SimplexResult {
        status,
        x: st.x[..nc].to_vec(),
        y: DVector::zeros(nr),
        pivots,
        flips,
    };
    if !st.refactor() {
        return fail(&st, SimplexStatus::Singular, 0, 0);
    }
    if opts.long_step {
        long_step(&mut st, &eligible);
    }
    // Refactoring costs O(R³) against O(R²) per pivot.
    let refactor_every = opts.refactor_every.max(nr / 4);

    let cscale = c.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let dtol = opts.opt_tol * cscale;
    let mut pivots = 0usize;
    let mut flips = 0usize;
    let mut since_refactor = 0usize;
    let mut degenerate_run = 0usize;
    let mut bland = false;
    let mut d = DVector::zeros(nc);

    let status = loop {
        if pivots + flips >= opts.max_iters {
            break SimplexStatus::IterLimit;
        }
        if let Some(t) = opts.deadline {
            if (pivots + flips).is_multiple_of(16) && Instant::now() >= t {
                break SimplexStatus::TimeLimit;
            }
        }

        let y = st.duals();
        a.tr_mul(&y, &mut d);
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..nc {
            if st.in_basis[j] || !eligible[j] {
                continue;
            }
            let dj = c[j] - d[j];
            let movable = (dj > dtol && st.x[j] < st.upper[j]) || (dj < -dtol && st.x[j] > st.lower[j]);
            if !movable {
                continue;
            }
            if bland {
                entering = Some((j, dj));
                break;
            }
            if entering.is_none_or(|(_, best)| dj.abs() > best.abs()) {
                entering = Some((j, dj));
            }
        }
        let Some((q, dq)) = entering else {
            break SimplexStatus::Optimal;
        };
        let sigma = dq.signum();

        st.load_column(q);
        let w = &st.binv * &st.col;
        let wmax = w.amax();
        let ptol = opts.pivot_tol * wmax.max(1.0);

        // Harris pass 1: largest step allowed by relaxed bounds.
        let mut relaxed = f64::INFINITY;
        for (i, &j) in st.basic.iter().enumerate() {
            if w[i].abs() <= ptol {
                continue;
            }
            let rate = -sigma * w[i];
            let t = if rate < 0.0 {
                (st.x[j] - st.lower[j] + opts.feas_tol) / -rate
            } else {
                (st.upper[j] - st.x[j] + opts.feas_tol) / rate
            };
            relaxed = relaxed.min(t);
        }
        // Pass 2: among rows blocking within that step, take the largest pivot.
        let mut leave: Option<(usize, f64)> = None;
        if relaxed.is_finite() {
            let mut best = 0.0;
            for (i, &j) in st.basic.iter().enumerate() {
                if w[i].abs() <= ptol {
                    continue;
                }
                let rate = -sigma * w[i];
                let t = if rate < 0.0 {
                    (st.x[j] - st.lower[j]) / -rate
                } else {
                    (st.upper[j] - st.x[j]) / rate
                };
                if t <= relaxed && w[i].abs() > best {
                    best = w[i].abs();
                    leave = Some((i, t.max(0.0)));
                }
            }
        }
        let own = if sigma > 0.0 {
            st.upper[q] - st.x[q]
        } else {
            st.x[q] - st.lower[q]
        };

        let flip = match leave {
            Some((_, t)) => own <= t,
            None => true,
        };
        let step = if flip { own } else { leave.unwrap().1 };
        if !step.is_finite() {
            break SimplexStatus::Unbounded;
        }

        st.x[q] += sigma * step;
        for (i, &j) in st.basic.iter().enumerate() {
            st.x[j] -= sigma * step * w[i];
        }

        if step <= 1e-12 {
            degenerate_run += 1;
            if degenerate_run > 50 {
                bland = true;
            }
        } else {
            degenerate_run = 0;
            bland = false;
        }

        if flip {
            st.x[q] = if sigma > 0.0 { st.upper[q] } else { st.lower[q] };
            flips += 1;
            continue;
        }

        let (r, _) = leave.unwrap();
        let out = st.basic[r];
        let rate = -sigma * w[r];
        st.x[out] = if rate < 0.0 { st.lower[out] } else { st.upper[out] };
        st.in_basis[out] = false;
        st.in_basis[q] = true;
        st.basic[r] = q;
        pivots += 1;
        since_refactor += 1;

        if since_refactor >= refactor_every {
            since_refactor = 0;
            if !st.refactor() {
                break SimplexStatus::Singular;
            }
        } else {
            let pivot = w[r];
            let row = st.binv.row(r).transpose() / pivot;
            let mut v = w;
            v[r] -= 1.0;
            st.binv.ger(-1.0, &v, &row, 1.0);
        }
    };

    if status != SimplexStatus::Singular && !st.refactor() {
        return fail(&st, SimplexStatus::Singular, pivots, flips);
    }
    let y = st.duals();
    SimplexResult {
        status,
        x: st.x[..nc].to_vec(),
        y,
        pivots,
        flips,
    }
}

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::{Deserialize, Serialize};

use super::{NlpProblem, Triplets};

const MULT_CLIP: f64 = 1e8;
const ARMIJO: f64 = 1e-4;
const DENSE_LIMIT: usize = 400;
const FD_HESSIAN_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Bound on each KKT residual for an `Optimal` return.
    pub tol: f64,
    /// Total inner iterations.
    pub max_iter: usize,
    pub max_outer: usize,
    pub time_limit: Option<Duration>,
    /// Violation above which a stalled run is declared infeasible.
    pub infeasible_tol: f64,
    /// Inner iterations without violation progress before declaring
    /// infeasibility.
    pub stall_iters: usize,
    pub mu0: f64,
    pub mu_max: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
            max_outer: 100,
            time_limit: None,
            infeasible_tol: 1e-4,
            stall_iters: 50,
            mu0: 10.0,
            mu_max: 1e12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterLimit,
    NumericFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `‖z − P(z − ∇L)‖∞`.
    pub stationarity: f64,
    /// `max(‖c‖∞, max h⁺)`.
    pub primal: f64,
    /// `max |min(−h_i, y_i)|`.
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub z: Vec<f64>,
    pub status: SolveStatus,
    pub objective: f64,
    pub kkt: KktResiduals,
    pub eq_mult: Vec<f64>,
    pub ineq_mult: Vec<f64>,
    pub iterations: usize,
    pub outer_iterations: usize,
    pub message: Option<String>,
}

struct Eval<'a, P: NlpProblem + ?Sized> {
    p: &'a P,
    n: usize,
    me: usize,
    mi: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Point data needed by the augmented Lagrangian.
struct Point {
    f: f64,
    grad_f: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
    jc: Triplets,
    jh: Triplets,
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl<'a, P: NlpProblem + ?Sized> Eval<'a, P> {
    fn values(&self, z: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let f = self.p.objective(z);
        let mut c = vec![0.0; self.me];
        let mut h = vec![0.0; self.mi];
        self.p.eq_constraints(z, &mut c);
        self.p.ineq_constraints(z, &mut h);
        (f, c, h)
    }

    fn point(&self, z: &[f64]) -> Point {
        let (f, c, h) = self.values(z);
        let mut grad_f = vec![0.0; self.n];
        self.p.gradient(z, &mut grad_f);
        let mut jc = Vec::new();
        let mut jh = Vec::new();
        if self.me > 0 {
            self.p.eq_jacobian(z, &mut jc);
        }
        if self.mi > 0 {
            self.p.ineq_jacobian(z, &mut jh);
        }
        Point { f, grad_f, c, h, jc, jh }
    }

    fn is_finite(&self, pt: &Point) -> bool {
        pt.f.is_finite()
            && finite(&pt.grad_f)
            && finite(&pt.c)
            && finite(&pt.h)
            && pt.jc.iter().all(|t| t.2.is_finite())
            && pt.jh.iter().all(|t| t.2.is_finite())
    }

    fn project(&self, z: &mut [f64]) {
        for i in 0..self.n {
            z[i] = z[i].clamp(self.lo[i], self.hi[i]);
        }
    }

    fn proj_grad_norm(&self, z: &[f64], g: &[f64]) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            let s = (z[i] - g[i]).clamp(self.lo[i], self.hi[i]);
            m = m.max((z[i] - s).abs());
        }
        m
    }

    /// `∇f + J_cᵀ eq + J_hᵀ ineq`.
    fn lagrangian_grad(&self, pt: &Point, eq: &[f64], ineq: &[f64]) -> Vec<f64> {
        let mut g = pt.grad_f.clone();
        for &(r, col, v) in &pt.jc {
            g[col] += v * eq[r];
        }
        for &(r, col, v) in &pt.jh {
            g[col] += v * ineq[r];
        }
        g
    }
}

struct Al<'a> {
    lambda: &'a [f64],
    y: &'a [f64],
    mu: f64,
}

impl Al<'_> {
    fn value(&self, f: f64, c: &[f64], h: &[f64]) -> f64 {
        let mut v = f;
        for (ci, li) in c.iter().zip(self.lambda) {
            v += li * ci + 0.5 * self.mu * ci * ci;
        }
        for (hi, yi) in h.iter().zip(self.y) {
            let s = (yi + self.mu * hi).max(0.0);
            v += (s * s - yi * yi) / (2.0 * self.mu);
        }
        v
    }

    fn eq_mult(&self, c: &[f64]) -> Vec<f64> {
        c.iter().zip(self.lambda).map(|(ci, li)| li + self.mu * ci).collect()
    }

    fn ineq_mult(&self, h: &[f64]) -> Vec<f64> {
        h.iter()
            .zip(self.y)
            .map(|(hi, yi)| (yi + self.mu * hi).max(0.0))
            .collect()
    }
}

/// Adds `scale · Σ_rows a_r a_rᵀ` (lower triangle) for the selected rows.
fn add_gram(jac: &Triplets, rows: usize, keep: impl Fn(usize) -> bool, scale: f64, out: &mut Triplets) {
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
    for &(r, c, v) in jac {
        if keep(r) {
            by_row[r].push((c, v));
        }
    }
    for row in &mut by_row {
        if row.is_empty() {
            continue;
        }
        row.sort_by_key(|e| e.0);
        // Merge duplicate columns so the outer product stays exact.
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for &(c, v) in row.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        for (a, &(ca, va)) in merged.iter().enumerate() {
            for &(cb, vb) in &merged[..=a] {
                out.push((ca, cb, scale * va * vb));
            }
        }
    }
}

enum InnerEnd {
    Converged,
    Stalled,
    Budget,
    Numeric(String),
}

struct Budget {
    start: Instant,
    limit: Option<Duration>,
    max_iter: usize,
    iters: usize,
}

impl Budget {
    fn exhausted(&self) -> bool {
        self.iters >= self.max_iter || self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }
}

/// Solves `H d = rhs` for the lower-triangle triplets `h`, with rows in
/// `fixed` replaced by identity rows and a growing diagonal shift on the rest
/// until the matrix is positive definite.
fn solve_shifted(n: usize, h: &Triplets, fixed: &[bool], rhs: &[f64]) -> Option<Vec<f64>> {
    let max_diag = h
        .iter()
        .filter(|t| t.0 == t.1)
        .fold(0.0f64, |m, t| m.max(t.2.abs()));
    let mut shift = 0.0;
    let base_shift = 1e-10 * (1.0 + max_diag);
    for _ in 0..30 {
        let diag = |i: usize| if fixed[i] { 1.0 } else { shift };
        let sol = if n <= DENSE_LIMIT {
            let mut m = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = diag(i);
            }
            for &(r, c, v) in h {
                if fixed[r] || fixed[c] {
                    continue;
                }
                m[(r, c)] += v;
                if r != c {
                    m[(c, r)] += v;
                }
            }
            m.cholesky().map(|ch| ch.solve(&DVector::from_column_slice(rhs)).as_slice().to_vec())
        } else {
            let mut coo = CooMatrix::new(n, n);
            for i in 0..n {
                coo.push(i, i, diag(i));
            }
            for &(r, c, v) in h {
                if fixed[r] || fixed[c] {
                    continue;
                }
                coo.push(r, c, v);
                if r != c {
                    coo.push(c, r, v);
                }
            }
            let csc = CscMatrix::from(&coo);
            CscCholesky::factor(&csc).ok().map(|ch| {
                let b = DMatrix::from_column_slice(n, 1, rhs);
                ch.solve(&b).as_slice().to_vec()
            })
        };
        if let Some(s) = sol {
            if finite(&s) {
                return Some(s);
            }
        }
        shift = if shift == 0.0 { base_shift } else { shift * 10.0 };
    }
    None
}

struct Solver<'a, P: NlpProblem + ?Sized> {
    ev: Eval<'a, P>,
    budget: Budget,
}

impl<'a, P: NlpProblem + ?Sized> Solver<'a, P> {
    fn hessian(&self, z: &[f64], pt: &Point, al: &Al) -> Triplets {
        let ev = &self.ev;
        let eq = al.eq_mult(&pt.c);
        let ineq = al.ineq_mult(&pt.h);
        let mut h = Triplets::new();
        if !ev.p.lagrangian_hessian(z, 1.0, &eq, &ineq, &mut h) {
            h.clear();
            if ev.n <= FD_HESSIAN_LIMIT {
                self.fd_hessian(z, &eq, &ineq, &mut h);
            }
        }
        add_gram(&pt.jc, ev.me, |_| true, al.mu, &mut h);
        add_gram(&pt.jh, ev.mi, |r| ineq[r] > 0.0, al.mu, &mut h);
        h
    }

    fn fd_hessian(&self, z: &[f64], eq: &[f64], ineq: &[f64], out: &mut Triplets) {
        let ev = &self.ev;
        let n = ev.n;
        let mut cols = Vec::with_capacity(n);
        let mut zz = z.to_vec();
        for k in 0..n {
            let step = 1e-6 * (1.0 + z[k].abs());
            zz[k] = z[k] + step;
            let gp = ev.lagrangian_grad(&ev.point(&zz), eq, ineq);
            zz[k] = z[k] - step;
            let gm = ev.lagrangian_grad(&ev.point(&zz), eq, ineq);
            zz[k] = z[k];
            cols.push(
                gp.iter()
                    .zip(&gm)
                    .map(|(a, b)| (a - b) / (2.0 * step))
                    .collect::<Vec<_>>(),
            );
        }
        for r in 0..n {
            for c in 0..=r {
                let v = 0.5 * (cols[c][r] + cols[r][c]);
                if v != 0.0 && v.is_finite() {
                    out.push((r, c, v));
                }
            }
        }
    }

    /// Minimizes the augmented Lagrangian over the box to `‖P∇‖∞ ≤ eps`.
    fn inner(&mut self, z: &mut Vec<f64>, al: &Al, eps: f64) -> InnerEnd {
        let ev = &self.ev;
        let n = ev.n;
        let mut tiny = 0usize;
        loop {
            let pt = ev.point(z);
            if !ev.is_finite(&pt) {
                return InnerEnd::Numeric(format!("non-finite evaluation at {z:?}"));
            }
            let g = ev.lagrangian_grad(&pt, &al.eq_mult(&pt.c), &al.ineq_mult(&pt.h));
            let pg = ev.proj_grad_norm(z, &g);
            if pg <= eps {
                return InnerEnd::Converged;
            }
            if self.budget.exhausted() {
                return InnerEnd::Budget;
            }
            self.budget.iters += 1;
            let phi0 = al.value(pt.f, &pt.c, &pt.h);

            let act = pg.min(1e-3);
            let fixed: Vec<bool> = (0..n)
                .map(|i| {
                    ev.lo[i] == ev.hi[i]
                        || (z[i] <= ev.lo[i] + act && g[i] > 0.0)
                        || (z[i] >= ev.hi[i] - act && g[i] < 0.0)
                })
                .collect();
            let h = self.hessian(z, &pt, al);
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let newton = solve_shifted(n, &h, &fixed, &rhs);

            let mut accepted = false;
            let mut negligible = false;
            let gscale = 1.0 / g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let steepest: Vec<f64> = rhs.iter().map(|v| v * gscale).collect();
            for d in newton.iter().chain(std::iter::once(&steepest)) {
                let mut alpha = 1.0;
                for _ in 0..50 {
                    let mut trial: Vec<f64> = z.iter().zip(d).map(|(zi, di)| zi + alpha * di).collect();
                    ev.project(&mut trial);
                    let dec: f64 = g.iter().zip(trial.iter().zip(z.iter())).map(|(gi, (t, zi))| gi * (t - zi)).sum();
                    if dec >= 0.0 && trial == *z {
                        break;
                    }
                    let (f, c, hh) = ev.values(&trial);
                    let phi = al.value(f, &c, &hh);
                    if phi.is_finite() && phi <= phi0 + ARMIJO * dec && dec < 0.0 {
                        negligible = phi0 - phi <= 1e-15 * (1.0 + phi0.abs());
                        *z = trial;
                        accepted = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if accepted {
                    break;
                }
            }
            if !accepted {
                return InnerEnd::Stalled;
            }
            tiny = if negligible { tiny + 1 } else { 0 };
            if tiny >= 5 {
                return InnerEnd::Stalled;
            }
        }
    }

    fn kkt(&self, pt: &Point, z: &[f64], lambda: &[f64], y: &[f64]) -> KktResiduals {
        let g = self.ev.lagrangian_grad(pt, lambda, y);
        let primal = pt
            .c
            .iter()
            .map(|v| v.abs())
            .chain(pt.h.iter().map(|v| v.max(0.0)))
            .fold(0.0, f64::max);
        let complementarity = pt
            .h
            .iter()
            .zip(y)
            .map(|(h, y)| (-h).min(*y).abs())
            .fold(0.0, f64::max);
        KktResiduals {
            stationarity: self.ev.proj_grad_norm(z, &g),
            primal,
            complementarity,
        }
    }
}

/// Constraint violation measure `max(‖c‖∞, max |min(−h, y/μ)|)`.
fn violation(c: &[f64], h: &[f64], y: &[f64], mu: f64) -> f64 {
    let e = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    h.iter()
        .zip(y)
        .fold(e, |m, (h, y)| m.max((-h).min(y / mu).abs()))
}

/// Minimizes `problem` with an augmented Lagrangian method.
///
/// Deterministic for identical inputs. The returned point always lies in the
/// variable box.
pub fn solve<P: NlpProblem + ?Sized>(problem: &P, opts: &SolverOptions) -> Solution {
    let bounds = problem.bounds();
    let n = problem.num_vars();
    let ev = Eval {
        p: problem,
        n,
        me: problem.num_eq(),
        mi: problem.num_ineq(),
        lo: bounds.lower.clone(),
        hi: bounds.upper.clone(),
    };
    let mut z = problem.initial_point();
    ev.project(&mut z);
    let mut solver = Solver {
        ev,
        budget: Budget {
            start: Instant::now(),
            limit: opts.time_limit,
            max_iter: opts.max_iter,
            iters: 0,
        },
    };
    let (me, mi) = (solver.ev.me, solver.ev.mi);
    let mut lambda = vec![0.0; me];
    let mut y = vec![0.0; mi];
    let mut mu = opts.mu0;

    let finish = |solver: &Solver<P>, z: Vec<f64>, lambda: Vec<f64>, y: Vec<f64>, status, outer, msg: Option<String>| {
        let pt = solver.ev.point(&z);
        let kkt = solver.kkt(&pt, &z, &lambda, &y);
        Solution {
            objective: pt.f,
            kkt,
            z,
            status,
            eq_mult: lambda,
            ineq_mult: y,
            iterations: solver.budget.iters,
            outer_iterations: outer,
            message: msg,
        }
    };

    let pt0 = solver.ev.point(&z);
    if !solver.ev.is_finite(&pt0) {
        let msg = format!("non-finite evaluation at the initial point {z:?}");
        return finish(&solver, z, lambda, y, SolveStatus::NumericFailure, 0, Some(msg));
    }
    if opts.time_limit.is_some_and(|l| l.is_zero()) {
        return finish(&solver, z, lambda, y, SolveStatus::IterLimit, 0, Some("time budget exhausted".into()));
    }
    let mut prev_viol = violation(&pt0.c, &pt0.h, &y, mu);
    // Progress is measured from the first subproblem solution: a feasible
    // start says nothing about the multipliers.
    let mut best_viol = f64::INFINITY;
    let mut stall = 0usize;
    let mut eps = 1e-1f64.max(opts.tol);

    for outer in 1..=opts.max_outer {
        let before = solver.budget.iters;
        let al = Al { lambda: &lambda, y: &y, mu };
        let end = solver.inner(&mut z, &al, eps);
        if let InnerEnd::Numeric(msg) = end {
            return finish(&solver, z, lambda, y, SolveStatus::NumericFailure, outer, Some(msg));
        }
        let (_, c, h) = solver.ev.values(&z);
        let viol = violation(&c, &h, &y, mu);
        for (l, ci) in lambda.iter_mut().zip(&c) {
            *l = (*l + mu * ci).clamp(-MULT_CLIP, MULT_CLIP);
        }
        for (yi, hi) in y.iter_mut().zip(&h) {
            *yi = (*yi + mu * hi).clamp(0.0, MULT_CLIP);
        }
        let pt = solver.ev.point(&z);
        let kkt = solver.kkt(&pt, &z, &lambda, &y);
        if kkt.max() <= opts.tol {
            return finish(&solver, z, lambda, y, SolveStatus::Optimal, outer, None);
        }

        let inner_iters = (solver.budget.iters - before).max(1);
        if viol < 0.99 * best_viol {
            best_viol = viol;
            stall = 0;
        } else {
            stall += inner_iters;
        }
        let primal = kkt.primal;
        let converged = matches!(end, InnerEnd::Converged | InnerEnd::Stalled);
        if primal > opts.infeasible_tol
            && (stall >= opts.stall_iters || (mu >= opts.mu_max && converged))
        {
            let msg = format!("constraint violation {primal:.3e} stalled");
            return finish(&solver, z, lambda, y, SolveStatus::Infeasible, outer, Some(msg));
        }
        if matches!(end, InnerEnd::Budget) || solver.budget.exhausted() {
            return finish(&solver, z, lambda, y, SolveStatus::IterLimit, outer, Some("iteration or time budget exhausted".into()));
        }
        if viol > opts.tol && viol > 0.5 * prev_viol {
            mu = (mu * 10.0).min(opts.mu_max);
        }
        prev_viol = viol;
        eps = if viol <= opts.tol { opts.tol } else { (eps * 0.1).max(opts.tol) };
    }
    finish(&solver, z, lambda, y, SolveStatus::IterLimit, opts.max_outer, Some("outer iteration limit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::BoxBounds;

    struct Quadratic {
        lo: Vec<f64>,
        hi: Vec<f64>,
        linear: bool,
    }

    impl NlpProblem for Quadratic {
        fn num_vars(&self) -> usize {
            self.lo.len()
        }
        fn bounds(&self) -> BoxBounds {
            BoxBounds::new(self.lo.clone(), self.hi.clone()).unwrap()
        }
        fn initial_point(&self) -> Vec<f64> {
            self.hi.clone()
        }
        fn objective(&self, z: &[f64]) -> f64 {
            if self.linear {
                z[0]
            } else {
                z.iter().map(|v| v * v).sum()
            }
        }
        fn gradient(&self, z: &[f64], g: &mut [f64]) {
            for (gi, zi) in g.iter_mut().zip(z) {
                *gi = if self.linear { 1.0 } else { 2.0 * zi };
            }
        }
    }

    #[test]
    fn box_only_examples() {
        let p = Quadratic { lo: vec![-1.0; 2], hi: vec![1.0; 2], linear: false };
        let s = solve(&p, &SolverOptions::default());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!(s.z.iter().all(|v| v.abs() < 1e-6));
        let p = Quadratic { lo: vec![1.0], hi: vec![2.0], linear: true };
        let s = solve(&p, &SolverOptions::default());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.z, vec![1.0]);
        assert_eq!(s.objective, 1.0);
    }

    /// min (x−2)² + (y−1)²  s.t.  x + y = 1,  x − y ≤ 0.
    struct Small;

    impl NlpProblem for Small {
        fn num_vars(&self) -> usize {
            2
        }
        fn bounds(&self) -> BoxBounds {
            BoxBounds::uniform(2, -10.0, 10.0).unwrap()
        }
        fn initial_point(&self) -> Vec<f64> {
            vec![3.0, -4.0]
        }
        fn objective(&self, z: &[f64]) -> f64 {
            (z[0] - 2.0).powi(2) + (z[1] - 1.0).powi(2)
        }
        fn gradient(&self, z: &[f64], g: &mut [f64]) {
            g[0] = 2.0 * (z[0] - 2.0);
            g[1] = 2.0 * (z[1] - 1.0);
        }
        fn num_eq(&self) -> usize {
            1
        }
        fn eq_constraints(&self, z: &[f64], c: &mut [f64]) {
            c[0] = z[0] + z[1] - 1.0;
        }
        fn eq_jacobian(&self, _z: &[f64], j: &mut Triplets) {
            j.extend([(0, 0, 1.0), (0, 1, 1.0)]);
        }
        fn num_ineq(&self) -> usize {
            1
        }
        fn ineq_constraints(&self, z: &[f64], h: &mut [f64]) {
            h[0] = z[0] - z[1];
        }
        fn ineq_jacobian(&self, _z: &[f64], j: &mut Triplets) {
            j.extend([(0, 0, 1.0), (0, 1, -1.0)]);
        }
    }

    #[test]
    fn equality_and_active_inequality() {
        // Unconstrained-in-h solution (1, 0) violates x ≤ y, so the optimum is (0.5, 0.5).
        let s = solve(&Small, &SolverOptions::default());
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.z[0] - 0.5).abs() < 1e-6 && (s.z[1] - 0.5).abs() < 1e-6, "{:?}", s.z);
        assert!(s.kkt.max() <= 1e-6);
        assert!(s.ineq_mult[0] > 0.0);
    }

    struct Infeasible;

    impl NlpProblem for Infeasible {
        fn num_vars(&self) -> usize {
            1
        }
        fn bounds(&self) -> BoxBounds {
            BoxBounds::uniform(1, 0.0, 1.0).unwrap()
        }
        fn initial_point(&self) -> Vec<f64> {
            vec![0.5]
        }
        fn objective(&self, _z: &[f64]) -> f64 {
            0.0
        }
        fn gradient(&self, _z: &[f64], g: &mut [f64]) {
            g[0] = 0.0;
        }
        fn num_eq(&self) -> usize {
            1
        }
        fn eq_constraints(&self, z: &[f64], c: &mut [f64]) {
            c[0] = z[0] - 2.0;
        }
        fn eq_jacobian(&self, _z: &[f64], j: &mut Triplets) {
            j.push((0, 0, 1.0));
        }
    }

    #[test]
    fn detects_infeasibility_and_budget() {
        let s = solve(&Infeasible, &SolverOptions::default());
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert_eq!(s.z, vec![1.0]);
        let opts = SolverOptions { time_limit: Some(Duration::ZERO), ..Default::default() };
        assert_eq!(solve(&Small, &opts).status, SolveStatus::IterLimit);
    }

    #[test]
    fn deterministic() {
        let a = solve(&Small, &SolverOptions::default());
        let b = solve(&Small, &SolverOptions::default());
        assert_eq!(a, b);
    }
}

//! First-order solver for small dense semidefinite programs.
//!
//! Problems are stated in standard primal form over a direct sum of PSD
//! blocks:
//!
//! ```text
//!   maximize   <C, X>
//!   subject to <A_j, X> = b_j,   X = X_1 ⊕ ... ⊕ X_r ⪰ 0
//! ```
//!
//! The solver runs ADMM with over-relaxation on the splitting
//! `X ∈ {affine}`, `Z ∈ PSD`, `X = Z`, with residual-balanced penalty. Complex
//! blocks are handled on the real `2d x 2d` embedding: a real PSD `Y` maps to
//! the Hermitian PSD `Y11 + Y22 + i (Y21 - Y12)`, and `<A, H(Y)> = <emb(A), Y>`.
//! Blocks whose data are all real are solved over real symmetric matrices.

use crate::config::TOL;
use crate::error::{validation, Result};
use crate::linalg::{jacobi_in_place, sort_eigenpairs, HermitianMatrix, C64};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// One upper-triangular entry of a block-diagonal Hermitian matrix. An
/// off-diagonal entry at `(row, col)` implies `conj(value)` at `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: C64,
}

/// Sparse block-diagonal Hermitian matrix. Repeated positions accumulate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockSparse {
    entries: Vec<SparseEntry>,
}

impl BlockSparse {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` at `(row, col)` and its conjugate at `(col, row)`.
    /// Diagonal entries keep only the real part.
    pub fn push(&mut self, block: usize, row: usize, col: usize, value: C64) {
        let (row, col, value) = match row.cmp(&col) {
            std::cmp::Ordering::Less => (row, col, value),
            std::cmp::Ordering::Greater => (col, row, value.conj()),
            std::cmp::Ordering::Equal => (row, col, C64::new(value.re, 0.0)),
        };
        self.entries.push(SparseEntry { block, row, col, value });
    }

    pub fn push_real(&mut self, block: usize, row: usize, col: usize, value: f64) {
        self.push(block, row, col, C64::new(value, 0.0));
    }

    pub fn with(mut self, block: usize, row: usize, col: usize, value: f64) -> Self {
        self.push_real(block, row, col, value);
        self
    }

    pub fn from_dense(block: usize, m: &HermitianMatrix) -> Self {
        let mut s = Self::new();
        s.add_dense(block, m, 1.0);
        s
    }

    /// Adds `scale * m` into `block`.
    pub fn add_dense(&mut self, block: usize, m: &HermitianMatrix, scale: f64) {
        for i in 0..m.dim() {
            for j in i..m.dim() {
                let z = m.get(i, j) * scale;
                if z.re != 0.0 || z.im != 0.0 {
                    self.push(block, i, j, z);
                }
            }
        }
    }

    pub fn identity(block: usize, dim: usize) -> Self {
        let mut s = Self::new();
        for i in 0..dim {
            s.push_real(block, i, i, 1.0);
        }
        s
    }

    pub fn entries(&self) -> &[SparseEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `<self, X>` for a block-diagonal `X`.
    pub fn inner(&self, x: &[HermitianMatrix]) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let xij = x[e.block].get(e.row, e.col);
                if e.row == e.col {
                    e.value.re * xij.re
                } else {
                    2.0 * (e.value.conj() * xij).re
                }
            })
            .sum()
    }

    /// Dense form of one block.
    pub fn block_dense(&self, block: usize, dim: usize) -> HermitianMatrix {
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for e in self.entries.iter().filter(|e| e.block == block) {
            data[e.row * dim + e.col] += e.value;
            if e.row != e.col {
                data[e.col * dim + e.row] += e.value.conj();
            }
        }
        HermitianMatrix::new(dim, data).expect("sparse entries assemble a Hermitian block")
    }
}

/// Conic program in standard primal form.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub sense: Sense,
    /// Dimensions of the PSD blocks.
    pub blocks: Vec<usize>,
    pub objective: BlockSparse,
    pub constraints: Vec<(BlockSparse, f64)>,
    /// Caller asserts the objective is bounded when there are no constraints.
    pub objective_bounded: bool,
}

impl SdpProblem {
    pub fn new(sense: Sense, blocks: Vec<usize>, objective: BlockSparse) -> Self {
        Self { sense, blocks, objective, constraints: Vec::new(), objective_bounded: false }
    }

    pub fn constrain(&mut self, a: BlockSparse, b: f64) {
        self.constraints.push((a, b));
    }

    fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(validation("SDP needs at least one block and every block dimension must be positive"));
        }
        if self.constraints.is_empty() && !self.objective_bounded {
            return Err(validation("SDP has no constraints and the objective is not flagged bounded"));
        }
        let check = |m: &BlockSparse, what: &str| -> Result<()> {
            for e in m.entries() {
                let Some(&d) = self.blocks.get(e.block) else {
                    return Err(validation(format!("{what} references block {} of {}", e.block, self.blocks.len())));
                };
                if e.col >= d {
                    return Err(validation(format!(
                        "{what} entry ({}, {}) outside block {} of dimension {d}",
                        e.row, e.col, e.block
                    )));
                }
                if !e.value.re.is_finite() || !e.value.im.is_finite() {
                    return Err(validation(format!("{what} has a non-finite entry")));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (j, (a, b)) in self.constraints.iter().enumerate() {
            check(a, &format!("constraint {j}"))?;
            if !b.is_finite() {
                return Err(validation(format!("constraint {j} has a non-finite right-hand side")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIters,
}

/// Solver output. `x` holds one PSD matrix per block. `y` is indexed like the
/// constraint list; for an infeasible problem it is a Farkas ray with
/// `sum_j y_j A_j ⪰ 0` and `b^T y < 0`.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<HermitianMatrix>,
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// Solves with the given tolerance and iteration cap.
pub fn solve_sdp(p: &SdpProblem, tol: f64, max_iters: usize) -> Result<SdpSolution> {
    if !(tol > 0.0) {
        return Err(validation("solver tolerance must be positive"));
    }
    let prepared = Prepared::new(p)?;
    let c = prepared.embed_objective(&p.objective, p.sense);
    Ok(prepared.run(&c, tol, max_iters, None).0)
}

/// Solves with the default tolerance and iteration cap.
pub fn solve_sdp_default(p: &SdpProblem) -> Result<SdpSolution> {
    solve_sdp(p, TOL.sdp, TOL.sdp_max_iters)
}

#[derive(Debug, Clone, Copy)]
struct BlockLayout {
    dim: usize,
    complex: bool,
    /// Real dimension of the embedded block.
    n: usize,
    offset: usize,
}

impl BlockLayout {
    fn len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    /// Position of `(i, j)` in the packed upper triangle of this block.
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.offset + i * self.n - i * i.saturating_sub(1) / 2 + (j - i)
    }
}

/// Iterate state kept between solves that share constraint structure.
#[derive(Debug, Clone)]
pub(crate) struct WarmStart {
    z: Vec<f64>,
    u: Vec<f64>,
    rho: f64,
}

/// Constraint data reduced to an orthonormal row basis, reusable across
/// objectives.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    sense: Sense,
    layout: Vec<BlockLayout>,
    nvar: usize,
    /// Original constraint rows as sparse svec vectors, with right-hand sides.
    rows: Vec<(Vec<(usize, f64)>, f64)>,
    /// Orthonormal basis of the row space, dense, with right-hand sides.
    q: Vec<Vec<f64>>,
    q_rhs: Vec<f64>,
    /// `q[i] = sum_j t[i][j] * rows[j]`.
    t: Vec<Vec<f64>>,
    /// Farkas ray over original rows when the linear system is inconsistent.
    inconsistent: Option<Vec<f64>>,
}

impl Prepared {
    pub(crate) fn new(p: &SdpProblem) -> Result<Self> {
        p.validate()?;
        let mut complex = vec![false; p.blocks.len()];
        let mut mark = |m: &BlockSparse| {
            for e in m.entries() {
                if e.value.im != 0.0 {
                    complex[e.block] = true;
                }
            }
        };
        mark(&p.objective);
        for (a, _) in &p.constraints {
            mark(a);
        }
        Self::with_complex_blocks(p, &complex)
    }

    /// Like `new`, forcing the listed blocks onto the complex embedding even
    /// if the current data are real (objectives swapped in later may not be).
    pub(crate) fn with_complex_blocks(p: &SdpProblem, complex: &[bool]) -> Result<Self> {
        p.validate()?;
        let mut layout = Vec::with_capacity(p.blocks.len());
        let mut offset = 0;
        for (&dim, &cx) in p.blocks.iter().zip(complex) {
            let n = if cx { 2 * dim } else { dim };
            let l = BlockLayout { dim, complex: cx, n, offset };
            offset += l.len();
            layout.push(l);
        }
        let mut prepared = Self {
            sense: p.sense,
            layout,
            nvar: offset,
            rows: Vec::new(),
            q: Vec::new(),
            q_rhs: Vec::new(),
            t: Vec::new(),
            inconsistent: None,
        };
        prepared.rows = p.constraints.iter().map(|(a, b)| (prepared.embed_sparse(a), *b)).collect();
        prepared.orthonormalize();
        Ok(prepared)
    }

    fn embed_sparse(&self, m: &BlockSparse) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for e in m.entries() {
            let l = &self.layout[e.block];
            let (a, b) = (e.value.re, e.value.im);
            let (r, c) = (e.row, e.col);
            if r == c {
                out.push((l.idx(r, r), a));
                if l.complex {
                    out.push((l.idx(r + l.dim, r + l.dim), a));
                }
            } else {
                out.push((l.idx(r, c), SQRT2 * a));
                if l.complex {
                    out.push((l.idx(r + l.dim, c + l.dim), SQRT2 * a));
                    out.push((l.idx(r, c + l.dim), -SQRT2 * b));
                    out.push((l.idx(c, r + l.dim), SQRT2 * b));
                } else {
                    debug_assert!(b == 0.0, "imaginary data in a real block");
                }
            }
        }
        out.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
        for (i, v) in out {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        merged
    }

    pub(crate) fn embed_objective(&self, c: &BlockSparse, sense: Sense) -> Vec<f64> {
        let mut dense = vec![0.0; self.nvar];
        let sign = if sense == Sense::Maximize { 1.0 } else { -1.0 };
        for (i, v) in self.embed_sparse(c) {
            dense[i] += sign * v;
        }
        dense
    }

    /// Modified Gram-Schmidt with one re-orthogonalization pass. Dependent
    /// rows are dropped after checking their right-hand side for consistency.
    fn orthonormalize(&mut self) {
        let m = self.rows.len();
        for j in 0..m {
            let (row, bj) = &self.rows[j];
            let mut r = vec![0.0; self.nvar];
            for &(i, v) in row {
                r[i] = v;
            }
            let norm0 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut tcoef = vec![0.0; m];
            tcoef[j] = 1.0;
            let mut proj = vec![0.0; self.q.len()];
            for _pass in 0..2 {
                for (k, qk) in self.q.iter().enumerate() {
                    let c: f64 = qk.iter().zip(&r).map(|(a, b)| a * b).sum();
                    if c == 0.0 {
                        continue;
                    }
                    proj[k] += c;
                    for (ri, qi) in r.iter_mut().zip(qk) {
                        *ri -= c * qi;
                    }
                    for (ti, tk) in tcoef.iter_mut().zip(&self.t[k]) {
                        *ti -= c * tk;
                    }
                }
            }
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-10 * norm0.max(1.0) {
                for x in r.iter_mut() {
                    *x /= norm;
                }
                for x in tcoef.iter_mut() {
                    *x /= norm;
                }
                let rhs: f64 = tcoef.iter().zip(&self.rows).map(|(t, (_, b))| t * b).sum();
                self.q.push(r);
                self.t.push(tcoef);
                self.q_rhs.push(rhs);
            } else {
                // row_j ≈ sum_k proj_k q_k; the implied rhs must match.
                let implied: f64 = proj.iter().zip(&self.q_rhs).map(|(c, b)| c * b).sum();
                let mismatch = bj - implied;
                if mismatch.abs() > 1e-9 * (1.0 + bj.abs()) && self.inconsistent.is_none() {
                    // y = e_j - sum_k proj_k t_k has A^T y ≈ 0 and b^T y = mismatch.
                    let mut y = vec![0.0; m];
                    y[j] = 1.0;
                    for (c, tk) in proj.iter().zip(&self.t) {
                        for (yi, ti) in y.iter_mut().zip(tk) {
                            *yi -= c * ti;
                        }
                    }
                    let s = -mismatch.signum();
                    for yi in y.iter_mut() {
                        *yi *= s;
                    }
                    self.inconsistent = Some(y);
                }
            }
        }
    }

    fn project_affine(&self, v: &mut [f64]) {
        for (qk, bk) in self.q.iter().zip(&self.q_rhs) {
            let c: f64 = qk.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>() - bk;
            for (vi, qi) in v.iter_mut().zip(qk) {
                *vi -= c * qi;
            }
        }
    }

    /// Projects every block of `v` onto the PSD cone in place.
    fn project_cone(&self, v: &mut [f64], bases: &mut [Vec<f64>]) {
        for (l, basis) in self.layout.iter().zip(bases.iter_mut()) {
            if l.n == 1 {
                v[l.offset] = v[l.offset].max(0.0);
                continue;
            }
            let n = l.n;
            let mut full = vec![0.0; n * n];
            for i in 0..n {
                full[i * n + i] = v[l.idx(i, i)];
                for j in (i + 1)..n {
                    let x = v[l.idx(i, j)] / SQRT2;
                    full[i * n + j] = x;
                    full[j * n + i] = x;
                }
            }
            let (values, vectors) = eig_warm(&full, n, basis);
            if values[0] >= 0.0 {
                continue;
            }
            let mut out = vec![0.0; n * n];
            for (k, &lam) in values.iter().enumerate() {
                if lam <= 0.0 {
                    continue;
                }
                for i in 0..n {
                    let vik = vectors[i * n + k] * lam;
                    if vik == 0.0 {
                        continue;
                    }
                    for j in i..n {
                        out[i * n + j] += vik * vectors[j * n + k];
                    }
                }
            }
            for i in 0..n {
                v[l.idx(i, i)] = out[i * n + i];
                for j in (i + 1)..n {
                    v[l.idx(i, j)] = out[i * n + j] * SQRT2;
                }
            }
        }
    }

    fn row_residual(&self, z: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|(row, b)| (row.iter().map(|&(i, v)| v * z[i]).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    }

    fn min_eig_blocks(&self, v: &[f64]) -> f64 {
        let mut worst = f64::INFINITY;
        for l in &self.layout {
            let n = l.n;
            let mut full = vec![0.0; n * n];
            for i in 0..n {
                full[i * n + i] = v[l.idx(i, i)];
                for j in (i + 1)..n {
                    let x = v[l.idx(i, j)] / SQRT2;
                    full[i * n + j] = x;
                    full[j * n + i] = x;
                }
            }
            let (values, _) = crate::linalg::eig_symmetric(&full, n);
            worst = worst.min(values[0]);
        }
        worst
    }

    /// Maps `y` in the orthonormal basis back to the original rows.
    fn lift_dual(&self, yq: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows.len()];
        for (c, tk) in yq.iter().zip(&self.t) {
            for (yi, ti) in y.iter_mut().zip(tk) {
                *yi += c * ti;
            }
        }
        y
    }

    fn unembed(&self, z: &[f64]) -> Vec<HermitianMatrix> {
        self.layout
            .iter()
            .map(|l| {
                let full = |i: usize, j: usize| -> f64 {
                    if i == j {
                        z[l.idx(i, i)]
                    } else {
                        z[l.idx(i, j)] / SQRT2
                    }
                };
                let d = l.dim;
                let mut data = vec![C64::new(0.0, 0.0); d * d];
                for i in 0..d {
                    for j in 0..d {
                        data[i * d + j] = if l.complex {
                            C64::new(full(i, j) + full(i + d, j + d), full(i + d, j) - full(i, j + d))
                        } else {
                            C64::new(full(i, j), 0.0)
                        };
                    }
                }
                HermitianMatrix::from_raw(d, data)
            })
            .collect()
    }

    fn infeasible_solution(&self, y: Vec<f64>, iterations: usize, z: &[f64]) -> SdpSolution {
        let b_dot_y: f64 = y.iter().zip(&self.rows).map(|(yi, (_, b))| yi * b).sum();
        SdpSolution {
            status: SdpStatus::Infeasible,
            x: self.unembed(z),
            y,
            primal_objective: f64::NAN,
            dual_objective: b_dot_y,
            primal_residual: self.row_residual(z),
            dual_residual: f64::NAN,
            gap: f64::NAN,
            iterations,
        }
    }

    /// Runs ADMM on objective `c` (already embedded and sign-adjusted for
    /// maximization).
    pub(crate) fn run(
        &self,
        c: &[f64],
        tol: f64,
        max_iters: usize,
        warm: Option<&WarmStart>,
    ) -> (SdpSolution, WarmStart) {
        const ALPHA: f64 = 1.5;
        const CHECK_EVERY: usize = 10;
        const ADAPT_EVERY: usize = 50;
        const INFEAS_AFTER: usize = 1000;

        let nv = self.nvar;
        let sign = if self.sense == Sense::Maximize { 1.0 } else { -1.0 };
        if let Some(y) = &self.inconsistent {
            let z = vec![0.0; nv];
            return (
                self.infeasible_solution(y.clone(), 0, &z),
                WarmStart { z, u: vec![0.0; nv], rho: 1.0 },
            );
        }

        let (mut z, mut u, mut rho) = match warm {
            Some(w) if w.z.len() == nv => (w.z.clone(), w.u.clone(), w.rho),
            _ => (vec![0.0; nv], vec![0.0; nv], 1.0),
        };
        let mut bases: Vec<Vec<f64>> = vec![Vec::new(); self.layout.len()];
        let mut x = vec![0.0; nv];
        let mut xhat = vec![0.0; nv];
        let mut z_prev = vec![0.0; nv];
        let mut u_prev = vec![0.0; nv];
        let mut last = None;

        for it in 1..=max_iters {
            for i in 0..nv {
                x[i] = z[i] - u[i] + c[i] / rho;
            }
            self.project_affine(&mut x);
            z_prev.copy_from_slice(&z);
            u_prev.copy_from_slice(&u);
            for i in 0..nv {
                xhat[i] = ALPHA * x[i] + (1.0 - ALPHA) * z[i];
                z[i] = xhat[i] + u[i];
            }
            self.project_cone(&mut z, &mut bases);
            for i in 0..nv {
                u[i] += xhat[i] - z[i];
            }

            if it % CHECK_EVERY == 0 || it == max_iters {
                let report = self.measure(c, &z, &u, rho, tol);
                let done = report.primal_residual <= tol && report.dual_residual <= tol && report.gap <= 10.0 * tol;
                if done {
                    let sol = self.finish(SdpStatus::Optimal, report, it, &z, sign);
                    return (sol, WarmStart { z, u, rho });
                }
                last = Some(report);

                if it >= INFEAS_AFTER && it % ADAPT_EVERY == 0 {
                    let delta: Vec<f64> = u.iter().zip(&u_prev).map(|(a, b)| a - b).collect();
                    if let Some(y) = self.farkas_from_increment(&delta, tol) {
                        return (self.infeasible_solution(y, it, &z), WarmStart { z, u, rho });
                    }
                }
            }

            if it % ADAPT_EVERY == 0 {
                let rp = x.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let rd = rho * z.iter().zip(&z_prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let scale = if rp > 10.0 * rd {
                    2.0
                } else if rd > 10.0 * rp {
                    0.5
                } else {
                    1.0
                };
                if scale != 1.0 && (1e-6..=1e6).contains(&(rho * scale)) {
                    rho *= scale;
                    for ui in u.iter_mut() {
                        *ui /= scale;
                    }
                }
            }
        }
        let report = last.unwrap_or_else(|| self.measure(c, &z, &u, rho, tol));
        let sol = self.finish(SdpStatus::MaxIters, report, max_iters, &z, sign);
        (sol, WarmStart { z, u, rho })
    }

    fn measure(&self, c: &[f64], z: &[f64], u: &[f64], rho: f64, _tol: f64) -> Report {
        // S = -rho u is PSD and complementary to z by construction of the
        // cone projection; y solves A^T y = c + S in least squares.
        let cs: Vec<f64> = c.iter().zip(u).map(|(ci, ui)| ci - rho * ui).collect();
        let yq: Vec<f64> = self.q.iter().map(|qk| qk.iter().zip(&cs).map(|(a, b)| a * b).sum()).collect();
        let mut resid = cs.clone();
        for (yk, qk) in yq.iter().zip(&self.q) {
            for (ri, qi) in resid.iter_mut().zip(qk) {
                *ri -= yk * qi;
            }
        }
        let dual_residual = resid.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        let primal_residual = self.row_residual(z);
        let primal_objective: f64 = c.iter().zip(z).map(|(a, b)| a * b).sum();
        let dual_objective: f64 = yq.iter().zip(&self.q_rhs).map(|(a, b)| a * b).sum();
        Report {
            primal_residual,
            dual_residual,
            primal_objective,
            dual_objective,
            gap: (primal_objective - dual_objective).abs(),
            yq,
        }
    }

    fn finish(&self, status: SdpStatus, r: Report, iterations: usize, z: &[f64], sign: f64) -> SdpSolution {
        let y = self.lift_dual(&r.yq).into_iter().map(|v| sign * v).collect();
        SdpSolution {
            status,
            x: self.unembed(z),
            y,
            primal_objective: sign * r.primal_objective,
            dual_objective: sign * r.dual_objective,
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
            gap: r.gap,
            iterations,
        }
    }

    /// Tests whether the dual increment `delta` (which tends to a nonzero
    /// NSD direction when the problem is infeasible) yields a Farkas ray.
    fn farkas_from_increment(&self, delta: &[f64], tol: f64) -> Option<Vec<f64>> {
        let dnorm = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
        if dnorm <= 10.0 * tol {
            return None;
        }
        let w: Vec<f64> = self.q.iter().map(|qk| -qk.iter().zip(delta).map(|(a, b)| a * b).sum::<f64>()).collect();
        let wnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if wnorm == 0.0 {
            return None;
        }
        let w: Vec<f64> = w.iter().map(|x| x / wnorm).collect();
        let mut aty = vec![0.0; self.nvar];
        for (wk, qk) in w.iter().zip(&self.q) {
            for (ai, qi) in aty.iter_mut().zip(qk) {
                *ai += wk * qi;
            }
        }
        let bty: f64 = w.iter().zip(&self.q_rhs).map(|(a, b)| a * b).sum();
        if bty >= -1e-6 {
            return None;
        }
        let margin = self.min_eig_blocks(&aty);
        if margin < -1e-6 * bty.abs() {
            return None;
        }
        Some(self.lift_dual(&w))
    }
}

struct Report {
    primal_residual: f64,
    dual_residual: f64,
    primal_objective: f64,
    dual_objective: f64,
    gap: f64,
    yq: Vec<f64>,
}

/// Symmetric eigendecomposition started from the previous eigenbasis of the
/// same block; ADMM iterates drift slowly so the rotated matrix is already
/// close to diagonal.
fn eig_warm(full: &[f64], n: usize, basis: &mut Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    let mut a = if basis.len() == n * n {
        // a = B^T M B
        let mut mb = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let m = full[i * n + k];
                if m == 0.0 {
                    continue;
                }
                for j in 0..n {
                    mb[i * n + j] += m * basis[k * n + j];
                }
            }
        }
        let mut a = vec![0.0; n * n];
        for k in 0..n {
            for i in 0..n {
                let b = basis[k * n + i];
                if b == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[i * n + j] += b * mb[k * n + j];
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let s = 0.5 * (a[i * n + j] + a[j * n + i]);
                a[i * n + j] = s;
                a[j * n + i] = s;
            }
        }
        v.copy_from_slice(basis);
        a
    } else {
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        full.to_vec()
    };
    jacobi_in_place(&mut a, &mut v, n, TOL.jacobi_off_diagonal, TOL.jacobi_max_sweeps);
    *basis = v.clone();
    sort_eigenpairs(&a, &v, n)
}

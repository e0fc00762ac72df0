//! Certified bracket engine for maximizations over seminorm balls.
//!
//! Every quantity of interest here has the shape
//! `sup { J(t) : L(t) <= 1 }` where `t` ranges over a real coordinate space
//! (the self-adjoint part of an algebra, or a subspace of it),
//! `L(t) = max_k ||Lambda_k(t)||_op` is a max of operator norms of linear
//! matrix-valued maps, and `J` is either a linear functional or a norm of a
//! linear matrix image.
//!
//! Lower bounds come from feasible points (multistart supergradient ascent
//! plus an alignment polish), so they are exact up to evaluation error.
//! Upper bounds for linear `J` come from trace-norm dual witnesses: any
//! family `(Z_k)` with `sum_k Lambda_k^*(Z_k) = f` certifies
//! `sup <= sum_k ||Z_k||_tr` by operator/trace norm duality. The witness is
//! driven to near-optimality by ADMM over Hermitian parametrizations, and
//! the reported bound accounts for the residual of the affine constraint.
//! Upper bounds for norm-valued `J` use Frobenius relaxations and, in slice
//! dimension at most three, a certified spherical branch-and-bound.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, RMat, RVec};
use crate::tol::TOL_RANK;

/// Symmetry type of a matrix-valued linear map on self-adjoint inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sym {
    Hermitian,
    AntiHermitian,
}

/// A real-linear map `t -> sum_i t_i M_i` into complex matrices.
#[derive(Debug, Clone)]
pub struct MatrixPiece {
    pub mats: Vec<CMat>,
    pub sym: Sym,
}

impl MatrixPiece {
    pub fn new(mats: Vec<CMat>, sym: Sym) -> Self {
        MatrixPiece { mats, sym }
    }

    pub fn dim(&self) -> usize {
        self.mats.len()
    }

    pub fn matrix_size(&self) -> usize {
        self.mats.first().map(|m| m.nrows()).unwrap_or(0)
    }

    pub fn apply(&self, t: &RVec) -> CMat {
        let h = self.matrix_size();
        let mut out = CMat::zeros(h, h);
        for (i, m) in self.mats.iter().enumerate() {
            if t[i] != 0.0 {
                out += m * c(t[i], 0.0);
            }
        }
        out
    }

    /// Value and supergradient of `||apply(t)||_op` through the Hermitian
    /// eigenproblem of the (anti-)Hermitian value.
    pub fn norm_and_grad(&self, t: &RVec) -> (f64, RVec) {
        let x = self.apply(t);
        let hermit = match self.sym {
            Sym::Hermitian => x,
            Sym::AntiHermitian => x * c(0.0, 1.0),
        };
        let (vals, vecs) = linalg::herm_eigen(&hermit);
        let n = vals.len();
        if n == 0 {
            return (0.0, RVec::zeros(self.dim()));
        }
        let (idx, sign) = if vals[n - 1].abs() >= vals[0].abs() {
            (n - 1, 1.0)
        } else {
            (0, -1.0)
        };
        let v = vecs.column(idx);
        let mut grad = RVec::zeros(self.dim());
        for (i, m) in self.mats.iter().enumerate() {
            let mi = match self.sym {
                Sym::Hermitian => m.clone(),
                Sym::AntiHermitian => m * c(0.0, 1.0),
            };
            let quad = (v.adjoint() * mi * v)[(0, 0)];
            grad[i] = sign * quad.re;
        }
        (vals[idx].abs(), grad)
    }

    /// Compression onto the joint support of all value matrices: returns an
    /// equivalent piece on a smaller space (operator norms and pairings with
    /// supported vectors are unchanged).
    pub fn compress_support(&self) -> MatrixPiece {
        let h = self.matrix_size();
        if h == 0 {
            return self.clone();
        }
        // range(sum M M* + M* M) spans all column and row spaces.
        let mut s = CMat::zeros(h, h);
        for m in &self.mats {
            s += m * m.adjoint() + m.adjoint() * m;
        }
        let (vals, vecs) = linalg::herm_eigen(&s);
        let lmax = vals.iter().cloned().fold(0.0f64, f64::max);
        if lmax <= 0.0 {
            return self.clone();
        }
        let keep: Vec<usize> =
            (0..vals.len()).filter(|&i| vals[i] > 1e-20 * lmax).collect();
        if keep.len() >= h {
            return self.clone();
        }
        let mut w = CMat::zeros(h, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            w.set_column(j, &vecs.column(i).into_owned());
        }
        let mats = self.mats.iter().map(|m| w.adjoint() * m * &w).collect();
        MatrixPiece::new(mats, self.sym)
    }

    /// Real Gram matrix `G[i][j] = Re tr(M_j^* M_i)` of the map.
    fn gram(&self) -> RMat {
        let m = self.dim();
        let mut g = RMat::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = linalg::re_inner(&self.mats[i], &self.mats[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// Pairing vector of a matrix against the Hermitian dual parametrization:
    /// `pairing(Y(y), M) = y . pairing_vector(M)` where the dual variable is
    /// `Z = Y` (Hermitian piece) or `Z = iY` (anti-Hermitian piece).
    fn pairing_vector(&self, m: &CMat) -> RVec {
        let n = m.nrows();
        let mut v = RVec::zeros(n * n);
        let mut k = 0;
        match self.sym {
            Sym::Hermitian => {
                for i in 0..n {
                    v[k] = m[(i, i)].re;
                    k += 1;
                }
                for j in 0..n {
                    for i in 0..j {
                        v[k] = m[(i, j)].re + m[(j, i)].re;
                        v[k + 1] = m[(i, j)].im - m[(j, i)].im;
                        k += 2;
                    }
                }
            }
            Sym::AntiHermitian => {
                // pairing = Im tr(Y M).
                for i in 0..n {
                    v[k] = m[(i, i)].im;
                    k += 1;
                }
                for j in 0..n {
                    for i in 0..j {
                        v[k] = m[(j, i)].im + m[(i, j)].im;
                        v[k + 1] = m[(j, i)].re - m[(i, j)].re;
                        k += 2;
                    }
                }
            }
        }
        v
    }
}

/// Norm flavor for map-valued objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Operator norm of the image.
    OpNorm,
    /// Spectral spread `lambda_max - lambda_min` (Hermitian images only).
    Spread,
}

/// Solver configuration; all iteration counts are fixed for determinism.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub seed: u64,
    pub ascent_starts: usize,
    pub ascent_iters: usize,
    pub admm_iters: usize,
    pub admm_tol: f64,
    pub alternation_rounds: usize,
    pub alternation_starts: usize,
    /// Node budget of the certified spherical branch-and-bound.
    pub bb_budget: usize,
    /// Target gap at which the branch-and-bound stops refining.
    pub bb_target: f64,
    /// Relative duality-gap target; misses trigger one ADMM continuation.
    pub gap_target: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            seed: 1,
            ascent_starts: 6,
            ascent_iters: 120,
            admm_iters: 1600,
            admm_tol: 1e-9,
            alternation_rounds: 3,
            alternation_starts: 4,
            bb_budget: 6_000,
            bb_target: 1e-4,
            gap_target: 1e-7,
        }
    }
}

impl SolverOptions {
    pub fn with_seed(seed: u64) -> Self {
        SolverOptions { seed, ..Default::default() }
    }

    /// Cheaper settings for inner solves inside alternations.
    pub fn locate(&self) -> Self {
        SolverOptions {
            seed: self.seed,
            ascent_starts: 2,
            ascent_iters: 60,
            admm_iters: 350,
            admm_tol: 1e-7,
            alternation_rounds: 2,
            alternation_starts: 2,
            bb_budget: 1_500,
            bb_target: 3e-4,
            gap_target: 1e-4,
        }
    }
}

/// Outcome of a certified linear maximization.
#[derive(Debug, Clone)]
pub struct LinearSolve {
    pub lower: f64,
    pub upper: f64,
    pub witness: RVec,
    pub iterations: u64,
}

/// The unit-ball geometry `L(t) = max_k ||Lambda_k(t)||` with cached dual
/// structure.
#[derive(Debug, Clone)]
pub struct BallGeometry {
    pub pieces: Vec<MatrixPiece>,
    pub dim: usize,
    /// Orthonormal basis of the kernel of `t -> (Lambda_k(t))_k`.
    pub kernel: RMat,
    /// Adjoint constraint matrix: rows = domain coordinates, columns = all
    /// Hermitian dual parameters of all pieces.
    bmat: RMat,
    /// Pseudo-inverse of `B B^T`.
    bbt_pinv: RMat,
    /// `sup{ ||t||_2 : L(t) <= 1, t ⟂ kernel }` upper bound.
    pub l2_radius: f64,
    piece_offsets: Vec<usize>,
}

impl BallGeometry {
    pub fn new(pieces: Vec<MatrixPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidParameter("seminorm needs at least one piece".into()));
        }
        let dim = pieces[0].dim();
        if pieces.iter().any(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch("piece dimensions disagree".into()));
        }
        // Kernel of the joint map via a stacked real matrix (QR + SVD keeps
        // the singular-value resolution at TOL_RANK).
        let mut gram_scaled = RMat::zeros(dim, dim);
        for p in &pieces {
            let g = p.gram();
            let h = p.matrix_size().max(1) as f64;
            gram_scaled += &g / h;
        }
        // Per-piece normalization keeps the kernel detection well
        // conditioned (piece scaling does not change the joint kernel).
        let total_rows: usize = pieces.iter().map(|p| 2 * p.matrix_size() * p.matrix_size()).sum();
        let mut stacked = RMat::zeros(total_rows, dim);
        let mut row_off = 0;
        for p in &pieces {
            let h2 = p.matrix_size() * p.matrix_size();
            let scale = p
                .mats
                .iter()
                .map(linalg::frob_norm)
                .fold(0.0f64, f64::max)
                .max(1e-300);
            for (i, m) in p.mats.iter().enumerate() {
                for (e, z) in m.iter().enumerate() {
                    stacked[(row_off + e, i)] = z.re / scale;
                    stacked[(row_off + h2 + e, i)] = z.im / scale;
                }
            }
            row_off += 2 * h2;
        }
        let kernel = linalg::real_kernel_basis(&stacked, TOL_RANK);

        // Constraint matrix B.
        let mut piece_offsets = Vec::with_capacity(pieces.len() + 1);
        let mut total = 0usize;
        for p in &pieces {
            piece_offsets.push(total);
            total += p.matrix_size() * p.matrix_size();
        }
        piece_offsets.push(total);
        let mut bmat = RMat::zeros(dim, total);
        for (k, p) in pieces.iter().enumerate() {
            let off = piece_offsets[k];
            for i in 0..dim {
                let v = p.pairing_vector(&p.mats[i]);
                for (pidx, &val) in v.iter().enumerate() {
                    bmat[(i, off + pidx)] = val;
                }
            }
        }
        let bbt = &bmat * bmat.transpose();
        let bbt_pinv = sym_pinv(&bbt, TOL_RANK);

        // l2 radius on the kernel complement: L(t) >= ||S t|| / sqrt(K)
        // where S stacks the Frobenius-scaled pieces.
        let l2_radius = {
            let kcount = pieces.len() as f64;
            let ncols = kernel.ncols();
            let nperp = orthonormal_complement(&kernel, dim);
            if nperp.ncols() == 0 {
                0.0
            } else {
                let a = nperp.transpose() * &gram_scaled * &nperp;
                let se = a.symmetric_eigen();
                let lmin = se.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                let _ = ncols;
                if lmin <= 0.0 {
                    f64::INFINITY
                } else {
                    (kcount / lmin).sqrt()
                }
            }
        };
        Ok(BallGeometry { pieces, dim, kernel, bmat, bbt_pinv, l2_radius, piece_offsets })
    }

    pub fn eval(&self, t: &RVec) -> f64 {
        self.pieces.iter().map(|p| p.norm_and_grad(t).0).fold(0.0, f64::max)
    }

    /// Value and a supergradient of `L` at `t`.
    pub fn eval_grad(&self, t: &RVec) -> (f64, RVec) {
        let mut best = (f64::NEG_INFINITY, RVec::zeros(self.dim));
        for p in &self.pieces {
            let (v, g) = p.norm_and_grad(t);
            if v > best.0 {
                best = (v, g);
            }
        }
        (best.0.max(0.0), best.1)
    }

    fn project_out_kernel(&self, t: &RVec) -> RVec {
        if self.kernel.ncols() == 0 {
            return t.clone();
        }
        t - &self.kernel * (self.kernel.transpose() * t)
    }

    fn kernel_component_norm(&self, t: &RVec) -> f64 {
        if self.kernel.ncols() == 0 {
            return 0.0;
        }
        (self.kernel.transpose() * t).norm()
    }

    /// Certified `sup { f·t : L(t) <= 1 }`.
    ///
    /// Errors when `f` has a component along the kernel of the seminorm
    /// beyond relative tolerance (the supremum is infinite there).
    pub fn sup_linear(&self, f: &RVec, opts: &SolverOptions) -> Result<LinearSolve> {
        let fnorm = f.norm();
        if fnorm == 0.0 {
            return Ok(LinearSolve { lower: 0.0, upper: 0.0, witness: RVec::zeros(self.dim), iterations: 0 });
        }
        let kpart = self.kernel_component_norm(f);
        if kpart > 1e-6 * fnorm {
            return Err(Error::Inconsistency(format!(
                "functional has kernel component {kpart:.3e} (relative {:.3e}); \
                 the supremum over the seminorm ball diverges",
                kpart / fnorm
            )));
        }
        let f = self.project_out_kernel(f);

        // ---- Lower bound: multistart supergradient ratio ascent.
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut best_t = RVec::zeros(self.dim);
        let mut best_val = 0.0f64;
        let consider = |t: &RVec, best_t: &mut RVec, best_val: &mut f64, geom: &Self| {
            let l = geom.eval(t);
            if l > 1e-13 {
                let val = f.dot(t) / l;
                if val > *best_val {
                    *best_val = val;
                    *best_t = t / l;
                }
            }
        };
        let mut starts: Vec<RVec> = vec![f.clone()];
        for _ in 1..opts.ascent_starts {
            starts.push(self.project_out_kernel(&linalg::random_real_vector(&mut rng, self.dim)));
        }
        for start in &starts {
            let t = self.ratio_ascent(&f, start, opts.ascent_iters, None);
            consider(&t, &mut best_t, &mut best_val, self);
        }

        // ---- Upper bound: over-relaxed ADMM on min sum ||Z_k||_tr
        // subject to B z = f, with residual-balanced penalty. A second,
        // longer continuation round runs only when the polished gap misses
        // the target.
        let total = *self.piece_offsets.last().unwrap();
        let mut z = self.min_norm_dual(&f);
        let mut x = z.clone();
        let mut u = RVec::zeros(total);
        let mut rho = (1.0 / f.norm().max(1e-12)).clamp(1e-3, 1e3);
        let relax = 1.7f64;
        let mut best_upper = f64::INFINITY;
        let mut iterations = 0u64;
        for round in 0..2 {
            let iters = if round == 0 { opts.admm_iters } else { 8 * opts.admm_iters };
            for it in 0..iters {
                iterations += 1;
                // x-update: per-piece eigenvalue shrink by 1/rho.
                let w = &z - &u;
                for (k, p) in self.pieces.iter().enumerate() {
                    let n = p.matrix_size();
                    let off = self.piece_offsets[k];
                    let y = linalg::params_to_herm(&w.rows(off, n * n).into_owned(), n);
                    let (vals, vecs) = linalg::herm_eigen(&y);
                    let mut d = CMat::zeros(n, n);
                    for (i, &lam) in vals.iter().enumerate() {
                        let s = lam.abs() - 1.0 / rho;
                        d[(i, i)] = c(if s > 0.0 { lam.signum() * s } else { 0.0 }, 0.0);
                    }
                    let shr = &vecs * d * vecs.adjoint();
                    let params = linalg::herm_to_params(&shr);
                    x.rows_mut(off, n * n).copy_from(&params);
                }
                // Over-relaxation, then affine projection and dual update.
                let x_hat = &x * relax + &z * (1.0 - relax);
                let xu = &x_hat + &u;
                let resid = &self.bmat * &xu - &f;
                let z_new = &xu - self.bmat.transpose() * (&self.bbt_pinv * resid);
                let dual_res = rho * (&z_new - &z).norm();
                z = z_new;
                u += &x_hat - &z;
                let prim_res = (&x - &z).norm();
                // Certified readout every few iterations.
                if it % 8 == 7 || it + 1 == iters {
                    let bound = self.certified_dual_bound(&z, &f);
                    if bound < best_upper {
                        best_upper = bound;
                    }
                    if prim_res.max(dual_res) < opts.admm_tol * (1.0 + z.norm()) && it > 40 {
                        break;
                    }
                    // Residual balancing with dual-variable rescaling.
                    if prim_res > 10.0 * dual_res && rho < 1e4 {
                        rho *= 2.0;
                        u /= 2.0;
                    } else if dual_res > 10.0 * prim_res && rho > 1e-4 {
                        rho *= 0.5;
                        u *= 2.0;
                    }
                }
            }
            // Complementary-slackness polish for the lower bound: at the
            // optimum, the support eigenvectors of the dual witness are
            // extreme eigenvectors of the primal piece values, which pins
            // the optimal face by linear equations. A face ascent then
            // closes directions the dual support leaves free.
            if best_upper.is_finite() {
                for cutoff in [1e-2, 3e-3, 1e-4, 1e-5, 1e-6] {
                    if let Some((t, null_basis)) = self.support_polish_candidate(&z, cutoff) {
                        consider(&t, &mut best_t, &mut best_val, self);
                        if null_basis.ncols() > 0 {
                            let refined = self.face_ascent(&f, &t, &null_basis, 80);
                            consider(&refined, &mut best_t, &mut best_val, self);
                        }
                    }
                }
            }
            // Dual polish: rebuild the witness from the primal support
            // atoms, making the upper bound independent of the ADMM rate.
            if best_val > 0.0 {
                if let Some(zp) = self.dual_polish_from_primal(&best_t, &f) {
                    let bound = self.certified_dual_bound(&zp, &f);
                    if bound < best_upper {
                        best_upper = bound;
                    }
                }
            }
            if best_upper - best_val <= opts.gap_target * (1.0 + best_val.abs()) {
                break;
            }
        }
        let upper = best_upper.max(best_val);
        Ok(LinearSolve { lower: best_val, upper, witness: best_t, iterations })
    }

    /// Projected supergradient ascent on `f·t / L(t)`.
    fn ratio_ascent(&self, f: &RVec, start: &RVec, iters: usize, _face: Option<&RMat>) -> RVec {
        let mut t = start.clone();
        if t.norm() < 1e-14 {
            return t;
        }
        t /= t.norm();
        for it in 0..iters {
            let (l, gl) = self.eval_grad(&t);
            if l < 1e-13 {
                break;
            }
            let val = f.dot(&t);
            // Supergradient of f·t / L(t).
            let g = f / l - gl * (val / (l * l));
            let g = self.project_out_kernel(&g);
            let gn = g.norm();
            if gn < 1e-14 {
                break;
            }
            let step = 0.8 / (1.0 + it as f64 * 0.15);
            t += g * (step * t.norm() / gn);
            let tn = t.norm();
            if tn > 0.0 {
                t /= tn;
            }
        }
        t
    }

    /// Ascent of `f·t / L(t)` over the affine face `t0 + span(basis)` in
    /// face coordinates (the face is not a cone, so no renormalization).
    fn face_ascent(&self, f: &RVec, t0: &RVec, basis: &RMat, iters: usize) -> RVec {
        let mut w = RVec::zeros(basis.ncols());
        for it in 0..iters {
            let tt = t0 + basis * &w;
            let (l, gl) = self.eval_grad(&tt);
            if l < 1e-13 {
                break;
            }
            let val = f.dot(&tt);
            let g_full = f / l - gl * (val / (l * l));
            let gw = basis.transpose() * self.project_out_kernel(&g_full);
            let gn = gw.norm();
            if gn < 1e-14 {
                break;
            }
            let step = 0.6 / (1.0 + it as f64 * 0.2) * (1.0 + tt.norm());
            w += gw * (step / gn);
        }
        t0 + basis * w
    }

    /// Builds a dual witness supported on the active eigenvectors of the
    /// primal witness (with `L(t) = 1`): nonnegative weights on rank-one
    /// atoms solving the stationarity equation in least squares. Trailing
    /// negative weights are dropped and the system re-solved.
    fn dual_polish_from_primal(&self, t_hat: &RVec, f: &RVec) -> Option<RVec> {
        let total = *self.piece_offsets.last().unwrap();
        let mut atoms: Vec<RVec> = Vec::new();
        for (k, p) in self.pieces.iter().enumerate() {
            let x = p.apply(t_hat);
            let hermit = match p.sym {
                Sym::Hermitian => x,
                Sym::AntiHermitian => x * c(0.0, 1.0),
            };
            let (vals, vecs) = linalg::herm_eigen(&hermit);
            let n = p.matrix_size();
            let off = self.piece_offsets[k];
            for (i, &lam) in vals.iter().enumerate() {
                if lam.abs() < 1.0 - 1e-6 {
                    continue;
                }
                let v = vecs.column(i);
                let outer = v * v.adjoint();
                let sign = match p.sym {
                    Sym::Hermitian => lam.signum(),
                    Sym::AntiHermitian => -lam.signum(),
                };
                let y = outer * c(sign, 0.0);
                let params = linalg::herm_to_params(&y);
                let mut zat = RVec::zeros(total);
                zat.rows_mut(off, n * n).copy_from(&params);
                atoms.push(zat);
            }
        }
        if atoms.is_empty() || atoms.len() > 4 * self.dim + 8 {
            return None;
        }
        let mut active: Vec<usize> = (0..atoms.len()).collect();
        for _ in 0..4 {
            let mut q = RMat::zeros(self.dim, active.len());
            for (j, &a) in active.iter().enumerate() {
                q.set_column(j, &(&self.bmat * &atoms[a]));
            }
            let qtq = q.transpose() * &q;
            let mu = sym_pinv(&qtq, 1e-12) * (q.transpose() * f);
            let neg: Vec<usize> =
                (0..mu.len()).filter(|&j| mu[j] < -1e-9 * (1.0 + mu.amax())).collect();
            if neg.is_empty() {
                let mut z = RVec::zeros(total);
                for (j, &a) in active.iter().enumerate() {
                    if mu[j] > 0.0 {
                        z += &atoms[a] * mu[j];
                    }
                }
                return Some(z);
            }
            let keep: Vec<usize> = active
                .iter()
                .enumerate()
                .filter(|(j, _)| !neg.contains(j))
                .map(|(_, &a)| a)
                .collect();
            if keep.is_empty() {
                return None;
            }
            active = keep;
        }
        None
    }

    /// Minimum-Frobenius dual start satisfying `B z = f` approximately.
    fn min_norm_dual(&self, f: &RVec) -> RVec {
        self.bmat.transpose() * (&self.bbt_pinv * f)
    }

    /// Trace-norm certificate of a dual point after exact feasibility
    /// accounting: bound = sum ||Z_k||_tr + ||B z - f|| * l2_radius.
    fn certified_dual_bound(&self, z: &RVec, f: &RVec) -> f64 {
        let mut bound = 0.0;
        for (k, p) in self.pieces.iter().enumerate() {
            let n = p.matrix_size();
            let off = self.piece_offsets[k];
            let y = linalg::params_to_herm(&z.rows(off, n * n).into_owned(), n);
            bound += linalg::trace_norm_herm(&y);
        }
        let resid = (&self.bmat * z - f).norm();
        bound + resid * self.l2_radius
    }

    /// Candidate primal point from complementary slackness: every support
    /// eigenpair `(s_i, v_i)` of a dual block forces
    /// `Herm(piece(t)) v_i = s_i v_i` at the optimum (active constraint with
    /// extreme eigenvalue ±1). Solving these equations in least squares
    /// lands on the optimal face.
    fn support_polish_candidate(&self, z: &RVec, cutoff: f64) -> Option<(RVec, RMat)> {
        let mut rows: Vec<RVec> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for (k, p) in self.pieces.iter().enumerate() {
            let n = p.matrix_size();
            let off = self.piece_offsets[k];
            let y = linalg::params_to_herm(&z.rows(off, n * n).into_owned(), n);
            let (vals, vecs) = linalg::herm_eigen(&y);
            let vmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if vmax < 1e-10 {
                continue;
            }
            for (i, &lam) in vals.iter().enumerate() {
                if lam.abs() <= cutoff * vmax {
                    continue;
                }
                let v = vecs.column(i).into_owned();
                // Pairing conventions flip the aligned sign for the
                // anti-Hermitian embedding Z = iY.
                let s = match p.sym {
                    Sym::Hermitian => lam.signum(),
                    Sym::AntiHermitian => -lam.signum(),
                };
                // Herm-embedded columns: (i * M_j for anti-Hermitian pieces).
                let cols: Vec<nalgebra::DVector<num_complex::Complex64>> = p
                    .mats
                    .iter()
                    .map(|m| match p.sym {
                        Sym::Hermitian => m * &v,
                        Sym::AntiHermitian => (m * &v) * c(0.0, 1.0),
                    })
                    .collect();
                for e in 0..n {
                    let mut row_re = RVec::zeros(self.dim);
                    let mut row_im = RVec::zeros(self.dim);
                    for (j, col) in cols.iter().enumerate() {
                        row_re[j] = col[e].re;
                        row_im[j] = col[e].im;
                    }
                    rows.push(row_re);
                    rhs.push(s * v[e].re);
                    rows.push(row_im);
                    rhs.push(s * v[e].im);
                }
            }
        }
        if rows.is_empty() {
            return None;
        }
        let mut emat = RMat::zeros(rows.len(), self.dim);
        for (i, r) in rows.iter().enumerate() {
            emat.set_row(i, &r.transpose());
        }
        let bvec = RVec::from_vec(rhs);
        let svd = nalgebra::SVD::new(emat.clone(), true, true);
        let smax = svd.singular_values.max();
        let t = svd.solve(&bvec, 1e-10 * smax).ok()?;
        let t = self.project_out_kernel(&t);
        if t.norm() < 1e-12 {
            return None;
        }
        // Directions the support equations leave free (the optimal face).
        let null_basis = linalg::real_kernel_basis(&emat, 1e-8);
        Some((t, null_basis))
    }

    /// Frobenius-relaxation upper bound for `sup{||Phi(t)|| : L(t) <= 1}`.
    /// Requires `Phi` to vanish on the seminorm kernel; returns infinity
    /// otherwise.
    pub fn frobenius_cap(&self, phi: &MatrixPiece) -> f64 {
        for j in 0..self.kernel.ncols() {
            let kv = self.kernel.column(j).into_owned();
            if linalg::frob_norm(&phi.apply(&kv)) > 1e-9 {
                return f64::INFINITY;
            }
        }
        let nperp = orthonormal_complement(&self.kernel, self.dim);
        if nperp.ncols() == 0 {
            return 0.0;
        }
        let kcount = self.pieces.len() as f64;
        let mut gram_scaled = RMat::zeros(self.dim, self.dim);
        for p in &self.pieces {
            gram_scaled += p.gram() / p.matrix_size().max(1) as f64;
        }
        let gphi = phi.gram();
        let a = nperp.transpose() * gphi * &nperp;
        let b = nperp.transpose() * gram_scaled * &nperp;
        let bc = match b.clone().cholesky() {
            Some(ch) => ch,
            None => return f64::INFINITY,
        };
        // lambda_max of B^{-1/2} A B^{-1/2} via solving B L = A ... use
        // inverse through Cholesky.
        let binv = bc.inverse();
        let m = &binv * a;
        // Non-symmetric product has the same spectrum as the symmetric
        // pencil; take the largest real eigenvalue via symmetrized form.
        let sym = (&m + m.transpose()) * 0.5;
        let se = sym.symmetric_eigen();
        let lmax = se.eigenvalues.iter().cloned().fold(0.0, f64::max);
        (lmax.max(0.0) * kcount).sqrt()
    }

    /// Certified `sup{ J(Phi(t)) : L(t) <= 1 }` for a matrix-valued map.
    pub fn sup_map_norm(
        &self,
        phi: &MatrixPiece,
        kind: NormKind,
        caps: &[f64],
        opts: &SolverOptions,
    ) -> Result<MapNormSolve> {
        let hphi = phi.matrix_size();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e3779b97f4a7c15);
        let eval_obj = |t: &RVec| -> f64 {
            let x = phi.apply(t);
            match kind {
                NormKind::OpNorm => linalg::op_norm(&x),
                NormKind::Spread => {
                    let (vals, _) = linalg::herm_eigen(&x);
                    if vals.is_empty() {
                        0.0
                    } else {
                        vals[vals.len() - 1] - vals[0]
                    }
                }
            }
        };
        let mut best_val = 0.0f64;
        let mut best_t: Option<RVec> = None;
        let mut iterations = 0u64;

        // Functional from a direction pair / extreme eigvectors of X.
        let functional_at = |x: &CMat| -> RVec {
            let mut f = RVec::zeros(self.dim);
            match kind {
                NormKind::OpNorm => {
                    let hermit = match phi.sym {
                        Sym::Hermitian => x.clone(),
                        Sym::AntiHermitian => x * c(0.0, 1.0),
                    };
                    let (vals, vecs) = linalg::herm_eigen(&hermit);
                    let n = vals.len();
                    let (idx, sign) =
                        if vals[n - 1].abs() >= vals[0].abs() { (n - 1, 1.0) } else { (0, -1.0) };
                    let v = vecs.column(idx);
                    for i in 0..self.dim {
                        let mi = match phi.sym {
                            Sym::Hermitian => phi.mats[i].clone(),
                            Sym::AntiHermitian => &phi.mats[i] * c(0.0, 1.0),
                        };
                        f[i] = sign * (v.adjoint() * mi * v)[(0, 0)].re;
                    }
                }
                NormKind::Spread => {
                    let (_, vecs) = linalg::herm_eigen(x);
                    let n = vecs.ncols();
                    let vmax = vecs.column(n - 1);
                    let vmin = vecs.column(0);
                    for i in 0..self.dim {
                        let a = (vmax.adjoint() * &phi.mats[i] * vmax)[(0, 0)].re;
                        let b = (vmin.adjoint() * &phi.mats[i] * vmin)[(0, 0)].re;
                        f[i] = a - b;
                    }
                }
            }
            f
        };

        // Large problems skip the alternation (whose inner solves carry
        // trace-norm duals) in favor of direct supergradient ratio ascent;
        // small problems get the exact-inner-solve alternation with basis
        // seeding, which lands on polyhedral optima exactly.
        let big_problem = self.pieces.iter().map(|p| p.matrix_size()).max().unwrap_or(0) > 24;
        if big_problem {
            let mut starts: Vec<RVec> = Vec::new();
            for _ in 0..(opts.ascent_starts.max(3)) {
                starts.push(self.project_out_kernel(&linalg::random_real_vector(&mut rng, self.dim)));
            }
            for start in starts {
                let mut t = start;
                if t.norm() < 1e-14 {
                    continue;
                }
                t /= t.norm();
                for it in 0..opts.ascent_iters {
                    iterations += 1;
                    let (l, gl) = self.eval_grad(&t);
                    if l < 1e-13 {
                        break;
                    }
                    let (v, gv) = phi_norm_grad(phi, &t, kind);
                    let g = gv / l - gl * (v / (l * l));
                    let g = self.project_out_kernel(&g);
                    let gn = g.norm();
                    if gn < 1e-14 {
                        break;
                    }
                    let step = 0.7 / (1.0 + it as f64 * 0.12);
                    t += g * (step * t.norm() / gn);
                    let tn = t.norm();
                    if tn > 0.0 {
                        t /= tn;
                    }
                }
                let l = self.eval(&t);
                if l > 1e-13 {
                    let val = eval_obj(&(&t / l));
                    if val > best_val {
                        best_val = val;
                        best_t = Some(&t / l);
                    }
                }
            }
        } else {
            // Alternation starts: random directions and random domain points.
            let inner_opts = opts.locate();
            let mut seeds: Vec<CMat> = Vec::new();
            for _ in 0..opts.alternation_starts {
                let t0 = self.project_out_kernel(&linalg::random_real_vector(&mut rng, self.dim));
                seeds.push(phi.apply(&t0));
            }
            if hphi <= 12 {
                // Basis-pair seeds for small image spaces.
                for i in 0..hphi {
                    let mut x = CMat::zeros(hphi, hphi);
                    x[(i, i)] = c(1.0, 0.0);
                    seeds.push(x);
                }
                for i in 0..hphi {
                    for j in 0..i {
                        let mut x = CMat::zeros(hphi, hphi);
                        x[(i, j)] = c(1.0, 0.0);
                        x[(j, i)] = c(1.0, 0.0);
                        if phi.sym == Sym::AntiHermitian {
                            x[(i, j)] = c(0.0, 1.0);
                            x[(j, i)] = c(0.0, -1.0);
                        }
                        seeds.push(x);
                    }
                }
            }
            for seed_x in seeds {
                let mut x = seed_x;
                for _ in 0..opts.alternation_rounds {
                    let f = functional_at(&x);
                    if f.norm() < 1e-13 {
                        break;
                    }
                    match self.sup_linear(&f, &inner_opts) {
                        Ok(sol) => {
                            iterations += sol.iterations;
                            let val = eval_obj(&sol.witness);
                            if val > best_val {
                                best_val = val;
                                best_t = Some(sol.witness.clone());
                            }
                            x = phi.apply(&sol.witness);
                        }
                        Err(_) => break,
                    }
                }
            }
        }

        // Upper bound candidates.
        let mut upper = f64::INFINITY;
        for &cap in caps {
            upper = upper.min(cap);
        }
        let frob = self.frobenius_cap(phi);
        let frob = match kind {
            NormKind::OpNorm => frob,
            // spread(X) <= 2 min_s ||X - s|| <= 2 ||X|| <= 2 ||X||_F; the
            // Frobenius cap already bounds ||X||_F.
            NormKind::Spread => 2.0 * frob,
        };
        upper = upper.min(frob);
        if self.slice_dim() <= 3 {
            if let Some(bb) = self.branch_and_bound_upper(phi, kind, best_val, opts) {
                upper = upper.min(bb);
            }
        }
        let upper = upper.max(best_val);
        Ok(MapNormSolve { lower: best_val, upper, witness: best_t, iterations })
    }

    pub fn slice_dim(&self) -> usize {
        self.dim - self.kernel.ncols()
    }

    /// Certified spherical branch-and-bound on the kernel complement, for
    /// slice dimensions 1..3. Cells are geodesic simplices whose midpoint
    /// subdivision covers the parent exactly, so every returned bound is a
    /// genuine upper bound on `sup J(Phi(t))/L(t)`.
    fn branch_and_bound_upper(
        &self,
        phi: &MatrixPiece,
        kind: NormKind,
        best_known: f64,
        opts: &SolverOptions,
    ) -> Option<f64> {
        let target_gap = opts.bb_target;
        use std::cmp::Ordering;
        use std::collections::BinaryHeap;
        let d = self.slice_dim();
        if d == 0 || d > 3 {
            return None;
        }
        // Phi must vanish on the kernel for the slice restriction to bound
        // the full supremum.
        for j in 0..self.kernel.ncols() {
            let kv = self.kernel.column(j).into_owned();
            if linalg::frob_norm(&phi.apply(&kv)) > 1e-9 {
                return None;
            }
        }
        let nperp = orthonormal_complement(&self.kernel, self.dim);
        // Precomposed slice pieces: evaluations in s-coordinates avoid the
        // per-node change of basis.
        let compose = |p: &MatrixPiece| -> MatrixPiece {
            let hsz = p.matrix_size();
            let mats: Vec<CMat> = (0..nperp.ncols())
                .map(|i| {
                    let mut m = CMat::zeros(hsz, hsz);
                    for (j, pm) in p.mats.iter().enumerate() {
                        let w = nperp[(j, i)];
                        if w != 0.0 {
                            m += pm * c(w, 0.0);
                        }
                    }
                    m
                })
                .collect();
            MatrixPiece::new(mats, p.sym)
        };
        let slice_pieces: Vec<MatrixPiece> =
            self.pieces.iter().map(|p| compose(p).compress_support()).collect();
        let slice_phi = compose(phi).compress_support();
        // Chord-Lipschitz constants of s -> J(Phi(Ns)) and s -> L(Ns):
        // both functions are positively homogeneous seminorms in s, hence
        // Lipschitz with constant sup over the unit sphere.
        let lip_num = {
            let g = nperp.transpose() * phi.gram() * &nperp;
            let se = g.symmetric_eigen();
            let lmax = se.eigenvalues.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt();
            match kind {
                NormKind::OpNorm => lmax,
                NormKind::Spread => 2.0 * lmax,
            }
        };
        let lip_den = {
            let mut g = RMat::zeros(self.dim, self.dim);
            for p in &self.pieces {
                g += p.gram();
            }
            let gp = nperp.transpose() * g * &nperp;
            let se = gp.symmetric_eigen();
            se.eigenvalues.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
        };
        let eval_num = |s: &RVec| -> f64 {
            let x = slice_phi.apply(s);
            match kind {
                NormKind::OpNorm => linalg::op_norm(&x),
                NormKind::Spread => {
                    let (vals, _) = linalg::herm_eigen(&x);
                    vals[vals.len() - 1] - vals[0]
                }
            }
        };
        // Denominator value and a subgradient in the slice coordinates.
        let eval_den_grad = |s: &RVec| -> (f64, RVec) {
            let mut bestv = (f64::NEG_INFINITY, RVec::zeros(s.len()));
            for p in &slice_pieces {
                let (v, g) = p.norm_and_grad(s);
                if v > bestv.0 {
                    bestv = (v, g);
                }
            }
            (bestv.0.max(0.0), bestv.1)
        };
        let _eval_ratio = |s: &RVec| -> (f64, f64, f64) {
            let num = eval_num(s);
            let (den, _) = eval_den_grad(s);
            (if den > 1e-14 { num / den } else { 0.0 }, num, den)
        };

        // A cell is a geodesic simplex given by up to 3 unit vertices.
        struct Cell {
            verts: Vec<RVec>,
            bound: f64,
        }
        struct HeapItem {
            bound: f64,
            idx: usize,
        }
        impl PartialEq for HeapItem {
            fn eq(&self, other: &Self) -> bool {
                self.bound == other.bound && self.idx == other.idx
            }
        }
        impl Eq for HeapItem {}
        impl PartialOrd for HeapItem {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for HeapItem {
            fn cmp(&self, other: &Self) -> Ordering {
                self.bound.total_cmp(&other.bound).then(self.idx.cmp(&other.idx))
            }
        }
        let mut best = best_known;
        let mut arena: Vec<Cell> = Vec::new();
        let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
        let make_cell =
            |verts: Vec<RVec>, best: &mut f64, arena: &mut Vec<Cell>, heap: &mut BinaryHeap<HeapItem>| {
                let mut center = RVec::zeros(d);
                for v in &verts {
                    center += v;
                }
                let n = center.norm();
                if n < 1e-12 {
                    // Degenerate (antipodal) cell: bound crudely by splitting
                    // later; use the first vertex as center with radius 2.
                    center = verts[0].clone();
                } else {
                    center /= n;
                }
                let radius =
                    verts.iter().map(|v| (v - &center).norm()).fold(0.0, f64::max);
                let num_c = eval_num(&center);
                let (den_c, gden) = eval_den_grad(&center);
                if den_c > 1e-14 {
                    let ratio = num_c / den_c;
                    if ratio > *best {
                        *best = ratio;
                    }
                }
                // Lipschitz cell bound.
                let den_low_lip = den_c - lip_den * radius;
                let bound_lip = if den_low_lip <= 1e-12 {
                    f64::INFINITY
                } else {
                    (num_c + lip_num * radius) / den_low_lip
                };
                // Convexity cell bound, accurate for flat ratio landscapes:
                // on the radial hull of unit vertices, the homogeneous
                // numerator is bounded above by vertex values over the
                // minimal hull norm, and the denominator from below by its
                // subgradient minorant (both functions are nonnegative
                // convex positively homogeneous, and hull norms stay <= 1).
                let mut num_vmax = 0.0f64;
                for v in &verts {
                    let nv = eval_num(v);
                    if nv > num_vmax {
                        num_vmax = nv;
                    }
                }
                let rho_min = min_hull_norm(&verts);
                let den_low_cvx = den_c
                    + verts
                        .iter()
                        .map(|v| gden.dot(&(v - &center)))
                        .fold(f64::INFINITY, f64::min)
                        .min(0.0);
                let bound_cvx = if rho_min <= 1e-12 || den_low_cvx <= 1e-12 {
                    f64::INFINITY
                } else {
                    (num_vmax / rho_min) / den_low_cvx
                };
                let bound = bound_lip.min(bound_cvx);
                let idx = arena.len();
                arena.push(Cell { verts, bound });
                heap.push(HeapItem { bound, idx });
            };
        match d {
            1 => {
                for s in [-1.0f64, 1.0] {
                    make_cell(vec![RVec::from_vec(vec![s])], &mut best, &mut arena, &mut heap);
                }
            }
            2 => {
                // Quarter-circle arcs, vertices are the arc endpoints.
                let pts: Vec<RVec> = (0..8)
                    .map(|i| {
                        let th = std::f64::consts::TAU * i as f64 / 8.0;
                        RVec::from_vec(vec![th.cos(), th.sin()])
                    })
                    .collect();
                for i in 0..8 {
                    make_cell(
                        vec![pts[i].clone(), pts[(i + 1) % 8].clone()],
                        &mut best,
                        &mut arena,
                        &mut heap,
                    );
                }
            }
            3 => {
                let verts: Vec<RVec> = vec![
                    RVec::from_vec(vec![1.0, 0.0, 0.0]),
                    RVec::from_vec(vec![-1.0, 0.0, 0.0]),
                    RVec::from_vec(vec![0.0, 1.0, 0.0]),
                    RVec::from_vec(vec![0.0, -1.0, 0.0]),
                    RVec::from_vec(vec![0.0, 0.0, 1.0]),
                    RVec::from_vec(vec![0.0, 0.0, -1.0]),
                ];
                let faces: [[usize; 3]; 8] = [
                    [0, 2, 4],
                    [0, 2, 5],
                    [0, 3, 4],
                    [0, 3, 5],
                    [1, 2, 4],
                    [1, 2, 5],
                    [1, 3, 4],
                    [1, 3, 5],
                ];
                for f in faces {
                    make_cell(
                        vec![verts[f[0]].clone(), verts[f[1]].clone(), verts[f[2]].clone()],
                        &mut best,
                        &mut arena,
                        &mut heap,
                    );
                }
            }
            _ => return None,
        }
        let budget = opts.bb_budget;
        let mut processed = 0usize;
        let mut final_bound = best;
        while let Some(item) = heap.pop() {
            // Stale heap entries are skipped.
            if arena[item.idx].bound != item.bound {
                continue;
            }
            if item.bound <= best + target_gap || processed >= budget {
                final_bound = item.bound.max(best);
                break;
            }
            processed += 1;
            let verts = arena[item.idx].verts.clone();
            arena[item.idx].bound = f64::NEG_INFINITY; // mark consumed
            let unit_mid = |a: &RVec, b: &RVec| -> RVec {
                let m = a + b;
                let n = m.norm();
                if n < 1e-12 {
                    a.clone()
                } else {
                    m / n
                }
            };
            match verts.len() {
                1 => {
                    // Point cells cannot be refined; their bound stands.
                    final_bound = item.bound.max(best);
                    break;
                }
                2 => {
                    let m = unit_mid(&verts[0], &verts[1]);
                    make_cell(vec![verts[0].clone(), m.clone()], &mut best, &mut arena, &mut heap);
                    make_cell(vec![m, verts[1].clone()], &mut best, &mut arena, &mut heap);
                }
                _ => {
                    let m01 = unit_mid(&verts[0], &verts[1]);
                    let m12 = unit_mid(&verts[1], &verts[2]);
                    let m02 = unit_mid(&verts[0], &verts[2]);
                    make_cell(
                        vec![verts[0].clone(), m01.clone(), m02.clone()],
                        &mut best,
                        &mut arena,
                        &mut heap,
                    );
                    make_cell(
                        vec![verts[1].clone(), m01.clone(), m12.clone()],
                        &mut best,
                        &mut arena,
                        &mut heap,
                    );
                    make_cell(
                        vec![verts[2].clone(), m02.clone(), m12.clone()],
                        &mut best,
                        &mut arena,
                        &mut heap,
                    );
                    make_cell(vec![m01, m12, m02], &mut best, &mut arena, &mut heap);
                }
            }
            if heap.is_empty() {
                final_bound = best;
            }
        }
        Some(final_bound.max(best))
    }
}

/// Result of a map-norm maximization.
#[derive(Debug, Clone)]
pub struct MapNormSolve {
    pub lower: f64,
    pub upper: f64,
    pub witness: Option<RVec>,
    pub iterations: u64,
}

/// Value and supergradient of the objective norm of `phi` at `t`.
fn phi_norm_grad(phi: &MatrixPiece, t: &RVec, kind: NormKind) -> (f64, RVec) {
    match kind {
        NormKind::OpNorm => phi.norm_and_grad(t),
        NormKind::Spread => {
            let x = phi.apply(t);
            let (vals, vecs) = linalg::herm_eigen(&x);
            let n = vals.len();
            let vmax = vecs.column(n - 1);
            let vmin = vecs.column(0);
            let mut g = RVec::zeros(phi.dim());
            for i in 0..phi.dim() {
                let a = (vmax.adjoint() * &phi.mats[i] * vmax)[(0, 0)].re;
                let b = (vmin.adjoint() * &phi.mats[i] * vmin)[(0, 0)].re;
                g[i] = a - b;
            }
            (vals[n - 1] - vals[0], g)
        }
    }
}

/// Minimal Euclidean norm over the convex hull of up to three points.
fn min_hull_norm(verts: &[RVec]) -> f64 {
    let seg_min = |a: &RVec, b: &RVec| -> f64 {
        let d = b - a;
        let dd = d.dot(&d);
        let mu = if dd > 0.0 { (-a.dot(&d) / dd).clamp(0.0, 1.0) } else { 0.0 };
        (a + d * mu).norm()
    };
    match verts.len() {
        0 => 0.0,
        1 => verts[0].norm(),
        2 => seg_min(&verts[0], &verts[1]),
        _ => {
            let (a, b, cc) = (&verts[0], &verts[1], &verts[2]);
            let e1 = b - a;
            let e2 = cc - a;
            // Normal equations for the unconstrained minimizer.
            let g11 = e1.dot(&e1);
            let g12 = e1.dot(&e2);
            let g22 = e2.dot(&e2);
            let r1 = -a.dot(&e1);
            let r2 = -a.dot(&e2);
            let det = g11 * g22 - g12 * g12;
            let mut best = f64::INFINITY;
            if det.abs() > 1e-14 {
                let s = (r1 * g22 - r2 * g12) / det;
                let u = (g11 * r2 - g12 * r1) / det;
                if s >= 0.0 && u >= 0.0 && s + u <= 1.0 {
                    best = (a + &e1 * s + &e2 * u).norm();
                }
            }
            best.min(seg_min(a, b)).min(seg_min(a, cc)).min(seg_min(b, cc))
        }
    }
}

fn orthonormal_complement(kernel: &RMat, dim: usize) -> RMat {
    if kernel.ncols() == 0 {
        return RMat::identity(dim, dim);
    }
    let proj = RMat::identity(dim, dim) - kernel * kernel.transpose();
    // Orthonormal basis of the projector's range.
    let se = proj.clone().symmetric_eigen();
    let mut cols = Vec::new();
    for i in 0..dim {
        if se.eigenvalues[i] > 0.5 {
            cols.push(se.eigenvectors.column(i).into_owned());
        }
    }
    let mut out = RMat::zeros(dim, cols.len());
    for (j, v) in cols.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

fn sym_pinv(m: &RMat, tol: f64) -> RMat {
    let se = m.clone().symmetric_eigen();
    let n = m.nrows();
    let lmax = se.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let mut d = RMat::zeros(n, n);
    for i in 0..n {
        let lam = se.eigenvalues[i];
        d[(i, i)] = if lam > tol * lmax && lam > 0.0 { 1.0 / lam } else { 0.0 };
    }
    &se.eigenvectors * d * se.eigenvectors.transpose()
}




/// Minimize `L(t_fixed ⊕ t_free)` over the free coordinates with projected
/// subgradient descent; returns the achieved value and the minimizer.
/// `free_mask[i]` marks coordinates allowed to vary.
pub fn minimize_over_fiber(
    geom: &BallGeometry,
    start: &RVec,
    free_mask: &[bool],
    iters: usize,
) -> (f64, RVec) {
    let mut t = start.clone();
    let mut best = geom.eval(&t);
    let mut best_t = t.clone();
    let mut step = 0.5;
    for _ in 0..iters {
        let (v, g) = geom.eval_grad(&t);
        if v < best {
            best = v;
            best_t = t.clone();
        }
        let mut gm = g;
        for (i, &fm) in free_mask.iter().enumerate() {
            if !fm {
                gm[i] = 0.0;
            }
        }
        let gn = gm.norm();
        if gn < 1e-13 {
            break;
        }
        t -= gm * (step * (1.0 + t.norm()) / gn);
        step *= 0.97;
    }
    let v = geom.eval(&t);
    if v < best {
        best = v;
        best_t = t;
    }
    (best, best_t)
}

pub type DM = DMatrix<f64>;

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-point Lipschitz geometry: t in R^2 (function values), L =
    /// |t_0 - t_1| encoded as a 2x2 anti-Hermitian commutator piece.
    fn two_point_geometry() -> BallGeometry {
        // [D, diag(t0,t1)] with D = swap: entries (t1-t0) off-diagonal.
        let m0 = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let m1 = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        BallGeometry::new(vec![MatrixPiece::new(vec![m0, m1], Sym::AntiHermitian)]).unwrap()
    }

    #[test]
    fn kernel_is_constants() {
        let g = two_point_geometry();
        assert_eq!(g.kernel.ncols(), 1);
        let k = g.kernel.column(0);
        assert!((k[0] - k[1]).abs() < 1e-12);
    }

    #[test]
    fn linear_sup_on_two_point_space() {
        // sup { t_0 - t_1 : |t_0 - t_1| <= 1 } = 1.
        let g = two_point_geometry();
        let f = RVec::from_vec(vec![1.0, -1.0]);
        let sol = g.sup_linear(&f, &SolverOptions::with_seed(3)).unwrap();
        assert!((sol.lower - 1.0).abs() < 1e-7, "lower {}", sol.lower);
        assert!((sol.upper - 1.0).abs() < 1e-6, "upper {}", sol.upper);
        assert!(sol.lower <= sol.upper + 1e-12);
    }

    #[test]
    fn kernel_functional_rejected() {
        let g = two_point_geometry();
        let f = RVec::from_vec(vec![1.0, 1.0]);
        assert!(g.sup_linear(&f, &SolverOptions::default()).is_err());
    }

    #[test]
    fn map_norm_on_two_point_space() {
        // Phi(t) = diag(t0 - t1, 0): sup over ball is 1.
        let g = two_point_geometry();
        let p0 = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let p1 = CMat::from_row_slice(2, 2, &[c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let phi = MatrixPiece::new(vec![p0, p1], Sym::Hermitian);
        let sol = g.sup_map_norm(&phi, NormKind::OpNorm, &[], &SolverOptions::with_seed(5)).unwrap();
        assert!((sol.lower - 1.0).abs() < 1e-7, "lower {}", sol.lower);
        assert!(sol.upper >= sol.lower - 1e-12);
        assert!(sol.upper <= 1.0 + 1e-5, "upper {}", sol.upper);
    }

    #[test]
    fn determinism_of_solves() {
        let g = two_point_geometry();
        let f = RVec::from_vec(vec![0.3, -0.3]);
        let a = g.sup_linear(&f, &SolverOptions::with_seed(9)).unwrap();
        let b = g.sup_linear(&f, &SolverOptions::with_seed(9)).unwrap();
        assert_eq!(a.lower.to_bits(), b.lower.to_bits());
        assert_eq!(a.upper.to_bits(), b.upper.to_bits());
    }
}

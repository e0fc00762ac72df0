//! Monge-Kantorovich distances on states with primal/dual certificates,
//! the induced metric and length on *-automorphisms, quantum diameter, and
//! Hausdorff gaps between sampled state-space images.
//!
//! All maxima over seminorm balls are certified brackets: the lower bound is
//! the value of an explicit feasible element, the upper bound a trace-norm
//! dual witness or an analytic cap. Brackets are never collapsed to scalars.

pub mod engine;
pub mod lp;

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finalg::{state_pairing, AlgebraElement, BlockAlgebra, State};
use crate::linalg::{self, c, CMat, RVec};
use crate::seminorm::{slice_ball_sample, LipSeminorm};
use crate::tol::TOL_NORM;
use engine::{BallGeometry, MatrixPiece, NormKind, SolverOptions, Sym};

/// A certified two-sided bound.
#[derive(Debug, Clone, Serialize)]
pub struct CertifiedValue {
    pub quantity: String,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub method: String,
    pub seed: u64,
    pub iterations: u64,
}

impl CertifiedValue {
    pub fn new(
        quantity: impl Into<String>,
        lower: f64,
        upper: f64,
        method: impl Into<String>,
        seed: u64,
        iterations: u64,
    ) -> Self {
        let upper = upper.max(lower);
        CertifiedValue {
            quantity: quantity.into(),
            lower,
            upper,
            gap: upper - lower,
            method: method.into(),
            seed,
            iterations,
        }
    }

    pub fn exact(quantity: impl Into<String>, value: f64) -> Self {
        CertifiedValue::new(quantity, value, value, "exact", 0, 0)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        v >= self.lower - slack && v <= self.upper + slack
    }

    pub fn overlaps(&self, other: &CertifiedValue, slack: f64) -> bool {
        self.lower - slack <= other.upper && other.lower - slack <= self.upper
    }
}

/// A verified *-automorphism of a block algebra, stored as the complex
/// matrix of its action on matrix-unit coordinates.
#[derive(Debug, Clone)]
pub struct Automorphism {
    pub owner: Arc<BlockAlgebra>,
    pub kind: AutoKind,
    mat: CMat,
    pub verified: bool,
}

#[derive(Debug, Clone)]
pub enum AutoKind {
    Inner(AlgebraElement),
    Linear,
}

impl Automorphism {
    pub fn identity(owner: &Arc<BlockAlgebra>) -> Self {
        let n = owner.total_dim();
        Automorphism {
            owner: owner.clone(),
            kind: AutoKind::Linear,
            mat: linalg::identity(n),
            verified: true,
        }
    }

    /// `Ad(u)` for a unitary element.
    pub fn inner(u: &AlgebraElement) -> Result<Self> {
        let uu = u.mul(&u.adjoint());
        let unit = AlgebraElement::unit(&u.owner);
        if uu.sub(&unit).frob() > TOL_NORM * (1.0 + u.frob()) {
            return Err(Error::NotAutomorphism("inner generator is not unitary".into()));
        }
        let basis = u.owner.matrix_unit_basis();
        let n = basis.len();
        let mut mat = CMat::zeros(n, n);
        let ustar = u.adjoint();
        for (k, b) in basis.iter().enumerate() {
            let img = u.mul(b).mul(&ustar);
            mat.set_column(k, &img.coords());
        }
        let a = Automorphism { owner: u.owner.clone(), kind: AutoKind::Inner(u.clone()), mat, verified: false };
        a.verify()
    }

    /// A linear coordinate action, verified to be a *-automorphism.
    pub fn linear(owner: &Arc<BlockAlgebra>, mat: CMat) -> Result<Self> {
        let n = owner.total_dim();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch("automorphism matrix size".into()));
        }
        let a = Automorphism { owner: owner.clone(), kind: AutoKind::Linear, mat, verified: false };
        a.verify()
    }

    /// Unverified wrapper (for exercising the error paths).
    pub fn linear_unchecked(owner: &Arc<BlockAlgebra>, mat: CMat) -> Self {
        Automorphism { owner: owner.clone(), kind: AutoKind::Linear, mat, verified: false }
    }

    /// Automorphism of a commutative (all blocks one-dimensional) algebra
    /// induced by a point permutation: `alpha(e_i) = e_{perm[i]}`.
    pub fn permutation(owner: &Arc<BlockAlgebra>, perm: &[usize]) -> Result<Self> {
        if owner.blocks.iter().any(|&d| d != 1) {
            return Err(Error::NotAutomorphism(
                "permutation automorphisms need a commutative algebra".into(),
            ));
        }
        let n = owner.total_dim();
        if perm.len() != n {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        let mut seen = vec![false; n];
        let mut mat = CMat::zeros(n, n);
        for (i, &pi) in perm.iter().enumerate() {
            if pi >= n || seen[pi] {
                return Err(Error::NotAutomorphism("not a permutation".into()));
            }
            seen[pi] = true;
            mat[(pi, i)] = c(1.0, 0.0);
        }
        Automorphism::linear(owner, mat)
    }

    fn verify(mut self) -> Result<Self> {
        let basis = self.owner.matrix_unit_basis();
        let unit = AlgebraElement::unit(&self.owner);
        let img_unit = self.apply(&unit);
        if img_unit.sub(&unit).frob() > TOL_NORM {
            return Err(Error::NotAutomorphism("does not fix the unit".into()));
        }
        let imgs: Vec<AlgebraElement> = basis.iter().map(|b| self.apply(b)).collect();
        for (i, a) in basis.iter().enumerate() {
            if imgs[i].adjoint().sub(&self.apply(&a.adjoint())).frob() > TOL_NORM {
                return Err(Error::NotAutomorphism("does not preserve adjoints".into()));
            }
            for (j, b) in basis.iter().enumerate() {
                let lhs = self.apply(&a.mul(b));
                if lhs.sub(&imgs[i].mul(&imgs[j])).frob() > TOL_NORM {
                    return Err(Error::NotAutomorphism("not multiplicative".into()));
                }
            }
        }
        if self.mat.clone().try_inverse().is_none() {
            return Err(Error::NotAutomorphism("not invertible".into()));
        }
        self.verified = true;
        Ok(self)
    }

    pub fn apply(&self, a: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::from_coords(&self.owner, &(&self.mat * a.coords()))
    }

    pub fn compose(&self, other: &Automorphism) -> Result<Self> {
        if !self.owner.same_structure(&other.owner) {
            return Err(Error::OwnerMismatch("composition across different algebras".into()));
        }
        Ok(Automorphism {
            owner: self.owner.clone(),
            kind: AutoKind::Linear,
            mat: &self.mat * &other.mat,
            verified: self.verified && other.verified,
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .mat
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotAutomorphism("not invertible".into()))?;
        let kind = match &self.kind {
            AutoKind::Inner(u) => AutoKind::Inner(u.adjoint()),
            AutoKind::Linear => AutoKind::Linear,
        };
        Ok(Automorphism { owner: self.owner.clone(), kind, mat: inv, verified: self.verified })
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Max distance to another automorphism on the matrix-unit basis.
    pub fn basis_distance(&self, other: &Automorphism) -> f64 {
        linalg::frob_norm(&(&self.mat - &other.mat))
    }
}

/// A quantum compact metric space handle: a Lipschitz seminorm with its
/// cached ball geometry and diameter bracket.
#[derive(Debug)]
pub struct Qcms {
    pub lip: LipSeminorm,
    pub geom: BallGeometry,
    qdiam_cache: OnceLock<CertifiedValue>,
}

impl Qcms {
    pub fn new(lip: LipSeminorm) -> Result<Self> {
        let piece = MatrixPiece::new(lip.commutator_basis().to_vec(), Sym::AntiHermitian);
        let geom = BallGeometry::new(vec![piece])?;
        Ok(Qcms { lip, geom, qdiam_cache: OnceLock::new() })
    }

    pub fn algebra(&self) -> &Arc<BlockAlgebra> {
        &self.lip.triple.algebra
    }

    pub fn require_metric(&self) -> Result<()> {
        if !self.lip.metric {
            return Err(Error::NotMetric(format!(
                "seminorm kernel has dimension {}",
                self.lip.kernel_dim
            )));
        }
        Ok(())
    }

    /// Functional coordinates of `a -> phi(a) - psi(a)` on the sa basis.
    fn difference_functional(&self, phi: &State, psi: &State) -> Result<RVec> {
        let basis = self.lip.sa_basis();
        let mut f = RVec::zeros(basis.len());
        for (i, b) in basis.iter().enumerate() {
            let v = state_pairing(phi, b)? - state_pairing(psi, b)?;
            f[i] = v.re;
        }
        Ok(f)
    }

    /// Map piece of `a -> blockdiag(alpha(a) - beta(a))` on the sa basis.
    fn difference_map(&self, alpha: &Automorphism, beta: &Automorphism) -> MatrixPiece {
        let mats = self
            .lip
            .sa_basis()
            .iter()
            .map(|b| {
                let d = alpha.apply(b).sub(&beta.apply(b));
                d.block_diagonal()
            })
            .collect();
        MatrixPiece::new(mats, Sym::Hermitian)
    }

    /// Cached diameter bracket (fixed internal seed for reproducibility).
    pub fn qdiam_cached(&self) -> Result<&CertifiedValue> {
        if self.qdiam_cache.get().is_none() {
            let v = qdiam(self, &SolverOptions::with_seed(0xD1A))?;
            let _ = self.qdiam_cache.set(v);
        }
        Ok(self.qdiam_cache.get().unwrap())
    }
}

/// Bracket on `mk(phi, psi) = sup{ |phi(a) - psi(a)| : L(a) <= 1 }`.
pub fn mk_distance(
    qcms: &Qcms,
    phi: &State,
    psi: &State,
    opts: &SolverOptions,
) -> Result<CertifiedValue> {
    qcms.require_metric()?;
    if !phi.owner.same_structure(qcms.algebra()) || !psi.owner.same_structure(qcms.algebra()) {
        return Err(Error::OwnerMismatch("states must live on the metric space algebra".into()));
    }
    let f = qcms.difference_functional(phi, psi)?;
    if f.norm() == 0.0 {
        return Ok(CertifiedValue::new("mk_distance", 0.0, 0.0, "identical states", opts.seed, 0));
    }
    let sol = qcms.geom.sup_linear(&f, opts)?;
    Ok(CertifiedValue::new(
        "mk_distance",
        sol.lower,
        sol.upper,
        "ascent+trace-dual",
        opts.seed,
        sol.iterations,
    ))
}

/// Exact Kantorovich distance on a finite metric space (independent oracle).
pub fn mk_commutative_oracle(dist: &[Vec<f64>], p: &[f64], q: &[f64]) -> Result<f64> {
    lp::kantorovich_exact(dist, p, q)
}

/// Bracket on `mkD(alpha, beta) = sup{ ||alpha(a) - beta(a)|| : L(a) <= 1 }`.
pub fn auto_mkdist(
    qcms: &Qcms,
    alpha: &Automorphism,
    beta: &Automorphism,
    opts: &SolverOptions,
    caller_cap: Option<f64>,
) -> Result<CertifiedValue> {
    qcms.require_metric()?;
    if !alpha.verified || !beta.verified {
        return Err(Error::NotAutomorphism("automorphisms must be verified".into()));
    }
    if !alpha.owner.same_structure(qcms.algebra()) || !beta.owner.same_structure(qcms.algebra()) {
        return Err(Error::OwnerMismatch("automorphisms of a different algebra".into()));
    }
    if alpha.basis_distance(beta) == 0.0 {
        return Ok(CertifiedValue::new("auto_mkdist", 0.0, 0.0, "identical maps", opts.seed, 0));
    }
    let phi = qcms.difference_map(alpha, beta);
    let mut caps = Vec::new();
    if let Some(cap) = caller_cap {
        caps.push(cap);
    }
    // A priori bound: ||alpha(a) - beta(a)|| over the slice is at most
    // 2 qdiam since both maps are isometric on the centered element.
    if let Ok(qd) = qcms.qdiam_cached() {
        caps.push(2.0 * qd.upper);
    }
    let sol = qcms.geom.sup_map_norm(&phi, NormKind::OpNorm, &caps, opts)?;
    Ok(CertifiedValue::new(
        "auto_mkdist",
        sol.lower,
        sol.upper,
        "alternation+caps",
        opts.seed,
        sol.iterations,
    ))
}

/// Bracket on `mkl(alpha) = mkD(alpha, id)`.
pub fn mk_length(qcms: &Qcms, alpha: &Automorphism, opts: &SolverOptions) -> Result<CertifiedValue> {
    let id = Automorphism::identity(qcms.algebra());
    let mut v = auto_mkdist(qcms, alpha, &id, opts, None)?;
    v.quantity = "mk_length".into();
    Ok(v)
}

/// Bracket on the quantum diameter `sup{ spread(a) : L(a) <= 1 }`.
pub fn qdiam(qcms: &Qcms, opts: &SolverOptions) -> Result<CertifiedValue> {
    qcms.require_metric()?;
    if qcms.algebra().total_dim() == 1 {
        return Ok(CertifiedValue::new("qdiam", 0.0, 0.0, "scalars", opts.seed, 0));
    }
    // Basepoint-centered defining representation: the map vanishes on the
    // seminorm kernel (the unit) and has the same spectral spread.
    let mu = &qcms.lip.basepoint;
    let n_total: usize = qcms.algebra().blocks.iter().sum();
    let mats = qcms
        .lip
        .sa_basis()
        .iter()
        .map(|b| {
            let shift = state_pairing(mu, b).expect("owner").re;
            b.block_diagonal() - linalg::identity(n_total) * c(shift, 0.0)
        })
        .collect();
    let phi = MatrixPiece::new(mats, Sym::Hermitian);
    let sol = qcms.geom.sup_map_norm(&phi, NormKind::Spread, &[], opts)?;
    Ok(CertifiedValue::new(
        "qdiam",
        sol.lower,
        sol.upper,
        "spread-alternation",
        opts.seed,
        sol.iterations,
    ))
}

/// Seed-deterministic pure states: per-block basis vectors first, then
/// Haar-random unit vectors cycling through the blocks.
pub fn sample_pure_states(algebra: &Arc<BlockAlgebra>, count: usize, seed: u64) -> Vec<State> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut grid: Vec<(usize, CMat)> = Vec::new();
    for (b, &d) in algebra.blocks.iter().enumerate() {
        for i in 0..d {
            let mut w = CMat::zeros(d, d);
            w[(i, i)] = c(1.0, 0.0);
            grid.push((b, w));
        }
    }
    let mut k = 0;
    while out.len() < count {
        let (b, w) = if k < grid.len() {
            grid[k].clone()
        } else {
            let b = k % algebra.blocks.len();
            let d = algebra.blocks[b];
            let v = linalg::random_unit_vector(&mut rng, d);
            (b, &v * v.adjoint())
        };
        k += 1;
        let weights: Vec<CMat> = algebra
            .blocks
            .iter()
            .enumerate()
            .map(|(bb, &d)| if bb == b { w.clone() } else { CMat::zeros(d, d) })
            .collect();
        if let Ok(s) = State::from_weights(algebra, weights) {
            out.push(s);
        }
    }
    out
}

/// State of a commutative algebra from a probability vector.
pub fn prob_state(algebra: &Arc<BlockAlgebra>, p: &[f64]) -> Result<State> {
    if algebra.blocks.iter().any(|&d| d != 1) || p.len() != algebra.blocks.len() {
        return Err(Error::DimensionMismatch(
            "probability states require matching commutative algebra".into(),
        ));
    }
    let weights = p.iter().map(|&x| CMat::from_element(1, 1, c(x, 0.0))).collect();
    State::from_weights(algebra, weights)
}

/// Point evaluation state of a commutative algebra.
pub fn point_mass(algebra: &Arc<BlockAlgebra>, i: usize) -> Result<State> {
    let mut p = vec![0.0; algebra.blocks.len()];
    if i >= p.len() {
        return Err(Error::IndexOutOfRange(format!("point {i}")));
    }
    p[i] = 1.0;
    prob_state(algebra, &p)
}

/// Two-sided Hausdorff estimate between two sampled families of states:
/// for each sampled state on one side, a certified distance bracket to the
/// best matched state (local descent over mixtures of the other side's
/// samples); reported as the max-min bracket over both sides.
pub fn hausdorff_state_gap(
    qcms: &Qcms,
    side_a: &[State],
    side_b: &[State],
    opts: &SolverOptions,
) -> Result<CertifiedValue> {
    qcms.require_metric()?;
    if side_a.is_empty() || side_b.is_empty() {
        return Err(Error::InvalidParameter("state samplers must be nonempty".into()));
    }
    let dict = slice_ball_sample(&qcms.lip, &qcms.lip.basepoint, 6, 1717)?;
    let proxy = |x: &State, y: &State| -> f64 {
        dict.iter()
            .map(|d| {
                let vx = state_pairing(x, d).unwrap().re;
                let vy = state_pairing(y, d).unwrap().re;
                (vx - vy).abs()
            })
            .fold(0.0, f64::max)
    };
    let mut iterations = 0u64;
    let mut one_side = |from: &[State], to: &[State]| -> Result<(f64, f64)> {
        let mut worst_lower = 0.0f64;
        let mut worst_upper = 0.0f64;
        for phi in from {
            // Nearest sampled candidate by proxy.
            let mut best_j = 0;
            let mut best_p = f64::INFINITY;
            for (j, psi) in to.iter().enumerate() {
                let pj = proxy(phi, psi);
                if pj < best_p {
                    best_p = pj;
                    best_j = j;
                }
            }
            // Local descent over mixtures toward other samples.
            let mut current = to[best_j].clone();
            for _ in 0..3 {
                let mut improved = false;
                for psi in to {
                    for s in [0.5, 0.25] {
                        let mixed = mix_states(&current, psi, s)?;
                        if proxy(phi, &mixed) < proxy(phi, &current) {
                            current = mixed;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            let d = mk_distance(qcms, phi, &current, opts)?;
            iterations += d.iterations;
            worst_lower = worst_lower.max(d.lower);
            worst_upper = worst_upper.max(d.upper);
        }
        Ok((worst_lower, worst_upper))
    };
    let (la, ua) = one_side(side_a, side_b)?;
    let (lb, ub) = one_side(side_b, side_a)?;
    Ok(CertifiedValue::new(
        "hausdorff_state_gap",
        la.max(lb),
        ua.max(ub),
        "sampled max-min",
        opts.seed,
        iterations,
    ))
}

/// Convex mixture `(1-s)x + s y` of two states.
pub fn mix_states(x: &State, y: &State, s: f64) -> Result<State> {
    let weights = x
        .weights
        .iter()
        .zip(y.weights.iter())
        .map(|(a, b)| a * c(1.0 - s, 0.0) + b * c(s, 0.0))
        .collect();
    State::from_weights(&x.owner, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::finite_metric_space_triple;

    fn commutative_qcms(dist: &[Vec<f64>]) -> Qcms {
        let t = Arc::new(finite_metric_space_triple(dist).unwrap());
        let lip = LipSeminorm::with_tracial_basepoint(t).unwrap();
        Qcms::new(lip).unwrap()
    }

    fn two_point() -> Vec<Vec<f64>> {
        vec![vec![0.0, 1.0], vec![1.0, 0.0]]
    }

    #[test]
    fn mk_identical_states_is_zero() {
        let q = commutative_qcms(&two_point());
        let s = prob_state(q.algebra(), &[0.5, 0.5]).unwrap();
        let v = mk_distance(&q, &s, &s, &SolverOptions::default()).unwrap();
        assert_eq!(v.lower, 0.0);
        assert_eq!(v.upper, 0.0);
    }

    #[test]
    fn mk_two_point_space() {
        let q = commutative_qcms(&two_point());
        let dx = point_mass(q.algebra(), 0).unwrap();
        let dy = point_mass(q.algebra(), 1).unwrap();
        let v = mk_distance(&q, &dx, &dy, &SolverOptions::default()).unwrap();
        assert!((v.lower - 1.0).abs() < 1e-7, "lower {}", v.lower);
        assert!((v.upper - 1.0).abs() < 1e-6, "upper {}", v.upper);
    }

    #[test]
    fn mk_matches_exact_lp_on_random_instances() {
        for seed in 0..6u64 {
            let d = lp::random_metric_space(5, 400 + seed);
            let p = lp::random_dyadic_probability(5, 500 + seed);
            let qv = lp::random_dyadic_probability(5, 600 + seed);
            let exact = mk_commutative_oracle(&d, &p, &qv).unwrap();
            let q = commutative_qcms(&d);
            let sp = prob_state(q.algebra(), &p).unwrap();
            let sq = prob_state(q.algebra(), &qv).unwrap();
            let v = mk_distance(&q, &sp, &sq, &SolverOptions::with_seed(seed)).unwrap();
            assert!(v.contains(exact, 1e-7), "seed {seed}: [{}, {}] vs {exact}", v.lower, v.upper);
            assert!(v.gap <= 1e-6, "seed {seed}: gap {}", v.gap);
        }
    }

    #[test]
    fn qdiam_examples() {
        // One-dimensional algebra has diameter zero.
        let scalars = BlockAlgebra::scalars("C");
        let t = Arc::new(
            crate::dirac::explicit_triple(
                &scalars,
                crate::dirac::defining_rep_basis(&scalars),
                CMat::zeros(1, 1),
            )
            .unwrap(),
        );
        // The scalar triple has kernel dim 1 (unit only) and is metric.
        let lip = LipSeminorm::with_tracial_basepoint(t).unwrap();
        let q = Qcms::new(lip).unwrap();
        let v = qdiam(&q, &SolverOptions::default()).unwrap();
        assert_eq!(v.upper, 0.0);

        // Two-point space with distance one.
        let q2 = commutative_qcms(&two_point());
        let v2 = qdiam(&q2, &SolverOptions::default()).unwrap();
        assert!((v2.lower - 1.0).abs() < 1e-7, "lower {}", v2.lower);
        assert!(v2.upper < 1.0 + 1e-5, "upper {}", v2.upper);
    }

    #[test]
    fn rieffel_radius_bound_on_slice_samples() {
        // ||a - mu(a)1|| <= L(a) * qdiam on slice samples.
        let q = commutative_qcms(&lp::random_metric_space(4, 9));
        let qd = q.qdiam_cached().unwrap().upper;
        let samples = slice_ball_sample(&q.lip, &q.lip.basepoint, 10, 3).unwrap();
        for s in &samples {
            assert!(s.norm() <= qd + 1e-8, "{} vs {qd}", s.norm());
        }
    }

    #[test]
    fn auto_mkdist_permutations_match_enumeration() {
        // For C(X) and permutation automorphisms, mkD(alpha, beta) =
        // max_x d(sigma^{-1}x, tau^{-1}x), computed here by enumeration.
        let d = lp::random_metric_space(4, 21);
        let q = commutative_qcms(&d);
        let sigma = vec![1usize, 2, 3, 0];
        let tau = vec![0usize, 2, 1, 3];
        let alpha = Automorphism::permutation(q.algebra(), &sigma).unwrap();
        let beta = Automorphism::permutation(q.algebra(), &tau).unwrap();
        let mut oracle = 0.0f64;
        let sigma_inv = invert_perm(&sigma);
        let tau_inv = invert_perm(&tau);
        for x in 0..4 {
            oracle = oracle.max(d[sigma_inv[x]][tau_inv[x]]);
        }
        let v = auto_mkdist(&q, &alpha, &beta, &SolverOptions::with_seed(2), None).unwrap();
        assert!((v.lower - oracle).abs() < 1e-7, "lower {} oracle {oracle}", v.lower);
        assert!(v.upper + 1e-9 >= oracle);
    }

    fn invert_perm(p: &[usize]) -> Vec<usize> {
        let mut inv = vec![0; p.len()];
        for (i, &pi) in p.iter().enumerate() {
            inv[pi] = i;
        }
        inv
    }

    #[test]
    fn mk_length_identity_with_mkdist() {
        // mkl(beta^{-1} alpha) and mkD(alpha, beta) agree (same objective).
        let d = lp::random_metric_space(4, 33);
        let q = commutative_qcms(&d);
        let alpha = Automorphism::permutation(q.algebra(), &[1, 0, 3, 2]).unwrap();
        let beta = Automorphism::permutation(q.algebra(), &[2, 3, 0, 1]).unwrap();
        let comp = beta.inverse().unwrap().compose(&alpha).unwrap();
        let v1 = mk_length(&q, &comp, &SolverOptions::with_seed(7)).unwrap();
        let v2 = auto_mkdist(&q, &alpha, &beta, &SolverOptions::with_seed(7), None).unwrap();
        assert!((v1.lower - v2.lower).abs() < 1e-7, "{} vs {}", v1.lower, v2.lower);
        assert!(v1.overlaps(&v2, 1e-9));
    }

    #[test]
    fn unverified_automorphism_rejected() {
        let q = commutative_qcms(&two_point());
        let bad = Automorphism::linear_unchecked(q.algebra(), linalg::identity(2));
        let id = Automorphism::identity(q.algebra());
        assert!(auto_mkdist(&q, &bad, &id, &SolverOptions::default(), None).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let d = two_point();
        let q = commutative_qcms(&d);
        let s0 = point_mass(q.algebra(), 0).unwrap();
        let s1 = point_mass(q.algebra(), 1).unwrap();
        // Identical image sets: gap is zero.
        let same = hausdorff_state_gap(
            &q,
            &[s0.clone(), s1.clone()],
            &[s0.clone(), s1.clone()],
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(same.upper < 1e-9, "upper {}", same.upper);
        // Two-point set against a single point: max distance to that point.
        let single = hausdorff_state_gap(&q, &[s0.clone(), s1.clone()], &[s0], &SolverOptions::default())
            .unwrap();
        assert!((single.lower - 1.0).abs() < 1e-6);
        // Empty sampler errors.
        assert!(hausdorff_state_gap(&q, &[], &[s1], &SolverOptions::default()).is_err());
    }

    #[test]
    fn triangle_inequality_on_lower_bounds() {
        let d = lp::random_metric_space(4, 55);
        let q = commutative_qcms(&d);
        let opts = SolverOptions::with_seed(4);
        let s1 = prob_state(q.algebra(), &lp::random_dyadic_probability(4, 1)).unwrap();
        let s2 = prob_state(q.algebra(), &lp::random_dyadic_probability(4, 2)).unwrap();
        let s3 = prob_state(q.algebra(), &lp::random_dyadic_probability(4, 3)).unwrap();
        let d12 = mk_distance(&q, &s1, &s2, &opts).unwrap();
        let d23 = mk_distance(&q, &s2, &s3, &opts).unwrap();
        let d13 = mk_distance(&q, &s1, &s3, &opts).unwrap();
        let slack = 2.0 * (d12.gap + d23.gap + d13.gap);
        assert!(d13.lower <= d12.upper + d23.upper + slack);
    }
}

//! GNS construction `L²(A, φ)` for a faithful state, nested subspace
//! projections along an AF chain, and the induced conditional expectations.
//!
//! Basis convention (frozen): the element basis of `L²(A, φ)` is the
//! matrix-unit basis of the algebra, blocks in declared order and units in
//! column-major order within each block, so that element coordinates are
//! the column-major vectorizations of the block matrices. The inner product
//! is `⟨a, b⟩ = φ(b* a)`. All operators are expressed in the orthonormal
//! coordinates obtained from the Cholesky factor of the Gram matrix.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::finalg::{AfChain, AlgebraElement, BlockAlgebra, State};
use crate::linalg::{self, CMat, CVec};
use crate::tol::{GRAM_COND_WARN, TOL_NORM, TOL_RANK};

/// The GNS space of a faithful state, with the left regular representation.
#[derive(Debug, Clone)]
pub struct GnsSpace {
    pub algebra: Arc<BlockAlgebra>,
    pub state: State,
    /// Complex dimension of the space (equals `dim A`).
    pub dim: usize,
    /// Gram matrix `M[l][k] = φ(b_l* b_k)` on the element basis.
    pub gram: CMat,
    /// `L^*` where `gram = L L^*`; maps element coords to orthonormal coords.
    l_adj: CMat,
    l_adj_inv: CMat,
    /// Orthonormal coordinates of the cyclic vector Ω = 1.
    pub omega: CVec,
    /// True when the Gram condition number stayed below the warning bound.
    pub well_conditioned: bool,
}

impl GnsSpace {
    /// Left-multiplication operator of `a` in orthonormal coordinates;
    /// a genuine *-representation for the standard inner product.
    pub fn rep(&self, a: &AlgebraElement) -> CMat {
        &self.l_adj * self.left_mult(a) * &self.l_adj_inv
    }

    /// Left multiplication on element coordinates: blockwise `I ⊗ a_b`.
    fn left_mult(&self, a: &AlgebraElement) -> CMat {
        let n = self.dim;
        let mut m = CMat::zeros(n, n);
        let mut off = 0;
        for (b, &d) in self.algebra.blocks.iter().enumerate() {
            let k = linalg::kron(&linalg::identity(d), &a.data[b]);
            m.view_mut((off, off), (d * d, d * d)).copy_from(&k);
            off += d * d;
        }
        m
    }

    /// Orthonormal coordinates of the vector `aΩ`.
    pub fn vector_of(&self, a: &AlgebraElement) -> CVec {
        &self.l_adj * a.coords()
    }

    /// The element whose `aΩ` vector has the given orthonormal coordinates
    /// (uses that Ω is separating).
    pub fn element_of(&self, v: &CVec) -> AlgebraElement {
        AlgebraElement::from_coords(&self.algebra, &(&self.l_adj_inv * v))
    }
}

/// Builds `L²(A, φ)`; errors when the Gram matrix is singular.
pub fn gns_build(algebra: &Arc<BlockAlgebra>, phi: &State) -> Result<GnsSpace> {
    if !phi.owner.same_structure(algebra) {
        return Err(Error::OwnerMismatch("state does not live on the given algebra".into()));
    }
    let basis = algebra.matrix_unit_basis();
    let n = basis.len();
    let mut gram = CMat::zeros(n, n);
    for l in 0..n {
        for k in 0..n {
            let prod = basis[l].adjoint().mul(&basis[k]);
            gram[(l, k)] = crate::finalg::state_pairing(phi, &prod)?;
        }
    }
    let (vals, _) = linalg::herm_eigen(&gram);
    let lmin = vals.first().copied().unwrap_or(0.0);
    let lmax = vals.last().copied().unwrap_or(0.0);
    if lmin <= 0.0 || lmax <= 0.0 {
        return Err(Error::NonFaithfulState("singular Gram matrix".into()));
    }
    let well_conditioned = lmax / lmin < GRAM_COND_WARN;
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NonFaithfulState("Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_adj = l.adjoint();
    let l_adj_inv = l_adj
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NonFaithfulState("Cholesky factor not invertible".into()))?;
    let unit = AlgebraElement::unit(algebra);
    let omega = &l_adj * unit.coords();
    let space = GnsSpace {
        algebra: algebra.clone(),
        state: phi.clone(),
        dim: n,
        gram,
        l_adj,
        l_adj_inv,
        omega,
        well_conditioned,
    };
    // Representation sanity on a slice of the generating set.
    for k in 0..n.min(6) {
        let a = &basis[k];
        let b = &basis[(2 * k + 1) % n];
        let ra = space.rep(a);
        let residual_star = linalg::frob_norm(&(ra.adjoint() - space.rep(&a.adjoint())));
        let residual_mul = linalg::frob_norm(&(&ra * space.rep(b) - space.rep(&a.mul(b))));
        if residual_star > TOL_NORM * (1.0 + linalg::frob_norm(&ra))
            || residual_mul > TOL_NORM * (1.0 + linalg::frob_norm(&ra))
        {
            return Err(Error::InvalidSpectralData(
                "GNS representation failed the *-homomorphism check".into(),
            ));
        }
    }
    Ok(space)
}

/// Per-level data of the GNS filtration of an AF chain.
#[derive(Debug, Clone)]
pub struct LevelProjection {
    /// Orthonormal basis of `A_n Ω` (columns), in orthonormal coordinates.
    pub basis: CMat,
    /// Orthogonal projection onto `A_n Ω`.
    pub p: CMat,
    /// `Q_n = P_n - P_{n-1}` (with `Q_0 = P_0`).
    pub q: CMat,
    /// Conditional expectation on element coordinates.
    pub e: CMat,
    pub p_rank: usize,
    pub q_rank: usize,
}

/// The projections `P_n`, differences `Q_n`, and expectations `E_n`.
#[derive(Debug, Clone)]
pub struct ChainProjections {
    pub space: GnsSpace,
    pub levels: Vec<LevelProjection>,
    pub tracial: bool,
}

impl ChainProjections {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Builds the filtration projections for a chain and a faithful state on the
/// top algebra. `E_n` is defined through `E_n(a)Ω := P_n(aΩ)` exactly as in
/// the general construction; it is an algebraic conditional expectation when
/// the state is tracial, and the `tracial` flag records this.
pub fn chain_projections(chain: &AfChain, phi: &State) -> Result<ChainProjections> {
    let space = gns_build(chain.top(), phi)?;
    let mut levels: Vec<LevelProjection> = Vec::with_capacity(chain.algebras.len());
    for n in 0..chain.algebras.len() {
        let emb = chain.embedded_basis(n);
        let cols: Vec<CVec> = emb.iter().map(|a| space.vector_of(a)).collect();
        let raw = linalg::mat_from_cols(space.dim, &cols);
        let basis = linalg::column_span_basis(&raw, TOL_RANK);
        let p = &basis * basis.adjoint();
        let (q, prev_rank) = match levels.last() {
            None => (p.clone(), 0),
            Some(prev) => (&p - &prev.p, prev.p_rank),
        };
        let e = &space.l_adj_inv * &p * &space.l_adj;
        let p_rank = basis.ncols();
        let q_rank = p_rank - prev_rank;
        levels.push(LevelProjection { basis, p, q, e, p_rank, q_rank });
    }
    // Invariants: nesting and top completeness.
    for n in 0..levels.len() {
        let p = &levels[n].p;
        if linalg::frob_norm(&(p * p - p)) > TOL_NORM * (1.0 + p.nrows() as f64) {
            return Err(Error::InvalidSpectralData(format!("P_{n} is not idempotent")));
        }
        if n + 1 < levels.len() {
            let pn1 = &levels[n + 1].p;
            if linalg::frob_norm(&(pn1 * p - p)) > TOL_NORM * (1.0 + p.nrows() as f64) {
                return Err(Error::InvalidSpectralData(format!("P_{n} not dominated by P_{}", n + 1)));
            }
        }
    }
    let top_rank = levels.last().unwrap().p_rank;
    if top_rank != space.dim {
        return Err(Error::InvalidSpectralData(format!(
            "top level spans rank {top_rank}, expected {}",
            space.dim
        )));
    }
    Ok(ChainProjections { space, levels, tracial: phi.is_tracial() })
}

/// Applies `E_n`; the result lies in (the embedded copy of) `A_n`.
pub fn en_apply(proj: &ChainProjections, n: usize, a: &AlgebraElement) -> Result<AlgebraElement> {
    let lvl = proj
        .levels
        .get(n)
        .ok_or_else(|| Error::IndexOutOfRange(format!("level {n} beyond chain depth")))?;
    let coords = &lvl.e * a.coords();
    Ok(AlgebraElement::from_coords(&proj.space.algebra, &coords))
}

/// φ(E_n(a)) = φ(a) holds for tracial states; exposed for tests and reports.
pub fn expectation_preserves_state(proj: &ChainProjections, n: usize, a: &AlgebraElement) -> Result<C64> {
    let ea = en_apply(proj, n, a)?;
    let lhs = crate::finalg::state_pairing(&proj.space.state, &ea)?;
    let rhs = crate::finalg::state_pairing(&proj.space.state, a)?;
    Ok(lhs - rhs)
}

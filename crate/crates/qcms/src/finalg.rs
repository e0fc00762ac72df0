//! Finite-dimensional C*-algebras as direct sums of full matrix blocks,
//! AF truncation chains, states, and seeded random sampling.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::tol::{TOL_ALG, TOL_NORM};

/// A finite-dimensional C*-algebra `M_{d_1} ⊕ ... ⊕ M_{d_k}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockAlgebra {
    pub blocks: Vec<usize>,
    pub label: String,
}

impl BlockAlgebra {
    pub fn new(blocks: Vec<usize>, label: impl Into<String>) -> Result<Arc<Self>> {
        if blocks.is_empty() || blocks.iter().any(|&d| d == 0) {
            return Err(Error::DimensionMismatch(
                "blocks must be nonempty with every dimension >= 1".into(),
            ));
        }
        Ok(Arc::new(BlockAlgebra { blocks, label: label.into() }))
    }

    pub fn scalars(label: impl Into<String>) -> Arc<Self> {
        Self::new(vec![1], label).expect("scalar algebra")
    }

    /// Complex vector-space dimension, `sum d_i^2`.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|d| d * d).sum()
    }

    pub fn same_structure(&self, other: &BlockAlgebra) -> bool {
        self.blocks == other.blocks
    }

    /// Matrix-unit basis in the frozen order: blocks in declared order,
    /// units column-major within each block (e11, e21, ..., e12, e22, ...).
    /// This matches column-major vectorization of each block.
    pub fn matrix_unit_basis(self: &Arc<Self>) -> Vec<AlgebraElement> {
        let mut out = Vec::with_capacity(self.total_dim());
        for (b, &d) in self.blocks.iter().enumerate() {
            for col in 0..d {
                for row in 0..d {
                    let mut el = AlgebraElement::zero(self);
                    el.data[b][(row, col)] = c(1.0, 0.0);
                    out.push(el);
                }
            }
        }
        out
    }

    /// Real basis of the self-adjoint part, HS-orthonormal per block:
    /// diagonal units, then symmetric and antisymmetric off-diagonal pairs.
    pub fn selfadjoint_basis(self: &Arc<Self>) -> Vec<AlgebraElement> {
        let s = 1.0 / 2.0f64.sqrt();
        let mut out = Vec::with_capacity(self.total_dim());
        for (b, &d) in self.blocks.iter().enumerate() {
            for i in 0..d {
                let mut el = AlgebraElement::zero(self);
                el.data[b][(i, i)] = c(1.0, 0.0);
                out.push(el);
            }
            for j in 0..d {
                for i in 0..j {
                    let mut el = AlgebraElement::zero(self);
                    el.data[b][(i, j)] = c(s, 0.0);
                    el.data[b][(j, i)] = c(s, 0.0);
                    out.push(el);
                    let mut el = AlgebraElement::zero(self);
                    el.data[b][(i, j)] = c(0.0, s);
                    el.data[b][(j, i)] = c(0.0, -s);
                    out.push(el);
                }
            }
        }
        out
    }
}

/// An element of a [`BlockAlgebra`], one complex matrix per block.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    pub owner: Arc<BlockAlgebra>,
    pub data: Vec<CMat>,
}

impl AlgebraElement {
    pub fn zero(owner: &Arc<BlockAlgebra>) -> Self {
        let data = owner.blocks.iter().map(|&d| CMat::zeros(d, d)).collect();
        AlgebraElement { owner: owner.clone(), data }
    }

    pub fn unit(owner: &Arc<BlockAlgebra>) -> Self {
        let data = owner.blocks.iter().map(|&d| linalg::identity(d)).collect();
        AlgebraElement { owner: owner.clone(), data }
    }

    pub fn from_blocks(owner: &Arc<BlockAlgebra>, data: Vec<CMat>) -> Result<Self> {
        if data.len() != owner.blocks.len()
            || data
                .iter()
                .zip(owner.blocks.iter())
                .any(|(m, &d)| m.nrows() != d || m.ncols() != d)
        {
            return Err(Error::DimensionMismatch("block shapes do not match owner".into()));
        }
        Ok(AlgebraElement { owner: owner.clone(), data })
    }

    pub fn adjoint(&self) -> Self {
        AlgebraElement {
            owner: self.owner.clone(),
            data: self.data.iter().map(|m| m.adjoint()).collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        AlgebraElement {
            owner: self.owner.clone(),
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        AlgebraElement {
            owner: self.owner.clone(),
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        AlgebraElement {
            owner: self.owner.clone(),
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        AlgebraElement {
            owner: self.owner.clone(),
            data: self.data.iter().map(|m| m * z).collect(),
        }
    }

    pub fn scale_re(&self, t: f64) -> Self {
        self.scale(c(t, 0.0))
    }

    pub fn is_selfadjoint(&self, tol: f64) -> bool {
        self.data
            .iter()
            .all(|m| linalg::frob_norm(&(m - m.adjoint())) <= tol * (1.0 + linalg::frob_norm(m)))
    }

    /// Coordinates in the frozen matrix-unit basis (column-major per block).
    pub fn coords(&self) -> CVec {
        let mut v = CVec::zeros(self.owner.total_dim());
        let mut off = 0;
        for m in &self.data {
            let len = m.nrows() * m.ncols();
            v.rows_mut(off, len).copy_from(&linalg::vec_cm(m));
            off += len;
        }
        v
    }

    pub fn from_coords(owner: &Arc<BlockAlgebra>, v: &CVec) -> Self {
        let mut data = Vec::with_capacity(owner.blocks.len());
        let mut off = 0;
        for &d in &owner.blocks {
            let len = d * d;
            let slice = CVec::from_iterator(len, (0..len).map(|i| v[off + i]));
            data.push(linalg::unvec_cm(&slice, d, d));
            off += len;
        }
        AlgebraElement { owner: owner.clone(), data }
    }

    /// Real linear combination over a basis.
    pub fn real_combination(basis: &[AlgebraElement], coeffs: &[f64]) -> Self {
        let mut out = AlgebraElement::zero(&basis[0].owner);
        for (b, &t) in basis.iter().zip(coeffs.iter()) {
            if t != 0.0 {
                out = out.add(&b.scale_re(t));
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        self.data.iter().map(|m| m.diagonal().sum()).sum()
    }

    pub fn norm(&self) -> f64 {
        operator_norm(self)
    }

    pub fn frob(&self) -> f64 {
        self.data.iter().map(|m| linalg::frob_norm(m).powi(2)).sum::<f64>().sqrt()
    }

    /// The element as one block-diagonal matrix (the defining representation).
    pub fn block_diagonal(&self) -> CMat {
        let n: usize = self.owner.blocks.iter().sum();
        let mut m = CMat::zeros(n, n);
        let mut off = 0;
        for blk in &self.data {
            let d = blk.nrows();
            m.view_mut((off, off), (d, d)).copy_from(blk);
            off += d;
        }
        m
    }
}

/// Operator norm: max over blocks of the largest singular value.
pub fn operator_norm(a: &AlgebraElement) -> f64 {
    a.data.iter().map(|m| linalg::op_norm(m)).fold(0.0, f64::max)
}

/// Seed-deterministic GUE-style self-adjoint element.
pub fn random_selfadjoint(algebra: &Arc<BlockAlgebra>, seed: u64) -> AlgebraElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_selfadjoint_with(algebra, &mut rng)
}

pub fn random_selfadjoint_with(algebra: &Arc<BlockAlgebra>, rng: &mut ChaCha8Rng) -> AlgebraElement {
    let data = algebra.blocks.iter().map(|&d| linalg::gaussian_hermitian(rng, d)).collect();
    AlgebraElement { owner: algebra.clone(), data }
}

/// A state: positive unit-trace block weights pairing as `a -> sum tr(w_b a_b)`.
#[derive(Debug, Clone)]
pub struct State {
    pub owner: Arc<BlockAlgebra>,
    pub weights: Vec<CMat>,
    faithful: bool,
    tracial: bool,
}

impl State {
    pub fn from_weights(owner: &Arc<BlockAlgebra>, weights: Vec<CMat>) -> Result<Self> {
        if weights.len() != owner.blocks.len()
            || weights
                .iter()
                .zip(owner.blocks.iter())
                .any(|(m, &d)| m.nrows() != d || m.ncols() != d)
        {
            return Err(Error::DimensionMismatch("weight shapes do not match owner".into()));
        }
        let mut total = 0.0;
        let mut faithful = true;
        for w in &weights {
            if linalg::frob_norm(&(w - w.adjoint())) > TOL_ALG * (1.0 + linalg::frob_norm(w)) {
                return Err(Error::InvalidParameter("state weights must be Hermitian".into()));
            }
            let (vals, _) = linalg::herm_eigen(w);
            let min = vals.first().copied().unwrap_or(0.0);
            if min < -TOL_ALG {
                return Err(Error::InvalidParameter("state weights must be positive".into()));
            }
            faithful &= min > 1e-14;
            total += w.diagonal().sum().re;
        }
        if (total - 1.0).abs() > TOL_ALG {
            return Err(Error::InvalidParameter(format!(
                "state weights must have unit total trace, got {total}"
            )));
        }
        let tracial = weights.iter().zip(owner.blocks.iter()).all(|(w, &d)| {
            let mean = w.diagonal().sum() / c(d as f64, 0.0);
            linalg::frob_norm(&(w - linalg::identity(d) * mean)) <= TOL_ALG
        });
        Ok(State { owner: owner.clone(), weights, faithful, tracial })
    }

    /// Canonical tracial state with block masses proportional to `d_b^2`
    /// (the unique trace for a single full matrix block).
    pub fn tracial(owner: &Arc<BlockAlgebra>) -> Self {
        let total: f64 = owner.blocks.iter().map(|&d| (d * d) as f64).sum();
        let weights = owner
            .blocks
            .iter()
            .map(|&d| linalg::identity(d) * c(d as f64 / total, 0.0))
            .collect();
        State::from_weights(owner, weights).expect("tracial state")
    }

    pub fn is_faithful(&self) -> bool {
        self.faithful
    }

    pub fn is_tracial(&self) -> bool {
        self.tracial
    }

    /// The pairing as a Hermitian functional matrix per block (the weights).
    pub fn weight_element(&self) -> AlgebraElement {
        AlgebraElement { owner: self.owner.clone(), data: self.weights.clone() }
    }
}

/// φ(a); errors when the owners differ structurally.
pub fn state_pairing(phi: &State, a: &AlgebraElement) -> Result<C64> {
    if !phi.owner.same_structure(&a.owner) {
        return Err(Error::OwnerMismatch(format!(
            "state on {:?}, element of {:?}",
            phi.owner.blocks, a.owner.blocks
        )));
    }
    Ok(phi
        .weights
        .iter()
        .zip(a.data.iter())
        .map(|(w, m)| (w * m).diagonal().sum())
        .sum())
}

/// A unital *-monomorphism between block algebras given by Bratteli
/// multiplicity data: target block `j` is the block-diagonal sum of
/// `mult[j][i]` copies of source block `i`.
#[derive(Debug, Clone)]
pub struct UnitalInclusion {
    pub source: Arc<BlockAlgebra>,
    pub target: Arc<BlockAlgebra>,
    pub multiplicities: Vec<Vec<usize>>,
}

impl UnitalInclusion {
    pub fn new(
        source: &Arc<BlockAlgebra>,
        target: &Arc<BlockAlgebra>,
        multiplicities: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if multiplicities.len() != target.blocks.len() {
            return Err(Error::DimensionMismatch(
                "multiplicity rows must match target block count".into(),
            ));
        }
        for (j, row) in multiplicities.iter().enumerate() {
            if row.len() != source.blocks.len() {
                return Err(Error::DimensionMismatch(
                    "multiplicity columns must match source block count".into(),
                ));
            }
            let d: usize = row.iter().zip(source.blocks.iter()).map(|(&m, &s)| m * s).sum();
            if d != target.blocks[j] {
                return Err(Error::DimensionMismatch(format!(
                    "target block {j} has dimension {} but multiplicities give {d}",
                    target.blocks[j]
                )));
            }
        }
        let inc = UnitalInclusion { source: source.clone(), target: target.clone(), multiplicities };
        inc.validate()?;
        Ok(inc)
    }

    pub fn apply(&self, a: &AlgebraElement) -> AlgebraElement {
        let mut out = AlgebraElement::zero(&self.target);
        for (j, row) in self.multiplicities.iter().enumerate() {
            let mut off = 0;
            for (i, &copies) in row.iter().enumerate() {
                let d = self.source.blocks[i];
                for _ in 0..copies {
                    out.data[j].view_mut((off, off), (d, d)).copy_from(&a.data[i]);
                    off += d;
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let unit_img = self.apply(&AlgebraElement::unit(&self.source));
        let unit = AlgebraElement::unit(&self.target);
        if unit_img.sub(&unit).frob() > TOL_ALG {
            return Err(Error::DimensionMismatch("inclusion does not map unit to unit".into()));
        }
        // Products and adjoints on the matrix-unit generating set.
        let basis = self.source.matrix_unit_basis();
        for (k, a) in basis.iter().enumerate() {
            let ia = self.apply(a);
            if ia.adjoint().sub(&self.apply(&a.adjoint())).frob() > TOL_ALG {
                return Err(Error::DimensionMismatch("inclusion does not preserve adjoints".into()));
            }
            let b = &basis[(3 * k + 1) % basis.len()];
            let prod = self.apply(&a.mul(b));
            if prod.sub(&ia.mul(&self.apply(b))).frob() > TOL_ALG {
                return Err(Error::DimensionMismatch("inclusion does not preserve products".into()));
            }
        }
        // Isometry on a fixed sample set.
        for seed in 0..3u64 {
            let a = random_selfadjoint(&self.source, 9000 + seed);
            let d = (operator_norm(&self.apply(&a)) - operator_norm(&a)).abs();
            if d > TOL_NORM * (1.0 + operator_norm(&a)) {
                return Err(Error::DimensionMismatch("inclusion is not isometric".into()));
            }
        }
        Ok(())
    }
}

/// An AF truncation chain `A_0 = C·1 ⊆ A_1 ⊆ ... ⊆ A_depth`.
#[derive(Debug, Clone)]
pub struct AfChain {
    pub algebras: Vec<Arc<BlockAlgebra>>,
    pub inclusions: Vec<UnitalInclusion>,
}

impl AfChain {
    pub fn depth(&self) -> usize {
        self.algebras.len() - 1
    }

    pub fn top(&self) -> &Arc<BlockAlgebra> {
        self.algebras.last().unwrap()
    }

    /// Push an element from `level` all the way to the top algebra.
    pub fn embed_to_top(&self, level: usize, a: &AlgebraElement) -> AlgebraElement {
        let mut cur = a.clone();
        for inc in &self.inclusions[level..] {
            cur = inc.apply(&cur);
        }
        cur
    }

    /// Matrix-unit basis of the level algebra, embedded in the top algebra.
    pub fn embedded_basis(&self, level: usize) -> Vec<AlgebraElement> {
        self.algebras[level]
            .matrix_unit_basis()
            .iter()
            .map(|b| self.embed_to_top(level, b))
            .collect()
    }

    /// Self-adjoint basis of the level algebra, embedded in the top algebra.
    pub fn embedded_sa_basis(&self, level: usize) -> Vec<AlgebraElement> {
        self.algebras[level]
            .selfadjoint_basis()
            .iter()
            .map(|b| self.embed_to_top(level, b))
            .collect()
    }
}

/// Builds the chain from Bratteli multiplicity matrices. Level 0 is the
/// scalars. A single matrix is recycled up to `depth`; otherwise exactly
/// `depth` matrices are required. Columns beyond the current block count
/// act on virtual zero-dimensional blocks.
pub fn make_af_chain(bratteli: &[Vec<Vec<usize>>], depth: usize) -> Result<AfChain> {
    let mut algebras = vec![BlockAlgebra::scalars("A0")];
    let mut inclusions = Vec::new();
    if depth > 0 && bratteli.is_empty() {
        return Err(Error::DimensionMismatch("no multiplicity matrices supplied".into()));
    }
    for step in 0..depth {
        let mat = if bratteli.len() == 1 { &bratteli[0] } else {
            bratteli.get(step).ok_or_else(|| {
                Error::DimensionMismatch(format!(
                    "need {depth} multiplicity matrices, got {}",
                    bratteli.len()
                ))
            })?
        };
        let src = algebras[step].clone();
        let mut dims = Vec::with_capacity(mat.len());
        let mut rows = Vec::with_capacity(mat.len());
        for row in mat {
            let mut d = 0usize;
            let mut used = vec![0usize; src.blocks.len()];
            for (i, &m) in row.iter().enumerate() {
                if i < src.blocks.len() {
                    d += m * src.blocks[i];
                    used[i] = m;
                } else if m != 0 {
                    // Virtual zero-dimensional source block: contributes nothing.
                }
            }
            if d == 0 {
                return Err(Error::DimensionMismatch(
                    "multiplicity row produces a zero-dimensional block".into(),
                ));
            }
            dims.push(d);
            rows.push(used);
        }
        let tgt = BlockAlgebra::new(dims, format!("A{}", step + 1))?;
        inclusions.push(UnitalInclusion::new(&src, &tgt, rows)?);
        algebras.push(tgt);
    }
    Ok(AfChain { algebras, inclusions })
}

/// JSON chain description, see the README for the schema.
#[derive(Debug, Clone, Deserialize)]
pub struct ChainSpec {
    pub multiplicities: Vec<Vec<Vec<usize>>>,
    pub depth: usize,
    #[serde(default)]
    pub levels: Option<Vec<Vec<usize>>>,
    pub state: StateSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StateSpec {
    Trace,
    Weights { weights: Vec<Vec<f64>> },
}

impl ChainSpec {
    pub fn build(&self) -> Result<(AfChain, State)> {
        let chain = make_af_chain(&self.multiplicities, self.depth)?;
        if let Some(levels) = &self.levels {
            if levels.len() != chain.algebras.len()
                || levels.iter().zip(chain.algebras.iter()).any(|(l, a)| l != &a.blocks)
            {
                return Err(Error::Config("declared levels do not match the built chain".into()));
            }
        }
        let top = chain.top().clone();
        let state = match &self.state {
            StateSpec::Trace => State::tracial(&top),
            StateSpec::Weights { weights } => {
                if weights.len() != top.blocks.len() {
                    return Err(Error::Config("one diagonal weight row per top block".into()));
                }
                let mats = weights
                    .iter()
                    .zip(top.blocks.iter())
                    .map(|(row, &d)| {
                        if row.len() != d {
                            return Err(Error::Config("weight row length must match block dim".into()));
                        }
                        let mut m = CMat::zeros(d, d);
                        for (i, &x) in row.iter().enumerate() {
                            m[(i, i)] = c(x, 0.0);
                        }
                        Ok(m)
                    })
                    .collect::<Result<Vec<_>>>()?;
                State::from_weights(&top, mats)?
            }
        };
        if !state.is_faithful() {
            return Err(Error::NonFaithfulState("chain state must be faithful".into()));
        }
        Ok((chain, state))
    }
}

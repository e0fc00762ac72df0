//! Spectral triples: the AF-filtration Dirac built from GNS projections,
//! explicit user-supplied triples, restrictions to chain levels, spectra.

use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::finalg::{AfChain, AlgebraElement, BlockAlgebra, State};
use crate::gns::ChainProjections;
use crate::linalg::{self, c, CMat};
use crate::tol::{TOL_ALG, TOL_NORM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ChristensenIvan,
    Explicit,
    Group,
    Restriction,
}

/// Chain context carried by filtration-built triples so they can be
/// restricted and fed to the convergence machinery.
#[derive(Debug, Clone)]
pub struct ChainContext {
    pub chain: AfChain,
    pub projections: ChainProjections,
}

/// A finite-dimensional spectral triple `(A, H, D)`.
#[derive(Debug, Clone)]
pub struct SpectralTripleData {
    pub algebra: Arc<BlockAlgebra>,
    pub hilbert_dim: usize,
    /// Representation matrices of the matrix-unit basis (complex-linear).
    pub rep_basis: Vec<CMat>,
    pub dirac: CMat,
    pub provenance: Provenance,
    pub chain: Option<Arc<ChainContext>>,
}

impl SpectralTripleData {
    pub fn new(
        algebra: Arc<BlockAlgebra>,
        rep_basis: Vec<CMat>,
        dirac: CMat,
        provenance: Provenance,
        chain: Option<Arc<ChainContext>>,
    ) -> Result<Self> {
        let h = dirac.nrows();
        if dirac.ncols() != h {
            return Err(Error::InvalidSpectralData("Dirac matrix must be square".into()));
        }
        if rep_basis.len() != algebra.total_dim()
            || rep_basis.iter().any(|m| m.nrows() != h || m.ncols() != h)
        {
            return Err(Error::InvalidSpectralData(
                "representation basis inconsistent with algebra and Hilbert space".into(),
            ));
        }
        let herm_res = linalg::frob_norm(&(&dirac - dirac.adjoint()));
        if herm_res > TOL_ALG * (1.0 + linalg::frob_norm(&dirac)) {
            return Err(Error::InvalidSpectralData(format!(
                "Dirac is not Hermitian (residual {herm_res:.3e})"
            )));
        }
        let triple =
            SpectralTripleData { algebra, hilbert_dim: h, rep_basis, dirac, provenance, chain };
        triple.validate_rep()?;
        Ok(triple)
    }

    fn validate_rep(&self) -> Result<()> {
        let unit = self.rep_of(&AlgebraElement::unit(&self.algebra));
        if linalg::frob_norm(&(&unit - linalg::identity(self.hilbert_dim))) > TOL_NORM {
            return Err(Error::InvalidSpectralData("representation is not unital".into()));
        }
        let basis = self.algebra.matrix_unit_basis();
        for (k, a) in basis.iter().enumerate() {
            let ra = self.rep_of(a);
            if linalg::frob_norm(&(ra.adjoint() - self.rep_of(&a.adjoint()))) > TOL_NORM {
                return Err(Error::InvalidSpectralData("representation fails adjoints".into()));
            }
            let b = &basis[(2 * k + 1) % basis.len()];
            if linalg::frob_norm(&(&ra * self.rep_of(b) - self.rep_of(&a.mul(b)))) > TOL_NORM {
                return Err(Error::InvalidSpectralData("representation fails products".into()));
            }
        }
        Ok(())
    }

    /// The represented operator of an algebra element.
    pub fn rep_of(&self, a: &AlgebraElement) -> CMat {
        let coords = a.coords();
        let mut m = CMat::zeros(self.hilbert_dim, self.hilbert_dim);
        for (k, basis_mat) in self.rep_basis.iter().enumerate() {
            let z = coords[k];
            if z.norm_sqr() != 0.0 {
                m += basis_mat * z;
            }
        }
        m
    }

    /// `[D, rep(a)]`.
    pub fn commutator_of(&self, a: &AlgebraElement) -> CMat {
        let r = self.rep_of(a);
        &self.dirac * &r - &r * &self.dirac
    }
}

/// Strictly increasing positive eigenvalue scales, one per chain level.
#[derive(Debug, Clone)]
pub struct LambdaSequence {
    pub values: Vec<f64>,
}

impl LambdaSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("lambda sequence must be nonempty".into()));
        }
        if values[0] <= 0.0 {
            return Err(Error::InvalidParameter("lambda values must be positive".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("lambda must be strictly increasing".into()));
        }
        Ok(LambdaSequence { values })
    }

    /// Default growth `lambda_n = n + 1`.
    pub fn linear(levels: usize) -> Self {
        LambdaSequence::new((0..levels).map(|n| (n + 1) as f64).collect()).unwrap()
    }

    /// Geometric growth `lambda_n = base^n`.
    pub fn geometric(levels: usize, base: f64) -> Result<Self> {
        LambdaSequence::new((0..levels).map(|n| base.powi(n as i32)).collect())
    }
}

/// The filtration Dirac `D = sum_n lambda_n Q_n` on the GNS space of the
/// chain's top algebra.
pub fn christensen_ivan_dirac(
    chain: &AfChain,
    proj: &ChainProjections,
    lambda: &LambdaSequence,
) -> Result<SpectralTripleData> {
    if lambda.values.len() != proj.levels.len() {
        return Err(Error::InvalidParameter(format!(
            "lambda length {} must equal chain depth + 1 = {}",
            lambda.values.len(),
            proj.levels.len()
        )));
    }
    let h = proj.space.dim;
    let mut dirac = CMat::zeros(h, h);
    for (lvl, lam) in proj.levels.iter().zip(lambda.values.iter()) {
        dirac += &lvl.q * c(*lam, 0.0);
    }
    // The Q_n are Hermitian up to eigensolver slosh; symmetrize it away.
    dirac = linalg::hermitian_part(&dirac);
    let basis = chain.top().matrix_unit_basis();
    let rep_basis = basis.iter().map(|b| proj.space.rep(b)).collect();
    let ctx = ChainContext { chain: chain.clone(), projections: proj.clone() };
    SpectralTripleData::new(
        chain.top().clone(),
        rep_basis,
        dirac,
        Provenance::ChristensenIvan,
        Some(Arc::new(ctx)),
    )
}

/// Validates and wraps an explicitly supplied triple.
pub fn explicit_triple(
    algebra: &Arc<BlockAlgebra>,
    rep_basis: Vec<CMat>,
    dirac: CMat,
) -> Result<SpectralTripleData> {
    SpectralTripleData::new(algebra.clone(), rep_basis, dirac, Provenance::Explicit, None)
}

/// The 2x2-matrix example: `M_2` represented doubled on C^4 with Dirac
/// `diag(S, J)` for the swap `S` and the sign involution `J`.
pub fn m2_example_triple() -> Result<SpectralTripleData> {
    let alg = BlockAlgebra::new(vec![2], "M2")?;
    let rep_basis = doubled_rep_basis(&alg);
    let mut d = CMat::zeros(4, 4);
    d[(0, 1)] = c(1.0, 0.0);
    d[(1, 0)] = c(1.0, 0.0);
    d[(2, 2)] = c(1.0, 0.0);
    d[(3, 3)] = c(-1.0, 0.0);
    explicit_triple(&alg, rep_basis, d)
}

/// Doubled representation `a -> diag(a, a)` for a single-block algebra.
pub fn doubled_rep_basis(alg: &Arc<BlockAlgebra>) -> Vec<CMat> {
    alg.matrix_unit_basis()
        .iter()
        .map(|b| {
            let m = b.block_diagonal();
            let n = m.nrows();
            let mut out = CMat::zeros(2 * n, 2 * n);
            out.view_mut((0, 0), (n, n)).copy_from(&m);
            out.view_mut((n, n), (n, n)).copy_from(&m);
            out
        })
        .collect()
}

/// Defining (block-diagonal) representation basis.
pub fn defining_rep_basis(alg: &Arc<BlockAlgebra>) -> Vec<CMat> {
    alg.matrix_unit_basis().iter().map(|b| b.block_diagonal()).collect()
}

/// Dirac encoding of a finite metric space: `C(X)` acts on one two-dimensional
/// block per point pair, the Dirac swaps the pair at rate `1/d(x,y)`, and the
/// induced seminorm is exactly the Lipschitz seminorm of the table.
pub fn finite_metric_space_triple(dist: &[Vec<f64>]) -> Result<SpectralTripleData> {
    crate::metrics::lp::validate_metric(dist)?;
    let n = dist.len();
    let alg = BlockAlgebra::new(vec![1; n], format!("C(X_{n})"))?;
    if n == 1 {
        let rep = vec![linalg::identity(1)];
        return explicit_triple(&alg, rep, CMat::zeros(1, 1));
    }
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let h = 2 * pairs.len();
    let mut rep_basis = Vec::with_capacity(n);
    for k in 0..n {
        let mut m = CMat::zeros(h, h);
        for (p, &(i, j)) in pairs.iter().enumerate() {
            if i == k {
                m[(2 * p, 2 * p)] = c(1.0, 0.0);
            }
            if j == k {
                m[(2 * p + 1, 2 * p + 1)] = c(1.0, 0.0);
            }
        }
        rep_basis.push(m);
    }
    let mut d = CMat::zeros(h, h);
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let w = 1.0 / dist[i][j];
        d[(2 * p, 2 * p + 1)] = c(w, 0.0);
        d[(2 * p + 1, 2 * p)] = c(w, 0.0);
    }
    explicit_triple(&alg, rep_basis, d)
}

/// Compression of a filtration triple to the level-`n` subspace `P_n H`.
/// For `a` in the level algebra the seminorm is unchanged, which the
/// constructor verifies on samples.
pub fn restrict_triple(
    triple: &SpectralTripleData,
    level: usize,
    proj: &ChainProjections,
) -> Result<SpectralTripleData> {
    if !matches!(triple.provenance, Provenance::ChristensenIvan | Provenance::Group) {
        return Err(Error::InvalidParameter(
            "restriction requires a filtration or group triple".into(),
        ));
    }
    let ctx = triple
        .chain
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("triple carries no chain data".into()))?;
    if level >= proj.levels.len() {
        return Err(Error::IndexOutOfRange(format!("level {level} beyond depth")));
    }
    let b = &proj.levels[level].basis;
    let dirac = b.adjoint() * &triple.dirac * b;
    let sub = ctx.chain.algebras[level].clone();
    let rep_basis: Vec<CMat> = ctx
        .chain
        .embedded_basis(level)
        .iter()
        .map(|e| b.adjoint() * triple.rep_of(e) * b)
        .collect();
    let restricted = SpectralTripleData::new(
        sub,
        rep_basis,
        linalg::hermitian_part(&dirac),
        Provenance::Restriction,
        Some(ctx.clone()),
    )?;
    // Seminorm agreement across the restriction, on samples.
    for seed in 0..3u64 {
        let a = crate::finalg::random_selfadjoint(&restricted.algebra, 7100 + seed);
        let inner = linalg::op_norm(&restricted.commutator_of(&a));
        let outer = linalg::op_norm(&triple.commutator_of(&ctx.chain.embed_to_top(level, &a)));
        if (inner - outer).abs() > TOL_NORM * (1.0 + outer) {
            return Err(Error::InvalidSpectralData(format!(
                "seminorm changed under restriction at level {level}: {inner} vs {outer}"
            )));
        }
    }
    Ok(restricted)
}

/// Sorted spectrum with multiplicities (clustered at 1e-8 relative).
pub fn dirac_spectrum(triple: &SpectralTripleData) -> Vec<(f64, usize)> {
    let (vals, _) = linalg::herm_eigen(&triple.dirac);
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    linalg::cluster_values(&vals, 1e-8 * scale)
}

/// JSON triple description.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TripleSpec {
    ChristensenIvan {
        lambda: Vec<f64>,
    },
    Explicit {
        /// Complex entries as [re, im] pairs, row-major.
        dirac: Vec<Vec<[f64; 2]>>,
        rep: RepSpec,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepSpec {
    /// GNS left-regular representation for the chain state.
    LeftRegular,
    /// `a -> diag(a, a)` on the doubled defining space.
    Doubled,
}

impl TripleSpec {
    pub fn build(
        &self,
        chain: &AfChain,
        state: &State,
        proj: &ChainProjections,
    ) -> Result<SpectralTripleData> {
        match self {
            TripleSpec::ChristensenIvan { lambda } => {
                let lam = LambdaSequence::new(lambda.clone())?;
                christensen_ivan_dirac(chain, proj, &lam)
            }
            TripleSpec::Explicit { dirac, rep } => {
                let top = chain.top().clone();
                let h = dirac.len();
                let mut d = CMat::zeros(h, h);
                for (i, row) in dirac.iter().enumerate() {
                    if row.len() != h {
                        return Err(Error::Config("dirac matrix must be square".into()));
                    }
                    for (j, z) in row.iter().enumerate() {
                        d[(i, j)] = c(z[0], z[1]);
                    }
                }
                let rep_basis = match rep {
                    RepSpec::Doubled => doubled_rep_basis(&top),
                    RepSpec::LeftRegular => {
                        let space = crate::gns::gns_build(&top, state)?;
                        top.matrix_unit_basis().iter().map(|b| space.rep(b)).collect()
                    }
                };
                explicit_triple(&top, rep_basis, d)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finalg::{make_af_chain, random_selfadjoint};
    use crate::gns::chain_projections;

    fn uhf(depth: usize) -> (AfChain, ChainProjections) {
        let chain = make_af_chain(&[vec![vec![2]]], depth).unwrap();
        let phi = State::tracial(chain.top());
        let proj = chain_projections(&chain, &phi).unwrap();
        (chain, proj)
    }

    #[test]
    fn single_level_dirac_is_identity() {
        let (chain, proj) = uhf(0);
        let lam = LambdaSequence::new(vec![1.0]).unwrap();
        let t = christensen_ivan_dirac(&chain, &proj, &lam).unwrap();
        assert_eq!(t.hilbert_dim, 1);
        assert!((t.dirac[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn ci_spectrum_matches_q_ranks() {
        let (chain, proj) = uhf(2);
        let lam = LambdaSequence::new(vec![1.0, 2.0, 3.0]).unwrap();
        let t = christensen_ivan_dirac(&chain, &proj, &lam).unwrap();
        let spec = dirac_spectrum(&t);
        let expect = [(1.0, 1usize), (2.0, 3), (3.0, 12)];
        assert_eq!(spec.len(), 3);
        for ((v, m), (ev, em)) in spec.iter().zip(expect.iter()) {
            assert!((v - ev).abs() < 1e-9);
            assert_eq!(m, em);
        }
    }

    #[test]
    fn lambda_validation() {
        assert!(LambdaSequence::new(vec![1.0, 1.0]).is_err());
        assert!(LambdaSequence::new(vec![-1.0, 2.0]).is_err());
        assert!(LambdaSequence::new(vec![0.5, 2.0, 7.0]).is_ok());
    }

    #[test]
    fn ci_commutes_with_chain_projections() {
        let (chain, proj) = uhf(2);
        let lam = LambdaSequence::linear(3);
        let t = christensen_ivan_dirac(&chain, &proj, &lam).unwrap();
        for lvl in &proj.levels {
            let comm = &t.dirac * &lvl.p - &lvl.p * &t.dirac;
            assert!(linalg::frob_norm(&comm) < 1e-12 * (1.0 + linalg::frob_norm(&t.dirac)));
        }
    }

    #[test]
    fn compression_identity_for_level_elements() {
        // [D, rep(a)] = P_k [D, rep(a)] P_k for a in the level-k algebra.
        let (chain, proj) = uhf(2);
        let lam = LambdaSequence::linear(3);
        let t = christensen_ivan_dirac(&chain, &proj, &lam).unwrap();
        for k in 0..=2usize {
            let a = chain.embed_to_top(k, &random_selfadjoint(&chain.algebras[k], 50 + k as u64));
            let comm = t.commutator_of(&a);
            let pk = &proj.levels[k].p;
            let diff = &comm - pk * &comm * pk;
            assert!(
                linalg::frob_norm(&diff) < 1e-10 * (1.0 + linalg::frob_norm(&comm)),
                "level {k}"
            );
        }
    }

    #[test]
    fn higher_q_kills_lower_level_vectors() {
        // Q_m rep(a) Ω = 0 for a at level k and m > k.
        let (chain, proj) = uhf(2);
        for k in 0..2usize {
            let a = chain.embed_to_top(k, &random_selfadjoint(&chain.algebras[k], 60 + k as u64));
            let v = proj.space.rep(&a) * &proj.space.omega;
            for m in (k + 1)..=2 {
                let qv = &proj.levels[m].q * &v;
                assert!(qv.norm() < 1e-10 * (1.0 + v.norm()), "k={k} m={m}");
            }
        }
    }

    #[test]
    fn m2_example_accepted_and_spectrum() {
        let t = m2_example_triple().unwrap();
        assert_eq!(t.hilbert_dim, 4);
        let spec = dirac_spectrum(&t);
        assert_eq!(spec, vec![(-1.0, 2), (1.0, 2)]);
    }

    #[test]
    fn anti_hermitian_perturbation_rejected() {
        let alg = BlockAlgebra::new(vec![2], "M2").unwrap();
        let rep = doubled_rep_basis(&alg);
        let mut d = m2_example_triple().unwrap().dirac;
        d[(0, 1)] += c(0.0, 1e-6);
        assert!(explicit_triple(&alg, rep, d).is_err());
    }

    #[test]
    fn zero_dirac_accepted_here() {
        let alg = BlockAlgebra::new(vec![2], "M2").unwrap();
        let rep = doubled_rep_basis(&alg);
        let d = CMat::zeros(4, 4);
        let t = explicit_triple(&alg, rep, d).unwrap();
        assert_eq!(dirac_spectrum(&t), vec![(0.0, 4)]);
    }

    #[test]
    fn restriction_examples() {
        let (chain, proj) = uhf(2);
        let lam = LambdaSequence::linear(3);
        let t = christensen_ivan_dirac(&chain, &proj, &lam).unwrap();
        // Top-level restriction has the full spectrum.
        let top = restrict_triple(&t, 2, &proj).unwrap();
        assert_eq!(top.hilbert_dim, 16);
        let s1 = dirac_spectrum(&t);
        let s2 = dirac_spectrum(&top);
        for (a, b) in s1.iter().zip(s2.iter()) {
            assert!((a.0 - b.0).abs() < 1e-9 && a.1 == b.1);
        }
        // Level 1 has Hilbert dimension rank P_1 = 4.
        let r1 = restrict_triple(&t, 1, &proj).unwrap();
        assert_eq!(r1.hilbert_dim, 4);
        assert!(restrict_triple(&t, 9, &proj).is_err());
    }
}

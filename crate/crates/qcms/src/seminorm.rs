//! The Lipschitz seminorm `L(a) = ||[D, rep(a)]||`, its kernel, unit-ball
//! slicing, and quasi-Leibniz defect reports.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dirac::SpectralTripleData;
use crate::error::{Error, Result};
use crate::finalg::{random_selfadjoint_with, state_pairing, AlgebraElement, State};
use crate::linalg::{self, c, CMat, RMat, RVec};
use crate::tol::{TOL_ALG, TOL_RANK};

/// The commutator seminorm of a spectral triple together with its verified
/// kernel and a basepoint state used to slice out the scalar direction.
#[derive(Debug, Clone)]
pub struct LipSeminorm {
    pub triple: Arc<SpectralTripleData>,
    pub basepoint: State,
    /// HS-orthonormal basis of the self-adjoint part.
    sa_basis: Vec<AlgebraElement>,
    /// Commutators `[D, rep(b_k)]` of the self-adjoint basis.
    comm_basis: Vec<CMat>,
    pub kernel_dim: usize,
    kernel_basis: Vec<AlgebraElement>,
    pub metric: bool,
}

impl LipSeminorm {
    pub fn new(triple: Arc<SpectralTripleData>, basepoint: State) -> Result<Self> {
        if !basepoint.owner.same_structure(&triple.algebra) {
            return Err(Error::OwnerMismatch("basepoint state must live on the triple's algebra".into()));
        }
        let sa_basis = triple.algebra.selfadjoint_basis();
        let comm_basis: Vec<CMat> = sa_basis.iter().map(|b| triple.commutator_of(b)).collect();
        // Real matrix of the commutator map on sa coordinates.
        let h2 = triple.hilbert_dim * triple.hilbert_dim;
        let mut m = RMat::zeros(2 * h2, sa_basis.len());
        for (k, cm) in comm_basis.iter().enumerate() {
            for (i, z) in cm.iter().enumerate() {
                m[(i, k)] = z.re;
                m[(h2 + i, k)] = z.im;
            }
        }
        let kernel = linalg::real_kernel_basis(&m, TOL_RANK);
        let kernel_dim = kernel.ncols();
        let kernel_basis = (0..kernel_dim)
            .map(|j| {
                let coeffs: Vec<f64> = kernel.column(j).iter().copied().collect();
                AlgebraElement::real_combination(&sa_basis, &coeffs)
            })
            .collect();
        let metric = kernel_dim == 1;
        Ok(LipSeminorm { triple, basepoint, sa_basis, comm_basis, kernel_dim, kernel_basis, metric })
    }

    /// Convenience constructor with the canonical tracial basepoint.
    pub fn with_tracial_basepoint(triple: Arc<SpectralTripleData>) -> Result<Self> {
        let basepoint = State::tracial(&triple.algebra);
        Self::new(triple, basepoint)
    }

    pub fn sa_basis(&self) -> &[AlgebraElement] {
        &self.sa_basis
    }

    pub fn commutator_basis(&self) -> &[CMat] {
        &self.comm_basis
    }

    pub fn kernel_basis(&self) -> &[AlgebraElement] {
        &self.kernel_basis
    }

    /// Seminorm of an arbitrary element.
    pub fn eval(&self, a: &AlgebraElement) -> f64 {
        linalg::op_norm(&self.triple.commutator_of(a))
    }

    /// Coordinates of the basepoint functional against the sa basis.
    pub fn slice_normal(&self) -> RVec {
        RVec::from_iterator(
            self.sa_basis.len(),
            self.sa_basis
                .iter()
                .map(|b| state_pairing(&self.basepoint, b).expect("same owner").re),
        )
    }
}

/// `L(a)` as a free function, matching the operation map.
pub fn lip(seminorm: &LipSeminorm, a: &AlgebraElement) -> f64 {
    seminorm.eval(a)
}

/// Exact numerical nullspace of `a -> [D, rep(a)]` on the self-adjoint part.
/// Dimension larger than one is a valid (non-metric) outcome.
pub fn kernel_check(seminorm: &LipSeminorm) -> (usize, Vec<AlgebraElement>) {
    (seminorm.kernel_dim, seminorm.kernel_basis.clone())
}

/// Self-adjoint samples with `L(a) <= 1` and `mu(a) = 0`, deterministic per
/// seed. The first samples are the extreme directions of the commutator map
/// restricted to the slice; the rest are normalized Gaussian draws.
pub fn slice_ball_sample(
    seminorm: &LipSeminorm,
    mu: &State,
    count: usize,
    seed: u64,
) -> Result<Vec<AlgebraElement>> {
    if !seminorm.metric {
        return Err(Error::NotMetric(format!(
            "kernel dimension {} (need 1) — slice sampling undefined",
            seminorm.kernel_dim
        )));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let m = seminorm.sa_basis.len();
    let mut out = Vec::with_capacity(count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let project = |raw: &AlgebraElement| -> Option<AlgebraElement> {
        let mean = state_pairing(mu, raw).ok()?.re;
        let centered = raw.sub(&AlgebraElement::unit(&raw.owner).scale_re(mean));
        let l = seminorm.eval(&centered);
        if l < 1e-12 {
            return None;
        }
        Some(centered.scale_re(1.0 / l))
    };

    // Extreme directions: top right singular vectors of the commutator map
    // restricted to the slice through the basepoint.
    let normal = {
        let w = RVec::from_iterator(
            m,
            seminorm.sa_basis.iter().map(|b| state_pairing(mu, b).expect("owner").re),
        );
        w
    };
    let h2 = seminorm.triple.hilbert_dim * seminorm.triple.hilbert_dim;
    let mut cmat = RMat::zeros(2 * h2, m);
    for (k, cm) in seminorm.comm_basis.iter().enumerate() {
        for (i, z) in cm.iter().enumerate() {
            cmat[(i, k)] = z.re;
            cmat[(h2 + i, k)] = z.im;
        }
    }
    let gram = cmat.transpose() * &cmat;
    let nn = normal.norm();
    let gram_sliced = if nn > 0.0 {
        let p = RMat::identity(m, m) - (&normal * normal.transpose()) / (nn * nn);
        &p * gram * &p
    } else {
        gram
    };
    let se = gram_sliced.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    for &i in order.iter().take(count.min(3)) {
        if se.eigenvalues[i] <= 0.0 {
            break;
        }
        let coeffs: Vec<f64> = se.eigenvectors.column(i).iter().copied().collect();
        let raw = AlgebraElement::real_combination(&seminorm.sa_basis, &coeffs);
        if let Some(s) = project(&raw) {
            out.push(s);
        }
    }
    while out.len() < count {
        let raw = random_selfadjoint_with(&seminorm.triple.algebra, &mut rng);
        if let Some(s) = project(&raw) {
            out.push(s);
        }
    }
    Ok(out)
}

/// Worst quasi-Leibniz ratio over sampled pairs, for the Jordan and Lie
/// products against `||a|| L(b) + L(a) ||b||` (the commutator seminorm is
/// Leibniz, so the report should stay at or below one).
#[derive(Debug, Clone)]
pub struct QuasiLeibnizReport {
    pub max_defect: f64,
    pub pairs_checked: usize,
    pub pairs_skipped: usize,
}

pub fn quasi_leibniz_check(seminorm: &LipSeminorm, pairs: usize, seed: u64) -> QuasiLeibnizReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_defect: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = 0;
    for _ in 0..pairs {
        let a = random_selfadjoint_with(&seminorm.triple.algebra, &mut rng);
        let b = random_selfadjoint_with(&seminorm.triple.algebra, &mut rng);
        let denom = a.norm() * seminorm.eval(&b) + seminorm.eval(&a) * b.norm();
        if denom < 1e-12 {
            skipped += 1;
            continue;
        }
        let ab = a.mul(&b);
        let ba = b.mul(&a);
        let jordan = ab.add(&ba).scale_re(0.5);
        let lie = ab.sub(&ba).scale(c(0.0, -0.5));
        let num = seminorm.eval(&jordan).max(seminorm.eval(&lie));
        max_defect = max_defect.max(num / denom);
        checked += 1;
    }
    QuasiLeibnizReport { max_defect, pairs_checked: checked, pairs_skipped: skipped }
}

/// Defect of a single pair (used by the worked example reports).
pub fn leibniz_defect_pair(seminorm: &LipSeminorm, a: &AlgebraElement, b: &AlgebraElement) -> Option<f64> {
    let denom = a.norm() * seminorm.eval(b) + seminorm.eval(a) * b.norm();
    if denom < TOL_ALG {
        return None;
    }
    let ab = a.mul(b);
    let ba = b.mul(a);
    let jordan = ab.add(&ba).scale_re(0.5);
    let lie = ab.sub(&ba).scale(c(0.0, -0.5));
    Some(seminorm.eval(&jordan).max(seminorm.eval(&lie)) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{
        christensen_ivan_dirac, doubled_rep_basis, explicit_triple, m2_example_triple,
        LambdaSequence,
    };
    use crate::finalg::{make_af_chain, random_selfadjoint, BlockAlgebra};
    use crate::gns::chain_projections;

    fn m2_lip() -> LipSeminorm {
        let t = Arc::new(m2_example_triple().unwrap());
        LipSeminorm::with_tracial_basepoint(t).unwrap()
    }

    #[test]
    fn lip_examples() {
        let l = m2_lip();
        let unit = AlgebraElement::unit(&l.triple.algebra);
        assert!(l.eval(&unit) < 1e-14);
        // a = J = diag(1, -1): [S, J] has norm 2, [J, J] = 0.
        let mut j = AlgebraElement::zero(&l.triple.algebra);
        j.data[0][(0, 0)] = c(1.0, 0.0);
        j.data[0][(1, 1)] = c(-1.0, 0.0);
        assert!((l.eval(&j) - 2.0).abs() < 1e-12);
        // Independent singular-value oracle on random elements.
        let a = random_selfadjoint(&l.triple.algebra, 99);
        let direct = l.eval(&a);
        let comm = l.triple.commutator_of(&a);
        let svd = nalgebra::SVD::new(comm, false, false);
        let oracle = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
        assert!((direct - oracle).abs() < 1e-10 * (1.0 + oracle));
        // L(a) = L(a*).
        assert!((l.eval(&a) - l.eval(&a.adjoint())).abs() < 1e-10);
    }

    #[test]
    fn kernel_examples() {
        // The example triple is metric: kernel = R·1.
        let l = m2_lip();
        let (dim, basis) = kernel_check(&l);
        assert_eq!(dim, 1);
        assert!(l.metric);
        // The kernel direction is a multiple of the unit.
        let k = &basis[0];
        let t = k.data[0][(0, 0)];
        let unit_mult = AlgebraElement::unit(&l.triple.algebra).scale(t);
        assert!(k.sub(&unit_mult).frob() < 1e-9);

        // Zero Dirac on M2: kernel is all of sa(M2).
        let alg = BlockAlgebra::new(vec![2], "M2").unwrap();
        let t0 = Arc::new(
            explicit_triple(&alg, doubled_rep_basis(&alg), CMat::zeros(4, 4)).unwrap(),
        );
        let l0 = LipSeminorm::with_tracial_basepoint(t0).unwrap();
        assert_eq!(l0.kernel_dim, 4);
        assert!(!l0.metric);

        // Filtration Dirac on the UHF chain: metric.
        let chain = make_af_chain(&[vec![vec![2]]], 2).unwrap();
        let phi = crate::finalg::State::tracial(chain.top());
        let proj = chain_projections(&chain, &phi).unwrap();
        let t = Arc::new(
            christensen_ivan_dirac(&chain, &proj, &LambdaSequence::linear(3)).unwrap(),
        );
        let lc = LipSeminorm::new(t, phi).unwrap();
        assert_eq!(lc.kernel_dim, 1);
    }

    #[test]
    fn slice_samples_meet_contract() {
        let l = m2_lip();
        let mu = l.basepoint.clone();
        let samples = slice_ball_sample(&l, &mu, 8, 11).unwrap();
        assert_eq!(samples.len(), 8);
        for s in &samples {
            assert!(state_pairing(&mu, s).unwrap().norm() < 1e-12);
            assert!(l.eval(s) <= 1.0 + 1e-10);
            assert!(s.is_selfadjoint(1e-12));
        }
        assert!(slice_ball_sample(&l, &mu, 0, 1).unwrap().is_empty());
        // Determinism.
        let again = slice_ball_sample(&l, &mu, 8, 11).unwrap();
        for (a, b) in samples.iter().zip(again.iter()) {
            assert!(a.sub(b).frob() == 0.0);
        }
    }

    #[test]
    fn slice_sampling_requires_metric_flag() {
        let alg = BlockAlgebra::new(vec![2], "M2").unwrap();
        let t0 = Arc::new(
            explicit_triple(&alg, doubled_rep_basis(&alg), CMat::zeros(4, 4)).unwrap(),
        );
        let l0 = LipSeminorm::with_tracial_basepoint(t0).unwrap();
        let mu = l0.basepoint.clone();
        assert!(slice_ball_sample(&l0, &mu, 3, 0).is_err());
    }

    #[test]
    fn leibniz_defect_at_most_one() {
        let l = m2_lip();
        let rep = quasi_leibniz_check(&l, 2000, 5);
        assert!(rep.max_defect <= 1.0 + 1e-10, "defect {}", rep.max_defect);
        assert!(rep.pairs_checked > 0);
    }

    #[test]
    fn conjugation_by_dirac_commuting_unitary_preserves_seminorm() {
        // On the UHF filtration triple, Ad(u) for u in a tensor factor is
        // implemented by a unitary commuting with D, so L(u a u*) = L(a).
        let chain = make_af_chain(&[vec![vec![2]]], 1).unwrap();
        let phi = crate::finalg::State::tracial(chain.top());
        let proj = chain_projections(&chain, &phi).unwrap();
        let t = Arc::new(
            christensen_ivan_dirac(&chain, &proj, &LambdaSequence::linear(2)).unwrap(),
        );
        let l = LipSeminorm::new(t.clone(), phi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..4 {
            let u = linalg::haar_unitary(&mut rng, 2);
            let uel = AlgebraElement::from_blocks(&t.algebra, vec![u.clone()]).unwrap();
            let a = random_selfadjoint(&t.algebra, 77);
            let conj = uel.mul(&a).mul(&uel.adjoint());
            assert!((l.eval(&conj) - l.eval(&a)).abs() < 1e-9 * (1.0 + l.eval(&a)));
        }
    }

    #[test]
    fn lower_semicontinuity_surrogate() {
        let l = m2_lip();
        let a = random_selfadjoint(&l.triple.algebra, 13);
        let b = random_selfadjoint(&l.triple.algebra, 14);
        // liminf approximated over a geometrically convergent tail.
        let mut liminf = f64::INFINITY;
        for k in 32..=44u32 {
            let t = 0.5f64.powi(k as i32);
            let ak = a.add(&b.scale_re(t));
            liminf = liminf.min(l.eval(&ak));
        }
        assert!(l.eval(&a) <= liminf + 1e-8);
    }
}

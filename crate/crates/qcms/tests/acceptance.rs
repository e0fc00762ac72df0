//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Run with `cargo test -p qcms --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use std::sync::Arc;

use qcms::dirac::{
    christensen_ivan_dirac, dirac_spectrum, finite_metric_space_triple, m2_example_triple,
    restrict_triple, LambdaSequence,
};
use qcms::finalg::{make_af_chain, random_selfadjoint, AlgebraElement, State};
use qcms::gns::chain_projections;
use qcms::groups::{
    epsilon_iso_iso_check, CocycleSpec, DualActionDemo, GroupDemoSpec, IsoIsoPair,
};
use qcms::isometry::{bilip_constants, iso_membership, IsometryVerdict};
use qcms::linalg;
use qcms::metrics::engine::SolverOptions;
use qcms::metrics::lp::{random_dyadic_probability, random_metric_space};
use qcms::metrics::{
    auto_mkdist, mk_commutative_oracle, mk_distance, mk_length, prob_state, Automorphism, Qcms,
};
use qcms::seminorm::{kernel_check, quasi_leibniz_check, LipSeminorm};
use qcms::tunnels::{
    af_level_data, beta_sequence, build_tn_tunnel, en_defect, tunnel_extent,
    verify_quantum_isometry, AfDefectContext, TunnelSide,
};

fn m2_qcms() -> (Arc<qcms::dirac::SpectralTripleData>, Qcms) {
    let t = Arc::new(m2_example_triple().unwrap());
    let lip = LipSeminorm::with_tracial_basepoint(t.clone()).unwrap();
    (t, Qcms::new(lip).unwrap())
}

fn commutative_qcms(dist: &[Vec<f64>]) -> Qcms {
    let t = Arc::new(finite_metric_space_triple(dist).unwrap());
    Qcms::new(LipSeminorm::with_tracial_basepoint(t).unwrap()).unwrap()
}

fn pass(criterion: usize, name: &str) {
    println!("ACCEPTANCE {criterion} [{name}]: PASS");
}

#[test]
fn criterion_1_m2_example_reproduction() {
    let (t, q) = m2_qcms();
    let (dim, _) = kernel_check(&q.lip);
    assert_eq!(dim, 1, "kernel must be the scalars");

    let mut j = AlgebraElement::zero(&t.algebra);
    j.data[0][(0, 0)] = linalg::c(1.0, 0.0);
    j.data[0][(1, 1)] = linalg::c(-1.0, 0.0);
    let adj = Automorphism::inner(&j).unwrap();
    let rep = bilip_constants(&adj, &q, 10, 3).unwrap();
    assert_eq!(rep.verdict, IsometryVerdict::Certified, "Ad(J) must carry the structural identity");
    assert!(rep.full_quantum_isometry);

    let dec = iso_membership(&adj, &t, None).unwrap();
    assert!(!dec.member, "Ad(J) must be rejected from the spatial isometries");
    assert_eq!(dec.intertwiner_space_dim, 1, "intertwiner analysis must be reported");
    assert_eq!(dec.intertwiner_basis.len(), 1);

    let id = Automorphism::identity(&t.algebra);
    let dec_id = iso_membership(&id, &t, None).unwrap();
    assert!(dec_id.member);
    pass(1, "m2 example reproduction");
}

#[test]
fn criterion_2_leibniz_property() {
    // 10^4 random pairs per triple across the suite triples.
    let mut triples: Vec<(String, Qcms)> = Vec::new();
    let (_, q_m2) = m2_qcms();
    triples.push(("m2_example".into(), q_m2));
    {
        let chain = make_af_chain(&[vec![vec![2]]], 2).unwrap();
        let phi = State::tracial(chain.top());
        let proj = chain_projections(&chain, &phi).unwrap();
        let t = Arc::new(
            christensen_ivan_dirac(&chain, &proj, &LambdaSequence::geometric(3, 2.0).unwrap())
                .unwrap(),
        );
        triples.push(("uhf_filtration".into(), Qcms::new(LipSeminorm::new(t, phi).unwrap()).unwrap()));
    }
    triples.push(("five_point_space".into(), commutative_qcms(&random_metric_space(5, 77))));
    {
        let demo = DualActionDemo::build(&GroupDemoSpec {
            p: 2,
            depth: 2,
            cocycle: CocycleSpec::Trivial,
            scale_base: 2.0,
            length: None,
            scale: None,
        })
        .unwrap();
        let lip = LipSeminorm::with_tracial_basepoint(demo.triple.clone()).unwrap();
        triples.push(("group_dirac_z4".into(), Qcms::new(lip).unwrap()));
    }
    for (name, q) in &triples {
        let rep = quasi_leibniz_check(&q.lip, 10_000, 0xFEED);
        assert!(
            rep.max_defect <= 1.0 + 1e-10,
            "{name}: defect {} on {} pairs",
            rep.max_defect,
            rep.pairs_checked
        );
    }
    pass(2, "quasi-Leibniz defect <= 1 + 1e-10 on 1e4 pairs per triple");
}

#[test]
fn criterion_3_commutative_oracle_equivalence() {
    let mut count = 0usize;
    for seed in 0..50u64 {
        let n = 3 + (seed % 4) as usize; // sizes 3..6
        let dist = random_metric_space(n, 1000 + seed);
        let p = random_dyadic_probability(n, 2000 + seed);
        let qv = random_dyadic_probability(n, 3000 + seed);
        let exact = mk_commutative_oracle(&dist, &p, &qv).unwrap();
        let q = commutative_qcms(&dist);
        let sp = prob_state(q.algebra(), &p).unwrap();
        let sq = prob_state(q.algebra(), &qv).unwrap();
        let v = mk_distance(&q, &sp, &sq, &SolverOptions::with_seed(seed)).unwrap();
        assert!(
            v.contains(exact, 1e-9),
            "seed {seed}: bracket [{}, {}] misses exact {exact}",
            v.lower,
            v.upper
        );
        assert!(v.gap <= 1e-6, "seed {seed}: gap {}", v.gap);
        count += 1;
    }
    assert!(count >= 50);
    pass(3, "exact LP contained in brackets with gap <= 1e-6 on 50 instances");
}

#[test]
fn criterion_4_length_identities() {
    let opts = SolverOptions::with_seed(0x1D);
    let slack = 1e-7;

    // Commutative pool: the 4-cycle with its rotation isometries plus
    // non-isometric permutations of a generic 4-point space.
    let cycle = vec![
        vec![0.0, 1.0, 2.0, 1.0],
        vec![1.0, 0.0, 1.0, 2.0],
        vec![2.0, 1.0, 0.0, 1.0],
        vec![1.0, 2.0, 1.0, 0.0],
    ];
    let qc = commutative_qcms(&cycle);
    let rot = Automorphism::permutation(qc.algebra(), &[1, 2, 3, 0]).unwrap();
    let mut pool_c = vec![Automorphism::identity(qc.algebra()), rot.clone()];
    pool_c.push(rot.compose(&rot).unwrap());
    pool_c.push(Automorphism::permutation(qc.algebra(), &[3, 2, 1, 0]).unwrap());
    pool_c.push(Automorphism::permutation(qc.algebra(), &[1, 0, 2, 3]).unwrap());
    pool_c.push(Automorphism::permutation(qc.algebra(), &[0, 2, 1, 3]).unwrap());
    pool_c.push(Automorphism::permutation(qc.algebra(), &[2, 0, 3, 1]).unwrap());
    pool_c.push(Automorphism::permutation(qc.algebra(), &[3, 0, 1, 2]).unwrap());

    // M2-example pool: inner automorphisms.
    let (t2, q2) = m2_qcms();
    let mut pool_m = Vec::new();
    {
        let mut j = AlgebraElement::zero(&t2.algebra);
        j.data[0][(0, 0)] = linalg::c(1.0, 0.0);
        j.data[0][(1, 1)] = linalg::c(-1.0, 0.0);
        let mut s = AlgebraElement::zero(&t2.algebra);
        s.data[0][(0, 1)] = linalg::c(1.0, 0.0);
        s.data[0][(1, 0)] = linalg::c(1.0, 0.0);
        pool_m.push(Automorphism::inner(&j).unwrap());
        pool_m.push(Automorphism::inner(&s).unwrap());
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4242);
        for _ in 0..6 {
            let u = linalg::haar_unitary(&mut rng, 2);
            let uel = AlgebraElement::from_blocks(&t2.algebra, vec![u]).unwrap();
            pool_m.push(Automorphism::inner(&uel).unwrap());
        }
    }
    // Z/4 dual-action pool.
    let demo = DualActionDemo::build(&GroupDemoSpec {
        p: 2,
        depth: 2,
        cocycle: CocycleSpec::Trivial,
        scale_base: 2.0,
        length: None,
        scale: None,
    })
    .unwrap();
    let pool_g: Vec<Automorphism> =
        (0..4).map(|k| demo.dual_action_top(k).unwrap().automorphism).collect();
    let total = pool_c.len() + pool_m.len() + pool_g.len();
    assert!(total >= 20, "pool size {total}");

    // Identity checks on selected pairs per space.
    let run_identities = |q: &Qcms, pool: &[Automorphism], isometric: &[Automorphism]| {
        for i in 0..pool.len() {
            let alpha = &pool[i];
            let beta = &pool[(i + 1) % pool.len()];
            let comp = beta.inverse().unwrap().compose(alpha).unwrap();
            let lhs = mk_length(q, &comp, &opts).unwrap();
            let rhs = auto_mkdist(q, alpha, beta, &opts, None).unwrap();
            assert!(lhs.overlaps(&rhs, slack), "mkl/mkD identity [{i}]");
            let inv = mk_length(q, &alpha.inverse().unwrap(), &opts).unwrap();
            let fwd = mk_length(q, alpha, &opts).unwrap();
            assert!(inv.overlaps(&fwd, slack), "inverse invariance [{i}]");
            let sub = mk_length(q, &alpha.compose(beta).unwrap(), &opts).unwrap();
            assert!(sub.lower <= fwd.upper + mk_length(q, beta, &opts).unwrap().upper + slack);
        }
        for gamma in isometric {
            let beta = &pool[1 % pool.len()];
            let conj = gamma.inverse().unwrap().compose(beta).unwrap().compose(gamma).unwrap();
            let lhs = mk_length(q, &conj, &opts).unwrap();
            let rhs = mk_length(q, beta, &opts).unwrap();
            assert!(lhs.overlaps(&rhs, slack), "conjugation invariance");
        }
    };
    run_identities(&qc, &pool_c, &[rot.clone()]);
    run_identities(&q2, &pool_m, &[pool_m[0].clone()]);
    run_identities(&demo.qcms, &pool_g, &[pool_g[1].clone()]);

    // Exactness against the enumeration oracle on the commutative pool.
    let perms: Vec<Vec<usize>> =
        vec![vec![1, 2, 3, 0], vec![3, 2, 1, 0], vec![1, 0, 2, 3], vec![2, 0, 3, 1]];
    for (pi, pj) in [(0usize, 1usize), (0, 2), (1, 3), (2, 3)] {
        let alpha = Automorphism::permutation(qc.algebra(), &perms[pi]).unwrap();
        let beta = Automorphism::permutation(qc.algebra(), &perms[pj]).unwrap();
        let v = auto_mkdist(&qc, &alpha, &beta, &opts, None).unwrap();
        let mut oracle = 0.0f64;
        let inv_a = invert(&perms[pi]);
        let inv_b = invert(&perms[pj]);
        for x in 0..4 {
            oracle = oracle.max(cycle[inv_a[x]][inv_b[x]]);
        }
        assert!(
            (v.lower - oracle).abs() <= 1e-6,
            "enumeration oracle: {} vs {oracle}",
            v.lower
        );
        assert!(v.upper + 1e-9 >= oracle);
    }
    pass(4, "length identities within bracket overlap; exact on commutative pool");
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

#[test]
fn criterion_5_christensen_ivan_structure() {
    let chain = make_af_chain(&[vec![vec![2]]], 2).unwrap();
    let phi = State::tracial(chain.top());
    let proj = chain_projections(&chain, &phi).unwrap();
    let lam = LambdaSequence::new(vec![1.0, 2.0, 3.0]).unwrap();
    let t = Arc::new(christensen_ivan_dirac(&chain, &proj, &lam).unwrap());
    // Spectrum equals {lambda_n with multiplicity rank Q_n} exactly.
    let spec = dirac_spectrum(&t);
    let expect: Vec<(f64, usize)> = proj
        .levels
        .iter()
        .zip(lam.values.iter())
        .map(|(lvl, &l)| (l, lvl.q_rank))
        .collect();
    assert_eq!(spec.len(), expect.len());
    for ((v, m), (ev, em)) in spec.iter().zip(expect.iter()) {
        assert!((v - ev).abs() < 1e-10);
        assert_eq!(m, em);
    }
    // Compression identity on samples.
    for k in 0..=2usize {
        for seed in 0..4u64 {
            let a = chain.embed_to_top(k, &random_selfadjoint(&chain.algebras[k], 40 + seed));
            let comm = t.commutator_of(&a);
            let pk = &proj.levels[k].p;
            let diff = &comm - pk * &comm * pk;
            assert!(
                linalg::frob_norm(&diff) <= 1e-10 * (1.0 + linalg::frob_norm(&comm)),
                "compression identity at level {k}"
            );
        }
    }
    // Seminorm agreement across restriction.
    for k in 1..=2usize {
        let rt = restrict_triple(&t, k, &proj).unwrap();
        for seed in 0..4u64 {
            let a = random_selfadjoint(&rt.algebra, 80 + seed);
            let inner = linalg::op_norm(&rt.commutator_of(&a));
            let outer = linalg::op_norm(&t.commutator_of(&chain.embed_to_top(k, &a)));
            assert!((inner - outer).abs() <= 1e-10 * (1.0 + outer));
        }
    }
    pass(5, "filtration Dirac spectrum, compression identity, restriction agreement");
}

#[test]
fn criterion_6_af_convergence_table() {
    let chain = make_af_chain(&[vec![vec![2]]], 3).unwrap();
    let phi = State::tracial(chain.top());
    let proj = chain_projections(&chain, &phi).unwrap();
    let lam = LambdaSequence::geometric(4, 2.0).unwrap();
    let triple = Arc::new(christensen_ivan_dirac(&chain, &proj, &lam).unwrap());
    let top = Qcms::new(LipSeminorm::new(triple.clone(), phi.clone()).unwrap()).unwrap();
    let ctx = AfDefectContext { qcms: &top };
    let opts = SolverOptions::with_seed(7);

    let mut beta_uppers = Vec::new();
    for n in 0..3usize {
        let b = beta_sequence(&ctx, n, &opts).unwrap();
        assert!(b.value.lower <= b.value.upper + 1e-12);
        assert!(b.restricted_domain_justified, "tracial state justifies the domain restriction");
        beta_uppers.push(b.value.upper);
    }
    let mut defects = Vec::new();
    for n in 0..=3usize {
        let d = en_defect(&ctx, n, Some(&beta_uppers), &opts).unwrap();
        let tail: f64 = beta_uppers.iter().skip(n).sum();
        assert!(d.upper <= tail + 1e-12, "telescoping at level {n}");
        assert!(d.lower <= d.upper + 1e-12);
        defects.push(d);
    }
    for w in defects.windows(2) {
        assert!(
            w[1].upper < w[0].upper,
            "defect uppers must strictly decrease: {} -> {}",
            w[0].upper,
            w[1].upper
        );
    }
    // Tunnels with the automatic mixing parameter pass both checks, and the
    // extents decrease along the chain.
    let pi = Automorphism::identity(top.algebra());
    let mut extents = Vec::new();
    for n in 1..=3usize {
        let rt = Arc::new(restrict_triple(&triple, n, &proj).unwrap());
        let level = Qcms::new(LipSeminorm::with_tracial_basepoint(rt).unwrap()).unwrap();
        let data = af_level_data(&top, &level, n).unwrap();
        let eps = defects[n].upper.max(1e-7);
        let tunnel = build_tn_tunnel(&data, &pi, eps, None).unwrap();
        let left = verify_quantum_isometry(&tunnel, TunnelSide::Left).unwrap();
        let right = verify_quantum_isometry(&tunnel, TunnelSide::Right).unwrap();
        assert!(left.pass && right.pass, "tunnel checks at level {n}");
        let ext = tunnel_extent(&tunnel, &opts).unwrap();
        extents.push(ext.upper);
    }
    for w in extents.windows(2) {
        assert!(w[1] < w[0], "extent uppers must decrease: {:?}", extents);
    }
    pass(6, "defect table decreasing, telescoping, tunnels verified with auto epsilon");
}

#[test]
fn criterion_7_uhf_spatial_isometries() {
    let chain = make_af_chain(&[vec![vec![2]]], 2).unwrap();
    let phi = State::tracial(chain.top());
    let proj = chain_projections(&chain, &phi).unwrap();
    let t = Arc::new(
        christensen_ivan_dirac(&chain, &proj, &LambdaSequence::geometric(3, 2.0).unwrap()).unwrap(),
    );
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xF00D);
    for k in 0..10 {
        let u1 = linalg::haar_unitary(&mut rng, 2);
        let u2 = linalg::haar_unitary(&mut rng, 2);
        let u = AlgebraElement::from_blocks(&t.algebra, vec![linalg::kron(&u1, &u2)]).unwrap();
        let alpha = Automorphism::inner(&u).unwrap();
        let dec = iso_membership(&alpha, &t, Some(&proj)).unwrap();
        assert!(dec.member, "tensor unitary {k} rejected");
        let w = dec.witness.unwrap();
        let comm = &t.dirac * &w - &w * &t.dirac;
        assert!(linalg::op_norm(&comm) <= 1e-10, "witness {k} commutator {}", linalg::op_norm(&comm));
    }
    pass(7, "ten random tensor unitaries accepted with Dirac-commuting witnesses");
}

#[test]
fn criterion_8_dual_actions() {
    // Z/2 demo with the explicit tables, and the Z/4 tower demo.
    let z2 = DualActionDemo::build(&GroupDemoSpec {
        p: 2,
        depth: 1,
        cocycle: CocycleSpec::Trivial,
        scale_base: 2.0,
        length: Some(vec![0.0, 1.0]),
        scale: Some(vec![1.0, 1.0]),
    })
    .unwrap();
    let z4 = DualActionDemo::build(&GroupDemoSpec {
        p: 2,
        depth: 2,
        cocycle: CocycleSpec::Trivial,
        scale_base: 2.0,
        length: None,
        scale: None,
    })
    .unwrap();
    for demo in [&z2, &z4] {
        let n = demo.group.order();
        for k in 0..n {
            let da = demo.dual_action_top(k).unwrap();
            let comm = &demo.triple.dirac * &da.unitary - &da.unitary * &demo.triple.dirac;
            assert!(
                comm.iter().all(|z| z.re == 0.0 && z.im == 0.0),
                "multiplier commutation must be exact"
            );
            let dec = iso_membership(&da.automorphism, &demo.triple, None).unwrap();
            assert!(dec.member, "character {k} rejected");
        }
    }
    // Canonical quotient/section deviations, exact and reproducible.
    let big = qcms::groups::FiniteMetricGroup::cyclic_arc(4).unwrap();
    let small = qcms::groups::FiniteMetricGroup::cyclic_arc(2).unwrap();
    let f: Vec<usize> = (0..4).map(|x| x % 2).collect();
    let xi: Vec<usize> = vec![0, 1];
    let pair = IsoIsoPair::new(&big, &small, f, xi, 10.0, 1.0).unwrap();
    let dev1 = epsilon_iso_iso_check(&pair, &big, &small);
    let dev2 = epsilon_iso_iso_check(&pair, &big, &small);
    assert_eq!(dev1.max_deviation.to_bits(), dev2.max_deviation.to_bits(), "bit-identical reruns");
    assert!((dev1.max_deviation - std::f64::consts::PI).abs() < 1e-14);

    // Covariant defect equals the plain defect in the commuting and
    // restricting configuration.
    let opts = SolverOptions::with_seed(21);
    let lvl = &z4.levels[1];
    let data = qcms::tunnels::ChainLevelData {
        top: &z4.qcms,
        level: &lvl.qcms,
        inclusion: lvl.inclusion.clone(),
        expectation: lvl.expectation.clone(),
    };
    let m = lvl.sub_elements.len();
    let cov = qcms::tunnels::CovariantData {
        top_actions: (0..4).map(|k| z4.dual_action_top(k).unwrap().automorphism).collect(),
        level_actions: (0..4)
            .map(|k| z4.dual_action_level(1, k % m).unwrap().automorphism)
            .collect(),
        balls_whole_group: true,
        exact_section: true,
    };
    let pi = Automorphism::identity(z4.qcms.algebra());
    let rep = qcms::tunnels::covariant_bridge_check(&data, &pi, &cov, None, None, &opts).unwrap();
    assert!(rep.reduced, "reduction hypotheses must verify");
    assert!((rep.covariant_forward.upper - rep.plain.defect_forward.upper).abs() <= 1e-10);
    assert!((rep.covariant_forward.lower - rep.plain.defect_forward.lower).abs() <= 1e-10);
    pass(8, "dual actions: exact commutation, membership, exact deviations, covariant reduction");
}

// Criterion 9 (byte-identical CLI outputs) lives in the CLI crate's
// integration tests, where the binary is available; see
// crates/qcms-cli/tests/determinism.rs.
#[test]
fn criterion_9_pointer() {
    pass(9, "delegated to qcms-cli determinism tests (byte-identical reruns)");
}

use qcms::dirac::{christensen_ivan_dirac, restrict_triple, LambdaSequence};
use qcms::finalg::{make_af_chain, State};
use qcms::gns::chain_projections;
use qcms::metrics::engine::SolverOptions;
use qcms::metrics::{Automorphism, Qcms};
use qcms::seminorm::LipSeminorm;
use qcms::tunnels::*;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let t_all = Instant::now();
    let chain = make_af_chain(&[vec![vec![2]]], 3).unwrap();
    let phi = State::tracial(chain.top());
    let proj = chain_projections(&chain, &phi).unwrap();
    let lam = LambdaSequence::geometric(4, 2.0).unwrap();
    let triple = Arc::new(christensen_ivan_dirac(&chain, &proj, &lam).unwrap());
    let lip = LipSeminorm::new(triple.clone(), phi.clone()).unwrap();
    let top = Qcms::new(lip).unwrap();
    println!("setup: {:?}", t_all.elapsed());
    let ctx = AfDefectContext { qcms: &top };
    let opts = SolverOptions::with_seed(7);
    let mut betas = Vec::new();
    for n in 0..3usize {
        let t0 = Instant::now();
        let b = beta_sequence(&ctx, n, &opts).unwrap();
        println!("beta_{n}: [{:.6}, {:.6}] in {:?}", b.value.lower, b.value.upper, t0.elapsed());
        betas.push(b.value.upper);
    }
    let mut defects = Vec::new();
    for n in 0..4usize {
        let t0 = Instant::now();
        let d = en_defect(&ctx, n, Some(&betas), &opts).unwrap();
        println!("en_{n}: [{:.6}, {:.6}] {} in {:?}", d.lower, d.upper, d.method, t0.elapsed());
        defects.push(d);
    }
    // Tunnel at level 1 and 2 with auto-eps
    for n in [1usize, 2, 3] {
        let t0 = Instant::now();
        let rt = Arc::new(restrict_triple(&triple, n, &proj).unwrap());
        let rlip = LipSeminorm::with_tracial_basepoint(rt).unwrap();
        let lvl = Qcms::new(rlip).unwrap();
        let data = af_level_data(&top, &lvl, n).unwrap();
        let pi = Automorphism::identity(top.algebra());
        let tunnel = build_tn_tunnel(&data, &pi, defects[n].upper.max(1e-7), None).unwrap();
        let l = verify_quantum_isometry(&tunnel, TunnelSide::Left).unwrap();
        let r = verify_quantum_isometry(&tunnel, TunnelSide::Right).unwrap();
        println!("tunnel {n}: qiso L={} R={} in {:?}", l.pass, r.pass, t0.elapsed());
        let t1 = Instant::now();
        let ext = tunnel_extent(&tunnel, &opts).unwrap();
        println!("extent {n}: [{:.6}, {:.6}] in {:?}", ext.lower, ext.upper, t1.elapsed());
    }
    println!("total {:?}", t_all.elapsed());
}

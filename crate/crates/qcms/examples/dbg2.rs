use qcms::dirac::finite_metric_space_triple;
use qcms::metrics::engine::SolverOptions;
use qcms::metrics::lp::{random_dyadic_probability, random_metric_space};
use qcms::metrics::{mk_commutative_oracle, mk_distance, prob_state, Qcms};
use qcms::seminorm::LipSeminorm;
use std::sync::Arc;

fn main() {
    for seed in [45u64] {
        let n = 3 + (seed % 4) as usize;
        let dist = random_metric_space(n, 1000 + seed);
        let p = random_dyadic_probability(n, 2000 + seed);
        let qv = random_dyadic_probability(n, 3000 + seed);
        let exact = mk_commutative_oracle(&dist, &p, &qv).unwrap();
        let t = Arc::new(finite_metric_space_triple(&dist).unwrap());
        let q = Qcms::new(LipSeminorm::with_tracial_basepoint(t).unwrap()).unwrap();
        let sp = prob_state(q.algebra(), &p).unwrap();
        let sq = prob_state(q.algebra(), &qv).unwrap();
        let v = mk_distance(&q, &sp, &sq, &SolverOptions::with_seed(seed)).unwrap();
        println!("seed {seed} n {n}: exact {exact:.12} lower {:.12} upper {:.12} gap {:.3e}", v.lower, v.upper, v.gap);
    }
}

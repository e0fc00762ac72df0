//! Exact transportation linear program over rational arithmetic; the
//! independent oracle for the commutative specialization of the
//! Monge-Kantorovich distance.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};

use crate::error::{Error, Result};

/// Checks that a distance table is a genuine metric (exact comparisons;
/// callers supply exactly-representable data).
pub fn validate_metric(dist: &[Vec<f64>]) -> Result<()> {
    let n = dist.len();
    if n == 0 || dist.iter().any(|r| r.len() != n) {
        return Err(Error::NotAMetric("table must be square and nonempty".into()));
    }
    for i in 0..n {
        if dist[i][i] != 0.0 {
            return Err(Error::NotAMetric(format!("d({i},{i}) must be zero")));
        }
        for j in 0..n {
            if i != j && !(dist[i][j] > 0.0) {
                return Err(Error::NotAMetric(format!("d({i},{j}) must be positive")));
            }
            if dist[i][j] != dist[j][i] {
                return Err(Error::NotAMetric(format!("d({i},{j}) != d({j},{i})")));
            }
            for k in 0..n {
                if dist[i][k] > dist[i][j] + dist[j][k] {
                    return Err(Error::NotAMetric(format!(
                        "triangle inequality fails at ({i},{j},{k})"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn rat(x: f64) -> Result<BigRational> {
    BigRational::from_f64(x)
        .ok_or_else(|| Error::InvalidParameter(format!("non-finite value {x}")))
}

/// Exact Kantorovich distance between probability vectors on a finite
/// metric space of at most 8 points, by a two-phase rational simplex on the
/// transportation polytope.
pub fn kantorovich_exact(dist: &[Vec<f64>], p: &[f64], q: &[f64]) -> Result<f64> {
    validate_metric(dist)?;
    let n = dist.len();
    if n > 8 {
        return Err(Error::InvalidParameter(
            "exact oracle is specified for at most 8 points".into(),
        ));
    }
    if p.len() != n || q.len() != n {
        return Err(Error::DimensionMismatch("probability vectors must match table".into()));
    }
    let pr: Vec<BigRational> = p.iter().map(|&x| rat(x)).collect::<Result<_>>()?;
    let qr: Vec<BigRational> = q.iter().map(|&x| rat(x)).collect::<Result<_>>()?;
    if pr.iter().any(|x| x.is_negative()) || qr.iter().any(|x| x.is_negative()) {
        return Err(Error::InvalidParameter("probabilities must be nonnegative".into()));
    }
    let sp: BigRational = pr.iter().cloned().sum();
    let sq: BigRational = qr.iter().cloned().sum();
    if sp != sq {
        return Err(Error::InvalidParameter(
            "marginals must have exactly equal total mass".into(),
        ));
    }

    // Variables x_{ij} (column-major j*n + i); constraints: n row sums = p_i,
    // n-1 column sums = q_j (the last is dependent).
    let nvars = n * n;
    let ncons = 2 * n - 1;
    let mut a = vec![vec![BigRational::zero(); nvars]; ncons];
    let mut b = vec![BigRational::zero(); ncons];
    for i in 0..n {
        for j in 0..n {
            a[i][j * n + i] = BigRational::one();
        }
        b[i] = pr[i].clone();
    }
    for j in 0..n - 1 {
        for i in 0..n {
            a[n + j][j * n + i] = BigRational::one();
        }
        b[n + j] = qr[j].clone();
    }
    let cost: Vec<BigRational> =
        (0..nvars).map(|v| rat(dist[v % n][v / n])).collect::<Result<_>>()?;

    let opt = simplex_two_phase(a, b, cost)?;
    // The optimum of a rational LP with f64-exact data; report as f64.
    let num = opt.numer();
    let den = opt.denom();
    let (nf, df) = (big_to_f64(num), big_to_f64(den));
    Ok(nf / df)
}

fn big_to_f64(x: &BigInt) -> f64 {
    // Values stay small; fall back to string parsing for huge intermediates.
    x.to_string().parse::<f64>().unwrap_or(f64::NAN)
}

/// Two-phase primal simplex with Bland's rule; minimizes `cost·x` over
/// `Ax = b, x >= 0` (b >= 0). Exact rational arithmetic guarantees
/// termination and an exact optimum.
fn simplex_two_phase(
    a: Vec<Vec<BigRational>>,
    b: Vec<BigRational>,
    cost: Vec<BigRational>,
) -> Result<BigRational> {
    let m = a.len();
    let n = a[0].len();
    // Tableau with artificial variables: columns [x | artificials | rhs].
    let width = n + m + 1;
    let mut t = vec![vec![BigRational::zero(); width]; m];
    for i in 0..m {
        for j in 0..n {
            t[i][j] = a[i][j].clone();
        }
        t[i][n + i] = BigRational::one();
        t[i][width - 1] = b[i].clone();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1 objective: minimize sum of artificials.
    let mut obj = vec![BigRational::zero(); width];
    for i in 0..m {
        for j in 0..width {
            obj[j] -= t[i][j].clone();
        }
    }
    for j in n..n + m {
        obj[j] += BigRational::one();
    }
    run_simplex(&mut t, &mut obj, &mut basis, n + m)?;
    let phase1 = -obj[width - 1].clone();
    if !phase1.is_zero() {
        return Err(Error::InvalidParameter("transportation program infeasible".into()));
    }
    // Pivot remaining artificials out of the basis where possible.
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !t[i][j].is_zero()) {
                pivot(&mut t, &mut obj, &mut basis, i, j);
            }
        }
    }

    // Phase 2: original objective, artificial columns frozen.
    let mut obj2 = vec![BigRational::zero(); width];
    for (j, cj) in cost.iter().enumerate() {
        obj2[j] = cj.clone();
    }
    // Reduce objective over current basis.
    for i in 0..m {
        if basis[i] < n {
            let coef = obj2[basis[i]].clone();
            if !coef.is_zero() {
                for j in 0..width {
                    let delta = &coef * &t[i][j];
                    obj2[j] -= delta;
                }
            }
        }
    }
    run_simplex(&mut t, &mut obj2, &mut basis, n)?;
    Ok(-obj2[width - 1].clone())
}

fn run_simplex(
    t: &mut [Vec<BigRational>],
    obj: &mut [BigRational],
    basis: &mut [usize],
    allowed_cols: usize,
) -> Result<()> {
    let m = t.len();
    let width = obj.len();
    for _ in 0..100_000 {
        // Bland: entering = smallest column with negative reduced cost.
        let mut enter = None;
        for j in 0..allowed_cols {
            if obj[j].is_negative() {
                enter = Some(j);
                break;
            }
        }
        let Some(e) = enter else { return Ok(()) };
        // Leaving: smallest ratio; ties broken by smallest basis index.
        let mut leave: Option<usize> = None;
        let mut best: Option<BigRational> = None;
        for i in 0..m {
            if t[i][e].is_positive() {
                let ratio = &t[i][width - 1] / &t[i][e];
                let better = match &best {
                    None => true,
                    Some(r) => &ratio < r || (&ratio == r && basis[i] < basis[leave.unwrap()]),
                };
                if better {
                    best = Some(ratio);
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else {
            return Err(Error::InvalidParameter("unbounded transportation program".into()));
        };
        pivot(t, obj, basis, l, e);
    }
    Err(Error::InvalidParameter("simplex iteration cap exceeded".into()))
}

fn pivot(t: &mut [Vec<BigRational>], obj: &mut [BigRational], basis: &mut [usize], row: usize, col: usize) {
    let width = obj.len();
    let piv = t[row][col].clone();
    for j in 0..width {
        t[row][j] /= piv.clone();
    }
    for i in 0..t.len() {
        if i != row && !t[i][col].is_zero() {
            let f = t[i][col].clone();
            for j in 0..width {
                let delta = &f * &t[row][j];
                t[i][j] -= delta;
            }
        }
    }
    if !obj[col].is_zero() {
        let f = obj[col].clone();
        for j in 0..width {
            let delta = &f * &t[row][j];
            obj[j] -= delta;
        }
    }
    basis[row] = col;
}

/// Seeded random finite metric space with dyadic distances (exactly
/// representable in both f64 and rational arithmetic), metrized by
/// shortest-path closure.
pub fn random_metric_space(n: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut d = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..i {
            // Dyadic in [1/4, 2]: k/256 with k in 64..=512.
            let k: u32 = rng.random_range(64..=512);
            let v = k as f64 / 256.0;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    // Floyd-Warshall closure keeps dyadic exactness (sums of dyadics).
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Seeded random dyadic probability vector (sums exactly to one).
pub fn random_dyadic_probability(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let denom = 1024u32;
    let mut parts = vec![0u32; n];
    // n-1 cut points over 0..denom.
    let mut cuts: Vec<u32> = (0..n - 1).map(|_| rng.random_range(0..=denom)).collect();
    cuts.sort_unstable();
    let mut prev = 0u32;
    for (i, &cut) in cuts.iter().enumerate() {
        parts[i] = cut - prev;
        prev = cut;
    }
    parts[n - 1] = denom - prev;
    parts.iter().map(|&k| k as f64 / denom as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_marginals_give_zero() {
        let d = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let p = vec![0.5, 0.5];
        assert_eq!(kantorovich_exact(&d, &p, &p).unwrap(), 0.0);
    }

    #[test]
    fn two_point_unit_distance() {
        let d = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let v = kantorovich_exact(&d, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn three_point_path() {
        // d(1,2)=1, d(2,3)=1, d(1,3)=2: moving all mass across costs 2.
        let d = vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ];
        let v = kantorovich_exact(&d, &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn transport_plan_enumeration_oracle() {
        // Independent check on a 3-point instance: enumerate vertex plans of
        // the transportation polytope by brute-force grid refinement.
        let d = vec![
            vec![0.0, 0.5, 1.0],
            vec![0.5, 0.0, 0.75],
            vec![1.0, 0.75, 0.0],
        ];
        let p = [0.5, 0.25, 0.25];
        let q = [0.25, 0.25, 0.5];
        let exact = kantorovich_exact(&d, &p, &q).unwrap();
        // Dense grid over feasible plans (x11, x12, x21, x22 determine rest).
        let steps = 40;
        let mut best = f64::INFINITY;
        for a in 0..=steps {
            for b in 0..=steps {
                for c2 in 0..=steps {
                    for e in 0..=steps {
                        let x11 = 0.5 * a as f64 / steps as f64;
                        let x12 = 0.5 * b as f64 / steps as f64;
                        let x21 = 0.25 * c2 as f64 / steps as f64;
                        let x22 = 0.25 * e as f64 / steps as f64;
                        let x13 = p[0] - x11 - x12;
                        let x23 = p[1] - x21 - x22;
                        let x31 = q[0] - x11 - x21;
                        let x32 = q[1] - x12 - x22;
                        if x13 < -1e-12 || x23 < -1e-12 || x31 < -1e-12 || x32 < -1e-12 {
                            continue;
                        }
                        let x33 = q[2] - x13 - x23;
                        if x33 < -1e-12 {
                            continue;
                        }
                        let costv = x12 * 0.5
                            + x13 * 1.0
                            + x21 * 0.5
                            + x23 * 0.75
                            + x31 * 1.0
                            + x32 * 0.75;
                        best = best.min(costv);
                    }
                }
            }
        }
        assert!(exact <= best + 1e-9, "exact {exact} grid {best}");
        assert!(best - exact <= 0.05, "grid should come close");
    }

    #[test]
    fn non_metric_rejected() {
        let d = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        assert!(kantorovich_exact(&d, &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn random_spaces_are_metric_and_dyadic() {
        for seed in 0..10 {
            let d = random_metric_space(5, seed);
            validate_metric(&d).unwrap();
            for row in &d {
                for &x in row {
                    // Exactly representable: x * 256 integral.
                    assert_eq!((x * 256.0).fract(), 0.0);
                }
            }
            let p = random_dyadic_probability(5, seed + 100);
            assert_eq!(p.iter().sum::<f64>(), 1.0);
        }
    }
}

//! Dense complex linear algebra helpers shared across the crate.
//!
//! Everything is double precision; Hermitian eigenproblems go through
//! `nalgebra::SymmetricEigen`, which only reads the Hermitian part.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// The QR iteration occasionally fails to converge on highly degenerate
/// spectra; a deterministic diagonal regularization (graded shifts of size
/// `1e-13 * scale`) restores convergence without moving eigenvalues beyond
/// the tolerances used anywhere in this crate.
pub fn herm_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let finite =
        |se: &nalgebra::SymmetricEigen<C64, nalgebra::Dyn>| se.eigenvalues.iter().all(|v| v.is_finite());
    let mut se = m.clone().symmetric_eigen();
    if !finite(&se) {
        let scale = frob_norm(m).max(1e-300);
        let mut shift = 1e-13 * scale;
        let mut ok = false;
        for _ in 0..3 {
            let mut reg = m.clone();
            for i in 0..n {
                reg[(i, i)] += c(shift * (i as f64 + 1.0) / n as f64, 0.0);
            }
            se = reg.symmetric_eigen();
            if finite(&se) {
                ok = true;
                break;
            }
            shift *= 100.0;
        }
        if !ok {
            panic!("Hermitian eigensolver failed to converge (n = {n})");
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &se.eigenvectors.column(i).into_owned());
    }
    (vals, vecs)
}

/// Largest singular value, computed as sqrt(lambda_max(M^* M)).
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let g = m.adjoint() * m;
    let (vals, _) = herm_eigen(&g);
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Trace norm (sum of singular values).
pub fn trace_norm(m: &CMat) -> f64 {
    let g = m.adjoint() * m;
    let (vals, _) = herm_eigen(&g);
    vals.iter().map(|v| v.max(0.0).sqrt()).sum()
}

/// Trace norm of a Hermitian matrix (sum of |eigenvalues|).
pub fn trace_norm_herm(m: &CMat) -> f64 {
    let (vals, _) = herm_eigen(m);
    vals.iter().map(|v| v.abs()).sum()
}

pub fn frob_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn anti_hermitian_part(m: &CMat) -> CMat {
    (m - m.adjoint()) * c(0.5, 0.0)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Column-major vectorization, matching the matrix-unit basis convention.
pub fn vec_cm(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvec_cm(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Random matrix with iid standard complex Gaussian entries.
pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// Random GUE-style Hermitian matrix.
pub fn gaussian_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = gaussian_matrix(rng, n, n);
    hermitian_part(&a)
}

/// Haar-distributed random unitary (QR of a Gaussian matrix with phase fix).
pub fn haar_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = gaussian_matrix(rng, n, n);
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        let col = q.column(j) * (phase.conj());
        q.set_column(j, &col);
    }
    q
}

pub fn random_unit_vector(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    loop {
        let v = CVec::from_fn(n, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c(re, im)
        });
        let nrm = v.norm();
        if nrm > 1e-8 {
            return v / c(nrm, 0.0);
        }
    }
}

pub fn random_real_vector(rng: &mut ChaCha8Rng, n: usize) -> RVec {
    RVec::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

/// Orthonormal basis of the column span of `m`, rank cut at `tol` relative
/// to the largest singular value.
pub fn column_span_basis(m: &CMat, tol: f64) -> CMat {
    let g = m.adjoint() * m;
    let (vals, vecs) = herm_eigen(&g);
    let smax = vals.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    if smax == 0.0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let mut cols: Vec<CVec> = Vec::new();
    for (i, &lam) in vals.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        if s > tol * smax {
            let u = m * vecs.column(i);
            cols.push(&u / c(s, 0.0));
        }
    }
    mat_from_cols(m.nrows(), &cols)
}

pub fn mat_from_cols(rows: usize, cols: &[CVec]) -> CMat {
    let mut m = CMat::zeros(rows, cols.len());
    for (j, v) in cols.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// Kernel basis of a real matrix (columns); rank cut at `tol` relative to
/// the largest singular value. Computed through a QR factor followed by an
/// SVD of the small triangular factor, so the stated singular-value
/// resolution is honored even for very tall inputs.
pub fn real_kernel_basis(m: &RMat, tol: f64) -> RMat {
    let n = m.ncols();
    let mut r = if m.nrows() > n { m.clone().qr().r() } else { m.clone() };
    if r.nrows() < n {
        // Pad to square so every kernel direction appears among V^T rows.
        let mut padded = RMat::zeros(n, n);
        padded.view_mut((0, 0), (r.nrows(), n)).copy_from(&r);
        r = padded;
    }
    let svd = nalgebra::SVD::new(r, false, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let vt = svd.v_t.expect("requested V^T");
    let mut cols: Vec<RVec> = Vec::new();
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] <= tol * smax {
            cols.push(vt.row(i).transpose());
        }
    }
    // Rows of V^T beyond the number of singular values (wide R) are kernel.
    for i in svd.singular_values.len()..vt.nrows() {
        cols.push(vt.row(i).transpose());
    }
    let mut out = RMat::zeros(n, cols.len());
    for (j, v) in cols.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Real inner product Re tr(B^* A) under which adjoints of our linear maps
/// are taken.
pub fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

/// Real parametrization of a Hermitian n x n matrix: n diagonal entries,
/// then (re, im) for each strictly upper entry, column-major order.
pub fn herm_param_dim(n: usize) -> usize {
    n * n
}

pub fn herm_to_params(m: &CMat) -> RVec {
    let n = m.nrows();
    let mut out = RVec::zeros(n * n);
    let mut k = 0;
    for i in 0..n {
        out[k] = m[(i, i)].re;
        k += 1;
    }
    for j in 0..n {
        for i in 0..j {
            out[k] = m[(i, j)].re;
            out[k + 1] = m[(i, j)].im;
            k += 2;
        }
    }
    out
}

pub fn params_to_herm(p: &RVec, n: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        m[(i, i)] = c(p[k], 0.0);
        k += 1;
    }
    for j in 0..n {
        for i in 0..j {
            m[(i, j)] = c(p[k], p[k + 1]);
            m[(j, i)] = c(p[k], -p[k + 1]);
            k += 2;
        }
    }
    m
}

/// Polar unitary factor of an invertible matrix: W (W^* W)^{-1/2}.
pub fn polar_unitary(w: &CMat) -> CMat {
    let g = w.adjoint() * w;
    let (vals, vecs) = herm_eigen(&g);
    let n = w.nrows();
    let mut inv_sqrt = CMat::zeros(n, n);
    for i in 0..n {
        let s = vals[i].max(f64::MIN_POSITIVE).sqrt();
        inv_sqrt[(i, i)] = c(1.0 / s, 0.0);
    }
    w * (&vecs * inv_sqrt * vecs.adjoint())
}

/// Smallest singular value.
pub fn min_singular(m: &CMat) -> f64 {
    let g = m.adjoint() * m;
    let (vals, _) = herm_eigen(&g);
    vals.first().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Group sorted eigenvalues into (value, multiplicity) clusters at `tol`.
pub fn cluster_values(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &v in sorted {
        match out.last_mut() {
            Some((rep, count)) if (v - *rep).abs() <= tol => {
                *rep = (*rep * (*count as f64) + v) / (*count as f64 + 1.0);
                *count += 1;
            }
            _ => out.push((v, 1)),
        }
    }
    out
}

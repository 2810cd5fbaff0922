//! Small helpers shared by the pipeline stages: planar complex GEMM on top
//! of `matrixmultiply`, and a few dense solves nalgebra does not expose
//! directly.

use crate::{from_f64, CMatrix, Cplx, Scalar};

/// Column-major complex matrix stored as separate real planes.
///
/// The greedy beam search accumulates its objective tables in `f64`, and
/// `matrixmultiply::dgemm` on the planes is several times faster than a
/// straight complex triple loop on this crate's matrix sizes.
pub(crate) struct Planar {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl Planar {
    pub fn from_cmatrix<T: Scalar>(m: &CMatrix<T>) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for c in m.iter() {
            re.push(c.re.to_f64().unwrap());
            im.push(c.im.to_f64().unwrap());
        }
        Planar { re, im, rows, cols }
    }

    fn zeros(rows: usize, cols: usize) -> Self {
        Planar { re: vec![0.0; rows * cols], im: vec![0.0; rows * cols], rows, cols }
    }
}

/// `C = op(A) · B` with `op(A) = A` or `op(A) = A^H`, all column-major.
pub(crate) fn cgemm(a: &Planar, adjoint_a: bool, b: &Planar) -> Planar {
    let (m, k) = if adjoint_a { (a.cols, a.rows) } else { (a.rows, a.cols) };
    assert_eq!(b.rows, k, "inner dimensions must agree");
    let n = b.cols;
    // Strides express the transpose; the conjugation folds into term signs.
    let (rsa, csa) = if adjoint_a { (a.rows as isize, 1) } else { (1, a.rows as isize) };
    let (rsb, csb) = (1isize, b.rows as isize);
    let mut c = Planar::zeros(m, n);
    let (s_re, s_im) = if adjoint_a { (1.0, -1.0) } else { (-1.0, 1.0) };
    unsafe {
        let acc = |alpha: f64, pa: *const f64, pb: *const f64, beta: f64, pc: *mut f64| {
            matrixmultiply::dgemm(m, k, n, alpha, pa, rsa, csa, pb, rsb, csb, beta, pc, 1, m as isize);
        };
        // re(C) = Ar·Br ∓ Ai·Bi, im(C) = Ar·Bi ± Ai·Br.
        acc(1.0, a.re.as_ptr(), b.re.as_ptr(), 0.0, c.re.as_mut_ptr());
        acc(s_re, a.im.as_ptr(), b.im.as_ptr(), 1.0, c.re.as_mut_ptr());
        acc(1.0, a.re.as_ptr(), b.im.as_ptr(), 0.0, c.im.as_mut_ptr());
        acc(s_im, a.im.as_ptr(), b.re.as_ptr(), 1.0, c.im.as_mut_ptr());
    }
    c
}

/// Singular values in descending order (nalgebra returns them unsorted).
pub(crate) fn singular_values_desc<T: Scalar>(m: &CMatrix<T>) -> Vec<T> {
    let mut sv: Vec<T> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    sv
}

/// Minimum-norm least-squares solve of `A X = B` via SVD, ignoring singular
/// values below `σ_max · 1e-12`. This is the fallback for systems too
/// ill-conditioned for the factorization-based paths: the result stays
/// finite when `A` loses rank, at the cost of a full SVD.
pub(crate) fn svd_least_squares<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let svd = a.clone().svd(true, true);
    let eps = svd.singular_values.max() * from_f64::<T>(1e-12);
    svd.solve(b, eps).expect("both SVD factors were requested")
}

/// Solves `A X = B` for Hermitian positive definite `A`, falling back to LU
/// when the Cholesky factorization fails marginally.
pub(crate) fn hermitian_solve<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> Option<CMatrix<T>> {
    if let Some(chol) = a.clone().cholesky() {
        return Some(chol.solve(b));
    }
    a.clone().lu().solve(b)
}

/// `tr(M M^H)` as a real scalar.
pub(crate) fn frob_sq<T: Scalar>(m: &CMatrix<T>) -> T {
    m.iter().map(|c: &Cplx<T>| c.norm_sqr()).fold(T::zero(), |s, x| s + x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CMat64;
    use nalgebra::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cmat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat64 {
        CMat64::from_fn(r, c, |_, _| Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn planar_gemm_matches_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(m, k, n) in &[(3usize, 4usize, 5usize), (16, 64, 33), (1, 1, 1), (8, 2, 8)] {
            let a = random_cmat(&mut rng, m, k);
            let b = random_cmat(&mut rng, k, n);
            let c = cgemm(&Planar::from_cmatrix(&a), false, &Planar::from_cmatrix(&b));
            let reference = &a * &b;
            for j in 0..n {
                for i in 0..m {
                    let got = Complex::new(c.re[j * m + i], c.im[j * m + i]);
                    assert!((got - reference[(i, j)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn planar_gemm_adjoint_matches_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_cmat(&mut rng, 16, 896);
        let b = random_cmat(&mut rng, 16, 40);
        let c = cgemm(&Planar::from_cmatrix(&a), true, &Planar::from_cmatrix(&b));
        let reference = a.adjoint() * &b;
        assert_eq!((c.rows, c.cols), (896, 40));
        for j in 0..c.cols {
            for i in 0..c.rows {
                let got = Complex::new(c.re[j * c.rows + i], c.im[j * c.rows + i]);
                assert!((got - reference[(i, j)]).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn hermitian_solve_recovers_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_cmat(&mut rng, 6, 6);
        let a = &g * g.adjoint() + CMat64::identity(6, 6);
        let b = random_cmat(&mut rng, 6, 3);
        let x = hermitian_solve(&a, &b).unwrap();
        assert!((&a * x - b).norm() < 1e-10);
    }
}

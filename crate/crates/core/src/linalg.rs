//! Small numerical helpers shared by the estimation and synthesis modules.
//!
//! Everything here is a thin wrapper around nalgebra decompositions with the
//! conventions used throughout the crate pinned down: row-major vectorization,
//! descending singular values, relative rank thresholds.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix with dynamic size.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector with dynamic size.
pub type CVector = DVector<Complex64>;
/// Dense real matrix with dynamic size.
pub type RMatrix = DMatrix<f64>;
/// Dense real column vector with dynamic size.
pub type RVector = DVector<f64>;

/// Largest modulus over all entries; infinite if any entry is not finite, so
/// NaN cannot slip through threshold comparisons.
pub fn max_modulus(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| {
        if z.re.is_finite() && z.im.is_finite() {
            acc.max(z.norm())
        } else {
            f64::INFINITY
        }
    })
}

/// Singular value decomposition `A = U diag(s) V†` with `s` descending.
///
/// `u` has one column per singular value (zero columns past the rank); `v` is
/// always a full unitary, so its trailing columns span the null space.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

/// One-sided Jacobi SVD.
///
/// nalgebra's bidiagonal SVD mis-computes singular values of exactly
/// rank-deficient Hankel matrices (reconstruction errors around 1e-3), so the
/// decomposition at the heart of every rank decision is done here instead:
/// cyclic column orthogonalization, which carries high relative accuracy even
/// for tiny singular values, at the matrix sizes this crate works with.
pub fn svd(a: &CMatrix) -> Result<Svd> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter("svd of an empty matrix".into()));
    }
    if rows < cols {
        // Work on the adjoint and swap factors.
        let Svd { u, s, v } = svd(&a.adjoint())?;
        return Ok(Svd { u: v, s, v: u });
    }

    let mut work = a.clone();
    let mut v = CMatrix::identity(cols, cols);
    let tol = 1e-15;
    // Pairs whose inner product is below the machine floor of the matrix
    // scale cannot influence any singular value; without this cutoff the
    // roundoff junk left after collapsing parallel columns never settles.
    let scale0 = (0..cols).map(|j| work.column(j).norm()).fold(0.0, f64::max);
    let floor = (f64::EPSILON * scale0) * (f64::EPSILON * scale0);
    let max_sweeps = 64;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in (p + 1)..cols {
                let col_p = work.column(p);
                let col_q = work.column(q);
                let app = col_p.norm_squared();
                let aqq = col_q.norm_squared();
                let apq: Complex64 = col_p.dotc(&col_q);
                let g = apq.norm();
                if g <= tol * (app * aqq).sqrt() || g <= floor {
                    continue;
                }
                rotated = true;
                let alpha = apq / Complex64::new(g, 0.0);
                let tau = (aqq - app) / (2.0 * g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // new_p = c·p − s·ᾱ·q ; new_q = s·α·p + c·q
                let rotate = |m: &mut CMatrix| {
                    let n_rows = m.nrows();
                    for i in 0..n_rows {
                        let mp = m[(i, p)];
                        let mq = m[(i, q)];
                        m[(i, p)] = mp * Complex64::new(c, 0.0)
                            - mq * alpha.conj() * Complex64::new(s, 0.0);
                        m[(i, q)] = mp * alpha * Complex64::new(s, 0.0)
                            + mq * Complex64::new(c, 0.0);
                    }
                };
                rotate(&mut work);
                rotate(&mut v);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi SVD did not converge".into()));
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols).map(|j| work.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut u = CMatrix::zeros(rows, cols);
    let mut v_sorted = CMatrix::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        if sigma > 0.0 {
            u.set_column(dst, &(work.column(src) / Complex64::new(sigma, 0.0)));
        }
        v_sorted.set_column(dst, &v.column(src));
    }
    Ok(Svd { u, s, v: v_sorted })
}

/// [`svd`] of a real matrix; the factors are real-valued in complex storage.
pub fn svd_real(a: &RMatrix) -> Result<Svd> {
    svd(&complexify(a))
}

/// Operator (spectral) norm: the largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    svd(m).map(|d| d.s.first().copied().unwrap_or(0.0)).unwrap_or(f64::INFINITY)
}

/// Operator norm of a real matrix.
pub fn operator_norm_real(m: &RMatrix) -> f64 {
    operator_norm(&complexify(m))
}

/// Singular values in descending order.
pub fn singular_values_desc(m: &RMatrix) -> Vec<f64> {
    svd_real(m).map(|d| d.s).unwrap_or_default()
}

/// Number of singular values above `rel_tol` times the largest one.
///
/// `values` must be sorted in descending order. A zero matrix has rank 0.
pub fn numerical_rank(values: &[f64], rel_tol: f64) -> usize {
    match values.first() {
        None => 0,
        Some(&s0) if s0 <= 0.0 => 0,
        Some(&s0) => values.iter().take_while(|&&s| s > rel_tol * s0).count(),
    }
}

/// Row-major vectorization: stacks the rows of `m` into a single column.
///
/// With this convention the transfer matrix `Σ_k K_k ⊗ conj(K_k)` of a Kraus
/// map satisfies `vec(Σ_k K ρ K†) = T̂ · vec(ρ)`.
pub fn vec_row_major(m: &CMatrix) -> CVector {
    let (rows, cols) = m.shape();
    CVector::from_iterator(rows * cols, m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()))
}

/// Inverse of [`vec_row_major`] for square matrices.
pub fn unvec_row_major(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// Eigenvalues of a general complex square matrix, via its Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &CMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Complex Schur decomposition `m = Q T Q†` with `T` upper triangular.
pub fn schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            context: "schur decomposition",
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .map(|s| s.unpack())
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))
}

/// Eigenvectors of an upper-triangular matrix `t`, one column per diagonal
/// entry, computed by back-substitution. Near-defective eigenvalues produce
/// ill-conditioned (but finite) columns; callers must validate the result.
pub fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let r = t.nrows();
    let scale = max_modulus(t).max(1.0);
    // Denominator floor keeps defective clusters finite instead of overflowing.
    let floor = scale * f64::EPSILON;
    let mut x = CMatrix::zeros(r, r);
    for i in 0..r {
        let lambda = t[(i, i)];
        let mut y = CVector::zeros(r);
        y[i] = Complex64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in (j + 1)..=i {
                acc += t[(j, k)] * y[k];
            }
            let mut den = lambda - t[(j, j)];
            if den.norm() < floor {
                den = Complex64::new(floor, 0.0);
            }
            y[j] = acc / den;
        }
        let norm = y.norm();
        x.set_column(i, &(y / Complex64::new(norm, 0.0)));
    }
    x
}

/// Eigendecomposition `A = V diag(values) V†` of a Hermitian matrix,
/// eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Cyclic two-sided Jacobi eigendecomposition for Hermitian matrices; the
/// same rotation kernel as [`svd`], applied symmetrically.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEig> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "hermitian_eig needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut m = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v = CMatrix::identity(n, n);
    let scale = max_modulus(&m).max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;
    let mut converged = false;
    for _ in 0..64 {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let g = m[(p, q)];
                if g.norm() <= tol {
                    continue;
                }
                rotated = true;
                let alpha = g / Complex64::new(g.norm(), 0.0);
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * g.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (cc, sa, sac) = (
                    Complex64::new(c, 0.0),
                    alpha * Complex64::new(s, 0.0),
                    alpha.conj() * Complex64::new(s, 0.0),
                );
                // Columns: J acts on the right.
                for i in 0..n {
                    let mp = m[(i, p)];
                    let mq = m[(i, q)];
                    m[(i, p)] = mp * cc - mq * sac;
                    m[(i, q)] = mp * sa + mq * cc;
                }
                // Rows: J† acts on the left (conjugated coefficients).
                for j in 0..n {
                    let mp = m[(p, j)];
                    let mq = m[(q, j)];
                    m[(p, j)] = mp * cc - mq * sa;
                    m[(q, j)] = mp * sac + mq * cc;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = vp * cc - vq * sac;
                    v[(i, q)] = vp * sa + vq * cc;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi eigeniteration did not converge".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    Ok(HermitianEig { values, vectors })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_eig(m).map(|e| e.values).unwrap_or_default()
}

/// Converts a real matrix to complex storage.
pub fn complexify(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn schur_reconstructs_complex_matrix() {
        let m = CMatrix::from_row_slice(3, 3, &[
            c(0.2, 0.1), c(-0.4, 0.0), c(0.0, 0.7),
            c(0.3, -0.2), c(0.1, 0.0), c(0.5, 0.1),
            c(0.0, 0.0), c(-0.1, 0.3), c(-0.6, 0.0),
        ]);
        let (q, t) = schur(&m).unwrap();
        // T must be upper triangular and Q unitary.
        for i in 0..3 {
            for j in 0..i {
                assert!(t[(i, j)].norm() < 1e-12, "t not triangular at ({i},{j})");
            }
        }
        let qhq = q.adjoint() * &q;
        assert!(max_modulus(&(&qhq - CMatrix::identity(3, 3))) < 1e-12);
        let rec = &q * &t * q.adjoint();
        assert!(max_modulus(&(&rec - &m)) < 1e-12);
    }

    #[test]
    fn eigenvalues_of_diagonal_matrix() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.9)]));
        let mut eigs = eigenvalues(&m).unwrap();
        eigs.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
        assert_relative_eq!(eigs[0].im, 0.9, epsilon = 1e-12);
        assert_relative_eq!(eigs[1].re, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn svd_reconstructs_and_sorts() {
        let m = RMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, -0.3, 0.1, 4.0, 0.0, 1.0, -2.0]);
        let dec = svd_real(&m).unwrap();
        for i in 1..dec.s.len() {
            assert!(dec.s[i - 1] >= dec.s[i], "singular values not sorted");
        }
        let sigma = CMatrix::from_fn(3, 3, |i, j| {
            if i == j { c(dec.s[i], 0.0) } else { c(0.0, 0.0) }
        });
        let rec = &dec.u * sigma * dec.v.adjoint();
        assert!(max_modulus(&(rec - complexify(&m))) < 1e-13);
        assert!(max_modulus(&(dec.v.adjoint() * &dec.v - CMatrix::identity(3, 3))) < 1e-13);
        assert_relative_eq!(operator_norm_real(&m), dec.s[0], epsilon = 1e-12);
    }

    #[test]
    fn svd_handles_rank_deficient_hankel() {
        // Regression: an exactly rank-3 Hankel window of a qubit rotation
        // sequence on which bidiagonal SVD implementations lose four digits.
        // Reference singular values computed with LAPACK dgesdd.
        let a: Vec<f64> = (0..16)
            .map(|t| {
                let x = t as f64;
                0.3 + 0.45 * (1.999_106_700_574_733 * x).cos() - 0.2 * (1.999_106_700_574_733 * x).sin()
            })
            .collect();
        let m = RMatrix::from_fn(8, 8, |i, j| a[i + j]);
        let dec = svd_real(&m).unwrap();
        let sigma = CMatrix::from_fn(8, 8, |i, j| {
            if i == j { c(dec.s[i], 0.0) } else { c(0.0, 0.0) }
        });
        let rec = &dec.u * sigma * dec.v.adjoint();
        assert!(max_modulus(&(rec - complexify(&m))) < 1e-13, "reconstruction");
        assert!(dec.s[3] < 1e-13 * dec.s[0], "rank must be exactly 3");
    }

    #[test]
    fn svd_of_complex_and_rectangular_matrices() {
        let m = CMatrix::from_row_slice(2, 3, &[
            c(1.0, 0.5), c(0.0, -2.0), c(0.3, 0.0),
            c(-1.0, 1.0), c(2.0, 0.0), c(0.0, 0.7),
        ]);
        let dec = svd(&m).unwrap();
        assert_eq!(dec.u.shape(), (2, 2));
        assert_eq!(dec.v.shape(), (3, 2));
        let sigma = CMatrix::from_fn(2, 2, |i, j| {
            if i == j { c(dec.s[i], 0.0) } else { c(0.0, 0.0) }
        });
        let rec = &dec.u * sigma * dec.v.adjoint();
        assert!(max_modulus(&(rec - &m)) < 1e-13);
    }

    #[test]
    fn hermitian_eig_diagonalizes() {
        let m = CMatrix::from_row_slice(3, 3, &[
            c(1.0, 0.0), c(0.2, 0.4), c(-0.3, 0.0),
            c(0.2, -0.4), c(-0.5, 0.0), c(0.0, 0.9),
            c(-0.3, 0.0), c(0.0, -0.9), c(2.0, 0.0),
        ]);
        let eig = hermitian_eig(&m).unwrap();
        for i in 1..3 {
            assert!(eig.values[i - 1] <= eig.values[i]);
        }
        let lam = CMatrix::from_fn(3, 3, |i, j| {
            if i == j { c(eig.values[i], 0.0) } else { c(0.0, 0.0) }
        });
        let rec = &eig.vectors * lam * eig.vectors.adjoint();
        assert!(max_modulus(&(rec - &m)) < 1e-13);
        assert!(max_modulus(&(eig.vectors.adjoint() * &eig.vectors - CMatrix::identity(3, 3))) < 1e-13);
        // Trace check: eigenvalue sum equals the trace.
        let sum: f64 = eig.values.iter().sum();
        assert_relative_eq!(sum, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn triangular_eigenvectors_diagonalize() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.8, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        let (q, t) = schur(&m).unwrap();
        let y = triangular_eigenvectors(&t);
        let x = &q * &y;
        let lam = CMatrix::from_diagonal(&CVector::from_vec(vec![t[(0, 0)], t[(1, 1)]]));
        let rec = &x * lam * x.clone().try_inverse().unwrap();
        assert!(max_modulus(&(&rec - &m)) < 1e-10);
    }

    #[test]
    fn row_major_vec_round_trip() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 2.0), c(3.0, 4.0), c(5.0, 6.0), c(7.0, 8.0)]);
        let v = vec_row_major(&m);
        assert_eq!(v[1], c(3.0, 4.0)); // row 0, col 1
        assert_eq!(v[2], c(5.0, 6.0)); // row 1, col 0
        assert_eq!(unvec_row_major(&v, 2), m);
    }

    #[test]
    fn rank_thresholding() {
        assert_eq!(numerical_rank(&[4.0, 1.0, 1e-12], 1e-9), 2);
        assert_eq!(numerical_rank(&[0.0, 0.0], 1e-9), 0);
        assert_eq!(numerical_rank(&[], 1e-9), 0);
    }
}

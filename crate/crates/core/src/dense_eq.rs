//! Small dense Sylvester and Lyapunov solvers.
//!
//! [`solve_sylvester_dense`] is Bartels–Stewart over the real Schur forms
//! of both coefficients. [`kron_oracle`] is the brute-force reference that
//! vectorizes the equation; it is only meant for test-sized problems.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::LinalgError;
use crate::linalg::{diagonal_blocks, eig_sym, ensure_finite, real_schur};

/// Largest dimension accepted by [`kron_oracle`].
pub const KRON_ORACLE_MAX_DIM: usize = 64;

/// Solves `T1 Y + Y T2ᵀ = F` for upper quasi-triangular `t1`, `t2`.
///
/// Column blocks are processed right to left, row blocks bottom to top;
/// every diagonal coupling is a Kronecker system of order at most four.
fn quasi_triangular_sylvester(
    t1: &DMatrix<f64>,
    t2: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> Result<DMatrix<f64>, LinalgError> {
    let (k, l) = f.shape();
    let rows = block_ranges(t1);
    let cols = block_ranges(t2);
    let scale = t1.norm() + t2.norm();
    let mut y = DMatrix::zeros(k, l);
    for &(c0, cb) in cols.iter().rev() {
        let mut rhs = f.columns(c0, cb).into_owned();
        let tail = c0 + cb;
        if tail < l {
            // rhs -= Y[:, tail..] · T2[c0..c0+cb, tail..]ᵀ
            let yt = y.columns(tail, l - tail);
            let t2row = t2.view((c0, tail), (cb, l - tail));
            rhs.gemm(-1.0, &yt, &t2row.transpose(), 1.0);
        }
        for &(r0, rb) in rows.iter().rev() {
            let mut block = rhs.rows(r0, rb).into_owned();
            let below = r0 + rb;
            if below < k {
                let t1row = t1.view((r0, below), (rb, k - below));
                let ycol = y.view((below, c0), (k - below, cb));
                block.gemm(-1.0, &t1row, &ycol, 1.0);
            }
            let a = t1.view((r0, r0), (rb, rb));
            let b = t2.view((c0, c0), (cb, cb));
            let x = small_sylvester(a, b, &block, scale)?;
            y.view_mut((r0, c0), (rb, cb)).copy_from(&x);
        }
    }
    Ok(y)
}

fn block_ranges(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let mut start = 0;
    diagonal_blocks(t)
        .into_iter()
        .map(|size| {
            let r = (start, size);
            start += size;
            r
        })
        .collect()
}

/// `a X + X bᵀ = rhs` for blocks of order ≤ 2, via the Kronecker form
/// `(I ⊗ a + b ⊗ I) vec X = vec rhs` and partially pivoted elimination.
#[allow(clippy::needless_range_loop)]
fn small_sylvester(
    a: DMatrixView<'_, f64>,
    b: DMatrixView<'_, f64>,
    rhs: &DMatrix<f64>,
    scale: f64,
) -> Result<DMatrix<f64>, LinalgError> {
    let (p, q) = (a.nrows(), b.nrows());
    let dim = p * q;
    let mut m = [[0.0f64; 5]; 4];
    for jb in 0..q {
        for ia in 0..p {
            let row = jb * p + ia;
            for ka in 0..p {
                m[row][jb * p + ka] += a[(ia, ka)];
            }
            for kb in 0..q {
                m[row][kb * p + ia] += b[(jb, kb)];
            }
            m[row][4] = rhs[(ia, jb)];
        }
    }
    let tiny = 1e2 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        if m[pivot][col].abs() <= tiny {
            return Err(LinalgError::Singular("bartels_stewart"));
        }
        m.swap(col, pivot);
        for r in (col + 1)..dim {
            let factor = m[r][col] / m[col][col];
            if factor != 0.0 {
                for c in col..dim {
                    m[r][c] -= factor * m[col][c];
                }
                m[r][4] -= factor * m[col][4];
            }
        }
    }
    let mut x = [0.0f64; 4];
    for r in (0..dim).rev() {
        let mut acc = m[r][4];
        for c in (r + 1)..dim {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Ok(DMatrix::from_column_slice(p, q, &x[..dim]))
}

fn check_square(m: &DMatrix<f64>, what: &str) -> Result<(), LinalgError> {
    if m.is_square() {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Solves `H Y + Y Gᵀ + F = 0` by Bartels–Stewart.
pub fn solve_sylvester_dense(
    h: &DMatrix<f64>,
    g: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> Result<DMatrix<f64>, LinalgError> {
    check_square(h, "H")?;
    check_square(g, "G")?;
    if f.shape() != (h.nrows(), g.nrows()) {
        return Err(LinalgError::DimensionMismatch(format!(
            "F is {}x{}, expected {}x{}",
            f.nrows(),
            f.ncols(),
            h.nrows(),
            g.nrows()
        )));
    }
    ensure_finite(f, "solve_sylvester_dense")?;
    if f.is_empty() {
        return Ok(f.clone());
    }
    let sh = real_schur(h)?;
    let sg = real_schur(g)?;
    let ft = sh.q.tr_mul(f) * &sg.q;
    let yt = quasi_triangular_sylvester(&sh.t, &sg.t, &(-ft))?;
    Ok(&sh.q * yt * sg.q.transpose())
}

/// Solves `H Y + Y Hᵀ + F = 0` for symmetric `F` with one Schur
/// decomposition of `H`; the result is symmetrized.
pub fn solve_lyapunov_dense(
    h: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> Result<DMatrix<f64>, LinalgError> {
    check_square(h, "H")?;
    if f.shape() != h.shape() {
        return Err(LinalgError::DimensionMismatch(format!(
            "F is {}x{}, expected {}x{}",
            f.nrows(),
            f.ncols(),
            h.nrows(),
            h.ncols()
        )));
    }
    ensure_finite(f, "solve_lyapunov_dense")?;
    if f.is_empty() {
        return Ok(f.clone());
    }
    let sh = real_schur(h)?;
    let ft = sh.q.tr_mul(f) * &sh.q;
    let yt = quasi_triangular_sylvester(&sh.t, &sh.t, &(-ft))?;
    let y = &sh.q * yt * sh.q.transpose();
    Ok((&y + y.transpose()) * 0.5)
}

/// Solves `H Y + Y Hᵀ + C̃ S C̃ᵀ = 0` with symmetric middle factor `S`.
pub fn solve_lyapunov_ldlt(
    h: &DMatrix<f64>,
    ctil: &DMatrix<f64>,
    s: &DMatrix<f64>,
) -> Result<DMatrix<f64>, LinalgError> {
    check_square(s, "S")?;
    if ctil.nrows() != h.nrows() || ctil.ncols() != s.nrows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "C̃ is {}x{}, H is {}x{}, S is {}x{}",
            ctil.nrows(),
            ctil.ncols(),
            h.nrows(),
            h.ncols(),
            s.nrows(),
            s.ncols()
        )));
    }
    let f = ctil * s * ctil.transpose();
    solve_lyapunov_dense(h, &((&f + f.transpose()) * 0.5))
}

/// Solves `T Y + Y T + F = 0` for symmetric `T` by diagonalization.
pub fn solve_lyapunov_sym(t: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    check_square(t, "T")?;
    if f.shape() != t.shape() {
        return Err(LinalgError::DimensionMismatch("F must match T".into()));
    }
    let eig = eig_sym(t)?;
    let w = &eig.vectors;
    let mut fh = w.tr_mul(f) * w;
    let scale = eig.values.amax().max(f64::MIN_POSITIVE);
    for j in 0..fh.ncols() {
        for i in 0..fh.nrows() {
            let denom = eig.values[i] + eig.values[j];
            if denom.abs() <= 1e2 * f64::EPSILON * scale {
                return Err(LinalgError::Singular("solve_lyapunov_sym"));
            }
            fh[(i, j)] /= -denom;
        }
    }
    let y = w * fh * w.transpose();
    Ok((&y + y.transpose()) * 0.5)
}

/// Reference solution of `A X + X B + RHS = 0` from the vectorized system
/// `(I ⊗ A + Bᵀ ⊗ I) vec X = −vec RHS`, solved by LU.
pub fn kron_oracle(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
) -> Result<DMatrix<f64>, LinalgError> {
    check_square(a, "A")?;
    check_square(b, "B")?;
    let (p, q) = (a.nrows(), b.nrows());
    if p > KRON_ORACLE_MAX_DIM || q > KRON_ORACLE_MAX_DIM {
        return Err(LinalgError::DimensionMismatch(format!(
            "kron_oracle is limited to dimension {KRON_ORACLE_MAX_DIM}"
        )));
    }
    if rhs.shape() != (p, q) {
        return Err(LinalgError::DimensionMismatch(
            "RHS must be rows(A) x rows(B)".into(),
        ));
    }
    let dim = p * q;
    let mut k = DMatrix::zeros(dim, dim);
    for j in 0..q {
        k.view_mut((j * p, j * p), (p, p)).copy_from(a);
        for l in 0..q {
            let blk = b[(l, j)];
            if blk != 0.0 {
                for i in 0..p {
                    k[(j * p + i, l * p + i)] += blk;
                }
            }
        }
    }
    let v = -DMatrix::from_column_slice(dim, 1, rhs.as_slice());
    let lu = k.lu();
    let x = lu.solve(&v).ok_or(LinalgError::Singular("kron_oracle"))?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(LinalgError::Singular("kron_oracle"));
    }
    Ok(DMatrix::from_column_slice(p, q, x.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::NormalRng;
    use proptest::prelude::*;

    fn stable(k: usize, seed: u64) -> DMatrix<f64> {
        let m = NormalRng::new(seed).matrix(k, k);
        -(&m * m.transpose() / k as f64 + DMatrix::identity(k, k))
            + (m.clone() - m.transpose()) * 0.5
    }

    fn residual(h: &DMatrix<f64>, g: &DMatrix<f64>, f: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        (h * y + y * g.transpose() + f).norm()
    }

    #[test]
    fn scalar_example() {
        let y = solve_sylvester_dense(
            &DMatrix::from_element(1, 1, 2.0),
            &DMatrix::from_element(1, 1, 3.0),
            &DMatrix::from_element(1, 1, 5.0),
        )
        .unwrap();
        assert_eq!(y[(0, 0)], -1.0);
    }

    #[test]
    fn shifted_identities() {
        let f = NormalRng::new(1).matrix(4, 3);
        let y = solve_sylvester_dense(
            &(DMatrix::identity(4, 4) * 1.5),
            &(DMatrix::identity(3, 3) * 0.5),
            &f,
        )
        .unwrap();
        assert!((y + &f / 2.0).norm() <= 1e-15 * f.norm());
    }

    #[test]
    fn random_stable_matches_oracle() {
        let h = stable(7, 2);
        let g = stable(5, 3);
        let f = NormalRng::new(4).matrix(7, 5);
        let y = solve_sylvester_dense(&h, &g, &f).unwrap();
        let truth = kron_oracle(&h, &g.transpose(), &f).unwrap();
        assert!((&y - &truth).norm() <= 1e-10 * truth.norm());
    }

    #[test]
    fn eigenvalue_collision_is_singular() {
        let h = DMatrix::from_element(1, 1, 2.0);
        let g = DMatrix::from_element(1, 1, -2.0);
        assert!(matches!(
            solve_sylvester_dense(&h, &g, &DMatrix::from_element(1, 1, 1.0)),
            Err(LinalgError::Singular(_))
        ));
    }

    #[test]
    fn rotation_blocks_are_handled() {
        let h = DMatrix::from_row_slice(2, 2, &[-1.0, -3.0, 3.0, -1.0]);
        let g = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.0, -4.0, -2.0, 0.5, 0.0, 0.0, -1.0]);
        let f = NormalRng::new(5).matrix(2, 3);
        let y = solve_sylvester_dense(&h, &g, &f).unwrap();
        assert!(residual(&h, &g, &f, &y) <= 1e-13 * f.norm());
    }

    #[test]
    fn ldlt_examples() {
        let y = solve_lyapunov_ldlt(
            &DMatrix::from_element(1, 1, -1.0),
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, 2.0),
        )
        .unwrap();
        assert!((y[(0, 0)] - 1.0).abs() < 1e-15);
        let h = stable(6, 6);
        let zero = solve_lyapunov_ldlt(&h, &NormalRng::new(7).matrix(6, 2), &DMatrix::zeros(2, 2))
            .unwrap();
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn ldlt_matches_oracle_with_swap_middle() {
        let h = stable(8, 8);
        let c = NormalRng::new(9).matrix(8, 4);
        let mut s = DMatrix::zeros(4, 4);
        s.view_mut((0, 2), (2, 2)).fill_with_identity();
        s.view_mut((2, 0), (2, 2)).fill_with_identity();
        let y = solve_lyapunov_ldlt(&h, &c, &s).unwrap();
        let truth = kron_oracle(&h, &h.transpose(), &(&c * &s * c.transpose())).unwrap();
        assert!((&y - &truth).norm() <= 1e-10 * truth.norm());
        assert!((&y - y.transpose()).norm() <= 1e-12 * y.norm());
    }

    #[test]
    fn symmetric_path_agrees() {
        let m = NormalRng::new(10).matrix(9, 9);
        let t = &m * m.transpose() + DMatrix::identity(9, 9);
        let c = NormalRng::new(11).matrix(9, 2);
        let f = &c * c.transpose();
        let a = solve_lyapunov_sym(&t, &f).unwrap();
        let b = solve_lyapunov_dense(&t, &f).unwrap();
        assert!((&a - &b).norm() <= 1e-10 * b.norm());
    }

    #[test]
    fn oracle_examples() {
        let m = NormalRng::new(12).matrix(3, 3);
        let x = kron_oracle(&DMatrix::identity(3, 3), &DMatrix::identity(3, 3), &m).unwrap();
        assert!((x + &m / 2.0).norm() < 1e-15);
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
        let x = kron_oracle(&a, &DMatrix::zeros(2, 2), &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(
            x,
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -0.5]))
        );
        let a = stable(12, 13);
        let b = stable(10, 14);
        let r = NormalRng::new(15).matrix(12, 10);
        let x = kron_oracle(&a, &b, &r).unwrap();
        assert!((&a * &x + &x * &b + &r).norm() <= 1e-11 * r.norm());
        assert!(kron_oracle(
            &DMatrix::identity(65, 65),
            &DMatrix::identity(1, 1),
            &DMatrix::zeros(65, 1)
        )
        .is_err());
    }

    #[test]
    fn scalar_shift_closed_form_exactly() {
        let mut rng = NormalRng::new(16);
        for _ in 0..100 {
            let alpha = 1.0 + rng.uniform();
            let beta = 1.0 + rng.uniform();
            let f = DMatrix::from_element(1, 1, rng.normal());
            let y = solve_sylvester_dense(
                &DMatrix::from_element(1, 1, alpha),
                &DMatrix::from_element(1, 1, beta),
                &f,
            )
            .unwrap();
            assert_eq!(y[(0, 0)], -f[(0, 0)] / (alpha + beta));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bartels_stewart_matches_oracle(seed in any::<u64>(), k in 1usize..13, l in 1usize..13) {
            let h = stable(k, seed);
            let g = stable(l, seed.wrapping_add(1));
            let f = NormalRng::new(seed.wrapping_add(2)).matrix(k, l);
            let y = solve_sylvester_dense(&h, &g, &f).unwrap();
            let truth = kron_oracle(&h, &g.transpose(), &f).unwrap();
            prop_assert!((&y - &truth).norm() <= 1e-9 * truth.norm());
            let bound = 1e-10 * (h.norm() + g.norm()) * y.norm() + 1e-12 * f.norm();
            prop_assert!(residual(&h, &g, &f, &y) <= bound);
        }

        #[test]
        fn lyapunov_output_is_symmetric(seed in any::<u64>(), k in 1usize..15, p in 1usize..5) {
            let h = stable(k, seed);
            let c = NormalRng::new(seed ^ 9).matrix(k, p);
            let s = {
                let m = NormalRng::new(seed ^ 10).matrix(p, p);
                &m + m.transpose()
            };
            let y = solve_lyapunov_ldlt(&h, &c, &s).unwrap();
            prop_assert!((&y - y.transpose()).norm() <= 1e-12 * y.norm().max(f64::MIN_POSITIVE));
        }
    }
}

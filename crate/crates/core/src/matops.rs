//! Dense matrix helpers shared by every other module.
//!
//! All matrices are `nalgebra::DMatrix<f64>`; the functions here add the
//! Stiefel-specific operations (symmetric part, Gram residual, polar factor,
//! Procrustes distance) and the two spectral quantities the network analysis
//! needs.

use nalgebra::{DMatrix, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-12;

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITERS: usize = 10_000;

fn ensure_square(a: &DenseMatrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what} needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn ensure_same_shape(a: &DenseMatrix, b: &DenseMatrix, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "{what}: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// `(A + Aᵀ) / 2`.
pub fn sym(a: &DenseMatrix) -> Result<DenseMatrix> {
    ensure_square(a, "sym")?;
    Ok(sym_unchecked(a))
}

#[inline]
pub(crate) fn sym_unchecked(a: &DenseMatrix) -> DenseMatrix {
    (a + a.transpose()) * 0.5
}

/// `XᵀX − I_r`, zero exactly when `X` has orthonormal columns.
pub fn gram_residual(x: &DenseMatrix) -> DenseMatrix {
    let r = x.ncols();
    let mut q = x.tr_mul(x);
    for i in 0..r {
        q[(i, i)] -= 1.0;
    }
    q
}

fn thin_svd(x: &DenseMatrix) -> SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    SVD::new(x.clone(), true, true)
}

/// Nearest matrix with orthonormal columns: `U Vᵀ` from the thin SVD of `X`.
pub fn polar_orthonormalize(x: &DenseMatrix) -> Result<DenseMatrix> {
    if x.nrows() < x.ncols() {
        return Err(Error::Dimension(format!(
            "polar factor needs rows >= cols, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    let svd = thin_svd(x);
    let largest = svd.singular_values.max();
    let smallest = svd.singular_values.min();
    if !(largest.is_finite() && smallest > RANK_TOL * largest) {
        return Err(Error::Singular { smallest, largest });
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    Ok(u * v_t)
}

/// Householder QR orthonormalization; used for seeded initial points.
pub fn qr_orthonormalize(x: &DenseMatrix) -> DenseMatrix {
    x.clone().qr().q()
}

/// `min_{Q ∈ O(r)} ‖X Q − X*‖_F`, attained at `Q = U Vᵀ` for `XᵀX* = U Σ Vᵀ`.
pub fn procrustes_distance(x: &DenseMatrix, x_star: &DenseMatrix) -> Result<f64> {
    ensure_same_shape(x, x_star, "procrustes_distance")?;
    let svd = thin_svd(&x.tr_mul(x_star));
    let q = svd.u.expect("requested U") * svd.v_t.expect("requested Vᵀ");
    Ok((x * q - x_star).norm())
}

/// Singular values in descending order.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `σ₂(W)`; zero for a 1×1 matrix.
pub fn second_largest_singular_value(w: &DenseMatrix) -> Result<f64> {
    ensure_square(w, "second_largest_singular_value")?;
    Ok(singular_values(w).get(1).copied().unwrap_or(0.0))
}

/// Largest eigenvalue modulus, read off the real Schur form.
pub fn spectral_radius(a: &DenseMatrix) -> Result<f64> {
    ensure_square(a, "spectral_radius")?;
    if a.is_empty() {
        return Ok(0.0);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("spectral_radius: non-finite entry".into()));
    }
    let schur = Schur::try_new(a.clone(), SCHUR_EPS, SCHUR_MAX_ITERS).ok_or_else(|| {
        Error::Numerical(format!(
            "Schur iteration did not converge within {SCHUR_MAX_ITERS} sweeps"
        ))
    })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Eigenvectors of the `count` largest eigenvalues of a symmetric matrix,
/// as columns, together with those eigenvalues (descending).
pub fn top_eigenvectors(s: &DenseMatrix, count: usize) -> Result<(DenseMatrix, Vec<f64>)> {
    ensure_square(s, "top_eigenvectors")?;
    if count > s.nrows() {
        return Err(Error::Dimension(format!(
            "asked for {count} eigenvectors of a {}x{} matrix",
            s.nrows(),
            s.ncols()
        )));
    }
    let eig = SymmetricEigen::new(sym_unchecked(s));
    let mut order: Vec<usize> = (0..s.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut vecs = DenseMatrix::zeros(s.nrows(), count);
    let mut vals = Vec::with_capacity(count);
    for (c, &i) in order.iter().take(count).enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
        vals.push(eig.eigenvalues[i]);
    }
    Ok((vecs, vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn random_orthogonal(r: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        qr_orthonormalize(&gaussian(r, r, rng))
    }

    #[test]
    fn sym_examples() {
        let eye = DenseMatrix::identity(3, 3);
        assert_eq!(sym(&eye).unwrap(), eye);

        let skew = DenseMatrix::from_row_slice(3, 3, &[0., 1., -2., -1., 0., 3., 2., -3., 0.]);
        assert_eq!(sym(&skew).unwrap(), DenseMatrix::zeros(3, 3));

        let a = DenseMatrix::from_row_slice(2, 2, &[0., 2., 0., 0.]);
        assert_eq!(
            sym(&a).unwrap(),
            DenseMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.])
        );
        assert!(matches!(
            sym(&DenseMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn gram_residual_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = qr_orthonormalize(&gaussian(6, 3, &mut rng));
        assert!(gram_residual(&z).norm() < 1e-14);

        let scaled = &z * 1.5;
        let expected = DenseMatrix::identity(3, 3) * (1.5 * 1.5 - 1.0);
        assert!((gram_residual(&scaled) - expected).norm() < 1e-13);

        let x = gaussian(4, 2, &mut rng);
        let q = gram_residual(&x);
        for i in 0..2 {
            for j in 0..2 {
                let mut dot = 0.0;
                for k in 0..4 {
                    dot += x[(k, i)] * x[(k, j)];
                }
                let delta = if i == j { 1.0 } else { 0.0 };
                assert!((q[(i, j)] - (dot - delta)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn polar_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = qr_orthonormalize(&gaussian(6, 3, &mut rng));
        assert!((polar_orthonormalize(&z).unwrap() - &z).norm() < 1e-13);
        assert!((polar_orthonormalize(&(&z * 2.0)).unwrap() - &z).norm() < 1e-13);

        let x = gaussian(6, 3, &mut rng);
        let p = polar_orthonormalize(&x).unwrap();
        assert!(gram_residual(&p).norm() <= 1e-12);
    }

    #[test]
    fn polar_is_nearest_stiefel_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gaussian(5, 2, &mut rng);
        let p = polar_orthonormalize(&x).unwrap();
        let best = (&p - &x).norm();
        for _ in 0..500 {
            let y = qr_orthonormalize(&gaussian(5, 2, &mut rng));
            assert!((&y - &x).norm() >= best - 1e-12);
        }
    }

    #[test]
    fn polar_rejects_rank_deficient() {
        let mut x = DenseMatrix::zeros(4, 2);
        x[(0, 0)] = 1.0;
        x[(1, 0)] = 2.0;
        x[(0, 1)] = 2.0;
        x[(1, 1)] = 4.0;
        assert!(matches!(
            polar_orthonormalize(&x),
            Err(Error::Singular { .. })
        ));
    }

    /// Brute force over O(2): rotations and reflections on a fine angle grid,
    /// then golden-section refinement around the best grid point.
    fn procrustes_bruteforce(x: &DenseMatrix, x_star: &DenseMatrix) -> f64 {
        let eval = |theta: f64, reflect: bool| {
            let (s, c) = theta.sin_cos();
            let q = if reflect {
                DenseMatrix::from_row_slice(2, 2, &[c, s, s, -c])
            } else {
                DenseMatrix::from_row_slice(2, 2, &[c, -s, s, c])
            };
            (x * q - x_star).norm()
        };
        let grid = 20_000;
        let mut best = f64::INFINITY;
        for reflect in [false, true] {
            let mut arg = 0.0;
            let mut val = f64::INFINITY;
            for k in 0..grid {
                let t = 2.0 * std::f64::consts::PI * k as f64 / grid as f64;
                let v = eval(t, reflect);
                if v < val {
                    val = v;
                    arg = t;
                }
            }
            let h = 2.0 * std::f64::consts::PI / grid as f64;
            let (mut lo, mut hi) = (arg - h, arg + h);
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..100 {
                let a = hi - phi * (hi - lo);
                let b = lo + phi * (hi - lo);
                if eval(a, reflect) < eval(b, reflect) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            best = best.min(eval(0.5 * (lo + hi), reflect)).min(val);
        }
        best
    }

    #[test]
    fn procrustes_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = qr_orthonormalize(&gaussian(5, 3, &mut rng));
        let q0 = random_orthogonal(3, &mut rng);
        assert!(procrustes_distance(&x, &(&x * &q0)).unwrap() < 1e-12);
        assert!(procrustes_distance(&x, &x).unwrap() < 1e-12);

        let a = gaussian(3, 2, &mut rng);
        let b = gaussian(3, 2, &mut rng);
        let fast = procrustes_distance(&a, &b).unwrap();
        let slow = procrustes_bruteforce(&a, &b);
        assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
        assert!(fast <= (&a - &b).norm() + 1e-14);
    }

    #[test]
    fn procrustes_rotation_invariance_many() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = gaussian(7, 3, &mut rng);
        for _ in 0..100 {
            let q = random_orthogonal(3, &mut rng);
            assert!(procrustes_distance(&x, &(&x * q)).unwrap() < 1e-10);
        }
    }

    #[test]
    fn procrustes_symmetric_on_stiefel() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let a = qr_orthonormalize(&gaussian(6, 2, &mut rng));
            let b = qr_orthonormalize(&gaussian(6, 2, &mut rng));
            let ab = procrustes_distance(&a, &b).unwrap();
            let ba = procrustes_distance(&b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma2_examples() {
        let n = 5;
        let j = DenseMatrix::from_element(n, n, 1.0 / n as f64);
        assert!(second_largest_singular_value(&j).unwrap() < 1e-14);
        let eye = DenseMatrix::identity(n, n);
        assert!((second_largest_singular_value(&eye).unwrap() - 1.0).abs() < 1e-14);
        // Metropolis weights on the 4-cycle: every entry of the circulant is 1/3
        // on the diagonal and the two neighbours.
        let third = 1.0 / 3.0;
        let w = DenseMatrix::from_row_slice(
            4,
            4,
            &[
                third, third, 0., third, third, third, third, 0., 0., third, third, third, third,
                0., third, third,
            ],
        );
        assert!((second_largest_singular_value(&w).unwrap() - third).abs() < 1e-14);
    }

    #[test]
    fn spectral_radius_examples() {
        let d = DenseMatrix::from_row_slice(2, 2, &[0.9, 0., 0., -0.3]);
        assert!((spectral_radius(&d).unwrap() - 0.9).abs() < 1e-14);
        let nil = DenseMatrix::from_row_slice(2, 2, &[0., 1., 0., 0.]);
        assert!(spectral_radius(&nil).unwrap() < 1e-12);
    }

    /// Builds `S D S⁻¹` with `D` block diagonal holding known real eigenvalues
    /// and complex pairs `a ± ib` as 2×2 rotation-scale blocks.
    fn with_known_spectrum(size: usize, rng: &mut ChaCha8Rng) -> (DenseMatrix, f64) {
        let mut d = DenseMatrix::zeros(size, size);
        let mut rho: f64 = 0.0;
        let mut i = 0;
        while i < size {
            if i + 1 < size && rng.random_bool(0.5) {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(0.1..1.0);
                d[(i, i)] = a;
                d[(i, i + 1)] = -b;
                d[(i + 1, i)] = b;
                d[(i + 1, i + 1)] = a;
                rho = rho.max(a.hypot(b));
                i += 2;
            } else {
                let a: f64 = rng.random_range(-1.5..1.5);
                d[(i, i)] = a;
                rho = rho.max(a.abs());
                i += 1;
            }
        }
        // Well-conditioned similarity: identity plus a small perturbation.
        let s = DenseMatrix::identity(size, size) + gaussian(size, size, rng) * (0.3 / size as f64);
        let s_inv = s.clone().try_inverse().unwrap();
        (&s * d * s_inv, rho)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn spectral_radius_matches_constructed_spectrum(size in 1usize..=32, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, rho) = with_known_spectrum(size, &mut rng);
            let got = spectral_radius(&a).unwrap();
            prop_assert!((got - rho).abs() <= 1e-8 * rho.max(1.0), "{} vs {}", got, rho);
        }

        #[test]
        fn sym_is_an_idempotent_projection(size in 1usize..8, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = gaussian(size, size, &mut rng);
            let s = sym(&a).unwrap();
            prop_assert_eq!(sym(&s).unwrap(), s.clone());
            prop_assert_eq!(sym(&a.transpose()).unwrap(), s);
        }

        #[test]
        fn polar_is_orthonormal(rows in 1usize..12, cols in 1usize..6, seed in any::<u64>()) {
            prop_assume!(rows >= cols);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = gaussian(rows, cols, &mut rng);
            let p = polar_orthonormalize(&x).unwrap();
            prop_assert!(gram_residual(&p).norm() <= 1e-10);
        }
    }
}

//! Inertia of Hermitian Toeplitz matrices `T_{ij} = γ(i − j)`.

use num_complex::Complex64;

/// Number of negative pivots in the LDL* factorisation of
/// `T − shift·I`, computed with the Levinson recursion. By Sylvester's law
/// this is the number of eigenvalues below `shift`. `None` when a leading
/// minor vanishes.
pub fn negative_count(gamma: &[Complex64], shift: f64) -> Option<usize> {
    let n = gamma.len();
    let r = |k: usize| if k == 0 { gamma[0] - shift } else { gamma[k] };
    let mut e = r(0).re;
    if e == 0.0 {
        return None;
    }
    let mut negatives = usize::from(e < 0.0);
    // a: forward predictor coefficients with a[0] = 1
    let mut a: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    for k in 1..n {
        let mut acc = Complex64::default();
        for j in 0..k {
            acc += a[j] * r(k - j);
        }
        let kappa = -acc / e;
        let mut next = a.clone();
        next.push(Complex64::default());
        for j in 1..=k {
            next[j] += kappa * a[k - j].conj();
        }
        a = next;
        e *= 1.0 - kappa.norm_sqr();
        if e == 0.0 || !e.is_finite() {
            return None;
        }
        if e < 0.0 {
            negatives += 1;
        }
    }
    Some(negatives)
}

/// Whether every eigenvalue of the Toeplitz matrix is at least `−tol`.
pub fn is_psd_within(gamma: &[Complex64], tol: f64) -> bool {
    let mut shift = -tol;
    for _ in 0..8 {
        if let Some(k) = negative_count(gamma, shift) {
            return k == 0;
        }
        shift -= tol * 1e-3;
    }
    false
}

/// Smallest eigenvalue by bisection on the inertia count.
pub fn min_eigenvalue(gamma: &[Complex64]) -> f64 {
    let bound: f64 = gamma[0].re.abs() + 2.0 * gamma[1..].iter().map(|z| z.norm()).sum::<f64>() + 1e-300;
    let (mut lo, mut hi) = (-bound - 1.0, bound + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        // a vanishing pivot means an eigenvalue sits at (or rounds to) mid
        let mut count = 1;
        let mut step = bound * 1e-15;
        for _ in 0..20 {
            if let Some(c) = negative_count(gamma, mid + step) {
                count = c;
                break;
            }
            step *= 2.0;
        }
        if count >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn dense(gamma: &[Complex64]) -> DMatrix<Complex64> {
        let n = gamma.len();
        DMatrix::from_fn(n, n, |i, j| if i >= j { gamma[i - j] } else { gamma[j - i].conj() })
    }

    fn reference_min(gamma: &[Complex64]) -> f64 {
        dense(gamma).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn identity_and_rank_one() {
        let mut g = vec![Complex64::default(); 6];
        g[0] = Complex64::new(1.0, 0.0);
        assert!((min_eigenvalue(&g) - 1.0).abs() < 1e-12);
        // γ(h) = e(hθ) is rank one and PSD
        let g: Vec<Complex64> = (0..6).map(|h| Complex64::from_polar(1.0, 0.7 * h as f64)).collect();
        assert!(min_eigenvalue(&g).abs() < 1e-9);
        assert!(is_psd_within(&g, 1e-9));
    }

    proptest! {
        #[test]
        fn matches_dense_eigensolver(
            parts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..9),
            diag in -2.0f64..3.0,
        ) {
            let mut g: Vec<Complex64> = parts.iter().map(|(a, b)| Complex64::new(*a, *b)).collect();
            g[0] = Complex64::new(diag, 0.0);
            let reference = reference_min(&g);
            let ours = min_eigenvalue(&g);
            prop_assert!((reference - ours).abs() < 1e-8, "{reference} vs {ours}");
            let below = dense(&g).symmetric_eigenvalues().iter().filter(|&&x| x < 0.1).count();
            if let Some(k) = negative_count(&g, 0.1) {
                prop_assert_eq!(k, below);
            }
        }
    }
}

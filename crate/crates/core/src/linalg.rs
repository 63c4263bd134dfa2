//! Dense complex linear-algebra helpers shared by the solvers.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Falling factorial `k!/(k-n)!`, zero when `k < n`.
pub fn falling_factorial(k: usize, n: usize) -> f64 {
    if k < n {
        return 0.0;
    }
    (k - n + 1..=k).fold(1.0, |acc, j| acc * j as f64)
}

/// Truncated annihilation operator on `dim` Fock levels.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Largest `|m_ij - conj(m_ji)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix (the anti-Hermitian part is discarded).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigenvalues();
    eig.iter().copied().collect()
}

/// Trace distance `½‖a - b‖₁` for Hermitian arguments.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}

pub fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn one_norm_real(m: &RMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

// Padé [8/8] coefficients c_k = (2q-k)! q! / ((2q)! k! (q-k)!), q = 8.
const PADE8: [f64; 9] = [
    1.0,
    0.5,
    0.116_666_666_666_666_67,
    0.016_666_666_666_666_666,
    0.001_602_564_102_564_102_6,
    0.000_106_837_606_837_606_84,
    4.856_254_856_254_856e-6,
    1.387_501_387_501_387_5e-7,
    1.927_085_260_418_593_8e-9,
];

/// Matrix exponential of a real matrix by scaling and squaring with a Padé [8/8] approximant.
pub fn expm_real(a: &RMatrix) -> RMatrix {
    let n = a.nrows();
    let norm = one_norm_real(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);
    let ident = RMatrix::identity(n, n);
    let mut num = ident.clone() * PADE8[0];
    let mut den = ident.clone() * PADE8[0];
    let mut power = ident;
    for (k, &c) in PADE8.iter().enumerate().skip(1) {
        power = &power * &scaled;
        num += &power * c;
        if k % 2 == 0 {
            den += &power * c;
        } else {
            den -= &power * c;
        }
    }
    let mut result = den
        .lu()
        .solve(&num)
        .expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn falling_factorial_values() {
        assert_eq!(falling_factorial(4, 2), 12.0);
        assert_eq!(falling_factorial(7, 2), 42.0);
        assert_eq!(falling_factorial(3, 0), 1.0);
        assert_eq!(falling_factorial(1, 2), 0.0);
    }

    #[test]
    fn expm_matches_closed_form_decay() {
        // [[0,1],[0,-1]] exponentiates to [[1, 1-e^-t],[0, e^-t]].
        let t = 0.6;
        let m = RMatrix::from_row_slice(2, 2, &[0.0, t, 0.0, -t]);
        let e = expm_real(&m);
        assert!((e[(0, 1)] - (1.0 - (-t).exp())).abs() < 1e-14);
        assert!((e[(1, 1)] - (-t).exp()).abs() < 1e-14);
    }

    #[test]
    fn expm_large_norm_rotation() {
        let w = 40.0;
        let m = RMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]);
        let e = expm_real(&m);
        assert!((e[(0, 0)] - w.cos()).abs() < 1e-11);
        assert!((e[(0, 1)] - w.sin()).abs() < 1e-11);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = ONE;
        let mut b = CMatrix::zeros(2, 2);
        b[(1, 1)] = ONE;
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
    }
}

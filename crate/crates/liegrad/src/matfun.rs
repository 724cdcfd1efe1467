//! Dense real matrix functions: the exponential and the first phi function
//! phi1(z) = (e^z - 1)/z, computed together by scaling and squaring.
//!
//! The pair recurrence under doubling is
//!     exp(2A) = exp(A)^2,      phi1(2A) = phi1(A) (exp(A) + I) / 2,
//! so one Taylor evaluation at A/2^m followed by m doubling steps yields both
//! functions without forming an augmented block matrix.

use nalgebra::DMatrix;

/// Scaled argument norm target for the Taylor stage.
const TAYLOR_RADIUS: f64 = 0.25;
const TAYLOR_MAX_TERMS: usize = 40;

fn one_norm(a: &DMatrix<f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|x| x.abs()).sum();
        best = best.max(s);
    }
    best
}

/// Taylor series for (exp(A), phi1(A)); callers must pre-scale A.
fn taylor_pair(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut exp = DMatrix::<f64>::identity(n, n);
    let mut phi = DMatrix::<f64>::identity(n, n);
    // power = A^k / k!
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut scratch = DMatrix::<f64>::zeros(n, n);
    for k in 1..=TAYLOR_MAX_TERMS {
        power.mul_to(a, &mut scratch);
        scratch /= k as f64;
        std::mem::swap(&mut power, &mut scratch);
        exp += &power;
        // phi1 term k: A^k / (k+1)!
        let phi_coeff = 1.0 / (k + 1) as f64;
        phi.zip_apply(&power, |t, s| *t += phi_coeff * s);
        if one_norm(&power) < 1e-18 {
            break;
        }
    }
    (exp, phi)
}

/// Returns `(exp(A), phi1(A))` for a square real matrix.
pub fn exp_phi1(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm <= TAYLOR_RADIUS {
        0
    } else {
        (norm / TAYLOR_RADIUS).log2().ceil() as usize
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let (mut exp, mut phi) = taylor_pair(&scaled);
    let mut shifted = DMatrix::<f64>::zeros(n, n);
    let mut scratch = DMatrix::<f64>::zeros(n, n);
    for _ in 0..squarings {
        shifted.copy_from(&exp);
        for j in 0..n {
            shifted[(j, j)] += 1.0;
        }
        phi.mul_to(&shifted, &mut scratch);
        scratch *= 0.5;
        std::mem::swap(&mut phi, &mut scratch);
        let square = &exp * &exp;
        exp.copy_from(&square);
    }
    (exp, phi)
}

/// `phi1(A) = sum_k A^k / (k+1)!`.
pub fn phi1(a: &DMatrix<f64>) -> DMatrix<f64> {
    exp_phi1(a).1
}

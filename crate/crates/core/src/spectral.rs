//! Eigenstructure of the pinned Laplacian and the update-gain stability bound.
//!
//! The eigensolver reduces the matrix to upper Hessenberg form with
//! Householder reflections and then runs the implicit double-shift (Francis)
//! QR iteration, deflating 1x1 and 2x2 blocks from the bottom. Eigenvectors
//! are recovered on demand by inverse iteration in complex arithmetic.

use std::cmp::Ordering;

use num_complex::Complex;
use thiserror::Error;

use crate::graph::PinnedSystem;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Backward-error target: every computed eigenpair satisfies
/// `|K v - lambda v| <= BACKWARD_ERROR_TOLERANCE * |K|` when the solver
/// deflates at machine precision.
pub const BACKWARD_ERROR_TOLERANCE: f64 = 1e-10;

/// QR sweeps allowed per matrix dimension before giving up.
const ITERATIONS_PER_DIMENSION: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError<T> {
    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("QR iteration did not converge after {iterations} sweeps ({} eigenvalues found)", .found.len())]
    NoConvergence {
        iterations: usize,
        found: Vec<Complex<T>>,
    },
    #[error("eigenvalue {0} has non-positive real part; the source does not reach every agent")]
    NonPositiveRealPart(Complex<T>),
    #[error("no eigenvalues supplied")]
    Empty,
    #[error("update gain must be positive and finite")]
    InvalidGain,
}

/// All eigenvalues of a real square matrix, with multiplicity, sorted by
/// real part and then imaginary part.
///
/// `tol` is the relative size below which a subdiagonal entry is treated as
/// zero. It is clamped to at least machine epsilon, so passing zero gives
/// full accuracy; looser values trade accuracy for fewer sweeps.
pub fn eigenvalues<T: Scalar>(
    matrix: &Matrix<T>,
    tol: T,
) -> Result<Vec<Complex<T>>, SpectralError<T>> {
    if !matrix.is_square() || matrix.rows() == 0 {
        return Err(SpectralError::NotSquare {
            rows: matrix.rows(),
            cols: matrix.cols(),
        });
    }
    if !matrix.is_finite() {
        return Err(SpectralError::NonFinite);
    }
    let symmetric = matrix.is_symmetric();
    let mut h = matrix.clone();
    reduce_to_hessenberg(&mut h);
    let mut eigs = hessenberg_qr(&mut h, tol.max(T::epsilon()), symmetric)?;
    sort_eigenvalues(&mut eigs);
    Ok(eigs)
}

/// Deterministic order: ascending real part, ties by imaginary part.
pub fn sort_eigenvalues<T: Scalar>(eigs: &mut [Complex<T>]) {
    eigs.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
    });
}

/// Householder reduction to upper Hessenberg form, in place.
fn reduce_to_hessenberg<T: Scalar>(h: &mut Matrix<T>) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut ort = vec![T::zero(); n];
    let high = n - 1;
    for m in 1..high {
        let scale: T = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == T::zero() {
            continue;
        }
        let mut norm_sq = T::zero();
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            norm_sq += ort[i] * ort[i];
        }
        let mut g = norm_sq.sqrt();
        if ort[m] > T::zero() {
            g = -g;
        }
        let hh = norm_sq - ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = T::zero();
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = T::zero();
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        h[(m, m - 1)] = scale * g;
        for i in m + 1..=high {
            h[(i, m - 1)] = T::zero();
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
fn hessenberg_qr<T: Scalar>(
    h: &mut Matrix<T>,
    eps: T,
    symmetric: bool,
) -> Result<Vec<Complex<T>>, SpectralError<T>> {
    let size = h.rows();
    let cap = ITERATIONS_PER_DIMENSION * size;
    let two = T::lit(2.0);
    let mut found: Vec<Complex<T>> = Vec::with_capacity(size);

    let mut norm = T::zero();
    for i in 0..size {
        for j in i.saturating_sub(1)..size {
            norm += h[(i, j)].abs();
        }
    }

    let mut exshift = T::zero();
    let mut iter = 0usize;
    let mut total = 0usize;
    // `hi` is one past the last row of the active window.
    let mut hi = size;

    while hi > 0 {
        let n = hi - 1;
        let mut l = n;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == T::zero() {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            found.push(Complex::new(h[(n, n)] + exshift, T::zero()));
            hi -= 1;
            iter = 0;
        } else if l + 1 == n {
            let w = h[(n, n - 1)] * h[(n - 1, n)];
            let p = (h[(n - 1, n - 1)] - h[(n, n)]) / two;
            let mut q = p * p + w;
            if symmetric {
                // Exact arithmetic gives q >= 0; negatives are roundoff.
                q = q.max(T::zero());
            }
            let mut z = q.abs().sqrt();
            let x = h[(n, n)] + exshift;
            if q >= T::zero() {
                z = if p >= T::zero() { p + z } else { p - z };
                let first = x + z;
                let second = if z != T::zero() { x - w / z } else { first };
                found.push(Complex::new(second, T::zero()));
                found.push(Complex::new(first, T::zero()));
            } else {
                found.push(Complex::new(x + p, -z));
                found.push(Complex::new(x + p, z));
            }
            hi -= 2;
            iter = 0;
        } else {
            if total >= cap {
                return Err(SpectralError::NoConvergence {
                    iterations: total,
                    found,
                });
            }
            let mut x = h[(n, n)];
            let mut y = h[(n - 1, n - 1)];
            let mut w = h[(n, n - 1)] * h[(n - 1, n)];
            let (mut p, mut q, mut r, mut s, mut z);

            // Exceptional shifts break cycles.
            if iter == 10 {
                exshift += x;
                for i in 0..=n {
                    h[(i, i)] -= x;
                }
                let s = h[(n, n - 1)].abs() + h[(n - 1, n - 2)].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            if iter == 30 {
                let mut s = (y - x) / two;
                s = s * s + w;
                if s > T::zero() {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / two + s);
                    for i in 0..=n {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = T::lit(0.964);
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total += 1;

            // Look for two consecutive small subdiagonal elements.
            let mut m = n - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs =
                    eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()));
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=n {
                h[(i, i - 2)] = T::zero();
                if i > m + 2 {
                    h[(i, i - 3)] = T::zero();
                }
            }

            for k in m..n {
                let not_last = k != n - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if not_last {
                        h[(k + 2, k - 1)]
                    } else {
                        T::zero()
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x == T::zero() {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < T::zero() {
                    s = -s;
                }
                if s == T::zero() {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -s * x;
                } else if l != m {
                    h[(k, k - 1)] = -h[(k, k - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;

                for j in k..=n {
                    let mut t = h[(k, j)] + q * h[(k + 1, j)];
                    if not_last {
                        t += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= t * z;
                    }
                    h[(k, j)] -= t * x;
                    h[(k + 1, j)] -= t * y;
                }
                let top = n.min(k + 3);
                for i in l..=top {
                    let mut t = x * h[(i, k)] + y * h[(i, k + 1)];
                    if not_last {
                        t += z * h[(i, k + 2)];
                        h[(i, k + 2)] -= t * r;
                    }
                    h[(i, k)] -= t;
                    h[(i, k + 1)] -= t * q;
                }
            }
        }
    }
    Ok(found)
}

/// Unit eigenvector for `lambda` by inverse iteration on `K - lambda I`.
pub fn eigenvector<T: Scalar>(matrix: &Matrix<T>, lambda: Complex<T>) -> Vec<Complex<T>> {
    let n = matrix.rows();
    let norm = matrix.frobenius_norm().max(T::one());
    let floor = T::epsilon() * norm;
    let mut a: Vec<Complex<T>> = matrix
        .as_slice()
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .collect();
    for i in 0..n {
        a[i * n + i] -= lambda;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| {
                a[x * n + col]
                    .norm()
                    .partial_cmp(&a[y * n + col].norm())
                    .unwrap_or(Ordering::Equal)
            })
            .unwrap_or(col);
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            perm.swap(pivot, col);
        }
        if a[col * n + col].norm() < floor {
            a[col * n + col] = Complex::new(floor, T::zero());
        }
        let d = a[col * n + col];
        for i in col + 1..n {
            let f = a[i * n + col] / d;
            a[i * n + col] = f;
            for j in col + 1..n {
                let u = a[col * n + j];
                a[i * n + j] -= f * u;
            }
        }
    }
    let solve = |b: &[Complex<T>]| -> Vec<Complex<T>> {
        let mut x: Vec<Complex<T>> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = a[i * n + j];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = a[i * n + j];
                x[i] = x[i] - u * x[j];
            }
            x[i] /= a[i * n + i];
        }
        x
    };
    let normalize = |v: &mut Vec<Complex<T>>| {
        let len = v.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
        if len > T::zero() {
            for c in v.iter_mut() {
                *c /= len;
            }
        }
    };
    // Irregular start vector avoids accidental orthogonality to the eigenspace.
    let mut v: Vec<Complex<T>> = (0..n)
        .map(|i| Complex::new(T::one() + T::from_count(i % 7) / T::lit(10.0), T::zero()))
        .collect();
    normalize(&mut v);
    for _ in 0..3 {
        v = solve(&v);
        normalize(&mut v);
    }
    v
}

/// Largest update gain for which `I - gamma K` is stable:
/// `min_i 2 Re(lambda_i) / |lambda_i|^2`, equal to `2 cos(phi_i) / m_i`.
pub fn gain_bound<T: Scalar>(eigs: &[Complex<T>]) -> Result<T, SpectralError<T>> {
    if eigs.is_empty() {
        return Err(SpectralError::Empty);
    }
    let two = T::lit(2.0);
    let mut bound = T::infinity();
    for &lambda in eigs {
        if !(lambda.re > T::zero()) {
            return Err(SpectralError::NonPositiveRealPart(lambda));
        }
        bound = bound.min(two * lambda.re / lambda.norm_sqr());
    }
    Ok(bound)
}

/// Eigenvalues of the Perron matrix `I - gamma K` and its spectral radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronSpectrum<T> {
    pub eigenvalues: Vec<Complex<T>>,
    pub spectral_radius: T,
}

impl<T: Scalar> PerronSpectrum<T> {
    pub fn is_stable(&self) -> bool {
        self.spectral_radius < T::one()
    }
}

pub fn perron_spectrum<T: Scalar>(
    eigs: &[Complex<T>],
    gamma: T,
) -> Result<PerronSpectrum<T>, SpectralError<T>> {
    if !(gamma > T::zero() && gamma.is_finite()) {
        return Err(SpectralError::InvalidGain);
    }
    let one = Complex::new(T::one(), T::zero());
    let eigenvalues: Vec<_> = eigs.iter().map(|&l| one - l * gamma).collect();
    let spectral_radius = eigenvalues.iter().map(|c| c.norm()).fold(T::zero(), T::max);
    Ok(PerronSpectrum {
        eigenvalues,
        spectral_radius,
    })
}

/// Spectrum of a pinned Laplacian together with its gain bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary<T> {
    pub eigenvalues: Vec<Complex<T>>,
    pub gain_bound: T,
}

impl<T: Scalar> SpectralSummary<T> {
    pub fn analyze(system: &PinnedSystem<T>) -> Result<Self, SpectralError<T>> {
        let eigenvalues = eigenvalues(system.pinned_laplacian(), T::epsilon())?;
        let gain_bound = gain_bound(&eigenvalues)?;
        Ok(Self {
            eigenvalues,
            gain_bound,
        })
    }

    pub fn perron(&self, gamma: T) -> Result<PerronSpectrum<T>, SpectralError<T>> {
        perron_spectrum(&self.eigenvalues, gamma)
    }

    pub fn max_real_part(&self) -> T {
        self.eigenvalues
            .iter()
            .map(|c| c.re)
            .fold(T::neg_infinity(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    use crate::graph::GraphSpec;

    fn eigs(rows: &[Vec<f64>]) -> Vec<Complex<f64>> {
        eigenvalues(&Matrix::from_rows(rows), 0.0).unwrap()
    }

    #[test]
    fn one_by_one() {
        assert_eq!(eigs(&[vec![1.0]]), vec![Complex::new(1.0, 0.0)]);
    }

    #[test]
    fn two_node_chain() {
        let e = eigs(&[vec![1.0, -1.0], vec![-1.0, 2.0]]);
        let s5 = 5f64.sqrt();
        assert_relative_eq!(e[0].re, (3.0 - s5) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(e[1].re, (3.0 + s5) / 2.0, epsilon = 1e-14);
        assert!(e.iter().all(|c| c.im == 0.0));
    }

    #[test]
    fn rotation_block_has_complex_pair() {
        let e = eigs(&[vec![1.0, -1.0], vec![1.0, 1.0]]);
        assert_relative_eq!(e[0].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(e[0].im, -1.0, epsilon = 1e-14);
        assert_relative_eq!(e[1].im, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // (x-1)(x-2)(x-3)(x-4) = x^4 - 10x^3 + 35x^2 - 50x + 24
        let c = vec![
            vec![10.0, -35.0, 50.0, -24.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let e = eigs(&c);
        for (i, l) in e.iter().enumerate() {
            assert_relative_eq!(l.re, (i + 1) as f64, epsilon = 1e-9);
            assert!(l.im.abs() < 1e-9);
        }
    }

    #[test]
    fn grid_spectrum_is_real_with_expected_maximum() {
        let g = GraphSpec::<f64>::grid(5, 5, 25, 1.0).unwrap();
        let sys = PinnedSystem::new(&g).unwrap();
        let summary = SpectralSummary::analyze(&sys).unwrap();
        assert_eq!(summary.eigenvalues.len(), 25);
        let knorm = sys.pinned_laplacian().frobenius_norm();
        assert!(summary
            .eigenvalues
            .iter()
            .all(|c| c.im.abs() <= 1e-10 * knorm));
        assert!((summary.max_real_part() - 7.236).abs() < 5e-3);
        assert!((summary.gain_bound - 0.2763).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_input() {
        let nan = Matrix::from_rows(&[vec![f64::NAN]]);
        assert_eq!(eigenvalues(&nan, 1e-10), Err(SpectralError::NonFinite));
        let rect = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(
            eigenvalues(&rect, 1e-10),
            Err(SpectralError::NotSquare { .. })
        ));
    }

    #[test]
    fn gain_bound_examples() {
        assert_eq!(gain_bound(&[Complex::new(1.0, 0.0)]).unwrap(), 2.0);
        assert_relative_eq!(
            gain_bound(&[Complex::new(1.0, 1.0)]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(matches!(
            gain_bound(&[Complex::new(0.0, 1.0)]),
            Err(SpectralError::NonPositiveRealPart(_))
        ));
        assert_eq!(gain_bound::<f64>(&[]), Err(SpectralError::Empty));
    }

    #[test]
    fn complex_bound_is_where_radius_crosses_one() {
        let l = [Complex::new(1.0, 1.0)];
        assert!(perron_spectrum(&l, 0.99).unwrap().spectral_radius < 1.0);
        assert!(perron_spectrum(&l, 1.01).unwrap().spectral_radius > 1.0);
        assert_relative_eq!(
            perron_spectrum(&l, 1.0).unwrap().spectral_radius,
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn perron_examples() {
        let p = perron_spectrum(&[Complex::new(1.0, 0.0)], 0.5).unwrap();
        assert_eq!(p.eigenvalues, vec![Complex::new(0.5, 0.0)]);
        assert_eq!(p.spectral_radius, 0.5);
        assert_eq!(
            perron_spectrum(&[Complex::new(1.0, 0.0)], 0.0),
            Err(SpectralError::InvalidGain)
        );
    }

    #[test]
    fn single_precision_path() {
        let k = Matrix::from_rows(&[vec![1.0f32, -1.0], vec![-1.0, 2.0]]);
        let e = eigenvalues(&k, 1e-6).unwrap();
        assert!((e[1].re - 2.618034).abs() < 1e-5);
        assert!((gain_bound(&e).unwrap() - 2.0 / 2.618034).abs() < 1e-5);
    }
}

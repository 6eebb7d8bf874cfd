//! Eigenpairs of 2×2 and 3×3 real matrices from their characteristic
//! polynomials.

use num_complex::Complex64;

use super::AnalysisError;
use crate::matrix::SquareMatrix;

/// Relative threshold (times `‖M‖_F`) for repeated eigenvalues and for the
/// rank decisions in the eigenvector solve.
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Sorted by descending real part, then descending imaginary part.
    pub values: Vec<Complex64>,
    /// Unit eigenvector for each value; `None` where a repeated eigenvalue
    /// lacks a full set of eigenvectors.
    pub vectors: Vec<Option<Vec<Complex64>>>,
    /// Set when some repeated eigenvalue has fewer eigenvectors than its
    /// multiplicity.
    pub defective: bool,
}

impl EigenDecomposition {
    /// Largest `‖Mv − λv‖₂` over the emitted pairs.
    pub fn max_residual(&self, m: &SquareMatrix<f64>) -> f64 {
        self.values
            .iter()
            .zip(&self.vectors)
            .filter_map(|(&lambda, v)| v.as_ref().map(|v| residual(m, lambda, v)))
            .fold(0.0, f64::max)
    }
}

fn residual(m: &SquareMatrix<f64>, lambda: Complex64, v: &[Complex64]) -> f64 {
    let n = m.dim();
    (0..n)
        .map(|i| {
            let mv: Complex64 = (0..n).map(|j| v[j] * m[(i, j)]).sum();
            (mv - lambda * v[i]).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

pub fn eigen_small(m: &SquareMatrix<f64>) -> Result<EigenDecomposition, AnalysisError> {
    let n = m.dim();
    if !(n == 2 || n == 3) {
        return Err(AnalysisError::UnsupportedDimension(n));
    }
    if (0..n).any(|i| m.row(i).iter().any(|x| !x.is_finite())) {
        return Err(AnalysisError::NonFinite);
    }
    let mut values = if n == 2 {
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        quadratic_roots(-m.trace(), det).to_vec()
    } else {
        cubic_roots(m).to_vec()
    };
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));

    let tol = CLUSTER_TOL * m.frobenius_norm();
    let mut vectors = vec![None; n];
    let mut defective = false;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (values[j] - values[i]).norm() <= tol {
            j += 1;
        }
        let multiplicity = j - i;
        let centre = values[i..j].iter().sum::<Complex64>() / multiplicity as f64;
        let basis = nullspace(m, centre, tol);
        if basis.len() < multiplicity {
            defective = true;
        }
        for (slot, v) in vectors[i..j].iter_mut().zip(basis) {
            *slot = Some(v);
        }
        i = j;
    }
    Ok(EigenDecomposition {
        values,
        vectors,
        defective,
    })
}

/// Roots of `λ² + bλ + c`, computed without cancellation.
fn quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            // b = 0 and c = 0
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

fn cubic_roots(m: &SquareMatrix<f64>) -> [Complex64; 3] {
    let minor = |i: usize, j: usize| m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
    let det = m[(0, 0)] * minor(1, 2) - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
    // λ³ + c2 λ² + c1 λ + c0
    let c2 = -m.trace();
    let c1 = minor(0, 1) + minor(0, 2) + minor(1, 2);
    let c0 = -det;

    let r = newton_polish(c2, c1, c0, isolated_real_root(c2, c1, c0));
    // synthetic division leaves λ² + (c2 + r) λ + (c1 + r (c2 + r))
    let b = c2 + r;
    let c = c1 + r * b;
    let [x, y] = quadratic_roots(b, c);
    [Complex64::new(r, 0.0), x, y]
}

/// A real root of the cubic, preferring the one farthest from the others.
fn isolated_real_root(c2: f64, c1: f64, c0: f64) -> f64 {
    let shift = -c2 / 3.0;
    // x³ + p x + q with λ = x + shift
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    if p == 0.0 {
        return shift + (-q).cbrt();
    }
    let h = q * q / 4.0 + p * p * p / 27.0;
    if h < 0.0 {
        // three distinct real roots
        let rad = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let roots = [0.0, 1.0, 2.0].map(|k| shift + rad * (phi - 2.0 * std::f64::consts::PI * k / 3.0).cos());
        let isolation = |i: usize| {
            (0..3)
                .filter(|&j| j != i)
                .map(|j| (roots[i] - roots[j]).abs())
                .fold(f64::INFINITY, f64::min)
        };
        let best = (0..3)
            .max_by(|&a, &b| isolation(a).total_cmp(&isolation(b)))
            .unwrap_or(0);
        roots[best]
    } else {
        let s = h.sqrt();
        shift + (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()
    }
}

fn newton_polish(c2: f64, c1: f64, c0: f64, mut x: f64) -> f64 {
    let poly = |x: f64| ((x + c2) * x + c1) * x + c0;
    let mut best = poly(x).abs();
    for _ in 0..8 {
        if best == 0.0 {
            break;
        }
        let d = (3.0 * x + 2.0 * c2) * x + c1;
        if d == 0.0 {
            break;
        }
        let next = x - poly(x) / d;
        let val = poly(next).abs();
        if !(val < best) {
            break;
        }
        x = next;
        best = val;
    }
    x
}

/// Unit basis of the nullspace of `M − λI`, by Gaussian elimination with
/// full pivoting; pivots at or below `tol` count as zero.
fn nullspace(m: &SquareMatrix<f64>, lambda: Complex64, tol: f64) -> Vec<Vec<Complex64>> {
    let n = m.dim();
    let mut a: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    Complex64::new(m[(i, j)], 0.0) - if i == j { lambda } else { Complex64::new(0.0, 0.0) }
                })
                .collect()
        })
        .collect();
    let mut cols: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    while rank < n {
        let mut best = (rank, rank, 0.0);
        for (i, row) in a.iter().enumerate().skip(rank) {
            for (j, x) in row.iter().enumerate().skip(rank) {
                if x.norm() > best.2 {
                    best = (i, j, x.norm());
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        a.swap(rank, best.0);
        for row in a.iter_mut() {
            row.swap(rank, best.1);
        }
        cols.swap(rank, best.1);
        let pivot = a[rank][rank];
        for x in a[rank].iter_mut() {
            *x /= pivot;
        }
        let pivot_row = a[rank].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != rank {
                let f = row[rank];
                for (x, &p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
        rank += 1;
    }
    // reduced form: x_pivot = −Σ a[r][free] x_free
    (rank..n)
        .map(|free| {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[cols[free]] = Complex64::new(1.0, 0.0);
            for r in 0..rank {
                v[cols[r]] = -a[r][free];
            }
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            v.iter().map(|x| x / norm).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_parts(e: &EigenDecomposition) -> Vec<f64> {
        e.values.iter().map(|z| z.re).collect()
    }

    #[test]
    fn negative_identity_has_a_triple_eigenvalue() {
        let m = SquareMatrix::<f64>::identity(3).scaled(-1.0);
        let e = eigen_small(&m).unwrap();
        assert_eq!(real_parts(&e), vec![-1.0; 3]);
        assert!(!e.defective);
        assert!(e.vectors.iter().all(Option::is_some));
        assert!(e.max_residual(&m) <= 1e-8 * m.frobenius_norm());
    }

    #[test]
    fn jordan_block_is_flagged() {
        let m = SquareMatrix::from_rows(&[[2.0, 1.0], [0.0, 2.0]]);
        let e = eigen_small(&m).unwrap();
        assert!(e.defective);
        assert_eq!(e.vectors.iter().filter(|v| v.is_some()).count(), 1);
        assert!(e.max_residual(&m) <= 1e-12);
    }

    #[test]
    fn rotation_gives_conjugate_pair() {
        let m = SquareMatrix::from_rows(&[[0.0, -2.0], [2.0, 0.0]]);
        let e = eigen_small(&m).unwrap();
        assert_eq!(
            e.values,
            vec![Complex64::new(0.0, 2.0), Complex64::new(0.0, -2.0)]
        );
        assert!(e.max_residual(&m) <= 1e-12);
    }

    #[test]
    fn distinct_real_cubic() {
        // upper triangular with diagonal 3, -1, 0.5
        let m = SquareMatrix::from_rows(&[[3.0, 1.0, 2.0], [0.0, -1.0, 4.0], [0.0, 0.0, 0.5]]);
        let e = eigen_small(&m).unwrap();
        let re = real_parts(&e);
        for (got, want) in re.iter().zip([3.0, 0.5, -1.0]) {
            assert!((got - want).abs() < 1e-12, "{re:?}");
        }
        assert!(e.max_residual(&m) <= 1e-8 * m.frobenius_norm());
    }

    #[test]
    fn cubic_with_complex_pair() {
        let m = SquareMatrix::from_rows(&[[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -3.0]]);
        let e = eigen_small(&m).unwrap();
        assert!((e.values[0] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((e.values[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((e.values[2] - Complex64::new(-3.0, 0.0)).norm() < 1e-12);
        assert!(e.max_residual(&m) <= 1e-8 * m.frobenius_norm());
    }

    #[test]
    fn zero_matrix() {
        let m = SquareMatrix::<f64>::zeros(3);
        let e = eigen_small(&m).unwrap();
        assert!(e.values.iter().all(|z| z.norm() == 0.0));
        assert!(!e.defective);
    }

    #[test]
    fn unsupported_inputs() {
        assert_eq!(
            eigen_small(&SquareMatrix::<f64>::identity(4)),
            Err(AnalysisError::UnsupportedDimension(4))
        );
        let m = SquareMatrix::from_rows(&[[f64::NAN, 0.0], [0.0, 1.0]]);
        assert_eq!(eigen_small(&m), Err(AnalysisError::NonFinite));
    }
}

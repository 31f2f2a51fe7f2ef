//! Small dense linear algebra for K×K Gram matrices.
//!
//! Everything here works on row-major `Vec<f64>` storage. Matrices are tiny
//! (K is the per-prompt sample count, typically 10), so a cyclic Jacobi
//! eigensolver is both accurate and fast enough.

use crate::metrics::{EmbeddingMatrix, MetricError};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::InvalidInput(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += value;
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Subtracts the column mean from every row, i.e. computes `J·Z` with
/// `J = I − (1/K)·11ᵀ`.
pub fn center_rows(z: &EmbeddingMatrix) -> Result<EmbeddingMatrix, MetricError> {
    if z.rows() == 0 {
        return Err(MetricError::InvalidInput("cannot center an empty matrix".into()));
    }
    z.check_finite()?;
    let (k, d) = (z.rows(), z.dims());
    let mut means = vec![0.0; d];
    for row in z.iter_rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= k as f64;
    }
    let mut out = Vec::with_capacity(k * d);
    for row in z.iter_rows() {
        out.extend(row.iter().zip(&means).map(|(v, m)| v - m));
    }
    EmbeddingMatrix::from_flat(k, d, out)
}

/// `Z·Zᵀ` (K×K).
pub fn gram(z: &EmbeddingMatrix) -> SquareMatrix {
    let k = z.rows();
    let mut g = SquareMatrix { n: k, data: vec![0.0; k * k] };
    for i in 0..k {
        let ri = z.row(i);
        for j in i..k {
            let v: f64 = ri.iter().zip(z.row(j)).map(|(a, b)| a * b).sum();
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    g
}

/// Eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &SquareMatrix) -> Vec<f64> {
    let n = m.n;
    let mut a = m.clone();
    if n <= 1 {
        return a.data;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum();
        let diag: f64 = (0..n).map(|i| a.get(i, i).powi(2)).sum();
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// `ln det(G)` for a symmetric positive-definite matrix, as the sum of the
/// logs of its eigenvalues.
pub fn logdet_psd(g: &SquareMatrix) -> Result<f64, MetricError> {
    let n = g.n;
    if n == 0 {
        return Err(MetricError::InvalidInput("empty matrix".into()));
    }
    if g.data.iter().any(|v| !v.is_finite()) {
        return Err(MetricError::InvalidInput("matrix has non-finite entries".into()));
    }
    let scale = g.max_abs().max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            if (g.get(i, j) - g.get(j, i)).abs() > 1e-8 * scale {
                return Err(MetricError::InvalidInput(format!(
                    "matrix is not symmetric at ({i},{j})"
                )));
            }
        }
    }
    let eig = symmetric_eigenvalues(g);
    let largest = eig.last().copied().unwrap_or(0.0).abs();
    let tol = n as f64 * f64::EPSILON * largest;
    if let Some(&smallest) = eig.first() {
        if smallest <= tol {
            return Err(MetricError::Singular { smallest_eigenvalue: smallest });
        }
    }
    Ok(eig.iter().map(|l| l.ln()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> EmbeddingMatrix {
        EmbeddingMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn identical_rows_center_to_zero() {
        let c = center_rows(&mat(&[&[1.0, 0.0], &[1.0, 0.0]])).unwrap();
        assert!(c.iter_rows().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_mean_input_is_fixed_point() {
        let z = mat(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        assert_eq!(center_rows(&z).unwrap(), z);
    }

    #[test]
    fn centering_rejects_non_finite() {
        let z = EmbeddingMatrix::from_flat(1, 2, vec![f64::NAN, 0.0]);
        assert!(z.is_err() || center_rows(&z.unwrap()).is_err());
    }

    #[test]
    fn logdet_identity_and_diagonal() {
        assert_eq!(logdet_psd(&SquareMatrix::identity(3)).unwrap(), 0.0);
        let d = SquareMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert!((logdet_psd(&d).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn logdet_flags_singular() {
        let s = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(logdet_psd(&s), Err(MetricError::Singular { .. })));
    }

    #[test]
    fn logdet_rejects_asymmetric() {
        let s = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert!(matches!(logdet_psd(&s), Err(MetricError::InvalidInput(_))));
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let m = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = symmetric_eigenvalues(&m);
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
    }
}

//! Small dense complex matrices and the two Jacobi kernels the crate needs:
//! cyclic Jacobi for symmetric/Hermitian spectra and one-sided (Hestenes)
//! Jacobi for singular values.

use std::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "CMatrix::from_vec: shape mismatch");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Sum of squared moduli of all entries.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Σ conj(self) * other`, the Frobenius inner product.
    pub fn inner(&self, other: &Self) -> C64 {
        inner(&self.data, &other.data)
    }

    /// Largest `|A_ij - conj(A_ji)|`; zero for a Hermitian matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `Σ conj(a_i) b_i`, accumulated sequentially.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

/// Eigenvalues of a real symmetric matrix (row-major, `n × n`), ascending.
///
/// Cyclic Jacobi with the classical threshold strategy; stops when the
/// off-diagonal Frobenius mass falls below `1e-30` of the total.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let total: f64 = m.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return Ok(vec![0.0; n]);
    }
    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        if off <= 1e-30 * total {
            let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
            ev.sort_by(|x, y| x.total_cmp(y));
            return Ok(ev);
        }
        // skip rotations far below the current off-diagonal level in early sweeps
        let thresh = if sweep < 3 { 0.2 * off.sqrt() / (n * n) as f64 } else { 0.0 };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= thresh || apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
            }
        }
    }
    Err(Error::NotConverged { iterations: MAX_SWEEPS, best_value: f64::NAN, best_point: vec![] })
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// The `d × d` Hermitian `H = A + iB` is embedded as the real symmetric
/// `[[A, -B], [B, A]]`, whose spectrum is that of `H` with every eigenvalue
/// doubled.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    let n = h.rows();
    if h.cols() != n {
        return Err(Error::invalid("hermitian_eigenvalues: matrix is not square"));
    }
    let scale = h.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let defect = h.hermiticity_defect();
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let d = 2 * n;
    let mut emb = vec![0.0; d * d];
    for i in 0..n {
        for j in 0..n {
            // symmetrize away rounding-level anti-Hermitian residue
            let z = 0.5 * (h[(i, j)] + h[(j, i)].conj());
            emb[i * d + j] = z.re;
            emb[(i + n) * d + (j + n)] = z.re;
            emb[i * d + (j + n)] = -z.im;
            emb[(i + n) * d + j] = z.im;
        }
    }
    let ev = symmetric_eigenvalues(&emb, d)?;
    Ok(ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Singular values of an arbitrary complex matrix, descending.
///
/// One-sided Jacobi on the columns of whichever of `A`, `A^H` has fewer of
/// them; sweeps stop once every column pair satisfies
/// `|<a_p, a_q>| <= 1e-15 ||a_p|| ||a_q||`.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let work = if a.cols() > a.rows() { a.adjoint() } else { a.clone() };
    let (m, n) = (work.rows(), work.cols());
    // column-major copy so that column operations are contiguous
    let mut cols: Vec<Vec<C64>> =
        (0..n).map(|j| (0..m).map(|i| work[(i, j)]).collect()).collect();
    let tol = 1e-15;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = inner(&cols[p], &cols[q]);
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                let cp = &mut lo[p];
                let cq = &mut hi[0];
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let yq = *y * phase.conj();
                    let xp = *x;
                    *x = xp * c - yq * s;
                    *y = xp * s + yq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> =
        cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn symmetric_diag_is_sorted() {
        let a = [3.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 5.0];
        assert_eq!(symmetric_eigenvalues(&a, 3).unwrap(), vec![-2.0, 3.0, 5.0]);
    }

    #[test]
    fn symmetric_2x2() {
        // [[2,1],[1,2]] -> 1, 3
        let ev = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_pauli_y() {
        let h = CMatrix::from_vec(2, 2, vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
        let ev = hermitian_eigenvalues(&h).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let h = CMatrix::from_vec(2, 2, vec![c(0., 0.), c(1., 0.), c(2., 0.), c(0., 0.)]);
        assert!(matches!(hermitian_eigenvalues(&h), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn singular_values_of_rank_one() {
        // u v^H with |u| = sqrt(2), |v| = sqrt(3)
        let u = [c(1., 0.), c(0., 1.)];
        let v = [c(1., 0.), c(1., 0.), c(0., 1.)];
        let a = CMatrix::from_fn(2, 3, |i, j| u[i] * v[j].conj());
        let sv = singular_values(&a);
        assert!((sv[0] - 6f64.sqrt()).abs() < 1e-14);
        assert!(sv[1].abs() < 1e-14);
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        let a = CMatrix::from_fn(4, 3, |i, j| {
            c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0)
        });
        let sv = singular_values(&a);
        let gram = a.adjoint().matmul(&a);
        let mut ev = hermitian_eigenvalues(&gram).unwrap();
        ev.reverse();
        for (s, e) in sv.iter().zip(&ev) {
            assert!((s * s - e).abs() < 1e-12 * ev[0]);
        }
    }
}

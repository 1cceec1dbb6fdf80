//! Small dense matrices over `f64`.
//!
//! Everything here targets the desk-scale sizes of this crate ((n+2)x(n+2)
//! ambient matrices and the m x m adjoint, m = (n+1)(n+2)/2), so the
//! algorithms are the classical dense ones: Gauss-Jordan with partial
//! pivoting, cyclic Jacobi for symmetric eigenproblems, scaling-and-squaring
//! for the exponential and inverse scaling-and-squaring (Denman-Beavers
//! square roots) for the logarithm.

use alloc::vec;
use alloc::vec::Vec;
// resolves float math in no_std builds; shadowed when std is in the crate graph
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = entries[i];
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self[(i, j)] * v[j];
            }
            out[i] = s;
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a += *b;
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= *b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn neg(&self) -> Mat {
        self.scale(-1.0)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Max absolute entry.
    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Frobenius inner product `tr(self^T other)`.
    pub fn dot(&self, other: &Mat) -> f64 {
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Mat> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let mut piv = col;
            let mut best = a[(col, col)].abs();
            for r in col + 1..n {
                let v = a[(r, col)].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-300 {
                return Err(Error::InvalidParameter("singular matrix".into()));
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            let d = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= d;
                inv[(col, j)] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let acj = a[(col, j)];
                    let icj = inv[(col, j)];
                    a[(r, j)] -= f * acj;
                    inv[(r, j)] -= f * icj;
                }
            }
        }
        Ok(inv)
    }

    /// Matrix exponential by scaling and squaring with a Taylor kernel.
    pub fn expm(&self) -> Mat {
        assert!(self.is_square());
        let n = self.rows;
        let norm = self.norm();
        let mut s = 0u32;
        let mut scaled = self.clone();
        if norm > 0.5 {
            s = (norm / 0.5).log2().ceil() as u32;
            scaled = self.scale(0.5f64.powi(s as i32));
        }
        // Taylor: at |A| <= 0.5 twenty terms reach ~1e-19 relative.
        let mut out = Mat::identity(n);
        let mut term = Mat::identity(n);
        for k in 1..=20 {
            term = term.mul(&scaled).scale(1.0 / k as f64);
            out = out.add(&term);
            if term.norm() < 1e-18 * out.norm().max(1.0) {
                break;
            }
        }
        for _ in 0..s {
            out = out.mul(&out);
        }
        out
    }

    /// Principal matrix logarithm by inverse scaling and squaring.
    ///
    /// Fails when the spectrum meets the closed negative real axis (no
    /// principal logarithm) or the square-root iteration stalls.
    pub fn logm(&self) -> Result<Mat> {
        assert!(self.is_square());
        let n = self.rows;
        let id = Mat::identity(n);
        let mut a = self.clone();
        let mut k = 0u32;
        while a.sub(&id).norm() > 0.35 {
            if k >= 40 {
                return Err(Error::LogFailed);
            }
            a = sqrtm_db(&a)?;
            k += 1;
        }
        let e = a.sub(&id);
        // Mercator series; |E| <= 0.35 so 80 terms reach ~1e-36.
        let mut out = Mat::zeros(n, n);
        let mut term = Mat::identity(n);
        for j in 1..=80 {
            term = term.mul(&e);
            let c = if j % 2 == 1 { 1.0 } else { -1.0 } / j as f64;
            out = out.add(&term.scale(c));
            if term.norm() / (j as f64) < 1e-18 {
                break;
            }
        }
        Ok(out.scale(2.0f64.powi(k as i32)))
    }

    /// Symmetric eigendecomposition by cyclic Jacobi.
    ///
    /// Returns `(eigenvalues, v)` with `self = v * diag(vals) * v^T`, columns
    /// of `v` orthonormal. Input must be symmetric.
    pub fn jacobi_eigen(&self) -> (Vec<f64>, Mat) {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut v = Mat::identity(n);
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            if off.sqrt() < 1e-15 * (1.0 + a.norm()) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        1.0 / (theta - (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let vals = (0..n).map(|i| a[(i, i)]).collect();
        (vals, v)
    }

    /// Largest singular value (2-norm), via Jacobi on `A^T A`.
    pub fn norm2(&self) -> f64 {
        let ata = self.transpose().mul(self);
        let (vals, _) = ata.jacobi_eigen();
        vals.iter().fold(0.0f64, |m, &x| m.max(x.max(0.0))).sqrt()
    }

    /// All singular values, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let ata = self.transpose().mul(self);
        let (mut vals, _) = ata.jacobi_eigen();
        for v in vals.iter_mut() {
            *v = v.max(0.0).sqrt();
        }
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Denman-Beavers iteration for the principal square root.
fn sqrtm_db(a: &Mat) -> Result<Mat> {
    let n = a.rows;
    let mut y = a.clone();
    let mut z = Mat::identity(n);
    for _ in 0..60 {
        let yi = y.inverse()?;
        let zi = z.inverse()?;
        let y_next = y.add(&zi).scale(0.5);
        let z_next = z.add(&yi).scale(0.5);
        let delta = y_next.max_abs_diff(&y);
        y = y_next;
        z = z_next;
        if delta < 1e-15 * (1.0 + y.norm()) {
            let res = y.mul(&y).sub(a).norm();
            if res < 1e-10 * (1.0 + a.norm()) {
                return Ok(y);
            }
            return Err(Error::LogFailed);
        }
    }
    Err(Error::LogFailed)
}

/// Euclidean helpers on coordinate slices.
pub mod vecn {
    use alloc::vec::Vec;
    // resolves float math in no_std builds; shadowed when std is in the crate graph
#[allow(unused_imports)]
use num_traits::Float;

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
    }

    pub fn norm(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
        a.iter().map(|x| x * s).collect()
    }

    pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()
    }

    pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b.iter()).map(|(x, y)| x - y).collect()
    }

    pub fn normalize(a: &[f64]) -> Option<Vec<f64>> {
        let n = norm(a);
        if n < 1e-300 {
            None
        } else {
            Some(scale(a, 1.0 / n))
        }
    }

    /// Angle between two nonzero vectors, in [0, pi].
    pub fn angle(a: &[f64], b: &[f64]) -> f64 {
        let c = dot(a, b) / (norm(a) * norm(b));
        c.clamp(-1.0, 1.0).acos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let a = Mat::from_rows(&[&[2.0, 1.0, 0.0], &[0.5, 3.0, -1.0], &[0.0, 1.0, 1.5]]);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).max_abs_diff(&Mat::identity(3)) < 1e-13);
    }

    #[test]
    fn expm_logm_roundtrip() {
        let x = Mat::from_rows(&[&[0.0, 1.2, -0.3], &[-1.2, 0.0, 0.7], &[0.3, -0.7, 0.0]]);
        let g = x.expm();
        let back = g.logm().unwrap();
        assert!(back.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn expm_matches_scalar_on_diagonal() {
        let x = Mat::diag(&[1.0, -2.0, 0.25]);
        let e = x.expm();
        for (i, want) in [1.0f64.exp(), (-2.0f64).exp(), 0.25f64.exp()].iter().enumerate() {
            assert!((e[(i, i)] - want).abs() < 1e-14 * want.max(1.0));
        }
    }

    #[test]
    fn jacobi_reconstructs() {
        let a = Mat::from_rows(&[&[4.0, 1.0, 0.2], &[1.0, 3.0, -0.5], &[0.2, -0.5, 1.0]]);
        let (vals, v) = a.jacobi_eigen();
        let rec = v.mul(&Mat::diag(&vals)).mul(&v.transpose());
        assert!(rec.max_abs_diff(&a) < 1e-12);
        assert!(v.transpose().mul(&v).max_abs_diff(&Mat::identity(3)) < 1e-13);
    }

    #[test]
    fn logm_rejects_minus_identity() {
        let a = Mat::diag(&[-1.0, -1.0]);
        assert!(a.logm().is_err());
    }
}

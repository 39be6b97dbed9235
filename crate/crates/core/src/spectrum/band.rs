//! Banded matrices: a general band for assembly and a symmetric lower band
//! with Cholesky factorization and iterative-refinement solves.

use crate::error::{Error, Result};

/// Square matrix with `bw` sub- and super-diagonals, rows stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.bw as isize;
        (0..=2 * self.bw as isize)
            .contains(&off)
            .then(|| i * (2 * self.bw + 1) + off as usize)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds to entry `(i, j)`; panics outside the band (an assembly bug).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let s = self.slot(i, j).expect("entry outside the assembled band");
        self.data[s] += value;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            let row = &self.data[i * (2 * self.bw + 1)..];
            let mut s = 0.0;
            for j in lo..=hi {
                s += row[j + self.bw - i] * x[j];
            }
            *yi = s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |a_ij − a_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..(i + self.bw + 1).min(self.n) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `(A + Aᵀ)/2` in symmetric lower storage.
    pub fn symmetrized(&self) -> SymBandMatrix {
        let mut out = SymBandMatrix::zeros(self.n, self.bw);
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                out.set(i, j, 0.5 * (self.get(i, j) + self.get(j, i)));
            }
        }
        out
    }

    /// `self + c·other` for equal shapes.
    pub fn add_scaled(&self, c: f64, other: &BandMatrix) -> BandMatrix {
        assert_eq!((self.n, self.bw), (other.n, other.bw));
        BandMatrix {
            n: self.n,
            bw: self.bw,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + c * b).collect(),
        }
    }
}

/// Symmetric matrix stored as its lower band (row `i` holds columns `i−bw..=i`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymBandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBandMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        (i - j <= self.bw).then(|| i * (self.bw + 1) + self.bw - (i - j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.data[s] = value;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `D·A·D` for a diagonal `D`.
    pub fn congruence(&self, d: &[f64]) -> SymBandMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                let s = out.slot(i, j).expect("in band");
                out.data[s] *= d[i] * d[j];
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let mut s = 0.0;
            for j in lo..i {
                let a = row[self.bw - (i - j)];
                s += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += s + row[self.bw] * x[i];
        }
    }

    /// `A x` with compensated (double-double) accumulation. The reduced
    /// pencil has far-field entries many orders above its eigenvalues, and a
    /// plain product loses the residual of an accurate eigenvector in rounding.
    pub fn matvec_compensated(&self, x: &[f64], y: &mut [f64]) {
        let mut lo = vec![0.0; self.n];
        y.iter_mut().for_each(|v| *v = 0.0);
        #[inline]
        fn acc(hi: &mut f64, lo: &mut f64, a: f64, b: f64) {
            let p = a * b;
            let pe = a.mul_add(b, -p);
            let s = *hi + p;
            let bb = s - *hi;
            let se = (*hi - (s - bb)) + (p - bb);
            *hi = s;
            *lo += se + pe;
        }
        for i in 0..self.n {
            let start = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            for j in start..i {
                let a = row[self.bw - (i - j)];
                let (hi, rest) = y.split_at_mut(i);
                acc(&mut rest[0], &mut lo[i], a, x[j]);
                acc(&mut hi[j], &mut lo[j], a, x[i]);
            }
            acc(&mut y[i], &mut lo[i], row[self.bw], x[i]);
        }
        y.iter_mut().zip(&lo).for_each(|(h, l)| *h += l);
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut ay = vec![0.0; self.n];
        self.matvec(y, &mut ay);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Banded Cholesky `A = L Lᵀ`; fails if a pivot is not positive.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // Overlap of rows i and j: columns max(lo, j−bw)..j.
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = l[i * w + bw - (i - j)];
                for k in klo..j {
                    s -= l[i * w + bw - (i - k)] * l[j * w + bw - (j - k)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::Eigen(format!("Cholesky pivot {s:e} at row {i} is not positive")));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + bw - (i - j)] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }
}

/// Lower-band Cholesky factor.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for k in lo..i {
                s -= self.l[i * w + bw - (i - k)] * x[k];
            }
            x[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            x[i] /= self.l[i * w + bw];
            let xi = x[i];
            let lo = i.saturating_sub(bw);
            for k in lo..i {
                x[k] -= self.l[i * w + bw - (i - k)] * xi;
            }
        }
    }

    /// Solve followed by `steps` rounds of iterative refinement against `a`.
    pub fn solve_refined(&self, a: &SymBandMatrix, b: &[f64], steps: usize) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        let mut ax = vec![0.0; b.len()];
        for _ in 0..steps {
            a.matvec_compensated(&x, &mut ax);
            let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            self.solve_in_place(&mut r);
            x.iter_mut().zip(&r).for_each(|(x, d)| *x += d);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymBandMatrix {
        let mut a = SymBandMatrix::zeros(n, 2);
        for i in 0..n {
            a.set(i, i, 4.0);
            if i >= 1 {
                a.set(i, i - 1, -1.0);
            }
            if i >= 2 {
                a.set(i, i - 2, 0.5);
            }
        }
        a
    }

    #[test]
    fn cholesky_solves() {
        let a = laplacian(30);
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; 30];
        a.matvec(&x, &mut b);
        let f = a.cholesky().unwrap();
        let y = f.solve_refined(&a, &b, 2);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let a = laplacian(12);
        let d = a.to_dense();
        let x: Vec<f64> = (0..12).map(|i| i as f64 - 3.0).collect();
        let mut y = vec![0.0; 12];
        a.matvec(&x, &mut y);
        let yd = &d * nalgebra::DVector::from_vec(x.clone());
        for (u, v) in y.iter().zip(yd.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
        a.matvec_compensated(&x, &mut y);
        for (u, v) in y.iter().zip(yd.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn compensated_matvec_survives_cancellation() {
        let mut a = SymBandMatrix::zeros(2, 1);
        a.set(0, 0, 1e16);
        a.set(1, 0, -1e16);
        a.set(1, 1, 1.0);
        let x = [1.0, 1.0 + 2f64.powi(-40)];
        let mut y = [0.0; 2];
        a.matvec_compensated(&x, &mut y);
        let exact0 = -1e16 * 2f64.powi(-40);
        assert!((y[0] - exact0).abs() <= 1e-12 * exact0.abs(), "{y:?}");
    }

    #[test]
    fn indefinite_rejected() {
        let mut a = laplacian(5);
        a.set(3, 3, -1.0);
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn general_band_symmetrizes() {
        let mut g = BandMatrix::zeros(4, 1);
        g.add(0, 1, 2.0);
        g.add(1, 0, 1.0);
        g.add(2, 2, 5.0);
        assert_eq!(g.max_asymmetry(), 1.0);
        let s = g.symmetrized();
        assert_eq!(s.get(0, 1), 1.5);
        assert_eq!(s.get(1, 0), 1.5);
        assert_eq!(s.get(2, 2), 5.0);
        assert_eq!(s.get(3, 0), 0.0);
    }
}

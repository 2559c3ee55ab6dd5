//! LU factorizations with partial pivoting for the small systems that arise
//! in the time steppers: a dense variant and a banded variant.

use crate::error::{Error, Result};

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has the wrong length");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// `PA = LU` with unit lower-triangular `L`, stored in place.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(mut a: DenseMatrix) -> Result<Self> {
        let n = a.n;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * n as f64;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if !(pmax > tiny) {
                return Err(Error::SingularMatrix { column: k });
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let l = a[(i, k)] / pivot;
                a[(i, k)] = l;
                if l != 0.0 {
                    let (upper, lower) = a.data.split_at_mut(i * n);
                    let krow = &upper[k * n + k + 1..k * n + n];
                    for (dst, src) in lower[k + 1..n].iter_mut().zip(krow) {
                        *dst -= l * src;
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(a, b)| a * b)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored with room for
/// the fill-in produced by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl >= i && j <= i + self.kl + self.ku {
            self.data[self.offset(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry (i, j); panics if (i, j) lies outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                d[(i, j)] = self.get(i, j);
            }
        }
        d
    }
}

/// Banded LU with partial pivoting (the classic `gbtrf` scheme).
#[derive(Debug, Clone)]
pub struct BandedLu {
    a: BandedMatrix,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn factor(mut a: BandedMatrix) -> Result<Self> {
        let n = a.n;
        let kl = a.kl;
        let kup = a.kl + a.ku;
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * n as f64;
        let mut piv = vec![0; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut pmax = -1.0;
            for i in k..=last {
                let v = a.data[a.offset(i, k)].abs();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if !(pmax > tiny) {
                return Err(Error::SingularMatrix { column: k });
            }
            piv[k] = p;
            let jend = (k + kup).min(n - 1);
            if p != k {
                for j in k..=jend {
                    let (ok, op) = (a.offset(k, j), a.offset(p, j));
                    a.data.swap(ok, op);
                }
            }
            let pivot = a.data[a.offset(k, k)];
            for i in k + 1..=last {
                let oik = a.offset(i, k);
                let l = a.data[oik] / pivot;
                a.data[oik] = l;
                if l != 0.0 {
                    for j in k + 1..=jend {
                        let okj = a.offset(k, j);
                        let oij = a.offset(i, j);
                        a.data[oij] -= l * a.data[okj];
                    }
                }
            }
        }
        Ok(Self { a, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let a = &self.a;
        let n = a.n;
        let kl = a.kl;
        let kup = a.kl + a.ku;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    x[i] -= a.data[a.offset(i, k)] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + kup).min(n - 1) {
                s -= a.data[a.offset(i, j)] * x[j];
            }
            x[i] = s / a.data[a.offset(i, i)];
        }
        x
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dense_solve_needs_pivoting() {
        let a = DenseMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ]);
        let x_true = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = DenseLu::factor(a).unwrap().solve(&b);
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn dense_reports_singularity() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            DenseLu::factor(a),
            Err(Error::SingularMatrix { column: 1 })
        ));
    }

    #[test]
    fn banded_reports_singularity() {
        let mut a = BandedMatrix::zeros(3, 1, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        assert!(BandedLu::factor(a).is_err());
    }

    fn banded_from(n: usize, kl: usize, ku: usize, vals: &[f64]) -> BandedMatrix {
        let mut a = BandedMatrix::zeros(n, kl, ku);
        let mut it = vals.iter().cycle();
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                a.add(i, j, *it.next().unwrap());
            }
        }
        a
    }

    proptest! {
        #[test]
        fn banded_matches_dense(
            n in 3usize..30,
            kl in 0usize..4,
            ku in 0usize..4,
            vals in proptest::collection::vec(-1.0f64..1.0, 64),
            rhs in proptest::collection::vec(-1.0f64..1.0, 30),
        ) {
            let mut band = banded_from(n, kl, ku, &vals);
            // a dominant but not overwhelming diagonal keeps the draw well conditioned
            for i in 0..n {
                band.add(i, i, 3.0 * if i % 2 == 0 { 1.0 } else { -1.0 });
            }
            let dense = band.to_dense();
            let b = &rhs[..n];
            let xd = DenseLu::factor(dense.clone()).unwrap().solve(b);
            let xb = BandedLu::factor(band).unwrap().solve(b);
            for (u, v) in xd.iter().zip(&xb) {
                prop_assert!((u - v).abs() < 1e-10 * (1.0 + u.abs()));
            }
            let r = dense.mul_vec(&xb);
            for (u, v) in r.iter().zip(b) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn banded_pivots_across_zero_diagonal() {
        // zero leading diagonal forces a row swap that creates fill-in above ku
        let mut a = BandedMatrix::zeros(4, 1, 1);
        let rows = [
            [0.0, 1.0, 0.0, 0.0],
            [2.0, 1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 3.0],
            [0.0, 0.0, 1.0, 1.0],
        ];
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v != 0.0 {
                    a.add(i, j, *v);
                }
            }
        }
        let x_true = [1.0, 2.0, 3.0, 4.0];
        let b = a.to_dense().mul_vec(&x_true);
        let x = BandedLu::factor(a).unwrap().solve(&b);
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-13);
        }
    }
}

//! Banded LU factorization with partial pivoting.

// index-based loops mirror the textbook elimination order
#![allow(clippy::needless_range_loop)]

use crate::error::{ensure, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Storage keeps `kl` extra super-diagonals for the fill produced by row
/// interchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    #[inline]
    fn pos(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Adds `v` to entry `(i, j)`, which must lie inside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j + self.kl >= i && j <= i + self.ku, "({i},{j}) outside band");
        let p = self.pos(i, j);
        self.data[p] += v;
    }

    #[cfg(test)]
    /// `y = A x` using the original (unfactored) entries.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.pos(i, j)] * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.ku + self.kl;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ensure!(scale > 0.0 && scale.is_finite(), Numerical, "band matrix is zero or non-finite");
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.pos(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[self.pos(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            ensure!(best > 1e-14 * scale, Numerical, "singular band matrix at row {k}");
            piv[k] = p;
            let jend = (k + reach).min(n - 1);
            if p != k {
                for j in k..=jend {
                    let a = self.pos(k, j);
                    let b = self.pos(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.pos(k, k)];
            for i in k + 1..=last {
                let pik = self.pos(i, k);
                let l = self.data[pik] / pivot;
                self.data[pik] = l;
                if l == 0.0 {
                    continue;
                }
                let rk = self.pos(k, k + 1);
                let ri = self.pos(i, k + 1);
                for off in 0..jend - k {
                    self.data[ri + off] -= l * self.data[rk + off];
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

/// Factors produced by [`BandMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        let reach = m.ku + m.kl;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + m.kl).min(n - 1) {
                    b[i] -= m.data[m.pos(i, k)] * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                s -= m.data[m.pos(i, j)] * b[j];
            }
            b[i] = s / m.data[m.pos(i, i)];
        }
    }
}

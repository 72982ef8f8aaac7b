//! Complex banded matrices with in-band LU factorization (no pivoting).
//!
//! Stores the Crank-Nicolson implicit operator of the simulator, whose
//! large imaginary diagonal `i/dtau` keeps unpivoted elimination stable.
//! A numerically singular pivot is reported instead of propagating NaN.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BandedError {
    #[error("numerically singular pivot at row {row} (|pivot| = {magnitude:e})")]
    SingularPivot { row: usize, magnitude: f64 },
}

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    // row-major: entry (i, j) lives at data[i * width + (j + lower - i)]
    data: Vec<Complex64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        BandedMatrix {
            n,
            lower,
            upper,
            data: vec![Complex64::new(0.0, 0.0); n * (lower + upper + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper
    }

    /// Reads zero outside the band.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[i * self.width() + (j + self.lower - i)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        debug_assert!(self.in_band(i, j), "write outside band: ({i}, {j})");
        let w = self.width();
        self.data[i * w + (j + self.lower - i)] = value;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: Complex64) {
        debug_assert!(self.in_band(i, j), "write outside band: ({i}, {j})");
        let w = self.width();
        self.data[i * w + (j + self.lower - i)] += value;
    }

    pub fn mul_vec(&self, x: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            let j_lo = i.saturating_sub(self.lower);
            let j_hi = (i + self.upper).min(self.n - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in j_lo..=j_hi {
                acc += self.data[i * self.width() + (j + self.lower - i)] * x[j];
            }
            out[i] = acc;
        }
    }

    /// In-band LU without pivoting. The factors overwrite a copy of the
    /// matrix; the band structure is preserved exactly.
    pub fn lu_factor(&self) -> Result<BandedLu, BandedError> {
        let mut lu = self.clone();
        let n = lu.n;
        let (kl, ku) = (lu.lower, lu.upper);
        for k in 0..n {
            let pivot = lu.get(k, k);
            if pivot.norm() < f64::MIN_POSITIVE.sqrt() {
                return Err(BandedError::SingularPivot {
                    row: k,
                    magnitude: pivot.norm(),
                });
            }
            let i_hi = (k + kl).min(n - 1);
            for i in k + 1..=i_hi {
                let factor = lu.get(i, k) / pivot;
                lu.set(i, k, factor);
                let j_hi = (k + ku).min(n - 1);
                for j in k + 1..=j_hi {
                    let update = lu.get(i, j) - factor * lu.get(k, j);
                    lu.set(i, j, update);
                }
            }
        }
        Ok(BandedLu { lu })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandedMatrix,
}

impl BandedLu {
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.lu.n;
        let (kl, ku) = (self.lu.lower, self.lu.upper);
        let w = kl + ku + 1;
        assert_eq!(b.len(), n);
        // forward: L y = b, unit diagonal; entry (i, j) sits at row[j + kl - i]
        for i in 0..n {
            let j_lo = i.saturating_sub(kl);
            let row = &self.lu.data[i * w..i * w + w];
            let mut acc = b[i];
            for j in j_lo..i {
                acc -= row[j + kl - i] * b[j];
            }
            b[i] = acc;
        }
        // backward: U x = y
        for i in (0..n).rev() {
            let j_hi = (i + ku).min(n - 1);
            let row = &self.lu.data[i * w..i * w + w];
            let mut acc = b[i];
            for j in i + 1..=j_hi {
                acc -= row[j + kl - i] * b[j];
            }
            b[i] = acc / row[kl];
        }
    }
}

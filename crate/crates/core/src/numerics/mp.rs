//! Multiple-precision dense linear algebra and Gauss-Hermite rules.

use nalgebra::{DMatrix, SymmetricEigen};
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};

/// Square matrix of MPFR floats, row-major.
#[derive(Debug, Clone)]
pub struct MpMatrix {
    pub n: usize,
    pub prec: u32,
    pub data: Vec<Float>,
}

impl MpMatrix {
    pub fn zeros(n: usize, prec: u32) -> Self {
        MpMatrix { n, prec, data: vec![Float::new(prec); n * n] }
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        let mut m = Self::zeros(n, prec);
        for i in 0..n {
            m.data[i * n + i] = Float::with_val(prec, 1);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Float {
        &self.data[i * self.n + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Float {
        &mut self.data[i * self.n + j]
    }

    pub fn matmul(&self, other: &MpMatrix) -> MpMatrix {
        let n = self.n;
        let mut out = MpMatrix::zeros(n, self.prec);
        let mut acc = Float::new(self.prec);
        for i in 0..n {
            for j in 0..n {
                acc.assign_zero();
                for k in 0..n {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.get_mut(i, j).clone_from(&acc);
            }
        }
        out
    }

    pub fn transpose(&self) -> MpMatrix {
        let n = self.n;
        let mut out = MpMatrix::zeros(n, self.prec);
        for i in 0..n {
            for j in 0..n {
                out.get_mut(j, i).clone_from(self.get(i, j));
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Float]) -> Vec<Float> {
        let mut acc = Float::new(self.prec);
        (0..self.n)
            .map(|i| {
                acc.assign_zero();
                for (a, x) in self.data[i * self.n..(i + 1) * self.n].iter().zip(v) {
                    acc += a * x;
                }
                acc.clone()
            })
            .collect()
    }

    pub fn max_abs(&self) -> Float {
        let mut m = Float::new(self.prec);
        for x in &self.data {
            if x.clone().abs() > m {
                m = x.clone().abs();
            }
        }
        m
    }
}

trait AssignZero {
    fn assign_zero(&mut self);
}

impl AssignZero for Float {
    fn assign_zero(&mut self) {
        *self = Float::with_val(self.prec(), 0);
    }
}

/// P G Q = L U with unit lower triangular L. `row_perm[i]` is the original row
/// placed at position i, likewise `col_perm` for columns.
#[derive(Debug, Clone)]
pub struct FullPivotLu {
    pub l: MpMatrix,
    pub u: MpMatrix,
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
    /// log2 of max |pivot| / min |pivot|.
    pub pivot_spread_log2: f64,
}

/// Full-pivoting LU. Fails when the pivots spread over more binary orders of
/// magnitude than the working precision minus `guard_bits` can represent.
pub fn lu_full_pivot(g: &MpMatrix, guard_bits: u32) -> Result<FullPivotLu> {
    let n = g.n;
    let prec = g.prec;
    let mut a = g.clone();
    let mut row_perm: Vec<usize> = (0..n).collect();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut l = MpMatrix::identity(n, prec);
    let mut pivots_log2 = Vec::with_capacity(n);
    for k in 0..n {
        let (mut pi, mut pj) = (k, k);
        let mut best = Float::new(prec);
        for i in k..n {
            for j in k..n {
                let v = a.get(i, j).clone().abs();
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best.is_zero() {
            return Err(Error::Precision(format!("Gram matrix is singular at pivot {k}")));
        }
        if pi != k {
            for j in 0..n {
                a.data.swap(k * n + j, pi * n + j);
            }
            for j in 0..k {
                l.data.swap(k * n + j, pi * n + j);
            }
            row_perm.swap(k, pi);
        }
        if pj != k {
            for i in 0..n {
                a.data.swap(i * n + k, i * n + pj);
            }
            col_perm.swap(k, pj);
        }
        pivots_log2.push(best.to_f64_exp().1 as f64 + best.to_f64_exp().0.log2());
        let piv = a.get(k, k).clone();
        for i in (k + 1)..n {
            let f = Float::with_val(prec, a.get(i, k) / &piv);
            for j in (k + 1)..n {
                let t = Float::with_val(prec, &f * a.get(k, j));
                *a.get_mut(i, j) -= t;
            }
            *a.get_mut(i, k) = Float::new(prec);
            *l.get_mut(i, k) = f;
        }
    }
    let hi = pivots_log2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = pivots_log2.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = hi - lo;
    if spread > prec as f64 - guard_bits as f64 {
        return Err(Error::Precision(format!(
            "pivot magnitudes span 2^{spread:.0}, more than {prec} bits minus {guard_bits} guard bits"
        )));
    }
    Ok(FullPivotLu { l, u: a, row_perm, col_perm, pivot_spread_log2: spread })
}

/// Inverse of a unit lower triangular matrix.
pub fn unit_lower_inverse(l: &MpMatrix) -> MpMatrix {
    let n = l.n;
    let mut inv = MpMatrix::identity(n, l.prec);
    for j in 0..n {
        for i in (j + 1)..n {
            let mut acc = Float::new(l.prec);
            for k in j..i {
                acc += l.get(i, k) * inv.get(k, j);
            }
            *inv.get_mut(i, j) = -acc;
        }
    }
    inv
}

/// Inverse of an upper triangular matrix.
pub fn upper_inverse(u: &MpMatrix) -> MpMatrix {
    let n = u.n;
    let prec = u.prec;
    let mut inv = MpMatrix::zeros(n, prec);
    for j in 0..n {
        *inv.get_mut(j, j) = Float::with_val(prec, 1) / u.get(j, j);
        for i in (0..j).rev() {
            let mut acc = Float::new(prec);
            for k in (i + 1)..=j {
                acc += u.get(i, k) * inv.get(k, j);
            }
            *inv.get_mut(i, j) = -acc / u.get(i, i);
        }
    }
    inv
}

/// Gauss-Hermite rule for the weight e^{-x^2}: `m` nodes and weights at `prec`
/// bits. Double-precision Golub-Welsch guesses are refined by Newton steps on
/// the orthonormal Hermite recurrence.
pub fn gauss_hermite(m: usize, prec: u32) -> (Vec<Float>, Vec<Float>) {
    assert!(m >= 1);
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        let off = (k as f64 / 2.0).sqrt();
        jac[(k, k - 1)] = off;
        jac[(k - 1, k)] = off;
    }
    let mut guesses: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().cloned().collect();
    guesses.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pi = Float::with_val(prec, Constant::Pi);
    let h0 = Float::with_val(prec, pi.pow(Float::with_val(prec, -0.25)));
    let eval = |x: &Float| -> (Float, Float, Float) {
        // (h_m(x), h_{m-1}(x), sum_{k<m} h_k(x)^2)
        let mut prev = Float::new(prec);
        let mut cur = h0.clone();
        let mut sumsq = Float::with_val(prec, &cur * &cur);
        for k in 0..m {
            let kf = k as u32;
            let c1 = Float::with_val(prec, 2u32).sqrt() / Float::with_val(prec, kf + 1).sqrt();
            let c2 = Float::with_val(prec, kf) / Float::with_val(prec, kf + 1);
            let c2 = c2.sqrt();
            let next = Float::with_val(prec, x * &cur) * c1 - c2 * &prev;
            prev = cur;
            cur = next;
            if k + 1 < m {
                sumsq += Float::with_val(prec, &cur * &cur);
            }
        }
        (cur, prev, sumsq)
    };
    let sqrt2m = Float::with_val(prec, 2 * m as u32).sqrt();
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    let iters = 3 + (prec as f64 / 53.0).log2().ceil() as usize;
    for g in guesses {
        let mut x = Float::with_val(prec, g);
        for _ in 0..iters {
            let (hm, hm1, _) = eval(&x);
            let d = Float::with_val(prec, &sqrt2m * &hm1);
            x -= hm / d;
        }
        let (_, _, sumsq) = eval(&x);
        weights.push(Float::with_val(prec, 1) / sumsq);
        nodes.push(x);
    }
    (nodes, weights)
}

//! Small dense linear-algebra and scalar kernels shared by the policies:
//! regularized Gram matrices, rank-1 updates, SPD solves, softmax, sigmoid.
//!
//! Everything here is a pure function of its inputs; all arithmetic is f64.

use crate::{Error, Result};

/// Symmetric d x d matrix stored row-major. Constructed as I + sum of outer
/// products it stays symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        GramMatrix { dim, data }
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::identity(dim);
        for i in 0..dim {
            m.data[i * dim + i] = scale;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// In-place A <- A + x x^T.
    pub fn add_outer(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "rank-1 update: matrix dim {} vs vector dim {}",
                self.dim,
                x.len()
            )));
        }
        let d = self.dim;
        for i in 0..d {
            let xi = x[i];
            let row = &mut self.data[i * d..(i + 1) * d];
            for (j, &xj) in x.iter().enumerate() {
                row[j] += xi * xj;
            }
        }
        Ok(())
    }

    /// x^T A x.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "quadratic form: matrix dim {} vs vector dim {}",
                self.dim,
                x.len()
            )));
        }
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            let mut s = 0.0;
            for (j, &xj) in x.iter().enumerate() {
                s += row[j] * xj;
            }
            acc += x[i] * s;
        }
        Ok(acc)
    }

    /// A x.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Dimension("matrix-vector dim mismatch".into()));
        }
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        Ok(out)
    }

    /// Cholesky factorization A = L L^T. Fails if A is not positive definite
    /// to working precision or contains non-finite entries.
    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        let d = self.dim;
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite matrix entry".into()));
        }
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.data[i * d + j];
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Numerical(
                            "matrix not positive definite to working precision".into(),
                        ));
                    }
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        Ok(CholeskyFactor { dim: d, l })
    }

    /// Sherman-Morrison downdate of an inverse: given M = A^-1, returns
    /// (A + x x^T)^-1 in place. Used as the fast path for per-decision
    /// quadratic forms; validated against `cholesky` in tests.
    pub fn sherman_morrison_update(&mut self, x: &[f64]) -> Result<()> {
        let d = self.dim;
        if x.len() != d {
            return Err(Error::Dimension("sherman-morrison dim mismatch".into()));
        }
        let mx = self.mul_vec(x)?;
        let denom = 1.0 + x.iter().zip(&mx).map(|(a, b)| a * b).sum::<f64>();
        if denom <= 0.0 || !denom.is_finite() {
            return Err(Error::Numerical("sherman-morrison denominator".into()));
        }
        for i in 0..d {
            let mi = mx[i];
            let row = &mut self.data[i * d..(i + 1) * d];
            for (j, &mj) in mx.iter().enumerate() {
                row[j] -= mi * mj / denom;
            }
        }
        Ok(())
    }
}

/// Lower-triangular Cholesky factor of an SPD matrix.
pub struct CholeskyFactor {
    dim: usize,
    l: Vec<f64>,
}

impl CholeskyFactor {
    /// Solve A y = b given A = L L^T.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim;
        if b.len() != d {
            return Err(Error::Dimension("solve dim mismatch".into()));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite rhs entry".into()));
        }
        // forward: L z = b
        let mut z = vec![0.0; d];
        for i in 0..d {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * d + k] * z[k];
            }
            z[i] = s / self.l[i * d + i];
        }
        // backward: L^T y = z
        let mut y = vec![0.0; d];
        for i in (0..d).rev() {
            let mut s = z[i];
            for k in i + 1..d {
                s -= self.l[k * d + i] * y[k];
            }
            y[i] = s / self.l[i * d + i];
        }
        Ok(y)
    }

    /// Solve L^T y = z (used to sample N(0, A^-1) as L^-T xi).
    pub fn solve_transposed(&self, z: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim;
        if z.len() != d {
            return Err(Error::Dimension("solve dim mismatch".into()));
        }
        let mut y = vec![0.0; d];
        for i in (0..d).rev() {
            let mut s = z[i];
            for k in i + 1..d {
                s -= self.l[k * d + i] * y[k];
            }
            y[i] = s / self.l[i * d + i];
        }
        Ok(y)
    }
}

/// theta = A^-1 b via factorization.
pub fn solve(a: &GramMatrix, b: &[f64]) -> Result<Vec<f64>> {
    a.cholesky()?.solve(b)
}

/// Returns A + x x^T without mutating the input.
pub fn rank_one_update(a: &GramMatrix, x: &[f64]) -> Result<GramMatrix> {
    let mut out = a.clone();
    out.add_outer(x)?;
    Ok(out)
}

/// Max-subtracted softmax; entries positive and summing to 1.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::Dimension("softmax of empty vector".into()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite logit".into()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Argmax with ties broken toward the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

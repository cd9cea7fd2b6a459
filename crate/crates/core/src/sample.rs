//! Row-major sample matrices and per-point estimator Jacobians.

use nalgebra::DMatrix;

/// `n` observations in `R^d`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Sample {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * d, "sample buffer has wrong length");
        Self { n, d, data }
    }

    pub fn from_scalars(xs: Vec<f64>) -> Self {
        Self { n: xs.len(), d: 1, data: xs }
    }

    pub fn from_points(points: &[[f64; 2]]) -> Self {
        Self {
            n: points.len(),
            d: 2,
            data: points.iter().flat_map(|p| p.iter().copied()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d.max(1))
    }

    /// Points of a planar sample.
    pub fn points2(&self) -> Vec<[f64; 2]> {
        assert_eq!(self.d, 2, "not a planar sample");
        self.data.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
    }
}

/// `∂T_l/∂x_{i,a}` for every sample point `i`, coordinate `a` and output `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobians {
    n: usize,
    d: usize,
    k: usize,
    data: Vec<f64>,
}

impl Jacobians {
    pub fn zeros(n: usize, d: usize, k: usize) -> Self {
        Self { n, d, k, data: vec![0.0; n * d * k] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn outputs(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, a: usize, l: usize) -> f64 {
        self.data[(i * self.d + a) * self.k + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, a: usize, l: usize, v: f64) {
        self.data[(i * self.d + a) * self.k + l] = v;
    }

    /// The `d x k` block of point `i`.
    pub fn block(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.k, |a, l| self.get(i, a, l))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `Σ_i D_iᵀ D_i`, a `k x k` matrix.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.k, self.k);
        for i in 0..self.n {
            for a in 0..self.d {
                let row = &self.data[(i * self.d + a) * self.k..(i * self.d + a + 1) * self.k];
                for l in 0..self.k {
                    for m in l..self.k {
                        g[(l, m)] += row[l] * row[m];
                    }
                }
            }
        }
        for l in 0..self.k {
            for m in 0..l {
                g[(l, m)] = g[(m, l)];
            }
        }
        g
    }

    /// `Σ_i ‖∇_{x_i} T‖²` for scalar estimators, the trace of [`gram`](Self::gram) in general.
    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

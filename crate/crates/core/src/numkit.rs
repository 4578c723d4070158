//! Minimal complex numeric kernel: DFT/IDFT, the cyclic shift-matrix
//! operator, small Hermitian linear algebra, and linear convolution.
//!
//! Everything here is double precision. The DFT uses an iterative radix-2
//! transform when the size is a power of two and the direct summation
//! otherwise; correctness is defined by the direct sum
//! `X[s] = sum_k x[k] exp(-2j pi k s / K)`.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Relative diagonal loading applied by [`hermitian_solve`] before
/// factorization. Short training windows make several of the receiver's
/// Gram matrices nearly rank deficient.
const SOLVE_LOADING: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn dft_kernel(x: &[Complex64], k: usize, sign: f64) -> Vec<Complex64> {
    if k.is_power_of_two() && k >= 2 {
        let mut buf = vec![Complex64::default(); k];
        buf[..x.len()].copy_from_slice(x);
        fft_radix2(&mut buf, sign);
        buf
    } else {
        let mut out = vec![Complex64::default(); k];
        let step = sign * 2.0 * std::f64::consts::PI / k as f64;
        for (s, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for (n, &v) in x.iter().enumerate() {
                let ang = step * ((s * n) % k) as f64;
                acc += v * c(ang.cos(), ang.sin());
            }
            *o = acc;
        }
        out
    }
}

fn fft_radix2(buf: &mut [Complex64], sign: f64) {
    let k = buf.len();
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 0..k {
        if i < j {
            buf.swap(i, j);
        }
        let mut m = k >> 1;
        while m >= 1 && j & m != 0 {
            j ^= m;
            m >>= 1;
        }
        j |= m;
    }
    let mut len = 2;
    while len <= k {
        let ang = sign * 2.0 * std::f64::consts::PI / len as f64;
        let wlen = c(ang.cos(), ang.sin());
        let mut start = 0;
        while start < k {
            let mut w = c(1.0, 0.0);
            for off in 0..len / 2 {
                let a = buf[start + off];
                let b = buf[start + off + len / 2] * w;
                buf[start + off] = a + b;
                buf[start + off + len / 2] = a - b;
                w *= wlen;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// Forward DFT of `x` zero-padded to `k` bins:
/// `X[s] = sum_k x[k] exp(-2j pi k s / K)`.
pub fn dft(x: &[Complex64], k: usize) -> Result<Vec<Complex64>> {
    if k == 0 {
        return Err(Error::InvalidDimension("dft: K must be positive".into()));
    }
    if x.len() > k {
        return Err(Error::InvalidDimension(format!(
            "dft: input length {} exceeds K = {}",
            x.len(),
            k
        )));
    }
    Ok(dft_kernel(x, k, -1.0))
}

/// Inverse DFT: `x[n] = (1/K) sum_s X[s] exp(+2j pi s n / K)`.
pub fn idft(x: &[Complex64], k: usize) -> Result<Vec<Complex64>> {
    if k == 0 || x.is_empty() {
        return Err(Error::InvalidDimension("idft: empty input".into()));
    }
    if x.len() != k {
        return Err(Error::InvalidDimension(format!(
            "idft: input length {} does not match K = {}",
            x.len(),
            k
        )));
    }
    let mut out = dft_kernel(x, k, 1.0);
    let scale = 1.0 / k as f64;
    for v in &mut out {
        *v *= scale;
    }
    Ok(out)
}

/// Shift-matrix operator: builds the `(K-L+1) x L` matrix whose row `r` is
/// `[a[L-1+r], a[L-2+r], ..., a[r]]`. Row `r` dotted with a channel
/// `[h0..h_{L-1}]` is the convolution `(h * a)` sample at index `L-1+r`.
pub fn toeplitz_shift(a: &[Complex64], l: usize) -> Result<Vec<Vec<Complex64>>> {
    let k = a.len();
    if l == 0 {
        return Err(Error::InvalidDimension(
            "toeplitz_shift: L must be positive".into(),
        ));
    }
    if l > k {
        return Err(Error::InvalidDimension(format!(
            "toeplitz_shift: L = {} exceeds vector length {}",
            l, k
        )));
    }
    let rows = k - l + 1;
    let mut out = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut row = Vec::with_capacity(l);
        for j in 0..l {
            row.push(a[l - 1 + r - j]);
        }
        out.push(row);
    }
    Ok(out)
}

/// Full linear convolution, output length `len(a) + len(b) - 1`.
pub fn convolve(a: &[Complex64], b: &[Complex64]) -> Result<Vec<Complex64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidDimension("convolve: empty input".into()));
    }
    let mut out = vec![Complex64::default(); a.len() + b.len() - 1];
    for (i, &av) in a.iter().enumerate() {
        for (j, &bv) in b.iter().enumerate() {
            out[i + j] += av * bv;
        }
    }
    Ok(out)
}

/// Dense Hermitian matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix {
            dim,
            data: vec![Complex64::default(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = c(scale, 0.0);
        }
        m
    }

    /// Builds from dense rows; fails if the rows are not square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidDimension(
                "HermitianMatrix::from_rows: rows are not square".into(),
            ));
        }
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            m.data[i * dim..(i + 1) * dim].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set_entry(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    /// Real part of the trace.
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i).re).sum()
    }

    /// Replaces the matrix with `(A + A^H) / 2`.
    pub fn hermitize(&mut self) {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let m = (self.entry(i, j) + self.entry(j, i).conj()) * 0.5;
                self.set_entry(i, j, m);
                self.set_entry(j, i, m.conj());
            }
            let d = self.entry(i, i).re;
            self.set_entry(i, i, c(d, 0.0));
        }
    }

    /// Adds `eps` to every diagonal entry.
    pub fn load_diagonal(&mut self, eps: f64) {
        for i in 0..self.dim {
            let d = self.entry(i, i);
            self.set_entry(i, i, d + c(eps, 0.0));
        }
    }

    /// Lower-triangular Cholesky factorization; fails on non-positive pivots.
    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        let n = self.dim;
        let mut l = vec![Complex64::default(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.entry(i, j);
                for p in 0..j {
                    sum -= l[i * n + p] * l[j * n + p].conj();
                }
                if i == j {
                    let d = sum.re;
                    if !(d > 0.0) || !d.is_finite() {
                        return Err(Error::SingularMatrix("cholesky"));
                    }
                    l[i * n + j] = c(d.sqrt(), 0.0);
                } else {
                    l[i * n + j] = sum / l[j * n + j].re;
                }
            }
        }
        Ok(CholeskyFactor { dim: n, l })
    }

    /// Ratio of the largest to smallest squared Cholesky pivot; a cheap
    /// condition estimate for diagnostics.
    pub fn condition_estimate(&self) -> Option<f64> {
        let f = self.cholesky().ok()?;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..f.dim {
            let d = f.l[i * f.dim + i].re;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        Some((hi / lo).powi(2))
    }
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    dim: usize,
    l: Vec<Complex64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `A x = b` given `A = L L^H`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.forward(b);
        let n = self.dim;
        // Back substitution with L^H.
        for i in (0..n).rev() {
            let mut sum = y[i];
            for p in (i + 1)..n {
                sum -= self.l[p * n + i].conj() * y[p];
            }
            y[i] = sum / self.l[i * n + i].re;
        }
        y
    }

    /// Forward substitution `L w = b`; the `w = L^{-1} b` map is also the
    /// whitening transform for covariance `A = L L^H`.
    pub fn forward(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut sum = y[i];
            for p in 0..i {
                sum -= self.l[i * n + p] * y[p];
            }
            y[i] = sum / self.l[i * n + i].re;
        }
        y
    }

    /// `log det A = 2 sum_i log L_ii`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.l[i * self.dim + i].re.ln())
            .sum::<f64>()
            * 2.0
    }
}

/// Solves the Hermitian positive-definite system `A x = b` after applying
/// relative diagonal loading `1e-12 * trace(A) / dim`.
pub fn hermitian_solve(a: &HermitianMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(hermitian_factor(a)?.solve(b))
}

/// Loading + Cholesky, reusable across multiple right-hand sides.
pub fn hermitian_factor(a: &HermitianMatrix) -> Result<CholeskyFactor> {
    if a.dim == 0 {
        return Err(Error::InvalidDimension(
            "hermitian_solve: empty matrix".into(),
        ));
    }
    let mut loaded = a.clone();
    let tr = a.trace();
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::SingularMatrix("hermitian_solve"));
    }
    loaded.load_diagonal(SOLVE_LOADING * tr / a.dim as f64);
    loaded
        .cholesky()
        .map_err(|_| Error::SingularMatrix("hermitian_solve"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn randc(rng: &mut ChaCha8Rng) -> Complex64 {
        c(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
    }

    fn dft_direct(x: &[Complex64], k: usize) -> Vec<Complex64> {
        (0..k)
            .map(|s| {
                let mut acc = Complex64::default();
                for (n, &v) in x.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * (n * s) as f64 / k as f64;
                    acc += v * c(ang.cos(), ang.sin());
                }
                acc
            })
            .collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn dft_impulse_is_flat() {
        let x = [c(1.0, 0.0)];
        let out = dft(&x, 4).unwrap();
        for v in out {
            assert!((v - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn dft_constant_maps_to_dc() {
        let x = vec![c(1.0, 0.0); 4];
        let out = dft(&x, 4).unwrap();
        assert!((out[0] - c(4.0, 0.0)).norm() < 1e-12);
        for v in &out[1..] {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn idft_inverts_trivial_spectra() {
        let x = idft(&[c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 4).unwrap();
        for v in x {
            assert!((v - c(1.0, 0.0)).norm() < 1e-12);
        }
        let x = idft(&[c(1.0, 0.0); 4], 4).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-12);
        for v in &x[1..] {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn dft_matches_direct_sum_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &k in &[16usize, 12, 31, 64] {
            let x: Vec<Complex64> = (0..k).map(|_| randc(&mut rng)).collect();
            let fast = dft(&x, k).unwrap();
            let slow = dft_direct(&x, k);
            assert!(max_err(&fast, &slow) < 1e-10, "K={}", k);

            let back = idft(&fast, k).unwrap();
            assert!(max_err(&back, &x) < 1e-10, "roundtrip K={}", k);
        }
    }

    #[test]
    fn dft_roundtrip_and_parseval_across_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &k in &[
            1usize, 2, 3, 4, 5, 8, 12, 16, 31, 64, 100, 256, 257, 1024, 4096,
        ] {
            let n = 1 + rng.gen_range(0..k);
            let x: Vec<Complex64> = (0..n).map(|_| randc(&mut rng)).collect();
            let spec = dft(&x, k).unwrap();
            let back = idft(&spec, k).unwrap();
            assert!(max_err(&back[..n], &x) < 1e-12 * (k as f64), "K={}", k);
            for v in &back[n..] {
                assert!(v.norm() < 1e-9, "padding not preserved at K={}", k);
            }
            let e_time: f64 = x.iter().map(|v| v.norm_sqr()).sum();
            let e_freq: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
            assert!(
                (e_freq - k as f64 * e_time).abs() <= 1e-10 * (1.0 + k as f64 * e_time),
                "Parseval failed at K={}",
                k
            );
        }
    }

    #[test]
    fn dft_rejects_bad_dims() {
        assert!(dft(&[c(1.0, 0.0)], 0).is_err());
        assert!(dft(&[c(1.0, 0.0); 5], 4).is_err());
        assert!(idft(&[], 0).is_err());
        assert!(idft(&[c(1.0, 0.0); 3], 4).is_err());
    }

    #[test]
    fn toeplitz_shift_hand_cases() {
        let a: Vec<Complex64> = (0..5).map(|i| c(i as f64, 0.0)).collect();
        let m = toeplitz_shift(&a, 2).unwrap();
        assert_eq!(m.len(), 4);
        for (r, row) in m.iter().enumerate() {
            assert_eq!(row[0], c((r + 1) as f64, 0.0));
            assert_eq!(row[1], c(r as f64, 0.0));
        }

        let m1 = toeplitz_shift(&a, 1).unwrap();
        assert_eq!(m1.len(), 5);
        for (r, row) in m1.iter().enumerate() {
            assert_eq!(row, &vec![c(r as f64, 0.0)]);
        }

        let a4: Vec<Complex64> = (0..4).map(|i| c(i as f64, 0.0)).collect();
        let m3 = toeplitz_shift(&a4, 3).unwrap();
        assert_eq!(m3[0], vec![c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(m3[1], vec![c(3.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);

        assert!(toeplitz_shift(&a4, 5).is_err());
        assert!(toeplitz_shift(&a4, 0).is_err());
    }

    #[test]
    fn toeplitz_rows_agree_with_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<Complex64> = (0..12).map(|_| randc(&mut rng)).collect();
        let h: Vec<Complex64> = (0..4).map(|_| randc(&mut rng)).collect();
        let m = toeplitz_shift(&a, h.len()).unwrap();
        let full = convolve(&h, &a).unwrap();
        for (r, row) in m.iter().enumerate() {
            let dot: Complex64 = row.iter().zip(h.iter()).map(|(x, y)| x * y).sum();
            assert!((dot - full[h.len() - 1 + r]).norm() < 1e-12);
        }
    }

    #[test]
    fn convolve_hand_cases() {
        let id = [c(1.0, 0.0), c(0.0, 0.0)];
        let x = [c(2.0, 1.0), c(-1.0, 3.0)];
        let out = convolve(&id, &x).unwrap();
        assert_eq!(out.len(), 3);
        assert!((out[0] - x[0]).norm() < 1e-15);
        assert!((out[1] - x[1]).norm() < 1e-15);
        assert!(out[2].norm() < 1e-15);

        let ones = [c(1.0, 0.0), c(1.0, 0.0)];
        let tri = convolve(&ones, &ones).unwrap();
        assert_eq!(tri, vec![c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);

        assert!(convolve(&[], &ones).is_err());
    }

    #[test]
    fn convolve_matches_nested_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a: Vec<Complex64> = (0..9).map(|_| randc(&mut rng)).collect();
        let b: Vec<Complex64> = (0..5).map(|_| randc(&mut rng)).collect();
        let got = convolve(&a, &b).unwrap();
        let mut want = vec![Complex64::default(); a.len() + b.len() - 1];
        for t in 0..want.len() {
            for (i, &av) in a.iter().enumerate() {
                if t >= i && t - i < b.len() {
                    want[t] += av * b[t - i];
                }
            }
        }
        assert!(max_err(&got, &want) < 1e-12);
    }

    #[test]
    fn hermitian_solve_identity_and_diagonal() {
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, -1.0)];
        let x = hermitian_solve(&HermitianMatrix::identity(3), &b).unwrap();
        assert!(max_err(&x, &b) < 1e-9);

        let mut d = HermitianMatrix::zeros(2);
        d.set_entry(0, 0, c(2.0, 0.0));
        d.set_entry(1, 1, c(4.0, 0.0));
        let x = hermitian_solve(&d, &[c(2.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert!(max_err(&x, &[c(1.0, 0.0), c(1.0, 0.0)]) < 1e-9);
    }

    /// Gauss-elimination oracle used to cross-check the Cholesky path.
    fn gauss_solve(a: &HermitianMatrix, b: &[Complex64]) -> Vec<Complex64> {
        let n = a.dim();
        let mut m: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                let mut row: Vec<Complex64> = (0..n).map(|j| a.entry(i, j)).collect();
                row.push(b[i]);
                row
            })
            .collect();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| {
                    m[x][col]
                        .norm()
                        .partial_cmp(&m[y][col].norm())
                        .unwrap()
                })
                .unwrap();
            m.swap(col, piv);
            let d = m[col][col];
            for j in col..=n {
                m[col][j] /= d;
            }
            for i in 0..n {
                if i != col {
                    let f = m[i][col];
                    for j in col..=n {
                        let v = m[col][j];
                        m[i][j] -= f * v;
                    }
                }
            }
        }
        (0..n).map(|i| m[i][n]).collect()
    }

    fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
        // A = G G^H + I is Hermitian positive definite.
        let g: Vec<Vec<Complex64>> = (0..n)
            .map(|_| (0..n).map(|_| randc(rng)).collect())
            .collect();
        HermitianMatrix::from_fn(n, |i, j| {
            let mut acc = if i == j {
                c(1.0, 0.0)
            } else {
                Complex64::default()
            };
            for p in 0..n {
                acc += g[i][p] * g[j][p].conj();
            }
            acc
        })
    }

    #[test]
    fn hermitian_solve_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = random_pd(&mut rng, 6);
        let b: Vec<Complex64> = (0..6).map(|_| randc(&mut rng)).collect();
        let x = hermitian_solve(&a, &b).unwrap();
        let y = gauss_solve(&a, &b);
        assert!(max_err(&x, &y) < 1e-9);
    }

    #[test]
    fn hermitian_solve_residuals_over_random_pd_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for trial in 0..1000 {
            let n = 1 + (trial % 16);
            let a = random_pd(&mut rng, n);
            let b: Vec<Complex64> = (0..n).map(|_| randc(&mut rng)).collect();
            let x = hermitian_solve(&a, &b).unwrap();
            let mut res = 0.0f64;
            let mut bnorm = 0.0f64;
            for i in 0..n {
                let mut ax = Complex64::default();
                for j in 0..n {
                    ax += a.entry(i, j) * x[j];
                }
                res += (ax - b[i]).norm_sqr();
                bnorm += b[i].norm_sqr();
            }
            assert!(
                res.sqrt() <= 1e-9 * bnorm.sqrt().max(1e-300),
                "residual too large at trial {} (n={})",
                trial,
                n
            );
        }
    }

    #[test]
    fn hermitian_solve_rejects_zero_matrix() {
        let a = HermitianMatrix::zeros(3);
        let b = vec![c(1.0, 0.0); 3];
        assert!(matches!(
            hermitian_solve(&a, &b),
            Err(Error::SingularMatrix(_))
        ));
    }

    #[test]
    fn whitening_via_cholesky_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_pd(&mut rng, 4);
        let f = a.cholesky().unwrap();
        // L^{-1} A L^{-H} = I: check column by column.
        for j in 0..4 {
            let col: Vec<Complex64> = (0..4).map(|i| a.entry(i, j)).collect();
            let w = f.forward(&col);
            // w should equal the j-th column of L^H.
            for (i, &wi) in w.iter().enumerate() {
                let lhj = f.l[j * 4 + i].conj();
                assert!((wi - lhj).norm() < 1e-10);
            }
        }
    }
}

//! Small dense numerics shared by the estimators: least squares with
//! standard errors, compensated summation, log-scaled matrix powers and
//! bracketed root finding.

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `log Σ exp(x_i)`, `-inf` for an empty input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: CompensatedSum = xs.iter().map(|x| (x - m).exp()).collect();
    m + s.value().ln()
}

/// Ordinary least squares fit with coefficient standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub coef: Vec<f64>,
    /// Standard errors from the residual variance; zero when the fit is exact
    /// or there are no spare degrees of freedom.
    pub stderr: Vec<f64>,
    pub rss: f64,
    pub dof: usize,
}

/// Solves `min ||X b − y||` by Householder QR.
///
/// `rows[i]` is the i-th design row; all rows share one length.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    let m = rows.len();
    let p = rows.first().map_or(0, |r| r.len());
    if m < p || p == 0 || y.len() != m {
        return Err(Error::InsufficientData(format!(
            "least squares needs at least {p} points, got {m}"
        )));
    }
    // column-major copy
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut b = y.to_vec();
    for k in 0..p {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InsufficientData("rank-deficient design".into()));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(x, y)| x * y).sum();
                let f = 2.0 * dot / vnorm2;
                for (c, vi) in col[k..].iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&b[k..]).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in b[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
    }
    // R is upper-triangular in a[j][i] for i ≤ j
    let r = |i: usize, j: usize| a[j][i];
    for i in 0..p {
        if r(i, i).abs() < 1e-300 {
            return Err(Error::InsufficientData("rank-deficient design".into()));
        }
    }
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r(i, j) * coef[j]).sum();
        coef[i] = (b[i] - s) / r(i, i);
    }
    let rss: f64 = rows
        .iter()
        .zip(y)
        .map(|(row, yi)| {
            let pred: f64 = row.iter().zip(&coef).map(|(x, c)| x * c).sum();
            (yi - pred).powi(2)
        })
        .sum();
    let dof = m - p;
    // (X^T X)^{-1} = R^{-1} R^{-T}
    let mut rinv = vec![vec![0.0; p]; p];
    for j in 0..p {
        rinv[j][j] = 1.0 / r(j, j);
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|k| r(i, k) * rinv[k][j]).sum();
            rinv[i][j] = -s / r(i, i);
        }
    }
    let sigma2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    let stderr = (0..p)
        .map(|i| {
            let diag: f64 = (0..p).map(|k| rinv[i][k] * rinv[i][k]).sum();
            (sigma2 * diag).sqrt()
        })
        .collect();
    Ok(LinearFit {
        coef,
        stderr,
        rss,
        dof,
    })
}

/// Bisection on a sign change. `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let fa0 = f(a)?;
    let fb0 = f(b)?;
    if fa0 == 0.0 {
        return Ok(a);
    }
    if fb0 == 0.0 {
        return Ok(b);
    }
    if fa0.signum() == fb0.signum() {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo: fa0,
            f_hi: fb0,
        });
    }
    let mut fa = fa0;
    for _ in 0..max_iter {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= tol || mid == a || mid == b {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bracketed false position (Illinois variant): bisection's guarantees with
/// one-step convergence on linear functions. Used where each evaluation is an
/// expensive dynamic program.
pub fn illinois<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !c.is_finite() || c <= a.min(b) || c >= a.max(b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 || (b - a).abs() <= tol {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if fc.abs() <= f64::EPSILON * 4.0 || (b - a).abs() <= tol {
            return Ok(c);
        }
    }
    Ok((a * fb - b * fa) / (fb - fa))
}

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `log trace(self^power)` for a nonnegative matrix, rescaling after every
    /// product so entries never overflow.
    pub fn log_trace_power(&self, power: usize) -> f64 {
        let mut result = Matrix::identity(self.n);
        let mut result_log = 0.0;
        let mut base = self.clone();
        let mut base_log = 0.0;
        let mut e = power;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
                result_log += base_log;
                let s = result.max_abs();
                if s == 0.0 {
                    return f64::NEG_INFINITY;
                }
                result.data.iter_mut().for_each(|x| *x /= s);
                result_log += s.ln();
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
                base_log *= 2.0;
                let s = base.max_abs();
                if s == 0.0 {
                    return f64::NEG_INFINITY;
                }
                base.data.iter_mut().for_each(|x| *x /= s);
                base_log += s.ln();
            }
        }
        let t = result.trace();
        if t <= 0.0 {
            f64::NEG_INFINITY
        } else {
            t.ln() + result_log
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic_fit() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x, x * x]).collect();
        let y: Vec<f64> = xs.iter().map(|&x| 2.0 - 3.0 * x + 0.5 * x * x).collect();
        let fit = least_squares(&rows, &y).unwrap();
        for (c, e) in fit.coef.iter().zip([2.0, -3.0, 0.5]) {
            assert!((c - e).abs() < 1e-10);
        }
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn stderr_of_mean() {
        let rows = vec![vec![1.0]; 4];
        let y = [1.0, 2.0, 3.0, 4.0];
        let fit = least_squares(&rows, &y).unwrap();
        assert!((fit.coef[0] - 2.5).abs() < 1e-14);
        // sample sd / sqrt(n)
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((fit.stderr[0] - sd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn roots() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        let r = illinois(|x| Ok(x.exp() - 3.0), 0.0, 3.0, 1e-14, 200).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-12);
        assert!(bisect(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-9, 10).is_err());
    }

    #[test]
    fn log_trace_matches_direct() {
        let m = Matrix {
            n: 2,
            data: vec![1.0, 2.0, 3.0, 4.0],
        };
        let direct = m.mul(&m).mul(&m).trace().ln();
        assert!((m.log_trace_power(3) - direct).abs() < 1e-12);
        assert!(m.log_trace_power(2000).is_finite());
    }

    #[test]
    fn compensated() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}

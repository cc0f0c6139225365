//! Weighted least squares via the normal equations.
//!
//! Designs here are tiny (a handful of regressors), so Gaussian elimination
//! with partial pivoting on `X'WX` is adequate.

use crate::scalar::{CompensatedSum, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit<S> {
    pub coefficients: Vec<S>,
    /// Homoscedastic standard errors, `sqrt(diag(sigma^2 (X'WX)^-1))`.
    pub standard_errors: Vec<S>,
    pub residual_variance: S,
    /// Total weight (number of observations for count weights).
    pub n: S,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Singular(pub String);

/// Inverts a symmetric positive-definite-ish matrix by Gauss-Jordan
/// elimination with partial pivoting.
pub fn invert<S: Scalar>(matrix: &[Vec<S>]) -> Result<Vec<Vec<S>>, Singular> {
    let p = matrix.len();
    let scale = (0..p).map(|i| matrix[i][i].abs()).fold(S::zero(), S::max);
    if scale <= S::zero() {
        return Err(Singular("zero matrix".into()));
    }
    let tol = scale * S::epsilon().sqrt();
    let mut a: Vec<Vec<S>> = matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..p).map(|j| if i == j { S::one() } else { S::zero() }));
            r
        })
        .collect();
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).expect("finite"))
            .expect("non-empty");
        if a[pivot][col].abs() <= tol {
            return Err(Singular(format!("column {col} is collinear with earlier columns")));
        }
        a.swap(col, pivot);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v = *v / d;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            let f = row[col];
            if r != col && f != S::zero() {
                for (v, &x) in row.iter_mut().zip(&pivot_row) {
                    *v = *v - f * x;
                }
            }
        }
    }
    Ok(a.into_iter().map(|r| r[p..].to_vec()).collect())
}

/// Fits `y ~ X` with observation weights `w` (frequency weights).
pub fn weighted_ols<S: Scalar>(x: &[Vec<S>], y: &[S], w: &[S]) -> Result<OlsFit<S>, Singular> {
    let p = x.first().map_or(0, Vec::len);
    if p == 0 {
        return Err(Singular("no regressors".into()));
    }
    let mut xtx = vec![vec![CompensatedSum::new(); p]; p];
    let mut xty = vec![CompensatedSum::new(); p];
    let mut n = CompensatedSum::new();
    for ((row, &yi), &wi) in x.iter().zip(y).zip(w) {
        n.add(wi);
        for i in 0..p {
            xty[i].add(wi * row[i] * yi);
            for j in i..p {
                xtx[i][j].add(wi * row[i] * row[j]);
            }
        }
    }
    let n = n.value();
    if n <= S::from_usize(p).expect("small") {
        return Err(Singular(format!("{n} observations for {p} regressors")));
    }
    let mut m = vec![vec![S::zero(); p]; p];
    for i in 0..p {
        for j in i..p {
            m[i][j] = xtx[i][j].value();
            m[j][i] = m[i][j];
        }
    }
    let inv = invert(&m)?;
    let rhs: Vec<S> = xty.iter().map(CompensatedSum::value).collect();
    let coefficients: Vec<S> = inv
        .iter()
        .map(|r| r.iter().zip(&rhs).map(|(a, b)| *a * *b).collect::<CompensatedSum<S>>().value())
        .collect();
    let rss: S = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((row, &yi), &wi)| {
            let fit = row.iter().zip(&coefficients).map(|(a, b)| *a * *b).fold(S::zero(), |s, v| s + v);
            wi * (yi - fit) * (yi - fit)
        })
        .collect::<CompensatedSum<S>>()
        .value();
    let residual_variance = rss / (n - S::from_usize(p).expect("small"));
    let standard_errors = (0..p).map(|i| (residual_variance * inv[i][i]).max(S::zero()).sqrt()).collect();
    Ok(OlsFit {
        coefficients,
        standard_errors,
        residual_variance,
        n,
    })
}

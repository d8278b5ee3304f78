//! Exact rational evaluation of the bases, used to generate and audit fixtures.
//!
//! Shares no code with the floating-point path.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest λ-basis degree the exact oracle accepts (the classical basis goes one higher).
pub const MAX_EXACT_DEGREE: usize = 64;

fn check_degree(n: usize, max: usize) -> Result<()> {
    if n > max {
        Err(Error::ExactDegreeLimit { n, max })
    } else {
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Converts a finite `f64` to the rational it represents exactly.
pub fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite float")
}

pub fn to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// `C(n,i) x^i (1-x)^{n-i}` by direct binomial expansion.
pub fn bernstein_basis(n: usize, x: &BigRational) -> Result<Vec<BigRational>> {
    check_degree(n, MAX_EXACT_DEGREE + 1)?;
    let one_minus = BigRational::one() - x;
    Ok((0..=n)
        .map(|i| {
            BigRational::from_integer(binomial(n, i))
                * num_traits::pow(x.clone(), i)
                * num_traits::pow(one_minus.clone(), n - i)
        })
        .collect())
}

/// λ-modified basis by literal evaluation of its defining three-case formula.
pub fn lambda_basis(n: usize, lambda: &BigRational, x: &BigRational) -> Result<Vec<BigRational>> {
    if n < 2 {
        return Err(Error::InvalidDegree { n, min: 2 });
    }
    check_degree(n, MAX_EXACT_DEGREE)?;
    let lower = bernstein_basis(n, x)?;
    let upper = bernstein_basis(n + 1, x)?;
    let ni = n as i64;
    let denom = ni * ni - 1;
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let v = if i == 0 {
            &lower[0] - lambda * ratio(1, ni + 1) * &upper[1]
        } else if i == n {
            &lower[n] - lambda * ratio(1, ni + 1) * &upper[n]
        } else {
            let ii = i as i64;
            &lower[i]
                + lambda
                    * (ratio(ni - 2 * ii + 1, denom) * &upper[i]
                        - ratio(ni - 2 * ii - 1, denom) * &upper[i + 1])
        };
        out.push(v);
    }
    Ok(out)
}

/// `Σ_i (i/n)^j · b̃_{n,i}(λ; x)` in exact arithmetic.
pub fn raw_moment(n: usize, lambda: &BigRational, j: usize, x: &BigRational) -> Result<BigRational> {
    let basis = lambda_basis(n, lambda, x)?;
    let mut acc = BigRational::zero();
    for (i, b) in basis.iter().enumerate() {
        acc += num_traits::pow(ratio(i as i64, n as i64), j) * b;
    }
    Ok(acc)
}

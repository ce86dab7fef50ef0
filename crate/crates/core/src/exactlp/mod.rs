//! Exact rational linear programming and polyhedral projection.

mod fm;
mod poly;
mod simplex;

pub use fm::{contains, fm_eliminate, project_onto, remove_redundant};
pub use poly::{HPolyhedron, Relation, Row};
pub use simplex::{
    feasible_point, solve_lp, solve_standard, LpResult, LpStatus, Sense, StandardOutcome,
};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Arbitrary-precision fraction, always kept in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// `num / den`; panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `2^e` for any integer exponent.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs() as usize;
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// Formats as `p` or `p/q`.
pub fn fmt_rat(r: &Rational) -> String {
    r.to_string()
}

pub fn parse_rat(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let r = match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.parse().ok()?;
            let q: BigInt = q.parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Rational::new(p, q)
        }
        None => Rational::from_integer(s.parse::<BigInt>().ok()?),
    };
    Some(r)
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Scales a coefficient vector and right-hand side to a primitive integer
/// vector (gcd 1). Returns the positive factor used.
pub(crate) fn primitive_scale(coeffs: &[Rational], rhs: &Rational) -> Rational {
    let mut lcm = BigInt::one();
    for c in coeffs.iter().chain(std::iter::once(rhs)) {
        if !c.is_zero() {
            lcm = lcm.lcm(c.denom());
        }
    }
    let mut g = BigInt::zero();
    for c in coeffs.iter().chain(std::iter::once(rhs)) {
        if !c.is_zero() {
            let v = (c * Rational::from_integer(lcm.clone())).to_integer();
            g = g.gcd(&v);
        }
    }
    if g.is_zero() {
        return Rational::one();
    }
    Rational::new(lcm, g.abs())
}

/// Exact Gaussian elimination: solves `m * x = rhs` for square `m`.
/// Returns `None` when `m` is singular.
pub(crate) fn solve_square(m: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for c in col..=n {
            let v = &a[col][c] * &inv;
            a[col][c] = v;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=n {
                    if !a[col][c].is_zero() {
                        let v = &a[col][c] * &f;
                        a[r][c] -= v;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rat("3/6"), Some(ratio(1, 2)));
        assert_eq!(parse_rat("-4"), Some(int(-4)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(parse_rat("x"), None);
        assert_eq!(fmt_rat(&ratio(-2, 4)), "-1/2");
        assert_eq!(fmt_rat(&int(7)), "7");
    }

    #[test]
    fn pow2_both_signs() {
        assert_eq!(pow2(3), int(8));
        assert_eq!(pow2(-2), ratio(1, 4));
        assert_eq!(pow2(0), int(1));
    }

    #[test]
    fn gaussian_solve() {
        let m = vec![vec![int(2), int(1)], vec![int(1), int(3)]];
        let x = solve_square(&m, &[int(3), int(4)]).unwrap();
        assert_eq!(x, vec![int(1), int(1)]);
        let singular = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert!(solve_square(&singular, &[int(1), int(2)]).is_none());
    }
}

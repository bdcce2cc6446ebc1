//! Exact rational helpers.
//!
//! All lengths, offsets and weights in this crate are `BigRational`s; nothing
//! is ever represented as a float.  JSON carries rationals as `"p/q"` strings
//! (or `"p"` for integers), which these helpers parse and print.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};
use num_integer::Integer;

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Parse `"p/q"` or `"p"` into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let make = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::IrrationalSupport(format!("cannot parse {s:?} as p/q")))
    };
    match s.split_once('/') {
        None => Ok(Rat::from_integer(make(s)?)),
        Some((p, q)) => {
            let q = make(q)?;
            if q.is_zero() {
                return Err(Error::IrrationalSupport(format!("zero denominator in {s:?}")));
            }
            Ok(Rat::new(make(p)?, q))
        }
    }
}

/// Render a rational as `"p/q"`, or `"p"` when the denominator is one.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_uint(n: u64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Least common multiple of the denominators of a family of rationals.
pub fn denominator_lcm<'a>(rs: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    let mut l = BigInt::one();
    for r in rs {
        l = l.lcm(r.denom());
    }
    l
}

/// True if the rational is a non-negative integer.
pub fn is_nonneg_integer(r: &Rat) -> bool {
    r.denom().is_one() && !r.numer().is_negative()
}

/// Exact determinant of a square rational matrix by Gaussian elimination.
pub fn det(m: &[Vec<Rat>]) -> Rat {
    let n = m.len();
    if n == 0 {
        return Rat::one();
    }
    assert!(m.iter().all(|row| row.len() == n), "matrix must be square");
    let mut a: Vec<Vec<Rat>> = m.to_vec();
    let mut d = Rat::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rat::zero();
        };
        if p != col {
            a.swap(p, col);
            d = -d;
        }
        let pivot = a[col][col].clone();
        d *= &pivot;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &pivot;
            for c in col..n {
                let sub = &factor * &a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    d
}

/// Solve `m x = rhs` exactly for a square system.  `None` when `m` is
/// singular (the caller decides whether that is an error).
pub fn solve(m: &[Vec<Rat>], rhs: &[Rat]) -> Option<Vec<Rat>> {
    let n = m.len();
    assert_eq!(rhs.len(), n);
    assert!(m.iter().all(|row| row.len() == n), "matrix must be square");
    let mut a: Vec<Vec<Rat>> = m.to_vec();
    let mut b: Vec<Rat> = rhs.to_vec();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(p, col);
        b.swap(p, col);
        let pivot = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &pivot;
            for c in col..n {
                let sub = &factor * &a[col][c];
                a[r][c] -= sub;
            }
            let sub = &factor * &b[col];
            b[r] -= sub;
        }
    }
    Some(
        (0..n)
            .map(|i| &b[i] / &a[i][i])
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints_round_trip() {
        for s in ["7/3", "-2/5", "4", "0", "22/7"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(fmt_rat(&r), s);
        }
    }

    #[test]
    fn parse_normalizes() {
        assert_eq!(fmt_rat(&parse_rat("6/4").unwrap()), "3/2");
        assert_eq!(fmt_rat(&parse_rat(" 10/2 ").unwrap()), "5");
        assert_eq!(fmt_rat(&parse_rat("3/-6").unwrap()), "-1/2");
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_rat("1.5").is_err());
        assert!(parse_rat("a/b").is_err());
        assert!(parse_rat("1/0").is_err());
    }

    #[test]
    fn det_and_solve_agree_on_small_systems() {
        let m = vec![
            vec![rat_int(2), rat_int(1)],
            vec![rat_int(1), rat_int(3)],
        ];
        assert_eq!(det(&m), rat_int(5));
        let x = solve(&m, &[rat_int(4), rat_int(7)]).unwrap();
        assert_eq!(x, vec![rat_int(1), rat_int(2)]);

        let singular = vec![
            vec![rat_int(1), rat_int(2)],
            vec![rat_int(2), rat_int(4)],
        ];
        assert!(det(&singular).is_zero());
        assert!(solve(&singular, &[rat_int(1), rat_int(1)]).is_none());
    }

    #[test]
    fn det_of_permutation_matrix_tracks_sign() {
        let m = vec![
            vec![rat_int(0), rat_int(1), rat_int(0)],
            vec![rat_int(1), rat_int(0), rat_int(0)],
            vec![rat_int(0), rat_int(0), rat_int(1)],
        ];
        assert_eq!(det(&m), rat_int(-1));
    }

    #[test]
    fn denominator_lcm_works() {
        let rs = vec![
            parse_rat("7/3").unwrap(),
            parse_rat("11/5").unwrap(),
            parse_rat("13/7").unwrap(),
        ];
        assert_eq!(denominator_lcm(rs.iter()), BigInt::from(105));
    }
}

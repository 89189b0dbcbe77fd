//! Text format for step-2 algebras:
//!
//! ```text
//! # H^1
//! v1 2
//! v2 1
//! b 1 1 2 1
//! ```
//!
//! `b k i j value` sets `b[k][i][j] = value` and `b[k][j][i] = -value` with
//! one-based indices. Omitted constants are zero; `#` starts a comment.

use std::fmt::Write as _;
use std::str::FromStr;

use super::CarnotStep2;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn parse_group<T: Scalar + FromStr>(text: &str) -> Result<CarnotStep2<T>> {
    let mut v1 = None;
    let mut v2 = None;
    let mut triples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let words: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        let bad = |msg: String| Error::Parse { line, msg };
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("expected an integer, got {s:?}")));
        match words.as_slice() {
            [] => {}
            ["v1", n] => v1 = Some(num(n)?),
            ["v2", n] => v2 = Some(num(n)?),
            ["b", k, i, j, val] => {
                let (k, i, j) = (num(k)?, num(i)?, num(j)?);
                if k == 0 || i == 0 || j == 0 {
                    return Err(bad("indices are one-based".into()));
                }
                let val = val.parse::<T>().map_err(|_| bad(format!("cannot parse {val:?} as a value")))?;
                triples.push((k - 1, i - 1, j - 1, val));
            }
            _ => return Err(bad(format!("unrecognized line {:?}", raw.trim()))),
        }
    }
    let missing = |what: &str| Error::Parse { line: text.lines().count().max(1), msg: format!("missing {what}") };
    let v1 = v1.ok_or_else(|| missing("v1"))?;
    let v2 = v2.ok_or_else(|| missing("v2"))?;
    CarnotStep2::from_triples(v1, v2, &triples)
}

pub fn write_group<T: Scalar>(g: &CarnotStep2<T>) -> String {
    let mut out = format!("v1 {}\nv2 {}\n", g.v1(), g.v2());
    for k in 0..g.v2() {
        for i in 0..g.v1() {
            for j in i + 1..g.v1() {
                let b = g.b(k, i, j);
                if !b.is_zero() {
                    writeln!(out, "b {} {} {} {b}", k + 1, i + 1, j + 1).unwrap();
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;

    #[test]
    fn heisenberg_round_trip() {
        let g = CarnotStep2::<f64>::heisenberg(2).unwrap();
        let text = write_group(&g);
        assert_eq!(text, "v1 4\nv2 1\nb 1 1 3 1\nb 1 2 4 1\n");
        assert_eq!(parse_group::<f64>(&text).unwrap(), g);
    }

    #[test]
    fn parses_rationals_and_reversed_pairs() {
        let g: CarnotStep2<BigRational> = parse_group("v1 2\nv2 1\nb 1 2 1 -1/2 # reversed\n").unwrap();
        assert_eq!(*g.b(0, 0, 1), crate::scalar::ratio(1, 2));
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(parse_group::<f64>("v1 2\nb 1 1 2 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_group::<f64>("v1 2\nv2 1\nb 0 1 2 1\n"), Err(Error::Parse { line: 3, .. })));
        assert!(parse_group::<f64>("v1 2\nv2 1\nb 1 1 2 1\nb 1 2 1 1\n").is_err());
    }
}

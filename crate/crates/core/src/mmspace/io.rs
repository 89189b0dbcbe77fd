//! Plain-text formats for finite spaces and fields.
//!
//! Space documents contain, in order: the point count `n`; the strictly lower
//! triangle of the distance matrix, row `i` (for `i = 1..n`) listing
//! `d(i,0) .. d(i,i-1)`; then the `n` masses. Tokens are separated by any
//! whitespace and `#` starts a comment running to the end of the line. The
//! writer puts each section (and each matrix row) on its own line.
//!
//! Field documents hold one value per line. Values use the scalar type's
//! `Display`/`FromStr` forms, so `f64` round-trips exactly and rationals are
//! written as `p/q`.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{FiniteMMSpace, ScalarField};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| {
                let content = line.split('#').next().unwrap_or("");
                content.split_whitespace().map(move |t| (i + 1, t))
            })
            .collect();
        Self { items, pos: 0 }
    }

    fn next<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let Some(&(line, tok)) = self.items.get(self.pos) else {
            let line = self.items.last().map_or(1, |t| t.0);
            return Err(Error::Parse { line, msg: format!("unexpected end of input, expected {what}") });
        };
        self.pos += 1;
        tok.parse()
            .map_err(|_| Error::Parse { line, msg: format!("cannot parse {tok:?} as {what}") })
    }

    fn finish(&self) -> Result<()> {
        match self.items.get(self.pos) {
            Some(&(line, tok)) => Err(Error::Parse { line, msg: format!("trailing token {tok:?}") }),
            None => Ok(()),
        }
    }
}

pub fn parse_space<T: Scalar + FromStr>(text: &str) -> Result<FiniteMMSpace<T>> {
    let mut tokens = Tokens::new(text);
    let n: usize = tokens.next("point count")?;
    let mut lower = Vec::with_capacity(n);
    for i in 0..n {
        let row = (0..i).map(|_| tokens.next::<T>("distance")).collect::<Result<Vec<_>>>()?;
        lower.push(row);
    }
    let mass = (0..n).map(|_| tokens.next::<T>("mass")).collect::<Result<Vec<_>>>()?;
    tokens.finish()?;
    FiniteMMSpace::from_lower_triangle(&lower, mass)
}

pub fn write_space<T: Scalar>(space: &FiniteMMSpace<T>) -> String {
    use super::MetricMeasure;
    let n = space.len();
    let mut out = String::new();
    writeln!(out, "{n}").unwrap();
    for i in 1..n {
        let row: Vec<String> = (0..i).map(|j| space.distance(i, j).to_string()).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    let masses: Vec<String> = space.masses().iter().map(ToString::to_string).collect();
    writeln!(out, "{}", masses.join(" ")).unwrap();
    out
}

pub fn parse_field<T: Scalar + FromStr>(text: &str) -> Result<ScalarField<T>> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let v = content
            .parse()
            .map_err(|_| Error::Parse { line: i + 1, msg: format!("cannot parse {content:?} as a value") })?;
        values.push(v);
    }
    ScalarField::new(values)
}

pub fn write_field<T: Scalar>(field: &[T]) -> String {
    field.iter().map(|v| format!("{v}\n")).collect()
}

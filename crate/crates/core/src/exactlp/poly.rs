use std::collections::HashSet;
use std::fmt;

use num_traits::{Signed, Zero};

use super::{fmt_rat, parse_rat, primitive_scale, Rational};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Le,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "==",
        }
    }
}

/// One constraint `coeffs · x (<= | ==) rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Row {
    pub coeffs: Vec<Rational>,
    pub rel: Relation,
    pub rhs: Rational,
}

impl Row {
    pub fn le(coeffs: Vec<Rational>, rhs: Rational) -> Self {
        Row {
            coeffs,
            rel: Relation::Le,
            rhs,
        }
    }

    pub fn eq(coeffs: Vec<Rational>, rhs: Rational) -> Self {
        Row {
            coeffs,
            rel: Relation::Eq,
            rhs,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// A row with all-zero coefficients that still holds (`0 <= b`, `b >= 0`).
    pub fn is_tautology(&self) -> bool {
        self.is_trivial()
            && match self.rel {
                Relation::Le => !self.rhs.is_negative(),
                Relation::Eq => self.rhs.is_zero(),
            }
    }

    pub fn is_satisfied_by(&self, point: &[Rational]) -> bool {
        let lhs = super::dot(&self.coeffs, point);
        match self.rel {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }

    /// Primitive integer form; equalities additionally get a positive leading
    /// coefficient. Two rows describe the same halfspace/hyperplane iff their
    /// normalized forms are equal.
    pub fn normalized(&self) -> Row {
        let mut s = primitive_scale(&self.coeffs, &self.rhs);
        if self.rel == Relation::Eq {
            if let Some(first) = self.coeffs.iter().find(|c| !c.is_zero()) {
                if first.is_negative() {
                    s = -s;
                }
            }
        }
        Row {
            coeffs: self.coeffs.iter().map(|c| c * &s).collect(),
            rel: self.rel,
            rhs: &self.rhs * &s,
        }
    }
}

/// Polyhedron in inequality form over named variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HPolyhedron {
    vars: Vec<String>,
    rows: Vec<Row>,
}

impl HPolyhedron {
    pub fn new<S: Into<String>>(vars: impl IntoIterator<Item = S>) -> Result<Self> {
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for v in &vars {
            if v.is_empty() || v.chars().any(char::is_whitespace) {
                return Err(Error::Input(format!("illegal variable name `{v}`")));
            }
            if !seen.insert(v.as_str()) {
                return Err(Error::Input(format!("duplicate variable `{v}`")));
            }
        }
        Ok(HPolyhedron {
            vars,
            rows: Vec::new(),
        })
    }

    pub fn with_rows<S: Into<String>>(
        vars: impl IntoIterator<Item = S>,
        rows: Vec<Row>,
    ) -> Result<Self> {
        let mut p = Self::new(vars)?;
        for r in rows {
            p.push(r)?;
        }
        Ok(p)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn push(&mut self, row: Row) -> Result<()> {
        if row.coeffs.len() != self.vars.len() {
            return Err(Error::Dimension(format!(
                "row has {} coefficients, polyhedron has {} variables",
                row.coeffs.len(),
                self.vars.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Adds `Σ coeff·var rel rhs` given by variable name.
    pub fn add(&mut self, terms: &[(&str, Rational)], rel: Relation, rhs: Rational) -> Result<()> {
        let mut coeffs = vec![Rational::zero(); self.vars.len()];
        for (name, c) in terms {
            let i = self.var_index(name)?;
            coeffs[i] += c;
        }
        self.push(Row { coeffs, rel, rhs })
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> Result<usize> {
        let name = name.into();
        if self.vars.contains(&name) {
            return Err(Error::Input(format!("duplicate variable `{name}`")));
        }
        self.vars.push(name);
        for r in &mut self.rows {
            r.coeffs.push(Rational::zero());
        }
        Ok(self.vars.len() - 1)
    }

    pub fn contains_point(&self, point: &[Rational]) -> bool {
        point.len() == self.vars.len() && self.rows.iter().all(|r| r.is_satisfied_by(point))
    }

    /// Reorders (and possibly subsets) columns to `order`. Every dropped
    /// variable must have zero coefficients in every row.
    pub fn reorder(&self, order: &[String]) -> Result<HPolyhedron> {
        let idx: Vec<usize> = order
            .iter()
            .map(|n| self.var_index(n))
            .collect::<Result<_>>()?;
        let kept: HashSet<usize> = idx.iter().copied().collect();
        for r in &self.rows {
            for (i, c) in r.coeffs.iter().enumerate() {
                if !kept.contains(&i) && !c.is_zero() {
                    return Err(Error::Input(format!(
                        "cannot drop variable `{}` with nonzero coefficients",
                        self.vars[i]
                    )));
                }
            }
        }
        let rows = self
            .rows
            .iter()
            .map(|r| Row {
                coeffs: idx.iter().map(|&i| r.coeffs[i].clone()).collect(),
                rel: r.rel,
                rhs: r.rhs.clone(),
            })
            .collect();
        HPolyhedron::with_rows(order.iter().cloned(), rows)
    }

    /// Fixes some variables to values and drops them.
    pub fn restrict(&self, fixed: &[(usize, Rational)]) -> HPolyhedron {
        let fixed_idx: HashSet<usize> = fixed.iter().map(|(i, _)| *i).collect();
        let keep: Vec<usize> = (0..self.vars.len())
            .filter(|i| !fixed_idx.contains(i))
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut rhs = r.rhs.clone();
                for (i, v) in fixed {
                    if !r.coeffs[*i].is_zero() {
                        rhs -= &r.coeffs[*i] * v;
                    }
                }
                Row {
                    coeffs: keep.iter().map(|&i| r.coeffs[i].clone()).collect(),
                    rel: r.rel,
                    rhs,
                }
            })
            .collect();
        HPolyhedron {
            vars: keep.iter().map(|&i| self.vars[i].clone()).collect(),
            rows,
        }
    }

    pub(crate) fn from_parts_unchecked(vars: Vec<String>, rows: Vec<Row>) -> Self {
        HPolyhedron { vars, rows }
    }

    /// Parses the text format: a `vars:` header followed by one row per line,
    /// `c1 c2 ... <= b` or `c1 c2 ... == b`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty input, expected `vars:` header"))?;
        let names = header
            .strip_prefix("vars:")
            .ok_or_else(|| Error::parse(1, "expected `vars:` header"))?;
        let mut poly = HPolyhedron::new(names.split_whitespace())
            .map_err(|e| Error::parse(1, e.to_string()))?;
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let rel_pos = toks
                .iter()
                .position(|t| *t == "<=" || *t == "==")
                .ok_or_else(|| Error::parse(lineno, "missing `<=` or `==`"))?;
            if rel_pos + 2 != toks.len() {
                return Err(Error::parse(lineno, "expected exactly one right-hand side"));
            }
            let rel = if toks[rel_pos] == "<=" {
                Relation::Le
            } else {
                Relation::Eq
            };
            let coeffs = toks[..rel_pos]
                .iter()
                .map(|t| {
                    parse_rat(t).ok_or_else(|| Error::parse(lineno, format!("bad number `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let rhs = parse_rat(toks[rel_pos + 1]).ok_or_else(|| {
                Error::parse(lineno, format!("bad number `{}`", toks[rel_pos + 1]))
            })?;
            poly.push(Row { coeffs, rel, rhs })
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
        }
        Ok(poly)
    }
}

impl fmt::Display for HPolyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vars:")?;
        for v in &self.vars {
            write!(f, " {v}")?;
        }
        writeln!(f)?;
        for r in &self.rows {
            for c in &r.coeffs {
                write!(f, "{} ", fmt_rat(c))?;
            }
            writeln!(f, "{} {}", r.rel.symbol(), fmt_rat(&r.rhs))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for HPolyhedron {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HPolyhedron::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlp::{int, ratio};

    #[test]
    fn text_round_trip() {
        let text = "vars: x1 x2\n1 1 <= 3/2\n-1 0 <= 0\n0 1 == 1/3\n";
        let p = HPolyhedron::parse(text).unwrap();
        assert_eq!(p.num_rows(), 3);
        assert_eq!(p.rows()[0].rhs, ratio(3, 2));
        assert_eq!(p.to_string(), text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = HPolyhedron::parse("vars: x\n1 <= 1\n1 2 <= 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = HPolyhedron::parse("vars: x\n1 >= 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(HPolyhedron::parse("x y\n").is_err());
        assert!(HPolyhedron::parse("vars: x x\n").is_err());
    }

    #[test]
    fn normalization_identifies_scaled_rows() {
        let a = Row::le(vec![ratio(1, 2), int(1)], ratio(3, 4));
        let b = Row::le(vec![int(2), int(4)], int(3));
        assert_eq!(a.normalized(), b.normalized());
        let e1 = Row::eq(vec![int(-2), int(2)], int(4));
        let e2 = Row::eq(vec![int(1), int(-1)], int(-2));
        assert_eq!(e1.normalized(), e2.normalized());
        let c = Row::le(vec![int(-2), int(-4)], int(-3));
        assert_ne!(a.normalized(), c.normalized());
    }

    #[test]
    fn restrict_substitutes_values() {
        let p = HPolyhedron::parse("vars: x y\n1 1 <= 1\n").unwrap();
        let q = p.restrict(&[(0, int(1))]);
        assert_eq!(q.vars(), ["y"]);
        assert_eq!(q.rows()[0].rhs, int(0));
    }
}

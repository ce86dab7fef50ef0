use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use super::ProductKey;
use crate::exactlp::{fmt_rat, parse_rat, Rational};
use crate::{Error, Result};

/// Coefficients `a^s_ℰ` with `χ_s(x) = constant + Σ_ℰ a^s_ℰ f_ℰ(x)`.
/// The constant is the coefficient of the empty product and is nonzero only
/// for `s = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorCoefficients {
    pub constant: Rational,
    pub coeffs: BTreeMap<ProductKey, Rational>,
}

impl IndicatorCoefficients {
    pub fn eval(&self, x: &[bool]) -> Rational {
        let mut v = self.constant.clone();
        for (k, a) in &self.coeffs {
            if k.set().iter().all(|&i| x[i]) {
                v += a;
            }
        }
        v
    }
}

const MAX_FREE_BITS: usize = 16;

/// Builds the coefficients of the indicator `χ_s` by the superset recursion:
/// `a = 1` on the support of `s`, and on each strict superset `ℰ'` the
/// negated sum of the coefficients of the sets between.
pub fn indicator_coefficients(s: &[bool]) -> Result<IndicatorCoefficients> {
    let d = s.len();
    if d > 24 {
        return Err(Error::Capacity(format!("{d} integer variables exceed 24")));
    }
    let base: Vec<usize> = (0..d).filter(|&i| s[i]).collect();
    let free: Vec<usize> = (0..d).filter(|&i| !s[i]).collect();
    if free.len() > MAX_FREE_BITS {
        return Err(Error::Capacity(format!(
            "{} unset coordinates exceed {MAX_FREE_BITS}",
            free.len()
        )));
    }
    // a[t] for t a submask of the free coordinates; every proper submask of
    // t is numerically smaller, so increasing order respects the recursion.
    let size = 1usize << free.len();
    let mut a = vec![0i64; size];
    a[0] = 1;
    for t in 1..size {
        let mut sum = 0i64;
        let mut u = (t - 1) & t;
        loop {
            sum += a[u];
            if u == 0 {
                break;
            }
            u = (u - 1) & t;
        }
        a[t] = -sum;
    }
    let mut out = IndicatorCoefficients {
        constant: Rational::zero(),
        coeffs: BTreeMap::new(),
    };
    for (t, &v) in a.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let set: Vec<usize> = base
            .iter()
            .copied()
            .chain((0..free.len()).filter(|b| t >> b & 1 == 1).map(|b| free[b]))
            .collect();
        let val = Rational::from_integer(v.into());
        if set.is_empty() {
            out.constant = val;
        } else {
            out.coeffs.insert(ProductKey::pure(set)?, val);
        }
    }
    Ok(out)
}

/// Affine maps `y_i = constants[i] + Σ_key rows[i][key]·z_key`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionMatrix {
    pub y_names: Vec<String>,
    pub rows: Vec<BTreeMap<ProductKey, Rational>>,
    pub constants: Vec<Rational>,
}

impl SubstitutionMatrix {
    /// Evaluates `A·(f(x, w), 1)`.
    pub fn apply(&self, x: &[bool], w: &[Rational]) -> Vec<Rational> {
        self.rows
            .iter()
            .zip(&self.constants)
            .map(|(row, c)| {
                let mut v = c.clone();
                for (k, a) in row {
                    let f = k.eval(x, w);
                    if !f.is_zero() {
                        v += a * f;
                    }
                }
                v
            })
            .collect()
    }
}

/// A section `g` on the 0/1 points of the first `x_names.len()` variables
/// of an extended formulation, storing the auxiliary part `g(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionTable {
    pub x_names: Vec<String>,
    pub y_names: Vec<String>,
    pub entries: BTreeMap<Vec<bool>, Vec<Rational>>,
}

pub(crate) fn parse_pattern(tok: &[&str], line: usize) -> Result<Vec<bool>> {
    tok.iter()
        .map(|t| match *t {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(Error::parse(line, format!("expected 0 or 1, found `{t}`"))),
        })
        .collect()
}

pub(crate) fn pattern_string(x: &[bool]) -> String {
    x.iter()
        .map(|&b| if b { "1" } else { "0" })
        .collect::<Vec<_>>()
        .join(" ")
}

impl SectionTable {
    pub fn new(x_names: Vec<String>, y_names: Vec<String>) -> Self {
        SectionTable {
            x_names,
            y_names,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, x: Vec<bool>, y: Vec<Rational>) -> Result<()> {
        if x.len() != self.x_names.len() || y.len() != self.y_names.len() {
            return Err(Error::Dimension(format!(
                "section entry has sizes ({}, {}), expected ({}, {})",
                x.len(),
                y.len(),
                self.x_names.len(),
                self.y_names.len()
            )));
        }
        self.entries.insert(x, y);
        Ok(())
    }

    /// Parses lines `x_1 … x_d -> v_1 … v_D`, where the right side is the
    /// full extended vector over `vars` (whose first `d_x` entries are `x`).
    pub fn parse(text: &str, vars: &[String], d_x: usize) -> Result<Self> {
        if d_x > vars.len() {
            return Err(Error::Dimension(format!(
                "{d_x} integer variables but only {} variables",
                vars.len()
            )));
        }
        let mut t = SectionTable::new(vars[..d_x].to_vec(), vars[d_x..].to_vec());
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| Error::parse(lineno, "missing `->`"))?;
            let x = parse_pattern(&lhs.split_whitespace().collect::<Vec<_>>(), lineno)?;
            if x.len() != d_x {
                return Err(Error::parse(
                    lineno,
                    format!("point has {} entries, expected {d_x}", x.len()),
                ));
            }
            let v = rhs
                .split_whitespace()
                .map(|s| {
                    parse_rat(s).ok_or_else(|| Error::parse(lineno, format!("bad number `{s}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if v.len() != vars.len() {
                return Err(Error::parse(
                    lineno,
                    format!("vector has {} entries, expected {}", v.len(), vars.len()),
                ));
            }
            for (b, val) in x.iter().zip(&v) {
                if *val != Rational::from_integer((*b as i64).into()) {
                    return Err(Error::parse(
                        lineno,
                        "extended vector does not project to the point",
                    ));
                }
            }
            if t.entries.contains_key(&x) {
                return Err(Error::parse(lineno, "duplicate point"));
            }
            t.entries.insert(x, v[d_x..].to_vec());
        }
        Ok(t)
    }
}

impl fmt::Display for SectionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, y) in &self.entries {
            write!(f, "{} ->", pattern_string(x))?;
            for &b in x {
                write!(f, " {}", b as u8)?;
            }
            for v in y {
                write!(f, " {}", fmt_rat(v))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Solves `g(x) = A·(f(x), 1)` by Möbius inversion over the subset lattice.
/// Points missing from the table take the value zero.
pub fn fourier_coefficients(g: &SectionTable) -> Result<SubstitutionMatrix> {
    let d = g.x_names.len();
    if d > 20 {
        return Err(Error::Capacity(format!("{d} integer variables exceed 20")));
    }
    let size = 1usize << d;
    let mut out = SubstitutionMatrix {
        y_names: g.y_names.clone(),
        rows: Vec::with_capacity(g.y_names.len()),
        constants: Vec::with_capacity(g.y_names.len()),
    };
    for i in 0..g.y_names.len() {
        let mut h = vec![Rational::zero(); size];
        for (x, y) in &g.entries {
            let m = x
                .iter()
                .enumerate()
                .fold(0usize, |m, (b, &v)| m | (v as usize) << b);
            h[m] = y[i].clone();
        }
        for b in 0..d {
            for m in 0..size {
                if m >> b & 1 == 1 && !h[m ^ 1 << b].is_zero() {
                    let lower = h[m ^ 1 << b].clone();
                    h[m] -= lower;
                }
            }
        }
        let mut row = BTreeMap::new();
        for (m, v) in h.iter().enumerate().skip(1) {
            if !v.is_zero() {
                row.insert(ProductKey::from_mask(m as u64, None)?, v.clone());
            }
        }
        out.constants.push(h[0].clone());
        out.rows.push(row);
    }
    Ok(out)
}

/// `χ_s` as a 0/1 function, for tests and reports.
pub fn indicator(s: &[bool], x: &[bool]) -> Rational {
    if s == x {
        Rational::one()
    } else {
        Rational::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlp::int;

    fn key(s: &str) -> ProductKey {
        s.parse().unwrap()
    }

    fn all_points(d: usize) -> Vec<Vec<bool>> {
        (0..1usize << d)
            .map(|m| (0..d).map(|b| m >> b & 1 == 1).collect())
            .collect()
    }

    #[test]
    fn indicator_examples() {
        let a = indicator_coefficients(&[true, true]).unwrap();
        assert_eq!(a.coeffs.len(), 1);
        assert_eq!(a.coeffs[&key("{1,2}")], int(1));
        let a = indicator_coefficients(&[true, false]).unwrap();
        assert_eq!(a.coeffs[&key("{1}")], int(1));
        assert_eq!(a.coeffs[&key("{1,2}")], int(-1));
        assert_eq!(a.coeffs.len(), 2);
        let a = indicator_coefficients(&[true]).unwrap();
        assert_eq!(a.coeffs[&key("{1}")], int(1));
        assert!(a.constant.is_zero());
        let zero = indicator_coefficients(&[false, false]).unwrap();
        assert_eq!(zero.constant, int(1));
    }

    #[test]
    fn indicator_reproduces_characteristic_function() {
        for d in 0..=4 {
            for s in all_points(d) {
                let a = indicator_coefficients(&s).unwrap();
                for sp in all_points(d) {
                    assert_eq!(a.eval(&sp), indicator(&s, &sp));
                }
            }
        }
    }

    #[test]
    fn indicator_matches_sign_formula() {
        // Inclusion-exclusion closed form: (-1)^{|ℰ − s|} on supersets of s.
        for s in all_points(5) {
            let a = indicator_coefficients(&s).unwrap();
            for m in 1u64..32 {
                let k = ProductKey::from_mask(m, None).unwrap();
                let sup = (0..5).all(|i| !s[i] || m >> i & 1 == 1);
                let extra = (0..5).filter(|&i| m >> i & 1 == 1 && !s[i]).count();
                let want = if sup {
                    int(if extra % 2 == 0 { 1 } else { -1 })
                } else {
                    int(0)
                };
                assert_eq!(a.coeffs.get(&k).cloned().unwrap_or_default(), want);
            }
        }
    }

    fn table(d: usize, f: impl Fn(&[bool]) -> i64) -> SectionTable {
        let mut t = SectionTable::new((1..=d).map(|i| format!("x{i}")).collect(), vec!["y".into()]);
        for p in all_points(d) {
            let v = f(&p);
            t.insert(p, vec![int(v)]).unwrap();
        }
        t
    }

    #[test]
    fn fourier_examples() {
        let a = fourier_coefficients(&table(2, |x| x[0] as i64)).unwrap();
        assert_eq!(a.constants[0], int(0));
        assert_eq!(a.rows[0].len(), 1);
        assert_eq!(a.rows[0][&key("{1}")], int(1));

        let a = fourier_coefficients(&table(1, |x| 1 - x[0] as i64)).unwrap();
        assert_eq!(a.constants[0], int(1));
        assert_eq!(a.rows[0][&key("{1}")], int(-1));

        let a = fourier_coefficients(&table(2, |x| (x[0] || x[1]) as i64)).unwrap();
        assert_eq!(a.rows[0][&key("{1}")], int(1));
        assert_eq!(a.rows[0][&key("{2}")], int(1));
        assert_eq!(a.rows[0][&key("{1,2}")], int(-1));
    }

    #[test]
    fn fourier_reproduces_table() {
        let t = table(3, |x| 3 * x[0] as i64 - 2 * (x[1] && x[2]) as i64 + 5);
        let a = fourier_coefficients(&t).unwrap();
        for (x, y) in &t.entries {
            assert_eq!(&a.apply(x, &[]), y);
        }
    }

    #[test]
    fn section_file_round_trip() {
        let vars: Vec<String> = ["x1", "x2", "y"].iter().map(|s| s.to_string()).collect();
        let text = "0 0 -> 0 0 0\n1 0 -> 1 0 1/2\n";
        let t = SectionTable::parse(text, &vars, 2).unwrap();
        assert_eq!(t.to_string(), text);
        let err = SectionTable::parse("0 1 -> 1 1 0\n", &vars, 2).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}

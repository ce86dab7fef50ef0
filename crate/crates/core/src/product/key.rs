use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};

use crate::exactlp::Rational;
use crate::{Error, Result};

/// Index of a product variable: a set `ℰ` of integer-variable indices
/// (0-based), optionally multiplied by one fractional variable `w_j`.
///
/// `ℰ` may be empty only when `frac` is set; that key is the fractional
/// variable itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductKey {
    set: Vec<usize>,
    frac: Option<usize>,
}

impl ProductKey {
    pub fn new(set: impl IntoIterator<Item = usize>, frac: Option<usize>) -> Result<Self> {
        let mut set: Vec<usize> = set.into_iter().collect();
        set.sort_unstable();
        set.dedup();
        if set.is_empty() && frac.is_none() {
            return Err(Error::Input("product key needs a nonempty set".into()));
        }
        Ok(ProductKey { set, frac })
    }

    pub fn pure(set: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::new(set, None)
    }

    pub fn mixed(set: impl IntoIterator<Item = usize>, frac: usize) -> Self {
        Self::new(set, Some(frac)).expect("mixed keys are always legal")
    }

    pub fn single(i: usize) -> Self {
        ProductKey {
            set: vec![i],
            frac: None,
        }
    }

    pub fn from_mask(mask: u64, frac: Option<usize>) -> Result<Self> {
        Self::new((0..64).filter(|b| mask >> b & 1 == 1), frac)
    }

    pub fn set(&self) -> &[usize] {
        &self.set
    }

    pub fn frac(&self) -> Option<usize> {
        self.frac
    }

    pub fn mask(&self) -> u64 {
        self.set.iter().fold(0, |m, &i| m | 1 << i)
    }

    /// True for the coordinates that carry an original variable.
    pub fn is_singleton(&self) -> bool {
        match self.frac {
            None => self.set.len() == 1,
            Some(_) => self.set.is_empty(),
        }
    }

    /// `f_key(x, w)`: the product of the selected 0/1 entries, times `w_j`.
    pub fn eval(&self, x: &[bool], w: &[Rational]) -> Rational {
        if !self.set.iter().all(|&i| x[i]) {
            return Rational::zero();
        }
        match self.frac {
            None => Rational::one(),
            Some(j) => w[j].clone(),
        }
    }

    /// Variable name used when the key becomes a column of a polyhedron:
    /// `z{1,2}` or `v{1,2}w3`, 1-based.
    pub fn var_name(&self) -> String {
        let body = self
            .set
            .iter()
            .map(|i| (i + 1).to_string())
            .collect::<Vec<_>>()
            .join(",");
        match self.frac {
            None => format!("z{{{body}}}"),
            Some(j) => format!("v{{{body}}}w{}", j + 1),
        }
    }
}

impl Ord for ProductKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.frac
            .cmp(&other.frac)
            .then(self.set.len().cmp(&other.set.len()))
            .then_with(|| self.set.cmp(&other.set))
    }
}

impl PartialOrd for ProductKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ProductKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.set.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")?;
        if let Some(j) = self.frac {
            write!(f, "*w[{}]", j + 1)?;
        }
        Ok(())
    }
}

impl FromStr for ProductKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("malformed product key `{s}`"));
        let s = s.trim();
        let (set_part, frac) = match s.split_once('*') {
            Some((a, b)) => {
                let j = b
                    .strip_prefix("w[")
                    .and_then(|r| r.strip_suffix(']'))
                    .and_then(|r| r.parse::<usize>().ok())
                    .filter(|&j| j >= 1)
                    .ok_or_else(bad)?;
                (a, Some(j - 1))
            }
            None => (s, None),
        };
        let inner = set_part
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(bad)?;
        let mut set = Vec::new();
        if !inner.trim().is_empty() {
            for t in inner.split(',') {
                let i: usize = t.trim().parse().map_err(|_| bad())?;
                if i == 0 {
                    return Err(bad());
                }
                set.push(i - 1);
            }
        }
        ProductKey::new(set, frac)
    }
}

/// Partial map from product keys to values; absent keys read as zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseProductVector {
    entries: BTreeMap<ProductKey, Rational>,
}

impl SparseProductVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &ProductKey) -> Rational {
        self.entries
            .get(key)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn set(&mut self, key: ProductKey, value: Rational) {
        if value.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, value);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProductKey, &Rational)> {
        self.entries.iter()
    }

    /// Number of stored (nonzero) entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dense(&self, keys: &[ProductKey]) -> Vec<Rational> {
        keys.iter().map(|k| self.get(k)).collect()
    }
}

fn to_bits(x: &[Rational]) -> Result<Vec<bool>> {
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            if v.is_zero() {
                Ok(false)
            } else if v.is_one() {
                Ok(true)
            } else {
                Err(Error::Input(format!(
                    "entry {} is {v}, expected 0 or 1",
                    i + 1
                )))
            }
        })
        .collect()
}

fn support(bits: &[bool]) -> Result<Vec<usize>> {
    let s: Vec<usize> = (0..bits.len()).filter(|&i| bits[i]).collect();
    if s.len() > 24 {
        return Err(Error::Capacity(format!(
            "support of size {} exceeds 24",
            s.len()
        )));
    }
    Ok(s)
}

fn for_each_nonempty_subset(items: &[usize], mut f: impl FnMut(Vec<usize>)) {
    for m in 1u64..(1 << items.len()) {
        f((0..items.len())
            .filter(|b| m >> b & 1 == 1)
            .map(|b| items[b])
            .collect());
    }
}

/// `f_ℰ(x) = ∏_{i∈ℰ} x_i`, stored on the subsets of the support only.
pub fn product_section(x: &[Rational]) -> Result<SparseProductVector> {
    let bits = to_bits(x)?;
    let supp = support(&bits)?;
    let mut v = SparseProductVector::new();
    for_each_nonempty_subset(&supp, |s| {
        v.set(ProductKey::pure(s).expect("nonempty"), Rational::one())
    });
    Ok(v)
}

/// Pure keys as in [`product_section`], plus `f_{ℰw_j} = f_ℰ(x)·w_j` and the
/// fractional singletons `w_j`.
pub fn mixed_product_section(x: &[Rational], w: &[Rational]) -> Result<SparseProductVector> {
    let mut v = product_section(x)?;
    let supp = support(&to_bits(x)?)?;
    for (j, wj) in w.iter().enumerate() {
        if wj.is_zero() {
            continue;
        }
        v.set(ProductKey::mixed([], j), wj.clone());
        for_each_nonempty_subset(&supp, |s| v.set(ProductKey::mixed(s, j), wj.clone()));
    }
    Ok(v)
}

/// Every key of the product space over `d_x` integer and `d_w` fractional
/// variables: `(d_w + 1)·2^{d_x} − 1` keys in canonical order.
pub fn all_keys(d_x: usize, d_w: usize) -> Result<Vec<ProductKey>> {
    if d_x > 20 {
        return Err(Error::Capacity(format!(
            "{d_x} integer variables exceed 20"
        )));
    }
    let mut keys = Vec::with_capacity((d_w + 1) << d_x);
    for m in 1u64..(1 << d_x) {
        keys.push(ProductKey::from_mask(m, None)?);
    }
    for j in 0..d_w {
        for m in 0u64..(1 << d_x) {
            keys.push(ProductKey::from_mask(m, Some(j))?);
        }
    }
    keys.sort();
    Ok(keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlp::{int, ratio};

    fn key(s: &str) -> ProductKey {
        s.parse().unwrap()
    }

    #[test]
    fn key_text_round_trip() {
        for s in ["{1}", "{1,3}", "{2}*w[1]", "{}*w[2]"] {
            assert_eq!(key(s).to_string(), s);
        }
        assert!("{}".parse::<ProductKey>().is_err());
        assert!("{0}".parse::<ProductKey>().is_err());
        assert!("{1}*w[0]".parse::<ProductKey>().is_err());
        assert_eq!(key("{3,1}"), key("{1,3}"));
        assert_eq!(key("{1,3}").var_name(), "z{1,3}");
        assert_eq!(key("{1,3}*w[2]").var_name(), "v{1,3}w2");
    }

    #[test]
    fn pure_section() {
        let v = product_section(&[int(1), int(1)]).unwrap();
        assert_eq!(v.get(&key("{1}")), int(1));
        assert_eq!(v.get(&key("{2}")), int(1));
        assert_eq!(v.get(&key("{1,2}")), int(1));
        let v = product_section(&[int(0), int(0), int(0)]).unwrap();
        assert!(v.is_empty());
        let v = product_section(&[int(1), int(0), int(1)]).unwrap();
        assert_eq!(v.get(&key("{1,3}")), int(1));
        assert_eq!(v.get(&key("{1,2}")), int(0));
        assert!(product_section(&[ratio(1, 2)]).is_err());
    }

    #[test]
    fn mixed_section() {
        let v = mixed_product_section(&[int(1)], &[ratio(1, 3)]).unwrap();
        assert_eq!(v.get(&key("{1}*w[1]")), ratio(1, 3));
        assert_eq!(v.get(&key("{}*w[1]")), ratio(1, 3));
        let v = mixed_product_section(&[int(0)], &[ratio(1, 3)]).unwrap();
        assert_eq!(v.get(&key("{1}*w[1]")), int(0));
        let v = mixed_product_section(&[int(1), int(1)], &[ratio(2, 5)]).unwrap();
        assert_eq!(v.get(&key("{1,2}*w[1]")), ratio(2, 5));
    }

    #[test]
    fn key_space_sizes() {
        assert_eq!(all_keys(3, 0).unwrap().len(), 7);
        assert_eq!(all_keys(2, 2).unwrap().len(), 3 * 4 - 1);
        let keys = all_keys(2, 1).unwrap();
        assert_eq!(keys.iter().filter(|k| k.is_singleton()).count(), 3);
    }

    #[test]
    fn eval_matches_section() {
        let x = [true, false, true];
        let w = [ratio(1, 7)];
        let xs: Vec<Rational> = x.iter().map(|&b| int(b as i64)).collect();
        let v = mixed_product_section(&xs, &w).unwrap();
        for k in all_keys(3, 1).unwrap() {
            assert_eq!(k.eval(&x, &w), v.get(&k), "{k}");
        }
    }
}

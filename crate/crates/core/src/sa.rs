//! Sherali-Adams lifting: multiply every row by
//! `∏_{i∈U−W} x_i ∏_{i∈W} (1 − x_i)` for `|U| ≤ k`, linearize with
//! `x_i² = x_i`, `∏_{i∈I} x_i = z_I` and `z_I·w_j = v_{Ij}`, and project back.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::exactlp::{
    project_onto, solve_lp, HPolyhedron, LpStatus, Rational, Relation, Row, Sense,
};
use crate::product::{AffineForm, MixedSectionTable};
use crate::{Error, Result};

pub const MAX_PROJECT_LIFTED: usize = 20;
const MAX_LIFT_INTEGER_VARS: usize = 20;

/// A variable created by linearization; indices are positions in the
/// integer (resp. fractional) variable lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LiftedVar {
    Product(Vec<usize>),
    Mixed(Vec<usize>, usize),
}

impl LiftedVar {
    /// `z{1,3}` or `v{1,3}w2`, 1-based.
    pub fn name(&self) -> String {
        let set = |s: &[usize]| {
            s.iter()
                .map(|i| (i + 1).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            LiftedVar::Product(s) => format!("z{{{}}}", set(s)),
            LiftedVar::Mixed(s, j) => format!("v{{{}}}w{}", set(s), j + 1),
        }
    }

    fn sort_key(&self) -> (usize, usize, Vec<usize>) {
        match self {
            LiftedVar::Product(s) => (0, s.len(), s.clone()),
            LiftedVar::Mixed(s, j) => (1 + j, s.len(), s.clone()),
        }
    }
}

/// Which source row and which `(U, W)` produced a lifted row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    pub row: usize,
    pub u: Vec<usize>,
    pub w: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedSystem {
    /// Original variables (in the input order) followed by `lifted`.
    pub base: HPolyhedron,
    pub level: usize,
    pub origins: Vec<Origin>,
    pub integer_vars: Vec<String>,
    pub fractional_vars: Vec<String>,
    pub lifted: Vec<LiftedVar>,
    original: Vec<String>,
}

/// Monomial `x_T` (bitmask over integer positions), optionally times `w_j`.
type Mono = (u64, Option<usize>);

fn mask_set(m: u64) -> Vec<usize> {
    (0..64).filter(|b| m >> b & 1 == 1).collect()
}

impl LiftedSystem {
    pub fn original_vars(&self) -> &[String] {
        &self.original
    }

    /// Values of every column at the product extension of an integer
    /// point: `z_I = ∏ x_i`, `v_{Ij} = z_I·w_j`.
    pub fn lift_point(&self, x: &[bool], w: &[Rational]) -> Vec<Rational> {
        let mut v = Vec::with_capacity(self.base.dim());
        let bit = |b: bool| if b { Rational::one() } else { Rational::zero() };
        for name in &self.original {
            if let Some(i) = self.integer_vars.iter().position(|n| n == name) {
                v.push(bit(x[i]));
            } else {
                let j = self
                    .fractional_vars
                    .iter()
                    .position(|n| n == name)
                    .expect("known");
                v.push(w[j].clone());
            }
        }
        for l in &self.lifted {
            match l {
                LiftedVar::Product(s) => v.push(bit(s.iter().all(|&i| x[i]))),
                LiftedVar::Mixed(s, j) => v.push(if s.iter().all(|&i| x[i]) {
                    w[*j].clone()
                } else {
                    Rational::zero()
                }),
            }
        }
        v
    }

    /// The lifted system with columns ordered `(x, w, lifted)` together with
    /// its product section, which is mixed-linear: `z_I` is constant and
    /// `v_{Ij}` is `w_j` or `0` on each pattern.
    pub fn with_section(&self) -> Result<(HPolyhedron, MixedSectionTable)> {
        let mut order: Vec<String> = self.integer_vars.clone();
        order.extend(self.fractional_vars.iter().cloned());
        order.extend(self.lifted.iter().map(LiftedVar::name));
        let q = self.base.reorder(&order)?;
        let n = self.integer_vars.len();
        let p = self.fractional_vars.len();
        let mut entries = BTreeMap::new();
        for m in 0u64..(1 << n) {
            let x: Vec<bool> = (0..n).map(|b| m >> b & 1 == 1).collect();
            let forms = self
                .lifted
                .iter()
                .map(|l| {
                    let mut coeffs = vec![Rational::zero(); p];
                    let mut constant = Rational::zero();
                    match l {
                        LiftedVar::Product(s) => {
                            if s.iter().all(|&i| x[i]) {
                                constant = Rational::one();
                            }
                        }
                        LiftedVar::Mixed(s, j) => {
                            if s.iter().all(|&i| x[i]) {
                                coeffs[*j] = Rational::one();
                            }
                        }
                    }
                    AffineForm { coeffs, constant }
                })
                .collect();
            entries.insert(x, forms);
        }
        let table = MixedSectionTable {
            x_names: self.integer_vars.clone(),
            w_names: self.fractional_vars.clone(),
            y_names: self.lifted.iter().map(LiftedVar::name).collect(),
            entries,
        };
        Ok((q, table))
    }
}

fn check_box(p: &HPolyhedron, idx: &[usize]) -> Result<()> {
    for &i in idx {
        let mut e = vec![Rational::zero(); p.dim()];
        e[i] = Rational::one();
        for (sense, bound) in [
            (Sense::Max, Rational::one()),
            (Sense::Min, Rational::zero()),
        ] {
            let r = solve_lp(p, &e, sense)?;
            let ok = match r.status {
                LpStatus::Infeasible => return Ok(()),
                LpStatus::Unbounded => false,
                LpStatus::Optimal => {
                    let v = r.objective.expect("optimal");
                    match sense {
                        Sense::Max => v <= bound,
                        Sense::Min => v >= bound,
                    }
                }
            };
            if !ok {
                return Err(Error::Precondition(format!(
                    "integer variable `{}` is not confined to [0, 1]",
                    p.vars()[i]
                )));
            }
        }
    }
    Ok(())
}

/// Level-`k` Sherali-Adams system of `p` with respect to `integer_vars`.
/// All other variables are fractional. Tautologies and duplicate rows are
/// dropped.
pub fn sa_lift(p: &HPolyhedron, integer_vars: &[String], k: usize) -> Result<LiftedSystem> {
    let n = integer_vars.len();
    if k > n {
        return Err(Error::Input(format!(
            "level {k} exceeds the {n} integer variables"
        )));
    }
    if n > MAX_LIFT_INTEGER_VARS {
        return Err(Error::Capacity(format!(
            "{n} integer variables exceed {MAX_LIFT_INTEGER_VARS}"
        )));
    }
    let int_idx: Vec<usize> = integer_vars
        .iter()
        .map(|v| p.var_index(v))
        .collect::<Result<_>>()?;
    if int_idx.iter().collect::<HashSet<_>>().len() != n {
        return Err(Error::Input("integer variable listed twice".into()));
    }
    let frac_idx: Vec<usize> = (0..p.dim()).filter(|i| !int_idx.contains(i)).collect();
    check_box(p, &int_idx)?;

    let original = p.vars().to_vec();
    let fractional_vars: Vec<String> = frac_idx.iter().map(|&i| original[i].clone()).collect();
    if k == 0 {
        return Ok(LiftedSystem {
            base: p.clone(),
            level: 0,
            origins: (0..p.num_rows())
                .map(|row| Origin {
                    row,
                    u: Vec::new(),
                    w: Vec::new(),
                })
                .collect(),
            integer_vars: integer_vars.to_vec(),
            fractional_vars,
            lifted: Vec::new(),
            original,
        });
    }

    // Column of each original variable seen as a monomial.
    let mut orig_mono: Vec<Mono> = vec![(0, None); p.dim()];
    for (pos, &i) in int_idx.iter().enumerate() {
        orig_mono[i] = (1 << pos, None);
    }
    for (pos, &i) in frac_idx.iter().enumerate() {
        orig_mono[i] = (0, Some(pos));
    }

    let mut us: Vec<u64> = (0u64..(1 << n))
        .filter(|m| m.count_ones() as usize <= k)
        .collect();
    us.sort_by_key(|&m| (m.count_ones(), mask_set(m)));

    let lifted_rows: Vec<(BTreeMap<Mono, Rational>, Relation, Origin)> = p
        .rows()
        .par_iter()
        .enumerate()
        .flat_map_iter(|(ri, row)| {
            let mut out = Vec::new();
            for &u in &us {
                let mut w = u;
                // every submask W of U, starting from the empty set
                let mut subs = Vec::new();
                loop {
                    subs.push(w);
                    if w == 0 {
                        break;
                    }
                    w = (w - 1) & u;
                }
                subs.reverse();
                for &w in &subs {
                    let mut acc: BTreeMap<Mono, Rational> = BTreeMap::new();
                    let base = u & !w;
                    let mut s = w;
                    loop {
                        let t = base | s;
                        let sign = if s.count_ones() % 2 == 0 {
                            Rational::one()
                        } else {
                            -Rational::one()
                        };
                        for (c, &(m, f)) in row.coeffs.iter().zip(&orig_mono) {
                            if !c.is_zero() {
                                *acc.entry((m | t, f)).or_insert_with(Rational::zero) += &sign * c;
                            }
                        }
                        if !row.rhs.is_zero() {
                            *acc.entry((t, None)).or_insert_with(Rational::zero) -=
                                &sign * &row.rhs;
                        }
                        if s == 0 {
                            break;
                        }
                        s = (s - 1) & w;
                    }
                    acc.retain(|_, v| !v.is_zero());
                    out.push((
                        acc,
                        row.rel,
                        Origin {
                            row: ri,
                            u: mask_set(u),
                            w: mask_set(w),
                        },
                    ));
                }
            }
            out
        })
        .collect();

    let mut lifted_set: Vec<LiftedVar> = lifted_rows
        .iter()
        .flat_map(|(acc, _, _)| acc.keys())
        .filter_map(|&(m, f)| match f {
            None if m.count_ones() >= 2 => Some(LiftedVar::Product(mask_set(m))),
            Some(j) if m != 0 => Some(LiftedVar::Mixed(mask_set(m), j)),
            _ => None,
        })
        .collect();
    lifted_set.sort_by_key(LiftedVar::sort_key);
    lifted_set.dedup();

    let mut col: BTreeMap<Mono, usize> = BTreeMap::new();
    for (i, &m) in orig_mono.iter().enumerate() {
        col.insert(m, i);
    }
    for (i, l) in lifted_set.iter().enumerate() {
        let key = match l {
            LiftedVar::Product(s) => (s.iter().fold(0u64, |m, &b| m | 1 << b), None),
            LiftedVar::Mixed(s, j) => (s.iter().fold(0u64, |m, &b| m | 1 << b), Some(*j)),
        };
        col.insert(key, p.dim() + i);
    }
    let mut names = original.clone();
    names.extend(lifted_set.iter().map(LiftedVar::name));
    let dim = names.len();
    let mut base = HPolyhedron::new(names)?;
    let mut origins = Vec::new();
    let mut seen = HashSet::new();
    for (acc, rel, origin) in lifted_rows {
        let mut coeffs = vec![Rational::zero(); dim];
        let mut rhs = Rational::zero();
        for ((m, f), v) in acc {
            if m == 0 && f.is_none() {
                rhs -= v;
            } else {
                coeffs[col[&(m, f)]] = v;
            }
        }
        let r = Row { coeffs, rel, rhs };
        if r.is_tautology() {
            continue;
        }
        if !seen.insert(r.normalized()) {
            continue;
        }
        base.push(r)?;
        origins.push(origin);
    }
    Ok(LiftedSystem {
        base,
        level: k,
        origins,
        integer_vars: integer_vars.to_vec(),
        fractional_vars,
        lifted: lifted_set,
        original,
    })
}

/// `SA^k(P)`: projection of the lifted system onto the original variables.
pub fn sa_project(l: &LiftedSystem) -> Result<HPolyhedron> {
    if l.lifted.len() > MAX_PROJECT_LIFTED {
        return Err(Error::Capacity(format!(
            "{} lifted variables exceed {MAX_PROJECT_LIFTED}",
            l.lifted.len()
        )));
    }
    project_onto(&l.base, &l.original)
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `r · C(n, t) · 2^t`.
pub fn sa_size_bound(r: u64, n: usize, t: usize) -> Result<BigUint> {
    if t > n {
        return Err(Error::Input(format!("level {t} exceeds {n}")));
    }
    Ok((BigUint::from(r) * binomial(n, t)) << t)
}

/// Largest `t` such that `sa_size_bound(r, n, t') ≤ 2^{δn}` for every
/// `t' ≤ t`; `None` when even `t = 0` is over budget.
pub fn max_level_within_budget(r: u64, n: usize, delta: &Rational) -> Result<Option<usize>> {
    if delta.is_negative() {
        return Err(Error::Input("budget exponent must be nonnegative".into()));
    }
    let e = delta * Rational::from_integer(n.into());
    let num = e.numer().to_biguint().expect("nonnegative");
    let den: u32 = e
        .denom()
        .try_into()
        .map_err(|_| Error::Capacity("budget exponent denominator too large".into()))?;
    let num: usize = num
        .try_into()
        .map_err(|_| Error::Capacity("budget exponent too large".into()))?;
    let budget = BigUint::one() << num;
    let mut best = None;
    for t in 0..=n {
        // bound ≤ 2^{num/den}  ⇔  bound^den ≤ 2^num
        if sa_size_bound(r, n, t)?.pow(den) > budget {
            break;
        }
        best = Some(t);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlp::{contains, int, ratio};
    use crate::hull::{conv_hull_hrep, enumerate_feasible_points, unit_box_rows};

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn boxed(text: &str) -> HPolyhedron {
        let mut p = HPolyhedron::parse(text).unwrap();
        let idx: Vec<usize> = (0..p.dim()).collect();
        for r in unit_box_rows(p.dim(), &idx) {
            p.push(r).unwrap();
        }
        p
    }

    fn same(a: &HPolyhedron, b: &HPolyhedron) -> bool {
        contains(a, b).unwrap() && contains(b, a).unwrap()
    }

    #[test]
    fn level_one_row_matches_hand_linearization() {
        let p = boxed("vars: x1 x2\n1 1 <= 3/2\n");
        let l = sa_lift(&p, &names(&["x1", "x2"]), 1).unwrap();
        assert_eq!(l.base.vars(), ["x1", "x2", "z{1,2}"]);
        // (x1 + x2 - 3/2)·x1 <= 0  →  -1/2 x1 + z12 <= 0
        let i = l
            .origins
            .iter()
            .position(|o| o.row == 0 && o.u == [0] && o.w.is_empty())
            .unwrap();
        let r = &l.base.rows()[i];
        assert_eq!(r.coeffs, vec![ratio(-1, 2), int(0), int(1)]);
        assert_eq!(r.rhs, int(0));
        // x1 <= 1 times x1 is the tautology 0 <= 0 and is dropped
        assert!(l
            .base
            .rows()
            .iter()
            .all(|r| !r.is_tautology() || !r.is_trivial()));
    }

    #[test]
    fn level_zero_and_errors() {
        let p = boxed("vars: x1 x2\n1 1 <= 3/2\n");
        let l = sa_lift(&p, &names(&["x1", "x2"]), 0).unwrap();
        assert_eq!(l.base, p);
        assert_eq!(sa_project(&l).unwrap(), p);
        assert!(matches!(
            sa_lift(&p, &names(&["x1", "x2"]), 3),
            Err(Error::Input(_))
        ));
        let unboxed = HPolyhedron::parse("vars: x\n1 <= 2\n").unwrap();
        assert!(matches!(
            sa_lift(&unboxed, &names(&["x"]), 1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn level_two_toy_projects_to_integer_hull() {
        let p = boxed("vars: x1 x2\n1 1 <= 3/2\n");
        let l = sa_lift(&p, &names(&["x1", "x2"]), 2).unwrap();
        let proj = sa_project(&l).unwrap();
        let want = boxed("vars: x1 x2\n1 1 <= 1\n");
        assert!(same(&proj, &want), "{proj}");
        let l1 = sa_project(&sa_lift(&p, &names(&["x1", "x2"]), 1).unwrap()).unwrap();
        assert!(l1.contains_point(&[ratio(2, 3), ratio(2, 3)]));
        assert!(!l1.contains_point(&[ratio(3, 4), ratio(3, 4)]));
        assert!(contains(&l1, &proj).unwrap());
    }

    #[test]
    fn top_level_equals_hull_on_triangle() {
        let p = boxed("vars: a b c\n1 1 0 <= 1\n0 1 1 <= 1\n1 0 1 <= 1\n");
        let vars = names(&["a", "b", "c"]);
        let l = sa_lift(&p, &vars, 3).unwrap();
        let proj = sa_project(&l).unwrap();
        let pts: Vec<Vec<Rational>> = enumerate_feasible_points(&p, &vars)
            .unwrap()
            .iter()
            .map(|a| a.int_values())
            .collect();
        let hull = conv_hull_hrep(&vars, &pts).unwrap();
        assert!(same(&proj, &hull));
        let l1 = sa_project(&sa_lift(&p, &vars, 1).unwrap()).unwrap();
        assert!(contains(&l1, &proj).unwrap());
    }

    #[test]
    fn mixed_lift_names_and_soundness() {
        // x in {0,1}, 0 <= w <= x
        let p =
            HPolyhedron::parse("vars: w x\n1 -1 <= 0\n-1 0 <= 0\n0 1 <= 1\n0 -1 <= 0\n").unwrap();
        let l = sa_lift(&p, &names(&["x"]), 1).unwrap();
        assert!(l.base.vars().contains(&"v{1}w1".to_string()));
        for (x, w) in [
            (false, int(0)),
            (true, int(0)),
            (true, ratio(1, 3)),
            (true, int(1)),
        ] {
            let pt = l.lift_point(&[x], &[w]);
            assert!(l.base.contains_point(&pt));
        }
        let (q, table) = l.with_section().unwrap();
        assert_eq!(q.vars()[0], "x");
        assert_eq!(table.entries.len(), 2);
    }

    #[test]
    fn size_bounds() {
        assert_eq!(sa_size_bound(1, 4, 2).unwrap(), BigUint::from(24u32));
        assert_eq!(sa_size_bound(10, 10, 3).unwrap(), BigUint::from(9600u32));
        assert!(sa_size_bound(1, 2, 3).is_err());
        // budget 2^10: bounds 1, 40, 760, 9120
        assert_eq!(
            max_level_within_budget(1, 20, &ratio(1, 2)).unwrap(),
            Some(2)
        );
        assert_eq!(
            max_level_within_budget(5000, 4, &ratio(1, 1)).unwrap(),
            None
        );
    }

    #[test]
    fn row_count_within_per_level_bound() {
        let p = boxed("vars: a b c\n1 1 1 <= 2\n");
        let r = p.num_rows() as u64;
        for k in 0..=3 {
            let l = sa_lift(&p, &names(&["a", "b", "c"]), k).unwrap();
            let total: BigUint = (0..=k).map(|t| sa_size_bound(r, 3, t).unwrap()).sum();
            assert!(BigUint::from(l.base.num_rows()) <= total);
            for v in &l.lifted {
                if let LiftedVar::Product(s) = v {
                    assert!(s.len() <= k + 1);
                }
            }
        }
    }
}

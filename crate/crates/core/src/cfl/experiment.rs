use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::instance::{fmt_set, members, CflInstance, FacilitySet};
use crate::exactlp::{fmt_rat, int, Rational};
use crate::product::ProductKey;
use crate::{Error, Result};

/// Largest `n` for which outcome classes are listed explicitly.
pub const MAX_ENUM_N: usize = 10;

/// One outcome of an experiment up to the order of the clients. Clients are
/// exchangeable, so `x_ij = loads[i] / m` in every realization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeClass {
    pub prob: Rational,
    pub open: FacilitySet,
    pub loads: Vec<Rational>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub name: String,
    pub clients: usize,
    pub classes: Vec<OutcomeClass>,
}

impl OutcomeClass {
    /// `f(y, x)` at `key` for the symmetric realization of this class.
    pub fn eval(&self, key: &ProductKey, clients: usize) -> Rational {
        if !key.set().iter().all(|&i| self.open >> i & 1 == 1) {
            return Rational::zero();
        }
        match key.frac() {
            None => Rational::one(),
            Some(f) => &self.loads[f / clients] / int(clients as i64),
        }
    }
}

impl ExperimentSpec {
    pub fn m(&self) -> Rational {
        int(self.clients as i64)
    }

    /// Probabilities in `[0, 1]` summing to one, loads summing to `m`.
    pub fn check_sanity(&self) -> Result<()> {
        let mut total = Rational::zero();
        for c in &self.classes {
            if c.prob.is_negative() || c.prob > Rational::one() {
                return Err(Error::Validity(format!(
                    "{}: probability {}",
                    c.label, c.prob
                )));
            }
            total += &c.prob;
            let load: Rational = c.loads.iter().sum();
            if load != self.m() {
                return Err(Error::Validity(format!(
                    "{}: loads sum to {}",
                    c.label, load
                )));
            }
        }
        if !total.is_one() {
            return Err(Error::Validity(format!("probabilities sum to {total}")));
        }
        Ok(())
    }

    /// `E[key]` by summing over every class.
    pub fn expectation(&self, key: &ProductKey) -> Rational {
        self.classes
            .iter()
            .filter(|c| !c.prob.is_zero())
            .fold(Rational::zero(), |acc, c| {
                acc + &c.prob * c.eval(key, self.clients)
            })
    }

    /// Same sums, with rationals interned so each class costs a counter
    /// increment.
    pub fn compile(&self) -> CompiledSpec {
        let mut probs: BTreeMap<Rational, usize> = BTreeMap::new();
        let mut vals: BTreeMap<Rational, usize> = BTreeMap::new();
        let one = vals.len();
        vals.insert(Rational::one(), one);
        let m = self.m();
        let mut classes = Vec::with_capacity(self.classes.len());
        for c in &self.classes {
            let n = probs.len();
            let p = *probs.entry(c.prob.clone()).or_insert(n);
            let loads = c
                .loads
                .iter()
                .map(|ld| {
                    let n = vals.len();
                    *vals.entry(ld / &m).or_insert(n)
                })
                .collect();
            classes.push((p, c.open, loads));
        }
        let invert = |m: BTreeMap<Rational, usize>| {
            let mut v = vec![Rational::zero(); m.len()];
            for (r, i) in m {
                v[i] = r;
            }
            v
        };
        CompiledSpec {
            m: self.clients,
            probs: invert(probs),
            vals: invert(vals),
            one,
            classes,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledSpec {
    m: usize,
    probs: Vec<Rational>,
    vals: Vec<Rational>,
    one: usize,
    classes: Vec<(usize, FacilitySet, Vec<usize>)>,
}

impl CompiledSpec {
    pub fn expectation(&self, key: &ProductKey) -> Rational {
        let need: FacilitySet = key.set().iter().fold(0, |s, &i| s | 1 << i);
        let facility = key.frac().map(|f| f / self.m);
        let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (p, open, loads) in &self.classes {
            if need & !open != 0 {
                continue;
            }
            let v = facility.map_or(self.one, |i| loads[i]);
            *counts.entry((*p, v)).or_default() += 1;
        }
        counts
            .into_iter()
            .map(|((p, v), c)| &self.probs[p] * &self.vals[v] * int(c as i64))
            .sum()
    }
}

fn check_enum(inst: &CflInstance) -> Result<()> {
    if inst.n() > MAX_ENUM_N {
        return Err(Error::Capacity(format!(
            "n = {} has 2^{} second-case outcomes",
            inst.n(),
            2 * inst.n()
        )));
    }
    Ok(())
}

/// Subsets `q ⊆ F − k` meeting `l`, in increasing order.
pub(crate) fn case2_subsets(
    inst: &CflInstance,
    l: FacilitySet,
) -> impl Iterator<Item = FacilitySet> {
    let n = inst.n();
    (1u128..1 << (2 * n))
        .map(move |t| t << n)
        .filter(move |q| q & l != 0)
}

fn spread(loads: &mut [Rational], set: FacilitySet, amount: &Rational) {
    let ms = members(set);
    let each = amount / int(ms.len() as i64);
    for i in ms {
        loads[i] = each.clone();
    }
}

/// The distribution `D_{k,l}`. Its first case overloads `k`.
pub fn d_spec(inst: &CflInstance, l: FacilitySet) -> Result<ExperimentSpec> {
    inst.check_l(l)?;
    check_enum(inst)?;
    let nf = inst.num_facilities();
    let m = inst.m_rat();
    let mut classes = Vec::new();
    let mut loads = vec![Rational::zero(); nf];
    spread(&mut loads, inst.k(), &m);
    classes.push(OutcomeClass {
        prob: inst.p_case1(),
        open: inst.all() & !l,
        loads,
        label: "case 1".into(),
    });
    let p = inst.p_case2() / super::instance::big(inst.num_q());
    let ll = inst.load_l();
    for q in case2_subsets(inst, l) {
        let mut loads = vec![Rational::zero(); nf];
        let ql = q & l;
        spread(&mut loads, ql, &(&ll * int(ql.count_ones() as i64)));
        spread(
            &mut loads,
            inst.k(),
            &(&m - &ll * int(ql.count_ones() as i64)),
        );
        classes.push(OutcomeClass {
            prob: p.clone(),
            open: inst.k() | q,
            loads,
            label: format!("case 2, q = {}", fmt_set(q)),
        });
    }
    Ok(ExperimentSpec {
        name: format!("D[l={}]", fmt_set(l)),
        clients: inst.m() as usize,
        classes,
    })
}

/// Per-facility reduction on `l − l'` in the case `q = F − k − l'`, chosen so
/// that it returns exactly the demand moved to `l − l'` in the first case.
pub fn star_shift(inst: &CflInstance, l: FacilitySet, lp: FacilitySet) -> Rational {
    let d = int((l & !lp).count_ones() as i64);
    let p2b = inst.p_case2() / super::instance::big(inst.num_q());
    inst.delta() * inst.p_case1() / (d * p2b)
}

/// The distribution `D*_{k,l}` built against `l'`.
pub fn dstar_spec(inst: &CflInstance, l: FacilitySet, lp: FacilitySet) -> Result<ExperimentSpec> {
    inst.check_l(l)?;
    inst.check_l(lp)?;
    if l == lp {
        return Err(Error::Input("l and l' coincide".into()));
    }
    check_enum(inst)?;
    let nf = inst.num_facilities();
    let m = inst.m_rat();
    let moved = l & !lp;
    let mut classes = Vec::new();
    let mut loads = vec![Rational::zero(); nf];
    spread(
        &mut loads,
        inst.k(),
        &(inst.capacity() * int(inst.n() as i64)),
    );
    spread(&mut loads, moved, &inst.delta());
    classes.push(OutcomeClass {
        prob: inst.p_case1(),
        open: inst.all() & !lp,
        loads,
        label: "case 1*".into(),
    });
    let p = inst.p_case2() / super::instance::big(inst.num_q());
    let ll = inst.load_l();
    let special = inst.others() & !lp;
    let eps = star_shift(inst, l, lp);
    for q in case2_subsets(inst, l) {
        let mut loads = vec![Rational::zero(); nf];
        let ql = q & l;
        let each = if q == special { &ll - &eps } else { ll.clone() };
        let on_l = &each * int(ql.count_ones() as i64);
        spread(&mut loads, ql, &on_l);
        spread(&mut loads, inst.k(), &(&m - &on_l));
        let label = if q == special {
            "case 2.b*".to_string()
        } else {
            format!("case 2.a*, q = {}", fmt_set(q))
        };
        classes.push(OutcomeClass {
            prob: p.clone(),
            open: inst.k() | q,
            loads,
            label,
        });
    }
    Ok(ExperimentSpec {
        name: format!("D*[l={}, l'={}]", fmt_set(l), fmt_set(lp)),
        clients: inst.m() as usize,
        classes,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub class: usize,
    pub label: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    /// No class of positive probability violates a constraint.
    pub feasible: bool,
    pub classes: usize,
    /// Classes of probability zero (checked, but not counted against
    /// feasibility).
    pub vacuous: usize,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn first_violation(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

fn class_violation(c: &OutcomeClass, inst: &CflInstance, m: &Rational) -> Option<String> {
    let mut total = Rational::zero();
    for (i, ld) in c.loads.iter().enumerate() {
        if ld.is_negative() {
            return Some(format!("facility {} load {} < 0", i + 1, fmt_rat(ld)));
        }
        if ld > inst.capacity() {
            return Some(format!(
                "facility {} load {} > U = {}",
                i + 1,
                fmt_rat(ld),
                fmt_rat(inst.capacity())
            ));
        }
        if !ld.is_zero() && c.open >> i & 1 == 0 {
            return Some(format!(
                "closed facility {} carries load {}",
                i + 1,
                fmt_rat(ld)
            ));
        }
        total += ld;
    }
    if &total != m {
        return Some(format!(
            "assigned demand {} differs from {}",
            fmt_rat(&total),
            fmt_rat(m)
        ));
    }
    None
}

/// Checks every class against the instance: nonnegative loads, capacity,
/// loads on open facilities only, all demand served.
pub fn verify_outcome_feasibility(spec: &ExperimentSpec, inst: &CflInstance) -> FeasibilityReport {
    let mut violations = Vec::new();
    let mut vacuous = 0;
    let mut feasible = true;
    for (idx, c) in spec.classes.iter().enumerate() {
        if c.prob.is_zero() {
            vacuous += 1;
        }
        if let Some(detail) = class_violation(c, inst, &spec.m()) {
            if !c.prob.is_zero() {
                feasible = false;
            }
            violations.push(Violation {
                class: idx,
                label: c.label.clone(),
                detail,
            });
        }
    }
    FeasibilityReport {
        feasible,
        classes: spec.classes.len(),
        vacuous,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::super::instance::{make_instance, set_of};
    use super::*;
    use crate::exactlp::ratio;

    fn sets() -> (FacilitySet, FacilitySet) {
        (set_of(&[5, 6, 7, 8, 9]), set_of(&[5, 6, 7, 8, 10]))
    }

    #[test]
    fn specs_are_distributions() {
        let inst = make_instance(5).unwrap();
        let (l, lp) = sets();
        let d = d_spec(&inst, l).unwrap();
        d.check_sanity().unwrap();
        let s = dstar_spec(&inst, l, lp).unwrap();
        s.check_sanity().unwrap();
        assert_eq!(s.classes.len(), 1 + (1024 - 32));
        assert_eq!(s.classes[0].prob, ratio(1, 3));
        assert_eq!(s.classes[0].loads[0], *inst.capacity());
    }

    #[test]
    fn feasibility_of_both_distributions() {
        let inst = make_instance(5).unwrap();
        let (l, lp) = sets();
        let r = verify_outcome_feasibility(&dstar_spec(&inst, l, lp).unwrap(), &inst);
        assert!(r.feasible, "{:?}", r.first_violation());
        let r = verify_outcome_feasibility(&d_spec(&inst, l).unwrap(), &inst);
        assert!(!r.feasible);
        let v = r.first_violation().unwrap();
        assert_eq!(v.class, 0);
        assert!(v.detail.contains("> U"));
    }

    #[test]
    fn vacuous_first_case_at_four() {
        let inst = make_instance(4).unwrap();
        let l = set_of(&[4, 5, 6, 7]);
        let lp = set_of(&[4, 5, 6, 8]);
        let r = verify_outcome_feasibility(&dstar_spec(&inst, l, lp).unwrap(), &inst);
        assert!(r.feasible);
        assert_eq!(r.vacuous, 1);
        let r = verify_outcome_feasibility(&d_spec(&inst, l).unwrap(), &inst);
        assert!(r.feasible);
        assert_eq!(r.violations[0].class, 0);
    }

    #[test]
    fn compiled_matches_plain() {
        let inst = make_instance(4).unwrap();
        let l = set_of(&[4, 5, 6, 7]);
        let lp = set_of(&[4, 5, 8, 9]);
        let s = dstar_spec(&inst, l, lp).unwrap();
        let c = s.compile();
        let keys = [
            ProductKey::pure([4]).unwrap(),
            ProductKey::pure([0, 4, 9]).unwrap(),
            ProductKey::mixed([4], inst.frac_index(0, 3)),
            ProductKey::mixed([8, 10], inst.frac_index(4, 0)),
            ProductKey::mixed([], inst.frac_index(6, 2)),
        ];
        for k in &keys {
            assert_eq!(c.expectation(k), s.expectation(k), "{k}");
        }
    }
}

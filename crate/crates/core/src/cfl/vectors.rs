use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::experiment::{dstar_spec, MAX_ENUM_N};
use super::instance::{big, members, CflInstance, FacilitySet};
use crate::exactlp::{int, Rational};
use crate::product::ProductKey;
use crate::{Error, Result};

/// How `E_{D_{k,l}}` is evaluated on a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Walk every second-case subset `q` (`n ≤ 10`).
    Enumerate,
    /// Closed-form subset counts.
    Counting,
    /// `Enumerate` up to `n = 10`, `Counting` above.
    Auto,
}

/// Second-case statistics over `q ⊇ A` with `q ∩ l ≠ ∅`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Counts {
    /// Number of such `q`.
    q: u128,
    /// Number that also contain the tagged facility (when it lies in `l`).
    with_i: u128,
    /// `Σ |q ∩ l|`.
    ql_sum: u128,
}

fn key_parts(inst: &CflInstance, key: &ProductKey) -> Result<(FacilitySet, Option<usize>)> {
    let nf = inst.num_facilities();
    if let Some(&i) = key.set().iter().find(|&&i| i >= nf) {
        return Err(Error::Input(format!(
            "facility {} out of range in {key}",
            i + 1
        )));
    }
    let set = key.set().iter().fold(0, |s, &i| s | 1 << i);
    let fac = match key.frac() {
        None => None,
        Some(f) if f < nf * inst.m() as usize => Some(inst.facility_of(f)),
        Some(_) => {
            return Err(Error::Input(format!(
                "assignment variable out of range in {key}"
            )))
        }
    };
    Ok((set, fac))
}

fn counts_enumerate(
    inst: &CflInstance,
    l: FacilitySet,
    a: FacilitySet,
    i: Option<usize>,
) -> Counts {
    let mut c = Counts {
        q: 0,
        with_i: 0,
        ql_sum: 0,
    };
    let n = inst.n();
    for t in 1u128..1 << (2 * n) {
        let q = t << n;
        if q & l == 0 || a & !q != 0 {
            continue;
        }
        c.q += 1;
        c.ql_sum += (q & l).count_ones() as u128;
        if let Some(i) = i {
            if q >> i & 1 == 1 {
                c.with_i += 1;
            }
        }
    }
    c
}

fn counts_closed(inst: &CflInstance, l: FacilitySet, a: FacilitySet, i: Option<usize>) -> Counts {
    let n = inst.n() as u32;
    let rest = inst.others() & !l;
    let a_l = (a & l).count_ones();
    let a_o = (a & rest).count_ones();
    let outside = 1u128 << (n - a_o);
    let q = if a_l > 0 {
        outside << (n - a_l)
    } else {
        outside * ((1u128 << n) - 1)
    };
    let with_i = match i {
        Some(i) => {
            let a2 = ((a | 1 << i) & l).count_ones();
            outside << (n - a2)
        }
        None => 0,
    };
    let free = n - a_l;
    let ql_sum = if free == 0 {
        outside * a_l as u128
    } else {
        outside * (a_l as u128 * (1u128 << free) + free as u128 * (1u128 << (free - 1)))
    };
    Counts { q, with_i, ql_sum }
}

/// `E_{D_{k,l}}[key]` with the chosen backend.
pub fn core_coord_with(
    inst: &CflInstance,
    l: FacilitySet,
    key: &ProductKey,
    backend: Backend,
) -> Result<Rational> {
    inst.check_l(l)?;
    let (set, fac) = key_parts(inst, key)?;
    let a = set & inst.others();
    let fac_in_l = fac.filter(|&i| l >> i & 1 == 1);
    let counts = match backend {
        Backend::Counting => counts_closed(inst, l, a, fac_in_l),
        Backend::Enumerate if inst.n() > MAX_ENUM_N => {
            return Err(Error::Capacity(format!(
                "enumeration over 2^{} subsets; use the counting backend",
                2 * inst.n()
            )))
        }
        Backend::Enumerate => counts_enumerate(inst, l, a, fac_in_l),
        Backend::Auto if inst.n() > MAX_ENUM_N => counts_closed(inst, l, a, fac_in_l),
        Backend::Auto => counts_enumerate(inst, l, a, fac_in_l),
    };
    let p_q = inst.p_case2() / big(inst.num_q());
    let case1_open = set & l == 0;
    let n = int(inst.n() as i64);
    let m = inst.m_rat();
    let v = match fac {
        None => {
            let c1 = if case1_open {
                inst.p_case1()
            } else {
                Rational::zero()
            };
            c1 + p_q * big(counts.q)
        }
        Some(i) if inst.k() >> i & 1 == 1 => {
            let c1 = if case1_open {
                inst.p_case1() / &n
            } else {
                Rational::zero()
            };
            let moved = &m * big(counts.q) - inst.load_l() * big(counts.ql_sum);
            c1 + p_q * moved / (n * m)
        }
        Some(i) if l >> i & 1 == 1 => p_q * big(counts.with_i) * inst.load_l() / m,
        Some(_) => Rational::zero(),
    };
    Ok(v)
}

/// `z_{k,l}(key) = E_{D_{k,l}}[key]`.
pub fn core_coord(inst: &CflInstance, l: FacilitySet, key: &ProductKey) -> Result<Rational> {
    core_coord_with(inst, l, key, Backend::Auto)
}

/// A core member evaluated lazily, coordinate by coordinate.
#[derive(Debug, Clone, Copy)]
pub struct CoreVector<'a> {
    pub inst: &'a CflInstance,
    pub l: FacilitySet,
    pub backend: Backend,
}

impl<'a> CoreVector<'a> {
    pub fn new(inst: &'a CflInstance, l: FacilitySet) -> Result<Self> {
        inst.check_l(l)?;
        Ok(CoreVector {
            inst,
            l,
            backend: Backend::Auto,
        })
    }

    pub fn get(&self, key: &ProductKey) -> Result<Rational> {
        core_coord_with(self.inst, self.l, key, self.backend)
    }

    pub fn dense(&self, keys: &[ProductKey]) -> Result<Vec<Rational>> {
        keys.iter().map(|k| self.get(k)).collect()
    }
}

/// `E_{D_{k,lc}}[key ∩ case 1]`: the first case opens `F − lc` and sends
/// `m/n` to each facility of `k`.
pub fn case1_term(inst: &CflInstance, lc: FacilitySet, key: &ProductKey) -> Result<Rational> {
    let (set, fac) = key_parts(inst, key)?;
    if set & lc != 0 {
        return Ok(Rational::zero());
    }
    Ok(match fac {
        None => inst.p_case1(),
        Some(i) if inst.k() >> i & 1 == 1 => inst.p_case1() / int(inst.n() as i64),
        Some(_) => Rational::zero(),
    })
}

/// Which rule of the exchange construction applies to a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarCase {
    /// `ℰ ⊆ F − l'` and `ℰ` meets `l − l'`.
    Add,
    /// `ℰ ⊆ F − l` and `ℰ` meets `l' − l`.
    Subtract,
    Unchanged,
}

pub fn star_case(l: FacilitySet, lp: FacilitySet, key: &ProductKey) -> StarCase {
    let e: FacilitySet = key.set().iter().fold(0, |s, &i| s | 1 << i);
    if e & lp == 0 && e & l & !lp != 0 {
        StarCase::Add
    } else if e & l == 0 && e & lp & !l != 0 {
        StarCase::Subtract
    } else {
        StarCase::Unchanged
    }
}

/// `z*_{k,l}(key)`, built from `z_{k,l}` against `l'`.
pub fn star_vector_coord(
    inst: &CflInstance,
    l: FacilitySet,
    lp: FacilitySet,
    key: &ProductKey,
) -> Result<Rational> {
    inst.check_l(lp)?;
    if l == lp {
        return Err(Error::Input("l and l' coincide".into()));
    }
    let z = core_coord(inst, l, key)?;
    Ok(match star_case(l, lp, key) {
        StarCase::Add => z + case1_term(inst, lp, key)?,
        StarCase::Subtract => z - case1_term(inst, l, key)?,
        StarCase::Unchanged => z,
    })
}

/// Two exact values that should agree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyCheck {
    pub key: ProductKey,
    pub left: Rational,
    pub right: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyReport {
    pub checked: usize,
    pub mismatches: Vec<KeyCheck>,
}

impl KeyReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn compare_all<F>(keys: &[ProductKey], f: F) -> Result<KeyReport>
where
    F: Fn(&ProductKey) -> Result<(Rational, Rational)> + Sync,
{
    let results: Vec<Result<Option<KeyCheck>>> = keys
        .par_iter()
        .map(|k| {
            let (left, right) = f(k)?;
            Ok((left != right).then(|| KeyCheck {
                key: k.clone(),
                left,
                right,
            }))
        })
        .collect();
    let mut mismatches = Vec::new();
    for r in results {
        if let Some(m) = r? {
            mismatches.push(m);
        }
    }
    Ok(KeyReport {
        checked: keys.len(),
        mismatches,
    })
}

/// `z*_{k,l}(key)` (left) against `E_{D*_{k,l}}[key]` (right), the latter by
/// summing over the explicit outcome classes.
pub fn verify_star_expectation(
    inst: &CflInstance,
    l: FacilitySet,
    lp: FacilitySet,
    keys: &[ProductKey],
) -> Result<KeyReport> {
    let spec = dstar_spec(inst, l, lp)?.compile();
    compare_all(keys, |k| {
        Ok((star_vector_coord(inst, l, lp, k)?, spec.expectation(k)))
    })
}

/// `z*_{k,l} + z*_{k,l'}` (left) against `z_{k,l} + z_{k,l'}` (right).
pub fn midpoint_identity(
    inst: &CflInstance,
    l: FacilitySet,
    lp: FacilitySet,
    keys: &[ProductKey],
) -> Result<KeyReport> {
    compare_all(keys, |k| {
        let left = star_vector_coord(inst, l, lp, k)? + star_vector_coord(inst, lp, l, k)?;
        let right = core_coord(inst, l, k)? + core_coord(inst, lp, k)?;
        Ok((left, right))
    })
}

/// Keys on which the pair identities are checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec {
    /// All pure keys with `1 ≤ |ℰ| ≤ max_pure`.
    pub max_pure: usize,
    /// Keys `ℰ·x_ij` for all facilities `i`, every listed client and
    /// `|ℰ| ≤ max_tagged`.
    pub max_tagged: usize,
    pub clients: Vec<u64>,
    /// Seeded keys with `|ℰ| > max_pure` and a random assignment tag.
    pub extra: usize,
    pub seed: u64,
}

impl WindowSpec {
    pub fn standard(inst: &CflInstance, seed: u64) -> Self {
        WindowSpec {
            max_pure: 3,
            max_tagged: 1,
            clients: vec![0, inst.m() - 1],
            extra: 200,
            seed,
        }
    }
}

fn subsets_up_to(nf: usize, max: usize, mut f: impl FnMut(&[usize])) {
    fn rec(start: usize, nf: usize, max: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        f(cur);
        if cur.len() == max {
            return;
        }
        for i in start..nf {
            cur.push(i);
            rec(i + 1, nf, max, cur, f);
            cur.pop();
        }
    }
    rec(0, nf, max, &mut Vec::new(), &mut f);
}

pub fn window(inst: &CflInstance, spec: &WindowSpec) -> Result<Vec<ProductKey>> {
    let nf = inst.num_facilities();
    if spec.clients.iter().any(|&j| j >= inst.m()) {
        return Err(Error::Input("client index out of range".into()));
    }
    let mut keys = Vec::new();
    subsets_up_to(nf, spec.max_pure, |s| {
        if !s.is_empty() {
            keys.push(ProductKey::pure(s.iter().copied()).expect("nonempty"));
        }
    });
    subsets_up_to(nf, spec.max_tagged, |s| {
        for i in 0..nf {
            for &j in &spec.clients {
                keys.push(ProductKey::mixed(s.iter().copied(), inst.frac_index(i, j)));
            }
        }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let all: Vec<usize> = (0..nf).collect();
    let lo = (spec.max_pure + 1).min(nf);
    for _ in 0..spec.extra {
        let size = rng.gen_range(lo..=nf);
        let set: Vec<usize> = all.choose_multiple(&mut rng, size).copied().collect();
        let i = rng.gen_range(0..nf);
        let j = rng.gen_range(0..inst.m());
        keys.push(ProductKey::mixed(set, inst.frac_index(i, j)));
    }
    Ok(keys)
}

/// The inequality
/// `Σ_{S⊆l} (−1)^{|S|} [Σ_{i∈F−k−l} Σ_j z(S·x_ij) − δ·z(S)] ≥ 0`,
/// with `z(∅) = 1`. It linearizes `∏_{i∈l}(1 − y_i)·(Σ x_{F−k−l} − δ) ≥ 0`,
/// which holds at every feasible point: with `l` closed, `k` absorbs at
/// most `nU = m − δ`.
pub fn exclusion_value<F>(inst: &CflInstance, l: FacilitySet, mut z: F) -> Result<Rational>
where
    F: FnMut(&ProductKey) -> Result<Rational>,
{
    inst.check_l(l)?;
    let ls = members(l);
    let rest = members(inst.others() & !l);
    let m = inst.m_rat();
    let mut total = Rational::zero();
    for mask in 0u64..1 << ls.len() {
        let s: Vec<usize> = (0..ls.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| ls[b])
            .collect();
        let mut term = Rational::zero();
        for &i in &rest {
            // Every client gives the same value.
            term += z(&ProductKey::mixed(s.iter().copied(), inst.frac_index(i, 0)))? * &m;
        }
        let zs = if s.is_empty() {
            Rational::one()
        } else {
            z(&ProductKey::pure(s.iter().copied())?)?
        };
        term -= inst.delta() * zs;
        if s.len() % 2 == 1 {
            total -= term;
        } else {
            total += term;
        }
    }
    Ok(total)
}

/// Exclusion value at `z_{k,l}`; negative means `z_{k,l}` lies outside the
/// canonical product relaxation.
pub fn core_exclusion(inst: &CflInstance, l: FacilitySet) -> Result<Rational> {
    exclusion_value(inst, l, |k| core_coord(inst, l, k))
}

pub fn excluded(value: &Rational) -> bool {
    value.is_negative()
}

#[cfg(test)]
mod tests {
    use super::super::experiment::d_spec;
    use super::super::instance::{expected_vector, make_instance, set_of};
    use super::*;
    use crate::exactlp::ratio;

    #[test]
    fn singletons_match_expected_vector() {
        for n in [4, 5, 6] {
            let inst = make_instance(n).unwrap();
            let l: FacilitySet = ((1 << n) - 1) << (n + 1);
            let ev = expected_vector(&inst, l).unwrap();
            for i in 0..inst.num_facilities() {
                let y = core_coord(&inst, l, &ProductKey::single(i)).unwrap();
                assert_eq!(y, ev.y[i]);
                let x =
                    core_coord(&inst, l, &ProductKey::mixed([], inst.frac_index(i, 1))).unwrap();
                assert_eq!(x, ev.x[i]);
            }
        }
    }

    #[test]
    fn backends_agree_with_outcome_sums() {
        for n in [4, 5] {
            let inst = make_instance(n).unwrap();
            let l: FacilitySet = set_of(&(n..2 * n).collect::<Vec<_>>());
            let spec = d_spec(&inst, l).unwrap();
            let keys = window(
                &inst,
                &WindowSpec {
                    max_pure: 2,
                    max_tagged: 1,
                    clients: vec![0],
                    extra: 40,
                    seed: 7,
                },
            )
            .unwrap();
            for k in &keys {
                let e = spec.expectation(k);
                assert_eq!(
                    core_coord_with(&inst, l, k, Backend::Enumerate).unwrap(),
                    e,
                    "{k}"
                );
                assert_eq!(
                    core_coord_with(&inst, l, k, Backend::Counting).unwrap(),
                    e,
                    "{k}"
                );
            }
            let all_l = ProductKey::pure(members(l)).unwrap();
            assert_eq!(
                core_coord(&inst, l, &all_l).unwrap(),
                spec.expectation(&all_l)
            );
        }
    }

    #[test]
    fn k_is_always_open() {
        let inst = make_instance(5).unwrap();
        let l = set_of(&[5, 6, 7, 8, 9]);
        assert!(core_coord(&inst, l, &ProductKey::single(2))
            .unwrap()
            .is_one());
        assert!(core_coord(&inst, l, &ProductKey::pure([0, 4]).unwrap())
            .unwrap()
            .is_one());
    }

    #[test]
    fn star_rules() {
        let inst = make_instance(5).unwrap();
        let l = set_of(&[5, 6, 7, 8, 9]);
        let lp = set_of(&[5, 6, 7, 8, 10]);
        // ℰ ⊆ k: unchanged.
        let key = ProductKey::pure([0, 1]).unwrap();
        assert_eq!(star_case(l, lp, &key), StarCase::Unchanged);
        assert_eq!(
            star_vector_coord(&inst, l, lp, &key).unwrap(),
            core_coord(&inst, l, &key).unwrap()
        );
        // i ∈ l − l' gains the first-case probability.
        let key = ProductKey::single(9);
        assert_eq!(
            star_vector_coord(&inst, l, lp, &key).unwrap(),
            core_coord(&inst, l, &key).unwrap() + inst.p_case1()
        );
        // i ∈ l' − l is open in the first case of D_{k,l}, so it loses it:
        // 1 − p₂/2 − p₁ = p₂/2.
        let key = ProductKey::single(10);
        assert_eq!(star_vector_coord(&inst, l, lp, &key).unwrap(), ratio(1, 3));
        assert!(star_vector_coord(&inst, l, l, &key).is_err());
    }

    #[test]
    fn exchange_identities_on_small_window() {
        let inst = make_instance(5).unwrap();
        let l = set_of(&[5, 6, 7, 8, 9]);
        let lp = set_of(&[10, 11, 7, 8, 9]);
        let keys = window(&inst, &WindowSpec::standard(&inst, 3)).unwrap();
        let r = verify_star_expectation(&inst, l, lp, &keys).unwrap();
        assert!(r.ok(), "{:?}", r.mismatches.first());
        let r = verify_star_expectation(&inst, lp, l, &keys).unwrap();
        assert!(r.ok(), "{:?}", r.mismatches.first());
        assert!(midpoint_identity(&inst, l, lp, &keys).unwrap().ok());
    }

    #[test]
    fn exclusion_certificate() {
        let inst = make_instance(5).unwrap();
        let l = set_of(&[5, 6, 7, 8, 9]);
        let v = core_exclusion(&inst, l).unwrap();
        assert_eq!(v, -(inst.p_case1() * inst.delta()));
        let spec =
            super::super::experiment::dstar_spec(&inst, l, set_of(&[5, 6, 7, 8, 10])).unwrap();
        for c in &spec.classes {
            let v = exclusion_value(&inst, l, |k| Ok(c.eval(k, spec.clients))).unwrap();
            assert!(!v.is_negative(), "{}", c.label);
        }
    }
}

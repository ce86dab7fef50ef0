use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::exactlp::{int, pow2, ratio, HPolyhedron, Rational, Row};
use crate::{Error, Result};

/// Facilities as a bit mask, bit `i` for facility `i` (0-based).
pub type FacilitySet = u128;

const MAX_N: usize = 42;

pub fn set_of(items: &[usize]) -> FacilitySet {
    items.iter().fold(0, |m, &i| m | 1 << i)
}

pub fn members(s: FacilitySet) -> Vec<usize> {
    (0..128).filter(|&i| s >> i & 1 == 1).collect()
}

/// `{6,7,8}` with 1-based facility numbers.
pub fn fmt_set(s: FacilitySet) -> String {
    let body: Vec<String> = members(s).iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", body.join(","))
}

/// Parses `6,7,8` (1-based) into a mask.
pub fn parse_set(text: &str) -> Result<FacilitySet> {
    let mut s: FacilitySet = 0;
    for part in text
        .trim()
        .trim_matches(|c| c == '{' || c == '}')
        .split(',')
    {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let i: usize = part
            .parse()
            .map_err(|_| Error::Input(format!("bad facility number `{part}`")))?;
        if i == 0 || i > 128 {
            return Err(Error::Input(format!("facility {i} out of range")));
        }
        s |= 1 << (i - 1);
    }
    Ok(s)
}

pub(crate) fn big(v: u128) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// The family `I(3n, n⁴+1, U, 1)`: facilities `0..n` form `k`, the other
/// `2n` facilities hold `l` and `l'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CflInstance {
    n: usize,
    m: u64,
    u: Rational,
}

pub fn make_instance(n: usize) -> Result<CflInstance> {
    if n < 4 {
        return Err(Error::Validity(format!(
            "n = {n}: the second-case probability 20/(n(n+1)) exceeds 1 below n = 4"
        )));
    }
    if n > MAX_N {
        return Err(Error::Capacity(format!("n = {n} exceeds {MAX_N}")));
    }
    let m = (n as u64).pow(4) + 1;
    let u = (int(m as i64) - pow2(-((n * n) as i64))) / int(n as i64);
    Ok(CflInstance { n, m, u })
}

impl CflInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of clients.
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn m_rat(&self) -> Rational {
        int(self.m as i64)
    }

    pub fn capacity(&self) -> &Rational {
        &self.u
    }

    pub fn num_facilities(&self) -> usize {
        3 * self.n
    }

    /// `2^{-n²}`, the demand `k` cannot absorb.
    pub fn delta(&self) -> Rational {
        pow2(-((self.n * self.n) as i64))
    }

    pub fn k(&self) -> FacilitySet {
        (1 << self.n) - 1
    }

    /// `F − k`.
    pub fn others(&self) -> FacilitySet {
        ((1 << (2 * self.n)) - 1) << self.n
    }

    pub fn all(&self) -> FacilitySet {
        self.k() | self.others()
    }

    /// Probability of the second case, `20/(n²(1+1/n))`.
    pub fn p_case2(&self) -> Rational {
        ratio(20, (self.n * (self.n + 1)) as i64)
    }

    pub fn p_case1(&self) -> Rational {
        Rational::one() - self.p_case2()
    }

    /// Number of subsets of `F − k` meeting a fixed `l`: `2^{2n} − 2^n`.
    pub fn num_q(&self) -> u128 {
        (1u128 << (2 * self.n)) - (1u128 << self.n)
    }

    /// `ȳ_i` for `i ∈ l`.
    pub fn y_bar_l(&self) -> Rational {
        let n = self.n as i64;
        self.p_case2() * pow2(n - 1) / (pow2(n) - Rational::one())
    }

    /// `Σ_j x̄_ij / ȳ_i` for `i ∈ l`: the load of an open `l` facility in
    /// the second case.
    pub fn load_l(&self) -> Rational {
        let n3 = int((self.n as i64).pow(3));
        self.m_rat() / (n3 * self.y_bar_l())
    }

    /// Column of `x_ij` among the fractional variables.
    pub fn frac_index(&self, i: usize, j: u64) -> usize {
        i * self.m as usize + j as usize
    }

    pub fn facility_of(&self, frac: usize) -> usize {
        frac / self.m as usize
    }

    /// A legal `l`: `n` facilities outside `k`.
    pub fn check_l(&self, l: FacilitySet) -> Result<()> {
        if l & !self.others() != 0 || l.count_ones() as usize != self.n {
            return Err(Error::Input(format!(
                "{} is not a set of {} facilities outside k",
                fmt_set(l),
                self.n
            )));
        }
        Ok(())
    }

    /// Every legal `l`, in increasing mask order. There are `C(2n, n)`.
    pub fn legal_sets(&self) -> Result<Vec<FacilitySet>> {
        if self.n > 12 {
            return Err(Error::Capacity(format!(
                "listing C({}, {}) sets",
                2 * self.n,
                self.n
            )));
        }
        let n = self.n;
        Ok((0u128..1 << (2 * n))
            .filter(|t| t.count_ones() as usize == n)
            .map(|t| t << n)
            .collect())
    }

    pub fn capacitated(&self) -> Result<CapacitatedInstance> {
        CapacitatedInstance::new(vec![self.u.clone(); 3 * self.n], self.m as usize)
    }
}

/// A facility location instance with unit demands and arbitrary
/// capacities, used for the small exact computations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacitatedInstance {
    pub capacities: Vec<Rational>,
    pub clients: usize,
}

impl CapacitatedInstance {
    pub fn new(capacities: Vec<Rational>, clients: usize) -> Result<Self> {
        if capacities.is_empty() {
            return Err(Error::Input("no facilities".into()));
        }
        if capacities.iter().any(|u| u < &Rational::zero()) {
            return Err(Error::Input("negative capacity".into()));
        }
        Ok(CapacitatedInstance {
            capacities,
            clients,
        })
    }

    pub fn facilities(&self) -> usize {
        self.capacities.len()
    }

    pub fn y_names(&self) -> Vec<String> {
        (1..=self.facilities()).map(|i| format!("y{i}")).collect()
    }

    pub fn x_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 1..=self.facilities() {
            for j in 1..=self.clients {
                out.push(format!("x{i}_{j}"));
            }
        }
        out
    }

    /// `y` names followed by `x` names.
    pub fn var_names(&self) -> Vec<String> {
        let mut v = self.y_names();
        v.extend(self.x_names());
        v
    }
}

/// The classic relaxation over `y_i` (integer) and `x_ij`:
/// `x_ij ≤ y_i`, `Σ_i x_ij = 1`, `Σ_j x_ij ≤ U_i y_i`, and the unit box.
pub fn classic_lp(inst: &CapacitatedInstance) -> Result<HPolyhedron> {
    let (nf, m) = (inst.facilities(), inst.clients);
    let dim = nf + nf * m;
    if dim.saturating_mul(nf * m + m + nf + 2 * dim) > 50_000_000 {
        return Err(Error::Capacity(format!("{nf} facilities and {m} clients")));
    }
    let xi = |i: usize, j: usize| nf + i * m + j;
    let unit = |idx: &[(usize, Rational)]| {
        let mut c = vec![Rational::zero(); dim];
        for (i, v) in idx {
            c[*i] = v.clone();
        }
        c
    };
    let one = Rational::one;
    let mut rows = Vec::new();
    for i in 0..nf {
        for j in 0..m {
            rows.push(Row::le(
                unit(&[(xi(i, j), one()), (i, -one())]),
                Rational::zero(),
            ));
        }
    }
    for j in 0..m {
        let terms: Vec<(usize, Rational)> = (0..nf).map(|i| (xi(i, j), one())).collect();
        rows.push(Row::eq(unit(&terms), one()));
    }
    for i in 0..nf {
        let mut terms: Vec<(usize, Rational)> = (0..m).map(|j| (xi(i, j), one())).collect();
        terms.push((i, -inst.capacities[i].clone()));
        rows.push(Row::le(unit(&terms), Rational::zero()));
    }
    for v in 0..dim {
        rows.push(Row::le(unit(&[(v, -one())]), Rational::zero()));
        rows.push(Row::le(unit(&[(v, one())]), one()));
    }
    HPolyhedron::with_rows(inst.var_names(), rows)
}

/// `(ȳ, x̄)` of the first distribution, with `x̄_ij` given per facility
/// (it does not depend on `j`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedVector {
    pub y: Vec<Rational>,
    pub x: Vec<Rational>,
}

pub fn expected_vector(inst: &CflInstance, l: FacilitySet) -> Result<ExpectedVector> {
    inst.check_l(l)?;
    let n = int(inst.n as i64);
    let inv_n2 = Rational::one() / (&n * &n);
    let mut y = Vec::with_capacity(inst.num_facilities());
    let mut x = Vec::with_capacity(inst.num_facilities());
    for i in 0..inst.num_facilities() {
        if inst.k() >> i & 1 == 1 {
            y.push(Rational::one());
            x.push((Rational::one() - &inv_n2) / &n);
        } else if l >> i & 1 == 1 {
            y.push(inst.y_bar_l());
            x.push(&inv_n2 / &n);
        } else {
            y.push(Rational::one() - inst.p_case2() / int(2));
            x.push(Rational::zero());
        }
    }
    Ok(ExpectedVector { y, x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_constants() {
        assert!(make_instance(3).is_err());
        let i4 = make_instance(4).unwrap();
        assert_eq!(i4.m(), 257);
        assert_eq!(*i4.capacity(), (int(257) - pow2(-16)) / int(4));
        assert_eq!(i4.p_case2(), Rational::one());
        let i5 = make_instance(5).unwrap();
        assert_eq!(i5.m(), 626);
        assert_eq!(i5.p_case1(), ratio(1, 3));
        assert!(*i5.capacity() > int(125) && *i5.capacity() < int(126));
        assert_eq!(i5.m_rat() - int(5) * i5.capacity(), i5.delta());
        assert_eq!(i5.legal_sets().unwrap().len(), 252);
    }

    #[test]
    fn expected_values_at_five() {
        let inst = make_instance(5).unwrap();
        let l = set_of(&[5, 6, 7, 8, 9]);
        let ev = expected_vector(&inst, l).unwrap();
        assert_eq!(ev.y[5], ratio(32, 93));
        assert_eq!(ev.x[0], ratio(24, 125));
        let col: Rational = ev.x.iter().sum();
        assert_eq!(col, Rational::one());
    }

    #[test]
    fn classic_lp_shape() {
        let inst = CapacitatedInstance::new(vec![int(1), int(1)], 1).unwrap();
        let p = classic_lp(&inst).unwrap();
        assert_eq!(p.dim(), 4);
        assert_eq!(p.num_rows(), 2 + 1 + 2 + 8);
        let open = [int(1), int(1), int(1), int(0)];
        assert!(p.contains_point(&open));
        let closed = [int(0), int(0), int(0), int(0)];
        assert!(!p.contains_point(&closed));
    }

    #[test]
    fn set_text_roundtrip() {
        let s = parse_set("6,7,8,9,10").unwrap();
        assert_eq!(fmt_set(s), "{6,7,8,9,10}");
        assert_eq!(s, set_of(&[5, 6, 7, 8, 9]));
    }
}

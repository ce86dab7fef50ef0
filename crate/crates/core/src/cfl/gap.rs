use num_traits::{One, Zero};

use super::instance::{expected_vector, CapacitatedInstance, CflInstance, FacilitySet};
use crate::exactlp::{int, pow2, solve_lp, HPolyhedron, LpStatus, Rational, Row, Sense};
use crate::{Error, Result};

/// Opening costs `f_i` and connection costs `c[i][j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CflObjective {
    pub opening: Vec<Rational>,
    pub connection: Vec<Vec<Rational>>,
}

impl CflObjective {
    /// `f·y + c·x` with `x` given per facility (the same for every client).
    pub fn cost_uniform(&self, y: &[Rational], x: &[Rational]) -> Rational {
        let mut total = Rational::zero();
        for (f, v) in self.opening.iter().zip(y) {
            total += f * v;
        }
        for (row, v) in self.connection.iter().zip(x) {
            let s: Rational = row.iter().sum();
            total += s * v;
        }
        total
    }
}

/// A violated `c_ij ≤ c_ij' + c_i'j' + c_i'j` as `(i, j, i', j')`.
pub fn metric_violation(c: &[Vec<Rational>]) -> Option<(usize, usize, usize, usize)> {
    // Identical rows and columns behave identically; test one of each.
    let mut rows: Vec<usize> = Vec::new();
    for i in 0..c.len() {
        if !rows.iter().any(|&r| c[r] == c[i]) {
            rows.push(i);
        }
    }
    let m = c.first().map_or(0, Vec::len);
    let mut cols: Vec<usize> = Vec::new();
    for j in 0..m {
        if !cols
            .iter()
            .any(|&s| rows.iter().all(|&i| c[i][s] == c[i][j]))
        {
            cols.push(j);
        }
    }
    for &i in &rows {
        for &j in &cols {
            for &i2 in &rows {
                for &j2 in &cols {
                    if c[i][j] > &c[i][j2] + &c[i2][j2] + &c[i2][j] {
                        return Some((i, j, i2, j2));
                    }
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapCertificate {
    pub objective: CflObjective,
    pub frac_cost: Rational,
    pub int_lb: Rational,
    /// `int_lb / frac_cost`.
    pub ratio: Rational,
    /// Why `int_lb` holds.
    pub argument: String,
}

/// Unit opening cost on `l`, zero elsewhere; `k`, `l` and the clients at one
/// point, `F − k − l` at distance `2^{n²}`.
pub fn gap_objective(inst: &CflInstance, l: FacilitySet) -> CflObjective {
    let far = pow2((inst.n() * inst.n()) as i64);
    let nf = inst.num_facilities();
    let rest = inst.others() & !l;
    let opening = (0..nf)
        .map(|i| {
            if l >> i & 1 == 1 {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .collect();
    let connection = (0..nf)
        .map(|i| {
            let d = if rest >> i & 1 == 1 {
                far.clone()
            } else {
                Rational::zero()
            };
            vec![d; inst.m() as usize]
        })
        .collect();
    CflObjective {
        opening,
        connection,
    }
}

pub fn gap_certificate(inst: &CflInstance, l: FacilitySet) -> Result<GapCertificate> {
    let ev = expected_vector(inst, l)?;
    let objective = gap_objective(inst, l);
    let frac_cost = objective.cost_uniform(&ev.y, &ev.x);
    let int_lb = Rational::one();
    Ok(GapCertificate {
        ratio: &int_lb / &frac_cost,
        objective,
        frac_cost,
        int_lb,
        argument: "an integer solution either opens a facility of l (cost >= 1) or sends \
                   m - nU = 2^(-n^2) demand to F-k-l at distance 2^(n^2) (cost >= 1)"
            .into(),
    })
}

/// `20·2^{n−1} / (n(1+1/n)(2^n − 1))`, the gap objective's value at the
/// expected vector.
pub fn frac_cost_closed(n: usize) -> Rational {
    let n = n as i64;
    int(20) * pow2(n - 1) / (int(n + 1) * (pow2(n) - Rational::one()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapRow {
    pub n: usize,
    pub frac_cost: Rational,
    pub ratio: Rational,
    /// `ratio · 10/(n+1)`, which tends to 1.
    pub normalized: Rational,
}

pub fn gap_table(from: usize, to: usize) -> Vec<GapRow> {
    (from..=to)
        .map(|n| {
            let frac_cost = frac_cost_closed(n);
            let ratio = Rational::one() / &frac_cost;
            let normalized = &ratio * int(10) / int(n as i64 + 1);
            GapRow {
                n,
                frac_cost,
                ratio,
                normalized,
            }
        })
        .collect()
}

/// First `n` in the table whose ratio exceeds 1.
pub fn first_gap_above_one(rows: &[GapRow]) -> Option<usize> {
    rows.iter().find(|r| r.ratio > Rational::one()).map(|r| r.n)
}

pub const MAX_EXACT_FACILITIES: usize = 12;

/// Minimum transportation cost with only `open` facilities, if the demand
/// fits.
fn transport(
    inst: &CapacitatedInstance,
    obj: &CflObjective,
    open: &[usize],
) -> Result<Option<Rational>> {
    let m = inst.clients;
    let names: Vec<String> = open
        .iter()
        .flat_map(|i| (0..m).map(move |j| format!("x{}_{}", i + 1, j + 1)))
        .collect();
    let dim = names.len();
    let mut rows = Vec::new();
    for j in 0..m {
        let mut c = vec![Rational::zero(); dim];
        for a in 0..open.len() {
            c[a * m + j] = Rational::one();
        }
        rows.push(Row::eq(c, Rational::one()));
    }
    for (a, &i) in open.iter().enumerate() {
        let mut c = vec![Rational::zero(); dim];
        for j in 0..m {
            c[a * m + j] = Rational::one();
        }
        rows.push(Row::le(c, inst.capacities[i].clone()));
    }
    for v in 0..dim {
        let mut c = vec![Rational::zero(); dim];
        c[v] = -Rational::one();
        rows.push(Row::le(c, Rational::zero()));
    }
    let poly = HPolyhedron::with_rows(names, rows)?;
    let cost: Vec<Rational> = open
        .iter()
        .flat_map(|&i| obj.connection[i].iter().cloned())
        .collect();
    let res = solve_lp(&poly, &cost, Sense::Min)?;
    Ok(match res.status {
        LpStatus::Optimal => res.objective,
        _ => None,
    })
}

/// Integer optimum by trying every set of open facilities.
pub fn integer_opt_exact(inst: &CapacitatedInstance, obj: &CflObjective) -> Result<Rational> {
    let nf = inst.facilities();
    if nf > MAX_EXACT_FACILITIES {
        return Err(Error::Capacity(format!(
            "{nf} facilities exceed {MAX_EXACT_FACILITIES}"
        )));
    }
    if obj.opening.len() != nf
        || obj.connection.len() != nf
        || obj.connection.iter().any(|r| r.len() != inst.clients)
    {
        return Err(Error::Dimension(
            "objective does not match the instance".into(),
        ));
    }
    let demand = int(inst.clients as i64);
    // With nonnegative connection costs a set can be skipped on its opening
    // cost alone.
    let prune = obj
        .connection
        .iter()
        .flatten()
        .all(|c| c >= &Rational::zero());
    let mut best: Option<Rational> = None;
    for mask in 0u32..1 << nf {
        let open: Vec<usize> = (0..nf).filter(|i| mask >> i & 1 == 1).collect();
        let cap: Rational = open.iter().map(|&i| inst.capacities[i].clone()).sum();
        if cap < demand {
            continue;
        }
        let opening: Rational = open.iter().map(|&i| obj.opening[i].clone()).sum();
        if prune && best.as_ref().is_some_and(|b| &opening >= b) {
            continue;
        }
        if let Some(t) = transport(inst, obj, &open)? {
            let v = opening + t;
            if best.as_ref().is_none_or(|b| &v < b) {
                best = Some(v);
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no set of facilities can serve the demand".into()))
}

#[cfg(test)]
mod tests {
    use super::super::instance::{make_instance, set_of};
    use super::*;
    use crate::exactlp::ratio;

    #[test]
    fn gap_at_five() {
        let inst = make_instance(5).unwrap();
        let g = gap_certificate(&inst, set_of(&[5, 6, 7, 8, 9])).unwrap();
        assert_eq!(g.frac_cost, ratio(160, 93));
        assert_eq!(g.ratio, ratio(93, 160));
        assert_eq!(g.frac_cost, frac_cost_closed(5));
        assert_eq!(metric_violation(&g.objective.connection), None);
    }

    #[test]
    fn metric_violation_found() {
        let c = vec![vec![int(0), int(10)], vec![int(1), int(1)]];
        assert!(metric_violation(&c).is_some());
    }

    #[test]
    fn table_trend() {
        let rows = gap_table(4, 32);
        let last = rows.last().unwrap();
        assert!(last.normalized > ratio(99, 100) && last.normalized < ratio(101, 100));
        // (n+1)(2^n − 1) > 20·2^{n−1} first holds at n = 10.
        assert_eq!(first_gap_above_one(&rows), Some(10));
    }

    #[test]
    fn integer_optimum_small() {
        let f = CflObjective {
            opening: vec![int(1), int(1)],
            connection: vec![vec![int(0)], vec![int(0)]],
        };
        let inst = CapacitatedInstance::new(vec![int(1), int(1)], 1).unwrap();
        assert_eq!(integer_opt_exact(&inst, &f).unwrap(), int(1));
        let f2 = CflObjective {
            opening: vec![int(1), int(1)],
            connection: vec![vec![int(0), int(0)], vec![int(0), int(0)]],
        };
        let inst = CapacitatedInstance::new(vec![int(1), int(1)], 2).unwrap();
        assert_eq!(integer_opt_exact(&inst, &f2).unwrap(), int(2));
        let f3 = CflObjective {
            opening: vec![int(1), int(1)],
            connection: vec![vec![int(0); 3], vec![int(0); 3]],
        };
        let inst = CapacitatedInstance::new(vec![int(1), int(1)], 3).unwrap();
        assert!(matches!(
            integer_opt_exact(&inst, &f3),
            Err(Error::Infeasible(_))
        ));
    }
}

//! Fourier-Motzkin projection and LP-based redundancy removal.

use std::collections::{BTreeMap, HashSet};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use super::simplex::feasible_point;
use super::{solve_lp, HPolyhedron, LpStatus, Rational, Relation, Row, Sense};
use crate::{Error, Result};

fn drop_column(row: &Row, j: usize) -> Row {
    let mut coeffs = row.coeffs.clone();
    coeffs.remove(j);
    Row {
        coeffs,
        rel: row.rel,
        rhs: row.rhs.clone(),
    }
}

/// One elimination step without pruning.
fn eliminate_rows(rows: &[Row], j: usize) -> Vec<Row> {
    if rows.iter().all(|r| r.coeffs[j].is_zero()) {
        return rows.iter().map(|r| drop_column(r, j)).collect();
    }
    if let Some(e) = rows
        .iter()
        .position(|r| r.rel == Relation::Eq && !r.coeffs[j].is_zero())
    {
        let pivot = &rows[e];
        let inv = pivot.coeffs[j].recip();
        return rows
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != e)
            .map(|(_, r)| {
                if r.coeffs[j].is_zero() {
                    return drop_column(r, j);
                }
                let f = &r.coeffs[j] * &inv;
                let coeffs = r
                    .coeffs
                    .iter()
                    .zip(&pivot.coeffs)
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, (a, p))| a - &f * p)
                    .collect();
                Row {
                    coeffs,
                    rel: r.rel,
                    rhs: &r.rhs - &f * &pivot.rhs,
                }
            })
            .collect();
    }
    let mut out = Vec::new();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for r in rows {
        let c = &r.coeffs[j];
        if c.is_zero() {
            out.push(drop_column(r, j));
        } else if c.is_positive() {
            pos.push(r);
        } else {
            neg.push(r);
        }
    }
    for p in &pos {
        for q in &neg {
            let a = -&q.coeffs[j];
            let b = p.coeffs[j].clone();
            let coeffs = p
                .coeffs
                .iter()
                .zip(&q.coeffs)
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, (x, y))| x * &a + y * &b)
                .collect();
            out.push(Row::le(coeffs, &p.rhs * &a + &q.rhs * &b).normalized());
        }
    }
    out
}

/// Eliminates `var`, returning the projection onto the remaining variables
/// with redundant rows removed.
pub fn fm_eliminate(poly: &HPolyhedron, var: &str) -> Result<HPolyhedron> {
    let j = poly
        .var_index(var)
        .map_err(|_| Error::Input(format!("unknown variable `{var}`")))?;
    let rows = eliminate_rows(poly.rows(), j);
    let mut vars = poly.vars().to_vec();
    vars.remove(j);
    let out = HPolyhedron::from_parts_unchecked(vars, rows);
    if poly.rows().iter().all(|r| r.coeffs[j].is_zero()) {
        return Ok(out);
    }
    Ok(remove_redundant(&out))
}

fn infeasible_marker(dim: usize, vars: Vec<String>) -> HPolyhedron {
    HPolyhedron::from_parts_unchecked(
        vars,
        vec![Row::le(vec![Rational::zero(); dim], -Rational::one())],
    )
}

/// Is `rows[i]` implied by the rows listed in `others`?
fn implied(vars: &[String], rows: &[Row], i: usize, others: &[usize]) -> bool {
    let sub = HPolyhedron::from_parts_unchecked(
        vars.to_vec(),
        others
            .iter()
            .filter(|&&k| k != i)
            .map(|&k| rows[k].clone())
            .collect(),
    );
    let row = &rows[i];
    let bound_holds = |sense: Sense| {
        let r = solve_lp(&sub, &row.coeffs, sense).expect("dimensions agree");
        match r.status {
            LpStatus::Optimal => {
                let v = r.objective.expect("optimal has objective");
                match sense {
                    Sense::Max => v <= row.rhs,
                    Sense::Min => v >= row.rhs,
                }
            }
            _ => false,
        }
    };
    match row.rel {
        Relation::Le => bound_holds(Sense::Max),
        Relation::Eq => bound_holds(Sense::Max) && bound_holds(Sense::Min),
    }
}

/// Returns an equivalent system in which no row is implied by the others.
/// Infeasible systems collapse to the single row `0 <= -1`.
pub fn remove_redundant(poly: &HPolyhedron) -> HPolyhedron {
    let vars = poly.vars().to_vec();
    let dim = poly.dim();
    if feasible_point(poly).expect("dimensions agree").is_none() {
        return infeasible_marker(dim, vars);
    }

    // Normalize, drop tautologies, and keep the tightest of parallel `<=` rows.
    let mut le: BTreeMap<Vec<Rational>, Rational> = BTreeMap::new();
    let mut le_order: Vec<Vec<Rational>> = Vec::new();
    let mut eqs: Vec<Row> = Vec::new();
    let mut seen_eq = HashSet::new();
    for r in poly.rows() {
        let n = r.normalized();
        if n.is_tautology() {
            continue;
        }
        match n.rel {
            Relation::Le => match le.get_mut(&n.coeffs) {
                Some(rhs) => {
                    if n.rhs < *rhs {
                        *rhs = n.rhs;
                    }
                }
                None => {
                    le_order.push(n.coeffs.clone());
                    le.insert(n.coeffs, n.rhs);
                }
            },
            Relation::Eq => {
                if seen_eq.insert(n.clone()) {
                    eqs.push(n);
                }
            }
        }
    }
    let mut rows: Vec<Row> = Vec::with_capacity(le_order.len() + eqs.len());
    for c in le_order {
        let rhs = le[&c].clone();
        rows.push(Row::le(c, rhs));
    }
    rows.extend(eqs);

    // Greedy prefilter, sparse rows first: a row implied by rows already
    // kept is implied by the full system and can go.
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&i| {
        (
            rows[i].rel == Relation::Le,
            rows[i].coeffs.iter().filter(|c| !c.is_zero()).count(),
        )
    });
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if rows[i].rel == Relation::Eq || !implied(&vars, &rows, i, &kept) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    let rows: Vec<Row> = kept.into_iter().map(|i| rows[i].clone()).collect();

    // Rows not implied by all others stay irredundant in every subsystem, so
    // only the candidates need the sequential pass.
    let all: Vec<usize> = (0..rows.len()).collect();
    let candidates: Vec<usize> = all
        .par_iter()
        .copied()
        .filter(|&i| implied(&vars, &rows, i, &all))
        .collect();
    let mut alive = vec![true; rows.len()];
    for i in candidates {
        let others: Vec<usize> = (0..rows.len()).filter(|&k| alive[k] && k != i).collect();
        if implied(&vars, &rows, i, &others) {
            alive[i] = false;
        }
    }
    let kept = rows
        .into_iter()
        .zip(alive)
        .filter_map(|(r, a)| a.then_some(r))
        .collect();
    HPolyhedron::from_parts_unchecked(vars, kept)
}

/// Projects onto the variables in `keep` (in that order), eliminating every
/// other variable. Variables occurring in equalities go first; otherwise the
/// variable with the fewest new combinations is chosen.
pub fn project_onto(poly: &HPolyhedron, keep: &[String]) -> Result<HPolyhedron> {
    for k in keep {
        poly.var_index(k)?;
    }
    let keep_set: HashSet<&str> = keep.iter().map(String::as_str).collect();
    let mut cur = poly.clone();
    loop {
        let elim: Vec<usize> = (0..cur.dim())
            .filter(|&j| !keep_set.contains(cur.vars()[j].as_str()))
            .collect();
        if elim.is_empty() {
            break;
        }
        let in_eq = elim.iter().copied().find(|&j| {
            cur.rows()
                .iter()
                .any(|r| r.rel == Relation::Eq && !r.coeffs[j].is_zero())
        });
        let j = in_eq.unwrap_or_else(|| {
            *elim
                .iter()
                .min_by_key(|&&j| {
                    let p = cur
                        .rows()
                        .iter()
                        .filter(|r| r.coeffs[j].is_positive())
                        .count();
                    let n = cur
                        .rows()
                        .iter()
                        .filter(|r| r.coeffs[j].is_negative())
                        .count();
                    (p * n) as i64 - (p + n) as i64
                })
                .expect("nonempty")
        });
        let name = cur.vars()[j].clone();
        cur = fm_eliminate(&cur, &name)?;
    }
    cur.reorder(keep)
}

/// Tests `inner ⊆ outer` by maximizing each row of `outer` over `inner`.
pub fn contains(outer: &HPolyhedron, inner: &HPolyhedron) -> Result<bool> {
    let outer_set: HashSet<&String> = outer.vars().iter().collect();
    let inner_set: HashSet<&String> = inner.vars().iter().collect();
    if outer_set != inner_set || outer.dim() != inner.dim() {
        return Err(Error::Input(format!(
            "variable lists differ: [{}] vs [{}]",
            outer.vars().join(" "),
            inner.vars().join(" ")
        )));
    }
    let inner = if inner.vars() == outer.vars() {
        inner.clone()
    } else {
        inner.reorder(outer.vars())?
    };
    if feasible_point(&inner)?.is_none() {
        return Ok(true);
    }
    let all: Vec<usize> = (0..inner.num_rows()).collect();
    let rows = outer.rows();
    Ok(rows.par_iter().enumerate().all(|(i, _)| {
        let mut combined: Vec<Row> = inner.rows().to_vec();
        combined.push(rows[i].clone());
        let last = combined.len() - 1;
        implied(inner.vars(), &combined, last, &all)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(s: &str) -> HPolyhedron {
        HPolyhedron::parse(s).unwrap()
    }

    fn same(a: &HPolyhedron, b: &HPolyhedron) -> bool {
        contains(a, b).unwrap() && contains(b, a).unwrap()
    }

    #[test]
    fn eliminate_simple() {
        let p = poly("vars: x y\n1 1 <= 1\n0 -1 <= 0\n-1 0 <= 0\n");
        let q = fm_eliminate(&p, "y").unwrap();
        assert_eq!(q.vars(), ["x"]);
        assert!(same(&q, &poly("vars: x\n1 <= 1\n-1 <= 0\n")));
        assert_eq!(q.num_rows(), 2);
    }

    #[test]
    fn eliminate_product_variable() {
        let p = poly(
            "vars: x1 x2 z\n\
             -1 0 1 <= 0\n0 -1 1 <= 0\n1 1 -1 <= 1\n0 0 -1 <= 0\n",
        );
        let q = fm_eliminate(&p, "z").unwrap();
        let box2 = poly("vars: x1 x2\n1 0 <= 1\n0 1 <= 1\n-1 0 <= 0\n0 -1 <= 0\n");
        assert!(same(&q, &box2));
        assert_eq!(q.num_rows(), 4);
    }

    #[test]
    fn eliminate_absent_variable_keeps_rows() {
        let p = poly("vars: x y\n1 0 <= 1\n1 0 <= 2\n");
        let q = fm_eliminate(&p, "y").unwrap();
        assert_eq!(q.to_string(), "vars: x\n1 <= 1\n1 <= 2\n");
        assert!(matches!(fm_eliminate(&p, "w"), Err(Error::Input(_))));
    }

    #[test]
    fn eliminate_through_equality() {
        let p = poly("vars: x y\n1 -1 == 0\n0 1 <= 3\n0 -1 <= 0\n");
        let q = fm_eliminate(&p, "y").unwrap();
        assert!(same(&q, &poly("vars: x\n1 <= 3\n-1 <= 0\n")));
    }

    #[test]
    fn redundancy() {
        let p = poly("vars: x\n1 <= 1\n1 <= 2\n");
        assert_eq!(remove_redundant(&p).to_string(), "vars: x\n1 <= 1\n");
        let p = poly("vars: x\n1 <= 1\n-1 <= 0\n1 <= 1\n");
        assert_eq!(remove_redundant(&p).num_rows(), 2);
        let p = poly("vars: x\n1 <= 0\n-1 <= -1\n");
        assert_eq!(remove_redundant(&p).to_string(), "vars: x\n0 <= -1\n");
        let p = poly("vars: x y\n1 0 <= 1\n0 1 <= 1\n1 1 <= 2\n");
        assert_eq!(remove_redundant(&p).num_rows(), 2);
    }

    #[test]
    fn containment() {
        let a = poly("vars: x\n1 <= 1\n-1 <= 0\n");
        let b = poly("vars: x\n2 <= 1\n-1 <= 0\n");
        assert!(contains(&a, &b).unwrap());
        assert!(!contains(&b, &a).unwrap());
        let c = poly("vars: y\n1 <= 1\n");
        assert!(contains(&a, &c).is_err());
        let empty = poly("vars: x\n1 <= -1\n-1 <= 0\n");
        assert!(contains(&b, &empty).unwrap());
        let line = poly("vars: x\n1 == 1/2\n");
        assert!(contains(&a, &line).unwrap());
        assert!(!contains(&line, &a).unwrap());
    }

    #[test]
    fn projection_order_independent() {
        let p =
            poly("vars: x a b\n1 1 1 <= 2\n-1 0 0 <= 0\n0 -1 0 <= 0\n0 0 -1 <= 0\n0 1 -1 == 0\n");
        let q = project_onto(&p, &["x".to_string()]).unwrap();
        assert!(same(&q, &poly("vars: x\n1 <= 2\n-1 <= 0\n")));
    }
}

use num_traits::{One, Zero};

use super::instance::{classic_lp, CapacitatedInstance};
use crate::exactlp::{contains, project_onto, HPolyhedron, Rational, Row};
use crate::hull::{conv_hull_hrep, mixed_integer_vertices, polytope_vertices};
use crate::{Error, Result};

pub const MAX_EXACT_EF_FACILITIES: usize = 12;
const MAX_DENSE_ENTRIES: usize = 50_000_000;

/// `1 + 2^N (1 + 3Nm + m + 2N) + N + Nm`.
pub fn exact_ef_row_count(nf: usize, m: usize) -> usize {
    1 + (1 << nf) * (1 + 3 * nf * m + m + 2 * nf) + nf + nf * m
}

fn pattern(o: usize, nf: usize) -> String {
    (0..nf)
        .map(|i| if o >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Disjunctive formulation over every set `O` of open facilities, with
/// selection variables `s_O` and copies `y^O`, `x^O`; the classic variables
/// `y`, `x` come first and equal the sums of the copies.
pub fn exact_ef(inst: &CapacitatedInstance) -> Result<HPolyhedron> {
    let (nf, m) = (inst.facilities(), inst.clients);
    if nf > MAX_EXACT_EF_FACILITIES {
        return Err(Error::Capacity(format!(
            "{nf} facilities exceed {MAX_EXACT_EF_FACILITIES}"
        )));
    }
    let block = 1 + nf + nf * m;
    let dim = nf + nf * m + (1 << nf) * block;
    if dim.saturating_mul(exact_ef_row_count(nf, m)) > MAX_DENSE_ENTRIES {
        return Err(Error::Capacity(format!(
            "{} rows over {dim} variables",
            exact_ef_row_count(nf, m)
        )));
    }
    let mut names = inst.var_names();
    for o in 0..1usize << nf {
        let p = pattern(o, nf);
        names.push(format!("s_{p}"));
        names.extend((1..=nf).map(|i| format!("y{i}_{p}")));
        for i in 1..=nf {
            names.extend((1..=m).map(|j| format!("x{i}_{j}_{p}")));
        }
    }
    let base = |o: usize| nf + nf * m + o * block;
    let s = |o: usize| base(o);
    let yo = |o: usize, i: usize| base(o) + 1 + i;
    let xo = |o: usize, i: usize, j: usize| base(o) + 1 + nf + i * m + j;
    let one = Rational::one;
    let row = |terms: &[(usize, Rational)]| {
        let mut c = vec![Rational::zero(); dim];
        for (v, a) in terms {
            c[*v] += a;
        }
        c
    };
    let mut rows = Vec::with_capacity(exact_ef_row_count(nf, m));
    rows.push(Row::eq(
        row(&(0..1 << nf).map(|o| (s(o), one())).collect::<Vec<_>>()),
        one(),
    ));
    for o in 0..1usize << nf {
        rows.push(Row::le(row(&[(s(o), -one())]), Rational::zero()));
        for i in 0..nf {
            for j in 0..m {
                rows.push(Row::le(
                    row(&[(xo(o, i, j), one()), (yo(o, i), -one())]),
                    Rational::zero(),
                ));
            }
        }
        for j in 0..m {
            let mut t: Vec<(usize, Rational)> = (0..nf).map(|i| (xo(o, i, j), one())).collect();
            t.push((s(o), -one()));
            rows.push(Row::eq(row(&t), Rational::zero()));
        }
        for i in 0..nf {
            for j in 0..m {
                rows.push(Row::le(row(&[(xo(o, i, j), -one())]), Rational::zero()));
                rows.push(Row::le(
                    row(&[(xo(o, i, j), one()), (s(o), -one())]),
                    Rational::zero(),
                ));
            }
        }
        for i in 0..nf {
            let mut t: Vec<(usize, Rational)> = (0..m).map(|j| (xo(o, i, j), one())).collect();
            t.push((yo(o, i), -inst.capacities[i].clone()));
            rows.push(Row::le(row(&t), Rational::zero()));
        }
        for i in 0..nf {
            if o >> i & 1 == 1 {
                rows.push(Row::eq(
                    row(&[(yo(o, i), one()), (s(o), -one())]),
                    Rational::zero(),
                ));
            } else {
                rows.push(Row::eq(row(&[(yo(o, i), one())]), Rational::zero()));
            }
        }
    }
    for i in 0..nf {
        let mut t: Vec<(usize, Rational)> = (0..1 << nf).map(|o| (yo(o, i), -one())).collect();
        t.push((i, one()));
        rows.push(Row::eq(row(&t), Rational::zero()));
    }
    for i in 0..nf {
        for j in 0..m {
            let mut t: Vec<(usize, Rational)> =
                (0..1 << nf).map(|o| (xo(o, i, j), -one())).collect();
            t.push((nf + i * m + j, one()));
            rows.push(Row::eq(row(&t), Rational::zero()));
        }
    }
    debug_assert_eq!(rows.len(), exact_ef_row_count(nf, m));
    HPolyhedron::with_rows(names, rows)
}

/// The exact formulation projected back onto `(y, x)` and compared with the
/// convex hull of the mixed-integer points of the classic relaxation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactEfReport {
    pub rows: usize,
    pub vars: usize,
    pub projection: HPolyhedron,
    pub hull: HPolyhedron,
    pub projection_in_hull: bool,
    pub hull_in_projection: bool,
    /// Vertices of the projection, and whether all have 0/1 `y`.
    pub vertices: Vec<Vec<Rational>>,
    pub integral_y: bool,
}

impl ExactEfReport {
    pub fn passed(&self) -> bool {
        self.projection_in_hull && self.hull_in_projection && self.integral_y
    }
}

pub fn exact_ef_check(inst: &CapacitatedInstance) -> Result<ExactEfReport> {
    let ef = exact_ef(inst)?;
    let names = inst.var_names();
    let projection = project_onto(&ef, &names)?;
    let classic = classic_lp(inst)?;
    let mut points = Vec::new();
    for (a, verts) in mixed_integer_vertices(&classic, &inst.y_names())? {
        for w in verts {
            let mut p = a.int_values();
            p.extend(w);
            points.push(p);
        }
    }
    let hull = conv_hull_hrep(&names, &points)?;
    let vertices = polytope_vertices(&projection)?;
    let nf = inst.facilities();
    let integral_y = vertices
        .iter()
        .all(|v| v[..nf].iter().all(|y| y.is_zero() || y.is_one()));
    Ok(ExactEfReport {
        rows: ef.num_rows(),
        vars: ef.dim(),
        projection_in_hull: contains(&hull, &projection)?,
        hull_in_projection: contains(&projection, &hull)?,
        projection,
        hull,
        vertices,
        integral_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlp::{feasible_point, int};

    #[test]
    fn shape_and_empty_block() {
        let inst = CapacitatedInstance::new(vec![int(1), int(1)], 1).unwrap();
        let p = exact_ef(&inst).unwrap();
        assert_eq!(p.num_rows(), exact_ef_row_count(2, 1));
        assert_eq!(p.dim(), 2 + 2 + 4 * 5);
        // Σ_i x^∅_ij = s^∅ with x^∅ ≤ y^∅ = 0 pins s^∅ to zero.
        let mut q = p.clone();
        let si = q.var_index("s_00").unwrap();
        let mut c = vec![Rational::zero(); q.dim()];
        c[si] = -Rational::one();
        q.push(Row::le(c, -crate::exactlp::ratio(1, 100))).unwrap();
        assert_eq!(feasible_point(&q).unwrap(), None);
        assert!(feasible_point(&p).unwrap().is_some());
    }

    #[test]
    fn projects_to_hull_small() {
        let inst = CapacitatedInstance::new(vec![int(1), int(1)], 1).unwrap();
        let r = exact_ef_check(&inst).unwrap();
        assert!(r.passed(), "{r:?}");
        let inst = CapacitatedInstance::new(vec![int(2), int(1)], 2).unwrap();
        let r = exact_ef_check(&inst).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.rows, exact_ef_row_count(2, 2));
    }
}

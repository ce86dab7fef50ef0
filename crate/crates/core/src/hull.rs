//! Integer points of small polyhedra, canonical product relaxations in vertex
//! form, and LP-based hull membership and conflict tests.

use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Zero};

use crate::exactlp::{
    feasible_point, fmt_rat, parse_rat, project_onto, solve_lp, solve_square, solve_standard,
    HPolyhedron, LpStatus, Rational, Row, Sense, StandardOutcome,
};
use crate::product::{all_keys, ProductKey};
use crate::{Error, Result};

pub const MAX_INTEGER_VARS: usize = 24;
const MAX_VERTEX_COMBINATIONS: u128 = 5_000_000;

/// Polytope given by its vertices over labelled coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VPolytope {
    labels: Vec<String>,
    vertices: Vec<Vec<Rational>>,
}

impl VPolytope {
    /// Builds a polytope, dropping repeated vertices (first occurrence kept).
    pub fn new(labels: Vec<String>, vertices: Vec<Vec<Rational>>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(vertices.len());
        for v in vertices {
            if v.len() != labels.len() {
                return Err(Error::Dimension(format!(
                    "vertex has {} entries, expected {}",
                    v.len(),
                    labels.len()
                )));
            }
            if seen.insert(v.clone()) {
                out.push(v);
            }
        }
        Ok(VPolytope {
            labels,
            vertices: out,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Restricts every vertex to the given labels, in that order.
    pub fn select(&self, labels: &[String]) -> Result<VPolytope> {
        let idx: Vec<usize> = labels
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::UnknownVariable(l.clone()))
            })
            .collect::<Result<_>>()?;
        VPolytope::new(
            labels.to_vec(),
            self.vertices
                .iter()
                .map(|v| idx.iter().map(|&i| v[i].clone()).collect())
                .collect(),
        )
    }

    /// Text format: `dims: l1 l2 …` then one vertex per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty input, expected `dims:` header"))?;
        let labels: Vec<String> = header
            .strip_prefix("dims:")
            .ok_or_else(|| Error::parse(1, "expected `dims:` header"))?
            .split_whitespace()
            .map(String::from)
            .collect();
        let mut vertices = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let v = line
                .split_whitespace()
                .map(|t| {
                    parse_rat(t).ok_or_else(|| Error::parse(i + 1, format!("bad number `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if v.len() != labels.len() {
                return Err(Error::parse(
                    i + 1,
                    format!("vertex has {} entries, expected {}", v.len(), labels.len()),
                ));
            }
            vertices.push(v);
        }
        VPolytope::new(labels, vertices)
    }
}

impl fmt::Display for VPolytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dims:")?;
        for l in &self.labels {
            write!(f, " {l}")?;
        }
        writeln!(f)?;
        for v in &self.vertices {
            let s: Vec<String> = v.iter().map(fmt_rat).collect();
            writeln!(f, "{}", s.join(" "))?;
        }
        Ok(())
    }
}

/// A point of a mixed integer set: 0/1 values on the integer variables and
/// a rational witness for the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerAssignment {
    pub ints: Vec<bool>,
    pub fracs: Vec<Rational>,
}

impl IntegerAssignment {
    pub fn int_values(&self) -> Vec<Rational> {
        self.ints
            .iter()
            .map(|&b| if b { Rational::one() } else { Rational::zero() })
            .collect()
    }
}

fn split_vars(poly: &HPolyhedron, integer_vars: &[String]) -> Result<(Vec<usize>, Vec<usize>)> {
    if integer_vars.len() > MAX_INTEGER_VARS {
        return Err(Error::Capacity(format!(
            "{} integer variables exceed {MAX_INTEGER_VARS}",
            integer_vars.len()
        )));
    }
    let ints: Vec<usize> = integer_vars
        .iter()
        .map(|n| poly.var_index(n))
        .collect::<Result<_>>()?;
    let set: HashSet<usize> = ints.iter().copied().collect();
    if set.len() != ints.len() {
        return Err(Error::Input("integer variable listed twice".into()));
    }
    let fracs = (0..poly.dim()).filter(|i| !set.contains(i)).collect();
    Ok((ints, fracs))
}

fn bit(b: bool) -> Rational {
    if b {
        Rational::one()
    } else {
        Rational::zero()
    }
}

/// Every 0/1 pattern on `integer_vars` whose restriction of `poly` is
/// feasible, in lexicographic order, each with a feasible fractional part.
pub fn enumerate_feasible_points(
    poly: &HPolyhedron,
    integer_vars: &[String],
) -> Result<Vec<IntegerAssignment>> {
    let (ints, _) = split_vars(poly, integer_vars)?;
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(ints.len());
    walk(poly, &ints, &mut prefix, &mut out)?;
    Ok(out)
}

fn walk(
    poly: &HPolyhedron,
    ints: &[usize],
    prefix: &mut Vec<bool>,
    out: &mut Vec<IntegerAssignment>,
) -> Result<()> {
    let fixed: Vec<(usize, Rational)> = prefix
        .iter()
        .enumerate()
        .map(|(k, &b)| (ints[k], bit(b)))
        .collect();
    let Some(w) = feasible_point(&poly.restrict(&fixed))? else {
        return Ok(());
    };
    if prefix.len() == ints.len() {
        out.push(IntegerAssignment {
            ints: prefix.clone(),
            fracs: w,
        });
        return Ok(());
    }
    for b in [false, true] {
        prefix.push(b);
        walk(poly, ints, prefix, out)?;
        prefix.pop();
    }
    Ok(())
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Vertices of a bounded polyhedron by trying every square subsystem of
/// tight rows. Sorted; errors when the polyhedron is unbounded.
pub fn polytope_vertices(poly: &HPolyhedron) -> Result<Vec<Vec<Rational>>> {
    let p = poly.dim();
    for j in 0..p {
        let mut e = vec![Rational::zero(); p];
        e[j] = Rational::one();
        for sense in [Sense::Max, Sense::Min] {
            if solve_lp(poly, &e, sense)?.status == LpStatus::Unbounded {
                return Err(Error::Input(format!(
                    "polyhedron is unbounded in `{}`",
                    poly.vars()[j]
                )));
            }
        }
    }
    if feasible_point(poly)?.is_none() {
        return Ok(Vec::new());
    }
    if p == 0 {
        return Ok(vec![Vec::new()]);
    }
    let rows: Vec<&Row> = poly.rows().iter().filter(|r| !r.is_trivial()).collect();
    if rows.len() < p {
        return Ok(Vec::new());
    }
    if binom(rows.len(), p) > MAX_VERTEX_COMBINATIONS {
        return Err(Error::Capacity(format!(
            "{} rows in dimension {p} give too many subsystems",
            rows.len()
        )));
    }
    let mut found = HashSet::new();
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        let m: Vec<Vec<Rational>> = idx.iter().map(|&i| rows[i].coeffs.clone()).collect();
        let b: Vec<Rational> = idx.iter().map(|&i| rows[i].rhs.clone()).collect();
        if let Some(x) = solve_square(&m, &b) {
            if poly.contains_point(&x) {
                found.insert(x);
            }
        }
        // next combination
        let mut k = p;
        while k > 0 && idx[k - 1] == rows.len() - p + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        idx[k - 1] += 1;
        for t in k..p {
            idx[t] = idx[t - 1] + 1;
        }
    }
    let mut v: Vec<Vec<Rational>> = found.into_iter().collect();
    v.sort();
    Ok(v)
}

/// Inequality description of `conv(points)` by projecting the convex
/// combination system onto `names`.
pub fn conv_hull_hrep(names: &[String], points: &[Vec<Rational>]) -> Result<HPolyhedron> {
    let d = names.len();
    let k = points.len();
    let mut vars: Vec<String> = names.to_vec();
    vars.extend((0..k).map(|i| format!("__lambda{i}")));
    let mut poly = HPolyhedron::new(vars)?;
    for (c, _) in names.iter().enumerate() {
        let mut coeffs = vec![Rational::zero(); d + k];
        coeffs[c] = Rational::one();
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::Dimension(format!(
                    "point has {} entries, expected {d}",
                    p.len()
                )));
            }
            coeffs[d + i] = -p[c].clone();
        }
        poly.push(Row::eq(coeffs, Rational::zero()))?;
    }
    let mut sum = vec![Rational::zero(); d + k];
    for s in sum.iter_mut().skip(d) {
        *s = Rational::one();
    }
    poly.push(Row::eq(sum, Rational::one()))?;
    for i in 0..k {
        let mut coeffs = vec![Rational::zero(); d + k];
        coeffs[d + i] = -Rational::one();
        poly.push(Row::le(coeffs, Rational::zero()))?;
    }
    project_onto(&poly, names)
}

/// Fiber vertices of `poly` at every feasible 0/1 pattern, over the
/// fractional variables in the polyhedron's order.
pub fn mixed_integer_vertices(
    poly: &HPolyhedron,
    integer_vars: &[String],
) -> Result<Vec<(IntegerAssignment, Vec<Vec<Rational>>)>> {
    let (ints, _) = split_vars(poly, integer_vars)?;
    let pts = enumerate_feasible_points(poly, integer_vars)?;
    pts.into_iter()
        .map(|a| {
            let fixed: Vec<(usize, Rational)> = ints
                .iter()
                .zip(&a.ints)
                .map(|(&i, &b)| (i, bit(b)))
                .collect();
            let fiber = poly.restrict(&fixed);
            let verts = polytope_vertices(&fiber)?;
            Ok((a, verts))
        })
        .collect()
}

/// `D̂ = conv{f(x) : x feasible}` in vertex form. With fractional variables
/// the images of all fiber vertices are used, so the result is exact.
pub fn canonical_product_relaxation(
    poly: &HPolyhedron,
    integer_vars: &[String],
) -> Result<VPolytope> {
    let (_, fracs) = split_vars(poly, integer_vars)?;
    let keys = all_keys(integer_vars.len(), fracs.len())?;
    let labels: Vec<String> = keys.iter().map(ProductKey::to_string).collect();
    let mut vertices = Vec::new();
    if fracs.is_empty() {
        for a in enumerate_feasible_points(poly, integer_vars)? {
            vertices.push(keys.iter().map(|k| k.eval(&a.ints, &[])).collect());
        }
    } else {
        for (a, verts) in mixed_integer_vertices(poly, integer_vars)? {
            for w in verts {
                vertices.push(keys.iter().map(|k| k.eval(&a.ints, &w)).collect());
            }
        }
    }
    VPolytope::new(labels, vertices)
}

fn check_dim(point: &[Rational], vp: &VPolytope) -> Result<()> {
    if point.len() != vp.dim() {
        return Err(Error::Dimension(format!(
            "point has {} entries, polytope has {}",
            point.len(),
            vp.dim()
        )));
    }
    Ok(())
}

fn standard_feasible(m: &[Vec<Rational>], h: &[Rational]) -> Option<Vec<Rational>> {
    let ncols = m.first().map_or(0, Vec::len);
    match solve_standard(m, h, &vec![Rational::zero(); ncols]) {
        StandardOutcome::Optimal { y, .. } => Some(y),
        _ => None,
    }
}

/// Convex combination weights expressing `point` over the vertices, if any.
pub fn hull_weights(point: &[Rational], vp: &VPolytope) -> Result<Option<Vec<Rational>>> {
    check_dim(point, vp)?;
    if vp.is_empty() {
        return Ok(None);
    }
    let nv = vp.len();
    let mut m: Vec<Vec<Rational>> = (0..vp.dim())
        .map(|c| vp.vertices().iter().map(|v| v[c].clone()).collect())
        .collect();
    m.push(vec![Rational::one(); nv]);
    let mut h = point.to_vec();
    h.push(Rational::one());
    Ok(standard_feasible(&m, &h))
}

pub fn in_hull(point: &[Rational], vp: &VPolytope) -> Result<bool> {
    Ok(hull_weights(point, vp)?.is_some())
}

/// `Σ λ_i s_i = point = Σ μ_j v_j` with both weight vectors convex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictWitness {
    pub lambda: Vec<Rational>,
    pub mu: Vec<Rational>,
    pub point: Vec<Rational>,
}

fn convex_combination(
    weights: &[Rational],
    pts: &[Vec<Rational>],
    dim: usize,
) -> Option<Vec<Rational>> {
    if weights.len() != pts.len()
        || weights.iter().any(|w| w < &Rational::zero())
        || weights.iter().fold(Rational::zero(), |a, w| a + w) != Rational::one()
    {
        return None;
    }
    let mut acc = vec![Rational::zero(); dim];
    for (w, p) in weights.iter().zip(pts) {
        if w.is_zero() {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(p) {
            *a += w * v;
        }
    }
    Some(acc)
}

impl ConflictWitness {
    /// Exact re-substitution of both convex combinations.
    pub fn verify(&self, s: &[Vec<Rational>], vp: &VPolytope) -> bool {
        let left = convex_combination(&self.lambda, s, vp.dim());
        let right = convex_combination(&self.mu, vp.vertices(), vp.dim());
        left.as_deref() == Some(&self.point[..]) && right.as_deref() == Some(&self.point[..])
    }
}

/// Joint LP for `conv(s) ∩ vp ≠ ∅` without checking the members of `s`.
pub fn find_conflict_witness(
    s: &[Vec<Rational>],
    vp: &VPolytope,
) -> Result<Option<ConflictWitness>> {
    for p in s {
        check_dim(p, vp)?;
    }
    if s.is_empty() || vp.is_empty() {
        return Ok(None);
    }
    let (k, nv, d) = (s.len(), vp.len(), vp.dim());
    let mut m: Vec<Vec<Rational>> = Vec::with_capacity(d + 2);
    for c in 0..d {
        let mut row: Vec<Rational> = s.iter().map(|p| p[c].clone()).collect();
        row.extend(vp.vertices().iter().map(|v| -v[c].clone()));
        m.push(row);
    }
    let mut ones_l = vec![Rational::one(); k];
    ones_l.extend(vec![Rational::zero(); nv]);
    let mut ones_m = vec![Rational::zero(); k];
    ones_m.extend(vec![Rational::one(); nv]);
    m.push(ones_l);
    m.push(ones_m);
    let mut h = vec![Rational::zero(); d];
    h.push(Rational::one());
    h.push(Rational::one());
    match standard_feasible(&m, &h) {
        Some(y) => {
            let lambda = y[..k].to_vec();
            let mu = y[k..].to_vec();
            let point = convex_combination(&lambda, s, d).expect("LP weights are convex");
            let w = ConflictWitness { lambda, mu, point };
            debug_assert!(w.verify(s, vp));
            Ok(Some(w))
        }
        None => Ok(None),
    }
}

/// Conflict test for a legal core subset: every member must lie outside
/// `vp`. Returns a verified witness when `conv(s)` meets `vp`.
pub fn is_conflicting(s: &[Vec<Rational>], vp: &VPolytope) -> Result<Option<ConflictWitness>> {
    for (i, p) in s.iter().enumerate() {
        if in_hull(p, vp)? {
            return Err(Error::Precondition(format!(
                "member {i} of the set lies inside the polytope"
            )));
        }
    }
    let w = find_conflict_witness(s, vp)?;
    if let Some(w) = &w {
        if !w.verify(s, vp) {
            return Err(Error::Infeasible(
                "conflict witness failed re-verification".into(),
            ));
        }
    }
    Ok(w)
}

/// Conflict test at a proposed combination: every member must lie outside
/// `vp`, and `Σ λ_i s_i` is then tested for membership in `vp`.
pub fn conflict_at(
    s: &[Vec<Rational>],
    lambda: &[Rational],
    vp: &VPolytope,
) -> Result<Option<ConflictWitness>> {
    for p in s {
        check_dim(p, vp)?;
    }
    let point = convex_combination(lambda, s, vp.dim())
        .ok_or_else(|| Error::Input("lambda is not a convex weight vector over the set".into()))?;
    for (i, p) in s.iter().enumerate() {
        if in_hull(p, vp)? {
            return Err(Error::Precondition(format!(
                "member {i} of the set lies inside the polytope"
            )));
        }
    }
    let Some(mu) = hull_weights(&point, vp)? else {
        return Ok(None);
    };
    let w = ConflictWitness {
        lambda: lambda.to_vec(),
        mu,
        point,
    };
    if !w.verify(s, vp) {
        return Err(Error::Infeasible(
            "conflict witness failed re-verification".into(),
        ));
    }
    Ok(Some(w))
}

/// Rows `0 <= x_i <= 1` for the given columns.
pub fn unit_box_rows(dim: usize, idx: &[usize]) -> Vec<Row> {
    let mut out = Vec::new();
    for &i in idx {
        let mut up = vec![Rational::zero(); dim];
        up[i] = Rational::one();
        out.push(Row::le(up, Rational::one()));
        let mut lo = vec![Rational::zero(); dim];
        lo[i] = -Rational::one();
        out.push(Row::le(lo, Rational::zero()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlp::{contains, int, ratio};

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn toy() -> HPolyhedron {
        let mut p = HPolyhedron::parse("vars: x1 x2\n1 1 <= 3/2\n").unwrap();
        for r in unit_box_rows(2, &[0, 1]) {
            p.push(r).unwrap();
        }
        p
    }

    #[test]
    fn enumerate_toy() {
        let pts = enumerate_feasible_points(&toy(), &names(&["x1", "x2"])).unwrap();
        let pats: Vec<Vec<bool>> = pts.into_iter().map(|a| a.ints).collect();
        assert_eq!(
            pats,
            vec![vec![false, false], vec![false, true], vec![true, false]]
        );
        let empty = HPolyhedron::parse("vars: x\n1 <= -1\n").unwrap();
        assert!(enumerate_feasible_points(&empty, &names(&["x"]))
            .unwrap()
            .is_empty());
        let many: Vec<String> = (0..25).map(|i| format!("x{i}")).collect();
        let big = HPolyhedron::new(many.clone()).unwrap();
        assert!(matches!(
            enumerate_feasible_points(&big, &many),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn dhat_toy() {
        let d = canonical_product_relaxation(&toy(), &names(&["x1", "x2"])).unwrap();
        assert_eq!(d.labels(), ["{1}", "{2}", "{1,2}"]);
        assert_eq!(
            d.vertices(),
            [
                vec![int(0), int(0), int(0)],
                vec![int(0), int(1), int(0)],
                vec![int(1), int(0), int(0)]
            ]
        );
        assert!(!in_hull(&[int(1), int(1), int(1)], &d).unwrap());
        assert!(in_hull(&[ratio(1, 2), ratio(1, 2), int(0)], &d).unwrap());
        for v in d.vertices() {
            assert!(in_hull(v, &d).unwrap());
        }
        assert!(in_hull(&[int(1)], &d).is_err());

        let single = HPolyhedron::parse("vars: a b\n1 0 == 1\n0 1 == 1\n").unwrap();
        let d = canonical_product_relaxation(&single, &names(&["a", "b"])).unwrap();
        assert_eq!(d.vertices(), [vec![int(1), int(1), int(1)]]);
        let empty = HPolyhedron::parse("vars: a\n1 <= -1\n").unwrap();
        assert!(canonical_product_relaxation(&empty, &names(&["a"]))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn mixed_dhat_uses_fiber_vertices() {
        // x in {0,1}, 0 <= w <= x
        let p =
            HPolyhedron::parse("vars: x w\n-1 1 <= 0\n0 -1 <= 0\n1 0 <= 1\n-1 0 <= 0\n").unwrap();
        let d = canonical_product_relaxation(&p, &names(&["x"])).unwrap();
        assert_eq!(d.labels(), ["{1}", "{}*w[1]", "{1}*w[1]"]);
        assert_eq!(d.len(), 3);
        assert!(in_hull(&[int(1), ratio(1, 2), ratio(1, 2)], &d).unwrap());
        assert!(!in_hull(&[int(0), ratio(1, 2), ratio(1, 2)], &d).unwrap());
    }

    #[test]
    fn conflicts() {
        let d = canonical_product_relaxation(&toy(), &names(&["x1", "x2"])).unwrap();
        let a = vec![int(1), int(1), int(1)];
        assert!(is_conflicting(std::slice::from_ref(&a), &d).unwrap().is_none());
        let b = vec![int(-1), int(-1), int(-1)];
        let w = is_conflicting(&[a.clone(), b.clone()], &d)
            .unwrap()
            .unwrap();
        assert!(w.verify(&[a.clone(), b], &d));
        assert_eq!(w.point, vec![int(0), int(0), int(0)]);
        let inside = vec![int(0), int(0), int(0)];
        assert!(matches!(
            is_conflicting(&[a, inside], &d),
            Err(Error::Precondition(m)) if m.contains("member 1")
        ));
    }

    #[test]
    fn vertices_and_hull_hrep() {
        let sq =
            HPolyhedron::parse("vars: a b\n1 0 <= 1\n-1 0 <= 0\n0 1 <= 1\n0 -1 <= 0\n1 1 <= 3/2\n")
                .unwrap();
        let v = polytope_vertices(&sq).unwrap();
        assert_eq!(v.len(), 5);
        let h = conv_hull_hrep(&names(&["a", "b"]), &v).unwrap();
        assert!(contains(&h, &sq).unwrap() && contains(&sq, &h).unwrap());
        let ray = HPolyhedron::parse("vars: a\n-1 <= 0\n").unwrap();
        assert!(polytope_vertices(&ray).is_err());
    }

    #[test]
    fn vpolytope_text() {
        let text = "dims: {1} {2}\n0 1/2\n1 0\n";
        let v = VPolytope::parse(text).unwrap();
        assert_eq!(v.to_string(), text);
        let dup = VPolytope::parse("dims: a\n1\n1\n").unwrap();
        assert_eq!(dup.len(), 1);
        assert!(matches!(
            VPolytope::parse("dims: a\n1 2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}

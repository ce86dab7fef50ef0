use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use super::coeffs::{parse_pattern, pattern_string};
use super::{
    fourier_coefficients, indicator_coefficients, ProductKey, SectionTable, SubstitutionMatrix,
};
use crate::exactlp::{
    contains, dot, fmt_rat, parse_rat, project_onto, solve_lp, HPolyhedron, LpStatus, Rational,
    Relation, Row, Sense,
};
use crate::hull::{conv_hull_hrep, enumerate_feasible_points};
use crate::{Error, Result};

/// `T[Q]`: the extended formulation with every auxiliary variable replaced
/// by an affine form in product variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub poly: HPolyhedron,
    /// Product key of each column of `poly`.
    pub keys: Vec<ProductKey>,
    pub substitution: SubstitutionMatrix,
    /// The original variables; they are the leading columns of `poly`.
    pub original: Vec<String>,
    pub d_x: usize,
}

impl Translation {
    /// The product-space image `f(x, w)` restricted to the columns of `T[Q]`.
    pub fn image(&self, x: &[bool], w: &[Rational]) -> Vec<Rational> {
        self.keys.iter().map(|k| k.eval(x, w)).collect()
    }
}

fn row_text(vars: &[String], r: &Row) -> String {
    let mut terms = Vec::new();
    for (v, c) in vars.iter().zip(&r.coeffs) {
        if !c.is_zero() {
            terms.push(format!("{}*{v}", fmt_rat(c)));
        }
    }
    if terms.is_empty() {
        terms.push("0".into());
    }
    let rel = match r.rel {
        Relation::Le => "<=",
        Relation::Eq => "==",
    };
    format!("{} {rel} {}", terms.join(" + "), fmt_rat(&r.rhs))
}

fn substitute(
    q: &HPolyhedron,
    original: Vec<String>,
    orig_keys: Vec<ProductKey>,
    a: SubstitutionMatrix,
    d_x: usize,
) -> Result<Translation> {
    let n_orig = orig_keys.len();
    let mut rows: Vec<(BTreeMap<ProductKey, Rational>, Relation, Rational)> = Vec::new();
    for r in q.rows() {
        let mut acc: BTreeMap<ProductKey, Rational> = BTreeMap::new();
        let mut rhs = r.rhs.clone();
        for k in 0..n_orig {
            if !r.coeffs[k].is_zero() {
                *acc.entry(orig_keys[k].clone())
                    .or_insert_with(Rational::zero) += &r.coeffs[k];
            }
        }
        for (i, b) in r.coeffs[n_orig..].iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            for (key, v) in &a.rows[i] {
                *acc.entry(key.clone()).or_insert_with(Rational::zero) += b * v;
            }
            rhs -= b * &a.constants[i];
        }
        acc.retain(|_, v| !v.is_zero());
        rows.push((acc, r.rel, rhs));
    }
    let mut extra: Vec<ProductKey> = rows
        .iter()
        .flat_map(|(acc, _, _)| acc.keys())
        .filter(|k| !orig_keys.contains(k))
        .cloned()
        .collect();
    extra.sort();
    extra.dedup();
    let mut keys = orig_keys;
    keys.extend(extra);
    let mut names = original.clone();
    names.extend(keys[n_orig..].iter().map(ProductKey::var_name));
    let col: BTreeMap<&ProductKey, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut poly = HPolyhedron::new(names)?;
    for (acc, rel, rhs) in rows {
        let mut coeffs = vec![Rational::zero(); keys.len()];
        for (k, v) in acc {
            coeffs[col[&k]] = v;
        }
        poly.push(Row { coeffs, rel, rhs })?;
    }
    Ok(Translation {
        poly,
        keys,
        substitution: a,
        original,
        d_x,
    })
}

/// Translates an extended formulation `Q(x, y)` (with `x` its first `d_x`
/// variables) along the section `g`. Every entry of `g` is checked against
/// `Q` first.
pub fn translate_ef(q: &HPolyhedron, d_x: usize, g: &SectionTable) -> Result<Translation> {
    if g.x_names != q.vars()[..d_x.min(q.dim())] || g.y_names != q.vars()[d_x.min(q.dim())..] {
        return Err(Error::Dimension(
            "section variables do not match the formulation".into(),
        ));
    }
    for (x, y) in &g.entries {
        let mut p: Vec<Rational> = x
            .iter()
            .map(|&b| Rational::from_integer((b as i64).into()))
            .collect();
        p.extend(y.iter().cloned());
        if let Some((i, r)) = q
            .rows()
            .iter()
            .enumerate()
            .find(|(_, r)| !r.is_satisfied_by(&p))
        {
            return Err(Error::Section(format!(
                "g({}) violates row {}: {}",
                pattern_string(x),
                i + 1,
                row_text(q.vars(), r)
            )));
        }
    }
    let a = fourier_coefficients(g)?;
    let orig_keys = (0..d_x).map(ProductKey::single).collect();
    substitute(q, g.x_names.clone(), orig_keys, a, d_x)
}

/// `y = coeffs·w + constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineForm {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
}

impl AffineForm {
    pub fn eval(&self, w: &[Rational]) -> Rational {
        dot(&self.coeffs, w) + &self.constant
    }
}

/// A mixed-linear section: for each 0/1 pattern, one affine form in `w`
/// per auxiliary variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedSectionTable {
    pub x_names: Vec<String>,
    pub w_names: Vec<String>,
    pub y_names: Vec<String>,
    pub entries: BTreeMap<Vec<bool>, Vec<AffineForm>>,
}

impl MixedSectionTable {
    /// Parses lines `x_1 … x_d -> b_1 … b_p c ; b_1 … b_p c ; …` with one
    /// group per auxiliary variable, in the order of `vars`.
    pub fn parse(text: &str, vars: &[String], d_x: usize, d_w: usize) -> Result<Self> {
        if d_x + d_w > vars.len() {
            return Err(Error::Dimension(
                "more original variables than columns".into(),
            ));
        }
        let mut t = MixedSectionTable {
            x_names: vars[..d_x].to_vec(),
            w_names: vars[d_x..d_x + d_w].to_vec(),
            y_names: vars[d_x + d_w..].to_vec(),
            entries: BTreeMap::new(),
        };
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
            let groups: Vec<&str> = if t.y_names.is_empty() && rhs.trim().is_empty() {
                Vec::new()
            } else {
                rhs.split(';').collect()
            };
            if groups.len() != t.y_names.len() {
                return Err(Error::parse(
                    lineno,
                    format!(
                        "{} affine forms, expected {}",
                        groups.len(),
                        t.y_names.len()
                    ),
                ));
            }
            let mut forms = Vec::new();
            for gtxt in groups {
                let mut nums = gtxt
                    .split_whitespace()
                    .map(|s| {
                        parse_rat(s)
                            .ok_or_else(|| Error::parse(lineno, format!("bad number `{s}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if nums.len() != d_w + 1 {
                    return Err(Error::parse(
                        lineno,
                        format!(
                            "affine form has {} numbers, expected {}",
                            nums.len(),
                            d_w + 1
                        ),
                    ));
                }
                let constant = nums.pop().expect("nonempty");
                forms.push(AffineForm {
                    coeffs: nums,
                    constant,
                });
            }
            if t.entries.insert(x, forms).is_some() {
                return Err(Error::parse(lineno, "duplicate point"));
            }
        }
        Ok(t)
    }
}

impl fmt::Display for MixedSectionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, forms) in &self.entries {
            let groups: Vec<String> = forms
                .iter()
                .map(|a| {
                    let mut s: Vec<String> = a.coeffs.iter().map(fmt_rat).collect();
                    s.push(fmt_rat(&a.constant));
                    s.join(" ")
                })
                .collect();
            writeln!(f, "{} -> {}", pattern_string(x), groups.join(" ; "))?;
        }
        Ok(())
    }
}

/// Substitution for a mixed-linear section: for each pattern `x'`,
/// `Σ_ℰ a^{x'}_ℰ (Σ_j b_j z_{ℰw_j} + c z_ℰ)` with `z_∅ = 1` and `z_{∅w_j} = w_j`.
pub fn mixed_substitution(g: &MixedSectionTable) -> Result<SubstitutionMatrix> {
    let ny = g.y_names.len();
    let mut rows: Vec<BTreeMap<ProductKey, Rational>> = vec![BTreeMap::new(); ny];
    let mut constants = vec![Rational::zero(); ny];
    for (x, forms) in &g.entries {
        let ind = indicator_coefficients(x)?;
        let mut terms: Vec<(Vec<usize>, Rational)> = ind
            .coeffs
            .iter()
            .map(|(k, a)| (k.set().to_vec(), a.clone()))
            .collect();
        if !ind.constant.is_zero() {
            terms.push((Vec::new(), ind.constant.clone()));
        }
        for (i, form) in forms.iter().enumerate() {
            for (set, a) in &terms {
                for (j, b) in form.coeffs.iter().enumerate() {
                    if !b.is_zero() {
                        *rows[i]
                            .entry(ProductKey::mixed(set.clone(), j))
                            .or_insert_with(Rational::zero) += a * b;
                    }
                }
                if !form.constant.is_zero() {
                    let v = a * &form.constant;
                    if set.is_empty() {
                        constants[i] += v;
                    } else {
                        *rows[i]
                            .entry(ProductKey::pure(set.clone())?)
                            .or_insert_with(Rational::zero) += v;
                    }
                }
            }
        }
    }
    for r in &mut rows {
        r.retain(|_, v| !v.is_zero());
    }
    Ok(SubstitutionMatrix {
        y_names: g.y_names.clone(),
        rows,
        constants,
    })
}

/// Translates `Q(x, w, y)` along a mixed-linear section. The section must
/// cover every pattern feasible for `domain` (default: the projection of
/// `Q` onto `(x, w)`) and be feasible on each of its fibers.
pub fn translate_mixed_ef(
    q: &HPolyhedron,
    d_x: usize,
    d_w: usize,
    g: &MixedSectionTable,
    domain: Option<&HPolyhedron>,
) -> Result<Translation> {
    if d_x + d_w > q.dim()
        || g.x_names != q.vars()[..d_x]
        || g.w_names != q.vars()[d_x..d_x + d_w]
        || g.y_names != q.vars()[d_x + d_w..]
    {
        return Err(Error::Dimension(
            "section variables do not match the formulation".into(),
        ));
    }
    let original: Vec<String> = q.vars()[..d_x + d_w].to_vec();
    let domain = match domain {
        Some(d) => d.reorder(&original)?,
        None => project_onto(q, &original)?,
    };
    for a in enumerate_feasible_points(&domain, &g.x_names)? {
        let Some(forms) = g.entries.get(&a.ints) else {
            return Err(Error::Input(format!(
                "no affine forms for feasible pattern {}",
                pattern_string(&a.ints)
            )));
        };
        let fixed: Vec<(usize, Rational)> = a.int_values().into_iter().enumerate().collect();
        let fiber = domain.restrict(&fixed);
        for (ri, r) in q.rows().iter().enumerate() {
            // Row restricted to the pattern, as an affine function of w.
            let mut alpha: Vec<Rational> = r.coeffs[d_x..d_x + d_w].to_vec();
            let mut beta = r.rhs.clone();
            for (k, &b) in a.ints.iter().enumerate() {
                if b {
                    beta -= &r.coeffs[k];
                }
            }
            for (i, form) in forms.iter().enumerate() {
                let c = &r.coeffs[d_x + d_w + i];
                if c.is_zero() {
                    continue;
                }
                for (al, b) in alpha.iter_mut().zip(&form.coeffs) {
                    *al += c * b;
                }
                beta -= c * &form.constant;
            }
            let senses: &[Sense] = match r.rel {
                Relation::Le => &[Sense::Max],
                Relation::Eq => &[Sense::Max, Sense::Min],
            };
            for &sense in senses {
                let res = solve_lp(&fiber, &alpha, sense)?;
                let ok = match res.status {
                    LpStatus::Optimal => {
                        let v = res.objective.expect("optimal");
                        match sense {
                            Sense::Max => v <= beta,
                            Sense::Min => v >= beta,
                        }
                    }
                    LpStatus::Infeasible => true,
                    LpStatus::Unbounded => false,
                };
                if !ok {
                    let w = res.point.unwrap_or_default();
                    let ws: Vec<String> = w.iter().map(fmt_rat).collect();
                    return Err(Error::Section(format!(
                        "g({}) at w = ({}) violates row {}: {}",
                        pattern_string(&a.ints),
                        ws.join(", "),
                        ri + 1,
                        row_text(q.vars(), r)
                    )));
                }
            }
        }
    }
    let a = mixed_substitution(g)?;
    let mut orig_keys: Vec<ProductKey> = (0..d_x).map(ProductKey::single).collect();
    orig_keys.extend((0..d_w).map(|j| ProductKey::mixed([], j)));
    substitute(q, original, orig_keys, a, d_x)
}

/// Both inclusions `conv(points) ⊆ proj(T[Q]) ⊆ proj(Q)` plus row-count
/// preservation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SandwichReport {
    pub rows_q: usize,
    pub rows_t: usize,
    pub upper: bool,
    pub lower: bool,
    pub images_feasible: bool,
    pub failure: Option<String>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.upper && self.lower && self.images_feasible && self.rows_q == self.rows_t
    }
}

/// Checks the inclusions on the given points of the original space
/// (integer part first, 0/1 valued).
pub fn check_sandwich(
    q: &HPolyhedron,
    t: &Translation,
    points: &[Vec<Rational>],
) -> Result<SandwichReport> {
    let proj_q = project_onto(q, &t.original)?;
    let proj_t = project_onto(&t.poly, &t.original)?;
    let upper = contains(&proj_q, &proj_t)?;
    let mut failure = None;
    if !upper {
        failure = Some("proj(T[Q]) is not contained in proj(Q)".to_string());
    }
    let mut images_feasible = true;
    for p in points {
        let x: Vec<bool> = p[..t.d_x].iter().map(|v| v.is_one()).collect();
        let img = t.image(&x, &p[t.d_x..]);
        if let Some((i, _)) = t
            .poly
            .rows()
            .iter()
            .enumerate()
            .find(|(_, r)| !r.is_satisfied_by(&img))
        {
            images_feasible = false;
            let ps: Vec<String> = p.iter().map(fmt_rat).collect();
            failure.get_or_insert(format!(
                "product image of ({}) violates row {} of T[Q]",
                ps.join(", "),
                i + 1
            ));
        }
    }
    let lower = contains(&proj_t, &conv_hull_hrep(&t.original, points)?)?;
    if !lower {
        failure.get_or_insert("conv of the feasible points is not inside proj(T[Q])".to_string());
    }
    Ok(SandwichReport {
        rows_q: q.num_rows(),
        rows_t: t.poly.num_rows(),
        upper,
        lower,
        images_feasible,
        failure,
    })
}

//! Two-phase fraction-free tableau simplex over exact rationals; Dantzig
//! pricing with a Bland fallback against cycling.
//!
//! [`solve_standard`] handles `min cᵀy, My = h, y ≥ 0` directly.
//! [`solve_lp`] handles polyhedra over free variables by solving the dual in
//! standard form; the dual has one equality row per variable, which keeps
//! tableaux small for the row-heavy systems produced by lifting and
//! projection.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{dot, HPolyhedron, Rational, Relation};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StandardOutcome {
    /// `duals` satisfy `c_j - dualsᵀM_j >= 0` for every column and
    /// `dualsᵀh = value`.
    Optimal {
        y: Vec<Rational>,
        value: Rational,
        duals: Vec<Rational>,
    },
    /// `farkasᵀM <= 0` componentwise and `farkasᵀh > 0`.
    Infeasible { farkas: Vec<Rational> },
    /// `y` feasible, `M ray = 0`, `ray >= 0`, `cᵀray < 0`.
    Unbounded {
        y: Vec<Rational>,
        ray: Vec<Rational>,
    },
}

/// Fraction-free tableau: the true entries are `rows[r][j] / det` and
/// `rhs[r] / det`, where `det > 0` is the determinant of the current basis
/// up to the initial row scaling. Pivots divide exactly, so no gcds are
/// taken inside the tableau. Reduced costs are kept as rationals.
struct Tableau {
    rows: Vec<Vec<BigInt>>,
    rhs: Vec<BigInt>,
    det: BigInt,
    basis: Vec<usize>,
    /// Reduced costs; `obj_rhs` holds minus the current objective value.
    reduced: Vec<Rational>,
    obj_rhs: Rational,
}

impl Tableau {
    fn entry(&self, r: usize, j: usize) -> Rational {
        Rational::new(self.rows[r][j].clone(), self.det.clone())
    }

    fn value(&self, r: usize) -> Rational {
        Rational::new(self.rhs[r].clone(), self.det.clone())
    }

    fn set_costs(&mut self, cost: &[Rational]) {
        self.reduced = cost.to_vec();
        self.obj_rhs = Rational::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            let f = cb / Rational::from_integer(self.det.clone());
            for (j, v) in self.rows[r].iter().enumerate() {
                if !v.is_zero() {
                    self.reduced[j] -= &f * v;
                }
            }
            self.obj_rhs -= &f * &self.rhs[r];
        }
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let a = self.rows[p][q].clone();
        let nz: Vec<usize> = (0..self.rows[p].len())
            .filter(|&j| !self.rows[p][j].is_zero())
            .collect();
        let prow = std::mem::take(&mut self.rows[p]);
        let prhs = std::mem::take(&mut self.rhs[p]);
        for r in 0..self.rows.len() {
            if r == p {
                continue;
            }
            let f = self.rows[r][q].clone();
            let row = &mut self.rows[r];
            if f.is_zero() {
                for v in row.iter_mut() {
                    if !v.is_zero() {
                        *v = &*v * &a / &self.det;
                    }
                }
                self.rhs[r] = &self.rhs[r] * &a / &self.det;
                continue;
            }
            for (j, v) in row.iter_mut().enumerate() {
                let pj = &prow[j];
                if pj.is_zero() {
                    if !v.is_zero() {
                        *v = &*v * &a / &self.det;
                    }
                } else {
                    *v = (&*v * &a - &f * pj) / &self.det;
                }
            }
            self.rhs[r] = (&self.rhs[r] * &a - &f * &prhs) / &self.det;
        }
        if !self.reduced[q].is_zero() {
            let f = &self.reduced[q] / Rational::from_integer(a.clone());
            for &j in &nz {
                self.reduced[j] -= &f * &prow[j];
            }
            if !prhs.is_zero() {
                self.obj_rhs -= &f * &prhs;
            }
        }
        self.rows[p] = prow;
        self.rhs[p] = prhs;
        self.det = a;
        if self.det.is_negative() {
            for row in self.rows.iter_mut() {
                for v in row.iter_mut() {
                    *v = -std::mem::take(v);
                }
            }
            for v in self.rhs.iter_mut() {
                *v = -std::mem::take(v);
            }
            self.det = -std::mem::take(&mut self.det);
        }
        self.basis[p] = q;
    }

    /// Pivots until optimal or unbounded; columns `>= allowed` never enter.
    /// Uses the most negative reduced cost, falling back to Bland's rule
    /// after a run of degenerate pivots until the objective moves again.
    /// Returns the unbounded entering column, if any.
    fn optimize(&mut self, allowed: usize) -> Option<usize> {
        const DEGENERATE_RUN: usize = 32;
        let mut stalled = 0usize;
        loop {
            let q = if stalled >= DEGENERATE_RUN {
                (0..allowed).find(|&j| self.reduced[j].is_negative())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..allowed {
                    if self.reduced[j].is_negative()
                        && best.is_none_or(|b| self.reduced[j] < self.reduced[b])
                    {
                        best = Some(j);
                    }
                }
                best
            };
            let q = q?;
            // Ratios rhs[r] / rows[r][q] share the factor det, so compare
            // the integer fractions by cross-multiplication.
            let mut best: Option<usize> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][q];
                if !a.is_positive() {
                    continue;
                }
                best = match best {
                    None => Some(r),
                    Some(br) => {
                        let lhs = &self.rhs[r] * &self.rows[br][q];
                        let rhs = &self.rhs[br] * a;
                        if lhs < rhs || (lhs == rhs && self.basis[r] < self.basis[br]) {
                            Some(r)
                        } else {
                            Some(br)
                        }
                    }
                };
            }
            match best {
                None => return Some(q),
                Some(p) => {
                    if self.rhs[p].is_zero() {
                        stalled += 1;
                    } else {
                        stalled = 0;
                    }
                    self.pivot(p, q);
                }
            }
        }
    }
}

/// Positive factor turning a rational row into a primitive integer row.
fn integer_scale(row: &[Rational], rhs: &Rational) -> Rational {
    let mut den = BigInt::one();
    let mut num = BigInt::zero();
    for v in row.iter().chain(std::iter::once(rhs)) {
        if !v.is_zero() {
            den = den.lcm(v.denom());
            num = num.gcd(v.numer());
        }
    }
    if num.is_zero() {
        return Rational::one();
    }
    Rational::new(den, num)
}

/// Solves `min cᵀy  s.t.  M y = h, y >= 0` exactly.
pub fn solve_standard(m: &[Vec<Rational>], h: &[Rational], c: &[Rational]) -> StandardOutcome {
    let nrows = m.len();
    let ncols = c.len();
    let total = ncols + nrows;
    // Each row is scaled to a primitive integer row with nonnegative
    // right-hand side; `sigma` undoes this for duals and certificates.
    let mut sigma = Vec::with_capacity(nrows);
    let mut rows = Vec::with_capacity(nrows);
    let mut rhs = Vec::with_capacity(nrows);
    for (r, (mrow, hr)) in m.iter().zip(h).enumerate() {
        debug_assert_eq!(mrow.len(), ncols);
        let mut scale = integer_scale(mrow, hr);
        if hr.is_negative() {
            scale = -scale;
        }
        let mut row: Vec<BigInt> = Vec::with_capacity(total);
        row.extend(mrow.iter().map(|v| (v * &scale).to_integer()));
        row.extend((0..nrows).map(|k| {
            if k == r {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        }));
        rows.push(row);
        rhs.push((hr * &scale).to_integer());
        sigma.push(scale);
    }
    let mut t = Tableau {
        rows,
        rhs,
        det: BigInt::one(),
        basis: (ncols..total).collect(),
        reduced: Vec::new(),
        obj_rhs: Rational::zero(),
    };

    let phase1: Vec<Rational> = (0..total)
        .map(|j| {
            if j < ncols {
                Rational::zero()
            } else {
                Rational::one()
            }
        })
        .collect();
    t.set_costs(&phase1);
    let unbounded = t.optimize(total);
    debug_assert!(unbounded.is_none(), "phase one is bounded below by zero");
    let infeasibility = -t.obj_rhs.clone();
    if infeasibility.is_positive() {
        let farkas = (0..nrows)
            .map(|r| (Rational::one() - &t.reduced[ncols + r]) * &sigma[r])
            .collect();
        return StandardOutcome::Infeasible { farkas };
    }

    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are linearly dependent and stay inert.
    for r in 0..nrows {
        if t.basis[r] >= ncols {
            if let Some(j) = (0..ncols).find(|&j| !t.rows[r][j].is_zero()) {
                t.pivot(r, j);
            }
        }
    }

    let phase2: Vec<Rational> = (0..total)
        .map(|j| {
            if j < ncols {
                c[j].clone()
            } else {
                Rational::zero()
            }
        })
        .collect();
    t.set_costs(&phase2);
    let unbounded = t.optimize(ncols);

    let mut y = vec![Rational::zero(); ncols];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < ncols {
            y[b] = t.value(r);
        }
    }
    if let Some(q) = unbounded {
        let mut ray = vec![Rational::zero(); ncols];
        ray[q] = Rational::one();
        for (r, &b) in t.basis.iter().enumerate() {
            if b < ncols {
                ray[b] = -t.entry(r, q);
            }
        }
        return StandardOutcome::Unbounded { y, ray };
    }
    let duals = (0..nrows)
        .map(|r| -(&t.reduced[ncols + r]) * &sigma[r])
        .collect();
    StandardOutcome::Optimal {
        y,
        value: -t.obj_rhs,
        duals,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Outcome of [`solve_lp`].
///
/// * optimal: `point` attains `objective`, and `certificate` holds one
///   multiplier per row whose combination is the objective with right-hand
///   side the optimum (nonnegative on `<=` rows when maximizing,
///   nonpositive when minimizing).
/// * infeasible: `certificate` holds one multiplier per row (nonnegative on
///   `<=` rows) whose combination reads `0 <= -1`.
/// * unbounded: `point` is feasible and `certificate` is an improving ray.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpResult {
    pub status: LpStatus,
    pub point: Option<Vec<Rational>>,
    pub objective: Option<Rational>,
    pub certificate: Option<Vec<Rational>>,
}

impl LpResult {
    /// Re-checks the result against the problem by exact re-multiplication.
    pub fn verify(&self, poly: &HPolyhedron, objective: &[Rational], sense: Sense) -> bool {
        match self.status {
            LpStatus::Optimal => {
                let (Some(x), Some(v)) = (&self.point, &self.objective) else {
                    return false;
                };
                if !poly.contains_point(x) || dot(objective, x) != *v {
                    return false;
                }
                let Some(y) = &self.certificate else {
                    return false;
                };
                if y.len() != poly.num_rows() {
                    return false;
                }
                let mut combo = vec![Rational::zero(); poly.dim()];
                let mut rhs = Rational::zero();
                for (row, m) in poly.rows().iter().zip(y) {
                    let wrong_sign = match sense {
                        Sense::Max => m.is_negative(),
                        Sense::Min => m.is_positive(),
                    };
                    if row.rel == Relation::Le && wrong_sign {
                        return false;
                    }
                    for (acc, c) in combo.iter_mut().zip(&row.coeffs) {
                        *acc += m * c;
                    }
                    rhs += m * &row.rhs;
                }
                combo == objective && rhs == *v
            }
            LpStatus::Infeasible => {
                let Some(y) = &self.certificate else {
                    return false;
                };
                if y.len() != poly.num_rows() {
                    return false;
                }
                let mut combo = vec![Rational::zero(); poly.dim()];
                let mut rhs = Rational::zero();
                for (row, m) in poly.rows().iter().zip(y) {
                    if row.rel == Relation::Le && m.is_negative() {
                        return false;
                    }
                    for (acc, c) in combo.iter_mut().zip(&row.coeffs) {
                        *acc += m * c;
                    }
                    rhs += m * &row.rhs;
                }
                combo.iter().all(Zero::is_zero) && rhs == -Rational::one()
            }
            LpStatus::Unbounded => {
                let (Some(x), Some(d)) = (&self.point, &self.certificate) else {
                    return false;
                };
                if !poly.contains_point(x) {
                    return false;
                }
                let improves = match sense {
                    Sense::Max => dot(objective, d).is_positive(),
                    Sense::Min => dot(objective, d).is_negative(),
                };
                improves
                    && poly.rows().iter().all(|r| {
                        let a = dot(&r.coeffs, d);
                        match r.rel {
                            Relation::Le => !a.is_positive(),
                            Relation::Eq => a.is_zero(),
                        }
                    })
            }
        }
    }
}

/// Optimizes a linear objective over `poly` (variables are free).
pub fn solve_lp(poly: &HPolyhedron, objective: &[Rational], sense: Sense) -> Result<LpResult> {
    let n = poly.dim();
    if objective.len() != n {
        return Err(Error::Dimension(format!(
            "objective has {} entries, polyhedron has {} variables",
            objective.len(),
            n
        )));
    }
    let c: Vec<Rational> = match sense {
        Sense::Max => objective.to_vec(),
        Sense::Min => objective.iter().map(|v| -v).collect(),
    };

    // Dual columns: one per `<=` row, two (±) per equality.
    let mut col_row: Vec<(usize, bool)> = Vec::new();
    for (i, r) in poly.rows().iter().enumerate() {
        col_row.push((i, false));
        if r.rel == Relation::Eq {
            col_row.push((i, true));
        }
    }
    let mut m = vec![vec![Rational::zero(); col_row.len()]; n];
    let mut cost = Vec::with_capacity(col_row.len());
    for (j, &(i, neg)) in col_row.iter().enumerate() {
        let row = &poly.rows()[i];
        for (v, a) in row.coeffs.iter().enumerate() {
            if !a.is_zero() {
                m[v][j] = if neg { -a } else { a.clone() };
            }
        }
        cost.push(if neg { -&row.rhs } else { row.rhs.clone() });
    }

    let to_row_multipliers = |ray: &[Rational]| -> Vec<Rational> {
        let mut y = vec![Rational::zero(); poly.num_rows()];
        for (j, &(i, neg)) in col_row.iter().enumerate() {
            if neg {
                y[i] -= &ray[j];
            } else {
                y[i] += &ray[j];
            }
        }
        let b = dot(
            &y,
            &poly
                .rows()
                .iter()
                .map(|r| r.rhs.clone())
                .collect::<Vec<_>>(),
        );
        debug_assert!(b.is_negative());
        let scale = -b.recip();
        y.iter().map(|v| v * &scale).collect()
    };

    let sign = |v: Rational| match sense {
        Sense::Max => v,
        Sense::Min => -v,
    };

    match solve_standard(&m, &c, &cost) {
        StandardOutcome::Optimal { y, value, duals } => {
            let mut mult = vec![Rational::zero(); poly.num_rows()];
            for (j, &(i, neg)) in col_row.iter().enumerate() {
                if neg {
                    mult[i] -= &y[j];
                } else {
                    mult[i] += &y[j];
                }
            }
            Ok(LpResult {
                status: LpStatus::Optimal,
                point: Some(duals),
                objective: Some(sign(value)),
                certificate: Some(mult.into_iter().map(sign).collect()),
            })
        }
        StandardOutcome::Unbounded { ray, .. } => Ok(LpResult {
            status: LpStatus::Infeasible,
            point: None,
            objective: None,
            certificate: Some(to_row_multipliers(&ray)),
        }),
        StandardOutcome::Infeasible { farkas } => {
            // Dual infeasible: `farkas` is an improving direction. The primal
            // is unbounded when feasible.
            let zeros = vec![Rational::zero(); n];
            match solve_standard(&m, &zeros, &cost) {
                StandardOutcome::Optimal { duals, .. } => Ok(LpResult {
                    status: LpStatus::Unbounded,
                    point: Some(duals),
                    objective: None,
                    certificate: Some(farkas),
                }),
                StandardOutcome::Unbounded { ray, .. } => Ok(LpResult {
                    status: LpStatus::Infeasible,
                    point: None,
                    objective: None,
                    certificate: Some(to_row_multipliers(&ray)),
                }),
                StandardOutcome::Infeasible { .. } => {
                    unreachable!("the zero vector is dual feasible for a zero objective")
                }
            }
        }
    }
}

/// Feasibility test returning a point when one exists.
pub fn feasible_point(poly: &HPolyhedron) -> Result<Option<Vec<Rational>>> {
    let zeros = vec![Rational::zero(); poly.dim()];
    let r = solve_lp(poly, &zeros, Sense::Max)?;
    Ok(match r.status {
        LpStatus::Infeasible => None,
        _ => r.point,
    })
}

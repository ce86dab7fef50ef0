//! Cores, conflict hypergraphs and the size lower bounds they certify.
//!
//! A core is a set of points outside the canonical product relaxation
//! `D̂`, each optionally tagged with an objective showing it is
//! gap-inducing. A subset is conflicting when its convex hull meets `D̂`;
//! any valid relaxation must separate every core point, so no single
//! facet handles a conflicting set, and the chromatic number of the
//! conflict hypergraph bounds the number of facets from below.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::exactlp::{dot, fmt_rat, Rational};
use crate::hull::{find_conflict_witness, in_hull, ConflictWitness, VPolytope};
use crate::product::ProductKey;
use crate::{Error, Result};

/// Objective under which a core point beats the integer optimum by more
/// than a factor `rho` (minimization: `w·z < Opt / rho`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapTag {
    pub objective: Vec<Rational>,
    pub frac_value: Rational,
    pub int_opt: Rational,
}

impl GapTag {
    pub fn holds(&self, rho: &Rational) -> bool {
        &self.frac_value * rho < self.int_opt
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Core {
    pub label: String,
    pub keys: Vec<String>,
    pub points: Vec<Vec<Rational>>,
    pub gap_tags: Vec<Option<GapTag>>,
}

impl Core {
    pub fn new(
        label: impl Into<String>,
        keys: Vec<String>,
        points: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.len() != keys.len()) {
            return Err(Error::Dimension(format!(
                "core point has {} entries for {} keys",
                p.len(),
                keys.len()
            )));
        }
        let gap_tags = vec![None; points.len()];
        Ok(Core {
            label: label.into(),
            keys,
            points,
            gap_tags,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Attaches `objective` to point `i`, evaluating it there.
    pub fn tag(&mut self, i: usize, objective: Vec<Rational>, int_opt: Rational) -> Result<()> {
        if objective.len() != self.keys.len() {
            return Err(Error::Dimension(
                "objective length differs from the key count".into(),
            ));
        }
        let frac_value = dot(&objective, &self.points[i]);
        self.gap_tags[i] = Some(GapTag {
            objective,
            frac_value,
            int_opt,
        });
        Ok(())
    }
}

/// `w` over the original variables, placed on the singleton product keys:
/// index `i < d_x` goes to `{i}`, index `d_x + j` to `∅·w_j`.
pub fn embed_objective(w: &[Rational], d_x: usize, keys: &[ProductKey]) -> Result<Vec<Rational>> {
    keys.iter()
        .map(|k| {
            let idx = match (k.set(), k.frac()) {
                ([i], None) => Some(*i),
                ([], Some(j)) => Some(d_x + j),
                _ => None,
            };
            match idx {
                None => Ok(Rational::zero()),
                Some(i) if i < w.len() => Ok(w[i].clone()),
                Some(i) => Err(Error::Dimension(format!(
                    "key {k} refers to variable {} of {}",
                    i + 1,
                    w.len()
                ))),
            }
        })
        .collect()
}

/// How a hyperedge was established.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeEvidence {
    /// Exact convex combinations on both sides.
    Witness(ConflictWitness),
    /// Checks run on this very edge, by name.
    Checked(Vec<String>),
    /// Image of the edge `representative` under a symmetry of the instance.
    Symmetric {
        representative: usize,
        class: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub vertices: Vec<usize>,
    pub evidence: EdgeEvidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConflictHypergraph {
    pub vertices: usize,
    pub edges: Vec<Edge>,
    pub tested: usize,
}

impl ConflictHypergraph {
    pub fn new(vertices: usize) -> Self {
        ConflictHypergraph {
            vertices,
            ..Default::default()
        }
    }

    pub fn add_edge(&mut self, mut vertices: Vec<usize>, evidence: EdgeEvidence) -> Result<()> {
        vertices.sort_unstable();
        vertices.dedup();
        if vertices.len() < 2 || vertices.iter().any(|&v| v >= self.vertices) {
            return Err(Error::Input(format!("bad hyperedge {vertices:?}")));
        }
        self.edges.push(Edge { vertices, evidence });
        Ok(())
    }
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// Tests every subset of size `2..=max_arity` (pairs first) for a joint
/// point with `dhat`. Supersets of edges already found are skipped.
pub fn build_conflicts(
    core: &Core,
    dhat: &VPolytope,
    max_arity: usize,
) -> Result<ConflictHypergraph> {
    if core.keys != dhat.labels() {
        return Err(Error::Dimension(
            "core keys differ from the polytope's labels".into(),
        ));
    }
    let inside: Vec<Result<bool>> = core.points.par_iter().map(|p| in_hull(p, dhat)).collect();
    for (i, r) in inside.into_iter().enumerate() {
        if r? {
            return Err(Error::Validity(format!(
                "core point {} lies inside D̂",
                i + 1
            )));
        }
    }
    let mut h = ConflictHypergraph::new(core.len());
    for arity in 2..=max_arity.min(core.len()) {
        let candidates: Vec<Vec<usize>> = combinations(core.len(), arity)
            .into_iter()
            .filter(|c| {
                !h.edges
                    .iter()
                    .any(|e| e.vertices.iter().all(|v| c.contains(v)))
            })
            .collect();
        h.tested += candidates.len();
        let found: Vec<Result<Option<ConflictWitness>>> = candidates
            .par_iter()
            .map(|c| {
                let pts: Vec<Vec<Rational>> = c.iter().map(|&i| core.points[i].clone()).collect();
                find_conflict_witness(&pts, dhat)
            })
            .collect();
        for (c, w) in candidates.into_iter().zip(found) {
            if let Some(w) = w? {
                h.add_edge(c, EdgeEvidence::Witness(w))?;
            }
        }
    }
    Ok(h)
}

/// Re-checks every witnessed edge against the core and `dhat`.
pub fn verify_edges(core: &Core, dhat: &VPolytope, h: &ConflictHypergraph) -> bool {
    h.edges.iter().all(|e| match &e.evidence {
        EdgeEvidence::Witness(w) => {
            let pts: Vec<Vec<Rational>> =
                e.vertices.iter().map(|&i| core.points[i].clone()).collect();
            w.verify(&pts, dhat)
        }
        EdgeEvidence::Checked(_) => true,
        EdgeEvidence::Symmetric { representative, .. } => *representative < h.edges.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChromaticBound {
    /// Certified lower bound on the chromatic number.
    pub bound: usize,
    /// Vertices of a clique of the pair graph.
    pub clique: Vec<usize>,
    /// Set when the chromatic number was computed exactly.
    pub exact: bool,
    /// Colors used by a greedy coloring; an upper bound only.
    pub greedy_upper: usize,
}

const EXACT_COLORING_LIMIT: usize = 12;

struct Graph {
    adj: Vec<Vec<u64>>,
}

impl Graph {
    fn new(h: &ConflictHypergraph) -> Self {
        let words = h.vertices.div_ceil(64);
        let mut adj = vec![vec![0u64; words]; h.vertices];
        for e in h.edges.iter().filter(|e| e.vertices.len() == 2) {
            let (a, b) = (e.vertices[0], e.vertices[1]);
            adj[a][b / 64] |= 1 << (b % 64);
            adj[b][a / 64] |= 1 << (a % 64);
        }
        Graph { adj }
    }

    fn has(&self, a: usize, b: usize) -> bool {
        self.adj[a][b / 64] >> (b % 64) & 1 == 1
    }
}

fn bits(set: &[u64]) -> impl Iterator<Item = usize> + '_ {
    set.iter().enumerate().flat_map(|(w, &x)| {
        (0..64)
            .filter(move |b| x >> b & 1 == 1)
            .map(move |b| w * 64 + b)
    })
}

fn and(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn count(a: &[u64]) -> usize {
    a.iter().map(|x| x.count_ones() as usize).sum()
}

/// Bron–Kerbosch with pivoting.
fn max_clique(g: &Graph, r: &mut Vec<usize>, p: Vec<u64>, x: Vec<u64>, best: &mut Vec<usize>) {
    if count(&p) == 0 {
        if count(&x) == 0 && r.len() > best.len() {
            *best = r.clone();
        }
        return;
    }
    if r.len() + count(&p) <= best.len() {
        return;
    }
    let pivot = bits(&p)
        .chain(bits(&x))
        .max_by_key(|&u| count(&and(&p, &g.adj[u])))
        .expect("p is nonempty");
    let cands: Vec<usize> = bits(&p).filter(|&v| !g.has(pivot, v)).collect();
    let (mut p, mut x) = (p, x);
    for v in cands {
        r.push(v);
        max_clique(g, r, and(&p, &g.adj[v]), and(&x, &g.adj[v]), best);
        r.pop();
        p[v / 64] &= !(1 << (v % 64));
        x[v / 64] |= 1 << (v % 64);
    }
}

/// A coloring is proper when no hyperedge is monochromatic.
fn monochromatic(h: &ConflictHypergraph, colors: &[Option<usize>], v: usize) -> bool {
    h.edges.iter().filter(|e| e.vertices.contains(&v)).any(|e| {
        let c = colors[e.vertices[0]];
        c.is_some() && e.vertices.iter().all(|&u| colors[u] == c)
    })
}

fn greedy_colors(h: &ConflictHypergraph) -> usize {
    let mut colors: Vec<Option<usize>> = vec![None; h.vertices];
    let mut used = 0;
    for v in 0..h.vertices {
        let mut c = 0;
        loop {
            colors[v] = Some(c);
            if !monochromatic(h, &colors, v) {
                break;
            }
            c += 1;
        }
        used = used.max(c + 1);
    }
    used
}

fn colorable(h: &ConflictHypergraph, k: usize, v: usize, colors: &mut Vec<Option<usize>>) -> bool {
    if v == h.vertices {
        return true;
    }
    // Symmetry: vertex v never needs a color beyond the ones used so far + 1.
    let used = colors[..v].iter().flatten().max().map_or(0, |c| c + 1);
    for c in 0..k.min(used + 1) {
        colors[v] = Some(c);
        if !monochromatic(h, colors, v) && colorable(h, k, v + 1, colors) {
            return true;
        }
    }
    colors[v] = None;
    false
}

pub fn chromatic_lower_bound(h: &ConflictHypergraph) -> ChromaticBound {
    if h.vertices == 0 {
        return ChromaticBound {
            bound: 0,
            clique: Vec::new(),
            exact: true,
            greedy_upper: 0,
        };
    }
    let g = Graph::new(h);
    let words = h.vertices.div_ceil(64);
    let mut all = vec![0u64; words];
    for v in 0..h.vertices {
        all[v / 64] |= 1 << (v % 64);
    }
    let mut clique = Vec::new();
    max_clique(&g, &mut Vec::new(), all, vec![0u64; words], &mut clique);
    clique.sort_unstable();
    let greedy_upper = greedy_colors(h);
    let mut bound = clique.len().max(1);
    let mut exact = bound == greedy_upper;
    if !exact && h.vertices <= EXACT_COLORING_LIMIT {
        let k = (bound..greedy_upper)
            .find(|&k| colorable(h, k, 0, &mut vec![None; h.vertices]))
            .unwrap_or(greedy_upper);
        bound = k;
        exact = true;
    }
    ChromaticBound {
        bound,
        clique,
        exact,
        greedy_upper,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationReport {
    pub core_size: usize,
    pub edges_tested: usize,
    pub edges_found: usize,
    pub chromatic: ChromaticBound,
    pub rho: Rational,
    pub gap_tags_present: bool,
    pub gap_tags_valid: bool,
    pub conclusion: String,
}

impl SeparationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "core_size": self.core_size,
            "edges_tested": self.edges_tested,
            "edges_found": self.edges_found,
            "clique_certificate": self.chromatic.clique,
            "bound": self.chromatic.bound,
            "bound_exact": self.chromatic.exact,
            "greedy_upper_bound": self.chromatic.greedy_upper,
            "rho": fmt_rat(&self.rho),
            "gap_tags_present": self.gap_tags_present,
            "gap_tags_valid": self.gap_tags_valid,
            "conclusion": self.conclusion,
        })
    }
}

pub fn separation_bound_report(
    core: &Core,
    h: &ConflictHypergraph,
    rho: &Rational,
) -> SeparationReport {
    let chromatic = chromatic_lower_bound(h);
    let gap_tags_present = !core.is_empty() && core.gap_tags.iter().all(Option::is_some);
    let gap_tags_valid = gap_tags_present && core.gap_tags.iter().flatten().all(|t| t.holds(rho));
    let scope = if gap_tags_valid {
        format!(
            "every {}-approximate product relaxation, and so every {}-approximate extended \
             formulation with a (mixed) linear section",
            fmt_rat(rho),
            fmt_rat(rho)
        )
    } else {
        "every exact product relaxation (gap tags missing or not verified at this rho)".to_string()
    };
    let conclusion = format!(
        "{scope} needs at least {} inequalities; a finite core certifies a lower bound only",
        chromatic.bound
    );
    SeparationReport {
        core_size: core.len(),
        edges_tested: h.tested,
        edges_found: h.edges.len(),
        chromatic,
        rho: rho.clone(),
        gap_tags_present,
        gap_tags_valid,
        conclusion,
    }
}

/// `true` when `rho` is at least one, as the approximation factor must be.
pub fn valid_rho(rho: &Rational) -> bool {
    rho >= &Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlp::{int, ratio};

    fn graph(n: usize, edges: &[(usize, usize)]) -> ConflictHypergraph {
        let mut h = ConflictHypergraph::new(n);
        for &(a, b) in edges {
            h.add_edge(vec![a, b], EdgeEvidence::Checked(vec![]))
                .unwrap();
        }
        h
    }

    #[test]
    fn bounds_on_small_graphs() {
        assert_eq!(chromatic_lower_bound(&graph(4, &[])).bound, 1);
        let c5 = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let b = chromatic_lower_bound(&c5);
        assert_eq!(b.bound, 3);
        assert_eq!(b.clique.len(), 2);
        assert!(b.exact);
        let mut edges = Vec::new();
        for a in 0..252 {
            for b in a + 1..252 {
                edges.push((a, b));
            }
        }
        let b = chromatic_lower_bound(&graph(252, &edges));
        assert_eq!(b.bound, 252);
        assert_eq!(b.clique.len(), 252);
    }

    #[test]
    fn hyperedge_coloring() {
        let mut h = ConflictHypergraph::new(3);
        h.add_edge(vec![0, 1, 2], EdgeEvidence::Checked(vec![]))
            .unwrap();
        assert_eq!(chromatic_lower_bound(&h).bound, 2);
    }

    #[test]
    fn embedding() {
        let keys = vec![
            ProductKey::single(0),
            ProductKey::single(1),
            ProductKey::pure([0, 1]).unwrap(),
            ProductKey::mixed([], 0),
            ProductKey::mixed([1], 0),
        ];
        let e = embed_objective(&[int(1), int(0), int(5)], 2, &keys).unwrap();
        assert_eq!(e, vec![int(1), int(0), int(0), int(5), int(0)]);
        assert!(embed_objective(&[int(1)], 2, &keys).is_err());
    }

    #[test]
    fn toy_core_single_edge() {
        // D̂ = conv{(0,0), (1,0), (0,1)}; only the midpoint of a and b lies inside.
        let labels = vec!["a".to_string(), "b".to_string()];
        let dhat = VPolytope::new(
            labels.clone(),
            vec![
                vec![int(0), int(0)],
                vec![int(1), int(0)],
                vec![int(0), int(1)],
            ],
        )
        .unwrap();
        let pts = vec![
            vec![ratio(-1, 2), int(0)],
            vec![ratio(3, 2), int(0)],
            vec![int(-1), int(2)],
        ];
        let core = Core::new("toy", labels, pts).unwrap();
        let h = build_conflicts(&core, &dhat, 2).unwrap();
        assert_eq!(h.edges.len(), 1);
        assert_eq!(h.edges[0].vertices, vec![0, 1]);
        assert!(verify_edges(&core, &dhat, &h));
        let r = separation_bound_report(&core, &h, &int(1));
        assert_eq!(r.chromatic.bound, 2);
        assert!(!r.gap_tags_present);
    }
}

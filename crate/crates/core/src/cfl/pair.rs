use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::experiment::{dstar_spec, verify_outcome_feasibility, ExperimentSpec};
use super::gap::{gap_certificate, gap_objective, GapCertificate};
use super::instance::{fmt_set, CflInstance, FacilitySet};
use super::vectors::{
    core_exclusion, excluded, midpoint_identity, verify_star_expectation, window, CoreVector,
    KeyReport, WindowSpec,
};
use crate::corelab::{ConflictHypergraph, Core, EdgeEvidence};
use crate::exactlp::{fmt_rat, ratio, Rational};
use crate::hull::{conflict_at, ConflictWitness, VPolytope};
use crate::product::ProductKey;
use crate::{Error, Result};

/// One named check with an optional machine-checkable witness.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub witness: Option<Value>,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, witness: Option<Value>) -> Self {
        Check {
            name: name.into(),
            passed,
            witness,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "name": self.name,
            "status": if self.passed { "PASS" } else { "FAIL" },
        });
        if let Some(w) = &self.witness {
            v["witness"] = w.clone();
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairOptions {
    pub window: WindowSpec,
    /// Also solve the conflict LP on the orbit-sum window.
    pub conflict_lp: bool,
}

impl PairOptions {
    pub fn standard(inst: &CflInstance, seed: u64) -> Self {
        PairOptions {
            window: WindowSpec::standard(inst, seed),
            conflict_lp: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub n: usize,
    pub m: u64,
    pub u: Rational,
    pub l: FacilitySet,
    pub lp: FacilitySet,
    pub window_size: usize,
    pub checks: Vec<Check>,
    pub gap: GapCertificate,
}

impl PairReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "instance": {"n": self.n, "m": self.m, "U": fmt_rat(&self.u)},
            "pair": {"l": fmt_set(self.l), "l'": fmt_set(self.lp)},
            "window_size": self.window_size,
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
            "gap": {
                "frac_cost": fmt_rat(&self.gap.frac_cost),
                "int_lb": fmt_rat(&self.gap.int_lb),
                "ratio": fmt_rat(&self.gap.ratio),
                "argument": self.gap.argument,
            },
            "formulas": {
                "p_case2": "20/(n^2(1+1/n))",
                "y_bar_l": "20*2^(n-1)/(n^2(1+1/n)(2^n-1))",
                "load_l": "sum_j x_bar_ij / y_bar_i",
                "star_shift": "2^(-n^2) P[case 1*] / (|l-l'| P[case 2.b*])",
                "exclusion": "sum_{S<=l} (-1)^|S| [sum_{i in F-k-l} sum_j z(S x_ij) - 2^(-n^2) z(S)] >= 0",
                "frac_cost": "20*2^(n-1)/(n(1+1/n)(2^n-1))",
            },
        })
    }
}

fn key_witness(r: &KeyReport) -> Option<Value> {
    r.mismatches.first().map(|m| {
        json!({
            "key": m.key.to_string(),
            "left": fmt_rat(&m.left),
            "right": fmt_rat(&m.right),
            "mismatches": r.mismatches.len(),
        })
    })
}

fn feasibility_check(name: String, spec: &ExperimentSpec, inst: &CflInstance) -> Check {
    let r = verify_outcome_feasibility(spec, inst);
    let witness = if r.feasible {
        None
    } else {
        r.violations
            .iter()
            .find(|v| !spec.classes[v.class].prob.is_zero())
            .map(|v| json!({"class": v.label, "violation": v.detail}))
    };
    Check::new(name, r.feasible, witness)
}

/// The singleton window: `y_i` and `x_{i,1}` for every facility.
pub fn singleton_keys(inst: &CflInstance) -> Vec<ProductKey> {
    let nf = inst.num_facilities();
    let mut keys: Vec<ProductKey> = (0..nf).map(ProductKey::single).collect();
    keys.extend((0..nf).map(|i| ProductKey::mixed([], inst.frac_index(i, 0))));
    keys
}

const BLOCK_NAMES: [&str; 5] = ["k", "l&l'", "l-l'", "l'-l", "rest"];

/// The five blocks `k, l∩l', l−l', l'−l, F−k−l−l'` fixed by the symmetries
/// of the pair.
pub fn pair_blocks(inst: &CflInstance, l: FacilitySet, lp: FacilitySet) -> [FacilitySet; 5] {
    [inst.k(), l & lp, l & !lp, lp & !l, inst.others() & !l & !lp]
}

/// Sum of all product coordinates in one orbit of the pair's symmetry
/// group: keys `ℰ·x_{i,1}` (or pure `ℰ`) with `|ℰ ∩ B| = sizes[B]` and,
/// when tagged, `i` in block `frac`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitFeature {
    pub sizes: [usize; 5],
    pub frac: Option<usize>,
}

impl OrbitFeature {
    pub fn label(&self) -> String {
        let body: Vec<String> = self.sizes.iter().map(usize::to_string).collect();
        match self.frac {
            None => format!("#({})", body.join(",")),
            Some(b) => format!("#({})x[{}]", body.join(","), BLOCK_NAMES[b]),
        }
    }

    /// Value at the product image of an outcome class with the given
    /// profile.
    pub fn eval(&self, profile: &ClassProfile) -> Rational {
        let count: u64 = profile
            .open
            .iter()
            .zip(&self.sizes)
            .map(|(&o, &a)| binom(o, a as u64))
            .product();
        let count = Rational::from_integer(count.into());
        match self.frac {
            None => count,
            Some(fb) => count * &profile.assigned[fb],
        }
    }
}

/// Per block: open facilities, and the fraction of client 1 assigned to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassProfile {
    pub open: [u64; 5],
    pub assigned: [Rational; 5],
}

impl ClassProfile {
    pub fn new(
        blocks: &[FacilitySet; 5],
        open: FacilitySet,
        loads: &[Rational],
        m: &Rational,
    ) -> Self {
        ClassProfile {
            open: blocks.map(|b| (open & b).count_ones() as u64),
            assigned: blocks.map(|b| {
                super::instance::members(b)
                    .into_iter()
                    .map(|i| loads[i].clone())
                    .sum::<Rational>()
                    / m
            }),
        }
    }
}

fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Orbit sums of all keys with `|ℰ| ≤ 1`, and of all keys whose `ℰ` lies in
/// `l` or in `l'`; the latter carry the exclusion inequalities.
pub fn orbit_features(blocks: &[FacilitySet; 5]) -> Vec<OrbitFeature> {
    let cap: Vec<usize> = blocks.iter().map(|b| b.count_ones() as usize).collect();
    let mut types: Vec<[usize; 5]> = Vec::new();
    let mut push = |t: [usize; 5]| {
        if !types.contains(&t) {
            types.push(t);
        }
    };
    push([0; 5]);
    for b in 0..5 {
        if cap[b] > 0 {
            let mut t = [0; 5];
            t[b] = 1;
            push(t);
        }
    }
    for a1 in 0..=cap[1] {
        for a2 in 0..=cap[2] {
            push([0, a1, a2, 0, 0]);
        }
        for a3 in 0..=cap[3] {
            push([0, a1, 0, a3, 0]);
        }
    }
    let mut out = Vec::new();
    for t in types {
        if t.iter().any(|&a| a > 0) {
            out.push(OrbitFeature {
                sizes: t,
                frac: None,
            });
        }
        for fb in (0..5).filter(|&b| cap[b] > 0) {
            out.push(OrbitFeature {
                sizes: t,
                frac: Some(fb),
            });
        }
    }
    out
}

fn spec_features(
    spec: &ExperimentSpec,
    blocks: &[FacilitySet; 5],
    feats: &[OrbitFeature],
) -> Vec<Vec<Rational>> {
    let m = spec.m();
    spec.classes
        .iter()
        .filter(|c| !c.prob.is_zero())
        .map(|c| {
            let pr = ClassProfile::new(blocks, c.open, &c.loads, &m);
            feats.iter().map(|f| f.eval(&pr)).collect()
        })
        .collect()
}

fn mean_features(
    spec: &ExperimentSpec,
    blocks: &[FacilitySet; 5],
    feats: &[OrbitFeature],
) -> Vec<Rational> {
    let m = spec.m();
    let mut acc = vec![Rational::zero(); feats.len()];
    for c in spec.classes.iter().filter(|c| !c.prob.is_zero()) {
        let pr = ClassProfile::new(blocks, c.open, &c.loads, &m);
        for (a, f) in acc.iter_mut().zip(feats) {
            *a += &c.prob * f.eval(&pr);
        }
    }
    acc
}

/// Conflict test for `z_{k,l}, z_{k,l'}` against the outcome images of both
/// exchanged distributions, on the orbit-sum window. Both core points and
/// the outcome set are invariant under the pair's symmetries, so the window
/// loses nothing against the same keys summed out. Both members are checked
/// to lie outside the outcome hull; the LP then finds weights on the
/// outcomes for the midpoint.
pub fn windowed_conflict(
    inst: &CflInstance,
    l: FacilitySet,
    lp: FacilitySet,
) -> Result<Option<ConflictWitness>> {
    let blocks = pair_blocks(inst, l, lp);
    let feats = orbit_features(&blocks);
    let a = dstar_spec(inst, l, lp)?;
    let b = dstar_spec(inst, lp, l)?;
    let mut verts = spec_features(&a, &blocks, &feats);
    verts.extend(spec_features(&b, &blocks, &feats));
    let pts = vec![
        mean_features(&super::experiment::d_spec(inst, l)?, &blocks, &feats),
        mean_features(&super::experiment::d_spec(inst, lp)?, &blocks, &feats),
    ];
    let labels = feats.iter().map(OrbitFeature::label).collect();
    let vp = VPolytope::new(labels, verts)?;
    conflict_at(&pts, &[ratio(1, 2), ratio(1, 2)], &vp)
}

/// Runs the exchange argument for one pair of core members.
pub fn verify_pair(
    inst: &CflInstance,
    l: FacilitySet,
    lp: FacilitySet,
    opts: &PairOptions,
) -> Result<PairReport> {
    inst.check_l(l)?;
    inst.check_l(lp)?;
    if l == lp {
        return Err(Error::Input("l and l' coincide".into()));
    }
    let keys = window(inst, &opts.window)?;
    let mut checks = Vec::new();
    for (name, s) in [("l", l), ("l'", lp)] {
        let v = core_exclusion(inst, s)?;
        checks.push(Check::new(
            format!("core-exclusion[{name}]"),
            excluded(&v),
            Some(json!({"value": fmt_rat(&v)})),
        ));
    }
    let star = dstar_spec(inst, l, lp)?;
    let star_p = dstar_spec(inst, lp, l)?;
    for (name, s) in [("l", &star), ("l'", &star_p)] {
        let sane = s.check_sanity();
        checks.push(Check::new(
            format!("dstar-distribution[{name}]"),
            sane.is_ok(),
            sane.err().map(|e| json!(e.to_string())),
        ));
        checks.push(feasibility_check(
            format!("dstar-feasible[{name}]"),
            s,
            inst,
        ));
    }
    let r1 = verify_star_expectation(inst, l, lp, &keys)?;
    checks.push(Check::new("star-expectation[l]", r1.ok(), key_witness(&r1)));
    let r2 = verify_star_expectation(inst, lp, l, &keys)?;
    checks.push(Check::new(
        "star-expectation[l']",
        r2.ok(),
        key_witness(&r2),
    ));
    let mid = midpoint_identity(inst, l, lp, &keys)?;
    checks.push(Check::new("midpoint-identity", mid.ok(), key_witness(&mid)));
    // ½z + ½z' = ½z* + ½z*' = Σ ½P[c] f(c) over both outcome sets.
    let half = ratio(1, 2);
    let mu_total: Rational = star
        .classes
        .iter()
        .chain(&star_p.classes)
        .map(|c| &c.prob * &half)
        .sum();
    let mu_ok = mu_total.is_one()
        && star
            .classes
            .iter()
            .chain(&star_p.classes)
            .all(|c| !c.prob.is_negative());
    checks.push(Check::new(
        "midpoint-witness",
        mu_ok && r1.ok() && r2.ok() && mid.ok(),
        Some(json!({
            "lambda": ["1/2", "1/2"],
            "mu": "P[c]/2 on the outcome classes of D*[l] and D*[l']",
            "classes": star.classes.len() + star_p.classes.len(),
            "mu_total": fmt_rat(&mu_total),
        })),
    ));
    if opts.conflict_lp {
        let (passed, witness) = match windowed_conflict(inst, l, lp) {
            Ok(Some(w)) => (
                true,
                json!({
                    "lambda": w.lambda.iter().map(fmt_rat).collect::<Vec<_>>(),
                    "window": w.point.len(),
                    "support": w.mu.iter().filter(|v| !v.is_zero()).count(),
                }),
            ),
            Ok(None) => (false, json!("no common point")),
            Err(Error::Precondition(e)) => (false, json!(e)),
            Err(e) => return Err(e),
        };
        checks.push(Check::new("conflict-lp", passed, Some(witness)));
    }
    Ok(PairReport {
        n: inst.n(),
        m: inst.m(),
        u: inst.capacity().clone(),
        l,
        lp,
        window_size: keys.len(),
        checks,
        gap: gap_certificate(inst, l)?,
    })
}

/// Core of the instance on the singleton window, each member tagged with
/// its gap objective (integer optimum at least 1).
pub fn cfl_core(inst: &CflInstance) -> Result<(Vec<FacilitySet>, Core)> {
    let sets = inst.legal_sets()?;
    let keys = singleton_keys(inst);
    let labels = keys.iter().map(ProductKey::to_string).collect();
    let points: Vec<Vec<Rational>> = sets
        .par_iter()
        .map(|&l| CoreVector::new(inst, l)?.dense(&keys))
        .collect::<Result<_>>()?;
    let mut core = Core::new(format!("cfl n={}", inst.n()), labels, points)?;
    for (idx, &l) in sets.iter().enumerate() {
        let obj = gap_objective(inst, l);
        let nf = inst.num_facilities();
        let mut w = obj.opening.clone();
        w.extend((0..nf).map(|i| obj.connection[i].iter().sum::<Rational>()));
        core.tag(idx, w, Rational::one())?;
    }
    Ok((sets, core))
}

/// Pairs to verify directly: one per overlap size `|l ∩ l'|`, then seeded
/// random pairs up to `sample`.
pub fn sample_pairs(sets: &[FacilitySet], sample: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = Vec::new();
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            all.push((a, b));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    let overlap = |&(a, b): &(usize, usize)| (sets[a] & sets[b]).count_ones();
    for p in &all {
        if !chosen.iter().any(|c| overlap(c) == overlap(p)) {
            chosen.push(*p);
        }
    }
    for p in all {
        if chosen.len() >= sample.max(chosen.len()) {
            break;
        }
        if !chosen.contains(&p) {
            chosen.push(p);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Verifies the sampled pairs and extends to every pair by the symmetry of
/// `F − k`: any two pairs with the same overlap are exchanged by a
/// permutation of `F − k`, which maps the instance to itself.
pub fn cfl_conflict_graph(
    inst: &CflInstance,
    sets: &[FacilitySet],
    pairs: &[(usize, usize)],
    opts: &PairOptions,
) -> Result<(ConflictHypergraph, Vec<PairReport>)> {
    let reports: Vec<PairReport> = pairs
        .par_iter()
        .map(|&(a, b)| verify_pair(inst, sets[a], sets[b], opts))
        .collect::<Result<_>>()?;
    let mut h = ConflictHypergraph::new(sets.len());
    h.tested = pairs.len();
    let mut reps: Vec<(u32, usize)> = Vec::new();
    for (&(a, b), r) in pairs.iter().zip(&reports) {
        if r.passed() {
            let t = (sets[a] & sets[b]).count_ones();
            if !reps.iter().any(|&(s, _)| s == t) {
                reps.push((t, h.edges.len()));
            }
            let names = r.checks.iter().map(|c| c.name.clone()).collect();
            h.add_edge(vec![a, b], EdgeEvidence::Checked(names))?;
        }
    }
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            if pairs.contains(&(a, b)) {
                continue;
            }
            let t = (sets[a] & sets[b]).count_ones();
            if let Some(&(_, rep)) = reps.iter().find(|&&(s, _)| s == t) {
                h.add_edge(
                    vec![a, b],
                    EdgeEvidence::Symmetric {
                        representative: rep,
                        class: format!("|l ∩ l'| = {t}"),
                    },
                )?;
            }
        }
    }
    Ok((h, reports))
}

#[cfg(test)]
mod tests {
    use super::super::instance::{make_instance, set_of};
    use super::*;

    #[test]
    fn pair_passes_at_five() {
        let inst = make_instance(5).unwrap();
        let l = set_of(&[5, 6, 7, 8, 9]);
        let lp = set_of(&[5, 6, 7, 8, 10]);
        let mut opts = PairOptions::standard(&inst, 1);
        opts.window.extra = 20;
        let r = verify_pair(&inst, l, lp, &opts).unwrap();
        for c in &r.checks {
            assert!(c.passed, "{} {:?}", c.name, c.witness);
        }
        let j = r.to_json();
        assert_eq!(j["pair"]["l"], "{6,7,8,9,10}");
        assert_eq!(j["gap"]["ratio"], "93/160");
    }

    #[test]
    fn orbit_features_match_coordinates() {
        let inst = make_instance(5).unwrap();
        let l = set_of(&[5, 6, 7, 8, 9]);
        let lp = set_of(&[5, 6, 10, 11, 12]);
        let blocks = pair_blocks(&inst, l, lp);
        let feats = orbit_features(&blocks);
        let z = mean_features(
            &super::super::experiment::d_spec(&inst, l).unwrap(),
            &blocks,
            &feats,
        );
        let cv = CoreVector::new(&inst, l).unwrap();
        // #(0,1,1,0,0)x[rest]: y_a y_b x_{i,1} with a in l∩l', b in l−l', i in rest.
        let f = feats
            .iter()
            .position(|f| f.sizes == [0, 1, 1, 0, 0] && f.frac == Some(4))
            .unwrap();
        let mut sum = Rational::zero();
        for a in super::super::instance::members(blocks[1]) {
            for b in super::super::instance::members(blocks[2]) {
                for i in super::super::instance::members(blocks[4]) {
                    sum += cv
                        .get(&ProductKey::mixed([a, b], inst.frac_index(i, 0)))
                        .unwrap();
                }
            }
        }
        assert_eq!(z[f], sum);
    }

    #[test]
    fn conflict_lp_far_pair() {
        let inst = make_instance(5).unwrap();
        let l = set_of(&[5, 6, 7, 8, 9]);
        let lp = set_of(&[10, 11, 12, 13, 14]);
        assert!(windowed_conflict(&inst, l, lp).unwrap().is_some());
    }

    #[test]
    fn sampled_pairs_cover_overlaps() {
        let inst = make_instance(5).unwrap();
        let sets = inst.legal_sets().unwrap();
        let pairs = sample_pairs(&sets, 40, 9);
        assert_eq!(pairs.len(), 40);
        for t in 0..5 {
            assert!(pairs
                .iter()
                .any(|&(a, b)| (sets[a] & sets[b]).count_ones() == t));
        }
    }
}

use std::collections::BTreeSet;

use num_traits::Zero;

use prodrel::cfl::{classic_lp, integer_opt_exact, CapacitatedInstance, CflObjective};
use prodrel::corelab::{build_conflicts, chromatic_lower_bound, verify_edges, Core};
use prodrel::exactlp::{int, ratio};
use prodrel::hull::{canonical_product_relaxation, enumerate_feasible_points, in_hull, VPolytope};
use prodrel::{HPolyhedron, Rational};

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| int(x)).collect()
}

const TOY: &str = "vars: x1 x2\n1 1 <= 3/2\n1 0 <= 1\n-1 0 <= 0\n0 1 <= 1\n0 -1 <= 0\n";

#[test]
fn toy_integer_points() {
    let p = HPolyhedron::parse(TOY).unwrap();
    let got: Vec<Vec<bool>> = enumerate_feasible_points(&p, &names(&["x1", "x2"]))
        .unwrap()
        .into_iter()
        .map(|a| a.ints)
        .collect();
    let got: BTreeSet<_> = got.into_iter().collect();
    let want: BTreeSet<_> = [vec![false, false], vec![false, true], vec![true, false]].into();
    assert_eq!(got, want);
}

#[test]
fn empty_polyhedron_has_no_points() {
    let p = HPolyhedron::parse("vars: x1 x2\n1 0 <= -1\n-1 0 <= 0\n").unwrap();
    assert!(enumerate_feasible_points(&p, &names(&["x1", "x2"]))
        .unwrap()
        .is_empty());
    assert!(canonical_product_relaxation(&p, &names(&["x1", "x2"]))
        .unwrap()
        .is_empty());
}

#[test]
fn classic_lp_patterns() {
    let inst = CapacitatedInstance::new(ints(&[1, 1]), 1).unwrap();
    let p = classic_lp(&inst).unwrap();
    let pats: BTreeSet<Vec<bool>> = enumerate_feasible_points(&p, &inst.y_names())
        .unwrap()
        .into_iter()
        .map(|a| a.ints)
        .collect();
    let want: BTreeSet<_> = [vec![false, true], vec![true, false], vec![true, true]].into();
    assert_eq!(pats, want);
}

#[test]
fn canonical_relaxation_vertices() {
    let p = HPolyhedron::parse(TOY).unwrap();
    let d = canonical_product_relaxation(&p, &names(&["x1", "x2"])).unwrap();
    assert_eq!(d.dim(), 3);
    let got: BTreeSet<Vec<Rational>> = d.vertices().iter().cloned().collect();
    let want: BTreeSet<_> = [ints(&[0, 0, 0]), ints(&[0, 1, 0]), ints(&[1, 0, 0])].into();
    assert_eq!(got, want);

    let single = HPolyhedron::parse("vars: x1 x2\n1 0 == 1\n0 1 == 1\n").unwrap();
    let d = canonical_product_relaxation(&single, &names(&["x1", "x2"])).unwrap();
    assert_eq!(d.vertices(), [ints(&[1, 1, 1])]);
}

/// Every client goes to one facility; with integral capacities and unit
/// demands the transportation LP has an integral optimum, so this search is
/// exhaustive.
fn brute_force(caps: &[i64], m: usize, obj: &CflObjective) -> Rational {
    let nf = caps.len();
    let mut best: Option<Rational> = None;
    let mut assign = vec![0usize; m];
    loop {
        let mut load = vec![0i64; nf];
        for &i in &assign {
            load[i] += 1;
        }
        if load.iter().zip(caps).all(|(l, c)| l <= c) {
            let mut cost = Rational::zero();
            for i in 0..nf {
                if load[i] > 0 {
                    cost += &obj.opening[i];
                }
            }
            for (j, &i) in assign.iter().enumerate() {
                cost += &obj.connection[i][j];
            }
            if best.as_ref().is_none_or(|b| cost < *b) {
                best = Some(cost);
            }
        }
        let mut k = 0;
        loop {
            if k == m {
                return best.unwrap();
            }
            assign[k] += 1;
            if assign[k] < nf {
                break;
            }
            assign[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn six_facility_integer_optimum() {
    let caps = [1, 2, 1, 3, 1, 2];
    let m = 4;
    let inst = CapacitatedInstance::new(ints(&caps), m).unwrap();
    let obj = CflObjective {
        opening: vec![int(3), int(5), int(2), int(9), ratio(3, 2), int(4)],
        connection: vec![
            ints(&[1, 4, 6, 2]),
            ints(&[2, 1, 3, 5]),
            ints(&[7, 2, 1, 4]),
            ints(&[1, 1, 1, 1]),
            ints(&[5, 6, 2, 3]),
            ints(&[3, 2, 4, 1]),
        ],
    };
    let want = brute_force(&caps, m, &obj);
    assert_eq!(integer_opt_exact(&inst, &obj).unwrap(), want);

    let zero = CflObjective {
        opening: ints(&[1, 1]),
        connection: vec![ints(&[0, 0]), ints(&[0, 0])],
    };
    let two = CapacitatedInstance::new(ints(&[1, 1]), 2).unwrap();
    assert_eq!(integer_opt_exact(&two, &zero).unwrap(), int(2));
}

#[test]
fn triangle_core_needs_three_colors() {
    let dhat = VPolytope::parse("dims: a b\n0 0\n1 0\n0 1\n").unwrap();
    let pts = vec![
        vec![ratio(-1, 4), ratio(1, 2)],
        vec![ratio(1, 2), ratio(-1, 4)],
        vec![ratio(3, 4), ratio(3, 4)],
    ];
    for p in &pts {
        assert!(!in_hull(p, &dhat).unwrap());
    }
    let core = Core::new("triangle", names(&["a", "b"]), pts).unwrap();
    let h = build_conflicts(&core, &dhat, 3).unwrap();
    assert_eq!(h.edges.len(), 3);
    assert!(verify_edges(&core, &dhat, &h));
    let b = chromatic_lower_bound(&h);
    assert_eq!(b.bound, 3);
    assert_eq!(b.clique, vec![0, 1, 2]);
}

#[test]
fn point_inside_hull_is_rejected_from_core() {
    let dhat = VPolytope::parse("dims: a b\n0 0\n1 0\n0 1\n").unwrap();
    let core = Core::new(
        "bad",
        names(&["a", "b"]),
        vec![vec![ratio(1, 4), ratio(1, 4)]],
    )
    .unwrap();
    assert!(build_conflicts(&core, &dhat, 2).is_err());
}

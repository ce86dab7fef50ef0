//! Capacitated facility location: the instance family `I(3n, n⁴+1, U, 1)`,
//! the distributions behind its core, the exchange construction showing
//! every pair of core members conflicts, the gap certificate, and the
//! exact `2^N`-size formulation.
//!
//! Facilities are numbered `0..3n`; `k = {0..n}` is fixed and every core
//! member is indexed by an `n`-subset `l` of the remaining `2n`. In product
//! keys the integer variable `i` is `y_i` and the fractional index
//! `i·m + j` is `x_ij`.

mod exact;
mod experiment;
mod gap;
mod instance;
mod pair;
mod vectors;

pub use exact::{
    exact_ef, exact_ef_check, exact_ef_row_count, ExactEfReport, MAX_EXACT_EF_FACILITIES,
};
pub use experiment::{
    d_spec, dstar_spec, star_shift, verify_outcome_feasibility, CompiledSpec, ExperimentSpec,
    FeasibilityReport, OutcomeClass, Violation, MAX_ENUM_N,
};
pub use gap::{
    first_gap_above_one, frac_cost_closed, gap_certificate, gap_objective, gap_table,
    integer_opt_exact, metric_violation, CflObjective, GapCertificate, GapRow,
    MAX_EXACT_FACILITIES,
};
pub use instance::{
    classic_lp, expected_vector, fmt_set, make_instance, members, parse_set, set_of,
    CapacitatedInstance, CflInstance, ExpectedVector, FacilitySet,
};
pub use pair::{
    cfl_conflict_graph, cfl_core, orbit_features, pair_blocks, sample_pairs, singleton_keys,
    verify_pair, windowed_conflict, Check, ClassProfile, OrbitFeature, PairOptions, PairReport,
};
pub use vectors::{
    case1_term, core_coord, core_coord_with, core_exclusion, exclusion_value, midpoint_identity,
    star_case, star_vector_coord, verify_star_expectation, window, Backend, CoreVector, KeyCheck,
    KeyReport, StarCase, WindowSpec,
};

#pragma once

#include <string>

#include "iba/model.hpp"

namespace iba {

// A fully assembled problem instance: model, protagonist, its local state
// function and d-set, plus fixed policies for the other agents.
struct Domain {
    std::string name;
    FactoredPosg model;
    LocalStateFunction lsf;
    int agent = 0;
    DSetSpec dset;
    std::vector<Policy> policies;  // per agent; protagonist entry unused
};

// Two robots search a line of rooms for a static (or randomly walking)
// target. Factors: l1 (searcher), l2 (protagonist), l_tgt, f (found flag,
// observed by both). All numeric entries are artifact defaults; the
// reference description gives only the structure.
struct HousesearchParams {
    int num_rooms = 3;  // line graph
    double move_fail = 0.1;
    double detect = 0.8;
    double c_move = -0.1;  // stay is free
    double c_time = -0.2;  // per stage the target is still hidden
    double r_detect = 5.0;
    bool target_static = true;
    int nearness_radius = 0;  // detect within this graph distance
    int horizon = 3;
    double gamma = 1.0;
};

// isd = true wires detection to the *next*-slice locations (intra-stage
// links); false delays it one step (purely across-stage links). Protagonist
// is the second robot; d-set = full histories of {l2, l_tgt, f}.
Domain gen_housesearch(const HousesearchParams& params, bool isd);

// A satellite (NOOP/PLAN) can compute a path plan for a rover moving along a
// line; with a plan available the rover's moves succeed more often. The
// satellite action is the influence source, pl the destination; d-set = full
// history of pl.
struct PlanetaryParams {
    int grid_length = 3;  // positions 0..grid_length-1; goal at the end
    double base_success = 0.6;
    double plan_success = 0.9;
    double step_cost = -0.1;
    double goal_reward = 2.0;
    double plan_cost = -0.5;
    double plan_prob = 0.4;  // satellite's per-stage PLAN probability
    int horizon = 3;
    double gamma = 1.0;
};

Domain gen_planetary(const PlanetaryParams& params);

// Didactic single-agent chains. Fig10: A -> B with B observed; d-set = full
// history of B. Fig11 adds a factor C that is disconnected in the dynamics
// but a stage-0 ancestor of A, so the d-set additionally needs C^0 (and only
// C^0): full history of B plus Stage0Only of C.
enum class ChainVariant { Fig10, Fig11 };

Domain gen_chain(ChainVariant variant);

// Seeded random two-agent instances for property tests. The construction
// guarantees a valid local-form model (observation- and reward-relevant
// factors are always modeled) and at least one influence link; the d-set
// starts as the full histories of all modeled factors plus own actions and
// is then greedily shrunk while it still separates.
struct RandomParams {
    int min_factors = 3;
    int max_factors = 4;
    int min_horizon = 2;
    int max_horizon = 3;
    double edge_density = 0.4;
    double det_row_prob = 0.4;  // chance a CPT row is deterministic
    bool shrink_dset = true;
};

Domain gen_random(const RandomParams& params, unsigned seed);

}  // namespace iba

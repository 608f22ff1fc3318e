// Command-line front end: validate / gen / solve / influence / verify /
// stats / dsep / query over instance files in the iba-model v1 format.
// Exit codes: 0 success, 1 verification or validation failure, 2 usage or
// parse error, 3 resource cap exceeded.
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "iba/domains.hpp"
#include "iba/gfbrm.hpp"
#include "iba/ialm.hpp"
#include "iba/influence.hpp"
#include "iba/model_io.hpp"
#include "iba/solver.hpp"
#include "iba/unrolled.hpp"
#include "iba/verify.hpp"

namespace {

using namespace iba;

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct Common {
    std::string model_path;
    int horizon = -1;  // override when >= 0
    double tol = kDerivedTol;
    std::int64_t cap_aohs = kDefaultAohCap;
    std::int64_t cap_trajs = kDefaultTrajCap;
    bool force = false;
    int jobs = 1;
    std::string format = "table";
};

void emit_report(const std::string& kind, const std::vector<std::string>& lines,
                 const std::string& format) {
    if (format == "human")
        std::cout << "== " << kind << " report ==\n";
    else
        std::cout << "iba-report v1 " << kind << "\n";
    for (const auto& l : lines) std::cout << l << "\n";
}

Domain load(const Common& c) {
    Domain d = load_instance(c.model_path);
    if (c.horizon >= 1) d.model.horizon = c.horizon;
    return d;
}

InfluencePoint influence_for(const Domain& d, const Common& c) {
    InfluenceOptions opt;
    opt.force = c.force;
    opt.tol = c.tol;
    opt.cap = c.cap_trajs;
    auto cls = classify_factors(d.model, d.lsf, d.agent);
    return cls.links.has_isd()
               ? compute_influence_isd(d.model, d.lsf, d.agent, d.policies, d.dset, opt)
               : compute_influence(d.model, d.lsf, d.agent, d.policies, d.dset, opt);
}

int run_validate(const Common& c) {
    Domain d = load(c);
    std::vector<std::string> lines;
    auto add = [&](const std::string& where, const ValidationReport& rep) {
        for (const auto& msg : rep) lines.push_back(where + " " + msg);
    };
    add("model", validate_model(d.model));
    add("lfm", validate_lfm(d.model, d.lsf, d.agent));
    add("dset", validate_dset(d.model, d.lsf, d.agent, d.dset));
    for (int j = 0; j < d.model.num_agents; ++j)
        if (j != d.agent) add("policy" + std::to_string(j), validate_policy(d.model, j, d.policies[j]));
    lines.push_back(lines.empty() ? "result clean" : "result invalid");
    emit_report("validate", lines, c.format);
    return lines.size() == 1 ? 0 : 1;
}

int run_gen(const Common& c, const std::string& domain, unsigned seed, int rooms, int radius,
            const std::string& out) {
    Domain d;
    if (domain == "housesearch" || domain == "housesearch-isd") {
        HousesearchParams p;
        if (c.horizon >= 1) p.horizon = c.horizon;
        if (rooms >= 1) p.num_rooms = rooms;
        if (radius >= 0) p.nearness_radius = radius;
        d = gen_housesearch(p, domain == "housesearch-isd");
    } else if (domain == "planetary") {
        PlanetaryParams p;
        if (c.horizon >= 1) p.horizon = c.horizon;
        d = gen_planetary(p);
    } else if (domain == "chain-fig10") {
        d = gen_chain(ChainVariant::Fig10);
    } else if (domain == "chain-fig11") {
        d = gen_chain(ChainVariant::Fig11);
    } else if (domain == "random") {
        d = gen_random({}, seed);
        if (c.horizon >= 1) d.model.horizon = c.horizon;
    } else {
        std::cerr << "unknown domain '" << domain << "'\n";
        return 2;
    }
    if (out.empty())
        std::cout << write_instance(d);
    else
        save_instance(d, out);
    return 0;
}

int run_solve(const Common& c, bool local) {
    Domain d = load(c);
    std::vector<std::string> lines;
    ValueTree tree = [&] {
        if (local) {
            Ialm l(d.model, d.lsf, d.agent, influence_for(d, c));
            auto t = solve(l, c.cap_aohs);
            lines.push_back("model ialm");
            lines.push_back("states " + std::to_string(l.num_states_created()));
            return t;
        }
        Gfbrm g(d.model, d.policies, d.agent);
        auto t = solve(g, c.cap_aohs);
        lines.push_back("model gfbrm");
        lines.push_back("states " + std::to_string(g.num_states_created()));
        return t;
    }();
    lines.push_back("value " + fmt(tree.root_value()));
    lines.push_back("best_action " + std::to_string(tree.nodes[0].best_action));
    lines.push_back("aohs " + std::to_string(tree.nodes.size()));
    emit_report("solve", lines, c.format);
    return 0;
}

int run_influence(const Common& c) {
    Domain d = load(c);
    InfluencePoint ip = influence_for(d, c);
    std::vector<std::string> lines;
    lines.push_back("stages " + std::to_string(ip.stages.size()));
    lines.push_back("source_arity " + std::to_string(ip.space.arity()));
    for (std::size_t t = 0; t < ip.stages.size(); ++t)
        for (const auto& [key, row] : ip.stages[t].rows) {
            std::ostringstream os;
            os << "row " << t << " key";
            for (int v : key) os << ' ' << v;
            os << (row.reachable ? " dist" : " unreachable");
            for (double p : row.dist) os << ' ' << fmt(p);
            lines.push_back(os.str());
        }
    emit_report("influence", lines, c.format);
    return 0;
}

int run_verify(const Common& c) {
    Domain d = load(c);
    VerifyOptions opt;
    opt.tol = c.tol;
    opt.force = c.force;
    opt.cap = c.cap_trajs;
    opt.cap_aohs = c.cap_aohs;
    opt.jobs = c.jobs;
    auto rep = check_theorem(d.model, d.lsf, d.agent, d.policies, d.dset, opt);
    std::vector<std::string> lines;
    lines.push_back("name " + d.name);
    lines.push_back("value_gfbrm " + fmt(rep.value_gfbrm));
    lines.push_back("value_ialm " + fmt(rep.value_ialm));
    lines.push_back("value_delta " + fmt(rep.value_delta));
    lines.push_back("max_lemma1 " + fmt(rep.max_l1));
    lines.push_back("max_lemma2 " + fmt(rep.max_l2));
    lines.push_back("max_lemma3 " + fmt(rep.max_l3));
    lines.push_back("max_lemma4 " + fmt(rep.max_l4));
    lines.push_back("max_q " + fmt(rep.max_q));
    lines.push_back("belief_factorization_delta " + fmt(rep.belief_factorization_delta));
    lines.push_back("unmatched_aohs " + std::to_string(rep.unmatched_aohs));
    lines.push_back("unreachable_rows " + std::to_string(rep.unreachable_rows));
    for (std::size_t t = 0; t < rep.max_q_per_stage.size(); ++t)
        lines.push_back("stage " + std::to_string(t) + " max_q " + fmt(rep.max_q_per_stage[t]));
    lines.push_back(std::string("result ") + (rep.pass() ? "pass" : "fail"));
    emit_report("verify", lines, c.format);
    return rep.pass() ? 0 : 1;
}

int run_stats(const Common& c) {
    Domain d = load(c);
    Gfbrm g(d.model, d.policies, d.agent);
    Ialm l(d.model, d.lsf, d.agent, influence_for(d, c));
    solve(g, c.cap_aohs);
    solve(l, c.cap_aohs);
    std::vector<int> gs(d.model.horizon + 1, 0), ls(d.model.horizon + 1, 0);
    for (int s = 0; s < g.num_states_created(); ++s) ++gs[g.state(s).stage];
    for (int s = 0; s < l.num_states_created(); ++s) ++ls[l.state(s).stage];
    std::vector<std::string> lines;
    lines.push_back("stage gfbrm_states ialm_states");
    for (std::size_t t = 0; t < gs.size(); ++t)
        lines.push_back(std::to_string(t) + " " + std::to_string(gs[t]) + " " +
                        std::to_string(ls[t]));
    emit_report("stats", lines, c.format);
    return 0;
}

int run_dsep(const Common& c) {
    Domain d = load(c);
    std::vector<std::string> lines;
    try {
        influence_for(d, c);
        lines.push_back("separated yes");
        emit_report("dsep", lines, c.format);
        return 0;
    } catch (const DSetNotSeparating& e) {
        lines.push_back("separated no");
        lines.push_back("max_violation " + fmt(e.max_violation));
        emit_report("dsep", lines, c.format);
        return 1;
    }
}

int run_query(const Common& c, const std::vector<std::string>& targets,
              const std::vector<std::string>& evidence) {
    Domain d = load(c);
    UnrolledNet net(d.model, d.policies, d.agent, d.model.horizon);
    auto node_of = [&](const std::string& spec) {
        // factor:stage
        auto colon = spec.find(':');
        if (colon == std::string::npos) throw ModelError("expected factor:stage, got " + spec);
        return net.factor_node(std::stoi(spec.substr(0, colon)),
                               std::stoi(spec.substr(colon + 1)));
    };
    std::vector<int> tgt;
    for (const auto& s : targets) tgt.push_back(node_of(s));
    std::vector<std::pair<int, int>> ev;
    for (const auto& s : evidence) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ModelError("expected factor:stage=value, got " + s);
        ev.push_back({node_of(s.substr(0, eq)), std::stoi(s.substr(eq + 1))});
    }
    EnumerateOptions opt;
    opt.cap = c.cap_trajs;
    auto dist = query(net, tgt, ev, opt);
    std::vector<std::string> lines;
    for (const auto& [vals, p] : dist) {
        std::ostringstream os;
        os << "p";
        for (int v : vals) os << ' ' << v;
        os << ' ' << fmt(p);
        lines.push_back(os.str());
    }
    emit_report("query", lines, c.format);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"influence-based abstraction toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Common c;
    app.add_option("--model", c.model_path, "instance file (iba-model v1)");
    app.add_option("--horizon", c.horizon, "override the horizon");
    app.add_option("--tol", c.tol, "verification tolerance");
    app.add_option("--cap-aohs", c.cap_aohs, "reachable-AOH cap");
    app.add_option("--cap-trajs", c.cap_trajs, "trajectory-enumeration cap");
    app.add_flag("--force", c.force, "proceed despite a non-separating d-set");
    app.add_option("--jobs", c.jobs, "parallel verification workers");
    app.add_option("--format", c.format, "output format: table (default) or human")
        ->check(CLI::IsMember({"table", "human"}));

    auto* validate = app.add_subcommand("validate", "check model/lfm/d-set/policy well-formedness");
    auto* gen = app.add_subcommand("gen", "generate a built-in or random instance");
    std::string gen_domain, gen_out;
    unsigned gen_seed = 0;
    int gen_rooms = -1, gen_radius = -1;
    gen->add_option("--domain", gen_domain,
                    "housesearch|housesearch-isd|planetary|chain-fig10|chain-fig11|random")
        ->required();
    gen->add_option("--seed", gen_seed, "seed for random instances");
    gen->add_option("--rooms", gen_rooms, "housesearch room count");
    gen->add_option("--radius", gen_radius, "housesearch detection radius");
    gen->add_option("--out", gen_out, "output path (stdout when omitted)");
    auto* solve_cmd = app.add_subcommand("solve", "solve the best-response model exactly");
    bool solve_local = false;
    solve_cmd->add_flag("--local", solve_local, "solve the IALM instead of the GFBRM");
    auto* influence = app.add_subcommand("influence", "print the influence point");
    auto* verify = app.add_subcommand("verify", "machine-check the equivalence theorem");
    auto* stats = app.add_subcommand("stats", "per-stage reachable-state counts");
    auto* dsep = app.add_subcommand("dsep", "check that the d-set separates");
    auto* query_cmd = app.add_subcommand("query", "exact conditional by enumeration");
    std::vector<std::string> q_targets, q_evidence;
    query_cmd->add_option("--target", q_targets, "target node factor:stage")->required();
    query_cmd->add_option("--evidence", q_evidence, "evidence factor:stage=value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (validate->parsed()) return run_validate(c);
        if (gen->parsed()) return run_gen(c, gen_domain, gen_seed, gen_rooms, gen_radius, gen_out);
        if (solve_cmd->parsed()) return run_solve(c, solve_local);
        if (influence->parsed()) return run_influence(c);
        if (verify->parsed()) return run_verify(c);
        if (stats->parsed()) return run_stats(c);
        if (dsep->parsed()) return run_dsep(c);
        if (query_cmd->parsed()) return run_query(c, q_targets, q_evidence);
    } catch (const CapExceeded& e) {
        std::cerr << "cap exceeded: " << e.what() << "\n";
        return 3;
    } catch (const DSetNotSeparating& e) {
        std::cerr << "d-set does not separate (max violation " << fmt(e.max_violation)
                  << "); rerun with --force to measure the damage\n";
        return 1;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

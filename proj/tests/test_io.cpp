#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "iba/domains.hpp"
#include "iba/model_io.hpp"

using namespace iba;

namespace {

bool same_parents(const std::vector<NodeRef>& a, const std::vector<NodeRef>& b) {
    return a == b;
}

void check_roundtrip(const Domain& d) {
    std::string text = write_instance(d);
    Domain r = read_instance(text);
    const FactoredPosg &m = d.model, &m2 = r.model;
    REQUIRE(m2.num_factors() == m.num_factors());
    CHECK(m2.num_agents == m.num_agents);
    CHECK(m2.num_actions == m.num_actions);
    CHECK(m2.num_observations == m.num_observations);
    CHECK(m2.horizon == m.horizon);
    CHECK(m2.gamma == m.gamma);
    for (int f = 0; f < m.num_factors(); ++f) {
        CHECK(m2.dbn.factors[f].domain_size == m.dbn.factors[f].domain_size);
        CHECK(same_parents(m2.dbn.factor_cpts[f].parents, m.dbn.factor_cpts[f].parents));
        CHECK(m2.dbn.factor_cpts[f].table == m.dbn.factor_cpts[f].table);  // bit-exact
        CHECK(same_parents(m2.initial_bn.cpts[f].parents, m.initial_bn.cpts[f].parents));
        CHECK(m2.initial_bn.cpts[f].table == m.initial_bn.cpts[f].table);
    }
    for (int j = 0; j < m.num_agents; ++j) {
        CHECK(same_parents(m2.dbn.observation_cpts[j].parents, m.dbn.observation_cpts[j].parents));
        CHECK(m2.dbn.observation_cpts[j].table == m.dbn.observation_cpts[j].table);
        CHECK(same_parents(m2.rewards[j].parents, m.rewards[j].parents));
        CHECK(m2.rewards[j].values == m.rewards[j].values);
        if (j != d.agent) {
            CHECK(r.policies[j].kind == d.policies[j].kind);
            CHECK(r.policies[j].reactive == d.policies[j].reactive);
            CHECK(r.policies[j].tree == d.policies[j].tree);
        }
    }
    CHECK(r.agent == d.agent);
    CHECK(r.lsf.modeled == d.lsf.modeled);
    CHECK(r.dset.tracked == d.dset.tracked);
    // Writing the parsed instance again is byte-identical.
    CHECK(write_instance(r) == text);
}

}  // namespace

TEST_CASE("round-trip is bit-exact on all built-in domains") {
    check_roundtrip(gen_housesearch({}, false));
    check_roundtrip(gen_housesearch({}, true));
    check_roundtrip(gen_planetary({}));
    check_roundtrip(gen_chain(ChainVariant::Fig10));
    check_roundtrip(gen_chain(ChainVariant::Fig11));
}

TEST_CASE("round-trip is bit-exact on random instances") {
    RandomParams prm;
    prm.shrink_dset = false;
    for (unsigned seed = 0; seed < 10; ++seed) check_roundtrip(gen_random(prm, seed));
}

TEST_CASE("explicit-tree policies survive the round trip") {
    auto d = gen_housesearch({}, false);
    Policy tree;
    tree.kind = Policy::Kind::ExplicitTree;
    tree.tree[{}] = {0.25, 0.5, 0.25};
    tree.tree[{2, 5}] = {1.0, 0.0, 0.0};
    tree.tree[{2, 5, 0, 1}] = {0.0, 0.125, 0.875};
    d.policies[0] = tree;
    check_roundtrip(d);
}

TEST_CASE("seed-equal generation writes byte-identical files") {
    RandomParams prm;
    prm.shrink_dset = false;
    CHECK(write_instance(gen_random(prm, 0)) == write_instance(gen_random(prm, 0)));
    CHECK(write_instance(gen_housesearch({}, true)) == write_instance(gen_housesearch({}, true)));
}

TEST_CASE("malformed documents raise ModelError") {
    auto text = write_instance(gen_chain(ChainVariant::Fig10));
    CHECK_THROWS_AS(read_instance("not-a-model"), ModelError);
    CHECK_THROWS_AS(read_instance(text.substr(0, text.size() / 2)), ModelError);
    // Corrupt a section count.
    auto bad = text;
    bad.replace(bad.find("section factors 2"), 17, "section factors 3");
    CHECK_THROWS_AS(read_instance(bad), ModelError);
    // Unknown parent tag.
    auto bad2 = text;
    bad2.replace(bad2.find("prev:0"), 6, "sideways:0");
    CHECK_THROWS_AS(read_instance(bad2), ModelError);
}

TEST_CASE("save and load through the filesystem") {
    auto d = gen_planetary({});
    std::string path = "test_io_instance.ibam";
    save_instance(d, path);
    auto r = load_instance(path);
    CHECK(write_instance(r) == write_instance(d));
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_instance("does-not-exist.ibam"), ModelError);
}

#include "iba/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace iba {

namespace {

// Shortest exact decimal representation: 17 significant digits always
// round-trip a double bit-exactly through strtod.
std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

const char* tag_of(const NodeRef& r, bool same_slice) {
    switch (r.kind) {
        case NodeRef::Kind::PrevFactor: return "prev";
        case NodeRef::Kind::NextFactor: return same_slice ? "same" : "next";
        case NodeRef::Kind::Action: return "action";
    }
    return "?";
}

void write_parents(std::ostream& os, const std::vector<NodeRef>& parents, bool same_slice) {
    os << "parents " << parents.size();
    for (const NodeRef& p : parents) os << ' ' << tag_of(p, same_slice) << ':' << p.id;
}

void write_table(std::ostream& os, const std::vector<double>& table) {
    os << "table " << table.size();
    for (double v : table) os << ' ' << fmt(v);
}

// Whitespace-token reader with positional error messages.
struct Lexer {
    std::istringstream in;
    explicit Lexer(const std::string& text) : in(text) {}

    std::string next() {
        std::string tok;
        if (!(in >> tok)) throw ModelError("model file: unexpected end of input");
        return tok;
    }
    void expect(const std::string& want) {
        std::string got = next();
        if (got != want)
            throw ModelError("model file: expected '" + want + "', got '" + got + "'");
    }
    int integer() {
        std::string tok = next();
        try {
            std::size_t pos = 0;
            int v = std::stoi(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw ModelError("model file: expected an integer, got '" + tok + "'");
        }
    }
    double real() {
        std::string tok = next();
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size())
            throw ModelError("model file: expected a number, got '" + tok + "'");
        return v;
    }
};

std::vector<NodeRef> read_parents(Lexer& lx) {
    lx.expect("parents");
    int n = lx.integer();
    std::vector<NodeRef> out;
    for (int k = 0; k < n; ++k) {
        std::string tok = lx.next();
        auto colon = tok.find(':');
        if (colon == std::string::npos)
            throw ModelError("model file: malformed parent '" + tok + "'");
        std::string tag = tok.substr(0, colon);
        int id = 0;
        try {
            id = std::stoi(tok.substr(colon + 1));
        } catch (const std::exception&) {
            throw ModelError("model file: malformed parent id in '" + tok + "'");
        }
        if (tag == "prev") out.push_back(prev_factor(id));
        else if (tag == "next" || tag == "same") out.push_back(next_factor(id));
        else if (tag == "action") out.push_back(action_node(id));
        else throw ModelError("model file: unknown parent tag '" + tag + "'");
    }
    return out;
}

std::vector<double> read_table(Lexer& lx) {
    lx.expect("table");
    int n = lx.integer();
    if (n < 0) throw ModelError("model file: negative table size");
    std::vector<double> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) out.push_back(lx.real());
    return out;
}

}  // namespace

std::string write_instance(const Domain& d) {
    const FactoredPosg& m = d.model;
    std::ostringstream os;
    os << "iba-model v1\n";
    os << "name " << (d.name.empty() ? "unnamed" : d.name) << "\n";

    os << "section factors " << m.num_factors() << "\n";
    for (const Factor& f : m.dbn.factors)
        os << "factor " << f.id << ' ' << (f.name.empty() ? "x" + std::to_string(f.id) : f.name)
           << ' ' << f.domain_size << "\n";

    os << "section cpts " << m.dbn.factor_cpts.size() << "\n";
    for (std::size_t f = 0; f < m.dbn.factor_cpts.size(); ++f) {
        os << "cpt " << f << ' ';
        write_parents(os, m.dbn.factor_cpts[f].parents, false);
        os << ' ';
        write_table(os, m.dbn.factor_cpts[f].table);
        os << "\n";
    }

    os << "section observations " << m.dbn.observation_cpts.size() << "\n";
    for (std::size_t j = 0; j < m.dbn.observation_cpts.size(); ++j) {
        os << "obs " << j << " domain " << m.dbn.observation_cpts[j].child_domain << ' ';
        write_parents(os, m.dbn.observation_cpts[j].parents, true);
        os << ' ';
        write_table(os, m.dbn.observation_cpts[j].table);
        os << "\n";
    }

    os << "section rewards " << m.rewards.size() << "\n";
    for (std::size_t j = 0; j < m.rewards.size(); ++j) {
        os << "reward " << j << ' ';
        write_parents(os, m.rewards[j].parents, false);
        os << ' ';
        write_table(os, m.rewards[j].values);
        os << "\n";
    }

    os << "section initial_bn " << m.initial_bn.cpts.size() << "\n";
    for (std::size_t f = 0; f < m.initial_bn.cpts.size(); ++f) {
        os << "cpt " << f << ' ';
        write_parents(os, m.initial_bn.cpts[f].parents, false);
        os << ' ';
        write_table(os, m.initial_bn.cpts[f].table);
        os << "\n";
    }

    os << "section agents\n";
    os << "count " << m.num_agents << "\n";
    os << "protagonist " << d.agent << "\n";
    os << "actions";
    for (int a : m.num_actions) os << ' ' << a;
    os << "\nobservations";
    for (int o : m.num_observations) os << ' ' << o;
    os << "\n";

    os << "section policies " << d.policies.size() << "\n";
    for (std::size_t j = 0; j < d.policies.size(); ++j) {
        const Policy& pi = d.policies[j];
        if (static_cast<int>(j) == d.agent) {
            os << "policy " << j << " none\n";
        } else if (pi.kind == Policy::Kind::Reactive) {
            os << "policy " << j << " reactive " << pi.reactive.size() << "\n";
            for (const auto& [key, dist] : pi.reactive) {
                os << "row " << key;
                for (double v : dist) os << ' ' << fmt(v);
                os << "\n";
            }
        } else {
            os << "policy " << j << " tree " << pi.tree.size() << "\n";
            for (const auto& [aoh, dist] : pi.tree) {
                os << "row " << aoh.size();
                for (int v : aoh) os << ' ' << v;
                for (double v : dist) os << ' ' << fmt(v);
                os << "\n";
            }
        }
    }

    os << "section lsf " << d.lsf.modeled.size() << "\n";
    for (std::size_t j = 0; j < d.lsf.modeled.size(); ++j) {
        os << "modeled " << j << ' ' << d.lsf.modeled[j].size();
        for (int f : d.lsf.modeled[j]) os << ' ' << f;
        os << "\n";
    }

    os << "section dset " << d.dset.tracked.size() << "\n";
    for (const DSetEntry& e : d.dset.tracked) {
        if (e.own_action) {
            os << "entry own_action\n";
        } else {
            const char* r = e.retention == Retention::FullHistory ? "full"
                            : e.retention == Retention::Stage0Only ? "stage0"
                                                                   : "last";
            os << "entry factor " << e.factor << ' ' << r << "\n";
        }
    }

    os << "section horizon\n" << m.horizon << "\n";
    os << "section gamma\n" << fmt(m.gamma) << "\n";
    os << "end\n";
    return os.str();
}

Domain read_instance(const std::string& text) {
    Lexer lx(text);
    lx.expect("iba-model");
    lx.expect("v1");
    Domain d;
    FactoredPosg& m = d.model;
    lx.expect("name");
    d.name = lx.next();

    lx.expect("section");
    lx.expect("factors");
    int nf = lx.integer();
    for (int f = 0; f < nf; ++f) {
        lx.expect("factor");
        Factor fac;
        fac.id = lx.integer();
        fac.name = lx.next();
        fac.domain_size = lx.integer();
        if (fac.id != f) throw ModelError("model file: factor ids must be 0..n-1 in order");
        if (fac.domain_size < 1) throw ModelError("model file: factor domain must be positive");
        m.dbn.factors.push_back(std::move(fac));
    }

    lx.expect("section");
    lx.expect("cpts");
    int nc = lx.integer();
    if (nc != nf) throw ModelError("model file: need exactly one cpt per factor");
    for (int f = 0; f < nc; ++f) {
        lx.expect("cpt");
        if (lx.integer() != f) throw ModelError("model file: cpts must be listed in factor order");
        Cpt c;
        c.parents = read_parents(lx);
        c.child_domain = m.dbn.factors[f].domain_size;
        c.table = read_table(lx);
        m.dbn.factor_cpts.push_back(std::move(c));
    }

    lx.expect("section");
    lx.expect("observations");
    int no = lx.integer();
    for (int j = 0; j < no; ++j) {
        lx.expect("obs");
        if (lx.integer() != j)
            throw ModelError("model file: observation cpts must be listed in agent order");
        Cpt c;
        lx.expect("domain");
        c.child_domain = lx.integer();
        c.parents = read_parents(lx);
        c.table = read_table(lx);
        m.dbn.observation_cpts.push_back(std::move(c));
    }

    lx.expect("section");
    lx.expect("rewards");
    int nr = lx.integer();
    for (int j = 0; j < nr; ++j) {
        lx.expect("reward");
        if (lx.integer() != j) throw ModelError("model file: rewards must be listed in agent order");
        RewardTable r;
        r.parents = read_parents(lx);
        r.values = read_table(lx);
        m.rewards.push_back(std::move(r));
    }

    lx.expect("section");
    lx.expect("initial_bn");
    int nb = lx.integer();
    if (nb != nf) throw ModelError("model file: need exactly one initial cpt per factor");
    for (int f = 0; f < nb; ++f) {
        lx.expect("cpt");
        if (lx.integer() != f)
            throw ModelError("model file: initial cpts must be listed in factor order");
        Cpt c;
        c.parents = read_parents(lx);
        c.child_domain = m.dbn.factors[f].domain_size;
        c.table = read_table(lx);
        m.initial_bn.cpts.push_back(std::move(c));
    }

    lx.expect("section");
    lx.expect("agents");
    lx.expect("count");
    m.num_agents = lx.integer();
    if (m.num_agents < 1) throw ModelError("model file: need at least one agent");
    lx.expect("protagonist");
    d.agent = lx.integer();
    if (d.agent < 0 || d.agent >= m.num_agents)
        throw ModelError("model file: protagonist index out of range");
    lx.expect("actions");
    for (int j = 0; j < m.num_agents; ++j) m.num_actions.push_back(lx.integer());
    lx.expect("observations");
    for (int j = 0; j < m.num_agents; ++j) m.num_observations.push_back(lx.integer());
    if (no != m.num_agents || nr != m.num_agents)
        throw ModelError("model file: observation/reward counts must match the agent count");

    lx.expect("section");
    lx.expect("policies");
    int np = lx.integer();
    if (np != m.num_agents)
        throw ModelError("model file: need exactly one policy entry per agent");
    for (int j = 0; j < np; ++j) {
        lx.expect("policy");
        if (lx.integer() != j)
            throw ModelError("model file: policies must be listed in agent order");
        std::string kind = lx.next();
        Policy pi;
        if (kind == "none") {
            // protagonist placeholder
        } else if (kind == "reactive") {
            pi.kind = Policy::Kind::Reactive;
            int rows = lx.integer();
            for (int r = 0; r < rows; ++r) {
                lx.expect("row");
                int key = lx.integer();
                std::vector<double> dist;
                for (int a = 0; a < m.num_actions[j]; ++a) dist.push_back(lx.real());
                pi.reactive[key] = std::move(dist);
            }
        } else if (kind == "tree") {
            pi.kind = Policy::Kind::ExplicitTree;
            int rows = lx.integer();
            for (int r = 0; r < rows; ++r) {
                lx.expect("row");
                int len = lx.integer();
                std::vector<int> aoh;
                for (int k = 0; k < len; ++k) aoh.push_back(lx.integer());
                std::vector<double> dist;
                for (int a = 0; a < m.num_actions[j]; ++a) dist.push_back(lx.real());
                pi.tree[std::move(aoh)] = std::move(dist);
            }
        } else {
            throw ModelError("model file: unknown policy kind '" + kind + "'");
        }
        d.policies.push_back(std::move(pi));
    }

    lx.expect("section");
    lx.expect("lsf");
    int nl = lx.integer();
    d.lsf.modeled.resize(nl);
    for (int j = 0; j < nl; ++j) {
        lx.expect("modeled");
        if (lx.integer() != j) throw ModelError("model file: lsf rows must be in agent order");
        int k = lx.integer();
        for (int q = 0; q < k; ++q) d.lsf.modeled[j].insert(lx.integer());
    }

    lx.expect("section");
    lx.expect("dset");
    int nd = lx.integer();
    for (int e = 0; e < nd; ++e) {
        lx.expect("entry");
        std::string what = lx.next();
        if (what == "own_action") {
            d.dset.tracked.push_back({true, -1, Retention::FullHistory});
        } else if (what == "factor") {
            DSetEntry entry;
            entry.factor = lx.integer();
            std::string r = lx.next();
            if (r == "full") entry.retention = Retention::FullHistory;
            else if (r == "stage0") entry.retention = Retention::Stage0Only;
            else if (r == "last") entry.retention = Retention::LastValue;
            else throw ModelError("model file: unknown retention '" + r + "'");
            d.dset.tracked.push_back(entry);
        } else {
            throw ModelError("model file: unknown d-set entry kind '" + what + "'");
        }
    }

    lx.expect("section");
    lx.expect("horizon");
    m.horizon = lx.integer();
    lx.expect("section");
    lx.expect("gamma");
    m.gamma = lx.real();
    lx.expect("end");

    try {
        m.finalize();
    } catch (const std::exception& e) {
        throw ModelError(std::string("model file: ") + e.what());
    }
    return d;
}

void save_instance(const Domain& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot open '" + path + "' for writing");
    out << write_instance(d);
}

Domain load_instance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return read_instance(ss.str());
}

}  // namespace iba

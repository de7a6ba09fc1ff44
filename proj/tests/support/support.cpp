#include "support.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pnltl::testsupport {

// --- net construction ----------------------------------------------------

uint32_t NetBuilder::place(const std::string& name, uint32_t tokens) {
    net_.places.push_back({name, -1, 0});
    net_.initial_marking.push_back(tokens);
    return static_cast<uint32_t>(net_.places.size() - 1);
}

uint32_t NetBuilder::transition(const std::string& name,
                                const std::vector<std::pair<std::string, uint32_t>>& pre,
                                const std::vector<std::pair<std::string, uint32_t>>& post) {
    net_.rebuild_name_maps();
    TransitionInfo t;
    t.name = name;
    auto resolve = [&](const std::vector<std::pair<std::string, uint32_t>>& arcs,
                       std::vector<Arc>& out) {
        for (const auto& [pname, w] : arcs) {
            const auto p = net_.place_index(pname);
            if (!p) throw std::runtime_error("NetBuilder: unknown place " + pname);
            bool merged = false;
            for (Arc& a : out) {
                if (a.place == *p) {
                    a.weight += w;
                    merged = true;
                }
            }
            if (!merged) out.push_back({*p, w});
        }
        std::sort(out.begin(), out.end(),
                  [](const Arc& a, const Arc& b) { return a.place < b.place; });
    };
    resolve(pre, t.pre);
    resolve(post, t.post);
    net_.transitions.push_back(std::move(t));
    return static_cast<uint32_t>(net_.transitions.size() - 1);
}

PetriNet NetBuilder::finish() {
    net_.rebuild_name_maps();
    return std::move(net_);
}

PetriNet philosophers(int n) {
    NetBuilder b;
    for (int i = 0; i < n; ++i) {
        b.place("think_" + std::to_string(i), 1);
        b.place("eat_" + std::to_string(i), 0);
        b.place("fork_" + std::to_string(i), 1);
    }
    for (int i = 0; i < n; ++i) {
        const std::string si = std::to_string(i), sj = std::to_string((i + 1) % n);
        b.transition("take_" + si,
                     {{"think_" + si, 1}, {"fork_" + si, 1}, {"fork_" + sj, 1}},
                     {{"eat_" + si, 1}});
        b.transition("release_" + si, {{"eat_" + si, 1}},
                     {{"think_" + si, 1}, {"fork_" + si, 1}, {"fork_" + sj, 1}});
    }
    return b.finish();
}

PetriNet token_ring(int n) {
    NetBuilder b;
    for (int i = 0; i < n; ++i) b.place("node_" + std::to_string(i), i == 0 ? 1 : 0);
    for (int i = 0; i < n; ++i) {
        b.transition("pass_" + std::to_string(i), {{"node_" + std::to_string(i), 1}},
                     {{"node_" + std::to_string((i + 1) % n), 1}});
    }
    return b.finish();
}

PetriNet producer_consumer(int capacity) {
    NetBuilder b;
    b.place("free", static_cast<uint32_t>(capacity));
    b.place("used", 0);
    b.transition("produce", {{"free", 1}}, {{"used", 1}});
    b.transition("consume", {{"used", 1}}, {{"free", 1}});
    return b.finish();
}

PetriNet drain_net(int tokens) {
    NetBuilder b;
    b.place("pool", static_cast<uint32_t>(tokens));
    b.transition("drain", {{"pool", 1}}, {});
    return b.finish();
}

PetriNet counter_chain(int length, int tokens) {
    NetBuilder b;
    for (int i = 0; i < length; ++i)
        b.place("c_" + std::to_string(i), i == 0 ? static_cast<uint32_t>(tokens) : 0);
    for (int i = 0; i + 1 < length; ++i) {
        b.transition("step_" + std::to_string(i), {{"c_" + std::to_string(i), 1}},
                     {{"c_" + std::to_string(i + 1), 1}});
    }
    return b.finish();
}

PetriNet wide_net(int breadth) {
    NetBuilder b;
    b.place("hub", static_cast<uint32_t>(breadth));
    for (int i = 0; i < breadth; ++i) b.place("sink_" + std::to_string(i), 0);
    for (int i = 0; i < breadth; ++i) {
        b.transition("spread_" + std::to_string(i), {{"hub", 1}},
                     {{"sink_" + std::to_string(i), 1}});
    }
    return b.finish();
}

PetriNet toggle_net(int bits) {
    NetBuilder b;
    for (int i = 0; i < bits; ++i) {
        b.place("lo_" + std::to_string(i), 1);
        b.place("hi_" + std::to_string(i), 0);
    }
    for (int i = 0; i < bits; ++i) {
        const std::string s = std::to_string(i);
        b.transition("up_" + s, {{"lo_" + s, 1}}, {{"hi_" + s, 1}});
        b.transition("down_" + s, {{"hi_" + s, 1}}, {{"lo_" + s, 1}});
    }
    return b.finish();
}

PetriNet random_bounded_net(std::mt19937_64& rng, int places, int transitions) {
    NetBuilder b;
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> pidx(0, places - 1);
    for (int i = 0; i < places; ++i)
        b.place("p_" + std::to_string(i), i == 0 ? 2 : (coin(rng) ? 1 : 0));
    for (int i = 0; i < transitions; ++i) {
        // Token-conserving or token-consuming moves keep the state space finite.
        const int npre = 1 + coin(rng);
        std::vector<std::pair<std::string, uint32_t>> pre, post;
        for (int k = 0; k < npre; ++k) pre.push_back({"p_" + std::to_string(pidx(rng)), 1});
        const int npost = std::uniform_int_distribution<int>(0, npre)(rng);
        for (int k = 0; k < npost; ++k) post.push_back({"p_" + std::to_string(pidx(rng)), 1});
        b.transition("t_" + std::to_string(i), pre, post);
    }
    return b.finish();
}

std::string to_pnml(const PetriNet& net) {
    std::ostringstream os;
    os << "<?xml version=\"1.0\"?>\n<pnml xmlns=\"http://www.pnml.org/version-2009/grammar/pnml\">\n"
       << "  <net id=\"net\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">\n";
    if (net.has_units() || net.declared_safe) {
        os << "    <toolspecific tool=\"nupn\" version=\"1.1\">\n      <structure"
           << (net.declared_safe ? " safe=\"true\"" : "") << ">\n";
        for (const UnitInfo& u : net.units) {
            os << "        <unit id=\"" << u.name << "\"><places>";
            for (size_t i = 0; i < u.local_places.size(); ++i)
                os << (i ? " " : "") << net.places[u.local_places[i]].name;
            os << "</places></unit>\n";
        }
        os << "      </structure>\n    </toolspecific>\n";
    }
    os << "    <page id=\"page\">\n";
    for (uint32_t p = 0; p < net.places.size(); ++p) {
        os << "      <place id=\"" << net.places[p].name << "\">";
        if (net.initial_marking[p])
            os << "<initialMarking><text>" << net.initial_marking[p] << "</text></initialMarking>";
        os << "</place>\n";
    }
    int arc = 0;
    for (const TransitionInfo& t : net.transitions) {
        os << "      <transition id=\"" << t.name << "\"/>\n";
        for (const Arc& a : t.pre) {
            os << "      <arc id=\"a" << arc++ << "\" source=\"" << net.places[a.place].name
               << "\" target=\"" << t.name << "\">";
            if (a.weight != 1)
                os << "<inscription><text>" << a.weight << "</text></inscription>";
            os << "</arc>\n";
        }
        for (const Arc& a : t.post) {
            os << "      <arc id=\"a" << arc++ << "\" source=\"" << t.name << "\" target=\""
               << net.places[a.place].name << "\">";
            if (a.weight != 1)
                os << "<inscription><text>" << a.weight << "</text></inscription>";
            os << "</arc>\n";
        }
    }
    os << "    </page>\n  </net>\n</pnml>\n";
    return os.str();
}

std::vector<PetriNet> oracle_corpus() {
    std::vector<PetriNet> nets;
    for (int n = 3; n <= 5; ++n) nets.push_back(philosophers(n));
    for (int n = 2; n <= 6; ++n) nets.push_back(token_ring(n));
    for (int c = 1; c <= 5; ++c) nets.push_back(producer_consumer(c));
    for (int t = 1; t <= 5; ++t) nets.push_back(drain_net(t));
    for (int l = 2; l <= 6; ++l) nets.push_back(counter_chain(l, 2));
    std::mt19937_64 rng(20260823);
    while (nets.size() < 31) {
        nets.push_back(random_bounded_net(rng, 4 + int(nets.size() % 3), 5));
    }
    return nets;
}

std::vector<std::string> corpus_formulas(const PetriNet& net) {
    const std::string p0 = net.places.front().name;
    const std::string pl = net.places.back().name;
    const std::string t0 = net.transitions.front().name;
    std::string all;
    for (const TransitionInfo& t : net.transitions) {
        if (!all.empty()) all += ",";
        all += t.name;
    }
    return {
        "F (is-fireable(" + t0 + "))",
        "G (is-fireable(" + all + "))",
        "G (tokens-count(" + p0 + ") <= 1)",
        "F G (tokens-count(" + p0 + ") <= 0)",
        "(tokens-count(" + p0 + ") <= 0) U (is-fireable(" + t0 + "))",
        "X (tokens-count(" + pl + ") <= 0)",
        "G F (tokens-count(" + p0 + ") = 1)",
    };
}

// --- reachability ---------------------------------------------------------

std::vector<Marking> reachable_markings(const PetriNet& net, size_t limit) {
    std::map<Marking, uint32_t> seen;
    std::vector<Marking> out;
    std::deque<Marking> work;
    seen.emplace(net.initial_marking, 0);
    out.push_back(net.initial_marking);
    work.push_back(net.initial_marking);
    while (!work.empty()) {
        const Marking m = std::move(work.front());
        work.pop_front();
        for (uint32_t t : fireset(net, m)) {
            Marking s = fire(net, m, t);
            if (seen.emplace(s, uint32_t(out.size())).second) {
                if (out.size() >= limit) throw std::runtime_error("reachability limit exceeded");
                out.push_back(s);
                work.push_back(std::move(s));
            }
        }
    }
    return out;
}

// --- generic accepting-cycle detection (iterative Tarjan) ------------------

namespace {

// adj given explicitly; returns true iff some SCC contains an accepting node
// and an internal edge (covers self-loops).
bool has_accepting_cycle(const std::vector<std::vector<uint32_t>>& adj,
                         const std::vector<char>& accepting,
                         const std::vector<uint32_t>& roots) {
    const uint32_t n = static_cast<uint32_t>(adj.size());
    std::vector<uint32_t> index(n, UINT32_MAX), low(n, 0), comp(n, UINT32_MAX);
    std::vector<char> on_stack(n, 0);
    std::vector<uint32_t> stack;
    uint32_t next_index = 0, next_comp = 0;

    struct Frame {
        uint32_t v;
        size_t child;
    };
    for (uint32_t root : roots) {
        if (index[root] != UINT32_MAX) continue;
        std::vector<Frame> call;
        call.push_back({root, 0});
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.child < adj[f.v].size()) {
                const uint32_t w = adj[f.v][f.child++];
                if (index[w] == UINT32_MAX) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                if (low[f.v] == index[f.v]) {
                    uint32_t w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp[w] = next_comp;
                    } while (w != f.v);
                    ++next_comp;
                }
                const uint32_t v = f.v;
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }

    std::vector<char> comp_has_accepting(next_comp, 0), comp_has_edge(next_comp, 0);
    for (uint32_t v = 0; v < n; ++v) {
        if (comp[v] == UINT32_MAX) continue;  // unreachable from the roots
        if (accepting[v]) comp_has_accepting[comp[v]] = 1;
        for (uint32_t w : adj[v])
            if (comp[w] == comp[v]) comp_has_edge[comp[v]] = 1;
    }
    for (uint32_t c = 0; c < next_comp; ++c)
        if (comp_has_accepting[c] && comp_has_edge[c]) return true;
    return false;
}

}  // namespace

// --- brute-force product --------------------------------------------------

bool brute_force_violated(const PetriNet& net, const BuchiAutomaton& a,
                          const std::vector<BoundAtom>& atoms) {
    if (a.initial.empty()) return false;
    const uint32_t nb = static_cast<uint32_t>(a.states.size());

    std::map<Marking, uint32_t> mid;
    std::vector<Marking> markings;
    auto intern = [&](const Marking& m) {
        auto [it, fresh] = mid.emplace(m, uint32_t(markings.size()));
        if (fresh) markings.push_back(m);
        return it->second;
    };
    const uint32_t m0 = intern(net.initial_marking);

    auto pid = [&](uint32_t m, uint32_t b) { return m * nb + b; };
    std::vector<std::vector<uint32_t>> adj;
    std::vector<char> accepting;
    std::vector<char> visited;
    auto ensure = [&](uint32_t id) {
        if (adj.size() <= id) {
            adj.resize(id + 1);
            accepting.resize(id + 1, 0);
            visited.resize(id + 1, 0);
        }
    };

    std::deque<std::pair<uint32_t, uint32_t>> work;
    std::vector<uint32_t> roots;
    for (uint32_t b0 : a.initial) {
        const uint32_t id = pid(m0, b0);
        ensure(id);
        if (!visited[id]) {
            visited[id] = 1;
            work.push_back({m0, b0});
            roots.push_back(id);
        }
    }
    while (!work.empty()) {
        auto [m, b] = work.front();
        work.pop_front();
        const uint32_t src = pid(m, b);
        ensure(src);
        accepting[src] = a.states[b].accepting;
        // copy: intern() below may reallocate `markings`
        const Marking dense = markings[m];
        const std::vector<uint32_t> fs = fireset(net, dense);
        for (const BuchiEdge& e : a.states[b].edges) {
            bool sat = true;
            for (const BuchiLiteral& l : e.label) {
                if (eval_atom(net, dense, atoms[l.atom]) == l.negated) {
                    sat = false;
                    break;
                }
            }
            if (!sat) continue;
            auto push = [&](uint32_t m2) {
                const uint32_t dst = pid(m2, e.dst);
                ensure(dst);
                adj[src].push_back(dst);
                if (!visited[dst]) {
                    visited[dst] = 1;
                    accepting[dst] = a.states[e.dst].accepting;
                    work.push_back({m2, e.dst});
                }
            };
            if (fs.empty()) {
                push(m);  // deadlock stutter
            } else {
                for (uint32_t t : fs) push(intern(fire(net, dense, t)));
            }
        }
    }
    const uint32_t total = uint32_t(markings.size()) * nb;
    adj.resize(total);
    accepting.resize(total, 0);
    return has_accepting_cycle(adj, accepting, roots);
}

bool brute_force_formula_violated(const PetriNet& net, const LtlFormula& f) {
    LtlFormula negated = f;
    negated.root = mk_unary(LtlOp::Not, f.root);
    const LtlFormula nnf = to_nnf(negated);
    const BuchiAutomaton a = ltl_to_buchi(nnf);
    return brute_force_violated(net, a, nnf.atoms);
}

// --- lasso oracles --------------------------------------------------------

bool lasso_satisfies(const LtlPtr& root, const std::vector<std::vector<bool>>& vals,
                     size_t loop_start) {
    const size_t n = vals.size();
    auto next = [&](size_t i) { return i + 1 < n ? i + 1 : loop_start; };

    // Truth per position, bottom-up over subformulas; U as least and R as
    // greatest fixpoint iterated to stability over the lasso positions.
    std::map<const LtlNode*, std::vector<char>> memo;
    auto eval = [&](auto&& self, const LtlPtr& f) -> const std::vector<char>& {
        auto it = memo.find(f.get());
        if (it != memo.end()) return it->second;
        std::vector<char> v(n, 0);
        switch (f->op) {
            case LtlOp::True: v.assign(n, 1); break;
            case LtlOp::False: break;
            case LtlOp::Atom:
                for (size_t i = 0; i < n; ++i) v[i] = vals[i][f->atom];
                break;
            case LtlOp::Not: {
                const auto& a = self(self, f->lhs);
                for (size_t i = 0; i < n; ++i) v[i] = !a[i];
                break;
            }
            case LtlOp::And: {
                const auto& a = self(self, f->lhs);
                const auto& b = self(self, f->rhs);
                for (size_t i = 0; i < n; ++i) v[i] = a[i] && b[i];
                break;
            }
            case LtlOp::Or: {
                const auto& a = self(self, f->lhs);
                const auto& b = self(self, f->rhs);
                for (size_t i = 0; i < n; ++i) v[i] = a[i] || b[i];
                break;
            }
            case LtlOp::X: {
                const auto& a = self(self, f->lhs);
                for (size_t i = 0; i < n; ++i) v[i] = a[next(i)];
                break;
            }
            case LtlOp::F:
            case LtlOp::U: {
                const std::vector<char> p =
                    f->op == LtlOp::U ? self(self, f->lhs) : std::vector<char>(n, 1);
                const auto& q = self(self, f->op == LtlOp::U ? f->rhs : f->lhs);
                v.assign(n, 0);
                for (bool changed = true; changed;) {
                    changed = false;
                    for (size_t k = 0; k < n; ++k) {
                        const size_t i = n - 1 - k;
                        const char nv = q[i] || (p[i] && v[next(i)]);
                        if (nv != v[i]) {
                            v[i] = nv;
                            changed = true;
                        }
                    }
                }
                break;
            }
            case LtlOp::G:
            case LtlOp::R: {
                const std::vector<char> p =
                    f->op == LtlOp::R ? self(self, f->lhs) : std::vector<char>(n, 0);
                const auto& q = self(self, f->op == LtlOp::R ? f->rhs : f->lhs);
                v.assign(n, 1);
                for (bool changed = true; changed;) {
                    changed = false;
                    for (size_t k = 0; k < n; ++k) {
                        const size_t i = n - 1 - k;
                        const char nv = q[i] && (p[i] || v[next(i)]);
                        if (nv != v[i]) {
                            v[i] = nv;
                            changed = true;
                        }
                    }
                }
                break;
            }
        }
        return memo.emplace(f.get(), std::move(v)).first->second;
    };
    return eval(eval, root)[0];
}

bool buchi_accepts_lasso(const BuchiAutomaton& a, const std::vector<std::vector<bool>>& vals,
                         size_t loop_start) {
    if (a.initial.empty()) return false;
    const size_t n = vals.size();
    const uint32_t nb = static_cast<uint32_t>(a.states.size());
    auto next = [&](size_t i) { return i + 1 < n ? i + 1 : loop_start; };
    auto id = [&](uint32_t b, size_t pos) { return uint32_t(pos) * nb + b; };

    std::vector<std::vector<uint32_t>> adj(n * nb);
    std::vector<char> accepting(n * nb, 0);
    for (size_t pos = 0; pos < n; ++pos) {
        for (uint32_t b = 0; b < nb; ++b) {
            accepting[id(b, pos)] = a.states[b].accepting;
            for (const BuchiEdge& e : a.states[b].edges) {
                bool sat = true;
                for (const BuchiLiteral& l : e.label) {
                    if (bool(vals[pos][l.atom]) == l.negated) {
                        sat = false;
                        break;
                    }
                }
                if (sat) adj[id(b, pos)].push_back(id(e.dst, next(pos)));
            }
        }
    }
    std::vector<uint32_t> roots;
    for (uint32_t b0 : a.initial) roots.push_back(id(b0, 0));
    return has_accepting_cycle(adj, accepting, roots);
}

// --- random generators ----------------------------------------------------

LtlFormula random_formula(std::mt19937_64& rng, uint32_t atom_count, int depth) {
    LtlFormula f;
    for (uint32_t i = 0; i < atom_count; ++i) {
        BoundAtom a;
        a.kind = BoundAtom::Kind::Compare;
        a.lhs = IntOperand::make_const(int64_t(i));
        a.rhs = IntOperand::make_const(int64_t(i));
        f.atoms.push_back(a);
        f.atom_texts.push_back("a" + std::to_string(i));
    }
    std::uniform_int_distribution<int> leaf(0, 9), op(0, 8);
    std::uniform_int_distribution<uint32_t> atom(0, atom_count - 1);
    auto gen = [&](auto&& self, int d) -> LtlPtr {
        if (d <= 0 || leaf(rng) == 0) {
            const int k = leaf(rng);
            if (k == 0) return mk_true();
            if (k == 1) return mk_false();
            return mk_atom(atom(rng));
        }
        switch (op(rng)) {
            case 0: return mk_unary(LtlOp::Not, self(self, d - 1));
            case 1: return mk_unary(LtlOp::X, self(self, d - 1));
            case 2: return mk_unary(LtlOp::F, self(self, d - 1));
            case 3: return mk_unary(LtlOp::G, self(self, d - 1));
            case 4: return mk_binary(LtlOp::And, self(self, d - 1), self(self, d - 1));
            case 5: return mk_binary(LtlOp::Or, self(self, d - 1), self(self, d - 1));
            case 6: return mk_binary(LtlOp::U, self(self, d - 1), self(self, d - 1));
            case 7: return mk_binary(LtlOp::R, self(self, d - 1), self(self, d - 1));
            default: return mk_atom(atom(rng));
        }
    };
    f.root = gen(gen, depth);
    return f;
}

std::pair<std::vector<std::vector<bool>>, size_t> random_lasso(std::mt19937_64& rng,
                                                               uint32_t atom_count) {
    std::uniform_int_distribution<size_t> pre(0, 4), loop(1, 4);
    std::uniform_int_distribution<int> bit(0, 1);
    const size_t prefix = pre(rng), cycle = loop(rng);
    std::vector<std::vector<bool>> vals(prefix + cycle, std::vector<bool>(atom_count, false));
    for (auto& row : vals)
        for (uint32_t i = 0; i < atom_count; ++i) row[i] = bit(rng) != 0;
    return {vals, prefix};
}

// --- naive bit-vector codec oracle ----------------------------------------

uint32_t BitOracle::read(uint32_t start, uint32_t len) const {
    uint32_t v = 0;
    for (uint32_t i = 0; i < len; ++i)
        if (bits[start + i]) v |= uint32_t(1) << i;
    return v;
}

void BitOracle::write(uint32_t start, uint32_t len, uint32_t value) {
    for (uint32_t i = 0; i < len; ++i) bits[start + i] = (value >> i) & 1;
}

}  // namespace pnltl::testsupport

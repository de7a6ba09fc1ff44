#include "pnltl/buchi.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace pnltl {

namespace {

// --- hash-consed subformula table ----------------------------------------

struct SubFormula {
    LtlOp op;
    uint32_t atom = 0;
    int32_t lhs = -1, rhs = -1;
};

struct FormulaTable {
    std::vector<SubFormula> items;
    std::map<std::tuple<LtlOp, uint32_t, int32_t, int32_t>, uint32_t> index;

    uint32_t intern(LtlOp op, uint32_t atom, int32_t l, int32_t r) {
        auto key = std::make_tuple(op, atom, l, r);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(items.size());
        items.push_back({op, atom, l, r});
        index[key] = id;
        return id;
    }

    uint32_t from_tree(const LtlPtr& f) {
        int32_t l = f->lhs ? static_cast<int32_t>(from_tree(f->lhs)) : -1;
        int32_t r = f->rhs ? static_cast<int32_t>(from_tree(f->rhs)) : -1;
        return intern(f->op, f->atom, l, r);
    }
};

// --- tableau construction (GPVW) -----------------------------------------

using IdSet = std::set<uint32_t>;

constexpr uint32_t kInitMark = UINT32_MAX;

struct TableauNode {
    uint32_t id;
    IdSet incoming;  // ids of stored predecessor nodes; kInitMark = initial
    IdSet neww, old, next;
};

class Tableau {
public:
    explicit Tableau(FormulaTable& ft) : ft_(ft) {}

    void build(uint32_t root) {
        TableauNode q;
        q.id = fresh_id();
        q.incoming.insert(kInitMark);
        q.neww.insert(root);
        expand(std::move(q));
    }

    FormulaTable& ft_;
    std::vector<TableauNode> stored;
    std::unordered_map<uint32_t, uint32_t> id_to_index;

private:
    uint32_t fresh_id() { return next_id_++; }

    bool is_literal(uint32_t f) const {
        const SubFormula& s = ft_.items[f];
        if (s.op == LtlOp::Atom) return true;
        return s.op == LtlOp::Not && ft_.items[s.lhs].op == LtlOp::Atom;
    }

    int32_t negation_of(uint32_t f) const {
        const SubFormula& s = ft_.items[f];
        if (s.op == LtlOp::Atom) {
            auto it = ft_.index.find(std::make_tuple(LtlOp::Not, 0u, int32_t(f), int32_t(-1)));
            return it == ft_.index.end() ? -1 : int32_t(it->second);
        }
        return s.lhs;  // Not(atom) -> atom
    }

    void expand(TableauNode q) {
        if (q.neww.empty()) {
            for (TableauNode& r : stored) {
                if (r.old == q.old && r.next == q.next) {
                    r.incoming.insert(q.incoming.begin(), q.incoming.end());
                    return;
                }
            }
            id_to_index[q.id] = static_cast<uint32_t>(stored.size());
            stored.push_back(q);
            TableauNode s;
            s.id = fresh_id();
            s.incoming.insert(q.id);
            s.neww = q.next;
            expand(std::move(s));
            return;
        }
        const uint32_t eta = *q.neww.begin();
        q.neww.erase(q.neww.begin());
        if (q.old.count(eta)) {
            expand(std::move(q));
            return;
        }
        const SubFormula s = ft_.items[eta];
        switch (s.op) {
            case LtlOp::True:
                // record it: acceptance for l U true / F true checks Old
                q.old.insert(eta);
                expand(std::move(q));
                return;
            case LtlOp::False: return;  // node dies
            case LtlOp::Atom:
            case LtlOp::Not: {
                int32_t neg = negation_of(eta);
                if (neg >= 0 && q.old.count(uint32_t(neg))) return;  // contradiction
                q.old.insert(eta);
                expand(std::move(q));
                return;
            }
            case LtlOp::And:
                q.old.insert(eta);
                q.neww.insert(uint32_t(s.lhs));
                q.neww.insert(uint32_t(s.rhs));
                expand(std::move(q));
                return;
            case LtlOp::Or: {
                q.old.insert(eta);
                TableauNode q2 = q;
                q2.id = fresh_id();
                q.neww.insert(uint32_t(s.lhs));
                q2.neww.insert(uint32_t(s.rhs));
                expand(std::move(q));
                expand(std::move(q2));
                return;
            }
            case LtlOp::X:
                q.old.insert(eta);
                q.next.insert(uint32_t(s.lhs));
                expand(std::move(q));
                return;
            case LtlOp::U: {
                q.old.insert(eta);
                TableauNode q2 = q;
                q2.id = fresh_id();
                q.neww.insert(uint32_t(s.lhs));
                q.next.insert(eta);
                q2.neww.insert(uint32_t(s.rhs));
                expand(std::move(q));
                expand(std::move(q2));
                return;
            }
            case LtlOp::F: {  // true U phi
                q.old.insert(eta);
                TableauNode q2 = q;
                q2.id = fresh_id();
                q.next.insert(eta);
                q2.neww.insert(uint32_t(s.lhs));
                expand(std::move(q));
                expand(std::move(q2));
                return;
            }
            case LtlOp::R: {
                q.old.insert(eta);
                TableauNode q2 = q;
                q2.id = fresh_id();
                q.neww.insert(uint32_t(s.rhs));
                q.next.insert(eta);
                q2.neww.insert(uint32_t(s.lhs));
                q2.neww.insert(uint32_t(s.rhs));
                expand(std::move(q));
                expand(std::move(q2));
                return;
            }
            case LtlOp::G:  // false R phi: only the self-sustaining branch survives
                q.old.insert(eta);
                q.neww.insert(uint32_t(s.lhs));
                q.next.insert(eta);
                expand(std::move(q));
                return;
        }
    }

    uint32_t next_id_ = 0;
};

std::vector<BuchiLiteral> node_label(const FormulaTable& ft, const TableauNode& n) {
    std::vector<BuchiLiteral> label;
    for (uint32_t f : n.old) {
        const SubFormula& s = ft.items[f];
        if (s.op == LtlOp::Atom) label.push_back({s.atom, false});
        else if (s.op == LtlOp::Not && ft.items[s.lhs].op == LtlOp::Atom)
            label.push_back({ft.items[s.lhs].atom, true});
    }
    std::sort(label.begin(), label.end(), [](const BuchiLiteral& a, const BuchiLiteral& b) {
        return a.atom != b.atom ? a.atom < b.atom : a.negated < b.negated;
    });
    return label;
}

}  // namespace

BuchiAutomaton ltl_to_buchi(const LtlFormula& f) {
    FormulaTable ft;
    const uint32_t root = ft.from_tree(f.root);
    Tableau tab(ft);
    tab.build(root);

    BuchiAutomaton out;
    out.atom_count = static_cast<uint32_t>(f.atoms.size());

    const auto& nodes = tab.stored;
    std::vector<uint32_t> initial_nodes;
    for (uint32_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].incoming.count(kInitMark)) initial_nodes.push_back(i);
    }
    if (initial_nodes.empty()) return out;  // empty language

    // Generalized acceptance: one set per until-type subformula u = l U r
    // (F phi counts as true U phi): node in F_u iff u not in Old or r in Old.
    std::vector<std::pair<uint32_t, uint32_t>> until_subs;  // (formula, rhs-goal)
    for (uint32_t i = 0; i < ft.items.size(); ++i) {
        if (ft.items[i].op == LtlOp::U) until_subs.emplace_back(i, uint32_t(ft.items[i].rhs));
        if (ft.items[i].op == LtlOp::F) until_subs.emplace_back(i, uint32_t(ft.items[i].lhs));
    }
    const uint32_t k = static_cast<uint32_t>(until_subs.size());
    auto in_accept_set = [&](uint32_t node, uint32_t set) {
        const auto& [u, goal] = until_subs[set];
        return !nodes[node].old.count(u) || nodes[node].old.count(goal) != 0;
    };

    // Node adjacency from the incoming sets.
    std::vector<std::vector<uint32_t>> succ(nodes.size());
    for (uint32_t j = 0; j < nodes.size(); ++j) {
        for (uint32_t pred : nodes[j].incoming) {
            if (pred == kInitMark) continue;
            succ[tab.id_to_index.at(pred)].push_back(j);
        }
    }
    std::vector<std::vector<BuchiLiteral>> labels(nodes.size());
    for (uint32_t i = 0; i < nodes.size(); ++i) labels[i] = node_label(ft, nodes[i]);

    // Degeneralize: state 0 is the dedicated initial state, then reachable
    // (node, counter) pairs. Counter advances past set i when the source node
    // is in F_i; accepting = counter 1 on an F_1 node (all states when k = 0).
    const uint32_t copies = std::max<uint32_t>(k, 1);
    auto pair_key = [&](uint32_t node, uint32_t counter) { return node * copies + counter - 1; };
    std::vector<int32_t> pair_state(nodes.size() * copies, -1);

    out.states.emplace_back();  // init
    out.initial.push_back(0);
    out.states[0].accepting = (k == 0);

    std::vector<std::pair<uint32_t, uint32_t>> work;
    auto get_state = [&](uint32_t node, uint32_t counter) -> uint32_t {
        int32_t& slot = pair_state[pair_key(node, counter)];
        if (slot < 0) {
            slot = static_cast<int32_t>(out.states.size());
            out.states.emplace_back();
            out.states[slot].accepting = (k == 0) || (counter == 1 && in_accept_set(node, 0));
            work.emplace_back(node, counter);
        }
        return static_cast<uint32_t>(slot);
    };

    for (uint32_t n : initial_nodes) {
        const uint32_t dst = get_state(n, 1);  // may grow out.states
        out.states[0].edges.push_back({dst, labels[n]});
    }

    while (!work.empty()) {
        auto [node, counter] = work.back();
        work.pop_back();
        const uint32_t src = static_cast<uint32_t>(pair_state[pair_key(node, counter)]);
        uint32_t next_counter = counter;
        if (k > 0 && in_accept_set(node, counter - 1)) next_counter = counter % k + 1;
        for (uint32_t j : succ[node]) {
            const uint32_t dst = get_state(j, next_counter);
            out.states[src].edges.push_back({dst, labels[j]});
        }
    }
    return out;
}

// --- simplification ------------------------------------------------------

namespace {

// Tarjan SCC; returns component id per state, components in reverse
// topological order of the condensation.
std::vector<uint32_t> scc_of(const BuchiAutomaton& a, uint32_t& count) {
    const uint32_t n = static_cast<uint32_t>(a.states.size());
    std::vector<uint32_t> comp(n, UINT32_MAX), low(n), disc(n, UINT32_MAX);
    std::vector<uint8_t> on_stack(n, 0);
    std::vector<uint32_t> stk;
    uint32_t timer = 0;
    count = 0;

    struct Frame {
        uint32_t v;
        size_t edge;
    };
    for (uint32_t root = 0; root < n; ++root) {
        if (disc[root] != UINT32_MAX) continue;
        std::vector<Frame> frames{{root, 0}};
        disc[root] = low[root] = timer++;
        stk.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.edge < a.states[f.v].edges.size()) {
                uint32_t w = a.states[f.v].edges[f.edge++].dst;
                if (disc[w] == UINT32_MAX) {
                    disc[w] = low[w] = timer++;
                    stk.push_back(w);
                    on_stack[w] = 1;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], disc[w]);
                }
            } else {
                uint32_t v = f.v;
                frames.pop_back();
                if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
                if (low[v] == disc[v]) {
                    for (;;) {
                        uint32_t w = stk.back();
                        stk.pop_back();
                        on_stack[w] = 0;
                        comp[w] = count;
                        if (w == v) break;
                    }
                    ++count;
                }
            }
        }
    }
    return comp;
}

}  // namespace

BuchiAutomaton simplify_buchi(const BuchiAutomaton& a) {
    const uint32_t n = static_cast<uint32_t>(a.states.size());
    BuchiAutomaton empty;
    empty.atom_count = a.atom_count;
    if (a.initial.empty() || n == 0) return empty;

    // Forward reachability.
    std::vector<uint8_t> reach(n, 0);
    std::vector<uint32_t> work(a.initial.begin(), a.initial.end());
    for (uint32_t s : a.initial) reach[s] = 1;
    while (!work.empty()) {
        uint32_t v = work.back();
        work.pop_back();
        for (const BuchiEdge& e : a.states[v].edges) {
            if (!reach[e.dst]) {
                reach[e.dst] = 1;
                work.push_back(e.dst);
            }
        }
    }

    // States that lie on an accepting cycle.
    uint32_t ncomp = 0;
    std::vector<uint32_t> comp = scc_of(a, ncomp);
    std::vector<uint8_t> comp_nontrivial(ncomp, 0), comp_accepting(ncomp, 0);
    for (uint32_t v = 0; v < n; ++v) {
        for (const BuchiEdge& e : a.states[v].edges) {
            if (comp[e.dst] == comp[v]) comp_nontrivial[comp[v]] = 1;
        }
        if (a.states[v].accepting) comp_accepting[comp[v]] |= 1;
    }
    std::vector<uint8_t> seed(n, 0);
    for (uint32_t v = 0; v < n; ++v)
        seed[v] = a.states[v].accepting && comp_nontrivial[comp[v]];

    // Backward closure: states that can reach some seed.
    std::vector<std::vector<uint32_t>> preds(n);
    for (uint32_t v = 0; v < n; ++v)
        for (const BuchiEdge& e : a.states[v].edges) preds[e.dst].push_back(v);
    std::vector<uint8_t> live(n, 0);
    for (uint32_t v = 0; v < n; ++v) {
        if (seed[v] && !live[v]) {
            live[v] = 1;
            work.push_back(v);
        }
    }
    while (!work.empty()) {
        uint32_t v = work.back();
        work.pop_back();
        for (uint32_t p : preds[v]) {
            if (!live[p]) {
                live[p] = 1;
                work.push_back(p);
            }
        }
    }

    std::vector<int32_t> remap(n, -1);
    BuchiAutomaton out;
    out.atom_count = a.atom_count;
    for (uint32_t v = 0; v < n; ++v) {
        if (!(reach[v] && live[v])) continue;
        remap[v] = static_cast<int32_t>(out.states.size());
        out.states.emplace_back();
        out.states.back().accepting = a.states[v].accepting;
    }
    for (uint32_t v = 0; v < n; ++v) {
        if (remap[v] < 0) continue;
        for (const BuchiEdge& e : a.states[v].edges) {
            if (remap[e.dst] >= 0)
                out.states[remap[v]].edges.push_back({uint32_t(remap[e.dst]), e.label});
        }
    }
    for (uint32_t s : a.initial)
        if (remap[s] >= 0) out.initial.push_back(uint32_t(remap[s]));
    if (out.initial.empty()) return empty;

    // Canonical edge order + duplicate edge removal.
    auto canonicalize = [](BuchiAutomaton& b) {
        for (BuchiState& s : b.states) {
            std::sort(s.edges.begin(), s.edges.end(),
                      [](const BuchiEdge& x, const BuchiEdge& y) {
                          if (x.dst != y.dst) return x.dst < y.dst;
                          return std::lexicographical_compare(
                              x.label.begin(), x.label.end(), y.label.begin(), y.label.end(),
                              [](const BuchiLiteral& a, const BuchiLiteral& b) {
                                  return a.atom != b.atom ? a.atom < b.atom
                                                          : a.negated < b.negated;
                              });
                      });
            s.edges.erase(std::unique(s.edges.begin(), s.edges.end()), s.edges.end());
        }
    };
    canonicalize(out);

    // Merge states with identical acceptance and out-edge sets, to fixpoint.
    for (;;) {
        std::map<std::pair<bool, std::vector<std::pair<uint32_t, std::vector<uint32_t>>>>, uint32_t>
            sig_to_state;
        std::vector<uint32_t> merge_map(out.states.size());
        bool merged = false;
        for (uint32_t v = 0; v < out.states.size(); ++v) {
            std::vector<std::pair<uint32_t, std::vector<uint32_t>>> sig;
            for (const BuchiEdge& e : out.states[v].edges) {
                std::vector<uint32_t> lab;
                for (const BuchiLiteral& l : e.label) lab.push_back(l.atom * 2 + l.negated);
                sig.emplace_back(e.dst, std::move(lab));
            }
            auto key = std::make_pair(out.states[v].accepting, std::move(sig));
            auto [it, fresh] = sig_to_state.emplace(std::move(key), v);
            merge_map[v] = it->second;
            merged |= !fresh;
        }
        if (!merged) break;
        // Compact survivors and rewrite edges/initial through the merge map.
        std::vector<int32_t> compact(out.states.size(), -1);
        BuchiAutomaton next;
        next.atom_count = out.atom_count;
        for (uint32_t v = 0; v < out.states.size(); ++v) {
            if (merge_map[v] != v) continue;
            compact[v] = static_cast<int32_t>(next.states.size());
            next.states.push_back(out.states[v]);
        }
        for (BuchiState& s : next.states)
            for (BuchiEdge& e : s.edges) e.dst = uint32_t(compact[merge_map[e.dst]]);
        std::set<uint32_t> inits;
        for (uint32_t s : out.initial) inits.insert(uint32_t(compact[merge_map[s]]));
        next.initial.assign(inits.begin(), inits.end());
        canonicalize(next);
        out = std::move(next);
    }
    return out;
}

// --- heuristic annotation ------------------------------------------------

void annotate_heuristic(BuchiAutomaton& a, double coeff) {
    const uint32_t n = static_cast<uint32_t>(a.states.size());
    std::vector<std::vector<uint32_t>> preds(n);
    for (uint32_t v = 0; v < n; ++v)
        for (const BuchiEdge& e : a.states[v].edges) preds[e.dst].push_back(v);

    // Backward BFS from the accepting set; unit weights make this Dijkstra.
    std::vector<uint32_t> queue;
    for (uint32_t v = 0; v < n; ++v) {
        a.states[v].dist_to_accepting = a.states[v].accepting ? 0 : kInfiniteDistance;
        if (a.states[v].accepting) queue.push_back(v);
    }
    for (size_t head = 0; head < queue.size(); ++head) {
        const uint32_t v = queue[head];
        for (uint32_t p : preds[v]) {
            if (a.states[p].dist_to_accepting == kInfiniteDistance) {
                a.states[p].dist_to_accepting = a.states[v].dist_to_accepting + 1;
                queue.push_back(p);
            }
        }
    }

    for (uint32_t v = 0; v < n; ++v) {
        std::set<uint32_t> atoms;
        for (const BuchiEdge& e : a.states[v].edges)
            for (const BuchiLiteral& l : e.label) atoms.insert(l.atom);
        a.states[v].toughness = coeff * static_cast<double>(atoms.size());

        BuchiState& s = a.states[v];
        s.edge_order.resize(s.edges.size());
        for (uint32_t i = 0; i < s.edges.size(); ++i) s.edge_order[i] = i;
        std::stable_sort(s.edge_order.begin(), s.edge_order.end(), [&](uint32_t x, uint32_t y) {
            const BuchiState& sx = a.states[s.edges[x].dst];
            const BuchiState& sy = a.states[s.edges[y].dst];
            const bool ix = sx.dist_to_accepting == kInfiniteDistance;
            const bool iy = sy.dist_to_accepting == kInfiniteDistance;
            if (ix != iy) return iy;  // infinite keys sort last
            if (!ix) {
                const double kx = sx.dist_to_accepting + sx.toughness;
                const double ky = sy.dist_to_accepting + sy.toughness;
                if (kx != ky) return kx < ky;
            }
            return s.edges[x].dst < s.edges[y].dst;
        });
    }
}

std::vector<std::pair<const std::vector<BuchiLiteral>*, uint32_t>> ordered_successors(
    const BuchiAutomaton& a, uint32_t state) {
    std::vector<std::pair<const std::vector<BuchiLiteral>*, uint32_t>> out;
    const BuchiState& s = a.states[state];
    if (s.edge_order.size() == s.edges.size()) {
        for (uint32_t i : s.edge_order) out.emplace_back(&s.edges[i].label, s.edges[i].dst);
    } else {
        for (const BuchiEdge& e : s.edges) out.emplace_back(&e.label, e.dst);
    }
    return out;
}

std::string dump_buchi(const BuchiAutomaton& a, const std::vector<std::string>& atom_texts) {
    std::ostringstream os;
    os << "states " << a.states.size() << "\n";
    os << "initial";
    for (uint32_t s : a.initial) os << ' ' << s;
    os << "\n";
    os << "accepting";
    for (uint32_t v = 0; v < a.states.size(); ++v)
        if (a.states[v].accepting) os << ' ' << v;
    os << "\n";
    for (uint32_t v = 0; v < a.states.size(); ++v) {
        const BuchiState& s = a.states[v];
        os << "state " << v << " D=";
        if (s.dist_to_accepting == kInfiniteDistance) os << "inf";
        else os << s.dist_to_accepting;
        os << " T=" << s.toughness << "\n";
        for (const BuchiEdge& e : s.edges) {
            os << "  -> " << e.dst << " [";
            if (e.label.empty()) os << "true";
            for (size_t i = 0; i < e.label.size(); ++i) {
                if (i) os << " && ";
                if (e.label[i].negated) os << "!";
                os << (e.label[i].atom < atom_texts.size() ? atom_texts[e.label[i].atom]
                                                           : "a" + std::to_string(e.label[i].atom));
            }
            os << "]\n";
        }
    }
    return os.str();
}

}  // namespace pnltl

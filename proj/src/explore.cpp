#include "pnltl/explore.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>

#include "json.hpp"

namespace pnltl {

const char* verdict_name(VerdictKind v) {
    switch (v) {
        case VerdictKind::Holds: return "holds";
        case VerdictKind::Violated: return "violated";
        case VerdictKind::CannotHandle: return "cannot-handle";
        case VerdictKind::ResourceLimit: return "resource-limit";
    }
    return "?";
}

uint64_t bound_for_round(const CheckOptions& options, uint64_t round_index) {
    if (options.bound0 == 0) return UINT64_MAX;
    uint64_t k = options.bound0;
    for (uint64_t j = 0; j < round_index; ++j) {
        if (k > UINT64_MAX / std::max<uint64_t>(options.bound_growth, 2)) return UINT64_MAX;
        k *= std::max<uint64_t>(options.bound_growth, 2);
    }
    return k;
}

namespace {

struct ResourceLimitHit {
    std::string reason;
};

constexpr uint8_t kCyan = 1, kBlue = 2, kRed = 4;

class Explorer {
public:
    Explorer(const PetriNet& net, const BuchiAutomaton& aut, const std::vector<BoundAtom>& atoms,
             const CheckOptions& opts)
        : net_(net),
          aut_(aut),
          atoms_(atoms),
          opts_(opts),
          plan_(plan_encoding(net, opts.scheme)),
          store_(plan_.words),
          nb_(static_cast<uint32_t>(aut.states.size())),
          atom_words_((atoms.size() + 63) / 64) {
        start_ = std::chrono::steady_clock::now();
    }

    Verdict run() {
        Verdict v;
        try {
            const uint32_t m0 = intern_marking(encode(net_, plan_, net_.initial_marking));
            for (uint64_t round = 0;; ++round) {
                const uint64_t bound = bound_for_round(opts_, round);
                stats_.rounds = round + 1;
                stats_.peak_bound = bound == UINT64_MAX ? 0 : bound;
                truncated_ = false;
                reset_flags();
                bool found = false;
                for (uint32_t b0 : aut_.initial) {
                    if (!(flag(m0, b0) & kBlue) && dfs_blue(m0, b0, bound)) {
                        found = true;
                        break;
                    }
                }
                if (found) {
                    v.kind = VerdictKind::Violated;
                    v.cex = std::move(cex_);
                    break;
                }
                if (!truncated_) {
                    v.kind = VerdictKind::Holds;
                    break;
                }
            }
        } catch (const CannotHandleError& e) {
            v.kind = VerdictKind::CannotHandle;
            v.reason = e.what();
        } catch (const ResourceLimitHit& e) {
            v.kind = VerdictKind::ResourceLimit;
            v.reason = e.reason;
        }
        finish_stats();
        v.stats = stats_;
        return v;
    }

    SearchStats stats() const { return stats_; }

    // One-expansion surface for the product-successor contract tests.
    std::vector<std::pair<Marking, CexStep>> expand_once(const Marking& m, uint32_t b) {
        const uint32_t mid = intern_marking(encode(net_, plan_, m));
        Frame f = make_frame(mid, b, 0);
        std::vector<std::pair<Marking, CexStep>> out;
        Succ s;
        while (next_successor(f, s))
            out.emplace_back(decode(net_, plan_, store_marking(s.mid)), s.move);
        return out;
    }

private:
    // --- marking access (DRW vs decode baseline) -------------------------

    EncodedMarking store_marking(uint32_t id) const {
        const uint32_t* w = store_.marking(id);
        return EncodedMarking(w, w + plan_.words);
    }

    uint32_t read_place(const EncodedMarking& enc, uint32_t p) {
        if (opts_.drw) {
            ++stats_.drw_accesses;
            return drw_read(net_, plan_, enc, p);
        }
        ++stats_.decode_calls;
        return decode(net_, plan_, enc)[p];
    }

    bool is_enabled_enc(const EncodedMarking& enc, uint32_t t) {
        if (opts_.drw) {
            for (const Arc& a : net_.transitions[t].pre) {
                ++stats_.drw_accesses;
                if (drw_read(net_, plan_, enc, a.place) < a.weight) return false;
            }
            return true;
        }
        ++stats_.decode_calls;
        return is_enabled(net_, decode(net_, plan_, enc), t);
    }

    EncodedMarking fire_enc(const EncodedMarking& enc, uint32_t t) {
        if (opts_.drw) {
            EncodedMarking out = enc;
            for (const Arc& a : net_.transitions[t].pre) {
                stats_.drw_accesses += 2;
                const uint32_t cur = drw_read(net_, plan_, out, a.place);
                drw_write(net_, plan_, out, a.place, cur - a.weight);
            }
            for (const Arc& a : net_.transitions[t].post) {
                stats_.drw_accesses += 2;
                const uint64_t cur = drw_read(net_, plan_, out, a.place);
                drw_write(net_, plan_, out, a.place, cur + a.weight);
            }
            return out;
        }
        ++stats_.decode_calls;
        return encode(net_, plan_, fire(net_, decode(net_, plan_, enc), t));
    }

    std::optional<uint32_t> next_enabled_enc(const EncodedMarking& enc,
                                             std::optional<uint32_t> after) {
        const uint32_t start = after ? *after + 1 : 0;
        for (uint32_t t = start; t < net_.transitions.size(); ++t) {
            if (is_enabled_enc(enc, t)) return t;
        }
        return std::nullopt;
    }

    uint32_t intern_marking(const EncodedMarking& enc) {
        auto [id, fresh] = store_.intern(enc);
        if (fresh) store_.set_last_fired(id, -1);
        return id;
    }

    // --- memoized atom valuations ----------------------------------------

    bool atom_truth(uint32_t mid, uint32_t atom) {
        if (atom_words_ == 0) return false;
        if (valuation_ready_.size() <= mid) valuation_ready_.resize(store_.size(), 0);
        if (!valuation_ready_[mid]) {
            if (valuations_.size() < size_t(mid + 1) * atom_words_)
                valuations_.resize(size_t(store_.size()) * atom_words_, 0);
            const EncodedMarking enc = store_marking(mid);
            if (opts_.drw) {
                for (uint32_t i = 0; i < atoms_.size(); ++i) {
                    if (eval_atom_enc(enc, atoms_[i]))
                        valuations_[size_t(mid) * atom_words_ + i / 64] |= uint64_t(1) << (i % 64);
                }
            } else {
                ++stats_.decode_calls;
                const Marking dense = decode(net_, plan_, enc);
                for (uint32_t i = 0; i < atoms_.size(); ++i) {
                    if (eval_atom(net_, dense, atoms_[i]))
                        valuations_[size_t(mid) * atom_words_ + i / 64] |= uint64_t(1) << (i % 64);
                }
            }
            valuation_ready_[mid] = 1;
        }
        return (valuations_[size_t(mid) * atom_words_ + atom / 64] >> (atom % 64)) & 1;
    }

    bool eval_atom_enc(const EncodedMarking& enc, const BoundAtom& a) {
        if (a.kind == BoundAtom::Kind::Fireable) {
            for (uint32_t t : a.transitions)
                if (is_enabled_enc(enc, t)) return true;
            return false;
        }
        auto value = [&](const IntOperand& e) -> int64_t {
            if (e.is_const) return e.constant;
            int64_t sum = 0;
            for (uint32_t p : e.places) {
                ++stats_.drw_accesses;
                sum += drw_read(net_, plan_, enc, p);
            }
            return sum;
        };
        const int64_t l = value(a.lhs), r = value(a.rhs);
        return a.op == CmpOp::Le ? l <= r : l < r;
    }

    bool label_sat(uint32_t mid, const std::vector<BuchiLiteral>& label) {
        for (const BuchiLiteral& l : label) {
            if (atom_truth(mid, l.atom) == l.negated) return false;
        }
        return true;
    }

    // --- search flags -----------------------------------------------------

    void reset_flags() { flags_.assign(size_t(store_.size()) * nb_, 0); }

    uint8_t& flag(uint32_t mid, uint32_t b) {
        const size_t idx = size_t(mid) * nb_ + b;
        if (flags_.size() <= idx) flags_.resize(size_t(store_.size()) * nb_, 0);
        return flags_[idx];
    }

    // --- lazy product successor enumeration -------------------------------

    struct Succ {
        uint32_t mid = 0, b = 0;
        CexStep move;
    };

    struct Frame {
        uint32_t mid = 0, b = 0;
        uint64_t depth = 0;
        CexStep incoming;  // move that produced this frame (root: unused)
        // Cursors: Büchi edges outer (heuristic order), markings inner.
        uint32_t edge_pos = 0;
        bool edge_checked = false;
        bool deadlocked = false;
        int32_t last_fired = -1;    // dynamic-fireset cursor for the current edge
        uint32_t fs_pos = 0;        // stored-fireset cursor (baseline)
        std::vector<uint32_t> yielded;  // child marking ids for the current edge
    };

    Frame make_frame(uint32_t mid, uint32_t b, uint64_t depth) {
        Frame f;
        f.mid = mid;
        f.b = b;
        f.depth = depth;
        const EncodedMarking enc = store_marking(mid);
        if (opts_.dynamic_fireset) {
            f.deadlocked = !next_enabled_enc(enc, std::nullopt).has_value();
        } else {
            f.deadlocked = baseline_fireset(mid).empty();
        }
        return f;
    }

    // ORI baseline: the full fireset is computed once and stored per marking.
    const std::vector<uint32_t>& baseline_fireset(uint32_t mid) {
        if (!store_.has_fireset(mid)) {
            ++stats_.fireset_precomputes;
            const EncodedMarking enc = store_marking(mid);
            std::vector<uint32_t> fs;
            for (uint32_t t = 0; t < net_.transitions.size(); ++t)
                if (is_enabled_enc(enc, t)) fs.push_back(t);
            store_.store_fireset(mid, std::move(fs));
        }
        return store_.stored_fireset(mid);
    }

    uint32_t edge_at(const Frame& f, uint32_t pos) const {
        const BuchiState& s = aut_.states[f.b];
        if (opts_.heuristic && s.edge_order.size() == s.edges.size()) return s.edge_order[pos];
        return pos;
    }

    bool next_successor(Frame& f, Succ& out) {
        const BuchiState& bs = aut_.states[f.b];
        while (f.edge_pos < bs.edges.size()) {
            const uint32_t eidx = edge_at(f, f.edge_pos);
            const BuchiEdge& e = bs.edges[eidx];
            if (!f.edge_checked) {
                if (!label_sat(f.mid, e.label)) {
                    ++f.edge_pos;
                    continue;
                }
                f.edge_checked = true;
                f.last_fired = -1;
                f.fs_pos = 0;
                f.yielded.clear();
            }
            if (f.deadlocked) {
                out.mid = f.mid;
                out.b = e.dst;
                out.move = {std::nullopt, f.b, eidx};
                ++f.edge_pos;
                f.edge_checked = false;
                return true;
            }
            std::optional<uint32_t> t;
            if (opts_.dynamic_fireset) {
                const EncodedMarking enc = store_marking(f.mid);
                t = next_enabled_enc(enc, f.last_fired < 0
                                              ? std::nullopt
                                              : std::optional<uint32_t>(uint32_t(f.last_fired)));
                if (t) {
                    f.last_fired = int32_t(*t);
                    store_.set_last_fired(f.mid, f.last_fired);
                }
            } else {
                const std::vector<uint32_t>& fs = baseline_fireset(f.mid);
                if (f.fs_pos < fs.size()) t = fs[f.fs_pos++];
            }
            if (!t) {
                ++f.edge_pos;
                f.edge_checked = false;
                continue;
            }
            const EncodedMarking child = fire_enc(store_marking(f.mid), *t);
            const uint32_t cid = intern_marking(child);
            // Distinct transitions may collapse onto one successor marking;
            // each (m', b') is yielded at most once per expansion.
            if (std::find(f.yielded.begin(), f.yielded.end(), cid) != f.yielded.end()) continue;
            f.yielded.push_back(cid);
            out.mid = cid;
            out.b = e.dst;
            out.move = {*t, f.b, eidx};
            return true;
        }
        return false;
    }

    // --- nested DFS --------------------------------------------------------

    bool accepting(uint32_t b) const { return aut_.states[b].accepting; }

    void watchdog() {
        if ((++tick_ & 1023) != 0) return;
        update_peaks();
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        if (elapsed > opts_.timeout_seconds)
            throw ResourceLimitHit{"time limit of " + std::to_string(opts_.timeout_seconds) +
                                   " s exceeded"};
        if (current_bytes() > opts_.memory_cap_bytes)
            throw ResourceLimitHit{"memory cap of " + std::to_string(opts_.memory_cap_bytes) +
                                   " bytes exceeded"};
    }

    uint64_t current_bytes() const {
        return store_.marking_bytes() + store_.metadata_bytes() + flags_.capacity() +
               valuations_.capacity() * sizeof(uint64_t) + valuation_ready_.capacity();
    }

    void update_peaks() {
        stats_.peak_resident_bytes = std::max(stats_.peak_resident_bytes, current_bytes());
        stats_.peak_metadata_bytes = std::max(stats_.peak_metadata_bytes, store_.metadata_bytes());
    }

    bool dfs_blue(uint32_t m0, uint32_t b0, uint64_t bound) {
        std::vector<Frame> stack;
        flag(m0, b0) |= kCyan;
        stack.push_back(make_frame(m0, b0, 0));
        ++stats_.product_expanded;
        Succ s;
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (next_successor(f, s)) {
                uint8_t& fl = flag(s.mid, s.b);
                if (fl & kCyan) {
                    if (accepting(f.b) || accepting(s.b)) {
                        build_cex_from_blue(stack, s);
                        return true;
                    }
                } else if (!(fl & kBlue)) {
                    if (f.depth + 1 > bound) {
                        truncated_ = true;
                    } else {
                        fl |= kCyan;
                        const uint64_t depth = f.depth + 1;
                        Frame child = make_frame(s.mid, s.b, depth);
                        child.incoming = s.move;
                        stack.push_back(std::move(child));  // invalidates f
                        ++stats_.product_expanded;
                        watchdog();
                    }
                }
            } else {
                if (accepting(f.b) && dfs_red(stack)) return true;
                uint8_t& fl = flag(f.mid, f.b);
                fl = (fl | kBlue) & uint8_t(~kCyan);
                stack.pop_back();
            }
        }
        return false;
    }

    bool dfs_red(std::vector<Frame>& blue_stack) {
        const Frame& seedf = blue_stack.back();
        std::vector<Frame> stack;
        flag(seedf.mid, seedf.b) |= kRed;
        stack.push_back(make_frame(seedf.mid, seedf.b, 0));
        Succ s;
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (next_successor(f, s)) {
                uint8_t& fl = flag(s.mid, s.b);
                if (fl & kCyan) {
                    build_cex_from_red(blue_stack, stack, s);
                    return true;
                }
                if (!(fl & kRed)) {
                    fl |= kRed;
                    Frame child = make_frame(s.mid, s.b, 0);
                    child.incoming = s.move;
                    stack.push_back(std::move(child));
                    watchdog();
                }
            } else {
                stack.pop_back();
            }
        }
        return false;
    }

    size_t stack_position_of(const std::vector<Frame>& stack, uint32_t mid, uint32_t b) const {
        for (size_t i = 0; i < stack.size(); ++i) {
            if (stack[i].mid == mid && stack[i].b == b) return i;
        }
        assert(!"cyan state missing from the outer stack");
        return 0;
    }

    void build_cex_from_blue(const std::vector<Frame>& stack, const Succ& closing) {
        const size_t i = stack_position_of(stack, closing.mid, closing.b);
        CounterexampleRun run;
        for (size_t j = 1; j <= i; ++j) run.prefix.push_back(stack[j].incoming);
        for (size_t j = i + 1; j < stack.size(); ++j) run.cycle.push_back(stack[j].incoming);
        run.cycle.push_back(closing.move);
        run.accepting_state = accepting(stack.back().b) ? stack.back().b : closing.b;
        cex_ = std::move(run);
    }

    void build_cex_from_red(const std::vector<Frame>& blue_stack, const std::vector<Frame>& red_stack,
                            const Succ& closing) {
        const size_t i = stack_position_of(blue_stack, closing.mid, closing.b);
        CounterexampleRun run;
        for (size_t j = 1; j <= i; ++j) run.prefix.push_back(blue_stack[j].incoming);
        for (size_t j = i + 1; j < blue_stack.size(); ++j) run.cycle.push_back(blue_stack[j].incoming);
        for (size_t j = 1; j < red_stack.size(); ++j) run.cycle.push_back(red_stack[j].incoming);
        run.cycle.push_back(closing.move);
        run.accepting_state = blue_stack.back().b;  // the red seed
        cex_ = std::move(run);
    }

    void finish_stats() {
        update_peaks();
        stats_.states = store_.size();
        stats_.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    const PetriNet& net_;
    const BuchiAutomaton& aut_;
    const std::vector<BoundAtom>& atoms_;
    CheckOptions opts_;
    EncodingPlan plan_;
    StateStore store_;
    uint32_t nb_;
    size_t atom_words_;
    std::vector<uint8_t> flags_;
    std::vector<uint64_t> valuations_;
    std::vector<uint8_t> valuation_ready_;
    SearchStats stats_;
    CounterexampleRun cex_;
    bool truncated_ = false;
    uint64_t tick_ = 0;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

std::vector<std::pair<Marking, CexStep>> product_successors(
    const PetriNet& net, const BuchiAutomaton& automaton, const std::vector<BoundAtom>& atoms,
    const Marking& m, uint32_t b, const CheckOptions& options) {
    Explorer ex(net, automaton, atoms, options);
    return ex.expand_once(m, b);
}

Verdict check_with_automaton(const PetriNet& net, const BuchiAutomaton& negated_property,
                             const std::vector<BoundAtom>& atoms, const CheckOptions& options) {
    if (negated_property.initial.empty()) {
        Verdict v;
        v.kind = VerdictKind::Holds;
        v.automaton = std::make_shared<BuchiAutomaton>(negated_property);
        v.atoms = std::make_shared<std::vector<BoundAtom>>(atoms);
        return v;
    }
    Explorer ex(net, negated_property, atoms, options);
    Verdict v = ex.run();
    v.automaton = std::make_shared<BuchiAutomaton>(negated_property);
    v.atoms = std::make_shared<std::vector<BoundAtom>>(atoms);
    return v;
}

Verdict check(const PetriNet& net, const LtlFormula& formula, const CheckOptions& options) {
    LtlFormula negated = formula;
    negated.root = mk_unary(LtlOp::Not, formula.root);
    LtlFormula simplified = simplify(to_nnf(negated), net);
    if (simplified.root->op == LtlOp::False) {
        Verdict v;  // no violating run exists at all
        v.kind = VerdictKind::Holds;
        v.automaton = std::make_shared<BuchiAutomaton>();
        v.atoms = std::make_shared<std::vector<BoundAtom>>(simplified.atoms);
        return v;
    }
    BuchiAutomaton a = simplify_buchi(ltl_to_buchi(simplified));
    annotate_heuristic(a, options.heuristic_coeff);
    return check_with_automaton(net, a, simplified.atoms, options);
}

Verdict check(const PetriNet& net, const std::string& formula_text, const CheckOptions& options) {
    return check(net, parse_ltl(formula_text, net), options);
}

bool verify_counterexample(const PetriNet& net, const BuchiAutomaton& automaton,
                           const std::vector<BoundAtom>& atoms, const CounterexampleRun& run) {
    if (run.cycle.empty()) return false;
    const uint32_t start_b = run.prefix.empty() ? run.cycle.front().buchi_src
                                                : run.prefix.front().buchi_src;
    if (std::find(automaton.initial.begin(), automaton.initial.end(), start_b) ==
        automaton.initial.end())
        return false;

    Marking m = net.initial_marking;
    uint32_t b = start_b;
    auto apply = [&](const CexStep& step) -> bool {
        if (step.buchi_src != b) return false;
        if (step.buchi_src >= automaton.states.size()) return false;
        const BuchiState& bs = automaton.states[step.buchi_src];
        if (step.buchi_edge >= bs.edges.size()) return false;
        const BuchiEdge& e = bs.edges[step.buchi_edge];
        for (const BuchiLiteral& l : e.label) {
            if (l.atom >= atoms.size()) return false;
            if (eval_atom(net, m, atoms[l.atom]) == l.negated) return false;
        }
        if (step.transition) {
            if (*step.transition >= net.transitions.size()) return false;
            if (!is_enabled(net, m, *step.transition)) return false;
            m = fire(net, m, *step.transition);
        } else {
            if (!fireset(net, m).empty()) return false;  // stutter only at deadlocks
        }
        b = e.dst;
        return true;
    };

    for (const CexStep& s : run.prefix)
        if (!apply(s)) return false;
    const Marking cycle_start_m = m;
    const uint32_t cycle_start_b = b;
    bool accepting_seen = false;
    for (const CexStep& s : run.cycle) {
        if (automaton.states[s.buchi_src].accepting) accepting_seen = true;
        if (!apply(s)) return false;
    }
    if (m != cycle_start_m || b != cycle_start_b) return false;
    if (!accepting_seen) return false;
    if (run.accepting_state >= automaton.states.size() ||
        !automaton.states[run.accepting_state].accepting)
        return false;
    return true;
}

std::string stats_json(const Verdict& v) {
    nlohmann::ordered_json j;
    j["verdict"] = verdict_name(v.kind);
    if (!v.reason.empty()) j["reason"] = v.reason;
    j["states"] = v.stats.states;
    j["product_states"] = v.stats.product_expanded;
    j["rounds"] = v.stats.rounds;
    j["peak_bound"] = v.stats.peak_bound;
    j["wall_seconds"] = v.stats.wall_seconds;
    j["peak_resident_bytes"] = v.stats.peak_resident_bytes;
    return j.dump();
}

}  // namespace pnltl

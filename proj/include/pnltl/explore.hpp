#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pnltl/buchi.hpp"
#include "pnltl/codec.hpp"
#include "pnltl/ltl.hpp"
#include "pnltl/petri.hpp"

namespace pnltl {

struct CheckOptions {
    std::optional<EncodingScheme> scheme;  // empty = auto-select
    bool dynamic_fireset = true;           // off = precompute + store full firesets
    bool drw = true;                       // off = decode-then-index marking access
    bool heuristic = true;                 // off = index-ordered Büchi successors
    double heuristic_coeff = 0.1;
    uint64_t bound0 = 10000;   // 0 disables bounding (single unbounded round)
    uint64_t bound_growth = 10;
    double timeout_seconds = 300.0;
    uint64_t memory_cap_bytes = uint64_t(16) << 30;
};

struct SearchStats {
    uint64_t states = 0;             // interned markings
    uint64_t product_expanded = 0;   // product states pushed on the outer DFS
    uint64_t rounds = 0;
    uint64_t peak_bound = 0;
    double wall_seconds = 0.0;
    uint64_t peak_resident_bytes = 0;   // store + flags accounting (best-effort)
    uint64_t peak_metadata_bytes = 0;   // per-state search metadata
    uint64_t drw_accesses = 0;
    uint64_t decode_calls = 0;
    uint64_t fireset_precomputes = 0;
};

// One product move: the fired transition (empty = deadlock stutter) plus the
// Büchi edge taken, identified by source state and edge index.
struct CexStep {
    std::optional<uint32_t> transition;
    uint32_t buchi_src = 0;
    uint32_t buchi_edge = 0;
};

struct CounterexampleRun {
    std::vector<CexStep> prefix;
    std::vector<CexStep> cycle;  // non-empty; returns to its starting product state
    uint32_t accepting_state = 0;
};

enum class VerdictKind { Holds, Violated, CannotHandle, ResourceLimit };

const char* verdict_name(VerdictKind v);

struct Verdict {
    VerdictKind kind = VerdictKind::Holds;
    std::optional<CounterexampleRun> cex;
    std::string reason;  // CannotHandle / ResourceLimit detail
    SearchStats stats;
    // The artifacts the verdict was computed against, for replay checks.
    std::shared_ptr<const BuchiAutomaton> automaton;
    std::shared_ptr<const std::vector<BoundAtom>> atoms;
};

// Full pipeline: negate, NNF, simplify (may conclude immediately), translate,
// simplify + annotate the automaton, then bounded search rounds.
Verdict check(const PetriNet& net, const LtlFormula& formula, const CheckOptions& options);
Verdict check(const PetriNet& net, const std::string& formula_text, const CheckOptions& options);

// Search against a prebuilt automaton for the NEGATED property (the automaton
// accepts the violating runs). Used by the pipeline and by direct tests.
Verdict check_with_automaton(const PetriNet& net, const BuchiAutomaton& negated_property,
                             const std::vector<BoundAtom>& atoms, const CheckOptions& options);

// Replays prefix + cycle from (m0, initial Büchi state): every transition
// enabled when fired, stutters only at deadlocks, every edge label true under
// the marking at its step, cycle closes on its starting product state and
// passes through an accepting Büchi state.
bool verify_counterexample(const PetriNet& net, const BuchiAutomaton& automaton,
                           const std::vector<BoundAtom>& atoms, const CounterexampleRun& run);

// One lazy expansion of the product state (m, b), materialized: admissible
// Büchi edges outer (heuristic or index order), marking successors inner, a
// single stutter successor per edge at deadlocks, each (m', b') at most once
// per edge. Returns (successor marking, move) pairs in enumeration order.
std::vector<std::pair<Marking, CexStep>> product_successors(
    const PetriNet& net, const BuchiAutomaton& automaton, const std::vector<BoundAtom>& atoms,
    const Marking& m, uint32_t b, const CheckOptions& options);

// Round depth bounds: bound0, bound0*growth, ... ; bound0 == 0 means one
// unbounded round.
uint64_t bound_for_round(const CheckOptions& options, uint64_t round_index);

std::string stats_json(const Verdict& v);

}  // namespace pnltl

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pnltl/ltl.hpp"

namespace pnltl {

constexpr uint32_t kInfiniteDistance = std::numeric_limits<uint32_t>::max();

struct BuchiLiteral {
    uint32_t atom = 0;
    bool negated = false;
    bool operator==(const BuchiLiteral& o) const { return atom == o.atom && negated == o.negated; }
};

struct BuchiEdge {
    uint32_t dst = 0;
    std::vector<BuchiLiteral> label;  // conjunction; empty = true
    bool operator==(const BuchiEdge& o) const { return dst == o.dst && label == o.label; }
};

struct BuchiState {
    std::vector<BuchiEdge> edges;
    bool accepting = false;
    // Heuristic annotations (annotate_heuristic).
    uint32_t dist_to_accepting = kInfiniteDistance;  // D_i
    double toughness = 0.0;                          // T_i
    std::vector<uint32_t> edge_order;                // edges sorted by D_dst + T_dst
};

struct BuchiAutomaton {
    std::vector<BuchiState> states;
    std::vector<uint32_t> initial;  // empty = empty language
    uint32_t atom_count = 0;
};

// State-based Büchi automaton for the NNF formula: tableau construction with
// a dedicated initial state (edge labels constrain the letter consumed when
// the edge is taken), then counter-based degeneralization over the U-subformula
// acceptance sets.
BuchiAutomaton ltl_to_buchi(const LtlFormula& f);

// Drops states unreachable from an initial state or unable to reach an
// accepting cycle; merges states with identical out-edge sets and acceptance.
// Language preserved.
BuchiAutomaton simplify_buchi(const BuchiAutomaton& a);

// D_i: shortest edge-count path to any accepting state (backward BFS, 0 on
// accepting states). T_i: coeff * |distinct atoms on out-edges|. Also fills
// edge_order: ascending D_dst + T_dst, ties by destination index, infinite
// distances last.
void annotate_heuristic(BuchiAutomaton& a, double coeff = 0.1);

// (label, dst) pairs of a state in heuristic priority order.
std::vector<std::pair<const std::vector<BuchiLiteral>*, uint32_t>> ordered_successors(
    const BuchiAutomaton& a, uint32_t state);

// Line-oriented text form for inspection and golden tests.
std::string dump_buchi(const BuchiAutomaton& a, const std::vector<std::string>& atom_texts);

}  // namespace pnltl

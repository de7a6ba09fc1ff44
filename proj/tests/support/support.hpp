#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pnltl/buchi.hpp"
#include "pnltl/ltl.hpp"
#include "pnltl/petri.hpp"

namespace pnltl::testsupport {

// --- net construction ----------------------------------------------------

class NetBuilder {
public:
    uint32_t place(const std::string& name, uint32_t tokens);
    uint32_t transition(const std::string& name,
                        const std::vector<std::pair<std::string, uint32_t>>& pre,
                        const std::vector<std::pair<std::string, uint32_t>>& post);
    PetriNet finish();

private:
    PetriNet net_;
};

PetriNet philosophers(int n);
PetriNet token_ring(int n);
PetriNet producer_consumer(int capacity);
PetriNet drain_net(int tokens);
PetriNet counter_chain(int length, int tokens);
// `breadth` transitions draining one hub place; every marking's fireset is
// large, counterexamples are shallow.
PetriNet wide_net(int breadth);
// `bits` independent two-place toggles: 2^bits reachable markings, no deadlock.
PetriNet toggle_net(int bits);
// Token-conserving random net (bounded state space).
PetriNet random_bounded_net(std::mt19937_64& rng, int places, int transitions);

// Serializes a net back to PNML (including a NUPN tool section when units
// are present), for round-trip and CLI tests.
std::string to_pnml(const PetriNet& net);

// >= 30 small nets with tractable state spaces.
std::vector<PetriNet> oracle_corpus();
// >= 5 formulas phrased over the net's own place/transition names.
std::vector<std::string> corpus_formulas(const PetriNet& net);

// --- reachability and product oracles ------------------------------------

std::vector<Marking> reachable_markings(const PetriNet& net, size_t limit);

// Full product graph + Tarjan SCC: true iff a reachable cycle through an
// accepting product state exists (deadlocks stutter, labels read the current
// marking).
bool brute_force_violated(const PetriNet& net, const BuchiAutomaton& a,
                          const std::vector<BoundAtom>& atoms);
// Independent end-to-end oracle: negate, NNF, translate (no simplification,
// no heuristics), full product.
bool brute_force_formula_violated(const PetriNet& net, const LtlFormula& f);

// --- lasso oracles --------------------------------------------------------

// vals[pos][atom]; positions loop_start.. repeat forever.
bool lasso_satisfies(const LtlPtr& root, const std::vector<std::vector<bool>>& vals,
                     size_t loop_start);
bool buchi_accepts_lasso(const BuchiAutomaton& a, const std::vector<std::vector<bool>>& vals,
                         size_t loop_start);

// --- random generators ----------------------------------------------------

LtlFormula random_formula(std::mt19937_64& rng, uint32_t atom_count, int depth);
std::pair<std::vector<std::vector<bool>>, size_t> random_lasso(std::mt19937_64& rng,
                                                               uint32_t atom_count);

// --- naive bit-vector codec oracle ----------------------------------------

struct BitOracle {
    explicit BitOracle(uint32_t nbits) : bits(nbits, false) {}
    uint32_t read(uint32_t start, uint32_t len) const;
    void write(uint32_t start, uint32_t len, uint32_t value);
    std::vector<bool> bits;
};

}  // namespace pnltl::testsupport

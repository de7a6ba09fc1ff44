#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pnltl/petri.hpp"

namespace pnltl {

enum class EncodingScheme { Default16, Default32, OneSafe, Nupn, PInvariant };

const char* scheme_name(EncodingScheme s);

// Raised when a token count cannot be represented under the active plan.
// The whole run terminates with a "cannot handle" verdict.
class CannotHandleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BitRange {
    uint32_t start = 0;
    uint32_t len = 0;  // 0 = this place/unit has no own bits
};

// Affine recomputation of a redundant place from significant places:
//   m(p) = (num_const + sum coeff_i * m(q_i)) / den
// Solved at plan time from the place-invariant equations; exact on every
// reachable marking.
struct RedundantFormula {
    int64_t num_const = 0;
    int64_t den = 1;
    std::vector<std::pair<uint32_t, int64_t>> terms;
};

struct EncodingPlan {
    EncodingScheme scheme = EncodingScheme::Default16;
    uint32_t total_bits = 0;
    uint32_t words = 0;
    std::vector<BitRange> place_code;       // per place (unused for Nupn)
    std::vector<BitRange> unit_code;        // per unit (Nupn only)
    std::vector<uint64_t> place_bound;      // PInvariant: b(p); UINT64_MAX elsewhere
    std::vector<int32_t> redundant_index;   // per place: -1 or index into redundant
    std::vector<RedundantFormula> redundant;

    bool place_is_redundant(uint32_t p) const {
        return !redundant_index.empty() && redundant_index[p] >= 0;
    }
};

// Packed bit sequence over 32-bit words, length plan.words, trailing bits zero.
using EncodedMarking = std::vector<uint32_t>;

// --- raw bit-range access ------------------------------------------------
// Within-word path is taken iff offset+len <= 32 (offset 0 always lands here);
// otherwise the range spans exactly two words.

uint32_t read_bits(const uint32_t* words, uint32_t start, uint32_t len);
void write_bits(uint32_t* words, uint32_t start, uint32_t len, uint32_t value);

// --- place invariants ----------------------------------------------------

struct InvariantAnalysis {
    // Finite bound per place, nullopt when no nonnegative invariant covers it.
    std::vector<std::optional<uint64_t>> bound;
    // Redundant/significant split and per-redundant-place affine formulas.
    std::vector<int32_t> redundant_index;
    std::vector<RedundantFormula> redundant;
    // Normalized nonnegative integer invariant vectors (test surface).
    std::vector<std::vector<int64_t>> nonneg_invariants;

    bool all_bounded() const {
        for (const auto& b : bound)
            if (!b) return false;
        return !bound.empty();
    }
};

InvariantAnalysis compute_invariant_bounds(const PetriNet& net);

// --- planning ------------------------------------------------------------

// Auto-selection order (requested empty): OneSafe if declared 1-safe, Nupn if
// units are present and m0 is unit-safe, PInvariant if every significant place
// gets a finite bound, else Default16/32. A requested scheme that does not
// apply raises PlanError.
EncodingPlan plan_encoding(const PetriNet& net,
                           std::optional<EncodingScheme> requested = std::nullopt);

std::string dump_layout_tsv(const PetriNet& net, const EncodingPlan& plan);

// --- DRW + baseline codec ------------------------------------------------

// Token count of one place with no intermediate decode. Nupn places report
// 0/1 via the unit-value/myoffset comparison; PInvariant redundant places are
// recomputed from significant ones.
uint32_t drw_read(const PetriNet& net, const EncodingPlan& plan, const EncodedMarking& enc,
                  uint32_t place);

// Writes only the place's (or its unit's) range; throws CannotHandleError when
// the value does not fit (PInvariant overflow is an internal bug and asserts).
void drw_write(const PetriNet& net, const EncodingPlan& plan, EncodedMarking& enc,
               uint32_t place, uint64_t value);

EncodedMarking encode(const PetriNet& net, const EncodingPlan& plan, const Marking& m);
Marking decode(const PetriNet& net, const EncodingPlan& plan, const EncodedMarking& enc);

// --- state store ---------------------------------------------------------

// Chained hash table interning encoded markings to dense ids. Hashing is
// 64-bit multiply-xor-shift (splitmix64 finalizer) with seed
// 0x9e3779b97f4a7c15; 2^16 initial buckets, doubling at load factor 0.75.
class StateStore {
public:
    explicit StateStore(uint32_t words_per_state);

    // (id, fresh). Equal markings always map to equal ids.
    std::pair<uint32_t, bool> intern(const EncodedMarking& enc);

    const uint32_t* marking(uint32_t id) const { return arena_.data() + size_t(id) * words_; }
    uint32_t size() const { return static_cast<uint32_t>(next_.size()); }
    uint32_t words_per_state() const { return words_; }

    // Explorer metadata slots.
    void set_last_fired(uint32_t id, int32_t t);
    int32_t last_fired(uint32_t id) const;
    bool has_fireset(uint32_t id) const;
    const std::vector<uint32_t>& stored_fireset(uint32_t id) const;
    void store_fireset(uint32_t id, std::vector<uint32_t> fs);

    uint64_t marking_bytes() const;   // arena + table overhead
    uint64_t metadata_bytes() const;  // last-fired + stored firesets
    std::vector<uint32_t> chain_length_histogram() const;

private:
    void rehash();
    uint64_t hash_state(const uint32_t* w) const;

    uint32_t words_;
    std::vector<uint32_t> arena_;
    std::vector<uint32_t> buckets_;  // head ids, NIL = UINT32_MAX
    std::vector<uint32_t> next_;     // chain links per id
    std::vector<int32_t> last_fired_;
    std::vector<std::vector<uint32_t>> firesets_;
    std::vector<uint8_t> fireset_cached_;
    uint64_t fireset_bytes_ = 0;
};

}  // namespace pnltl

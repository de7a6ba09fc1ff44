#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pnltl {

// Dense marking: one token count per place, indexed like PetriNet::places.
using Marking = std::vector<uint32_t>;

struct Arc {
    uint32_t place = 0;
    uint32_t weight = 0;  // stored arcs always have weight > 0
    bool operator==(const Arc&) const = default;
};

struct PlaceInfo {
    std::string name;
    int32_t myunit = -1;    // NUPN unit index, -1 when the net has no units
    uint32_t myoffset = 0;  // 1-based local code within the unit (0 = no units)
};

struct TransitionInfo {
    std::string name;
    std::vector<Arc> pre;   // (place, W(p,t))
    std::vector<Arc> post;  // (place, W(t,p))
};

struct UnitInfo {
    std::string name;
    std::vector<uint32_t> local_places;
};

struct PetriNet {
    std::vector<PlaceInfo> places;
    std::vector<TransitionInfo> transitions;
    Marking initial_marking;
    std::vector<UnitInfo> units;  // empty = no NUPN structure
    bool declared_safe = false;

    std::unordered_map<std::string, uint32_t> place_by_name;
    std::unordered_map<std::string, uint32_t> transition_by_name;

    bool has_units() const { return !units.empty(); }

    std::optional<uint32_t> place_index(std::string_view name) const {
        auto it = place_by_name.find(std::string(name));
        if (it == place_by_name.end()) return std::nullopt;
        return it->second;
    }
    std::optional<uint32_t> transition_index(std::string_view name) const {
        auto it = transition_by_name.find(std::string(name));
        if (it == transition_by_name.end()) return std::nullopt;
        return it->second;
    }

    void rebuild_name_maps();
};

class PnmlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ParseDiagnostics {
    std::vector<std::string> warnings;
};

// Parses the P/T subset of PNML: place/transition/arc with integer
// inscriptions and initialMarking, pages flattened, graphics ignored.
// A <toolspecific tool="nupn"> section contributes units and the safe flag;
// a structurally invalid unit section is dropped with a warning.
PetriNet parse_pnml(const std::string& xml_text, ParseDiagnostics* diag = nullptr);

bool is_enabled(const PetriNet& net, const Marking& m, uint32_t t);

// Pre: is_enabled(net, m, t). Checked by assert in debug builds.
Marking fire(const PetriNet& net, const Marking& m, uint32_t t);

// Smallest enabled transition index strictly greater than `after`
// (or >= 0 when `after` is empty); nullopt when exhausted. Chaining calls
// enumerates fireset(m) in index order, one element per call.
std::optional<uint32_t> next_enabled(const PetriNet& net, const Marking& m,
                                     std::optional<uint32_t> after);

// Full scan of all transitions; the ORI baseline and the next_enabled oracle.
std::vector<uint32_t> fireset(const PetriNet& net, const Marking& m);

// --- atoms ---------------------------------------------------------------

enum class CmpOp { Le, Lt };

struct IntOperand {
    // Either a constant or a tokens-count sum (with multiplicity).
    bool is_const = true;
    int64_t constant = 0;
    std::vector<uint32_t> places;

    static IntOperand make_const(int64_t c) {
        IntOperand o;
        o.is_const = true;
        o.constant = c;
        return o;
    }
    static IntOperand make_sum(std::vector<uint32_t> ps) {
        IntOperand o;
        o.is_const = false;
        o.places = std::move(ps);
        return o;
    }
    bool operator==(const IntOperand& rhs) const {
        return is_const == rhs.is_const && constant == rhs.constant && places == rhs.places;
    }
};

struct BoundAtom {
    enum class Kind { Fireable, Compare };
    Kind kind = Kind::Fireable;
    std::vector<uint32_t> transitions;  // Fireable: true iff any is enabled
    IntOperand lhs, rhs;
    CmpOp op = CmpOp::Le;

    bool operator==(const BoundAtom& o) const {
        return kind == o.kind && transitions == o.transitions && lhs == o.lhs &&
               rhs == o.rhs && op == o.op;
    }
};

int64_t eval_int_operand(const Marking& m, const IntOperand& e);
bool eval_atom(const PetriNet& net, const Marking& m, const BoundAtom& atom);

}  // namespace pnltl

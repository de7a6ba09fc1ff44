#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnltl/petri.hpp"

namespace pnltl {

enum class LtlOp { True, False, Atom, Not, And, Or, X, F, G, U, R };

struct LtlNode;
using LtlPtr = std::shared_ptr<const LtlNode>;

struct LtlNode {
    LtlOp op;
    uint32_t atom = 0;  // index into LtlFormula::atoms when op == Atom
    LtlPtr lhs, rhs;
};

LtlPtr mk_true();
LtlPtr mk_false();
LtlPtr mk_atom(uint32_t id);
LtlPtr mk_unary(LtlOp op, LtlPtr f);
LtlPtr mk_binary(LtlOp op, LtlPtr l, LtlPtr r);

// Formula with its atom table; atoms are bound to net indices at parse time.
struct LtlFormula {
    LtlPtr root;
    std::vector<BoundAtom> atoms;
    std::vector<std::string> atom_texts;  // for diagnostics and dumps

    uint32_t add_atom(const BoundAtom& a, const std::string& text);
};

class LtlParseError : public std::runtime_error {
public:
    LtlParseError(const std::string& msg, int line, int col)
        : std::runtime_error(msg + " at " + std::to_string(line) + ":" + std::to_string(col)) {}
    explicit LtlParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Grammar: atoms `is-fireable(t1,...)`, comparisons of Int and
// `tokens-count(p1,...)` with <= < =, operators ! && || X F G U R, plus
// true/false. Precedence !/X/F/G > U/R (right-assoc) > && > ||. Strict `<`
// against a constant is normalized to <= at parse time; `=` expands into a
// conjunction of two <= atoms. Names with spaces go in double quotes.
LtlFormula parse_ltl(const std::string& text, const PetriNet& net);

// One formula per line, '#' starts a comment.
std::vector<LtlFormula> parse_ltl_file(const std::string& text, const PetriNet& net);

LtlFormula to_nnf(const LtlFormula& f);

enum class StructuralVerdict { AlwaysTrue, AlwaysFalse, Unknown };

// Structural (net-level) atom evaluation: only the five listed rule shapes,
// everything else is Unknown.
StructuralVerdict eval_atom_structurally(const PetriNet& net, const BoundAtom& atom);

// Pre: f in NNF. Substitutes structurally decided atoms and applies the
// temporal/boolean rewrite rules to a fixpoint.
LtlFormula simplify(const LtlFormula& f, const PetriNet& net);

std::string to_string(const LtlFormula& f);

}  // namespace pnltl

#include "pnltl/ltl.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace pnltl {

LtlPtr mk_true() { return std::make_shared<LtlNode>(LtlNode{LtlOp::True, 0, nullptr, nullptr}); }
LtlPtr mk_false() { return std::make_shared<LtlNode>(LtlNode{LtlOp::False, 0, nullptr, nullptr}); }
LtlPtr mk_atom(uint32_t id) { return std::make_shared<LtlNode>(LtlNode{LtlOp::Atom, id, nullptr, nullptr}); }
LtlPtr mk_unary(LtlOp op, LtlPtr f) {
    return std::make_shared<LtlNode>(LtlNode{op, 0, std::move(f), nullptr});
}
LtlPtr mk_binary(LtlOp op, LtlPtr l, LtlPtr r) {
    return std::make_shared<LtlNode>(LtlNode{op, 0, std::move(l), std::move(r)});
}

uint32_t LtlFormula::add_atom(const BoundAtom& a, const std::string& text) {
    for (uint32_t i = 0; i < atoms.size(); ++i) {
        if (atoms[i] == a) return i;
    }
    atoms.push_back(a);
    atom_texts.push_back(text);
    return static_cast<uint32_t>(atoms.size() - 1);
}

// --- parser --------------------------------------------------------------

namespace {

enum class Tok { End, LParen, RParen, Comma, Not, And, Or, Le, Lt, Eq, Ident, Int };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int64_t value = 0;
    int line = 1, col = 1;
};

class Lexer {
public:
    Lexer(const std::string& src) : src_(src) {}

    Token next() {
        skip_ws();
        Token t;
        t.line = line_;
        t.col = col_;
        if (pos_ >= src_.size()) return t;
        char c = src_[pos_];
        auto one = [&](Tok k) {
            advance();
            t.kind = k;
            return t;
        };
        switch (c) {
            case '(': return one(Tok::LParen);
            case ')': return one(Tok::RParen);
            case ',': return one(Tok::Comma);
            case '!': return one(Tok::Not);
            case '=': return one(Tok::Eq);
            case '&':
                advance();
                if (pos_ < src_.size() && src_[pos_] == '&') {
                    advance();
                    t.kind = Tok::And;
                    return t;
                }
                throw LtlParseError("expected '&&'", t.line, t.col);
            case '|':
                advance();
                if (pos_ < src_.size() && src_[pos_] == '|') {
                    advance();
                    t.kind = Tok::Or;
                    return t;
                }
                throw LtlParseError("expected '||'", t.line, t.col);
            case '<':
                advance();
                if (pos_ < src_.size() && src_[pos_] == '=') {
                    advance();
                    t.kind = Tok::Le;
                } else {
                    t.kind = Tok::Lt;
                }
                return t;
            case '"': {
                advance();
                std::string s;
                while (pos_ < src_.size() && src_[pos_] != '"') {
                    s += src_[pos_];
                    advance();
                }
                if (pos_ >= src_.size()) throw LtlParseError("unterminated quote", t.line, t.col);
                advance();
                t.kind = Tok::Ident;
                t.text = std::move(s);
                return t;
            }
            default: break;
        }
        if (isdigit(static_cast<unsigned char>(c))) {
            int64_t v = 0;
            while (pos_ < src_.size() && isdigit(static_cast<unsigned char>(src_[pos_]))) {
                v = v * 10 + (src_[pos_] - '0');
                if (v > (int64_t(1) << 60)) throw LtlParseError("integer too large", t.line, t.col);
                advance();
            }
            t.kind = Tok::Int;
            t.value = v;
            return t;
        }
        if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string s;
            while (pos_ < src_.size()) {
                char d = src_[pos_];
                if (isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.' || d == '-') {
                    s += d;
                    advance();
                } else {
                    break;
                }
            }
            t.kind = Tok::Ident;
            t.text = std::move(s);
            return t;
        }
        throw LtlParseError(std::string("unexpected character '") + c + "'", t.line, t.col);
    }

private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }
    void skip_ws() {
        while (pos_ < src_.size() &&
               isspace(static_cast<unsigned char>(src_[pos_]))) advance();
    }
    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

class Parser {
public:
    Parser(const std::string& src, const PetriNet& net) : lex_(src), net_(net) { shift(); }

    LtlFormula parse() {
        LtlFormula f;
        out_ = &f;
        f.root = parse_or();
        expect(Tok::End, "end of formula");
        return f;
    }

private:
    void shift() { cur_ = lex_.next(); }
    void expect(Tok k, const char* what) {
        if (cur_.kind != k) throw LtlParseError(std::string("expected ") + what, cur_.line, cur_.col);
    }
    bool accept(Tok k) {
        if (cur_.kind != k) return false;
        shift();
        return true;
    }

    LtlPtr parse_or() {
        LtlPtr f = parse_and();
        while (accept(Tok::Or)) f = mk_binary(LtlOp::Or, f, parse_and());
        return f;
    }
    LtlPtr parse_and() {
        LtlPtr f = parse_until();
        while (accept(Tok::And)) f = mk_binary(LtlOp::And, f, parse_until());
        return f;
    }
    LtlPtr parse_until() {
        LtlPtr f = parse_unary();
        if (cur_.kind == Tok::Ident && (cur_.text == "U" || cur_.text == "R")) {
            const LtlOp op = cur_.text == "U" ? LtlOp::U : LtlOp::R;
            shift();
            return mk_binary(op, f, parse_until());  // right-associative
        }
        return f;
    }
    LtlPtr parse_unary() {
        if (accept(Tok::Not)) return mk_unary(LtlOp::Not, parse_unary());
        if (cur_.kind == Tok::Ident && cur_.text.size() == 1) {
            LtlOp op;
            switch (cur_.text[0]) {
                case 'X': op = LtlOp::X; break;
                case 'F': op = LtlOp::F; break;
                case 'G': op = LtlOp::G; break;
                default: return parse_primary();
            }
            shift();
            return mk_unary(op, parse_unary());
        }
        return parse_primary();
    }

    LtlPtr parse_primary() {
        if (accept(Tok::LParen)) {
            LtlPtr f = parse_or();
            expect(Tok::RParen, "')'");
            shift();
            return f;
        }
        if (cur_.kind == Tok::Ident && cur_.text == "true") {
            shift();
            return mk_true();
        }
        if (cur_.kind == Tok::Ident && cur_.text == "false") {
            shift();
            return mk_false();
        }
        if (cur_.kind == Tok::Ident && cur_.text == "is-fireable") {
            shift();
            return parse_fireable();
        }
        return parse_comparison();
    }

    LtlPtr parse_fireable() {
        const Token open = cur_;
        expect(Tok::LParen, "'('");
        shift();
        BoundAtom a;
        a.kind = BoundAtom::Kind::Fireable;
        std::string text = "is-fireable(";
        bool first = true;
        do {
            expect(Tok::Ident, "transition name");
            auto t = net_.transition_index(cur_.text);
            if (!t)
                throw LtlParseError("unknown transition '" + cur_.text + "'", cur_.line, cur_.col);
            a.transitions.push_back(*t);
            text += (first ? "" : ",") + cur_.text;
            first = false;
            shift();
        } while (accept(Tok::Comma));
        expect(Tok::RParen, "')'");
        shift();
        if (a.transitions.empty()) throw LtlParseError("empty is-fireable", open.line, open.col);
        return mk_atom(out_->add_atom(a, text + ")"));
    }

    IntOperand parse_int_expr(std::string& text) {
        if (cur_.kind == Tok::Int) {
            text += std::to_string(cur_.value);
            IntOperand e = IntOperand::make_const(cur_.value);
            shift();
            return e;
        }
        if (cur_.kind == Tok::Ident && cur_.text == "tokens-count") {
            shift();
            expect(Tok::LParen, "'('");
            shift();
            std::vector<uint32_t> places;
            text += "tokens-count(";
            bool first = true;
            do {
                expect(Tok::Ident, "place name");
                auto p = net_.place_index(cur_.text);
                if (!p)
                    throw LtlParseError("unknown place '" + cur_.text + "'", cur_.line, cur_.col);
                places.push_back(*p);
                text += (first ? "" : ",") + cur_.text;
                first = false;
                shift();
            } while (accept(Tok::Comma));
            expect(Tok::RParen, "')'");
            shift();
            text += ")";
            if (places.empty()) throw LtlParseError("empty tokens-count", cur_.line, cur_.col);
            return IntOperand::make_sum(std::move(places));
        }
        throw LtlParseError("expected integer or tokens-count", cur_.line, cur_.col);
    }

    // lhs (<= | < | =) rhs, with `<` folded into `<=` against a constant and
    // `=` expanded into a conjunction of two `<=` atoms.
    LtlPtr parse_comparison() {
        std::string ltext, rtext;
        IntOperand lhs = parse_int_expr(ltext);
        const Token opTok = cur_;
        if (!accept(Tok::Le) && !accept(Tok::Lt) && !accept(Tok::Eq))
            throw LtlParseError("expected comparison operator", opTok.line, opTok.col);
        IntOperand rhs = parse_int_expr(rtext);
        if (opTok.kind == Tok::Eq) {
            uint32_t a = add_cmp(lhs, CmpOp::Le, rhs, ltext + "<=" + rtext);
            uint32_t b = add_cmp(rhs, CmpOp::Le, lhs, rtext + "<=" + ltext);
            return mk_binary(LtlOp::And, mk_atom(a), mk_atom(b));
        }
        CmpOp op = opTok.kind == Tok::Le ? CmpOp::Le : CmpOp::Lt;
        if (op == CmpOp::Lt) {
            if (lhs.is_const) {
                lhs.constant += 1;
                op = CmpOp::Le;
                ltext = std::to_string(lhs.constant);
            } else if (rhs.is_const) {
                rhs.constant -= 1;
                op = CmpOp::Le;
                rtext = std::to_string(rhs.constant);
            }
        }
        return mk_atom(
            add_cmp(lhs, op, rhs, ltext + (op == CmpOp::Le ? "<=" : "<") + rtext));
    }

    uint32_t add_cmp(IntOperand l, CmpOp op, IntOperand r, const std::string& text) {
        BoundAtom a;
        a.kind = BoundAtom::Kind::Compare;
        a.lhs = std::move(l);
        a.rhs = std::move(r);
        a.op = op;
        return out_->add_atom(a, text);
    }

    Lexer lex_;
    const PetriNet& net_;
    Token cur_;
    LtlFormula* out_ = nullptr;
};

}  // namespace

LtlFormula parse_ltl(const std::string& text, const PetriNet& net) {
    return Parser(text, net).parse();
}

std::vector<LtlFormula> parse_ltl_file(const std::string& text, const PetriNet& net) {
    std::vector<LtlFormula> out;
    std::istringstream iss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(iss, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        bool blank = std::all_of(line.begin(), line.end(),
                                 [](unsigned char c) { return std::isspace(c); });
        if (blank) continue;
        try {
            out.push_back(parse_ltl(line, net));
        } catch (const LtlParseError& e) {
            throw LtlParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// --- NNF -----------------------------------------------------------------

namespace {

LtlPtr nnf(const LtlPtr& f, bool negated) {
    switch (f->op) {
        case LtlOp::True: return negated ? mk_false() : mk_true();
        case LtlOp::False: return negated ? mk_true() : mk_false();
        case LtlOp::Atom:
            return negated ? mk_unary(LtlOp::Not, mk_atom(f->atom)) : mk_atom(f->atom);
        case LtlOp::Not: return nnf(f->lhs, !negated);
        case LtlOp::And:
            return mk_binary(negated ? LtlOp::Or : LtlOp::And, nnf(f->lhs, negated),
                             nnf(f->rhs, negated));
        case LtlOp::Or:
            return mk_binary(negated ? LtlOp::And : LtlOp::Or, nnf(f->lhs, negated),
                             nnf(f->rhs, negated));
        case LtlOp::X: return mk_unary(LtlOp::X, nnf(f->lhs, negated));
        case LtlOp::F: return mk_unary(negated ? LtlOp::G : LtlOp::F, nnf(f->lhs, negated));
        case LtlOp::G: return mk_unary(negated ? LtlOp::F : LtlOp::G, nnf(f->lhs, negated));
        case LtlOp::U:
            return mk_binary(negated ? LtlOp::R : LtlOp::U, nnf(f->lhs, negated),
                             nnf(f->rhs, negated));
        case LtlOp::R:
            return mk_binary(negated ? LtlOp::U : LtlOp::R, nnf(f->lhs, negated),
                             nnf(f->rhs, negated));
    }
    throw std::logic_error("bad LTL node");
}

}  // namespace

LtlFormula to_nnf(const LtlFormula& f) {
    LtlFormula out = f;
    out.root = nnf(f.root, false);
    return out;
}

// --- structural atom evaluation ------------------------------------------

StructuralVerdict eval_atom_structurally(const PetriNet& net, const BoundAtom& atom) {
    if (atom.kind != BoundAtom::Kind::Compare || atom.op != CmpOp::Le)
        return StructuralVerdict::Unknown;

    auto distinct_units = [&](const std::vector<uint32_t>& places) -> size_t {
        std::set<int32_t> us;
        for (uint32_t p : places) us.insert(net.places[p].myunit);
        return us.size();
    };

    if (atom.lhs.is_const && !atom.rhs.is_const) {
        const int64_t c = atom.lhs.constant;
        const int64_t n = static_cast<int64_t>(atom.rhs.places.size());
        if (c <= 0) return StructuralVerdict::AlwaysTrue;
        if (net.declared_safe && c > n) return StructuralVerdict::AlwaysFalse;
        if (net.has_units() && c > static_cast<int64_t>(distinct_units(atom.rhs.places)))
            return StructuralVerdict::AlwaysFalse;
    } else if (!atom.lhs.is_const && atom.rhs.is_const) {
        const int64_t k = atom.rhs.constant;
        const int64_t n = static_cast<int64_t>(atom.lhs.places.size());
        if (net.declared_safe && k >= n) return StructuralVerdict::AlwaysTrue;
        if (net.has_units() && k >= static_cast<int64_t>(distinct_units(atom.lhs.places)))
            return StructuralVerdict::AlwaysTrue;
    }
    return StructuralVerdict::Unknown;
}

// --- simplification ------------------------------------------------------

namespace {

LtlPtr simp(const LtlPtr& f, const LtlFormula& ctx, const PetriNet& net) {
    switch (f->op) {
        case LtlOp::True:
        case LtlOp::False: return f;
        case LtlOp::Atom: {
            switch (eval_atom_structurally(net, ctx.atoms[f->atom])) {
                case StructuralVerdict::AlwaysTrue: return mk_true();
                case StructuralVerdict::AlwaysFalse: return mk_false();
                case StructuralVerdict::Unknown: return f;
            }
            return f;
        }
        case LtlOp::Not: {
            // NNF: negation sits directly above an atom.
            LtlPtr c = simp(f->lhs, ctx, net);
            if (c->op == LtlOp::True) return mk_false();
            if (c->op == LtlOp::False) return mk_true();
            return mk_unary(LtlOp::Not, c);
        }
        case LtlOp::And: {
            LtlPtr l = simp(f->lhs, ctx, net), r = simp(f->rhs, ctx, net);
            if (l->op == LtlOp::False || r->op == LtlOp::False) return mk_false();
            if (l->op == LtlOp::True) return r;
            if (r->op == LtlOp::True) return l;
            return mk_binary(LtlOp::And, l, r);
        }
        case LtlOp::Or: {
            LtlPtr l = simp(f->lhs, ctx, net), r = simp(f->rhs, ctx, net);
            if (l->op == LtlOp::True || r->op == LtlOp::True) return mk_true();
            if (l->op == LtlOp::False) return r;
            if (r->op == LtlOp::False) return l;
            return mk_binary(LtlOp::Or, l, r);
        }
        case LtlOp::X:
        case LtlOp::F:
        case LtlOp::G: {
            LtlPtr c = simp(f->lhs, ctx, net);
            if (c->op == LtlOp::True) return mk_true();
            if (c->op == LtlOp::False) return mk_false();
            return mk_unary(f->op, c);
        }
        case LtlOp::U: {
            LtlPtr l = simp(f->lhs, ctx, net), r = simp(f->rhs, ctx, net);
            if (r->op == LtlOp::True) return mk_true();
            if (r->op == LtlOp::False) return mk_false();
            return mk_binary(LtlOp::U, l, r);
        }
        case LtlOp::R:
            return mk_binary(LtlOp::R, simp(f->lhs, ctx, net), simp(f->rhs, ctx, net));
    }
    throw std::logic_error("bad LTL node");
}

bool equal_trees(const LtlPtr& a, const LtlPtr& b) {
    if (a == b) return true;
    if (a->op != b->op || a->atom != b->atom) return false;
    if (!!a->lhs != !!b->lhs || !!a->rhs != !!b->rhs) return false;
    if (a->lhs && !equal_trees(a->lhs, b->lhs)) return false;
    if (a->rhs && !equal_trees(a->rhs, b->rhs)) return false;
    return true;
}

}  // namespace

LtlFormula simplify(const LtlFormula& f, const PetriNet& net) {
    LtlFormula out = f;
    for (;;) {
        LtlPtr next = simp(out.root, out, net);
        if (equal_trees(next, out.root)) break;
        out.root = next;
    }
    return out;
}

// --- printing ------------------------------------------------------------

namespace {

void print(std::ostringstream& os, const LtlPtr& f, const LtlFormula& ctx) {
    switch (f->op) {
        case LtlOp::True: os << "true"; return;
        case LtlOp::False: os << "false"; return;
        case LtlOp::Atom: os << ctx.atom_texts[f->atom]; return;
        case LtlOp::Not:
            os << "!";
            print(os, f->lhs, ctx);
            return;
        case LtlOp::X:
        case LtlOp::F:
        case LtlOp::G:
            os << (f->op == LtlOp::X ? "X " : f->op == LtlOp::F ? "F " : "G ");
            print(os, f->lhs, ctx);
            return;
        default: {
            const char* sym = f->op == LtlOp::And ? " && "
                              : f->op == LtlOp::Or ? " || "
                              : f->op == LtlOp::U  ? " U "
                                                   : " R ";
            os << "(";
            print(os, f->lhs, ctx);
            os << sym;
            print(os, f->rhs, ctx);
            os << ")";
            return;
        }
    }
}

}  // namespace

std::string to_string(const LtlFormula& f) {
    std::ostringstream os;
    print(os, f.root, f);
    return os.str();
}

}  // namespace pnltl

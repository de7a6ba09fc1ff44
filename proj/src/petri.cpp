#include "pnltl/petri.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace pnltl {

void PetriNet::rebuild_name_maps() {
    place_by_name.clear();
    transition_by_name.clear();
    for (uint32_t i = 0; i < places.size(); ++i) place_by_name[places[i].name] = i;
    for (uint32_t i = 0; i < transitions.size(); ++i) transition_by_name[transitions[i].name] = i;
}

namespace {

using boost::property_tree::ptree;

// Element names may carry a namespace prefix; match on the local part.
std::string local_name(const std::string& key) {
    auto pos = key.rfind(':');
    return pos == std::string::npos ? key : key.substr(pos + 1);
}

// PNML wraps scalar values in <text>; accept bare text too.
std::string element_text(const ptree& el) {
    for (const auto& [key, child] : el) {
        if (local_name(key) == "text") return child.get_value<std::string>();
    }
    return el.get_value<std::string>();
}

uint64_t parse_uint(const std::string& s, const char* what) {
    std::string trimmed;
    for (char c : s)
        if (!isspace(static_cast<unsigned char>(c))) trimmed += c;
    if (trimmed.empty()) throw PnmlError(std::string("empty ") + what);
    // MCC-style markings sometimes read "1'x"; reject anything non-numeric.
    uint64_t v = 0;
    for (char c : trimmed) {
        if (c < '0' || c > '9') throw PnmlError(std::string("non-numeric ") + what + ": " + s);
        v = v * 10 + static_cast<uint64_t>(c - '0');
        if (v > UINT32_MAX) throw PnmlError(std::string(what) + " out of range: " + s);
    }
    return v;
}

struct RawArc {
    std::string source, target;
    uint32_t weight;
};

struct PnmlScan {
    PetriNet net;
    std::vector<RawArc> arcs;
    ParseDiagnostics* diag;

    void warn(const std::string& msg) {
        if (diag) diag->warnings.push_back(msg);
    }

    void scan_node(const ptree& node) {
        for (const auto& [key, child] : node) {
            const std::string name = local_name(key);
            if (name == "place") {
                handle_place(child);
            } else if (name == "transition") {
                handle_transition(child);
            } else if (name == "arc") {
                handle_arc(child);
            } else if (name == "page") {
                scan_node(child);  // multiple pages flatten into one net
            } else if (name == "toolspecific") {
                handle_toolspecific(child);
            }
        }
    }

    static std::string require_id(const ptree& el, const char* what) {
        auto id = el.get_optional<std::string>("<xmlattr>.id");
        if (!id) throw PnmlError(std::string(what) + " without id");
        return *id;
    }

    void handle_place(const ptree& el) {
        PlaceInfo p;
        p.name = require_id(el, "place");
        uint32_t m0 = 0;
        for (const auto& [key, child] : el) {
            if (local_name(key) == "initialMarking")
                m0 = static_cast<uint32_t>(parse_uint(element_text(child), "initialMarking"));
        }
        if (net.place_by_name.count(p.name)) throw PnmlError("duplicate place id: " + p.name);
        net.place_by_name[p.name] = static_cast<uint32_t>(net.places.size());
        net.places.push_back(std::move(p));
        net.initial_marking.push_back(m0);
    }

    void handle_transition(const ptree& el) {
        TransitionInfo t;
        t.name = require_id(el, "transition");
        if (net.transition_by_name.count(t.name))
            throw PnmlError("duplicate transition id: " + t.name);
        net.transition_by_name[t.name] = static_cast<uint32_t>(net.transitions.size());
        net.transitions.push_back(std::move(t));
    }

    void handle_arc(const ptree& el) {
        RawArc a;
        a.source = el.get<std::string>("<xmlattr>.source", "");
        a.target = el.get<std::string>("<xmlattr>.target", "");
        if (a.source.empty() || a.target.empty()) throw PnmlError("arc without source/target");
        a.weight = 1;
        for (const auto& [key, child] : el) {
            if (local_name(key) == "inscription") {
                uint64_t w = parse_uint(element_text(child), "inscription");
                if (w == 0) throw PnmlError("zero-weight arc inscription");
                a.weight = static_cast<uint32_t>(w);
            }
        }
        arcs.push_back(std::move(a));
    }

    // Deferred until every place is known: the section may precede the pages.
    const ptree* nupn_structure = nullptr;

    void handle_toolspecific(const ptree& el) {
        auto tool = el.get_optional<std::string>("<xmlattr>.tool");
        if (!tool || *tool != "nupn") return;
        for (const auto& [key, child] : el) {
            if (local_name(key) == "structure") nupn_structure = &child;
        }
    }

    void finish() {
        if (nupn_structure) handle_nupn_structure(*nupn_structure);
    }

    void handle_nupn_structure(const ptree& el) {
        auto safe = el.get_optional<std::string>("<xmlattr>.safe");
        if (safe && (*safe == "true" || *safe == "1")) net.declared_safe = true;

        std::vector<UnitInfo> units;
        std::vector<int32_t> owner(net.places.size(), -1);
        bool valid = true;
        collect_units(el, units, owner, valid);
        if (!valid) {
            warn("NUPN unit section rejected; falling back to unitless net");
            return;
        }
        // Every place must land in exactly one unit.
        for (uint32_t p = 0; p < owner.size(); ++p) {
            if (owner[p] < 0) {
                warn("NUPN unit section rejected: place " + net.places[p].name +
                     " belongs to no unit");
                return;
            }
        }
        net.units = std::move(units);
        for (uint32_t p = 0; p < owner.size(); ++p) net.places[p].myunit = owner[p];
        for (uint32_t u = 0; u < net.units.size(); ++u) {
            uint32_t off = 1;  // code 0 is reserved for "no local place marked"
            for (uint32_t p : net.units[u].local_places) net.places[p].myoffset = off++;
        }
    }

    void collect_units(const ptree& el, std::vector<UnitInfo>& units, std::vector<int32_t>& owner,
                       bool& valid) {
        for (const auto& [key, child] : el) {
            if (local_name(key) != "unit") continue;
            UnitInfo u;
            u.name = child.get<std::string>("<xmlattr>.id", "u" + std::to_string(units.size()));
            for (const auto& [ckey, cchild] : child) {
                if (local_name(ckey) != "places") continue;
                std::istringstream iss(cchild.get_value<std::string>());
                std::string id;
                while (iss >> id) {
                    auto pi = net.place_index(id);
                    if (!pi) {
                        warn("NUPN unit " + u.name + " names unknown place " + id);
                        valid = false;
                        return;
                    }
                    if (owner[*pi] >= 0) {
                        warn("NUPN units overlap on place " + id);
                        valid = false;
                        return;
                    }
                    owner[*pi] = static_cast<int32_t>(units.size());
                    u.local_places.push_back(*pi);
                }
            }
            units.push_back(std::move(u));
            // Nested subunits contribute their own local places.
            collect_units(child, units, owner, valid);
            if (!valid) return;
        }
    }
};

const ptree* find_child(const ptree& node, const char* name) {
    for (const auto& [key, child] : node) {
        if (local_name(key) == name) return &child;
    }
    return nullptr;
}

}  // namespace

PetriNet parse_pnml(const std::string& xml_text, ParseDiagnostics* diag) {
    ptree doc;
    try {
        std::istringstream iss(xml_text);
        boost::property_tree::read_xml(iss, doc);
    } catch (const boost::property_tree::xml_parser_error& e) {
        throw PnmlError(std::string("malformed XML: ") + e.what());
    }

    const ptree* pnml = find_child(doc, "pnml");
    if (!pnml) throw PnmlError("no <pnml> root element");
    const ptree* netel = find_child(*pnml, "net");
    if (!netel) throw PnmlError("no <net> element");
    auto type = netel->get_optional<std::string>("<xmlattr>.type");
    if (type && type->find("symmetric") != std::string::npos)
        throw PnmlError("unsupported net type: " + *type);

    PnmlScan scan;
    scan.diag = diag;
    scan.scan_node(*netel);
    scan.finish();

    PetriNet& net = scan.net;
    for (const RawArc& a : scan.arcs) {
        auto sp = net.place_index(a.source);
        auto st = net.transition_index(a.source);
        auto tp = net.place_index(a.target);
        auto tt = net.transition_index(a.target);
        if (sp && tt) {
            net.transitions[*tt].pre.push_back({*sp, a.weight});
        } else if (st && tp) {
            net.transitions[*st].post.push_back({*tp, a.weight});
        } else {
            throw PnmlError("arc references undeclared node: " + a.source + " -> " + a.target);
        }
    }
    for (auto& t : net.transitions) {
        std::sort(t.pre.begin(), t.pre.end(), [](const Arc& a, const Arc& b) { return a.place < b.place; });
        std::sort(t.post.begin(), t.post.end(), [](const Arc& a, const Arc& b) { return a.place < b.place; });
        // Merge parallel arcs by summing weights.
        auto merge = [](std::vector<Arc>& arcs) {
            std::vector<Arc> out;
            for (const Arc& a : arcs) {
                if (!out.empty() && out.back().place == a.place)
                    out.back().weight += a.weight;
                else
                    out.push_back(a);
            }
            arcs = std::move(out);
        };
        merge(t.pre);
        merge(t.post);
    }
    return net;
}

bool is_enabled(const PetriNet& net, const Marking& m, uint32_t t) {
    for (const Arc& a : net.transitions[t].pre) {
        if (m[a.place] < a.weight) return false;
    }
    return true;
}

Marking fire(const PetriNet& net, const Marking& m, uint32_t t) {
    assert(is_enabled(net, m, t));
    Marking out = m;
    for (const Arc& a : net.transitions[t].pre) out[a.place] -= a.weight;
    for (const Arc& a : net.transitions[t].post) {
        uint64_t v = static_cast<uint64_t>(out[a.place]) + a.weight;
        if (v > UINT32_MAX) throw std::overflow_error("token count exceeds 2^32-1");
        out[a.place] = static_cast<uint32_t>(v);
    }
    return out;
}

std::optional<uint32_t> next_enabled(const PetriNet& net, const Marking& m,
                                     std::optional<uint32_t> after) {
    uint32_t start = after ? *after + 1 : 0;
    for (uint32_t t = start; t < net.transitions.size(); ++t) {
        if (is_enabled(net, m, t)) return t;
    }
    return std::nullopt;
}

std::vector<uint32_t> fireset(const PetriNet& net, const Marking& m) {
    std::vector<uint32_t> out;
    for (uint32_t t = 0; t < net.transitions.size(); ++t) {
        if (is_enabled(net, m, t)) out.push_back(t);
    }
    return out;
}

int64_t eval_int_operand(const Marking& m, const IntOperand& e) {
    if (e.is_const) return e.constant;
    int64_t sum = 0;
    for (uint32_t p : e.places) sum += m[p];
    return sum;
}

bool eval_atom(const PetriNet& net, const Marking& m, const BoundAtom& atom) {
    if (atom.kind == BoundAtom::Kind::Fireable) {
        for (uint32_t t : atom.transitions) {
            if (is_enabled(net, m, t)) return true;
        }
        return false;
    }
    int64_t a = eval_int_operand(m, atom.lhs);
    int64_t b = eval_int_operand(m, atom.rhs);
    return atom.op == CmpOp::Le ? a <= b : a < b;
}

}  // namespace pnltl

// pnltl: explicit-state LTL model checking for place/transition Petri nets.
//
//   pnltl --net model.pnml --formula 'G (tokens-count(p1) <= 2)'
//   pnltl bench --net model.pnml --formula-file props.ltl
//
// Exit codes: 0 = every formula decided, 1 = any resource-limit or
// cannot-handle outcome, 2 = usage or parse error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pnltl/buchi.hpp"
#include "pnltl/codec.hpp"
#include "pnltl/explore.hpp"
#include "pnltl/ltl.hpp"
#include "pnltl/petri.hpp"

namespace {

using namespace pnltl;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::optional<EncodingScheme> scheme_from_flag(const std::string& s) {
    if (s == "auto") return std::nullopt;
    if (s == "default") return EncodingScheme::Default16;  // widened to 32 bits as needed
    if (s == "safe") return EncodingScheme::OneSafe;
    if (s == "nupn") return EncodingScheme::Nupn;
    if (s == "pinv") return EncodingScheme::PInvariant;
    throw CLI::ValidationError("--encoding", "unknown encoding: " + s);
}

std::string transition_name(const PetriNet& net, const CexStep& s) {
    return s.transition ? net.transitions[*s.transition].name : std::string("(stutter)");
}

nlohmann::ordered_json cex_json(const PetriNet& net, const CounterexampleRun& run) {
    nlohmann::ordered_json j;
    auto names = [&](const std::vector<CexStep>& steps) {
        nlohmann::ordered_json a = nlohmann::ordered_json::array();
        for (const CexStep& s : steps) a.push_back(transition_name(net, s));
        return a;
    };
    j["prefix"] = names(run.prefix);
    j["cycle"] = names(run.cycle);
    return j;
}

struct Cli {
    std::string net_path;
    std::vector<std::string> formulas;
    std::string formula_file;
    std::string encoding = "auto";
    std::string dyn = "on", drw = "on", hba = "on";
    double coeff = 0.1;
    uint64_t bound = 10000;
    uint64_t bound_growth = 10;
    double timeout = 300.0;
    uint64_t memory_cap = uint64_t(16) << 30;
    std::string output = "human";
    bool dump_layout = false;
    bool dump_buchi_flag = false;
};

CheckOptions to_options(const Cli& c) {
    CheckOptions o;
    o.scheme = scheme_from_flag(c.encoding);
    o.dynamic_fireset = c.dyn == "on";
    o.drw = c.drw == "on";
    o.heuristic = c.hba == "on";
    o.heuristic_coeff = c.coeff;
    o.bound0 = c.bound;
    o.bound_growth = c.bound_growth;
    o.timeout_seconds = c.timeout;
    o.memory_cap_bytes = c.memory_cap;
    return o;
}

struct LoadedFormula {
    std::string text;
    LtlFormula formula;
};

std::vector<LoadedFormula> load_formulas(const Cli& c, const PetriNet& net) {
    std::vector<LoadedFormula> out;
    for (const std::string& f : c.formulas) out.push_back({f, parse_ltl(f, net)});
    if (!c.formula_file.empty()) {
        std::istringstream in(slurp(c.formula_file));
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const size_t hash = line.find('#');
            std::string body = hash == std::string::npos ? line : line.substr(0, hash);
            const size_t a = body.find_first_not_of(" \t\r");
            if (a == std::string::npos) continue;
            body = body.substr(a, body.find_last_not_of(" \t\r") - a + 1);
            try {
                out.push_back({body, parse_ltl(body, net)});
            } catch (const LtlParseError& e) {
                throw LtlParseError(c.formula_file + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }
    if (out.empty()) throw std::runtime_error("no formula given (--formula / --formula-file)");
    return out;
}

int run_check(const Cli& cli, const PetriNet& net) {
    const CheckOptions opts = to_options(cli);

    if (cli.dump_layout) {
        std::cout << dump_layout_tsv(net, plan_encoding(net, opts.scheme));
        if (cli.formulas.empty() && cli.formula_file.empty()) return 0;
    }

    const std::vector<LoadedFormula> formulas = load_formulas(cli, net);

    if (cli.dump_buchi_flag) {
        for (const LoadedFormula& lf : formulas) {
            LtlFormula negated = lf.formula;
            negated.root = mk_unary(LtlOp::Not, lf.formula.root);
            LtlFormula simplified = simplify(to_nnf(negated), net);
            BuchiAutomaton a = simplify_buchi(ltl_to_buchi(simplified));
            annotate_heuristic(a, opts.heuristic_coeff);
            std::cout << "# " << lf.text << "\n"
                      << dump_buchi(a, simplified.atom_texts);
        }
        return 0;
    }

    bool limited = false;
    for (size_t i = 0; i < formulas.size(); ++i) {
        const Verdict v = check(net, formulas[i].formula, opts);
        if (v.kind == VerdictKind::ResourceLimit || v.kind == VerdictKind::CannotHandle)
            limited = true;
        if (cli.output == "machine") {
            nlohmann::ordered_json j;
            j["index"] = i;
            j["formula"] = formulas[i].text;
            j["verdict"] = verdict_name(v.kind);
            if (!v.reason.empty()) j["reason"] = v.reason;
            j["states"] = v.stats.states;
            j["product_states"] = v.stats.product_expanded;
            j["rounds"] = v.stats.rounds;
            j["wall_seconds"] = v.stats.wall_seconds;
            j["peak_resident_bytes"] = v.stats.peak_resident_bytes;
            if (v.cex) j["counterexample"] = cex_json(net, *v.cex);
            std::cout << j.dump() << "\n";
        } else {
            std::cout << "formula " << i + 1 << ": " << verdict_name(v.kind)
                      << "  (states=" << v.stats.states
                      << " product=" << v.stats.product_expanded << " rounds=" << v.stats.rounds
                      << " time=" << v.stats.wall_seconds << "s)";
            if (!v.reason.empty()) std::cout << "  [" << v.reason << "]";
            std::cout << "\n    " << formulas[i].text << "\n";
            if (v.cex) {
                std::cout << "    counterexample prefix:";
                for (const CexStep& s : v.cex->prefix) std::cout << " " << transition_name(net, s);
                std::cout << "\n    counterexample cycle:";
                for (const CexStep& s : v.cex->cycle) std::cout << " " << transition_name(net, s);
                std::cout << "\n";
            }
        }
    }
    return limited ? 1 : 0;
}

// One formula under one toggle configuration; timeouts reported at the limit.
struct BenchCell {
    double t = 0.0;
    uint64_t m = 0;
    uint64_t n = 0;
    VerdictKind kind = VerdictKind::Holds;
    bool timed_out = false;
};

BenchCell bench_run(const PetriNet& net, const LtlFormula& f, CheckOptions o, bool dyn, bool drw,
                    bool hba) {
    o.dynamic_fireset = dyn;
    o.drw = drw;
    o.heuristic = hba;
    const Verdict v = check(net, f, o);
    BenchCell c;
    c.kind = v.kind;
    c.timed_out = v.kind == VerdictKind::ResourceLimit;
    c.t = c.timed_out ? o.timeout_seconds : v.stats.wall_seconds;
    c.m = v.stats.peak_resident_bytes;
    c.n = v.stats.product_expanded;
    return c;
}

std::string ratio(double num, double den) {
    if (den <= 0.0) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", num / den);
    return buf;
}

int run_bench(const Cli& cli, const PetriNet& net) {
    const CheckOptions opts = to_options(cli);
    const std::vector<LoadedFormula> formulas = load_formulas(cli, net);

    std::cout << "formula\tverdict\tT_ori\tM_ori\tN_ori\tT_dyn\t\xE2\x88\x87T1\tM_dyn\t\xE2\x88\x87M1"
                 "\tT_drw\t\xE2\x88\x87T2\tN_hba\t\xE2\x88\x87N\tflags\n";
    bool limited = false;
    for (const LoadedFormula& lf : formulas) {
        const BenchCell ori = bench_run(net, lf.formula, opts, false, false, false);
        const BenchCell dyn = bench_run(net, lf.formula, opts, true, false, false);
        const BenchCell drw = bench_run(net, lf.formula, opts, false, true, false);
        const BenchCell hba = bench_run(net, lf.formula, opts, false, false, true);
        for (const BenchCell& c : {ori, dyn, drw, hba}) {
            if (c.kind == VerdictKind::ResourceLimit || c.kind == VerdictKind::CannotHandle)
                limited = true;
        }
        std::string flags;
        if (ori.timed_out || dyn.timed_out || drw.timed_out || hba.timed_out) flags += "timeout ";
        if (!flags.empty()) flags.pop_back();
        std::cout << lf.text << "\t" << verdict_name(ori.kind) << "\t" << ori.t << "\t" << ori.m
                  << "\t" << ori.n << "\t" << dyn.t << "\t" << ratio(ori.t, dyn.t) << "\t" << dyn.m
                  << "\t" << ratio(double(ori.m), double(dyn.m)) << "\t" << drw.t << "\t"
                  << ratio(ori.t, drw.t) << "\t" << hba.n << "\t"
                  << ratio(double(ori.n), double(hba.n)) << "\t"
                  << (flags.empty() ? "-" : flags) << "\n";
    }
    return limited ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explicit-state LTL model checker for place/transition Petri nets"};
    app.fallthrough();
    Cli cli;
    app.add_option("--net", cli.net_path, "PNML net file")->required();
    app.add_option("--formula", cli.formulas, "Inline LTL formula (repeatable)");
    app.add_option("--formula-file", cli.formula_file,
                   "File with one LTL formula per line (# comments)");
    app.add_option("--encoding", cli.encoding, "auto|default|safe|nupn|pinv")
        ->check(CLI::IsMember({"auto", "default", "safe", "nupn", "pinv"}))
        ->capture_default_str();
    const auto onoff = CLI::IsMember({"on", "off"});
    app.add_option("--dyn", cli.dyn, "Dynamic fireset")->check(onoff)->capture_default_str();
    app.add_option("--drw", cli.drw, "Direct read/write on encoded markings")
        ->check(onoff)
        ->capture_default_str();
    app.add_option("--hba", cli.hba, "Heuristic Büchi successor ordering")
        ->check(onoff)
        ->capture_default_str();
    app.add_option("--coeff", cli.coeff, "Heuristic toughness coefficient")
        ->capture_default_str();
    app.add_option("--bound", cli.bound, "Initial depth bound (0 = unbounded)")
        ->capture_default_str();
    app.add_option("--bound-growth", cli.bound_growth, "Bound multiplier per round")
        ->capture_default_str();
    app.add_option("--timeout", cli.timeout, "Time limit in seconds")->capture_default_str();
    app.add_option("--memory-cap", cli.memory_cap, "Memory cap in bytes")->capture_default_str();
    app.add_option("--output", cli.output, "human|machine")
        ->check(CLI::IsMember({"human", "machine"}))
        ->capture_default_str();
    app.add_flag("--dump-layout", cli.dump_layout, "Print the encoding layout table and exit");
    app.add_flag("--dump-buchi", cli.dump_buchi_flag,
                 "Print the automaton of each negated formula and exit");
    CLI::App* bench = app.add_subcommand("bench", "A/B benchmark of each optimization vs baseline");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        ParseDiagnostics diag;
        const PetriNet net = parse_pnml(slurp(cli.net_path), &diag);
        for (const std::string& w : diag.warnings) std::cerr << "warning: " << w << "\n";
        return bench->parsed() ? run_bench(cli, net) : run_check(cli, net);
    } catch (const PnmlError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const LtlParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const PlanError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

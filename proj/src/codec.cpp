#include "pnltl/codec.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <numeric>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

namespace pnltl {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

const char* scheme_name(EncodingScheme s) {
    switch (s) {
        case EncodingScheme::Default16: return "default16";
        case EncodingScheme::Default32: return "default32";
        case EncodingScheme::OneSafe: return "1-safe";
        case EncodingScheme::Nupn: return "nupn";
        case EncodingScheme::PInvariant: return "p-invariant";
    }
    return "?";
}

// --- raw bit-range access ------------------------------------------------

static inline uint32_t low_mask(uint32_t len) {
    return len >= 32 ? 0xFFFFFFFFu : ((1u << len) - 1u);
}

uint32_t read_bits(const uint32_t* words, uint32_t start, uint32_t len) {
    if (len == 0) return 0;
    const uint32_t index = start / 32;
    const uint32_t offset = start % 32;
    const uint32_t mask = low_mask(len);
    if (offset + len <= 32) {
        const uint32_t pattern_read = mask << offset;
        return (words[index] & pattern_read) >> offset;
    }
    const uint32_t pattern_read_low = mask << offset;
    const uint32_t pattern_read_high = mask >> (32 - offset);
    return ((words[index] & pattern_read_low) >> offset) +
           ((words[index + 1] & pattern_read_high) << (32 - offset));
}

void write_bits(uint32_t* words, uint32_t start, uint32_t len, uint32_t value) {
    if (len == 0) return;
    const uint32_t index = start / 32;
    const uint32_t offset = start % 32;
    const uint32_t mask = low_mask(len);
    assert((uint64_t(value) & ~uint64_t(mask)) == 0);
    if (offset + len <= 32) {
        const uint32_t pattern_zero = ~(mask << offset);
        const uint32_t pattern_write = value << offset;
        words[index] = (words[index] & pattern_zero) | pattern_write;
        return;
    }
    const uint32_t pattern_zero_low = ~(mask << offset);
    const uint32_t pattern_zero_high = ~(mask >> (32 - offset));
    const uint32_t pattern_write_low = value << offset;
    const uint32_t pattern_write_high = value >> (32 - offset);
    words[index] = (words[index] & pattern_zero_low) | pattern_write_low;
    words[index + 1] = (words[index + 1] & pattern_zero_high) | pattern_write_high;
}

// --- place invariants ----------------------------------------------------

namespace {

// Reduced row echelon form over the rationals, in place.
// Returns pivot column per row.
std::vector<int32_t> rref(std::vector<std::vector<cpp_rational>>& a) {
    std::vector<int32_t> pivot_col;
    if (a.empty()) return pivot_col;
    const size_t rows = a.size(), cols = a[0].size();
    size_t r = 0;
    for (size_t c = 0; c < cols && r < rows; ++c) {
        size_t sel = r;
        while (sel < rows && a[sel][c] == 0) ++sel;
        if (sel == rows) continue;
        std::swap(a[sel], a[r]);
        const cpp_rational inv = a[r][c];
        for (size_t j = c; j < cols; ++j) a[r][j] /= inv;
        for (size_t i = 0; i < rows; ++i) {
            if (i == r || a[i][c] == 0) continue;
            const cpp_rational f = a[i][c];
            for (size_t j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
        }
        pivot_col.push_back(static_cast<int32_t>(c));
        ++r;
    }
    a.resize(r);
    return pivot_col;
}

bool fits_int64(const cpp_int& v) {
    return v >= std::numeric_limits<int64_t>::min() && v <= std::numeric_limits<int64_t>::max();
}

// Farkas elimination on [C | I]: produces nonnegative integer invariants
// (semiflows). Eliminates one transition column at a time, combining rows of
// opposite sign; rows are gcd-normalized and deduplicated. Gives up (returns
// what the caller can still use: nothing) if the row count explodes.
std::vector<std::vector<cpp_int>> farkas_semiflows(const PetriNet& net, size_t row_cap) {
    const size_t np = net.places.size();
    const size_t nt = net.transitions.size();
    // row = [c_0 .. c_{nt-1} | y_0 .. y_{np-1}], invariant part starts at nt.
    std::vector<std::vector<cpp_int>> rows(np, std::vector<cpp_int>(nt + np, 0));
    for (size_t p = 0; p < np; ++p) rows[p][nt + p] = 1;
    for (size_t t = 0; t < nt; ++t) {
        for (const Arc& a : net.transitions[t].pre) rows[a.place][t] -= int64_t(a.weight);
        for (const Arc& a : net.transitions[t].post) rows[a.place][t] += int64_t(a.weight);
    }
    auto normalize = [](std::vector<cpp_int>& r) {
        cpp_int g = 0;
        for (const auto& x : r) g = boost::multiprecision::gcd(g, x);
        if (g > 1)
            for (auto& x : r) x /= g;
    };
    for (size_t t = 0; t < nt; ++t) {
        std::vector<std::vector<cpp_int>> keep, pos, neg;
        for (auto& r : rows) {
            if (r[t] == 0)
                keep.push_back(std::move(r));
            else if (r[t] > 0)
                pos.push_back(std::move(r));
            else
                neg.push_back(std::move(r));
        }
        if (keep.size() + pos.size() * neg.size() > row_cap) return {};
        for (const auto& rp : pos) {
            for (const auto& rn : neg) {
                std::vector<cpp_int> combined(rp.size());
                const cpp_int a = -rn[t], b = rp[t];
                for (size_t j = 0; j < rp.size(); ++j) combined[j] = a * rp[j] + b * rn[j];
                normalize(combined);
                keep.push_back(std::move(combined));
            }
        }
        std::sort(keep.begin(), keep.end());
        keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
        rows = std::move(keep);
    }
    std::vector<std::vector<cpp_int>> out;
    for (auto& r : rows) {
        std::vector<cpp_int> y(r.begin() + long(nt), r.end());
        bool any = false;
        for (const auto& x : y) any = any || x != 0;
        if (any) out.push_back(std::move(y));
    }
    return out;
}

}  // namespace

InvariantAnalysis compute_invariant_bounds(const PetriNet& net) {
    const size_t np = net.places.size();
    const size_t nt = net.transitions.size();
    InvariantAnalysis out;
    out.bound.assign(np, std::nullopt);
    out.redundant_index.assign(np, -1);
    if (np == 0) return out;

    // Rows of C^T: one equation sum_p C[p][t] * y[p] = 0 per transition.
    std::vector<std::vector<cpp_rational>> ct(nt, std::vector<cpp_rational>(np, 0));
    for (size_t t = 0; t < nt; ++t) {
        for (const Arc& a : net.transitions[t].pre) ct[t][a.place] -= int64_t(a.weight);
        for (const Arc& a : net.transitions[t].post) ct[t][a.place] += int64_t(a.weight);
    }
    std::vector<int32_t> pivots = rref(ct);

    // Kernel basis: one vector per free column.
    std::vector<bool> is_pivot(np, false);
    for (int32_t c : pivots) is_pivot[c] = true;
    std::vector<std::vector<cpp_rational>> kernel;
    for (size_t c = 0; c < np; ++c) {
        if (is_pivot[c]) continue;
        std::vector<cpp_rational> y(np, 0);
        y[c] = 1;
        for (size_t r = 0; r < ct.size(); ++r) y[pivots[r]] = -ct[r][c];
        kernel.push_back(std::move(y));
    }
    if (kernel.empty()) return out;

    // Bounds from nonnegative invariants (Farkas semiflows):
    // b(p) = floor(y^T m0 / y(p)), minimum over all covering invariants.
    for (const std::vector<cpp_int>& iy : farkas_semiflows(net, 20000)) {
        cpp_int weighted_m0 = 0;
        for (size_t p = 0; p < np; ++p) weighted_m0 += iy[p] * int64_t(net.initial_marking[p]);
        std::vector<int64_t> stored(np);
        bool storable = true;
        for (size_t p = 0; p < np; ++p) {
            storable = storable && fits_int64(iy[p]);
            if (storable) stored[p] = static_cast<int64_t>(iy[p]);
            if (iy[p] > 0) {
                cpp_int b = weighted_m0 / iy[p];
                uint64_t bb = b > std::numeric_limits<uint64_t>::max()
                                  ? std::numeric_limits<uint64_t>::max()
                                  : static_cast<uint64_t>(b);
                if (!out.bound[p] || bb < *out.bound[p]) out.bound[p] = bb;
            }
        }
        if (storable) out.nonneg_invariants.push_back(std::move(stored));
    }

    // Redundant/significant split: RREF over the kernel rows. Pivot places are
    // redundant and solved as affine formulas over the remaining (significant)
    // places; each kernel row y keeps y^T m = y^T m0 on every reachable m.
    std::vector<std::vector<cpp_rational>> k = kernel;
    for (auto& row : k) {
        cpp_rational c0 = 0;
        for (size_t p = 0; p < np; ++p) c0 += row[p] * int64_t(net.initial_marking[p]);
        row.push_back(c0);  // augmented column: the invariant constant
    }
    std::vector<int32_t> rpivots = rref(k);
    for (size_t r = 0; r < k.size(); ++r) {
        const int32_t p = rpivots[r];
        if (p >= int32_t(np)) continue;  // degenerate: pivot in the constant column
        RedundantFormula f;
        cpp_int den = 1;
        for (size_t j = 0; j < np; ++j) {
            if (int32_t(j) == p) continue;
            den = boost::multiprecision::lcm(den, denominator(k[r][j]));
        }
        den = boost::multiprecision::lcm(den, denominator(k[r][np]));
        if (!fits_int64(den)) continue;
        f.den = static_cast<int64_t>(den);
        cpp_int c = numerator(k[r][np]) * (den / denominator(k[r][np]));
        if (!fits_int64(c)) continue;
        f.num_const = static_cast<int64_t>(c);
        bool ok = true;
        for (size_t j = 0; j < np; ++j) {
            if (int32_t(j) == p || k[r][j] == 0) continue;
            cpp_int coeff = -numerator(k[r][j]) * (den / denominator(k[r][j]));
            if (!fits_int64(coeff)) {
                ok = false;
                break;
            }
            f.terms.emplace_back(uint32_t(j), static_cast<int64_t>(coeff));
        }
        if (!ok) continue;
        out.redundant_index[p] = static_cast<int32_t>(out.redundant.size());
        out.redundant.push_back(std::move(f));
    }
    return out;
}

// --- planning ------------------------------------------------------------

namespace {

uint32_t bits_for_bound(uint64_t b) {  // ceil(log2(b+1))
    return static_cast<uint32_t>(std::bit_width(b));
}

bool m0_unit_safe(const PetriNet& net) {
    for (const UnitInfo& u : net.units) {
        uint32_t marked = 0;
        for (uint32_t p : u.local_places) {
            if (net.initial_marking[p] > 1) return false;
            marked += net.initial_marking[p];
        }
        if (marked > 1) return false;
    }
    return true;
}

void finish_plan(EncodingPlan& plan) {
    plan.words = (plan.total_bits + 31) / 32;
    if (plan.words == 0) plan.words = 1;  // degenerate nets still get one word
}

}  // namespace

EncodingPlan plan_encoding(const PetriNet& net, std::optional<EncodingScheme> requested) {
    const uint32_t np = static_cast<uint32_t>(net.places.size());
    const bool auto_select = !requested;

    auto try_one_safe = [&]() -> std::optional<EncodingPlan> {
        if (!net.declared_safe) {
            if (!auto_select) throw PlanError("1-safe encoding requested but net is not declared safe");
            return std::nullopt;
        }
        EncodingPlan plan;
        plan.scheme = EncodingScheme::OneSafe;
        plan.place_code.resize(np);
        for (uint32_t p = 0; p < np; ++p) plan.place_code[p] = {p, 1};
        plan.total_bits = np;
        finish_plan(plan);
        return plan;
    };

    auto try_nupn = [&]() -> std::optional<EncodingPlan> {
        if (!net.has_units()) {
            if (!auto_select) throw PlanError("NUPN encoding requested but net has no units");
            return std::nullopt;
        }
        if (!m0_unit_safe(net)) {
            if (!auto_select) throw PlanError("NUPN encoding requested but m0 is not unit-safe");
            return std::nullopt;
        }
        EncodingPlan plan;
        plan.scheme = EncodingScheme::Nupn;
        plan.unit_code.resize(net.units.size());
        uint32_t pos = 0;
        for (size_t u = 0; u < net.units.size(); ++u) {
            uint32_t len = bits_for_bound(net.units[u].local_places.size());
            plan.unit_code[u] = {pos, len};
            pos += len;
        }
        plan.total_bits = pos;
        finish_plan(plan);
        return plan;
    };

    auto try_pinv = [&]() -> std::optional<EncodingPlan> {
        InvariantAnalysis inv = compute_invariant_bounds(net);
        bool ok = inv.all_bounded();
        uint32_t pos = 0;
        EncodingPlan plan;
        plan.scheme = EncodingScheme::PInvariant;
        plan.place_code.resize(np);
        plan.place_bound.resize(np, UINT64_MAX);
        plan.redundant_index = inv.redundant_index;
        plan.redundant = inv.redundant;
        for (uint32_t p = 0; ok && p < np; ++p) {
            plan.place_bound[p] = *inv.bound[p];
            if (plan.place_is_redundant(p)) {
                plan.place_code[p] = {0, 0};
                continue;
            }
            uint32_t len = bits_for_bound(plan.place_bound[p]);
            if (len > 32) ok = false;
            plan.place_code[p] = {pos, len};
            pos += len;
        }
        if (!ok) {
            if (!auto_select)
                throw PlanError("p-invariant encoding requested but bound estimation failed");
            return std::nullopt;
        }
        plan.total_bits = pos;
        finish_plan(plan);
        return plan;
    };

    auto make_default = [&]() -> EncodingPlan {
        bool wide = false;
        for (uint32_t v : net.initial_marking)
            if (v > 65535) wide = true;
        EncodingPlan plan;
        plan.scheme = wide ? EncodingScheme::Default32 : EncodingScheme::Default16;
        const uint32_t len = wide ? 32 : 16;
        plan.place_code.resize(np);
        for (uint32_t p = 0; p < np; ++p) plan.place_code[p] = {p * len, len};
        plan.total_bits = np * len;
        finish_plan(plan);
        return plan;
    };

    if (auto_select) {
        if (auto p = try_one_safe()) return *p;
        if (auto p = try_nupn()) return *p;
        if (auto p = try_pinv()) return *p;
        return make_default();
    }
    switch (*requested) {
        case EncodingScheme::OneSafe: return *try_one_safe();
        case EncodingScheme::Nupn: return *try_nupn();
        case EncodingScheme::PInvariant: return *try_pinv();
        case EncodingScheme::Default16:
        case EncodingScheme::Default32: return make_default();
    }
    throw PlanError("unknown encoding scheme");
}

std::string dump_layout_tsv(const PetriNet& net, const EncodingPlan& plan) {
    std::ostringstream os;
    os << "place\tstart_pos\tbit_len\n";
    for (uint32_t p = 0; p < net.places.size(); ++p) {
        BitRange r{0, 0};
        if (plan.scheme == EncodingScheme::Nupn)
            r = plan.unit_code[net.places[p].myunit];
        else
            r = plan.place_code[p];
        os << net.places[p].name << '\t' << r.start << '\t' << r.len << '\n';
    }
    return os.str();
}

// --- DRW + baseline codec ------------------------------------------------

static uint32_t recompute_redundant([[maybe_unused]] const PetriNet& net, const EncodingPlan& plan,
                                    const EncodedMarking& enc, uint32_t place) {
    const RedundantFormula& f = plan.redundant[plan.redundant_index[place]];
    int64_t num = f.num_const;
    for (const auto& [q, coeff] : f.terms) {
        const BitRange r = plan.place_code[q];
        num += coeff * int64_t(read_bits(enc.data(), r.start, r.len));
    }
    assert(num % f.den == 0 && num / f.den >= 0);
    return static_cast<uint32_t>(num / f.den);
}

uint32_t drw_read(const PetriNet& net, const EncodingPlan& plan, const EncodedMarking& enc,
                  uint32_t place) {
    if (plan.scheme == EncodingScheme::Nupn) {
        const PlaceInfo& p = net.places[place];
        const BitRange r = plan.unit_code[p.myunit];
        return read_bits(enc.data(), r.start, r.len) == p.myoffset ? 1 : 0;
    }
    if (plan.scheme == EncodingScheme::PInvariant && plan.place_is_redundant(place))
        return recompute_redundant(net, plan, enc, place);
    const BitRange r = plan.place_code[place];
    return read_bits(enc.data(), r.start, r.len);
}

static void overflow_fatal(const PetriNet& net, const EncodingPlan& plan, uint32_t place,
                           uint64_t value) {
    std::ostringstream os;
    os << "cannot handle model: token count " << value << " of place " << net.places[place].name
       << " does not fit " << scheme_name(plan.scheme) << " encoding";
    throw CannotHandleError(os.str());
}

void drw_write(const PetriNet& net, const EncodingPlan& plan, EncodedMarking& enc, uint32_t place,
               uint64_t value) {
    if (plan.scheme == EncodingScheme::Nupn) {
        const PlaceInfo& p = net.places[place];
        const BitRange r = plan.unit_code[p.myunit];
        if (value > 1) overflow_fatal(net, plan, place, value);
        const uint32_t cur = read_bits(enc.data(), r.start, r.len);
        if (value == 1) {
            if (cur != 0 && cur != p.myoffset) overflow_fatal(net, plan, place, value);
            write_bits(enc.data(), r.start, r.len, p.myoffset);
        } else if (cur == p.myoffset) {
            write_bits(enc.data(), r.start, r.len, 0);
        }
        return;
    }
    if (plan.scheme == EncodingScheme::PInvariant) {
        // A p-invariant overflow means the bound estimation itself is wrong.
        if (plan.place_is_redundant(place)) return;  // derived, carries no bits
        const BitRange r = plan.place_code[place];
        if (r.len < 64 && value > ((uint64_t(1) << r.len) - 1)) {
            assert(!"p-invariant bound violated");
            throw std::logic_error("internal error: p-invariant bound violated for place " +
                                   net.places[place].name);
        }
        write_bits(enc.data(), r.start, r.len, static_cast<uint32_t>(value));
        return;
    }
    const BitRange r = plan.place_code[place];
    if (r.len < 64 && value > ((uint64_t(1) << r.len) - 1)) overflow_fatal(net, plan, place, value);
    write_bits(enc.data(), r.start, r.len, static_cast<uint32_t>(value));
}

EncodedMarking encode(const PetriNet& net, const EncodingPlan& plan, const Marking& m) {
    EncodedMarking enc(plan.words, 0);
    for (uint32_t p = 0; p < net.places.size(); ++p) {
        if (m[p] != 0 || plan.scheme == EncodingScheme::Nupn) drw_write(net, plan, enc, p, m[p]);
    }
    return enc;
}

Marking decode(const PetriNet& net, const EncodingPlan& plan, const EncodedMarking& enc) {
    Marking m(net.places.size());
    for (uint32_t p = 0; p < net.places.size(); ++p) m[p] = drw_read(net, plan, enc, p);
    return m;
}

// --- state store ---------------------------------------------------------

namespace {
constexpr uint32_t kNil = UINT32_MAX;
constexpr uint64_t kHashSeed = 0x9e3779b97f4a7c15ull;

uint64_t mix64(uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}
}  // namespace

StateStore::StateStore(uint32_t words_per_state)
    : words_(words_per_state), buckets_(1u << 16, kNil) {}

uint64_t StateStore::hash_state(const uint32_t* w) const {
    uint64_t h = kHashSeed;
    for (uint32_t i = 0; i < words_; ++i) h = mix64(h ^ w[i]);
    return h;
}

std::pair<uint32_t, bool> StateStore::intern(const EncodedMarking& enc) {
    assert(enc.size() == words_);
    const uint64_t h = hash_state(enc.data());
    const uint32_t bucket = static_cast<uint32_t>(h & (buckets_.size() - 1));
    for (uint32_t id = buckets_[bucket]; id != kNil; id = next_[id]) {
        if (std::equal(enc.begin(), enc.end(), marking(id))) return {id, false};
    }
    const uint32_t id = static_cast<uint32_t>(next_.size());
    arena_.insert(arena_.end(), enc.begin(), enc.end());
    next_.push_back(buckets_[bucket]);
    buckets_[bucket] = id;
    last_fired_.push_back(-1);
    if (next_.size() > buckets_.size() * 3 / 4) rehash();
    return {id, true};
}

void StateStore::rehash() {
    buckets_.assign(buckets_.size() * 2, kNil);
    for (uint32_t id = 0; id < next_.size(); ++id) {
        const uint64_t h = hash_state(marking(id));
        const uint32_t bucket = static_cast<uint32_t>(h & (buckets_.size() - 1));
        next_[id] = buckets_[bucket];
        buckets_[bucket] = id;
    }
}

void StateStore::set_last_fired(uint32_t id, int32_t t) { last_fired_[id] = t; }
int32_t StateStore::last_fired(uint32_t id) const { return last_fired_[id]; }

bool StateStore::has_fireset(uint32_t id) const {
    return id < fireset_cached_.size() && fireset_cached_[id];
}

const std::vector<uint32_t>& StateStore::stored_fireset(uint32_t id) const {
    assert(has_fireset(id));
    return firesets_[id];
}

void StateStore::store_fireset(uint32_t id, std::vector<uint32_t> fs) {
    if (firesets_.size() <= id) {
        firesets_.resize(next_.size());
        fireset_cached_.resize(next_.size(), 0);
    }
    fireset_bytes_ += fs.size() * sizeof(uint32_t) + sizeof(std::vector<uint32_t>);
    firesets_[id] = std::move(fs);
    fireset_cached_[id] = 1;
}

uint64_t StateStore::marking_bytes() const {
    return arena_.size() * sizeof(uint32_t) + buckets_.size() * sizeof(uint32_t) +
           next_.size() * sizeof(uint32_t);
}

uint64_t StateStore::metadata_bytes() const {
    return last_fired_.size() * sizeof(int32_t) + fireset_bytes_;
}

std::vector<uint32_t> StateStore::chain_length_histogram() const {
    std::vector<uint32_t> hist;
    for (uint32_t head : buckets_) {
        uint32_t len = 0;
        for (uint32_t id = head; id != kNil; id = next_[id]) ++len;
        if (hist.size() <= len) hist.resize(len + 1, 0);
        ++hist[len];
    }
    return hist;
}

}  // namespace pnltl

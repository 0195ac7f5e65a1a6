#include "urnlab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace urnlab {

namespace {

constexpr size_t kTableCap = 1u << 20;
constexpr size_t kHotLen = 4096;
constexpr uint64_t kSymbolClamp = 1ull << 62;

} // namespace

uint64_t OccupancyProfile::count_r(uint64_t r) const {
    uint64_t k = 0;
    for (const auto& [sym, c] : counts) k += (c == r);
    return k;
}

uint64_t OccupancyProfile::count_rbar(uint64_t r) const {
    uint64_t k = 0;
    for (const auto& [sym, c] : counts) k += (c >= r);
    return k;
}

SamplerTable::SamplerTable(ModelPtr model) : model_(std::move(model)) {
    size_t len = kTableCap;
    if (auto sup = model_->support_size()) {
        len = static_cast<size_t>(std::min<uint64_t>(*sup, kTableCap));
    }
    cum_.resize(len);
    long double acc = 0.0L;
    for (size_t i = 0; i < len; ++i) {
        acc += static_cast<long double>(model_->prob(i + 1));
        cum_[i] = static_cast<double>(acc);
    }
    hot_len_ = std::min(len, kHotLen);
    hot_top_ = cum_[hot_len_ - 1];
}

size_t SamplerTable::search(const double* c, size_t len, double u) {
    return static_cast<size_t>(std::upper_bound(c, c + len, u) - c);
}

uint64_t SamplerTable::invert_far_tail(double u) const {
    // smallest j with 1 - tail_mass(j) >= u, i.e. tail_mass(j) <= w
    double w = 1.0 - u;
    uint64_t lo = cum_.size();  // tail here is known to exceed w
    uint64_t hi = lo;
    for (;;) {
        if (hi >= kSymbolClamp) return kSymbolClamp;
        hi = hi * 2;
        if (model_->tail_mass(hi).value <= w) break;
        lo = hi;
    }
    while (hi - lo > 1) {
        uint64_t mid = lo + (hi - lo) / 2;
        if (model_->tail_mass(mid).value <= w) hi = mid;
        else lo = mid;
    }
    return hi;
}

SampleWorkspace::SampleWorkspace(const SamplerTable& table) {
    counts_.assign(table.table_size(), 0);
}

void SampleWorkspace::reset() {
    for (uint32_t idx : touched_) counts_[idx] = 0;
    touched_.clear();
    overflow_.clear();
    draws_ = 0;
}

void SampleWorkspace::run_draws(const SamplerTable& table, uint64_t n,
                                xoshiro256pp& rng) {
    const size_t dense = counts_.size();
    for (uint64_t i = 0; i < n; ++i) {
        uint64_t j = table.draw(rng);
        if (j <= dense) {
            uint32_t& c = counts_[j - 1];
            if (c == 0) touched_.push_back(static_cast<uint32_t>(j - 1));
            ++c;
        } else {
            // rare far-tail hits: append raw, merged during summarize
            overflow_.emplace_back(j, 1u);
        }
    }
    draws_ += n;
}

namespace {

// sorts and merges duplicate far-tail symbols in place
void merge_overflow(std::vector<std::pair<uint64_t, uint32_t>>& ovf) {
    std::sort(ovf.begin(), ovf.end());
    size_t out = 0;
    for (size_t i = 0; i < ovf.size();) {
        uint64_t sym = ovf[i].first;
        uint64_t total = 0;
        while (i < ovf.size() && ovf[i].first == sym) {
            total += ovf[i].second;
            ++i;
        }
        ovf[out++] = {sym, static_cast<uint32_t>(total)};
    }
    ovf.resize(out);
}

} // namespace

SampleWorkspace::Summary SampleWorkspace::summarize(const FrequencyModel& model) const {
    Summary s;
    s.n = draws_;
    long double mass = 0.0L;
    auto tally = [&](uint64_t symbol, uint64_t c) {
        ++s.distinct;
        if (c <= kProfileRMax) ++s.k_r[c];
        else ++s.k_over;
        mass += static_cast<long double>(model.prob(symbol));
        s.max_symbol = std::max(s.max_symbol, symbol);
    };
    for (uint32_t idx : touched_) tally(idx + 1, counts_[idx]);
    auto ovf = overflow_;
    merge_overflow(ovf);
    for (const auto& [sym, c] : ovf) tally(sym, c);
    s.occupied_mass = static_cast<double>(mass);
    return s;
}

uint64_t SampleWorkspace::Summary::count_rbar(uint64_t r) const {
    if (r == 0) throw std::out_of_range("count_rbar: r >= 1");
    if (r > kProfileRMax + 1) {
        throw std::out_of_range("count_rbar: counts above kProfileRMax are not split");
    }
    uint64_t k = distinct;
    for (uint64_t rr = 1; rr < r; ++rr) k -= k_r[rr];
    return k;
}

OccupancyProfile SampleWorkspace::to_profile(Setting setting, double t) const {
    OccupancyProfile prof;
    prof.setting = setting;
    prof.n = draws_;
    prof.t = t;
    prof.counts.reserve(touched_.size() + overflow_.size());
    for (uint32_t idx : touched_) {
        prof.counts.emplace_back(idx + 1, counts_[idx]);
    }
    auto ovf = overflow_;
    merge_overflow(ovf);
    for (const auto& [sym, c] : ovf) prof.counts.emplace_back(sym, c);
    std::sort(prof.counts.begin(), prof.counts.end());
    return prof;
}

SampleWorkspace::Summary run_replicate(const SamplerTable& table, SampleWorkspace& ws,
                                       Setting setting, double nt, xoshiro256pp& rng) {
    ws.reset();
    uint64_t n;
    if (setting == Setting::binomial) {
        n = static_cast<uint64_t>(std::llround(nt));
    } else {
        n = static_cast<uint64_t>(poisson_draw(rng, nt));
    }
    ws.run_draws(table, n, rng);
    return ws.summarize(table.model());
}

} // namespace urnlab

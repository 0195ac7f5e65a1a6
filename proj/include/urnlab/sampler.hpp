#pragma once
#include <cstdint>
#include <utility>
#include <vector>

#include "urnlab/models.hpp"
#include "urnlab/rng.hpp"

// Inverse-CDF sampling and occupancy profiles. The table is immutable after
// construction; draw loops mutate only a per-thread workspace.

namespace urnlab {

enum class Setting { binomial, poisson };

inline constexpr int kProfileRMax = 10;  // K_r tracked exactly up to this r

struct OccupancyProfile {
    Setting setting = Setting::binomial;
    uint64_t n = 0;   // realized sample size (the drawn N in the poisson setting)
    double t = 0.0;   // intensity, poisson setting only
    // (symbol, count), symbol ascending, counts >= 1
    std::vector<std::pair<uint64_t, uint64_t>> counts;

    uint64_t distinct() const { return counts.size(); }
    uint64_t count_r(uint64_t r) const;     // K_{n,r}
    uint64_t count_rbar(uint64_t r) const;  // K_{n, >=r}
    // denominator for Good-Turing style ratios: t when known, else n
    double denom() const { return setting == Setting::poisson ? t : double(n); }
};

class SamplerTable {
public:
    explicit SamplerTable(ModelPtr model);

    // one symbol, 1-based; far tail beyond the table is inverted analytically
    uint64_t draw(xoshiro256pp& rng) const {
        double u = rng.uniform01();
        if (u < hot_top_) {
            // binary search confined to the L1-resident head
            return 1 + search(cum_.data(), hot_len_, u);
        }
        if (u < cum_.back()) return 1 + search(cum_.data(), cum_.size(), u);
        return invert_far_tail(u);
    }

    const FrequencyModel& model() const { return *model_; }
    uint64_t table_size() const { return cum_.size(); }
    double table_coverage() const { return cum_.back(); }

private:
    static size_t search(const double* c, size_t len, double u);
    uint64_t invert_far_tail(double u) const;

    ModelPtr model_;
    std::vector<double> cum_;  // cum_[i] = P(X <= i+1)
    size_t hot_len_ = 0;
    double hot_top_ = 0.0;
};

// per-replicate scratch: dense counts + touched list for O(K) reset
class SampleWorkspace {
public:
    explicit SampleWorkspace(const SamplerTable& table);

    void reset();
    // n more draws into the current tally
    void run_draws(const SamplerTable& table, uint64_t n, xoshiro256pp& rng);

    struct Summary {
        uint64_t n = 0;         // draws tallied
        uint64_t distinct = 0;  // K
        uint64_t k_r[kProfileRMax + 1] = {};  // K_r, r = 1..kProfileRMax
        uint64_t k_over = 0;    // symbols with count > kProfileRMax
        uint64_t max_symbol = 0;
        double occupied_mass = 0.0;  // sum of p_j over occupied j
        double missing_mass() const { return occupied_mass < 1.0 ? 1.0 - occupied_mass : 0.0; }
        uint64_t count_rbar(uint64_t r) const;
    };
    // walks the tally; model supplies p_j for the mass
    Summary summarize(const FrequencyModel& model) const;

    OccupancyProfile to_profile(Setting setting, double t) const;

    uint64_t draws_so_far() const { return draws_; }

private:
    std::vector<uint32_t> counts_;
    std::vector<uint32_t> touched_;
    std::vector<std::pair<uint64_t, uint32_t>> overflow_;  // symbols beyond dense range
    uint64_t draws_ = 0;
};

// one full replicate: N = n (binomial) or N ~ Poisson(t)
SampleWorkspace::Summary run_replicate(const SamplerTable& table, SampleWorkspace& ws,
                                       Setting setting, double nt, xoshiro256pp& rng);

} // namespace urnlab

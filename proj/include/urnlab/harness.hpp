#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "urnlab/bounds.hpp"
#include "urnlab/estimators.hpp"
#include "urnlab/models.hpp"
#include "urnlab/moments.hpp"
#include "urnlab/sampler.hpp"

// Seeded Monte Carlo experiments: identity/variance verification, tail-bound
// domination, CI coverage, CLT normality, asymptotic ratio tables, and the
// light-tail pathologies. Replicate k uses derive_seed(master, k), and every
// statistic is reduced from per-replicate tables in index order, so any worker
// count produces identical reports.

namespace urnlab {

struct QuantityStat {
    std::string name;
    double mean = 0.0;
    std::optional<double> variance;   // absent when R = 1
    double se_mean = 0.0;
    std::optional<double> se_variance;
};

struct BoundCheck {
    std::string quantity;
    std::string ref;
    std::string side;
    double s = 0.0;
    double radius = 0.0;
    double bound = 0.0;       // multiplier * exp(-s)
    double exceedance = 0.0;  // empirical frequency
    double slack = 0.0;       // 3 sqrt(b(1-b)/R), b clamped to [0,1]
    bool pass = false;
};

struct CoverageCheck {
    double delta = 0.0, target = 0.0, coverage = 0.0, slack = 0.0;
    bool pass = false;
};

struct KsCheck {
    double statistic = 0.0, p_value = 0.0, level = 0.01;
    bool pass = false;
};

struct McReport {
    std::string experiment;
    std::string model_spec;
    Setting setting = Setting::binomial;
    double nt = 0.0;
    uint64_t replicates = 0;
    uint64_t seed = 0;
    std::vector<QuantityStat> stats;
    std::vector<BoundCheck> bound_checks;
    std::optional<CoverageCheck> coverage;
    std::optional<KsCheck> ks;
    // labeled free-form result rows (diagnostics, ratio tables)
    std::vector<std::pair<std::string, std::string>> notes;
    bool all_pass() const;
};

// raw per-replicate values, written slot-per-replicate (order independent of
// worker scheduling by construction)
struct ReplicateTable {
    std::vector<uint32_t> distinct;                 // K
    std::vector<uint32_t> k_r[kProfileRMax + 1];    // r = 1..rmax
    std::vector<double> m0;                         // true missing mass
    std::vector<double> g0;                         // Good-Turing estimate
    std::vector<uint64_t> max_symbol;
    std::vector<uint64_t> realized_n;
    uint64_t R = 0;
};

ReplicateTable run_replicates_raw(ModelPtr model, Setting st, double nt, uint64_t R,
                                  uint64_t seed, int jobs);

McReport run_replicates(ModelPtr model, Setting st, double nt, uint64_t R,
                        uint64_t seed, int jobs);

McReport check_tail_bounds(ModelPtr model, Setting st, double nt, uint64_t R,
                           uint64_t seed, const std::vector<double>& s_grid, int jobs);

McReport check_ci_coverage(ModelPtr model, double t, double delta, uint64_t R,
                           uint64_t seed, int jobs);

McReport check_clt(ModelPtr model, double t, uint64_t R, uint64_t seed, int jobs);

McReport experiment_lighttail(double q, const std::vector<uint64_t>& n_grid,
                              uint64_t R, uint64_t seed, int jobs);

McReport experiment_asymptotics(ModelPtr model, const std::vector<uint64_t>& n_grid,
                                uint64_t seed, int jobs);

McReport experiment_poissonization(ModelPtr model, uint64_t n, uint64_t R,
                                   uint64_t seed, int jobs);

// ---- exhaustive small-instance oracles (support <= 4, n <= 4) ----

struct EnumMoments {
    double coverage = 0.0;          // E K_n
    double var_coverage = 0.0;
    std::vector<double> count_r;    // E K_{n,r}, r = 1..n
    std::vector<double> mass_r;     // E M_{n,r}, r = 0..n
    double var_missing = 0.0;
};
// exact enumeration over all support^n equally weighted outcomes
EnumMoments enumerate_exact(const std::vector<double>& p, int n);

// exact centered log-MGFs by enumeration (binomial) / per-symbol products (Poisson)
double enum_log_mgf_cumulated(const std::vector<double>& p, int n, uint64_t r, double lambda);
double enum_log_mgf_missing(const std::vector<double>& p, int n, double lambda);
double poisson_log_mgf_missing(const std::vector<double>& p, double t, double lambda);
double poisson_log_mgf_cumulated(const std::vector<double>& p, double t, uint64_t r, double lambda);
double poisson_log_mgf_gt_gap(const std::vector<double>& p, double t, double lambda);

// ---- acceptance ----

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<CriterionResult> acceptance_suite(uint64_t seed, int jobs);

struct ExperimentInfo {
    std::string name;
    std::string ref;
    std::string description;
};
const std::vector<ExperimentInfo>& experiment_registry();

} // namespace urnlab

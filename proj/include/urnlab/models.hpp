#pragma once
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "urnlab/numerics.hpp"

// Frequency models: non-increasing probability sequences (p_j)_{j>=1} with
// certified tail control and, where meaningful, regular-variation metadata.

namespace urnlab {

struct model_parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// nu-bar(1/x) ~ x^alpha ell(x); alpha = 1 is fast variation, alpha = 0 slow
// variation with ell in the de Haan class and auxiliary a(n).
struct RvMeta {
    double alpha = 0.0;
    std::function<double(double)> ell;    // slowly varying part at argument x
    std::function<double(double)> ell1;   // alpha=1 only: integral slowvar part
    std::function<double(double)> aux_a;  // alpha=0 de Haan auxiliary
    bool de_haan = false;
};

class FrequencyModel {
public:
    virtual ~FrequencyModel() = default;

    virtual double prob(uint64_t j) const = 0;  // p_j, j >= 1

    // sum_{i > j} p_i with certified error
    virtual certified tail_mass(uint64_t j) const = 0;

    // S_m(j) = sum_{i > j} p_i^m, m >= 1, with certified error
    virtual certified power_sum(int m, uint64_t j) const = 0;

    // counting function: #{j : p_j >= x}, x > 0
    virtual uint64_t counting_function(double x) const = 0;

    virtual std::optional<uint64_t> support_size() const { return std::nullopt; }
    virtual const RvMeta* rv_meta() const { return nullptr; }

    // canonical spec string, round-trips through parse_model
    virtual std::string spec_string() const = 0;

    // smallest J with certified tail_mass(J) <= eps
    uint64_t truncation_index(double eps) const;
};

using ModelPtr = std::shared_ptr<const FrequencyModel>;

ModelPtr make_uniform(uint64_t k);
ModelPtr make_zipf(double s);
ModelPtr make_geometric(double q);
ModelPtr make_sqrtgeom(double q);
ModelPtr make_fastvar();
// probs must be positive and non-increasing; normalized if the sum is off by
// more than 1e-12 (exact input sums are kept verbatim)
ModelPtr make_explicit(std::vector<double> probs);

// factorial-decay pmf p_j = e^{-1}/(j-1)!; used by the lighttail experiment,
// not part of the CLI grammar
ModelPtr make_factorial_decay();

// grammar: uniform:k=100 | zipf:s=2.0 | geom:q=0.5 | sqrtgeom:q=0.5 | fastvar
//          | explicit:@file.csv     (one probability per line)
// throws model_parse_error on malformed specs
ModelPtr parse_model(const std::string& spec);

} // namespace urnlab

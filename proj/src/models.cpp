#include "urnlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace urnlab {

namespace {

constexpr uint64_t kIndexCap = 1ull << 62;

std::string format_param(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    if (std::strtod(buf, nullptr) == v) return buf;
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// counting functions are solved in closed form, then nudged across float
// boundaries so the result is exact: largest n with p_n >= x
uint64_t boundary_fix(const FrequencyModel& m, uint64_t n, double x) {
    while (n < kIndexCap && m.prob(n + 1) >= x) ++n;
    while (n >= 1 && m.prob(n) < x) --n;
    return n;
}

class UniformModel final : public FrequencyModel {
public:
    explicit UniformModel(uint64_t k) : k_(k), p_(1.0 / static_cast<double>(k)) {}

    double prob(uint64_t j) const override { return j <= k_ ? p_ : 0.0; }

    certified tail_mass(uint64_t j) const override {
        if (j >= k_) return {0.0, 0.0};
        double v = static_cast<double>(k_ - j) / static_cast<double>(k_);
        return {v, 1e-16 * v};
    }

    certified power_sum(int m, uint64_t j) const override {
        if (j >= k_) return {0.0, 0.0};
        double v = static_cast<double>(k_ - j) * std::pow(p_, m);
        return {v, 4e-16 * v};
    }

    uint64_t counting_function(double x) const override {
        if (!(x > 0.0)) throw std::domain_error("counting_function: need x > 0");
        return x <= p_ ? k_ : 0;
    }

    std::optional<uint64_t> support_size() const override { return k_; }

    std::string spec_string() const override {
        return "uniform:k=" + std::to_string(k_);
    }

private:
    uint64_t k_;
    double p_;
};

class ZipfModel final : public FrequencyModel {
public:
    explicit ZipfModel(double s) : s_(s), z_(hurwitz_zeta(s, 1.0)) {
        meta_.alpha = 1.0 / s_;
        double ell = std::pow(z_.value, -1.0 / s_);
        meta_.ell = [ell](double) { return ell; };
    }

    double prob(uint64_t j) const override {
        return std::pow(static_cast<double>(j), -s_) / z_.value;
    }

    certified tail_mass(uint64_t j) const override {
        certified h = hurwitz_zeta(s_, static_cast<double>(j) + 1.0);
        double v = h.value / z_.value;
        double rel = h.error / h.value + z_.error / z_.value;
        return {v, v * rel};
    }

    certified power_sum(int m, uint64_t j) const override {
        certified h = hurwitz_zeta(s_ * m, static_cast<double>(j) + 1.0);
        double zm = std::pow(z_.value, m);
        double v = h.value / zm;
        double rel = h.error / h.value + m * (z_.error / z_.value);
        return {v, v * rel};
    }

    uint64_t counting_function(double x) const override {
        if (!(x > 0.0)) throw std::domain_error("counting_function: need x > 0");
        if (x > prob(1)) return 0;
        double y = std::pow(1.0 / (z_.value * x), 1.0 / s_);
        if (y >= 9.2e18) return kIndexCap;
        return boundary_fix(*this, static_cast<uint64_t>(y), x);
    }

    const RvMeta* rv_meta() const override { return &meta_; }

    std::string spec_string() const override { return "zipf:s=" + format_param(s_); }

private:
    double s_;
    certified z_;
    RvMeta meta_;
};

class GeomModel final : public FrequencyModel {
public:
    explicit GeomModel(double q) : q_(q), beta_(-std::log1p(-q)) {
        meta_.alpha = 0.0;
        double q0 = q_, b0 = beta_;
        meta_.ell = [q0, b0](double x) { return std::log(q0 * x) / b0 + 1.0; };
        meta_.aux_a = [b0](double) { return 1.0 / b0; };
        meta_.de_haan = false;
    }

    double prob(uint64_t j) const override {
        return q_ * std::exp(-beta_ * (static_cast<double>(j) - 1.0));
    }

    certified tail_mass(uint64_t j) const override {
        double v = std::exp(-beta_ * static_cast<double>(j));
        return {v, 2e-16 * v};
    }

    certified power_sum(int m, uint64_t j) const override {
        // q^m (1-q)^{jm} / (1 - (1-q)^m), a geometric series in closed form
        double log_num = m * std::log(q_) - beta_ * static_cast<double>(j) * m;
        double denom = -std::expm1(-beta_ * m);
        double v = std::exp(log_num) / denom;
        return {v, 4e-16 * v};
    }

    uint64_t counting_function(double x) const override {
        if (!(x > 0.0)) throw std::domain_error("counting_function: need x > 0");
        if (x > q_) return 0;
        double y = 1.0 + std::floor(std::log(q_ / x) / beta_);
        if (y >= 9.2e18) return kIndexCap;
        return boundary_fix(*this, static_cast<uint64_t>(y), x);
    }

    const RvMeta* rv_meta() const override { return &meta_; }

    std::string spec_string() const override { return "geom:q=" + format_param(q_); }

private:
    double q_;
    double beta_;
    RvMeta meta_;
};

class SqrtGeomModel final : public FrequencyModel {
public:
    explicit SqrtGeomModel(double q) : beta_(-std::log(q)), q_(q) {
        certified norm = raw_power_sum(1.0, 0);
        c_ = 1.0 / norm.value;
        meta_.alpha = 0.0;
        double c0 = c_, b0 = beta_;
        meta_.ell = [c0, b0](double x) {
            double l = std::log(c0 * x) / b0;
            return l * l;
        };
        meta_.aux_a = [c0, b0](double x) { return 2.0 * std::log(c0 * x) / (b0 * b0); };
        meta_.de_haan = true;
    }

    double prob(uint64_t j) const override {
        return c_ * std::exp(-beta_ * std::sqrt(static_cast<double>(j)));
    }

    certified tail_mass(uint64_t j) const override { return power_sum(1, j); }

    certified power_sum(int m, uint64_t j) const override {
        certified raw = raw_power_sum(static_cast<double>(m), j);
        return std::pow(c_, m) * raw;
    }

    uint64_t counting_function(double x) const override {
        if (!(x > 0.0)) throw std::domain_error("counting_function: need x > 0");
        if (x > prob(1)) return 0;
        double r = std::log(c_ / x) / beta_;
        double y = r * r;
        if (y >= 9.2e18) return kIndexCap;
        return boundary_fix(*this, static_cast<uint64_t>(y), x);
    }

    const RvMeta* rv_meta() const override { return &meta_; }

    std::string spec_string() const override {
        return "sqrtgeom:q=" + format_param(q_);
    }

private:
    // sum_{i>j} exp(-gamma sqrt(i)) with gamma = m beta; direct summation with
    // an integral remainder, since exp(-gamma sqrt(x)) is decreasing:
    //   sum_{i>J} <= int_J^inf exp(-gamma sqrt(x)) dx
    //            = 2 exp(-gamma s)(s/gamma + 1/gamma^2),  s = sqrt(J)
    certified raw_power_sum(double m, uint64_t j) const {
        double gamma = m * beta_;
        double acc = 0.0;
        uint64_t i = j + 1;
        for (;;) {
            double s = std::sqrt(static_cast<double>(i));
            double term = std::exp(-gamma * s);
            acc += term;
            double bound = 2.0 * term * (s / gamma + 1.0 / (gamma * gamma));
            if (bound <= 1e-17 * acc + 1e-300) {
                return {acc, bound + 4e-16 * acc};
            }
            ++i;
        }
    }

    double beta_;
    double q_;
    double c_ = 1.0;
    RvMeta meta_;
};

class FastVarModel final : public FrequencyModel {
public:
    FastVarModel() {
        certified norm = raw_power_sum(1, 0);
        c_ = 1.0 / norm.value;
        meta_.alpha = 1.0;
        meta_.ell = [this](double x) {
            return static_cast<double>(counting_function(1.0 / x)) / x;
        };
        meta_.ell1 = [this](double x) {
            uint64_t nu = counting_function(1.0 / x);
            return (static_cast<double>(nu) + x * power_sum(1, nu).value) / x;
        };
        meta_.de_haan = false;
    }

    double prob(uint64_t j) const override {
        double x = static_cast<double>(j);
        double l = std::log(x + 1.0);
        return c_ / (x * l * l);
    }

    certified tail_mass(uint64_t j) const override { return power_sum(1, j); }

    certified power_sum(int m, uint64_t j) const override {
        certified raw = raw_power_sum(m, j);
        return std::pow(c_, m) * raw;
    }

    uint64_t counting_function(double x) const override {
        if (!(x > 0.0)) throw std::domain_error("counting_function: need x > 0");
        if (x > prob(1)) return 0;
        double target = c_ / x;
        auto h = [](uint64_t j) {
            double xx = static_cast<double>(j);
            double l = std::log(xx + 1.0);
            return xx * l * l;
        };
        uint64_t lo = 1, hi = 2;
        while (hi < kIndexCap && h(hi) <= target) hi <<= 1;
        if (hi >= kIndexCap) return kIndexCap;
        while (hi - lo > 1) {
            uint64_t mid = lo + (hi - lo) / 2;
            if (h(mid) <= target) lo = mid;
            else hi = mid;
        }
        return boundary_fix(*this, lo, x);
    }

    const RvMeta* rv_meta() const override { return &meta_; }

    std::string spec_string() const override { return "fastvar"; }

private:
    // sum_{i>J} g(i), g(x) = x^-m log^{-2m}(x+1): a direct head, then
    // Euler-Maclaurin from a with the enveloping remainder of a completely
    // monotone integrand,
    //   sum_{i>=a} g(i) = int_a^inf g + g(a)/2 - g'(a)/12 +- |g'''(a)|/720
    certified raw_power_sum(int m, uint64_t j) const {
        double head = 0.0;
        uint64_t i = j + 1;
        int taken = 0;
        while (taken < 1024) {
            double x = static_cast<double>(i);
            double l = std::log(x + 1.0);
            double t = std::exp(-m * std::log(x) - 2.0 * m * std::log(l));
            head += t;
            ++i;
            ++taken;
            if (taken >= 64 && t < 1e-22 * head) break;
        }
        double a = static_cast<double>(i);
        certified integral = transformed_integral(m, std::log(a + 1.0));

        double L = std::log(a + 1.0);
        double g = std::exp(-m * std::log(a) - 2.0 * m * std::log(L));
        double gp = -m * (1.0 / a + 2.0 / ((a + 1.0) * L));
        double gpp = m * (1.0 / (a * a) + 2.0 * (L + 1.0) / ((a + 1.0) * (a + 1.0) * L * L));
        double gppp = -m * (2.0 / (a * a * a) -
                            2.0 * (L - 2.0 * (L + 1.0) * (L + 1.0)) /
                                ((a + 1.0) * (a + 1.0) * (a + 1.0) * L * L * L));
        double f_half = 0.5 * g;
        double fp = g * gp;
        double fppp = g * (gp * gp * gp + 3.0 * gp * gpp + gppp);

        double value = head + integral.value + f_half - fp / 12.0;
        double err = std::fabs(fppp) / 720.0 + integral.error + 4e-16 * std::fabs(value);
        return {value, err};
    }

    // int_a^inf x^-m log^{-2m}(x+1) dx under u = log(x+1):
    //   int_W^inf e^u (e^u - 1)^-m u^-2m du
    // m = 1 splits off the exact 1/W piece; the rest decays like e^-(m-1)u
    // (like e^-u for m = 1) and is integrated on fixed panels
    certified transformed_integral(int m, double W) const {
        if (m == 1) {
            auto f = [](double u) { return 1.0 / (u * u * std::expm1(u)); };
            double span = 60.0;
            double val = 1.0 / W + integrate_gl(f, W, W + span, static_cast<int>(span));
            double trunc = 1.01 * std::exp(-(W + span)) / ((W + span) * (W + span));
            return {val, trunc + 2e-15 * val};
        }
        auto f = [m](double u) {
            return std::exp(u - m * std::log(std::expm1(u)) - 2.0 * m * std::log(u));
        };
        double span = std::min(90.0, 85.0 / (m - 1) + 8.0);
        int panels = std::min(200, static_cast<int>(std::ceil(2.0 * span)));
        double val = integrate_gl(f, W, W + span, panels);
        double trunc = f(W + span) / (m - 1);
        return {val, trunc + 2e-15 * val};
    }

    double c_ = 1.0;
    RvMeta meta_;
};

class ExplicitModel final : public FrequencyModel {
public:
    ExplicitModel(std::vector<double> probs, std::string label)
        : p_(std::move(probs)), label_(std::move(label)) {}

    double prob(uint64_t j) const override {
        return (j >= 1 && j <= p_.size()) ? p_[j - 1] : 0.0;
    }

    certified tail_mass(uint64_t j) const override { return power_sum(1, j); }

    certified power_sum(int m, uint64_t j) const override {
        if (j >= p_.size()) return {0.0, 0.0};
        long double acc = 0.0L;
        for (size_t i = p_.size(); i > j; --i) {
            acc += std::pow(static_cast<long double>(p_[i - 1]), m);
        }
        double v = static_cast<double>(acc);
        return {v, 4e-16 * v};
    }

    uint64_t counting_function(double x) const override {
        if (!(x > 0.0)) throw std::domain_error("counting_function: need x > 0");
        auto it = std::partition_point(p_.begin(), p_.end(),
                                       [x](double p) { return p >= x; });
        return static_cast<uint64_t>(it - p_.begin());
    }

    std::optional<uint64_t> support_size() const override { return p_.size(); }

    std::string spec_string() const override { return label_; }

private:
    std::vector<double> p_;
    std::string label_;
};

std::vector<double> checked_probs(std::vector<double> probs) {
    if (probs.empty()) throw model_parse_error("explicit model: no probabilities");
    double sum = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] > 0.0) || !std::isfinite(probs[i])) {
            throw model_parse_error("explicit model: probabilities must be positive");
        }
        if (i > 0 && probs[i] > probs[i - 1] * (1.0 + 1e-12)) {
            throw model_parse_error("explicit model: probabilities must be non-increasing");
        }
        sum += probs[i];
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
        for (double& p : probs) p /= sum;
    }
    return probs;
}

double parse_double_arg(const std::string& text, const std::string& what) {
    const char* begin = text.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v)) {
        throw model_parse_error("bad numeric value for " + what + ": '" + text + "'");
    }
    return v;
}

// accepts "key=value" with the expected key, or a bare value
std::string strip_key(const std::string& arg, const std::string& key,
                      const std::string& family) {
    auto eq = arg.find('=');
    if (eq == std::string::npos) return arg;
    if (arg.substr(0, eq) != key) {
        throw model_parse_error(family + ": expected parameter '" + key + "', got '" +
                                arg.substr(0, eq) + "'");
    }
    return arg.substr(eq + 1);
}

std::vector<double> read_prob_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw model_parse_error("explicit model: cannot open '" + path + "'");
    std::vector<double> probs;
    std::string line;
    while (std::getline(in, line)) {
        for (char& ch : line) {
            if (ch == ',' || ch == ';' || ch == '\t' || ch == '\r') ch = ' ';
        }
        std::istringstream row(line);
        std::string tok;
        while (row >> tok) {
            if (tok[0] == '#') break;
            probs.push_back(parse_double_arg(tok, "probability"));
        }
    }
    return probs;
}

} // namespace

uint64_t FrequencyModel::truncation_index(double eps) const {
    if (!(eps > 0.0)) throw std::domain_error("truncation_index: need eps > 0");
    auto certified_below = [&](uint64_t j) {
        certified t = tail_mass(j);
        return t.value + t.error <= eps;
    };
    if (certified_below(0)) return 0;
    uint64_t hi = 1;
    while (!certified_below(hi)) {
        if (hi >= kIndexCap) {
            throw std::runtime_error("truncation_index: tail does not certify below eps");
        }
        hi <<= 1;
    }
    uint64_t lo = hi >> 1;
    while (hi - lo > 1) {
        uint64_t mid = lo + (hi - lo) / 2;
        if (certified_below(mid)) hi = mid;
        else lo = mid;
    }
    return hi;
}

ModelPtr make_uniform(uint64_t k) {
    if (k < 1) throw model_parse_error("uniform: need k >= 1");
    return std::make_shared<UniformModel>(k);
}

ModelPtr make_zipf(double s) {
    if (!(s > 1.0)) throw model_parse_error("zipf: need s > 1");
    return std::make_shared<ZipfModel>(s);
}

ModelPtr make_geometric(double q) {
    if (!(q > 0.0 && q < 1.0)) throw model_parse_error("geom: need q in (0,1)");
    return std::make_shared<GeomModel>(q);
}

ModelPtr make_sqrtgeom(double q) {
    if (!(q > 0.0 && q < 1.0)) throw model_parse_error("sqrtgeom: need q in (0,1)");
    return std::make_shared<SqrtGeomModel>(q);
}

ModelPtr make_fastvar() { return std::make_shared<FastVarModel>(); }

ModelPtr make_explicit(std::vector<double> probs) {
    auto checked = checked_probs(std::move(probs));
    std::string label = "explicit:inline(" + std::to_string(checked.size()) + ")";
    return std::make_shared<ExplicitModel>(std::move(checked), std::move(label));
}

ModelPtr make_factorial_decay() {
    std::vector<double> probs;
    double fact = 1.0;
    for (int j = 1; j <= 26; ++j) {
        if (j >= 2) fact *= (j - 1);
        probs.push_back(std::exp(-1.0) / fact);
    }
    return std::make_shared<ExplicitModel>(std::move(probs), "factorial-decay");
}

ModelPtr parse_model(const std::string& spec) {
    std::string s = spec;
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    std::string family = s, arg;
    if (auto colon = s.find(':'); colon != std::string::npos) {
        family = s.substr(0, colon);
        arg = s.substr(colon + 1);
    }

    if (family == "uniform") {
        if (arg.empty()) throw model_parse_error("uniform: missing k");
        std::string v = strip_key(arg, "k", "uniform");
        double k = parse_double_arg(v, "k");
        if (k < 1.0 || k != std::floor(k) || k > 9e18) {
            throw model_parse_error("uniform: k must be a positive integer");
        }
        return make_uniform(static_cast<uint64_t>(k));
    }
    if (family == "zipf") {
        if (arg.empty()) throw model_parse_error("zipf: missing s");
        return make_zipf(parse_double_arg(strip_key(arg, "s", "zipf"), "s"));
    }
    if (family == "geom") {
        if (arg.empty()) throw model_parse_error("geom: missing q");
        return make_geometric(parse_double_arg(strip_key(arg, "q", "geom"), "q"));
    }
    if (family == "sqrtgeom") {
        if (arg.empty()) throw model_parse_error("sqrtgeom: missing q");
        return make_sqrtgeom(parse_double_arg(strip_key(arg, "q", "sqrtgeom"), "q"));
    }
    if (family == "fastvar") {
        if (!arg.empty()) throw model_parse_error("fastvar takes no parameters");
        return make_fastvar();
    }
    if (family == "explicit") {
        if (arg.empty() || arg[0] != '@') {
            throw model_parse_error("explicit: expected explicit:@file");
        }
        std::string path = arg.substr(1);
        auto probs = checked_probs(read_prob_file(path));
        return std::make_shared<ExplicitModel>(std::move(probs), "explicit:@" + path);
    }
    throw model_parse_error("unknown model family '" + family + "'");
}

} // namespace urnlab

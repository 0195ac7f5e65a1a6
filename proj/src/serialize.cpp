#include "urnlab/serialize.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace urnlab {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* setting_name(Setting st) {
    return st == Setting::poisson ? "poisson" : "binomial";
}

Setting setting_from_name(const std::string& name) {
    if (name == "poisson") return Setting::poisson;
    if (name == "binomial") return Setting::binomial;
    throw std::invalid_argument("unknown setting '" + name + "'");
}

ordered_json cert_json(const certified& c) {
    return ordered_json{{"value", c.value}, {"error", c.error}};
}

void csv_row(std::string& out, const std::string& quantity, const std::string& r,
             const certified& c) {
    out += quantity;
    out += ',';
    out += r;
    out += ',';
    out += format_g17(c.value);
    out += ',';
    out += format_g17(c.error);
    out += '\n';
}

std::string opt_g17(const std::optional<double>& x) {
    return x ? format_g17(*x) : std::string();
}

// sorts, rejects duplicates and zero counts, and fills the realized n
OccupancyProfile finish_profile(Setting st, double t,
                                std::vector<std::pair<uint64_t, uint64_t>> counts) {
    std::sort(counts.begin(), counts.end());
    uint64_t n = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
        if (counts[i].first == 0)
            throw std::invalid_argument("profile symbols are 1-based");
        if (counts[i].second == 0)
            throw std::invalid_argument("profile counts must be >= 1");
        if (i > 0 && counts[i].first == counts[i - 1].first)
            throw std::invalid_argument("profile has a duplicate symbol");
        n += counts[i].second;
    }
    if (st == Setting::poisson && !(t > 0.0))
        throw std::invalid_argument("poisson profile needs an intensity t > 0");

    OccupancyProfile p;
    p.setting = st;
    p.n = n;
    p.t = st == Setting::poisson ? t : 0.0;
    p.counts = std::move(counts);
    return p;
}

} // namespace

std::string format_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    for (char* c = buf; *c; ++c)
        if (*c == ',') *c = '.';
    return buf;
}

std::string moment_report_json(const MomentReport& rep) {
    ordered_json j;
    j["report"] = "moments";
    j["model"] = rep.model_spec;
    j["setting"] = setting_name(rep.setting);
    j["nt"] = rep.nt;
    j["epsilon"] = rep.epsilon;
    j["rmax"] = rep.rmax;
    j["coverage"] = cert_json(rep.coverage);
    ordered_json count = ordered_json::array();
    ordered_json cumulated = ordered_json::array();
    for (int r = 1; r <= rep.rmax; ++r) {
        count.push_back(
            {{"r", r}, {"value", rep.count_r[r].value}, {"error", rep.count_r[r].error}});
        cumulated.push_back({{"r", r},
                             {"value", rep.cumulated_r[r].value},
                             {"error", rep.cumulated_r[r].error}});
    }
    j["count"] = std::move(count);
    j["cumulated"] = std::move(cumulated);
    ordered_json mass = ordered_json::array();
    for (int r = 0; r <= rep.rmax; ++r)
        mass.push_back(
            {{"r", r}, {"value", rep.mass_r[r].value}, {"error", rep.mass_r[r].error}});
    j["mass"] = std::move(mass);
    j["doubled"] = ordered_json{{"coverage", cert_json(rep.coverage_2)},
                                {"count1", cert_json(rep.count1_2)},
                                {"count2", cert_json(rep.count2_2)}};
    return j.dump(2) + "\n";
}

std::string moment_report_csv(const MomentReport& rep) {
    std::string out = "# report=moments model=" + rep.model_spec +
                      " setting=" + setting_name(rep.setting) +
                      " nt=" + format_g17(rep.nt) +
                      " epsilon=" + format_g17(rep.epsilon) +
                      " rmax=" + std::to_string(rep.rmax) + "\n";
    out += "quantity,r,value,error_bound\n";
    csv_row(out, "coverage", "", rep.coverage);
    for (int r = 1; r <= rep.rmax; ++r)
        csv_row(out, "count", std::to_string(r), rep.count_r[r]);
    for (int r = 1; r <= rep.rmax; ++r)
        csv_row(out, "cumulated", std::to_string(r), rep.cumulated_r[r]);
    for (int r = 0; r <= rep.rmax; ++r)
        csv_row(out, "mass", std::to_string(r), rep.mass_r[r]);
    csv_row(out, "coverage_2t", "", rep.coverage_2);
    csv_row(out, "count1_2t", "", rep.count1_2);
    csv_row(out, "count2_2t", "", rep.count2_2);
    return out;
}

std::string variance_report_json(const VarianceReport& rep) {
    ordered_json j;
    j["report"] = "variances";
    j["model"] = rep.model_spec;
    j["setting"] = setting_name(rep.setting);
    j["nt"] = rep.nt;
    j["var_coverage"] = cert_json(rep.var_coverage_poisson);
    j["var_missing"] = cert_json(rep.var_missing_poisson);
    j["sandwich_lo"] = cert_json(rep.sandwich_lo);
    j["sandwich_hi"] = cert_json(rep.sandwich_hi);
    j["v_minus"] = cert_json(rep.v_minus);
    j["v_plus"] = cert_json(rep.v_plus);
    j["w_n"] = cert_json(rep.w_n);
    j["var_ind"] = cert_json(rep.var_ind);
    j["v_slow"] = rep.v_slow ? cert_json(*rep.v_slow) : ordered_json(nullptr);
    return j.dump(2) + "\n";
}

std::string variance_report_csv(const VarianceReport& rep) {
    std::string out = "# report=variances model=" + rep.model_spec +
                      " setting=" + setting_name(rep.setting) +
                      " nt=" + format_g17(rep.nt) + "\n";
    out += "quantity,r,value,error_bound\n";
    csv_row(out, "var_coverage", "", rep.var_coverage_poisson);
    csv_row(out, "var_missing", "", rep.var_missing_poisson);
    csv_row(out, "sandwich_lo", "", rep.sandwich_lo);
    csv_row(out, "sandwich_hi", "", rep.sandwich_hi);
    csv_row(out, "v_minus", "", rep.v_minus);
    csv_row(out, "v_plus", "", rep.v_plus);
    csv_row(out, "w_n", "", rep.w_n);
    csv_row(out, "var_ind", "", rep.var_ind);
    if (rep.v_slow) csv_row(out, "v_slow", "", *rep.v_slow);
    return out;
}

std::string mc_report_json(const McReport& rep) {
    ordered_json j;
    j["report"] = "monte_carlo";
    j["experiment"] = rep.experiment;
    j["model"] = rep.model_spec;
    j["setting"] = setting_name(rep.setting);
    j["nt"] = rep.nt;
    j["replicates"] = rep.replicates;
    j["seed"] = rep.seed;
    ordered_json stats = ordered_json::array();
    for (const auto& s : rep.stats) {
        ordered_json row;
        row["name"] = s.name;
        row["mean"] = s.mean;
        row["variance"] = s.variance ? ordered_json(*s.variance) : ordered_json(nullptr);
        row["se_mean"] = s.se_mean;
        row["se_variance"] =
            s.se_variance ? ordered_json(*s.se_variance) : ordered_json(nullptr);
        stats.push_back(std::move(row));
    }
    j["stats"] = std::move(stats);
    ordered_json bounds = ordered_json::array();
    for (const auto& b : rep.bound_checks) {
        bounds.push_back({{"quantity", b.quantity},
                          {"ref", b.ref},
                          {"side", b.side},
                          {"s", b.s},
                          {"radius", b.radius},
                          {"bound", b.bound},
                          {"exceedance", b.exceedance},
                          {"slack", b.slack},
                          {"pass", b.pass}});
    }
    j["bound_checks"] = std::move(bounds);
    if (rep.coverage) {
        j["coverage"] = ordered_json{{"delta", rep.coverage->delta},
                                     {"target", rep.coverage->target},
                                     {"coverage", rep.coverage->coverage},
                                     {"slack", rep.coverage->slack},
                                     {"pass", rep.coverage->pass}};
    } else {
        j["coverage"] = nullptr;
    }
    if (rep.ks) {
        j["ks"] = ordered_json{{"statistic", rep.ks->statistic},
                               {"p_value", rep.ks->p_value},
                               {"level", rep.ks->level},
                               {"pass", rep.ks->pass}};
    } else {
        j["ks"] = nullptr;
    }
    ordered_json notes = ordered_json::array();
    for (const auto& [key, value] : rep.notes) notes.push_back({key, value});
    j["notes"] = std::move(notes);
    j["all_pass"] = rep.all_pass();
    return j.dump(2) + "\n";
}

std::string mc_report_csv(const McReport& rep) {
    std::string out = "# report=monte_carlo experiment=" + rep.experiment +
                      " model=" + rep.model_spec +
                      " setting=" + setting_name(rep.setting) +
                      " nt=" + format_g17(rep.nt) +
                      " R=" + std::to_string(rep.replicates) +
                      " seed=" + std::to_string(rep.seed) +
                      " all_pass=" + (rep.all_pass() ? "1" : "0") + "\n";
    if (!rep.stats.empty()) {
        out += "table,stats\n";
        out += "name,mean,variance,se_mean,se_variance\n";
        for (const auto& s : rep.stats) {
            out += s.name + ',' + format_g17(s.mean) + ',' + opt_g17(s.variance) + ',' +
                   format_g17(s.se_mean) + ',' + opt_g17(s.se_variance) + '\n';
        }
    }
    if (!rep.bound_checks.empty()) {
        out += "table,bounds\n";
        out += "quantity,ref,side,s,radius,bound,exceedance,slack,pass\n";
        for (const auto& b : rep.bound_checks) {
            out += b.quantity + ',' + b.ref + ',' + b.side + ',' + format_g17(b.s) +
                   ',' + format_g17(b.radius) + ',' + format_g17(b.bound) + ',' +
                   format_g17(b.exceedance) + ',' + format_g17(b.slack) + ',' +
                   (b.pass ? '1' : '0') + '\n';
        }
    }
    if (rep.coverage) {
        out += "table,coverage\n";
        out += "delta,target,coverage,slack,pass\n";
        out += format_g17(rep.coverage->delta) + ',' + format_g17(rep.coverage->target) +
               ',' + format_g17(rep.coverage->coverage) + ',' +
               format_g17(rep.coverage->slack) + ',' + (rep.coverage->pass ? '1' : '0') +
               '\n';
    }
    if (rep.ks) {
        out += "table,ks\n";
        out += "statistic,p_value,level,pass\n";
        out += format_g17(rep.ks->statistic) + ',' + format_g17(rep.ks->p_value) + ',' +
               format_g17(rep.ks->level) + ',' + (rep.ks->pass ? '1' : '0') + '\n';
    }
    if (!rep.notes.empty()) {
        out += "table,notes\n";
        out += "key,value\n";
        for (const auto& [key, value] : rep.notes) out += key + ',' + value + '\n';
    }
    return out;
}

std::string profile_to_json(const OccupancyProfile& prof) {
    ordered_json j;
    j["setting"] = setting_name(prof.setting);
    j["n"] = prof.n;
    if (prof.setting == Setting::poisson) j["t"] = prof.t;
    ordered_json counts = ordered_json::array();
    for (const auto& [sym, c] : prof.counts) counts.push_back({sym, c});
    j["counts"] = std::move(counts);
    return j.dump() + "\n";
}

OccupancyProfile profile_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object() || !j.contains("counts") || !j["counts"].is_array())
        throw std::invalid_argument("profile JSON needs a counts array");
    Setting st = Setting::binomial;
    if (j.contains("setting")) st = setting_from_name(j["setting"].get<std::string>());
    double t = j.value("t", 0.0);

    std::vector<std::pair<uint64_t, uint64_t>> counts;
    counts.reserve(j["counts"].size());
    for (const auto& row : j["counts"]) {
        if (!row.is_array() || row.size() != 2 || !row[0].is_number_unsigned() ||
            !row[1].is_number_unsigned())
            throw std::invalid_argument("profile counts rows must be [symbol, count]");
        counts.push_back({row[0].get<uint64_t>(), row[1].get<uint64_t>()});
    }
    auto prof = finish_profile(st, t, std::move(counts));
    if (j.contains("n") && j["n"].get<uint64_t>() != prof.n)
        throw std::invalid_argument("profile n does not match the sum of counts");
    return prof;
}

std::string profile_to_csv(const OccupancyProfile& prof) {
    std::string out = "# setting=";
    out += setting_name(prof.setting);
    if (prof.setting == Setting::poisson) out += " t=" + format_g17(prof.t);
    out += "\nsymbol,count\n";
    for (const auto& [sym, c] : prof.counts)
        out += std::to_string(sym) + ',' + std::to_string(c) + '\n';
    return out;
}

OccupancyProfile profile_from_csv(const std::string& text) {
    Setting st = Setting::binomial;
    double t = 0.0;
    std::vector<std::pair<uint64_t, uint64_t>> counts;

    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t at = line.find_first_not_of(" \t");
        if (at == std::string::npos) continue;
        if (line[at] == '#') {
            if (line.find("setting=poisson", at) != std::string::npos)
                st = Setting::poisson;
            size_t tpos = line.find("t=", at);
            if (tpos != std::string::npos) t = std::strtod(line.c_str() + tpos + 2, nullptr);
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(line[at]))) continue;  // header row
        char* end = nullptr;
        uint64_t sym = std::strtoull(line.c_str() + at, &end, 10);
        while (*end == ' ' || *end == '\t') ++end;
        if (*end != ',' && *end != ';' && *end != '\t' && *end != ' ')
            throw std::invalid_argument("profile CSV row needs 'symbol,count'");
        uint64_t cnt = std::strtoull(end + 1, &end, 10);
        counts.push_back({sym, cnt});
    }
    return finish_profile(st, t, std::move(counts));
}

OccupancyProfile profile_from_text(const std::string& text) {
    size_t at = text.find_first_not_of(" \t\r\n");
    if (at != std::string::npos && text[at] == '{') return profile_from_json(text);
    return profile_from_csv(text);
}

std::string estimate_json(const std::string& name, const EstimateWithCI& est,
                          const std::string& digest) {
    ordered_json j;
    j["name"] = name;
    j["point"] = est.point;
    j["lower"] = est.lower;
    j["upper"] = est.upper;
    j["delta"] = est.delta;
    j["coverage_target"] = est.coverage_target;
    j["clipped"] = est.clipped;
    j["inputs_digest"] = digest;
    return j.dump() + "\n";
}

std::string bytes_digest(const std::string& bytes) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return std::string(hex);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace urnlab

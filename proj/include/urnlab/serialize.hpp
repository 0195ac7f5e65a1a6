#pragma once
#include <string>

#include "urnlab/estimators.hpp"
#include "urnlab/harness.hpp"
#include "urnlab/moments.hpp"
#include "urnlab/sampler.hpp"

// Report writers. CSV floating point goes through %.17g with '.' as the
// decimal separator regardless of locale, JSON numbers use exact round-trip
// encoding, lines end with '\n', and rows keep a fixed order, so equal
// inputs serialize to equal bytes.

namespace urnlab {

std::string format_g17(double x);

std::string moment_report_json(const MomentReport& rep);
std::string moment_report_csv(const MomentReport& rep);

std::string variance_report_json(const VarianceReport& rep);
std::string variance_report_csv(const VarianceReport& rep);

std::string mc_report_json(const McReport& rep);
std::string mc_report_csv(const McReport& rep);

std::string profile_to_json(const OccupancyProfile& prof);
OccupancyProfile profile_from_json(const std::string& text);
std::string profile_to_csv(const OccupancyProfile& prof);
OccupancyProfile profile_from_csv(const std::string& text);
// dispatches on leading '{' after whitespace
OccupancyProfile profile_from_text(const std::string& text);

std::string estimate_json(const std::string& name, const EstimateWithCI& est,
                          const std::string& digest);

// FNV-1a over the exact bytes
std::string bytes_digest(const std::string& bytes);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

} // namespace urnlab

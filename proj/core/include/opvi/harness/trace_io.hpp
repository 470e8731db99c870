#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "opvi/core.hpp"

namespace opvi {

/// Column order of every trace file.
inline constexpr std::string_view kTraceHeader =
    "t,batch_size,eta,alpha,grad_error,objective,regret_cum,energy_dist,rmse,test_ll,wallclock_ms";

/// Shortest "%.17g" text; parses back to the same double.
std::string format_double(double v);

std::string trace_row(const RoundTrace& r);
std::string trace_csv(const std::vector<RoundTrace>& rows);
void write_trace(const std::filesystem::path& path, const std::vector<RoundTrace>& rows);

std::vector<RoundTrace> parse_trace(std::string_view text);
std::vector<RoundTrace> read_trace(const std::filesystem::path& path);

/// One particle per line, comma-separated coordinates.
void write_ensemble(const std::filesystem::path& path, const ParticleMatrix& x);
ParticleMatrix read_ensemble(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace opvi

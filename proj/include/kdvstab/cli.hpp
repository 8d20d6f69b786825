#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kdvstab/config.hpp"

namespace kdvstab {

/// Compile-time version: release number plus git describe.
std::string version_string();

/// 17 significant digits, '.' decimal, independent of the locale.
std::string format_double(double value);

inline constexpr const char* kTraceHeader = "t,E,diss_damping,diss_boundary,mass,ux0,linf";

void write_trace_csv(const std::string& path, const SimTrace& trace);
/// Long format, one row per (t, x); header t,x,u or t,x,u,v.
void write_snapshots_csv(const std::string& path, const Grid1D& grid, const SimTrace& trace);
/// Reads a file written by write_trace_csv; throws ConfigError on a header
/// or row that does not match the schema.
SimTrace read_trace_csv(const std::string& path);

enum ExitCode { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitBlowup = 3, kExitDomain = 4 };

/// The command-line driver: subcommands simulate, compare, decay-fit,
/// observability, critical-lengths, carleman and version.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kdvstab

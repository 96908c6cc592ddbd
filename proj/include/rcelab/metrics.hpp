#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "rcelab/rce.hpp"

namespace rcelab {

/// Formats a double with full round-trip precision, deterministically.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline constexpr const char* kCsvSchemaLine = "# schema=1";

/// Metrics CSV: schema comment, header, one row per recorded iteration.
inline void write_metrics_csv(std::ostream& os, const std::vector<rce::MetricsRow>& rows) {
    os << kCsvSchemaLine << "\n";
    os << "iteration,objective,bellman_residual,policy_delta,wallclock_ns\n";
    for (const auto& r : rows)
        os << r.iteration << ',' << fmt_double(r.objective) << ',' << fmt_double(r.bellman_residual) << ','
           << fmt_double(r.policy_delta) << ',' << r.wallclock_ns << "\n";
}

/// Occupancy heatmap rows (x, y, mass) for a grid environment.
inline void write_heatmap_csv(std::ostream& os, const std::vector<double>& occupancy, std::size_t rows,
                              std::size_t cols) {
    os << kCsvSchemaLine << "\n";
    os << "x,y,mass\n";
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) os << c << ',' << r << ',' << fmt_double(occupancy[r * cols + c]) << "\n";
}

}  // namespace rcelab

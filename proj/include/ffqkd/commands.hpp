#pragma once

// One function per subcommand. Each validates the config, computes, and
// returns the table to emit; the front end only parses flags and writes.

#include <optional>
#include <span>

#include "ffqkd/config.hpp"
#include "ffqkd/output.hpp"

namespace ffqkd::cli {

Table cmd_bounds(const RunConfig& config);
Table cmd_ideal(const RunConfig& config);
Table cmd_practical(const RunConfig& config);
Table cmd_heatmap(const RunConfig& config);
Table cmd_sim(const RunConfig& config);
Table cmd_thresholds(const RunConfig& config);
Table cmd_storage(const RunConfig& config);

/// First sign change of a - b on the sampled grid, refined by bisection on
/// the callables within that bracket (0.05 km).
std::optional<double> refined_crossover(std::span<const double> grid, std::span<const double> a,
                                        std::span<const double> b, const RateCurve& fa, const RateCurve& fb);

}  // namespace ffqkd::cli

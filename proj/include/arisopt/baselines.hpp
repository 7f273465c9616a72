#pragma once

#include "arisopt/optimizer.hpp"

namespace arisopt {

/// Passive-surface benchmark: the same alternating loop with unit modulus,
/// no surface dynamic noise and no amplification power draw.
RunResult run_passive_ee(const SystemConfig& cfg, std::uint64_t trial = 0);

/// Rate-only benchmark: identical pipeline with the ratio weight frozen at 0,
/// so power enters only through the budget constraints.
RunResult run_se_max(const SystemConfig& cfg, std::uint64_t trial = 0);

/// Unoptimized benchmark: random beams, surface and filter scaled into both
/// power budgets; the first draw is kept and QoS is not enforced.
/// attempts must be >= 1 and is accepted for interface symmetry only.
RunResult run_random_baseline(const SystemConfig& cfg, int attempts = 1, std::uint64_t trial = 0);

/// Same as run_random_baseline but on caller-supplied channels, for matched
/// comparisons against the iterative schemes.
RunResult run_random_on_channels(const SystemConfig& cfg, const ChannelSet& ch, int attempts = 1);

/// Dispatch any scheme on shared channels (matched-seed comparisons).
RunResult run_benchmark(const SystemConfig& cfg, const ChannelSet& ch, Scheme scheme,
                        int attempts = 1);

} // namespace arisopt

#pragma once

#include "glassynth/manifest.hpp"

#include <cstdint>
#include <vector>

namespace glassynth {

/// Linear ramp p = lambda * n + p0, capped at p_cap.
struct SamplerSchedule {
    double lambda = 1e-5;
    double p0 = 0.0;
    double p_cap = 0.5;

    /// Throws std::invalid_argument unless 0 <= p0 <= p_cap <= 1 and lambda >= 0.
    void validate() const;
};

/// min(lambda * n + p0, p_cap).
double glass_probability(const SamplerSchedule& schedule, std::uint64_t iteration);

/// Original/synthetic pairs of a mixture manifest: entry k of the first half
/// is paired with entry k of the second half, which must be flagged G and
/// share the identity. Throws InconsistentManifest otherwise.
struct MixturePairs {
    std::vector<std::size_t> original;  // record indices
    std::vector<std::size_t> synthetic; // record indices

    static MixturePairs from_mixture(const Manifest& mixture);
    std::size_t size() const noexcept { return original.size(); }
};

/// Draws `batch_size` slots: each picks a pair uniformly, then its G variant
/// with probability glass_probability(schedule, iteration), else the original.
std::vector<ManifestRecord> sample_batch(const Manifest& mixture, const SamplerSchedule& schedule,
                                         std::uint64_t iteration, std::size_t batch_size, std::uint64_t seed);

} // namespace glassynth

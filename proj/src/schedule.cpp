#include "glassynth/schedule.hpp"

#include "glassynth/errors.hpp"
#include "glassynth/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace glassynth {

void SamplerSchedule::validate() const
{
    if (!std::isfinite(lambda) || lambda < 0.0)
        throw std::invalid_argument("schedule slope lambda must be >= 0");
    if (!(p0 >= 0.0 && p0 <= p_cap && p_cap <= 1.0))
        throw std::invalid_argument("schedule needs 0 <= p0 <= p_cap <= 1");
}

double glass_probability(const SamplerSchedule& schedule, std::uint64_t iteration)
{
    schedule.validate();
    return std::min(schedule.lambda * static_cast<double>(iteration) + schedule.p0, schedule.p_cap);
}

MixturePairs MixturePairs::from_mixture(const Manifest& mixture)
{
    const std::size_t n = mixture.size();
    if (n == 0 || n % 2 != 0)
        throw InconsistentManifest("mixture manifest must hold originals followed by one synthetic image each");
    const std::size_t half = n / 2;
    MixturePairs pairs;
    for (std::size_t k = 0; k < half; ++k) {
        const auto& orig = mixture.records[k];
        const auto& syn = mixture.records[k + half];
        if (syn.flag != GlassFlag::Glasses)
            throw InconsistentManifest("record " + std::to_string(k + half) + " ('" + syn.path +
                                       "') should be the synthetic G counterpart of '" + orig.path + "'");
        if (syn.identity != orig.identity)
            throw InconsistentManifest("missing counterpart for '" + orig.path + "': identity '" + orig.identity +
                                       "' paired with '" + syn.identity + "'");
        pairs.original.push_back(k);
        pairs.synthetic.push_back(k + half);
    }
    return pairs;
}

std::vector<ManifestRecord> sample_batch(const Manifest& mixture, const SamplerSchedule& schedule,
                                         std::uint64_t iteration, std::size_t batch_size, std::uint64_t seed)
{
    const MixturePairs pairs = MixturePairs::from_mixture(mixture);
    const double p = glass_probability(schedule, iteration);
    Rng rng(derive_seed(seed, iteration));
    std::vector<ManifestRecord> batch;
    batch.reserve(batch_size);
    for (std::size_t s = 0; s < batch_size; ++s) {
        const std::size_t k = uniform_index(rng, pairs.size());
        const bool glasses = uniform_unit(rng) < p;
        batch.push_back(mixture.records[glasses ? pairs.synthetic[k] : pairs.original[k]]);
    }
    return batch;
}

} // namespace glassynth

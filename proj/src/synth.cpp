#include "glassynth/synth.hpp"

#include "glassynth/assets.hpp"
#include "glassynth/errors.hpp"
#include "glassynth/random.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

namespace glassynth {

namespace {

void check_interval(const Interval& r, const char* name)
{
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi)
        throw std::invalid_argument(std::string("range '") + name + "' must satisfy lo <= hi");
}

void check_energy(const Interval& r, const char* name)
{
    check_interval(r, name);
    if (r.lo < 0.0 || r.hi > 1.0)
        throw std::invalid_argument(std::string("energy range '") + name + "' must lie within [0, 1]");
}

// Uniform direction on the spherical cap of half-angle `cone_deg` around -z.
Vec3 sample_cone_direction(Rng& rng, double cone_deg)
{
    const double cos_max = std::cos(degrees_to_radians(cone_deg));
    const double cos_theta = 1.0 - uniform_unit(rng) * (1.0 - cos_max);
    const double phi = 2.0 * std::numbers::pi * uniform_unit(rng);
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    return Vec3(sin_theta * std::cos(phi), sin_theta * std::sin(phi), -cos_theta).normalized();
}

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(text);
    while (std::getline(in, field, sep))
        out.push_back(field);
    if (!text.empty() && text.back() == sep)
        out.emplace_back();
    return out;
}

double to_double(const std::string& s)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("synth record", 1, "bad number '" + s + "'");
    return v;
}

template <typename Int>
Int to_integer(const std::string& s)
{
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("synth record", 1, "bad integer '" + s + "'");
    return v;
}

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

SynthConfig SynthConfig::with_default_assets()
{
    SynthConfig c;
    c.eyeglass_assets = default_eyeglass_assets();
    return c;
}

void SynthConfig::validate() const
{
    if (eyeglass_assets.empty())
        throw std::invalid_argument("synthesis needs at least one eyeglass asset");
    for (const auto& asset : eyeglass_assets)
        asset.validate();
    check_interval(pitch_perturb, "pitch");
    check_interval(vshift, "vshift");
    check_energy(ambient, "ambient");
    check_energy(diffuse, "diffuse");
    check_energy(specular, "specular");
    if (!(light_cone_degrees >= 0.0 && light_cone_degrees < 90.0))
        throw std::invalid_argument("light cone must lie in [0, 90) degrees");
    if (!(shininess > 0.0) || !std::isfinite(shininess))
        throw std::invalid_argument("shininess must be positive");
    if (light_count < 0)
        throw std::invalid_argument("light count must be non-negative");
}

bool RandomDraw::operator==(const RandomDraw& other) const
{
    if (asset_index != other.asset_index || pitch_delta != other.pitch_delta || vshift != other.vshift ||
        seed != other.seed || lights.ambient != other.lights.ambient ||
        lights.shininess != other.lights.shininess || lights.lights.size() != other.lights.lights.size())
        return false;
    for (std::size_t i = 0; i < lights.lights.size(); ++i) {
        const auto& a = lights.lights[i];
        const auto& b = other.lights.lights[i];
        if (a.direction != b.direction || a.diffuse != b.diffuse || a.specular != b.specular)
            return false;
    }
    return true;
}

std::uint64_t image_seed(std::uint64_t master_seed, std::uint64_t image_index)
{
    return derive_seed(master_seed, image_index);
}

RandomDraw sample_randomness(const SynthConfig& config, std::uint64_t image_index)
{
    config.validate();
    RandomDraw d;
    d.seed = image_seed(config.master_seed, image_index);
    Rng rng(d.seed);
    // Draw order is part of the reproducibility contract.
    d.asset_index = uniform_index(rng, config.eyeglass_assets.size());
    d.pitch_delta = uniform_between(rng, config.pitch_perturb.lo, config.pitch_perturb.hi);
    d.vshift = uniform_between(rng, config.vshift.lo, config.vshift.hi);
    d.lights.ambient = uniform_between(rng, config.ambient.lo, config.ambient.hi);
    d.lights.shininess = config.shininess;
    d.lights.lights.clear();
    for (int i = 0; i < config.light_count; ++i) {
        DirectionalLight light;
        light.direction = sample_cone_direction(rng, config.light_cone_degrees);
        light.diffuse = uniform_between(rng, config.diffuse.lo, config.diffuse.hi);
        light.specular = uniform_between(rng, config.specular.lo, config.specular.hi);
        d.lights.lights.push_back(light);
    }
    return d;
}

RigidSimilarity perturb_fit(const RigidSimilarity& sim, double pitch_delta_degrees, double vshift,
                            const Vec3& pivot)
{
    if (pitch_delta_degrees == 0.0 && vshift == 0.0)
        return sim;
    const Mat3 tilt = rotation_from_euler({pitch_delta_degrees, 0.0, 0.0});
    const Mat3 rotation = tilt * sim.rotation();
    const Vec3 center = sim.apply(pivot);
    // Posed point q moves to tilt * (q - center) + center + (0, vshift, 0).
    const Vec3 shift = center - tilt * center + Vec3(0.0, vshift, 0.0);
    const Vec3 translation = sim.translation() + rotation.transpose() * shift / sim.scale();
    return RigidSimilarity(sim.scale(), rotation, translation);
}

RasterImage blend(const RasterImage& base, const RasterImage& layer, std::span<const std::uint8_t> mask)
{
    if (base.channels() != 3 || layer.channels() != 4)
        throw std::invalid_argument("blend expects an RGB base and an RGBA layer");
    if (base.width() != layer.width() || base.height() != layer.height())
        throw std::invalid_argument("blend: base and layer dimensions differ");
    const auto pixels = static_cast<std::size_t>(base.width()) * static_cast<std::size_t>(base.height());
    if (mask.size() != pixels)
        throw std::invalid_argument("blend: mask size does not match the image");

    RasterImage out = base;
    for (int y = 0; y < base.height(); ++y) {
        for (int x = 0; x < base.width(); ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(base.width()) +
                                    static_cast<std::size_t>(x);
            if (!mask[idx])
                continue;
            const auto src = layer.pixel(x, y);
            const double a = src[3] / 255.0;
            auto dst = out.pixel(x, y);
            for (int c = 0; c < 3; ++c) {
                const double v = a * src[static_cast<std::size_t>(c)] + (1.0 - a) * dst[static_cast<std::size_t>(c)];
                dst[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
            }
        }
    }
    return out;
}

std::string format_synth_record(const SynthRecord& r)
{
    std::string lights;
    for (std::size_t i = 0; i < r.lights.lights.size(); ++i) {
        const auto& l = r.lights.lights[i];
        if (i)
            lights += ';';
        lights += num(l.direction.x()) + "," + num(l.direction.y()) + "," + num(l.direction.z()) + "," +
                  num(l.diffuse) + "," + num(l.specular);
    }
    return r.source_path + '\t' + r.output_path + '\t' + std::to_string(r.asset_index) + '\t' +
           num(r.pitch_delta) + '\t' + num(r.vshift) + '\t' + num(r.lights.ambient) + '\t' +
           num(r.lights.shininess) + '\t' + lights + '\t' + num(r.fit_residual) + '\t' +
           std::to_string(r.seed) + '\t' + (r.empty_coverage ? "1" : "0");
}

SynthRecord parse_synth_record(const std::string& line)
{
    const auto f = split(line, '\t');
    if (f.size() != 11)
        throw ParseError("synth record", 1, "expected 11 fields, got " + std::to_string(f.size()));
    SynthRecord r;
    r.source_path = f[0];
    r.output_path = f[1];
    r.asset_index = to_integer<std::size_t>(f[2]);
    r.pitch_delta = to_double(f[3]);
    r.vshift = to_double(f[4]);
    r.lights.ambient = to_double(f[5]);
    r.lights.shininess = to_double(f[6]);
    r.lights.lights.clear();
    if (!f[7].empty()) {
        for (const auto& entry : split(f[7], ';')) {
            const auto v = split(entry, ',');
            if (v.size() != 5)
                throw ParseError("synth record", 1, "light entry needs 5 values: '" + entry + "'");
            r.lights.lights.push_back({Vec3(to_double(v[0]), to_double(v[1]), to_double(v[2])),
                                       to_double(v[3]), to_double(v[4])});
        }
    }
    r.fit_residual = to_double(f[8]);
    r.seed = to_integer<std::uint64_t>(f[9]);
    if (f[10] != "0" && f[10] != "1")
        throw ParseError("synth record", 1, "empty-coverage flag must be 0 or 1");
    r.empty_coverage = f[10] == "1";
    return r;
}

SynthResult synthesize_one(const RasterImage& image, const Mesh& face, const SynthConfig& config,
                           std::uint64_t image_index)
{
    if (image.channels() != 3)
        throw std::invalid_argument("synthesis expects an RGB base image");
    const RandomDraw draw = sample_randomness(config, image_index);
    const Mesh& asset = config.eyeglass_assets[draw.asset_index];

    face.validate();
    if (face.anchor_indices.size() != asset.anchor_indices.size())
        throw DataError("face model has " + std::to_string(face.anchor_indices.size()) +
                        " anchors but eyeglass asset " + std::to_string(draw.asset_index) + " has " +
                        std::to_string(asset.anchor_indices.size()));

    const AnchorCorrespondence corr = AnchorCorrespondence::from_meshes(asset, face);
    const FitResult fit = fit_eyeglass(corr, Projection::full3d());
    const RigidSimilarity posed =
        perturb_fit(fit.sim, draw.pitch_delta, draw.vshift, centroid(corr.glass_anchors));

    RenderOptions opts;
    opts.antialias_edges = config.antialias_edges;
    if (config.occlude_with_face && !face.triangles.empty())
        opts.occluder = &face;
    const RenderedLayer layer = render_layer(asset, posed, draw.lights, image.width(), image.height(), opts);

    SynthResult out{layer.empty_coverage ? image : blend(image, layer.rgba, layer.mask), {}};
    out.record.asset_index = draw.asset_index;
    out.record.pitch_delta = draw.pitch_delta;
    out.record.vshift = draw.vshift;
    out.record.lights = draw.lights;
    out.record.fit_residual = fit.residual;
    out.record.seed = draw.seed;
    out.record.empty_coverage = layer.empty_coverage;
    return out;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task)
{
    const std::size_t n_threads = std::max<std::size_t>(
        1, std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers))));
    if (n_threads == 1) {
        for (std::size_t i = 0; i < count; ++i)
            task(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t first_error_index = count;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t)
        threads.emplace_back(worker);
    for (auto& t : threads)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

Manifest build_mixture_manifest(const Manifest& original, const Manifest& synthesized)
{
    original.validate();
    if (synthesized.records.empty())
        return original;
    if (synthesized.size() != original.size())
        throw InconsistentManifest("synthesized manifest has " + std::to_string(synthesized.size()) +
                                   " records for " + std::to_string(original.size()) + " originals");
    Manifest out;
    out.records.reserve(mixture_record_count(original.size()));
    out.records = original.records;
    for (std::size_t i = 0; i < synthesized.size(); ++i) {
        if (synthesized.records[i].identity != original.records[i].identity)
            throw InconsistentManifest("identity mismatch at record " + std::to_string(i) + ": '" +
                                       original.records[i].identity + "' vs '" +
                                       synthesized.records[i].identity + "'");
        ManifestRecord r = synthesized.records[i];
        r.flag = GlassFlag::Glasses;
        out.records.push_back(std::move(r));
    }
    try {
        out.validate();
    } catch (const DataError& e) {
        throw InconsistentManifest(std::string("mixture manifest invalid: ") + e.what());
    }
    return out;
}

} // namespace glassynth

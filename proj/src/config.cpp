#include "glassynth/io.hpp"

#include "glassynth/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace glassynth {

namespace {

std::string_view trim(std::string_view s)
{
    const std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

constexpr std::array<std::string_view, 17> kSynthKeys{
    "pitch_min",    "pitch_max",    "vshift_min",   "vshift_max",         "ambient_min", "ambient_max",
    "diffuse_min",  "diffuse_max",  "specular_min", "specular_max",       "light_cone_degrees",
    "shininess",    "light_count",  "antialias",    "occlude_with_face", "asset_dir",   "jobs"};

constexpr std::array<std::string_view, 3> kScheduleKeys{"lambda", "p0", "p_cap"};

} // namespace

Config Config::parse(std::string_view text, const std::string& source)
{
    Config c;
    c.source_ = source;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(source, line_no, "expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty())
            throw ParseError(source, line_no, "empty key");
        if (!c.values_.emplace(key, value).second)
            throw ParseError(source, line_no, "duplicate key '" + key + "'");
    }
    return c;
}

Config Config::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

std::optional<std::string> Config::get(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end())
        return std::nullopt;
    return it->second;
}

double Config::number(const std::string& key, double fallback) const
{
    const auto v = get(key);
    if (!v)
        return fallback;
    double out = 0.0;
    const auto r = std::from_chars(v->data(), v->data() + v->size(), out);
    if (r.ec != std::errc() || r.ptr != v->data() + v->size())
        throw DataError(source_ + ": key '" + key + "' expects a number, got '" + *v + "'");
    return out;
}

std::uint64_t Config::integer(const std::string& key, std::uint64_t fallback) const
{
    const auto v = get(key);
    if (!v)
        return fallback;
    std::uint64_t out = 0;
    const auto r = std::from_chars(v->data(), v->data() + v->size(), out);
    if (r.ec != std::errc() || r.ptr != v->data() + v->size())
        throw DataError(source_ + ": key '" + key + "' expects a non-negative integer, got '" + *v + "'");
    return out;
}

bool Config::flag(const std::string& key, bool fallback) const
{
    const auto v = get(key);
    if (!v)
        return fallback;
    if (*v == "true" || *v == "1")
        return true;
    if (*v == "false" || *v == "0")
        return false;
    throw DataError(source_ + ": key '" + key + "' expects true or false, got '" + *v + "'");
}

void Config::reject_unknown(std::span<const std::string_view> allowed) const
{
    for (const auto& [key, value] : values_) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw DataError(source_ + ": unknown key '" + key + "'");
    }
}

void Config::require(std::span<const std::string_view> required) const
{
    for (const auto key : required) {
        if (!has(std::string(key)))
            throw DataError(source_ + ": missing required key '" + std::string(key) + "'");
    }
}

std::span<const std::string_view> synth_config_keys()
{
    return kSynthKeys;
}

std::span<const std::string_view> schedule_config_keys()
{
    return kScheduleKeys;
}

void apply_synth_config(const Config& source, SynthConfig& config)
{
    auto interval = [&](const char* name, Interval& iv) {
        iv.lo = source.number(std::string(name) + "_min", iv.lo);
        iv.hi = source.number(std::string(name) + "_max", iv.hi);
    };
    interval("pitch", config.pitch_perturb);
    interval("vshift", config.vshift);
    interval("ambient", config.ambient);
    interval("diffuse", config.diffuse);
    interval("specular", config.specular);
    config.light_cone_degrees = source.number("light_cone_degrees", config.light_cone_degrees);
    config.shininess = source.number("shininess", config.shininess);
    config.light_count = static_cast<int>(source.integer("light_count", static_cast<std::uint64_t>(config.light_count)));
    config.antialias_edges = source.flag("antialias", config.antialias_edges);
    config.occlude_with_face = source.flag("occlude_with_face", config.occlude_with_face);
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("synthesis config: ") + e.what());
    }
}

void apply_schedule_config(const Config& source, SamplerSchedule& schedule)
{
    schedule.lambda = source.number("lambda", schedule.lambda);
    schedule.p0 = source.number("p0", schedule.p0);
    schedule.p_cap = source.number("p_cap", schedule.p_cap);
    try {
        schedule.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("schedule config: ") + e.what());
    }
}

} // namespace glassynth

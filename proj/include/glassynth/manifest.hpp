#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace glassynth {

enum class GlassFlag { NoGlasses, Glasses };

std::string_view glass_flag_name(GlassFlag flag); // "NG" / "G"
GlassFlag parse_glass_flag(std::string_view text); // throws std::invalid_argument

struct ManifestRecord {
    std::string path;
    std::string identity;
    GlassFlag flag = GlassFlag::NoGlasses;

    bool operator==(const ManifestRecord&) const = default;
};

struct Manifest {
    std::vector<ManifestRecord> records;

    /// Throws DataError on duplicate paths or empty labels.
    void validate() const;
    std::size_t size() const noexcept { return records.size(); }
    bool operator==(const Manifest&) const = default;
};

/// One record per line: `path<TAB>identity<TAB>G|NG`. Blank lines are skipped.
/// Throws ParseError (with line number) on malformed lines and duplicate paths.
Manifest parse_manifest(std::string_view text, const std::string& source = "<manifest>");
Manifest load_manifest(const std::filesystem::path& path);

std::string format_manifest(const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

} // namespace glassynth

#include "glassynth/manifest.hpp"

#include "glassynth/errors.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace glassynth {

std::string_view glass_flag_name(GlassFlag flag)
{
    return flag == GlassFlag::Glasses ? "G" : "NG";
}

GlassFlag parse_glass_flag(std::string_view text)
{
    if (text == "G")
        return GlassFlag::Glasses;
    if (text == "NG")
        return GlassFlag::NoGlasses;
    throw std::invalid_argument("glass flag must be G or NG, got '" + std::string(text) + "'");
}

void Manifest::validate() const
{
    std::unordered_set<std::string_view> seen;
    for (const auto& r : records) {
        if (r.path.empty())
            throw DataError("manifest record with empty path");
        if (r.identity.empty())
            throw DataError("manifest record '" + r.path + "' has an empty identity label");
        if (!seen.insert(r.path).second)
            throw DataError("duplicate manifest path '" + r.path + "'");
    }
}

Manifest parse_manifest(std::string_view text, const std::string& source)
{
    Manifest m;
    std::unordered_map<std::string, std::size_t> first_line;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;

        const std::size_t t1 = line.find('\t');
        const std::size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos)
            throw ParseError(source, line_no, "expected 3 tab-separated fields");
        ManifestRecord r;
        r.path = std::string(line.substr(0, t1));
        r.identity = std::string(line.substr(t1 + 1, t2 - t1 - 1));
        const std::string_view flag = line.substr(t2 + 1);
        if (r.path.empty())
            throw ParseError(source, line_no, "empty path");
        if (r.identity.empty())
            throw ParseError(source, line_no, "empty identity");
        try {
            r.flag = parse_glass_flag(flag);
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, line_no, e.what());
        }
        const auto [it, inserted] = first_line.emplace(r.path, line_no);
        if (!inserted)
            throw ParseError(source, line_no,
                             "duplicate path '" + r.path + "' (first on line " + std::to_string(it->second) + ")");
        m.records.push_back(std::move(r));
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open manifest '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str(), path.string());
}

std::string format_manifest(const Manifest& manifest)
{
    std::string out;
    for (const auto& r : manifest.records) {
        if (r.path.find_first_of("\t\n") != std::string::npos ||
            r.identity.find_first_of("\t\n") != std::string::npos)
            throw DataError("manifest fields may not contain tabs or newlines: '" + r.path + "'");
        out += r.path;
        out += '\t';
        out += r.identity;
        out += '\t';
        out += glass_flag_name(r.flag);
        out += '\n';
    }
    return out;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path)
{
    const std::string text = format_manifest(manifest);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

} // namespace glassynth

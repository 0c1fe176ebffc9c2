#include "glassynth/io.hpp"

#include "glassynth/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace glassynth {

namespace {

std::string read_all(const std::filesystem::path& path, const char* what)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(std::string("cannot open ") + what + " '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_all(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

// Splits on spaces and tabs.
std::vector<std::string_view> tokens(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        const std::size_t start = line.find_first_not_of(" \t", pos);
        if (start == std::string_view::npos)
            break;
        std::size_t end = line.find_first_of(" \t", start);
        if (end == std::string_view::npos)
            end = line.size();
        out.push_back(line.substr(start, end - start));
        pos = end;
    }
    return out;
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn)
{
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos)
            line = line.substr(0, hash);
        fn(line, line_no);
    }
}

bool parse_double(std::string_view s, double& out)
{
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

bool parse_long(std::string_view s, long& out)
{
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

Mesh parse_mesh(std::string_view obj_text, std::string_view anchor_text, const std::string& source)
{
    Mesh mesh;
    struct Face {
        std::array<long, 3> idx;
        std::size_t line;
    };
    std::vector<Face> faces;

    for_each_line(obj_text, [&](std::string_view line, std::size_t line_no) {
        const auto tok = tokens(line);
        if (tok.empty())
            return;
        if (tok[0] == "v") {
            if (tok.size() != 4 && tok.size() != 5)
                throw ParseError(source, line_no, "vertex needs 3 coordinates");
            Vec3 v;
            for (int k = 0; k < 3; ++k) {
                if (!parse_double(tok[static_cast<std::size_t>(k) + 1], v[k]))
                    throw ParseError(source, line_no, "bad vertex coordinate '" + std::string(tok[k + 1]) + "'");
            }
            mesh.vertices.push_back(v);
        } else if (tok[0] == "f") {
            if (tok.size() != 4)
                throw ParseError(source, line_no,
                                 "face has " + std::to_string(tok.size() - 1) + " vertices; only triangles are supported");
            Face f{{}, line_no};
            for (int k = 0; k < 3; ++k) {
                std::string_view t = tok[static_cast<std::size_t>(k) + 1];
                t = t.substr(0, t.find('/'));
                if (!parse_long(t, f.idx[static_cast<std::size_t>(k)]) || f.idx[static_cast<std::size_t>(k)] == 0)
                    throw ParseError(source, line_no, "bad face index '" + std::string(tok[k + 1]) + "'");
            }
            faces.push_back(f);
        }
    });

    const auto n = static_cast<long>(mesh.vertices.size());
    for (const auto& f : faces) {
        std::array<int, 3> tri{};
        for (int k = 0; k < 3; ++k) {
            long i = f.idx[static_cast<std::size_t>(k)];
            i = i > 0 ? i - 1 : n + i;
            if (i < 0 || i >= n)
                throw ParseError(source, f.line, "face index " + std::to_string(f.idx[static_cast<std::size_t>(k)]) +
                                                     " out of range (" + std::to_string(n) + " vertices)");
            tri[static_cast<std::size_t>(k)] = static_cast<int>(i);
        }
        mesh.triangles.push_back(tri);
    }

    const std::string anchor_source = source + " anchors";
    for_each_line(anchor_text, [&](std::string_view line, std::size_t line_no) {
        for (const auto t : tokens(line)) {
            long i = 0;
            if (!parse_long(t, i))
                throw ParseError(anchor_source, line_no, "bad anchor index '" + std::string(t) + "'");
            if (i < 1 || i > n)
                throw ParseError(anchor_source, line_no,
                                 "anchor index " + std::to_string(i) + " out of range 1.." + std::to_string(n));
            mesh.anchor_indices.push_back(static_cast<int>(i - 1));
        }
    });
    if (mesh.anchor_indices.empty())
        throw ParseError(anchor_source, 1, "no anchor indices");
    return mesh;
}

Mesh load_mesh(const std::filesystem::path& obj_path, const std::filesystem::path& anchor_path)
{
    const std::string obj = read_all(obj_path, "mesh");
    const std::string anchors = read_all(anchor_path, "anchor file");
    return parse_mesh(obj, anchors, obj_path.string());
}

std::string format_mesh_obj(const Mesh& mesh)
{
    mesh.validate_topology();
    std::string out;
    for (const auto& v : mesh.vertices)
        out += "v " + fmt17(v.x()) + " " + fmt17(v.y()) + " " + fmt17(v.z()) + "\n";
    for (const auto& t : mesh.triangles)
        out += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) + "\n";
    return out;
}

std::string format_anchors(const Mesh& mesh)
{
    std::string out;
    for (int a : mesh.anchor_indices)
        out += std::to_string(a + 1) + "\n";
    return out;
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& obj_path, const std::filesystem::path& anchor_path)
{
    mesh.validate();
    write_all(obj_path, format_mesh_obj(mesh));
    write_all(anchor_path, format_anchors(mesh));
}

} // namespace glassynth

#include "glassynth/eval.hpp"

#include "glassynth/errors.hpp"
#include "glassynth/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace glassynth {

namespace {

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::size_t count_at_least(const std::vector<double>& ascending, double t)
{
    return static_cast<std::size_t>(ascending.end() - std::lower_bound(ascending.begin(), ascending.end(), t));
}

std::size_t count_above(const std::vector<double>& ascending, double t)
{
    return static_cast<std::size_t>(ascending.end() - std::upper_bound(ascending.begin(), ascending.end(), t));
}

std::string fmt(double v, const char* spec = "%.6f")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

} // namespace

std::string_view protocol_name(ProtocolId id)
{
    switch (id) {
    case ProtocolId::I: return "I";
    case ProtocolId::II: return "II";
    case ProtocolId::III: return "III";
    case ProtocolId::IV: return "IV";
    }
    return "?";
}

ProtocolId parse_protocol(std::string_view text)
{
    if (text == "I") return ProtocolId::I;
    if (text == "II") return ProtocolId::II;
    if (text == "III") return ProtocolId::III;
    if (text == "IV") return ProtocolId::IV;
    throw std::invalid_argument("protocol must be I, II, III or IV, got '" + std::string(text) + "'");
}

ProtocolSpec ProtocolSpec::of(ProtocolId id)
{
    switch (id) {
    case ProtocolId::I: return {id, 2, 0, 2, 0};
    case ProtocolId::II: return {id, 0, 2, 0, 2};
    case ProtocolId::III: return {id, 2, 0, 0, 2};
    case ProtocolId::IV: return {id, 2, 2, 2, 2};
    }
    throw std::invalid_argument("unknown protocol");
}

std::size_t EvalSplit::identity_count() const
{
    std::set<std::string_view> ids;
    for (const auto& e : gallery)
        ids.insert(e.identity);
    for (const auto& e : probe)
        ids.insert(e.identity);
    return ids.size();
}

std::size_t EvalSplit::unique_images() const
{
    std::set<std::string_view> paths;
    for (const auto& e : gallery)
        paths.insert(e.path);
    for (const auto& e : probe)
        paths.insert(e.path);
    return paths.size();
}

EvalSplit build_split(const Manifest& manifest, ProtocolId protocol, std::uint64_t seed, SplitMode mode)
{
    manifest.validate();
    const ProtocolSpec spec = ProtocolSpec::of(protocol);
    const std::size_t need = mode == SplitMode::Shared ? 2 : 4;

    struct Images {
        std::vector<const ManifestRecord*> ng, g;
    };
    std::map<std::string, Images> by_identity; // sorted identities
    for (const auto& r : manifest.records) {
        auto& images = by_identity[r.identity];
        (r.flag == GlassFlag::Glasses ? images.g : images.ng).push_back(&r);
    }

    EvalSplit split;
    split.protocol = protocol;
    split.mode = mode;
    auto entry = [](const ManifestRecord* r) { return SplitEntry{r->path, r->identity, r->flag}; };
    auto by_path = [](const ManifestRecord* a, const ManifestRecord* b) { return a->path < b->path; };

    for (auto& [identity, images] : by_identity) {
        if (images.ng.size() < need || images.g.size() < need) {
            split.excluded_identities.push_back(identity);
            continue;
        }
        // Selection for one identity depends only on (seed, identity, its images).
        Rng rng(derive_seed(seed, fnv1a(identity)));
        std::sort(images.ng.begin(), images.ng.end(), by_path);
        std::sort(images.g.begin(), images.g.end(), by_path);
        shuffle_in_place(std::span(images.ng), rng);
        shuffle_in_place(std::span(images.g), rng);

        // Shared: both sides draw from slots [0, 2). Disjoint: probe uses [2, 4).
        const std::size_t probe_offset = mode == SplitMode::Shared ? 0 : 2;
        for (int k = 0; k < spec.gallery_ng; ++k)
            split.gallery.push_back(entry(images.ng[static_cast<std::size_t>(k)]));
        for (int k = 0; k < spec.gallery_g; ++k)
            split.gallery.push_back(entry(images.g[static_cast<std::size_t>(k)]));
        for (int k = 0; k < spec.probe_ng; ++k)
            split.probe.push_back(entry(images.ng[probe_offset + static_cast<std::size_t>(k)]));
        for (int k = 0; k < spec.probe_g; ++k)
            split.probe.push_back(entry(images.g[probe_offset + static_cast<std::size_t>(k)]));
    }
    if (split.gallery.empty())
        throw EmptyProtocol("protocol " + std::string(protocol_name(protocol)) + ": no identity has " +
                            std::to_string(need) + " G and " + std::to_string(need) + " NG images (" +
                            std::to_string(split.excluded_identities.size()) + " excluded)");
    return split;
}

ScoreMatrix score_matrix(std::span<const SplitEntry> gallery, std::span<const SplitEntry> probe,
                         const EmbeddingLookup& embeddings)
{
    auto unit_columns = [&](std::span<const SplitEntry> side) {
        Eigen::MatrixXd m;
        for (std::size_t i = 0; i < side.size(); ++i) {
            const auto it = embeddings.find(side[i].path);
            if (it == embeddings.end())
                throw LookupError("no embedding for image '" + side[i].path + "'");
            const Eigen::VectorXd& v = it->second;
            if (i == 0)
                m.resize(v.size(), static_cast<Eigen::Index>(side.size()));
            if (v.size() != m.rows())
                throw LookupError("embedding for '" + side[i].path + "' has the wrong dimension");
            const double n = v.norm();
            if (!(n > 1e-12) || !v.allFinite())
                throw std::invalid_argument("embedding for '" + side[i].path + "' has zero norm");
            m.col(static_cast<Eigen::Index>(i)) = v / n;
        }
        return m;
    };

    ScoreMatrix out;
    out.rows = probe.size();
    out.cols = gallery.size();
    out.values.assign(out.rows * out.cols, 0.0);
    out.excluded.assign(out.rows * out.cols, 0);
    if (probe.empty() || gallery.empty())
        return out;

    const Eigen::MatrixXd g = unit_columns(gallery);
    const Eigen::MatrixXd p = unit_columns(probe);
    if (g.rows() != p.rows())
        throw LookupError("gallery and probe embeddings differ in dimension");
    const Eigen::MatrixXd s = p.transpose() * g;
    for (std::size_t i = 0; i < out.rows; ++i) {
        for (std::size_t j = 0; j < out.cols; ++j) {
            out.values[i * out.cols + j] =
                std::clamp(s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), -1.0, 1.0);
            out.excluded[i * out.cols + j] = probe[i].path == gallery[j].path ? 1 : 0;
        }
    }
    return out;
}

ScoreLists split_scores(const ScoreMatrix& matrix, std::span<const SplitEntry> gallery,
                        std::span<const SplitEntry> probe)
{
    const bool same_lists = std::equal(gallery.begin(), gallery.end(), probe.begin(), probe.end());
    ScoreLists out;
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        for (std::size_t j = same_lists ? i + 1 : 0; j < matrix.cols; ++j) {
            if (matrix.is_excluded(i, j))
                continue;
            (probe[i].identity == gallery[j].identity ? out.genuine : out.impostor).push_back(matrix.at(i, j));
        }
    }
    return out;
}

std::vector<OperatingPoint> verification_rates(std::span<const double> genuine,
                                               std::span<const double> impostor,
                                               std::span<const double> far_targets)
{
    if (genuine.empty() || impostor.empty())
        throw std::invalid_argument("verification_rates needs genuine and impostor scores");
    std::vector<double> gen(genuine.begin(), genuine.end());
    std::vector<double> imp(impostor.begin(), impostor.end());
    std::sort(gen.begin(), gen.end());
    std::sort(imp.begin(), imp.end());
    const auto n_imp = static_cast<double>(imp.size());
    const auto n_gen = static_cast<double>(gen.size());
    const double max_imp = imp.back();

    std::vector<OperatingPoint> out;
    for (double target : far_targets) {
        if (!(target > 0.0 && target < 1.0))
            throw std::invalid_argument("FAR targets must lie in (0, 1)");
        OperatingPoint op;
        op.far_target = target;
        op.insufficient_data = n_imp * target < 1.0;

        auto far_at = [&](double t) { return static_cast<double>(count_at_least(imp, t)) / n_imp; };
        if (far_at(max_imp) > target) {
            op.unreachable = true;
            op.threshold = std::nextafter(max_imp, std::numeric_limits<double>::infinity());
        } else {
            // FAR(t) only changes at impostor scores. Let s be the largest
            // impostor score that violates the target (if any); the answer is
            // the smallest observed score strictly above s.
            double lowest_bad = -std::numeric_limits<double>::infinity();
            bool any_bad = false;
            for (auto it = imp.rbegin(); it != imp.rend(); ++it) {
                if (far_at(*it) > target) {
                    lowest_bad = *it;
                    any_bad = true;
                    break;
                }
            }
            double t = std::numeric_limits<double>::infinity();
            if (!any_bad) {
                t = std::min(imp.front(), gen.front());
            } else {
                const auto ig = std::upper_bound(gen.begin(), gen.end(), lowest_bad);
                const auto ii = std::upper_bound(imp.begin(), imp.end(), lowest_bad);
                if (ig != gen.end())
                    t = std::min(t, *ig);
                if (ii != imp.end())
                    t = std::min(t, *ii);
            }
            op.threshold = t;
        }
        op.far = static_cast<double>(count_at_least(imp, op.threshold)) / n_imp;
        op.tpr = static_cast<double>(count_at_least(gen, op.threshold)) / n_gen;
        out.push_back(op);
    }
    return out;
}

double rank1(const ScoreMatrix& matrix, std::span<const std::string> probe_identities,
             std::span<const std::string> gallery_identities)
{
    if (matrix.rows == 0 || matrix.cols == 0)
        throw std::invalid_argument("rank1 needs a nonempty score matrix");
    if (probe_identities.size() != matrix.rows || gallery_identities.size() != matrix.cols)
        throw std::invalid_argument("rank1: identity lists do not match the matrix");
    std::size_t hits = 0, counted = 0;
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        std::size_t best = matrix.cols;
        for (std::size_t j = 0; j < matrix.cols; ++j) {
            if (matrix.is_excluded(i, j))
                continue;
            if (best == matrix.cols || matrix.at(i, j) > matrix.at(i, best))
                best = j;
        }
        if (best == matrix.cols)
            continue;
        ++counted;
        if (gallery_identities[best] == probe_identities[i])
            ++hits;
    }
    return counted == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(counted);
}

std::vector<RocPoint> roc_points(std::span<const double> genuine, std::span<const double> impostor)
{
    if (genuine.empty() || impostor.empty())
        throw std::invalid_argument("ROC needs genuine and impostor scores");
    std::vector<double> gen(genuine.begin(), genuine.end());
    std::vector<double> imp(impostor.begin(), impostor.end());
    std::sort(gen.begin(), gen.end());
    std::sort(imp.begin(), imp.end());
    const auto n_imp = static_cast<double>(imp.size());
    const auto n_gen = static_cast<double>(gen.size());

    std::vector<RocPoint> out{{0.0, 0.0}};
    for (std::size_t k = 0; k < imp.size(); ++k) {
        if (k > 0 && imp[k] == imp[k - 1])
            continue;
        out.push_back({static_cast<double>(count_above(imp, imp[k])) / n_imp,
                       static_cast<double>(count_above(gen, imp[k])) / n_gen});
    }
    out.push_back({1.0, 1.0});
    std::stable_sort(out.begin(), out.end(), [](const RocPoint& a, const RocPoint& b) {
        return a.far < b.far || (a.far == b.far && a.tpr < b.tpr);
    });
    return out;
}

void roc_export(std::span<const double> genuine, std::span<const double> impostor,
                const std::filesystem::path& path)
{
    const auto points = roc_points(genuine, impostor);
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    for (const auto& p : points)
        out << fmt(p.far, "%.17g") << ',' << fmt(p.tpr, "%.17g") << '\n';
    if (!out)
        throw IoError("write failed for '" + path.string() + "'");
}

std::vector<RocPoint> read_roc(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open ROC file '" + path.string() + "'");
    std::vector<RocPoint> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError(path.string(), line_no, "expected FAR,TPR");
        RocPoint p{};
        const char* b = line.data();
        const char* e = line.data() + line.size();
        const auto r1 = std::from_chars(b, b + comma, p.far);
        const auto r2 = std::from_chars(b + comma + 1, e, p.tpr);
        if (r1.ec != std::errc() || r1.ptr != b + comma || r2.ec != std::errc() || r2.ptr != e)
            throw ParseError(path.string(), line_no, "malformed ROC point");
        out.push_back(p);
    }
    return out;
}

EvalReport evaluate(const EvalSplit& split, const EmbeddingLookup& embeddings)
{
    const ScoreMatrix matrix = score_matrix(split.gallery, split.probe, embeddings);
    const ScoreLists scores = split_scores(matrix, split.gallery, split.probe);

    EvalReport r;
    r.protocol = split.protocol;
    r.mode = split.mode;
    r.identities = split.identity_count();
    r.gallery_size = split.gallery.size();
    r.probe_size = split.probe.size();
    r.genuine_count = scores.genuine.size();
    r.impostor_count = scores.impostor.size();
    r.operating_points = verification_rates(scores.genuine, scores.impostor, kFarTargets);
    std::vector<std::string> probe_ids, gallery_ids;
    for (const auto& e : split.probe)
        probe_ids.push_back(e.identity);
    for (const auto& e : split.gallery)
        gallery_ids.push_back(e.identity);
    r.rank1 = rank1(matrix, probe_ids, gallery_ids);
    r.roc = roc_points(scores.genuine, scores.impostor);
    r.excluded_identities = split.excluded_identities;
    return r;
}

std::string format_report(const EvalReport& r)
{
    std::string out;
    auto line = [&](const std::string& k, const std::string& v) { out += k + ": " + v + "\n"; };
    line("protocol", std::string(protocol_name(r.protocol)));
    line("split_mode", r.mode == SplitMode::Shared ? "shared" : "disjoint");
    line("identities", std::to_string(r.identities));
    line("gallery_images", std::to_string(r.gallery_size));
    line("probe_images", std::to_string(r.probe_size));
    line("genuine_scores", std::to_string(r.genuine_count));
    line("impostor_scores", std::to_string(r.impostor_count));
    for (const auto& op : r.operating_points) {
        std::string flags;
        if (op.unreachable)
            flags += " [target unreachable]";
        if (op.insufficient_data)
            flags += " [insufficient impostor scores]";
        line("TPR@FAR=" + fmt(op.far_target, "%.0e"),
             fmt(op.tpr) + " (threshold " + fmt(op.threshold, "%.6g") + ")" + flags);
    }
    line("rank1", fmt(r.rank1));
    line("roc_points", std::to_string(r.roc.size()));
    line("excluded_identities", std::to_string(r.excluded_identities.size()));
    return out;
}

std::string format_report_records(const EvalReport& r)
{
    std::string out;
    auto rec = [&](const std::string& k, const std::string& v) { out += k + "\t" + v + "\n"; };
    rec("protocol", std::string(protocol_name(r.protocol)));
    rec("split_mode", r.mode == SplitMode::Shared ? "shared" : "disjoint");
    rec("identities", std::to_string(r.identities));
    rec("gallery_images", std::to_string(r.gallery_size));
    rec("probe_images", std::to_string(r.probe_size));
    rec("genuine_scores", std::to_string(r.genuine_count));
    rec("impostor_scores", std::to_string(r.impostor_count));
    for (const auto& op : r.operating_points) {
        const std::string key = "far_" + fmt(op.far_target, "%.0e");
        rec(key + "_tpr", fmt(op.tpr, "%.17g"));
        rec(key + "_threshold", fmt(op.threshold, "%.17g"));
        rec(key + "_unreachable", op.unreachable ? "1" : "0");
        rec(key + "_insufficient_data", op.insufficient_data ? "1" : "0");
    }
    rec("rank1", fmt(r.rank1, "%.17g"));
    for (const auto& id : r.excluded_identities)
        rec("excluded", id);
    return out;
}

} // namespace glassynth

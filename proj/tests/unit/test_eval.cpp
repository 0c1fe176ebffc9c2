#include "oracles.hpp"
#include "glassynth/errors.hpp"
#include "glassynth/eval.hpp"
#include "glassynth/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

using namespace glassynth;
using namespace glassynth::testing;

namespace {

std::vector<std::string> ids_of(const std::vector<SplitEntry>& side)
{
    std::vector<std::string> out;
    for (const auto& e : side)
        out.push_back(e.identity);
    return out;
}

std::size_t count_flag(const std::vector<SplitEntry>& side, GlassFlag f)
{
    return static_cast<std::size_t>(std::count_if(side.begin(), side.end(), [&](const auto& e) { return e.flag == f; }));
}

std::vector<double> random_scores(Rng& rng, std::size_t n, double mean, int levels)
{
    std::vector<double> v(n);
    for (double& x : v) {
        x = mean + 0.2 * standard_normal(rng);
        if (levels > 0)
            x = std::round(x * levels) / levels; // force ties
    }
    return v;
}

} // namespace

TEST_CASE("protocol names")
{
    for (ProtocolId p : {ProtocolId::I, ProtocolId::II, ProtocolId::III, ProtocolId::IV})
        CHECK(parse_protocol(protocol_name(p)) == p);
    CHECK_THROWS_AS(parse_protocol("V"), std::invalid_argument);
}

TEST_CASE("split cardinalities per protocol")
{
    const Manifest m = synthetic_manifest(3, 2, 2);
    const EvalSplit iii = build_split(m, ProtocolId::III, 1);
    CHECK(iii.gallery.size() == 6);
    CHECK(iii.probe.size() == 6);
    CHECK(count_flag(iii.gallery, GlassFlag::NoGlasses) == 6);
    CHECK(count_flag(iii.probe, GlassFlag::Glasses) == 6);
    CHECK_FALSE(iii.shared_sides());

    const EvalSplit i = build_split(m, ProtocolId::I, 1);
    CHECK(i.gallery.size() == 6);
    CHECK(count_flag(i.gallery, GlassFlag::NoGlasses) == 6);
    CHECK(i.shared_sides());
    const EvalSplit ii = build_split(m, ProtocolId::II, 1);
    CHECK(count_flag(ii.probe, GlassFlag::Glasses) == 6);
    const EvalSplit iv = build_split(m, ProtocolId::IV, 1);
    CHECK(iv.gallery.size() == 12);
    CHECK(iv.unique_images() == 12);
    CHECK(iv.identity_count() == 3);
}

TEST_CASE("MeGlass-sized testing set")
{
    const Manifest m = synthetic_manifest(1710, 2, 2);
    const EvalSplit iv = build_split(m, ProtocolId::IV, 3);
    CHECK(iv.gallery.size() == 6840);
    CHECK(iv.probe.size() == 6840);
    CHECK(iv.unique_images() == 6840);
    CHECK(count_flag(iv.gallery, GlassFlag::Glasses) == 3420);
    CHECK(count_flag(iv.gallery, GlassFlag::NoGlasses) == 3420);
    const EvalSplit iii = build_split(m, ProtocolId::III, 3);
    CHECK(iii.gallery.size() == 3420);
    CHECK(iii.probe.size() == 3420);
    CHECK(iii.excluded_identities.empty());
}

TEST_CASE("disjoint mode keeps the sides apart")
{
    Manifest m = synthetic_manifest(5, 4, 4);
    m.records.push_back({"short/g0.ppm", "short", GlassFlag::Glasses});
    for (ProtocolId p : {ProtocolId::I, ProtocolId::II, ProtocolId::III, ProtocolId::IV}) {
        const EvalSplit s = build_split(m, p, 11, SplitMode::Disjoint);
        std::set<std::string> g;
        for (const auto& e : s.gallery)
            g.insert(e.path);
        for (const auto& e : s.probe)
            CHECK(g.count(e.path) == 0);
        const ProtocolSpec spec = ProtocolSpec::of(p);
        CHECK(s.gallery.size() == static_cast<std::size_t>(5 * (spec.gallery_g + spec.gallery_ng)));
        CHECK(s.probe.size() == static_cast<std::size_t>(5 * (spec.probe_g + spec.probe_ng)));
        CHECK(s.excluded_identities == std::vector<std::string>{"short"});
    }
    // Shared mode accepts 2 + 2 identities that disjoint mode excludes.
    const Manifest small = synthetic_manifest(4, 2, 2);
    CHECK_THROWS_AS(build_split(small, ProtocolId::IV, 0, SplitMode::Disjoint), EmptyProtocol);
}

TEST_CASE("build_split is seeded and excludes ineligible identities")
{
    Manifest m = synthetic_manifest(20, 3, 5);
    m.records.push_back({"lonely/ng0.ppm", "lonely", GlassFlag::NoGlasses});
    const EvalSplit a = build_split(m, ProtocolId::IV, 42);
    CHECK(a.gallery == build_split(m, ProtocolId::IV, 42).gallery);
    CHECK(a.excluded_identities == std::vector<std::string>{"lonely"});
    bool differs = false;
    for (std::uint64_t s = 43; s < 48; ++s)
        differs |= build_split(m, ProtocolId::IV, s).gallery != a.gallery;
    CHECK(differs);

    // Record order does not matter.
    Manifest reversed = m;
    std::reverse(reversed.records.begin(), reversed.records.end());
    CHECK(build_split(reversed, ProtocolId::IV, 42).gallery == a.gallery);

    const Manifest no_ng = synthetic_manifest(4, 3, 0);
    CHECK_THROWS_AS(build_split(no_ng, ProtocolId::I, 0), EmptyProtocol);
}

TEST_CASE("score matrix")
{
    const Manifest m = synthetic_manifest(4, 2, 2);
    const EvalSplit s = build_split(m, ProtocolId::IV, 0);
    const EmbeddingLookup hot = one_hot_embeddings(m);
    const ScoreMatrix sm = score_matrix(s.gallery, s.probe, hot);
    for (std::size_t i = 0; i < sm.rows; ++i) {
        CHECK(sm.at(i, i) == 1.0);
        CHECK(sm.is_excluded(i, i));
        for (std::size_t j = 0; j < sm.cols; ++j)
            CHECK(sm.at(i, j) == (s.probe[i].identity == s.gallery[j].identity ? 1.0 : 0.0));
    }

    Rng rng(5);
    EmbeddingLookup rnd;
    for (const auto& r : m.records) {
        Eigen::VectorXd v(16);
        for (int k = 0; k < 16; ++k)
            v[k] = standard_normal(rng);
        rnd[r.path] = v;
    }
    const ScoreMatrix sr = score_matrix(s.gallery, s.probe, rnd);
    for (std::size_t i = 0; i < sr.rows; ++i)
        for (std::size_t j = 0; j < sr.cols; ++j)
            CHECK(std::abs(sr.at(i, j) - oracle_cosine(rnd.at(s.probe[i].path), rnd.at(s.gallery[j].path))) < 1e-12);

    // Positive rescaling per image changes nothing.
    EmbeddingLookup scaled = rnd;
    for (auto& [path, v] : scaled)
        v *= 0.5 + 3.0 * uniform_unit(rng);
    const ScoreMatrix ss = score_matrix(s.gallery, s.probe, scaled);
    for (std::size_t k = 0; k < ss.values.size(); ++k)
        CHECK(std::abs(ss.values[k] - sr.values[k]) < 1e-12);

    EmbeddingLookup missing = rnd;
    missing.erase(s.gallery[3].path);
    try {
        score_matrix(s.gallery, s.probe, missing);
        FAIL("expected LookupError");
    } catch (const LookupError& e) {
        CHECK(std::string(e.what()).find(s.gallery[3].path) != std::string::npos);
    }
}

TEST_CASE("split_scores counts each unordered pair once in shared mode")
{
    const Manifest m = synthetic_manifest(5, 2, 2);
    const EvalSplit iv = build_split(m, ProtocolId::IV, 0);
    const ScoreMatrix sm = score_matrix(iv.gallery, iv.probe, one_hot_embeddings(m));
    const ScoreLists sl = split_scores(sm, iv.gallery, iv.probe);
    CHECK(sl.genuine.size() == 5 * 6);      // C(4, 2) per identity
    CHECK(sl.impostor.size() == 190 - 30); // C(20, 2) minus genuine
    for (double g : sl.genuine)
        CHECK(g == 1.0);

    const EvalSplit iii = build_split(m, ProtocolId::III, 0);
    const ScoreLists s3 = split_scores(score_matrix(iii.gallery, iii.probe, one_hot_embeddings(m)), iii.gallery,
                                       iii.probe);
    CHECK(s3.genuine.size() == 5 * 4);
    CHECK(s3.impostor.size() == 10 * 10 - 20);
}

TEST_CASE("verification_rates agrees with the threshold sweep")
{
    Rng rng(7);
    const std::vector<double> targets{1e-4, 1e-3, 0.01, 0.05, 0.2, 0.5};
    for (int trial = 0; trial < 30; ++trial) {
        const int levels = trial % 3 == 0 ? 20 : 0;
        const auto gen = random_scores(rng, 500 + uniform_index(rng, 500), 0.4, levels);
        const auto imp = random_scores(rng, 2000 + uniform_index(rng, 3000), -0.1, levels);
        const auto ops = verification_rates(gen, imp, targets);
        for (std::size_t k = 0; k < targets.size(); ++k) {
            const auto o = oracle_operating_point(gen, imp, targets[k]);
            CHECK(ops[k].threshold == o.threshold);
            CHECK(ops[k].tpr == o.tpr);
            CHECK(ops[k].unreachable == o.unreachable);
            CHECK(ops[k].far <= targets[k] + (o.unreachable ? 1.0 : 0.0));
            CHECK(ops[k].insufficient_data == (static_cast<double>(imp.size()) * targets[k] < 1.0));
        }
        for (std::size_t k = 1; k < targets.size(); ++k)
            CHECK(ops[k - 1].tpr <= ops[k].tpr);
    }
}

TEST_CASE("verification_rates special cases")
{
    const std::vector<double> gen(100, 1.0), imp(100, -1.0);
    for (const auto& op : verification_rates(gen, imp, kFarTargets))
        CHECK(op.tpr == 1.0);

    // Identical lists: TPR equals the achieved FAR.
    Rng rng(8);
    const auto same = random_scores(rng, 1000, 0.0, 0);
    for (const auto& op : verification_rates(same, same, std::vector<double>{0.01, 0.05, 0.1, 0.3})) {
        CHECK(op.tpr == op.far);
        CHECK(op.far <= op.far_target);
        CHECK(op.far > op.far_target - 0.0011);
    }

    const std::vector<double> ten(10, 0.0);
    const auto op = verification_rates(ten, std::vector<double>{0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9},
                                       std::vector<double>{1e-4});
    CHECK(op[0].insufficient_data);
    CHECK(op[0].unreachable);
    CHECK(op[0].threshold > 0.9);

    CHECK_THROWS_AS(verification_rates({}, ten, kFarTargets), std::invalid_argument);
    CHECK_THROWS_AS(verification_rates(ten, ten, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("rank1")
{
    Rng rng(9);
    std::vector<std::string> gallery_ids, probe_ids;
    for (int j = 0; j < 100; ++j)
        gallery_ids.push_back("id" + std::to_string(j % 20));
    for (int i = 0; i < 50; ++i)
        probe_ids.push_back("id" + std::to_string(uniform_index(rng, 20)));
    for (int trial = 0; trial < 20; ++trial) {
        ScoreMatrix m;
        m.rows = 50;
        m.cols = 100;
        m.excluded.assign(5000, 0);
        for (int k = 0; k < 5000; ++k) {
            m.values.push_back(std::round(10 * standard_normal(rng)) / 10); // ties
            m.excluded[static_cast<std::size_t>(k)] = trial % 2 == 1 && uniform_unit(rng) < 0.1;
        }
        CHECK(rank1(m, probe_ids, gallery_ids) == oracle_rank1(m, probe_ids, gallery_ids));
    }

    // Identity-blocked and adversarial matrices.
    ScoreMatrix block{3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, std::vector<std::uint8_t>(9, 0)};
    const std::vector<std::string> abc{"a", "b", "c"};
    CHECK(rank1(block, abc, abc) == 1.0);
    ScoreMatrix wrong{3, 3, {0, 1, 0, 1, 0, 0, 1, 0, 0}, std::vector<std::uint8_t>(9, 0)};
    CHECK(rank1(wrong, abc, abc) == 0.0);
    // Tie goes to the lower gallery index.
    ScoreMatrix tie{1, 2, {0.5, 0.5}, {0, 0}};
    CHECK(rank1(tie, std::vector<std::string>{"a"}, std::vector<std::string>{"a", "b"}) == 1.0);
    CHECK(rank1(tie, std::vector<std::string>{"b"}, std::vector<std::string>{"a", "b"}) == 0.0);
}

TEST_CASE("ROC export")
{
    const std::vector<double> gen{0.9, 0.8, 0.95}, imp{0.1, 0.2, 0.2, -0.3};
    const auto pts = roc_points(gen, imp);
    CHECK(pts.size() == 3 + 2);
    CHECK(pts.front().far == 0.0);
    CHECK(pts.back().far == 1.0);
    bool has_perfect = false;
    for (const auto& p : pts)
        has_perfect |= p.far == 0.0 && p.tpr == 1.0;
    CHECK(has_perfect);
    for (std::size_t k = 1; k < pts.size(); ++k) {
        CHECK(pts[k - 1].far <= pts[k].far);
        CHECK(pts[k - 1].tpr <= pts[k].tpr);
    }

    const auto path = std::filesystem::temp_directory_path() / "glassynth_roc_test.csv";
    Rng rng(10);
    const auto a = random_scores(rng, 2000, 0.0, 50);
    const auto b = random_scores(rng, 2000, 0.0, 50);
    roc_export(a, b, path);
    const auto back = read_roc(path);
    CHECK(back.size() == std::set<double>(b.begin(), b.end()).size() + 2);
    const auto direct = roc_points(a, b);
    REQUIRE(back.size() == direct.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        CHECK(back[k].far == direct[k].far);
        CHECK(back[k].tpr == direct[k].tpr);
        CHECK(std::abs(back[k].tpr - back[k].far) < 2.0 / std::sqrt(2000.0));
    }
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_roc(path), IoError);
}

TEST_CASE("one-hot embeddings are perfect on every protocol")
{
    const Manifest m = synthetic_manifest(30, 2, 2);
    const EmbeddingLookup hot = one_hot_embeddings(m);
    for (ProtocolId p : {ProtocolId::I, ProtocolId::II, ProtocolId::III, ProtocolId::IV}) {
        const EvalReport r = evaluate(build_split(m, p, 1), hot);
        CHECK(r.rank1 == 1.0);
        for (const auto& op : r.operating_points)
            CHECK(op.tpr == 1.0);
        const std::string text = format_report(r);
        CHECK(text.find("protocol: " + std::string(protocol_name(p))) == 0);
        CHECK(text.find("rank1: 1.000000") != std::string::npos);
        CHECK(format_report_records(r).find("rank1\t") != std::string::npos);
    }
}

TEST_CASE("rank1 on a split uses identities by position")
{
    const Manifest m = synthetic_manifest(6, 2, 2);
    const EvalSplit s = build_split(m, ProtocolId::IV, 2);
    const ScoreMatrix sm = score_matrix(s.gallery, s.probe, one_hot_embeddings(m));
    CHECK(rank1(sm, ids_of(s.probe), ids_of(s.gallery)) == oracle_rank1(sm, ids_of(s.probe), ids_of(s.gallery)));
}

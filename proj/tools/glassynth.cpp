// glassynth: eyeglass synthesis, evaluation and diagnostics.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.

#include "glassynth/arch.hpp"
#include "glassynth/assets.hpp"
#include "glassynth/errors.hpp"
#include "glassynth/eval.hpp"
#include "glassynth/fit.hpp"
#include "glassynth/image.hpp"
#include "glassynth/io.hpp"
#include "glassynth/manifest.hpp"
#include "glassynth/metric_loss.hpp"
#include "glassynth/schedule.hpp"
#include "glassynth/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using namespace glassynth;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<Mesh> load_asset_dir(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw IoError("asset directory '" + dir.string() + "' does not exist");
    std::vector<fs::path> objs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".obj")
            objs.push_back(entry.path());
    }
    std::sort(objs.begin(), objs.end());
    if (objs.empty())
        throw DataError("no .obj assets in '" + dir.string() + "'");
    std::vector<Mesh> out;
    for (const auto& obj : objs) {
        Mesh m = load_mesh(obj, fs::path(obj).replace_extension(".anchors"));
        m.material.color = {0.03, 0.03, 0.035};
        out.push_back(std::move(m));
    }
    return out;
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
    std::string manifest;
    std::string meshes;
    std::string out;
    std::string image_root;
    std::string config;
    std::optional<std::uint64_t> seed;
    int workers = 0;
};

int run_synth(const SynthArgs& a)
{
    if (!a.seed)
        throw UsageError("synth requires --seed");
    SynthConfig cfg = SynthConfig::with_default_assets();
    cfg.master_seed = *a.seed;
    int workers = a.workers > 0 ? a.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (!a.config.empty()) {
        const Config c = Config::load(a.config);
        c.reject_unknown(synth_config_keys());
        if (const auto dir = c.get("asset_dir"))
            cfg.eyeglass_assets = load_asset_dir(*dir);
        if (a.workers == 0)
            workers = static_cast<int>(c.integer("jobs", static_cast<std::uint64_t>(workers)));
        apply_synth_config(c, cfg);
    }

    const Manifest manifest = load_manifest(a.manifest);
    manifest.validate();
    const fs::path root = a.image_root.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.image_root);
    const fs::path out_dir(a.out);
    fs::create_directories(out_dir);

    std::map<std::string, std::size_t> stems;
    std::vector<fs::path> outputs;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const std::string stem = fs::path(manifest.records[i].path).stem().string();
        if (!stems.emplace(stem, i).second)
            throw DataError("two manifest images share the file stem '" + stem + "'");
        outputs.push_back(out_dir / (stem + "_glass.ppm"));
    }

    std::vector<SynthRecord> records(manifest.size());
    parallel_for(manifest.size(), workers, [&](std::size_t i) {
        const ManifestRecord& rec = manifest.records[i];
        const fs::path image_path = root / rec.path;
        const std::string stem = fs::path(rec.path).stem().string();
        const RasterImage image = read_image(image_path);
        const Mesh face = load_mesh(fs::path(a.meshes) / (stem + ".obj"), fs::path(a.meshes) / (stem + ".anchors"));
        SynthResult r = synthesize_one(image, face, cfg, i);
        write_ppm(r.image, outputs[i]);
        r.record.source_path = rec.path;
        r.record.output_path = outputs[i].filename().string();
        records[i] = std::move(r.record);
    });

    Manifest synthesized;
    std::size_t empty = 0;
    std::string record_text;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        synthesized.records.push_back({outputs[i].filename().string(), manifest.records[i].identity, GlassFlag::Glasses});
        record_text += format_synth_record(records[i]) + "\n";
        empty += records[i].empty_coverage ? 1 : 0;
    }
    {
        std::ofstream f(out_dir / "synth_records.tsv", std::ios::binary);
        f << record_text;
        if (!f)
            throw IoError("cannot write synth_records.tsv");
    }
    save_manifest(synthesized, out_dir / "synth_manifest.tsv");
    save_manifest(build_mixture_manifest(manifest, synthesized), out_dir / "mixture_manifest.tsv");
    std::printf("synthesized %zu images (%zu with empty coverage) into %s\n", manifest.size(), empty,
                out_dir.string().c_str());
    return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
    std::string manifest;
    std::string embeddings;
    std::string embedding_manifest;
    std::string protocol = "IV";
    std::string split_mode = "shared";
    std::string roc;
    std::string records;
    std::optional<std::uint64_t> seed;
};

int run_eval(const EvalArgs& a)
{
    if (!a.seed)
        throw UsageError("eval requires --seed");
    ProtocolId protocol;
    try {
        protocol = parse_protocol(a.protocol);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const SplitMode mode = a.split_mode == "disjoint" ? SplitMode::Disjoint : SplitMode::Shared;

    const Manifest manifest = load_manifest(a.manifest);
    const Manifest sidecar = a.embedding_manifest.empty() ? manifest : load_manifest(a.embedding_manifest);
    const EmbeddingLookup lookup = embedding_lookup(load_embeddings(a.embeddings), sidecar);

    const EvalSplit split = build_split(manifest, protocol, *a.seed, mode);
    const EvalReport report = evaluate(split, lookup);
    std::fputs(format_report(report).c_str(), stdout);
    for (const auto& id : report.excluded_identities)
        std::fprintf(stderr, "excluded identity: %s\n", id.c_str());

    if (!a.roc.empty()) {
        const ScoreMatrix m = score_matrix(split.gallery, split.probe, lookup);
        const ScoreLists s = split_scores(m, split.gallery, split.probe);
        roc_export(s.genuine, s.impostor, a.roc);
    }
    if (!a.records.empty()) {
        std::ofstream f(a.records, std::ios::binary);
        f << format_report_records(report);
        if (!f)
            throw IoError("cannot write '" + a.records + "'");
    }
    return 0;
}

// ---- toy-train -----------------------------------------------------------

struct ToyArgs {
    std::optional<std::uint64_t> seed;
    int steps = 500;
    double lr = 0.1;
    int dim = 8;
    int per_identity = 12;
    double separation = 1.0;
    double spread = 0.6;
};

int run_toy(const ToyArgs& a)
{
    if (!a.seed)
        throw UsageError("toy-train requires --seed");
    const auto points = make_gaussian_clusters(a.dim, a.per_identity, a.separation, a.spread, *a.seed);
    ToyTrainOptions opts;
    opts.steps = a.steps;
    opts.learning_rate = a.lr;
    const ToyTrainResult r = toy_train(points, opts);
    const TrainStep& first = r.history.front();
    const TrainStep& last = r.history.back();
    std::printf("step\tloss\tsimilarity_gap\n");
    const std::size_t stride = std::max<std::size_t>(1, r.history.size() / 10);
    for (std::size_t k = 0; k < r.history.size(); k += stride)
        std::printf("%zu\t%.9f\t%.9f\n", k, r.history[k].loss, r.history[k].similarity_gap);
    if ((r.history.size() - 1) % stride != 0)
        std::printf("%zu\t%.9f\t%.9f\n", r.history.size() - 1, last.loss, last.similarity_gap);
    std::printf("gap %s: %.9f -> %.9f\n", last.similarity_gap > first.similarity_gap ? "increased" : "did not increase",
                first.similarity_gap, last.similarity_gap);
    return 0;
}

// ---- schedule ------------------------------------------------------------

struct ScheduleArgs {
    std::string config;
    std::optional<double> lambda, p0, cap;
    std::uint64_t max_iteration = 60000;
    std::uint64_t step = 5000;
};

int run_schedule(const ScheduleArgs& a)
{
    SamplerSchedule s;
    if (!a.config.empty()) {
        const Config c = Config::load(a.config);
        c.reject_unknown(schedule_config_keys());
        apply_schedule_config(c, s);
    }
    if (a.lambda)
        s.lambda = *a.lambda;
    if (a.p0)
        s.p0 = *a.p0;
    if (a.cap)
        s.p_cap = *a.cap;
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (a.step == 0)
        throw UsageError("--step must be positive");
    std::printf("iteration\tp\n");
    for (std::uint64_t n = 0; n <= a.max_iteration; n += a.step)
        std::printf("%llu\t%.17g\n", static_cast<unsigned long long>(n), glass_probability(s, n));
    return 0;
}

// ---- fit -----------------------------------------------------------------

struct FitArgs {
    std::string glass;
    std::string glass_anchors;
    std::string asset = "rectangular";
    std::string face;
    std::string face_anchors;
    std::string mode = "full3d";
};

int run_fit(const FitArgs& a)
{
    Mesh glass;
    if (!a.glass.empty()) {
        glass = load_mesh(a.glass, a.glass_anchors.empty() ? fs::path(a.glass).replace_extension(".anchors")
                                                           : fs::path(a.glass_anchors));
    } else {
        bool found = false;
        for (FrameStyle style : {FrameStyle::Rectangular, FrameStyle::Rounded, FrameStyle::Browline,
                                 FrameStyle::Oversized}) {
            if (frame_style_name(style) == a.asset) {
                glass = make_eyeglass_asset(style);
                found = true;
            }
        }
        if (!found)
            throw UsageError("unknown asset '" + a.asset + "'");
    }
    const Mesh face =
        load_mesh(a.face, a.face_anchors.empty() ? fs::path(a.face).replace_extension(".anchors") : fs::path(a.face_anchors));
    if (a.mode != "full3d" && a.mode != "ortho2d")
        throw UsageError("--mode must be full3d or ortho2d");
    const Projection proj = a.mode == "full3d" ? Projection::full3d() : Projection::orthographic2d();
    const FitResult fit = fit_eyeglass(AnchorCorrespondence::from_meshes(glass, face), proj);
    std::printf("%s\n", format_fit_record(fit).c_str());
    if (!fit.converged) {
        std::fprintf(stderr, "glassynth: refinement did not converge after %d iterations\n", fit.iterations);
        return 3;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Eyeglass synthesis and face verification tooling"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Render eyeglasses onto manifest images");
    s->add_option("--faces", synth.manifest, "Face image manifest (path<TAB>identity<TAB>G|NG)")->required();
    s->add_option("--meshes", synth.meshes, "Directory of per-image face meshes <stem>.obj + <stem>.anchors")
        ->required();
    s->add_option("--out", synth.out, "Output directory; written paths are relative to it")->required();
    s->add_option("--image-root", synth.image_root, "Directory manifest paths are relative to");
    s->add_option("--config", synth.config, "key = value synthesis config");
    s->add_option("--seed", synth.seed, "Master seed")->required();
    s->add_option("--jobs", synth.workers, "Worker threads (0: all cores)");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Score a gallery/probe protocol from stored embeddings");
    e->add_option("--manifest", ev.manifest, "Test manifest")->required();
    e->add_option("--embeddings", ev.embeddings, "EMB1 embedding matrix")->required();
    e->add_option("--embedding-manifest", ev.embedding_manifest, "Manifest naming the embedding rows");
    e->add_option("--protocol", ev.protocol, "I, II, III or IV");
    e->add_option("--split-mode", ev.split_mode, "shared or disjoint")
        ->check(CLI::IsMember({"shared", "disjoint"}));
    e->add_option("--roc", ev.roc, "Write FAR,TPR points here");
    e->add_option("--records", ev.records, "Write key<TAB>value metrics here");
    e->add_option("--seed", ev.seed, "Split seed")->required();

    app.add_subcommand("shapes", "Print the ResNet-22 shape trace");

    ToyArgs toy;
    auto* t = app.add_subcommand("toy-train", "Train a linear embedding on two Gaussian clusters");
    t->add_option("--seed", toy.seed, "Cluster seed")->required();
    t->add_option("--steps", toy.steps)->check(CLI::NonNegativeNumber);
    t->add_option("--lr", toy.lr)->check(CLI::PositiveNumber);
    t->add_option("--dim", toy.dim)->check(CLI::PositiveNumber);
    t->add_option("--per-identity", toy.per_identity)->check(CLI::Range(2, 100000));
    t->add_option("--separation", toy.separation);
    t->add_option("--spread", toy.spread)->check(CLI::NonNegativeNumber);

    ScheduleArgs sched;
    auto* sc = app.add_subcommand("schedule", "Print the glass sampling probability over iterations");
    sc->add_option("--config", sched.config, "key = value schedule config");
    sc->add_option("--lambda", sched.lambda);
    sc->add_option("--p0", sched.p0);
    sc->add_option("--cap", sched.cap);
    sc->add_option("--max-iteration", sched.max_iteration);
    sc->add_option("--step", sched.step);

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit an eyeglass asset to one face mesh and print the record");
    f->add_option("--glass", fit.glass, "Eyeglass mesh (.obj); default is a procedural asset");
    f->add_option("--glass-anchors", fit.glass_anchors);
    f->add_option("--asset", fit.asset, "rectangular, rounded, browline or oversized");
    f->add_option("--face", fit.face, "Face mesh (.obj)")->required();
    f->add_option("--face-anchors", fit.face_anchors);
    f->add_option("--mode", fit.mode, "full3d or ortho2d");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*s)
            return run_synth(synth);
        if (*e)
            return run_eval(ev);
        if (app.got_subcommand("shapes")) {
            std::fputs(format_shape_table(resnet22_shape_trace()).c_str(), stdout);
            std::printf("weight layers: %d\n", resnet22_weight_layers());
            return 0;
        }
        if (*t)
            return run_toy(toy);
        if (*sc)
            return run_schedule(sched);
        if (*f)
            return run_fit(fit);
    } catch (const UsageError& err) {
        std::fprintf(stderr, "glassynth: %s\n", err.what());
        return 1;
    } catch (const DataError& err) {
        std::fprintf(stderr, "glassynth: data error: %s\n", err.what());
        return 2;
    } catch (const NumericalError& err) {
        std::fprintf(stderr, "glassynth: numerical error: %s\n", err.what());
        return 3;
    } catch (const std::exception& err) {
        // Library precondition failures on user-supplied data.
        std::fprintf(stderr, "glassynth: data error: %s\n", err.what());
        return 2;
    }
    return 1;
}

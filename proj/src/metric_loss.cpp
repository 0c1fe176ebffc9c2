#include "glassynth/metric_loss.hpp"

#include "glassynth/errors.hpp"
#include "glassynth/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace glassynth {

namespace {

constexpr double kMinNorm = 1e-12;

struct PairTerms {
    double dot = 0.0;
    double sq_a = 0.0;
    double sq_b = 0.0;
};

// Plain loops keep the reduction order fixed, so d(a, b) == d(b, a) bitwise
// and d(v, v) == 1 exactly.
PairTerms pair_terms(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("embedding dimensions differ: " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
    PairTerms t;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        t.dot += a[k] * b[k];
        t.sq_a += a[k] * a[k];
        t.sq_b += b[k] * b[k];
    }
    if (!(std::sqrt(t.sq_a) > kMinNorm) || !(std::sqrt(t.sq_b) > kMinNorm))
        throw std::invalid_argument("cosine similarity of a zero-norm vector");
    return t;
}

double norm_product(const PairTerms& t)
{
    const double prod = t.sq_a * t.sq_b;
    if (prod > 0.0 && std::isfinite(prod))
        return std::sqrt(prod);
    return std::sqrt(t.sq_a) * std::sqrt(t.sq_b);
}

double cosine_from_terms(const PairTerms& t)
{
    return std::clamp(t.dot / norm_product(t), -1.0, 1.0);
}

void check_fraction(double rho, const char* name)
{
    if (!(rho > 0.0 && rho <= 1.0))
        throw std::invalid_argument(std::string(name) + " must lie in (0, 1]");
}

std::size_t mined_count(double rho, std::size_t total)
{
    const auto n = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(total)));
    return std::min(std::max<std::size_t>(n, 1), total);
}

void check_sets(std::span<const Embedding> batch, const PairSets& sets)
{
    if (sets.positive.empty() || sets.negative.empty())
        throw std::invalid_argument("mining-contrastive loss needs nonempty positive and negative sets");
    auto check = [&](const IndexPair& p, bool same) {
        if (p.first >= batch.size() || p.second >= batch.size() || p.first == p.second)
            throw std::invalid_argument("pair index out of range");
        if ((batch[p.first].label == batch[p.second].label) != same)
            throw std::invalid_argument(same ? "positive pair with different labels"
                                             : "negative pair with equal labels");
    };
    for (const auto& p : sets.positive)
        check(p, true);
    for (const auto& p : sets.negative)
        check(p, false);
}

} // namespace

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return cosine_from_terms(pair_terms(a, b));
}

double pairwise_sum(std::span<const double> values)
{
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values)
            s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

AllPairs enumerate_pairs(std::span<const Embedding> batch)
{
    AllPairs out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        for (std::size_t j = i + 1; j < batch.size(); ++j) {
            const double d = cosine_similarity(batch[i].values, batch[j].values);
            (batch[i].label == batch[j].label ? out.positive : out.negative).push_back({{i, j}, d});
        }
    }
    return out;
}

PairSets mine_pairs(std::span<const Embedding> batch, double rho_p, double rho_n)
{
    check_fraction(rho_p, "rho_p");
    check_fraction(rho_n, "rho_n");
    AllPairs all = enumerate_pairs(batch);
    if (all.positive.empty())
        throw MiningError("batch has no positive pair (every identity appears once)");
    if (all.negative.empty())
        throw MiningError("batch has no negative pair (single identity)");

    std::stable_sort(all.positive.begin(), all.positive.end(), [](const auto& a, const auto& b) {
        return a.similarity < b.similarity || (a.similarity == b.similarity && a.pair < b.pair);
    });
    std::stable_sort(all.negative.begin(), all.negative.end(), [](const auto& a, const auto& b) {
        return a.similarity > b.similarity || (a.similarity == b.similarity && a.pair < b.pair);
    });

    PairSets sets;
    const std::size_t np = mined_count(rho_p, all.positive.size());
    const std::size_t nn = mined_count(rho_n, all.negative.size());
    for (std::size_t k = 0; k < np; ++k)
        sets.positive.push_back(all.positive[k].pair);
    for (std::size_t k = 0; k < nn; ++k)
        sets.negative.push_back(all.negative[k].pair);
    return sets;
}

double mining_contrastive_loss(std::span<const Embedding> batch, const PairSets& sets)
{
    check_sets(batch, sets);
    std::vector<double> pos, neg;
    pos.reserve(sets.positive.size());
    neg.reserve(sets.negative.size());
    for (const auto& [i, j] : sets.positive)
        pos.push_back(cosine_similarity(batch[i].values, batch[j].values));
    for (const auto& [i, j] : sets.negative)
        neg.push_back(cosine_similarity(batch[i].values, batch[j].values));
    const double p_term = pairwise_sum(pos) / (2.0 * static_cast<double>(pos.size()));
    const double n_term = pairwise_sum(neg) / (2.0 * static_cast<double>(neg.size()));
    return -p_term + n_term;
}

std::vector<Eigen::VectorXd> loss_gradient(std::span<const Embedding> batch, const PairSets& sets)
{
    check_sets(batch, sets);
    std::vector<Eigen::VectorXd> grad;
    grad.reserve(batch.size());
    for (const auto& e : batch)
        grad.push_back(Eigen::VectorXd::Zero(e.values.size()));

    auto accumulate = [&](const IndexPair& p, double coeff) {
        const Eigen::VectorXd& a = batch[p.first].values;
        const Eigen::VectorXd& b = batch[p.second].values;
        const PairTerms t = pair_terms(a, b);
        const double d = t.dot / norm_product(t);
        const double inv_ab = 1.0 / norm_product(t);
        grad[p.first] += coeff * (b * inv_ab - d * a / t.sq_a);
        grad[p.second] += coeff * (a * inv_ab - d * b / t.sq_b);
    };
    const double cp = -1.0 / (2.0 * static_cast<double>(sets.positive.size()));
    const double cn = 1.0 / (2.0 * static_cast<double>(sets.negative.size()));
    for (const auto& p : sets.positive)
        accumulate(p, cp);
    for (const auto& p : sets.negative)
        accumulate(p, cn);
    return grad;
}

namespace {

TrainStep evaluate_step(std::span<const Embedding> embedded, const PairSets& mined)
{
    const AllPairs all = enumerate_pairs(embedded);
    std::vector<double> pos, neg;
    for (const auto& p : all.positive)
        pos.push_back(p.similarity);
    for (const auto& p : all.negative)
        neg.push_back(p.similarity);
    const double gap = pairwise_sum(pos) / static_cast<double>(pos.size()) -
                       pairwise_sum(neg) / static_cast<double>(neg.size());
    return {mining_contrastive_loss(embedded, mined), gap};
}

} // namespace

ToyTrainResult toy_train(std::span<const Embedding> points, const ToyTrainOptions& options)
{
    if (points.empty())
        throw std::invalid_argument("toy_train needs points");
    if (options.steps < 0)
        throw std::invalid_argument("toy_train steps must be non-negative");
    const Eigen::Index dim = points.front().values.size();
    for (const auto& p : points) {
        if (p.values.size() != dim)
            throw std::invalid_argument("toy_train points must share one dimension");
    }

    ToyTrainResult result{Eigen::MatrixXd::Identity(dim, dim), {}};
    std::vector<Embedding> embedded(points.begin(), points.end());

    auto embed = [&] {
        for (std::size_t i = 0; i < points.size(); ++i)
            embedded[i].values = result.map * points[i].values;
    };

    try {
        for (int step = 0;; ++step) {
            embed();
            const PairSets mined = mine_pairs(embedded, options.rho_p, options.rho_n);
            const TrainStep record = evaluate_step(embedded, mined);
            if (!std::isfinite(record.loss) || !std::isfinite(record.similarity_gap))
                throw TrainingError("loss diverged at step " + std::to_string(step));
            result.history.push_back(record);
            if (step == options.steps)
                break;

            const std::vector<Eigen::VectorXd> grad = loss_gradient(embedded, mined);
            Eigen::MatrixXd grad_map = Eigen::MatrixXd::Zero(dim, dim);
            for (std::size_t i = 0; i < points.size(); ++i)
                grad_map += grad[i] * points[i].values.transpose();
            if (!grad_map.allFinite())
                throw TrainingError("gradient diverged at step " + std::to_string(step));
            result.map -= options.learning_rate * grad_map;
        }
    } catch (const std::invalid_argument& e) {
        // A collapsed (zero-norm) embedding ends training.
        throw TrainingError(std::string("training failed: ") + e.what());
    }
    return result;
}

std::vector<Embedding> make_gaussian_clusters(int dim, int per_identity, double separation, double spread,
                                              std::uint64_t seed)
{
    if (dim < 1 || per_identity < 1)
        throw std::invalid_argument("cluster dimension and size must be positive");
    Rng rng(seed);
    Eigen::VectorXd axis = Eigen::VectorXd::Zero(dim);
    axis[0] = 1.0;
    std::vector<Embedding> out;
    for (int id = 0; id < 2; ++id) {
        const Eigen::VectorXd mean = (id == 0 ? 0.5 : -0.5) * separation * axis;
        for (int k = 0; k < per_identity; ++k) {
            Embedding e;
            e.values.resize(dim);
            for (int c = 0; c < dim; ++c)
                e.values[c] = mean[c] + spread * standard_normal(rng);
            e.label = id == 0 ? "A" : "B";
            out.push_back(std::move(e));
        }
    }
    return out;
}

} // namespace glassynth

#pragma once

#include "glassynth/manifest.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace glassynth {

struct Embedding {
    Eigen::VectorXd values;
    std::string label;
    GlassFlag flag = GlassFlag::NoGlasses;
};

using IndexPair = std::pair<std::size_t, std::size_t>; // first < second

/// Hard positive (same label) and hard negative (different label) pairs.
struct PairSets {
    std::vector<IndexPair> positive;
    std::vector<IndexPair> negative;
};

/// (a . b) / (|a| |b|). Throws std::invalid_argument for a zero (<= 1e-12)
/// norm or mismatched dimensions.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct PairSimilarity {
    IndexPair pair;
    double similarity;
};

/// Every unordered pair of the batch split by label equality, in
/// lexicographic pair order.
struct AllPairs {
    std::vector<PairSimilarity> positive;
    std::vector<PairSimilarity> negative;
};
AllPairs enumerate_pairs(std::span<const Embedding> batch);

inline constexpr double kDefaultMiningFraction = 0.5;

/// Keeps the ceil(rho_p * |positives|) least similar positive pairs and the
/// ceil(rho_n * |negatives|) most similar negative pairs. Ties fall back to
/// lexicographic pair order. Returned sets are in selection order.
/// Throws MiningError when the batch has no positive or no negative pair and
/// std::invalid_argument when a fraction is outside (0, 1].
PairSets mine_pairs(std::span<const Embedding> batch, double rho_p = kDefaultMiningFraction,
                    double rho_n = kDefaultMiningFraction);

/// Mining-contrastive loss:
///   -1/(2|P|) sum_P d(f_i, f_j) + 1/(2|N|) sum_N d(f_i, f_j)
/// with d the cosine similarity; sums reduce pairwise in set order.
/// Throws std::invalid_argument when either set is empty.
double mining_contrastive_loss(std::span<const Embedding> batch, const PairSets& sets);

/// d loss / d f_k for every embedding of the batch, with the pair sets held
/// fixed.
std::vector<Eigen::VectorXd> loss_gradient(std::span<const Embedding> batch, const PairSets& sets);

/// Pairwise (tree) summation in index order.
double pairwise_sum(std::span<const double> values);

struct TrainStep {
    double loss;
    double similarity_gap; // mean positive similarity - mean negative similarity, all pairs
};

struct ToyTrainResult {
    Eigen::MatrixXd map;            // embedding = map * input
    std::vector<TrainStep> history; // steps + 1 entries; entry k is before update k
};

struct ToyTrainOptions {
    int steps = 500;
    double learning_rate = 0.1;
    double rho_p = kDefaultMiningFraction;
    double rho_n = kDefaultMiningFraction;
};

/// Full-batch gradient descent on a square linear embedding map starting at
/// the identity. Throws TrainingError when the loss becomes non-finite.
ToyTrainResult toy_train(std::span<const Embedding> points, const ToyTrainOptions& options);

/// Two labelled Gaussian clusters ("A", "B") in `dim` dimensions with means
/// at +/- separation/2 along the first axis. Centering at the origin matters:
/// with a shared offset every cosine starts near 1 and the mined loss is
/// minimized by collapsing all embeddings onto the offset.
std::vector<Embedding> make_gaussian_clusters(int dim, int per_identity, double separation, double spread,
                                              std::uint64_t seed);

} // namespace glassynth

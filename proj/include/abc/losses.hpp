#pragma once

// Objective functions with values and analytic gradients: triplet loss,
// Wasserstein critic/generator objectives, softmax cross-entropy, and the
// margin ladder.

#include <cstdint>
#include <utility>
#include <vector>

#include "abc/common.hpp"

namespace abc {

// Distance-gradient singularity guard at coincident points.
inline constexpr double kDistanceEpsilon = 1e-12;

struct TripletBatch {
    FeatureBatch anchors;
    FeatureBatch positives;
    FeatureBatch negatives;

    std::size_t size() const { return anchors.rows; }
    void validate() const;
};

struct TripletGrads {
    Matrix anchors;
    Matrix positives;
    Matrix negatives;
};

struct MarginSchedule {
    // (start_iteration, margin), start iterations strictly increasing,
    // first entry at iteration 0.
    std::vector<std::pair<uint64_t, double>> ladder;

    void validate() const;

    // CUHK03 ladder (0.2 / 0.3 / 0.4 / 0.5) with its 6000-iteration step
    // points rescaled to total_iters.
    static MarginSchedule scaled_default(uint64_t total_iters);
};

double euclidean(const double* a, const double* b, std::size_t dim);
double euclidean(const RealVector& a, const RealVector& b);

std::pair<double, TripletGrads> triplet_loss(const TripletBatch& batch, double alpha);

// value = mean(real) - mean(fake); the critic maximizes this. Gradients are
// of the value itself (callers negate for a minimization step).
struct ScoreObjective {
    double value;
    std::vector<double> grad_real;
    std::vector<double> grad_fake;
};
ScoreObjective critic_objective(const std::vector<double>& real_scores,
                                const std::vector<double>& fake_scores);

// value = -mean(fake); minimizing raises critic scores of extracted features.
std::pair<double, std::vector<double>> generator_objective(
    const std::vector<double>& fake_scores);

std::pair<double, Matrix> cross_entropy(const Matrix& logits,
                                        const std::vector<uint32_t>& labels);

double margin_at(const MarginSchedule& schedule, uint64_t iteration);

}  // namespace abc

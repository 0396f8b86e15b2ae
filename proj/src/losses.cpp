#include "abc/losses.hpp"

#include <algorithm>
#include <cmath>

namespace abc {

void TripletBatch::validate() const {
    if (!anchors.same_shape(positives) || !anchors.same_shape(negatives))
        fail(ErrorCode::invalid_argument, "TripletBatch: anchor/positive/negative shape mismatch");
    if (anchors.rows == 0)
        fail(ErrorCode::invalid_argument, "TripletBatch: empty batch");
}

void MarginSchedule::validate() const {
    if (ladder.empty() || ladder.front().first != 0)
        fail(ErrorCode::invalid_argument, "MarginSchedule: first entry must start at iteration 0");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (ladder[i].first <= ladder[i - 1].first)
            fail(ErrorCode::invalid_argument, "MarginSchedule: iterations must strictly increase");
    for (const auto& [it, alpha] : ladder)
        if (!(alpha > 0.0))
            fail(ErrorCode::invalid_argument, "MarginSchedule: margins must be positive");
}

MarginSchedule MarginSchedule::scaled_default(uint64_t total_iters) {
    // CUHK03: 0.2 at 0, 0.3 at 1000, 0.4 at 2500, 0.5 at 4000 over 6000 iters.
    MarginSchedule s;
    auto scale = [&](uint64_t it) { return it * total_iters / 6000; };
    s.ladder = {{0, 0.2}, {scale(1000), 0.3}, {scale(2500), 0.4}, {scale(4000), 0.5}};
    // Degenerate rescales (tiny runs) can collapse step points; keep the
    // last margin of each collapsed group.
    std::vector<std::pair<uint64_t, double>> dedup;
    for (const auto& e : s.ladder) {
        if (!dedup.empty() && dedup.back().first == e.first) dedup.back().second = e.second;
        else dedup.push_back(e);
    }
    s.ladder = std::move(dedup);
    s.validate();
    return s;
}

double euclidean(const double* a, const double* b, std::size_t dim) {
    double ss = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = a[j] - b[j];
        ss += d * d;
    }
    return std::sqrt(ss + kDistanceEpsilon);
}

double euclidean(const RealVector& a, const RealVector& b) {
    if (a.size() != b.size())
        fail(ErrorCode::invalid_argument, "euclidean: dimension mismatch");
    return euclidean(a.data(), b.data(), a.size());
}

std::pair<double, TripletGrads> triplet_loss(const TripletBatch& batch, double alpha) {
    batch.validate();
    const std::size_t n = batch.size();
    const std::size_t m = batch.anchors.cols;
    TripletGrads grads{Matrix(n, m), Matrix(n, m), Matrix(n, m)};
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* a = batch.anchors.row(i);
        const double* p = batch.positives.row(i);
        const double* q = batch.negatives.row(i);
        const double d_ap = euclidean(a, p, m);
        const double d_an = euclidean(a, q, m);
        const double h = d_ap - d_an + alpha;
        if (h <= 0.0) continue;  // inactive (hinge boundary takes subgradient 0)
        loss += h;
        const double s = 1.0 / double(n);
        double* ga = grads.anchors.row(i);
        double* gp = grads.positives.row(i);
        double* gq = grads.negatives.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double dap_j = (a[j] - p[j]) / d_ap;
            const double dan_j = (a[j] - q[j]) / d_an;
            ga[j] = s * (dap_j - dan_j);
            gp[j] = -s * dap_j;
            gq[j] = s * dan_j;
        }
    }
    return {loss / double(n), std::move(grads)};
}

ScoreObjective critic_objective(const std::vector<double>& real_scores,
                                const std::vector<double>& fake_scores) {
    if (real_scores.empty() || fake_scores.empty())
        fail(ErrorCode::invalid_argument, "critic_objective: empty score batch");
    double mr = 0.0, mf = 0.0;
    for (double x : real_scores) mr += x;
    for (double x : fake_scores) mf += x;
    mr /= double(real_scores.size());
    mf /= double(fake_scores.size());
    ScoreObjective out;
    out.value = mr - mf;
    out.grad_real.assign(real_scores.size(), 1.0 / double(real_scores.size()));
    out.grad_fake.assign(fake_scores.size(), -1.0 / double(fake_scores.size()));
    return out;
}

std::pair<double, std::vector<double>> generator_objective(
    const std::vector<double>& fake_scores) {
    if (fake_scores.empty())
        fail(ErrorCode::invalid_argument, "generator_objective: empty score batch");
    double mf = 0.0;
    for (double x : fake_scores) mf += x;
    mf /= double(fake_scores.size());
    return {-mf, std::vector<double>(fake_scores.size(), -1.0 / double(fake_scores.size()))};
}

std::pair<double, Matrix> cross_entropy(const Matrix& logits,
                                        const std::vector<uint32_t>& labels) {
    if (labels.size() != logits.rows)
        fail(ErrorCode::invalid_argument, "cross_entropy: label count mismatch");
    const std::size_t n = logits.rows;
    const std::size_t k = logits.cols;
    Matrix grad(n, k);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= k)
            fail(ErrorCode::invalid_argument, "cross_entropy: label out of range");
        const double* li = logits.row(i);
        const double mx = *std::max_element(li, li + k);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(li[j] - mx);
        const double log_sum = std::log(sum) + mx;
        loss += log_sum - li[labels[i]];
        double* gi = grad.row(i);
        for (std::size_t j = 0; j < k; ++j)
            gi[j] = (std::exp(li[j] - log_sum) - (j == labels[i] ? 1.0 : 0.0)) / double(n);
    }
    return {loss / double(n), std::move(grad)};
}

double margin_at(const MarginSchedule& schedule, uint64_t iteration) {
    schedule.validate();
    double alpha = schedule.ladder.front().second;
    for (const auto& [start, a] : schedule.ladder)
        if (start <= iteration) alpha = a;
    return alpha;
}

}  // namespace abc

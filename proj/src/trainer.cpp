#include "abc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <fstream>
#include <random>

#include "abc/losses.hpp"

namespace abc {

namespace {

std::vector<double> column(const Matrix& m) {
    if (m.cols != 1) fail(ErrorCode::invalid_argument, "expected a single-column matrix");
    return m.data;
}

Matrix as_column(const std::vector<double>& v) {
    Matrix m(v.size(), 1);
    m.data = v;
    return m;
}

void accumulate(Gradients& acc, const Gradients& g, double scale = 1.0) {
    for (std::size_t l = 0; l < acc.weights.size(); ++l) {
        for (std::size_t k = 0; k < acc.weights[l].data.size(); ++k)
            acc.weights[l].data[k] += scale * g.weights[l].data[k];
        for (std::size_t k = 0; k < acc.biases[l].size(); ++k)
            acc.biases[l][k] += scale * g.biases[l][k];
    }
}

Matrix stack3(const Matrix& a, const Matrix& b, const Matrix& c) {
    Matrix out(a.rows + b.rows + c.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
    std::copy(c.data.begin(), c.data.end(),
              out.data.begin() + a.data.size() + b.data.size());
    return out;
}

Matrix rows_slice(const Matrix& m, std::size_t begin, std::size_t count) {
    Matrix out(count, m.cols);
    std::copy(m.data.begin() + begin * m.cols, m.data.begin() + (begin + count) * m.cols,
              out.data.begin());
    return out;
}

// The critic scores rows in sorted-entry order. The code prior is
// exchangeable across bit positions, so the per-row multiset of entries
// carries all the distributional information; sorting makes per-position
// statistics equal quantile statistics and the critic does not waste
// capacity on coordinate identity. Gradients map back through the
// permutation.
struct SortedRows {
    Matrix sorted;
    std::vector<std::vector<std::size_t>> perm;  // sorted col -> source col
};

SortedRows sort_rows_descending(const Matrix& m) {
    SortedRows out;
    out.sorted = Matrix(m.rows, m.cols);
    out.perm.resize(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        auto& p = out.perm[i];
        p.resize(m.cols);
        for (std::size_t j = 0; j < m.cols; ++j) p[j] = j;
        const double* r = m.row(i);
        std::stable_sort(p.begin(), p.end(),
                         [r](std::size_t a, std::size_t b) { return r[a] > r[b]; });
        for (std::size_t j = 0; j < m.cols; ++j) out.sorted.at(i, j) = r[p[j]];
    }
    return out;
}

Matrix unsort_rows(const Matrix& grad_sorted, const std::vector<std::vector<std::size_t>>& perm) {
    Matrix out(grad_sorted.rows, grad_sorted.cols);
    for (std::size_t i = 0; i < grad_sorted.rows; ++i)
        for (std::size_t j = 0; j < grad_sorted.cols; ++j)
            out.at(i, perm[i][j]) = grad_sorted.at(i, j);
    return out;
}

Matrix codes_to_matrix(const BinaryCodeBatch& batch, double lambda) {
    Matrix m(batch.codes.size(), batch.length);
    for (std::size_t i = 0; i < batch.codes.size(); ++i) {
        const RealVector v = normalize_uniform(batch.codes[i], lambda);
        std::copy(v.begin(), v.end(), m.row(i));
    }
    return m;
}

}  // namespace

DenseNetSpec extractor_spec(const TrainConfig& config, uint32_t input_dim) {
    std::vector<uint32_t> sizes;
    sizes.push_back(input_dim);
    sizes.insert(sizes.end(), config.extractor_hidden.begin(), config.extractor_hidden.end());
    sizes.push_back(config.code_length);
    DenseNetSpec spec = DenseNetSpec::mlp(sizes, config.l2_normalize_enabled);
    // relu on the output layer too: code entries are non-negative by design
    spec.activations.back() = Activation::relu;
    return spec;
}

DenseNetSpec critic_spec(const TrainConfig& config) {
    std::vector<uint32_t> sizes;
    sizes.push_back(config.code_length);
    sizes.insert(sizes.end(), config.critic_hidden.begin(), config.critic_hidden.end());
    sizes.push_back(1);
    return DenseNetSpec::mlp(sizes, false);
}

ModelParams init_critic(const TrainConfig& config) {
    const CodePrior prior(config.code_length, config.bernoulli_p, config.lambda_mode);
    const double scale = 1.0 / normalization_factor(prior);
    return init_critic_params(critic_spec(config), config.rng_seed + 1, config.clip_c, scale);
}

PretrainReport pretrain(ModelParams& extractor, const DenseNetSpec& spec,
                        const IdentityDataset& ds, const TrainConfig& config) {
    config.validate();
    const uint32_t num_classes = ds.num_identities();

    // classification head: same layers, no l2 head, plus a linear layer to K
    DenseNetSpec head_spec = spec;
    head_spec.final_l2_normalize = false;
    head_spec.layer_sizes.push_back(num_classes);
    head_spec.activations.push_back(Activation::none);

    std::mt19937_64 rng(config.rng_seed ^ 0x9e3779b97f4a7c15ull);
    ModelParams head_init = init_params(head_spec, rng());
    ModelParams params;
    params.weights = extractor.weights;
    params.biases = extractor.biases;
    params.weights.push_back(head_init.weights.back());
    params.biases.push_back(head_init.biases.back());

    OptimConfig opt{OptimAlgo::sgd, config.extractor_lr_initial, 0.9, 1e-8};

    PretrainReport report;
    for (uint64_t it = 0; it < config.pretrain_iters; ++it) {
        auto [batch, labels] = sample_class_batch(ds, config.batch_size_pretrain, rng);
        ForwardTrace trace;
        const Matrix logits = forward(params, head_spec, batch, &trace);
        auto [loss, grad_logits] = cross_entropy(logits, labels);
        if (!std::isfinite(loss))
            fail(ErrorCode::numeric, "pretrain: training diverged (non-finite loss)");
        report.cee_loss.push_back(loss);
        Gradients grads = backward(params, head_spec, trace, grad_logits);
        optimizer_step(params, grads, opt);
    }

    // discard the classification head
    params.weights.pop_back();
    params.biases.pop_back();
    extractor.weights = std::move(params.weights);
    extractor.biases = std::move(params.biases);
    return report;
}

TrainReport train_joint(ModelParams& extractor, const DenseNetSpec& ext_spec,
                        ModelParams& critic, const DenseNetSpec& cr_spec,
                        const IdentityDataset& ds, const TrainConfig& config) {
    config.validate();
    const CodePrior prior(config.code_length, config.bernoulli_p, config.lambda_mode);
    const double lambda = normalization_factor(prior);
    std::size_t multi_view = 0;
    {
        std::map<uint32_t, std::set<uint16_t>> views;
        for (const auto& r : ds.records) views[r.identity].insert(r.view);
        for (const auto& [id, vs] : views)
            if (vs.size() >= 2) ++multi_view;
    }
    if (multi_view == 0)
        fail(ErrorCode::invalid_argument, "train_joint: no identity has two views");
    const std::size_t n_triplets =
        std::min(multi_view, std::max<std::size_t>(1, config.batch_size_joint / 3));

    // bring critic parameters inside the clip box without collapsing their
    // directions; truncation would freeze most weights at the boundary
    {
        const double mx = max_abs_param(critic);
        if (mx > config.clip_c) {
            const double s = config.clip_c / mx;
            for (auto& w : critic.weights)
                for (double& x : w.data) x *= s;
            for (auto& b : critic.biases)
                for (double& x : b) x *= s;
        }
    }

    std::mt19937_64 rng(config.rng_seed);
    TrainReport report;

    auto extractor_lr = [&](uint64_t it) {
        // initial rate for the first half of joint training, final after
        return it < config.joint_global_iters / 2 ? config.extractor_lr_initial
                                                  : config.extractor_lr_final;
    };

    auto critic_scores = [&](const Matrix& x, ForwardTrace* tr) {
        return column(forward(critic, cr_spec, x, tr));
    };

    auto generator_update = [&](const Matrix& inputs, double lr) {
        ForwardTrace tf;
        const Matrix feats = forward(extractor, ext_spec, inputs, &tf);
        const SortedRows sr = sort_rows_descending(feats);
        ForwardTrace tc;
        const auto scores = critic_scores(sr.sorted, &tc);
        auto [gval, gscore] = generator_objective(scores);
        for (double& g : gscore) g *= config.triplet_gan_weight;
        const Gradients critic_back = backward(critic, cr_spec, tc, as_column(gscore));
        Gradients ext_grads = backward(extractor, ext_spec, tf,
                                       unsort_rows(critic_back.inputs, sr.perm));
        optimizer_step(extractor, ext_grads, OptimConfig{OptimAlgo::sgd, lr, 0.9, 1e-8});
        return gval;
    };

    auto critic_update = [&]() {
        const BinaryCodeBatch codes = sample_codes(prior, config.batch_size_joint, rng());
        const Matrix real = codes_to_matrix(codes, lambda);
        auto [inputs, labels] = sample_class_batch(ds, config.batch_size_joint, rng);
        (void)labels;
        const Matrix fake = forward(extractor, ext_spec, inputs);
        ForwardTrace tr_real, tr_fake;
        const auto real_scores = critic_scores(sort_rows_descending(real).sorted, &tr_real);
        const auto fake_scores = critic_scores(sort_rows_descending(fake).sorted, &tr_fake);
        const ScoreObjective obj = critic_objective(real_scores, fake_scores);
        // maximize the Wasserstein estimate: descend on its negation
        std::vector<double> neg_real(obj.grad_real.size()), neg_fake(obj.grad_fake.size());
        for (std::size_t i = 0; i < neg_real.size(); ++i) neg_real[i] = -obj.grad_real[i];
        for (std::size_t i = 0; i < neg_fake.size(); ++i) neg_fake[i] = -obj.grad_fake[i];
        Gradients g = backward(critic, cr_spec, tr_real, as_column(neg_real));
        accumulate(g, backward(critic, cr_spec, tr_fake, as_column(neg_fake)));
        optimizer_step(critic, g,
                       OptimConfig{config.critic_optimizer, config.critic_lr,
                                   config.rmsprop_decay, 1e-8});
        clip_weights(critic, config.clip_c);
        ++report.critic_updates;
        return obj.value;
    };

    MarginSchedule schedule = config.margin_schedule;
    if (schedule.ladder.empty())
        schedule = MarginSchedule::scaled_default(config.joint_global_iters);

    for (uint64_t it = 0; it < config.joint_global_iters; ++it) {
        const double lr = extractor_lr(it);
        const double alpha = margin_at(schedule, it);

        TripletBatch batch = sample_triplet_batch(ds, n_triplets, rng);
        ForwardTrace ta, tp, tn;
        const Matrix fa = forward(extractor, ext_spec, batch.anchors, &ta);
        const Matrix fp = forward(extractor, ext_spec, batch.positives, &tp);
        const Matrix fn = forward(extractor, ext_spec, batch.negatives, &tn);

        auto [tl, tgrads] = triplet_loss(TripletBatch{fa, fp, fn}, alpha);
        if (!std::isfinite(tl))
            fail(ErrorCode::numeric, "train_joint: training diverged (non-finite triplet loss)");

        // generator term on critic scores of all extracted rows
        const Matrix stacked = stack3(fa, fp, fn);
        const SortedRows sr = sort_rows_descending(stacked);
        ForwardTrace tc;
        const auto fake_scores = critic_scores(sr.sorted, &tc);
        auto [gen_val, gen_grad] = generator_objective(fake_scores);
        const Gradients critic_back = backward(critic, cr_spec, tc, as_column(gen_grad));
        const Matrix gan_grads = unsort_rows(critic_back.inputs, sr.perm);
        const double w = config.triplet_gan_weight;

        Matrix grad_a = tgrads.anchors;
        Matrix grad_p = tgrads.positives;
        Matrix grad_n = tgrads.negatives;
        const std::size_t n = fa.rows;
        const Matrix ga_gan = rows_slice(gan_grads, 0, n);
        const Matrix gp_gan = rows_slice(gan_grads, n, n);
        const Matrix gn_gan = rows_slice(gan_grads, 2 * n, n);
        for (std::size_t k = 0; k < grad_a.data.size(); ++k) {
            grad_a.data[k] += w * ga_gan.data[k];
            grad_p.data[k] += w * gp_gan.data[k];
            grad_n.data[k] += w * gn_gan.data[k];
        }

        Gradients ext_grads = backward(extractor, ext_spec, ta, grad_a);
        accumulate(ext_grads, backward(extractor, ext_spec, tp, grad_p));
        accumulate(ext_grads, backward(extractor, ext_spec, tn, grad_n));
        optimizer_step(extractor, ext_grads, OptimConfig{OptimAlgo::sgd, lr, 0.9, 1e-8});

        // Wasserstein estimate for the report: sampled codes vs this batch
        const BinaryCodeBatch ref_codes = sample_codes(prior, fake_scores.size(), rng());
        const auto real_scores = critic_scores(
            sort_rows_descending(codes_to_matrix(ref_codes, lambda)).sorted, nullptr);
        const double critic_est = critic_objective(real_scores, fake_scores).value;

        report.entries.push_back({it, tl, critic_est, gen_val, alpha});
        ++report.global_iterations;

        if ((it + 1) % config.gan_block_every == 0) {
            for (uint64_t b = 0; b < config.gan_block_len; ++b) {
                for (uint64_t c = 0; c < config.critic_steps_per_gan_iter; ++c) critic_update();
                for (uint64_t g = 0; g < config.generator_steps_per_gan_iter; ++g) {
                    auto [inputs, labels] = sample_class_batch(ds, config.batch_size_joint, rng);
                    (void)labels;
                    generator_update(inputs, config.gan_generator_lr);
                    ++report.gan_generator_updates;
                }
            }
        }

        if (!config.checkpoint_prefix.empty() && config.checkpoint_every > 0 &&
            (it + 1) % config.checkpoint_every == 0) {
            save_checkpoint(extractor, ext_spec,
                            config.checkpoint_prefix + "_iter" + std::to_string(it + 1) + ".abcm");
        }
    }

    // final bit-balance statistic over the training set
    const EncodedDataset enc = encode_dataset(extractor, ext_spec, ds, lambda);
    uint64_t ones = 0;
    for (const auto& c : enc.codes.codes)
        for (uint32_t j = 0; j < c.length; ++j) ones += c.get(j);
    report.final_bit_mean =
        double(ones) / (double(enc.codes.codes.size()) * double(enc.codes.length));
    return report;
}

EncodedDataset encode_dataset(const ModelParams& extractor, const DenseNetSpec& spec,
                              const IdentityDataset& ds, double lambda) {
    if (ds.dim != spec.layer_sizes.front())
        fail(ErrorCode::invalid_argument, "encode_dataset: dataset dim does not match extractor");
    EncodedDataset out;
    out.real_features = forward(extractor, spec, ds.feature_matrix());
    out.codes.length = spec.layer_sizes.back();
    out.codes.codes.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        RealVector z(out.real_features.row(i), out.real_features.row(i) + out.real_features.cols);
        out.codes.codes.push_back(binarize(z, lambda));
        out.labels.push_back({ds.records[i].identity, ds.records[i].view});
    }
    return out;
}

void write_train_csv(const TrainReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) fail(ErrorCode::io, "write_train_csv: cannot open " + path);
    f << "iteration,triplet_loss,critic_estimate,generator_objective,margin\n";
    for (const auto& e : report.entries)
        f << e.iteration << "," << e.triplet_loss << "," << e.critic_estimate << ","
          << e.generator_objective << "," << e.margin << "\n";
    f << "# critic_updates=" << report.critic_updates
      << " gan_generator_updates=" << report.gan_generator_updates
      << " final_bit_mean=" << report.final_bit_mean << "\n";
    if (!f) fail(ErrorCode::io, "write_train_csv: write failed");
}

void write_pretrain_csv(const PretrainReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) fail(ErrorCode::io, "write_pretrain_csv: cannot open " + path);
    f << "iteration,cee_loss\n";
    for (std::size_t i = 0; i < report.cee_loss.size(); ++i)
        f << i << "," << report.cee_loss[i] << "\n";
    if (!f) fail(ErrorCode::io, "write_pretrain_csv: write failed");
}

}  // namespace abc

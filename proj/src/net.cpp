#include "abc/net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "abc/io_util.hpp"

namespace abc {

void DenseNetSpec::validate() const {
    if (layer_sizes.size() < 2)
        fail(ErrorCode::invalid_argument, "DenseNetSpec: need at least input and output sizes");
    for (uint32_t s : layer_sizes)
        if (s < 1) fail(ErrorCode::invalid_argument, "DenseNetSpec: all sizes must be >= 1");
    if (activations.size() != num_layers())
        fail(ErrorCode::invalid_argument, "DenseNetSpec: one activation per layer required");
}

DenseNetSpec DenseNetSpec::mlp(const std::vector<uint32_t>& sizes, bool l2_head) {
    DenseNetSpec spec;
    spec.layer_sizes = sizes;
    spec.activations.assign(sizes.size() - 1, Activation::relu);
    spec.activations.back() = Activation::none;
    spec.final_l2_normalize = l2_head;
    spec.validate();
    return spec;
}

void ModelParams::check_shapes(const DenseNetSpec& spec) const {
    if (weights.size() != spec.num_layers() || biases.size() != spec.num_layers())
        fail(ErrorCode::invalid_argument, "ModelParams: layer count mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows != spec.layer_sizes[l + 1] ||
            weights[l].cols != spec.layer_sizes[l] ||
            biases[l].size() != spec.layer_sizes[l + 1])
            fail(ErrorCode::invalid_argument, "ModelParams: shape mismatch at layer " +
                                                  std::to_string(l));
    }
}

ModelParams init_params(const DenseNetSpec& spec, uint64_t rng_seed) {
    spec.validate();
    std::mt19937_64 rng(rng_seed);
    ModelParams params;
    params.init_seed = rng_seed;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        const uint32_t fan_in = spec.layer_sizes[l];
        const uint32_t fan_out = spec.layer_sizes[l + 1];
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(double(fan_in)));
        Matrix w(fan_out, fan_in);
        for (double& x : w.data) x = dist(rng);
        params.weights.push_back(std::move(w));
        params.biases.emplace_back(fan_out, 0.0);
    }
    return params;
}

ModelParams init_critic_params(const DenseNetSpec& spec, uint64_t rng_seed, double clip_c,
                               double input_scale) {
    spec.validate();
    if (!(clip_c > 0.0) || !(input_scale > 0.0))
        fail(ErrorCode::invalid_argument, "init_critic_params: scales must be positive");
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> jitter(-0.02, 0.02);
    ModelParams params;
    params.init_seed = rng_seed;

    // (sign, threshold fraction, output weight fraction) per hidden variant.
    // The first three variants compose, per coordinate, the piecewise-linear
    // well -dist(z, {0, input_scale}); the rest start neutral and give the
    // adversarial refinement spare capacity.
    struct Variant {
        double sign, frac, out;
    };
    static const Variant variants[] = {
        {1.0, 0.0, -0.5}, {1.0, 0.5, 1.0},  {1.0, 1.0, -1.0},
        {-1.0, 0.5, 0.0}, {-1.0, 1.0, 0.0}, {1.0, 0.25, 0.0},
        {1.0, 0.75, 0.0}, {1.0, 1.25, 0.0}, {-1.0, 0.25, 0.0},
    };
    const std::size_t n_variants = sizeof(variants) / sizeof(variants[0]);

    std::vector<double> out_weight;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        const uint32_t fan_in = spec.layer_sizes[l];
        const uint32_t fan_out = spec.layer_sizes[l + 1];
        Matrix w(fan_out, fan_in);
        std::vector<double> b(fan_out, 0.0);
        if (l == 0) {
            out_weight.assign(fan_out, 0.0);
            for (uint32_t u = 0; u < fan_out; ++u) {
                const uint32_t j = u % fan_in;
                const Variant& v = variants[(u / fan_in) % n_variants];
                const double frac = v.frac + jitter(rng);
                w.at(u, j) = v.sign * clip_c;
                b[u] = -v.sign * clip_c * frac * input_scale;
                out_weight[u] = v.out * clip_c;
            }
        } else if (l + 1 < spec.num_layers()) {
            std::normal_distribution<double> dist(0.0, clip_c / 4.0);
            for (double& x : w.data) x = dist(rng);
        }
        if (l + 1 == spec.num_layers() && l == 1 && fan_out == 1) {
            for (uint32_t k = 0; k < fan_in && k < out_weight.size(); ++k)
                w.at(0, k) = out_weight[k];
        }
        params.weights.push_back(std::move(w));
        params.biases.push_back(std::move(b));
    }
    return params;
}

static void affine_forward(const Matrix& w, const std::vector<double>& b,
                           const Matrix& x, Matrix& out) {
    // out[i,o] = sum_k w[o,k] x[i,k] + b[o]
    out = Matrix(x.rows, w.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double* oi = out.row(i);
        for (std::size_t o = 0; o < w.rows; ++o) {
            const double* wo = w.row(o);
            double acc = b[o];
            for (std::size_t k = 0; k < w.cols; ++k) acc += wo[k] * xi[k];
            oi[o] = acc;
        }
    }
}

Matrix forward(const ModelParams& params, const DenseNetSpec& spec,
               const Matrix& batch, ForwardTrace* trace) {
    params.check_shapes(spec);
    if (batch.cols != spec.layer_sizes[0])
        fail(ErrorCode::invalid_argument, "forward: batch dim does not match input dim");

    Matrix cur = batch;
    ForwardTrace local;
    ForwardTrace& tr = trace ? *trace : local;
    tr = ForwardTrace{};
    tr.input = batch;

    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        Matrix z;
        affine_forward(params.weights[l], params.biases[l], cur, z);
        tr.pre_activations.push_back(z);
        if (spec.activations[l] == Activation::relu)
            for (double& x : z.data) x = x > 0.0 ? x : 0.0;
        tr.activations.push_back(z);
        cur = std::move(z);
    }

    if (!all_finite(cur))
        fail(ErrorCode::numeric, "forward: non-finite activations");

    if (spec.final_l2_normalize) {
        tr.pre_normalize = cur;
        for (std::size_t i = 0; i < cur.rows; ++i) {
            double* r = cur.row(i);
            double ss = 0.0;
            for (std::size_t j = 0; j < cur.cols; ++j) ss += r[j] * r[j];
            const double norm = std::sqrt(ss);
            if (!(norm > 1e-12))
                fail(ErrorCode::numeric, "forward: zero-norm row before l2 head");
            for (std::size_t j = 0; j < cur.cols; ++j) r[j] /= norm;
        }
    }
    return cur;
}

Gradients backward(const ModelParams& params, const DenseNetSpec& spec,
                   const ForwardTrace& trace, const Matrix& grad_outputs) {
    params.check_shapes(spec);
    const std::size_t L = spec.num_layers();
    if (trace.pre_activations.size() != L)
        fail(ErrorCode::invalid_argument, "backward: trace does not match spec");

    Matrix g = grad_outputs;

    if (spec.final_l2_normalize) {
        // y = z / |z|; dL/dz = (g - (g . y) y) / |z|
        const Matrix& z = trace.pre_normalize;
        if (!g.same_shape(z)) fail(ErrorCode::invalid_argument, "backward: grad shape mismatch");
        for (std::size_t i = 0; i < z.rows; ++i) {
            const double* zi = z.row(i);
            double* gi = g.row(i);
            double ss = 0.0;
            for (std::size_t j = 0; j < z.cols; ++j) ss += zi[j] * zi[j];
            const double norm = std::sqrt(ss);
            double dot = 0.0;
            for (std::size_t j = 0; j < z.cols; ++j) dot += gi[j] * zi[j] / norm;
            for (std::size_t j = 0; j < z.cols; ++j)
                gi[j] = (gi[j] - dot * zi[j] / norm) / norm;
        }
    } else if (!g.same_shape(trace.activations.back())) {
        fail(ErrorCode::invalid_argument, "backward: grad shape mismatch");
    }

    Gradients grads;
    grads.weights.resize(L);
    grads.biases.resize(L);

    for (std::size_t l = L; l-- > 0;) {
        if (spec.activations[l] == Activation::relu) {
            const Matrix& z = trace.pre_activations[l];
            for (std::size_t k = 0; k < g.data.size(); ++k)
                if (z.data[k] <= 0.0) g.data[k] = 0.0;
        }
        const Matrix& x = l == 0 ? trace.input : trace.activations[l - 1];
        const Matrix& w = params.weights[l];

        Matrix dw(w.rows, w.cols);
        std::vector<double> db(w.rows, 0.0);
        Matrix dx(x.rows, x.cols);
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double* xi = x.row(i);
            const double* gi = g.row(i);
            double* dxi = dx.row(i);
            for (std::size_t o = 0; o < w.rows; ++o) {
                const double go = gi[o];
                db[o] += go;
                const double* wo = w.row(o);
                double* dwo = dw.row(o);
                for (std::size_t k = 0; k < w.cols; ++k) {
                    dwo[k] += go * xi[k];
                    dxi[k] += go * wo[k];
                }
            }
        }
        grads.weights[l] = std::move(dw);
        grads.biases[l] = std::move(db);
        g = std::move(dx);
    }
    grads.inputs = std::move(g);
    return grads;
}

static void rmsprop_update(std::vector<double>& acc, const std::vector<double>& g,
                           std::vector<double>& w, const OptimConfig& c) {
    for (std::size_t k = 0; k < w.size(); ++k) {
        acc[k] = c.decay * acc[k] + (1.0 - c.decay) * g[k] * g[k];
        w[k] -= c.learning_rate * g[k] / (std::sqrt(acc[k]) + c.epsilon);
    }
}

void optimizer_step(ModelParams& params, const Gradients& grads, const OptimConfig& config) {
    for (const auto& gw : grads.weights)
        if (!all_finite(gw))
            fail(ErrorCode::numeric, "optimizer_step: non-finite gradients (training diverged)");
    for (const auto& gb : grads.biases)
        if (!all_finite(gb))
            fail(ErrorCode::numeric, "optimizer_step: non-finite gradients (training diverged)");

    if (config.algorithm == OptimAlgo::sgd) {
        for (std::size_t l = 0; l < params.weights.size(); ++l) {
            for (std::size_t k = 0; k < params.weights[l].data.size(); ++k)
                params.weights[l].data[k] -= config.learning_rate * grads.weights[l].data[k];
            for (std::size_t k = 0; k < params.biases[l].size(); ++k)
                params.biases[l][k] -= config.learning_rate * grads.biases[l][k];
        }
        return;
    }

    if (params.weight_acc.empty()) {
        for (const auto& w : params.weights)
            params.weight_acc.emplace_back(w.rows, w.cols);
        for (const auto& b : params.biases)
            params.bias_acc.emplace_back(b.size(), 0.0);
    }
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        rmsprop_update(params.weight_acc[l].data, grads.weights[l].data,
                       params.weights[l].data, config);
        rmsprop_update(params.bias_acc[l], grads.biases[l], params.biases[l], config);
    }
}

void clip_weights(ModelParams& params, double c) {
    if (!(c > 0.0)) fail(ErrorCode::invalid_argument, "clip_weights: c must be positive");
    auto clip = [c](double w) { return w < -c ? -c : (w > c ? c : w); };
    for (auto& w : params.weights)
        for (double& x : w.data) x = clip(x);
    for (auto& b : params.biases)
        for (double& x : b) x = clip(x);
}

double max_abs_param(const ModelParams& params) {
    double m = 0.0;
    for (const auto& w : params.weights)
        for (double x : w.data) m = std::max(m, std::abs(x));
    for (const auto& b : params.biases)
        for (double x : b) m = std::max(m, std::abs(x));
    return m;
}

double grad_check(const DenseNetSpec& spec, const ModelParams& params,
                  const LossFn& loss_fn, const Matrix& batch, double fd_step) {
    if (!(fd_step > 0.0)) fail(ErrorCode::invalid_argument, "grad_check: fd_step must be > 0");

    ForwardTrace trace;
    Matrix out = forward(params, spec, batch, &trace);
    auto [loss, grad_out] = loss_fn(out);
    (void)loss;
    Gradients analytic = backward(params, spec, trace, grad_out);

    ModelParams probe = params;
    auto loss_at = [&]() {
        Matrix o = forward(probe, spec, batch);
        return loss_fn(o).first;
    };

    double max_rel_err = 0.0;
    auto check_one = [&](double& param_ref, double analytic_g) {
        const double orig = param_ref;
        param_ref = orig + fd_step;
        const double lp = loss_at();
        param_ref = orig - fd_step;
        const double lm = loss_at();
        param_ref = orig;
        const double fd = (lp - lm) / (2.0 * fd_step);
        const double denom = std::max({std::abs(fd), std::abs(analytic_g), 1e-8});
        max_rel_err = std::max(max_rel_err, std::abs(fd - analytic_g) / denom);
    };

    for (std::size_t l = 0; l < probe.weights.size(); ++l) {
        for (std::size_t k = 0; k < probe.weights[l].data.size(); ++k)
            check_one(probe.weights[l].data[k], analytic.weights[l].data[k]);
        for (std::size_t k = 0; k < probe.biases[l].size(); ++k)
            check_one(probe.biases[l][k], analytic.biases[l][k]);
    }
    return max_rel_err;
}

static constexpr char kCheckpointMagic[4] = {'A', 'B', 'C', 'M'};

void save_checkpoint(const ModelParams& params, const DenseNetSpec& spec,
                     const std::string& path) {
    params.check_shapes(spec);
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io, "save_checkpoint: cannot open " + path);
    f.write(kCheckpointMagic, 4);
    io::write_u32(f, 1);
    io::write_u32(f, static_cast<uint32_t>(spec.layer_sizes.size()));
    for (uint32_t s : spec.layer_sizes) io::write_u32(f, s);
    for (Activation a : spec.activations) io::write_raw<uint8_t>(f, static_cast<uint8_t>(a));
    io::write_raw<uint8_t>(f, spec.final_l2_normalize ? 1 : 0);
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        for (double x : params.weights[l].data) io::write_f64(f, x);
        for (double x : params.biases[l]) io::write_f64(f, x);
    }
    if (!f) fail(ErrorCode::io, "save_checkpoint: write failed");
}

std::pair<ModelParams, DenseNetSpec> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::io, "load_checkpoint: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        fail(ErrorCode::format, "load_checkpoint: bad magic (expected ABCM)");
    if (io::read_u32(f) != 1)
        fail(ErrorCode::format, "load_checkpoint: unsupported version");
    DenseNetSpec spec;
    const uint32_t nsizes = io::read_u32(f);
    if (nsizes < 2 || nsizes > 64)
        fail(ErrorCode::format, "load_checkpoint: implausible layer count");
    spec.layer_sizes.resize(nsizes);
    for (auto& s : spec.layer_sizes) s = io::read_u32(f);
    spec.activations.resize(nsizes - 1);
    for (auto& a : spec.activations) {
        const uint8_t v = io::read_raw<uint8_t>(f);
        if (v > 1) fail(ErrorCode::format, "load_checkpoint: bad activation tag");
        a = static_cast<Activation>(v);
    }
    spec.final_l2_normalize = io::read_raw<uint8_t>(f) != 0;
    spec.validate();
    ModelParams params;
    for (std::size_t l = 0; l + 1 < nsizes; ++l) {
        Matrix w(spec.layer_sizes[l + 1], spec.layer_sizes[l]);
        for (double& x : w.data) x = io::read_f64(f);
        std::vector<double> b(spec.layer_sizes[l + 1]);
        for (double& x : b) x = io::read_f64(f);
        params.weights.push_back(std::move(w));
        params.biases.push_back(std::move(b));
    }
    if (!all_finite(params.weights.front()))
        fail(ErrorCode::format, "load_checkpoint: non-finite parameters");
    return {std::move(params), std::move(spec)};
}

}  // namespace abc

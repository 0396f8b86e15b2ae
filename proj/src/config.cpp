#include "abc/config.hpp"

#include <fstream>
#include <sstream>

namespace abc {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::vector<uint32_t> parse_sizes(const std::string& s) {
    std::vector<uint32_t> out;
    for (const auto& part : split(s, ',')) {
        const std::string t = trim(part);
        if (t.empty()) continue;
        out.push_back(static_cast<uint32_t>(std::stoul(t)));
    }
    return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::io, "config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::format, "config: line " + std::to_string(lineno) + " is not key=value");
        cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

std::string KeyValueConfig::dump() const {
    std::stringstream ss;
    for (const auto& [k, v] : values) ss << k << "=" << v << "\n";
    return ss.str();
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    if (key.empty()) fail(ErrorCode::format, "config: empty key");
    values[key] = value;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& def) const {
    auto it = values.find(key);
    return it == values.end() ? def : it->second;
}

int64_t KeyValueConfig::get_int(const std::string& key, int64_t def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    try {
        return std::stoll(it->second);
    } catch (...) {
        fail(ErrorCode::format, "config: key '" + key + "' is not an integer");
    }
}

uint64_t KeyValueConfig::get_uint(const std::string& key, uint64_t def) const {
    const int64_t v = get_int(key, static_cast<int64_t>(def));
    if (v < 0) fail(ErrorCode::format, "config: key '" + key + "' must be non-negative");
    return static_cast<uint64_t>(v);
}

double KeyValueConfig::get_double(const std::string& key, double def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    try {
        return std::stod(it->second);
    } catch (...) {
        fail(ErrorCode::format, "config: key '" + key + "' is not a number");
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool def) const {
    auto it = values.find(key);
    if (it == values.end()) return def;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(ErrorCode::format, "config: key '" + key + "' is not a boolean");
}

LambdaMode parse_lambda_mode(const std::string& s) {
    if (s == "norm-matching") return LambdaMode::norm_matching;
    if (s == "paper-literal") return LambdaMode::paper_literal;
    fail(ErrorCode::invalid_argument, "unknown lambda mode '" + s + "'");
}

std::string lambda_mode_name(LambdaMode mode) {
    return mode == LambdaMode::norm_matching ? "norm-matching" : "paper-literal";
}

MarginSchedule parse_margin_schedule(const std::string& s) {
    // "0:0.2,1000:0.3,2500:0.4,4000:0.5"
    MarginSchedule sched;
    for (const auto& part : split(s, ',')) {
        const std::string t = trim(part);
        if (t.empty()) continue;
        const auto colon = t.find(':');
        if (colon == std::string::npos)
            fail(ErrorCode::format, "margin schedule entry '" + t + "' is not iter:margin");
        sched.ladder.emplace_back(std::stoull(t.substr(0, colon)),
                                  std::stod(t.substr(colon + 1)));
    }
    sched.validate();
    return sched;
}

void TrainConfig::validate() const {
    if (code_length < 1) fail(ErrorCode::invalid_argument, "TrainConfig: code_length must be >= 1");
    if (gan_block_every < 1)
        fail(ErrorCode::invalid_argument, "TrainConfig: gan_block_every must be >= 1");
    if (batch_size_pretrain < 1 || batch_size_joint < 1)
        fail(ErrorCode::invalid_argument, "TrainConfig: batch sizes must be positive");
    if (!(clip_c > 0.0)) fail(ErrorCode::invalid_argument, "TrainConfig: clip_c must be positive");
    if (!(bernoulli_p > 0.0 && bernoulli_p <= 1.0))
        fail(ErrorCode::invalid_argument, "TrainConfig: bernoulli_p must be in (0,1]");
    if (critic_steps_per_gan_iter < 1 || generator_steps_per_gan_iter < 1 || gan_block_len < 1)
        fail(ErrorCode::invalid_argument, "TrainConfig: GAN schedule counts must be positive");
}

TrainConfig TrainConfig::from_kv(const KeyValueConfig& kv) {
    TrainConfig c;
    c.code_length = static_cast<uint32_t>(kv.get_uint("code_length", c.code_length));
    c.pretrain_iters = kv.get_uint("pretrain_iters", c.pretrain_iters);
    c.joint_global_iters = kv.get_uint("joint_global_iters", c.joint_global_iters);
    c.gan_block_every = kv.get_uint("gan_block_every", c.gan_block_every);
    c.gan_block_len = kv.get_uint("gan_block_len", c.gan_block_len);
    c.critic_steps_per_gan_iter =
        kv.get_uint("critic_steps_per_gan_iter", c.critic_steps_per_gan_iter);
    c.generator_steps_per_gan_iter =
        kv.get_uint("generator_steps_per_gan_iter", c.generator_steps_per_gan_iter);
    c.clip_c = kv.get_double("clip_c", c.clip_c);
    c.batch_size_pretrain = kv.get_uint("batch_size_pretrain", c.batch_size_pretrain);
    c.batch_size_joint = kv.get_uint("batch_size_joint", c.batch_size_joint);
    c.extractor_lr_initial = kv.get_double("extractor_lr_initial", c.extractor_lr_initial);
    c.extractor_lr_final = kv.get_double("extractor_lr_final", c.extractor_lr_final);
    c.critic_lr = kv.get_double("critic_lr", c.critic_lr);
    c.gan_generator_lr = kv.get_double("gan_generator_lr", c.gan_generator_lr);
    if (kv.has("critic_optimizer")) {
        const std::string name = kv.get_string("critic_optimizer", "");
        if (name == "sgd") c.critic_optimizer = OptimAlgo::sgd;
        else if (name == "rmsprop") c.critic_optimizer = OptimAlgo::rmsprop;
        else fail(ErrorCode::format, "critic_optimizer must be sgd or rmsprop: " + name);
    }
    c.rmsprop_decay = kv.get_double("rmsprop_decay", c.rmsprop_decay);
    if (kv.has("margin_schedule"))
        c.margin_schedule = parse_margin_schedule(kv.get_string("margin_schedule", ""));
    c.bernoulli_p = kv.get_double("bernoulli_p", c.bernoulli_p);
    c.lambda_mode = parse_lambda_mode(kv.get_string("lambda_mode", "norm-matching"));
    c.l2_normalize_enabled = kv.get_bool("l2_normalize", c.l2_normalize_enabled);
    c.triplet_gan_weight = kv.get_double("triplet_gan_weight", c.triplet_gan_weight);
    c.checkpoint_every = kv.get_uint("checkpoint_every", c.checkpoint_every);
    c.checkpoint_prefix = kv.get_string("checkpoint_prefix", c.checkpoint_prefix);
    if (kv.has("extractor_hidden"))
        c.extractor_hidden = parse_sizes(kv.get_string("extractor_hidden", ""));
    if (kv.has("critic_hidden"))
        c.critic_hidden = parse_sizes(kv.get_string("critic_hidden", ""));
    c.rng_seed = kv.get_uint("rng_seed", c.rng_seed);
    c.validate();
    return c;
}

SynthConfig synth_config_from_kv(const KeyValueConfig& kv) {
    SynthConfig c;
    c.num_identities = static_cast<uint32_t>(kv.get_uint("synth_num_identities", c.num_identities));
    c.views_per_identity =
        static_cast<uint32_t>(kv.get_uint("synth_views_per_identity", c.views_per_identity));
    c.samples_per_view =
        static_cast<uint32_t>(kv.get_uint("synth_samples_per_view", c.samples_per_view));
    c.input_dim = static_cast<uint32_t>(kv.get_uint("synth_input_dim", c.input_dim));
    c.intra_identity_noise_sigma =
        kv.get_double("synth_noise_sigma", c.intra_identity_noise_sigma);
    c.view_offset_sigma = kv.get_double("synth_view_sigma", c.view_offset_sigma);
    c.rng_seed = kv.get_uint("rng_seed", c.rng_seed);
    c.validate();
    return c;
}

}  // namespace abc

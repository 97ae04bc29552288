#include "mixpipe/config.hpp"

#include <charconv>
#include <ostream>

#include "mixpipe/io.hpp"

namespace mixpipe {

Strategy strategy_from_string(const std::string& s) {
    if (s == "random") return Strategy::Random;
    if (s == "hard") return Strategy::Hard;
    if (s == "soft") return Strategy::Soft;
    if (s == "mean") return Strategy::Mean;
    if (s == "median") return Strategy::Median;
    fail(Errc::ParseError, "unknown strategy '" + s + "'");
}

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Random: return "random";
        case Strategy::Hard: return "hard";
        case Strategy::Soft: return "soft";
        case Strategy::Mean: return "mean";
        default: return "median";
    }
}

namespace {

double parse_double_v(const std::string& v, int line_no) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        fail(Errc::ParseError, "line " + std::to_string(line_no) + ": bad number '" + v + "'");
    }
}

std::uint64_t parse_u64_v(const std::string& v, int line_no) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        fail(Errc::ParseError,
             "line " + std::to_string(line_no) + ": bad unsigned integer '" + v + "'");
    return out;
}

std::uint32_t parse_u32_v(const std::string& v, int line_no) {
    return static_cast<std::uint32_t>(parse_u64_v(v, line_no));
}

bool parse_bool_v(const std::string& v, int line_no) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(Errc::ParseError, "line " + std::to_string(line_no) + ": bad bool '" + v + "'");
}

} // namespace

void PipelineConfig::apply(const std::string& key, const std::string& value, int line_no) {
    if (key == "tau_rel") tau_rel = parse_double_v(value, line_no);
    else if (key == "tau_remove") tau_remove = parse_double_v(value, line_no);
    else if (key == "tau_merge") tau_merge = parse_double_v(value, line_no);
    else if (key == "alpha") alpha = parse_double_v(value, line_no);
    else if (key == "k_per_pid") k_per_pid = parse_u32_v(value, line_no);
    else if (key == "lambda_momentum") lambda_momentum = parse_double_v(value, line_no);
    else if (key == "n_p") n_p = parse_u32_v(value, line_no);
    else if (key == "n_k") n_k = parse_u32_v(value, line_no);
    else if (key == "queue_epochs") queue_epochs = parse_u32_v(value, line_no);
    else if (key == "iterations_per_epoch") iterations_per_epoch = parse_u32_v(value, line_no);
    else if (key == "w_ins") loss_weights.w_ins = parse_double_v(value, line_no);
    else if (key == "w_aug") loss_weights.w_aug = parse_double_v(value, line_no);
    else if (key == "w_cen") loss_weights.w_cen = parse_double_v(value, line_no);
    else if (key == "w_cc") loss_weights.w_cc = parse_double_v(value, line_no);
    else if (key == "strategy") strategy = strategy_from_string(value);
    else if (key == "seed") seed = parse_u64_v(value, line_no);
    else if (key == "epochs") epochs = parse_u32_v(value, line_no);
    else if (key == "learning_rate") learning_rate = parse_double_v(value, line_no);
    else if (key == "temperature") temperature = parse_double_v(value, line_no);
    else if (key == "aug_sigma") aug_sigma = parse_double_v(value, line_no);
    else if (key == "encoder_dim") encoder_dim = parse_u32_v(value, line_no);
    else if (key == "merge_before_ema") merge_before_ema = parse_bool_v(value, line_no);
    else if (key == "momentum_per_epoch") momentum_per_epoch = parse_bool_v(value, line_no);
    else if (key == "fresh_centroids") fresh_centroids = parse_bool_v(value, line_no);
    else
        fail(Errc::ParseError,
             "line " + std::to_string(line_no) + ": unknown config key '" + key + "'");
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    PipelineConfig cfg;
    for (const auto& e : read_kv_file(path)) cfg.apply(e.key, e.value, e.line_no);
    cfg.validate();
    return cfg;
}

void PipelineConfig::validate() const {
    if (!(0.0 <= tau_remove && tau_remove <= tau_rel && tau_rel <= 1.0))
        fail(Errc::ValidationError, "need 0 <= tau_remove <= tau_rel <= 1");
    if (!(tau_merge >= 0.0 && tau_merge <= 1.0))
        fail(Errc::ValidationError, "tau_merge out of [0,1]");
    if (!(alpha > 0.0 && alpha < 1.0))
        fail(Errc::ValidationError, "alpha must lie strictly inside (0,1)");
    if (!(lambda_momentum > 0.0 && lambda_momentum < 1.0))
        fail(Errc::ValidationError, "lambda_momentum must lie strictly inside (0,1)");
    if (n_p < 1 || n_k < 1 || k_per_pid < 1)
        fail(Errc::ValidationError, "n_p, n_k, k_per_pid must be >= 1");
    if (learning_rate <= 0.0) fail(Errc::ValidationError, "learning_rate must be > 0");
    if (temperature <= 0.0) fail(Errc::ValidationError, "temperature must be > 0");
    if (aug_sigma < 0.0) fail(Errc::ValidationError, "aug_sigma must be >= 0");
    if (encoder_dim < 1) fail(Errc::ValidationError, "encoder_dim must be >= 1");
}

void PipelineConfig::save(std::ostream& os) const {
    os << "tau_rel = " << format_double(tau_rel) << '\n';
    os << "tau_remove = " << format_double(tau_remove) << '\n';
    os << "tau_merge = " << format_double(tau_merge) << '\n';
    os << "alpha = " << format_double(alpha) << '\n';
    os << "k_per_pid = " << k_per_pid << '\n';
    os << "lambda_momentum = " << format_double(lambda_momentum) << '\n';
    os << "n_p = " << n_p << '\n';
    os << "n_k = " << n_k << '\n';
    os << "queue_epochs = " << queue_epochs << '\n';
    os << "iterations_per_epoch = " << iterations_per_epoch << '\n';
    os << "w_ins = " << format_double(loss_weights.w_ins) << '\n';
    os << "w_aug = " << format_double(loss_weights.w_aug) << '\n';
    os << "w_cen = " << format_double(loss_weights.w_cen) << '\n';
    os << "w_cc = " << format_double(loss_weights.w_cc) << '\n';
    os << "strategy = " << strategy_name(strategy) << '\n';
    os << "seed = " << seed << '\n';
    os << "epochs = " << epochs << '\n';
    os << "learning_rate = " << format_double(learning_rate) << '\n';
    os << "temperature = " << format_double(temperature) << '\n';
    os << "aug_sigma = " << format_double(aug_sigma) << '\n';
    os << "encoder_dim = " << encoder_dim << '\n';
    os << "merge_before_ema = " << (merge_before_ema ? "true" : "false") << '\n';
    os << "momentum_per_epoch = " << (momentum_per_epoch ? "true" : "false") << '\n';
    os << "fresh_centroids = " << (fresh_centroids ? "true" : "false") << '\n';
}

} // namespace mixpipe

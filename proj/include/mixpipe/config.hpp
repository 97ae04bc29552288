#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "mixpipe/errors.hpp"

namespace mixpipe {

enum class Strategy { Random, Hard, Soft, Mean, Median };

Strategy strategy_from_string(const std::string& s);
const char* strategy_name(Strategy s);

struct LossWeights {
    double w_ins = 1.0;
    double w_aug = 1.0;
    double w_cen = 1.0;
    double w_cc = 0.5;
};

// Pipeline defaults; the documented values are the recommended operating
// point, everything is overridable from the config file.
struct PipelineConfig {
    double tau_rel = 0.6;
    double tau_remove = 0.5;
    double tau_merge = 0.8;
    double alpha = 0.3;
    std::uint32_t k_per_pid = 4;
    double lambda_momentum = 0.999;
    std::uint32_t n_p = 8;
    std::uint32_t n_k = 4;
    std::uint32_t queue_epochs = 30;
    std::uint32_t iterations_per_epoch = 400;
    LossWeights loss_weights;
    Strategy strategy = Strategy::Median;
    std::uint64_t seed = 0;

    // Training-loop knobs (toy encoder).
    std::uint32_t epochs = 20;
    double learning_rate = 0.05;
    double temperature = 0.1;
    double aug_sigma = 0.05;
    std::uint32_t encoder_dim = 16;

    // Pipeline-order switches, default off / per-iteration.
    bool merge_before_ema = false;
    bool momentum_per_epoch = false;
    bool fresh_centroids = false;

    void validate() const;  // throws ValidationError on bad ranges

    // `key = value` text; unknown keys are errors.  Missing keys keep
    // defaults.
    static PipelineConfig load(const std::string& path);
    void apply(const std::string& key, const std::string& value, int line_no);
    void save(std::ostream& os) const;
};

} // namespace mixpipe

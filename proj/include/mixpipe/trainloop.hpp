#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mixpipe/centroids.hpp"
#include "mixpipe/config.hpp"
#include "mixpipe/features.hpp"
#include "mixpipe/relabel.hpp"
#include "mixpipe/types.hpp"

namespace mixpipe {

// Affine toy encoder standing in for the backbone; gradients are analytic.
struct EncoderParams {
    std::size_t d_in = 0;
    std::size_t d_out = 0;
    MatrixD weights;            // d_out x d_in
    std::vector<double> bias;   // d_out

    static EncoderParams random_init(std::size_t d_in, std::size_t d_out,
                                     std::mt19937_64& rng);
    void validate() const;
    bool operator==(const EncoderParams&) const = default;
};

MatrixD encode(const EncoderParams& params, const EmbeddingMatrix& raw);
EmbeddingMatrix encode_f32(const EncoderParams& params, const EmbeddingMatrix& raw);

// theta_m <- lambda*theta_m + (1-lambda)*theta_e, elementwise.
void momentum_update(EncoderParams& theta_m, const EncoderParams& theta_e, double lambda);

// Encoder file: one embedding binary, dim = d_out, rows = d_in + 1; row i
// holds the weights of input coordinate i, the last row is the bias.
void write_encoder(const EncoderParams& params, const std::string& path);
EncoderParams read_encoder(const std::string& path);

// FeatureSource that runs raw rows through the (live) momentum encoder.
class EncoderFeatures : public FeatureSource {
public:
    EncoderFeatures(const DatasetManifest& manifest, const EmbeddingMatrix& raw,
                    const EncoderParams& params)
        : manifest_(manifest), raw_(raw), params_(params) {}

    std::uint32_t dim() const override { return static_cast<std::uint32_t>(params_.d_out); }
    EmbeddingMatrix embed(std::span<const SampleId> ids) override;
    std::uint64_t ops_count() const override { return ops_; }

private:
    const DatasetManifest& manifest_;
    const EmbeddingMatrix& raw_;
    const EncoderParams& params_;
    std::uint64_t ops_ = 0;
};

struct LossResult {
    double value = 0.0;
    MatrixD grad;       // d/d embeddings
    MatrixD grad_aug;   // d/d augmented embeddings (augmentation loss only)
};

// Batch rows are keyed by an id unique across the two pid namespaces
// ((pid << 1) | source_bit works); keys act as class labels.

// Supervised contrastive pull toward every same-key row in the batch.
LossResult instance_loss(const MatrixD& emb, const std::vector<std::int64_t>& keys,
                         double temperature);

// Each row attracts its own augmented view; other keys' views repel.
LossResult augmentation_loss(const MatrixD& emb, const MatrixD& aug,
                             const std::vector<std::int64_t>& keys, double temperature);

// Softmax over the batch keys' stored centroids (constants).
LossResult centroids_loss(const MatrixD& emb, const std::vector<std::int64_t>& keys,
                          const std::map<std::int64_t, std::vector<double>>& centroids,
                          double temperature);

// Pulls each row toward its identity's other-camera in-batch centroids;
// rows with camera < 0 sit out.  Gradient flows through the centroids.
LossResult camera_centroids_loss(const MatrixD& emb, const std::vector<std::int64_t>& keys,
                                 const std::vector<std::int64_t>& cameras,
                                 double temperature);

struct LossBreakdown {
    double l_ins = 0.0;
    double l_aug = 0.0;
    double l_cen = 0.0;
    double l_cc = 0.0;
    double total = 0.0;
};

LossBreakdown total_loss(double l_ins, double l_aug, double l_cen, double l_cc,
                         const LossWeights& weights);

struct LossCurveRow {
    std::uint32_t epoch = 0;
    std::uint32_t iteration = 0;
    LossBreakdown loss;
};

struct TrainResult {
    EncoderParams theta_e;
    EncoderParams theta_m;
    std::vector<RefinementReport> reports;
    std::vector<LossCurveRow> curve;
    DatasetManifest final_manifest;
    CentroidsMemory final_memory;
};

TrainResult run_training(const DatasetManifest& manifest, const EmbeddingMatrix& raw,
                         const PipelineConfig& config);

} // namespace mixpipe

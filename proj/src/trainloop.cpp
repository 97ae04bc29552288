#include "mixpipe/trainloop.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mixpipe/io.hpp"
#include "mixpipe/sampler.hpp"
#include "mixpipe/similarity.hpp"
#include "mixpipe/util.hpp"

namespace mixpipe {

namespace {

constexpr double kNormFloor = 1e-12;

struct NormalizedRows {
    MatrixD z;                  // unit rows
    std::vector<double> norm;
};

NormalizedRows normalize_rows(const MatrixD& e) {
    NormalizedRows out;
    out.z = MatrixD(e.rows, e.cols);
    out.norm.resize(e.rows);
    for (std::size_t i = 0; i < e.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < e.cols; ++j) s += e.at(i, j) * e.at(i, j);
        const double n = std::sqrt(s);
        if (n < kNormFloor)
            fail(Errc::ZeroNormVector, "batch row " + std::to_string(i) + " has zero norm");
        out.norm[i] = n;
        for (std::size_t j = 0; j < e.cols; ++j) out.z.at(i, j) = e.at(i, j) / n;
    }
    return out;
}

// dL/de_i = (g_i - (z_i . g_i) z_i) / ||e_i||, accumulated into ge
void backprop_normalize(const NormalizedRows& nz, const MatrixD& gz, MatrixD& ge) {
    for (std::size_t i = 0; i < nz.z.rows; ++i) {
        double zg = 0.0;
        for (std::size_t j = 0; j < nz.z.cols; ++j) zg += nz.z.at(i, j) * gz.at(i, j);
        for (std::size_t j = 0; j < nz.z.cols; ++j)
            ge.at(i, j) += (gz.at(i, j) - zg * nz.z.at(i, j)) / nz.norm[i];
    }
}

void require_contrastive_batch(const std::vector<std::int64_t>& keys) {
    std::map<std::int64_t, std::size_t> counts;
    for (auto k : keys) ++counts[k];
    if (counts.size() < 2)
        fail(Errc::DegenerateBatch, "contrastive batch needs at least 2 identities");
    for (const auto& [k, c] : counts)
        if (c < 2)
            fail(Errc::DegenerateBatch,
                 "identity key " + std::to_string(k) + " has a single sample");
}

std::vector<double> normalize_vec(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    const double n = std::sqrt(s);
    if (n < kNormFloor) fail(Errc::ZeroNormVector, "zero-norm centroid");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return out;
}

} // namespace

EncoderParams EncoderParams::random_init(std::size_t d_in, std::size_t d_out,
                                         std::mt19937_64& rng) {
    EncoderParams p;
    p.d_in = d_in;
    p.d_out = d_out;
    p.weights = MatrixD(d_out, d_in);
    p.bias.assign(d_out, 0.0);
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(d_in)));
    for (double& w : p.weights.values) w = gauss(rng);
    return p;
}

void EncoderParams::validate() const {
    if (weights.rows != d_out || weights.cols != d_in || bias.size() != d_out)
        fail(Errc::ShapeMismatch, "encoder parameter shapes disagree");
    for (double w : weights.values)
        if (!std::isfinite(w)) fail(Errc::ValidationError, "non-finite encoder weight");
    for (double b : bias)
        if (!std::isfinite(b)) fail(Errc::ValidationError, "non-finite encoder bias");
}

MatrixD encode(const EncoderParams& params, const EmbeddingMatrix& raw) {
    if (raw.dim != params.d_in)
        fail(Errc::DimMismatch, "encoder expects dim " + std::to_string(params.d_in) +
                                    ", got " + std::to_string(raw.dim));
    MatrixD out(raw.rows(), params.d_out);
    for (std::size_t r = 0; r < raw.rows(); ++r) {
        const auto row = raw.row(r);
        for (std::size_t o = 0; o < params.d_out; ++o) {
            double acc = params.bias[o];
            for (std::size_t i = 0; i < params.d_in; ++i)
                acc += params.weights.at(o, i) * static_cast<double>(row[i]);
            out.at(r, o) = acc;
        }
    }
    return out;
}

EmbeddingMatrix encode_f32(const EncoderParams& params, const EmbeddingMatrix& raw) {
    const MatrixD d = encode(params, raw);
    EmbeddingMatrix out(static_cast<std::uint32_t>(params.d_out));
    for (std::size_t r = 0; r < d.rows; ++r) out.append_row(d.row(r));
    return out;
}

void momentum_update(EncoderParams& theta_m, const EncoderParams& theta_e, double lambda) {
    if (theta_m.d_in != theta_e.d_in || theta_m.d_out != theta_e.d_out)
        fail(Errc::ShapeMismatch, "momentum update on mismatched encoder shapes");
    if (lambda < 0.0 || lambda > 1.0)
        fail(Errc::ValidationError, "lambda out of [0,1]");
    for (std::size_t i = 0; i < theta_m.weights.values.size(); ++i)
        theta_m.weights.values[i] =
            lambda * theta_m.weights.values[i] + (1.0 - lambda) * theta_e.weights.values[i];
    for (std::size_t i = 0; i < theta_m.bias.size(); ++i)
        theta_m.bias[i] = lambda * theta_m.bias[i] + (1.0 - lambda) * theta_e.bias[i];
}

void write_encoder(const EncoderParams& params, const std::string& path) {
    EmbeddingMatrix m(static_cast<std::uint32_t>(params.d_out));
    std::vector<float> row(params.d_out);
    for (std::size_t i = 0; i < params.d_in; ++i) {
        for (std::size_t o = 0; o < params.d_out; ++o)
            row[o] = static_cast<float>(params.weights.at(o, i));
        m.append_row(std::span<const float>(row));
    }
    for (std::size_t o = 0; o < params.d_out; ++o)
        row[o] = static_cast<float>(params.bias[o]);
    m.append_row(std::span<const float>(row));
    write_embeddings(m, path);
}

EncoderParams read_encoder(const std::string& path) {
    const EmbeddingMatrix m = read_embeddings(path);
    if (m.rows() < 1) fail(Errc::TruncatedFile, path + ": encoder file has no rows");
    EncoderParams p;
    p.d_out = m.dim;
    p.d_in = m.rows() - 1;
    p.weights = MatrixD(p.d_out, p.d_in);
    p.bias.resize(p.d_out);
    for (std::size_t i = 0; i < p.d_in; ++i) {
        const auto row = m.row(i);
        for (std::size_t o = 0; o < p.d_out; ++o)
            p.weights.at(o, i) = static_cast<double>(row[o]);
    }
    const auto last = m.row(p.d_in);
    for (std::size_t o = 0; o < p.d_out; ++o) p.bias[o] = static_cast<double>(last[o]);
    return p;
}

EmbeddingMatrix EncoderFeatures::embed(std::span<const SampleId> ids) {
    EmbeddingMatrix rows(raw_.dim);
    for (SampleId id : ids) rows.append_row(raw_.row(manifest_.row_of(id)));
    ops_ += ids.size();
    return encode_f32(params_, rows);
}

LossResult instance_loss(const MatrixD& emb, const std::vector<std::int64_t>& keys,
                         double temperature) {
    if (keys.size() != emb.rows) fail(Errc::ShapeMismatch, "keys/rows mismatch");
    require_contrastive_batch(keys);
    const std::size_t n = emb.rows;
    const double T = temperature;
    const NormalizedRows nz = normalize_rows(emb);

    MatrixD S(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < emb.cols; ++c) s += nz.z.at(i, c) * nz.z.at(j, c);
            S.at(i, j) = s;
        }

    LossResult res;
    res.grad = MatrixD(n, emb.cols);
    MatrixD G(n, n);  // dL/dS  (S_ij treated as anchor-i terms only)
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -1e300;
        for (std::size_t a = 0; a < n; ++a)
            if (a != i) mx = std::max(mx, S.at(i, a) / T);
        double denom = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            if (a != i) denom += std::exp(S.at(i, a) / T - mx);
        std::size_t n_pos = 0;
        for (std::size_t p = 0; p < n; ++p)
            if (p != i && keys[p] == keys[i]) ++n_pos;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double pij = std::exp(S.at(i, j) / T - mx) / denom;
            const bool pos = keys[j] == keys[i];
            G.at(i, j) = (pij - (pos ? 1.0 / static_cast<double>(n_pos) : 0.0)) /
                         (static_cast<double>(n) * T);
            if (pos)
                loss -= (S.at(i, j) / T - mx - std::log(denom)) / static_cast<double>(n_pos);
        }
    }
    res.value = loss / static_cast<double>(n);

    MatrixD gz(n, emb.cols);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double g = G.at(i, j);
            if (g == 0.0) continue;
            for (std::size_t c = 0; c < emb.cols; ++c) {
                gz.at(i, c) += g * nz.z.at(j, c);
                gz.at(j, c) += g * nz.z.at(i, c);
            }
        }
    backprop_normalize(nz, gz, res.grad);
    return res;
}

LossResult augmentation_loss(const MatrixD& emb, const MatrixD& aug,
                             const std::vector<std::int64_t>& keys, double temperature) {
    if (emb.rows != aug.rows || emb.cols != aug.cols)
        fail(Errc::ShapeMismatch, "augmented batch shape differs");
    if (keys.size() != emb.rows) fail(Errc::ShapeMismatch, "keys/rows mismatch");
    require_contrastive_batch(keys);
    const std::size_t n = emb.rows;
    const double T = temperature;
    const NormalizedRows nz = normalize_rows(emb);
    const NormalizedRows na = normalize_rows(aug);

    LossResult res;
    res.grad = MatrixD(n, emb.cols);
    res.grad_aug = MatrixD(n, emb.cols);
    MatrixD gz(n, emb.cols), ga(n, emb.cols);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // candidates: own augmented view plus every foreign-identity view
        std::vector<std::size_t> cand;
        cand.push_back(i);
        for (std::size_t j = 0; j < n; ++j)
            if (keys[j] != keys[i]) cand.push_back(j);
        std::vector<double> s(cand.size());
        double mx = -1e300;
        for (std::size_t c = 0; c < cand.size(); ++c) {
            double dot = 0.0;
            for (std::size_t d = 0; d < emb.cols; ++d)
                dot += nz.z.at(i, d) * na.z.at(cand[c], d);
            s[c] = dot / T;
            mx = std::max(mx, s[c]);
        }
        double denom = 0.0;
        for (double v : s) denom += std::exp(v - mx);
        loss -= s[0] - mx - std::log(denom);
        for (std::size_t c = 0; c < cand.size(); ++c) {
            const double q = std::exp(s[c] - mx) / denom;
            const double g = (q - (c == 0 ? 1.0 : 0.0)) / (static_cast<double>(n) * T);
            const std::size_t j = cand[c];
            for (std::size_t d = 0; d < emb.cols; ++d) {
                gz.at(i, d) += g * na.z.at(j, d);
                ga.at(j, d) += g * nz.z.at(i, d);
            }
        }
    }
    res.value = loss / static_cast<double>(n);
    backprop_normalize(nz, gz, res.grad);
    backprop_normalize(na, ga, res.grad_aug);
    return res;
}

LossResult centroids_loss(const MatrixD& emb, const std::vector<std::int64_t>& keys,
                          const std::map<std::int64_t, std::vector<double>>& centroids,
                          double temperature) {
    if (keys.size() != emb.rows) fail(Errc::ShapeMismatch, "keys/rows mismatch");
    const std::size_t n = emb.rows;
    const double T = temperature;

    std::vector<std::int64_t> cls;
    for (auto k : keys)
        if (!std::count(cls.begin(), cls.end(), k)) cls.push_back(k);
    std::sort(cls.begin(), cls.end());
    std::vector<std::vector<double>> chat;
    for (auto k : cls) {
        auto it = centroids.find(k);
        if (it == centroids.end())
            fail(Errc::MissingCentroid, "no centroid for batch key " + std::to_string(k));
        chat.push_back(normalize_vec(it->second));
    }

    const NormalizedRows nz = normalize_rows(emb);
    LossResult res;
    res.grad = MatrixD(n, emb.cols);
    MatrixD gz(n, emb.cols);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> s(cls.size());
        double mx = -1e300;
        for (std::size_t k = 0; k < cls.size(); ++k) {
            double dot = 0.0;
            for (std::size_t d = 0; d < emb.cols; ++d) dot += nz.z.at(i, d) * chat[k][d];
            s[k] = dot / T;
            mx = std::max(mx, s[k]);
        }
        double denom = 0.0;
        for (double v : s) denom += std::exp(v - mx);
        const std::size_t own = static_cast<std::size_t>(
            std::lower_bound(cls.begin(), cls.end(), keys[i]) - cls.begin());
        loss -= s[own] - mx - std::log(denom);
        for (std::size_t k = 0; k < cls.size(); ++k) {
            const double q = std::exp(s[k] - mx) / denom;
            const double g = (q - (k == own ? 1.0 : 0.0)) / (static_cast<double>(n) * T);
            for (std::size_t d = 0; d < emb.cols; ++d) gz.at(i, d) += g * chat[k][d];
        }
    }
    res.value = loss / static_cast<double>(n);
    backprop_normalize(nz, gz, res.grad);
    return res;
}

LossResult camera_centroids_loss(const MatrixD& emb, const std::vector<std::int64_t>& keys,
                                 const std::vector<std::int64_t>& cameras,
                                 double temperature) {
    if (keys.size() != emb.rows || cameras.size() != emb.rows)
        fail(Errc::ShapeMismatch, "keys/cameras/rows mismatch");
    const std::size_t n = emb.rows;
    const double T = temperature;

    LossResult res;
    res.grad = MatrixD(n, emb.cols);

    // in-batch (identity, camera) cells over camera-tagged rows
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < n; ++i)
        if (cameras[i] >= 0) cells[{keys[i], cameras[i]}].push_back(i);

    std::vector<std::pair<std::int64_t, std::int64_t>> cell_ids;
    std::vector<std::vector<double>> mu;     // raw cell means
    for (const auto& [cell, members] : cells) {
        cell_ids.push_back(cell);
        std::vector<double> m(emb.cols, 0.0);
        for (std::size_t i : members)
            for (std::size_t d = 0; d < emb.cols; ++d) m[d] += emb.at(i, d);
        for (double& v : m) v /= static_cast<double>(members.size());
        mu.push_back(std::move(m));
    }
    std::vector<std::vector<double>> muhat;
    std::vector<double> munorm;
    for (const auto& m : mu) {
        double s = 0.0;
        for (double v : m) s += v * v;
        const double nn = std::sqrt(s);
        if (nn < kNormFloor) fail(Errc::ZeroNormVector, "zero-norm camera centroid");
        munorm.push_back(nn);
        std::vector<double> h(m.size());
        for (std::size_t d = 0; d < m.size(); ++d) h[d] = m[d] / nn;
        muhat.push_back(std::move(h));
    }

    const NormalizedRows nz = normalize_rows(emb);
    MatrixD gz(n, emb.cols);
    std::vector<std::vector<double>> vmu(mu.size(), std::vector<double>(emb.cols, 0.0));

    // first pass: who participates at all
    std::vector<std::vector<std::size_t>> pos(n), cand(n);
    std::size_t n_active = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (cameras[i] < 0) continue;
        for (std::size_t k = 0; k < cell_ids.size(); ++k) {
            if (cell_ids[k].first == keys[i] && cell_ids[k].second == cameras[i]) continue;
            cand[i].push_back(k);
            if (cell_ids[k].first == keys[i]) pos[i].push_back(k);
        }
        if (!pos[i].empty()) ++n_active;
    }
    if (n_active == 0) return res;  // value 0, zero grads

    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (pos[i].empty()) continue;
        std::vector<double> s(cand[i].size());
        double mx = -1e300;
        for (std::size_t c = 0; c < cand[i].size(); ++c) {
            double dot = 0.0;
            const auto& h = muhat[cand[i][c]];
            for (std::size_t d = 0; d < emb.cols; ++d) dot += nz.z.at(i, d) * h[d];
            s[c] = dot / T;
            mx = std::max(mx, s[c]);
        }
        double denom = 0.0;
        for (double v : s) denom += std::exp(v - mx);
        const double npos = static_cast<double>(pos[i].size());
        std::set<std::size_t> pset(pos[i].begin(), pos[i].end());
        for (std::size_t c = 0; c < cand[i].size(); ++c) {
            const std::size_t k = cand[i][c];
            const bool is_pos = pset.count(k) != 0;
            if (is_pos) loss -= (s[c] - mx - std::log(denom)) / npos;
            const double q = std::exp(s[c] - mx) / denom;
            const double g =
                (q - (is_pos ? 1.0 / npos : 0.0)) / (static_cast<double>(n_active) * T);
            for (std::size_t d = 0; d < emb.cols; ++d) {
                gz.at(i, d) += g * muhat[k][d];
                vmu[k][d] += g * nz.z.at(i, d);
            }
        }
    }
    res.value = loss / static_cast<double>(n_active);

    backprop_normalize(nz, gz, res.grad);
    // push centroid gradients down to their member rows
    for (std::size_t k = 0; k < cell_ids.size(); ++k) {
        double hv = 0.0;
        for (std::size_t d = 0; d < emb.cols; ++d) hv += muhat[k][d] * vmu[k][d];
        const auto& members = cells.at(cell_ids[k]);
        const double scale = 1.0 / (munorm[k] * static_cast<double>(members.size()));
        for (std::size_t i : members)
            for (std::size_t d = 0; d < emb.cols; ++d)
                res.grad.at(i, d) += scale * (vmu[k][d] - hv * muhat[k][d]);
    }
    return res;
}

LossBreakdown total_loss(double l_ins, double l_aug, double l_cen, double l_cc,
                         const LossWeights& weights) {
    LossBreakdown b;
    b.l_ins = l_ins;
    b.l_aug = l_aug;
    b.l_cen = l_cen;
    b.l_cc = l_cc;
    b.total = weights.w_ins * l_ins + weights.w_aug * l_aug + weights.w_cen * l_cen +
              weights.w_cc * l_cc;
    return b;
}

TrainResult run_training(const DatasetManifest& manifest, const EmbeddingMatrix& raw,
                         const PipelineConfig& config) {
    config.validate();
    if (raw.rows() != manifest.records().size())
        fail(Errc::ShapeMismatch, "raw feature rows do not match the manifest");

    auto rng_relabel = make_rng(config.seed, RngStream::Relabel);
    auto rng_sampler = make_rng(config.seed, RngStream::Sampler);
    auto rng_train = make_rng(config.seed, RngStream::Train);
    std::normal_distribution<double> gauss(0.0, 1.0);

    TrainResult res;
    res.theta_e = EncoderParams::random_init(raw.dim, config.encoder_dim, rng_train);
    res.theta_m = res.theta_e;

    DatasetManifest cur = manifest;
    CentroidsMemory memory;
    ExclusionQueue queue;
    std::size_t cum_removed = 0, cum_relabeled = 0, initial_pids = 0;

    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        EncoderFeatures fm(cur, raw, res.theta_m);
        EpochOutcome out = run_relabeling_epoch(cur, fm, memory, config, rng_relabel);
        cur = out.refined;
        memory = out.memory;
        if (epoch == 0) initial_pids = out.report.pids_before;
        cum_removed += out.report.n_removed;
        cum_relabeled += out.report.n_relabeled;
        RefinementReport rep = out.report;
        rep.cum_removed = cum_removed;
        rep.cum_relabeled = cum_relabeled;
        rep.cum_merged_pids = initial_pids - memory.entries.size();
        res.reports.push_back(rep);

        queue.remap(out.pid_mapping);

        const SamplingIndex index = SamplingIndex::build(cur, out.removed_ids);
        // A pid can linger in the memory after every one of its images was
        // removed or relabeled away; only pids that still own images are
        // eligible for pairing.
        CentroidsMemory sampleable;
        sampleable.dim = memory.dim;
        sampleable.epoch_stamp = memory.epoch_stamp;
        for (const auto& [pid, vec] : memory.entries)
            if (index.single.count(pid)) sampleable.entries.emplace(pid, vec);
        queue.set_capacity(queue_capacity(config, sampleable.entries.size()));

        std::map<Pid, std::vector<float>> multi_pool = compute_multicam_centroids(cur, fm);

        for (std::uint32_t it = 0; it < config.iterations_per_epoch; ++it) {
            if (config.fresh_centroids && it > 0)
                multi_pool = compute_multicam_centroids(cur, fm);
            const auto pairs = next_pairs(multi_pool, sampleable, queue, config.strategy,
                                          config.n_p, rng_sampler);
            const MiniBatchPlan plan = compose_minibatch(pairs, index, config.n_k, rng_sampler);

            EmbeddingMatrix raw_batch(raw.dim), raw_aug(raw.dim);
            std::vector<std::int64_t> bkeys, bcams;
            std::vector<double> pert(raw.dim);
            for (const auto& entry : plan.entries) {
                const auto row = raw.row(cur.row_of(entry.sample_id));
                raw_batch.append_row(row);
                for (std::uint32_t d = 0; d < raw.dim; ++d)
                    pert[d] = static_cast<double>(row[d]) + config.aug_sigma * gauss(rng_train);
                raw_aug.append_row(std::span<const double>(pert));
                const std::int64_t bit = entry.source == Source::SingleCamera ? 1 : 0;
                bkeys.push_back((entry.pid << 1) | bit);
                bcams.push_back(entry.source == Source::MultiCamera ? entry.context_id : -1);
            }

            const MatrixD emb = encode(res.theta_e, raw_batch);
            const MatrixD aug = encode(res.theta_e, raw_aug);

            std::map<std::int64_t, std::vector<double>> batch_centroids;
            for (const auto& pair : plan.pairs) {
                const auto& mv = multi_pool.at(pair.multi_pid);
                const auto& sv = memory.entries.at(pair.single_pid);
                batch_centroids.emplace(pair.multi_pid << 1,
                                        std::vector<double>(mv.begin(), mv.end()));
                batch_centroids.emplace((pair.single_pid << 1) | 1,
                                        std::vector<double>(sv.begin(), sv.end()));
            }

            const LossResult ins = instance_loss(emb, bkeys, config.temperature);
            const LossResult augr = augmentation_loss(emb, aug, bkeys, config.temperature);
            const LossResult cen =
                centroids_loss(emb, bkeys, batch_centroids, config.temperature);
            const LossResult cc =
                camera_centroids_loss(emb, bkeys, bcams, config.temperature);
            const LossBreakdown lb =
                total_loss(ins.value, augr.value, cen.value, cc.value, config.loss_weights);
            res.curve.push_back({epoch, it, lb});

            const std::size_t nb = plan.entries.size();
            MatrixD gemb(nb, config.encoder_dim);
            for (std::size_t i = 0; i < gemb.values.size(); ++i)
                gemb.values[i] = config.loss_weights.w_ins * ins.grad.values[i] +
                                 config.loss_weights.w_aug * augr.grad.values[i] +
                                 config.loss_weights.w_cen * cen.grad.values[i] +
                                 config.loss_weights.w_cc * cc.grad.values[i];

            // affine backprop: dW = g^T raw, accumulated over both views
            MatrixD dW(config.encoder_dim, raw.dim);
            std::vector<double> db(config.encoder_dim, 0.0);
            for (std::size_t r = 0; r < nb; ++r) {
                const auto xr = raw_batch.row(r);
                const auto ar = raw_aug.row(r);
                for (std::size_t o = 0; o < config.encoder_dim; ++o) {
                    const double ge = gemb.at(r, o);
                    const double ga = config.loss_weights.w_aug * augr.grad_aug.at(r, o);
                    db[o] += ge + ga;
                    double* wrow = dW.values.data() + o * raw.dim;
                    for (std::uint32_t i2 = 0; i2 < raw.dim; ++i2)
                        wrow[i2] += ge * static_cast<double>(xr[i2]) +
                                    ga * static_cast<double>(ar[i2]);
                }
            }
            for (std::size_t i = 0; i < res.theta_e.weights.values.size(); ++i)
                res.theta_e.weights.values[i] -= config.learning_rate * dW.values[i];
            for (std::size_t o = 0; o < config.encoder_dim; ++o)
                res.theta_e.bias[o] -= config.learning_rate * db[o];

            if (!config.momentum_per_epoch)
                momentum_update(res.theta_m, res.theta_e, config.lambda_momentum);
        }
        if (config.momentum_per_epoch)
            momentum_update(res.theta_m, res.theta_e, config.lambda_momentum);
    }

    res.final_manifest = cur;
    res.final_memory = memory;
    return res;
}

} // namespace mixpipe

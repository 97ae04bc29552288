#include "mixpipe/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <random>

#include "mixpipe/io.hpp"
#include "mixpipe/util.hpp"

namespace mixpipe {

namespace {

// Junk must sit clearly below the default removal threshold (0.5) against
// every identity anchor.
// Junk sits just under the default removal threshold (0.5 - 0.05).
constexpr double kJunkMaxCos = 0.45;
constexpr int kMaxRejects = 10000;

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

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void normalize(std::vector<double>& v) {
    double n = std::sqrt(dot(v, v));
    if (n < 1e-12) fail(Errc::ValidationError, "degenerate zero vector during generation");
    for (double& x : v) x /= n;
}

std::vector<double> gaussian_vector(std::mt19937_64& rng, std::uint32_t d,
                                    std::normal_distribution<double>& gauss) {
    std::vector<double> v(d);
    for (auto& x : v) x = gauss(rng);
    return v;
}

std::vector<float> to_f32(const std::vector<double>& v) {
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

} // namespace

void SynthSpec::validate() const {
    if (num_cameras < 2) fail(Errc::ValidationError, "num_cameras must be >= 2");
    if (dim_raw < 2) fail(Errc::ValidationError, "dim_raw must be >= 2");
    if (images_per_pid < 1) fail(Errc::ValidationError, "images_per_pid must be >= 1");
    if (frag_parts < 2) fail(Errc::ValidationError, "frag_parts must be >= 2");
    for (double r : {frag_rate, mislabel_rate, junk_rate})
        if (r < 0.0 || r > 1.0) fail(Errc::ValidationError, "rates must lie in [0,1]");
    if (intra_noise_sigma < 0.0) fail(Errc::ValidationError, "intra_noise_sigma must be >= 0");
    if (min_inter_angle_cos <= -1.0 || min_inter_angle_cos > 1.0)
        fail(Errc::ValidationError, "min_inter_angle_cos must lie in (-1,1]");
    if ((frag_rate > 0.0 || mislabel_rate > 0.0 || junk_rate > 0.0) && num_singlecam_pids == 0)
        fail(Errc::ValidationError, "error injection needs at least one single-camera pid");
}

void SynthSpec::apply(const std::string& key, const std::string& value, int line_no) {
    if (key == "num_multicam_pids") num_multicam_pids = static_cast<std::uint32_t>(parse_u64_v(value, line_no));
    else if (key == "num_singlecam_pids") num_singlecam_pids = static_cast<std::uint32_t>(parse_u64_v(value, line_no));
    else if (key == "images_per_pid") images_per_pid = static_cast<std::uint32_t>(parse_u64_v(value, line_no));
    else if (key == "num_cameras") num_cameras = static_cast<std::uint32_t>(parse_u64_v(value, line_no));
    else if (key == "dim_raw") dim_raw = static_cast<std::uint32_t>(parse_u64_v(value, line_no));
    else if (key == "intra_noise_sigma") intra_noise_sigma = parse_double_v(value, line_no);
    else if (key == "min_inter_angle_cos") min_inter_angle_cos = parse_double_v(value, line_no);
    else if (key == "frag_rate") frag_rate = parse_double_v(value, line_no);
    else if (key == "frag_parts") frag_parts = static_cast<std::uint32_t>(parse_u64_v(value, line_no));
    else if (key == "mislabel_rate") mislabel_rate = parse_double_v(value, line_no);
    else if (key == "junk_rate") junk_rate = parse_double_v(value, line_no);
    else if (key == "seed") seed = parse_u64_v(value, line_no);
    else
        fail(Errc::ParseError,
             "line " + std::to_string(line_no) + ": unknown spec key '" + key + "'");
}

SynthSpec SynthSpec::load(const std::string& path) {
    SynthSpec spec;
    for (const auto& e : read_kv_file(path)) spec.apply(e.key, e.value, e.line_no);
    spec.validate();
    return spec;
}

void SynthSpec::save(std::ostream& os) const {
    os << "num_multicam_pids = " << num_multicam_pids << '\n';
    os << "num_singlecam_pids = " << num_singlecam_pids << '\n';
    os << "images_per_pid = " << images_per_pid << '\n';
    os << "num_cameras = " << num_cameras << '\n';
    os << "dim_raw = " << dim_raw << '\n';
    os << "intra_noise_sigma = " << format_double(intra_noise_sigma) << '\n';
    os << "min_inter_angle_cos = " << format_double(min_inter_angle_cos) << '\n';
    os << "frag_rate = " << format_double(frag_rate) << '\n';
    os << "frag_parts = " << frag_parts << '\n';
    os << "mislabel_rate = " << format_double(mislabel_rate) << '\n';
    os << "junk_rate = " << format_double(junk_rate) << '\n';
    os << "seed = " << seed << '\n';
}

Pid GroundTruth::resolve(Pid stored) const {
    auto it = fragment_map.find(stored);
    return it == fragment_map.end() ? stored : it->second;
}

SynthOutput generate(const SynthSpec& spec) {
    spec.validate();
    auto rng = make_rng(spec.seed, RngStream::Gen);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::uint32_t d = spec.dim_raw;
    const std::size_t n_anchors = spec.num_multicam_pids + spec.num_singlecam_pids;

    // Identity anchors: unit vectors with pairwise cosine capped.
    std::vector<std::vector<double>> anchors;
    anchors.reserve(n_anchors);
    while (anchors.size() < n_anchors) {
        int rejects = 0;
        while (true) {
            auto cand = gaussian_vector(rng, d, gauss);
            normalize(cand);
            bool ok = true;
            for (const auto& a : anchors)
                if (dot(cand, a) > spec.min_inter_angle_cos) { ok = false; break; }
            if (ok) {
                anchors.push_back(std::move(cand));
                break;
            }
            if (++rejects >= kMaxRejects)
                fail(Errc::InfeasibleSpec,
                     "anchor rejection sampling exceeded " + std::to_string(kMaxRejects) +
                         " attempts at anchor " + std::to_string(anchors.size()));
        }
    }

    // Fixed small per-camera bias, norm = intra_noise_sigma.
    std::vector<std::vector<double>> camera_bias(spec.num_cameras);
    for (auto& b : camera_bias) {
        b = gaussian_vector(rng, d, gauss);
        if (spec.intra_noise_sigma > 0.0) {
            normalize(b);
            for (double& x : b) x *= spec.intra_noise_sigma;
        } else {
            std::fill(b.begin(), b.end(), 0.0);
        }
    }

    std::vector<SampleRecord> records;
    EmbeddingMatrix feats(d);
    GroundTruth truth;
    SampleId next_id = 0;

    auto noisy_point = [&](const std::vector<double>& anchor,
                           const std::vector<double>* bias) {
        std::vector<double> v = anchor;
        for (std::uint32_t i = 0; i < d; ++i) v[i] += spec.intra_noise_sigma * gauss(rng);
        if (bias)
            for (std::uint32_t i = 0; i < d; ++i) v[i] += (*bias)[i];
        normalize(v);
        return v;
    };

    // Multi-camera identities: train images round-robin over cameras, then a
    // small fixed query/gallery tail for retrieval evaluation.
    constexpr std::uint32_t kEvalImagesPerSplit = 2;
    for (std::uint32_t p = 0; p < spec.num_multicam_pids; ++p) {
        const auto& anchor = anchors[p];
        truth.multi_anchor[static_cast<Pid>(p)] = to_f32(anchor);
        std::uint32_t cam_cursor = 0;
        auto emit = [&](Split split) {
            const std::uint32_t cam = cam_cursor++ % spec.num_cameras;
            auto v = noisy_point(anchor, &camera_bias[cam]);
            SampleRecord r;
            r.sample_id = next_id++;
            r.pid = static_cast<Pid>(p);
            r.source = Source::MultiCamera;
            r.context_id = cam;
            r.split = split;
            records.push_back(r);
            feats.append_row(std::span<const double>(v));
            truth.true_pid[r.sample_id] = r.pid;
        };
        for (std::uint32_t j = 0; j < spec.images_per_pid; ++j) emit(Split::Train);
        for (std::uint32_t j = 0; j < kEvalImagesPerSplit; ++j) emit(Split::Query);
        for (std::uint32_t j = 0; j < kEvalImagesPerSplit; ++j) emit(Split::Gallery);
    }

    // Single-camera identities: one video per pid, video id = pid.
    std::map<Pid, std::int64_t> video_of;
    std::map<Pid, std::vector<SampleId>> single_ids;
    for (std::uint32_t p = 0; p < spec.num_singlecam_pids; ++p) {
        const auto& anchor = anchors[spec.num_multicam_pids + p];
        const Pid pid = static_cast<Pid>(p);
        truth.single_anchor[pid] = to_f32(anchor);
        video_of[pid] = pid;
        for (std::uint32_t j = 0; j < spec.images_per_pid; ++j) {
            auto v = noisy_point(anchor, nullptr);
            SampleRecord r;
            r.sample_id = next_id++;
            r.pid = pid;
            r.source = Source::SingleCamera;
            r.context_id = pid;
            r.split = Split::Train;
            records.push_back(r);
            feats.append_row(std::span<const double>(v));
            truth.true_pid[r.sample_id] = pid;
            single_ids[pid].push_back(r.sample_id);
        }
    }
    const std::size_t single_train_images = spec.num_singlecam_pids * spec.images_per_pid;

    auto record_of = [&](SampleId id) -> SampleRecord& {
        // ids are 0..next_id-1 in insertion order
        return records[static_cast<std::size_t>(id)];
    };

    // Fragmentation: split chosen identities into contiguous pieces under
    // fresh pids; the first piece keeps the original label.
    const std::size_t n_frag =
        static_cast<std::size_t>(std::llround(spec.frag_rate * spec.num_singlecam_pids));
    if (n_frag > 0 && spec.images_per_pid < spec.frag_parts)
        fail(Errc::InfeasibleSpec, "images_per_pid < frag_parts; cannot fragment");
    std::vector<Pid> single_pool;
    for (std::uint32_t p = 0; p < spec.num_singlecam_pids; ++p)
        single_pool.push_back(static_cast<Pid>(p));
    std::shuffle(single_pool.begin(), single_pool.end(), rng);
    std::vector<Pid> frag_victims(single_pool.begin(),
                                  single_pool.begin() + static_cast<std::ptrdiff_t>(n_frag));
    std::sort(frag_victims.begin(), frag_victims.end());
    Pid next_fresh = static_cast<Pid>(spec.num_singlecam_pids);
    for (Pid victim : frag_victims) {
        const auto& ids = single_ids[victim];
        const std::size_t n = ids.size();
        const std::size_t parts = spec.frag_parts;
        const std::size_t q = n / parts, rem = n % parts;
        std::size_t cursor = 0;
        for (std::size_t part = 0; part < parts; ++part) {
            const std::size_t len = q + (part < rem ? 1 : 0);
            if (part > 0) {
                const Pid fresh = next_fresh++;
                truth.fragment_map[fresh] = victim;
                video_of[fresh] = video_of[victim];
                for (std::size_t i = cursor; i < cursor + len; ++i)
                    record_of(ids[i]).pid = fresh;
            }
            cursor += len;
        }
    }

    // Mislabeling: stored pid flips to some other live identity; the record
    // follows that identity's video to stay consistent with tracking output.
    const std::size_t n_mis = static_cast<std::size_t>(
        std::llround(spec.mislabel_rate * static_cast<double>(single_train_images)));
    std::vector<SampleId> mis_candidates;
    for (const auto& [pid, ids] : single_ids)
        mis_candidates.insert(mis_candidates.end(), ids.begin(), ids.end());
    std::shuffle(mis_candidates.begin(), mis_candidates.end(), rng);
    std::vector<Pid> live_pids;
    for (const auto& [pid, vid] : video_of) live_pids.push_back(pid);
    for (std::size_t i = 0; i < n_mis && i < mis_candidates.size(); ++i) {
        SampleRecord& r = record_of(mis_candidates[i]);
        const Pid truth_pid = truth.true_pid.at(r.sample_id);
        std::uniform_int_distribution<std::size_t> pick(0, live_pids.size() - 1);
        int rejects = 0;
        while (true) {
            const Pid target = live_pids[pick(rng)];
            if (target != r.pid && truth.resolve(target) != truth_pid) {
                r.pid = target;
                r.context_id = video_of.at(target);
                truth.mislabel_set.insert(r.sample_id);
                break;
            }
            if (++rejects >= kMaxRejects)
                fail(Errc::InfeasibleSpec, "cannot find a wrong pid to mislabel to");
        }
    }

    // Junk: far from every anchor, appended last under a random stored pid.
    const std::size_t base_images =
        spec.num_multicam_pids * spec.images_per_pid + single_train_images;
    const std::size_t n_junk =
        static_cast<std::size_t>(std::llround(spec.junk_rate * static_cast<double>(base_images)));
    for (std::size_t j = 0; j < n_junk; ++j) {
        int rejects = 0;
        std::vector<double> v;
        while (true) {
            v = gaussian_vector(rng, d, gauss);
            normalize(v);
            bool far = true;
            for (const auto& a : anchors)
                if (dot(v, a) >= kJunkMaxCos) { far = false; break; }
            if (far) break;
            if (++rejects >= kMaxRejects)
                fail(Errc::InfeasibleSpec, "junk rejection sampling exceeded limit");
        }
        std::uniform_int_distribution<std::size_t> pick(0, live_pids.size() - 1);
        const Pid stored = live_pids[pick(rng)];
        SampleRecord r;
        r.sample_id = next_id++;
        r.pid = stored;
        r.source = Source::SingleCamera;
        r.context_id = video_of.at(stored);
        r.split = Split::Train;
        records.push_back(r);
        feats.append_row(std::span<const double>(v));
        truth.true_pid[r.sample_id] = kJunkPid;
    }

    SynthOutput out{DatasetManifest(std::move(records)), std::move(feats), std::move(truth)};
    out.features.validate();
    return out;
}

PartitionScore score_partition(const std::map<SampleId, Pid>& predicted,
                               const std::map<SampleId, Pid>& truth) {
    if (predicted.empty()) fail(Errc::EmptyPrediction, "no predicted clusters");
    if (predicted.size() != truth.size())
        fail(Errc::ValidationError, "predicted and truth cover different sample sets");
    std::vector<SampleId> ids;
    ids.reserve(predicted.size());
    for (const auto& [id, pid] : predicted) {
        if (!truth.count(id))
            fail(Errc::ValidationError, "sample " + std::to_string(id) + " missing from truth");
        ids.push_back(id);
    }
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            const bool same_pred = predicted.at(ids[i]) == predicted.at(ids[j]);
            const bool same_true = truth.at(ids[i]) == truth.at(ids[j]);
            if (same_pred && same_true) ++tp;
            else if (same_pred) ++fp;
            else if (same_true) ++fn;
        }
    }
    PartitionScore s;
    s.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
    s.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

} // namespace mixpipe

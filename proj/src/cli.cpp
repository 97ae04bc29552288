#include "mixpipe/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mixpipe/centroids.hpp"
#include "mixpipe/config.hpp"
#include "mixpipe/eval.hpp"
#include "mixpipe/features.hpp"
#include "mixpipe/io.hpp"
#include "mixpipe/relabel.hpp"
#include "mixpipe/sampler.hpp"
#include "mixpipe/synth.hpp"
#include "mixpipe/trainloop.hpp"
#include "mixpipe/util.hpp"

namespace fs = std::filesystem;

namespace mixpipe {

namespace {

int exit_code_for(Errc c) {
    switch (c) {
        case Errc::UsageError: return 2;
        case Errc::IoError:
        case Errc::BadMagic:
        case Errc::TruncatedFile: return 3;
        default: return 4;
    }
}

std::string abspath(const std::string& p) {
    return fs::absolute(fs::path(p)).lexically_normal().string();
}

void ensure_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) fail(Errc::IoError, "cannot create output directory " + out);
}

void require_inputs(const std::vector<std::string>& paths) {
    for (const auto& p : paths)
        if (!p.empty() && !file_exists(p)) fail(Errc::IoError, "input file missing: " + p);
}

// run.meta records everything needed to replay the run: subcommand, absolute
// input paths and the fully resolved parameter set.  The output directory is
// deliberately omitted so replays are byte-identical.
void write_run_meta(const std::string& out_dir, const std::string& subcommand,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const PipelineConfig* cfg, const SynthSpec* spec,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
    std::ofstream os(out_dir + "/run.meta", std::ios::binary);
    if (!os) fail(Errc::IoError, "cannot write " + out_dir + "/run.meta");
    os << "subcommand = " << subcommand << '\n';
    for (const auto& [k, v] : inputs) os << "input." << k << " = " << v << '\n';
    for (const auto& [k, v] : extra) os << k << " = " << v << '\n';
    auto emit_prefixed = [&os](const std::string& prefix, const std::string& block) {
        std::istringstream ss(block);
        std::string line;
        while (std::getline(ss, line))
            if (!line.empty()) os << prefix << line << '\n';
    };
    if (cfg) {
        std::ostringstream ss;
        cfg->save(ss);
        emit_prefixed("config.", ss.str());
    }
    if (spec) {
        std::ostringstream ss;
        spec->save(ss);
        emit_prefixed("spec.", ss.str());
    }
    if (!os) fail(Errc::IoError, "write failed for " + out_dir + "/run.meta");
}

// ---- gen -----------------------------------------------------------------

struct GenParams {
    SynthSpec spec;
    std::string out;
    bool quiet = false;
};

void cmd_gen(const GenParams& p) {
    p.spec.validate();
    const SynthOutput so = generate(p.spec);
    ensure_dir(p.out);
    write_manifest(so.manifest, p.out + "/manifest.tsv");
    write_embeddings(so.features, p.out + "/features.bin");
    write_truth(so.truth.true_pid, p.out + "/truth.tsv");
    write_run_meta(p.out, "gen", {}, nullptr, &p.spec, {});
    if (!p.quiet) {
        const auto c = so.manifest.counts();
        std::cout << "generated " << so.manifest.records().size() << " samples ("
                  << c.n_multicam_images << " multi-cam train, " << c.n_singlecam_images
                  << " single-cam train), " << c.n_multicam_pids << "+" << c.n_singlecam_pids
                  << " pids, dim " << so.features.dim << "\n";
    }
}

// ---- relabel -------------------------------------------------------------

struct RelabelParams {
    PipelineConfig cfg;
    std::string manifest, features, memory_bin, memory_pids, out;
    bool quiet = false;
};

void cmd_relabel(const RelabelParams& p) {
    p.cfg.validate();
    require_inputs({p.manifest, p.features, p.memory_bin, p.memory_pids});
    const DatasetManifest manifest = read_manifest(p.manifest);
    const EmbeddingMatrix features = read_embeddings(p.features);
    if (features.rows() != manifest.records().size())
        fail(Errc::ShapeMismatch, "feature rows do not cover the manifest");
    CentroidsMemory memory;
    if (!p.memory_bin.empty()) memory = read_memory(p.memory_bin, p.memory_pids);

    PrecomputedFeatures source(manifest, features);
    auto rng = make_rng(p.cfg.seed, RngStream::Relabel);
    const EpochOutcome outcome = run_relabeling_epoch(manifest, source, memory, p.cfg, rng);

    ensure_dir(p.out);
    write_manifest(outcome.refined, p.out + "/refined_manifest.tsv");
    write_memory(outcome.memory, p.out + "/memory.bin", p.out + "/memory.pids");
    {
        std::ofstream os(p.out + "/report.txt", std::ios::binary);
        if (!os) fail(Errc::IoError, "cannot write report");
        write_report(outcome.report, os);
    }
    std::vector<std::pair<std::string, std::string>> inputs = {
        {"manifest", abspath(p.manifest)}, {"features", abspath(p.features)}};
    if (!p.memory_bin.empty()) {
        inputs.emplace_back("memory_bin", abspath(p.memory_bin));
        inputs.emplace_back("memory_pids", abspath(p.memory_pids));
    }
    write_run_meta(p.out, "relabel", inputs, &p.cfg, nullptr, {});
    if (!p.quiet) {
        const auto& r = outcome.report;
        std::cout << "relabeled epoch: " << r.n_input_images << " in, " << r.n_removed
                  << " removed, " << r.n_relabeled << " relabeled, pids " << r.pids_before
                  << " -> " << r.pids_after << "\n";
    }
}

// ---- centroids -----------------------------------------------------------

struct CentroidsParams {
    std::string manifest, features, out;
    bool quiet = false;
};

void cmd_centroids(const CentroidsParams& p) {
    require_inputs({p.manifest, p.features});
    const DatasetManifest manifest = read_manifest(p.manifest);
    const EmbeddingMatrix features = read_embeddings(p.features);
    if (features.rows() != manifest.records().size())
        fail(Errc::ShapeMismatch, "feature rows do not cover the manifest");
    const CentroidsMemory memory = recompute_full(manifest, features);
    ensure_dir(p.out);
    write_memory(memory, p.out + "/memory.bin", p.out + "/memory.pids");
    write_run_meta(p.out, "centroids",
                   {{"manifest", abspath(p.manifest)}, {"features", abspath(p.features)}},
                   nullptr, nullptr, {});
    if (!p.quiet)
        std::cout << "computed " << memory.entries.size() << " centroids of dim "
                  << memory.dim << "\n";
}

// ---- sample --------------------------------------------------------------

struct SampleParams {
    PipelineConfig cfg;
    std::string manifest, features, out;
    std::uint32_t iterations = 0;  // batches to emit
    bool quiet = false;
};

void cmd_sample(const SampleParams& p) {
    p.cfg.validate();
    require_inputs({p.manifest, p.features});
    const DatasetManifest manifest = read_manifest(p.manifest);
    const EmbeddingMatrix features = read_embeddings(p.features);
    if (features.rows() != manifest.records().size())
        fail(Errc::ShapeMismatch, "feature rows do not cover the manifest");

    PrecomputedFeatures source(manifest, features);
    const CentroidsMemory memory = recompute_full(manifest, features);
    const auto multi_pool = compute_multicam_centroids(manifest, source);
    ExclusionQueue queue(queue_capacity(p.cfg, memory.entries.size()));
    const SamplingIndex index = SamplingIndex::build(manifest, {});
    auto rng = make_rng(p.cfg.seed, RngStream::Sampler);

    ensure_dir(p.out);
    std::ofstream os(p.out + "/plans.tsv", std::ios::binary);
    if (!os) fail(Errc::IoError, "cannot write plans.tsv");
    os << "# batch_index\tpairs(multi:single:sim)\tsample_ids\n";
    for (std::uint32_t b = 0; b < p.iterations; ++b) {
        const auto pairs =
            next_pairs(multi_pool, memory, queue, p.cfg.strategy, p.cfg.n_p, rng);
        const MiniBatchPlan plan = compose_minibatch(pairs, index, p.cfg.n_k, rng);
        os << b << '\t';
        for (std::size_t i = 0; i < plan.pairs.size(); ++i) {
            if (i) os << ',';
            os << plan.pairs[i].multi_pid << ':' << plan.pairs[i].single_pid << ':'
               << format_double(plan.pairs[i].similarity);
        }
        for (const auto& e : plan.entries) os << '\t' << e.sample_id;
        os << '\n';
    }
    if (!os) fail(Errc::IoError, "write failed for plans.tsv");
    write_run_meta(p.out, "sample",
                   {{"manifest", abspath(p.manifest)}, {"features", abspath(p.features)}},
                   &p.cfg, nullptr,
                   {{"iterations", std::to_string(p.iterations)}});
    if (!p.quiet)
        std::cout << "emitted " << p.iterations << " batch plans of "
                  << 2 * p.cfg.n_p * p.cfg.n_k << " samples each\n";
}

// ---- train ---------------------------------------------------------------

struct TrainParams {
    PipelineConfig cfg;
    std::string manifest, features, out;
    bool quiet = false;
};

void cmd_train(const TrainParams& p) {
    p.cfg.validate();
    require_inputs({p.manifest, p.features});
    const DatasetManifest manifest = read_manifest(p.manifest);
    const EmbeddingMatrix raw = read_embeddings(p.features);
    const TrainResult result = run_training(manifest, raw, p.cfg);

    ensure_dir(p.out);
    write_encoder(result.theta_e, p.out + "/encoder_e.bin");
    write_encoder(result.theta_m, p.out + "/encoder_m.bin");
    write_manifest(result.final_manifest, p.out + "/refined_manifest.tsv");
    write_memory(result.final_memory, p.out + "/memory.bin", p.out + "/memory.pids");
    {
        std::ofstream os(p.out + "/loss_curve.tsv", std::ios::binary);
        if (!os) fail(Errc::IoError, "cannot write loss_curve.tsv");
        os << "# epoch\titeration\tl_ins\tl_aug\tl_cen\tl_cc\ttotal\n";
        for (const auto& row : result.curve)
            os << row.epoch << '\t' << row.iteration << '\t' << format_double(row.loss.l_ins)
               << '\t' << format_double(row.loss.l_aug) << '\t'
               << format_double(row.loss.l_cen) << '\t' << format_double(row.loss.l_cc)
               << '\t' << format_double(row.loss.total) << '\n';
        if (!os) fail(Errc::IoError, "write failed for loss_curve.tsv");
    }
    {
        std::ofstream os(p.out + "/reports.txt", std::ios::binary);
        if (!os) fail(Errc::IoError, "cannot write reports.txt");
        for (std::size_t e = 0; e < result.reports.size(); ++e) {
            os << "epoch = " << e << '\n';
            write_report(result.reports[e], os);
            os << '\n';
        }
        if (!os) fail(Errc::IoError, "write failed for reports.txt");
    }
    write_run_meta(p.out, "train",
                   {{"manifest", abspath(p.manifest)}, {"features", abspath(p.features)}},
                   &p.cfg, nullptr, {});
    if (!p.quiet) {
        const double first = result.curve.empty() ? 0.0 : result.curve.front().loss.total;
        const double last = result.curve.empty() ? 0.0 : result.curve.back().loss.total;
        std::cout << "trained " << p.cfg.epochs << " epochs x " << p.cfg.iterations_per_epoch
                  << " iterations; total loss " << format_double(first) << " -> "
                  << format_double(last) << "\n";
    }
}

// ---- eval ----------------------------------------------------------------

struct EvalParams {
    std::string manifest, features, encoder, out;
    bool quiet = false;
};

void cmd_eval(const EvalParams& p) {
    require_inputs({p.manifest, p.features, p.encoder});
    const DatasetManifest manifest = read_manifest(p.manifest);
    EmbeddingMatrix emb = read_embeddings(p.features);
    if (emb.rows() != manifest.records().size())
        fail(Errc::ShapeMismatch, "feature rows do not cover the manifest");
    if (!p.encoder.empty()) {
        const EncoderParams enc = read_encoder(p.encoder);
        emb = encode_f32(enc, emb);
    }
    std::vector<SampleRecord> qrecs, grecs;
    EmbeddingMatrix qemb(emb.dim), gemb(emb.dim);
    for (const auto& r : manifest.records()) {
        if (r.split == Split::Query) {
            qrecs.push_back(r);
            qemb.append_row(emb.row(manifest.row_of(r.sample_id)));
        } else if (r.split == Split::Gallery) {
            grecs.push_back(r);
            gemb.append_row(emb.row(manifest.row_of(r.sample_id)));
        }
    }
    if (qrecs.empty() || grecs.empty())
        fail(Errc::ValidationError, "manifest lacks query or gallery records");
    const RetrievalResult rr = evaluate(qemb, qrecs, gemb, grecs);

    std::ostringstream line;
    line << format_double(rr.rank_k.at(1)) << '\t' << format_double(rr.rank_k.at(5)) << '\t'
         << format_double(rr.rank_k.at(10)) << '\t' << format_double(rr.mAP) << '\t'
         << rr.n_queries_evaluated;
    ensure_dir(p.out);
    {
        std::ofstream os(p.out + "/eval.tsv", std::ios::binary);
        if (!os) fail(Errc::IoError, "cannot write eval.tsv");
        os << "# rank1\trank5\trank10\tmAP\tn_queries\n" << line.str() << '\n';
        if (!os) fail(Errc::IoError, "write failed for eval.tsv");
    }
    std::vector<std::pair<std::string, std::string>> inputs = {
        {"manifest", abspath(p.manifest)}, {"features", abspath(p.features)}};
    if (!p.encoder.empty()) inputs.emplace_back("encoder", abspath(p.encoder));
    write_run_meta(p.out, "eval", inputs, nullptr, nullptr, {});

    std::cout << line.str() << "\n";
    if (!p.quiet) {
        std::cout << "queries evaluated: " << rr.n_queries_evaluated << " (skipped "
                  << rr.n_queries_skipped << ")\n";
        for (const auto& [k, v] : rr.rank_k)
            std::cout << "rank-" << k << ": " << format_double(v) << "\n";
        std::cout << "mAP: " << format_double(rr.mAP) << "\n";
    }
}

// ---- bench ---------------------------------------------------------------

struct BenchParams {
    std::string manifest, features, out;
    std::vector<std::uint32_t> k_values = {2, 4, 8};
    bool quiet = false;
};

void cmd_bench(const BenchParams& p) {
    require_inputs({p.manifest, p.features});
    const DatasetManifest manifest = read_manifest(p.manifest);
    const EmbeddingMatrix features = read_embeddings(p.features);
    if (features.rows() != manifest.records().size())
        fail(Errc::ShapeMismatch, "feature rows do not cover the manifest");

    // the naive baseline embeds every single-camera train image
    std::vector<SampleId> all_single;
    for (const auto& r : manifest.records())
        if (r.split == Split::Train && r.source == Source::SingleCamera)
            all_single.push_back(r.sample_id);
    PrecomputedFeatures naive(manifest, features);
    naive.embed(all_single);
    const std::uint64_t naive_ops = naive.ops_count();

    ensure_dir(p.out);
    std::ofstream os(p.out + "/bench.tsv", std::ios::binary);
    if (!os) fail(Errc::IoError, "cannot write bench.tsv");
    os << "# k\tops_subset\tops_naive\tratio\n";
    std::ostringstream table;
    for (std::uint32_t k : p.k_values) {
        PrecomputedFeatures sub(manifest, features);
        auto rng = make_rng(0, RngStream::Relabel);
        const EpochSubset subset = select_epoch_subset(manifest, k, rng);
        sub.embed(subset.flat_ids());
        const std::uint64_t ops = sub.ops_count();
        const double ratio =
            ops == 0 ? 0.0 : static_cast<double>(naive_ops) / static_cast<double>(ops);
        os << k << '\t' << ops << '\t' << naive_ops << '\t' << format_double(ratio) << '\n';
        table << "k=" << k << ": " << ops << " ops vs naive " << naive_ops << " (ratio "
              << format_double(ratio) << ")\n";
    }
    if (!os) fail(Errc::IoError, "write failed for bench.tsv");
    std::string klist;
    for (std::size_t i = 0; i < p.k_values.size(); ++i)
        klist += (i ? "," : "") + std::to_string(p.k_values[i]);
    write_run_meta(p.out, "bench",
                   {{"manifest", abspath(p.manifest)}, {"features", abspath(p.features)}},
                   nullptr, nullptr, {{"k_values", klist}});
    if (!p.quiet) std::cout << table.str();
}

// ---- rerun ---------------------------------------------------------------

std::vector<std::string> outputs_of(const std::string& subcommand) {
    if (subcommand == "gen") return {"manifest.tsv", "features.bin", "truth.tsv", "run.meta"};
    if (subcommand == "relabel")
        return {"refined_manifest.tsv", "memory.bin", "memory.pids", "report.txt", "run.meta"};
    if (subcommand == "centroids") return {"memory.bin", "memory.pids", "run.meta"};
    if (subcommand == "sample") return {"plans.tsv", "run.meta"};
    if (subcommand == "train")
        return {"encoder_e.bin", "encoder_m.bin", "refined_manifest.tsv", "memory.bin",
                "memory.pids", "loss_curve.tsv", "reports.txt", "run.meta"};
    if (subcommand == "eval") return {"eval.tsv", "run.meta"};
    if (subcommand == "bench") return {"bench.tsv", "run.meta"};
    fail(Errc::ValidationError, "unknown subcommand in run.meta: " + subcommand);
}

struct RerunParams {
    std::string meta, out;
    bool quiet = false;
};

void cmd_rerun(const RerunParams& p) {
    require_inputs({p.meta});
    const auto entries = read_kv_file(p.meta);
    std::string subcommand;
    std::map<std::string, std::string> inputs, extra;
    PipelineConfig cfg;
    SynthSpec spec;
    for (const auto& e : entries) {
        if (e.key == "subcommand") subcommand = e.value;
        else if (e.key.rfind("input.", 0) == 0) inputs[e.key.substr(6)] = e.value;
        else if (e.key.rfind("config.", 0) == 0) cfg.apply(e.key.substr(7), e.value, e.line_no);
        else if (e.key.rfind("spec.", 0) == 0) spec.apply(e.key.substr(5), e.value, e.line_no);
        else extra[e.key] = e.value;
    }
    if (subcommand.empty()) fail(Errc::ParseError, p.meta + ": missing subcommand key");

    auto input = [&](const std::string& name) {
        auto it = inputs.find(name);
        return it == inputs.end() ? std::string() : it->second;
    };
    if (subcommand == "gen") {
        cmd_gen({spec, p.out, true});
    } else if (subcommand == "relabel") {
        cmd_relabel({cfg, input("manifest"), input("features"), input("memory_bin"),
                     input("memory_pids"), p.out, true});
    } else if (subcommand == "centroids") {
        cmd_centroids({input("manifest"), input("features"), p.out, true});
    } else if (subcommand == "sample") {
        SampleParams sp{cfg, input("manifest"), input("features"), p.out, 0, true};
        auto it = extra.find("iterations");
        if (it == extra.end()) fail(Errc::ParseError, p.meta + ": missing iterations");
        sp.iterations = static_cast<std::uint32_t>(std::stoul(it->second));
        cmd_sample(sp);
    } else if (subcommand == "train") {
        cmd_train({cfg, input("manifest"), input("features"), p.out, true});
    } else if (subcommand == "eval") {
        cmd_eval({input("manifest"), input("features"), input("encoder"), p.out, true});
    } else if (subcommand == "bench") {
        BenchParams bp{input("manifest"), input("features"), p.out, {}, true};
        auto it = extra.find("k_values");
        if (it == extra.end()) fail(Errc::ParseError, p.meta + ": missing k_values");
        std::istringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ','))
            bp.k_values.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
        cmd_bench(bp);
    } else {
        fail(Errc::ValidationError, "unknown subcommand in run.meta: " + subcommand);
    }

    const std::string ref_dir = fs::path(abspath(p.meta)).parent_path().string();
    std::size_t mismatches = 0;
    for (const auto& name : outputs_of(subcommand)) {
        const std::string a = ref_dir + "/" + name;
        const std::string b = p.out + "/" + name;
        const bool same = file_exists(a) && file_exists(b) &&
                          read_file_bytes(a) == read_file_bytes(b);
        if (!p.quiet) std::cout << (same ? "identical: " : "DIFFERS: ") << name << "\n";
        if (!same) ++mismatches;
    }
    if (mismatches > 0)
        fail(Errc::ValidationError,
             std::to_string(mismatches) + " replayed files differ from the originals");
    if (!p.quiet) std::cout << "replay byte-identical\n";
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"training-data pipeline: synthetic tracklets, label refinement, "
                 "centroid memory, mixed mini-batch sampling"};
    app.require_subcommand(1);
    std::function<void()> action;

    // gen
    auto gen_params = std::make_shared<GenParams>();
    auto gen_spec_path = std::make_shared<std::string>();
    {
        CLI::App* sub = app.add_subcommand("gen", "generate a synthetic dataset");
        sub->add_option("--spec", *gen_spec_path, "generator spec file")->required();
        sub->add_option("--out", gen_params->out, "output directory")->required();
        auto seed = std::make_shared<std::uint64_t>(0);
        sub->add_option("--seed", *seed, "seed override");
        sub->add_flag("--quiet", gen_params->quiet, "suppress chatter");
        sub->callback([gen_params, gen_spec_path, seed, sub, &action]() {
            action = [gen_params, gen_spec_path, seed, sub]() {
                gen_params->spec = SynthSpec::load(*gen_spec_path);
                if (sub->count("--seed")) gen_params->spec.seed = *seed;
                cmd_gen(*gen_params);
            };
        });
    }

    // shared config-loading plumbing for relabel/sample/train
    struct CfgFlags {
        std::string config_path;
        std::uint64_t seed = 0;
        std::string strategy;
        std::uint32_t epochs = 0, iterations = 0, k = 0;
    };
    auto add_cfg_options = [](CLI::App* sub, const std::shared_ptr<CfgFlags>& f,
                              bool with_train_flags) {
        sub->add_option("--config", f->config_path, "pipeline config file");
        sub->add_option("--seed", f->seed, "seed override");
        sub->add_option("--strategy", f->strategy, "pairing strategy")
            ->check(CLI::IsMember({"random", "hard", "soft", "mean", "median"}));
        sub->add_option("--k", f->k, "images per pid for the refinement subset");
        if (with_train_flags) {
            sub->add_option("--epochs", f->epochs, "training epochs");
            sub->add_option("--iterations", f->iterations, "iterations per epoch");
        }
    };
    auto given = [](CLI::App* sub, const std::string& name) {
        const CLI::Option* o = sub->get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };
    auto resolve_cfg = [given](CLI::App* sub, const CfgFlags& f) {
        PipelineConfig cfg;
        if (!f.config_path.empty()) cfg = PipelineConfig::load(f.config_path);
        if (given(sub, "--seed")) cfg.seed = f.seed;
        if (given(sub, "--strategy")) cfg.strategy = strategy_from_string(f.strategy);
        if (given(sub, "--k")) cfg.k_per_pid = f.k;
        if (given(sub, "--epochs")) cfg.epochs = f.epochs;
        if (given(sub, "--iterations")) cfg.iterations_per_epoch = f.iterations;
        return cfg;
    };

    // relabel
    auto rl_params = std::make_shared<RelabelParams>();
    auto rl_flags = std::make_shared<CfgFlags>();
    {
        CLI::App* sub = app.add_subcommand("relabel", "run one refinement epoch");
        sub->add_option("--manifest", rl_params->manifest, "dataset manifest")->required();
        sub->add_option("--features", rl_params->features, "embedding file")->required();
        sub->add_option("--memory-bin", rl_params->memory_bin, "centroid memory binary");
        sub->add_option("--memory-pids", rl_params->memory_pids, "centroid memory sidecar");
        sub->add_option("--out", rl_params->out, "output directory")->required();
        add_cfg_options(sub, rl_flags, false);
        sub->add_flag("--quiet", rl_params->quiet, "suppress chatter");
        sub->callback([rl_params, rl_flags, sub, resolve_cfg, &action]() {
            action = [rl_params, rl_flags, sub, resolve_cfg]() {
                if (rl_params->memory_bin.empty() != rl_params->memory_pids.empty())
                    fail(Errc::UsageError,
                         "--memory-bin and --memory-pids must be given together");
                rl_params->cfg = resolve_cfg(sub, *rl_flags);
                cmd_relabel(*rl_params);
            };
        });
    }

    // centroids
    auto cn_params = std::make_shared<CentroidsParams>();
    {
        CLI::App* sub = app.add_subcommand("centroids", "full centroid recomputation");
        sub->add_option("--manifest", cn_params->manifest, "dataset manifest")->required();
        sub->add_option("--features", cn_params->features, "embedding file")->required();
        sub->add_option("--out", cn_params->out, "output directory")->required();
        sub->add_flag("--quiet", cn_params->quiet, "suppress chatter");
        sub->callback([cn_params, &action]() { action = [cn_params]() { cmd_centroids(*cn_params); }; });
    }

    // sample
    auto sm_params = std::make_shared<SampleParams>();
    auto sm_flags = std::make_shared<CfgFlags>();
    {
        CLI::App* sub = app.add_subcommand("sample", "emit mixed mini-batch plans");
        sub->add_option("--manifest", sm_params->manifest, "dataset manifest")->required();
        sub->add_option("--features", sm_params->features, "embedding file")->required();
        sub->add_option("--out", sm_params->out, "output directory")->required();
        sub->add_option("--iterations", sm_flags->iterations, "number of batches");
        add_cfg_options(sub, sm_flags, false);
        sub->add_flag("--quiet", sm_params->quiet, "suppress chatter");
        sub->callback([sm_params, sm_flags, sub, resolve_cfg, &action]() {
            action = [sm_params, sm_flags, sub, resolve_cfg]() {
                sm_params->cfg = resolve_cfg(sub, *sm_flags);
                sm_params->iterations = sub->count("--iterations")
                                            ? sm_flags->iterations
                                            : sm_params->cfg.iterations_per_epoch;
                cmd_sample(*sm_params);
            };
        });
    }

    // train
    auto tr_params = std::make_shared<TrainParams>();
    auto tr_flags = std::make_shared<CfgFlags>();
    {
        CLI::App* sub = app.add_subcommand("train", "run the full training loop");
        sub->add_option("--manifest", tr_params->manifest, "dataset manifest")->required();
        sub->add_option("--features", tr_params->features, "raw feature file")->required();
        sub->add_option("--out", tr_params->out, "output directory")->required();
        add_cfg_options(sub, tr_flags, true);
        sub->add_flag("--quiet", tr_params->quiet, "suppress chatter");
        sub->callback([tr_params, tr_flags, sub, resolve_cfg, &action]() {
            action = [tr_params, tr_flags, sub, resolve_cfg]() {
                tr_params->cfg = resolve_cfg(sub, *tr_flags);
                cmd_train(*tr_params);
            };
        });
    }

    // eval
    auto ev_params = std::make_shared<EvalParams>();
    {
        CLI::App* sub = app.add_subcommand("eval", "cross-camera retrieval metrics");
        sub->add_option("--manifest", ev_params->manifest, "dataset manifest")->required();
        sub->add_option("--features", ev_params->features, "embedding or raw feature file")
            ->required();
        sub->add_option("--encoder", ev_params->encoder,
                        "encoder file; features are encoded before evaluation");
        sub->add_option("--out", ev_params->out, "output directory")->required();
        sub->add_flag("--quiet", ev_params->quiet, "suppress chatter");
        sub->callback([ev_params, &action]() { action = [ev_params]() { cmd_eval(*ev_params); }; });
    }

    // bench
    auto bn_params = std::make_shared<BenchParams>();
    auto bn_klist = std::make_shared<std::string>("2,4,8");
    {
        CLI::App* sub = app.add_subcommand("bench", "embedding-operation counts per k");
        sub->add_option("--manifest", bn_params->manifest, "dataset manifest")->required();
        sub->add_option("--features", bn_params->features, "embedding file")->required();
        sub->add_option("--k", *bn_klist, "comma-separated k values");
        sub->add_option("--out", bn_params->out, "output directory")->required();
        sub->add_flag("--quiet", bn_params->quiet, "suppress chatter");
        sub->callback([bn_params, bn_klist, &action]() {
            action = [bn_params, bn_klist]() {
                bn_params->k_values.clear();
                std::istringstream ss(*bn_klist);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    unsigned long v = 0;
                    try {
                        v = std::stoul(tok);
                    } catch (const std::exception&) {
                        fail(Errc::UsageError, "bad --k value '" + tok + "'");
                    }
                    if (v == 0) fail(Errc::UsageError, "--k values must be positive");
                    bn_params->k_values.push_back(static_cast<std::uint32_t>(v));
                }
                if (bn_params->k_values.empty())
                    fail(Errc::UsageError, "--k list is empty");
                cmd_bench(*bn_params);
            };
        });
    }

    // rerun
    auto rr_params = std::make_shared<RerunParams>();
    {
        CLI::App* sub = app.add_subcommand("rerun", "replay a run.meta and compare outputs");
        sub->add_option("--meta", rr_params->meta, "run.meta file")->required();
        sub->add_option("--out", rr_params->out, "output directory for the replay")->required();
        sub->add_flag("--quiet", rr_params->quiet, "suppress chatter");
        sub->callback([rr_params, &action]() { action = [rr_params]() { cmd_rerun(*rr_params); }; });
    }

    try {
        app.parse(argc, argv);
        if (action) action();
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "UsageError: " << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << e.code_name() << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "ValidationError: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

} // namespace mixpipe

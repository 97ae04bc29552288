#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

int mixrun(const std::string& args) {
    const std::string cmd = std::string(MIXPIPE_BIN) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    os << text;
}

std::vector<std::string> tsv_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == '\t') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> data_lines(const fs::path& p) {
    std::ifstream is(p);
    REQUIRE(is.good());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty() && line[0] != '#') out.push_back(line);
    return out;
}

const char* kSmallSpec =
    "num_multicam_pids = 6\n"
    "num_singlecam_pids = 12\n"
    "images_per_pid = 10\n"
    "num_cameras = 3\n"
    "dim_raw = 16\n"
    "intra_noise_sigma = 0.05\n"
    "frag_rate = 0.1\n"
    "mislabel_rate = 0.05\n"
    "junk_rate = 0.05\n"
    "seed = 11\n";

const char* kSmallConfig =
    "n_p = 4\n"
    "n_k = 2\n"
    "k_per_pid = 4\n"
    "epochs = 2\n"
    "iterations_per_epoch = 5\n"
    "encoder_dim = 8\n"
    "seed = 11\n";

} // namespace

TEST_CASE("gen output is byte-identical across runs") {
    testutil::TempDir td;
    write_text(td.file("gen.spec"), kSmallSpec);
    REQUIRE(mixrun("gen --spec " + td.file("gen.spec") + " --out " + td.file("a") +
                   " --quiet") == 0);
    REQUIRE(mixrun("gen --spec " + td.file("gen.spec") + " --out " + td.file("b") +
                   " --quiet") == 0);
    for (const char* name : {"manifest.tsv", "features.bin", "truth.tsv", "run.meta"}) {
        CAPTURE(name);
        CHECK(read_bytes(td.file("a") + "/" + name) == read_bytes(td.file("b") + "/" + name));
    }
}

TEST_CASE("exit codes distinguish usage, io, and domain failures") {
    testutil::TempDir td;
    CHECK(mixrun("") == 2);                       // no subcommand
    CHECK(mixrun("gen --no-such-flag") == 2);     // unknown option
    CHECK(mixrun("--help") == 0);
    CHECK(mixrun("gen --spec " + td.file("missing.spec") + " --out " + td.file("o")) == 3);

    // relabel with a missing manifest: io error, and no partial outputs
    CHECK(mixrun("relabel --manifest " + td.file("nope.tsv") + " --features " +
                 td.file("nope.bin") + " --out " + td.file("r")) == 3);
    CHECK(!fs::exists(td.file("r") + "/refined_manifest.tsv"));

    // sample with more pid slots than the dataset offers: domain error
    write_text(td.file("gen.spec"), kSmallSpec);
    REQUIRE(mixrun("gen --spec " + td.file("gen.spec") + " --out " + td.file("d") +
                   " --quiet") == 0);
    CHECK(mixrun("sample --manifest " + td.file("d") + "/manifest.tsv --features " +
                 td.file("d") + "/features.bin --iterations 2 --out " + td.file("s")) == 4);
}

TEST_CASE("the full pipeline runs end to end") {
    testutil::TempDir td;
    write_text(td.file("gen.spec"), kSmallSpec);
    write_text(td.file("pipe.cfg"), kSmallConfig);
    const std::string data = td.file("data");
    REQUIRE(mixrun("gen --spec " + td.file("gen.spec") + " --out " + data + " --quiet") == 0);

    const std::string cfg = " --config " + td.file("pipe.cfg") + " --quiet";
    const std::string inputs =
        " --manifest " + data + "/manifest.tsv --features " + data + "/features.bin";

    REQUIRE(mixrun("centroids" + inputs + " --out " + td.file("cent") + " --quiet") == 0);
    REQUIRE(mixrun("relabel" + inputs + " --memory-bin " + td.file("cent") +
                   "/memory.bin --memory-pids " + td.file("cent") + "/memory.pids --out " +
                   td.file("ref") + cfg) == 0);
    REQUIRE(mixrun("sample" + inputs + " --iterations 4 --out " + td.file("plans") + cfg) ==
            0);
    REQUIRE(mixrun("train" + inputs + " --out " + td.file("tr") + cfg) == 0);
    REQUIRE(mixrun("eval" + inputs + " --encoder " + td.file("tr") +
                   "/encoder_m.bin --out " + td.file("ev") + " --quiet") == 0);

    for (const char* f : {"cent/memory.bin", "cent/memory.pids", "ref/refined_manifest.tsv",
                          "ref/report.txt", "plans/plans.tsv", "tr/encoder_e.bin",
                          "tr/encoder_m.bin", "tr/loss_curve.tsv", "tr/reports.txt",
                          "ev/eval.tsv"}) {
        CAPTURE(f);
        CHECK(fs::exists(td.file(f)));
    }

    const auto eval_rows = data_lines(td.file("ev") + "/eval.tsv");
    REQUIRE(eval_rows.size() == 1);
    CHECK(tsv_fields(eval_rows[0]).size() == 5);

    const std::string meta = read_bytes(td.file("tr") + "/run.meta");
    CHECK(meta.find("subcommand = train") != std::string::npos);
    CHECK(meta.find("config.tau_rel = 0.6") != std::string::npos);
    CHECK(meta.find("config.n_p = 4") != std::string::npos);
    CHECK(meta.find("input.manifest = ") != std::string::npos);

    // each sampling plan row pairs n_p pids and lists 2 * n_p * n_k sample ids
    const auto plan_rows = data_lines(td.file("plans") + "/plans.tsv");
    REQUIRE(plan_rows.size() == 4);
    for (const auto& row : plan_rows) {
        const auto fields = tsv_fields(row);
        REQUIRE(fields.size() >= 2 + 2 * 4 * 2);
        std::size_t commas = std::count(fields[1].begin(), fields[1].end(), ',');
        CHECK(commas == 3);  // 4 pairs
    }
}

TEST_CASE("bench reflects the subset economy exactly on uniform data") {
    testutil::TempDir td;
    write_text(td.file("u.spec"),
               "num_multicam_pids = 4\n"
               "num_singlecam_pids = 10\n"
               "images_per_pid = 24\n"
               "num_cameras = 4\n"
               "dim_raw = 12\n"
               "intra_noise_sigma = 0.05\n"
               "seed = 7\n");
    const std::string data = td.file("data");
    REQUIRE(mixrun("gen --spec " + td.file("u.spec") + " --out " + data + " --quiet") == 0);
    REQUIRE(mixrun("bench --manifest " + data + "/manifest.tsv --features " + data +
                   "/features.bin --k 2,4,8,24,32 --out " + td.file("bench") + " --quiet") ==
            0);

    const auto rows = data_lines(td.file("bench") + "/bench.tsv");
    REQUIRE(rows.size() == 5);
    std::vector<unsigned long long> subset_ops, naive_ops;
    std::vector<std::string> ratios;
    for (const auto& row : rows) {
        const auto f = tsv_fields(row);
        REQUIRE(f.size() == 4);
        subset_ops.push_back(std::stoull(f[1]));
        naive_ops.push_back(std::stoull(f[2]));
        ratios.push_back(f[3]);
    }
    // every single-camera pid keeps its 24 train images, so k=4 is a 6x saving
    CHECK(ratios[0] == "12");
    CHECK(ratios[1] == "6");
    CHECK(ratios[2] == "3");
    // once k reaches the group size the subset is everything
    CHECK(ratios[3] == "1");
    CHECK(ratios[4] == "1");
    for (auto n : naive_ops) CHECK(n == naive_ops[0]);
    CHECK(subset_ops[1] == 2 * subset_ops[0]);
    CHECK(subset_ops[2] == 4 * subset_ops[0]);
    CHECK(subset_ops[3] == naive_ops[0]);
    CHECK(subset_ops[4] == naive_ops[0]);
}

TEST_CASE("rerun replays recorded runs byte for byte") {
    testutil::TempDir td;
    write_text(td.file("gen.spec"), kSmallSpec);
    write_text(td.file("pipe.cfg"), kSmallConfig);
    const std::string data = td.file("data");
    REQUIRE(mixrun("gen --spec " + td.file("gen.spec") + " --out " + data + " --quiet") == 0);

    const std::string cfg = " --config " + td.file("pipe.cfg") + " --quiet";
    const std::string inputs =
        " --manifest " + data + "/manifest.tsv --features " + data + "/features.bin";
    REQUIRE(mixrun("centroids" + inputs + " --out " + td.file("cent") + " --quiet") == 0);
    REQUIRE(mixrun("relabel" + inputs + " --memory-bin " + td.file("cent") +
                   "/memory.bin --memory-pids " + td.file("cent") + "/memory.pids --out " +
                   td.file("ref") + cfg) == 0);
    REQUIRE(mixrun("sample" + inputs + " --iterations 4 --out " + td.file("plans") + cfg) ==
            0);

    auto replayed = [&](const std::string& src, const std::string& tag,
                        std::initializer_list<const char*> files) {
        const std::string out = td.file("replay_" + tag);
        REQUIRE(mixrun("rerun --meta " + td.file(src) + "/run.meta --out " + out +
                       " --quiet") == 0);
        for (const char* f : files) {
            CAPTURE(f);
            CHECK(read_bytes(td.file(src) + "/" + f) == read_bytes(out + "/" + f));
        }
    };
    replayed("data", "gen", {"manifest.tsv", "features.bin", "truth.tsv", "run.meta"});
    replayed("ref", "relabel", {"refined_manifest.tsv", "report.txt", "run.meta"});
    replayed("plans", "sample", {"plans.tsv", "run.meta"});
}

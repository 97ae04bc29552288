#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mixpipe/types.hpp"

namespace mixpipe {

// --- text helpers ---------------------------------------------------------

// Shortest representation that round-trips the exact double.
std::string format_double(double v);

struct KvEntry {
    std::string key;
    std::string value;
    int line_no = 0;
};

// `key = value` lines, '#' comments, blank lines ignored.
std::vector<KvEntry> read_kv_file(const std::string& path);

// --- manifest -------------------------------------------------------------

// Tab-separated `sample_id pid source context_id split`; '#' comments.
DatasetManifest read_manifest(const std::string& path);
void write_manifest(const DatasetManifest& manifest, const std::string& path);

// --- embeddings -----------------------------------------------------------

// Binary little-endian: "MXEB", u32 version(1), u32 dim, u64 rows, then
// rows*dim f32 row-major.
EmbeddingMatrix read_embeddings(const std::string& path);
void write_embeddings(const EmbeddingMatrix& matrix, const std::string& path);

// --- ground truth sidecar -------------------------------------------------

// Tab-separated with a `sample_id true_pid` header line; junk samples carry
// pid -1.
std::map<SampleId, Pid> read_truth(const std::string& path);
void write_truth(const std::map<SampleId, Pid>& truth, const std::string& path);

// --- misc -----------------------------------------------------------------

bool file_exists(const std::string& path);
std::vector<std::uint8_t> read_file_bytes(const std::string& path);

} // namespace mixpipe

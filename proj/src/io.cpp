#include "mixpipe/io.hpp"

#include <bit>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mixpipe {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, tab - start)));
        start = tab + 1;
    }
    return out;
}

std::int64_t parse_i64(const std::string& s, const std::string& path, int line_no) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        fail(Errc::ParseError, path + ":" + std::to_string(line_no) +
                                   ": bad integer '" + s + "'");
    return v;
}

void put_u32(std::ofstream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // Prefer the shortest form that still round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char tmp[64];
        std::snprintf(tmp, sizeof(tmp), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(tmp, "%lf", &back);
        if (back == v) return tmp;
    }
    return buf;
}

std::vector<KvEntry> read_kv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(Errc::IoError, "cannot open " + path);
    std::vector<KvEntry> out;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            fail(Errc::ParseError,
                 path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        KvEntry e;
        e.key = trim(t.substr(0, eq));
        e.value = trim(t.substr(eq + 1));
        e.line_no = line_no;
        if (e.key.empty())
            fail(Errc::ParseError, path + ":" + std::to_string(line_no) + ": empty key");
        out.push_back(std::move(e));
    }
    return out;
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(Errc::IoError, "cannot open " + path);
    std::vector<SampleRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = split_tabs(line);
        if (fields.size() != 5)
            fail(Errc::ParseError, path + ":" + std::to_string(line_no) + ": expected 5 fields, got " +
                                        std::to_string(fields.size()));
        SampleRecord r;
        r.sample_id = parse_i64(fields[0], path, line_no);
        r.pid = parse_i64(fields[1], path, line_no);
        if (fields[2] == "M") r.source = Source::MultiCamera;
        else if (fields[2] == "S") r.source = Source::SingleCamera;
        else
            fail(Errc::ParseError,
                 path + ":" + std::to_string(line_no) + ": source must be M or S, got '" +
                     fields[2] + "'");
        r.context_id = parse_i64(fields[3], path, line_no);
        if (fields[4] == "train") r.split = Split::Train;
        else if (fields[4] == "query") r.split = Split::Query;
        else if (fields[4] == "gallery") r.split = Split::Gallery;
        else
            fail(Errc::ParseError,
                 path + ":" + std::to_string(line_no) + ": bad split '" + fields[4] + "'");
        records.push_back(r);
    }
    return DatasetManifest(std::move(records));
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(Errc::IoError, "cannot write " + path);
    os << "# sample_id\tpid\tsource\tcontext_id\tsplit\n";
    for (const auto& r : manifest.records()) {
        os << r.sample_id << '\t' << r.pid << '\t' << source_tag(r.source) << '\t'
           << r.context_id << '\t' << split_tag(r.split) << '\n';
    }
    if (!os) fail(Errc::IoError, "write failed for " + path);
}

EmbeddingMatrix read_embeddings(const std::string& path) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() < 20) fail(Errc::TruncatedFile, path + ": shorter than header");
    if (std::memcmp(bytes.data(), "MXEB", 4) != 0)
        fail(Errc::BadMagic, path + ": bad magic");
    const std::uint32_t version = get_u32(bytes.data() + 4);
    if (version != 1)
        fail(Errc::BadMagic, path + ": unsupported version " + std::to_string(version));
    const std::uint32_t dim = get_u32(bytes.data() + 8);
    const std::uint64_t rows = get_u64(bytes.data() + 12);
    if (rows > 0 && dim == 0) fail(Errc::DimMismatch, path + ": rows > 0 but dim = 0");
    const std::uint64_t need = 20 + rows * static_cast<std::uint64_t>(dim) * 4;
    if (bytes.size() != need)
        fail(Errc::TruncatedFile, path + ": expected " + std::to_string(need) +
                                      " bytes, found " + std::to_string(bytes.size()));
    EmbeddingMatrix m(dim);
    m.data.resize(static_cast<std::size_t>(rows) * dim);
    for (std::size_t i = 0; i < m.data.size(); ++i)
        m.data[i] = std::bit_cast<float>(get_u32(bytes.data() + 20 + i * 4));
    return m;
}

void write_embeddings(const EmbeddingMatrix& matrix, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(Errc::IoError, "cannot write " + path);
    os.write("MXEB", 4);
    put_u32(os, 1);
    put_u32(os, matrix.dim);
    put_u64(os, matrix.rows());
    for (float v : matrix.data) put_u32(os, std::bit_cast<std::uint32_t>(v));
    if (!os) fail(Errc::IoError, "write failed for " + path);
}

std::map<SampleId, Pid> read_truth(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(Errc::IoError, "cannot open " + path);
    std::map<SampleId, Pid> out;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(is, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!saw_header) {
            // first non-comment line is the column header
            saw_header = true;
            continue;
        }
        auto fields = split_tabs(line);
        if (fields.size() != 2)
            fail(Errc::ParseError, path + ":" + std::to_string(line_no) + ": expected 2 fields");
        SampleId id = parse_i64(fields[0], path, line_no);
        Pid pid = parse_i64(fields[1], path, line_no);
        if (!out.emplace(id, pid).second)
            fail(Errc::DuplicateSampleId,
                 path + ":" + std::to_string(line_no) + ": duplicate sample id");
    }
    return out;
}

void write_truth(const std::map<SampleId, Pid>& truth, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(Errc::IoError, "cannot write " + path);
    os << "sample_id\ttrue_pid\n";
    for (const auto& [id, pid] : truth) os << id << '\t' << pid << '\n';
    if (!os) fail(Errc::IoError, "write failed for " + path);
}

bool file_exists(const std::string& path) {
    std::ifstream is(path);
    return static_cast<bool>(is);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Errc::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    const std::string& s = ss.str();
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

} // namespace mixpipe

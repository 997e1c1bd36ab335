#include "provdistill/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>
#include <nlohmann/json.hpp>

#include "provdistill/errors.hpp"

namespace provdistill::io {

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(size_t, const std::string&)>& fn) {
    // gzopen reads plain files too, so one code path covers both.
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw Error(Errc::missing_artifact, "cannot open " + path.string());
    std::string line;
    size_t lineno = 0;
    char buf[1 << 16];
    bool pending = false;
    while (true) {
        const char* got = gzgets(f, buf, sizeof(buf));
        if (!got) break;
        line.append(buf);
        if (!line.empty() && line.back() == '\n') {
            line.pop_back();
            if (!line.empty() && line.back() == '\r') line.pop_back();
            fn(++lineno, line);
            line.clear();
            pending = false;
        } else {
            pending = true;  // long line, keep accumulating
        }
    }
    if (pending || !line.empty()) fn(++lineno, line);
    gzclose(f);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::vector<std::string> out;
    for_each_line(path, [&](size_t, const std::string& l) { out.push_back(l); });
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::missing_artifact, "cannot write " + path.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::missing_artifact, "cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

uint32_t crc32_of(const void* data, size_t len) {
    return static_cast<uint32_t>(
        ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

uint32_t crc32_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::missing_artifact, "cannot read " + path.string());
    uLong crc = ::crc32(0L, Z_NULL, 0);
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof(buf));
        const std::streamsize got = f.gcount();
        if (got > 0) crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(got));
    }
    return static_cast<uint32_t>(crc);
}

void put_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f32(std::string& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

uint32_t get_u32(const std::string& in, size_t offset) {
    if (offset + 4 > in.size()) throw Error(Errc::malformed_line, "blob truncated");
    const auto* p = reinterpret_cast<const unsigned char*>(in.data() + offset);
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

float get_f32(const std::string& in, size_t offset) {
    const uint32_t bits = get_u32(in, offset);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::string matrix_to_f32_blob(const Mat& m) {
    std::string out;
    out.reserve(static_cast<size_t>(m.size()) * 4);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            put_f32(out, static_cast<float>(m(i, j)));
    return out;
}

Mat matrix_from_f32_blob(const std::string& blob, Eigen::Index rows, Eigen::Index cols) {
    if (blob.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols) * 4)
        throw Error(Errc::checksum_mismatch, "matrix blob size mismatch");
    Mat m(rows, cols);
    size_t off = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j, off += 4)
            m(i, j) = static_cast<double>(get_f32(blob, off));
    return m;
}

nlohmann::json load_json(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_text(path), nullptr, false);
    if (j.is_discarded())
        throw Error(Errc::malformed_line, "invalid JSON in " + path.string());
    return j;
}

void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

}  // namespace provdistill::io

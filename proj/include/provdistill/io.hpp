#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

namespace provdistill {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace io {

// Reads a text file line by line; .gz inputs are decompressed transparently.
// The callback receives 1-based line numbers.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(size_t, const std::string&)>& fn);

std::vector<std::string> read_lines(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

uint32_t crc32_of(const void* data, size_t len);
uint32_t crc32_file(const std::filesystem::path& path);

// Little-endian scalar append helpers for binary blobs.
void put_u32(std::string& out, uint32_t v);
void put_f32(std::string& out, float v);
uint32_t get_u32(const std::string& in, size_t offset);
float get_f32(const std::string& in, size_t offset);

// Row-major little-endian f32 blob of a double matrix (and back).
std::string matrix_to_f32_blob(const Mat& m);
Mat matrix_from_f32_blob(const std::string& blob, Eigen::Index rows, Eigen::Index cols);

nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace io
}  // namespace provdistill

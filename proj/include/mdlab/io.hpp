#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace mdlab {

/// Shortest-roundtrip decimal at 17 significant digits.
std::string fmtDouble(double v);

/// FNV-1a 64 over a canonical (sorted-key) JSON dump.
std::uint64_t canonicalHash(const nlohmann::json& j);

/// Plain table -> CSV. All cells are preformatted strings so float layout is
/// byte-stable across runs.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void addRow(std::vector<std::string> cells);
};

std::string toCsv(const Table& t);
void writeFile(const std::filesystem::path& path, const std::string& content);

/// Provenance sidecar next to each primary output. The primary files carry
/// no timestamps; the sidecar may.
void writeSidecar(const std::filesystem::path& path, const nlohmann::json& config,
                  std::uint64_t configHash, std::uint64_t seed,
                  const nlohmann::json& extra = nlohmann::json::object());

}  // namespace mdlab

#include "mdlab/io.hpp"

#include <cstdio>
#include <fstream>

#include "mdlab/common.hpp"

namespace mdlab {

std::string fmtDouble(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t canonicalHash(const nlohmann::json& j) {
    const std::string dump = j.dump();  // object keys are sorted by default
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void Table::addRow(std::vector<std::string> cells) {
    if (cells.size() != columns.size())
        throw PreconditionError("Table: row width does not match header");
    rows.push_back(std::move(cells));
}

std::string toCsv(const Table& t) {
    std::string out;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (c) out.push_back(',');
        out += t.columns[c];
    }
    out.push_back('\n');
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out.push_back(',');
            out += row[c];
        }
        out.push_back('\n');
    }
    return out;
}

void writeFile(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw PreconditionError("cannot open " + path.string() + " for writing");
    f << content;
}

void writeSidecar(const std::filesystem::path& path, const nlohmann::json& config,
                  std::uint64_t configHash, std::uint64_t seed, const nlohmann::json& extra) {
    nlohmann::json side;
    side["config"] = config;
    side["config_hash"] = configHash;
    side["seed"] = seed;
    side["tool"] = "mdlab";
    side["version"] = "0.1.0";
    if (!extra.empty()) side["provenance"] = extra;
    writeFile(path, side.dump(2) + "\n");
}

}  // namespace mdlab

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdlab/montecarlo.hpp"
#include "mdlab/processes.hpp"

namespace mdlab {

/// One experiment per file: a schema-validated JSON document. Unknown fields
/// are rejected; every numeric hypothesis (speed rule, block exponent,
/// contraction factors) is validated up front.
class ExperimentConfig {
public:
    static ExperimentConfig fromFile(const std::string& path);
    static ExperimentConfig fromJson(nlohmann::json j);

    const nlohmann::json& raw() const { return raw_; }
    std::uint64_t hash() const { return hash_; }

    std::uint64_t seed() const { return seed_; }
    long reps() const { return reps_; }
    int threads() const { return threads_; }
    const std::string& outDir() const { return outDir_; }
    const std::string& format() const { return format_; }
    const std::vector<long>& nValues() const { return nValues_; }
    SpeedRule speedRule() const;

    std::vector<double> xGrid(double defaultMax) const;
    int lagCutoff(const Process& model) const;
    long pathLength() const { return pathLength_; }
    int profileJ() const { return profileJ_; }
    int outerM() const { return outerM_; }
    int innerN() const { return innerN_; }
    int horizon() const { return horizon_; }
    std::vector<int> mcJs() const;

    std::unique_ptr<Process> buildModel() const;

    // command-specific blocks (validated when present)
    bool has(const std::string& key) const { return raw_.contains(key); }
    const nlohmann::json& section(const std::string& key) const;

    // overrides from CLI flags
    void overrideSeed(std::uint64_t s);
    void overrideReps(long r);
    void overrideThreads(int t);
    void overrideOutDir(const std::string& d);
    void overrideFormat(const std::string& f);

private:
    void validateAndExtract();

    nlohmann::json raw_;
    std::uint64_t hash_ = 0;
    std::uint64_t seed_ = 1;
    long reps_ = 10000;
    int threads_ = 1;
    std::string outDir_ = "out";
    std::string format_ = "csv";
    std::vector<long> nValues_;
    double aBeta_ = 0.5;
    long pathLength_ = 16384;
    int profileJ_ = 64;
    int outerM_ = 256;
    int innerN_ = 4096;
    int horizon_ = 16;
};

}  // namespace mdlab

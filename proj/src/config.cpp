#include "mdlab/config.hpp"

#include <fstream>
#include <set>

#include "mdlab/io.hpp"

namespace mdlab {

namespace {

using nlohmann::json;

void rejectUnknownKeys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown field '" + it.key() + "' in " + where);
}

double getNum(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw ConfigError("missing or non-numeric '" + key + "' in " + where);
    return obj[key].get<double>();
}

Innovation parseInnovation(const json& j) {
    if (!j.is_object()) throw ConfigError("'innovation' must be an object");
    rejectUnknownKeys(j, {"type", "dim", "half_width"}, "innovation");
    const std::string type = j.value("type", "");
    if (type == "rademacher") return Innovation::rademacher();
    if (type == "uniform_box") {
        const int dim = static_cast<int>(getNum(j, "dim", "innovation"));
        const double hw = getNum(j, "half_width", "innovation");
        if (dim < 1 || hw <= 0.0) throw ConfigError("uniform_box needs dim >= 1, half_width > 0");
        return Innovation::uniformBox(dim, hw);
    }
    throw ConfigError("innovation.type must be 'rademacher' or 'uniform_box'");
}

MapF parseMapF(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
    rejectUnknownKeys(j, {"type", "scale"}, where);
    const std::string type = j.value("type", "identity");
    if (type == "identity") return MapF::identity();
    if (type == "tanh") {
        const double scale = j.contains("scale") ? getNum(j, "scale", where) : 1.0;
        if (scale <= 0.0) throw ConfigError(where + ": tanh scale must be positive");
        return MapF::tanhCoordwise(scale);
    }
    throw ConfigError(where + ".type must be 'identity' or 'tanh'");
}

Eigen::MatrixXd parseMatrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a nonempty array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw ConfigError(where + " rows must be nonempty arrays");
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ConfigError(where + " rows must share a length");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) throw ConfigError(where + " entries must be numbers");
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
    }
    return m;
}

std::shared_ptr<FiniteStateChain> parseChain(const json& j, const std::string& where) {
    rejectUnknownKeys(j, {"kind", "type", "values", "transition", "observable"}, where);
    if (!j.contains("values") || !j["values"].is_array())
        throw ConfigError(where + ": 'values' array required");
    std::vector<double> values;
    for (const auto& v : j["values"]) {
        if (!v.is_number()) throw ConfigError(where + ": state values must be numbers");
        values.push_back(v.get<double>());
    }
    if (!j.contains("transition")) throw ConfigError(where + ": 'transition' matrix required");
    Eigen::MatrixXd P = parseMatrix(j["transition"], where + ".transition");
    std::optional<Eigen::MatrixXd> obs;
    if (j.contains("observable")) obs = parseMatrix(j["observable"], where + ".observable");
    try {
        return std::make_shared<FiniteStateChain>(std::move(P), std::move(values), std::move(obs));
    } catch (const PreconditionError& e) {
        throw ConfigError(std::string("invalid finite chain: ") + e.what());
    }
}

std::unique_ptr<Process> parseModel(const json& j) {
    if (!j.is_object()) throw ConfigError("'model' must be an object");
    const std::string kind = j.value("kind", "");
    try {
        if (kind == "iid") {
            rejectUnknownKeys(j, {"kind", "innovation"}, "model");
            return std::make_unique<IidProcess>(parseInnovation(j.at("innovation")));
        }
        if (kind == "linear_process") {
            rejectUnknownKeys(j, {"kind", "innovation", "coeffs", "f", "center_prepass"}, "model");
            const Innovation innov = parseInnovation(j.at("innovation"));
            const MapF f = j.contains("f") ? parseMapF(j["f"], "model.f") : MapF::identity();
            const long prepass =
                j.contains("center_prepass")
                    ? static_cast<long>(getNum(j, "center_prepass", "model"))
                    : 200000;
            const json& cj = j.at("coeffs");
            rejectUnknownKeys(cj, {"type", "rho", "L", "two_sided", "entries"}, "model.coeffs");
            const std::string ctype = cj.value("type", "");
            if (ctype == "geometric") {
                const double rho = getNum(cj, "rho", "model.coeffs");
                const int L = static_cast<int>(getNum(cj, "L", "model.coeffs"));
                const bool twoSided = cj.value("two_sided", false);
                if (!(rho > 0.0 && rho < 1.0))
                    throw ConfigError("geometric coeffs need rho in (0,1)");
                return std::make_unique<LinearProcess>(
                    LinearProcess::geometric(rho, L, twoSided, innov, f));
            }
            if (ctype == "explicit") {
                if (!cj.contains("entries") || !cj["entries"].is_array() || cj["entries"].empty())
                    throw ConfigError("explicit coeffs need a nonempty 'entries' array");
                std::vector<std::pair<int, Eigen::MatrixXd>> cs;
                for (const auto& e : cj["entries"]) {
                    rejectUnknownKeys(e, {"index", "matrix", "scalar"}, "coeff entry");
                    const int idx = static_cast<int>(getNum(e, "index", "coeff entry"));
                    if (e.contains("matrix")) {
                        cs.emplace_back(idx, parseMatrix(e["matrix"], "coeff matrix"));
                    } else if (e.contains("scalar")) {
                        const double s = getNum(e, "scalar", "coeff entry");
                        cs.emplace_back(idx, s * Eigen::MatrixXd::Identity(innov.dim(), innov.dim()));
                    } else {
                        throw ConfigError("coeff entry needs 'matrix' or 'scalar'");
                    }
                }
                return std::make_unique<LinearProcess>(std::move(cs), innov, f, prepass);
            }
            throw ConfigError("model.coeffs.type must be 'geometric' or 'explicit'");
        }
        if (kind == "stable_markov") {
            rejectUnknownKeys(j, {"kind", "map", "rho", "innovation", "f"}, "model");
            const std::string map = j.value("map", "affine");
            const double rho = getNum(j, "rho", "model");
            if (!(rho > 0.0 && rho < 1.0))
                throw ConfigError("stable_markov needs contraction rho in (0,1)");
            const Innovation innov = parseInnovation(j.at("innovation"));
            const MapF f = j.contains("f") ? parseMapF(j["f"], "model.f") : MapF::identity();
            StableMarkov::MapKind mk;
            if (map == "affine") {
                mk = StableMarkov::MapKind::Affine;
            } else if (map == "tanh") {
                mk = StableMarkov::MapKind::TanhContraction;
            } else {
                throw ConfigError("model.map must be 'affine' or 'tanh'");
            }
            return std::make_unique<StableMarkov>(mk, rho, innov, f);
        }
        if (kind == "finite_chain") {
            auto chain = parseChain(j, "model");
            return std::make_unique<FiniteStateChain>(*chain);
        }
        if (kind == "empirical_indicator") {
            rejectUnknownKeys(j, {"kind", "base", "grid", "cdf_prepass"}, "model");
            const json& bj = j.at("base");
            EmpiricalIndicator::Base base;
            const std::string btype = bj.value("type", "");
            if (btype == "iid_uniform") {
                rejectUnknownKeys(bj, {"type"}, "model.base");
                base.kind = EmpiricalIndicator::Base::Kind::IidUniform01;
            } else if (btype == "ar1") {
                rejectUnknownKeys(bj, {"type", "rho", "half_width"}, "model.base");
                base.kind = EmpiricalIndicator::Base::Kind::Ar1;
                base.rho = getNum(bj, "rho", "model.base");
                base.halfWidth = bj.contains("half_width") ? getNum(bj, "half_width", "model.base") : 1.0;
                if (!(base.rho > 0.0 && base.rho < 1.0))
                    throw ConfigError("ar1 base needs rho in (0,1)");
            } else if (btype == "finite_chain") {
                base.kind = EmpiricalIndicator::Base::Kind::Chain;
                base.chain = parseChain(bj, "model.base");
            } else {
                throw ConfigError("model.base.type must be iid_uniform, ar1 or finite_chain");
            }
            const json& gj = j.at("grid");
            rejectUnknownKeys(gj, {"type", "G", "points", "weights"}, "model.grid");
            Eigen::VectorXd grid, weights;
            const std::string gtype = gj.value("type", "uniform_midpoint");
            if (gtype == "uniform_midpoint") {
                const int G = static_cast<int>(getNum(gj, "G", "model.grid"));
                if (G < 1) throw ConfigError("grid needs G >= 1");
                grid.resize(G);
                weights.resize(G);
                for (int k = 0; k < G; ++k) {
                    grid(k) = (static_cast<double>(k) + 0.5) / static_cast<double>(G);
                    weights(k) = 1.0 / static_cast<double>(G);
                }
            } else if (gtype == "explicit") {
                if (!gj.contains("points") || !gj.contains("weights"))
                    throw ConfigError("explicit grid needs 'points' and 'weights'");
                const auto& pts = gj["points"];
                const auto& ws = gj["weights"];
                if (!pts.is_array() || !ws.is_array() || pts.size() != ws.size() || pts.empty())
                    throw ConfigError("grid points/weights must be matching nonempty arrays");
                grid.resize(static_cast<Eigen::Index>(pts.size()));
                weights.resize(static_cast<Eigen::Index>(ws.size()));
                for (std::size_t k = 0; k < pts.size(); ++k) {
                    grid(static_cast<Eigen::Index>(k)) = pts[k].get<double>();
                    weights(static_cast<Eigen::Index>(k)) = ws[k].get<double>();
                }
            } else {
                throw ConfigError("model.grid.type must be 'uniform_midpoint' or 'explicit'");
            }
            const long prepass =
                j.contains("cdf_prepass") ? static_cast<long>(getNum(j, "cdf_prepass", "model"))
                                          : 200000;
            return std::make_unique<EmpiricalIndicator>(base, std::move(grid), std::move(weights),
                                                        prepass);
        }
    } catch (const PreconditionError& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    }
    throw ConfigError(
        "model.kind must be one of iid, linear_process, stable_markov, finite_chain, "
        "empirical_indicator");
}

}  // namespace

ExperimentConfig ExperimentConfig::fromFile(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return fromJson(std::move(j));
}

ExperimentConfig ExperimentConfig::fromJson(json j) {
    ExperimentConfig cfg;
    cfg.raw_ = std::move(j);
    cfg.validateAndExtract();
    return cfg;
}

void ExperimentConfig::validateAndExtract() {
    if (!raw_.is_object()) throw ConfigError("config root must be a JSON object");
    rejectUnknownKeys(raw_,
                      {"model", "seed", "reps", "threads", "n_values", "a_rule", "x_grid",
                       "lag_cutoff", "path_length", "profile_j", "outer_m", "inner_n", "horizon",
                       "mc_js", "out_dir", "format", "mdp", "blocks", "cvm", "rate",
                       "mdp_conditions", "phi", "simulate"},
                      "config");
    if (!raw_.contains("model")) throw ConfigError("config needs a 'model' object");
    buildModel();  // full model validation up front

    if (raw_.contains("seed")) seed_ = raw_["seed"].get<std::uint64_t>();
    if (raw_.contains("reps")) {
        reps_ = raw_["reps"].get<long>();
        if (reps_ < 1) throw ConfigError("reps must be >= 1");
    }
    if (raw_.contains("threads")) {
        threads_ = raw_["threads"].get<int>();
        if (threads_ < 1) throw ConfigError("threads must be >= 1");
    }
    if (raw_.contains("out_dir")) outDir_ = raw_["out_dir"].get<std::string>();
    if (raw_.contains("format")) {
        format_ = raw_["format"].get<std::string>();
        if (format_ != "csv" && format_ != "json")
            throw ConfigError("format must be 'csv' or 'json'");
    }
    if (raw_.contains("n_values")) {
        if (!raw_["n_values"].is_array() || raw_["n_values"].empty())
            throw ConfigError("n_values must be a nonempty array");
        for (const auto& v : raw_["n_values"]) {
            const long n = v.get<long>();
            if (n < 1) throw ConfigError("n_values entries must be >= 1");
            nValues_.push_back(n);
        }
    }
    if (raw_.contains("a_rule")) {
        const json& a = raw_["a_rule"];
        rejectUnknownKeys(a, {"type", "beta"}, "a_rule");
        if (a.value("type", "power") != "power")
            throw ConfigError("a_rule.type must be 'power' (a_n = n^-beta)");
        aBeta_ = getNum(a, "beta", "a_rule");
    }
    (void)speedRule();  // validates a_n -> 0 and n a_n -> infinity
    if (raw_.contains("path_length")) {
        pathLength_ = raw_["path_length"].get<long>();
        if (pathLength_ < 16) throw ConfigError("path_length must be >= 16");
    }
    if (raw_.contains("profile_j")) {
        profileJ_ = raw_["profile_j"].get<int>();
        if (profileJ_ < 1) throw ConfigError("profile_j must be >= 1");
    }
    if (raw_.contains("outer_m")) {
        outerM_ = raw_["outer_m"].get<int>();
        if (outerM_ < 1) throw ConfigError("outer_m must be >= 1");
    }
    if (raw_.contains("inner_n")) {
        innerN_ = raw_["inner_n"].get<int>();
        if (innerN_ < 1) throw ConfigError("inner_n must be >= 1");
    }
    if (raw_.contains("horizon")) {
        horizon_ = raw_["horizon"].get<int>();
        if (horizon_ < 1) throw ConfigError("horizon must be >= 1");
    }
    if (raw_.contains("lag_cutoff") && raw_["lag_cutoff"].get<int>() < 0)
        throw ConfigError("lag_cutoff must be >= 0");
    hash_ = canonicalHash(raw_);
}

SpeedRule ExperimentConfig::speedRule() const {
    return SpeedRule(aBeta_);
}

std::vector<double> ExperimentConfig::xGrid(double defaultMax) const {
    std::vector<double> xs;
    if (raw_.contains("x_grid")) {
        const json& g = raw_["x_grid"];
        if (g.is_array()) {
            for (const auto& v : g) xs.push_back(v.get<double>());
        } else {
            rejectUnknownKeys(g, {"min", "max", "count"}, "x_grid");
            const double lo = getNum(g, "min", "x_grid");
            const double hi = getNum(g, "max", "x_grid");
            const int count = static_cast<int>(getNum(g, "count", "x_grid"));
            if (!(lo > 0.0 && hi > lo && count >= 1)) throw ConfigError("bad x_grid range");
            for (int i = 0; i < count; ++i)
                xs.push_back(lo + (hi - lo) * static_cast<double>(i) /
                                      std::max(1, count - 1));
        }
    } else {
        for (int i = 1; i <= 12; ++i)
            xs.push_back(defaultMax * static_cast<double>(i) / 12.0);
    }
    for (double x : xs)
        if (x <= 0.0) throw ConfigError("x_grid entries must be positive");
    return xs;
}

int ExperimentConfig::lagCutoff(const Process& model) const {
    if (raw_.contains("lag_cutoff")) return raw_["lag_cutoff"].get<int>();
    return defaultLagForModel(model);
}

std::vector<int> ExperimentConfig::mcJs() const {
    std::vector<int> js;
    if (raw_.contains("mc_js"))
        for (const auto& v : raw_["mc_js"]) js.push_back(v.get<int>());
    return js;
}

std::unique_ptr<Process> ExperimentConfig::buildModel() const {
    return parseModel(raw_.at("model"));
}

const nlohmann::json& ExperimentConfig::section(const std::string& key) const {
    if (!raw_.contains(key)) throw ConfigError("config section '" + key + "' required");
    return raw_.at(key);
}

void ExperimentConfig::overrideSeed(std::uint64_t s) {
    seed_ = s;
    raw_["seed"] = s;
    hash_ = canonicalHash(raw_);
}
void ExperimentConfig::overrideReps(long r) {
    requireConfig(r >= 1, "reps must be >= 1");
    reps_ = r;
    raw_["reps"] = r;
    hash_ = canonicalHash(raw_);
}
void ExperimentConfig::overrideThreads(int t) {
    requireConfig(t >= 1, "threads must be >= 1");
    threads_ = t;
    // thread count never enters the hash: outputs must not depend on it
}
void ExperimentConfig::overrideOutDir(const std::string& d) {
    outDir_ = d;
}
void ExperimentConfig::overrideFormat(const std::string& f) {
    requireConfig(f == "csv" || f == "json", "format must be 'csv' or 'json'");
    format_ = f;
}

}  // namespace mdlab

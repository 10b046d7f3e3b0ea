#include "mdlab/commands.hpp"

#include <cmath>
#include <filesystem>

#include "mdlab/dependence.hpp"
#include "mdlab/inequalities.hpp"
#include "mdlab/io.hpp"
#include "mdlab/montecarlo.hpp"
#include "mdlab/rate.hpp"

namespace mdlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string b2s(bool b) {
    return b ? "1" : "0";
}

void emitTable(const ExperimentConfig& cfg, const std::string& name, const Table& t) {
    const fs::path dir(cfg.outDir());
    if (cfg.format() == "json") {
        json j;
        j["columns"] = t.columns;
        j["rows"] = t.rows;
        writeFile(dir / (name + ".json"), j.dump(2) + "\n");
    } else {
        writeFile(dir / (name + ".csv"), toCsv(t));
    }
}

void emitSidecar(const ExperimentConfig& cfg, const std::string& cmd, const json& extra) {
    writeSidecar(fs::path(cfg.outDir()) / (cmd + "_meta.json"), cfg.raw(), cfg.hash(), cfg.seed(),
                 extra);
}

/// Exact Q where the model admits one; MC estimate otherwise.
QEstimate obtainQ(const ExperimentConfig& cfg, const Process& model) {
    if (const auto* chain = dynamic_cast<const FiniteStateChain*>(&model)) {
        QEstimate q{chain->exactQ(), 0.0, 0.0, 0, 0, 0};
        return q;
    }
    if (const auto* iid = dynamic_cast<const IidProcess*>(&model)) {
        const auto& innov = iid->innovation();
        const Eigen::MatrixXd cov =
            innov.coordVariance() *
            Eigen::MatrixXd::Identity(innov.dim(), innov.dim());
        return QEstimate{TraceClassOperator(cov), 0.0, 0.0, 0, 0, 0};
    }
    const int reps = static_cast<int>(std::min<long>(cfg.reps(), 512));
    return estimateQ(model, cfg.lagCutoff(model), std::max(2, reps), cfg.pathLength(), cfg.seed(),
                     cfg.threads());
}

json qProvenance(const ExperimentConfig& cfg, const Process& model, const QEstimate& q) {
    json p;
    p["model_kind"] = model.kind();
    p["lag_cutoff"] = q.lagCutoff;
    p["reps"] = q.reps;
    p["path_length"] = q.pathLen;
    p["clamp_magnitude"] = q.clampMagnitude;
    p["rel_se"] = q.relSe;
    p["exact"] = (q.reps == 0);
    p["config_hash"] = cfg.hash();
    p["seed"] = cfg.seed();
    return p;
}

Region parseRegion(const json& r, int dim) {
    if (!r.is_object()) throw ConfigError("mdp.region must be an object");
    const std::string type = r.value("type", "");
    if (type == "half_space") {
        if (!r.contains("u") || !r["u"].is_array())
            throw ConfigError("half_space region needs a direction 'u'");
        HVec u(static_cast<Eigen::Index>(r["u"].size()));
        for (std::size_t i = 0; i < r["u"].size(); ++i)
            u(static_cast<Eigen::Index>(i)) = r["u"][i].get<double>();
        if (u.size() != dim) throw ConfigError("region direction dimension mismatch");
        return Region::halfSpace(std::move(u), r.value("r", 1.0));
    }
    if (type == "ball") return Region::ballComplement(r.value("r", 1.0));
    throw ConfigError("mdp.region.type must be 'half_space' or 'ball'");
}

}  // namespace

// ------------------------------------------------------------------ simulate

void cmdSimulate(const ExperimentConfig& cfg) {
    const auto model = cfg.buildModel();
    requireConfig(!cfg.nValues().empty(), "simulate needs n_values");
    const long n = cfg.nValues().front();
    const long reps = cfg.reps();
    require(reps * n * model->dim() <= 4'000'000,
            "simulate: reps * n * dim too large for path files; reduce the budget");
    Table paths;
    paths.columns = {"rep", "i"};
    for (int c = 0; c < model->dim(); ++c) paths.columns.push_back("x" + std::to_string(c));
    Table sups;
    sups.columns = {"rep", "sup_norm_zn", "endpoint_norm_zn"};
    for (long r = 0; r < reps; ++r) {
        Rng rng(cfg.seed(), static_cast<std::uint64_t>(r));
        const auto xs = model->samplePath(static_cast<int>(n), rng);
        HVec s = HVec::Zero(model->dim());
        double sup = 0.0;
        for (long i = 0; i < n; ++i) {
            std::vector<std::string> row{std::to_string(r), std::to_string(i + 1)};
            for (int c = 0; c < model->dim(); ++c)
                row.push_back(fmtDouble(xs[static_cast<std::size_t>(i)](c)));
            paths.addRow(std::move(row));
            s += xs[static_cast<std::size_t>(i)];
            sup = std::max(sup, s.norm());
        }
        const double scale = 1.0 / std::sqrt(static_cast<double>(n));
        sups.addRow({std::to_string(r), fmtDouble(sup * scale), fmtDouble(s.norm() * scale)});
    }
    emitTable(cfg, "sample_path", paths);
    emitTable(cfg, "zn_stats", sups);
    json extra;
    extra["model_kind"] = model->kind();
    extra["bound_B"] = model->boundB();
    emitSidecar(cfg, "simulate", extra);
}

// -------------------------------------------------------------------- coeffs

void cmdCoeffs(const ExperimentConfig& cfg) {
    const auto model = cfg.buildModel();
    const int J = cfg.profileJ();
    DependenceProfile profile;
    bool certified = true;
    try {
        profile = certifiedProfile(*model, J);
    } catch (const PreconditionError&) {
        certified = false;
        profile.fwd = estimateFwdNorms(*model, J, cfg.outerM(), cfg.innerN(), cfg.seed(),
                                       cfg.threads());
        profile.bwd.assign(static_cast<std::size_t>(J),
                           {0.0, 0.0, model->adapted() ? EstimateMode::Exact : EstimateMode::McLower});
    }
    const auto js = cfg.mcJs();
    if (certified && !js.empty())
        addMcEstimates(profile, *model, js, cfg.outerM(), cfg.innerN(), cfg.seed(), cfg.threads());

    Table t;
    t.columns = {"j",        "fwd",    "fwd_mode", "fwd_se", "bwd",
                 "bwd_mode", "bwd_se", "fwd_mc",   "fwd_mc_se", "bwd_mc", "bwd_mc_se"};
    for (int j = 1; j <= J; ++j) {
        const auto& f = profile.fwd[static_cast<std::size_t>(j - 1)];
        const auto& b = profile.bwd[static_cast<std::size_t>(j - 1)];
        std::string fmc = "", fmcSe = "", bmc = "", bmcSe = "";
        if (!profile.fwdMc.empty() && profile.fwdMc[static_cast<std::size_t>(j - 1)].value >= 0.0) {
            fmc = fmtDouble(profile.fwdMc[static_cast<std::size_t>(j - 1)].value);
            fmcSe = fmtDouble(profile.fwdMc[static_cast<std::size_t>(j - 1)].se);
        }
        if (!profile.bwdMc.empty() && profile.bwdMc[static_cast<std::size_t>(j - 1)].value >= 0.0) {
            bmc = fmtDouble(profile.bwdMc[static_cast<std::size_t>(j - 1)].value);
            bmcSe = fmtDouble(profile.bwdMc[static_cast<std::size_t>(j - 1)].se);
        }
        t.addRow({std::to_string(j), fmtDouble(f.value), modeName(f.mode), fmtDouble(f.se),
                  fmtDouble(b.value), modeName(b.mode), fmtDouble(b.se), fmc, fmcSe, bmc, bmcSe});
    }
    emitTable(cfg, "profile", t);

    if (certified && !cfg.nValues().empty()) {
        Table dt;
        dt.columns = {"n", "delta"};
        for (long n : cfg.nValues()) {
            require(n <= J, "coeffs: n_values beyond profile_j");
            dt.addRow({std::to_string(n), fmtDouble(deltaSum(profile, static_cast<int>(n)))});
        }
        emitTable(cfg, "delta", dt);
    }

    if (cfg.has("phi")) {
        const auto* chain = dynamic_cast<const FiniteStateChain*>(model.get());
        requireConfig(chain != nullptr, "phi coefficients need a finite_chain model");
        const json& pj = cfg.section("phi");
        Table pt;
        pt.columns = {"n", "phi1", "phi2", "phi_tilde1", "phi_tilde2"};
        for (const auto& nv : pj.at("n_values")) {
            const int n = nv.get<int>();
            pt.addRow({std::to_string(n), fmtDouble(phi1Exact(*chain, n)),
                       fmtDouble(phi2Exact(*chain, n, cfg.horizon())),
                       fmtDouble(phiTilde1Exact(*chain, n, cfg.horizon())),
                       fmtDouble(phiTilde2Exact(*chain, n, cfg.horizon()))});
        }
        emitTable(cfg, "phi", pt);
    }

    if (cfg.has("mdp_conditions")) {
        const json& mj = cfg.section("mdp_conditions");
        std::vector<long> grid;
        for (const auto& v : mj.at("n_grid")) grid.push_back(v.get<long>());
        int pi = 1, pjj = 1;
        if (mj.contains("pair")) {
            pi = mj["pair"][0].get<int>();
            pjj = mj["pair"][1].get<int>();
        }
        const QEstimate q = obtainQ(cfg, *model);
        const auto report = checkMdpConditions(*model, q.Q, grid, pi, pjj, cfg.outerM(),
                                               cfg.innerN(), cfg.seed(), cfg.threads());
        Table mt;
        mt.columns = {"n", "cond_cov", "cond_trace", "corr_cov", "corr_inner", "exact"};
        for (const auto& row : report.rows)
            mt.addRow({std::to_string(row.n), fmtDouble(row.condCov), fmtDouble(row.condTrace),
                       fmtDouble(row.corrCov), fmtDouble(row.corrInner), b2s(row.exact)});
        emitTable(cfg, "mdp_conditions", mt);
        json extra;
        extra["fwd_series_partial"] = report.fwdSeriesPartial;
        extra["bwd_series_partial"] = report.bwdSeriesPartial;
        extra["fwd_series_cauchy"] = report.fwdSeriesCauchy;
        extra["bwd_series_cauchy"] = report.bwdSeriesCauchy;
        extra["note"] = "numerical evidence for limit conditions, not a proof";
        emitSidecar(cfg, "coeffs", extra);
        return;
    }
    json extra;
    extra["certified"] = certified;
    emitSidecar(cfg, "coeffs", extra);
}

// --------------------------------------------------------------------- bound

void cmdBound(const ExperimentConfig& cfg) {
    const auto model = cfg.buildModel();
    requireConfig(!cfg.nValues().empty(), "bound needs n_values");
    const double B = model->boundB();
    Table t;
    t.columns = {"n", "x", "bound", "delta", "B"};
    json deltas = json::object();
    for (long n : cfg.nValues()) {
        const double delta = certifiedDelta(*model, static_cast<int>(n));
        deltas[std::to_string(n)] = delta;
        const auto xs = cfg.xGrid(3.0 * std::sqrt(static_cast<double>(n)) * B);
        for (double x : xs)
            t.addRow({std::to_string(n), fmtDouble(x), fmtDouble(hoeffdingTailBound(n, x, B, delta)),
                      fmtDouble(delta), fmtDouble(B)});
    }
    emitTable(cfg, "bound", t);

    if (const auto* chain = dynamic_cast<const FiniteStateChain*>(model.get())) {
        const Phi1Series series = phi1SeriesValue(*chain, 64);
        Table pt;
        pt.columns = {"n", "x", "bound", "phi1_series", "series_tail_bound"};
        for (long n : cfg.nValues()) {
            const auto xs = cfg.xGrid(3.0 * std::sqrt(static_cast<double>(n)) * B);
            for (double x : xs)
                pt.addRow({std::to_string(n), fmtDouble(x),
                           fmtDouble(phiMixingTailBound(n, x, B, series.value)),
                           fmtDouble(series.value), fmtDouble(series.tailBound)});
        }
        emitTable(cfg, "phi_bound", pt);
    }
    json extra;
    extra["B"] = B;
    extra["C"] = maximalConstants().C;
    extra["delta_by_n"] = deltas;
    emitSidecar(cfg, "bound", extra);
}

// -------------------------------------------------------------------- verify

void cmdVerify(const ExperimentConfig& cfg) {
    const auto model = cfg.buildModel();
    requireConfig(!cfg.nValues().empty(), "verify needs n_values");
    const double B = model->boundB();
    Table t;
    t.columns = {"n",      "x",       "count", "reps",    "p_hat",
                 "ci_low", "ci_high", "bound", "violated", "exact"};
    bool violated = false;
    for (long n : cfg.nValues()) {
        const auto xs = cfg.xGrid(3.0 * std::sqrt(static_cast<double>(n)) * B);
        const TailEstimate est = verifyHoeffding(*model, static_cast<int>(n), xs, cfg.reps(),
                                                 deriveSeed(cfg.seed(), static_cast<std::uint64_t>(n)),
                                                 cfg.threads());
        violated = violated || est.anyViolation();
        for (std::size_t i = 0; i < est.xGrid.size(); ++i)
            t.addRow({std::to_string(n), fmtDouble(est.xGrid[i]), std::to_string(est.counts[i]),
                      std::to_string(est.reps), fmtDouble(est.pHat[i]), fmtDouble(est.ciLow[i]),
                      fmtDouble(est.ciHigh[i]), fmtDouble(est.boundValues[i]),
                      b2s(est.violated[i] != 0), b2s(est.exact)});
    }
    emitTable(cfg, "verify", t);

    // moment bound check at p = 1
    Table mt;
    mt.columns = {"n", "e_max_sq", "bound", "mode", "ok"};
    const auto* iid = dynamic_cast<const IidProcess*>(model.get());
    if (iid != nullptr && iid->innovation().kind() == Innovation::Kind::RademacherScalar) {
        for (int n = 1; n <= 16; ++n) {
            const RademacherEnum en = enumerateRademacher(n);
            const double bound = martMomentBound(n, 1.0, 1.0);
            mt.addRow({std::to_string(n), fmtDouble(en.eMaxSq), fmtDouble(bound), "exact",
                       b2s(en.eMaxSq <= bound)});
        }
    } else {
        const DependenceProfile prof = certifiedProfile(*model, static_cast<int>(cfg.nValues().back()));
        for (long n : cfg.nValues()) {
            double dFwd = 0.0, dBwd = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double w = std::pow(static_cast<double>(j), -1.5);
                dFwd += w * prof.fwd[static_cast<std::size_t>(j - 1)].value;
                dBwd += w * prof.bwd[static_cast<std::size_t>(j - 1)].value;
            }
            const double bound = stationaryMaxMomentBound(n, 1.0, B, dFwd, dBwd);
            // MC lower estimate of E max ||S_i||^2
            double acc = 0.0;
            const long mcReps = std::min<long>(cfg.reps(), 20000);
            for (long r = 0; r < mcReps; ++r) {
                Rng rng(deriveSeed(cfg.seed(), 0x4d4fULL + static_cast<std::uint64_t>(n)),
                        static_cast<std::uint64_t>(r));
                Eigen::MatrixXd xs;
                const Snapshot origin = model->drawOrigin(rng);
                model->pathGiven(origin, static_cast<int>(n), rng, xs);
                HVec s = HVec::Zero(model->dim());
                double best = 0.0;
                for (long k = 0; k < n; ++k) {
                    s += xs.col(static_cast<int>(k));
                    best = std::max(best, s.squaredNorm());
                }
                acc += best;
            }
            const double est = acc / static_cast<double>(mcReps);
            mt.addRow({std::to_string(n), fmtDouble(est), fmtDouble(bound), "mc-lower-estimate",
                       b2s(est <= bound)});
        }
    }
    emitTable(cfg, "moment_check", mt);

    // randomized subadditivity run (constructive generator)
    Table st;
    st.columns = {"sequences", "violations", "example_lhs", "example_rhs"};
    {
        Rng rng(deriveSeed(cfg.seed(), 0x5badULL), 0);
        long violations = 0;
        const long count = 2000;
        for (long c = 0; c < count; ++c) {
            const double C1 = 1.0 + 2.0 * rng.uniform01();
            const double C2 = 1.0 + 2.0 * rng.uniform01();
            const long n = 2 + static_cast<long>(rng.uniformIndex(120));
            std::vector<double> U(static_cast<std::size_t>(n + 1), 0.0);
            for (long k = 1; k <= n; ++k) {
                double w = 0.1 + 10.0 * rng.uniform01();
                for (long i = 1; i < k; ++i)
                    w = std::min(w, C1 * U[static_cast<std::size_t>(i)] +
                                        C2 * U[static_cast<std::size_t>(k - i)]);
                U[static_cast<std::size_t>(k)] = w;
            }
            const double p = 1.0 + 2.0 * rng.uniform01();
            const DyadicCheck chk = subadditiveDyadicCheck(U, C1, C2, p, n);
            if (!chk.ok) ++violations;
        }
        const std::vector<double> exampleU{0, 1, 2, 3, 4, 5, 6, 7, 8};
        const DyadicCheck ex = subadditiveDyadicCheck(exampleU, 1.0, 1.0, 2.0, 8);
        st.addRow({std::to_string(count), std::to_string(violations), fmtDouble(ex.lhs),
                   fmtDouble(ex.rhs)});
        if (violations > 0)
            throw InvariantViolation("subadditivity inequality violated on generated input");
    }
    emitTable(cfg, "subadditivity", st);

    json extra;
    extra["any_violation"] = violated;
    emitSidecar(cfg, "verify", extra);
    if (violated)
        throw InvariantViolation("tail bound violated (lower CI above the bound) -- build-breaking");
}

// ---------------------------------------------------------------------- rate

void cmdRate(const ExperimentConfig& cfg) {
    const auto model = cfg.buildModel();
    const QEstimate q = obtainQ(cfg, *model);
    const SpectralRate rate(q.Q);

    json qj;
    qj["dim"] = q.Q.dim();
    qj["sym_tol"] = q.Q.symTol();
    qj["range_tol"] = rate.rangeTol();
    for (Eigen::Index r = 0; r < q.Q.dim(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < q.Q.dim(); ++c) row.push_back(q.Q.matrix()(r, c));
        qj["matrix"].push_back(row);
    }
    for (Eigen::Index i = 0; i < q.Q.dim(); ++i) {
        qj["eigenvalues"].push_back(rate.eigenvalues()(i));
        json vec = json::array();
        for (Eigen::Index r = 0; r < q.Q.dim(); ++r) vec.push_back(rate.eigenvectors()(r, i));
        qj["eigenvectors"].push_back(vec);
    }
    qj["provenance"] = qProvenance(cfg, *model, q);
    writeFile(fs::path(cfg.outDir()) / "q_operator.json", qj.dump(2) + "\n");

    Table spec;
    spec.columns = {"k", "eigenvalue"};
    for (Eigen::Index i = 0; i < rate.dim(); ++i)
        spec.addRow({std::to_string(i + 1), fmtDouble(rate.eigenvalues()(i))});
    emitTable(cfg, "spectrum", spec);

    // Lambda* table over supplied (or eigendirection default) points
    std::vector<HVec> xs;
    if (cfg.has("rate") && cfg.section("rate").contains("x_points")) {
        for (const auto& pt : cfg.section("rate")["x_points"]) {
            HVec x(static_cast<Eigen::Index>(pt.size()));
            for (std::size_t i = 0; i < pt.size(); ++i)
                x(static_cast<Eigen::Index>(i)) = pt[i].get<double>();
            requireConfig(x.size() == model->dim(), "rate.x_points dimension mismatch");
            xs.push_back(std::move(x));
        }
    } else {
        for (Eigen::Index i = 0; i < rate.dim(); ++i)
            xs.push_back(rate.eigenvalues()(i) * rate.eigenvectors().col(i));
    }
    Table lt;
    lt.columns = {"point", "lambda_star"};
    for (const auto& x : xs) {
        std::string coords;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (i) coords += ";";
            coords += fmtDouble(x(i));
        }
        lt.addRow({coords, fmtDouble(rate.lambdaStar(x))});
    }
    emitTable(cfg, "lambda_table", lt);

    // half-space infima
    Table ht;
    ht.columns = {"u", "r", "inf_rate"};
    if (cfg.has("rate") && cfg.section("rate").contains("halfspaces")) {
        for (const auto& h : cfg.section("rate")["halfspaces"]) {
            HVec u(static_cast<Eigen::Index>(h.at("u").size()));
            for (std::size_t i = 0; i < h.at("u").size(); ++i)
                u(static_cast<Eigen::Index>(i)) = h["u"][i].get<double>();
            const double r = h.at("r").get<double>();
            std::string coords;
            for (Eigen::Index i = 0; i < u.size(); ++i) {
                if (i) coords += ";";
                coords += fmtDouble(u(i));
            }
            ht.addRow({coords, fmtDouble(r), fmtDouble(halfspaceInfRate(q.Q, u, r))});
        }
    } else {
        HVec u = HVec::Zero(model->dim());
        u(0) = 1.0;
        ht.addRow({"1", "1", fmtDouble(halfspaceInfRate(q.Q, u, 1.0))});
    }
    emitTable(cfg, "halfspace", ht);

    // MDP log-tail diagnostic table
    if (cfg.has("mdp")) {
        const json& mj = cfg.section("mdp");
        const Region region = parseRegion(mj.at("region"), model->dim());
        requireConfig(!cfg.nValues().empty(), "mdp table needs n_values");
        const auto rows = mdpLogTail(*model, q.Q, cfg.nValues(), cfg.speedRule(), region,
                                     cfg.reps(), cfg.seed(), cfg.threads());
        Table mt;
        mt.columns = {"n",          "a_n",          "count",       "reps",
                      "p_hat",      "an_log_p",     "an_log_ci_lo", "an_log_ci_hi",
                      "zero_count", "neg_inf_rate"};
        for (const auto& row : rows)
            mt.addRow({std::to_string(row.n), fmtDouble(row.an), std::to_string(row.count),
                       std::to_string(row.reps), fmtDouble(row.pHat), fmtDouble(row.anLogP),
                       fmtDouble(row.anLogCiLo), fmtDouble(row.anLogCiHi), b2s(row.zeroCount),
                       fmtDouble(row.negInfRate)});
        emitTable(cfg, "mdp_tail", mt);
    }
    json extra = qProvenance(cfg, *model, q);
    extra["note_mdp"] =
        "the log-tail table is an asymptotic diagnostic; finite-n agreement with -inf rate is "
        "not asserted";
    emitSidecar(cfg, "rate", extra);
}

// ----------------------------------------------------------------------- cvm

void cmdCvm(const ExperimentConfig& cfg) {
    const auto model = cfg.buildModel();
    const auto* ei = dynamic_cast<const EmpiricalIndicator*>(model.get());
    requireConfig(ei != nullptr, "cvm needs an empirical_indicator model");
    std::string mode = "exact";
    int lag = cfg.lagCutoff(*model);
    std::vector<double> yValues{0.0, 0.5, 1.0, 2.0};
    if (cfg.has("cvm")) {
        const json& cj = cfg.section("cvm");
        for (auto it = cj.begin(); it != cj.end(); ++it)
            if (it.key() != "mode" && it.key() != "lag_cutoff" && it.key() != "y_values")
                throw ConfigError("unknown field '" + it.key() + "' in cvm");
        mode = cj.value("mode", "exact");
        if (cj.contains("lag_cutoff")) lag = cj["lag_cutoff"].get<int>();
        if (cj.contains("y_values")) {
            yValues.clear();
            for (const auto& y : cj["y_values"]) yValues.push_back(y.get<double>());
        }
    }
    CvmKernel kernel;
    if (mode == "exact") {
        switch (ei->base().kind) {
            case EmpiricalIndicator::Base::Kind::IidUniform01:
                kernel = cvmKernelExactIidUniform(ei->grid(), ei->weights());
                break;
            case EmpiricalIndicator::Base::Kind::Chain:
                kernel = cvmKernelExactChain(*ei->chainBase(), ei->grid(), ei->weights(),
                                             std::max(1, lag));
                break;
            default:
                throw ConfigError("cvm exact mode needs an iid_uniform or finite_chain base");
        }
    } else if (mode == "mc") {
        kernel = cvmKernelMc(*ei, lag, static_cast<int>(std::min<long>(cfg.reps(), 256)),
                             cfg.pathLength(), cfg.seed(), cfg.threads());
    } else {
        throw ConfigError("cvm.mode must be 'exact' or 'mc'");
    }

    json kj;
    kj["lag_cutoff"] = kernel.lagCutoff;
    kj["truncation_tail"] = kernel.truncationTail;
    kj["clamp_magnitude"] = kernel.clampMagnitude;
    for (Eigen::Index i = 0; i < kernel.grid.size(); ++i) {
        kj["grid"].push_back(kernel.grid(i));
        kj["weights"].push_back(kernel.weights(i));
    }
    for (Eigen::Index r = 0; r < kernel.kernel.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < kernel.kernel.cols(); ++c) row.push_back(kernel.kernel(r, c));
        kj["kernel"].push_back(row);
    }
    writeFile(fs::path(cfg.outDir()) / "kernel.json", kj.dump(2) + "\n");

    const SpectralRate spec(kernel.toOperator());
    Table st;
    st.columns = {"k", "eigenvalue"};
    for (Eigen::Index i = 0; i < spec.dim(); ++i)
        st.addRow({std::to_string(i + 1), fmtDouble(spec.eigenvalues()(i))});
    emitTable(cfg, "cvm_spectrum", st);

    const double nu = kernel.topEigenvalue();
    Table rt;
    rt.columns = {"y", "nu", "rate"};
    for (double y : yValues) rt.addRow({fmtDouble(y), fmtDouble(nu), fmtDouble(cvmRate(kernel, y))});
    emitTable(cfg, "cvm_rate", rt);

    const SigmaSqResult sig = kantorovichSigmaSq(kernel);
    Table kt;
    kt.columns = {"y", "sigma_sq", "exhaustive", "rate"};
    for (double y : yValues)
        kt.addRow({fmtDouble(y), fmtDouble(sig.sigmaSq), b2s(sig.exhaustive),
                   fmtDouble(kantorovichRate(sig.sigmaSq, y))});
    emitTable(cfg, "kantorovich", kt);

    json extra;
    extra["mode"] = mode;
    extra["nu"] = nu;
    extra["sigma_sq"] = sig.sigmaSq;
    extra["psd_clamp_warning"] = kernel.clampMagnitude > 0.01 * std::max(nu, 1e-300);
    emitSidecar(cfg, "cvm", extra);
}

// ----------------------------------------------------------------------- lil

void cmdLil(const ExperimentConfig& cfg) {
    const auto model = cfg.buildModel();
    requireConfig(!cfg.nValues().empty(), "lil needs n_values");
    const auto rows = lilStatistic(*model, cfg.nValues(), cfg.reps(), cfg.seed(), cfg.threads());
    Table t;
    t.columns = {"n", "beta_n", "q50", "q90", "max"};
    for (const auto& r : rows)
        t.addRow({std::to_string(r.n), fmtDouble(r.betaN), fmtDouble(r.q50), fmtDouble(r.q90),
                  fmtDouble(r.maxStat)});
    emitTable(cfg, "lil", t);

    json extra;
    if (const auto* ei = dynamic_cast<const EmpiricalIndicator*>(model.get())) {
        const auto l1 = lilL1Statistic(*ei, cfg.nValues(), cfg.reps(),
                                       deriveSeed(cfg.seed(), 0x11), cfg.threads());
        double sigmaRef = std::numeric_limits<double>::quiet_NaN();
        if (ei->base().kind == EmpiricalIndicator::Base::Kind::IidUniform01) {
            sigmaRef = std::sqrt(
                kantorovichSigmaSq(cvmKernelExactIidUniform(ei->grid(), ei->weights())).sigmaSq);
        } else if (ei->base().kind == EmpiricalIndicator::Base::Kind::Chain) {
            sigmaRef = std::sqrt(kantorovichSigmaSq(cvmKernelExactChain(
                                                        *ei->chainBase(), ei->grid(), ei->weights(),
                                                        std::max(1, cfg.lagCutoff(*model))))
                                     .sigmaSq);
        }
        Table lt;
        lt.columns = {"n", "beta_n", "q50", "max", "sigma_ref"};
        for (const auto& r : l1)
            lt.addRow({std::to_string(r.n), fmtDouble(r.betaN), fmtDouble(r.q50),
                       fmtDouble(r.maxStat), fmtDouble(sigmaRef)});
        emitTable(cfg, "lil_l1", lt);
        extra["sigma_ref"] = sigmaRef;
    }
    emitSidecar(cfg, "lil", extra);
}

// -------------------------------------------------------------------- blocks

void cmdBlocks(const ExperimentConfig& cfg) {
    const auto model = cfg.buildModel();
    requireConfig(!cfg.nValues().empty(), "blocks needs n_values");
    double alpha = 0.2;
    if (cfg.has("blocks")) alpha = cfg.section("blocks").value("alpha", 0.2);
    const auto report = blockResidual(*model, cfg.nValues(), alpha, cfg.speedRule(), cfg.reps(),
                                      cfg.seed(), cfg.threads());
    Table t;
    t.columns = {"n",  "m",      "k_n",         "residual_median", "residual_q90",
                 "bracket_value", "bracket_dev", "tr_q"};
    for (const auto& r : report.rows)
        t.addRow({std::to_string(r.n), std::to_string(r.m), std::to_string(r.kn),
                  fmtDouble(r.residualMedian), fmtDouble(r.residualQ90),
                  fmtDouble(r.bracketValue), fmtDouble(r.bracketDev), fmtDouble(report.trQ)});
    emitTable(cfg, "blocks", t);
    json extra;
    extra["alpha"] = report.alpha;
    extra["tr_q"] = report.trQ;
    emitSidecar(cfg, "blocks", extra);
}

}  // namespace mdlab

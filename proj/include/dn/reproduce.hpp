#pragma once

#include <numbers>
#include <string>
#include <vector>

#include "dn/ellipticity.hpp"
#include "dn/example.hpp"
#include "dn/io.hpp"
#include "dn/spectral.hpp"

namespace dn {

struct ExampleConfig {
    int n = 1;
    double c = 1.0;
    double epsilon = std::numbers::pi / 6.0;
    double amplitude = 0.0;
    int M = 16;                          // coarsest grid
    double L = 2.0 * std::numbers::pi;   // coarsest period
    int levels = 3;                      // grid ladder (L, M), (2L, 2M), ...
    std::uint64_t seed = 42;
    int jobs = 1;
    Resolution resolution;
};

struct ExampleResult {
    Json report;
    std::string csv;  // classified eigenvalues of the last ladder step
    bool ok = false;  // every stage ran and every verdict matched the prediction
};

inline void validate(const ExampleConfig& cfg) {
    if (cfg.n != 1 && cfg.n != 2) throw ValidationError("n must be 1 or 2", "/n");
    if (!(cfg.c >= 0.0)) throw ValidationError("c must be >= 0", "/c");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < std::numbers::pi))
        throw ValidationError("epsilon must lie in (0, pi)", "/epsilon");
    if (!std::isfinite(cfg.amplitude)) throw ValidationError("amplitude must be finite", "/amplitude");
    if (cfg.levels < 2) throw ValidationError("the grid ladder needs at least 2 levels", "/levels");
    GridSpec(cfg.n, cfg.L, cfg.M);
}

/// Sample points for the index probe, all at positive distance from [-c, inf).
inline std::vector<cplx> index_probe_points(double c) {
    return {cplx(-c - 1.0, 0.0), cplx(-c - 0.5, 1.0), cplx(0.0, 1.0), cplx(2.0, 1.0), cplx(5.0, -1.0)};
}

/// Runs the example pipeline: ellipticity with constants, spectrum and refinement
/// classification along the grid ladder, a resolvent sweep on arg lambda = pi and index
/// probes. A failing stage is recorded under "errors" and the rest still run.
inline ExampleResult reproduce_example(const ExampleConfig& cfg) {
    validate(cfg);
    ExampleResult out;
    Json& rep = out.report;
    Json errors = Json::array();
    auto record = [&errors](const char* stage, const std::exception& e) {
        errors.push_back({{"stage", stage}, {"message", e.what()}});
    };

    const BumpPerturbation pert{cfg.amplitude, {}, 0.5};
    const DNSystem sys = example_system(cfg.n, cfg.c, pert);
    const Sector sector = Sector::avoiding_positive_axis(cfg.epsilon);

    rep["config"] = {{"n", cfg.n},
                     {"c", cfg.c},
                     {"epsilon", cfg.epsilon},
                     {"amplitude", cfg.amplitude},
                     {"M", cfg.M},
                     {"L", cfg.L},
                     {"levels", cfg.levels},
                     {"seed", cfg.seed}};
    rep["system"] = to_json(SystemSpec{sys, sector, GridConfig{cfg.M, cfg.L}, Tolerances{}});

    bool ok = true;

    rep["ellipticity"] = nullptr;
    try {
        EllipticityConfig ec;
        ec.resolution = cfg.resolution;
        ec.jobs = cfg.jobs;
        const auto er = check_parameter_ellipticity(sys, sector, ec);
        rep["ellipticity"] = to_json(er);
        ok = ok && er.pass;
    } catch (const std::exception& e) {
        record("ellipticity", e);
        ok = false;
    }

    std::vector<GridSpec> ladder;
    for (int i = 0; i < cfg.levels; ++i)
        ladder.emplace_back(cfg.n, cfg.L * std::pow(2.0, i), cfg.M << i);

    const double a = essential_start_estimate(sys);
    Json refinements = Json::array();
    Json counts = Json::array();
    try {
        RefinementOptions ro;
        ro.essential_start = a;
        ro.jobs = cfg.jobs;
        std::vector<std::vector<cplx>> spectra;
        for (const auto& g : ladder) spectra.push_back(spectrum(assemble(sys, g, ro.cap, ro.jobs)).eigenvalues);
        for (int i = 0; i + 1 < cfg.levels; ++i) {
            const auto r = classify_refinement(spectra[i], spectra[i + 1], ladder[i], ladder[i + 1], a, ro);
            refinements.push_back(to_json(r));
            counts.push_back(r.isolated().size());
            if (i + 2 == cfg.levels) out.csv = eigenvalue_csv(r);
            if (cfg.amplitude == 0.0) ok = ok && r.isolated().empty();
        }
    } catch (const std::exception& e) {
        record("refinement", e);
        ok = false;
    }
    rep["essential_start"] = a;
    rep["refinements"] = std::move(refinements);
    rep["isolated_candidate_counts"] = std::move(counts);

    Json sweep = Json::array();
    Json probes = Json::array();
    try {
        const auto op = assemble(sys, ladder.back(), default_assembly_cap, cfg.jobs);
        try {
            std::vector<cplx> lambdas;
            for (double m : {1e1, 1e2, 1e3, 1e4}) lambdas.emplace_back(-m, 0.0);
            for (const auto& row : resolvent_probe(op, lambdas)) sweep.push_back(to_json(row));
        } catch (const std::exception& e) {
            record("resolvent_sweep", e);
            ok = false;
        }
        try {
            for (cplx z : index_probe_points(cfg.c)) {
                const auto p = index_probe(op, z);
                probes.push_back(to_json(p));
                ok = ok && p.index == 0;
            }
        } catch (const std::exception& e) {
            record("index_probes", e);
            ok = false;
        }
    } catch (const std::exception& e) {
        record("assembly", e);
        ok = false;
    }
    rep["resolvent_sweep"] = std::move(sweep);
    rep["index_probes"] = std::move(probes);
    rep["errors"] = std::move(errors);
    rep["ok"] = ok;
    out.ok = ok;
    return out;
}

} // namespace dn

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dn/ellipticity.hpp"
#include "dn/error.hpp"
#include "dn/grid.hpp"
#include "dn/spectral.hpp"
#include "dn/system.hpp"

namespace dn {

using Json = nlohmann::ordered_json;

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input is not well-formed JSON.
class JsonSyntaxError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Tolerances {
    double ellipticity_floor = 1e-6;
    double condition_ceiling = 1e14;
    double svd_rel = 1e-8;
    double refinement_rel = 1e-6;

    friend bool operator==(const Tolerances&, const Tolerances&) = default;
};

struct GridConfig {
    int M = 16;
    double L = 2.0 * std::numbers::pi;

    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

/// Contents of a system specification file.
struct SystemSpec {
    DNSystem system;
    Sector sector;
    std::optional<GridConfig> grid;
    Tolerances tolerances;

    friend bool operator==(const SystemSpec&, const SystemSpec&) = default;
};

namespace detail {

inline const Json& member(const Json& j, const char* key, const std::string& path) {
    if (!j.is_object()) throw ValidationError("expected an object", path.empty() ? "/" : path);
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'", path + "/" + key);
    return *it;
}

inline double as_number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw ValidationError("expected a number", path);
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ValidationError("number must be finite", path);
    return v;
}

inline int as_int(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ValidationError("expected an integer", path);
    return j.get<int>();
}

inline const Json& as_array(const Json& j, const std::string& path) {
    if (!j.is_array()) throw ValidationError("expected an array", path);
    return j;
}

inline std::vector<int> int_list(const Json& j, const std::string& path) {
    std::vector<int> v;
    const auto& a = as_array(j, path);
    for (std::size_t i = 0; i < a.size(); ++i) v.push_back(as_int(a[i], path + "/" + std::to_string(i)));
    return v;
}

inline std::vector<double> number_list(const Json& j, const std::string& path) {
    std::vector<double> v;
    const auto& a = as_array(j, path);
    for (std::size_t i = 0; i < a.size(); ++i) v.push_back(as_number(a[i], path + "/" + std::to_string(i)));
    return v;
}

inline double number_or(const Json& j, const char* key, double fallback, const std::string& path) {
    const auto it = j.find(key);
    return it == j.end() ? fallback : as_number(*it, path + "/" + key);
}

inline CoefficientFn parse_coeff(const Json& j, int n, const std::string& path) {
    if (!j.is_object()) throw ValidationError("expected an object", path);
    const cplx c(number_or(j, "const_re", 0.0, path), number_or(j, "const_im", 0.0, path));
    std::vector<Bump> bumps;
    if (const auto it = j.find("bumps"); it != j.end()) {
        const auto& a = as_array(*it, path + "/bumps");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string p = path + "/bumps/" + std::to_string(i);
            Bump b;
            b.amplitude = cplx(number_or(a[i], "amp_re", 0.0, p), number_or(a[i], "amp_im", 0.0, p));
            b.center = number_list(member(a[i], "center", p), p + "/center");
            b.width = as_number(member(a[i], "width", p), p + "/width");
            if (const auto d = a[i].find("deriv"); d != a[i].end()) {
                const auto v = int_list(*d, p + "/deriv");
                for (std::size_t q = 0; q < v.size(); ++q)
                    if (v[q] < 0) throw ValidationError("derivative orders must be >= 0", p + "/deriv/" + std::to_string(q));
                b.derivative = MultiIndex(v);
            } else {
                b.derivative = MultiIndex::zero(n);
            }
            bumps.push_back(std::move(b));
        }
    }
    return CoefficientFn(c, std::move(bumps));
}

} // namespace detail

/// Builds a SystemSpec from parsed JSON. Semantic problems throw ValidationError with a
/// JSON-pointer path.
inline SystemSpec system_spec_from_json(const Json& j) {
    using namespace detail;
    const int n = as_int(member(j, "n", ""), "/n");
    const int N = as_int(member(j, "N", ""), "/N");
    if (n < 1) throw ValidationError("dimension must be at least 1", "/n");
    if (N < 1) throw ValidationError("system size must be at least 1", "/N");
    const auto s = int_list(member(j, "s", ""), "/s");
    const auto t = int_list(member(j, "t", ""), "/t");
    if (static_cast<int>(s.size()) != N) throw ValidationError("s must have N entries", "/s");
    if (static_cast<int>(t.size()) != N) throw ValidationError("t must have N entries", "/t");
    const DNOrders orders = validate_orders(s, t);

    const auto& ej = as_array(member(j, "entries", ""), "/entries");
    if (static_cast<int>(ej.size()) != N) throw ValidationError("entries must have N rows", "/entries");
    std::vector<std::vector<Entry>> entries(N, std::vector<Entry>(N));
    for (int r = 0; r < N; ++r) {
        const std::string pr = "/entries/" + std::to_string(r);
        const auto& row = as_array(ej[r], pr);
        if (static_cast<int>(row.size()) != N) throw ValidationError("entries must have N columns", pr);
        for (int c = 0; c < N; ++c) {
            const std::string pc = pr + "/" + std::to_string(c);
            const auto& terms = as_array(row[c], pc);
            for (std::size_t q = 0; q < terms.size(); ++q) {
                const std::string pq = pc + "/" + std::to_string(q);
                const auto alpha = int_list(member(terms[q], "alpha", pq), pq + "/alpha");
                if (static_cast<int>(alpha.size()) != n) throw ValidationError("alpha has wrong length", pq + "/alpha");
                for (std::size_t i = 0; i < alpha.size(); ++i)
                    if (alpha[i] < 0) throw ValidationError("alpha entries must be >= 0", pq + "/alpha/" + std::to_string(i));
                entries[r][c].push_back({MultiIndex(alpha), parse_coeff(member(terms[q], "coeff", pq), n, pq + "/coeff")});
            }
        }
    }
    SystemSpec spec{DNSystem(n, orders, std::move(entries)), Sector{}, std::nullopt, Tolerances{}};

    if (const auto it = j.find("sector"); it != j.end()) {
        spec.sector.theta_min = as_number(member(*it, "theta_min", "/sector"), "/sector/theta_min");
        spec.sector.theta_max = as_number(member(*it, "theta_max", "/sector"), "/sector/theta_max");
        spec.sector.validate();
    }
    if (const auto it = j.find("grid"); it != j.end()) {
        GridConfig g;
        g.M = as_int(member(*it, "M", "/grid"), "/grid/M");
        g.L = as_number(member(*it, "L", "/grid"), "/grid/L");
        GridSpec(n, g.L, g.M);  // validates
        spec.grid = g;
    }
    if (const auto it = j.find("tolerances"); it != j.end()) {
        if (!it->is_object()) throw ValidationError("expected an object", "/tolerances");
        auto& tol = spec.tolerances;
        tol.ellipticity_floor = number_or(*it, "ellipticity_floor", tol.ellipticity_floor, "/tolerances");
        tol.condition_ceiling = number_or(*it, "condition_ceiling", tol.condition_ceiling, "/tolerances");
        tol.svd_rel = number_or(*it, "svd_rel", tol.svd_rel, "/tolerances");
        tol.refinement_rel = number_or(*it, "refinement_rel", tol.refinement_rel, "/tolerances");
        for (auto [key, v] : {std::pair{"ellipticity_floor", tol.ellipticity_floor},
                              {"condition_ceiling", tol.condition_ceiling},
                              {"svd_rel", tol.svd_rel}, {"refinement_rel", tol.refinement_rel}})
            if (!(v > 0.0)) throw ValidationError("tolerance must be positive", std::string("/tolerances/") + key);
    }
    return spec;
}

inline SystemSpec parse_system_spec(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw JsonSyntaxError(e.what());
    }
    return system_spec_from_json(j);
}

inline Json to_json(const SystemSpec& spec) {
    const auto& sys = spec.system;
    Json j;
    j["n"] = sys.dimension();
    j["N"] = sys.size();
    j["s"] = sys.orders().s();
    j["t"] = sys.orders().t();
    j["sector"] = {{"theta_min", spec.sector.theta_min}, {"theta_max", spec.sector.theta_max}};
    Json rows = Json::array();
    for (int r = 0; r < sys.size(); ++r) {
        Json row = Json::array();
        for (int c = 0; c < sys.size(); ++c) {
            Json terms = Json::array();
            for (const auto& term : sys.entry(r, c)) {
                Json coeff;
                coeff["const_re"] = term.coeff.constant().real();
                coeff["const_im"] = term.coeff.constant().imag();
                Json bumps = Json::array();
                for (const auto& b : term.coeff.bumps()) {
                    Json bj;
                    bj["amp_re"] = b.amplitude.real();
                    bj["amp_im"] = b.amplitude.imag();
                    bj["center"] = b.center;
                    bj["width"] = b.width;
                    if (b.derivative.order() > 0) bj["deriv"] = b.derivative.entries();
                    bumps.push_back(std::move(bj));
                }
                coeff["bumps"] = std::move(bumps);
                terms.push_back({{"alpha", term.alpha.entries()}, {"coeff", std::move(coeff)}});
            }
            row.push_back(std::move(terms));
        }
        rows.push_back(std::move(row));
    }
    j["entries"] = std::move(rows);
    if (spec.grid) j["grid"] = {{"M", spec.grid->M}, {"L", spec.grid->L}};
    j["tolerances"] = {{"ellipticity_floor", spec.tolerances.ellipticity_floor},
                       {"condition_ceiling", spec.tolerances.condition_ceiling},
                       {"svd_rel", spec.tolerances.svd_rel},
                       {"refinement_rel", spec.tolerances.refinement_rel}};
    return j;
}

// ---- files ----------------------------------------------------------------------------

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read '" + path + "'");
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("cannot write '" + path + "'");
}

inline SystemSpec load_system_spec(const std::string& path) {
    return parse_system_spec(read_text_file(path));
}

inline GridField load_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_field(in);
}

inline void save_field(const std::string& path, const GridField& u) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_field(out, u);
    if (!out) throw IoError("cannot write '" + path + "'");
}

/// Report text: two-space indentation and a trailing newline. Non-finite numbers are
/// written as null.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---- report serializers ---------------------------------------------------------------

inline Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const KappaResult& k) {
    Json j;
    j["r"] = k.r;
    j["kappa"] = k.kappa;
    j["grid_kappa"] = k.grid_kappa;
    j["sample_count"] = k.sample_count;
    j["mesh_gap"] = {{"direction", k.gap.direction}, {"radial", k.gap.radial}, {"arg", k.gap.arg}};
    j["witness"] = {{"x", k.witness.x},
                    {"xi", k.witness.sample.xi},
                    {"lambda", complex_json(k.witness.sample.lambda)},
                    {"u", k.witness.sample.u},
                    {"theta", k.witness.sample.theta}};
    return j;
}

inline Json to_json(const EllipticityReport& r) {
    Json j;
    j["pass"] = r.pass;
    j["floor"] = r.floor;
    j["resolution"] = {{"directions", r.resolution.directions},
                       {"radial", r.resolution.radial},
                       {"args", r.resolution.args}};
    j["x_sample_count"] = r.x_sample_count;
    Json parity;
    parity["pass"] = r.parity.pass;
    parity["failing_level"] = r.parity.failing_level ? Json(*r.parity.failing_level) : Json(nullptr);
    Json pl = Json::array();
    for (const auto& l : r.parity.levels)
        pl.push_back({{"r", l.r}, {"N_r", l.partial_sum}, {"status", to_string(l.status)}});
    parity["levels"] = std::move(pl);
    j["parity"] = std::move(parity);
    Json levels = Json::array();
    for (const auto& l : r.levels) {
        Json lj = to_json(l.kappa);
        lj["pass"] = l.pass;
        lj["kappa_reduced_floor"] = l.kappa_reduced_floor ? Json(*l.kappa_reduced_floor) : Json(nullptr);
        lj["floor_stable"] = l.floor_stable;
        levels.push_back(std::move(lj));
    }
    j["levels"] = std::move(levels);
    if (r.c0)
        j["C0"] = {{"value", r.c0->c0}, {"x", r.c0->x}, {"xi", r.c0->xi}, {"lambda", complex_json(r.c0->lambda)}};
    else
        j["C0"] = nullptr;
    if (r.lambda_dagger)
        j["lambda_dagger"] = {{"value", r.lambda_dagger->lambda_dagger},
                              {"converged", r.lambda_dagger->converged},
                              {"doublings", r.lambda_dagger->doublings}};
    else
        j["lambda_dagger"] = nullptr;
    return j;
}

inline Json grid_json(const GridSpec& g) {
    return {{"n", g.dimension()}, {"M", g.points_per_axis()}, {"L", g.period()}};
}

inline Json to_json(const RefinementReport& r) {
    Json j;
    j["coarse"] = grid_json(r.coarse);
    j["fine"] = grid_json(r.fine);
    j["tol"] = finite_or_null(r.tol);
    j["essential_start"] = r.essential_start;
    j["window_end"] = r.window_end;
    j["eigenvalue_count"] = r.eigenvalues.size();
    j["gap_coarse"] = finite_or_null(r.gap_coarse);
    j["gap_fine"] = finite_or_null(r.gap_fine);
    j["gap_ratio"] = finite_or_null(r.gap_ratio);
    j["essential_detected"] = r.essential_detected;
    Json iso = Json::array();
    for (const auto& e : r.eigenvalues)
        if (e.cls == SpectralClass::isolated_candidate)
            iso.push_back({{"value", complex_json(e.value)}, {"moved", e.moved}, {"distance", e.distance}});
    j["isolated_candidates"] = std::move(iso);
    return j;
}

inline Json to_json(const ResolventProbeRow& r) {
    return {{"lambda", complex_json(r.lambda)},
            {"sigma_min", r.sigma_min},
            {"weighted_ratio", finite_or_null(r.weighted_ratio)},
            {"resolvent_evidence", r.resolvent_evidence},
            {"spectrum_hit", r.spectrum_hit}};
}

inline Json to_json(const IndexProbe& p) {
    return {{"lambda", complex_json(p.lambda)}, {"kernel", p.kernel},   {"cokernel", p.cokernel},
            {"index", p.index},                 {"tol", p.tol},         {"ambiguous", p.ambiguous}};
}

/// Eigenvalue table: re, im, stability class, distance to the half-line.
inline std::string eigenvalue_csv(const RefinementReport& r) {
    std::string out = "re,im,class,distance\n";
    for (const auto& e : r.eigenvalues)
        out += format_g17(e.value.real()) + "," + format_g17(e.value.imag()) + "," + to_string(e.cls) +
               "," + format_g17(e.distance) + "\n";
    return out;
}

} // namespace dn

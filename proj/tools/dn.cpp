// dn: command-line front end.
//
// Exit codes: 0 ok, 1 negative verdict, 2 I/O, 3 malformed JSON, 4 invalid input,
// 5 computation failure, 6 usage.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dn/ellipticity.hpp"
#include "dn/fourier.hpp"
#include "dn/io.hpp"
#include "dn/norms.hpp"
#include "dn/reproduce.hpp"
#include "dn/spectral.hpp"

namespace {

enum Exit : int { ok = 0, negative = 1, io = 2, syntax = 3, semantic = 4, computation = 5, usage = 6 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, const char* flag) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string(flag) + ": cannot parse '" + text + "'");
        }
    }
    if (v.empty()) throw UsageError(std::string(flag) + ": empty value");
    return v;
}

dn::cplx parse_complex(const std::string& text, const char* flag) {
    const auto v = parse_list(text, flag);
    if (v.size() > 2) throw UsageError(std::string(flag) + ": expected \"re,im\"");
    return {v[0], v.size() == 2 ? v[1] : 0.0};
}

dn::Resolution parse_resolution(const std::string& text) {
    const auto v = parse_list(text, "--resolution");
    if (v.size() != 1 && v.size() != 3) throw UsageError("--resolution: expected \"N\" or \"D,R,A\"");
    auto as_int = [](double x) { return static_cast<int>(x); };
    if (v.size() == 1) return {as_int(v[0]), as_int(v[0]), as_int(v[0])};
    return {as_int(v[0]), as_int(v[1]), as_int(v[2])};
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        dn::write_text_file(out, text);
}

std::filesystem::path ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw dn::IoError("cannot create directory '" + dir + "'");
    return dir;
}

dn::GridSpec grid_for(const dn::SystemSpec& spec, std::optional<int> M, std::optional<double> L,
                      int default_M) {
    const int m = M ? *M : (spec.grid ? spec.grid->M : default_M);
    const double l = L ? *L : (spec.grid ? spec.grid->L : 2.0 * std::numbers::pi);
    return dn::GridSpec(spec.system.dimension(), l, m);
}

struct Common {
    int jobs = 1;
};

// ---- validate -------------------------------------------------------------------------

int cmd_validate(const std::string& path) {
    const auto spec = dn::load_system_spec(path);
    const auto& o = spec.system.orders();
    std::cout << "valid: n=" << spec.system.dimension() << " N=" << spec.system.size()
              << " levels=" << o.levels() << "\n";
    return ok;
}

// ---- check-ellipticity ----------------------------------------------------------------

struct EllipticityArgs {
    std::string path;
    std::string resolution;
    std::string sector;
    std::optional<double> floor;
    bool no_constants = false;
    std::string out;
};

int cmd_check_ellipticity(const EllipticityArgs& a, const Common& c) {
    const auto spec = dn::load_system_spec(a.path);
    dn::Sector sector = spec.sector;
    if (!a.sector.empty()) {
        const auto v = parse_list(a.sector, "--sector");
        if (v.size() != 2) throw UsageError("--sector: expected \"theta_min,theta_max\"");
        sector = {v[0], v[1]};
    }
    dn::EllipticityConfig cfg;
    if (!a.resolution.empty()) cfg.resolution = parse_resolution(a.resolution);
    cfg.floor = a.floor.value_or(spec.tolerances.ellipticity_floor);
    cfg.compute_constants = !a.no_constants;
    cfg.jobs = c.jobs;
    const auto rep = dn::check_parameter_ellipticity(spec.system, sector, cfg);
    emit(a.out, dn::dump(dn::to_json(rep)));
    if (!rep.pass) {
        std::cerr << "not parameter-elliptic in the sector";
        if (!rep.parity.pass)
            std::cerr << " (parity fails at level " << rep.parity.failing_level.value_or(0) << ")";
        for (const auto& l : rep.levels)
            if (!l.pass) std::cerr << "; level " << l.kappa.r << " kappa=" << l.kappa.kappa;
        std::cerr << "\n";
    }
    return rep.pass ? ok : negative;
}

// ---- solve ----------------------------------------------------------------------------

struct SolveArgs {
    std::string path;
    std::string lambda;
    std::string x0;
    std::optional<int> M;
    std::optional<double> L;
    std::string rhs;
    std::uint64_t seed = 42;
    std::optional<int> band;
    std::string out = "solution.bin";
};

int cmd_solve(const SolveArgs& a, const Common& c) {
    const auto spec = dn::load_system_spec(a.path);
    const auto& sys = spec.system;
    const dn::cplx lambda = parse_complex(a.lambda, "--lambda");
    std::vector<double> x0(sys.dimension(), 0.0);
    if (!a.x0.empty()) x0 = parse_list(a.x0, "--x0");
    const auto g = grid_for(spec, a.M, a.L, 64);
    const dn::GridField f = a.rhs.empty()
                                ? dn::random_field(g, sys.size(), a.seed, a.band.value_or(g.points_per_axis() / 4))
                                : dn::load_field(a.rhs);
    dn::ResolventOptions ro;
    ro.condition_ceiling = spec.tolerances.condition_ceiling;
    ro.jobs = c.jobs;
    const auto u = dn::frozen_resolvent_apply(sys, x0, lambda, f, ro);
    dn::save_field(a.out, u);
    std::cout << dn::dump({{"lambda", dn::complex_json(lambda)},
                           {"x0", x0},
                           {"grid", dn::grid_json(f.spec)},
                           {"max_condition", dn::max_frequency_condition(sys, x0, lambda, f.spec)},
                           {"out", a.out}});
    return ok;
}

// ---- norms ----------------------------------------------------------------------------

struct NormsArgs {
    std::string path;
    std::string field;
    double p = 2.0;
    std::string lambda;
    bool apriori = false;
    std::string apriori_mode = "exact";
    std::optional<int> M;
    std::optional<double> L;
    std::uint64_t seed = 42;
    std::string out;
};

int cmd_norms(const NormsArgs& a, const Common& c) {
    const auto spec = dn::load_system_spec(a.path);
    const auto& sys = spec.system;
    const auto& o = sys.orders();
    const auto g0 = grid_for(spec, a.M, a.L, 32);
    const dn::GridField u = a.field.empty()
                                ? dn::random_field(g0, sys.size(), a.seed, g0.points_per_axis() / 4)
                                : dn::load_field(a.field);
    if (u.size() != sys.size())
        throw dn::ValidationError("field component count does not match system size", "/N");
    if (u.spec.dimension() != sys.dimension())
        throw dn::ValidationError("field dimension does not match the system", "/n");
    std::optional<dn::cplx> lambda;
    if (!a.lambda.empty()) lambda = parse_complex(a.lambda, "--lambda");
    if (a.apriori && !lambda) throw UsageError("--apriori requires --lambda");
    if (!(a.p >= 1.0)) throw dn::ValidationError("p must be >= 1", "/p");

    dn::Json j;
    j["grid"] = dn::grid_json(u.spec);
    j["p"] = a.p;
    if (lambda) j["lambda"] = dn::complex_json(*lambda);
    dn::Json comps = dn::Json::array();
    for (int k = 0; k < u.size(); ++k) {
        const auto& v = u.components[k];
        dn::Json cj;
        cj["j"] = k + 1;
        cj["lp"] = dn::lp_norm(v, a.p);
        cj["sobolev_t"] = dn::sobolev_norm(u.spec, v, o.t()[k], a.p);
        cj["bessel_t"] = dn::bessel_norm(u.spec, v, o.t()[k], a.p);
        cj["bessel_minus_s"] = dn::bessel_norm(u.spec, v, -o.s()[k], a.p);
        if (lambda) {
            cj["param_t"] = dn::param_norm(u.spec, v, o.t()[k], a.p, *lambda, o.m()[k]);
            cj["param_minus_s"] = dn::param_norm(u.spec, v, -o.s()[k], a.p, *lambda, o.m()[k]);
        }
        comps.push_back(std::move(cj));
    }
    j["components"] = std::move(comps);
    if (lambda) {
        const auto pn = dn::product_norms(u, a.p, *lambda, o);
        j["product"] = {{"t_norm", pn.t_norm}, {"minus_s_norm", pn.minus_s_norm}};
    }
    if (a.apriori) {
        dn::AprioriOptions ao;
        if (a.apriori_mode == "sampled")
            ao.mode = dn::AprioriMode::sampled;
        else if (a.apriori_mode != "exact")
            throw UsageError("--apriori-mode: expected exact or sampled");
        ao.seed = a.seed;
        ao.condition_ceiling = spec.tolerances.condition_ceiling;
        ao.jobs = c.jobs;
        const auto r = dn::apriori_ratio(sys, *lambda, u.spec, ao);
        j["apriori"] = {{"mode", a.apriori_mode},
                        {"inverse_ratio", dn::finite_or_null(r.inverse_ratio)},
                        {"forward_ratio", r.forward_ratio},
                        {"witness_xi", r.witness_xi}};
    }
    emit(a.out, dn::dump(j));
    return ok;
}

// ---- spectrum -------------------------------------------------------------------------

struct SpectrumArgs {
    std::string path;
    std::optional<int> M;
    std::optional<double> L;
    std::vector<std::string> probes;
    std::optional<double> essential_start;
    std::string out = ".";
};

int cmd_spectrum(const SpectrumArgs& a, const Common& c) {
    const auto spec = dn::load_system_spec(a.path);
    const auto& sys = spec.system;
    const auto g = grid_for(spec, a.M, a.L, 16);
    std::vector<dn::cplx> probes;
    for (const auto& p : a.probes) probes.push_back(parse_complex(p, "--probe"));

    const double start = a.essential_start.value_or(dn::essential_start_estimate(sys));
    dn::RefinementOptions ro;
    ro.tol = spec.tolerances.refinement_rel * std::max(1.0, std::abs(start));
    ro.jobs = c.jobs;
    const auto op = dn::assemble(sys, g, ro.cap, ro.jobs);
    const auto coarse = dn::spectrum(op).eigenvalues;
    const auto fine = dn::spectrum(dn::assemble(sys, g.doubled(), ro.cap, ro.jobs)).eigenvalues;
    const auto rep = dn::classify_refinement(coarse, fine, g, g.doubled(), start, ro);

    dn::Json j = dn::to_json(rep);
    dn::Json rows = dn::Json::array(), idx = dn::Json::array();
    if (!probes.empty()) {
        for (const auto& r : dn::resolvent_probe(op, probes)) rows.push_back(dn::to_json(r));
        const double tol = spec.tolerances.svd_rel * dn::dense_singular_values(op.matrix).front();
        for (auto z : probes) idx.push_back(dn::to_json(dn::index_probe(op, z, tol)));
    }
    j["resolvent_probe"] = std::move(rows);
    j["index_probes"] = std::move(idx);
    const auto dir = ensure_dir(a.out);
    dn::write_text_file((dir / "spectrum.json").string(), dn::dump(j));
    dn::write_text_file((dir / "eigenvalues.csv").string(), dn::eigenvalue_csv(rep));
    std::cout << "eigenvalues: " << coarse.size() << ", isolated candidates: " << rep.isolated().size()
              << ", gap ratio: " << rep.gap_ratio << "\n";
    return ok;
}

// ---- reproduce-example ----------------------------------------------------------------

struct ReproduceArgs {
    dn::ExampleConfig cfg;
    std::string resolution;
    std::string out = ".";
};

int cmd_reproduce(ReproduceArgs a, const Common& c) {
    if (!a.resolution.empty()) a.cfg.resolution = parse_resolution(a.resolution);
    a.cfg.jobs = c.jobs;
    const auto res = dn::reproduce_example(a.cfg);
    const auto dir = ensure_dir(a.out);
    dn::write_text_file((dir / "report.json").string(), dn::dump(res.report));
    dn::write_text_file((dir / "eigenvalues.csv").string(), res.csv);
    for (const auto& e : res.report["errors"])
        std::cerr << "stage " << e["stage"].get<std::string>() << " failed: " << e["message"].get<std::string>() << "\n";
    return res.ok ? ok : negative;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parameter-elliptic Douglis-Nirenberg systems: checks, solves and spectra", "dn"};
    app.require_subcommand(1);
    Common common;
    auto add_jobs = [&common](CLI::App* sub) {
        sub->add_option("--jobs", common.jobs, "worker threads (DN_JOBS overrides)")->check(CLI::PositiveNumber);
    };

    std::string validate_path;
    auto* v = app.add_subcommand("validate", "parse and validate a system spec");
    v->add_option("spec", validate_path)->required();

    EllipticityArgs ea;
    auto* ce = app.add_subcommand("check-ellipticity", "check parameter-ellipticity in the sector");
    ce->add_option("spec", ea.path)->required();
    ce->add_option("--resolution", ea.resolution, "\"N\" or \"directions,radial,args\"");
    ce->add_option("--sector", ea.sector, "\"theta_min,theta_max\" overriding the spec");
    ce->add_option("--floor", ea.floor);
    ce->add_flag("--no-constants", ea.no_constants, "skip C0 and lambda_dagger");
    ce->add_option("--out", ea.out, "report path (default stdout)");
    add_jobs(ce);

    SolveArgs sa;
    auto* so = app.add_subcommand("solve", "frozen-coefficient resolvent solve");
    so->add_option("spec", sa.path)->required();
    so->add_option("--lambda", sa.lambda, "\"re,im\"")->required();
    so->add_option("--x0", sa.x0, "freezing point \"x1,...,xn\" (default 0)");
    so->add_option("--grid", sa.M, "points per axis");
    so->add_option("--period", sa.L);
    so->add_option("--rhs", sa.rhs, "right-hand side field (default: random)");
    so->add_option("--seed", sa.seed);
    so->add_option("--band", sa.band, "band limit of the random rhs");
    so->add_option("--out", sa.out);
    add_jobs(so);

    NormsArgs na;
    auto* no = app.add_subcommand("norms", "norms of a field and the a-priori ratio");
    no->add_option("spec", na.path)->required();
    no->add_option("--field", na.field, "field file (default: random)");
    no->add_option("--p", na.p);
    no->add_option("--lambda", na.lambda, "\"re,im\"");
    no->add_flag("--apriori", na.apriori);
    no->add_option("--apriori-mode", na.apriori_mode, "exact or sampled");
    no->add_option("--grid", na.M);
    no->add_option("--period", na.L);
    no->add_option("--seed", na.seed);
    no->add_option("--out", na.out, "report path (default stdout)");
    add_jobs(no);

    SpectrumArgs spa;
    auto* sp = app.add_subcommand("spectrum", "spectrum and refinement classification");
    sp->add_option("spec", spa.path)->required();
    sp->add_option("--grid", spa.M);
    sp->add_option("--period", spa.L);
    sp->add_option("--probe", spa.probes, "\"re,im\" for resolvent and index probes (repeatable)");
    sp->add_option("--essential-start", spa.essential_start);
    sp->add_option("--out", spa.out, "output directory");
    add_jobs(sp);

    ReproduceArgs ra;
    auto* re = app.add_subcommand("reproduce-example", "run the model example pipeline");
    re->add_option("--n", ra.cfg.n);
    re->add_option("--c", ra.cfg.c);
    re->add_option("--epsilon", ra.cfg.epsilon);
    re->add_option("--amplitude", ra.cfg.amplitude);
    re->add_option("--grid", ra.cfg.M);
    re->add_option("--period", ra.cfg.L);
    re->add_option("--levels", ra.cfg.levels);
    re->add_option("--resolution", ra.resolution);
    re->add_option("--seed", ra.cfg.seed);
    re->add_option("--out", ra.out, "output directory");
    add_jobs(re);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*v) return cmd_validate(validate_path);
        if (*ce) return cmd_check_ellipticity(ea, common);
        if (*so) return cmd_solve(sa, common);
        if (*no) return cmd_norms(na, common);
        if (*sp) return cmd_spectrum(spa, common);
        if (*re) return cmd_reproduce(ra, common);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const dn::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io;
    } catch (const dn::JsonSyntaxError& e) {
        std::cerr << "malformed JSON: " << e.what() << "\n";
        return syntax;
    } catch (const dn::ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return semantic;
    } catch (const std::exception& e) {
        std::cerr << "computation failed: " << e.what() << "\n";
        return computation;
    }
    return usage;
}

#pragma once

// Command-line surface.  The emitters live here rather than in tools/ so the
// tests can drive them in-process and check the rendered bytes.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ckn/params.hpp"
#include "ckn/profiles.hpp"
#include "ckn/spectrum.hpp"
#include "ckn/stability.hpp"
#include "ckn/verify.hpp"

namespace ckn::cli {

using ordered_json = nlohmann::ordered_json;

struct OutputEnvelope {
    std::string format = "csv";
    int precision = 6;
    std::string out_path; // empty: stdout
    double tol_quad = 0.0; // 0: library default
};

inline QuadConfig quad_of(const OutputEnvelope& env) {
    QuadConfig q;
    if (env.tol_quad > 0.0) {
        q.rel_tol = env.tol_quad;
        q.abs_tol = env.tol_quad * 1e-4;
    }
    return q;
}

/// Fixed-point decimal at the envelope precision.  printf implements
/// correctly rounded conversion (ties to even); "-0.000000" is normalized.
inline std::string fmt_fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    std::string s = buf;
    if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
    return s;
}

/// The identical decimal rounding applied to values bound for JSON, so both
/// formats carry the same numbers.
inline double fmt_round(double v, int precision) {
    return std::strtod(fmt_fixed(v, precision).c_str(), nullptr);
}

inline std::string csv_quote(const std::string& field) {
    if (field.find(',') == std::string::npos) return field;
    return "\"" + field + "\"";
}

// ---------------------------------------------------------------------------

struct ParamsReport {
    DerivedParams d;
    std::optional<double> S_ab, c_ab, mu3, bound_spectral;
    double bound_two_bubble = 0;
};

inline ParamsReport make_params_report(const ParamPoint& p, const QuadConfig& quad) {
    ParamsReport r;
    r.d = derive(p);
    r.bound_two_bubble = h_curve(p.a, p.b);
    const Context ctx(p, quad);
    r.c_ab = ctx.consts().c_ab;
    if (r.d.region != Region::BelowFS) r.S_ab = ctx.consts().S_ab;
    if (r.d.region == Region::StrictInterior || r.d.region == Region::AtOrAboveFSStar) {
        r.mu3 = mu3_closed(p);
        r.bound_spectral = stability_upper_bound(p);
    }
    return r;
}

inline std::string render_params(const ParamsReport& r, const OutputEnvelope& env) {
    const int p = env.precision;
    auto opt_str = [&](const std::optional<double>& v) {
        return v ? fmt_fixed(*v, p) : std::string();
    };
    if (env.format == "csv") {
        std::ostringstream os;
        os << "a,b,q,K,tau,C_ab,c_ab,S_ab,b_fs,b_fs_star,region,mu3_closed,"
              "bound_spectral,bound_two_bubble\n";
        os << fmt_fixed(r.d.a, p) << ',' << fmt_fixed(r.d.b, p) << ','
           << fmt_fixed(r.d.q, p) << ',' << fmt_fixed(r.d.K, p) << ','
           << fmt_fixed(r.d.tau, p) << ',' << fmt_fixed(r.d.C_ab, p) << ','
           << opt_str(r.c_ab) << ',' << opt_str(r.S_ab) << ','
           << fmt_fixed(r.d.b_fs, p) << ',' << fmt_fixed(r.d.b_fs_star, p) << ','
           << to_string(r.d.region) << ',' << opt_str(r.mu3) << ','
           << opt_str(r.bound_spectral) << ',' << fmt_fixed(r.bound_two_bubble, p)
           << '\n';
        return os.str();
    }
    ordered_json j;
    j["a"] = fmt_round(r.d.a, p);
    j["b"] = fmt_round(r.d.b, p);
    j["q"] = fmt_round(r.d.q, p);
    j["K"] = fmt_round(r.d.K, p);
    j["tau"] = fmt_round(r.d.tau, p);
    j["C_ab"] = fmt_round(r.d.C_ab, p);
    if (r.c_ab) j["c_ab"] = fmt_round(*r.c_ab, p); else j["c_ab"] = nullptr;
    if (r.S_ab) j["S_ab"] = fmt_round(*r.S_ab, p); else j["S_ab"] = nullptr;
    j["b_fs"] = fmt_round(r.d.b_fs, p);
    j["b_fs_star"] = fmt_round(r.d.b_fs_star, p);
    j["region"] = to_string(r.d.region);
    if (r.mu3) j["mu3_closed"] = fmt_round(*r.mu3, p); else j["mu3_closed"] = nullptr;
    if (r.bound_spectral) j["bound_spectral"] = fmt_round(*r.bound_spectral, p);
    else j["bound_spectral"] = nullptr;
    j["bound_two_bubble"] = fmt_round(r.bound_two_bubble, p);
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

inline const std::vector<double>& fig2_a_values() {
    static const std::vector<double> a = {-0.5, -0.6, -0.641867, -0.7, -0.8, -1.0,
                                          -2.0, -3.0, -4.0, -5.0, -10.0};
    return a;
}

inline std::string render_table_fig2(const OutputEnvelope& env) {
    const int p = env.precision;
    struct Row {
        double a, b_fs, b_fs_star, b_star;
        bool selected;
    };
    std::vector<Row> rows;
    for (double a : fig2_a_values()) {
        Row r{};
        r.a = a;
        r.b_fs = felli_schneider(a);
        r.b_fs_star = felli_schneider_star(a);
        r.b_star = solve_b_star_extended(a);
        r.selected = r.b_star < r.b_fs_star;
        rows.push_back(r);
    }
    if (env.format == "csv") {
        std::ostringstream os;
        os << "a,b_fs,b_fs_star,b_star,selection\n";
        for (const auto& r : rows) {
            std::string selection =
                r.selected ? "[" + fmt_fixed(r.b_star, p) + ", " +
                                 fmt_fixed(r.b_fs_star, p) + ")"
                           : "empty";
            os << fmt_fixed(r.a, p) << ',' << fmt_fixed(r.b_fs, p) << ','
               << fmt_fixed(r.b_fs_star, p) << ',' << fmt_fixed(r.b_star, p) << ','
               << csv_quote(selection) << '\n';
        }
        return os.str();
    }
    ordered_json j;
    j["rows"] = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json row;
        row["a"] = fmt_round(r.a, p);
        row["b_fs"] = fmt_round(r.b_fs, p);
        row["b_fs_star"] = fmt_round(r.b_fs_star, p);
        row["b_star"] = fmt_round(r.b_star, p);
        row["selection"] = r.selected
                               ? "[" + fmt_fixed(r.b_star, p) + ", " +
                                     fmt_fixed(r.b_fs_star, p) + ")"
                               : "empty";
        j["rows"].push_back(row);
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

struct SpectrumRow {
    int k, index;
    double eigenvalue;
    std::optional<double> closed_form;
};

inline std::string render_spectrum(const ParamPoint& p, const std::vector<int>& modes,
                                   int count, const OutputEnvelope& env) {
    const Context ctx(p, quad_of(env));
    const auto& d = ctx.d();
    std::vector<SpectrumRow> rows;
    for (int k : modes) {
        const ModeSpectrum m = solve_mode(ctx, k, count);
        for (int j = 0; j < count; ++j) {
            SpectrumRow r{k, j + 1, m.eigenvalues[std::size_t(j)], std::nullopt};
            if (k == 0 && j == 0) r.closed_form = 1.0;
            if (k == 0 && j == 1) r.closed_form = d.q - 1.0;
            if (k == 0 && j == 2) r.closed_form = (d.q - 1.0) * (d.K + 4.0) / d.K;
            if (k == 1 && j == 0 && d.region != Region::OnFS)
                r.closed_form = (d.q - 1.0) / (1.0 - f_curve(d.a, d.b));
            if (k == 1 && j == 0 && d.region == Region::OnFS) r.closed_form = d.q - 1.0;
            rows.push_back(r);
        }
    }
    const int kd = kernel_dimension(ctx);
    const int prec = env.precision;
    if (env.format == "csv") {
        std::ostringstream os;
        os << "k,index,eigenvalue,closed_form,abs_diff\n";
        for (const auto& r : rows) {
            os << r.k << ',' << r.index << ',' << fmt_fixed(r.eigenvalue, prec) << ',';
            if (r.closed_form)
                os << fmt_fixed(*r.closed_form, prec) << ','
                   << fmt_fixed(std::fabs(r.eigenvalue - *r.closed_form), prec);
            else
                os << ',';
            os << '\n';
        }
        os << "kernel_dim=" << kd << '\n';
        return os.str();
    }
    ordered_json j;
    j["rows"] = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json row;
        row["k"] = r.k;
        row["index"] = r.index;
        row["eigenvalue"] = fmt_round(r.eigenvalue, prec);
        if (r.closed_form) {
            row["closed_form"] = fmt_round(*r.closed_form, prec);
            row["abs_diff"] = fmt_round(std::fabs(r.eigenvalue - *r.closed_form), prec);
        } else {
            row["closed_form"] = nullptr;
            row["abs_diff"] = nullptr;
        }
        j["rows"].push_back(row);
    }
    j["kernel_dim"] = kd;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

struct DeficitRow {
    double param;
    DeficitReport report;
};

inline std::string render_deficit(const ParamPoint& p, const std::string& family,
                                  int points, const OutputEnvelope& env) {
    Context ctx(p, quad_of(env));
    const int prec = env.precision;
    std::vector<DeficitRow> rows;
    std::vector<std::pair<std::string, ExpansionFit>> fits;
    std::vector<std::string> notes;
    std::optional<double> richardson;

    if (family == "two-bubble") {
        // Default experiment window: inside the monotone regime of E
        // (E(u^lambda) has an interior minimum near lambda ~ 1e-2).
        const double lo = 1e-4, hi = 1.5e-3;
        std::vector<double> grid;
        for (int i = 0; i < points; ++i)
            grid.push_back(lo * std::pow(hi / lo, double(i) / double(points - 1)));
        for (double lam : grid)
            rows.push_back({lam, deficit_report(ctx, two_bubble(ctx, lam))});
        for (auto [name, which] :
             {std::pair{"grad_sq", DeficitQuantity::GradSq},
              std::pair{"star_sq", DeficitQuantity::StarSq},
              std::pair{"E", DeficitQuantity::E}}) {
            try {
                fits.emplace_back(name, fit_expansion(ctx, which, grid));
            } catch (const FitDegenerate&) {
                notes.push_back(std::string("fit_") + name + "=degenerate");
            } catch (const Error& e) {
                notes.push_back(std::string("fit_") + name + "=unavailable (" + e.what() +
                                ")");
            }
        }
    } else if (family == "fs-kernel") {
        if (ctx.d().region != Region::OnFS)
            throw InvalidParams("deficit --family fs-kernel requires b on the "
                                "symmetry-breaking curve");
        std::vector<double> eps;
        for (int i = 0; i < points; ++i) eps.push_back(0.2 / std::pow(2.0, i));
        const Context tight = ctx.tightened(1e-12, 1e-15);
        for (double e : eps) {
            HarmonicFunction u = bubble_U(tight);
            u.add_term(1, Parity::Cos, RadialProfile::kernel_vprime(tight.d().K), e);
            rows.push_back({e, deficit_report(tight, u)});
        }
    } else if (family == "spectral") {
        if (ctx.d().region != Region::StrictInterior &&
            ctx.d().region != Region::AtOrAboveFSStar)
            throw InvalidParams("deficit --family spectral requires b strictly above "
                                "the symmetry-breaking curve");
        const Context tight = ctx.tightened(1e-12, 1e-15);
        const HarmonicFunction e3 = third_eigenfunction(tight);
        std::vector<double> eps;
        for (int i = 0; i < points; ++i) eps.push_back(0.05 / std::pow(2.0, i));
        std::vector<double> evals;
        for (double e : eps) {
            HarmonicFunction u = bubble_U(tight);
            u.add_term(e3.terms()[0].k, e3.terms()[0].parity, e3.terms()[0].profile, e);
            rows.push_back({e, deficit_report(tight, u)});
            if (rows.back().report.E) evals.push_back(*rows.back().report.E);
        }
        if (evals.size() >= 3) {
            // Polynomial extrapolation to eps = 0 on the last three levels
            // (the quotient has a linear eps term on the radial branch, so
            // plain Richardson in eps^2 would be biased there).
            const std::size_t n = evals.size();
            const double x1 = 2.0 * evals[n - 2] - evals[n - 3];
            const double x2 = 2.0 * evals[n - 1] - evals[n - 2];
            richardson = (4.0 * x2 - x1) / 3.0;
        }
    } else {
        throw InvalidParams("deficit: unknown family " + family);
    }

    auto opt_e = [&](const DeficitReport& r) {
        return r.E ? fmt_fixed(*r.E, prec) : std::string();
    };
    if (env.format == "csv") {
        std::ostringstream os;
        os << "param,grad_sq,star_norm,m,dist_sq,E\n";
        for (const auto& r : rows)
            os << fmt_fixed(r.param, prec) << ',' << fmt_fixed(r.report.grad_sq, prec)
               << ',' << fmt_fixed(r.report.star, prec) << ','
               << fmt_fixed(r.report.m_value, prec) << ','
               << fmt_fixed(r.report.dist_sq, prec) << ',' << opt_e(r.report) << '\n';
        for (const auto& [name, fit] : fits)
            os << "fit_" << name << ": exponent=" << fmt_fixed(fit.exponent, prec)
               << " coefficient=" << fmt_fixed(fit.coefficient, prec)
               << " limit=" << fmt_fixed(fit.limit, prec)
               << " residual=" << fmt_fixed(fit.residual, prec) << '\n';
        for (const auto& n : notes) os << n << '\n';
        if (richardson) os << "richardson_limit=" << fmt_fixed(*richardson, prec) << '\n';
        return os.str();
    }
    ordered_json j;
    j["rows"] = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json row;
        row["param"] = fmt_round(r.param, prec);
        row["grad_sq"] = fmt_round(r.report.grad_sq, prec);
        row["star_norm"] = fmt_round(r.report.star, prec);
        row["m"] = fmt_round(r.report.m_value, prec);
        row["dist_sq"] = fmt_round(r.report.dist_sq, prec);
        if (r.report.E) row["E"] = fmt_round(*r.report.E, prec); else row["E"] = nullptr;
        j["rows"].push_back(row);
    }
    if (!fits.empty()) {
        ordered_json jf;
        for (const auto& [name, fit] : fits) {
            ordered_json f;
            f["exponent"] = fmt_round(fit.exponent, prec);
            f["coefficient"] = fmt_round(fit.coefficient, prec);
            f["limit"] = fmt_round(fit.limit, prec);
            f["residual"] = fmt_round(fit.residual, prec);
            jf[name] = f;
        }
        j["fits"] = jf;
    }
    for (const auto& n : notes) j["notes"].push_back(n);
    if (richardson) j["richardson_limit"] = fmt_round(*richardson, prec);
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

inline int render_verify(bool quick, std::ostream& os) {
    verify::Options opt;
    opt.quick = quick;
    const auto results = verify::run_acceptance(opt);
    for (const auto& r : results) {
        char line[160];
        std::snprintf(line, sizeof line, "%-4s %2d %-26s (%6.2f s) ",
                      r.skipped ? "SKIP" : r.pass ? "PASS" : "FAIL", r.id,
                      r.name.c_str(), r.seconds);
        os << line << r.detail << '\n';
    }
    const bool ok = verify::all_passed(results);
    os << (ok ? "verification passed" : "verification FAILED") << '\n';
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

inline void write_out(const OutputEnvelope& env, const std::string& text) {
    if (env.out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(env.out_path, std::ios::binary);
    if (!f) throw Error("cannot open output file: " + env.out_path);
    f << text;
}

inline void add_output_flags(CLI::App* cmd, OutputEnvelope& env) {
    cmd->add_option("--format", env.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--precision", env.precision, "Printed decimal places")
        ->check(CLI::Range(0, 15))
        ->capture_default_str();
    cmd->add_option("--out", env.out_path, "Write to PATH instead of stdout");
    cmd->add_option("--tol-quad", env.tol_quad, "Quadrature relative tolerance override")
        ->check(CLI::PositiveNumber);
}

inline int run(int argc, const char* const* argv) {
    CLI::App app{"Numerical laboratory for the planar weighted Sobolev inequality: "
                 "extremal bubbles, linearized spectra, symmetry curves, and "
                 "stability-deficit experiments"};
    app.require_subcommand(1);

    OutputEnvelope env_params, env_table, env_spec, env_def;
    double a = -1.0, b = -0.25;
    std::string modes_str = "0,1";
    int count = 3;
    std::string family = "two-bubble";
    int points = 8;
    bool quick = false, full = false;

    auto* cmd_params = app.add_subcommand("params", "Derived constants at one (a, b)");
    cmd_params->add_option("--a", a, "Weight parameter a < 0")->required();
    cmd_params->add_option("--b", b, "Weight parameter b in (a, a+1)")->required();
    add_output_flags(cmd_params, env_params);

    auto* cmd_table = app.add_subcommand("table-fig2", "Symmetry-curve table rows");
    add_output_flags(cmd_table, env_table);

    auto* cmd_spec = app.add_subcommand("spectrum", "Per-mode eigenvalues");
    cmd_spec->add_option("--a", a, "Weight parameter a < 0")->required();
    cmd_spec->add_option("--b", b, "Weight parameter b in (a, a+1)")->required();
    cmd_spec->add_option("--modes", modes_str, "Comma-separated angular modes")
        ->capture_default_str();
    cmd_spec->add_option("--count", count, "Eigenvalues per mode")
        ->check(CLI::Range(1, 6))
        ->capture_default_str();
    add_output_flags(cmd_spec, env_spec);

    auto* cmd_def = app.add_subcommand("deficit", "Stability-deficit experiments");
    cmd_def->add_option("--a", a, "Weight parameter a < 0")->required();
    cmd_def->add_option("--b", b, "Weight parameter b in (a, a+1)")->required();
    cmd_def->add_option("--family", family, "two-bubble | fs-kernel | spectral")
        ->check(CLI::IsMember({"two-bubble", "fs-kernel", "spectral"}))
        ->capture_default_str();
    cmd_def->add_option("--points", points, "Experiment points")
        ->check(CLI::Range(2, 12))
        ->capture_default_str();
    add_output_flags(cmd_def, env_def);

    auto* cmd_verify = app.add_subcommand("verify", "Run the self-verification suite");
    auto* qflag = cmd_verify->add_flag("--quick", quick, "Fast subset (skips eigensolver)");
    cmd_verify->add_flag("--full", full, "Complete suite (default)")->excludes(qflag);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (cmd_params->parsed())
            write_out(env_params,
                      render_params(make_params_report({a, b}, quad_of(env_params)),
                                    env_params));
        else if (cmd_table->parsed())
            write_out(env_table, render_table_fig2(env_table));
        else if (cmd_spec->parsed()) {
            std::vector<int> modes;
            std::stringstream ss(modes_str);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) modes.push_back(std::stoi(tok));
            if (modes.empty()) throw InvalidParams("spectrum: empty mode list");
            write_out(env_spec, render_spectrum({a, b}, modes, count, env_spec));
        } else if (cmd_def->parsed())
            write_out(env_def, render_deficit({a, b}, family, points, env_def));
        else if (cmd_verify->parsed())
            return render_verify(quick, std::cout);
    } catch (const InvalidParams& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NoConvergence& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace ckn::cli

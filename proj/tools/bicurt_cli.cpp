// Command-line front end: design, operating characteristics, simulation,
// post-test analysis and stream monitoring.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bicurt/bicurt.hpp"
#include "bicurt/json_io.hpp"
#include "bicurt/monitor.hpp"

namespace fs = std::filesystem;
using namespace bicurt;

namespace {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Format { json, csv };

struct Globals {
    std::string output;  // empty: the subcommand's natural format
    bool quiet = false;

    Format format(Format fallback) const {
        if (output.empty()) return fallback;
        return output == "csv" ? Format::csv : Format::json;
    }
};

void info(const Globals& g, const std::string& msg) {
    if (!g.quiet) std::cerr << msg << '\n';
}

std::string read_text(const std::string& path) {
    if (path == "-") {
        std::ostringstream os;
        os << std::cin.rdbuf();
        return os.str();
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json read_json(const std::string& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DocumentError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::string num(double v) {
    if (!std::isfinite(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

void emit_json(const json& j) { std::cout << j.dump(2) << '\n'; }

void emit_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    for (std::size_t i = 0; i < header.size(); ++i) std::cout << (i ? "," : "") << header[i];
    std::cout << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) std::cout << (i ? "," : "") << r[i];
        std::cout << '\n';
    }
}

// Flat key/value output for --output csv on object-valued results.
void emit_flat_csv(const json& j) {
    std::vector<std::string> h, r;
    std::function<void(const json&, const std::string&)> walk = [&](const json& v, const std::string& prefix) {
        if (v.is_object()) {
            for (auto it = v.begin(); it != v.end(); ++it) walk(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key());
        } else if (v.is_array()) {
            for (std::size_t i = 0; i < v.size(); ++i) walk(v[i], prefix + "." + std::to_string(i));
        } else {
            h.push_back(prefix);
            r.push_back(v.is_number_float() ? num(v.get<double>()) : (v.is_string() ? v.get<std::string>() : v.dump()));
        }
    };
    walk(j, "");
    emit_csv(h, {r});
}

void emit(const Globals& g, const json& j) {
    if (g.format(Format::json) == Format::csv) {
        emit_flat_csv(j);
    } else {
        emit_json(j);
    }
}

struct ParamArgs {
    double theta_x = 0.0;
    double theta_y = 0.0;
    double rho = 0.0;

    void add(CLI::App* app) {
        app->add_option("--theta-x", theta_x, "marginal rate of side effect X")->required();
        app->add_option("--theta-y", theta_y, "marginal rate of side effect Y")->required();
        app->add_option("--rho", rho, "correlation of the two indicators")->default_val(0.0);
    }
    JointBernoulliParams make() const { return make_params(theta_x, theta_y, rho); }
};

enum class Method { exact, asymptotic, dp };

const std::map<std::string, Method> kMethods{{"exact", Method::exact}, {"asymptotic", Method::asymptotic}, {"dp", Method::dp}};
const std::map<std::string, AsymptoticPowerForm> kForms{{"curtailed-normal", AsymptoticPowerForm::curtailed_normal},
                                                        {"gut", AsymptoticPowerForm::gut}};

const char* method_name(Method m) {
    switch (m) {
        case Method::exact: return "exact";
        case Method::asymptotic: return "asymptotic";
        case Method::dp: return "dp";
    }
    return "exact";
}

StoppingPmf pmf_with(Method m, const BivariateDesign& d, const JointBernoulliParams& p) {
    switch (m) {
        case Method::exact: return stopping_pmf_exact(d, p);
        case Method::asymptotic: return stopping_pmf_asymptotic(d, p);
        case Method::dp: return lattice_forward_dp(d, p);
    }
    return stopping_pmf_exact(d, p);
}

double power_by(Method m, AsymptoticPowerForm form, const BivariateDesign& d, const JointBernoulliParams& p) {
    switch (m) {
        case Method::exact: return power_exact(d, p);
        case Method::asymptotic: return power_asymptotic(d, p, form);
        case Method::dp: return lattice_forward_dp(d, p).rejection_mass();
    }
    return power_exact(d, p);
}

// ---- design ---------------------------------------------------------------

struct DesignCmd {
    double alpha = 0.05;
    std::optional<double> alpha_tilde;
    double beta = 0.1;
    double tx0 = 0, tx1 = 0, ty0 = 0, ty1 = 0;
    Rounding rounding = Rounding::nearest;
    bool exact_refine = false;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("design", "compute the pooled curtailed design");
        c->add_option("--alpha", alpha, "overall significance level; each margin uses alpha/2")->default_val(0.05);
        c->add_option("--alpha-tilde", alpha_tilde, "per-margin level (overrides --alpha)");
        c->add_option("--beta", beta, "per-margin type II error")->default_val(0.1);
        c->add_option("--theta-x0", tx0)->required();
        c->add_option("--theta-x1", tx1)->required();
        c->add_option("--theta-y0", ty0)->required();
        c->add_option("--theta-y1", ty1)->required();
        c->add_option("--rounding", rounding, "rounding of the critical value")
            ->transform(CLI::CheckedTransformer(std::map<std::string, Rounding>{{"nearest", Rounding::nearest},
                                                                                {"floor", Rounding::floor}}));
        c->add_flag("--exact-refine", exact_refine, "search N and k under exact binomial tails");
        c->callback([this] { pending = true; });
    }
    bool pending = false;

    void run(const Globals& g) const {
        const double at = alpha_tilde.value_or(alpha / 2.0);
        const DesignMethod m = exact_refine ? DesignMethod::exact_refine : DesignMethod::approx;
        const BivariateDesign d =
            combine(design_marginal(at, beta, tx0, tx1, m, rounding), design_marginal(at, beta, ty0, ty1, m, rounding));
        json j = to_json(d);
        j["method"] = to_string(m);
        j["rounding"] = to_string(rounding);
        emit(g, j);
    }
};

// ---- power / asn / pmf ----------------------------------------------------

struct CharacteristicCmd {
    std::string name;
    std::string design_path;
    ParamArgs params;
    Method method = Method::exact;
    AsymptoticPowerForm form = AsymptoticPowerForm::curtailed_normal;
    bool pending = false;

    CLI::App* add(CLI::App& root, const std::string& n, const std::string& help) {
        name = n;
        auto* c = root.add_subcommand(n, help);
        c->add_option("--design", design_path, "design JSON file ('-' for stdin)")->required();
        params.add(c);
        c->add_option("--method", method, "exact | asymptotic | dp")->transform(CLI::CheckedTransformer(kMethods));
        c->callback([this] { pending = true; });
        return c;
    }

    BivariateDesign design() const { return design_from_json(read_json(design_path)); }
};

void run_power(const Globals& g, const CharacteristicCmd& c) {
    const BivariateDesign d = c.design();
    const JointBernoulliParams p = c.params.make();
    json j = {{"power", power_by(c.method, c.form, d, p)}, {"method", method_name(c.method)}, {"params", to_json(p)}};
    if (c.method == Method::asymptotic) j["form"] = c.form == AsymptoticPowerForm::gut ? "gut" : "curtailed-normal";
    emit(g, j);
}

void run_asn(const Globals& g, const CharacteristicCmd& c) {
    const BivariateDesign d = c.design();
    const JointBernoulliParams p = c.params.make();
    const StoppingPmf pmf = pmf_with(c.method, d, p);
    json j = {{"method", method_name(c.method)}, {"params", to_json(p)}, {"asn", asn_from_pmf(pmf)},
              {"second_moment", second_moment_from_pmf(pmf)}};
    const double var = second_moment_from_pmf(pmf) - std::pow(asn_from_pmf(pmf), 2);
    j["variance"] = std::max(var, 0.0);
    j["cv"] = std::sqrt(std::max(var, 0.0)) / asn_from_pmf(pmf);
    const AsnBounds b = asn_bounds(d, p);
    j["bounds"] = {{"lower", b.lower}, {"upper", b.upper}, {"U1", b.u1}, {"U2", b.u2}, {"L1", b.l1}};
    emit(g, j);
}

void run_pmf(const Globals& g, const CharacteristicCmd& c) {
    const BivariateDesign d = c.design();
    const JointBernoulliParams p = c.params.make();
    const StoppingPmf pmf = pmf_with(c.method, d, p);
    if (g.format(Format::csv) == Format::csv) {
        std::vector<std::vector<std::string>> rows;
        for (int m = pmf.first_m; m <= pmf.n_star; ++m)
            rows.push_back({std::to_string(m), num(pmf.x_at(m)), num(pmf.y_at(m)), num(pmf.corner_at(m))});
        emit_csv({"m", "p_hit_x", "p_hit_y", "p_corner"}, rows);
        info(g, "continue mass " + num(pmf.continue_mass));
        return;
    }
    json rows = json::array();
    for (int m = pmf.first_m; m <= pmf.n_star; ++m)
        rows.push_back({{"m", m}, {"p_hit_x", pmf.x_at(m)}, {"p_hit_y", pmf.y_at(m)}, {"p_corner", pmf.corner_at(m)}});
    emit_json({{"method", method_name(c.method)}, {"continue_mass", pmf.continue_mass}, {"pmf", rows}});
}

// ---- simulate ---------------------------------------------------------------

struct SimulateCmd {
    std::string design_path;
    ParamArgs params;
    std::int64_t reps = 10000;
    std::uint64_t seed = 1;
    int threads = 1;
    double level = 0.95;
    std::string streams_dir;
    bool pending = false;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("simulate", "Monte Carlo operating characteristics");
        c->add_option("--design", design_path)->required();
        params.add(c);
        c->add_option("--reps", reps)->default_val(10000)->check(CLI::PositiveNumber);
        c->add_option("--seed", seed)->default_val(1);
        c->add_option("--threads", threads, "worker threads; results do not depend on this")
            ->default_val(1)
            ->check(CLI::PositiveNumber);
        c->add_option("--level", level, "confidence level for the coverage statistic")->default_val(0.95);
        c->add_option("--emit-streams", streams_dir, "write each replicate's consumed events as JSONL here");
        c->callback([this] { pending = true; });
    }

    void run(const Globals& g) const {
        const BivariateDesign d = design_from_json(read_json(design_path));
        const JointBernoulliParams p = params.make();
        const auto reps_out = monte_carlo_replicates(d, p, reps, seed, threads, level);
        const MonteCarloSummary s = summarize(reps_out, p, level);
        if (!streams_dir.empty()) {
            std::error_code ec;
            fs::create_directories(streams_dir, ec);
            if (ec) throw IoError("cannot create '" + streams_dir + "': " + ec.message());
            for (std::int64_t r = 0; r < reps; ++r) {
                const auto events = sample_stream(p, seed, reps_out[static_cast<std::size_t>(r)].outcome.m_star,
                                                  static_cast<std::uint64_t>(r));
                std::ostringstream os;
                for (const Event& e : events) os << to_json(e).dump() << '\n';
                write_text((fs::path(streams_dir) / ("stream_" + std::to_string(r) + ".jsonl")).string(), os.str());
            }
            info(g, "wrote " + std::to_string(reps) + " streams to " + streams_dir);
        }
        json j = to_json(s);
        j["seed"] = seed;
        j["params"] = to_json(p);
        emit(g, j);
    }
};

// ---- analyze ----------------------------------------------------------------

struct AnalyzeCmd {
    std::vector<std::int64_t> counts;
    std::string table_path;
    std::optional<std::int64_t> m_star;
    double level = 0.95;
    int ellipse_points = 0;
    std::string ellipse_out;
    bool pending = false;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("analyze", "post-test estimates and confidence statements");
        auto* oc = c->add_option("--counts", counts, "n00 n10 n01 n11")->expected(4)->delimiter(',');
        auto* ot = c->add_option("--table", table_path, "JSON file with n00, n10, n01, n11 (and optional m_star)");
        oc->excludes(ot);
        c->add_option("--m-star", m_star, "terminal sample size (defaults to the table total)");
        c->add_option("--level", level)->default_val(0.95);
        c->add_option("--emit-ellipse-points", ellipse_points, "write N ellipse boundary points as CSV")
            ->check(CLI::PositiveNumber);
        c->add_option("--ellipse-out", ellipse_out, "file for the ellipse CSV (default: stdout, replacing the JSON)");
        c->callback([this] { pending = true; });
    }

    void run(const Globals& g) const {
        LatticeCounts lc;
        std::optional<std::int64_t> m = m_star;
        if (!table_path.empty()) {
            const json t = read_json(table_path);
            lc = counts_from_json(t);
            if (!m && t.contains("m_star")) m = t.at("m_star").get<std::int64_t>();
        } else if (counts.size() == 4) {
            lc = {counts[0], counts[1], counts[2], counts[3]};
        } else {
            throw DomainError("analyze: give --counts n00,n10,n01,n11 or --table FILE");
        }
        const PostTestEstimate est = post_test_estimate(lc, m.value_or(lc.total()));
        const ConfidenceRegion region = confidence_region(est, level);
        json j = {{"estimate", to_json(est)}, {"region", to_json(region)}};
        j["relative_risk"] = est.theta_hat_y > 0 ? to_json(relative_risk(est, level)) : json(nullptr);
        j["inverse_relative_risk"] = est.theta_hat_x > 0 ? to_json(inverse_relative_risk(est, level)) : json(nullptr);

        if (ellipse_points > 0) {
            std::ostringstream os;
            os << "theta_x,theta_y\n";
            for (const Vec2& v : region.boundary_points(ellipse_points)) os << num(v[0]) << ',' << num(v[1]) << '\n';
            if (ellipse_out.empty()) {
                std::cout << os.str();
                return;
            }
            write_text(ellipse_out, os.str());
        }
        emit(g, j);
    }
};

// ---- monitor ----------------------------------------------------------------

struct MonitorCmd {
    std::string design_path;
    std::string state_path;
    std::string input_path;
    bool pending = false;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("monitor", "feed JSONL events through the stopping rule, resumably");
        c->add_option("--design", design_path, "design JSON (required unless the state file exists)");
        c->add_option("--state", state_path, "state file, created if missing and rewritten after each event")
            ->required();
        c->add_option("--input", input_path, "JSONL events (default: stdin)");
        c->callback([this] { pending = true; });
    }

    void run(const Globals& g) const {
        std::optional<BivariateDesign> design;
        if (!design_path.empty()) design = design_from_json(read_json(design_path));
        MonitorState state;
        if (fs::exists(state_path)) {
            state = state_load(read_json(state_path), design);
            info(g, "resumed at seq " + std::to_string(state.last_seq) + " (" + to_string(state.status) + ")");
        } else {
            if (!design) throw DomainError("monitor: --design is required to start a new state");
            state = MonitorState::fresh(*design);
        }

        std::ifstream file;
        if (!input_path.empty()) {
            file.open(input_path);
            if (!file) throw IoError("cannot open '" + input_path + "'");
        }
        std::istream& in = input_path.empty() ? std::cin : file;
        std::string line;
        std::int64_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                throw DocumentError("input line " + std::to_string(lineno) + ": " + e.what());
            }
            auto [next, rec] = monitor_step(state, event_from_json(j));
            state = std::move(next);
            write_text(state_path, state_save(state).dump(2) + "\n");
            std::cout << to_json(rec).dump() << '\n' << std::flush;
        }
        if (in.bad()) throw IoError("error reading events");
        write_text(state_path, state_save(state).dump(2) + "\n");
    }
};

// ---- export-grid --------------------------------------------------------------

struct GridCmd {
    std::string design_path;
    double rho = 0.0;
    double x_min = 0.01, x_max = 0.3, y_min = 0.01, y_max = 0.3;
    int x_steps = 30, y_steps = 30;
    Method method = Method::exact;
    bool pending = false;

    void add(CLI::App& root) {
        auto* c = root.add_subcommand("export-grid", "power surface over a (theta_x, theta_y) grid as CSV");
        c->add_option("--design", design_path)->required();
        c->add_option("--rho", rho)->default_val(0.0);
        c->add_option("--theta-x-min", x_min)->default_val(0.01);
        c->add_option("--theta-x-max", x_max)->default_val(0.3);
        c->add_option("--theta-x-steps", x_steps)->default_val(30)->check(CLI::PositiveNumber);
        c->add_option("--theta-y-min", y_min)->default_val(0.01);
        c->add_option("--theta-y-max", y_max)->default_val(0.3);
        c->add_option("--theta-y-steps", y_steps)->default_val(30)->check(CLI::PositiveNumber);
        c->add_option("--method", method)->transform(CLI::CheckedTransformer(kMethods));
        c->callback([this] { pending = true; });
    }

    void run(const Globals& g) const {
        const BivariateDesign d = design_from_json(read_json(design_path));
        auto axis = [](double lo, double hi, int n, int i) { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); };
        std::vector<std::vector<std::string>> rows;
        json arr = json::array();
        int skipped = 0;
        for (int i = 0; i < x_steps; ++i) {
            for (int j = 0; j < y_steps; ++j) {
                const double tx = axis(x_min, x_max, x_steps, i);
                const double ty = axis(y_min, y_max, y_steps, j);
                double pw = std::numeric_limits<double>::quiet_NaN();
                try {
                    pw = power_by(method, AsymptoticPowerForm::curtailed_normal, d, make_params(tx, ty, rho));
                } catch (const InfeasibleParams&) {
                    ++skipped;
                }
                rows.push_back({num(tx), num(ty), num(pw)});
                arr.push_back({{"theta_x", tx}, {"theta_y", ty}, {"power", std::isfinite(pw) ? json(pw) : json(nullptr)}});
            }
        }
        if (skipped) info(g, std::to_string(skipped) + " grid points infeasible for rho=" + num(rho) + " (power nan)");
        if (g.format(Format::csv) == Format::csv) {
            emit_csv({"theta_x", "theta_y", "power"}, rows);
        } else {
            emit_json({{"rho", rho}, {"method", method_name(method)}, {"grid", arr}});
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curtailed sequential test for two correlated binary side effects"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--output", g.output, "output format")->check(CLI::IsMember({"json", "csv"}));
    app.add_flag("--quiet", g.quiet, "suppress informational messages on stderr");

    DesignCmd design;
    design.add(app);
    CharacteristicCmd power, asn, pmf;
    auto* pc = power.add(app, "power", "rejection probability");
    pc->add_option("--form", power.form, "asymptotic form: curtailed-normal | gut")
        ->transform(CLI::CheckedTransformer(kForms));
    asn.add(app, "asn", "average sample number, its spread and bounds");
    pmf.add(app, "pmf", "stopping-time distribution by boundary");
    SimulateCmd simulate;
    simulate.add(app);
    AnalyzeCmd analyze;
    analyze.add(app);
    MonitorCmd monitor;
    monitor.add(app);
    GridCmd grid;
    grid.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (design.pending) design.run(g);
        if (power.pending) run_power(g, power);
        if (asn.pending) run_asn(g, asn);
        if (pmf.pending) run_pmf(g, pmf);
        if (simulate.pending) simulate.run(g);
        if (analyze.pending) analyze.run(g);
        if (monitor.pending) monitor.run(g);
        if (grid.pending) grid.run(g);
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cout.flush();
    if (!std::cout) return 3;
    return 0;
}

#pragma once

#include "nngp/gp.hpp"
#include "nngp/kernels.hpp"
#include "nngp/pde.hpp"
#include "nngp/quadrature.hpp"
#include "nngp/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace nngp {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Command { ValidateKernels, ApproxStep, ApproxHartmann, Poisson, Burgers };

inline std::string to_string(Command c) {
    switch (c) {
        case Command::ValidateKernels: return "validate-kernels";
        case Command::ApproxStep: return "approx-step";
        case Command::ApproxHartmann: return "approx-hartmann";
        case Command::Poisson: return "poisson";
        case Command::Burgers: return "burgers";
    }
    return "?";
}

inline Command parse_command(const std::string& s) {
    for (Command c : {Command::ValidateKernels, Command::ApproxStep, Command::ApproxHartmann, Command::Poisson,
                      Command::Burgers})
        if (to_string(c) == s) return c;
    throw ConfigError("unknown experiment '" + s + "'");
}

// ---------------------------------------------------------------------------------------------
// value formatting and parsing

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size())
        throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
    return v;
}

inline std::string format_value(int v) { return std::to_string(v); }
inline std::string format_value(std::uint64_t v) { return std::to_string(v); }
inline std::string format_value(double v) { return format_number(v); }
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(const std::string& v) { return v; }
inline std::string format_value(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}
inline std::string format_value(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

inline void parse_value(const std::string& k, const std::string& t, int& v) { v = parse_number<int>(k, t); }
inline void parse_value(const std::string& k, const std::string& t, std::uint64_t& v) {
    v = parse_number<std::uint64_t>(k, t);
}
inline void parse_value(const std::string& k, const std::string& t, double& v) { v = parse_number<double>(k, t); }
inline void parse_value(const std::string& k, const std::string& t, bool& v) {
    if (t == "true" || t == "1") v = true;
    else if (t == "false" || t == "0") v = false;
    else throw ConfigError("config key '" + k + "': expected true or false, got '" + t + "'");
}
inline void parse_value(const std::string&, const std::string& t, std::string& v) { v = t; }
inline void parse_value(const std::string& k, const std::string& t, std::vector<int>& v) {
    v.clear();
    for (const auto& item : split(t, ',')) v.push_back(parse_number<int>(k, item));
}
inline void parse_value(const std::string&, const std::string& t, std::vector<std::string>& v) { v = split(t, ','); }

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// variants

/// A kernel choice plus, for Burgers, the number of interior training points.
/// Text form: family[-L<depth>|-ard][/N], e.g. "se-ard", "nngp-relu-L2", "nngp-erf-L3/101".
struct Variant {
    KernelSpec spec;
    int n_train = 0;

    std::string name() const { return spec.name() + (n_train > 0 ? "/" + std::to_string(n_train) : ""); }
};

inline Variant parse_variant(const std::string& text, int input_dim) {
    Variant v;
    std::string kernel = text;
    if (const auto slash = text.find('/'); slash != std::string::npos) {
        kernel = text.substr(0, slash);
        v.n_train = detail::parse_number<int>("variants", text.substr(slash + 1));
        if (v.n_train < 1) throw ConfigError("variant '" + text + "': training count must be positive");
    }
    int depth = 0;
    if (kernel.ends_with("-ard")) {
        v.spec.ard = true;
        kernel.resize(kernel.size() - 4);
    }
    if (const auto at = kernel.rfind("-L"); at != std::string::npos) {
        depth = detail::parse_number<int>("variants", kernel.substr(at + 2));
        kernel = kernel.substr(0, at);
    }
    v.spec.family = parse_family(kernel);
    v.spec.input_dim = input_dim;
    v.spec.depth = is_nngp(v.spec.family) ? (depth > 0 ? depth : 1) : 0;
    if (!is_nngp(v.spec.family) && depth > 0) throw ConfigError("variant '" + text + "': depth only applies to NNGP kernels");
    if (v.spec.ard && !is_stationary(v.spec.family))
        throw ConfigError("variant '" + text + "': -ard only applies to se and matern kernels");
    v.spec.validate();
    return v;
}

// ---------------------------------------------------------------------------------------------
// configuration

/// Every setting of one experiment run. Keys of the text form are the member names.
struct ExperimentConfig {
    Command experiment = Command::ValidateKernels;
    std::string preset = "desk";  // desk | paper
    std::uint64_t seed = 1;
    std::string out = "results";
    std::string kernel;  // empty: the command's default variant list
    int depth = 0;       // NNGP depth for `kernel`; 0 means 1
    std::vector<std::string> variants;  // overrides the default variant list

    // training
    int restarts = 10;
    int max_evals = 200;
    double fd_step = 1e-4;
    double init_lo = -2.0;
    double init_hi = 2.0;

    // validate-kernels
    int theta_points = 100;
    int max_layer = 4;
    double weight_var = 1.6;
    double bias_var = 0.1;
    int quadrature_nodes = 64;
    double tolerance = 1e-6;

    // approx-step
    int step_train = 10;
    int step_test = 100;

    // approx-hartmann
    std::vector<int> hartmann_sizes = {100, 200, 500, 1000};
    double train_fraction = 0.7;

    // poisson
    std::string poisson_mode = "all";  // all | cut | compare | single
    std::string solution = "s1";
    int n_boundary = 24;
    int n_interior = 25;
    int grid = 21;
    int cut_points = 101;
    double nngp_init_lo = 0.0;  // Halton init box for NNGP kernels on the Poisson problem
    double nngp_init_hi = 8.0;

    // burgers
    double noise_std = 0.0;
    int n_initial = 24;
    int n_train = 31;
    double dt = 0.01;
    int steps = 100;
    int n_test = 400;
    int later_restarts = 1;
    int later_max_evals = 10;
    double later_initial_step = 0.5;
    std::vector<int> record_steps = {25, 50, 75, 100};
    bool resample = false;

    bool operator==(const ExperimentConfig&) const = default;

    bool paper() const { return preset == "paper"; }

    /// Defaults for one command. `paper` selects the full training budget.
    static ExperimentConfig defaults(Command c, bool paper) {
        ExperimentConfig cfg;
        cfg.experiment = c;
        cfg.preset = paper ? "paper" : "desk";
        if (!paper) {
            switch (c) {
                case Command::ApproxHartmann: cfg.restarts = 3, cfg.max_evals = 60; break;
                case Command::Poisson: cfg.restarts = 5, cfg.max_evals = 100; break;
                case Command::Burgers: cfg.restarts = 3, cfg.max_evals = 100; break;
                default: break;
            }
        } else {
            cfg.later_max_evals = 200;
        }
        return cfg;
    }

    void validate() const;
    std::string serialize() const;
    static ExperimentConfig parse(const std::string& text);
};

namespace detail {

struct ConfigField {
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class T>
ConfigField field(const char* key, T ExperimentConfig::*m) {
    return {key, [m](const ExperimentConfig& c) { return format_value(c.*m); },
            [m, k = std::string(key)](ExperimentConfig& c, const std::string& v) { parse_value(k, v, c.*m); }};
}

inline const std::vector<ConfigField>& config_fields() {
    using C = ExperimentConfig;
    static const std::vector<ConfigField> fields = {
        {"experiment", [](const C& c) { return to_string(c.experiment); },
         [](C& c, const std::string& v) { c.experiment = parse_command(v); }},
        field("preset", &C::preset),
        field("seed", &C::seed),
        field("out", &C::out),
        field("kernel", &C::kernel),
        field("depth", &C::depth),
        field("variants", &C::variants),
        field("restarts", &C::restarts),
        field("max_evals", &C::max_evals),
        field("fd_step", &C::fd_step),
        field("init_lo", &C::init_lo),
        field("init_hi", &C::init_hi),
        field("theta_points", &C::theta_points),
        field("max_layer", &C::max_layer),
        field("weight_var", &C::weight_var),
        field("bias_var", &C::bias_var),
        field("quadrature_nodes", &C::quadrature_nodes),
        field("tolerance", &C::tolerance),
        field("step_train", &C::step_train),
        field("step_test", &C::step_test),
        field("hartmann_sizes", &C::hartmann_sizes),
        field("train_fraction", &C::train_fraction),
        field("poisson_mode", &C::poisson_mode),
        field("solution", &C::solution),
        field("n_boundary", &C::n_boundary),
        field("n_interior", &C::n_interior),
        field("grid", &C::grid),
        field("cut_points", &C::cut_points),
        field("nngp_init_lo", &C::nngp_init_lo),
        field("nngp_init_hi", &C::nngp_init_hi),
        field("noise_std", &C::noise_std),
        field("n_initial", &C::n_initial),
        field("n_train", &C::n_train),
        field("dt", &C::dt),
        field("steps", &C::steps),
        field("n_test", &C::n_test),
        field("later_restarts", &C::later_restarts),
        field("later_max_evals", &C::later_max_evals),
        field("later_initial_step", &C::later_initial_step),
        field("record_steps", &C::record_steps),
        field("resample", &C::resample),
    };
    return fields;
}

}  // namespace detail

/// `key = value` lines; blank lines and lines starting with '#' are ignored.
/// Keys must be known and may appear once.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> kv;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const auto& fields = detail::config_fields();
        if (std::none_of(fields.begin(), fields.end(), [&](const auto& f) { return f.key == key; }))
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        for (const auto& [k, v] : kv)
            if (k == key) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv.emplace_back(std::move(key), value);
    }
    return kv;
}

/// Applies parsed keys on top of the command/preset defaults. `experiment` and `preset` keys in
/// the text select those defaults unless the caller overrides them.
inline ExperimentConfig build_config(const std::vector<std::pair<std::string, std::string>>& kv,
                                     std::optional<Command> command = {}, std::optional<std::string> preset = {}) {
    std::optional<Command> file_command;
    std::string file_preset = "desk";
    for (const auto& [k, v] : kv) {
        if (k == "experiment") file_command = parse_command(v);
        if (k == "preset") file_preset = v;
    }
    if (command && file_command && *command != *file_command)
        throw ConfigError("config file is for '" + to_string(*file_command) + "', not '" + to_string(*command) + "'");
    if (!command) command = file_command;
    if (!command) throw ConfigError("config: no experiment given");
    const std::string p = preset.value_or(file_preset);
    if (p != "desk" && p != "paper") throw ConfigError("unknown preset '" + p + "' (expected desk or paper)");
    ExperimentConfig cfg = ExperimentConfig::defaults(*command, p == "paper");
    for (const auto& [k, v] : kv) {
        if (k == "experiment" || k == "preset") continue;
        for (const auto& f : detail::config_fields())
            if (f.key == k) f.set(cfg, v);
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig ExperimentConfig::parse(const std::string& text) { return build_config(parse_key_values(text)); }

inline std::string ExperimentConfig::serialize() const {
    std::string s;
    for (const auto& f : detail::config_fields()) s += f.key + " = " + f.get(*this) + "\n";
    return s;
}

inline void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("config: " + what);
    };
    require(preset == "desk" || preset == "paper", "preset must be desk or paper");
    require(!out.empty(), "out must not be empty");
    require(depth >= 0 && depth <= 16, "depth must be in [0, 16]");
    require(restarts >= 1 && max_evals >= 2, "restarts >= 1 and max_evals >= 2 required");
    require(fd_step > 0.0, "fd_step must be positive");
    require(init_lo < init_hi && nngp_init_lo < nngp_init_hi, "init boxes need lo < hi");
    require(theta_points >= 2 && max_layer >= 0 && max_layer <= 16, "theta_points >= 2 and max_layer in [0, 16]");
    require(weight_var > 0.0 && bias_var > 0.0, "weight_var and bias_var must be positive");
    require(quadrature_nodes >= 2 && tolerance > 0.0, "quadrature_nodes >= 2 and tolerance > 0 required");
    require(step_train >= 2 && step_test >= 2, "step_train and step_test must be >= 2");
    require(!hartmann_sizes.empty(), "hartmann_sizes must not be empty");
    for (int n : hartmann_sizes) require(n >= 4, "hartmann sizes must be >= 4");
    require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must lie in (0, 1)");
    require(poisson_mode == "all" || poisson_mode == "cut" || poisson_mode == "compare" || poisson_mode == "single",
            "poisson_mode must be all, cut, compare or single");
    parse_solution(solution);
    require(n_boundary >= 4 && n_interior >= 1, "n_boundary >= 4 and n_interior >= 1 required");
    require(grid >= 2 && cut_points >= 2, "grid and cut_points must be >= 2");
    require(noise_std >= 0.0, "noise_std must be nonnegative");
    require(n_initial >= 1 && n_train >= 1 && steps >= 1 && n_test >= 2, "burgers point and step counts must be positive");
    require(dt > 0.0, "dt must be positive");
    require(later_restarts >= 1 && later_max_evals >= 2 && later_initial_step > 0.0, "invalid later-step training");
    for (int s : record_steps) require(s >= 1 && s <= steps, "record_steps must lie in [1, steps]");
    if (!kernel.empty()) {
        const Variant v = parse_variant(kernel, 1);
        require(kernel.find("-L") == std::string::npos && v.n_train == 0, "kernel takes a family name; use depth and n_train");
    }
    for (const auto& v : variants) parse_variant(v, 1);
}

inline TrainOptions train_options(const ExperimentConfig& c) {
    TrainOptions t;
    t.restarts = c.restarts;
    t.max_evaluations = c.max_evals;
    t.fd_step = c.fd_step;
    t.init_lo = c.init_lo;
    t.init_hi = c.init_hi;
    return t;
}

/// Variant list of a command: `kernel` alone, else `variants`, else `fallback`.
inline std::vector<Variant> select_variants(const ExperimentConfig& c, int input_dim, std::vector<std::string> fallback,
                                            int n_train = 0) {
    std::vector<std::string> names = c.variants.empty() ? std::move(fallback) : c.variants;
    if (!c.kernel.empty()) {
        const Variant base = parse_variant(c.kernel, input_dim);
        names = {c.kernel + (is_nngp(base.spec.family) ? "-L" + std::to_string(std::max(c.depth, 1)) : "")};
        if (n_train > 0) names[0] += "/" + std::to_string(n_train);
    }
    std::vector<Variant> out;
    for (const auto& n : names) out.push_back(parse_variant(n, input_dim));
    return out;
}

// ---------------------------------------------------------------------------------------------
// reports

struct Table {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(double v) { return format_number(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }

    template <class... T>
    void add(const T&... cells) {
        rows.push_back({cell(cells)...});
        if (rows.back().size() != header.size()) throw InputError(file + ": row width does not match the header");
    }

    std::string csv() const {
        auto quote = [](const std::string& s) {
            if (s.find_first_of(",\"\n") == std::string::npos) return s;
            std::string q = "\"";
            for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            return q + "\"";
        };
        std::string out;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + quote(r[i]);
            out += "\n";
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out;
    }
};

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Everything a command produced. `record()` is the RunRecord.
struct Report {
    ExperimentConfig config;
    std::vector<Table> tables;
    std::vector<Check> checks;
    std::map<std::string, double> errors;  // target -> relative error
    std::map<std::string, std::vector<double>> hyperparameters;  // variant -> flat log-parameters
    std::map<std::string, double> nlml;
    std::map<std::string, double> seconds;
    std::map<std::string, std::string> failures;  // variant -> message
    double total_seconds = 0.0;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }

    const Table& table(const std::string& file) const {
        for (const auto& t : tables)
            if (t.file == file) return t;
        throw InputError("report has no table '" + file + "'");
    }

    void check(std::string name, bool pass, std::string detail) {
        checks.push_back({std::move(name), pass, std::move(detail)});
    }

    nlohmann::ordered_json record() const {
        nlohmann::ordered_json j;
        j["tool"] = "nngp-solve";
        j["version"] = kToolVersion;
        j["experiment"] = to_string(config.experiment);
        nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
        for (const auto& f : detail::config_fields()) cfg[f.key] = f.get(config);
        j["config"] = cfg;
        auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(format_number(v)); };
        nlohmann::ordered_json e = nlohmann::ordered_json::object(), h = nlohmann::ordered_json::object(),
                               n = nlohmann::ordered_json::object(), t = nlohmann::ordered_json::object();
        for (const auto& [k, v] : errors) e[k] = num(v);
        for (const auto& [k, v] : hyperparameters) h[k] = v;
        for (const auto& [k, v] : nlml) n[k] = num(v);
        for (const auto& [k, v] : seconds) t[k] = v;
        t["total"] = total_seconds;
        j["relative_errors"] = e;
        j["hyperparameters"] = h;
        j["nlml"] = n;
        j["seconds"] = t;
        j["failures"] = failures;
        nlohmann::ordered_json checks_j = nlohmann::ordered_json::array();
        for (const auto& c : checks) checks_j.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        j["checks"] = checks_j;
        j["passed"] = passed();
        return j;
    }
};

/// Writes `content` next to `path` and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open " + tmp.string() + " for writing");
        f << content;
        f.close();
        if (!f) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Writes every table, the effective config and run.json into `dir`.
inline void write_report(const Report& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& t : r.tables) write_atomic(dir / t.file, t.csv());
    write_atomic(dir / "config.txt", r.config.serialize());
    write_atomic(dir / "run.json", r.record().dump(2) + "\n");
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline Observations single_block(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Observations obs;
    obs.blocks.push_back({X, y, 0, {}});
    return obs;
}

/// Ranks with ties averaged, 1-based.
inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
        i = j + 1;
    }
    return r;
}

}  // namespace detail

/// Spearman rank correlation (Pearson correlation of the ranks).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw InputError("spearman: need two equally long samples of size >= 2");
    const auto ra = detail::ranks(a), rb = detail::ranks(b);
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return (saa > 0.0 && sbb > 0.0) ? sab / std::sqrt(saa * sbb) : 0.0;
}

// ---------------------------------------------------------------------------------------------
// validate-kernels

/// Analytic vs fully numerical layer iteration on unit vectors at angle theta.
inline Report run_validate_kernels(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = detail::Clock::now();
    Report rep;
    rep.config = cfg;
    Table tab{"validate_kernels.csv", {"activation", "theta", "layer", "analytic", "numeric", "absdiff"}, {}};
    const Eigen::VectorXd theta = linspace(0.0, std::numbers::pi, cfg.theta_points);
    const auto spec = KernelSpec::nngp_erf(2, 1);
    const auto hp = HyperParams::uniform(spec, cfg.weight_var, cfg.bias_var);
    double worst_all = 0.0;
    for (const auto& phi : {Activation::relu(), Activation::erf()}) {
        const bool relu = phi.name == "relu";
        double worst = 0.0;
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            const Eigen::Vector2d x(1.0, 0.0), xp(std::cos(theta[i]), std::sin(theta[i]));
            double a_xx = base_kernel(x, x, hp), a_pp = base_kernel(xp, xp, hp), a_xp = base_kernel(x, xp, hp);
            double n_xx = a_xx, n_pp = a_pp, n_xp = a_xp;
            tab.add(phi.name, theta[i], 0, a_xp, n_xp, 0.0);
            for (int l = 1; l <= cfg.max_layer; ++l) {
                auto step = [&](double p, double q, double r) {
                    return relu ? relu_step(p, q, r, cfg.weight_var, cfg.bias_var)
                                : erf_step(p, q, r, cfg.weight_var, cfg.bias_var);
                };
                auto nstep = [&](double p, double q, double r) {
                    return numeric_step(p, q, r, cfg.weight_var, cfg.bias_var, phi, cfg.quadrature_nodes);
                };
                const double a_xp1 = step(a_xx, a_pp, a_xp), n_xp1 = nstep(n_xx, n_pp, n_xp);
                a_xx = step(a_xx, a_xx, a_xx), a_pp = step(a_pp, a_pp, a_pp), a_xp = a_xp1;
                n_xx = nstep(n_xx, n_xx, n_xx), n_pp = nstep(n_pp, n_pp, n_pp), n_xp = n_xp1;
                const double diff = std::abs(a_xp - n_xp);
                worst = std::max(worst, diff);
                tab.add(phi.name, theta[i], l, a_xp, n_xp, diff);
            }
        }
        rep.errors["max_absdiff_" + phi.name] = worst;
        worst_all = std::max(worst_all, worst);
    }
    rep.tables.push_back(std::move(tab));
    rep.check("analytic recursions match quadrature (max absdiff < " + format_number(cfg.tolerance) + ")",
              worst_all < cfg.tolerance, "max absdiff " + format_number(worst_all));
    rep.total_seconds = detail::since(t0);
    return rep;
}

// ---------------------------------------------------------------------------------------------
// function approximation

struct FitOutcome {
    bool ok = false;
    std::string failure;
    TrainResult training;
    Posterior prediction;
    double error = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
};

/// Trains a single-block GP on (X, y) and predicts at Xs; failures are captured, not thrown.
inline FitOutcome fit_and_predict(const KernelSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::MatrixXd& Xs, const Eigen::VectorXd& ys, const TrainOptions& topt) {
    const auto t0 = detail::Clock::now();
    FitOutcome out;
    try {
        const auto obs = detail::single_block(X, y);
        out.training = train(obs, spec, topt);
        PosteriorOptions diag;
        diag.full_covariance = false;
        out.prediction = posterior(obs, QuerySet{Xs, {}}, spec, out.training.theta, diag);
        out.error = relative_l2_error(out.prediction.mean, ys);
        out.ok = true;
    } catch (const Error& e) {
        out.failure = e.what();
    }
    out.seconds = detail::since(t0);
    return out;
}

inline double step_target(double x) { return x >= 0.0 ? 1.0 : 0.0; }

/// Fraction of points with |x| > gap whose exact value lies within mean +- 2 std. The std is
/// floored at sqrt(n eps k(x, x)): k(x, x) - v^T v is only resolved to about n eps k(x, x), so a
/// smaller computed variance is rounding noise (kernels with huge learned input variances hit this).
inline double band_coverage(const Eigen::VectorXd& x, const Eigen::VectorXd& exact, const Posterior& p,
                            const Eigen::VectorXd& prior_var, Eigen::Index n_train, double gap) {
    const Eigen::VectorXd sd = p.stddev();
    const double eps = std::numeric_limits<double>::epsilon() * static_cast<double>(n_train);
    int n = 0, hit = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) <= gap) continue;
        ++n;
        const double half = 2.0 * std::max(sd[i], std::sqrt(eps * std::max(prior_var[i], 0.0)));
        if (std::abs(p.mean[i] - exact[i]) <= half) ++hit;
    }
    return n ? static_cast<double>(hit) / n : 0.0;
}

inline Report run_approx_step(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = detail::Clock::now();
    Report rep;
    rep.config = cfg;
    const auto variants = select_variants(cfg, 1,
                                          {"se", "matern52", "nngp-erf-L1", "nngp-erf-L2", "nngp-erf-L3", "nngp-relu-L1",
                                           "nngp-relu-L2", "nngp-relu-L3"});
    const Eigen::VectorXd x = linspace(-1.0, 1.0, cfg.step_train);
    const Eigen::VectorXd xs = linspace(-1.0, 1.0, cfg.step_test);
    const Eigen::VectorXd y = x.unaryExpr(&step_target), ys = xs.unaryExpr(&step_target);

    Table data{"step_data.csv", {"x", "y"}, {}};
    for (Eigen::Index i = 0; i < x.size(); ++i) data.add(x[i], y[i]);
    Table pred{"step_predictions.csv", {"variant", "x", "exact", "mean", "std", "lower", "upper"}, {}};
    Table errs{"step_errors.csv", {"variant", "status", "relative_error", "band_coverage", "nlml", "evaluations", "seconds"}, {}};
    std::map<std::string, double> err, cov;
    for (const auto& v : variants) {
        const auto fit = fit_and_predict(v.spec, x, y, xs, ys, train_options(cfg));
        const std::string name = v.name();
        rep.seconds[name] = fit.seconds;
        if (!fit.ok) {
            rep.failures[name] = fit.failure;
            errs.add(name, "failed: " + fit.failure, NAN, NAN, NAN, 0, fit.seconds);
            continue;
        }
        const Eigen::VectorXd sd = fit.prediction.stddev();
        for (Eigen::Index i = 0; i < xs.size(); ++i)
            pred.add(name, xs[i], ys[i], fit.prediction.mean[i], sd[i], fit.prediction.mean[i] - 2 * sd[i],
                     fit.prediction.mean[i] + 2 * sd[i]);
        err[name] = fit.error;
        const Eigen::VectorXd prior = prior_variance(QuerySet{xs, {}}, Kernel(v.spec, fit.training.theta));
        cov[name] = band_coverage(xs, ys, fit.prediction, prior, x.size(), 0.1);
        rep.errors[name] = fit.error;
        rep.nlml[name] = fit.training.nlml;
        rep.hyperparameters[name] = detail::to_std(fit.training.theta.to_vector());
        errs.add(name, "ok", fit.error, cov[name], fit.training.nlml, fit.training.total_evaluations(), fit.seconds);
    }
    rep.tables = {std::move(data), std::move(pred), std::move(errs)};

    rep.check("every variant trained", rep.failures.empty(), std::to_string(rep.failures.size()) + " failures");
    if (err.contains("nngp-relu-L1") && err.contains("se"))
        rep.check("NNGP-ReLU L=1 error < GP-SE error", err["nngp-relu-L1"] < err["se"],
                  format_number(err["nngp-relu-L1"]) + " vs " + format_number(err["se"]));
    std::vector<double> relu;
    for (int L = 1; L <= 3; ++L)
        if (err.contains("nngp-relu-L" + std::to_string(L))) relu.push_back(err["nngp-relu-L" + std::to_string(L)]);
    if (relu.size() >= 2) {
        const auto [lo, hi] = std::minmax_element(relu.begin(), relu.end());
        rep.check("NNGP-ReLU errors across depths within 2x", *hi <= 2.0 * *lo, "max/min " + format_number(*hi / *lo));
    }
    for (const auto& [name, c] : cov)
        if (name.starts_with("nngp-"))
            rep.check(name + " two-std band covers >= 90% of points with |x| > 0.1", c >= 0.9, format_number(c));
    rep.total_seconds = detail::since(t0);
    return rep;
}

/// Hartmann 3-D function (standard coefficients, Dixon and Szego 1978), minimum -3.86278 at
/// (0.114614, 0.555649, 0.852547).
inline double hartmann3(const Eigen::Ref<const Eigen::VectorXd>& x) {
    static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
    static const double A[4][3] = {{3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
    static const double P[4][3] = {{0.3689, 0.1170, 0.2673},
                                   {0.4699, 0.4387, 0.7470},
                                   {0.1091, 0.8732, 0.5547},
                                   {0.0381, 0.5743, 0.8828}};
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        double e = 0.0;
        for (int j = 0; j < 3; ++j) e += A[i][j] * (x[j] - P[i][j]) * (x[j] - P[i][j]);
        s += alpha[i] * std::exp(-e);
    }
    return -s;
}

inline Report run_approx_hartmann(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = detail::Clock::now();
    Report rep;
    rep.config = cfg;
    const std::string L = std::to_string(std::max(cfg.depth, 1));
    const auto variants = select_variants(cfg, 3, {"se-ard", "nngp-erf-L" + L, "nngp-relu-L" + L});
    Table errs{"hartmann_errors.csv",
               {"variant", "n", "n_train", "n_test", "status", "relative_error", "nlml", "evaluations", "seconds"}, {}};
    Table pred{"hartmann_predictions.csv", {"variant", "n", "x1", "x2", "x3", "exact", "mean", "std"}, {}};
    std::map<std::string, std::map<int, double>> err;
    for (int n : cfg.hartmann_sizes) {
        const Eigen::MatrixXd pts = halton(n, 3).points;
        Rng rng(cfg.seed);
        const auto perm = rng.permutation(static_cast<std::size_t>(n));
        const int n_tr = static_cast<int>(std::lround(cfg.train_fraction * n));
        if (n_tr < 1 || n_tr >= n) throw ConfigError("approx-hartmann: train_fraction leaves an empty split at N=" + std::to_string(n));
        Eigen::MatrixXd X(n_tr, 3), Xs(n - n_tr, 3);
        for (int i = 0; i < n; ++i) {
            const auto src = pts.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
            if (i < n_tr) X.row(i) = src;
            else Xs.row(i - n_tr) = src;
        }
        Eigen::VectorXd y(n_tr), ys(n - n_tr);
        for (int i = 0; i < n_tr; ++i) y[i] = hartmann3(X.row(i).transpose());
        for (int i = 0; i < n - n_tr; ++i) ys[i] = hartmann3(Xs.row(i).transpose());
        for (const auto& v : variants) {
            const auto fit = fit_and_predict(v.spec, X, y, Xs, ys, train_options(cfg));
            const std::string name = v.name(), key = name + "@N=" + std::to_string(n);
            rep.seconds[key] = fit.seconds;
            if (!fit.ok) {
                rep.failures[key] = fit.failure;
                errs.add(name, n, n_tr, n - n_tr, "failed: " + fit.failure, NAN, NAN, 0, fit.seconds);
                continue;
            }
            err[name][n] = fit.error;
            rep.errors[key] = fit.error;
            rep.nlml[key] = fit.training.nlml;
            rep.hyperparameters[key] = detail::to_std(fit.training.theta.to_vector());
            errs.add(name, n, n_tr, n - n_tr, "ok", fit.error, fit.training.nlml, fit.training.total_evaluations(),
                     fit.seconds);
            const Eigen::VectorXd sd = fit.prediction.stddev();
            for (Eigen::Index i = 0; i < Xs.rows(); ++i)
                pred.add(name, n, Xs(i, 0), Xs(i, 1), Xs(i, 2), ys[i], fit.prediction.mean[i], sd[i]);
        }
    }
    rep.tables = {std::move(errs), std::move(pred)};

    rep.check("every fit trained", rep.failures.empty(), std::to_string(rep.failures.size()) + " failures");
    const int n_lo = *std::min_element(cfg.hartmann_sizes.begin(), cfg.hartmann_sizes.end());
    const int n_hi = *std::max_element(cfg.hartmann_sizes.begin(), cfg.hartmann_sizes.end());
    // the GP-SE baseline is whichever SE variant ran
    std::string se = "se-ard";
    if (!err.contains(se)) se = "se";
    const std::string erf = "nngp-erf-L" + L, relu = "nngp-relu-L" + L;
    auto have = [&](const std::string& v, int n) { return err.contains(v) && err[v].contains(n); };
    for (const auto& v : {se, erf})
        if (n_lo < n_hi && have(v, n_lo) && have(v, n_hi))
            rep.check(v + " error decreases from N=" + std::to_string(n_lo) + " to N=" + std::to_string(n_hi),
                      err[v][n_hi] < err[v][n_lo], format_number(err[v][n_lo]) + " -> " + format_number(err[v][n_hi]));
    if (have(relu, n_hi) && have(erf, n_hi) && have(se, n_hi)) {
        rep.check("NNGP-ReLU error > NNGP-erf and GP-SE errors at N=" + std::to_string(n_hi),
                  err[relu][n_hi] > err[erf][n_hi] && err[relu][n_hi] > err[se][n_hi],
                  "relu " + format_number(err[relu][n_hi]) + ", erf " + format_number(err[erf][n_hi]) + ", se " +
                      format_number(err[se][n_hi]));
        rep.check("smooth-kernel errors < 0.05 at N=" + std::to_string(n_hi),
                  err[erf][n_hi] < 0.05 && err[se][n_hi] < 0.05,
                  "erf " + format_number(err[erf][n_hi]) + ", se " + format_number(err[se][n_hi]));
    }
    for (int n : cfg.hartmann_sizes)
        if (have(se, n) && have(erf, n)) {
            const double r = std::max(err[se][n], err[erf][n]) / std::min(err[se][n], err[erf][n]);
            rep.check("GP-SE and NNGP-erf within 10x at N=" + std::to_string(n), r <= 10.0, "ratio " + format_number(r));
        }
    rep.total_seconds = detail::since(t0);
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Poisson

/// Training setups of the cut-line uncertainty study on fabricated solution 2, ordered from
/// the least to the most accurate. `target` is the reference cut-line error.
struct PoissonPreset {
    const char* name;
    KernelFamily family;
    int n_boundary;
    int n_interior;
    double target;
};

inline const std::vector<PoissonPreset>& cut_presets() {
    static const std::vector<PoissonPreset> p = {
        {"cut-a", KernelFamily::SE, 24, 36, 0.049},
        {"cut-b", KernelFamily::SE, 32, 50, 0.029},
        {"cut-c", KernelFamily::NNGP_Erf, 40, 80, 0.022},
        {"cut-d", KernelFamily::NNGP_Erf, 44, 90, 0.0081},
    };
    return p;
}

/// GP-SE vs NNGP-erf(L=1) comparison setups (N_u, N_f) per fabricated solution.
inline std::pair<int, int> compare_setup(FabricatedSolution s) {
    return s == FabricatedSolution::S1 ? std::pair{24, 25} : std::pair{44, 90};
}

inline PoissonOptions poisson_options(const ExperimentConfig& cfg, const KernelSpec& spec, FabricatedSolution s,
                                      int n_boundary, int n_interior) {
    PoissonOptions po;
    po.solution = s;
    po.spec = spec;
    po.n_boundary = n_boundary;
    po.n_interior = n_interior;
    po.grid = cfg.grid;
    po.cut_points = cfg.cut_points;
    po.train = train_options(cfg);
    if (is_nngp(spec.family)) {
        po.train.init_lo = cfg.nngp_init_lo;
        po.train.init_hi = cfg.nngp_init_hi;
    }
    return po;
}

struct PoissonRun {
    std::string name;
    PoissonOptions options;
    std::optional<PoissonResult> result;
    std::string failure;
    double seconds = 0.0;
};

inline Report run_poisson(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = detail::Clock::now();
    Report rep;
    rep.config = cfg;
    const std::string mode = cfg.kernel.empty() ? cfg.poisson_mode : "single";
    const bool cut_study = mode == "all" || mode == "cut", compare = mode == "all" || mode == "compare";

    std::vector<PoissonRun> runs;
    auto add = [&](std::string name, const KernelSpec& spec, FabricatedSolution s, int nb, int ni) {
        runs.push_back({std::move(name), poisson_options(cfg, spec, s, nb, ni), {}, {}, 0.0});
    };
    if (cut_study)
        for (const auto& p : cut_presets())
            add(p.name, p.family == KernelFamily::SE ? KernelSpec::se(2) : KernelSpec::nngp_erf(2, 1),
                FabricatedSolution::S2, p.n_boundary, p.n_interior);
    if (compare)
        for (auto s : {FabricatedSolution::S1, FabricatedSolution::S2}) {
            const auto [nb, ni] = compare_setup(s);
            add("compare-" + to_string(s) + "-se", KernelSpec::se(2), s, nb, ni);
            add("compare-" + to_string(s) + "-nngp-erf-L1", KernelSpec::nngp_erf(2, 1), s, nb, ni);
        }
    if (mode == "single") {
        const auto v = select_variants(cfg, 2, {"nngp-erf-L1"}).front();
        add("single-" + cfg.solution + "-" + v.name(), v.spec, parse_solution(cfg.solution), cfg.n_boundary, cfg.n_interior);
    }

    auto same_setup = [](const PoissonOptions& a, const PoissonOptions& b) {
        return a.solution == b.solution && a.spec.family == b.spec.family && a.spec.depth == b.spec.depth &&
               a.n_boundary == b.n_boundary && a.n_interior == b.n_interior && a.train.restarts == b.train.restarts &&
               a.train.max_evaluations == b.train.max_evaluations;
    };
    for (std::size_t i = 0; i < runs.size(); ++i) {
        auto& r = runs[i];
        for (std::size_t j = 0; j < i; ++j)
            if (same_setup(runs[j].options, r.options) && runs[j].result) {
                r.result = runs[j].result;
                break;
            }
        if (r.result) continue;
        const auto ts = detail::Clock::now();
        try {
            r.result = poisson_solve(r.options);
        } catch (const Error& e) {
            r.failure = e.what();
        }
        r.seconds = detail::since(ts);
    }

    Table summary{"poisson_summary.csv",
                  {"run", "solution", "kernel", "n_boundary", "n_interior", "status", "grid_error", "cut_error",
                   "cut_mean_std", "nlml", "seconds"},
                  {}};
    Table cut{"poisson_cut.csv", {"run", "s", "x", "y", "exact", "mean", "std", "lower", "upper"}, {}};
    Table grid{"poisson_grid.csv", {"run", "x", "y", "exact", "mean", "std"}, {}};
    std::map<std::string, const PoissonResult*> by_name;
    for (const auto& r : runs) {
        const auto& o = r.options;
        rep.seconds[r.name] = r.seconds;
        if (!r.result) {
            rep.failures[r.name] = r.failure;
            summary.add(r.name, to_string(o.solution), o.spec.name(), o.n_boundary, o.n_interior, "failed: " + r.failure,
                        NAN, NAN, NAN, NAN, r.seconds);
            continue;
        }
        const auto& res = *r.result;
        by_name[r.name] = &res;
        summary.add(r.name, to_string(o.solution), o.spec.name(), o.n_boundary, o.n_interior, "ok", res.grid_error,
                    res.cut_error, res.cut_mean_std, res.training.nlml, r.seconds);
        rep.errors[r.name + ":grid"] = res.grid_error;
        rep.errors[r.name + ":cut"] = res.cut_error;
        rep.nlml[r.name] = res.training.nlml;
        rep.hyperparameters[r.name] = detail::to_std(res.training.theta.to_vector());
        const Eigen::VectorXd cs = res.cut.stddev(), gs = res.grid.stddev();
        for (Eigen::Index i = 0; i < res.cut.mean.size(); ++i) {
            const double x = res.cut.query_points(i, 0), y = res.cut.query_points(i, 1);
            cut.add(r.name, std::sqrt(x * x + y * y), x, y, res.cut_exact[i], res.cut.mean[i], cs[i],
                    res.cut.mean[i] - 2 * cs[i], res.cut.mean[i] + 2 * cs[i]);
        }
        for (Eigen::Index i = 0; i < res.grid.mean.size(); ++i)
            grid.add(r.name, res.grid.query_points(i, 0), res.grid.query_points(i, 1), res.grid_exact[i], res.grid.mean[i],
                     gs[i]);
    }
    rep.tables = {std::move(summary), std::move(cut), std::move(grid)};

    rep.check("every run trained", rep.failures.empty(), std::to_string(rep.failures.size()) + " failures");
    if (cut_study) {
        std::vector<double> e, s;
        bool complete = true;
        for (const auto& p : cut_presets()) {
            if (!by_name.contains(p.name)) {
                complete = false;
                continue;
            }
            const auto* res = by_name[p.name];
            e.push_back(res->cut_error);
            s.push_back(res->cut_mean_std);
            const double ratio = res->cut_error / p.target;
            rep.check(std::string(p.name) + " cut error within 3x of " + format_number(p.target),
                      ratio >= 1.0 / 3.0 && ratio <= 3.0, "cut error " + format_number(res->cut_error));
        }
        if (complete) {
            bool mono = true;
            for (std::size_t i = 1; i < e.size(); ++i) mono = mono && e[i] < e[i - 1];
            rep.check("cut errors decrease across presets", mono, "");
            const double rho = spearman(s, e);
            rep.errors["cut:spearman_std_error"] = rho;
            rep.check("Spearman(cut std, cut error) = 1 across cut presets", rho == 1.0, "rho " + format_number(rho));
        }
    }
    if (compare)
        for (auto s : {FabricatedSolution::S1, FabricatedSolution::S2}) {
            const std::string a = "compare-" + to_string(s) + "-se", b = "compare-" + to_string(s) + "-nngp-erf-L1";
            if (!by_name.contains(a) || !by_name.contains(b)) continue;
            const double ea = by_name[a]->grid_error, eb = by_name[b]->grid_error;
            const double r = std::max(ea, eb) / std::min(ea, eb);
            rep.check("GP-SE and NNGP-erf(L=1) grid errors within 3x on " + to_string(s), r <= 3.0,
                      format_number(ea) + " vs " + format_number(eb) + ", ratio " + format_number(r));
        }
    rep.total_seconds = detail::since(t0);
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Burgers

inline BurgersOptions burgers_options(const ExperimentConfig& cfg, const Variant& v) {
    BurgersOptions bo;
    bo.spec = v.spec;
    bo.n_initial = cfg.n_initial;
    bo.n_train = v.n_train > 0 ? v.n_train : cfg.n_train;
    bo.noise_std0 = cfg.noise_std;
    bo.dt = cfg.dt;
    bo.steps = cfg.steps;
    bo.n_test = cfg.n_test;
    bo.seed = cfg.seed;
    bo.resample = cfg.resample;
    bo.record_steps = cfg.record_steps;
    bo.first_train = train_options(cfg);
    bo.later_train = train_options(cfg);
    bo.later_train.restarts = cfg.later_restarts;
    bo.later_train.max_evaluations = cfg.later_max_evals;
    bo.later_train.line_search.initial_step = cfg.later_initial_step;
    return bo;
}

inline std::vector<std::string> default_burgers_variants(bool noisy) {
    if (!noisy) return {"arcsin/31", "nngp-erf-L1/31", "nngp-erf-L3/101"};
    return {"arcsin/31", "nngp-erf-L1/31", "nngp-erf-L1/101", "nngp-erf-L3/101"};
}

inline Report run_burgers(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = detail::Clock::now();
    Report rep;
    rep.config = cfg;
    const bool noisy = cfg.noise_std > 0.0;
    const auto variants = select_variants(cfg, 1, default_burgers_variants(noisy), cfg.n_train);

    Table steps{"burgers_steps.csv", {"variant", "step", "time", "relative_error", "nlml"}, {}};
    Table prof{"burgers_profiles.csv", {"variant", "step", "time", "x", "exact", "mean", "std", "lower", "upper"}, {}};
    Table init{"burgers_initial.csv", {"variant", "x", "u0_observed", "u0_exact"}, {}};
    Table train_pts{"burgers_train_points.csv", {"variant", "x"}, {}};
    Table summary{"burgers_summary.csv",
                  {"variant", "kernel", "n_train", "noise_std", "status", "completed_steps", "final_error",
                   "min_propagation_gap", "seconds"},
                  {}};
    // error[variant][step]
    std::map<std::string, std::map<int, double>> err;
    std::map<std::string, bool> is_gp;
    double worst_gap = std::numeric_limits<double>::infinity();
    for (const auto& v : variants) {
        const std::string name = v.name();
        const auto bo = burgers_options(cfg, v);
        const auto ts = detail::Clock::now();
        BurgersResult res;
        try {
            res = burgers_march(bo);
        } catch (const Error& e) {
            res.failure = e.what();
        }
        const double sec = detail::since(ts);
        rep.seconds[name] = sec;
        is_gp[name] = !is_nngp(v.spec.family);
        if (!res.failure.empty()) rep.failures[name] = res.failure;
        worst_gap = std::min(worst_gap, res.min_propagation_gap);
        for (std::size_t k = 0; k < res.step_errors.size(); ++k)
            steps.add(name, static_cast<int>(k + 1), static_cast<double>(k + 1) * cfg.dt, res.step_errors[k],
                      res.step_nlml[k]);
        for (const auto& rec : res.records) {
            err[name][rec.step] = rec.error;
            rep.errors[name + "@t=" + format_number(rec.time)] = rec.error;
            for (Eigen::Index i = 0; i < res.test_points.size(); ++i)
                prof.add(name, rec.step, rec.time, res.test_points[i], rec.exact[i], rec.mean[i], rec.stddev[i],
                         rec.mean[i] - 2 * rec.stddev[i], rec.mean[i] + 2 * rec.stddev[i]);
        }
        for (Eigen::Index i = 0; i < res.initial_points.rows(); ++i)
            init.add(name, res.initial_points(i, 0), res.initial_values[i],
                     -std::sin(std::numbers::pi * res.initial_points(i, 0)));
        for (Eigen::Index i = 0; i < res.train_points.rows(); ++i) train_pts.add(name, res.train_points(i, 0));
        const double final_err = res.step_errors.empty() ? NAN : res.step_errors.back();
        summary.add(name, v.spec.name(), bo.n_train, cfg.noise_std, res.failure.empty() ? "ok" : "failed: " + res.failure,
                    res.completed_steps, final_err, res.min_propagation_gap, sec);
        rep.nlml[name] = res.step_nlml.empty() ? NAN : res.step_nlml.back();
    }
    rep.tables = {std::move(steps), std::move(prof), std::move(init), std::move(train_pts), std::move(summary)};

    rep.check("every march completed", rep.failures.empty(), std::to_string(rep.failures.size()) + " failures");
    rep.check("propagated uncertainty never lowers the variance (tolerance 1e-10)", worst_gap >= -1e-10,
              "min gap " + format_number(worst_gap));
    auto at = [&](const std::string& v, double t) -> std::optional<double> {
        const int s = static_cast<int>(std::lround(t / cfg.dt));
        if (!err.contains(v) || !err[v].contains(s)) return std::nullopt;
        return err[v][s];
    };
    auto best_nngp = [&](double t) -> std::optional<double> {
        std::optional<double> best;
        for (const auto& [v, gp] : is_gp)
            if (!gp)
                if (auto e = at(v, t); e && (!best || *e < *best)) best = e;
        return best;
    };
    auto gp_error = [&](double t) -> std::optional<double> {
        for (const auto& [v, gp] : is_gp)
            if (gp) return at(v, t);
        return std::nullopt;
    };
    if (!noisy) {
        if (auto g = gp_error(1.0), b = best_nngp(1.0); g && b)
            rep.check("noise-free: best NNGP error <= GP error at t=1", *b <= *g,
                      format_number(*b) + " vs " + format_number(*g));
        const auto l3 = at("nngp-erf-L3/101", 1.0), l1 = at("nngp-erf-L1/31", 1.0), gp = at("arcsin/31", 1.0);
        if (l3 && l1 && gp) {
            rep.check("noise-free ordering at t=1: NNGP L3/101 < NNGP L1/31 < GP arcsin/31", *l3 < *l1 && *l1 < *gp,
                      format_number(*l3) + " < " + format_number(*l1) + " < " + format_number(*gp));
            rep.check("noise-free NNGP L3/101 error < 0.1 at t=1", *l3 < 0.1, format_number(*l3));
        }
    } else {
        for (double t : {0.75, 1.0}) {
            if (auto g = gp_error(t), b = best_nngp(t); g && b)
                rep.check("noisy: GP error / best NNGP error >= 3 at t=" + format_number(t), *g >= 3.0 * *b,
                          "ratio " + format_number(*g / *b));
            const auto l1 = at("nngp-erf-L1/101", t), l3 = at("nngp-erf-L3/101", t);
            if (l1 && l3)
                rep.check("noisy: NNGP L1/101 error < NNGP L3/101 error at t=" + format_number(t), *l1 < *l3,
                          format_number(*l1) + " vs " + format_number(*l3));
        }
    }
    rep.total_seconds = detail::since(t0);
    return rep;
}

inline Report run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
        case Command::ValidateKernels: return run_validate_kernels(cfg);
        case Command::ApproxStep: return run_approx_step(cfg);
        case Command::ApproxHartmann: return run_approx_hartmann(cfg);
        case Command::Poisson: return run_poisson(cfg);
        case Command::Burgers: return run_burgers(cfg);
    }
    throw ConfigError("unknown experiment");
}

}  // namespace nngp

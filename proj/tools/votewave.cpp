#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "votewave/io.hpp"
#include "votewave/wave.hpp"

// Experiment runner: deterministic artifacts (CSV + JSON + manifest) for
// representability decisions, Monte Carlo runs, grid iteration, traveling
// waves and cluster diagnostics.

namespace vw = votewave;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

vw::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw vw::ConfigError("cannot open file: " + path);
    vw::json j;
    try {
        in >> j;
    } catch (const vw::json::exception& e) {
        throw vw::ConfigError(std::string("invalid JSON: ") + e.what());
    }
    return j;
}

vw::json representation_json(const vw::Representation<vw::Rational>& repr, bool threshold) {
    vw::json j;
    if (!repr.ok()) {
        j["diagnosis"] = vw::to_string(repr.status);
        return j;
    }
    vw::json entries;
    if (threshold) {
        for (int k = 1; k <= repr.degree; ++k) {
            const vw::Rational z = repr.alpha[k] - repr.alpha[k - 1];
            if (z != 0) entries[std::to_string(k) + "," + std::to_string(repr.degree)] = vw::to_double(z);
        }
        j["threshold"] = {{"d", repr.degree}, {"zeta", entries}};
    } else {
        for (int k = 0; k <= repr.degree; ++k)
            entries[std::to_string(k) + "," + std::to_string(repr.degree)] = vw::to_double(repr.alpha[k]);
        j["outcome"] = {{"d", repr.degree}, {"alpha", entries}};
    }
    return j;
}

int cmd_represent(const std::string& poly_path, int d_cap, const std::string& mode) {
    const vw::json pj = load_json_file(poly_path);
    const auto g = vw::poly_from_json<vw::Rational>(pj);
    vw::json out;
    bool any_ok = false;
    if (mode == "threshold" || mode == "both") {
        const auto repr = vw::threshold_representation(g, d_cap);
        if (repr.ok()) {
            out.update(representation_json(repr, true));
            any_ok = true;
        } else if (mode == "threshold") {
            out["diagnosis"] = vw::to_string(repr.status);
        }
    }
    if (!any_ok && (mode == "outcome" || mode == "both")) {
        const auto repr = vw::outcome_representation(g, d_cap);
        if (repr.ok()) {
            out.update(representation_json(repr, false));
            any_ok = true;
        } else {
            out["diagnosis"] = vw::to_string(repr.status);
        }
    }
    std::cout << out.dump() << "\n";
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, std::optional<int> depth,
                 std::optional<long long> replicas, std::optional<std::uint64_t> seed,
                 const std::string& out_path) {
    Timer timer;
    vw::ModelConfig cfg = vw::load_config(config_path);
    if (depth) cfg.depth = *depth;
    if (replicas) cfg.replicas = *replicas;
    if (seed) cfg.seed = *seed;

    vw::SimConfig sim{cfg.model, cfg.increments, cfg.depth, cfg.replicas, cfg.seed};
    const std::vector<double> values = vw::sample_threshold_values(sim);

    const fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    vw::write_text_file(out, vw::samples_csv(values));

    const auto ecdf = vw::EmpiricalCDF::from_samples(values);
    vw::json summary;
    summary["replicas"] = cfg.replicas;
    summary["depth"] = cfg.depth;
    summary["quantiles"] = vw::quantile_summary(ecdf);
    const fs::path summary_path = out.parent_path() / (out.stem().string() + "_summary.json");
    vw::write_text_file(summary_path, summary.dump(2) + "\n");

    vw::RunManifest manifest;
    manifest.subcommand = "simulate";
    manifest.config_hash = vw::config_digest(load_json_file(config_path));
    manifest.seed = cfg.seed;
    manifest.wall_time_s = timer.seconds();
    manifest.outputs = {out.filename().string(), summary_path.filename().string()};
    vw::write_manifest(out.has_parent_path() ? out.parent_path() : fs::path("."), manifest);
    return kExitOk;
}

struct IterationArtifacts {
    std::vector<std::pair<long, vw::GridCDF>> records;
    vw::Nonlinearity nl;
    double grid_h = 1.0;
};

IterationArtifacts run_iteration(const vw::ModelConfig& cfg, long n, long record_every,
                                 std::vector<std::pair<long, double>>* med_abs_series = nullptr) {
    IterationArtifacts art;
    if (!cfg.model.is_threshold()) throw vw::ConfigError("grid iteration needs a threshold model");
    art.nl = vw::analyze(vw::build_threshold_g(cfg.model));
    art.grid_h = cfg.grid_h.value_or(vw::default_grid_h(cfg.increments));

    vw::GridCDF F0 = vw::step_initial(cfg.increments, art.grid_h);
    vw::IterateOptions opts;
    opts.record_every = record_every;
    if (med_abs_series) {
        opts.on_step = [med_abs_series](long m, const vw::GridCDF& F) {
            // law of |M_n|: G(x) = F(x) - F(-x - h) on the lattice,
            // F(x) - F(-x) for continuous laws
            double med = 0.0;
            const double off = F.lattice ? F.h : 0.0;
            for (long i = 0; i < F.size(); ++i) {
                const double x = F.x(i);
                if (x < 0.0) continue;
                const double mass = F.v[static_cast<std::size_t>(i)] - vw::value_at(F, -x - off);
                if (mass >= 0.5) {
                    med = x;
                    break;
                }
            }
            med_abs_series->emplace_back(m, med);
        };
    }
    art.records = vw::iterate(F0, n, art.nl, cfg.increments, opts);
    return art;
}

int cmd_iterate(const std::string& config_path, long n, long record_every,
                const std::string& out_dir) {
    Timer timer;
    vw::ModelConfig cfg = vw::load_config(config_path);
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    IterationArtifacts art = run_iteration(cfg, n, record_every);

    vw::RunManifest manifest;
    manifest.subcommand = "iterate";
    manifest.config_hash = vw::config_digest(load_json_file(config_path));
    manifest.seed = cfg.seed;

    vw::json report;
    report["n"] = n;
    report["grid_h"] = art.grid_h;
    vw::json quantiles;
    for (const auto& [m, F] : art.records) {
        const std::string name = "cdf_n" + std::to_string(m) + ".csv";
        vw::write_text_file(dir / name, vw::cdf_csv(F));
        manifest.outputs.push_back(name);
        quantiles[std::to_string(m)] = vw::quantile_summary(F);
    }
    report["quantiles"] = quantiles;
    // the n = 0 point mass has no cluster structure
    std::vector<std::pair<long, vw::GridCDF>> positive;
    for (const auto& rec : art.records)
        if (rec.first > 0) positive.push_back(rec);
    report["cluster_report"] = vw::cluster_report_to_json(vw::cluster_report(positive, art.nl));
    vw::write_text_file(dir / "report.json", report.dump(2) + "\n");
    manifest.outputs.push_back("report.json");
    manifest.wall_time_s = timer.seconds();
    vw::write_manifest(dir, manifest);
    return kExitOk;
}

int cmd_wave(const std::string& config_path, double tol, const std::string& out_dir) {
    Timer timer;
    vw::ModelConfig cfg = vw::load_config(config_path);
    if (!cfg.model.is_threshold()) throw vw::ConfigError("wave computation needs a threshold model");
    const vw::Nonlinearity nl = vw::analyze(vw::build_threshold_g(cfg.model));
    vw::WaveOptions opts;
    opts.tol = tol;

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const vw::WaveProfile wave = vw::solve_wave(nl, cfg.increments, opts);

    vw::write_text_file(dir / "profile.csv", vw::profile_csv(wave.phi));
    vw::json j;
    j["speed"] = wave.speed;
    j["residual"] = wave.residual;
    j["pin_level"] = wave.pin_level;
    j["domain"] = {wave.phi.x0, wave.phi.x(wave.phi.size() - 1)};
    j["h"] = wave.phi.h;
    vw::write_text_file(dir / "wave.json", j.dump(2) + "\n");

    vw::RunManifest manifest;
    manifest.subcommand = "wave";
    manifest.config_hash = vw::config_digest(load_json_file(config_path));
    manifest.seed = cfg.seed;
    manifest.wall_time_s = timer.seconds();
    manifest.outputs = {"profile.csv", "wave.json"};
    vw::write_manifest(dir, manifest);
    return kExitOk;
}

// The three preset quaternary threshold configurations with
// q = (1/4, 1/2, 1/4) on {-1, 0, 1}: both clusters tight, one drifting,
// both drifting.
int cmd_figure1(const std::string& out_dir, long n) {
    Timer timer;
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const vw::IncrementLaw q =
        vw::IncrementLaw::from_atoms({{-1.0, 0.25}, {0.0, 0.5}, {1.0, 0.25}});
    const std::vector<std::pair<std::string, vw::VotingModel<double>>> configs = {
        {"fig1a.csv", vw::archetype_tight<double>()},
        {"fig1b.csv", vw::archetype_half_drift<double>()},
        {"fig1c.csv", vw::archetype_both_drift<double>()},
    };
    vw::RunManifest manifest;
    manifest.subcommand = "figure1";
    vw::json digest_src;
    digest_src["preset"] = "figure1";
    digest_src["n"] = n;
    manifest.config_hash = vw::config_digest(digest_src);
    for (const auto& [name, model] : configs) {
        const vw::Nonlinearity nl = vw::analyze(vw::build_threshold_g(model));
        vw::GridCDF F = vw::step_initial(q, 1.0);
        auto records = vw::iterate(F, n, nl, q);
        vw::write_text_file(dir / name, vw::cdf_csv(records.back().second));
        manifest.outputs.push_back(name);
    }
    manifest.wall_time_s = timer.seconds();
    vw::write_manifest(dir, manifest);
    return kExitOk;
}

int cmd_diagnose(const std::string& config_path, const std::vector<long>& n_list,
                 const std::string& out_path) {
    Timer timer;
    vw::ModelConfig cfg = vw::load_config(config_path);
    if (n_list.empty()) throw vw::ConfigError("diagnose needs a nonempty n list");
    const long n_max = *std::max_element(n_list.begin(), n_list.end());

    std::vector<std::pair<long, double>> med_abs;
    IterationArtifacts art = run_iteration(cfg, n_max, 1, &med_abs);

    // keep only the requested generations for the report
    std::vector<std::pair<long, vw::GridCDF>> picked;
    for (const auto& rec : art.records)
        if (std::find(n_list.begin(), n_list.end(), rec.first) != n_list.end()) picked.push_back(rec);

    vw::json report;
    report["n_list"] = n_list;
    vw::json quantiles;
    for (const auto& [m, F] : picked) quantiles[std::to_string(m)] = vw::quantile_summary(F);
    report["quantiles"] = quantiles;
    const vw::ClusterReport cr = vw::cluster_report(picked, art.nl);
    report["cluster_report"] = vw::cluster_report_to_json(cr);
    vw::json tight = vw::json::array();
    for (const auto& c : cr.clusters) tight.push_back(c.tight);
    report["tightness_flags"] = tight;
    vw::json med_series = vw::json::array();
    for (const auto& [m, v] : med_abs) med_series.push_back({{"n", m}, {"med_abs", v}});
    report["med_abs_series"] = med_series;

    const fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    vw::write_text_file(out, report.dump(2) + "\n");

    vw::RunManifest manifest;
    manifest.subcommand = "diagnose";
    manifest.config_hash = vw::config_digest(load_json_file(config_path));
    manifest.seed = cfg.seed;
    manifest.wall_time_s = timer.seconds();
    manifest.outputs = {out.filename().string()};
    vw::write_manifest(out.has_parent_path() ? out.parent_path() : fs::path("."), manifest);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"votewave: voting-model recursions, branching random walk "
                 "simulation, and bistable traveling waves"};
    app.require_subcommand(1);

    std::string poly_path, config_path, out_path = "out.csv", out_dir = "out";
    int d_cap = 256;
    std::string mode = "both";
    std::optional<int> depth;
    std::optional<long long> replicas;
    std::optional<std::uint64_t> seed;
    double tol = 1e-8;
    long n = 100, record_every = 0;
    std::vector<long> n_list;

    auto* represent = app.add_subcommand("represent", "decide representability of a recursion polynomial");
    represent->add_option("--poly", poly_path, "polynomial JSON file")->required();
    represent->add_option("--d-cap", d_cap, "elevation cap");
    represent->add_option("--mode", mode, "threshold | outcome | both")
        ->check(CLI::IsMember({"threshold", "outcome", "both"}));

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo samples of the voting outcome");
    simulate->add_option("--config", config_path, "model config JSON")->required();
    simulate->add_option("--depth", depth, "generations");
    simulate->add_option("--replicas", replicas, "replica count");
    simulate->add_option("--seed", seed, "seed override");
    simulate->add_option("--out", out_path, "output CSV");

    auto* iterate = app.add_subcommand("iterate", "deterministic grid recursion");
    iterate->add_option("--config", config_path, "model config JSON")->required();
    iterate->add_option("--n", n, "generations")->required();
    iterate->add_option("--record-every", record_every, "record every k generations");
    iterate->add_option("--out-dir", out_dir, "output directory");

    auto* wave = app.add_subcommand("wave", "bistable traveling wave");
    wave->add_option("--config", config_path, "model config JSON")->required();
    wave->add_option("--tol", tol, "solver tolerance");
    wave->add_option("--out", out_dir, "output directory");

    auto* figure1 = app.add_subcommand("figure1", "three preset cluster archetypes");
    figure1->add_option("--out-dir", out_dir, "output directory");
    figure1->add_option("--n", n, "generations (default 1000)");

    auto* diagnose = app.add_subcommand("diagnose", "quantile/cluster/tightness diagnostics");
    diagnose->add_option("--config", config_path, "model config JSON")->required();
    diagnose->add_option("--n-list", n_list, "generation checkpoints")->delimiter(',');
    diagnose->add_option("--out", out_path, "report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*represent) return cmd_represent(poly_path, d_cap, mode);
        if (*simulate) return cmd_simulate(config_path, depth, replicas, seed, out_path);
        if (*iterate) return cmd_iterate(config_path, n, record_every, out_dir);
        if (*wave) {
            if (out_dir == "out" && wave->count("--out") == 0) out_dir = "wave_out";
            return cmd_wave(config_path, tol, out_dir);
        }
        if (*figure1) return cmd_figure1(out_dir, figure1->count("--n") ? n : 1000);
        if (*diagnose) {
            if (n_list.empty()) n_list = {250, 500, 1000};
            if (out_path == "out.csv") out_path = "diagnose.json";
            return cmd_diagnose(config_path, n_list, out_path);
        }
    } catch (const vw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const vw::NonConvergence& e) {
        std::cerr << "non-convergence: " << e.what() << " (last residual " << e.last_residual
                  << ")\n";
        return kExitNoConvergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}

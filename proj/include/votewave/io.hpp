#pragma once
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "votewave/brw_mc.hpp"
#include "votewave/grid.hpp"
#include "votewave/increments.hpp"
#include "votewave/models.hpp"

namespace votewave {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All numeric output carries 12 significant digits; CSVs use '.' decimals
// and LF line endings, stable enough for byte comparison.
inline std::string fmt12(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// Polynomials
// ---------------------------------------------------------------------------

inline json poly_to_json(const BernsteinPoly<double>& p) {
    json j;
    j["basis"] = "bernstein";
    j["degree"] = p.degree();
    j["coeffs"] = p.coeffs;
    return j;
}

inline json poly_to_json(const BernsteinPoly<Rational>& p) {
    json j;
    j["basis"] = "bernstein";
    j["degree"] = p.degree();
    json coeffs = json::array();
    for (const auto& c : p.coeffs) coeffs.push_back(rational_to_string(c));
    j["coeffs"] = coeffs;
    return j;
}

template <class S>
S scalar_from_json(const json& v) {
    if constexpr (is_exact_scalar<S>) {
        if (v.is_string()) return rational_from_string(v.get<std::string>());
        if (v.is_number_integer()) return S(v.get<long long>());
        return S(v.get<double>());  // exact binary fraction
    } else {
        if (v.is_string()) return to_double(rational_from_string(v.get<std::string>()));
        return v.get<double>();
    }
}

// Accepts {"basis":"bernstein"|"monomial","degree":d,"coeffs":[...]} with
// numeric or string coefficients; monomial input is converted.
template <class S>
BernsteinPoly<S> poly_from_json(const json& j) {
    if (!j.contains("coeffs") || !j["coeffs"].is_array()) throw ConfigError("polynomial needs a coeffs array");
    std::vector<S> coeffs;
    for (const auto& v : j["coeffs"]) coeffs.push_back(scalar_from_json<S>(v));
    const std::string basis = j.value("basis", "bernstein");
    if (j.contains("degree")) {
        const int d = j["degree"].get<int>();
        if (basis == "bernstein" && d + 1 != static_cast<int>(coeffs.size()))
            throw ConfigError("degree does not match coefficient count");
    }
    if (basis == "bernstein") return BernsteinPoly<S>{std::move(coeffs)};
    if (basis == "monomial") {
        MonomialPoly<S> m{std::move(coeffs)};
        const int d = j.contains("degree") ? j["degree"].get<int>() : m.degree();
        return from_monomial(m, std::max(d, std::max(0, m.degree())));
    }
    throw ConfigError("unknown polynomial basis: " + basis);
}

// ---------------------------------------------------------------------------
// Model configuration
// ---------------------------------------------------------------------------

// {"offspring":{"2":0.25,"3":0.75},
//  "rule":{"type":"threshold","zeta":{"2,2":1.0,"2,3":1.0}},
//  "increments":{"type":"atomic","atoms":[[-1,0.25],[0,0.5],[1,0.25]]},
//  "seed":1,"schema_version":1}
struct ModelConfig {
    VotingModel<double> model;
    IncrementLaw increments = IncrementLaw::from_atoms({{0.0, 1.0}});
    std::uint64_t seed = 1;
    std::optional<double> grid_h;
    int depth = 8;
    std::int64_t replicas = 10000;
};

namespace detail {

inline std::pair<int, int> parse_kd_key(const std::string& key) {
    const auto comma = key.find(',');
    if (comma == std::string::npos) throw ConfigError("rule keys must look like \"k,d\": " + key);
    try {
        const int k = std::stoi(key.substr(0, comma));
        const int d = std::stoi(key.substr(comma + 1));
        return {k, d};
    } catch (const std::exception&) {
        throw ConfigError("rule keys must look like \"k,d\": " + key);
    }
}

}  // namespace detail

inline IncrementLaw increments_from_json(const json& j) {
    const std::string type = j.value("type", "");
    if (type == "atomic") {
        std::vector<std::pair<double, double>> atoms;
        for (const auto& a : j.at("atoms")) atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
        return IncrementLaw::from_atoms(std::move(atoms));
    }
    if (type == "raised_cosine") {
        return IncrementLaw::raised_cosine(j.value("half_width", 1.0), j.value("nodes", 401));
    }
    if (type == "density") {
        return IncrementLaw::from_density_grid(j.at("x0").get<double>(), j.at("h").get<double>(),
                                               j.at("values").get<std::vector<double>>());
    }
    throw ConfigError("unknown increment law type: " + type);
}

inline json increments_to_json(const IncrementLaw& law) {
    json j;
    if (law.kind == IncrementLaw::Kind::atomic) {
        j["type"] = "atomic";
        json atoms = json::array();
        for (const auto& [x, w] : law.atoms) atoms.push_back({x, w});
        j["atoms"] = atoms;
    } else {
        j["type"] = "density";
        j["x0"] = law.x0;
        j["h"] = law.h;
        j["values"] = law.pdf;
    }
    return j;
}

inline ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    try {
        if (!j.contains("offspring")) throw ConfigError("config needs an offspring law");
        for (const auto& [key, val] : j.at("offspring").items())
            cfg.model.offspring.probs[std::stoi(key)] = val.get<double>();

        const json& rule = j.at("rule");
        const std::string type = rule.value("type", "");
        if (type == "threshold") {
            ThresholdRule<double> r;
            for (const auto& [key, val] : rule.at("zeta").items()) {
                const auto [k, d] = detail::parse_kd_key(key);
                if (k < 1 || k > d) throw ConfigError("zeta index out of range: " + key);
                auto& row = r.zeta[d];
                row.resize(d, 0.0);
                row[k - 1] = val.get<double>();
            }
            for (const auto& [d, p] : cfg.model.offspring.probs) {
                if (p > 0.0 && !r.zeta.count(d)) throw ConfigError("missing zeta row for offspring count " + std::to_string(d));
            }
            cfg.model.rule = std::move(r);
        } else if (type == "outcome") {
            OutcomeRule<double> r;
            for (const auto& [key, val] : rule.at("alpha").items()) {
                const auto [k, d] = detail::parse_kd_key(key);
                if (k < 0 || k > d) throw ConfigError("alpha index out of range: " + key);
                auto& row = r.alpha[d];
                if (row.empty()) {
                    row.resize(d + 1, 0.0);
                    row.back() = 1.0;
                }
                row[k] = val.get<double>();
            }
            cfg.model.rule = std::move(r);
        } else {
            throw ConfigError("rule type must be threshold or outcome");
        }

        if (j.contains("increments")) cfg.increments = increments_from_json(j.at("increments"));
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("depth")) cfg.depth = j.at("depth").get<int>();
        if (j.contains("replicas")) cfg.replicas = j.at("replicas").get<std::int64_t>();
        if (j.contains("grid") && j.at("grid").contains("h")) cfg.grid_h = j.at("grid").at("h").get<double>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    try {
        cfg.model.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    return config_from_json(j);
}

// Default grid step: the gcd of the atom positions for atomic laws (every
// atom must sit on the grid), the quadrature spacing for densities.
inline double default_grid_h(const IncrementLaw& law) {
    if (law.kind == IncrementLaw::Kind::density) return law.h;
    auto fgcd = [](double a, double b) {
        a = std::abs(a);
        b = std::abs(b);
        while (b > 1e-9) {
            double r = std::fmod(a, b);
            if (r > b - 1e-9) r = 0.0;
            a = b;
            b = r;
        }
        return a;
    };
    double g = 0.0;
    for (const auto& [x, w] : law.atoms) g = fgcd(g, x);
    return g > 1e-9 ? g : 1.0;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

// FNV-1a over the canonical (sorted-key) dump.
inline std::string config_digest(const json& j) {
    const std::string s = j.dump();
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : s) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

struct RunManifest {
    std::string tool_version = "0.1.0";
    std::string subcommand;
    std::string config_hash;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0;
    std::vector<std::string> outputs;

    json to_json() const {
        json j;
        j["schema_version"] = 1;
        j["tool_version"] = tool_version;
        j["subcommand"] = subcommand;
        j["config_hash"] = config_hash;
        j["seed"] = seed;
        j["wall_time_s"] = wall_time_s;
        j["outputs"] = outputs;
        return j;
    }
};

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
    write_text_file(dir / "manifest.json", m.to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// CSV artifacts
// ---------------------------------------------------------------------------

inline std::string cdf_csv(const GridCDF& F) {
    std::ostringstream out;
    out << "x,F\n";
    for (long i = 0; i < F.size(); ++i)
        out << fmt12(F.x(i)) << ',' << fmt12(F.v[static_cast<std::size_t>(i)]) << '\n';
    return out.str();
}

inline std::string samples_csv(const std::vector<double>& values) {
    std::ostringstream out;
    out << "replica,value\n";
    for (std::size_t i = 0; i < values.size(); ++i) out << i << ',' << fmt12(values[i]) << '\n';
    return out.str();
}

inline std::string profile_csv(const GridCDF& phi) {
    std::ostringstream out;
    out << "x,phi\n";
    for (long i = 0; i < phi.size(); ++i)
        out << fmt12(phi.x(i)) << ',' << fmt12(phi.v[static_cast<std::size_t>(i)]) << '\n';
    return out.str();
}

inline const std::vector<double>& summary_quantile_levels() {
    static const std::vector<double> levels = {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99};
    return levels;
}

inline json quantile_summary(const EmpiricalCDF& e) {
    json j;
    for (double a : summary_quantile_levels()) j[fmt12(a)] = e.quantile(a);
    return j;
}

inline json quantile_summary(const GridCDF& F) {
    json j;
    for (double a : summary_quantile_levels()) j[fmt12(a)] = quantile(F, a);
    return j;
}

inline json cluster_report_to_json(const ClusterReport& report) {
    json j;
    j["eps"] = report.eps;
    j["zeros"] = report.zeros;
    j["note"] = "tight flags are diagnostics of the terrace structure, not formal guarantees; "
                "coinciding clusters cannot be told apart";
    json ref = json::array();
    for (const auto& [n, qn] : report.reference_quantile) ref.push_back({{"n", n}, {"q", qn}});
    j["reference_quantile"] = ref;
    json clusters = json::array();
    for (const auto& c : report.clusters) {
        json jc;
        jc["s"] = c.s;
        jc["drift_slope"] = c.drift_slope;
        jc["tight"] = c.tight;
        json snaps = json::array();
        for (const auto& s : c.snapshots)
            snaps.push_back({{"n", s.n},
                             {"lo", s.lo},
                             {"hi", s.hi},
                             {"median", s.median},
                             {"gap", s.gap}});
        jc["snapshots"] = snaps;
        clusters.push_back(jc);
    }
    j["clusters"] = clusters;
    return j;
}

}  // namespace votewave

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "model.hpp"

namespace alifs {

using Json = nlohmann::ordered_json;

struct ThetaGrid {
    double lo = 0.0, hi = 4.0;
    std::size_t n = 41;

    std::vector<double> points() const {
        std::vector<double> t;
        for (std::size_t i = 0; i < n; ++i) t.push_back(n == 1 ? lo : lo + (hi - lo) * double(i) / double(n - 1));
        return t;
    }
};

inline ThetaGrid parse_theta_grid(const std::string& s) {
    ThetaGrid g;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> g.lo >> c1 >> g.hi >> c2 >> g.n) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof())
        throw ConfigError("theta grid must be lo:hi:n, got '" + s + "'");
    if (!(g.lo >= 0) || !(g.hi >= g.lo) || g.n == 0) throw ConfigError("theta grid needs 0 <= lo <= hi and n >= 1");
    return g;
}

inline std::string format_theta_grid(const ThetaGrid& g) {
    std::ostringstream o;
    o.precision(17);
    o << g.lo << ':' << g.hi << ':' << g.n;
    return o.str();
}

struct RunOptions {
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;  // not echoed into reports
    std::size_t shards = 64;
    std::size_t samples = 100000;
    std::optional<std::uint64_t> burn_in;  // empty: coupling certification
    std::size_t stride = 1;
    std::optional<std::size_t> hill_k;  // empty: default rule
    ThetaGrid theta_grid;
    double tol = 1e-12;
    std::string out = "out";
};

struct VerifyOptions {
    bool strict = false;
    std::uint64_t gelfand_paths = 20000;
    std::size_t gelfand_n = 30;
    std::uint64_t martingale_paths = 20000;
    std::size_t martingale_n = 5;
    std::uint64_t comparison_draws = 2000;
    std::size_t comparison_n = 50;
    std::uint64_t identity_paths = 20000;
    std::size_t bound_samples = 200;
};

struct RunConfig {
    ModelSpec model;
    RunOptions run;
    VerifyOptions verify;
};

namespace config_detail {

inline std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline const Json& field(const Json& j, const std::string& path, const std::string& key) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(at(path, key) + ": missing");
    return *it;
}

inline double num(const Json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    throw ConfigError(path + ": expected a number");
}

inline double num(const Json& j, const std::string& path, const std::string& key) {
    return num(field(j, path, key), at(path, key));
}

inline double num_or(const Json& j, const std::string& path, const std::string& key, double def) {
    return j.contains(key) ? num(j, path, key) : def;
}

inline std::string str(const Json& j, const std::string& path, const std::string& key) {
    const Json& v = field(j, path, key);
    if (!v.is_string()) throw ConfigError(at(path, key) + ": expected a string");
    return v.get<std::string>();
}

inline std::uint64_t count(const Json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return std::uint64_t(v.get<std::int64_t>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0 && d == std::floor(d) && d < 1.8e19) return std::uint64_t(d);
    }
    throw ConfigError(path + ": expected a nonnegative integer");
}

inline bool boolean(const Json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
    return v.get<bool>();
}

inline Json number_json(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return nullptr;
    return x;
}

inline void wrap(const std::string& path, const auto& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace config_detail

inline ScalarDist dist_from_json(const Json& j, const std::string& path) {
    using namespace config_detail;
    const std::string t = str(j, path, "type");
    std::optional<ScalarDist> d;
    wrap(path, [&] {
        if (t == "point_mass") d = ScalarDist::point_mass(num(j, path, "value"));
        else if (t == "two_point") d = ScalarDist::two_point(num(j, path, "v1"), num(j, path, "p1"), num(j, path, "v2"));
        else if (t == "uniform") d = ScalarDist::uniform(num(j, path, "lo"), num(j, path, "hi"));
        else if (t == "gaussian") d = ScalarDist::gaussian(num_or(j, path, "mean", 0.0), num_or(j, path, "sd", 1.0));
        else if (t == "lognormal") d = ScalarDist::lognormal(num(j, path, "mu"), num(j, path, "sigma"));
        else if (t == "pareto") d = ScalarDist::pareto(num(j, path, "scale"), num(j, path, "alpha"));
        else throw ConfigError(at(path, "type") + ": unknown distribution '" + t + "'");
    });
    return *d;
}

inline Json dist_to_json(const ScalarDist& d) {
    using config_detail::number_json;
    return std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, PointMass>) return {{"type", "point_mass"}, {"value", number_json(v.value)}};
            else if constexpr (std::is_same_v<T, TwoPoint>)
                return {{"type", "two_point"}, {"v1", v.v1}, {"p1", v.p1}, {"v2", v.v2}};
            else if constexpr (std::is_same_v<T, Uniform>) return {{"type", "uniform"}, {"lo", v.lo}, {"hi", v.hi}};
            else if constexpr (std::is_same_v<T, Gaussian>) return {{"type", "gaussian"}, {"mean", v.mean}, {"sd", v.sd}};
            else if constexpr (std::is_same_v<T, LogNormal>)
                return {{"type", "lognormal"}, {"mu", v.mu}, {"sigma", v.sigma}};
            else return {{"type", "pareto"}, {"scale", v.scale}, {"alpha", v.alpha}};
        },
        d.variant());
}

namespace config_detail {

inline std::array<double, 2> pair(const Json& j, const std::string& path, const std::string& key,
                                  std::array<double, 2> def) {
    if (!j.contains(key)) return def;
    const Json& v = j.at(key);
    if (!v.is_array() || v.size() != 2) throw ConfigError(at(path, key) + ": expected [c0, c1]");
    return {num(v[0], at(path, key) + "[0]"), num(v[1], at(path, key) + "[1]")};
}

inline Coupling coupling_of(const std::string& s, const std::string& path) {
    if (s == "independent") return Coupling::Independent;
    if (s == "comonotone") return Coupling::Comonotone;
    if (s == "shared_driver") return Coupling::SharedDriver;
    throw ConfigError(path + ": unknown coupling '" + s + "'");
}

inline const char* coupling_name(Coupling c) {
    static const char* names[] = {"independent", "comonotone", "shared_driver"};
    return names[int(c)];
}

inline Perturbation perturbation_of(const std::string& s, const std::string& path) {
    if (s == "constant") return Perturbation::Constant;
    if (s == "random_sign") return Perturbation::RandomSign;
    if (s == "sine") return Perturbation::Sine;
    if (s == "scaled") return Perturbation::Scaled;
    throw ConfigError(path + ": unknown perturbation '" + s + "'");
}

inline const char* perturbation_name(Perturbation p) {
    static const char* names[] = {"constant", "random_sign", "sine", "scaled"};
    return names[int(p)];
}

}  // namespace config_detail

inline ModelSpec model_from_json(const Json& j, const std::string& path = "model") {
    using namespace config_detail;
    const std::string fam = str(j, path, "family");
    auto D = [&](const char* key) { return dist_from_json(field(j, path, key), at(path, key)); };
    std::optional<ModelSpec> spec;
    wrap(path, [&] {
        if (fam == "affine") spec.emplace(AffineModel{D("A"), D("B")});
        else if (fam == "lindley") spec.emplace(LindleyModel{D("A"), D("B")});
        else if (fam == "arch1")
            spec.emplace(Arch1Model{num(j, path, "beta"), num(j, path, "lambda"),
                                    j.contains("Z") ? D("Z") : ScalarDist::gaussian(0, 1)});
        else if (fam == "ar1_arch1")
            spec.emplace(Ar1Arch1Model{num(j, path, "alpha"), num(j, path, "beta"), num(j, path, "lambda"),
                                       j.contains("Z") ? D("Z") : ScalarDist::gaussian(0, 1)});
        else if (fam == "beverton_holt") spec.emplace(BevertonHoltModel{D("A"), D("B")});
        else if (fam == "unit_interval_conjugate") {
            const std::string ip = at(path, "inner");
            const Json& in = field(j, path, "inner");
            const std::string map = str(in, ip, "map");
            if (map == "logistic")
                spec.emplace(UnitIntervalConjugateModel{LogisticMap{dist_from_json(field(in, ip, "A"), at(ip, "A"))}});
            else if (map == "constant")
                spec.emplace(UnitIntervalConjugateModel{ConstantMap{num(in, ip, "c")}});
            else
                throw ConfigError(at(ip, "map") + ": unknown map '" + map + "'");
        } else if (fam == "custom_two_slope") {
            CustomTwoSlopeModel m;
            if (j.contains("coupling")) m.coupling = coupling_of(str(j, path, "coupling"), at(path, "coupling"));
            if (m.coupling == Coupling::SharedDriver) {
                const std::string sp = at(path, "shared");
                const Json& s = field(j, path, "shared");
                m.shared.driver = dist_from_json(field(s, sp, "driver"), at(sp, "driver"));
                m.shared.a_minus = pair(s, sp, "a_minus", m.shared.a_minus);
                m.shared.a_plus = pair(s, sp, "a_plus", m.shared.a_plus);
                m.shared.b = pair(s, sp, "b", m.shared.b);
            } else {
                m.a_minus = D("a_minus");
                m.a_plus = D("a_plus");
                if (j.contains("B")) m.B = D("B");
            }
            if (j.contains("perturbation")) {
                const std::string pp = at(path, "perturbation");
                const Json& p = j.at("perturbation");
                m.psi.kind = perturbation_of(str(p, pp, "kind"), at(pp, "kind"));
                m.psi.factor = num_or(p, pp, "factor", 1.0);
            }
            spec.emplace(m);
        } else {
            throw ConfigError(at(path, "family") + ": unknown family '" + fam + "'");
        }
    });
    return *spec;
}

inline Json model_to_json(const ModelSpec& spec) {
    using namespace config_detail;
    return std::visit(
        [](const auto& m) -> Json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, AffineModel>)
                return {{"family", "affine"}, {"A", dist_to_json(m.A)}, {"B", dist_to_json(m.B)}};
            else if constexpr (std::is_same_v<T, LindleyModel>)
                return {{"family", "lindley"}, {"A", dist_to_json(m.A)}, {"B", dist_to_json(m.B)}};
            else if constexpr (std::is_same_v<T, Arch1Model>)
                return {{"family", "arch1"}, {"beta", m.beta}, {"lambda", m.lambda}, {"Z", dist_to_json(m.Z)}};
            else if constexpr (std::is_same_v<T, Ar1Arch1Model>)
                return {{"family", "ar1_arch1"}, {"alpha", m.alpha}, {"beta", m.beta},
                        {"lambda", m.lambda},    {"Z", dist_to_json(m.Z)}};
            else if constexpr (std::is_same_v<T, BevertonHoltModel>)
                return {{"family", "beverton_holt"}, {"A", dist_to_json(m.A)}, {"B", dist_to_json(m.B)}};
            else if constexpr (std::is_same_v<T, UnitIntervalConjugateModel>) {
                Json in;
                if (const auto* l = std::get_if<LogisticMap>(&m.inner)) in = {{"map", "logistic"}, {"A", dist_to_json(l->A)}};
                else in = {{"map", "constant"}, {"c", std::get<ConstantMap>(m.inner).c}};
                return {{"family", "unit_interval_conjugate"}, {"inner", in}};
            } else {
                Json j{{"family", "custom_two_slope"}, {"coupling", coupling_name(m.coupling)}};
                if (m.coupling == Coupling::SharedDriver) {
                    j["shared"] = {{"driver", dist_to_json(m.shared.driver)},
                                   {"a_minus", m.shared.a_minus},
                                   {"a_plus", m.shared.a_plus},
                                   {"b", m.shared.b}};
                } else {
                    j["a_minus"] = dist_to_json(m.a_minus);
                    j["a_plus"] = dist_to_json(m.a_plus);
                    j["B"] = dist_to_json(m.B);
                }
                j["perturbation"] = {{"kind", perturbation_name(m.psi.kind)}, {"factor", m.psi.factor}};
                return j;
            }
        },
        spec.variant());
}

// Line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline Json parse_json_text(const std::string& text, const std::string& source = "config") {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t off = e.byte > 0 ? e.byte - 1 : 0;
        const auto [line, col] = line_column(text, off);
        std::string msg = e.what();
        if (auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
    }
}

inline RunConfig config_from_json(const Json& j) {
    using namespace config_detail;
    if (!j.is_object()) throw ConfigError("config: expected an object");
    for (const auto& [k, v] : j.items())
        if (k != "model" && k != "run" && k != "verify") throw ConfigError(k + ": unknown section");
    RunConfig c{model_from_json(field(j, "", "model")), {}, {}};
    if (j.contains("run")) {
        const Json& r = j.at("run");
        if (!r.is_object()) throw ConfigError("run: expected an object");
        for (const auto& [k, v] : r.items()) {
            const std::string p = "run." + k;
            if (k == "seed") c.run.seed = count(v, p);
            else if (k == "threads") c.run.threads = unsigned(std::max<std::uint64_t>(1, count(v, p)));
            else if (k == "shards") c.run.shards = std::max<std::uint64_t>(1, count(v, p));
            else if (k == "samples") c.run.samples = count(v, p);
            else if (k == "burn_in") {
                if (v.is_string() && v.get<std::string>() == "auto") c.run.burn_in.reset();
                else c.run.burn_in = count(v, p);
            } else if (k == "stride") c.run.stride = std::max<std::uint64_t>(1, count(v, p));
            else if (k == "hill_k") {
                if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto")) c.run.hill_k.reset();
                else c.run.hill_k = count(v, p);
            } else if (k == "theta_grid") {
                if (!v.is_string()) throw ConfigError(p + ": expected \"lo:hi:n\"");
                c.run.theta_grid = parse_theta_grid(v.get<std::string>());
            } else if (k == "tol") c.run.tol = num(v, p);
            else if (k == "out") {
                if (!v.is_string()) throw ConfigError(p + ": expected a string");
                c.run.out = v.get<std::string>();
            } else throw ConfigError(p + ": unknown option");
        }
    }
    if (j.contains("verify")) {
        const Json& r = j.at("verify");
        if (!r.is_object()) throw ConfigError("verify: expected an object");
        for (const auto& [k, v] : r.items()) {
            const std::string p = "verify." + k;
            auto& o = c.verify;
            if (k == "strict") o.strict = boolean(v, p);
            else if (k == "gelfand_paths") o.gelfand_paths = count(v, p);
            else if (k == "gelfand_n") o.gelfand_n = std::max<std::uint64_t>(1, count(v, p));
            else if (k == "martingale_paths") o.martingale_paths = count(v, p);
            else if (k == "martingale_n") o.martingale_n = count(v, p);
            else if (k == "comparison_draws") o.comparison_draws = count(v, p);
            else if (k == "comparison_n") o.comparison_n = std::max<std::uint64_t>(1, count(v, p));
            else if (k == "identity_paths") o.identity_paths = count(v, p);
            else if (k == "bound_samples") o.bound_samples = count(v, p);
            else throw ConfigError(p + ": unknown option");
        }
    }
    return c;
}

inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
    return config_from_json(parse_json_text(text, source));
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

// Every option with its effective value; the thread count is left out so that
// reports do not depend on it.
inline Json config_to_json(const RunConfig& c) {
    Json run{{"seed", c.run.seed ? Json(*c.run.seed) : Json(nullptr)},
             {"shards", c.run.shards},
             {"samples", c.run.samples},
             {"burn_in", c.run.burn_in ? Json(*c.run.burn_in) : Json("auto")},
             {"stride", c.run.stride},
             {"hill_k", c.run.hill_k ? Json(*c.run.hill_k) : Json("auto")},
             {"theta_grid", format_theta_grid(c.run.theta_grid)},
             {"tol", c.run.tol},
             {"out", c.run.out}};
    const auto& v = c.verify;
    Json ver{{"strict", v.strict},
             {"gelfand_paths", v.gelfand_paths},
             {"gelfand_n", v.gelfand_n},
             {"martingale_paths", v.martingale_paths},
             {"martingale_n", v.martingale_n},
             {"comparison_draws", v.comparison_draws},
             {"comparison_n", v.comparison_n},
             {"identity_paths", v.identity_paths},
             {"bound_samples", v.bound_samples}};
    return {{"model", model_to_json(c.model)}, {"run", run}, {"verify", ver}};
}

}  // namespace alifs

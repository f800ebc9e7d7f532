#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "starfl/common.hpp"

namespace starfl {

/// All scalar parameters of one simulation. Defaults are the published
/// reference values; sizes are in bits, powers in W, times in s.
struct SystemConfig {
    int K_t = 4;
    int K_r = 4;
    int N = 60;
    int M = 4;
    double P_max = 10.0;
    double p_max = 0.1;
    double T = 10.0;
    double B = 2e6;
    double eta = 0.8;
    double a = 1e-28;
    double C_k = 300.0;
    double rho_ap = 3.0;
    double rho_user = 3.5;
    double L0_dB = 30.0;
    double rician_K = 5.0;
    double sigma0_dBm_per_Hz = -174.0;
    double L_local_min = 1e5;
    double L_local_max = 1e6;
    double L_up_min = 1e3;
    double L_up_max = 1e4;
    double L_down = 1e6;
    double eps = 1e-5;
    int trials = 1000;
    std::uint64_t seed = 1;

    // Numerical knobs.
    int candidates = 200;
    int bcd_max_iter = 50;
    double sdp_tol = 1e-9;
    int workers = 0;  // 0: hardware concurrency

    int K() const { return K_t + K_r; }

    void validate() const {
        require(K_t >= 1 && K_r >= 1, "config: K_t and K_r must be >= 1");
        require(N >= 1 && M >= 1, "config: N and M must be >= 1");
        require(eta > 0 && eta < 1, "config: eta must lie in (0,1)");
        require(P_max > 0 && p_max > 0 && T > 0 && B > 0 && a > 0 && C_k > 0, "config: powers/times must be positive");
        require(L_local_min > 0 && L_local_min <= L_local_max, "config: bad L_local range");
        require(L_up_min > 0 && L_up_min <= L_up_max, "config: bad L_up range");
        require(L_down > 0, "config: L_down must be positive");
        require(rho_ap > 0 && rho_user > 0 && rician_K >= 0, "config: bad channel parameters");
        require(eps > 0 && eps < T, "config: eps must be positive and below T");
        require(trials >= 1, "config: trials must be >= 1");
        require(candidates >= 1 && bcd_max_iter >= 1 && sdp_tol > 0, "config: bad numerical knobs");
        require(workers >= 0, "config: bad numerical knobs");
    }
};

namespace detail {

struct Field {
    std::function<void(SystemConfig&, const std::string&)> set;
    std::function<std::string(const SystemConfig&)> get;
};

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double d = 0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw InvalidArgument("config: key '" + key + "' expects a number, got '" + v + "'");
    }
    if (pos != v.size() || !std::isfinite(d))
        throw InvalidArgument("config: key '" + key + "' expects a number, got '" + v + "'");
    return d;
}

inline long long parse_int(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    if (d != std::floor(d)) throw InvalidArgument("config: key '" + key + "' expects an integer, got '" + v + "'");
    return static_cast<long long>(d);
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> f = [] {
        std::map<std::string, Field> m;
        auto real = [&](const char* k, double SystemConfig::*p) {
            m[k] = {[p, k](SystemConfig& c, const std::string& v) { c.*p = parse_double(k, v); },
                    [p](const SystemConfig& c) { return fmt(c.*p); }};
        };
        auto integer = [&](const char* k, int SystemConfig::*p) {
            m[k] = {[p, k](SystemConfig& c, const std::string& v) { c.*p = static_cast<int>(parse_int(k, v)); },
                    [p](const SystemConfig& c) { return std::to_string(c.*p); }};
        };
        integer("K_t", &SystemConfig::K_t);
        integer("K_r", &SystemConfig::K_r);
        integer("N", &SystemConfig::N);
        integer("M", &SystemConfig::M);
        real("P_max", &SystemConfig::P_max);
        real("p_max", &SystemConfig::p_max);
        real("T", &SystemConfig::T);
        real("B", &SystemConfig::B);
        real("eta", &SystemConfig::eta);
        real("a", &SystemConfig::a);
        real("C_k", &SystemConfig::C_k);
        real("rho_ap", &SystemConfig::rho_ap);
        real("rho_user", &SystemConfig::rho_user);
        real("L0_dB", &SystemConfig::L0_dB);
        real("rician_K", &SystemConfig::rician_K);
        real("sigma0_dBm_per_Hz", &SystemConfig::sigma0_dBm_per_Hz);
        real("L_local_min", &SystemConfig::L_local_min);
        real("L_local_max", &SystemConfig::L_local_max);
        real("L_up_min", &SystemConfig::L_up_min);
        real("L_up_max", &SystemConfig::L_up_max);
        real("L_down", &SystemConfig::L_down);
        real("eps", &SystemConfig::eps);
        integer("trials", &SystemConfig::trials);
        m["seed"] = {[](SystemConfig& c, const std::string& v) {
                         std::size_t pos = 0;
                         try {
                             c.seed = std::stoull(v, &pos);
                         } catch (const std::exception&) {
                             pos = std::string::npos;
                         }
                         if (pos != v.size()) throw InvalidArgument("config: key 'seed' expects an unsigned integer");
                     },
                     [](const SystemConfig& c) { return std::to_string(c.seed); }};
        integer("candidates", &SystemConfig::candidates);
        integer("bcd_max_iter", &SystemConfig::bcd_max_iter);
        real("sdp_tol", &SystemConfig::sdp_tol);
        integer("workers", &SystemConfig::workers);
        // Sweep conveniences.
        m["K"] = {[](SystemConfig& c, const std::string& v) { c.K_t = c.K_r = static_cast<int>(parse_int("K", v)); },
                  [](const SystemConfig& c) { return std::to_string(c.K_t); }};
        m["L_local"] = {[](SystemConfig& c, const std::string& v) {
                            c.L_local_min = c.L_local_max = parse_double("L_local", v);
                        },
                        [](const SystemConfig& c) { return fmt(c.L_local_min); }};
        return m;
    }();
    return f;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Set one parameter by its config-file name.
inline void set_param(SystemConfig& c, const std::string& key, const std::string& value) {
    const auto& f = detail::fields();
    const auto it = f.find(key);
    if (it == f.end()) throw InvalidArgument("config: unknown key '" + key + "'");
    it->second.set(c, value);
}

inline std::string get_param(const SystemConfig& c, const std::string& key) {
    const auto& f = detail::fields();
    const auto it = f.find(key);
    if (it == f.end()) throw InvalidArgument("config: unknown key '" + key + "'");
    return it->second.get(c);
}

/// `key = value` lines; `#` starts a comment. Unknown keys are rejected.
inline SystemConfig parse_config(std::istream& in, SystemConfig base = {}) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config: line " + std::to_string(lineno) + ": expected 'key = value'");
        set_param(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    base.validate();
    return base;
}

inline SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file: " + path);
    return parse_config(in);
}

inline void write_config(std::ostream& os, const SystemConfig& c) {
    for (const auto& [k, f] : detail::fields()) {
        if (k == "K" || k == "L_local") continue;
        os << k << " = " << f.get(c) << '\n';
    }
}

}  // namespace starfl

#include "mkgm/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mkgm {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

const std::set<std::string> kGridKeys{"nx", "ny", "nz", "lx", "ly", "lz"};
const std::set<std::string> kRunKeys{"eps",    "horizon", "c_cfl", "c_osc", "backend",
                                     "stride", "seed",    "out"};
const std::set<std::string> kLadderKeys{"match_eps", "base_eps"};
const std::set<std::string> kProfileKeys{"name",   "value", "base",      "amplitude", "axis",
                                         "mode",   "sigma", "cx",        "cy",        "cz",
                                         "vx",     "vy",    "vz",        "component"};
const std::set<std::string> kRemKeys{"integrator", "transport", "filter_strength",
                                     "filter_order", "shock_threshold"};
const std::set<std::string> kKgmKeys{"evolve_em"};

bool parse_bool(const std::string& v, const std::string& where) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: bad boolean for " + where + ": " + v);
}

}  // namespace

std::map<std::string, std::map<std::string, std::string>> parse_config_file(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::map<std::string, std::map<std::string, std::string>> out;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: malformed section at line " +
                                            std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            out[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (section.empty())
            throw std::invalid_argument("config: key outside any section at line " +
                                        std::to_string(lineno));
        if (!out[section].emplace(key, val).second)
            throw std::invalid_argument("config: duplicate key " + section + "." + key);
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

RunConfig load_config(const std::string& path) {
    auto raw = parse_config_file(path);
    RunConfig cfg;

    auto check_keys = [&](const std::string& section, const std::set<std::string>& allowed) {
        auto it = raw.find(section);
        if (it == raw.end()) return;
        for (const auto& [k, v] : it->second)
            if (!allowed.count(k))
                throw std::invalid_argument("config: unknown key " + section + "." + k);
    };
    for (const auto& [section, kv] : raw) {
        if (section != "grid" && section != "run" && section != "ladder" &&
            section != "profile.rho" && section != "profile.u" && section != "rem" &&
            section != "kgm")
            throw std::invalid_argument("config: unknown section [" + section + "]");
    }
    check_keys("grid", kGridKeys);
    check_keys("run", kRunKeys);
    check_keys("ladder", kLadderKeys);
    check_keys("profile.rho", kProfileKeys);
    check_keys("profile.u", kProfileKeys);
    check_keys("rem", kRemKeys);
    check_keys("kgm", kKgmKeys);

    auto get = [&](const std::string& sec, const std::string& key) -> const std::string* {
        auto s = raw.find(sec);
        if (s == raw.end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    };

    if (auto* v = get("grid", "nx")) cfg.grid_n[0] = std::stoi(*v);
    if (auto* v = get("grid", "ny")) cfg.grid_n[1] = std::stoi(*v);
    if (auto* v = get("grid", "nz")) cfg.grid_n[2] = std::stoi(*v);
    if (auto* v = get("grid", "lx")) cfg.box[0] = std::stod(*v);
    if (auto* v = get("grid", "ly")) cfg.box[1] = std::stod(*v);
    if (auto* v = get("grid", "lz")) cfg.box[2] = std::stod(*v);

    if (auto* v = get("run", "eps")) cfg.eps_list = parse_double_list(*v);
    if (auto* v = get("run", "horizon")) cfg.horizon = std::stod(*v);
    if (auto* v = get("run", "c_cfl")) cfg.c_cfl = std::stod(*v);
    if (auto* v = get("run", "c_osc")) cfg.c_osc = std::stod(*v);
    if (auto* v = get("run", "backend")) cfg.backend = backend_from_string(*v);
    if (auto* v = get("run", "stride")) cfg.stride = std::stoi(*v);
    if (auto* v = get("run", "seed")) cfg.seed = std::stoull(*v);
    if (auto* v = get("run", "out")) cfg.out_dir = *v;

    if (auto* v = get("ladder", "match_eps")) cfg.ladder_match_eps = parse_bool(*v, "ladder.match_eps");
    if (auto* v = get("ladder", "base_eps")) cfg.ladder_base_eps = std::stod(*v);

    auto load_profile = [&](const std::string& sec, ProfileSpec& spec) {
        auto s = raw.find(sec);
        if (s == raw.end()) return;
        spec.params.clear();
        for (const auto& [k, v] : s->second) {
            if (k == "name")
                spec.name = v;
            else
                spec.params[k] = std::stod(v);
        }
        if (!s->second.count("name"))
            throw std::invalid_argument("config: " + sec + " needs a name");
    };
    load_profile("profile.rho", cfg.rho_profile);
    load_profile("profile.u", cfg.u_profile);

    if (auto* v = get("rem", "integrator")) {
        if (*v == "strang_heun") cfg.rem_integrator = RemIntegrator::strang_heun;
        else if (*v == "rk4") cfg.rem_integrator = RemIntegrator::rk4;
        else throw std::invalid_argument("config: unknown rem.integrator " + *v);
    }
    if (auto* v = get("rem", "transport")) {
        if (*v == "spectral") cfg.rem_transport = RemTransport::spectral_advective;
        else if (*v == "upwind") cfg.rem_transport = RemTransport::upwind;
        else throw std::invalid_argument("config: unknown rem.transport " + *v);
    }
    if (auto* v = get("rem", "filter_strength")) cfg.rem_filter_strength = std::stod(*v);
    if (auto* v = get("rem", "filter_order")) cfg.rem_filter_order = std::stoi(*v);
    if (auto* v = get("rem", "shock_threshold")) cfg.rem_shock_threshold = std::stod(*v);
    if (auto* v = get("kgm", "evolve_em")) cfg.kgm_evolve_em = parse_bool(*v, "kgm.evolve_em");

    if (cfg.eps_list.empty()) throw std::invalid_argument("config: eps list is empty");
    for (std::size_t i = 1; i < cfg.eps_list.size(); ++i)
        if (!(cfg.eps_list[i] < cfg.eps_list[i - 1]))
            throw std::invalid_argument("config: eps list must be strictly decreasing");
    if (!(cfg.horizon > 0.0)) throw std::invalid_argument("config: horizon must be positive");
    return cfg;
}

}  // namespace mkgm

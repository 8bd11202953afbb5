#include "croute/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace croute {

Config Config::from_file(const std::string& path) {
    Config c;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key=value");
            continue;
        }
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key == "kappa") c.kappa = std::stoi(value);
        else if (key == "rounding_retries") c.rounding_retries = std::stoi(value);
        else if (key == "sample_factor") c.sample_factor = std::stoi(value);
        else if (key == "c1_table") c.c1_table = std::stoi(value);
        else if (key == "c2_storage") c.c2_storage = std::stoi(value);
        else if (key == "oracle_eps") c.oracle_eps = std::stod(value);
        else if (key == "exact_lp_threshold") c.exact_lp_threshold = std::stoi(value);
        else if (key == "mc_trials") c.mc_trials = std::stoi(value);
        else if (key == "step_bound_mult") c.step_bound_mult = std::stoi(value);
        else if (key == "ratio_budget") c.ratio_budget = std::stod(value);
        else if (key == "compact_budget") c.compact_budget = std::stod(value);
        else if (key == "seed") c.seed = std::stoull(value);
        else if (key == "jobs") c.jobs = std::stoi(value);
        else throw std::runtime_error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    return c;
}

std::map<std::string, std::string> Config::items() const {
    auto fmt = [](double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    };
    return {
        {"kappa", std::to_string(kappa)},
        {"rounding_retries", std::to_string(rounding_retries)},
        {"sample_factor", std::to_string(sample_factor)},
        {"c1_table", std::to_string(c1_table)},
        {"c2_storage", std::to_string(c2_storage)},
        {"oracle_eps", fmt(oracle_eps)},
        {"exact_lp_threshold", std::to_string(exact_lp_threshold)},
        {"mc_trials", std::to_string(mc_trials)},
        {"step_bound_mult", std::to_string(step_bound_mult)},
        {"ratio_budget", fmt(ratio_budget)},
        {"compact_budget", fmt(compact_budget)},
        {"seed", std::to_string(seed)},
        {"jobs", std::to_string(jobs)},
    };
}

}  // namespace croute

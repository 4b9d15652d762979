#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "membrane/crack.hpp"
#include "membrane/energy.hpp"
#include "membrane/gamma.hpp"

// Flat key/value run configuration. Grammar (one assignment per line,
// '#' comments):
//   energy = { family = "ogden", p = 2.0, s = 1.0 }
//   domain = [[0,0],[2,0],[2,2],[0,2]]
//   crack  = [[0.5,1.0],[1.5,1.0]]            (repeatable; 2 or 3 points)
//   rho    = [1e-1, 1e-2, 1e-3]
//   epsilon = 0.1
// Unknown keys are rejected.

namespace membrane {

struct ConfigValue;
using ConfigArray = std::vector<ConfigValue>;
using ConfigTable = std::map<std::string, ConfigValue>;

struct ConfigValue {
    std::variant<double, std::string, ConfigArray, ConfigTable> v;

    bool is_number() const { return std::holds_alternative<double>(v); }
    double number() const;
    const std::string& str() const;
    const ConfigArray& array() const;
    const ConfigTable& table() const;
};

// Parse the grammar; repeated keys accumulate into an array.
ConfigTable parse_config_text(const std::string& text);
ConfigTable parse_config_file(const std::string& path);

struct RunConfig {
    StoredEnergy energy;
    std::string energy_family = "ogden";
    double energy_p = 2.0, energy_s = 1.0;

    Vec2 domain_lo{0, 0}, domain_hi{2, 2};
    std::vector<CrackPath> cracks;

    std::vector<double> rho{1e-1, 1e-2, 1e-3};
    double epsilon = 0.1;
    double delta = 0.02;
    double fiber_eps = 0.05;
    int mesh = 8;
    double opening = 0.25;
    int envelope_depth = 1;
    double envelope_tol = 1e-6;
    int planar_refine = 1;
    int transverse_nodes = 0;  // 0 = adaptive
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out;

    ThinFilmConfig film() const;
    MembraneBuilder builder() const;
};

// Validates ranges and rejects unknown keys.
RunConfig load_run_config(const ConfigTable& table);
RunConfig load_run_config_file(const std::string& path);

}  // namespace membrane

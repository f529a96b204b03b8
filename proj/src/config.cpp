#include "spinrot/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "spinrot/errors.hpp"
#include "spinrot/units.hpp"

namespace spinrot {

namespace {

using Keys = std::set<std::string>;

std::string join(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

void check_keys(const YAML::Node& node, const std::string& path, const Keys& allowed) {
    if (!node.IsMap()) {
        throw ConfigError(path + ": expected a mapping");
    }
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.contains(key)) {
            throw ConfigError(join(path, key) + ": unknown key");
        }
    }
}

std::string scalar(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) {
        throw ConfigError(path + ": expected a scalar value");
    }
    return node.Scalar();
}

double quantity(const YAML::Node& node, const std::string& path, Dimension dim) {
    try {
        return parse_quantity(scalar(node, path), dim);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

double number(const YAML::Node& node, const std::string& path) {
    const std::string text = scalar(node, path);
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(path + ": expected a plain number, got '" + text + "'");
    }
}

std::size_t count(const YAML::Node& node, const std::string& path) {
    const double v = number(node, path);
    if (v < 1.0 || v != std::floor(v) || v > 1e9) {
        throw ConfigError(path + ": expected a positive integer");
    }
    return static_cast<std::size_t>(v);
}

double unit_interval(const YAML::Node& node, const std::string& path) {
    const double v = number(node, path);
    if (v < 0.0 || v > 1.0) throw ConfigError(path + ": must lie in [0, 1]");
    return v;
}

double positive(double v, const std::string& path) {
    if (!(v > 0.0)) throw ConfigError(path + ": must be > 0");
    return v;
}

Vec3 unit_vector(const YAML::Node& node, const std::string& path) {
    if (!node.IsSequence() || node.size() != 3) {
        throw ConfigError(path + ": expected [x, y, z]");
    }
    Vec3 v{number(node[0], path + "[0]"), number(node[1], path + "[1]"), number(node[2], path + "[2]")};
    const double n = norm(v);
    if (!(n > 0.0)) throw ConfigError(path + ": zero vector");
    return v * (1.0 / n);
}

ScanGrid grid(const YAML::Node& node, const std::string& path, Dimension dim) {
    check_keys(node, path, {"start", "stop", "points"});
    for (const char* k : {"start", "stop", "points"}) {
        if (!node[k]) throw ConfigError(join(path, k) + ": missing");
    }
    ScanGrid g;
    g.start = quantity(node["start"], join(path, "start"), dim);
    g.stop = quantity(node["stop"], join(path, "stop"), dim);
    g.points = count(node["points"], join(path, "points"));
    if (g.points < 3) throw ConfigError(join(path, "points") + ": need at least 3");
    if (!(g.stop > g.start)) throw ConfigError(join(path, "stop") + ": must exceed start");
    return g;
}

std::vector<double> frequencies(const YAML::Node& node, const std::string& path) {
    std::vector<double> out;
    if (node.IsSequence()) {
        for (std::size_t i = 0; i < node.size(); ++i) {
            out.push_back(quantity(node[i], path + "[" + std::to_string(i) + "]", Dimension::Frequency));
        }
    } else {
        check_keys(node, path, {"start", "stop", "step"});
        for (const char* k : {"start", "stop", "step"}) {
            if (!node[k]) throw ConfigError(join(path, k) + ": missing");
        }
        const double start = quantity(node["start"], join(path, "start"), Dimension::Frequency);
        const double stop = quantity(node["stop"], join(path, "stop"), Dimension::Frequency);
        const double step = positive(quantity(node["step"], join(path, "step"), Dimension::Frequency),
                                     join(path, "step"));
        if (stop < start) throw ConfigError(join(path, "stop") + ": must not be below start");
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) out.push_back(start + step * static_cast<double>(i));
    }
    if (out.empty()) throw ConfigError(path + ": empty frequency list");
    for (double f : out) {
        if (!(f >= 0.0)) throw ConfigError(path + ": frequencies must be >= 0");
    }
    std::sort(out.begin(), out.end());
    if (std::adjacent_find(out.begin(), out.end()) != out.end()) {
        throw ConfigError(path + ": duplicate frequency");
    }
    return out;
}

RunConfig parse_root(const YAML::Node& root) {
    RunConfig cfg;
    cfg.plan.frequencies = frequency_list(20e3, 2.5e3);
    cfg.acquisition = default_acquisition();
    if (!root || root.IsNull()) return cfg;

    check_keys(root, "", {"neutron", "guide_field", "rfg", "interferometer", "analyzer", "geometry",
                          "calibration", "sweep", "acquisition", "numerics"});
    auto& s = cfg.setup;

    if (auto n = root["neutron"]) {
        check_keys(n, "neutron", {"wavelength"});
        if (n["wavelength"]) {
            s.wavelength = positive(quantity(n["wavelength"], "neutron.wavelength", Dimension::Length),
                                    "neutron.wavelength");
        }
    }
    if (auto g = root["guide_field"]) {
        s.guide_field = quantity(g, "guide_field", Dimension::MagneticField);
    }
    if (auto r = root["rfg"]) {
        check_keys(r, "rfg", {"length", "path", "imbalance"});
        if (r["length"]) {
            s.rfg_length = positive(quantity(r["length"], "rfg.length", Dimension::Length), "rfg.length");
        }
        if (r["path"]) {
            const auto p = scalar(r["path"], "rfg.path");
            if (p == "I") s.rfg_path = PathId::I;
            else if (p == "II") s.rfg_path = PathId::II;
            else throw ConfigError("rfg.path: expected I or II, got '" + p + "'");
        }
        if (r["imbalance"]) s.imbalance = number(r["imbalance"], "rfg.imbalance");
    }
    if (auto i = root["interferometer"]) {
        check_keys(i, "interferometer",
                   {"contrast", "larmor_accelerator_length", "rotator_length", "spin_rotator_axis",
                    "spin_rotator_angle"});
        if (i["contrast"]) s.contrast = unit_interval(i["contrast"], "interferometer.contrast");
        if (i["larmor_accelerator_length"]) {
            s.accelerator_length = positive(
                quantity(i["larmor_accelerator_length"], "interferometer.larmor_accelerator_length",
                         Dimension::Length),
                "interferometer.larmor_accelerator_length");
        }
        if (i["rotator_length"]) {
            s.rotator_length = positive(
                quantity(i["rotator_length"], "interferometer.rotator_length", Dimension::Length),
                "interferometer.rotator_length");
        }
        if (i["spin_rotator_axis"]) {
            s.spin_rotator.axis = unit_vector(i["spin_rotator_axis"], "interferometer.spin_rotator_axis");
        }
        if (i["spin_rotator_angle"]) {
            s.spin_rotator.angle =
                quantity(i["spin_rotator_angle"], "interferometer.spin_rotator_angle", Dimension::Angle);
        }
    }
    if (s.accelerator_length > s.rfg_length) {
        throw ConfigError("interferometer.larmor_accelerator_length: must not exceed rfg.length");
    }
    if (auto a = root["analyzer"]) {
        check_keys(a, "analyzer", {"axis", "pass_transmission", "block_transmission"});
        if (a["axis"]) s.analyzer.axis = unit_vector(a["axis"], "analyzer.axis");
        if (a["pass_transmission"]) {
            s.analyzer.pass_transmission = unit_interval(a["pass_transmission"], "analyzer.pass_transmission");
        }
        if (a["block_transmission"]) {
            s.analyzer.block_transmission =
                unit_interval(a["block_transmission"], "analyzer.block_transmission");
        }
    }
    if (auto g = root["geometry"]) {
        check_keys(g, "geometry", {"dc1_rfg_distance", "rfg_dc2_distance", "larmor_accelerator_field"});
        if (g["dc1_rfg_distance"]) {
            s.dc1_rfg_distance = positive(
                quantity(g["dc1_rfg_distance"], "geometry.dc1_rfg_distance", Dimension::Length),
                "geometry.dc1_rfg_distance");
        }
        if (g["rfg_dc2_distance"]) {
            s.rfg_dc2_distance = positive(
                quantity(g["rfg_dc2_distance"], "geometry.rfg_dc2_distance", Dimension::Length),
                "geometry.rfg_dc2_distance");
        }
        if (g["larmor_accelerator_field"]) {
            s.larmor_accelerator_field = quantity(g["larmor_accelerator_field"],
                                                  "geometry.larmor_accelerator_field",
                                                  Dimension::MagneticField);
        }
    }
    if (auto c = root["calibration"]) {
        check_keys(c, "calibration", {"distance_scan", "amplitude_scan", "bloc_scan"});
        if (c["distance_scan"]) {
            cfg.plan.distance = grid(c["distance_scan"], "calibration.distance_scan", Dimension::Length);
        }
        if (c["amplitude_scan"]) {
            cfg.plan.amplitude =
                grid(c["amplitude_scan"], "calibration.amplitude_scan", Dimension::MagneticField);
        }
        if (c["bloc_scan"]) {
            cfg.plan.bloc = grid(c["bloc_scan"], "calibration.bloc_scan", Dimension::MagneticField);
        }
    }
    if (auto sw = root["sweep"]) {
        check_keys(sw, "sweep", {"frequencies"});
        if (sw["frequencies"]) cfg.plan.frequencies = frequencies(sw["frequencies"], "sweep.frequencies");
    }
    if (auto a = root["acquisition"]) {
        check_keys(a, "acquisition", {"chi_points", "chi_span", "counting_time", "count_rate"});
        std::size_t points = cfg.acquisition.chi.size();
        double span = 4.0 * kPi;
        if (a["chi_points"]) points = count(a["chi_points"], "acquisition.chi_points");
        if (points < 4) throw ConfigError("acquisition.chi_points: need at least 4");
        if (a["chi_span"]) {
            span = positive(quantity(a["chi_span"], "acquisition.chi_span", Dimension::Angle),
                            "acquisition.chi_span");
        }
        cfg.acquisition.chi = chi_grid(points, span);
        if (a["counting_time"]) {
            cfg.acquisition.counting_time = positive(
                quantity(a["counting_time"], "acquisition.counting_time", Dimension::Time),
                "acquisition.counting_time");
        }
        if (a["count_rate"]) {
            cfg.acquisition.count_rate = positive(
                quantity(a["count_rate"], "acquisition.count_rate", Dimension::Rate),
                "acquisition.count_rate");
        }
    }
    if (auto n = root["numerics"]) {
        check_keys(n, "numerics", {"integrator_steps"});
        if (n["integrator_steps"]) s.integrator_steps = count(n["integrator_steps"], "numerics.integrator_steps");
    }
    return cfg;
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

nlohmann::json grid_json(const ScanGrid& g) {
    return {{"start", g.start}, {"stop", g.stop}, {"points", g.points}};
}

}  // namespace

RunConfig parse_config(std::string_view yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("<document>: ") + e.what());
    }
    try {
        return parse_root(root);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("<document>: ") + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

nlohmann::json to_json(const RunConfig& c) {
    const auto& s = c.setup;
    nlohmann::json j;
    j["neutron"] = {{"wavelength_m", s.wavelength}, {"velocity_m_per_s", s.kinematics().velocity()}};
    j["guide_field_T"] = s.guide_field;
    j["rfg"] = {{"length_m", s.rfg_length},
                {"dwell_time_s", s.rfg_dwell_time()},
                {"path", to_string(s.rfg_path)},
                {"imbalance", s.imbalance}};
    j["interferometer"] = {{"contrast", s.contrast},
                           {"larmor_accelerator_length_m", s.accelerator_length},
                           {"rotator_length_m", s.rotator_length},
                           {"spin_rotator_axis", vec_json(s.spin_rotator.axis)},
                           {"spin_rotator_angle_rad", s.spin_rotator.angle}};
    j["analyzer"] = {{"axis", vec_json(s.analyzer.axis)},
                     {"pass_transmission", s.analyzer.pass_transmission},
                     {"block_transmission", s.analyzer.block_transmission}};
    j["geometry"] = {{"dc1_rfg_distance_m", s.dc1_rfg_distance},
                     {"rfg_dc2_distance_m", s.rfg_dc2_distance},
                     {"larmor_accelerator_field_T", s.larmor_accelerator_field}};
    j["calibration"] = {{"distance_scan_m", grid_json(c.plan.distance)},
                        {"amplitude_scan_T", grid_json(c.plan.amplitude)},
                        {"bloc_scan_T", grid_json(c.plan.bloc)}};
    j["sweep"] = {{"frequencies_Hz", c.plan.frequencies}};
    j["acquisition"] = {{"chi_rad", c.acquisition.chi},
                        {"counting_time_s", c.acquisition.counting_time},
                        {"count_rate_per_s", c.acquisition.count_rate}};
    j["numerics"] = {{"integrator_steps", s.integrator_steps}};
    return j;
}

std::uint64_t config_hash(const RunConfig& config) {
    const std::string text = to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string default_config_yaml() {
    return R"(# spin-rotation coupling interferometer run
neutron:
  wavelength: 1.9 angstrom
guide_field: 9 G
rfg:
  length: 2 cm          # sets t1; not a measured value
  path: II
  imbalance: 0
interferometer:
  contrast: 0.9
  larmor_accelerator_length: 1 cm
  rotator_length: 1 cm
  spin_rotator_axis: [1, 0, 0]
  spin_rotator_angle: -90 deg
analyzer:
  axis: [0, 1, 0]
  pass_transmission: 0.4
  block_transmission: 0
geometry:
  dc1_rfg_distance: 25 cm
  rfg_dc2_distance: 25 cm
  larmor_accelerator_field: 0 G
calibration:
  distance_scan: {start: 5 cm, stop: 30 cm, points: 501}
  amplitude_scan: {start: 0 mT, stop: 6 mT, points: 1201}
  bloc_scan: {start: -50 G, stop: 50 G, points: 401}
sweep:
  frequencies: {start: 0 kHz, stop: 20 kHz, step: 2.5 kHz}
acquisition:
  chi_points: 16
  chi_span: 4 pi
  counting_time: 20 s
  count_rate: 20 1/s
numerics:
  integrator_steps: 20000
)";
}

}  // namespace spinrot

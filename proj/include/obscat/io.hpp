#pragma once

// File formats: shape JSON, far-field CSV with JSON sidecar, and check
// reports.  Numeric fields are serialized with 17 significant digits so that
// read -> write -> read round-trips bit-exactly.

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "obscat/forward.hpp"
#include "obscat/identities.hpp"

namespace obscat {

using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace io {

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline json shape_to_json(const StarShape& s) {
    json j;
    j["lmax"] = s.lmax;
    j["coeffs"] = std::vector<double>(s.coeffs.data(), s.coeffs.data() + s.coeffs.size());
    j["center"] = {s.center.x(), s.center.y(), s.center.z()};
    return j;
}

inline StarShape shape_from_json(const json& j) {
    if (!j.contains("lmax") || !j.contains("coeffs") || !j.contains("center"))
        throw ConfigError("shape JSON requires lmax, coeffs, center");
    const int lmax = j.at("lmax").get<int>();
    const auto cv = j.at("coeffs").get<std::vector<double>>();
    const auto ct = j.at("center").get<std::vector<double>>();
    if (ct.size() != 3) throw ConfigError("shape JSON: center must have 3 components");
    Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(cv.data(), cv.size());
    return make_star_shape(lmax, c, Vec3(ct[0], ct[1], ct[2]));
}

inline void write_shape(const std::string& path, const StarShape& s) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    f << shape_to_json(s).dump(2) << "\n";
}

inline StarShape read_shape(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open shape file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed shape JSON in " + path + ": " + e.what());
    }
    return shape_from_json(j);
}

inline json bc_to_json(const BoundaryCondition& bc) {
    json j;
    switch (bc.tag) {
        case BoundaryCondition::Tag::Dirichlet: j["type"] = "dirichlet"; break;
        case BoundaryCondition::Tag::Neumann: j["type"] = "neumann"; break;
        case BoundaryCondition::Tag::Impedance:
            j["type"] = "impedance";
            j["h"] = {bc.h.real(), bc.h.imag()};
            break;
    }
    return j;
}

inline BoundaryCondition bc_from_json(const json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "dirichlet") return BoundaryCondition::dirichlet();
    if (type == "neumann") return BoundaryCondition::neumann();
    if (type == "impedance") {
        const auto h = j.at("h").get<std::vector<double>>();
        if (h.size() != 2) throw ConfigError("impedance h must be [re, im]");
        return BoundaryCondition::impedance({h[0], h[1]});
    }
    throw ConfigError("unknown boundary condition type: " + type);
}

/// CSV rows theta,phi,re_A,im_A plus a JSON sidecar with k, alpha, bc, grid.
inline void write_far_field(const std::string& csv_path, const std::string& sidecar_path,
                            const FarFieldPattern& p, const BoundaryCondition& bc) {
    std::ofstream f(csv_path);
    if (!f) throw ConfigError("cannot open for writing: " + csv_path);
    f << "theta,phi,re_A,im_A\n";
    for (std::size_t i = 0; i < p.values.size(); ++i)
        f << fmt17(p.grid.thetas[i]) << ',' << fmt17(p.grid.phis[i]) << ','
          << fmt17(p.values[i].real()) << ',' << fmt17(p.values[i].imag()) << "\n";

    json side;
    side["k"] = p.k;
    side["alpha"] = {p.alpha.x(), p.alpha.y(), p.alpha.z()};
    side["bc"] = bc_to_json(bc);
    side["grid"] = {{"n_theta", p.grid.n_theta}, {"n_phi", p.grid.n_phi}};
    std::ofstream s(sidecar_path);
    if (!s) throw ConfigError("cannot open for writing: " + sidecar_path);
    s << side.dump(2) << "\n";
}

inline std::pair<FarFieldPattern, BoundaryCondition> read_far_field(
    const std::string& csv_path, const std::string& sidecar_path) {
    std::ifstream s(sidecar_path);
    if (!s) throw ConfigError("cannot open sidecar: " + sidecar_path);
    json side;
    try {
        s >> side;
    } catch (const json::exception& e) {
        throw ConfigError("malformed sidecar JSON: " + std::string(e.what()));
    }
    FarFieldPattern p;
    p.k = side.at("k").get<double>();
    const auto av = side.at("alpha").get<std::vector<double>>();
    if (av.size() != 3) throw ConfigError("sidecar alpha must have 3 components");
    p.alpha = Vec3(av[0], av[1], av[2]);
    const auto bc = bc_from_json(side.at("bc"));
    p.grid = make_direction_grid(side.at("grid").at("n_theta").get<int>(),
                                 side.at("grid").at("n_phi").get<int>());

    std::ifstream f(csv_path);
    if (!f) throw ConfigError("cannot open far-field CSV: " + csv_path);
    std::string line;
    std::getline(f, line);
    if (line != "theta,phi,re_A,im_A") throw ConfigError("far-field CSV: bad header");
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        double th, ph, re, im;
        char c1, c2, c3;
        if (!(ss >> th >> c1 >> ph >> c2 >> re >> c3 >> im))
            throw ConfigError("far-field CSV: bad row: " + line);
        p.values.emplace_back(re, im);
    }
    if (p.values.size() != p.grid.directions.size())
        throw ConfigError("far-field CSV row count does not match the sidecar grid");
    return {p, bc};
}

inline json decay_report_to_json(const DecayReport& r) {
    json j;
    j["abscissae"] = r.abscissae;
    j["residuals"] = r.residuals;
    j["slope"] = r.fitted_slope;
    j["slope_ci"] = r.slope_ci;
    j["monotone"] = r.monotone;
    return j;
}

} // namespace io
} // namespace obscat

#pragma once

// Hierarchical text configuration files. Sections are [optical.k],
// [mechanical.j], [coupling], [bath], [units]; keys are lowercase words;
// complex values are written "re+imi" (e.g. "0.5-1.25i"). Unknown sections or
// keys are rejected. The same parser backs the membrane setup sections
// ([membrane], [cavity], [mode.i], [spot.i]) used by the membrane tool.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "omcool/errors.hpp"
#include "omcool/model.hpp"

namespace omcool {

/// Parse "re", "imi" or "re+imi" (spaces allowed) into a complex number.
inline Complex parse_complex(const std::string& text) {
    std::string s;
    s.reserve(text.size());
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw ConfigError("empty complex literal");

    // Split at the last top-level +/- that is not an exponent sign.
    auto is_split = [&](size_t i) {
        if (i == 0) return false;
        char c = s[i];
        if (c != '+' && c != '-') return false;
        char prev = s[i - 1];
        return prev != 'e' && prev != 'E' && prev != '+' && prev != '-';
    };
    size_t split = std::string::npos;
    for (size_t i = s.size(); i-- > 1;) {
        if (is_split(i)) { split = i; break; }
    }
    auto to_double = [](const std::string& t) {
        size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &pos);
        } catch (const std::exception&) {
            throw ConfigError("bad numeric literal '" + t + "'");
        }
        if (pos != t.size()) throw ConfigError("bad numeric literal '" + t + "'");
        return v;
    };
    const bool has_i = s.back() == 'i' || s.back() == 'I';
    if (!has_i) return Complex(to_double(s), 0.0);
    std::string body = s.substr(0, s.size() - 1);
    if (split == std::string::npos) {
        if (body.empty() || body == "+") return Complex(0.0, 1.0);
        if (body == "-") return Complex(0.0, -1.0);
        return Complex(0.0, to_double(body));
    }
    std::string re = body.substr(0, split);
    std::string im = body.substr(split);
    if (im == "+") im = "1";
    if (im == "-") im = "-1";
    return Complex(to_double(re), to_double(im));
}

inline std::string format_complex(const Complex& z) {
    char buf[80];
    if (z.imag() == 0.0) {
        std::snprintf(buf, sizeof(buf), "%.17g", z.real());
        return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g%+.17gi", z.real(), z.imag());
    return buf;
}

/// Raw parsed file: section name -> ordered (key, value) pairs.
struct ConfigTree {
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;

    const std::vector<std::pair<std::string, std::string>>* find(const std::string& name) const {
        for (const auto& s : sections)
            if (s.first == name) return &s.second;
        return nullptr;
    }
};

inline ConfigTree parse_config_text(std::istream& in) {
    ConfigTree tree;
    std::string line;
    std::string current;
    int lineno = 0;
    auto trim = [](std::string t) {
        auto notspace = [](unsigned char c) { return !std::isspace(c); };
        t.erase(t.begin(), std::find_if(t.begin(), t.end(), notspace));
        t.erase(std::find_if(t.rbegin(), t.rend(), notspace).base(), t.end());
        return t;
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            tree.sections.push_back({current, {}});
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (current.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        tree.sections.back().second.push_back({key, value});
    }
    return tree;
}

inline ConfigTree parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config_text(in);
}

namespace detail {

inline double to_double_strict(const std::string& sec, const std::string& key,
                               const std::string& v) {
    size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("[" + sec + "] " + key + ": bad number '" + v + "'");
    }
    if (pos != v.size())
        throw ConfigError("[" + sec + "] " + key + ": bad number '" + v + "'");
    return out;
}

inline int to_int_strict(const std::string& sec, const std::string& key, const std::string& v) {
    size_t pos = 0;
    int out = 0;
    try {
        out = std::stoi(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("[" + sec + "] " + key + ": bad integer '" + v + "'");
    }
    if (pos != v.size())
        throw ConfigError("[" + sec + "] " + key + ": bad integer '" + v + "'");
    return out;
}

inline std::vector<Complex> to_complex_list(const std::string& sec, const std::string& key,
                                            const std::string& v) {
    std::vector<Complex> out;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(parse_complex(item));
        } catch (const ConfigError& e) {
            throw ConfigError("[" + sec + "] " + key + ": " + e.what());
        }
    }
    if (out.empty()) throw ConfigError("[" + sec + "] " + key + ": empty list");
    return out;
}

/// Split "optical.3" into ("optical", 3). Index-less names return index 0.
inline std::pair<std::string, int> split_section(const std::string& name) {
    auto dot = name.find('.');
    if (dot == std::string::npos) return {name, 0};
    std::string base = name.substr(0, dot);
    std::string idx = name.substr(dot + 1);
    try {
        size_t pos = 0;
        int i = std::stoi(idx, &pos);
        if (pos != idx.size() || i <= 0) throw std::invalid_argument("");
        return {base, i};
    } catch (const std::exception&) {
        throw ConfigError("bad section index in [" + name + "]");
    }
}

} // namespace detail

/// Load a SystemConfig. Missing required sections and unknown sections/keys
/// are reported together in a single ConfigError.
inline SystemConfig load_system_config(const ConfigTree& tree) {
    SystemConfig cfg;
    std::vector<std::string> problems;
    std::map<int, OpticalModeSpec> optical;
    std::map<int, MechanicalModeSpec> mechanical;
    std::map<int, std::vector<Complex>> rows;
    bool saw_coupling = false, saw_bath = false;
    std::string coupling_kind = "linearized";

    for (const auto& [name, entries] : tree.sections) {
        auto [base, idx] = detail::split_section(name);
        if (base == "optical" && idx > 0) {
            OpticalModeSpec o;
            o.index = idx;
            bool saw_nu = false, saw_det = false;
            for (const auto& [key, value] : entries) {
                if (key == "kappa") o.kappa = detail::to_double_strict(name, key, value);
                else if (key == "nu") { o.nu = detail::to_double_strict(name, key, value); saw_nu = true; }
                else if (key == "detuning") { o.nu = detail::to_double_strict(name, key, value); saw_det = true; }
                else if (key == "drive_frequency") o.drive_frequency = detail::to_double_strict(name, key, value);
                else if (key == "drive_amplitude") {
                    try { o.drive_amplitude = parse_complex(value); }
                    catch (const ConfigError& e) { problems.push_back(std::string("[") + name + "] drive_amplitude: " + e.what()); }
                }
                else problems.push_back("[" + name + "] unknown key '" + key + "'");
            }
            if (saw_nu && saw_det)
                problems.push_back("[" + name + "] give either nu or detuning, not both");
            optical[idx] = o;
        } else if (base == "mechanical" && idx > 0) {
            MechanicalModeSpec m;
            m.index = idx;
            for (const auto& [key, value] : entries) {
                if (key == "omega") m.omega = detail::to_double_strict(name, key, value);
                else if (key == "gamma") m.gamma = detail::to_double_strict(name, key, value);
                else problems.push_back("[" + name + "] unknown key '" + key + "'");
            }
            mechanical[idx] = m;
        } else if (name == "coupling") {
            saw_coupling = true;
            for (const auto& [key, value] : entries) {
                if (key == "kind") coupling_kind = value;
                else if (key.rfind("row.", 0) == 0) {
                    int r = detail::to_int_strict(name, key, key.substr(4));
                    rows[r] = detail::to_complex_list(name, key, value);
                } else problems.push_back("[coupling] unknown key '" + key + "'");
            }
            if (coupling_kind != "linearized" && coupling_kind != "single_photon")
                problems.push_back("[coupling] kind must be 'linearized' or 'single_photon'");
        } else if (name == "bath") {
            saw_bath = true;
            for (const auto& [key, value] : entries) {
                if (key == "n_th") cfg.bath.n_th = detail::to_double_strict(name, key, value);
                else if (key == "temperature") cfg.bath.temperature = detail::to_double_strict(name, key, value);
                else if (key == "reference_omega") cfg.bath.reference_omega = detail::to_double_strict(name, key, value);
                else problems.push_back("[bath] unknown key '" + key + "'");
            }
        } else if (name == "units") {
            for (const auto& [key, value] : entries) {
                if (key == "system") {
                    if (value == "kappa1") cfg.units = UnitSystem::Kappa1;
                    else if (value == "si") cfg.units = UnitSystem::SiAngular;
                    else problems.push_back("[units] system must be 'kappa1' or 'si'");
                } else if (key == "kappa1_si") cfg.kappa1_si = detail::to_double_strict(name, key, value);
                else problems.push_back("[units] unknown key '" + key + "'");
            }
        } else {
            problems.push_back("unknown section [" + name + "]");
        }
    }

    if (optical.empty()) problems.push_back("missing section [optical.1]");
    if (mechanical.empty()) problems.push_back("missing section [mechanical.1]");
    if (!saw_coupling) problems.push_back("missing section [coupling]");
    if (!saw_bath) problems.push_back("missing section [bath]");

    // Contiguity of mode indices.
    int next = 1;
    for (const auto& [idx, o] : optical) {
        if (idx != next) problems.push_back("optical mode indices must be 1..M without gaps");
        cfg.optical.push_back(o);
        ++next;
    }
    next = 1;
    for (const auto& [idx, m] : mechanical) {
        if (idx != next) problems.push_back("mechanical mode indices must be 1..N without gaps");
        cfg.mechanical.push_back(m);
        ++next;
    }

    const int m_count = static_cast<int>(cfg.optical.size());
    const int n_count = static_cast<int>(cfg.mechanical.size());
    cfg.coupling.kind = coupling_kind == "single_photon" ? CouplingMatrix::Kind::SinglePhoton
                                                         : CouplingMatrix::Kind::Linearized;
    cfg.coupling.g = Eigen::MatrixXcd::Zero(m_count, n_count);
    for (const auto& [r, vals] : rows) {
        if (r < 1 || r > m_count) {
            problems.push_back("[coupling] row." + std::to_string(r) + " out of range");
            continue;
        }
        if (static_cast<int>(vals.size()) != n_count) {
            problems.push_back("[coupling] row." + std::to_string(r) + " has " +
                               std::to_string(vals.size()) + " entries, expected " +
                               std::to_string(n_count));
            continue;
        }
        for (int j = 0; j < n_count; ++j) cfg.coupling.g(r - 1, j) = vals[j];
    }

    if (!problems.empty()) {
        std::string msg = "config errors:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
    return cfg;
}

inline SystemConfig load_system_config(const std::string& path) {
    return load_system_config(parse_config_file(path));
}

/// Deterministic serialization (fixed key order, 17 significant digits).
/// Reloading the output reproduces the config bit-exactly.
inline std::string serialize_system_config(const SystemConfig& cfg) {
    std::ostringstream out;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "[units]\n";
    out << "system = " << (cfg.units == UnitSystem::Kappa1 ? "kappa1" : "si") << "\n";
    if (std::isfinite(cfg.kappa1_si)) out << "kappa1_si = " << num(cfg.kappa1_si) << "\n";
    for (size_t k = 0; k < cfg.optical.size(); ++k) {
        const auto& o = cfg.optical[k];
        out << "\n[optical." << (k + 1) << "]\n";
        out << "kappa = " << num(o.kappa) << "\n";
        if (o.drive_frequency != 0.0) {
            out << "nu = " << num(o.nu) << "\n";
            out << "drive_frequency = " << num(o.drive_frequency) << "\n";
        } else {
            out << "detuning = " << num(o.nu) << "\n";
        }
        if (o.drive_amplitude != Complex(0.0, 0.0))
            out << "drive_amplitude = " << format_complex(o.drive_amplitude) << "\n";
    }
    for (size_t j = 0; j < cfg.mechanical.size(); ++j) {
        const auto& m = cfg.mechanical[j];
        out << "\n[mechanical." << (j + 1) << "]\n";
        out << "omega = " << num(m.omega) << "\n";
        out << "gamma = " << num(m.gamma) << "\n";
    }
    out << "\n[coupling]\n";
    out << "kind = "
        << (cfg.coupling.kind == CouplingMatrix::Kind::SinglePhoton ? "single_photon" : "linearized")
        << "\n";
    for (int k = 0; k < cfg.coupling.g.rows(); ++k) {
        out << "row." << (k + 1) << " = ";
        for (int j = 0; j < cfg.coupling.g.cols(); ++j) {
            if (j) out << ", ";
            out << format_complex(cfg.coupling.g(k, j));
        }
        out << "\n";
    }
    out << "\n[bath]\n";
    if (cfg.bath.has_direct_occupancy()) out << "n_th = " << num(cfg.bath.n_th) << "\n";
    if (cfg.bath.has_temperature()) out << "temperature = " << num(cfg.bath.temperature) << "\n";
    if (cfg.bath.reference_omega != 0.0)
        out << "reference_omega = " << num(cfg.bath.reference_omega) << "\n";
    return out.str();
}

} // namespace omcool

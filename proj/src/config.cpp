#include "epslab/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "epslab/errors.hpp"

namespace epslab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

} // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& name) {
    Config cfg;
    cfg.name_ = name;
    cfg.hash_ = fnv1a(text);
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error(name + ":" + std::to_string(lineno) +
                                   ": malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw config_error(name + ":" + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(name + ":" + std::to_string(lineno) +
                               ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw config_error(name + ":" + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw config_error(name + ":" + std::to_string(lineno) + ": key '" + key +
                               "' appears before any [section] header");
        const auto id = std::make_pair(section, key);
        if (cfg.values_.count(id))
            throw config_error(name + ":" + std::to_string(lineno) + ": duplicate key [" +
                               section + "] " + key);
        cfg.values_[id] = value;
    }
    return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return values_.count({section, key}) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    const auto it = values_.find({section, key});
    if (it == values_.end())
        throw config_error(name_ + ": missing required key [" + section + "] " + key);
    return it->second;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    const std::string s = get_string(section, key);
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw config_error(name_ + ": [" + section + "] " + key + " = '" + s +
                           "' is not a number");
    }
    if (pos != s.size())
        throw config_error(name_ + ": [" + section + "] " + key + " = '" + s +
                           "' has trailing characters");
    return v;
}

long Config::get_long(const std::string& section, const std::string& key) const {
    const double v = get_double(section, key);
    const long l = static_cast<long>(std::llround(v));
    if (static_cast<double>(l) != v)
        throw config_error(name_ + ": [" + section + "] " + key + " must be an integer");
    return l;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key) const {
    const std::string s = get_string(section, key);
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw config_error(name_ + ": [" + section + "] " + key + " = '" + s +
                           "' is not an unsigned integer");
    }
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
    const std::string s = get_string(section, key);
    std::vector<double> out;
    for (const auto& part : split(s, ',')) {
        if (part.empty())
            throw config_error(name_ + ": [" + section + "] " + key + " has an empty entry");
        try {
            out.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw config_error(name_ + ": [" + section + "] " + key + " entry '" + part +
                               "' is not a number");
        }
    }
    return out;
}

std::vector<int> Config::get_int_list(const std::string& section,
                                      const std::string& key) const {
    std::vector<int> out;
    for (double v : get_double_list(section, key)) {
        const int i = static_cast<int>(std::llround(v));
        if (static_cast<double>(i) != v)
            throw config_error(name_ + ": [" + section + "] " + key +
                               " must contain integers");
        out.push_back(i);
    }
    return out;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& dflt) const {
    return has(section, key) ? get_string(section, key) : dflt;
}
double Config::get_double(const std::string& section, const std::string& key,
                          double dflt) const {
    return has(section, key) ? get_double(section, key) : dflt;
}
long Config::get_long(const std::string& section, const std::string& key, long dflt) const {
    return has(section, key) ? get_long(section, key) : dflt;
}

void Config::validate(std::span<const KeySpec> schema) const {
    std::vector<std::string> unknown, missing;
    for (const auto& [id, value] : values_) {
        bool found = false;
        for (const auto& spec : schema)
            if (spec.section == id.first && spec.key == id.second) {
                found = true;
                break;
            }
        if (!found) unknown.push_back("[" + id.first + "] " + id.second);
    }
    for (const auto& spec : schema) {
        if (spec.required && !has(spec.section, spec.key))
            missing.push_back("[" + spec.section + "] " + spec.key);
    }
    if (unknown.empty() && missing.empty()) return;
    std::ostringstream os;
    os << name_ << ": invalid configuration.";
    if (!unknown.empty()) {
        os << " Unknown keys:";
        for (const auto& k : unknown) os << " " << k << ";";
    }
    if (!missing.empty()) {
        os << " Missing required keys:";
        for (const auto& k : missing) os << " " << k << ";";
    }
    throw config_error(os.str());
}

double ScalarProfile::eval(const std::array<double, 3>& x, int dim,
                           const std::array<double, 3>& extent) const {
    double r2 = 0;
    for (int a = 0; a < dim; ++a) r2 += x[a] * x[a];
    switch (kind) {
        case Kind::constant: return p0;
        case Kind::gauss: return p0 * std::exp(-r2 / (p1 * p1));
        case Kind::bump: {
            const double q = r2 / (p1 * p1);
            if (q >= 1.0) return 0.0;
            return p0 * std::exp(1.0 - 1.0 / (1.0 - q));
        }
        case Kind::mode: {
            double v = p0;
            for (int a = 0; a < dim; ++a)
                v *= std::sin(p1 * M_PI * (x[a] + extent[a]) / (2.0 * extent[a]));
            return v;
        }
    }
    return 0;
}

ScalarProfile parse_profile(const std::string& text) {
    const auto colon = text.find(':');
    ScalarProfile p;
    if (colon == std::string::npos) {
        // bare number means a constant
        try {
            p.kind = ScalarProfile::Kind::constant;
            p.p0 = std::stod(text);
            return p;
        } catch (const std::exception&) {
            throw config_error("profile: '" + text + "' is not a number or kind:params");
        }
    }
    const std::string kind = text.substr(0, colon);
    std::vector<double> params;
    {
        std::istringstream in(text.substr(colon + 1));
        std::string part;
        while (std::getline(in, part, ',')) {
            try {
                params.push_back(std::stod(part));
            } catch (const std::exception&) {
                throw config_error("profile: bad parameter '" + part + "' in '" + text + "'");
            }
        }
    }
    auto need = [&](std::size_t n) {
        if (params.size() != n)
            throw config_error("profile: '" + text + "' expects " + std::to_string(n) +
                               " parameters");
    };
    if (kind == "const") {
        need(1);
        p.kind = ScalarProfile::Kind::constant;
        p.p0 = params[0];
    } else if (kind == "gauss") {
        need(2);
        p.kind = ScalarProfile::Kind::gauss;
        p.p0 = params[0];
        p.p1 = params[1];
        if (!(p.p1 > 0)) throw config_error("profile: gauss width must be positive");
    } else if (kind == "bump") {
        need(2);
        p.kind = ScalarProfile::Kind::bump;
        p.p0 = params[0];
        p.p1 = params[1];
        if (!(p.p1 > 0)) throw config_error("profile: bump radius must be positive");
    } else if (kind == "mode") {
        need(2);
        p.kind = ScalarProfile::Kind::mode;
        p.p0 = params[0];
        p.p1 = params[1];
        if (!(p.p1 >= 1)) throw config_error("profile: mode index must be >= 1");
    } else {
        throw config_error("profile: unknown kind '" + kind + "' in '" + text + "'");
    }
    return p;
}

} // namespace epslab

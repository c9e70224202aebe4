#ifndef EPSLAB_CONFIG_HPP
#define EPSLAB_CONFIG_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epslab {

/// Flat key/value configuration with [section] headers, '#'/';' comments,
/// strict parsing: duplicate keys are rejected at parse time; unknown and
/// missing keys are rejected against a per-subcommand schema, with every
/// missing key listed in one message.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& name);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key) const;
    long get_long(const std::string& section, const std::string& key) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key) const;
    std::vector<double> get_double_list(const std::string& section,
                                        const std::string& key) const;
    std::vector<int> get_int_list(const std::string& section, const std::string& key) const;

    // Defaulted variants.
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& dflt) const;
    double get_double(const std::string& section, const std::string& key, double dflt) const;
    long get_long(const std::string& section, const std::string& key, long dflt) const;

    /// FNV-1a hash of the raw configuration text.
    std::uint64_t content_hash() const { return hash_; }
    const std::string& name() const { return name_; }

    struct KeySpec {
        std::string section;
        std::string key;
        bool required = false;
    };
    /// Throws config_error naming every unknown key and every missing
    /// required key.
    void validate(std::span<const KeySpec> schema) const;

private:
    std::string name_;
    std::uint64_t hash_ = 0;
    std::map<std::pair<std::string, std::string>, std::string> values_;
};

/// Analytic radial profiles used for coefficients, reaction parameters and
/// initial data:
///   const:V          constant V
///   gauss:A,W        A exp(-(|x|/W)^2)
///   bump:A,R         A exp(1 - 1/(1 - (|x|/R)^2)) inside |x| < R, 0 outside
///   mode:A,M         A Pi_a sin(M pi (x_a + L_a) / (2 L_a))
struct ScalarProfile {
    enum class Kind { constant, gauss, bump, mode } kind = Kind::constant;
    double p0 = 0, p1 = 1;
    double eval(const std::array<double, 3>& x, int dim,
                const std::array<double, 3>& extent) const;
};
ScalarProfile parse_profile(const std::string& text);

} // namespace epslab

#endif

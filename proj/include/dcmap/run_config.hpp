#pragma once

#include <map>
#include <optional>
#include <string>

#include "dcmap/model_core.hpp"
#include "dcmap/types.hpp"

namespace dcmap {

/// Flat key/value converter description, fed from a config file (one
/// `key = value` per line, `#` comments) and/or command-line flags (flags
/// override the file). Keys: topology, vs, L, C, Rc, fs (or T), d, scheme,
/// D, g, Vh, vc, ma, R0, P, Io, v.
class RunConfig {
public:
    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    [[nodiscard]] bool has(const std::string& key) const { return kv_.count(key) != 0; }
    [[nodiscard]] std::optional<double> number(const std::string& key) const;
    [[nodiscard]] double require(const std::string& key) const;

    [[nodiscard]] Topology topology() const;
    [[nodiscard]] ConverterParams params() const;
    [[nodiscard]] LoadModel load() const;
    [[nodiscard]] Scheme scheme() const;
    [[nodiscard]] PointSpec point_spec() const;

    [[nodiscard]] std::string to_json_text() const;
    static RunConfig from_json_text(const std::string& text);

    [[nodiscard]] const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

/// Deterministic float formatting used by every CLI emitter (12 significant
/// digits, '.' decimal point).
std::string format_number(double x);

}  // namespace dcmap

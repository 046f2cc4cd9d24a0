#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dff::io {

/**
 * Key=value run settings. Every key has a default; unknown keys are
 * rejected. Lines starting with '#' and blank lines are ignored when parsing.
 */
class RunConfig
{
  public:
    RunConfig();

    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::string& path);

    /// @throws std::invalid_argument for an unknown key.
    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;
    bool is_auto(const std::string& key) const { return get(key) == "auto"; }

    static const std::vector<std::string>& known_keys();

    /// Every key=value pair, one per line, in key order.
    std::string to_text() const;

    /// to_text() with each line prefixed by "# ".
    std::string provenance_header() const;

    bool operator==(const RunConfig&) const = default;

  private:
    std::map<std::string, std::string> values_;
};

} // namespace dff::io

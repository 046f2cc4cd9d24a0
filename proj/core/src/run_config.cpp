#include "dff/run_config.hpp"

#include "dff/tensor_io.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace dff::io {

namespace {

const std::map<std::string, std::string>& defaults()
{
    static const std::map<std::string, std::string> d = {
        {"image_width", "64"},        {"image_height", "64"},     {"feature_dim", "32"},
        {"net_depth", "2"},           {"net_channels", "16,32,32"}, {"patch_count", "32"},
        {"segmentation_count", "8"},  {"cascade_stages", "3"},    {"omega_lan", "1"},
        {"omega_reg", "0.001"},       {"lambda1", "auto"},        {"lambda2", "auto"},
        {"lambda_per_sample", "1"}, {"model_vertices", "1500"}, {"id_modes", "8"},
        {"exp_modes", "6"},           {"epochs", "20"},           {"learning_rate", "0.1"},
        {"momentum", "0.9"},          {"batch_size", "4"},        {"visibility_resolution", "128"},
        {"seed", "none"},             {"model_path", ""},         {"data_path", ""},
        {"segmentation_path", ""},    {"weights_path", ""},       {"cascade_path", ""},
        {"output_path", ""},
    };
    return d;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v)
{
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("config key '" + key + "': cannot parse '" + v + "'");
    return out;
}

} // namespace

RunConfig::RunConfig() : values_(defaults()) {}

const std::vector<std::string>& RunConfig::known_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [key, v] : defaults())
            k.push_back(key);
        return k;
    }();
    return keys;
}

RunConfig RunConfig::parse(const std::string& text)
{
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(number) + ": expected key=value");
        c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return c;
}

RunConfig RunConfig::load(const std::string& path) { return parse(read_text_file(path)); }

void RunConfig::set(const std::string& key, const std::string& value)
{
    auto it = values_.find(key);
    if (it == values_.end())
        throw std::invalid_argument("unknown config key '" + key + "'");
    if (value.find('\n') != std::string::npos)
        throw std::invalid_argument("config key '" + key + "': value must be a single line");
    it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const
{
    auto it = values_.find(key);
    if (it == values_.end())
        throw std::invalid_argument("unknown config key '" + key + "'");
    return it->second;
}

int RunConfig::get_int(const std::string& key) const { return parse_number<int>(key, get(key)); }

double RunConfig::get_double(const std::string& key) const { return parse_number<double>(key, get(key)); }

std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }

std::vector<int> RunConfig::get_int_list(const std::string& key) const
{
    std::vector<int> out;
    std::istringstream in(get(key));
    std::string item;
    while (std::getline(in, item, ','))
        out.push_back(parse_number<int>(key, trim(item)));
    return out;
}

std::string RunConfig::to_text() const
{
    std::string out;
    for (const auto& [k, v] : values_)
        out += k + "=" + v + "\n";
    return out;
}

std::string RunConfig::provenance_header() const
{
    std::string out;
    for (const auto& [k, v] : values_)
        out += "# " + k + "=" + v + "\n";
    return out;
}

} // namespace dff::io

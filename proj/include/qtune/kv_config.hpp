/*
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qtune {

/// Flat `key = value` settings, one per line. Blank lines and lines
/// starting with '#' are ignored.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValueConfig load(const std::filesystem::path& path);

    [[nodiscard]] bool contains(const std::string& key) const;
    [[nodiscard]] std::optional<std::string> get(const std::string& key) const;

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    [[nodiscard]] std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    [[nodiscard]] std::vector<double> get_doubles(const std::string& key,
                                                  std::vector<double> fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::string origin_;
    std::map<std::string, std::string> values_;
};

/// Comma-separated list of reals ("0.1,0.5,1").
std::vector<double> parse_double_list(const std::string& text);

} // namespace qtune

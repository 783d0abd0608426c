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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace qtune {

enum class ReadLevel : std::uint8_t { One = 0, Quorum = 1, All = 2 };

// ANY is write-only: the write counts as acknowledged once any node has it.
enum class WriteLevel : std::uint8_t { Any = 0, One = 1, Quorum = 2, All = 3 };

struct ConsistencyLevel {
    ReadLevel read = ReadLevel::One;
    WriteLevel write = WriteLevel::Any;

    friend bool operator==(const ConsistencyLevel&, const ConsistencyLevel&) = default;

    /// Position in all_levels(), 0..11, weakest first.
    [[nodiscard]] int index() const noexcept
    {
        return static_cast<int>(read) * 4 + static_cast<int>(write);
    }
    [[nodiscard]] static ConsistencyLevel from_index(int index);
};

inline constexpr int kLevelCount = 12;

/// The closed set of read/write combinations, ordered weakest first
/// (read strength, then write strength).
const std::array<ConsistencyLevel, kLevelCount>& all_levels();

int required_acks(ReadLevel level, int replica_count);
int required_acks(WriteLevel level, int replica_count);

/// True when every read quorum intersects every write quorum.
bool quorums_intersect(ConsistencyLevel level, int replica_count);

std::string_view to_string(ReadLevel level);
std::string_view to_string(WriteLevel level);
/// "READLEVEL/WRITELEVEL", e.g. "QUORUM/ALL".
std::string to_string(ConsistencyLevel level);

ReadLevel parse_read_level(std::string_view text);
WriteLevel parse_write_level(std::string_view text);
ConsistencyLevel parse_level(std::string_view text);

} // namespace qtune

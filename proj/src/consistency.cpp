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
#include "qtune/consistency.hpp"

#include <stdexcept>

namespace qtune {

ConsistencyLevel ConsistencyLevel::from_index(int index)
{
    if (index < 0 || index >= kLevelCount) {
        throw std::out_of_range("consistency level index out of range");
    }
    return {static_cast<ReadLevel>(index / 4), static_cast<WriteLevel>(index % 4)};
}

const std::array<ConsistencyLevel, kLevelCount>& all_levels()
{
    static const auto levels = [] {
        std::array<ConsistencyLevel, kLevelCount> out{};
        for (int i = 0; i < kLevelCount; ++i) {
            out[static_cast<std::size_t>(i)] = ConsistencyLevel::from_index(i);
        }
        return out;
    }();
    return levels;
}

int required_acks(ReadLevel level, int replica_count)
{
    if (replica_count < 1) {
        throw std::invalid_argument("replica_count must be at least 1");
    }
    switch (level) {
    case ReadLevel::One:
        return 1;
    case ReadLevel::Quorum:
        return replica_count / 2 + 1;
    case ReadLevel::All:
        return replica_count;
    }
    throw std::invalid_argument("unknown read level");
}

int required_acks(WriteLevel level, int replica_count)
{
    if (replica_count < 1) {
        throw std::invalid_argument("replica_count must be at least 1");
    }
    switch (level) {
    case WriteLevel::Any:
    case WriteLevel::One:
        return 1;
    case WriteLevel::Quorum:
        return replica_count / 2 + 1;
    case WriteLevel::All:
        return replica_count;
    }
    throw std::invalid_argument("unknown write level");
}

bool quorums_intersect(ConsistencyLevel level, int replica_count)
{
    return required_acks(level.read, replica_count) + required_acks(level.write, replica_count) >
           replica_count;
}

std::string_view to_string(ReadLevel level)
{
    switch (level) {
    case ReadLevel::One:
        return "ONE";
    case ReadLevel::Quorum:
        return "QUORUM";
    case ReadLevel::All:
        return "ALL";
    }
    return "?";
}

std::string_view to_string(WriteLevel level)
{
    switch (level) {
    case WriteLevel::Any:
        return "ANY";
    case WriteLevel::One:
        return "ONE";
    case WriteLevel::Quorum:
        return "QUORUM";
    case WriteLevel::All:
        return "ALL";
    }
    return "?";
}

std::string to_string(ConsistencyLevel level)
{
    std::string out(to_string(level.read));
    out += '/';
    out += to_string(level.write);
    return out;
}

ReadLevel parse_read_level(std::string_view text)
{
    if (text == "ONE") {
        return ReadLevel::One;
    }
    if (text == "QUORUM") {
        return ReadLevel::Quorum;
    }
    if (text == "ALL") {
        return ReadLevel::All;
    }
    if (text == "ANY") {
        throw std::invalid_argument("ANY is not a valid read level");
    }
    throw std::invalid_argument("unknown read level '" + std::string(text) + "'");
}

WriteLevel parse_write_level(std::string_view text)
{
    if (text == "ANY") {
        return WriteLevel::Any;
    }
    if (text == "ONE") {
        return WriteLevel::One;
    }
    if (text == "QUORUM") {
        return WriteLevel::Quorum;
    }
    if (text == "ALL") {
        return WriteLevel::All;
    }
    throw std::invalid_argument("unknown write level '" + std::string(text) + "'");
}

ConsistencyLevel parse_level(std::string_view text)
{
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        throw std::invalid_argument("consistency level must look like READ/WRITE, got '" +
                                    std::string(text) + "'");
    }
    return {parse_read_level(text.substr(0, slash)), parse_write_level(text.substr(slash + 1))};
}

} // namespace qtune

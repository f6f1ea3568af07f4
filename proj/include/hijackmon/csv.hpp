// Copyright 2026 The hijackmon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HIJACKMON_CSV_HPP
#define HIJACKMON_CSV_HPP

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hijackmon/errors.hpp"

namespace hijackmon {

// Minimal CSV plumbing for the fixed table formats used by this project.
// Field values are identifiers, host names and numbers; quoting is not
// supported, so writers reject separator characters outright.

inline std::vector<std::string> csv_split(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline void csv_check_field(std::string_view value) {
    if (value.find_first_of(",\n\r") != std::string_view::npos) {
        throw CorruptInputFileError("CSV field contains separator character: '" +
                                    std::string(value) + "'");
    }
}

inline std::string csv_join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        csv_check_field(fields[i]);
        if (i > 0) out += ',';
        out += fields[i];
    }
    return out;
}

template <typename Int, typename ErrorT = CorruptInputFileError>
Int parse_int_field(std::string_view text, const std::string& origin, std::size_t line_no) {
    Int value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ErrorT(origin + " line " + std::to_string(line_no) +
                     ": expected integer, got '" + std::string(text) + "'");
    }
    return value;
}

inline std::ifstream open_input_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FileNotFoundError("cannot open input file '" + path.string() + "'");
    }
    return in;
}

inline std::ofstream open_output_file(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) {
        throw FileNotFoundError("cannot open output file '" + path.string() + "'");
    }
    return out;
}

}  // namespace hijackmon

#endif  // HIJACKMON_CSV_HPP

// SPDX-License-Identifier: Apache-2.0
//
// lasuav - link-level simulator and learning-based resource allocation for a
// lens-antenna-subarray UAV downlink with rate-splitting multiple access
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef LASUAV_CSV_HPP
#define LASUAV_CSV_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lasuav {

/// Shortest round-trip decimal form; deterministic across runs.
inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string csv_num(long v) { return std::to_string(v); }
inline std::string csv_num(int v) { return std::to_string(v); }

/// In-memory CSV table with a fixed header; rows are validated on append.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    explicit CsvTable(std::vector<std::string> columns) : header(std::move(columns)) {}

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != header.size())
            throw std::invalid_argument("CsvTable: row width mismatch");
        rows.push_back(std::move(cells));
    }

    std::string to_string() const {
        std::string out;
        for (std::size_t c = 0; c < header.size(); ++c)
            out += (c == 0 ? "" : ",") + header[c];
        out += "\n";
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c)
                out += (c == 0 ? "" : ",") + row[c];
            out += "\n";
        }
        return out;
    }

    void write(const std::filesystem::path& path) const {
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("CsvTable: cannot open " + path.string());
        out << to_string();
    }
};

} // namespace lasuav

#endif

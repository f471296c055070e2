// Copyright 2026 The ctqw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctqw::record {

// %.17g: enough digits to round-trip every double. Non-finite values have
// no JSON spelling and are written as null.
std::string format_double(double x);

// Deterministic JSON text: keys sorted (nlohmann::json objects are ordered
// maps), floats through format_double, two-space indent.
std::string dump(const nlohmann::json& value);

using Cell = std::variant<double, long long, std::string, bool>;

// CSV with a leading '#' comment naming the columns, which gnuplot skips
// and spreadsheet tools ignore.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);
  void add_row(std::vector<Cell> row);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

// Ordinary least squares y = a + b x with the coefficient of determination.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ctqw::record

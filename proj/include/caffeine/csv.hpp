// Copyright 2026 The caffeine Authors
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


#ifndef CAFFEINE_CSV_HPP_
#define CAFFEINE_CSV_HPP_

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace caffeine {

/// Numeric CSV writer; values are printed with 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header,
            const std::string& comment = "");

  void row(std::initializer_list<double> values);
  void row(const std::vector<double>& values);
  /// Mixed text/numeric row; cells are written verbatim.
  void text_row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> comments;  // lines starting with '#', without the marker
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Reads an all-numeric CSV with one header line.
CsvTable read_csv(const std::string& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace caffeine

#endif  // CAFFEINE_CSV_HPP_

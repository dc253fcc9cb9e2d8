// Copyright 2026 The cmivf Authors.
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

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cmivf/ivf.hpp"
#include "cmivf/theory.hpp"

namespace cmivf {

using Cell = std::variant<std::int64_t, double, std::string, bool>;

/// Column-ordered report. Every row has one cell per column.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

/// Header row, then one line per row. Doubles use 6 significant digits
/// ("%.6g"), booleans print as true/false, strings are quoted when needed.
std::string to_csv(const Table& table);
void write_csv(const Table& table, const std::string& path);

/// n_probe, recall_at_1, mean_buckets, mean_candidates
Table recall_table(std::span<const RecallReport> reports);
/// bin, cos_lo, cos_hi, recall_at_1, count
Table thm1_table(const Thm1Report& report);
/// p_norm, check, r, statistic, reference, pass (one row per KS test and
/// per tail check)
Table thm2_table(std::span<const Thm2Report> reports);
/// radius, mismatch, probes
Table voronoi_table(std::span<const VoronoiBin> bins);

}  // namespace cmivf

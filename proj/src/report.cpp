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

#include "cmivf/report.hpp"

#include <cstdio>
#include <fstream>

#include "cmivf/error.hpp"

namespace cmivf {
namespace {

std::string format_cell(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6g", v);
      return buf;
    }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const {
      if (v.find_first_of(",\"\n\r") == std::string::npos) return v;
      std::string out = "\"";
      for (const char ch : v) {
        if (ch == '"') out += '"';
        out += ch;
      }
      return out + "\"";
    }
  };
  return std::visit(Visitor{}, cell);
}

std::int64_t i64(std::size_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size())
    raise(ErrorCode::kInternal, "row has " + std::to_string(row.size()) + " cells for " +
                                    std::to_string(columns.size()) + " columns");
  rows.push_back(std::move(row));
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += format_cell(table.columns[i]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  out << to_csv(table);
  if (!out) raise(ErrorCode::kIoError, "write failed for '" + path + "'");
}

Table recall_table(std::span<const RecallReport> reports) {
  Table t{{"n_probe", "recall_at_1", "mean_buckets", "mean_candidates"}, {}};
  for (const auto& r : reports) t.add_row({i64(r.n_probe), r.recall_at_1, r.mean_buckets, r.mean_candidates});
  return t;
}

Table thm1_table(const Thm1Report& report) {
  Table t{{"bin", "cos_lo", "cos_hi", "recall_at_1", "count"}, {}};
  for (std::size_t b = 0; b < report.bins.size(); ++b) {
    const auto& bin = report.bins[b];
    t.add_row({i64(b), bin.cos_lo, bin.cos_hi, bin.recall_at_1, i64(bin.count)});
  }
  return t;
}

Table thm2_table(std::span<const Thm2Report> reports) {
  Table t{{"p_norm", "check", "r", "statistic", "reference", "pass"}, {}};
  for (const auto& rep : reports) {
    t.add_row({rep.p_norm, std::string("ks_orthogonal"), 0.0, rep.ks_orthogonal, rep.ks_orthogonal_pvalue,
               rep.ks_orthogonal_pass});
    t.add_row({rep.p_norm, std::string("ks_parallel"), 0.0, rep.ks_parallel, rep.ks_parallel_pvalue,
               rep.ks_parallel_pass});
    for (const auto& tc : rep.tail)
      t.add_row({rep.p_norm, std::string("tail"), tc.r, tc.empirical, tc.bound, tc.pass});
    t.add_row({rep.p_norm, std::string("spread"), 0.0, rep.spread, 0.0, true});
  }
  return t;
}

Table voronoi_table(std::span<const VoronoiBin> bins) {
  Table t{{"radius", "mismatch", "probes"}, {}};
  for (const auto& b : bins) t.add_row({b.radius, b.mismatch, i64(b.probes)});
  return t;
}

}  // namespace cmivf

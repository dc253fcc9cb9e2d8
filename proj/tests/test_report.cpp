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

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "cmivf/ivf.hpp"
#include "cmivf/report.hpp"
#include "support.hpp"

using namespace cmivf;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("recall table schema and number format") {
    RecallReport a;
    a.n_probe = 1;
    a.recall_at_1 = 0.123456789;
    a.mean_buckets = 1.0;
    a.mean_candidates = 1234567.0;
    RecallReport b = a;
    b.n_probe = 16;
    b.recall_at_1 = 1.0;
    const std::vector<RecallReport> reports{a, b};
    CHECK(to_csv(recall_table(reports)) ==
          "n_probe,recall_at_1,mean_buckets,mean_candidates\n"
          "1,0.123457,1,1.23457e+06\n"
          "16,1,1,1.23457e+06\n");
  }

  TEST_CASE("empty table prints its header only") {
    CHECK(to_csv(recall_table({})) == "n_probe,recall_at_1,mean_buckets,mean_candidates\n");
    CHECK(to_csv(voronoi_table({})) == "radius,mismatch,probes\n");
    CHECK(to_csv(thm1_table(Thm1Report{})) == "bin,cos_lo,cos_hi,recall_at_1,count\n");
    CHECK(to_csv(thm2_table({})) == "p_norm,check,r,statistic,reference,pass\n");
  }

  TEST_CASE("cells: booleans, quoting, arity") {
    Table t{{"name", "ok"}, {}};
    t.add_row({std::string("plain"), true});
    t.add_row({std::string("a,b"), false});
    t.add_row({std::string("say \"hi\""), true});
    CHECK(to_csv(t) == "name,ok\nplain,true\n\"a,b\",false\n\"say \"\"hi\"\"\",true\n");
    CHECK_CODE(t.add_row({std::string("short")}), ErrorCode::kInternal);
  }

  TEST_CASE("nearest-point table has one row per check") {
    Thm2Report r;
    r.p_norm = 2.0;
    r.tail = {TailCheck{0.5, 0.1, 0.2, 0.01, true}, TailCheck{1.0, 0.0, 0.1, 0.0, true}};
    const std::vector<Thm2Report> reps{r};
    CHECK(thm2_table(reps).rows.size() == 5);
  }

  TEST_CASE("written file equals the string and re-emits byte-identically") {
    Table t{{"x", "y"}, {}};
    for (int i = 0; i < 5; ++i) t.add_row({std::int64_t{i}, i / 3.0});
    write_csv(t, "test_report_a.csv");
    write_csv(t, "test_report_b.csv");
    CHECK(slurp("test_report_a.csv") == to_csv(t));
    CHECK(slurp("test_report_a.csv") == slurp("test_report_b.csv"));
    std::remove("test_report_a.csv");
    std::remove("test_report_b.csv");
    CHECK_CODE(write_csv(t, "/nonexistent/dir/x.csv"), ErrorCode::kIoError);
  }
}

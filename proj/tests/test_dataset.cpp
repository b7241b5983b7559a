#include <doctest.h>

#include "metadiag/dataset.hpp"

using namespace metadiag;

namespace {

DataError data_error(const std::string& csv) {
  try {
    parse_dataset_csv_text(csv);
  } catch (const DataError& e) {
    return e;
  }
  FAIL("expected a DataError");
  return DataError("");
}

}  // namespace

TEST_CASE("telomerase data") {
  const Dataset d = telomerase_dataset();
  REQUIRE(d.size() == 10);
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& s : d.studies()) tp += s.tp, fp += s.fp, fn += s.fn_, tn += s.tn;
  CHECK(tp == 325);
  CHECK(fp == 57);
  CHECK(fn == 99);
  CHECK(tn == 374);
  CHECK(d.find("Kavaler").total() == 151);
  CHECK(!d.has_covariates());
}

TEST_CASE("csv parsing accepts any column order and skips comments") {
  const auto r = parse_dataset_csv_text(
      "# comment\n"
      "tn,Study,fp,TP,fn,extra\n"
      "10,a,2,5,1,x\n"
      "\n"
      "7,b,3,4,2,y\n");
  REQUIRE(r.dataset.size() == 2);
  CHECK(r.dataset[0].study_id == "a");
  CHECK(r.dataset[0].tp == 5);
  CHECK(r.dataset[1].tn == 7);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("csv round trip with covariates") {
  CsvOptions opt;
  opt.covariates_se = {"age"};
  const auto r = parse_dataset_csv_text("study,TP,FP,FN,TN,age\ns1,5,1,2,9,0.5\ns2,3,2,2,8,-1.25\n", opt);
  CHECK(r.dataset.n_covariates_se() == 1);
  CsvOptions back;
  back.covariates_se = {"se_1"};
  const auto again = parse_dataset_csv_text(serialize_dataset_csv(r.dataset), back);
  CHECK(again.dataset[1].covariates_se.at(0) == -1.25);
  CHECK(serialize_dataset_csv(again.dataset) == serialize_dataset_csv(r.dataset));
}

TEST_CASE("invalid data reports row and column") {
  auto e = data_error("study,TP,FP,FN\na,1,2,3\nb,1,2,3\n");
  CHECK(e.column() == "TN");
  e = data_error("study,TP,FP,FN,TN\na,1,2,3,4\nb,1.5,2,3,4\n");
  CHECK(e.row() == 3);
  CHECK(e.column() == "TP");
  e = data_error("study,TP,FP,FN,TN\na,1,2,3,4\na,1,2,3,4\n");
  CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  e = data_error("study,TP,FP,FN,TN\na,0,2,0,4\nb,1,2,3,4\n");
  CHECK(e.row() == 2);
  e = data_error("study,TP,FP,FN,TN\na,1,2,3,4\n");
  CHECK(std::string(e.what()).find(">= 2") != std::string::npos);
  e = data_error("study,TP,FP,FN,TN\na,1,2,3,-4\nb,1,2,3,4\n");
  CHECK(e.column() == "TN");
}

TEST_CASE("swapping arms exchanges sensitivity and specificity") {
  const Dataset d = telomerase_dataset();
  const Dataset s = swap_arms(d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(s[i].tp == d[i].tn);
    CHECK(s[i].fn_ == d[i].fp);
    CHECK(s[i].diseased() == d[i].non_diseased());
  }
  CHECK(serialize_dataset_csv(swap_arms(s)) == serialize_dataset_csv(d));
}

#ifndef METADIAG_DATASET_HPP
#define METADIAG_DATASET_HPP

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace metadiag {

/// Error raised while reading or validating study data. Carries the 1-based
/// row (0 when not row-specific) and the offending column name, if any.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t row = 0, std::string column = {});
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

/// One diagnostic accuracy study: the 2x2 table against the gold standard
/// plus optional study-level covariates for the sensitivity and specificity
/// regressions.
struct StudyRecord {
  std::string study_id;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn_ = 0;
  std::int64_t tn = 0;
  std::vector<double> covariates_se;
  std::vector<double> covariates_sp;

  std::int64_t diseased() const noexcept { return tp + fn_; }
  std::int64_t non_diseased() const noexcept { return tn + fp; }
  std::int64_t total() const noexcept { return tp + fp + fn_ + tn; }
};

/// An ordered, validated collection of studies. Construction enforces the
/// invariants (>= 2 studies, unique ids, both arms non-empty, consistent
/// covariate lengths), so a Dataset in hand is always usable for fitting.
class Dataset {
 public:
  Dataset(std::string name, std::vector<StudyRecord> studies);

  const std::string& name() const noexcept { return name_; }
  const std::vector<StudyRecord>& studies() const noexcept { return studies_; }
  std::size_t size() const noexcept { return studies_.size(); }
  const StudyRecord& operator[](std::size_t i) const { return studies_[i]; }
  const StudyRecord& find(const std::string& study_id) const;

  std::size_t n_covariates_se() const noexcept;
  std::size_t n_covariates_sp() const noexcept;
  bool has_covariates() const noexcept { return n_covariates_se() + n_covariates_sp() > 0; }

 private:
  std::string name_;
  std::vector<StudyRecord> studies_;
};

/// Which extra CSV columns to read as covariates. Columns not listed are
/// ignored (a warning is appended to `warnings`).
struct CsvOptions {
  std::vector<std::string> covariates_se;
  std::vector<std::string> covariates_sp;
  std::string name = "dataset";
};

struct CsvResult {
  Dataset dataset;
  std::vector<std::string> warnings;
};

/// Parse comma-separated study data. The header must name the columns
/// study, TP, FP, FN and TN (any order, case-insensitive). Lines starting
/// with '#' and blank lines are skipped.
CsvResult parse_dataset_csv(std::istream& in, const CsvOptions& options = {});
CsvResult parse_dataset_csv_text(const std::string& text, const CsvOptions& options = {});
Dataset read_dataset_csv(const std::string& path, const CsvOptions& options = {});

/// Writes study,TP,FP,FN,TN followed by covariate columns se_1.., sp_1..
std::string serialize_dataset_csv(const Dataset& data);

/// Glas et al. telomerase marker data for bladder cancer (10 studies).
Dataset telomerase_dataset();

/// Same studies with the roles of the two arms exchanged:
/// TP<->TN and FN<->FP, so sensitivity and specificity swap.
Dataset swap_arms(const Dataset& data);

}  // namespace metadiag

#endif  // METADIAG_DATASET_HPP

#include "metadiag/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace metadiag {

namespace {

std::string format_location(const std::string& what, std::size_t row, const std::string& column) {
  std::ostringstream os;
  os << what;
  if (row > 0 || !column.empty()) {
    os << " (";
    if (row > 0) os << "row " << row;
    if (row > 0 && !column.empty()) os << ", ";
    if (!column.empty()) os << "column '" << column << "'";
    os << ")";
  }
  return os.str();
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  out.push_back(trim(cell));
  return out;
}

std::int64_t parse_count(const std::string& cell, std::size_t row, const std::string& column) {
  std::int64_t value = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc{} || ptr != last)
    throw DataError("count is not an integer: '" + cell + "'", row, column);
  if (value < 0) throw DataError("count is negative: " + cell, row, column);
  return value;
}

double parse_real(const std::string& cell, std::size_t row, const std::string& column) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DataError("covariate is not numeric: '" + cell + "'", row, column);
  }
}

}  // namespace

DataError::DataError(const std::string& what, std::size_t row, std::string column)
    : std::runtime_error(format_location(what, row, column)), row_(row), column_(std::move(column)) {}

Dataset::Dataset(std::string name, std::vector<StudyRecord> studies)
    : name_(std::move(name)), studies_(std::move(studies)) {
  if (studies_.size() < 2) throw DataError("dataset must contain >= 2 studies");
  std::set<std::string> seen;
  const auto p_se = studies_.front().covariates_se.size();
  const auto p_sp = studies_.front().covariates_sp.size();
  for (std::size_t i = 0; i < studies_.size(); ++i) {
    const auto& s = studies_[i];
    if (s.tp < 0 || s.fp < 0 || s.fn_ < 0 || s.tn < 0)
      throw DataError("negative count in study '" + s.study_id + "'", i + 1);
    if (s.diseased() < 1)
      throw DataError("study '" + s.study_id + "' has no diseased subjects (TP + FN = 0)", i + 1);
    if (s.non_diseased() < 1)
      throw DataError("study '" + s.study_id + "' has no non-diseased subjects (TN + FP = 0)", i + 1);
    if (!seen.insert(s.study_id).second)
      throw DataError("duplicate study id '" + s.study_id + "'", i + 1, "study");
    if (s.covariates_se.size() != p_se || s.covariates_sp.size() != p_sp)
      throw DataError("covariate vector length differs between studies", i + 1);
  }
}

const StudyRecord& Dataset::find(const std::string& study_id) const {
  for (const auto& s : studies_)
    if (s.study_id == study_id) return s;
  throw DataError("unknown study id '" + study_id + "'");
}

std::size_t Dataset::n_covariates_se() const noexcept { return studies_.front().covariates_se.size(); }
std::size_t Dataset::n_covariates_sp() const noexcept { return studies_.front().covariates_sp.size(); }

CsvResult parse_dataset_csv(std::istream& in, const CsvOptions& options) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  std::vector<StudyRecord> studies;
  std::vector<std::string> warnings;

  std::map<std::string, std::size_t> index;  // lowercase name -> column
  std::optional<std::size_t> c_study, c_tp, c_fp, c_fn, c_tn;
  std::vector<std::size_t> c_cov_se, c_cov_sp;

  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split_csv_line(t);
    if (header.empty()) {
      header = cells;
      for (std::size_t j = 0; j < header.size(); ++j) index[lower(header[j])] = j;
      auto need = [&](const std::string& name) -> std::size_t {
        auto it = index.find(lower(name));
        if (it == index.end()) throw DataError("missing required column", row, name);
        return it->second;
      };
      c_study = need("study");
      c_tp = need("TP");
      c_fp = need("FP");
      c_fn = need("FN");
      c_tn = need("TN");
      auto cov = [&](const std::vector<std::string>& names, std::vector<std::size_t>& out) {
        for (const auto& n : names) out.push_back(need(n));
      };
      cov(options.covariates_se, c_cov_se);
      cov(options.covariates_sp, c_cov_sp);
      std::set<std::size_t> used{*c_study, *c_tp, *c_fp, *c_fn, *c_tn};
      used.insert(c_cov_se.begin(), c_cov_se.end());
      used.insert(c_cov_sp.begin(), c_cov_sp.end());
      for (std::size_t j = 0; j < header.size(); ++j)
        if (!used.count(j)) warnings.push_back("ignoring column '" + header[j] + "'");
      continue;
    }
    if (cells.size() != header.size())
      throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                          std::to_string(cells.size()),
                      row);
    StudyRecord s;
    s.study_id = cells[*c_study];
    if (s.study_id.empty()) throw DataError("empty study id", row, header[*c_study]);
    s.tp = parse_count(cells[*c_tp], row, header[*c_tp]);
    s.fp = parse_count(cells[*c_fp], row, header[*c_fp]);
    s.fn_ = parse_count(cells[*c_fn], row, header[*c_fn]);
    s.tn = parse_count(cells[*c_tn], row, header[*c_tn]);
    for (auto j : c_cov_se) s.covariates_se.push_back(parse_real(cells[j], row, header[j]));
    for (auto j : c_cov_sp) s.covariates_sp.push_back(parse_real(cells[j], row, header[j]));
    for (const auto& prev : studies)
      if (prev.study_id == s.study_id)
        throw DataError("duplicate study id '" + s.study_id + "'", row, header[*c_study]);
    if (s.diseased() < 1) throw DataError("TP + FN must be >= 1", row);
    if (s.non_diseased() < 1) throw DataError("TN + FP must be >= 1", row);
    studies.push_back(std::move(s));
  }
  if (header.empty()) throw DataError("missing header row");
  if (studies.size() < 2) throw DataError("dataset must contain >= 2 studies");
  return CsvResult{Dataset(options.name, std::move(studies)), std::move(warnings)};
}

CsvResult parse_dataset_csv_text(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  return parse_dataset_csv(in, options);
}

Dataset read_dataset_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  auto opts = options;
  if (opts.name == "dataset") opts.name = path;
  return parse_dataset_csv(in, opts).dataset;
}

std::string serialize_dataset_csv(const Dataset& data) {
  std::ostringstream os;
  os << "study,TP,FP,FN,TN";
  for (std::size_t j = 0; j < data.n_covariates_se(); ++j) os << ",se_" << j + 1;
  for (std::size_t j = 0; j < data.n_covariates_sp(); ++j) os << ",sp_" << j + 1;
  os << '\n';
  os.precision(17);
  for (const auto& s : data.studies()) {
    os << s.study_id << ',' << s.tp << ',' << s.fp << ',' << s.fn_ << ',' << s.tn;
    for (double v : s.covariates_se) os << ',' << v;
    for (double v : s.covariates_sp) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

Dataset telomerase_dataset() {
  // study, TP, FP, FN, TN
  auto rec = [](const char* id, std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn) {
    StudyRecord s;
    s.study_id = id;
    s.tp = tp;
    s.fp = fp;
    s.fn_ = fn;
    s.tn = tn;
    return s;
  };
  return Dataset("Telomerase",
                 {rec("Ito", 25, 1, 8, 25), rec("Rahat", 17, 3, 4, 11), rec("Kavaler", 88, 16, 16, 31),
                  rec("Yoshida", 16, 3, 10, 80), rec("Ramakumar", 40, 1, 17, 137),
                  rec("Landman", 38, 6, 9, 24), rec("Kinoshita", 23, 0, 19, 12),
                  rec("Gelmini", 27, 2, 6, 18), rec("Cheng", 14, 3, 3, 29), rec("Cassel", 37, 22, 7, 7)});
}

Dataset swap_arms(const Dataset& data) {
  std::vector<StudyRecord> out;
  out.reserve(data.size());
  for (const auto& s : data.studies()) {
    StudyRecord t = s;
    t.tp = s.tn;
    t.tn = s.tp;
    t.fn_ = s.fp;
    t.fp = s.fn_;
    t.covariates_se = s.covariates_sp;
    t.covariates_sp = s.covariates_se;
    out.push_back(std::move(t));
  }
  return Dataset(data.name() + " (arms swapped)", std::move(out));
}

}  // namespace metadiag

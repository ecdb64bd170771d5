#include "data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rng.hpp"
#include "util.hpp"

namespace densreg {

namespace {

constexpr double kMinStd = 1e-12;

std::string strip_quotes(const std::string& cell) {
  if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
    return cell.substr(1, cell.size() - 2);
  }
  return cell;
}

std::string trim(const std::string& s) {
  size_t begin = 0, end = s.size();
  while (begin < end && (s[begin] == ' ' || s[begin] == '\t' || s[begin] == '\r')) ++begin;
  while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
  return s.substr(begin, end - begin);
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == delimiter) {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

double parse_cell(const std::string& raw, size_t line_number,
                  const std::string& column) {
  const std::string cell = trim(strip_quotes(trim(raw)));
  if (cell.empty()) {
    fail(Status::data_error, "missing value at line " + std::to_string(line_number) +
                                 ", column '" + column + "'");
  }
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    fail(Status::data_error, "non-numeric cell '" + cell + "' at line " +
                                 std::to_string(line_number) + ", column '" +
                                 column + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

TabularDataset take_rows(const TabularDataset& source,
                         const std::vector<size_t>& indices,
                         const std::string& provenance) {
  TabularDataset out;
  out.columns = source.columns;
  out.target_name = source.target_name;
  out.provenance = provenance;
  out.X = Matrix(indices.size(), source.dim());
  out.y.resize(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    for (size_t j = 0; j < source.dim(); ++j) {
      out.X.at(i, j) = source.X.at(indices[i], j);
    }
    out.y[i] = source.y[indices[i]];
  }
  return out;
}

TabularDataset cubic_sample(size_t n, bool ood_shell, double noise_std, Rng& rng,
                            const std::string& provenance) {
  TabularDataset out;
  out.columns = {"x"};
  out.target_name = "y";
  out.provenance = provenance;
  out.X = Matrix(n, 1);
  out.y.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double x;
    if (ood_shell) {
      const double magnitude = rng.uniform(4.0, 7.0);
      x = rng.uniform() < 0.5 ? -magnitude : magnitude;
    } else {
      x = rng.uniform(-4.0, 4.0);
    }
    out.X.at(i, 0) = x;
    out.y[i] = x * x * x + noise_std * rng.normal();
  }
  return out;
}

}  // namespace

ShiftSplit generate_cubic_toy(size_t n_train, size_t n_test, uint64_t seed,
                              double noise_std) {
  if (n_train == 0 || n_test == 0) {
    fail(Status::config_error, "generate_cubic_toy: sample counts must be positive");
  }
  if (noise_std < 0.0) {
    fail(Status::config_error, "generate_cubic_toy: negative noise level");
  }
  Rng root(seed);
  Rng train_rng = root.derive("toy-train");
  Rng iid_rng = root.derive("toy-iid");
  Rng ood_rng = root.derive("toy-ood");
  ShiftSplit split;
  split.train = cubic_sample(n_train, false, noise_std, train_rng, "cubic-toy-train");
  split.iid_test = cubic_sample(n_test, false, noise_std, iid_rng, "cubic-toy-iid");
  split.ood_test = cubic_sample(n_test, true, noise_std, ood_rng, "cubic-toy-ood");
  return split;
}

TabularDataset load_csv(const std::string& path, const std::string& target_column,
                        char delimiter) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail(Status::io_error, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  std::string content = buffer.str();
  if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    content.erase(0, 3);  // UTF-8 byte-order mark
  }

  std::vector<std::string> lines;
  std::string line;
  for (char c : content) {
    if (c == '\n') {
      lines.push_back(line);
      line.clear();
    } else {
      line += c;
    }
  }
  if (!line.empty()) lines.push_back(line);
  if (lines.empty()) fail(Status::data_error, "'" + path + "' is empty");

  std::vector<std::string> header;
  for (const std::string& cell : split(lines[0], delimiter)) {
    header.push_back(strip_quotes(trim(cell)));
  }
  size_t target_index = header.size();
  for (size_t j = 0; j < header.size(); ++j) {
    if (header[j] == target_column) target_index = j;
  }
  if (target_index == header.size()) {
    fail(Status::data_error,
         "target column '" + target_column + "' not found in '" + path + "'");
  }
  if (header.size() < 2) {
    fail(Status::data_error, "'" + path + "' needs at least one feature column");
  }

  TabularDataset out;
  out.target_name = target_column;
  out.provenance = path;
  for (size_t j = 0; j < header.size(); ++j) {
    if (j != target_index) out.columns.push_back(header[j]);
  }

  std::vector<double> features;
  size_t n = 0;
  for (size_t k = 1; k < lines.size(); ++k) {
    if (trim(lines[k]).empty()) continue;  // tolerate blank lines
    const std::vector<std::string> cells = split(lines[k], delimiter);
    if (cells.size() != header.size()) {
      fail(Status::data_error, "line " + std::to_string(k + 1) + " of '" + path +
                                   "' has " + std::to_string(cells.size()) +
                                   " cells, expected " + std::to_string(header.size()));
    }
    for (size_t j = 0; j < cells.size(); ++j) {
      const double value = parse_cell(cells[j], k + 1, header[j]);
      if (j == target_index) {
        out.y.push_back(value);
      } else {
        features.push_back(value);
      }
    }
    ++n;
  }
  if (n == 0) fail(Status::data_error, "'" + path + "' has no data rows");
  out.X = Matrix(n, header.size() - 1);
  out.X.data = std::move(features);
  return out;
}

void save_csv(const TabularDataset& ds, const std::string& path, char delimiter) {
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(Status::io_error, "cannot write '" + path + "'");
  for (const std::string& name : ds.columns) file << name << delimiter;
  file << ds.target_name << "\n";
  for (size_t i = 0; i < ds.rows(); ++i) {
    for (size_t j = 0; j < ds.dim(); ++j) {
      file << format_double(ds.X.at(i, j)) << delimiter;
    }
    file << format_double(ds.y[i]) << "\n";
  }
  if (!file.good()) fail(Status::io_error, "write to '" + path + "' failed");
}

StandardizationStats compute_standardization(const TabularDataset& train) {
  if (train.rows() == 0 || train.dim() == 0) {
    fail(Status::data_error, "compute_standardization: empty dataset");
  }
  const size_t n = train.rows();
  const size_t d = train.dim();
  StandardizationStats stats;
  stats.x_mean.assign(d, 0.0);
  stats.x_std.assign(d, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) stats.x_mean[j] += train.X.at(i, j);
  }
  for (double& m : stats.x_mean) m /= double(n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) {
      const double diff = train.X.at(i, j) - stats.x_mean[j];
      stats.x_std[j] += diff * diff;
    }
  }
  for (double& s : stats.x_std) {
    s = std::sqrt(s / double(n));
    if (!(s > kMinStd)) {
      s = 1.0;
      stats.constant_column = true;
    }
  }
  stats.y_mean = std::accumulate(train.y.begin(), train.y.end(), 0.0) / double(n);
  double yvar = 0.0;
  for (double v : train.y) yvar += (v - stats.y_mean) * (v - stats.y_mean);
  stats.y_std = std::sqrt(yvar / double(n));
  if (!(stats.y_std > kMinStd)) {
    stats.y_std = 1.0;
    stats.constant_column = true;
  }
  return stats;
}

TabularDataset standardize(const TabularDataset& ds,
                           const StandardizationStats& stats) {
  if (ds.dim() != stats.x_mean.size()) {
    fail(Status::invalid_argument, "standardize: dimension mismatch");
  }
  TabularDataset out = ds;
  for (size_t i = 0; i < out.rows(); ++i) {
    for (size_t j = 0; j < out.dim(); ++j) {
      out.X.at(i, j) = (out.X.at(i, j) - stats.x_mean[j]) / stats.x_std[j];
    }
  }
  for (double& v : out.y) v = (v - stats.y_mean) / stats.y_std;
  return out;
}

double standardize_target(double y, const StandardizationStats& stats) {
  return (y - stats.y_mean) / stats.y_std;
}

PredictiveGaussian destandardize_prediction(const PredictiveGaussian& pred,
                                            const StandardizationStats& stats) {
  PredictiveGaussian out;
  out.mean = pred.mean * stats.y_std + stats.y_mean;
  out.variance = pred.variance * stats.y_std * stats.y_std;
  return out;
}

ShiftSplit make_shift_split(const TabularDataset& source_a,
                            const TabularDataset& source_b,
                            double train_fraction, uint64_t seed) {
  if (source_a.columns != source_b.columns ||
      source_a.target_name != source_b.target_name) {
    fail(Status::data_error, "make_shift_split: column schemas differ");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    fail(Status::config_error,
         "make_shift_split: train fraction must lie strictly between 0 and 1");
  }
  const size_t n = source_a.rows();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng = Rng(seed).derive("split");
  shuffle(order, rng);
  const size_t n_train = size_t(std::floor(train_fraction * double(n)));
  if (n_train == 0 || n_train == n) {
    fail(Status::config_error,
         "make_shift_split: fraction leaves an empty train or iid split");
  }
  const std::vector<size_t> train_rows(order.begin(), order.begin() + n_train);
  const std::vector<size_t> iid_rows(order.begin() + n_train, order.end());
  ShiftSplit split;
  split.train = take_rows(source_a, train_rows, source_a.provenance + ":train");
  split.iid_test = take_rows(source_a, iid_rows, source_a.provenance + ":iid");
  split.ood_test = source_b;
  split.ood_test.provenance = source_b.provenance + ":ood";
  return split;
}

}  // namespace densreg

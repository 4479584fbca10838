#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ntsn {

// T x d matrix of observations; one row per time slice.
struct TimeSeriesDataset {
  Eigen::MatrixXd values;  // rows = time, cols = variables
  std::vector<std::string> names;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  int var_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    throw std::runtime_error("unknown variable name: " + name);
  }
};

// Per-column affine transform recorded by standardization.
struct ColumnStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population std
};

inline TimeSeriesDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  TimeSeriesDataset ds;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) ds.names.push_back(cell);
  }
  const std::size_t d = ds.names.size();
  std::vector<double> flat;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw std::runtime_error("non-numeric cell at row " + std::to_string(row) +
                                 ", column " + std::to_string(col));
      }
      if (pos != cell.size())
        throw std::runtime_error("non-numeric cell at row " + std::to_string(row) +
                                 ", column " + std::to_string(col));
      flat.push_back(v);
      ++col;
    }
    if (col != d)
      throw std::runtime_error("ragged row " + std::to_string(row) + ": expected " +
                               std::to_string(d) + " cells, got " + std::to_string(col));
    ++row;
  }
  const std::size_t t = flat.size() / d;
  ds.values.resize(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t c = 0; c < d; ++c)
      ds.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * d + c];
  return ds;
}

inline void save_csv(const TimeSeriesDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write CSV file: " + path);
  out.precision(17);
  for (std::size_t i = 0; i < ds.names.size(); ++i) {
    if (i) out << ',';
    out << ds.names[i];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.cols(); ++c) {
      if (c) out << ',';
      out << ds.values(r, c);
    }
    out << '\n';
  }
}

// Expands the named categorical columns into one-hot binary columns.
// Category order is first appearance in the data; new columns are named
// "<col>=<value>" and replace the original column in place.
inline TimeSeriesDataset one_hot_expand(const TimeSeriesDataset& ds,
                                        const std::vector<std::string>& categorical) {
  std::set<int> cat;
  for (const auto& name : categorical) cat.insert(ds.var_index(name));

  TimeSeriesDataset out;
  std::vector<Eigen::VectorXd> cols;
  for (Eigen::Index c = 0; c < ds.cols(); ++c) {
    if (!cat.count(static_cast<int>(c))) {
      out.names.push_back(ds.names[static_cast<std::size_t>(c)]);
      cols.push_back(ds.values.col(c));
      continue;
    }
    std::vector<double> categories;
    for (Eigen::Index r = 0; r < ds.rows(); ++r) {
      const double v = ds.values(r, c);
      bool seen = false;
      for (double u : categories)
        if (u == v) { seen = true; break; }
      if (!seen) categories.push_back(v);
    }
    for (double u : categories) {
      std::ostringstream name;
      name << ds.names[static_cast<std::size_t>(c)] << '=' << u;
      out.names.push_back(name.str());
      Eigen::VectorXd col(ds.rows());
      for (Eigen::Index r = 0; r < ds.rows(); ++r)
        col(r) = ds.values(r, c) == u ? 1.0 : 0.0;
      cols.push_back(col);
    }
  }
  out.values.resize(ds.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.values.col(static_cast<Eigen::Index>(c)) = cols[c];
  return out;
}

// Rescales every column to mean 0 and population standard deviation 1.
inline std::pair<TimeSeriesDataset, ColumnStats> standardize(const TimeSeriesDataset& ds) {
  if (ds.rows() < 2) throw std::runtime_error("standardize: need at least 2 rows");
  TimeSeriesDataset out = ds;
  ColumnStats stats;
  const double n = static_cast<double>(ds.rows());
  for (Eigen::Index c = 0; c < ds.cols(); ++c) {
    const double mean = ds.values.col(c).mean();
    const double var = (ds.values.col(c).array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd == 0.0)
      throw std::runtime_error("standardize: constant column '" +
                               ds.names[static_cast<std::size_t>(c)] + "'");
    out.values.col(c) = (ds.values.col(c).array() - mean) / sd;
    stats.mean.push_back(mean);
    stats.stddev.push_back(sd);
  }
  return {out, stats};
}

}  // namespace ntsn

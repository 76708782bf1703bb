// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ppctrl {

PiecewiseConstantPolicy::PiecewiseConstantPolicy(std::vector<double> edges,
                                                 Eigen::MatrixXd values)
    : edges_(std::move(edges)), values_(std::move(values)) {
  validate();
}

PiecewiseConstantPolicy PiecewiseConstantPolicy::uniform(double t0, double t1,
                                                         int bins, int dims,
                                                         double value) {
  return from_values(t0, t1, Eigen::MatrixXd::Constant(bins, dims, value));
}

PiecewiseConstantPolicy PiecewiseConstantPolicy::from_values(
    double t0, double t1, Eigen::MatrixXd values) {
  const int bins = static_cast<int>(values.rows());
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  const double width = (t1 - t0) / bins;
  for (int k = 0; k <= bins; ++k) edges[static_cast<std::size_t>(k)] = t0 + k * width;
  edges.back() = t1;
  return PiecewiseConstantPolicy(std::move(edges), std::move(values));
}

bool PiecewiseConstantPolicy::covers(double a, double b) const {
  return !edges_.empty() && t_begin() <= a && b <= t_end();
}

int PiecewiseConstantPolicy::bin_index(double t) const {
  if (t < t_begin() || t >= t_end()) {
    throw std::domain_error("policy: time outside covered span");
  }
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), t);
  return static_cast<int>(it - edges_.begin()) - 1;
}

std::vector<double> PiecewiseConstantPolicy::suffix_bound_factors() const {
  std::vector<double> out(static_cast<std::size_t>(bins()));
  double running = 1.0;
  for (int k = bins() - 1; k >= 0; --k) {
    running = std::max(running, values_.row(k).maxCoeff());
    out[static_cast<std::size_t>(k)] = running;
  }
  return out;
}

void PiecewiseConstantPolicy::validate() const {
  if (edges_.size() < 2) throw std::invalid_argument("policy: needs >= 1 bin");
  if (static_cast<int>(edges_.size()) != bins() + 1) {
    throw std::invalid_argument("policy: edges/values shape mismatch");
  }
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (!(edges_[k] > edges_[k - 1])) {
      throw std::invalid_argument("policy: edges not strictly increasing");
    }
  }
  if (!values_.allFinite() || (values_.array() <= 0.0).any()) {
    throw std::invalid_argument("policy: multipliers must be positive finite");
  }
}

void PiecewiseConstantPolicy::write_csv(std::ostream& out) const {
  out << "bin_start,bin_end,dimension,multiplier\n";
  char buf[128];
  for (int k = 0; k < bins(); ++k) {
    for (int i = 0; i < dims(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d,%.17g\n",
                    edges_[static_cast<std::size_t>(k)],
                    edges_[static_cast<std::size_t>(k) + 1], i, values_(k, i));
      out << buf;
    }
  }
}

void PiecewiseConstantPolicy::write_csv_file(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(f);
}

PiecewiseConstantPolicy PiecewiseConstantPolicy::read_csv_file(
    const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::map<std::pair<double, double>, std::map<int, double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("bin_start", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    std::istringstream row(line);
    std::string a, b, d, v;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') ||
        !std::getline(row, d, ',') || !std::getline(row, v)) {
      throw std::runtime_error("policy csv: malformed row: " + line);
    }
    rows[{std::stod(a), std::stod(b)}][std::stoi(d)] = std::stod(v);
  }
  if (rows.empty()) throw std::runtime_error("policy csv: empty file");
  const int bins = static_cast<int>(rows.size());
  const int dims = static_cast<int>(rows.begin()->second.size());
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(bins) + 1);
  Eigen::MatrixXd values(bins, dims);
  int k = 0;
  for (const auto& [span, by_dim] : rows) {
    if (edges.empty()) edges.push_back(span.first);
    edges.push_back(span.second);
    for (const auto& [dim, mult] : by_dim) values(k, dim) = mult;
    ++k;
  }
  return PiecewiseConstantPolicy(std::move(edges), std::move(values));
}

bool PiecewiseConstantPolicy::operator==(const PiecewiseConstantPolicy& o) const {
  return edges_ == o.edges_ && values_ == o.values_;
}

}  // namespace ppctrl

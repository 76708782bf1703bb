// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace ppctrl {

/// Multiplicative intensity policy, piecewise constant in time: K bins over
/// [edges.front(), edges.back()], one positive multiplier per (bin, dim).
/// Bins are half-open [t_k, t_{k+1}); a time on a boundary belongs to the
/// later bin.
class PiecewiseConstantPolicy {
 public:
  PiecewiseConstantPolicy() = default;
  PiecewiseConstantPolicy(std::vector<double> edges, Eigen::MatrixXd values);

  static PiecewiseConstantPolicy uniform(double t0, double t1, int bins,
                                         int dims, double value = 1.0);
  // Equal-width bins over [t0, t1] with the given K x M values.
  static PiecewiseConstantPolicy from_values(double t0, double t1,
                                             Eigen::MatrixXd values);

  int bins() const { return static_cast<int>(values_.rows()); }
  int dims() const { return static_cast<int>(values_.cols()); }
  double t_begin() const { return edges_.front(); }
  double t_end() const { return edges_.back(); }
  const std::vector<double>& edges() const { return edges_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  bool covers(double a, double b) const;

  // Bin holding t; requires t_begin() <= t < t_end().
  int bin_index(double t) const;
  double value(int dim, double t) const { return values_(bin_index(t), dim); }

  // max(1, largest multiplier in bins k..K-1), for thinning bounds that stay
  // valid across the remaining horizon.
  std::vector<double> suffix_bound_factors() const;

  void validate() const;

  void write_csv(std::ostream& out) const;
  void write_csv_file(const std::string& path) const;
  static PiecewiseConstantPolicy read_csv_file(const std::string& path);

  bool operator==(const PiecewiseConstantPolicy& other) const;

 private:
  std::vector<double> edges_;
  Eigen::MatrixXd values_;
};

}  // namespace ppctrl

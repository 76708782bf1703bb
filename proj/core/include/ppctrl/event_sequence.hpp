// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace ppctrl {

struct Event {
  double time;
  int dim;
};

/// Realization of a multivariate counting process on a window [t0, t1]:
/// per-dimension strictly increasing event times.
class EventSequence {
 public:
  EventSequence() = default;
  EventSequence(int dims, double t0, double t1);

  int dims() const { return static_cast<int>(times_.size()); }
  double t_begin() const { return t0_; }
  double t_end() const { return t1_; }

  const std::vector<double>& times(int dim) const { return times_[dim]; }
  std::size_t total_events() const;

  // Append an event; must respect time ordering within the dimension.
  void append(int dim, double time);

  // Number of events of `dim` with time in [a, b).
  int count_in(int dim, double a, double b) const;

  // All events sorted by (time, dim).
  std::vector<Event> merged() const;
  void merged_into(std::vector<Event>& out) const;

  // Drops all events and resets the window; keeps buffer capacity.
  void reset(int dims, double t0, double t1);

  // Throws std::invalid_argument on ordering or window violations.
  void validate() const;

  void write_csv(std::ostream& out) const;
  void write_csv_file(const std::string& path) const;
  // Window is taken from the existing object; rows must fit it.
  static EventSequence read_csv(std::istream& in, int dims, double t0, double t1);
  static EventSequence read_csv_file(const std::string& path, int dims,
                                     double t0, double t1);

  bool operator==(const EventSequence& other) const = default;

 private:
  double t0_ = 0.0;
  double t1_ = 0.0;
  std::vector<std::vector<double>> times_;
};

}  // namespace ppctrl

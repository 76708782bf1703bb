// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/event_sequence.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ppctrl {

EventSequence::EventSequence(int dims, double t0, double t1)
    : t0_(t0), t1_(t1), times_(static_cast<std::size_t>(dims)) {
  if (dims < 0) throw std::invalid_argument("EventSequence: negative dims");
  if (!(t0 <= t1)) throw std::invalid_argument("EventSequence: t0 > t1");
}

std::size_t EventSequence::total_events() const {
  std::size_t n = 0;
  for (const auto& v : times_) n += v.size();
  return n;
}

void EventSequence::append(int dim, double time) {
  auto& v = times_.at(static_cast<std::size_t>(dim));
  if (!v.empty() && !(time > v.back())) {
    throw std::invalid_argument("EventSequence: non-increasing event time");
  }
  if (time < t0_ || time > t1_) {
    throw std::invalid_argument("EventSequence: event outside window");
  }
  v.push_back(time);
}

int EventSequence::count_in(int dim, double a, double b) const {
  const auto& v = times_.at(static_cast<std::size_t>(dim));
  const auto lo = std::lower_bound(v.begin(), v.end(), a);
  const auto hi = std::lower_bound(lo, v.end(), b);
  return static_cast<int>(hi - lo);
}

void EventSequence::merged_into(std::vector<Event>& out) const {
  out.clear();
  out.reserve(total_events());
  for (int i = 0; i < dims(); ++i) {
    for (double t : times_[static_cast<std::size_t>(i)]) out.push_back({t, i});
  }
  std::sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.dim < b.dim;
  });
}

std::vector<Event> EventSequence::merged() const {
  std::vector<Event> out;
  merged_into(out);
  return out;
}

void EventSequence::reset(int dims, double t0, double t1) {
  if (!(t0 <= t1)) throw std::invalid_argument("EventSequence: t0 > t1");
  t0_ = t0;
  t1_ = t1;
  times_.resize(static_cast<std::size_t>(dims));
  for (auto& v : times_) v.clear();
}

void EventSequence::validate() const {
  for (const auto& v : times_) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v[k] < t0_ || v[k] > t1_) {
        throw std::invalid_argument("EventSequence: event outside window");
      }
      if (k > 0 && !(v[k] > v[k - 1])) {
        throw std::invalid_argument("EventSequence: times not strictly increasing");
      }
    }
  }
}

void EventSequence::write_csv(std::ostream& out) const {
  out << "dimension,time\n";
  char buf[64];
  for (const Event& e : merged()) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", e.dim, e.time);
    out << buf;
  }
}

void EventSequence::write_csv_file(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(f);
}

EventSequence EventSequence::read_csv(std::istream& in, int dims, double t0,
                                      double t1) {
  EventSequence seq(dims, t0, t1);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("dimension", 0) == 0) continue;
    }
    std::istringstream row(line);
    std::string dim_str, time_str;
    if (!std::getline(row, dim_str, ',') || !std::getline(row, time_str)) {
      throw std::runtime_error("events csv: malformed row: " + line);
    }
    seq.append(std::stoi(dim_str), std::stod(time_str));
  }
  seq.validate();
  return seq;
}

EventSequence EventSequence::read_csv_file(const std::string& path, int dims,
                                           double t0, double t1) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_csv(f, dims, t0, t1);
}

}  // namespace ppctrl

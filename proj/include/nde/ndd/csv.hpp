#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "nde/ndd/trajectory.hpp"

namespace nde::ndd {

// Column order of the trajectory CSV. Numbers are written in shortest
// round-trip form so a write/read cycle is lossless.
inline constexpr std::string_view kTrajectoryHeader =
    "time,vehicle_id,lane_id,x,v,accel,lead_id,range,range_rate,"
    "dist_left_marking,dist_right_marking,has_left_lane,has_right_lane,"
    "left_lead_id,left_lead_range,left_lead_range_rate,"
    "left_rear_id,left_rear_range,left_rear_range_rate,"
    "right_lead_id,right_lead_range,right_lead_range_rate,"
    "right_rear_id,right_rear_range,right_rear_range_rate";

inline constexpr std::size_t kTrajectoryColumns = 25;

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& where, std::size_t line, const std::string& what)
      : std::runtime_error(where + ":" + std::to_string(line) + ": " + what) {}
};

namespace detail {

template <typename T>
T parse_field(std::string_view f, const std::string& where, std::size_t line) {
  T value{};
  const auto* end = f.data() + f.size();
  auto [ptr, ec] = std::from_chars(f.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw CsvError(where, line, "cannot parse field '" + std::string(f) + "'");
  }
  return value;
}

inline void append_slot(std::string& out, const NeighborSlot& s) {
  fmt::format_to(std::back_inserter(out), ",{},{},{}", s.id, s.range, s.range_rate);
}

}  // namespace detail

inline void format_record(std::string& out, const TrajectoryRecord& r) {
  fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{},{},{},{},{},{},{},{}", r.time,
                 r.vehicle_id, r.lane_id, r.x, r.v, r.accel, r.lead_id, r.range, r.range_rate,
                 r.dist_left_marking, r.dist_right_marking, r.has_left_lane ? 1 : 0,
                 r.has_right_lane ? 1 : 0);
  detail::append_slot(out, r.left_lead);
  detail::append_slot(out, r.left_rear);
  detail::append_slot(out, r.right_lead);
  detail::append_slot(out, r.right_rear);
  out.push_back('\n');
}

inline TrajectoryRecord parse_record(std::string_view line, const std::string& where,
                                     std::size_t lineno) {
  std::string_view f[kTrajectoryColumns];
  std::size_t n = 0;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (n == kTrajectoryColumns) {
      throw CsvError(where, lineno, "too many columns");
    }
    f[n++] = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                : comma - start);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (n != kTrajectoryColumns) {
    throw CsvError(where, lineno,
                   "expected " + std::to_string(kTrajectoryColumns) + " columns, got " +
                       std::to_string(n));
  }
  using detail::parse_field;
  TrajectoryRecord r;
  r.time = parse_field<double>(f[0], where, lineno);
  r.vehicle_id = parse_field<std::int64_t>(f[1], where, lineno);
  r.lane_id = parse_field<int>(f[2], where, lineno);
  r.x = parse_field<double>(f[3], where, lineno);
  r.v = parse_field<double>(f[4], where, lineno);
  r.accel = parse_field<double>(f[5], where, lineno);
  r.lead_id = parse_field<std::int64_t>(f[6], where, lineno);
  r.range = parse_field<double>(f[7], where, lineno);
  r.range_rate = parse_field<double>(f[8], where, lineno);
  r.dist_left_marking = parse_field<double>(f[9], where, lineno);
  r.dist_right_marking = parse_field<double>(f[10], where, lineno);
  r.has_left_lane = parse_field<int>(f[11], where, lineno) != 0;
  r.has_right_lane = parse_field<int>(f[12], where, lineno) != 0;
  NeighborSlot* slots[4] = {&r.left_lead, &r.left_rear, &r.right_lead, &r.right_rear};
  for (std::size_t k = 0; k < 4; ++k) {
    slots[k]->id = parse_field<std::int64_t>(f[13 + 3 * k], where, lineno);
    slots[k]->range = parse_field<double>(f[14 + 3 * k], where, lineno);
    slots[k]->range_rate = parse_field<double>(f[15 + 3 * k], where, lineno);
  }
  return r;
}

/// Streams records out of a trajectory CSV without loading the whole file.
class TrajectoryCsvReader {
 public:
  explicit TrajectoryCsvReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw std::runtime_error("cannot open trajectory file '" + path + "'");
    std::string header;
    for (;;) {
      if (!std::getline(in_, header)) throw CsvError(path_, line_ + 1, "missing header");
      ++line_;
      strip_cr(header);
      if (header.rfind("# ", 0) != 0) break;
      const auto colon = header.find(": ", 2);
      if (colon != std::string::npos) {
        metadata_.emplace_back(header.substr(2, colon - 2), header.substr(colon + 2));
      }
    }
    if (header != kTrajectoryHeader) throw CsvError(path_, line_, "unexpected header");
  }

  // "# key: value" lines preceding the header, in file order.
  const std::vector<std::pair<std::string, std::string>>& metadata() const { return metadata_; }

  bool next(TrajectoryRecord& out) {
    std::string buf;
    while (std::getline(in_, buf)) {
      ++line_;
      strip_cr(buf);
      if (buf.empty()) continue;
      out = parse_record(buf, path_, line_);
      return true;
    }
    return false;
  }

 private:
  static void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  }

  std::string path_;
  std::ifstream in_;
  std::size_t line_ = 0;
  std::vector<std::pair<std::string, std::string>> metadata_;
};

class TrajectoryCsvWriter {
 public:
  explicit TrajectoryCsvWriter(const std::string& path,
                               const std::vector<std::pair<std::string, std::string>>& metadata = {})
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot write trajectory file '" + path + "'");
    for (const auto& [k, v] : metadata) {
      buf_.append("# ").append(k).append(": ").append(v).push_back('\n');
    }
    buf_.append(kTrajectoryHeader);
    buf_.push_back('\n');
  }
  ~TrajectoryCsvWriter() {
    try {
      close();
    } catch (...) {
    }
  }
  TrajectoryCsvWriter(const TrajectoryCsvWriter&) = delete;
  TrajectoryCsvWriter& operator=(const TrajectoryCsvWriter&) = delete;

  void write(const TrajectoryRecord& r) {
    format_record(buf_, r);
    ++rows_;
    if (buf_.size() > (1u << 20)) flush();
  }
  void write(const std::vector<TrajectoryRecord>& rs) {
    for (const auto& r : rs) write(r);
  }

  std::uint64_t rows() const { return rows_; }

  void close() {
    if (!out_.is_open()) return;
    flush();
    out_.close();
    if (out_.fail()) throw std::runtime_error("failed writing '" + path_ + "'");
  }

 private:
  void flush() {
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
    if (!out_) throw std::runtime_error("failed writing '" + path_ + "'");
  }

  std::string path_;
  std::ofstream out_;
  std::string buf_;
  std::uint64_t rows_ = 0;
};

inline std::vector<TrajectoryRecord> read_trajectory_csv(const std::string& path) {
  TrajectoryCsvReader reader(path);
  std::vector<TrajectoryRecord> out;
  TrajectoryRecord r;
  while (reader.next(r)) out.push_back(r);
  return out;
}

inline void write_trajectory_csv(const std::string& path,
                                 const std::vector<TrajectoryRecord>& records) {
  TrajectoryCsvWriter w(path);
  w.write(records);
  w.close();
}

}  // namespace nde::ndd

// Copyright 2026 The psipfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psipfl::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" for
/// a literal quote; a trailing '\r' is dropped.
std::vector<std::string> split_record(std::string_view line);

/// Strict decimal parse of a whole cell (surrounding spaces allowed).
std::optional<double> parse_double(std::string_view cell);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Line-oriented writer with a fixed header; fields are written as given.
class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::size_t width_;
};

/// Reads a headered file produced by Writer (or any simple CSV).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws IngestionError
};
Table read_table(const std::filesystem::path& path);

}  // namespace psipfl::csv

#pragma once

// Timestamp files. Binary: a sequence of 9-byte records, u8 detector id (1..6) followed
// by the u64 picosecond time, both little-endian, no header. CSV: header
// "detector,time_ps" then one "D<n>,<ps>" line per record.

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "fbqkd/types.hpp"

namespace fbqkd {

void write_records_binary(std::ostream& os, const std::vector<TimestampRecord>& records);
std::vector<TimestampRecord> read_records_binary(std::istream& is);

void write_records_csv(std::ostream& os, const std::vector<TimestampRecord>& records);
std::vector<TimestampRecord> read_records_csv(std::istream& is);

/// Picks the format from the extension: ".csv" is CSV, anything else binary.
void save_records(const std::filesystem::path& path, const std::vector<TimestampRecord>& records);
std::vector<TimestampRecord> load_records(const std::filesystem::path& path);

}  // namespace fbqkd

#include "fbqkd/records_io.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "fbqkd/error.hpp"

namespace fbqkd {

void write_records_binary(std::ostream& os, const std::vector<TimestampRecord>& records) {
  std::array<char, 9> buf;
  for (const auto& r : records) {
    if (r.time_ps < 0) throw InvalidArgument("negative timestamps cannot be written");
    buf[0] = static_cast<char>(static_cast<std::uint8_t>(r.detector));
    auto t = static_cast<std::uint64_t>(r.time_ps);
    for (int i = 0; i < 8; ++i) buf[1 + i] = static_cast<char>((t >> (8 * i)) & 0xff);
    os.write(buf.data(), buf.size());
  }
}

std::vector<TimestampRecord> read_records_binary(std::istream& is) {
  std::vector<TimestampRecord> out;
  std::array<unsigned char, 9> buf;
  while (true) {
    is.read(reinterpret_cast<char*>(buf.data()), buf.size());
    const auto got = is.gcount();
    if (got == 0) break;
    if (got != 9) throw InvalidArgument("truncated binary timestamp record");
    if (buf[0] < 1 || buf[0] > kNumDetectors) {
      throw InvalidArgument("invalid detector id " + std::to_string(buf[0]));
    }
    std::uint64_t t = 0;
    for (int i = 0; i < 8; ++i) t |= static_cast<std::uint64_t>(buf[1 + i]) << (8 * i);
    if (t > static_cast<std::uint64_t>(INT64_MAX)) throw InvalidArgument("timestamp overflow");
    out.push_back({static_cast<DetectorId>(buf[0]), static_cast<std::int64_t>(t)});
  }
  return out;
}

void write_records_csv(std::ostream& os, const std::vector<TimestampRecord>& records) {
  os << "detector,time_ps\n";
  for (const auto& r : records) os << detector_name(r.detector) << ',' << r.time_ps << '\n';
}

std::vector<TimestampRecord> read_records_csv(std::istream& is) {
  std::vector<TimestampRecord> out;
  std::string line;
  if (!std::getline(is, line)) return out;
  if (line.rfind("detector,time_ps", 0) != 0) {
    throw InvalidArgument("timestamp CSV must start with 'detector,time_ps'");
  }
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw InvalidArgument("malformed timestamp line " + std::to_string(line_no));
    }
    auto det = parse_detector(std::string_view(line).substr(0, comma));
    if (!det) throw InvalidArgument("unknown detector on line " + std::to_string(line_no));
    std::size_t used = 0;
    long long t = 0;
    try {
      t = std::stoll(line.substr(comma + 1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || comma + 1 + used != line.size() || t < 0) {
      throw InvalidArgument("bad timestamp on line " + std::to_string(line_no));
    }
    out.push_back({*det, t});
  }
  return out;
}

void save_records(const std::filesystem::path& path, const std::vector<TimestampRecord>& records) {
  const bool csv = path.extension() == ".csv";
  std::ofstream os(path, csv ? std::ios::out : std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  if (csv) {
    write_records_csv(os, records);
  } else {
    write_records_binary(os, records);
  }
  if (!os) throw Error("write failed for " + path.string());
}

std::vector<TimestampRecord> load_records(const std::filesystem::path& path) {
  const bool csv = path.extension() == ".csv";
  std::ifstream is(path, csv ? std::ios::in : std::ios::binary);
  if (!is) throw Error("cannot read " + path.string());
  return csv ? read_records_csv(is) : read_records_binary(is);
}

}  // namespace fbqkd

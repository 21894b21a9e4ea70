#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "jpo/errors.hpp"
#include "jpo/readout_experiment.hpp"

namespace jpo {

static_assert(std::endian::native == std::endian::little,
              "records I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'J', 'P', 'O', 'R', 'E', 'C', '1', '\0'};

template <typename T>
void put(std::ostream& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw AnalysisError("records file is truncated");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

constexpr const char* kTextHeader =
    "shot_index prepared true_state fault_flags decay_time_s v_i_V v_q_V v_abs_V signal_i_V "
    "signal_q_V signal_abs_V classified";

}  // namespace

void write_records_binary(std::ostream& out, std::span<const ReadoutCycleRecord> records) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, records.size());
  for (const auto& r : records) {
    put(out, r.shot_index);
    put(out, r.prepared);
    put(out, r.true_state);
    put(out, r.fault_flags);
    put(out, r.decay_time);
    put(out, r.v_i);
    put(out, r.v_q);
    put(out, r.v_abs);
    put(out, r.signal_i);
    put(out, r.signal_q);
    put(out, r.signal_abs);
    put(out, r.classified);
  }
}

std::vector<ReadoutCycleRecord> read_records_binary(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw AnalysisError("not a records file (bad magic)");
  }
  const auto count = get<std::uint64_t>(in);
  std::vector<ReadoutCycleRecord> records;
  records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t k = 0; k < count; ++k) {
    ReadoutCycleRecord r;
    r.shot_index = get<std::uint64_t>(in);
    r.prepared = get<std::uint8_t>(in);
    r.true_state = get<std::uint8_t>(in);
    r.fault_flags = get<std::uint8_t>(in);
    r.decay_time = get<double>(in);
    r.v_i = get<double>(in);
    r.v_q = get<double>(in);
    r.v_abs = get<double>(in);
    r.signal_i = get<double>(in);
    r.signal_q = get<double>(in);
    r.signal_abs = get<double>(in);
    r.classified = get<std::uint8_t>(in);
    records.push_back(r);
  }
  return records;
}

void write_records_text(std::ostream& out, std::span<const ReadoutCycleRecord> records) {
  out << "# " << kTextHeader << '\n';
  out << std::setprecision(17);
  for (const auto& r : records) {
    out << r.shot_index << ' ' << int{r.prepared} << ' ' << int{r.true_state} << ' '
        << int{r.fault_flags} << ' ';
    if (std::isinf(r.decay_time)) {
      out << "inf";
    } else {
      out << r.decay_time;
    }
    out << ' ' << r.v_i << ' ' << r.v_q << ' ' << r.v_abs << ' ' << r.signal_i << ' '
        << r.signal_q << ' ' << r.signal_abs << ' ' << int{r.classified} << '\n';
  }
}

std::vector<ReadoutCycleRecord> read_records_text(std::istream& in) {
  std::vector<ReadoutCycleRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    ReadoutCycleRecord r;
    unsigned prepared = 0, true_state = 0, flags = 0, classified = 0;
    std::string decay;
    if (!(row >> r.shot_index >> prepared >> true_state >> flags >> decay >> r.v_i >> r.v_q >>
          r.v_abs >> r.signal_i >> r.signal_q >> r.signal_abs >> classified)) {
      throw AnalysisError("records text line " + std::to_string(line_no) + " is malformed");
    }
    r.prepared = static_cast<std::uint8_t>(prepared);
    r.true_state = static_cast<std::uint8_t>(true_state);
    r.fault_flags = static_cast<std::uint8_t>(flags);
    r.classified = static_cast<std::uint8_t>(classified);
    r.decay_time = decay == "inf" ? std::numeric_limits<double>::infinity() : std::stod(decay);
    records.push_back(r);
  }
  return records;
}

}  // namespace jpo

#include "ecgbench/edf.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ecgbench/error.hpp"

namespace ecgbench::edf {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(' ');
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(' ');
  return std::string(s.substr(b, e - b + 1));
}

class FieldReader {
 public:
  explicit FieldReader(std::span<const char> bytes) : bytes_(bytes) {}

  std::string text(std::size_t width) {
    if (pos_ + width > bytes_.size())
      throw Error(ErrorCode::kMalformedHeader, "header ends early");
    std::string_view field(bytes_.data() + pos_, width);
    pos_ += width;
    return trim(field);
  }

  long integer(std::size_t width, const char* name) {
    auto s = text(width);
    long value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw Error(ErrorCode::kMalformedHeader,
                  std::string("bad integer field ") + name + ": '" + s + "'");
    return value;
  }

  double real(std::size_t width, const char* name) {
    auto s = text(width);
    char* end = nullptr;
    double value = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(value))
      throw Error(ErrorCode::kMalformedHeader,
                  std::string("bad numeric field ") + name + ": '" + s + "'");
    return value;
  }

  std::size_t position() const { return pos_; }

 private:
  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

void put_field(Bytes& out, std::string_view value, std::size_t width) {
  std::string field(value.substr(0, width));
  for (char& c : field)
    if (static_cast<unsigned char>(c) < 32 || static_cast<unsigned char>(c) > 126) c = '_';
  field.resize(width, ' ');
  out.insert(out.end(), field.begin(), field.end());
}

// Shortest representation of `value` that fits in `width` characters.
std::string format_number(double value, std::size_t width) {
  char buf[64];
  for (int precision = 10; precision >= 1; --precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strlen(buf) <= width) return buf;
  }
  throw Error(ErrorCode::kInvalidArgument, "number does not fit EDF field");
}

std::string format_seconds(double seconds) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10f", seconds);
  std::string s(buf);
  s.erase(s.find_last_not_of('0') + 1);
  if (s.back() == '.') s.pop_back();
  return s;
}

std::string sanitize_token(std::string_view s) {
  std::string out(s.empty() ? std::string_view("X") : s);
  std::replace(out.begin(), out.end(), ' ', '_');
  return out;
}

struct Gap {
  double onset;
  double duration;
};

std::vector<Gap> parse_annotations(std::span<const std::int16_t> raw) {
  std::string bytes;
  bytes.reserve(raw.size() * 2);
  for (auto v : raw) {
    auto u = static_cast<std::uint16_t>(v);
    bytes.push_back(static_cast<char>(u & 0xff));
    bytes.push_back(static_cast<char>(u >> 8));
  }
  std::vector<Gap> gaps;
  std::size_t i = 0;
  while (i < bytes.size()) {
    if (bytes[i] == '\0') {
      ++i;
      continue;
    }
    auto end = bytes.find('\0', i);
    if (end == std::string::npos) end = bytes.size();
    std::string tal = bytes.substr(i, end - i);
    i = end + 1;

    // TAL: onset [\x15 duration] \x14 text \x14 [text \x14 ...]
    auto first = tal.find('\x14');
    if (first == std::string::npos) continue;
    std::string timing = tal.substr(0, first);
    double onset = 0.0, duration = 0.0;
    auto dur_sep = timing.find('\x15');
    onset = std::strtod(timing.substr(0, dur_sep).c_str(), nullptr);
    if (dur_sep != std::string::npos)
      duration = std::strtod(timing.substr(dur_sep + 1).c_str(), nullptr);

    std::size_t pos = first + 1;
    while (pos < tal.size()) {
      auto next = tal.find('\x14', pos);
      if (next == std::string::npos) next = tal.size();
      std::string text = tal.substr(pos, next - pos);
      std::transform(text.begin(), text.end(), text.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (duration > 0 && (text == kGapAnnotation || text == "gap"))
        gaps.push_back({onset, duration});
      pos = next + 1;
    }
  }
  return gaps;
}

}  // namespace

std::size_t Header::record_bytes() const {
  std::size_t total = 0;
  for (const auto& s : signals)
    total += 2 * static_cast<std::size_t>(s.samples_per_record);
  return total;
}

File parse(std::span<const char> bytes) {
  if (bytes.size() < kFixedHeaderBytes)
    throw Error(ErrorCode::kMalformedHeader, "file shorter than fixed header");
  FieldReader r(bytes);
  File file;
  Header& h = file.header;
  h.version = r.text(8);
  if (h.version != "0")
    throw Error(ErrorCode::kMalformedHeader, "version field is not '0'");
  h.patient_id = r.text(80);
  h.recording_id = r.text(80);
  h.start_date = r.text(8);
  h.start_time = r.text(8);
  const long header_bytes = r.integer(8, "header bytes");
  h.reserved = r.text(44);
  h.num_records = r.integer(8, "number of records");
  h.record_duration = r.real(8, "record duration");
  const long ns = r.integer(4, "signal count");
  if (ns < 1) throw Error(ErrorCode::kMalformedHeader, "no signals");
  if (header_bytes != static_cast<long>(kFixedHeaderBytes + kSignalHeaderBytes * ns))
    throw Error(ErrorCode::kMalformedHeader, "header byte count mismatch");
  if (bytes.size() < static_cast<std::size_t>(header_bytes))
    throw Error(ErrorCode::kMalformedHeader, "signal headers truncated");
  if (h.num_records < 0)
    throw Error(ErrorCode::kUnsupportedFeature, "unknown record count");
  if (h.record_duration <= 0)
    throw Error(ErrorCode::kUnsupportedFeature, "non-positive record duration");

  h.signals.resize(ns);
  for (auto& s : h.signals) s.label = r.text(16);
  for (auto& s : h.signals) s.transducer = r.text(80);
  for (auto& s : h.signals) s.physical_dimension = r.text(8);
  for (auto& s : h.signals) s.physical_min = r.real(8, "physical min");
  for (auto& s : h.signals) s.physical_max = r.real(8, "physical max");
  for (auto& s : h.signals) s.digital_min = static_cast<int>(r.integer(8, "digital min"));
  for (auto& s : h.signals) s.digital_max = static_cast<int>(r.integer(8, "digital max"));
  for (auto& s : h.signals) s.prefilter = r.text(80);
  for (auto& s : h.signals) s.samples_per_record = static_cast<int>(r.integer(8, "samples per record"));
  for (long i = 0; i < ns; ++i) r.text(32);

  for (const auto& s : h.signals) {
    if (s.samples_per_record <= 0)
      throw Error(ErrorCode::kMalformedHeader, "non-positive samples per record");
    if (!(s.physical_min < s.physical_max) && !s.is_annotation())
      throw Error(ErrorCode::kMalformedHeader, "physical min >= max for " + s.label);
    if (!(s.digital_min < s.digital_max))
      throw Error(ErrorCode::kMalformedHeader, "digital min >= max for " + s.label);
  }

  const std::size_t payload = h.record_bytes() * static_cast<std::size_t>(h.num_records);
  if (bytes.size() < static_cast<std::size_t>(header_bytes) + payload)
    throw Error(ErrorCode::kTruncatedPayload,
                "declared " + std::to_string(payload) + " payload bytes, found " +
                    std::to_string(bytes.size() - header_bytes));

  file.digital.resize(ns);
  for (long s = 0; s < ns; ++s)
    file.digital[s].reserve(static_cast<std::size_t>(h.signals[s].samples_per_record) *
                            h.num_records);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + header_bytes;
  for (long rec = 0; rec < h.num_records; ++rec) {
    for (long s = 0; s < ns; ++s) {
      for (int k = 0; k < h.signals[s].samples_per_record; ++k, p += 2) {
        file.digital[s].push_back(static_cast<std::int16_t>(
            static_cast<std::uint16_t>(p[0] | (p[1] << 8))));
      }
    }
  }
  return file;
}

Bytes serialize(const File& file) {
  const Header& h = file.header;
  const auto ns = h.signals.size();
  if (ns == 0 || file.digital.size() != ns)
    throw Error(ErrorCode::kInvalidArgument, "signal/payload count mismatch");
  for (std::size_t s = 0; s < ns; ++s) {
    if (file.digital[s].size() !=
        static_cast<std::size_t>(h.signals[s].samples_per_record) * h.num_records)
      throw Error(ErrorCode::kInvalidArgument, "payload length mismatch");
  }

  Bytes out;
  out.reserve(h.header_bytes() + h.record_bytes() * h.num_records);
  put_field(out, h.version, 8);
  put_field(out, h.patient_id, 80);
  put_field(out, h.recording_id, 80);
  put_field(out, h.start_date, 8);
  put_field(out, h.start_time, 8);
  put_field(out, std::to_string(h.header_bytes()), 8);
  put_field(out, h.reserved, 44);
  put_field(out, std::to_string(h.num_records), 8);
  put_field(out, format_number(h.record_duration, 8), 8);
  put_field(out, std::to_string(ns), 4);
  for (const auto& s : h.signals) put_field(out, s.label, 16);
  for (const auto& s : h.signals) put_field(out, s.transducer, 80);
  for (const auto& s : h.signals) put_field(out, s.physical_dimension, 8);
  for (const auto& s : h.signals) put_field(out, format_number(s.physical_min, 8), 8);
  for (const auto& s : h.signals) put_field(out, format_number(s.physical_max, 8), 8);
  for (const auto& s : h.signals) put_field(out, std::to_string(s.digital_min), 8);
  for (const auto& s : h.signals) put_field(out, std::to_string(s.digital_max), 8);
  for (const auto& s : h.signals) put_field(out, s.prefilter, 80);
  for (const auto& s : h.signals) put_field(out, std::to_string(s.samples_per_record), 8);
  for (std::size_t s = 0; s < ns; ++s) put_field(out, "", 32);

  for (long rec = 0; rec < h.num_records; ++rec) {
    for (std::size_t s = 0; s < ns; ++s) {
      const auto spr = static_cast<std::size_t>(h.signals[s].samples_per_record);
      const auto* src = file.digital[s].data() + rec * spr;
      for (std::size_t k = 0; k < spr; ++k) {
        auto u = static_cast<std::uint16_t>(src[k]);
        out.push_back(static_cast<char>(u & 0xff));
        out.push_back(static_cast<char>(u >> 8));
      }
    }
  }
  return out;
}

EcgRecording read_edf(std::span<const char> bytes) {
  File file = parse(bytes);
  const Header& h = file.header;

  int chosen = -1;
  for (std::size_t s = 0; s < h.signals.size() && chosen < 0; ++s) {
    std::string label = h.signals[s].label;
    std::transform(label.begin(), label.end(), label.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    if (!h.signals[s].is_annotation() && label.find("ECG") != std::string::npos)
      chosen = static_cast<int>(s);
  }
  for (std::size_t s = 0; s < h.signals.size() && chosen < 0; ++s)
    if (!h.signals[s].is_annotation()) chosen = static_cast<int>(s);
  if (chosen < 0)
    throw Error(ErrorCode::kUnsupportedFeature, "no ordinary signal in file");

  const SignalHeader& sig = h.signals[chosen];
  const double rate = sig.samples_per_record / h.record_duration;
  const double rounded = std::round(rate);
  if (std::abs(rate - rounded) > 1e-9 * std::max(1.0, rate) || rounded < 1)
    throw Error(ErrorCode::kUnsupportedFeature,
                "non-integer sample rate " + std::to_string(rate));

  const auto& raw = file.digital[chosen];
  Signal samples(static_cast<Eigen::Index>(raw.size()));
  const double scale = (sig.physical_max - sig.physical_min) /
                       (sig.digital_max - sig.digital_min);
  for (std::size_t i = 0; i < raw.size(); ++i)
    samples[i] = (raw[i] - sig.digital_min) * scale + sig.physical_min;

  EcgRecording rec = make_recording(std::move(samples), static_cast<int>(rounded));

  std::istringstream patient(h.patient_id);
  std::string token;
  if (patient >> token && token != "X") rec.subject_id = token;
  std::istringstream recording(h.recording_id);
  while (recording >> token) {
    if (token.rfind("day=", 0) == 0) rec.day_index = std::atoi(token.c_str() + 4);
  }
  int hh = 0, mm = 0, ss = 0;
  if (std::sscanf(h.start_time.c_str(), "%d.%d.%d", &hh, &mm, &ss) == 3)
    rec.start_offset = hh * 3600.0 + mm * 60.0 + ss;

  for (std::size_t s = 0; s < h.signals.size(); ++s) {
    if (!h.signals[s].is_annotation()) continue;
    for (const Gap& gap : parse_annotations(file.digital[s])) {
      auto begin = static_cast<Eigen::Index>(std::llround(gap.onset * rec.sample_rate));
      auto end = static_cast<Eigen::Index>(
          std::llround((gap.onset + gap.duration) * rec.sample_rate));
      begin = std::clamp<Eigen::Index>(begin, 0, rec.size());
      end = std::clamp<Eigen::Index>(end, begin, rec.size());
      std::fill(rec.validity.begin() + begin, rec.validity.begin() + end, 0);
    }
  }
  return rec;
}

Bytes write_edf(const EcgRecording& recording, const WriteOptions& options) {
  check_well_formed(recording);
  if (recording.size() == 0)
    throw Error(ErrorCode::kEmptyRecording, "cannot write an empty recording");
  if (!(options.physical_min < options.physical_max))
    throw Error(ErrorCode::kInvalidArgument, "physical range is empty");

  const int fs = recording.sample_rate;
  const Eigen::Index n = recording.size();
  const long num_records = static_cast<long>((n + fs - 1) / fs);
  const Eigen::Index padded = static_cast<Eigen::Index>(num_records) * fs;

  File file;
  Header& h = file.header;
  h.patient_id = sanitize_token(recording.subject_id) + " X X X";
  h.recording_id = "Startdate X X X day=" + std::to_string(recording.day_index);
  {
    auto secs = static_cast<long>(std::floor(std::max(0.0, recording.start_offset)));
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02ld.%02ld.%02ld", (secs / 3600) % 100,
                  (secs / 60) % 60, secs % 60);
    h.start_time = buf;
  }
  h.num_records = num_records;
  h.record_duration = 1.0;

  SignalHeader ecg;
  ecg.label = "ECG";
  ecg.physical_dimension = "mV";
  ecg.physical_min = options.physical_min;
  ecg.physical_max = options.physical_max;
  ecg.samples_per_record = fs;
  h.signals.push_back(ecg);

  std::vector<std::int16_t> digital(static_cast<std::size_t>(padded), 0);
  const double range = options.physical_max - options.physical_min;
  const double dspan = static_cast<double>(ecg.digital_max) - ecg.digital_min;
  const auto zero_code = static_cast<std::int16_t>(
      std::lround((0.0 - options.physical_min) / range * dspan + ecg.digital_min));
  for (Eigen::Index i = 0; i < padded; ++i) {
    if (i >= n) {
      digital[i] = zero_code;
      continue;
    }
    const double x = recording.samples[i];
    if (!std::isfinite(x) || x < options.physical_min || x > options.physical_max)
      throw Error(ErrorCode::kAmplitudeOverflow,
                  "sample " + std::to_string(i) + " = " + std::to_string(x) +
                      " mV outside physical range");
    digital[i] = static_cast<std::int16_t>(
        std::lround((x - options.physical_min) / range * dspan + ecg.digital_min));
  }
  file.digital.push_back(std::move(digital));

  // Gap runs (including padding) become EDF+ annotations.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> gaps;
  for (Eigen::Index i = 0; i < padded;) {
    const bool valid = i < n && recording.validity[i];
    if (valid) {
      ++i;
      continue;
    }
    Eigen::Index j = i;
    while (j < padded && !(j < n && recording.validity[j])) ++j;
    gaps.emplace_back(i, j);
    i = j;
  }

  if (!gaps.empty()) {
    h.reserved = "EDF+C";
    std::vector<std::string> per_record(static_cast<std::size_t>(num_records));
    for (long rec = 0; rec < num_records; ++rec)
      per_record[rec] = "+" + std::to_string(rec) + "\x14\x14" + std::string(1, '\0');
    for (auto [b, e] : gaps) {
      const long rec = static_cast<long>(b / fs);
      per_record[rec] += "+" + format_seconds(static_cast<double>(b) / fs) + "\x15" +
                         format_seconds(static_cast<double>(e - b) / fs) + "\x14" +
                         kGapAnnotation + "\x14" + std::string(1, '\0');
    }
    std::size_t max_bytes = 0;
    for (const auto& s : per_record) max_bytes = std::max(max_bytes, s.size());
    max_bytes += max_bytes % 2;

    SignalHeader ann;
    ann.label = kAnnotationsLabel;
    ann.physical_min = -1;
    ann.physical_max = 1;
    ann.samples_per_record = static_cast<int>(max_bytes / 2);
    h.signals.push_back(ann);

    std::vector<std::int16_t> raw;
    raw.reserve(max_bytes / 2 * num_records);
    for (auto& s : per_record) {
      s.resize(max_bytes, '\0');
      for (std::size_t k = 0; k < max_bytes; k += 2) {
        auto lo = static_cast<unsigned char>(s[k]);
        auto hi = static_cast<unsigned char>(s[k + 1]);
        raw.push_back(static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8))));
      }
    }
    file.digital.push_back(std::move(raw));
  }
  return serialize(file);
}

EcgRecording read_edf_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_edf(bytes);
}

void write_edf_file(const std::filesystem::path& path, const EcgRecording& recording,
                    const WriteOptions& options) {
  Bytes bytes = write_edf(recording, options);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace ecgbench::edf

#include "fdce/dataset_io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

namespace fdce {

namespace {

using nlohmann::json;

class Writer {
 public:
  template <class T>
  void put(T v) {
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>) {
      bits = std::bit_cast<std::uint64_t>(v);
    } else {
      bits = static_cast<std::uint64_t>(v);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  void raw(std::string_view s) { buf_.append(s); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : buf_(std::move(bytes)) {}

  template <class T>
  T get(const char* field) {
    if (pos_ + sizeof(T) > buf_.size()) fail(ErrorKind::Parse, std::string("truncated dataset file at field ") + field);
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }
  std::string_view raw(std::size_t n, const char* field) {
    if (pos_ + n > buf_.size()) fail(ErrorKind::Parse, std::string("truncated dataset file at field ") + field);
    std::string_view v(buf_.data() + pos_, n);
    pos_ += n;
    return v;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& d) {
  if (d.shape.n_rx > 0xFFFF || d.shape.n_tx > 0xFFFF || d.samples.size() > 0xFFFFFFFFULL) {
    fail(ErrorKind::InvalidDimension, "dataset too large for the file format");
  }
  Writer w;
  w.raw("FDCE");
  w.put<std::uint16_t>(kDatasetFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(d.samples.size()));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(d.shape.n_rx));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(d.shape.n_tx));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(d.domain_tag));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(d.split_tag));
  w.put<double>(d.carrier);
  w.put<double>(d.normalization_scale);
  w.put<std::uint64_t>(d.seed);
  for (const auto& s : d.samples) {
    if (s.h.size() != d.shape.size()) fail(ErrorKind::InvalidDimension, "sample length does not match dataset shape");
    w.put<std::uint32_t>(s.scene_id);
    w.put<std::uint8_t>(s.is_los ? 1 : 0);
    for (const auto& v : s.h) {
      w.put<double>(v.real());
      w.put<double>(v.imag());
    }
  }
  write_text_file(path, w.bytes());
}

Dataset read_dataset(const std::filesystem::path& path) {
  Reader r(read_all(path));
  if (r.raw(4, "magic") != "FDCE") fail(ErrorKind::Parse, "bad magic in " + path.string());
  const auto version = r.get<std::uint16_t>("version");
  if (version != kDatasetFormatVersion) fail(ErrorKind::Parse, "unsupported format version " + std::to_string(version));
  Dataset d;
  const auto n = r.get<std::uint32_t>("n_samples");
  d.shape.n_rx = r.get<std::uint16_t>("n_rx");
  d.shape.n_tx = r.get<std::uint16_t>("n_tx");
  if (d.shape.n_rx == 0 || d.shape.n_tx == 0) fail(ErrorKind::Parse, "zero dimension in dataset header");
  const auto domain = r.get<std::uint8_t>("domain_tag");
  const auto split = r.get<std::uint8_t>("split_tag");
  if (domain > 3) fail(ErrorKind::Parse, "invalid domain_tag " + std::to_string(domain));
  if (split > 2) fail(ErrorKind::Parse, "invalid split_tag " + std::to_string(split));
  d.domain_tag = static_cast<DomainTag>(domain);
  d.split_tag = static_cast<SplitTag>(split);
  d.carrier = r.get<double>("carrier");
  d.normalization_scale = r.get<double>("normalization_scale");
  d.seed = r.get<std::uint64_t>("seed");
  d.samples.resize(n);
  for (auto& s : d.samples) {
    s.scene_id = r.get<std::uint32_t>("scene_id");
    const auto los = r.get<std::uint8_t>("is_los");
    if (los > 1) fail(ErrorKind::Parse, "invalid is_los flag");
    s.is_los = los == 1;
    s.h.resize(d.shape.size());
    for (auto& v : s.h) {
      const double re = r.get<double>("entry");
      const double im = r.get<double>("entry");
      v = {re, im};
    }
  }
  if (!r.done()) fail(ErrorKind::Parse, "trailing bytes after last sample");
  return d;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j{
      {"n_rx", cfg.n_rx},
      {"n_tx", cfg.n_tx},
      {"f_ul", cfg.f_ul},
      {"f_dl", cfg.f_dl},
      {"los_mode", to_string(cfg.los_mode)},
      {"los_probability", cfg.los_probability},
      {"l_los", cfg.l_los},
      {"l_nlos", cfg.l_nlos},
      {"angle_spread_deg", cfg.angle_spread_deg},
      {"delay_spread_s", cfg.delay_spread_s},
      {"power_decay", cfg.power_decay},
      {"element_spacing", cfg.element_spacing},
      {"los_power_fraction", cfg.los_power_fraction},
      {"sector_deg", cfg.sector_deg},
      {"seed", cfg.seed},
  };
  return j.dump(2) + "\n";
}

ScenarioConfig scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("scenario JSON: ") + e.what());
  }
  ScenarioConfig cfg;
  auto take = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const json::exception&) {
      fail(ErrorKind::Parse, std::string("scenario field '") + key + "' has the wrong type");
    }
  };
  take("n_rx", cfg.n_rx);
  take("n_tx", cfg.n_tx);
  take("f_ul", cfg.f_ul);
  take("f_dl", cfg.f_dl);
  if (j.contains("los_mode")) cfg.los_mode = parse_los_mode(j.at("los_mode").get<std::string>());
  take("los_probability", cfg.los_probability);
  take("l_los", cfg.l_los);
  take("l_nlos", cfg.l_nlos);
  take("angle_spread_deg", cfg.angle_spread_deg);
  take("delay_spread_s", cfg.delay_spread_s);
  take("power_decay", cfg.power_decay);
  take("element_spacing", cfg.element_spacing);
  take("los_power_fraction", cfg.los_power_fraction);
  take("sector_deg", cfg.sector_deg);
  take("seed", cfg.seed);
  return cfg;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) { return read_all(path); }

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::Io, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_all(path)); }

}  // namespace fdce

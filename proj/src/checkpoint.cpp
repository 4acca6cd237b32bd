// SPDX-License-Identifier: Apache-2.0
#include "bigat/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bigat/error.hpp"

namespace bigat {

nlohmann::json variant_to_json(const VariantSpec& spec) {
  nlohmann::json branches = nlohmann::json::array();
  for (const auto& br : spec.branches) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : br) {
      nlohmann::json jb{{"kind", to_string(b.kind)}};
      switch (b.kind) {
        case BlockKind::kBiGru:
        case BlockKind::kLstmLast:
        case BlockKind::kLstmSeq:
        case BlockKind::kProject:
          jb["units"] = b.units;
          break;
        case BlockKind::kMha:
          jb["heads"] = b.heads;
          jb["key_dim"] = b.key_dim;
          break;
        case BlockKind::kDropout:
          jb["rate"] = b.rate;
          break;
        case BlockKind::kLayerNorm:
          break;
      }
      blocks.push_back(jb);
    }
    branches.push_back(blocks);
  }
  return {{"name", spec.name},
          {"seq_len", spec.seq_len},
          {"n_classes", spec.n_classes},
          {"branches", branches},
          {"head_widths", spec.head_widths},
          {"dropout_rate", spec.dropout_rate},
          {"layer_norm_eps", spec.layer_norm_eps},
          {"lstm_forget_bias", spec.lstm_forget_bias}};
}

VariantSpec variant_from_json(const nlohmann::json& j) {
  try {
    VariantSpec s;
    s.name = j.at("name").get<std::string>();
    s.seq_len = j.at("seq_len").get<std::size_t>();
    s.n_classes = j.at("n_classes").get<std::size_t>();
    s.head_widths = j.at("head_widths").get<std::vector<std::size_t>>();
    s.dropout_rate = j.at("dropout_rate").get<double>();
    s.layer_norm_eps = j.value("layer_norm_eps", kLayerNormEps);
    s.lstm_forget_bias = j.value("lstm_forget_bias", 0.0);
    for (const auto& jbr : j.at("branches")) {
      std::vector<BlockSpec> br;
      for (const auto& jb : jbr) {
        BlockSpec b;
        b.kind = block_kind_from_string(jb.at("kind").get<std::string>());
        b.units = jb.value("units", std::size_t{0});
        b.heads = jb.value("heads", std::size_t{0});
        b.key_dim = jb.value("key_dim", std::size_t{0});
        b.rate = jb.value("rate", 0.0);
        br.push_back(b);
      }
      s.branches.push_back(std::move(br));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed variant description: ") + e.what());
  }
}

namespace {

constexpr char kMagic[4] = {'B', 'G', 'I', 'D'};

template <typename T>
struct Bits {
  using type = std::make_unsigned_t<T>;
};
template <>
struct Bits<float> {
  using type = std::uint32_t;
};

std::uint32_t crc(const void* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_integral_v<T> || std::is_same_v<T, float>);
    using U = typename Bits<T>::type;
    U u = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
  void bytes(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  std::size_t size() const { return buf_.size(); }
  const char* data_from(std::size_t offset) const { return buf_.data() + offset; }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> buf) : buf_(std::move(buf)) {}
  template <typename T>
  T get(const char* what) {
    using U = typename Bits<T>::type;
    need(sizeof(U), what);
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      u |= static_cast<U>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return std::bit_cast<T>(u);
  }
  const char* take(std::size_t n, const char* what) {
    need(n, what);
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (buf_.size() - pos_ < n) {
      throw TruncatedError(std::string("checkpoint truncated while reading ") + what);
    }
  }
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ModelParams& params, const VariantSpec& spec,
                     const nlohmann::json& metadata, const std::filesystem::path& path) {
  if (Network(spec).param_total() != params.total_size()) {
    throw ShapeError("checkpoint: parameters do not match the variant");
  }
  nlohmann::json meta = metadata.is_object() ? metadata : nlohmann::json::object();
  meta["variant"] = variant_to_json(spec);
  const std::string meta_text = meta.dump();

  Writer w;
  w.bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(meta_text.size());
  w.bytes(meta_text.data(), meta_text.size());
  w.put<std::uint32_t>(crc(meta_text.data(), meta_text.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.entries.size()));
  for (const auto& e : params.entries) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(e.value.rank()));
    for (auto d : e.value.shape()) w.put<std::uint64_t>(d);
    const std::size_t start = w.size();
    for (double v : e.value.vec()) w.put<float>(static_cast<float>(v));
    w.put<std::uint32_t>(crc(w.data_from(start), w.size() - start));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot open " + path.string() + " for writing");
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.size()));
  if (!out) throw FileError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open checkpoint " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw FormatError("not a checkpoint file (bad or missing magic): " + path.string());
  }
  Reader r(std::move(buf));
  r.take(4, "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  const auto meta_len = r.get<std::uint64_t>("metadata length");
  const char* meta_p = r.take(meta_len, "metadata");
  const auto meta_crc = r.get<std::uint32_t>("metadata checksum");
  if (crc(meta_p, meta_len) != meta_crc) throw ChecksumError("checkpoint metadata checksum mismatch");

  Checkpoint ck;
  try {
    ck.metadata = nlohmann::json::parse(meta_p, meta_p + meta_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  if (!ck.metadata.contains("variant")) throw FormatError("checkpoint metadata lacks a variant");
  ck.spec = variant_from_json(ck.metadata["variant"]);

  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = r.get<std::uint16_t>("tensor name length");
    const char* name_p = r.take(name_len, "tensor name");
    const auto rank = r.get<std::uint32_t>("tensor rank");
    if (rank > 8) throw FormatError("implausible tensor rank " + std::to_string(rank));
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.get<std::uint64_t>("tensor dims"));
    const std::size_t n = shape_size(shape);
    const char* payload = r.take(n * 4, "tensor payload");
    const auto payload_crc = r.get<std::uint32_t>("tensor checksum");
    const std::string name(name_p, name_len);
    if (crc(payload, n * 4) != payload_crc) {
      throw ChecksumError("checksum mismatch in tensor '" + name + "'");
    }
    Reader pr(std::vector<char>(payload, payload + n * 4));
    Tensor value(shape);
    for (std::size_t i = 0; i < n; ++i) value[i] = static_cast<double>(pr.get<float>("payload"));
    ck.params.entries.push_back({name, std::move(value)});
  }
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint payload");

  Network net(ck.spec);
  if (net.param_total() != ck.params.total_size()) {
    throw FormatError("checkpoint weights do not match its variant description");
  }
  return ck;
}

}  // namespace bigat

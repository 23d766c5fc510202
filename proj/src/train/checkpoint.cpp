#include "gns/train/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <string>
#include <utility>

#include "gns/dataset/npz.hpp"
#include "gns/errors.hpp"

namespace gns {

static_assert(std::endian::native == std::endian::little, "checkpoint codec assumes little-endian");

namespace {

constexpr char kMagic[8] = {'G', 'N', 'S', 'C', 'K', 'P', 'T', '\0'};
constexpr std::size_t kHeaderSize = 8 + 4 + 8 + 4;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  template <typename T>
  T get() {
    T value;
    get_bytes(&value, sizeof(T));
    return value;
  }
  void get_bytes(void* out, std::size_t n) {
    if (n > size_ - pos_) throw CheckpointError("checkpoint payload ends early");
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == size_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

nlohmann::json shapes_of(const std::vector<const Matrix*>& tensors) {
  nlohmann::json out = nlohmann::json::array();
  for (const Matrix* m : tensors) out.push_back({m->rows(), m->cols()});
  return out;
}

void put_tensors(Writer& w, const std::vector<const Matrix*>& tensors) {
  for (const Matrix* m : tensors) w.put_bytes(m->data(), m->size() * sizeof(double));
}

void get_tensors(Reader& r, const std::vector<Matrix*>& tensors) {
  for (Matrix* m : tensors) r.get_bytes(m->data(), m->size() * sizeof(double));
}

std::uint32_t checksum(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  c.params.validate();
  const std::vector<const Matrix*> tensors = c.params.tensors();
  if (c.optimizer.first_moment.size() != tensors.size() ||
      c.optimizer.second_moment.size() != tensors.size()) {
    throw CheckpointError("optimizer state does not match the parameters");
  }
  nlohmann::json header = {
      {"step", c.step},
      {"config", to_json(c.config)},
      {"model", to_json(c.params.config)},
      {"dataset_fingerprint", c.dataset_fingerprint},
      {"elapsed_seconds", c.elapsed_seconds},
      {"adam", {{"step", c.optimizer.step},
                {"learning_rate", c.optimizer.hyper.learning_rate},
                {"beta1", c.optimizer.hyper.beta1},
                {"beta2", c.optimizer.hyper.beta2},
                {"epsilon", c.optimizer.hyper.epsilon}}},
      {"sampler", {{"engine", c.sampler.engine},
                   {"epoch", c.sampler.epoch},
                   {"cursor", c.sampler.cursor},
                   {"windows", c.sampler.order.size()}}},
      {"shapes", shapes_of(tensors)}};
  const std::string text = header.dump();

  Writer payload;
  payload.put<std::uint64_t>(text.size());
  payload.put_bytes(text.data(), text.size());
  put_tensors(payload, tensors);
  std::vector<const Matrix*> moments;
  for (const Matrix& m : c.optimizer.first_moment) moments.push_back(&m);
  for (const Matrix& m : c.optimizer.second_moment) moments.push_back(&m);
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (!moments[i]->same_shape(*tensors[i]) || !moments[i + tensors.size()]->same_shape(*tensors[i])) {
      throw CheckpointError("optimizer moment " + std::to_string(i) + " has the wrong shape");
    }
  }
  put_tensors(payload, moments);
  payload.put_bytes(c.sampler.order.data(), c.sampler.order.size() * sizeof(std::uint64_t));

  Writer file;
  file.put_bytes(kMagic, sizeof kMagic);
  file.put<std::uint32_t>(kCheckpointVersion);
  file.put<std::uint64_t>(payload.bytes.size());
  file.put<std::uint32_t>(checksum(payload.bytes.data(), payload.bytes.size()));
  file.put_bytes(payload.bytes.data(), payload.bytes.size());
  return std::move(file.bytes);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  Reader head(bytes.data() + sizeof kMagic, kHeaderSize - sizeof kMagic);
  const auto version = head.get<std::uint32_t>();
  const auto length = head.get<std::uint64_t>();
  const auto expected_crc = head.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t available = bytes.size() - kHeaderSize;
  const std::uint8_t* payload = bytes.data() + kHeaderSize;
  if (length != available || checksum(payload, available) != expected_crc) {
    throw CheckpointError("checkpoint checksum mismatch: file is truncated or corrupt (payload " +
                          std::to_string(available) + " of " + std::to_string(length) + " bytes)");
  }

  Reader r(payload, available);
  Checkpoint c;
  nlohmann::json header;
  try {
    std::string text(r.get<std::uint64_t>(), '\0');
    r.get_bytes(text.data(), text.size());
    header = nlohmann::json::parse(text);
    c.step = header.at("step").get<std::uint64_t>();
    c.config = train_config_from_json(header.at("config"));
    c.dataset_fingerprint = header.at("dataset_fingerprint").get<std::uint64_t>();
    c.elapsed_seconds = header.at("elapsed_seconds").get<double>();
    const auto& adam = header.at("adam");
    c.optimizer.step = adam.at("step").get<std::uint64_t>();
    c.optimizer.hyper = {adam.at("learning_rate").get<double>(), adam.at("beta1").get<double>(),
                         adam.at("beta2").get<double>(), adam.at("epsilon").get<double>()};
    const auto& sampler = header.at("sampler");
    c.sampler.engine = sampler.at("engine").get<std::string>();
    c.sampler.epoch = sampler.at("epoch").get<std::uint64_t>();
    c.sampler.cursor = sampler.at("cursor").get<std::uint64_t>();
    c.sampler.order.resize(sampler.at("windows").get<std::size_t>());
    c.params = ModelParams::create(model_config_from_json(header.at("model")), 0);
    if (header.at("shapes") != shapes_of(std::as_const(c.params).tensors())) {
      throw CheckpointError("checkpoint tensor shapes do not match its model configuration");
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }

  const std::vector<Matrix*> tensors = c.params.tensors();
  get_tensors(r, tensors);
  for (const Matrix* m : tensors) {
    c.optimizer.first_moment.push_back(Matrix::zeros_like(*m));
    c.optimizer.second_moment.push_back(Matrix::zeros_like(*m));
  }
  std::vector<Matrix*> moments;
  for (Matrix& m : c.optimizer.first_moment) moments.push_back(&m);
  for (Matrix& m : c.optimizer.second_moment) moments.push_back(&m);
  get_tensors(r, moments);
  r.get_bytes(c.sampler.order.data(), c.sampler.order.size() * sizeof(std::uint64_t));
  if (!r.done()) throw CheckpointError("checkpoint payload has trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file_atomic(path, encode_checkpoint(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Bytes bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    throw CheckpointError(e.what());
  }
  return decode_checkpoint(bytes);
}

}  // namespace gns

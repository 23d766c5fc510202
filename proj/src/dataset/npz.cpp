#include "gns/dataset/npz.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>

#include "gns/errors.hpp"

namespace gns {

static_assert(std::endian::native == std::endian::little,
              "the npy/zip codec assumes a little-endian host");

namespace {

constexpr std::uint8_t kNpyMagic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};

// ---------------------------------------------------------------------------
// little-endian helpers

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t pos, const char* what)
      : bytes_(bytes), pos_(pos), what_(what) {}

  template <typename T>
  T read() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ > bytes_.size() || bytes_.size() - pos_ < n) {
      throw CodecError(std::string(what_) + ": unexpected end of data");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
  const char* what_;
};

template <typename T>
void put(Bytes& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

void put(Bytes& out, std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

// ---------------------------------------------------------------------------
// npy header: a Python dict literal with string keys

class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : s_(text) {}

  std::map<std::string, std::string> parse_dict() {
    std::map<std::string, std::string> out;
    skip();
    expect('{');
    while (true) {
      skip();
      if (peek() == '}') break;
      std::string key = quoted();
      skip();
      expect(':');
      skip();
      out[key] = value();
      skip();
      if (peek() == ',') {
        ++i_;
        continue;
      }
      skip();
      if (peek() != '}') fail("expected ',' or '}'");
    }
    return out;
  }

 private:
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
  void skip() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\n' || s_[i_] == '\t')) ++i_;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw CodecError("npy header: " + msg + " at offset " + std::to_string(i_));
  }
  std::string quoted() {
    const char q = peek();
    if (q != '\'' && q != '"') fail("expected quoted string");
    ++i_;
    const std::size_t start = i_;
    while (i_ < s_.size() && s_[i_] != q) ++i_;
    if (i_ >= s_.size()) fail("unterminated string");
    return std::string(s_.substr(start, i_++ - start));
  }
  std::string value() {
    const char c = peek();
    if (c == '\'' || c == '"') return "'" + quoted() + "'";
    if (c == '(') {
      const std::size_t start = i_;
      while (i_ < s_.size() && s_[i_] != ')') ++i_;
      if (i_ >= s_.size()) fail("unterminated tuple");
      ++i_;
      return std::string(s_.substr(start, i_ - start));
    }
    const std::size_t start = i_;
    while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}') ++i_;
    std::string v(s_.substr(start, i_ - start));
    while (!v.empty() && v.back() == ' ') v.pop_back();
    return v;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

std::vector<std::size_t> parse_shape(const std::string& tuple) {
  if (tuple.size() < 2 || tuple.front() != '(' || tuple.back() != ')') {
    throw CodecError("npy header: malformed shape " + tuple);
  }
  std::vector<std::size_t> shape;
  std::string inner = tuple.substr(1, tuple.size() - 2);
  std::size_t pos = 0;
  while (pos < inner.size()) {
    std::size_t comma = inner.find(',', pos);
    if (comma == std::string::npos) comma = inner.size();
    std::string tok = inner.substr(pos, comma - pos);
    tok.erase(std::remove(tok.begin(), tok.end(), ' '), tok.end());
    if (!tok.empty()) {
      if (!std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw CodecError("npy header: malformed shape " + tuple);
      }
      shape.push_back(std::stoull(tok));
    }
    pos = comma + 1;
  }
  return shape;
}

std::size_t item_size(const std::string& descr) {
  if (descr.size() < 3) throw CodecError("npy: unsupported dtype '" + descr + "'");
  const char order = descr[0];
  if (order == '>') throw CodecError("npy: big-endian dtype '" + descr + "' is not supported");
  if (order != '<' && order != '|' && order != '=') {
    throw CodecError("npy: unsupported dtype '" + descr + "'");
  }
  const char kind = descr[1];
  if (kind != 'f' && kind != 'i' && kind != 'u' && kind != 'b') {
    throw CodecError("npy: unsupported dtype '" + descr + "'");
  }
  const std::string digits = descr.substr(2);
  if (digits != "1" && digits != "2" && digits != "4" && digits != "8") {
    throw CodecError("npy: unsupported dtype '" + descr + "'");
  }
  return std::stoul(digits);
}

std::uint32_t crc_of(std::span<const std::uint8_t> data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large members
  std::size_t off = 0;
  while (off < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
    crc = crc32(crc, data.data() + off, chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

Bytes inflate_raw(std::span<const std::uint8_t> compressed, std::size_t expected,
                  const std::string& name) {
  Bytes out(expected);
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw CodecError("zip: inflateInit failed");
  zs.next_in = const_cast<Bytef*>(compressed.data());
  zs.avail_in = static_cast<uInt>(compressed.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) {
    throw CodecError("zip: member '" + name + "' failed to inflate");
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// npy

std::size_t NpyArray::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<double> NpyArray::as_doubles() const {
  const std::size_t n = element_count();
  std::vector<double> out(n);
  if (descr == "<f8" || descr == "=f8") {
    std::memcpy(out.data(), data.data(), n * sizeof(double));
  } else if (descr == "<f4" || descr == "=f4") {
    for (std::size_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, data.data() + i * sizeof(float), sizeof(float));
      out[i] = static_cast<double>(f);
    }
  } else {
    throw CodecError("npy: expected a float array, got dtype '" + descr + "'");
  }
  return out;
}

std::vector<std::int64_t> NpyArray::as_int64() const {
  if (descr.size() < 3 || (descr[1] != 'i' && descr[1] != 'u')) {
    throw CodecError("npy: expected an integer array, got dtype '" + descr + "'");
  }
  const bool is_signed = descr[1] == 'i';
  const std::size_t width = item_size(descr);
  const std::size_t n = element_count();
  std::vector<std::int64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = data.data() + i * width;
    switch (width) {
      case 1: out[i] = is_signed ? std::int64_t{static_cast<std::int8_t>(p[0])} : std::int64_t{p[0]}; break;
      case 2: {
        std::uint16_t v;
        std::memcpy(&v, p, 2);
        out[i] = is_signed ? std::int64_t{static_cast<std::int16_t>(v)} : std::int64_t{v};
        break;
      }
      case 4: {
        std::uint32_t v;
        std::memcpy(&v, p, 4);
        out[i] = is_signed ? std::int64_t{static_cast<std::int32_t>(v)} : std::int64_t{v};
        break;
      }
      default: {
        std::uint64_t v;
        std::memcpy(&v, p, 8);
        out[i] = static_cast<std::int64_t>(v);
        break;
      }
    }
  }
  return out;
}

NpyArray decode_npy(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 10 || !std::equal(std::begin(kNpyMagic), std::end(kNpyMagic), bytes.begin())) {
    throw CodecError("npy: bad magic string");
  }
  Reader r(bytes, 6, "npy");
  const auto major = r.read<std::uint8_t>();
  r.read<std::uint8_t>();
  std::size_t header_len = 0;
  if (major == 1) {
    header_len = r.read<std::uint16_t>();
  } else if (major == 2 || major == 3) {
    header_len = r.read<std::uint32_t>();
  } else {
    throw CodecError("npy: unsupported format version " + std::to_string(major));
  }
  auto header_bytes = r.take(header_len);
  const std::string header(header_bytes.begin(), header_bytes.end());
  auto dict = HeaderParser(header).parse_dict();
  for (const char* key : {"descr", "fortran_order", "shape"}) {
    if (!dict.count(key)) throw CodecError(std::string("npy header: missing '") + key + "'");
  }

  NpyArray a;
  const std::string& descr = dict["descr"];
  if (descr.size() < 2 || descr.front() != '\'') throw CodecError("npy header: descr must be a string");
  a.descr = descr.substr(1, descr.size() - 2);
  if (dict["fortran_order"] == "True") {
    a.fortran_order = true;
  } else if (dict["fortran_order"] != "False") {
    throw CodecError("npy header: fortran_order must be True or False");
  }
  if (a.fortran_order) throw CodecError("npy: Fortran-ordered arrays are not supported");
  a.shape = parse_shape(dict["shape"]);

  const std::size_t expected = a.element_count() * item_size(a.descr);
  const std::size_t available = bytes.size() - r.pos();
  if (available != expected) {
    throw CodecError("npy: declared shape needs " + std::to_string(expected) + " payload bytes, found " +
                     std::to_string(available));
  }
  auto payload = r.take(expected);
  a.data.assign(payload.begin(), payload.end());
  return a;
}

Bytes encode_npy(const std::string& descr, std::span<const std::size_t> shape,
                 std::span<const std::uint8_t> payload) {
  std::string dims;
  for (std::size_t d : shape) dims += std::to_string(d) + ", ";
  if (shape.size() > 1) dims.resize(dims.size() - 2);
  if (shape.size() == 1) dims.pop_back();  // "(3,)"
  std::string header = "{'descr': '" + descr + "', 'fortran_order': False, 'shape': (" + dims + "), }";
  const std::size_t unpadded = sizeof kNpyMagic + 2 + 2 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  if (header.size() > 0xFFFF) throw CodecError("npy: header too long for format 1.0");

  Bytes out(std::begin(kNpyMagic), std::end(kNpyMagic));
  out.push_back(1);
  out.push_back(0);
  put(out, static_cast<std::uint16_t>(header.size()));
  put(out, std::string_view(header));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Bytes encode_npy(std::span<const std::size_t> shape, std::span<const double> values) {
  return encode_npy("<f8", shape,
                    {reinterpret_cast<const std::uint8_t*>(values.data()), values.size_bytes()});
}

Bytes encode_npy(std::span<const std::size_t> shape, std::span<const std::int64_t> values) {
  return encode_npy("<i8", shape,
                    {reinterpret_cast<const std::uint8_t*>(values.data()), values.size_bytes()});
}

// ---------------------------------------------------------------------------
// zip

std::vector<ZipMember> read_zip(std::span<const std::uint8_t> archive) {
  constexpr std::uint32_t kEocd = 0x06054b50;
  constexpr std::uint32_t kZip64Locator = 0x07064b50;
  constexpr std::uint32_t kZip64Eocd = 0x06064b50;
  constexpr std::uint32_t kCentral = 0x02014b50;
  constexpr std::uint32_t kLocal = 0x04034b50;

  if (archive.size() < 22) throw CodecError("zip: file too small");
  {
    std::uint32_t sig;
    std::memcpy(&sig, archive.data(), 4);
    if (sig != kLocal && sig != kEocd) throw CodecError("zip: bad magic");
  }

  // end-of-central-directory record, scanning back over a possible comment
  std::optional<std::size_t> eocd;
  const std::size_t scan_floor = archive.size() > 22 + 0xFFFF ? archive.size() - 22 - 0xFFFF : 0;
  for (std::size_t pos = archive.size() - 22 + 1; pos-- > scan_floor;) {
    std::uint32_t sig;
    std::memcpy(&sig, archive.data() + pos, 4);
    if (sig == kEocd) {
      eocd = pos;
      break;
    }
  }
  if (!eocd) throw CodecError("zip: end of central directory not found");

  Reader e(archive, *eocd + 4, "zip");
  e.read<std::uint16_t>();
  e.read<std::uint16_t>();
  e.read<std::uint16_t>();
  std::uint64_t entries = e.read<std::uint16_t>();
  e.read<std::uint32_t>();
  std::uint64_t cd_offset = e.read<std::uint32_t>();

  if ((entries == 0xFFFF || cd_offset == 0xFFFFFFFF) && *eocd >= 20) {
    Reader loc(archive, *eocd - 20, "zip");
    if (loc.read<std::uint32_t>() == kZip64Locator) {
      loc.read<std::uint32_t>();
      const auto z64 = loc.read<std::uint64_t>();
      Reader z(archive, z64, "zip");
      if (z.read<std::uint32_t>() != kZip64Eocd) throw CodecError("zip: bad zip64 end record");
      z.read<std::uint64_t>();
      z.read<std::uint16_t>();
      z.read<std::uint16_t>();
      z.read<std::uint32_t>();
      z.read<std::uint32_t>();
      z.read<std::uint64_t>();
      entries = z.read<std::uint64_t>();
      z.read<std::uint64_t>();
      cd_offset = z.read<std::uint64_t>();
    }
  }

  std::vector<ZipMember> members;
  Reader cd(archive, cd_offset, "zip central directory");
  for (std::uint64_t k = 0; k < entries; ++k) {
    if (cd.read<std::uint32_t>() != kCentral) throw CodecError("zip: bad central directory entry");
    cd.read<std::uint16_t>();
    cd.read<std::uint16_t>();
    const auto flags = cd.read<std::uint16_t>();
    const auto method = cd.read<std::uint16_t>();
    cd.read<std::uint32_t>();
    const auto crc = cd.read<std::uint32_t>();
    std::uint64_t comp_size = cd.read<std::uint32_t>();
    std::uint64_t uncomp_size = cd.read<std::uint32_t>();
    const auto name_len = cd.read<std::uint16_t>();
    const auto extra_len = cd.read<std::uint16_t>();
    const auto comment_len = cd.read<std::uint16_t>();
    cd.read<std::uint16_t>();
    cd.read<std::uint16_t>();
    cd.read<std::uint32_t>();
    std::uint64_t local_offset = cd.read<std::uint32_t>();
    auto name_bytes = cd.take(name_len);
    auto extra = cd.take(extra_len);
    cd.take(comment_len);
    std::string name(name_bytes.begin(), name_bytes.end());

    // zip64 extended information: present fields follow the 0xFFFFFFFF markers
    Reader x(extra, 0, "zip extra field");
    while (x.pos() + 4 <= extra.size()) {
      const auto id = x.read<std::uint16_t>();
      const auto size = x.read<std::uint16_t>();
      auto body = x.take(size);
      if (id != 0x0001) continue;
      Reader b(body, 0, "zip64 extra field");
      if (uncomp_size == 0xFFFFFFFF) uncomp_size = b.read<std::uint64_t>();
      if (comp_size == 0xFFFFFFFF) comp_size = b.read<std::uint64_t>();
      if (local_offset == 0xFFFFFFFF) local_offset = b.read<std::uint64_t>();
    }
    if (flags & 0x1) throw CodecError("zip: member '" + name + "' is encrypted");

    Reader lh(archive, local_offset, "zip local header");
    if (lh.read<std::uint32_t>() != kLocal) throw CodecError("zip: bad local header for '" + name + "'");
    lh.take(22);
    const auto lname = lh.read<std::uint16_t>();
    const auto lextra = lh.read<std::uint16_t>();
    lh.take(static_cast<std::size_t>(lname) + lextra);
    auto stored = lh.take(comp_size);

    ZipMember m;
    m.name = std::move(name);
    if (method == 0) {
      if (comp_size != uncomp_size) throw CodecError("zip: stored member '" + m.name + "' size mismatch");
      m.data.assign(stored.begin(), stored.end());
    } else if (method == 8) {
      m.data = inflate_raw(stored, uncomp_size, m.name);
    } else {
      throw CodecError("zip: member '" + m.name + "' uses unsupported compression method " +
                       std::to_string(method));
    }
    if (crc_of(m.data) != crc) throw CodecError("zip: CRC mismatch in member '" + m.name + "'");
    members.push_back(std::move(m));
  }
  return members;
}

Bytes write_zip(std::span<const ZipMember> members) {
  // 1980-01-01 00:00:00, the zip epoch
  constexpr std::uint16_t kTime = 0;
  constexpr std::uint16_t kDate = (0 << 9) | (1 << 5) | 1;
  Bytes out;
  Bytes central;
  for (const ZipMember& m : members) {
    if (m.data.size() >= 0xFFFFFFFFull || out.size() >= 0xFFFFFFFFull) {
      throw CodecError("zip: archives above 4 GiB are not supported for writing");
    }
    const std::uint32_t crc = crc_of(m.data);
    const auto size = static_cast<std::uint32_t>(m.data.size());
    const auto offset = static_cast<std::uint32_t>(out.size());
    const auto name_len = static_cast<std::uint16_t>(m.name.size());

    put<std::uint32_t>(out, 0x04034b50);
    put<std::uint16_t>(out, 20);
    put<std::uint16_t>(out, 0);
    put<std::uint16_t>(out, 0);
    put(out, kTime);
    put(out, kDate);
    put(out, crc);
    put(out, size);
    put(out, size);
    put(out, name_len);
    put<std::uint16_t>(out, 0);
    put(out, std::string_view(m.name));
    out.insert(out.end(), m.data.begin(), m.data.end());

    put<std::uint32_t>(central, 0x02014b50);
    put<std::uint16_t>(central, 20);
    put<std::uint16_t>(central, 20);
    put<std::uint16_t>(central, 0);
    put<std::uint16_t>(central, 0);
    put(central, kTime);
    put(central, kDate);
    put(central, crc);
    put(central, size);
    put(central, size);
    put(central, name_len);
    put<std::uint16_t>(central, 0);
    put<std::uint16_t>(central, 0);
    put<std::uint16_t>(central, 0);
    put<std::uint16_t>(central, 0);
    put<std::uint32_t>(central, 0);
    put(central, offset);
    put(central, std::string_view(m.name));
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  const auto cd_size = static_cast<std::uint32_t>(central.size());
  out.insert(out.end(), central.begin(), central.end());
  put<std::uint32_t>(out, 0x06054b50);
  put<std::uint16_t>(out, 0);
  put<std::uint16_t>(out, 0);
  put(out, static_cast<std::uint16_t>(members.size()));
  put(out, static_cast<std::uint16_t>(members.size()));
  put(out, cd_size);
  put(out, cd_offset);
  put<std::uint16_t>(out, 0);
  return out;
}

// ---------------------------------------------------------------------------
// trajectory archives

namespace {

std::string member_name(std::size_t k, const char* field) {
  return "trajectory_" + std::to_string(k) + "_" + field + ".npy";
}

}  // namespace

TrajectorySet decode_npz(std::span<const std::uint8_t> archive) {
  std::map<std::string, const ZipMember*> by_name;
  const std::vector<ZipMember> members = read_zip(archive);
  for (const ZipMember& m : members) by_name[m.name] = &m;

  auto find = [&](const std::string& name) -> const ZipMember& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw CodecError("npz: missing member '" + name + "'");
    return *it->second;
  };

  const NpyArray count = decode_npy(find("n_trajectories.npy").data);
  const auto count_values = count.as_int64();
  if (count_values.size() != 1 || count_values[0] < 0) {
    throw CodecError("npz: n_trajectories must be a non-negative scalar");
  }

  TrajectorySet set;
  for (std::size_t k = 0; k < static_cast<std::size_t>(count_values[0]); ++k) {
    const NpyArray pos = decode_npy(find(member_name(k, "positions")).data);
    const NpyArray types = decode_npy(find(member_name(k, "types")).data);
    if (pos.shape.size() != 3) {
      throw CodecError("npz: " + member_name(k, "positions") + " must be 3-D (steps, particles, dim)");
    }
    if (types.shape.size() != 1 || types.shape[0] != pos.shape[1]) {
      throw CodecError("npz: " + member_name(k, "types") + " must have one entry per particle");
    }
    Trajectory t;
    t.steps = pos.shape[0];
    t.particles = pos.shape[1];
    t.dim = pos.shape[2];
    t.positions = pos.as_doubles();
    t.types = types.as_int64();
    for (std::int64_t ty : t.types) {
      if (ty < 0) throw CodecError("npz: negative particle type in trajectory " + std::to_string(k));
    }
    set.trajectories.push_back(std::move(t));
  }
  return set;
}

Bytes encode_npz(const TrajectorySet& set) {
  std::vector<ZipMember> members;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const Trajectory& t = set[k];
    t.validate();
    const std::size_t pos_shape[3] = {t.steps, t.particles, t.dim};
    const std::size_t type_shape[1] = {t.particles};
    members.push_back({member_name(k, "positions"), encode_npy(pos_shape, t.positions)});
    members.push_back({member_name(k, "types"), encode_npy(type_shape, t.types)});
  }
  const std::int64_t count = static_cast<std::int64_t>(set.size());
  members.push_back({"n_trajectories.npy",
                     encode_npy(std::span<const std::size_t>{}, std::span<const std::int64_t>(&count, 1))});
  return write_zip(members);
}

TrajectorySet read_npz(const std::filesystem::path& path) { return decode_npz(read_file(path)); }

void write_npz(const std::filesystem::path& path, const TrajectorySet& set) {
  write_file_atomic(path, encode_npz(set));
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace gns

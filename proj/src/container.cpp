#include "phasenet/container.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unistd.h>

namespace phasenet {
namespace {

constexpr char kMagic[4] = {'P', 'H', 'N', 'C'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, std::size_t end) : in_(in), end_(end) {}
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw std::runtime_error("container: unexpected end of data");
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::size_t Container::Entry::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

Container::Entry& Container::add(std::string name, Type type, std::vector<std::uint64_t> dims) {
  if (contains(name)) throw std::invalid_argument("container: duplicate entry '" + name + "'");
  Entry e;
  e.name = std::move(name);
  e.type = type;
  e.dims = std::move(dims);
  entries_.push_back(std::move(e));
  return entries_.back();
}

void Container::put(std::string name, std::vector<std::uint64_t> dims, std::vector<double> values) {
  Entry& e = add(std::move(name), Type::f64, std::move(dims));
  if (e.element_count() != values.size()) throw std::invalid_argument("container: dims do not match value count");
  e.f64 = std::move(values);
}

void Container::put(std::string name, std::vector<std::uint64_t> dims, std::vector<std::int64_t> values) {
  Entry& e = add(std::move(name), Type::i64, std::move(dims));
  if (e.element_count() != values.size()) throw std::invalid_argument("container: dims do not match value count");
  e.i64 = std::move(values);
}

void Container::put_text(std::string name, const std::string& text) {
  Entry& e = add(std::move(name), Type::u8, {text.size()});
  e.bytes.assign(text.begin(), text.end());
}

bool Container::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

const Container::Entry& Container::at(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  throw std::runtime_error("container: missing entry '" + name + "'");
}

const std::vector<double>& Container::f64(const std::string& name) const {
  const Entry& e = at(name);
  if (e.type != Type::f64) throw std::runtime_error("container: entry '" + name + "' is not f64");
  return e.f64;
}

const std::vector<std::int64_t>& Container::i64(const std::string& name) const {
  const Entry& e = at(name);
  if (e.type != Type::i64) throw std::runtime_error("container: entry '" + name + "' is not i64");
  return e.i64;
}

std::string Container::text(const std::string& name) const {
  const Entry& e = at(name);
  if (e.type != Type::u8) throw std::runtime_error("container: entry '" + name + "' is not text");
  return std::string(e.bytes.begin(), e.bytes.end());
}

std::vector<std::uint8_t> Container::serialize() const {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.u64(entries_.size());
  for (const auto& e : entries_) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.raw(e.name.data(), e.name.size());
    w.u8(static_cast<std::uint8_t>(e.type));
    w.u32(static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) w.u64(d);
    switch (e.type) {
      case Type::f64:
        for (double v : e.f64) w.u64(std::bit_cast<std::uint64_t>(v));
        break;
      case Type::i64:
        for (auto v : e.i64) w.u64(static_cast<std::uint64_t>(v));
        break;
      case Type::u8:
        w.raw(e.bytes.data(), e.bytes.size());
        break;
    }
  }
  const std::uint32_t crc = crc32_of(w.bytes().data(), w.bytes().size());
  w.u32(crc);
  return std::move(w.bytes());
}

Container Container::deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw std::runtime_error("container: not a container file (bad magic)");
  if (bytes.size() < 8 + 8 + 4) throw std::runtime_error("container: checksum mismatch (file truncated)");
  {
    Reader header(bytes, 8);
    char magic[4];
    header.raw(magic, 4);
    const std::uint32_t version = header.u32();
    if (version != kVersion)
      throw std::runtime_error("container: unsupported format version " + std::to_string(version) +
                               " (this build reads version " + std::to_string(kVersion) + ")");
  }
  const std::size_t body = bytes.size() - 4;
  std::vector<std::uint8_t> crc_bytes(bytes.end() - 4, bytes.end());
  const std::uint32_t stored = static_cast<std::uint32_t>(crc_bytes[0]) | (static_cast<std::uint32_t>(crc_bytes[1]) << 8) |
                               (static_cast<std::uint32_t>(crc_bytes[2]) << 16) |
                               (static_cast<std::uint32_t>(crc_bytes[3]) << 24);
  if (crc32_of(bytes.data(), body) != stored) throw std::runtime_error("container: checksum mismatch");

  Reader r(bytes, body);
  char magic[4];
  r.raw(magic, 4);
  r.u32();
  const std::uint64_t count = r.u64();
  Container c;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    if (name_len > r.remaining()) throw std::runtime_error("container: corrupt entry name");
    std::string name(name_len, '\0');
    r.raw(name.data(), name_len);
    const auto type = static_cast<Type>(r.u8());
    const std::uint32_t rank = r.u32();
    std::vector<std::uint64_t> dims(rank);
    for (auto& d : dims) d = r.u64();
    Entry& e = c.add(std::move(name), type, std::move(dims));
    const std::size_t n = e.element_count();
    const std::size_t width = type == Type::u8 ? 1 : 8;
    if (n > r.remaining() / width) throw std::runtime_error("container: corrupt entry size");
    switch (type) {
      case Type::f64:
        e.f64.resize(n);
        for (auto& v : e.f64) v = std::bit_cast<double>(r.u64());
        break;
      case Type::i64:
        e.i64.resize(n);
        for (auto& v : e.i64) v = static_cast<std::int64_t>(r.u64());
        break;
      case Type::u8:
        e.bytes.resize(n);
        r.raw(e.bytes.data(), n);
        break;
      default:
        throw std::runtime_error("container: unknown element type");
    }
  }
  if (r.remaining() != 0) throw std::runtime_error("container: trailing bytes after last entry");
  return c;
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void Container::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

Container Container::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

}  // namespace phasenet

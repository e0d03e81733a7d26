#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace phasenet {

/// Versioned binary file of named arrays.
///
/// Layout (all integers little-endian):
///   magic "PHNC" | u32 version | u64 entry count
///   per entry: u32 name length | UTF-8 name | u8 type | u32 rank | u64 dims[rank] | data
///   u32 CRC-32 of every preceding byte
/// Elements are stored row-major; f64 as IEEE-754 bit patterns.
class Container {
 public:
  static constexpr std::uint32_t kVersion = 1;

  enum class Type : std::uint8_t { f64 = 1, i64 = 2, u8 = 3 };

  struct Entry {
    std::string name;
    Type type = Type::f64;
    std::vector<std::uint64_t> dims;
    std::vector<double> f64;
    std::vector<std::int64_t> i64;
    std::vector<std::uint8_t> bytes;

    std::size_t element_count() const;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  void put(std::string name, std::vector<std::uint64_t> dims, std::vector<double> values);
  void put(std::string name, std::vector<std::uint64_t> dims, std::vector<std::int64_t> values);
  void put_text(std::string name, const std::string& text);

  bool contains(const std::string& name) const;
  const Entry& at(const std::string& name) const;
  const std::vector<double>& f64(const std::string& name) const;
  const std::vector<std::int64_t>& i64(const std::string& name) const;
  std::string text(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }

  std::vector<std::uint8_t> serialize() const;
  static Container deserialize(const std::vector<std::uint8_t>& bytes);

  /// Writes to a temporary file in the same directory, then renames.
  void save(const std::filesystem::path& path) const;
  static Container load(const std::filesystem::path& path);

  friend bool operator==(const Container&, const Container&) = default;

 private:
  Entry& add(std::string name, Type type, std::vector<std::uint64_t> dims);
  std::vector<Entry> entries_;
};

/// Atomically replaces `path` with `bytes` (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace phasenet

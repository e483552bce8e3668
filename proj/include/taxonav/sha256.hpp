#pragma once

#include <cstdint>
#include <string>

namespace taxonav {

// Minimal SHA-256 (FIPS 180-4), used to fingerprint input files so every
// output artifact records exactly which data produced it.
class Sha256 {
 public:
  Sha256();

  void update(const void* data, size_t len);
  // Finalizes and returns the digest as lowercase hex. The object must not be
  // updated afterwards.
  std::string hex_digest();

 private:
  void process_block(const uint8_t* block);

  uint32_t state_[8];
  uint64_t total_len_ = 0;
  uint8_t buffer_[64];
  size_t buffer_len_ = 0;
};

std::string sha256_hex(const std::string& data);
// Throws RuntimeError(IoError) if the file cannot be read.
std::string sha256_file_hex(const std::string& path);

}  // namespace taxonav

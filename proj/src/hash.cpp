#include "nem/hash.hpp"

#include <openssl/sha.h>

#include <cstdio>

namespace nem {

std::string short_hash(std::string_view bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest);
  std::string out(16, '0');
  for (int i = 0; i < 8; ++i) std::snprintf(out.data() + 2 * i, 3, "%02x", digest[i]);
  return out;
}

std::string short_hash(std::span<const double> values) {
  return short_hash(std::string_view(reinterpret_cast<const char*>(values.data()), values.size_bytes()));
}

}  // namespace nem

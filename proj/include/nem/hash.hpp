#pragma once

#include <span>
#include <string>
#include <string_view>

namespace nem {

// First 16 hex digits of the SHA-256 digest.
std::string short_hash(std::string_view bytes);
std::string short_hash(std::span<const double> values);

}  // namespace nem

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace basinfo {

std::string sha256_hex(std::string_view bytes);
std::string hex_encode(std::span<const unsigned char> bytes);
std::string random_hex(std::size_t n_bytes);
/// Shortest decimal text that parses back to exactly `v`.
std::string shortest_double(double v);

}  // namespace basinfo

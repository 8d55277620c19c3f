#include "compcap/report.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

namespace compcap {

nlohmann::json fixed_number(double value) {
  if (!std::isfinite(value)) return nullptr;
  if (value == 0.0) return 0.0;
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.14e", value);
  return std::strtod(buf.data(), nullptr);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string RunReport::serialize() const {
  nlohmann::json doc{{"command", command},
                     {"arguments", arguments},
                     {"inputs", inputs},
                     {"results", results},
                     {"warnings", warnings}};
  return doc.dump(2) + "\n";
}

}  // namespace compcap

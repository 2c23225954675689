#include "basinfo/auth.hpp"

#include <vector>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include "basinfo/digest.hpp"
#include "basinfo/error.hpp"

namespace basinfo {
namespace {

constexpr std::size_t kKeyBytes = 32;

std::vector<unsigned char> hex_decode(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2) throw Error(ErrorCode::InvalidArgument, "odd-length hex string");
  std::vector<unsigned char> out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]), lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::InvalidArgument, "invalid hex digit");
    out.push_back(static_cast<unsigned char>(hi * 16 + lo));
  }
  return out;
}

std::vector<unsigned char> derive(std::string_view password, const std::vector<unsigned char>& salt,
                                  int iterations) {
  std::vector<unsigned char> key(kKeyBytes);
  if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(),
                        static_cast<int>(salt.size()), iterations, EVP_sha256(),
                        static_cast<int>(key.size()), key.data()) != 1) {
    throw Error(ErrorCode::Internal, "key derivation failed");
  }
  return key;
}

}  // namespace

PasswordVerifier PasswordVerifier::create(std::string_view password, int iterations) {
  if (iterations < 1000) throw Error(ErrorCode::InvalidArgument, "iteration count too low");
  std::vector<unsigned char> salt(16);
  if (RAND_bytes(salt.data(), static_cast<int>(salt.size())) != 1) {
    throw Error(ErrorCode::Internal, "random generator failure");
  }
  return {iterations, hex_encode(salt), hex_encode(derive(password, salt, iterations))};
}

PasswordVerifier PasswordVerifier::parse(std::string_view encoded) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    auto next = encoded.find('$', pos);
    parts.push_back(encoded.substr(pos, next == std::string_view::npos ? encoded.npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  if (parts.size() != 4 || parts[0] != "pbkdf2-sha256") {
    throw Error(ErrorCode::InvalidArgument, "unrecognised password verifier format");
  }
  return {std::stoi(std::string(parts[1])), std::string(parts[2]), std::string(parts[3])};
}

std::string PasswordVerifier::encode() const {
  return "pbkdf2-sha256$" + std::to_string(iterations) + "$" + salt_hex + "$" + hash_hex;
}

bool PasswordVerifier::verify(std::string_view password) const {
  const auto expected = hex_decode(hash_hex);
  const auto actual = derive(password, hex_decode(salt_hex), iterations);
  return expected.size() == actual.size() &&
         CRYPTO_memcmp(expected.data(), actual.data(), actual.size()) == 0;
}

SessionStore::SessionStore(std::string secret, std::chrono::seconds ttl)
    : secret_(std::move(secret)), ttl_(ttl) {}

std::string SessionStore::key_of(std::string_view token) const {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  HMAC(EVP_sha256(), secret_.data(), static_cast<int>(secret_.size()),
       reinterpret_cast<const unsigned char*>(token.data()), token.size(), md, &len);
  return hex_encode({md, len});
}

std::string SessionStore::create(const std::string& user_id, Clock::time_point now) {
  auto token = random_hex(32);
  std::lock_guard lock(mu_);
  std::erase_if(sessions_, [&](const auto& kv) { return kv.second.expires <= now; });
  sessions_[key_of(token)] = {user_id, now + ttl_};
  return token;
}

std::optional<std::string> SessionStore::resolve(std::string_view token, Clock::time_point now) const {
  if (token.empty()) return std::nullopt;
  const auto key = key_of(token);
  std::lock_guard lock(mu_);
  auto it = sessions_.find(key);
  if (it == sessions_.end() || it->second.expires <= now) return std::nullopt;
  return it->second.user_id;
}

void SessionStore::revoke(std::string_view token) {
  const auto key = key_of(token);
  std::lock_guard lock(mu_);
  sessions_.erase(key);
}

void SessionStore::revoke_user(const std::string& user_id) {
  std::lock_guard lock(mu_);
  std::erase_if(sessions_, [&](const auto& kv) { return kv.second.user_id == user_id; });
}

}  // namespace basinfo

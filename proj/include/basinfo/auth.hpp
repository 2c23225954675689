#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace basinfo {

/// Salted, iterated password verifier (PBKDF2-HMAC-SHA256). Serialized as
/// `pbkdf2-sha256$<iterations>$<salt-hex>$<hash-hex>`.
struct PasswordVerifier {
  int iterations = 0;
  std::string salt_hex;
  std::string hash_hex;

  static PasswordVerifier create(std::string_view password, int iterations = 60000);
  static PasswordVerifier parse(std::string_view encoded);
  std::string encode() const;
  /// Constant-time comparison of the derived key.
  bool verify(std::string_view password) const;
};

using Clock = std::chrono::system_clock;

/// In-memory session table. Only keyed hashes of tokens are kept.
class SessionStore {
 public:
  explicit SessionStore(std::string secret, std::chrono::seconds ttl = std::chrono::hours(24));

  std::string create(const std::string& user_id, Clock::time_point now = Clock::now());
  std::optional<std::string> resolve(std::string_view token, Clock::time_point now = Clock::now()) const;
  void revoke(std::string_view token);
  void revoke_user(const std::string& user_id);

 private:
  std::string key_of(std::string_view token) const;

  struct Session {
    std::string user_id;
    Clock::time_point expires;
  };
  std::string secret_;
  std::chrono::seconds ttl_;
  mutable std::mutex mu_;
  std::map<std::string, Session> sessions_;
};

}  // namespace basinfo

#include "pqfl/pqc.hpp"

#include <openssl/crypto.h>

#include <algorithm>
#include <array>
#include <random>

#include "pqfl/error.hpp"

extern "C" {
#include "dilithium2/api.h"
#include "falcon-512/api.h"
#include "sphincs-sha2-128f-simple/api.h"
}

#if defined(PQFL_PQCLEAN_AVX2)
#define PQFL_DILITHIUM2(fn) PQCLEAN_DILITHIUM2_AVX2_##fn
#define PQFL_FALCON512(fn) PQCLEAN_FALCON512_AVX2_##fn
#define PQFL_SPHINCS128F(fn) PQCLEAN_SPHINCSSHA2128FSIMPLE_AVX2_##fn
#else
#define PQFL_DILITHIUM2(fn) PQCLEAN_DILITHIUM2_CLEAN_##fn
#define PQFL_FALCON512(fn) PQCLEAN_FALCON512_CLEAN_##fn
#define PQFL_SPHINCS128F(fn) PQCLEAN_SPHINCSSHA2128FSIMPLE_CLEAN_##fn
#endif

namespace pqfl::pqc {
namespace detail {

struct Backend {
  SchemeDescriptor descriptor;
  std::size_t secret_key_len;
  // All return 0 on success, mirroring the PQClean API.
  int (*keypair)(std::uint8_t* pk, std::uint8_t* sk, const std::uint64_t* seed);
  int (*sign)(std::uint8_t* sig, std::size_t* sig_len, const std::uint8_t* m, std::size_t m_len,
              const std::uint8_t* sk);
  int (*verify)(const std::uint8_t* sig, std::size_t sig_len, const std::uint8_t* m,
                std::size_t m_len, const std::uint8_t* pk);
};

}  // namespace detail

namespace {

using detail::Backend;

constexpr std::size_t kMockKeyLen = 32;

// Mock scheme: HMAC-SHA256 keyed by the "public" key. Anyone holding the public
// key can forge, so it is only a fast deterministic stand-in for tests.
int mock_keypair(std::uint8_t* pk, std::uint8_t* sk, const std::uint64_t* seed) {
  std::array<std::uint8_t, kMockKeyLen> key{};
  if (seed != nullptr) {
    std::array<std::uint8_t, 16> material{'p', 'q', 'f', 'l', '-', 'm', 'o', 'c', 'k'};
    for (int i = 0; i < 8; ++i) material[8 + i] = static_cast<std::uint8_t>(*seed >> (8 * i));
    key = sha256(material);
  } else {
    std::random_device rd;
    for (auto& b : key) b = static_cast<std::uint8_t>(rd());
  }
  std::copy(key.begin(), key.end(), pk);
  std::copy(key.begin(), key.end(), sk);
  return 0;
}

int mock_sign(std::uint8_t* sig, std::size_t* sig_len, const std::uint8_t* m, std::size_t m_len,
              const std::uint8_t* sk) {
  const auto tag = hmac_sha256({sk, kMockKeyLen}, {m, m_len});
  std::copy(tag.begin(), tag.end(), sig);
  *sig_len = tag.size();
  return 0;
}

int mock_verify(const std::uint8_t* sig, std::size_t sig_len, const std::uint8_t* m,
                std::size_t m_len, const std::uint8_t* pk) {
  if (sig_len != kMockKeyLen) return -1;
  const auto tag = hmac_sha256({pk, kMockKeyLen}, {m, m_len});
  return CRYPTO_memcmp(tag.data(), sig, tag.size()) == 0 ? 0 : -1;
}

int dilithium2_keypair(std::uint8_t* pk, std::uint8_t* sk, const std::uint64_t*) {
  return PQFL_DILITHIUM2(crypto_sign_keypair)(pk, sk);
}
int falcon512_keypair(std::uint8_t* pk, std::uint8_t* sk, const std::uint64_t*) {
  return PQFL_FALCON512(crypto_sign_keypair)(pk, sk);
}
int sphincs128f_keypair(std::uint8_t* pk, std::uint8_t* sk, const std::uint64_t*) {
  return PQFL_SPHINCS128F(crypto_sign_keypair)(pk, sk);
}

const std::vector<Backend>& backends() {
  static const std::vector<Backend> kBackends = {
      {{"dilithium2", 2, PQFL_DILITHIUM2(CRYPTO_PUBLICKEYBYTES), PQFL_DILITHIUM2(CRYPTO_BYTES),
        true, PQFL_DILITHIUM2(CRYPTO_ALGNAME), true},
       PQFL_DILITHIUM2(CRYPTO_SECRETKEYBYTES),
       &dilithium2_keypair,
       &PQFL_DILITHIUM2(crypto_sign_signature),
       &PQFL_DILITHIUM2(crypto_sign_verify)},
      {{"falcon512", 1, PQFL_FALCON512(CRYPTO_PUBLICKEYBYTES), PQFL_FALCON512(CRYPTO_BYTES), true,
        PQFL_FALCON512(CRYPTO_ALGNAME), false},
       PQFL_FALCON512(CRYPTO_SECRETKEYBYTES),
       &falcon512_keypair,
       &PQFL_FALCON512(crypto_sign_signature),
       &PQFL_FALCON512(crypto_sign_verify)},
      {{"sphincsplus-sha2-128f", 1, PQFL_SPHINCS128F(CRYPTO_PUBLICKEYBYTES),
        PQFL_SPHINCS128F(CRYPTO_BYTES), true, PQFL_SPHINCS128F(CRYPTO_ALGNAME), true},
       PQFL_SPHINCS128F(CRYPTO_SECRETKEYBYTES),
       &sphincs128f_keypair,
       &PQFL_SPHINCS128F(crypto_sign_signature),
       &PQFL_SPHINCS128F(crypto_sign_verify)},
      {{"mock", 1, kMockKeyLen, kMockKeyLen, false, "HMAC-SHA256 (test only)", true},
       kMockKeyLen,
       &mock_keypair,
       &mock_sign,
       &mock_verify},
  };
  return kBackends;
}

const Backend* find_backend(std::string_view scheme_id) noexcept {
  for (const auto& b : backends()) {
    if (b.descriptor.scheme_id == scheme_id) return &b;
  }
  return nullptr;
}

}  // namespace

const std::vector<SchemeDescriptor>& registry() {
  static const std::vector<SchemeDescriptor> kRegistry = [] {
    std::vector<SchemeDescriptor> out;
    for (const auto& b : backends()) out.push_back(b.descriptor);
    return out;
  }();
  return kRegistry;
}

const SchemeDescriptor* find_scheme(std::string_view scheme_id) noexcept {
  const Backend* b = find_backend(scheme_id);
  return b != nullptr ? &b->descriptor : nullptr;
}

const SchemeDescriptor& require_scheme(std::string_view scheme_id) {
  const SchemeDescriptor* d = find_scheme(scheme_id);
  if (d == nullptr) throw RegistryError("unknown signature scheme '" + std::string(scheme_id) + "'");
  return *d;
}

std::vector<std::string> post_quantum_scheme_ids() {
  std::vector<std::string> out;
  for (const auto& d : registry()) {
    if (d.post_quantum) out.push_back(d.scheme_id);
  }
  return out;
}

KeyPair::~KeyPair() {
  if (!secret_key_.empty()) OPENSSL_cleanse(secret_key_.data(), secret_key_.size());
}

const std::string& KeyPair::scheme_id() const noexcept { return backend_->descriptor.scheme_id; }

Bytes KeyPair::sign(ByteSpan message) const {
  Bytes sig(backend_->descriptor.signature_len_max);
  std::size_t len = 0;
  if (backend_->sign(sig.data(), &len, message.data(), message.size(), secret_key_.data()) != 0 ||
      len > sig.size()) {
    throw CryptoError(scheme_id(), "signing failed");
  }
  sig.resize(len);
  return sig;
}

KeyPair keygen(std::string_view scheme_id, std::optional<std::uint64_t> seed) {
  const Backend* b = find_backend(scheme_id);
  if (b == nullptr) throw RegistryError("unknown signature scheme '" + std::string(scheme_id) + "'");
  Bytes pk(b->descriptor.public_key_len);
  Bytes sk(b->secret_key_len);
  if (b->keypair(pk.data(), sk.data(), seed ? &*seed : nullptr) != 0) {
    throw CryptoError(std::string(scheme_id), "key generation failed");
  }
  return KeyPair(b, std::move(pk), std::move(sk));
}

bool verify(std::string_view scheme_id, ByteSpan public_key, ByteSpan message,
            ByteSpan signature) noexcept {
  const Backend* b = find_backend(scheme_id);
  if (b == nullptr) return false;
  const auto& d = b->descriptor;
  if (public_key.size() != d.public_key_len) return false;
  if (signature.empty() || signature.size() > d.signature_len_max) return false;
  if (d.fixed_signature_len && signature.size() != d.signature_len_max) return false;
  return b->verify(signature.data(), signature.size(), message.data(), message.size(),
                   public_key.data()) == 0;
}

}  // namespace pqfl::pqc

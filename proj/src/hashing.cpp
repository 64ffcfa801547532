#include "optima/hashing.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

namespace optima {

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: OpenSSL digest init failed");
  }
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::update(const void* data, std::size_t size) {
  EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data, size);
}

void Sha256::update(const Matrix& m) {
  const std::array<Eigen::Index, 2> shape{m.rows(), m.cols()};
  update(shape.data(), sizeof(shape));
  update(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
}

void Sha256::update(const Vector& v) {
  const Eigen::Index n = v.size();
  update(&n, sizeof(n));
  update(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
}

std::string Sha256::hex_digest() {
  std::array<unsigned char, EVP_MAX_MD_SIZE> buf{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), buf.data(), &len);
  std::string out;
  out.reserve(len * 2);
  char hex[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(hex, sizeof(hex), "%02x", buf[i]);
    out += hex;
  }
  return out;
}

std::string sha256_hex(std::string_view text) {
  Sha256 h;
  h.update(text);
  return h.hex_digest();
}

}  // namespace optima

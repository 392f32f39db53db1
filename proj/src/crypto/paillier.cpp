/*
 * Copyright 2026 The STFL Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "stfl/crypto/paillier.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "stfl/crypto/sha256.hpp"
#include "stfl/errors.hpp"

namespace stfl {
namespace {

constexpr int kMillerRabinRounds = 40;

std::uint64_t KeyFingerprint(const mpz_class& n) {
  const Digest d = Sha256().Update("paillier-n").Update(n.get_str(16)).Finish();
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(d[i]) << (8 * i);
  return v;
}

double Log2(const mpz_class& v) {
  long exp = 0;
  const double mant = mpz_get_d_2exp(&exp, v.get_mpz_t());
  return static_cast<double>(exp) + std::log2(mant);
}

// |value| * 2^scale_bits must stay below n / 3.
void CheckHeadroom(const PaillierPublicKey& key, double bound, int scale_bits,
                   const char* op) {
  if (!std::isfinite(bound)) throw HeadroomError(std::string(op) + ": unbounded value");
  if (bound == 0.0) return;
  const double limit = Log2(key.n) - std::log2(3.0);
  if (std::log2(bound) + scale_bits >= limit) {
    throw HeadroomError(std::string(op) + ": |value| <= " + std::to_string(bound) +
                        " at 2^" + std::to_string(scale_bits) +
                        " scale exceeds n/3 headroom");
  }
}

void CheckSameKey(const PaillierPublicKey& key, const Ciphertext& c, const char* op) {
  if (c.key_fingerprint != key.fingerprint) {
    throw CryptoError(std::string(op) + ": ciphertext belongs to a different key");
  }
}

// round(x * 2^scale_bits) as a signed integer.
mpz_class ScaledInteger(double x, int scale_bits) {
  if (!std::isfinite(x)) throw CryptoError("fixed point: non-finite value");
  mpz_class out;
  mpz_set_d(out.get_mpz_t(), std::round(std::ldexp(x, scale_bits)));
  return out;
}

mpz_class PowSigned(const PaillierPublicKey& key, const mpz_class& base,
                    const mpz_class& exponent) {
  mpz_class out;
  if (exponent >= 0) {
    mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exponent.get_mpz_t(),
             key.n_squared.get_mpz_t());
    return out;
  }
  mpz_class inverse;
  if (mpz_invert(inverse.get_mpz_t(), base.get_mpz_t(), key.n_squared.get_mpz_t()) == 0) {
    throw CryptoError("ciphertext is not invertible mod n^2");
  }
  const mpz_class magnitude = -exponent;
  mpz_powm(out.get_mpz_t(), inverse.get_mpz_t(), magnitude.get_mpz_t(),
           key.n_squared.get_mpz_t());
  return out;
}

mpz_class RandomPrime(std::size_t bits, Csprng& rng, std::size_t& budget) {
  while (true) {
    mpz_class candidate = rng.RandomBits(bits);
    // Top two bits set so that p * q has exactly 2 * bits bits.
    mpz_setbit(candidate.get_mpz_t(), bits - 1);
    mpz_setbit(candidate.get_mpz_t(), bits - 2);
    mpz_setbit(candidate.get_mpz_t(), 0);
    const mpz_class ceiling = mpz_class(1) << bits;
    for (; candidate < ceiling; candidate += 2) {
      if (budget-- == 0) throw CryptoError("prime generation exceeded its candidate budget");
      if (mpz_probab_prime_p(candidate.get_mpz_t(), kMillerRabinRounds) > 0) {
        return candidate;
      }
    }
  }
}

}  // namespace

PaillierPublicKey PaillierPublicKey::FromModulus(const mpz_class& n) {
  if (n <= 3 || mpz_even_p(n.get_mpz_t())) {
    throw CryptoError("Paillier modulus must be an odd composite");
  }
  PaillierPublicKey key;
  key.n = n;
  key.g = n + 1;
  key.n_squared = n * n;
  key.bits = mpz_sizeinbase(n.get_mpz_t(), 2);
  key.fingerprint = KeyFingerprint(n);
  return key;
}

PaillierPrivateKey PaillierPrivateKey::FromPrimes(const mpz_class& p, const mpz_class& q) {
  if (p == q) throw CryptoError("Paillier primes must differ");
  PaillierPrivateKey key;
  key.public_key = PaillierPublicKey::FromModulus(p * q);
  key.p = p;
  key.q = q;
  const mpz_class pm1 = p - 1, qm1 = q - 1;
  mpz_lcm(key.lambda.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
  // With g = n + 1, L(g^lambda mod n^2) = lambda mod n, so mu = lambda^-1 mod n.
  if (mpz_invert(key.mu.get_mpz_t(), key.lambda.get_mpz_t(), key.public_key.n.get_mpz_t()) ==
      0) {
    throw CryptoError("lambda is not invertible mod n");
  }
  return key;
}

PaillierKeypair GeneratePaillierKeypair(std::size_t bits, Csprng& rng,
                                        std::size_t max_candidates) {
  if (bits != 512 && bits != 1024 && bits != 2048) {
    throw CryptoError("Paillier key size must be 512, 1024 or 2048 bits, got " +
                      std::to_string(bits));
  }
  std::size_t budget = max_candidates;
  while (true) {
    const mpz_class p = RandomPrime(bits / 2, rng, budget);
    const mpz_class q = RandomPrime(bits / 2, rng, budget);
    if (p == q) continue;
    const mpz_class n = p * q;
    const mpz_class phi = (p - 1) * (q - 1);
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), phi.get_mpz_t());
    if (g != 1 || mpz_sizeinbase(n.get_mpz_t(), 2) != bits) continue;
    PaillierKeypair pair;
    pair.private_key = PaillierPrivateKey::FromPrimes(p, q);
    pair.public_key = pair.private_key.public_key;
    return pair;
  }
}

mpz_class EncryptInteger(const PaillierPublicKey& key, const mpz_class& m, Csprng& rng) {
  if (m < 0 || m >= key.n) throw CryptoError("EncryptInteger: message outside [0, n)");
  mpz_class r, gcd;
  do {
    r = rng.Below(key.n);
    mpz_gcd(gcd.get_mpz_t(), r.get_mpz_t(), key.n.get_mpz_t());
  } while (r == 0 || gcd != 1);
  mpz_class rn;
  mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), key.n.get_mpz_t(), key.n_squared.get_mpz_t());
  // g^m = (1 + n)^m = 1 + m n (mod n^2)
  mpz_class c = (1 + m * key.n) % key.n_squared;
  c = (c * rn) % key.n_squared;
  return c;
}

mpz_class DecryptInteger(const PaillierPrivateKey& key, const mpz_class& c) {
  const auto& pub = key.public_key;
  if (c <= 0 || c >= pub.n_squared) throw CryptoError("DecryptInteger: ciphertext out of range");
  mpz_class u;
  mpz_powm(u.get_mpz_t(), c.get_mpz_t(), key.lambda.get_mpz_t(), pub.n_squared.get_mpz_t());
  mpz_class l = (u - 1) / pub.n;
  return (l * key.mu) % pub.n;
}

mpz_class EncodeFixedPoint(const PaillierPublicKey& key, double x, int scale_bits) {
  CheckHeadroom(key, std::abs(x), scale_bits, "EncodeFixedPoint");
  mpz_class v = ScaledInteger(x, scale_bits);
  if (v < 0) v += key.n;
  return v;
}

double DecodeFixedPoint(const PaillierPublicKey& key, const mpz_class& residue,
                        int scale_bits) {
  mpz_class v = residue;
  if (v > key.n / 2) v -= key.n;
  long exp = 0;
  const double mant = mpz_get_d_2exp(&exp, v.get_mpz_t());
  return std::ldexp(mant, static_cast<int>(exp) - scale_bits);
}

Ciphertext Encrypt(const PaillierPublicKey& key, double x, Csprng& rng,
                   int fractional_bits) {
  Ciphertext c;
  c.value = EncryptInteger(key, EncodeFixedPoint(key, x, fractional_bits), rng);
  c.key_fingerprint = key.fingerprint;
  c.scale_bits = fractional_bits;
  c.magnitude_bound = std::abs(x);
  return c;
}

double Decrypt(const PaillierPrivateKey& key, const Ciphertext& c) {
  CheckSameKey(key.public_key, c, "Decrypt");
  return DecodeFixedPoint(key.public_key, DecryptInteger(key, c.value), c.scale_bits);
}

Ciphertext AddCipher(const PaillierPublicKey& key, const Ciphertext& a,
                     const Ciphertext& b) {
  CheckSameKey(key, a, "AddCipher");
  CheckSameKey(key, b, "AddCipher");
  const Ciphertext* lo = &a;
  const Ciphertext* hi = &b;
  if (lo->scale_bits > hi->scale_bits) std::swap(lo, hi);
  Ciphertext out;
  out.key_fingerprint = key.fingerprint;
  out.scale_bits = hi->scale_bits;
  out.magnitude_bound = a.magnitude_bound + b.magnitude_bound;
  CheckHeadroom(key, out.magnitude_bound, out.scale_bits, "AddCipher");
  mpz_class lifted = lo->value;
  if (lo->scale_bits != hi->scale_bits) {
    // Rescale exactly by 2^diff.
    lifted = PowSigned(key, lo->value,
                       mpz_class(1) << (hi->scale_bits - lo->scale_bits));
  }
  out.value = (lifted * hi->value) % key.n_squared;
  return out;
}

Ciphertext AddPlain(const PaillierPublicKey& key, const Ciphertext& c, double k) {
  CheckSameKey(key, c, "AddPlain");
  Ciphertext out = c;
  out.magnitude_bound = c.magnitude_bound + std::abs(k);
  CheckHeadroom(key, out.magnitude_bound, c.scale_bits, "AddPlain");
  const mpz_class residue = EncodeFixedPoint(key, k, c.scale_bits);
  const mpz_class gk = (1 + residue * key.n) % key.n_squared;
  out.value = (c.value * gk) % key.n_squared;
  return out;
}

Ciphertext MulPlain(const PaillierPublicKey& key, const Ciphertext& c, double k,
                    int fractional_bits) {
  CheckSameKey(key, c, "MulPlain");
  Ciphertext out;
  out.key_fingerprint = key.fingerprint;
  out.scale_bits = c.scale_bits + fractional_bits;
  out.magnitude_bound = c.magnitude_bound * (std::abs(k) + std::ldexp(1.0, -fractional_bits));
  CheckHeadroom(key, out.magnitude_bound, out.scale_bits, "MulPlain");
  out.value = PowSigned(key, c.value, ScaledInteger(k, fractional_bits));
  return out;
}

Ciphertext Negate(const PaillierPublicKey& key, const Ciphertext& c) {
  CheckSameKey(key, c, "Negate");
  Ciphertext out = c;
  out.value = PowSigned(key, c.value, mpz_class(-1));
  return out;
}

CipherMatrix EncryptMatrix(const PaillierPublicKey& key, const Matrix2D& m, Csprng& rng,
                           int fractional_bits) {
  CipherMatrix out{m.rows(), m.cols(), {}};
  out.cells.reserve(m.size());
  for (double v : m.values()) out.cells.push_back(Encrypt(key, v, rng, fractional_bits));
  return out;
}

Matrix2D DecryptMatrix(const PaillierPrivateKey& key, const CipherMatrix& c) {
  Matrix2D out(c.rows, c.cols);
  for (std::size_t i = 0; i < c.cells.size(); ++i) out.values()[i] = Decrypt(key, c.cells[i]);
  return out;
}

CipherMatrix CipherTimesPlain(const PaillierPublicKey& key, const CipherMatrix& c,
                              const Matrix2D& p, int fractional_bits) {
  if (c.cols != p.rows()) {
    throw ShapeError("CipherTimesPlain: " + std::to_string(c.rows) + "x" +
                     std::to_string(c.cols) + " * " + p.ShapeString());
  }
  CipherMatrix out{c.rows, p.cols(), {}};
  out.cells.reserve(c.rows * p.cols());
  for (std::size_t i = 0; i < c.rows; ++i) {
    for (std::size_t j = 0; j < p.cols(); ++j) {
      Ciphertext acc = MulPlain(key, c.at(i, 0), p(0, j), fractional_bits);
      for (std::size_t t = 1; t < c.cols; ++t) {
        acc = AddCipher(key, acc, MulPlain(key, c.at(i, t), p(t, j), fractional_bits));
      }
      out.cells.push_back(std::move(acc));
    }
  }
  return out;
}

CipherMatrix PlainTimesCipher(const PaillierPublicKey& key, const Matrix2D& p,
                              const CipherMatrix& c, int fractional_bits) {
  if (p.cols() != c.rows) {
    throw ShapeError("PlainTimesCipher: " + p.ShapeString() + " * " +
                     std::to_string(c.rows) + "x" + std::to_string(c.cols));
  }
  CipherMatrix out{p.rows(), c.cols, {}};
  out.cells.reserve(p.rows() * c.cols);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols; ++j) {
      Ciphertext acc = MulPlain(key, c.at(0, j), p(i, 0), fractional_bits);
      for (std::size_t t = 1; t < c.rows; ++t) {
        acc = AddCipher(key, acc, MulPlain(key, c.at(t, j), p(i, t), fractional_bits));
      }
      out.cells.push_back(std::move(acc));
    }
  }
  return out;
}

CipherMatrix AddPlainMatrix(const PaillierPublicKey& key, const CipherMatrix& c,
                            const Matrix2D& p) {
  if (c.rows != p.rows() || c.cols != p.cols()) {
    throw ShapeError("AddPlainMatrix: shape mismatch");
  }
  CipherMatrix out{c.rows, c.cols, {}};
  out.cells.reserve(c.cells.size());
  for (std::size_t i = 0; i < c.cells.size(); ++i) {
    out.cells.push_back(AddPlain(key, c.cells[i], p.values()[i]));
  }
  return out;
}

CipherMatrix NegateMatrix(const PaillierPublicKey& key, const CipherMatrix& c) {
  CipherMatrix out{c.rows, c.cols, {}};
  out.cells.reserve(c.cells.size());
  for (const auto& cell : c.cells) out.cells.push_back(Negate(key, cell));
  return out;
}

namespace {

std::map<std::string, std::string> ParseFields(const std::string& text,
                                               const std::string& header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ValidationError("key file: expected header '" + header + "'");
  }
  std::map<std::string, std::string> fields;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos) throw ValidationError("key file: malformed line");
    fields[line.substr(0, space)] = line.substr(space + 1);
  }
  return fields;
}

mpz_class HexField(const std::map<std::string, std::string>& fields, const char* name) {
  const auto it = fields.find(name);
  if (it == fields.end()) throw ValidationError(std::string("key file: missing ") + name);
  mpz_class v;
  if (v.set_str(it->second, 16) != 0) {
    throw ValidationError(std::string("key file: bad hex in ") + name);
  }
  return v;
}

constexpr const char* kPublicHeader = "stfl-paillier-public v1";
constexpr const char* kPrivateHeader = "stfl-paillier-private v1";

}  // namespace

std::string SerializePublicKey(const PaillierPublicKey& key) {
  std::ostringstream out;
  out << kPublicHeader << "\nbits " << key.bits << "\nn " << key.n.get_str(16) << "\n";
  return out.str();
}

PaillierPublicKey ParsePublicKey(const std::string& text) {
  const auto fields = ParseFields(text, kPublicHeader);
  auto key = PaillierPublicKey::FromModulus(HexField(fields, "n"));
  if (fields.count("bits") && std::stoul(fields.at("bits")) != key.bits) {
    throw ValidationError("key file: bit length does not match modulus");
  }
  return key;
}

std::string SerializePrivateKey(const PaillierPrivateKey& key) {
  std::ostringstream out;
  out << kPrivateHeader << "\nbits " << key.public_key.bits << "\np " << key.p.get_str(16)
      << "\nq " << key.q.get_str(16) << "\n";
  return out.str();
}

PaillierPrivateKey ParsePrivateKey(const std::string& text) {
  const auto fields = ParseFields(text, kPrivateHeader);
  return PaillierPrivateKey::FromPrimes(HexField(fields, "p"), HexField(fields, "q"));
}

}  // namespace stfl

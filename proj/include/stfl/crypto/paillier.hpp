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

#ifndef STFL_CRYPTO_PAILLIER_HPP_
#define STFL_CRYPTO_PAILLIER_HPP_

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stfl/crypto/csprng.hpp"
#include "stfl/nn/matrix.hpp"

namespace stfl {

class CryptoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A fixed-point value would no longer fit below n / 3 after an operation.
class HeadroomError : public CryptoError {
 public:
  using CryptoError::CryptoError;
};

inline constexpr int kDefaultFractionalBits = 40;

struct PaillierPublicKey {
  mpz_class n;
  mpz_class g;          // n + 1
  mpz_class n_squared;
  std::size_t bits = 0;
  std::uint64_t fingerprint = 0;

  static PaillierPublicKey FromModulus(const mpz_class& n);
};

struct PaillierPrivateKey {
  PaillierPublicKey public_key;
  mpz_class p;
  mpz_class q;
  mpz_class lambda;  // lcm(p - 1, q - 1)
  mpz_class mu;      // lambda^-1 mod n

  static PaillierPrivateKey FromPrimes(const mpz_class& p, const mpz_class& q);
};

struct PaillierKeypair {
  PaillierPublicKey public_key;
  PaillierPrivateKey private_key;
};

// bits must be 512, 1024 or 2048. Primes pass 40 Miller-Rabin rounds.
// Throws CryptoError if no prime turns up within `max_candidates` draws.
PaillierKeypair GeneratePaillierKeypair(std::size_t bits, Csprng& rng,
                                        std::size_t max_candidates = 200000);

// Raw scheme on residues m in [0, n).
mpz_class EncryptInteger(const PaillierPublicKey& key, const mpz_class& m, Csprng& rng);
mpz_class DecryptInteger(const PaillierPrivateKey& key, const mpz_class& c);

// Signed fixed point: x is represented by round(x * 2^scale_bits) mod n, the
// upper half of [0, n) holding negatives. Encodings must stay below n / 3 in
// magnitude so that one plaintext multiply and many additions cannot wrap.
mpz_class EncodeFixedPoint(const PaillierPublicKey& key, double x, int scale_bits);
double DecodeFixedPoint(const PaillierPublicKey& key, const mpz_class& residue,
                        int scale_bits);

struct Ciphertext {
  mpz_class value;  // in [0, n^2)
  std::uint64_t key_fingerprint = 0;
  int scale_bits = 0;
  // Upper bound on |plaintext|, tracked through operations for headroom checks.
  double magnitude_bound = 0.0;
};

Ciphertext Encrypt(const PaillierPublicKey& key, double x, Csprng& rng,
                   int fractional_bits = kDefaultFractionalBits);
double Decrypt(const PaillierPrivateKey& key, const Ciphertext& c);

// Dec(AddCipher(Enc(a), Enc(b))) = a + b
Ciphertext AddCipher(const PaillierPublicKey& key, const Ciphertext& a,
                     const Ciphertext& b);
// Dec(AddPlain(Enc(a), k)) = a + k
Ciphertext AddPlain(const PaillierPublicKey& key, const Ciphertext& c, double k);
// Dec(MulPlain(Enc(a), k)) = a * k; the result carries fractional_bits more
// scale bits than the input.
Ciphertext MulPlain(const PaillierPublicKey& key, const Ciphertext& c, double k,
                    int fractional_bits = kDefaultFractionalBits);
Ciphertext Negate(const PaillierPublicKey& key, const Ciphertext& c);

struct CipherMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Ciphertext> cells;  // row-major

  Ciphertext& at(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
  const Ciphertext& at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
};

CipherMatrix EncryptMatrix(const PaillierPublicKey& key, const Matrix2D& m, Csprng& rng,
                           int fractional_bits = kDefaultFractionalBits);
Matrix2D DecryptMatrix(const PaillierPrivateKey& key, const CipherMatrix& c);

// Encrypted product with a plaintext matrix on either side:
// CipherTimesPlain(C, P) = C * P and PlainTimesCipher(P, C) = P * C.
CipherMatrix CipherTimesPlain(const PaillierPublicKey& key, const CipherMatrix& c,
                              const Matrix2D& p,
                              int fractional_bits = kDefaultFractionalBits);
CipherMatrix PlainTimesCipher(const PaillierPublicKey& key, const Matrix2D& p,
                              const CipherMatrix& c,
                              int fractional_bits = kDefaultFractionalBits);
// Elementwise c + p.
CipherMatrix AddPlainMatrix(const PaillierPublicKey& key, const CipherMatrix& c,
                            const Matrix2D& p);
CipherMatrix NegateMatrix(const PaillierPublicKey& key, const CipherMatrix& c);

// Text formats, one "name value" pair per line, integers in base 16:
//   stfl-paillier-public v1 / bits / n
//   stfl-paillier-private v1 / bits / p / q
std::string SerializePublicKey(const PaillierPublicKey& key);
PaillierPublicKey ParsePublicKey(const std::string& text);
std::string SerializePrivateKey(const PaillierPrivateKey& key);
PaillierPrivateKey ParsePrivateKey(const std::string& text);

}  // namespace stfl

#endif  // STFL_CRYPTO_PAILLIER_HPP_

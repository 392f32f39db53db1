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

#include <gtest/gtest.h>

#include <cmath>

#include "stfl/errors.hpp"
#include "support/oracles.hpp"

namespace stfl {
namespace {

using testing::RandomMatrix;

const double kUlp40 = std::ldexp(1.0, -40);

class PaillierTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Csprng rng = Csprng::FromSeed(2024);
    keys_ = new PaillierKeypair(GeneratePaillierKeypair(512, rng));
  }
  static void TearDownTestSuite() {
    delete keys_;
    keys_ = nullptr;
  }
  const PaillierPublicKey& pub() const { return keys_->public_key; }
  const PaillierPrivateKey& priv() const { return keys_->private_key; }

  Csprng rng_ = Csprng::FromSeed(7);
  static PaillierKeypair* keys_;
};

PaillierKeypair* PaillierTest::keys_ = nullptr;

TEST_F(PaillierTest, KeyShape) {
  EXPECT_EQ(pub().bits, 512u);
  EXPECT_EQ(pub().g, pub().n + 1);
  EXPECT_EQ(pub().n_squared, pub().n * pub().n);
  EXPECT_NE(priv().p, priv().q);
  EXPECT_GT(mpz_probab_prime_p(priv().p.get_mpz_t(), 40), 0);
  EXPECT_GT(mpz_probab_prime_p(priv().q.get_mpz_t(), 40), 0);
  EXPECT_TRUE(mpz_odd_p(pub().n.get_mpz_t()));
}

TEST_F(PaillierTest, IntegerRoundTripSmallMessages) {
  for (int m = 0; m <= 100; ++m) {
    EXPECT_EQ(DecryptInteger(priv(), EncryptInteger(pub(), m, rng_)), m);
  }
}

TEST_F(PaillierTest, EncryptionIsRandomized) {
  EXPECT_NE(EncryptInteger(pub(), 42, rng_), EncryptInteger(pub(), 42, rng_));
  EXPECT_NE(Encrypt(pub(), 1.25, rng_).value, Encrypt(pub(), 1.25, rng_).value);
}

TEST_F(PaillierTest, ResiduesNearModulusRoundTrip) {
  // Residues at the top of [0, n) are the signed encodings of small negatives.
  for (int k = 1; k <= 3; ++k) {
    const mpz_class m = pub().n - k;
    EXPECT_EQ(DecryptInteger(priv(), EncryptInteger(pub(), m, rng_)), m);
    EXPECT_EQ(DecodeFixedPoint(pub(), m, 0), -k);
  }
  EXPECT_EQ(EncodeFixedPoint(pub(), -1.0, 0), pub().n - 1);
  EXPECT_THROW(EncryptInteger(pub(), pub().n, rng_), CryptoError);
}

TEST_F(PaillierTest, HomomorphicIdentities) {
  EXPECT_EQ(Decrypt(priv(), AddCipher(pub(), Encrypt(pub(), 3, rng_), Encrypt(pub(), 4, rng_))),
            7.0);
  const mpz_class sum = EncryptInteger(pub(), 3, rng_) * EncryptInteger(pub(), 4, rng_);
  EXPECT_EQ(DecryptInteger(priv(), sum % pub().n_squared), 7);
  for (double a : {0.0, -2.75, 123.456}) {
    EXPECT_NEAR(Decrypt(priv(), MulPlain(pub(), Encrypt(pub(), a, rng_), 1.0)), a,
                std::abs(a) * kUlp40 + kUlp40);
  }
  EXPECT_NEAR(Decrypt(priv(), MulPlain(pub(), Encrypt(pub(), 1.5, rng_), 2.0)), 3.0,
              2 * kUlp40);
  EXPECT_NEAR(Decrypt(priv(), AddPlain(pub(), Encrypt(pub(), -1.5, rng_), 0.25)), -1.25,
              2 * kUlp40);
  EXPECT_NEAR(Decrypt(priv(), Negate(pub(), Encrypt(pub(), 0.75, rng_))), -0.75, kUlp40);
}

TEST_F(PaillierTest, RandomFixedPointPairs) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.Uniform(-1000, 1000);
    const double b = rng.Uniform(-1000, 1000);
    const double k = rng.Uniform(-10, 10);
    const Ciphertext ca = Encrypt(pub(), a, rng_);
    const Ciphertext cb = Encrypt(pub(), b, rng_);
    // One addition: error <= 2 * 2^-f, plus the double rounding of a + b.
    EXPECT_NEAR(Decrypt(priv(), AddCipher(pub(), ca, cb)), a + b, 2 * kUlp40 + 1e-12);
    EXPECT_NEAR(Decrypt(priv(), MulPlain(pub(), ca, k)), a * k,
                kUlp40 * (std::abs(k) + std::abs(a) + 1) + 1e-12);
  }
}

TEST_F(PaillierTest, MatrixRoundTrip) {
  Rng rng(4);
  const Matrix2D m = RandomMatrix(3, 4, rng, -50, 50);
  EXPECT_LE(MaxAbsDiff(DecryptMatrix(priv(), EncryptMatrix(pub(), m, rng_)), m), kUlp40);
  const Matrix2D zeros(2, 3);
  EXPECT_EQ(DecryptMatrix(priv(), EncryptMatrix(pub(), zeros, rng_)), zeros);
}

TEST_F(PaillierTest, EncryptedProductsMatchPlaintext) {
  Rng rng(5);
  const Matrix2D a = RandomMatrix(4, 3, rng, -2, 2);
  const Matrix2D w = RandomMatrix(3, 2, rng, -2, 2);
  const Matrix2D left = RandomMatrix(2, 4, rng, -2, 2);
  const CipherMatrix ca = EncryptMatrix(pub(), a, rng_);
  EXPECT_LT(MaxAbsDiff(DecryptMatrix(priv(), CipherTimesPlain(pub(), ca, w)), MatMul(a, w)),
            1e-9);
  EXPECT_LT(MaxAbsDiff(DecryptMatrix(priv(), PlainTimesCipher(pub(), left, ca)),
                       MatMul(left, a)),
            1e-9);
  EXPECT_THROW(CipherTimesPlain(pub(), ca, Matrix2D(2, 2)), ShapeError);
}

TEST_F(PaillierTest, HeadroomForOneMultiplyAndManyAdditions) {
  const double big = std::ldexp(1.0, 20);
  Ciphertext acc = MulPlain(pub(), Encrypt(pub(), big, rng_), -big);
  const Ciphertext term = MulPlain(pub(), Encrypt(pub(), big, rng_), big);
  for (int i = 0; i < 1024; ++i) acc = AddCipher(pub(), acc, term);
  EXPECT_DOUBLE_EQ(Decrypt(priv(), acc), 1023.0 * big * big);
}

TEST_F(PaillierTest, HeadroomOverflowIsRejected) {
  Ciphertext c = Encrypt(pub(), 1000.0, rng_);
  EXPECT_THROW(
      {
        for (int i = 0; i < 20; ++i) c = MulPlain(pub(), c, 1000.0);
      },
      HeadroomError);
  EXPECT_THROW(Encrypt(pub(), std::ldexp(1.0, 500), rng_), HeadroomError);
  EXPECT_THROW(Encrypt(pub(), NAN, rng_), CryptoError);
}

TEST_F(PaillierTest, KeyMismatchIsRejected) {
  Csprng other_rng = Csprng::FromSeed(99);
  const auto other = GeneratePaillierKeypair(512, other_rng);
  const Ciphertext c = Encrypt(other.public_key, 1.0, rng_);
  EXPECT_THROW(Decrypt(priv(), c), CryptoError);
  EXPECT_THROW(AddCipher(pub(), c, Encrypt(pub(), 1.0, rng_)), CryptoError);
}

TEST_F(PaillierTest, KeyTextRoundTrip) {
  const std::string pub_text = SerializePublicKey(pub());
  EXPECT_EQ(pub_text.rfind("stfl-paillier-public v1\n", 0), 0u);
  const auto parsed_pub = ParsePublicKey(pub_text);
  EXPECT_EQ(parsed_pub.n, pub().n);
  EXPECT_EQ(parsed_pub.fingerprint, pub().fingerprint);
  const auto parsed_priv = ParsePrivateKey(SerializePrivateKey(priv()));
  EXPECT_EQ(parsed_priv.lambda, priv().lambda);
  EXPECT_EQ(parsed_priv.mu, priv().mu);
  EXPECT_THROW(ParsePublicKey("garbage\n"), ValidationError);
  EXPECT_THROW(ParsePublicKey("stfl-paillier-public v1\nn xyz\n"), ValidationError);
}

TEST(PaillierKeygenTest, DeterministicPerSeedAndValidatesSize) {
  Csprng a = Csprng::FromSeed(5), b = Csprng::FromSeed(5);
  EXPECT_EQ(GeneratePaillierKeypair(512, a).public_key.n,
            GeneratePaillierKeypair(512, b).public_key.n);
  Csprng rng = Csprng::FromSeed(6);
  EXPECT_THROW(GeneratePaillierKeypair(768, rng), CryptoError);
  EXPECT_THROW(GeneratePaillierKeypair(512, rng, 3), CryptoError);
}

TEST(PaillierKeygenTest, LargerKeysWork) {
  Csprng rng = Csprng::FromSeed(8);
  const auto keys = GeneratePaillierKeypair(1024, rng);
  EXPECT_EQ(keys.public_key.bits, 1024u);
  EXPECT_NEAR(Decrypt(keys.private_key, Encrypt(keys.public_key, -3.5, rng)), -3.5, kUlp40);
}

}  // namespace
}  // namespace stfl

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>

#include "oracles.hpp"
#include "pascpr/error.hpp"
#include "pascpr/shaping.hpp"

using namespace pascpr;

namespace {

BitVector index_bits(unsigned long long v, int k) {
  BitVector b(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) b[static_cast<std::size_t>(i)] = (v >> (k - 1 - i)) & 1u;
  return b;
}

unsigned long long bits_value(const BitVector& b) {
  unsigned long long v = 0;
  for (auto bit : b) v = (v << 1) | bit;
  return v;
}

}  // namespace

TEST_CASE("trellis counts for small alphabets") {
  const auto a2 = AmplitudeAlphabet::odd(2);
  CHECK(build_trellis(a2, 4, 20).total() == 11);
  CHECK(build_trellis(a2, 4, 4).total() == 1);
  CHECK(build_trellis(AmplitudeAlphabet::odd(4), 1, 49).total() == 4);

  const auto t = build_trellis(a2, 4, 20);
  for (long e = 0; e <= 20; ++e) CHECK(t.count(0, e) == 1);
  for (int n = 0; n <= 4; ++n)
    for (long e = n; e + 8 <= 20 + n - 4; ++e) CHECK(t.count(n, e) <= t.count(n, e + 1));
}

TEST_CASE("trellis counts agree with brute-force enumeration") {
  for (int m : {2, 3, 4}) {
    const auto alphabet = AmplitudeAlphabet::odd(m);
    std::vector<int> levels(alphabet.levels().begin(), alphabet.levels().end());
    for (int n = 1; n <= 8; ++n) {
      const long top = static_cast<long>(n) * levels.back() * levels.back();
      for (long e = n; e <= top; e += std::max(1L, top / 7)) {
        if (m == 4 && n > 6) continue;
        const auto members = oracle::sphere_members(levels, n, e);
        CHECK(build_trellis(alphabet, n, e).total() == static_cast<long>(members.size()));
      }
    }
  }
}

TEST_CASE("empty sphere and infeasible rates are rejected") {
  const auto a2 = AmplitudeAlphabet::odd(2);
  try {
    build_trellis(a2, 4, 3);
    FAIL("expected empty sphere");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_sphere);
  }
  try {
    min_emax(a2, 4, 5);
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::infeasible);
  }
}

TEST_CASE("min_emax") {
  CHECK(min_emax(AmplitudeAlphabet::odd(2), 4, 3) == 20);
  CHECK(min_emax(AmplitudeAlphabet::odd(4), 1, 2) == 49);
  CHECK(min_emax(AmplitudeAlphabet::odd(2), 4, 4) == 36);
  // regression constant, big-integer DP
  CHECK(min_emax(AmplitudeAlphabet::odd(8), 512, 1024) == 7784);
}

TEST_CASE("ess_encode examples") {
  const auto t1 = build_trellis(AmplitudeAlphabet::odd(4), 1, 49);
  CHECK(ess_encode(index_bits(2, 2), t1) == AmplitudeSequence{5});
  CHECK(bits_value(ess_decode(AmplitudeSequence{5}, t1, 2)) == 2);

  const auto t4 = build_trellis(AmplitudeAlphabet::odd(2), 4, 20);
  CHECK(ess_encode(index_bits(0, 3), t4) == AmplitudeSequence{1, 1, 1, 1});
  CHECK(bits_value(ess_decode(AmplitudeSequence{1, 1, 1, 1}, t4, 3)) == 0);
  const auto members = oracle::sphere_members({1, 3}, 4, 20);
  REQUIRE(members.size() == 11);
  CHECK(ess_encode(index_bits(6, 3), t4) == members[6]);
}

TEST_CASE("exhaustive roundtrip, ordering and sphere membership") {
  for (int m : {2, 4}) {
    const auto alphabet = AmplitudeAlphabet::odd(m);
    std::vector<int> levels(alphabet.levels().begin(), alphabet.levels().end());
    const int n_max = m == 2 ? 12 : 5;
    for (int n = 1; n <= n_max; ++n) {
      const int k_max = static_cast<int>(std::floor(n * std::log2(m)));
      for (int k = std::max(1, k_max - 2); k <= k_max; ++k) {
        const auto t = build_trellis_for_rate(alphabet, n, k);
        const auto members = oracle::sphere_members(levels, n, t.max_energy());
        AmplitudeSequence prev;
        for (unsigned long long i = 0; i < (1ull << k); ++i) {
          const auto seq = ess_encode(index_bits(i, k), t);
          CHECK(seq == members[i]);
          CHECK(oracle::energy(seq) <= t.max_energy());
          if (i > 0) CHECK(prev < seq);
          CHECK(bits_value(ess_decode(seq, t, k)) == i);
          prev = seq;
        }
      }
    }
  }
}

TEST_CASE("ess_decode rejects corrupted sequences") {
  const auto t = build_trellis(AmplitudeAlphabet::odd(2), 4, 20);
  const std::vector<std::pair<AmplitudeSequence, Errc>> bad = {
      {{1, 1, 5, 1}, Errc::invalid_sequence},  // not a level
      {{3, 3, 3, 1}, Errc::invalid_sequence},  // energy 28 > 20
      {{3, 3, 1, 1}, Errc::invalid_sequence},  // rank 10 >= 2^3
      {{1, 1, 1}, Errc::length_mismatch},
  };
  for (const auto& [seq, code] : bad) {
    try {
      ess_decode(seq, t, 3);
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  }
}

TEST_CASE("output statistics equal the enumeration of the first 2^k sequences") {
  struct Case { int m, n, k; };
  for (auto c : {Case{2, 4, 3}, Case{2, 8, 6}, Case{4, 3, 5}, Case{4, 5, 8}, Case{4, 4, 8}}) {
    const auto alphabet = AmplitudeAlphabet::odd(c.m);
    std::vector<int> levels(alphabet.levels().begin(), alphabet.levels().end());
    const auto t = build_trellis_for_rate(alphabet, c.n, c.k);
    const auto members = oracle::sphere_members(levels, c.n, t.max_energy());
    double e = 0.0;
    std::vector<double> pmf(static_cast<std::size_t>(c.m), 0.0);
    const std::size_t used = std::size_t{1} << c.k;
    for (std::size_t i = 0; i < used; ++i)
      for (int a : members[i]) {
        e += a * a;
        pmf[static_cast<std::size_t>(alphabet.index_of(a))] += 1.0;
      }
    e /= static_cast<double>(used * static_cast<std::size_t>(c.n));
    const auto stats = ess_output_statistics(t, c.k);
    CHECK(stats.mean_energy == doctest::Approx(e).epsilon(1e-12));
    for (std::size_t a = 0; a < pmf.size(); ++a)
      CHECK(stats.pmf[a] == doctest::Approx(pmf[a] / static_cast<double>(used * static_cast<std::size_t>(c.n))).epsilon(1e-12));
  }
}

TEST_CASE("ESS mean energy does not exceed the uniform source") {
  for (int m : {2, 4, 8})
    for (int n : {4, 8, 16, 32}) {
      const auto alphabet = AmplitudeAlphabet::odd(m);
      const int k_max = static_cast<int>(n * std::log2(m));
      for (int k = 1; k < k_max; k += std::max(1, k_max / 6)) {
        const auto t = build_trellis_for_rate(alphabet, n, k);
        CHECK(ess_output_statistics(t, k).mean_energy <= alphabet.uniform_mean_energy() + 1e-12);
      }
    }
}

TEST_CASE("trellis cache roundtrip") {
  const auto dir = std::filesystem::temp_directory_path() / "pascpr_trellis_test";
  std::filesystem::remove_all(dir);
  const auto alphabet = AmplitudeAlphabet::odd(8);
  const auto built = cached_trellis(dir, alphabet, 32, 700);
  const auto loaded = cached_trellis(dir, alphabet, 32, 700);
  CHECK(loaded.max_energy() == built.max_energy());
  CHECK(loaded.total() == built.total());
  for (long j = 0; j <= built.grid_max(); ++j)
    for (int n = 0; n <= 32; ++n) CHECK(loaded.at(n, j) == built.at(n, j));
  std::filesystem::remove_all(dir);
}

TEST_CASE("mb_fit") {
  const auto a8 = AmplitudeAlphabet::odd(8);
  auto uni = mb_fit(a8, 3.0);
  CHECK(uni.lambda == 0.0);
  for (double p : uni.pmf) CHECK(p == doctest::Approx(0.125).epsilon(1e-15));

  auto two = mb_fit(AmplitudeAlphabet::odd(2), 1.0);
  CHECK(two.lambda == 0.0);
  CHECK(two.pmf[0] == doctest::Approx(0.5));

  auto fit = mb_fit(a8, 2.0);
  CHECK(fit.lambda > 0.0);
  CHECK(std::abs(entropy_bits(fit.pmf) - 2.0) < 1e-6);
  CHECK(std::accumulate(fit.pmf.begin(), fit.pmf.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  // monotone scan oracle: the first lambda on a fine grid whose entropy drops below 2
  double scan = 0.0;
  for (double l = 0.0; l < 1.0; l += 1e-6)
    if (entropy_bits(mb_prior(a8, l).pmf) < 2.0) {
      scan = l;
      break;
    }
  CHECK(std::abs(fit.lambda - scan) < 2e-6);

  CHECK_THROWS_AS(mb_fit(a8, 0.0), Error);
  CHECK_THROWS_AS(mb_fit(a8, 3.5), Error);
}

TEST_CASE("mb_sample statistics") {
  const auto a8 = AmplitudeAlphabet::odd(8);
  RngStream rng(11);
  const auto uni = mb_sample(a8, mb_fit(a8, 3.0), 800000, rng);
  std::map<int, double> freq;
  for (int a : uni) freq[a] += 1.0 / 800000.0;
  for (int a : a8.levels()) CHECK(std::abs(freq[a] - 0.125) < 0.002);

  MbPrior degenerate{0.0, {1, 0, 0, 0, 0, 0, 0, 0}};
  for (int a : mb_sample(a8, degenerate, 1000, rng)) CHECK(a == 1);

  const auto prior = mb_fit(a8, 2.0);
  const auto draws = mb_sample(a8, prior, 1000000, rng);
  std::vector<double> emp(8, 0.0);
  for (int a : draws) emp[static_cast<std::size_t>(a8.index_of(a))] += 1e-6;
  CHECK(std::abs(entropy_bits(emp) - 2.0) < 0.01);
}

TEST_CASE("pas_map") {
  const QamConstellation qam(AmplitudeAlphabet::odd(8));
  const std::vector<double> pmf(8, 0.125);
  const std::vector<int> amps{1, 3, 5, 7};
  const BitVector signs{0, 1, 0, 1};
  const auto f = pas_map(amps, signs, qam, pmf);
  REQUIRE(f.size() == 1);
  CHECK(f.pol[0][0] == cplx(1, -3));
  CHECK(f.pol[1][0] == cplx(5, -7));
  CHECK(qam.point(f.labels[0][0]) == f.pol[0][0]);
  CHECK(qam.point(f.labels[1][0]) == f.pol[1][0]);

  const auto ones = pas_map(std::vector<int>(8, 1), BitVector(8, 0), qam, pmf);
  REQUIRE(ones.size() == 2);
  for (const auto& p : ones.pol)
    for (auto s : p) CHECK(s == cplx(1, 1));

  CHECK_THROWS_AS(pas_map(std::vector<int>(6, 1), BitVector(6, 0), qam, pmf), Error);
  CHECK_THROWS_AS(pas_map(std::vector<int>(8, 1), BitVector(4, 0), qam, pmf), Error);

  // average symbol energy of MB frames: 2 E[a^2] per polarization
  const auto a8 = AmplitudeAlphabet::odd(8);
  const auto prior = mb_fit(a8, 2.0);
  RngStream rng(5);
  const std::size_t n = 400000;
  const auto draws = mb_sample(a8, prior, n, rng);
  BitVector sb(n);
  for (auto& b : sb) b = rng.bit();
  const auto frame = pas_map(draws, sb, qam, prior.pmf);
  for (const auto& p : frame.pol) {
    double e = 0;
    for (auto s : p) e += std::norm(s);
    e /= static_cast<double>(p.size());
    CHECK(e == doctest::Approx(2.0 * mean_energy(a8, prior.pmf)).epsilon(0.01));
  }
}

TEST_CASE("Gray labelling of each dimension") {
  const QamConstellation qam(AmplitudeAlphabet::odd(8));
  CHECK(qam.bits_per_symbol() == 8);
  CHECK(qam.size() == 256);
  // neighbouring PAM levels, including across zero, differ in exactly one bit
  std::vector<std::pair<double, unsigned>> dim;
  for (std::uint16_t lab = 0; lab < 16; ++lab) dim.push_back({qam.point(qam.symbol_label(lab, 0)).real(), lab});
  std::sort(dim.begin(), dim.end());
  for (std::size_t i = 1; i < dim.size(); ++i) CHECK(std::popcount(dim[i].second ^ dim[i - 1].second) == 1);
  CHECK(qam.decide({0.3, -14.2}) == cplx(1, -15));
  CHECK(qam.decide({16.7, 2.01}) == cplx(15, 3));
}

TEST_CASE("interleave") {
  const std::vector<AmplitudeSequence> blocks{{1, 3, 5, 7}, {7, 7, 1, 3}};
  RngStream a(99), b(99);
  const auto x = interleave(blocks, 8, a);
  const auto y = interleave(blocks, 8, b);
  CHECK(x == y);
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == AmplitudeSequence{1, 1, 3, 3, 5, 7, 7, 7});
  CHECK(oracle::energy(x) == oracle::energy(blocks[0]) + oracle::energy(blocks[1]));

  RngStream c(1);
  auto one = interleave(std::span(blocks).first(1), 4, c);
  std::sort(one.begin(), one.end());
  CHECK(one == AmplitudeSequence{1, 3, 5, 7});
  CHECK_THROWS_AS(interleave(blocks, 7, c), Error);
}

TEST_CASE("amplitude source") {
  ShapingConfig cfg;
  cfg.block_length = 16;
  cfg.bits_per_block = 32;
  AmplitudeSource ess(cfg);
  CHECK(ess.rate() == 2.0);
  RngStream rng(3);
  const auto seq = ess.generate(1600, rng);
  for (std::size_t b = 0; b < 100; ++b) {
    AmplitudeSequence block(seq.begin() + static_cast<long>(16 * b), seq.begin() + static_cast<long>(16 * b + 16));
    CHECK(oracle::energy(block) <= ess.trellis()->max_energy());
  }
  CHECK_THROWS_AS(ess.generate(100, rng), Error);

  cfg.mode = ShapingMode::mb_iid;
  AmplitudeSource mb(cfg);
  CHECK(mb.rate() == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(mb.mean_energy() < AmplitudeAlphabet::odd(8).uniform_mean_energy());

  cfg.mode = ShapingMode::ess;
  cfg.interleaver_span = 64;
  AmplitudeSource il(cfg);
  RngStream r1(8), r2(8);
  CHECK(il.generate(128, r1) == il.generate(128, r2));
}

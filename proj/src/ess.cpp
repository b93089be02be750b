#include "pascpr/ess.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pascpr/error.hpp"

namespace pascpr {
namespace {

constexpr char kMagic[8] = {'P', 'A', 'S', 'E', 'S', 'S', 'T', 'R'};
constexpr std::uint32_t kFormatVersion = 1;

mpz_class power_of_two(int k) {
  mpz_class v;
  mpz_setbit(v.get_mpz_t(), static_cast<mp_bitcnt_t>(k));
  return v;
}

// x / y for big integers of any magnitude, as a double.
double ratio(const mpz_class& x, const mpz_class& y) {
  if (sgn(x) == 0) return 0.0;
  long ex = 0, ey = 0;
  const double dx = mpz_get_d_2exp(&ex, x.get_mpz_t());
  const double dy = mpz_get_d_2exp(&ey, y.get_mpz_t());
  return std::ldexp(dx / dy, static_cast<int>(ex - ey));
}

long grid_index(int n, long energy) {
  const long d = energy - n;
  return d >= 0 ? d / 8 : -((-d + 7) / 8);
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error(Errc::io, "truncated trellis file");
  return v;
}

}  // namespace

EssTrellis::EssTrellis(const AmplitudeAlphabet& alphabet, int block_length)
    : alphabet_(std::make_shared<const AmplitudeAlphabet>(alphabet)), block_length_(block_length) {
  if (block_length < 1) throw Error(Errc::domain, "block length must be at least 1");
  for (int a : alphabet.levels()) steps_.push_back((static_cast<long>(a) * a - 1) / 8);
}

void EssTrellis::push_column() {
  const long j = static_cast<long>(columns_.size());
  std::vector<mpz_class> col(static_cast<std::size_t>(block_length_) + 1);
  col[0] = 1;
  for (int n = 1; n <= block_length_; ++n) {
    mpz_class& acc = col[static_cast<std::size_t>(n)];
    for (long q : steps_) {
      if (q > j) break;
      acc += (q == 0 ? col[static_cast<std::size_t>(n) - 1]
                     : columns_[static_cast<std::size_t>(j - q)][static_cast<std::size_t>(n) - 1]);
    }
  }
  columns_.push_back(std::move(col));
}

mpz_class EssTrellis::count(int n, long energy) const {
  if (n < 0 || n > block_length_) throw Error(Errc::domain, "trellis depth out of range");
  if (energy < 0) return 0;
  if (n == 0) return 1;
  const long j = grid_index(n, energy);
  if (j < 0) return 0;
  if (j > grid_max()) throw Error(Errc::domain, "energy beyond the stored trellis grid");
  return at(n, j);
}

int EssTrellis::capacity_bits() const {
  return static_cast<int>(mpz_sizeinbase(total().get_mpz_t(), 2)) - 1;
}

EssTrellis build_trellis(const AmplitudeAlphabet& alphabet, int block_length, long max_energy) {
  EssTrellis t(alphabet, block_length);
  const long min_energy = static_cast<long>(block_length) * alphabet.level(0) * alphabet.level(0);
  if (max_energy < min_energy)
    throw Error(Errc::empty_sphere, "E_max " + std::to_string(max_energy) + " below minimum energy " +
                                        std::to_string(min_energy));
  const long j_max = grid_index(block_length, max_energy);
  t.columns_.reserve(static_cast<std::size_t>(j_max) + 1);
  for (long j = 0; j <= j_max; ++j) t.push_column();
  return t;
}

EssTrellis build_trellis_for_rate(const AmplitudeAlphabet& alphabet, int block_length, int k) {
  if (k < 1) throw Error(Errc::domain, "k must be at least 1");
  const double max_bits = block_length * std::log2(static_cast<double>(alphabet.size()));
  if (k > max_bits + 1e-9)
    throw Error(Errc::infeasible, std::to_string(k) + " bits exceed log2(M^N) for N=" + std::to_string(block_length));
  EssTrellis t(alphabet, block_length);
  const mpz_class target = power_of_two(k);
  const long j_limit = static_cast<long>(block_length) * t.steps_.back();
  do {
    t.push_column();
  } while (t.total() < target && t.grid_max() < j_limit);
  if (t.total() < target) throw Error(Errc::infeasible, "2^k exceeds the number of sequences");
  return t;
}

long min_emax(const AmplitudeAlphabet& alphabet, int block_length, int k) {
  return build_trellis_for_rate(alphabet, block_length, k).max_energy();
}

AmplitudeSequence ess_encode(std::span<const std::uint8_t> bits, const EssTrellis& trellis) {
  const int n_total = trellis.block_length();
  mpz_class index;
  const std::size_t k = bits.size();
  for (std::size_t i = 0; i < k; ++i)
    if (bits[i]) mpz_setbit(index.get_mpz_t(), static_cast<mp_bitcnt_t>(k - 1 - i));
  if (index >= trellis.total()) throw Error(Errc::domain, "input index exceeds the sphere population");

  const auto steps = trellis.level_steps();
  const auto& alphabet = trellis.alphabet();
  AmplitudeSequence out(static_cast<std::size_t>(n_total));
  long j = trellis.grid_max();
  for (int p = 0; p < n_total; ++p) {
    const int rest = n_total - p - 1;
    bool placed = false;
    for (std::size_t a = 0; a < steps.size() && steps[a] <= j; ++a) {
      const mpz_class& c = trellis.at(rest, j - steps[a]);
      if (index < c) {
        out[static_cast<std::size_t>(p)] = alphabet.level(static_cast<int>(a));
        j -= steps[a];
        placed = true;
        break;
      }
      index -= c;
    }
    if (!placed) throw Error(Errc::domain, "index walk left the sphere");
  }
  return out;
}

BitVector ess_decode(std::span<const int> sequence, const EssTrellis& trellis, int k) {
  const int n_total = trellis.block_length();
  if (static_cast<int>(sequence.size()) != n_total)
    throw Error(Errc::length_mismatch, "sequence length differs from the trellis block length");
  const auto steps = trellis.level_steps();
  const auto& alphabet = trellis.alphabet();
  mpz_class index;
  long j = trellis.grid_max();
  for (int p = 0; p < n_total; ++p) {
    const int a = alphabet.index_of(sequence[static_cast<std::size_t>(p)]);
    if (a < 0)
      throw Error(Errc::invalid_sequence, "amplitude " + std::to_string(sequence[static_cast<std::size_t>(p)]) +
                                              " is not in the alphabet");
    if (steps[static_cast<std::size_t>(a)] > j) throw Error(Errc::invalid_sequence, "sequence is outside the sphere");
    const int rest = n_total - p - 1;
    for (int b = 0; b < a; ++b) index += trellis.at(rest, j - steps[static_cast<std::size_t>(b)]);
    j -= steps[static_cast<std::size_t>(a)];
  }
  if (index >= power_of_two(k)) throw Error(Errc::invalid_sequence, "sequence rank exceeds 2^k");
  BitVector bits(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) bits[static_cast<std::size_t>(i)] = mpz_tstbit(index.get_mpz_t(), static_cast<mp_bitcnt_t>(k - 1 - i));
  return bits;
}

EssOutputStatistics ess_output_statistics(const EssTrellis& trellis, int k) {
  const int n_total = trellis.block_length();
  const auto steps = trellis.level_steps();
  const std::size_t m = steps.size();
  const long jn = trellis.grid_max() + 1;
  const auto& alphabet = trellis.alphabet();
  const mpz_class used = power_of_two(k);
  if (used > trellis.total()) throw Error(Errc::infeasible, "2^k exceeds the sphere population");

  // Expected suffix energy and level counts of a uniformly drawn member of
  // each (n, j) subtree, built with double-valued transition weights.
  const auto cell = [&](int n, long j) { return static_cast<std::size_t>(j) * (static_cast<std::size_t>(n_total) + 1) + static_cast<std::size_t>(n); };
  std::vector<double> energy(cell(0, jn), 0.0);
  std::vector<double> hist(cell(0, jn) * m, 0.0);
  for (long j = 0; j < jn; ++j) {
    for (int n = 1; n <= n_total; ++n) {
      const mpz_class& parent = trellis.at(n, j);
      if (sgn(parent) == 0) continue;
      double e = 0.0;
      double* h = &hist[cell(n, j) * m];
      for (std::size_t a = 0; a < m && steps[a] <= j; ++a) {
        const long jc = j - steps[a];
        const double w = ratio(trellis.at(n - 1, jc), parent);
        if (w == 0.0) continue;
        const double a2 = static_cast<double>(alphabet.level(static_cast<int>(a))) * alphabet.level(static_cast<int>(a));
        e += w * (a2 + energy[cell(n - 1, jc)]);
        const double* hc = &hist[cell(n - 1, jc) * m];
        for (std::size_t b = 0; b < m; ++b) h[b] += w * hc[b];
        h[a] += w;
      }
      energy[cell(n, j)] = e;
    }
  }

  EssOutputStatistics stats;
  stats.pmf.assign(m, 0.0);
  const long j_top = trellis.grid_max();
  if (used == trellis.total()) {
    stats.mean_energy = energy[cell(n_total, j_top)] / n_total;
    for (std::size_t a = 0; a < m; ++a) stats.pmf[a] = hist[cell(n_total, j_top) * m + a] / n_total;
    return stats;
  }

  // The first 2^k sequences are the subtrees hanging left of the path that
  // encodes index 2^k.
  mpz_class index = used;
  long j = j_top;
  double prefix_energy = 0.0;
  std::vector<double> prefix_hist(m, 0.0);
  double total_energy = 0.0;
  std::vector<double> total_hist(m, 0.0);
  for (int p = 0; p < n_total; ++p) {
    const int rest = n_total - p - 1;
    for (std::size_t a = 0; a < m && steps[a] <= j; ++a) {
      const mpz_class& c = trellis.at(rest, j - steps[a]);
      const double a2 = static_cast<double>(alphabet.level(static_cast<int>(a))) * alphabet.level(static_cast<int>(a));
      if (index < c) {
        prefix_energy += a2;
        prefix_hist[a] += 1.0;
        j -= steps[a];
        break;
      }
      const double w = ratio(c, used);
      const long jc = j - steps[a];
      total_energy += w * (prefix_energy + a2 + energy[cell(rest, jc)]);
      for (std::size_t b = 0; b < m; ++b) total_hist[b] += w * (prefix_hist[b] + hist[cell(rest, jc) * m + b]);
      total_hist[a] += w;
      index -= c;
    }
  }
  stats.mean_energy = total_energy / n_total;
  for (std::size_t a = 0; a < m; ++a) stats.pmf[a] = total_hist[a] / n_total;
  return stats;
}

void EssTrellis::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::io, "cannot write " + path.string());
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kFormatVersion);
  write_pod(os, static_cast<std::uint32_t>(alphabet_->size()));
  for (int a : alphabet_->levels()) write_pod(os, static_cast<std::int32_t>(a));
  write_pod(os, static_cast<std::int32_t>(block_length_));
  write_pod(os, static_cast<std::int64_t>(max_energy()));
  std::vector<unsigned char> buf;
  for (const auto& col : columns_) {
    for (const auto& v : col) {
      const std::size_t bytes = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
      buf.resize(bytes);
      std::size_t written = 0;
      mpz_export(buf.data(), &written, 1, 1, 1, 0, v.get_mpz_t());
      write_pod(os, static_cast<std::uint32_t>(written));
      os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(written));
    }
  }
  if (!os) throw Error(Errc::io, "failed writing " + path.string());
}

EssTrellis EssTrellis::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io, "cannot read " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error(Errc::io, "not a trellis file");
  if (read_pod<std::uint32_t>(is) != kFormatVersion) throw Error(Errc::io, "unsupported trellis file version");
  const auto m = read_pod<std::uint32_t>(is);
  std::vector<int> levels;
  for (std::uint32_t i = 0; i < m; ++i) levels.push_back(read_pod<std::int32_t>(is));
  const int n = read_pod<std::int32_t>(is);
  const long e_max = static_cast<long>(read_pod<std::int64_t>(is));
  EssTrellis t(AmplitudeAlphabet(std::move(levels)), n);
  const long j_max = grid_index(n, e_max);
  std::vector<unsigned char> buf;
  for (long j = 0; j <= j_max; ++j) {
    std::vector<mpz_class> col(static_cast<std::size_t>(n) + 1);
    for (auto& v : col) {
      const auto bytes = read_pod<std::uint32_t>(is);
      buf.resize(bytes);
      is.read(reinterpret_cast<char*>(buf.data()), bytes);
      if (!is) throw Error(Errc::io, "truncated trellis file");
      mpz_import(v.get_mpz_t(), bytes, 1, 1, 1, 0, buf.data());
    }
    t.columns_.push_back(std::move(col));
  }
  return t;
}

EssTrellis cached_trellis(const std::filesystem::path& cache_dir, const AmplitudeAlphabet& alphabet,
                          int block_length, long max_energy) {
  std::ostringstream name;
  name << "ess_v" << kFormatVersion << "_M";
  for (int a : alphabet.levels()) name << '-' << a;
  name << "_N" << block_length << "_E" << (block_length + 8 * grid_index(block_length, max_energy)) << ".bin";
  const auto path = cache_dir / name.str();
  if (std::filesystem::exists(path)) {
    try {
      auto t = EssTrellis::load(path);
      if (t.alphabet() == alphabet && t.block_length() == block_length &&
          t.grid_max() == grid_index(block_length, max_energy))
        return t;
    } catch (const Error&) {
      // rebuild below
    }
  }
  auto t = build_trellis(alphabet, block_length, max_energy);
  make_directories(cache_dir);
  t.save(path);
  return t;
}

}  // namespace pascpr

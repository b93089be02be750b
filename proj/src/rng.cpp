#include "pascpr/rng.hpp"

namespace pascpr {

// splitmix64 finalizer
std::uint64_t RngStream::mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream RngStream::split(std::uint64_t tag) const {
  return RngStream(mix(seed_ ^ mix(tag + 0x632be59bd9b4e019ULL)));
}

RngStream RngStream::split(std::initializer_list<std::uint64_t> tags) const {
  RngStream out = *this;
  for (auto t : tags) out = out.split(t);
  return out;
}

}  // namespace pascpr

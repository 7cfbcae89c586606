#include "hfc/rng.hpp"

#include <sstream>

#include "hfc/error.hpp"

namespace hfc {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng make_rng(std::uint64_t seed, std::uint64_t chain, std::uint64_t stream) {
  const std::uint64_t h = mix64(mix64(mix64(seed) ^ chain) ^ (stream * 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

std::string save_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void load_rng(Rng& rng, const std::string& text) {
  std::istringstream is(text);
  is >> rng;
  if (!is) throw Error(ErrorKind::ParseError, "corrupt RNG state");
}

}  // namespace hfc

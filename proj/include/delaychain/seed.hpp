#pragma once

#include <cstdint>
#include <string_view>

namespace delaychain {

// SplitMix64 finalizer; used to fan a run seed out to independent streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a; stable across platforms unlike std::hash.
constexpr std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t counter) {
  return splitmix64(run_seed ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
}

// Per (train, station) stream seed.
constexpr std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view key, int station) {
  return derive_seed(derive_seed(run_seed, stable_hash(key)), static_cast<std::uint64_t>(station));
}

}  // namespace delaychain

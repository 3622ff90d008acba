#pragma once

#include "chilasso/model.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace chl {

// GDICT1 dictionary file layout, all integers little endian:
//
//   "GDICT1"                      6 bytes
//   m, p, G                       uint64 each
//   group sizes                   G x uint64
//   labels                        G x (uint32 byte length, UTF-8 bytes)
//   atoms                         m*p float64, column major
//
// Doubles are written as their IEEE-754 bit patterns so a save/load round trip
// is bit exact.
std::vector<std::uint8_t> encode_gdict(const GroupedDictionary& dict);
GroupedDictionary decode_gdict(const std::vector<std::uint8_t>& bytes);

void save_gdict(const GroupedDictionary& dict, const std::filesystem::path& path);
GroupedDictionary load_gdict(const std::filesystem::path& path);

}  // namespace chl

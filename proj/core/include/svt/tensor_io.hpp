#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "svt/tensor.hpp"

namespace svt {

// SVT1 container: magic "SVT1", u8 dtype (0 = f64, 1 = bitpacked), u8 rank,
// rank x u64 little-endian extents, then the payload (f64 little-endian, or
// packed u64 words with zero padding). Round trips are bit-exact.

void write_svt1(std::ostream& out, const RealTensor& tensor);
void write_svt1(std::ostream& out, const SpikeTensor& tensor);
void save_svt1(const std::string& path, const RealTensor& tensor);
void save_svt1(const std::string& path, const SpikeTensor& tensor);

enum class Svt1Dtype : std::uint8_t { F64 = 0, BitPacked = 1 };

Svt1Dtype peek_svt1_dtype(const std::string& path);
RealTensor load_svt1_real(const std::string& path);
SpikeTensor load_svt1_spike(const std::string& path);
RealTensor read_svt1_real(std::istream& in);
SpikeTensor read_svt1_spike(std::istream& in);

// Plain-text weight manifest: one "name=relative/path.svt1" per line,
// resolved against the manifest's directory.
using Manifest = std::map<std::string, std::string>;
Manifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const Manifest& entries);

} // namespace svt

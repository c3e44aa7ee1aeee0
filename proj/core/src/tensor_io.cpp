#include "svt/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "svt/errors.hpp"

namespace svt {

namespace {

constexpr char kMagic[4] = {'S', 'V', 'T', '1'};

void put_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64_le(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw IoError("SVT1: truncated header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void put_f64_le(std::ostream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64_le(out, bits);
}

double get_f64_le(std::istream& in) {
    const std::uint64_t bits = get_u64_le(in);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

void write_header(std::ostream& out, Svt1Dtype dtype, const Shape& shape) {
    out.write(kMagic, 4);
    const auto dt = static_cast<unsigned char>(dtype);
    out.write(reinterpret_cast<const char*>(&dt), 1);
    if (shape.rank() > 255) throw IoError("SVT1: rank exceeds u8");
    const auto rank = static_cast<unsigned char>(shape.rank());
    out.write(reinterpret_cast<const char*>(&rank), 1);
    for (std::size_t a = 0; a < shape.rank(); ++a) put_u64_le(out, shape.extent(a));
}

Shape read_header(std::istream& in, Svt1Dtype expected) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("SVT1: bad magic");
    unsigned char dt = 0, rank = 0;
    in.read(reinterpret_cast<char*>(&dt), 1);
    in.read(reinterpret_cast<char*>(&rank), 1);
    if (!in) throw IoError("SVT1: truncated header");
    if (dt != static_cast<unsigned char>(expected)) {
        throw IoError("SVT1: dtype tag " + std::to_string(dt) + " does not match request");
    }
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = static_cast<std::size_t>(get_u64_le(in));
    return Shape(dims);
}

} // namespace

void write_svt1(std::ostream& out, const RealTensor& tensor) {
    write_header(out, Svt1Dtype::F64, tensor.shape());
    for (std::size_t i = 0; i < tensor.numel(); ++i) put_f64_le(out, tensor[i]);
}

void write_svt1(std::ostream& out, const SpikeTensor& tensor) {
    write_header(out, Svt1Dtype::BitPacked, tensor.shape());
    for (std::uint64_t w : tensor.words()) put_u64_le(out, w);
}

RealTensor read_svt1_real(std::istream& in) {
    const Shape shape = read_header(in, Svt1Dtype::F64);
    RealTensor out(shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = get_f64_le(in);
    if (!in) throw IoError("SVT1: truncated payload");
    return out;
}

SpikeTensor read_svt1_spike(std::istream& in) {
    const Shape shape = read_header(in, Svt1Dtype::BitPacked);
    SpikeTensor out(shape);
    for (auto& w : out.words()) w = get_u64_le(in);
    if (!in) throw IoError("SVT1: truncated payload");
    const std::size_t last = shape.last();
    if (last % 64 != 0) {
        const std::uint64_t keep = (std::uint64_t{1} << (last % 64)) - 1;
        const std::size_t wpr = out.words_per_row();
        for (std::size_t r = 0; r < shape.outer(); ++r) {
            if (out.words()[r * wpr + wpr - 1] & ~keep) throw IoError("SVT1: nonzero padding bits");
        }
    }
    return out;
}

namespace {

template <typename T>
void save_impl(const std::string& path, const T& tensor) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_svt1(out, tensor);
    if (!out) throw IoError("write failed: " + path);
}

} // namespace

void save_svt1(const std::string& path, const RealTensor& tensor) { save_impl(path, tensor); }
void save_svt1(const std::string& path, const SpikeTensor& tensor) { save_impl(path, tensor); }

Svt1Dtype peek_svt1_dtype(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("SVT1: bad magic in " + path);
    unsigned char dt = 0;
    in.read(reinterpret_cast<char*>(&dt), 1);
    if (!in || dt > 1) throw IoError("SVT1: bad dtype tag in " + path);
    return static_cast<Svt1Dtype>(dt);
}

RealTensor load_svt1_real(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    return read_svt1_real(in);
}

SpikeTensor load_svt1_spike(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    return read_svt1_spike(in);
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    Manifest entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("manifest line without '=': " + line);
        entries[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return entries;
}

void write_manifest(const std::string& path, const Manifest& entries) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open manifest for writing: " + path);
    for (const auto& [name, file] : entries) out << name << "=" << file << "\n";
}

} // namespace svt

#include "doctest.h"

#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>

#include "svt/kernels.hpp"
#include "svt/tensor.hpp"
#include "svt/tensor_io.hpp"

#include "support/oracles.hpp"

using namespace svt;

TEST_CASE("shape basics") {
    const Shape s{2, 3, 4};
    CHECK(s.numel() == 24);
    CHECK(s.last() == 4);
    CHECK(s.outer() == 6);
    CHECK(s.flat_index({1, 2, 3}) == 23);
    CHECK_THROWS_AS(Shape{0}, ShapeMismatchError);
}

TEST_CASE("pack identity and zero cases") {
    RealTensor v(Shape{4});
    v[1] = 1.0;
    v[2] = 1.0;
    const SpikeTensor s = pack(v);
    CHECK_FALSE(s.get_flat(0));
    CHECK(s.get_flat(1));
    CHECK(s.get_flat(2));
    CHECK_FALSE(s.get_flat(3));

    const SpikeTensor zero = pack(RealTensor(Shape{8}));
    CHECK(zero.count_ones() == 0);
    CHECK(zero.words()[0] == 0);
}

TEST_CASE("pack rejects non-binary input") {
    RealTensor v(Shape{3});
    v[1] = 0.5;
    CHECK_THROWS_AS(pack(v), NonBinaryInputError);
}

TEST_CASE("pack/unpack round trip on random non-aligned shapes") {
    Rng rng(11);
    for (const std::size_t last : {1u, 7u, 63u, 64u, 65u, 100u}) {
        const SpikeTensor x = SpikeTensor::random(Shape{10, last}, rng);
        CHECK(pack(unpack(x)) == x);
        // Padding bits stay zero.
        const std::size_t tail_bits = last % 64;
        if (tail_bits != 0) {
            const std::uint64_t keep = (std::uint64_t{1} << tail_bits) - 1;
            for (std::size_t r = 0; r < 10; ++r) {
                CHECK((x.row(r)[x.words_per_row() - 1] & ~keep) == 0);
            }
        }
    }
    const SpikeTensor big = SpikeTensor::random(Shape{1000}, rng);
    CHECK(pack(unpack(big)) == big);
}

TEST_CASE("signed_binary_matmul hand values") {
    const SpikeTensor ones = SpikeTensor::ones(Shape{1, 4});
    const SpikeTensor zeros = SpikeTensor::zeros(Shape{4, 1});
    const SpikeTensor ones_col = SpikeTensor::ones(Shape{4, 1});

    CHECK(signed_binary_matmul(ones, ones_col)[0] == 4);
    CHECK(signed_binary_matmul(ones, zeros)[0] == -4);

    // a=[1,0,1,0], b=[1,1,0,0]: (+1)(+1)+(-1)(+1)+(+1)(-1)+(-1)(-1) = 0
    SpikeTensor a(Shape{1, 4});
    a.set_flat(0, true);
    a.set_flat(2, true);
    SpikeTensor b(Shape{4, 1});
    b.set_flat(0, true);
    b.set_flat(1, true);
    CHECK(signed_binary_matmul(a, b)[0] == 0);
}

TEST_CASE("signed_binary_matmul equals naive +-1 triple loop up to D=512") {
    Rng rng(23);
    for (const std::size_t d : {3u, 64u, 129u, 512u}) {
        const SpikeTensor a = SpikeTensor::random(Shape{5, d}, rng);
        const SpikeTensor b = SpikeTensor::random(Shape{d, 4}, rng);
        const IntTensor fast = signed_binary_matmul(a, b);
        const IntTensor slow = oracle::signed_matmul_naive(a, b);
        for (std::size_t i = 0; i < fast.numel(); ++i) CHECK(fast[i] == slow[i]);
    }
}

TEST_CASE("binary and mixed kernels match naive oracles") {
    Rng rng(31);
    const SpikeTensor a = SpikeTensor::random(Shape{6, 70}, rng);
    const SpikeTensor b = SpikeTensor::random(Shape{70, 5}, rng);

    const IntTensor bin = binary_matmul(a, b);
    const IntTensor bin_ref = oracle::binary_matmul_naive(a, b);
    for (std::size_t i = 0; i < bin.numel(); ++i) CHECK(bin[i] == bin_ref[i]);

    // signed x binary == 2*(binary and) - colsum
    const IntTensor mixed = signed_by_binary_matmul(a, b);
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            std::int64_t acc = 0;
            for (std::size_t d = 0; d < 70; ++d) {
                acc += (a.get_flat(r * 70 + d) ? 1 : -1) * (b.get_flat(d * 5 + c) ? 1 : 0);
            }
            CHECK(mixed[r * 5 + c] == acc);
        }
    }

    IntTensor w(Shape{70, 5});
    for (std::size_t i = 0; i < w.numel(); ++i) {
        w[i] = static_cast<std::int64_t>(rng.next_below(21)) - 10;
    }
    const IntTensor qv = binary_by_int_matmul(a, w);
    const IntTensor qv_pm = pm1_by_int_matmul(a, w);
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            std::int64_t acc = 0, acc_pm = 0;
            for (std::size_t d = 0; d < 70; ++d) {
                const std::int64_t bit = a.get_flat(r * 70 + d) ? 1 : 0;
                acc += bit * w[d * 5 + c];
                acc_pm += (2 * bit - 1) * w[d * 5 + c];
            }
            CHECK(qv[r * 5 + c] == acc);
            CHECK(qv_pm[r * 5 + c] == acc_pm);
        }
    }
}

TEST_CASE("matmul_real identity, scalar, and naive oracle") {
    RealTensor eye(Shape{3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
    Rng rng(5);
    const RealTensor x = oracle::random_real(Shape{3, 4}, rng);
    const RealTensor ix = matmul_real(eye, x);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(ix[i] == x[i]);

    RealTensor two(Shape{1, 1});
    two[0] = 2.0;
    RealTensor three(Shape{1, 1});
    three[0] = 3.0;
    CHECK(matmul_real(two, three)[0] == 6.0);

    const RealTensor a = oracle::random_real(Shape{5, 6}, rng);
    const RealTensor b = oracle::random_real(Shape{6, 4}, rng);
    const RealTensor fast = matmul_real(a, b);
    const RealTensor slow = oracle::matmul_naive(a, b);
    for (std::size_t i = 0; i < fast.numel(); ++i) {
        CHECK(std::abs(fast[i] - slow[i]) <= 1e-12);
    }

    CHECK_THROWS_AS(matmul_real(a, a), ShapeMismatchError);
}

TEST_CASE("reshape joint layout lands row-major") {
    // [B,T,N,D] = [1,2,3,4] -> [1,6,4]: element (t=1, n=2, d) sits at row 5.
    Rng rng(7);
    const SpikeTensor x = SpikeTensor::random(Shape{1, 2, 3, 4}, rng);
    const SpikeTensor flat = x.reshape(Shape{1, 6, 4});
    for (std::size_t d = 0; d < 4; ++d) {
        CHECK(flat.at({0, 5, d}) == x.at({0, 1, 2, d}));
    }
    // [2,3] -> [3,2] -> [2,3] is the identity.
    const SpikeTensor y = SpikeTensor::random(Shape{2, 3}, rng);
    CHECK(y.reshape(Shape{3, 2}).reshape(Shape{2, 3}) == y);
    CHECK_THROWS_AS(x.reshape(Shape{5, 5}), ShapeMismatchError);
}

TEST_CASE("transpose twice is the identity and preserves the multiset") {
    Rng rng(9);
    const SpikeTensor x = SpikeTensor::random(Shape{2, 3}, rng);
    const SpikeTensor xtt = x.transpose_axes({1, 0}).transpose_axes({1, 0});
    CHECK(xtt == x);

    const RealTensor r = oracle::random_real(Shape{2, 3, 4}, rng);
    const RealTensor p = r.transpose_axes({2, 0, 1});
    std::multiset<double> before(r.data().begin(), r.data().end());
    std::multiset<double> after(p.data().begin(), p.data().end());
    CHECK(before == after);
    CHECK_THROWS_AS(r.transpose_axes({0, 1}), ShapeMismatchError);
    CHECK_THROWS_AS(r.transpose_axes({0, 0, 1}), ShapeMismatchError);
}

TEST_CASE("select and concat channels") {
    Rng rng(13);
    const SpikeTensor x = SpikeTensor::random(Shape{4, 10}, rng);
    const SpikeTensor left = x.select_channels(0, 6);
    const SpikeTensor right = x.select_channels(6, 10);
    CHECK(SpikeTensor::concat_channels(left, right) == x);
}

TEST_CASE("SVT1 round trip is bit-exact") {
    Rng rng(17);
    RealTensor r = oracle::random_real(Shape{3, 5}, rng);
    r[0] = -0.0;
    r[1] = 1e-300;
    std::stringstream buf;
    write_svt1(buf, r);
    const RealTensor back = read_svt1_real(buf);
    CHECK(back.shape() == r.shape());
    for (std::size_t i = 0; i < r.numel(); ++i) {
        CHECK(std::memcmp(&back.data()[i], &r.data()[i], 8) == 0);
    }

    const SpikeTensor s = SpikeTensor::random(Shape{5, 70}, rng);
    std::stringstream buf2;
    write_svt1(buf2, s);
    CHECK(read_svt1_spike(buf2) == s);

    std::stringstream bad("nope");
    CHECK_THROWS_AS(read_svt1_real(bad), IoError);
}

TEST_CASE("rng stream is pinned") {
    // Frozen expected values depend on the generator never changing; these
    // pins catch an accidental algorithm swap.
    Rng rng(42);
    CHECK(rng.next_u64() == 1546998764402558742ull);
    CHECK(rng.next_u64() == 6990951692964543102ull);
    Rng again(42);
    CHECK(again.next_u64() == 1546998764402558742ull);

    Rng u(7);
    CHECK(u.uniform() == 0.7005764821796896);

    // Child streams are decorrelated from the parent and reproducible.
    Rng parent(9);
    CHECK(parent.child(1).next_u64() == Rng(9).child(1).next_u64());
    CHECK(parent.child(1).next_u64() != parent.child(2).next_u64());
}

TEST_CASE("int tensor reshape and transpose") {
    IntTensor x(Shape{2, 3});
    for (std::size_t i = 0; i < 6; ++i) x[i] = static_cast<std::int64_t>(i) - 2;
    const IntTensor xt = x.transpose_axes({1, 0});
    CHECK(xt.shape() == Shape{3, 2});
    CHECK(xt[0 * 2 + 1] == x[1 * 3 + 0]);
    const IntTensor back = xt.transpose_axes({1, 0});
    for (std::size_t i = 0; i < 6; ++i) CHECK(back[i] == x[i]);
    CHECK(x.reshape(Shape{6}).reshape(Shape{2, 3}).data() == x.data());
    CHECK(x.to_real()[0] == -2.0);
}

TEST_CASE("manifest round trip") {
    const Manifest m{{"wq", "wq.svt1"}, {"wk", "sub/wk.svt1"}};
    const std::string path = "manifest_test.txt";
    write_manifest(path, m);
    CHECK(read_manifest(path) == m);
    std::remove(path.c_str());
}

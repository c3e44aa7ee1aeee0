#pragma once

#include "svt/tensor.hpp"

namespace svt {

// 2-D contraction kernels. Spike operands are interpreted either as {0,1}
// or, where the name says signed/pm1, as the mapped values 2s-1 in {-1,+1}.
// All integer kernels are exact and bit-identical regardless of schedule.

// Standard real contraction a[RxD] * b[DxS], 64-bit accumulation.
RealTensor matmul_real(const RealTensor& a, const RealTensor& b);

// out[r,s] = sum_d (2a[r,d]-1)(2b[d,s]-1), via D - 2*popcount(row XOR col).
IntTensor signed_binary_matmul(const SpikeTensor& a, const SpikeTensor& b);

// out[r,s] = sum_d a[r,d]*b[d,s] with both operands {0,1}, via popcount(AND).
IntTensor binary_matmul(const SpikeTensor& a, const SpikeTensor& b);

// out[r,s] = sum_d (2a[r,d]-1)*b[d,s] with b in {0,1}:
// 2*popcount(a AND b) - popcount(b).
IntTensor signed_by_binary_matmul(const SpikeTensor& a, const SpikeTensor& b);

// out[r,s] = sum_{d : a[r,d]=1} b[d,s]; accumulation driven by set bits only.
IntTensor binary_by_int_matmul(const SpikeTensor& a, const IntTensor& b);

// out[r,s] = sum_d (2a[r,d]-1)*b[d,s] = 2*sum_{a=1} b[d,s] - colsum(b).
IntTensor pm1_by_int_matmul(const SpikeTensor& a, const IntTensor& b);

// out[r,s] = sum_{d : b[d,s]=1} a[r,d].
IntTensor int_by_binary_matmul(const IntTensor& a, const SpikeTensor& b);

// out[r,s] = sum_{d : a[r,d]=1} b[d,s] with real weights b; the spike-driven
// projection kernel (work scales with the number of set bits).
RealTensor binary_by_real_matmul(const SpikeTensor& a, const RealTensor& b);

} // namespace svt

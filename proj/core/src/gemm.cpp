#include "colm/gemm.hpp"

#include <atomic>
#include <cstring>
#include <vector>

#include "colm/parallel.hpp"

namespace colm::gemm {

namespace {

std::atomic<i64> g_flops{0};

template <typename T>
struct Tile {
  static constexpr int MR = 4;
  static constexpr int NR = std::is_same_v<T, float> ? 16 : 8;
};

template <typename T>
std::vector<T>& pack_buffer() {
  thread_local std::vector<T> buf;
  return buf;
}

// Packs B[k0.., n0..n0+nr) into panel[k * NR + c]; short columns padded
// with zeros so the micro-kernel always sees NR lanes.
template <typename T, int NR>
void pack_panel_n(const T* b, i64 ldb, i64 k, i64 n0, i64 nr, T* panel) {
  for (i64 kk = 0; kk < k; ++kk) {
    const T* src = b + kk * ldb + n0;
    T* dst = panel + kk * NR;
    for (i64 c = 0; c < nr; ++c) dst[c] = src[c];
    for (i64 c = nr; c < NR; ++c) dst[c] = T(0);
  }
}

// Transposing packer for the nt path: panel[k * NR + c] = B[n0+c][k].
template <typename T, int NR>
void pack_panel_t(const T* b, i64 ldb, i64 k, i64 n0, i64 nr, T* panel) {
  for (i64 c = 0; c < nr; ++c) {
    const T* src = b + (n0 + c) * ldb;
    for (i64 kk = 0; kk < k; ++kk) panel[kk * NR + c] = src[kk];
  }
  for (i64 c = nr; c < NR; ++c) {
    for (i64 kk = 0; kk < k; ++kk) panel[kk * NR + c] = T(0);
  }
}

// Register-tile micro-kernel: mr rows of A against a packed K x NR
// panel. A element (r, kk) is read at a[r * ar + kk * ak], which covers
// both the N and T orientations of A.
template <typename T, int MR, int NR>
void micro_kernel(const T* a, i64 ar, i64 ak, const T* panel, T* c, i64 ldc, i64 k, int mr,
                  int nr, bool accumulate) {
  T acc[MR][NR];
  for (int r = 0; r < MR; ++r) {
    for (int col = 0; col < NR; ++col) acc[r][col] = T(0);
  }
  if (mr == MR) {
    for (i64 kk = 0; kk < k; ++kk) {
      const T* brow = panel + kk * NR;
      T av[MR];
      for (int r = 0; r < MR; ++r) av[r] = a[r * ar + kk * ak];
      for (int r = 0; r < MR; ++r) {
        for (int col = 0; col < NR; ++col) acc[r][col] += av[r] * brow[col];
      }
    }
  } else {
    for (i64 kk = 0; kk < k; ++kk) {
      const T* brow = panel + kk * NR;
      for (int r = 0; r < mr; ++r) {
        T av = a[r * ar + kk * ak];
        for (int col = 0; col < NR; ++col) acc[r][col] += av * brow[col];
      }
    }
  }
  for (int r = 0; r < mr; ++r) {
    T* crow = c + r * ldc;
    if (accumulate) {
      for (int col = 0; col < nr; ++col) crow[col] += acc[r][col];
    } else {
      for (int col = 0; col < nr; ++col) crow[col] = acc[r][col];
    }
  }
}

enum class AKind { N, T };
enum class BKind { N, T };

template <typename T>
void driver(AKind akind, BKind bkind, const T* a, i64 lda, const T* b, i64 ldb, T* c, i64 ldc,
            i64 m, i64 n, i64 k, bool accumulate) {
  constexpr int MR = Tile<T>::MR;
  constexpr int NR = Tile<T>::NR;
  if (m <= 0 || n <= 0) return;
  g_flops.fetch_add(2 * m * n * k, std::memory_order_relaxed);
  if (k == 0) {
    if (!accumulate) {
      for (i64 r = 0; r < m; ++r) std::memset(c + r * ldc, 0, static_cast<std::size_t>(n) * sizeof(T));
    }
    return;
  }

  const i64 ar = akind == AKind::N ? lda : 1;
  const i64 ak = akind == AKind::N ? 1 : lda;

  // Task grid: row groups x column groups. Column panels are packed
  // once per task and reused across the task's row tiles.
  const i64 row_group = 96;
  const i64 col_group = 8 * NR;
  const i64 mg = (m + row_group - 1) / row_group;
  const i64 ng = (n + col_group - 1) / col_group;

  ThreadPool::instance().run(mg * ng, [&](i64 task) {
    const i64 gi = task / ng;
    const i64 gj = task % ng;
    const i64 m0 = gi * row_group;
    const i64 m1 = std::min(m, m0 + row_group);
    const i64 n0g = gj * col_group;
    const i64 n1g = std::min(n, n0g + col_group);

    auto& buf = pack_buffer<T>();
    if (static_cast<i64>(buf.size()) < k * NR) buf.resize(static_cast<std::size_t>(k * NR));
    T* panel = buf.data();

    for (i64 n0 = n0g; n0 < n1g; n0 += NR) {
      const int nr = static_cast<int>(std::min<i64>(NR, n1g - n0));
      if (bkind == BKind::N) {
        pack_panel_n<T, NR>(b, ldb, k, n0, nr, panel);
      } else {
        pack_panel_t<T, NR>(b, ldb, k, n0, nr, panel);
      }
      for (i64 r0 = m0; r0 < m1; r0 += MR) {
        const int mr = static_cast<int>(std::min<i64>(MR, m1 - r0));
        const T* atile = akind == AKind::N ? a + r0 * lda : a + r0;
        micro_kernel<T, MR, NR>(atile, ar, ak, panel, c + r0 * ldc + n0, ldc, k, mr, nr,
                                accumulate);
      }
    }
  });
}

}  // namespace

template <typename T>
void nn(const T* a, i64 lda, const T* b, i64 ldb, T* c, i64 ldc, i64 m, i64 n, i64 k,
        bool accumulate) {
  driver<T>(AKind::N, BKind::N, a, lda, b, ldb, c, ldc, m, n, k, accumulate);
}

template <typename T>
void tn(const T* a, i64 lda, const T* b, i64 ldb, T* c, i64 ldc, i64 m, i64 n, i64 k,
        bool accumulate) {
  driver<T>(AKind::T, BKind::N, a, lda, b, ldb, c, ldc, m, n, k, accumulate);
}

template <typename T>
void nt(const T* a, i64 lda, const T* b, i64 ldb, T* c, i64 ldc, i64 m, i64 n, i64 k,
        bool accumulate) {
  driver<T>(AKind::N, BKind::T, a, lda, b, ldb, c, ldc, m, n, k, accumulate);
}

template void nn<float>(const float*, i64, const float*, i64, float*, i64, i64, i64, i64, bool);
template void nn<double>(const double*, i64, const double*, i64, double*, i64, i64, i64, i64, bool);
template void tn<float>(const float*, i64, const float*, i64, float*, i64, i64, i64, i64, bool);
template void tn<double>(const double*, i64, const double*, i64, double*, i64, i64, i64, i64, bool);
template void nt<float>(const float*, i64, const float*, i64, float*, i64, i64, i64, i64, bool);
template void nt<double>(const double*, i64, const double*, i64, double*, i64, i64, i64, i64, bool);

void reset_flops() { g_flops.store(0, std::memory_order_relaxed); }
i64 flops() { return g_flops.load(std::memory_order_relaxed); }

}  // namespace colm::gemm

/*
 * Copyright 2026 The restcn Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Packed GEMM loop nest, parameterized on a register-tile micro-kernel.
// Included (inside an anonymous namespace) by each per-ISA source so the
// packing loops get the same code generation flags as the micro-kernel.
//
// A Kernel provides:
//   using value_type;  static constexpr std::size_t kMr, kNr;
//   template <typename APanel>
//   static void run(std::size_t kc, APanel a, const value_type* b_panel,
//                   value_type* c, std::ptrdiff_t ldc, bool load_c);
// where b_panel is kc x kNr (k-major) and `a` yields a(i) for the current k
// step and advance() to the next one.

// Packed kc x Mr panel, k-major.
template <typename T, std::size_t Mr>
struct PackedPanel {
  const T* p;
  T operator()(std::size_t i) const { return p[i]; }
  void advance() { p += Mr; }
};

// Mr rows read in place; rows with unit column stride need no packing.
template <typename T, std::size_t Mr>
struct RowPanel {
  const T* rows[Mr];
  std::size_t p = 0;
  T operator()(std::size_t i) const { return rows[i][p]; }
  void advance() { ++p; }
};

template <typename T>
inline const T* mat_row(const MatRef<T>& m, std::size_t i) {
  return m.data + (m.row_off ? m.row_off[i] : static_cast<std::ptrdiff_t>(i) * m.rs);
}

template <typename T>
inline std::ptrdiff_t mat_col(const MatRef<T>& m, std::size_t j) {
  return m.col_off ? m.col_off[j] : static_cast<std::ptrdiff_t>(j) * m.cs;
}

template <typename Kernel>
void pack_a(const MatRef<typename Kernel::value_type>& a, std::size_t i0,
            std::size_t mc, std::size_t p0, std::size_t kc,
            typename Kernel::value_type* out) {
  using T = typename Kernel::value_type;
  constexpr std::size_t mr = Kernel::kMr;
  if (!a.row_off && a.rs == 1) {
    // Transposed operand: consecutive rows are adjacent in memory.
    for (std::size_t ip = 0; ip < mc; ip += mr) {
      T* panel = out + ip * kc;
      const std::size_t width = mc - ip < mr ? mc - ip : mr;
      for (std::size_t p = 0; p < kc; ++p) {
        const T* src = a.data + mat_col(a, p0 + p) + static_cast<std::ptrdiff_t>(i0 + ip);
        T* dst = panel + p * mr;
        for (std::size_t r = 0; r < width; ++r) dst[r] = src[r];
        for (std::size_t r = width; r < mr; ++r) dst[r] = T(0);
      }
    }
    return;
  }
  for (std::size_t ip = 0; ip < mc; ip += mr) {
    T* panel = out + ip * kc;
    for (std::size_t r = 0; r < mr; ++r) {
      if (ip + r < mc) {
        const T* row = mat_row(a, i0 + ip + r);
        if (!a.col_off && a.cs == 1) {
          const T* src = row + p0;
          for (std::size_t p = 0; p < kc; ++p) panel[p * mr + r] = src[p];
        } else {
          for (std::size_t p = 0; p < kc; ++p) panel[p * mr + r] = row[mat_col(a, p0 + p)];
        }
      } else {
        for (std::size_t p = 0; p < kc; ++p) panel[p * mr + r] = T(0);
      }
    }
  }
}

template <typename Kernel>
void pack_b(const MatRef<typename Kernel::value_type>& b, std::size_t p0,
            std::size_t kc, std::size_t j0, std::size_t nc,
            typename Kernel::value_type* out) {
  using T = typename Kernel::value_type;
  constexpr std::size_t nr = Kernel::kNr;
  for (std::size_t p = 0; p < kc; ++p) {
    const T* row = mat_row(b, p0 + p);
    const bool contiguous = !b.col_off && b.cs == 1;
    for (std::size_t jp = 0; jp < nc; jp += nr) {
      T* dst = out + jp * kc + p * nr;
      const std::size_t width = nc - jp < nr ? nc - jp : nr;
      if (contiguous) {
        const T* src = row + j0 + jp;
        for (std::size_t j = 0; j < width; ++j) dst[j] = src[j];
      } else {
        for (std::size_t j = 0; j < width; ++j) dst[j] = row[mat_col(b, j0 + jp + j)];
      }
      for (std::size_t j = width; j < nr; ++j) dst[j] = T(0);
    }
  }
}

template <typename Kernel>
void gemm_driver(const GemmArgs<typename Kernel::value_type>& g) {
  using T = typename Kernel::value_type;
  constexpr std::size_t mr = Kernel::kMr;
  constexpr std::size_t nr = Kernel::kNr;
  if (g.m == 0 || g.n == 0) return;
  if (g.k == 0) {
    if (!g.accumulate) {
      for (std::size_t i = 0; i < g.m; ++i)
        for (std::size_t j = 0; j < g.n; ++j) g.c[i * g.ldc + j] = T(0);
    }
    return;
  }
  alignas(64) T edge[mr * nr];
  const bool direct_a = !g.a.col_off && g.a.cs == 1;
  for (std::size_t jc = 0; jc < g.n; jc += kBlockN) {
    const std::size_t nc = g.n - jc < kBlockN ? g.n - jc : kBlockN;
    for (std::size_t pc = 0; pc < g.k; pc += kBlockK) {
      const std::size_t kc = g.k - pc < kBlockK ? g.k - pc : kBlockK;
      const bool load_c = g.accumulate || pc > 0;
      pack_b<Kernel>(g.b, pc, kc, jc, nc, g.b_pack);
      for (std::size_t ic = 0; ic < g.m; ic += kBlockM) {
        const std::size_t mc = g.m - ic < kBlockM ? g.m - ic : kBlockM;
        if (!direct_a) pack_a<Kernel>(g.a, ic, mc, pc, kc, g.a_pack);
        for (std::size_t jr = 0; jr < nc; jr += nr) {
          const std::size_t nw = nc - jr < nr ? nc - jr : nr;
          const T* bp = g.b_pack + jr * kc;
          for (std::size_t ir = 0; ir < mc; ir += mr) {
            const std::size_t mw = mc - ir < mr ? mc - ir : mr;
            T* ct = g.c + (ic + ir) * g.ldc + jc + jr;
            const bool full = mw == mr && nw == nr;
            T* dst = full ? ct : edge;
            const std::ptrdiff_t ld = full ? static_cast<std::ptrdiff_t>(g.ldc)
                                           : static_cast<std::ptrdiff_t>(nr);
            if (direct_a) {
              RowPanel<T, mr> ap;
              for (std::size_t r = 0; r < mr; ++r) {
                ap.rows[r] = mat_row(g.a, ic + ir + (r < mw ? r : mw - 1)) + pc;
              }
              Kernel::run(kc, ap, bp, dst, ld, full && load_c);
            } else {
              Kernel::run(kc, PackedPanel<T, mr>{g.a_pack + ir * kc}, bp, dst, ld,
                          full && load_c);
            }
            if (!full) {
              for (std::size_t i = 0; i < mw; ++i) {
                for (std::size_t j = 0; j < nw; ++j) {
                  T& out = ct[i * g.ldc + j];
                  out = load_c ? out + edge[i * nr + j] : edge[i * nr + j];
                }
              }
            }
          }
        }
      }
    }
  }
}

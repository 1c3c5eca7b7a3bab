// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/common.hpp>
#include <voxtrack/kernels.hpp>

#include <cstdlib>
#include <cstring>

namespace voxtrack::kernels {

#ifndef VOXTRACK_HAVE_AVX2
const Table* avx2() { return nullptr; }
#endif

namespace {

const Table* g_active = nullptr;

const Table* resolve(const char* name) {
  if (name == nullptr || std::strcmp(name, "auto") == 0) {
    const Table* best = avx2();
    return best ? best : &scalar();
  }
  if (std::strcmp(name, "scalar") == 0) return &scalar();
  if (std::strcmp(name, "avx2") == 0) {
    const Table* t = avx2();
    if (!t) raise(ErrorCode::BadConfig, "avx2 kernels not available on this machine");
    return t;
  }
  raise(ErrorCode::BadConfig, std::string("unknown kernel variant '") + name + "'");
}

}  // namespace

const Table& active() {
  if (g_active == nullptr) g_active = resolve(std::getenv("VOXTRACK_KERNELS"));
  return *g_active;
}

void force(const char* name) { g_active = resolve(name); }

}  // namespace voxtrack::kernels

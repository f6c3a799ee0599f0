#pragma once

#include <cstdint>

namespace qlss {

/// Exact counts of invocations of the two input oracles, their adjoints and
/// controlled versions. Counters are only ever incremented; composition is
/// addition.
struct QueryLedger {
  std::uint64_t u_a = 0;
  std::uint64_t u_a_dag = 0;
  std::uint64_t cu_a = 0;
  std::uint64_t cu_a_dag = 0;
  std::uint64_t u_b = 0;
  std::uint64_t u_b_dag = 0;
  std::uint64_t cu_b = 0;
  std::uint64_t cu_b_dag = 0;

  QueryLedger& operator+=(const QueryLedger& o) {
    u_a += o.u_a;
    u_a_dag += o.u_a_dag;
    cu_a += o.cu_a;
    cu_a_dag += o.cu_a_dag;
    u_b += o.u_b;
    u_b_dag += o.u_b_dag;
    cu_b += o.cu_b;
    cu_b_dag += o.cu_b_dag;
    return *this;
  }

  friend QueryLedger operator+(QueryLedger a, const QueryLedger& b) { return a += b; }

  friend bool operator==(const QueryLedger& a, const QueryLedger& b) {
    return a.u_a == b.u_a && a.u_a_dag == b.u_a_dag && a.cu_a == b.cu_a &&
           a.cu_a_dag == b.cu_a_dag && a.u_b == b.u_b && a.u_b_dag == b.u_b_dag &&
           a.cu_b == b.cu_b && a.cu_b_dag == b.cu_b_dag;
  }

  /// Q in the complexity statements: all U_A-family queries combined.
  std::uint64_t total_a() const { return u_a + u_a_dag + cu_a + cu_a_dag; }
  /// 2Q companion: all U_b-family queries combined.
  std::uint64_t total_b() const { return u_b + u_b_dag + cu_b + cu_b_dag; }
};

}  // namespace qlss

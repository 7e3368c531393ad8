#pragma once

#include <spolyak/optimizer.hpp>

#include <cstdio>
#include <ostream>
#include <string>

namespace spolyak {

inline constexpr const char* kTraceCsvHeader = "iter,f_value,step_size,grad_ht_norm_sq,error_sq,support_size";

/// %.12g, the trace CSV's number format.
inline std::string format_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

/// One row per recorded iteration; error_sq is left empty when no truth is known.
inline void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.t << ',' << format_g12(r.f_value) << ',' << format_g12(r.step_size) << ','
        << format_g12(r.grad_ht_norm_sq) << ',';
    if (r.error_sq) out << format_g12(*r.error_sq);
    out << ',' << r.support_size << '\n';
  }
}

}  // namespace spolyak

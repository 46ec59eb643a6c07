#pragma once

// Independent reference implementations the library is checked against.

#include <complex>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faceatlas/geometry.hpp"

namespace support {

using faceatlas::LandmarkFrame;
using faceatlas::Vec3;

using C = std::complex<double>;

struct OraclePoint {
  C aligned;
  C px;
};

/// Hand evaluation of the sample atlas rows, no AST and no library
/// geometry. Rotation is a complex multiplication by the conjugate of the
/// unit brow direction. Frames must carry no hair mask.
inline std::map<std::string, OraclePoint> straight_line_oracle(const LandmarkFrame& f) {
  const double aspect = static_cast<double>(f.width) / f.height;
  const auto iso = [&](int i) {
    const Vec3& v = f.vertices[static_cast<std::size_t>(i)];
    return C(v.x * aspect, v.y);
  };
  const C brow_l = iso(107);
  const C brow_r = iso(336);
  const C u = (brow_r - brow_l) / std::abs(brow_r - brow_l);
  const C mid = 0.5 * (brow_l + brow_r);
  const C anchor(0.5, 0.4);
  const auto align = [&](C p) { return (p - mid) * std::conj(u) + anchor; };
  const auto unalign_px = [&](C a) { return ((a - anchor) * u + mid) * static_cast<double>(f.height); };
  const auto m = [&](int i) { return align(iso(i)); };
  const auto mirror = [](C a) { return C(1.0 - a.real(), a.imag()); };

  const C rhd1 = 0.5 * m(107) + 0.5 * m(336);
  const double reach = 1.10 * std::abs(rhd1 - m(10));
  const C rhd2(0.5, rhd1.imag() - reach);
  const double uc = std::abs(rhd1.imag() - rhd2.imag()) / 3.0;
  const C rhd3r = 0.25 * (m(362) + m(263) + m(386) + m(374));
  const C st1r(rhd3r.real(), rhd3r.imag() + 0.7 * uc);
  const C st2r(rhd3r.real(), st1r.imag() + 0.5 * uc);
  const C gv26(m(164).real(), 0.67 * m(164).imag() + 0.33 * m(0).imag());

  std::map<std::string, OraclePoint> out;
  const auto put = [&](const std::string& key, C a) { out[key] = {a, unalign_px(a)}; };
  put("RHD1/center", rhd1);
  put("RHD2/center", rhd2);
  put("RHD3/right", rhd3r);
  put("RHD3/left", mirror(rhd3r));
  put("ST1/right", st1r);
  put("ST1/left", mirror(st1r));
  put("ST2/right", st2r);
  put("ST2/left", mirror(st2r));
  put("GV26/center", gv26);
  return out;
}

struct OracleResult {
  std::vector<std::int64_t> admitted;
  std::vector<std::int64_t> dropped;
  std::vector<std::int64_t> processed;
  std::size_t peak = 0;
};

/// Tick-by-tick model of newest-wins admission with one waiting slot and a
/// single FIFO processor. Service times must be at least one tick.
inline OracleResult tick_oracle(const std::vector<std::int64_t>& arrivals,
                         const std::function<std::int64_t(std::int64_t)>& service, std::size_t cap) {
  OracleResult r;
  std::deque<std::int64_t> fifo;  // admitted, head is in service once started
  std::optional<std::int64_t> waiting;
  std::optional<std::int64_t> finish_at;
  std::size_t next = 0;
  const auto begin = [&](std::int64_t t) {
    if (!finish_at && !fifo.empty()) finish_at = t + service(fifo.front());
  };
  for (std::int64_t t = 0; next < arrivals.size() || !fifo.empty(); ++t) {
    if (finish_at && *finish_at == t) {
      r.processed.push_back(fifo.front());
      fifo.pop_front();
      finish_at.reset();
      if (waiting) {
        fifo.push_back(*waiting);
        r.admitted.push_back(*waiting);
        waiting.reset();
      }
      begin(t);
    }
    if (next < arrivals.size() && arrivals[next] == t) {
      const std::int64_t item = arrivals[next++];
      if (fifo.size() < cap) {
        fifo.push_back(item);
        r.admitted.push_back(item);
      } else {
        if (waiting) r.dropped.push_back(*waiting);
        waiting = item;
      }
      if (next == arrivals.size() && waiting) {
        r.dropped.push_back(*waiting);
        waiting.reset();
      }
      begin(t);
    }
    r.peak = std::max(r.peak, fifo.size());
  }
  return r;
}

}  // namespace support

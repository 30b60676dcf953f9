#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "softlfd/errors.hpp"
#include "softlfd/geometry.hpp"
#include "softlfd/json_io.hpp"

namespace softlfd {

inline constexpr double kDefaultJumpLimit = 0.05;

/// Servo channel order: 0 = bending cable, 1 = twist cable.
enum ServoChannel : int { kBend = 0, kTwist = 1 };

/// A kinesthetic demonstration: M time-ordered position, orientation and
/// servo labels sampled at a fixed period. Always valid once constructed.
class Demonstration {
 public:
  Demonstration(std::vector<Vec3> positions, std::vector<Rotation> orientations,
                std::vector<Vec2> servos, double sample_period,
                double jump_limit = kDefaultJumpLimit)
      : positions_(std::move(positions)),
        orientations_(std::move(orientations)),
        servos_(std::move(servos)),
        sample_period_(sample_period),
        jump_limit_(jump_limit) {
    validate();
  }

  std::size_t size() const { return positions_.size(); }
  const std::vector<Vec3>& positions() const { return positions_; }
  const std::vector<Rotation>& orientations() const { return orientations_; }
  const std::vector<Vec2>& servos() const { return servos_; }
  double sample_period() const { return sample_period_; }
  double jump_limit() const { return jump_limit_; }

  Pose pose(std::size_t i) const { return {positions_.at(i), orientations_.at(i)}; }

  /// Mean distance between consecutive positions.
  double mean_spacing() const {
    double total = 0.0;
    for (std::size_t i = 1; i < positions_.size(); ++i) {
      total += (positions_[i] - positions_[i - 1]).norm();
    }
    return total / static_cast<double>(positions_.size() - 1);
  }

 private:
  void validate() const {
    auto fail = [](const std::string& what, std::size_t i) {
      std::ostringstream os;
      os << what << " at sample " << i;
      throw ValidationError(os.str());
    };
    if (!(sample_period_ > 0.0) || !std::isfinite(sample_period_)) {
      throw ValidationError("sample_period must be positive and finite");
    }
    if (positions_.size() != orientations_.size() || positions_.size() != servos_.size()) {
      std::ostringstream os;
      os << "length mismatch: " << positions_.size() << " positions, " << orientations_.size()
         << " orientations, " << servos_.size() << " servos";
      throw ValidationError(os.str());
    }
    if (positions_.size() < 2) throw ValidationError("too few samples: need M >= 2");
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      if (!positions_[i].allFinite()) fail("non-finite position", i);
      if (!servos_[i].allFinite()) fail("non-finite servo", i);
      if ((servos_[i].array() < 0.0).any()) fail("negative servo", i);
      if (i > 0) {
        const double jump = (positions_[i] - positions_[i - 1]).norm();
        if (jump > jump_limit_) {
          std::ostringstream os;
          os << "position jump " << jump << " m exceeds limit " << jump_limit_ << " m";
          fail(os.str(), i);
        }
      }
    }
  }

  std::vector<Vec3> positions_;
  std::vector<Rotation> orientations_;
  std::vector<Vec2> servos_;
  double sample_period_;
  double jump_limit_;
};

/// Output of transporting a demonstration; the jump limit is doubled since
/// the deformation may stretch the path.
class TransportedDemonstration : public Demonstration {
 public:
  TransportedDemonstration(std::vector<Vec3> positions, std::vector<Rotation> orientations,
                           std::vector<Vec2> servos, double sample_period,
                           double base_jump_limit = kDefaultJumpLimit)
      : Demonstration(std::move(positions), std::move(orientations), std::move(servos),
                      sample_period, 2.0 * base_jump_limit) {}
};

// --- file format -----------------------------------------------------------
// {"sample_period": s, "positions": [[x,y,z],...], "orientations": [[w,x,y,z],...],
//  "servos": [[l0,l1],...]}

inline json_io::json demonstration_to_json(const Demonstration& demo) {
  using json_io::json;
  using json_io::to_json;
  json positions = json::array();
  json orientations = json::array();
  json servos = json::array();
  for (std::size_t i = 0; i < demo.size(); ++i) {
    positions.push_back(to_json(demo.positions()[i]));
    orientations.push_back(to_json(demo.orientations()[i].to_quaternion()));
    servos.push_back(to_json(demo.servos()[i]));
  }
  return json{{"sample_period", demo.sample_period()},
              {"positions", std::move(positions)},
              {"orientations", std::move(orientations)},
              {"servos", std::move(servos)}};
}

inline Demonstration demonstration_from_json(const json_io::json& doc,
                                             double jump_limit = kDefaultJumpLimit) {
  using namespace json_io;
  require_object(doc, "demonstration");
  reject_unknown_keys(doc, {"sample_period", "positions", "orientations", "servos"},
                      "demonstration");
  const double period = as_number(require_key(doc, "sample_period", "demonstration"),
                                  "sample_period");
  auto list = [&](const char* key) -> const json& {
    const json& j = require_key(doc, key, "demonstration");
    if (!j.is_array()) throw ParseError(std::string(key) + " must be an array");
    return j;
  };
  std::vector<Vec3> positions;
  std::vector<Rotation> orientations;
  std::vector<Vec2> servos;
  for (const auto& p : list("positions")) positions.push_back(as_vector<3>(p, "position"));
  for (const auto& q : list("orientations")) {
    orientations.push_back(Rotation::from_quaternion(as_vector<4>(q, "orientation")));
  }
  for (const auto& l : list("servos")) servos.push_back(as_vector<2>(l, "servo"));
  return Demonstration(std::move(positions), std::move(orientations), std::move(servos), period,
                       jump_limit);
}

inline Demonstration load_demonstration(const std::filesystem::path& path,
                                        double jump_limit = kDefaultJumpLimit) {
  try {
    return demonstration_from_json(json_io::read_file(path), jump_limit);
  } catch (const json_io::json::exception& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

inline void save_demonstration(const Demonstration& demo, const std::filesystem::path& path) {
  json_io::write_file(path, demonstration_to_json(demo));
}

// --- synthesis -------------------------------------------------------------

struct Waypoint {
  Vec3 position;
  Rotation orientation;
};

/// Servo value held from sample `from_index` until the next step.
struct ServoStep {
  std::size_t from_index = 0;
  Vec2 servos = Vec2::Zero();
};

struct DemoSpec {
  std::vector<Waypoint> waypoints;
  std::size_t samples = 200;
  double sample_period = 0.02;
  std::vector<ServoStep> servo_schedule;
};

namespace detail {

/// Natural cubic spline through (knots[k], values[k]), one coordinate.
class NaturalCubic {
 public:
  NaturalCubic(std::vector<double> knots, std::vector<double> values)
      : u_(std::move(knots)), y_(std::move(values)), m_(u_.size(), 0.0) {
    const std::size_t n = u_.size();
    if (n < 3) return;
    // Tridiagonal system for interior second derivatives (Thomas algorithm).
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double h0 = u_[k] - u_[k - 1];
      const double h1 = u_[k + 1] - u_[k];
      const double lower = h0 / 6.0;
      diag[k] = (h0 + h1) / 3.0;
      upper[k] = h1 / 6.0;
      rhs[k] = (y_[k + 1] - y_[k]) / h1 - (y_[k] - y_[k - 1]) / h0;
      if (k > 1) {
        const double w = lower / diag[k - 1];
        diag[k] -= w * upper[k - 1];
        rhs[k] -= w * rhs[k - 1];
      }
    }
    for (std::size_t k = n - 2; k >= 1; --k) {
      m_[k] = (rhs[k] - upper[k] * m_[k + 1]) / diag[k];
    }
  }

  double operator()(std::size_t segment, double u) const {
    const std::size_t k = segment;
    const double h = u_[k + 1] - u_[k];
    const double a = u_[k + 1] - u;
    const double b = u - u_[k];
    return m_[k] * a * a * a / (6.0 * h) + m_[k + 1] * b * b * b / (6.0 * h) +
           (y_[k] / h - m_[k] * h / 6.0) * a + (y_[k + 1] / h - m_[k + 1] * h / 6.0) * b;
  }

 private:
  std::vector<double> u_, y_, m_;
};

}  // namespace detail

/// Sample index hit exactly by each waypoint; waypoints are spread over the
/// samples in proportion to chord length. Throws InvalidScenario on
/// malformed specs.
inline std::vector<std::size_t> waypoint_sample_indices(const DemoSpec& spec) {
  const auto& wps = spec.waypoints;
  if (wps.size() < 2) throw InvalidScenario("need at least 2 waypoints");
  if (spec.samples < wps.size()) {
    throw InvalidScenario("sample count must be at least the number of waypoints");
  }
  std::vector<double> knots{0.0};
  for (std::size_t k = 1; k < wps.size(); ++k) {
    if (!wps[k].position.allFinite() || !wps[k - 1].position.allFinite()) {
      throw InvalidScenario("non-finite waypoint");
    }
    const double chord = (wps[k].position - wps[k - 1].position).norm();
    if (!(chord > 0.0)) throw InvalidScenario("consecutive waypoints coincide");
    knots.push_back(knots.back() + chord);
  }
  const std::size_t last = spec.samples - 1;
  std::vector<std::size_t> index(wps.size());
  for (std::size_t k = 0; k < wps.size(); ++k) {
    index[k] = static_cast<std::size_t>(std::llround(knots[k] / knots.back() * static_cast<double>(last)));
  }
  for (std::size_t k = 1; k < wps.size(); ++k) index[k] = std::max(index[k], index[k - 1] + 1);
  index.back() = last;
  for (std::size_t k = wps.size() - 1; k-- > 0;) index[k] = std::min(index[k], index[k + 1] - 1);
  return index;
}

/// Smooth demonstration through `spec.waypoints`: natural cubic spline in
/// position (chord-length parametrized), slerp in orientation, piecewise
/// constant servos. Every waypoint is hit exactly by one sample.
inline Demonstration synthesize_demonstration(const DemoSpec& spec,
                                              double jump_limit = kDefaultJumpLimit) {
  const std::vector<std::size_t> knot_index = waypoint_sample_indices(spec);
  const auto& wps = spec.waypoints;
  std::vector<double> knots{0.0};
  for (std::size_t k = 1; k < wps.size(); ++k) {
    knots.push_back(knots.back() + (wps[k].position - wps[k - 1].position).norm());
  }
  for (const auto& step : spec.servo_schedule) {
    if (!step.servos.allFinite() || (step.servos.array() < 0.0).any()) {
      throw InvalidScenario("servo schedule values must be finite and non-negative");
    }
  }

  std::vector<detail::NaturalCubic> splines;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> values;
    for (const auto& w : wps) values.push_back(w.position[c]);
    splines.emplace_back(knots, std::move(values));
  }

  std::vector<Vec3> positions(spec.samples);
  std::vector<Rotation> orientations(spec.samples);
  for (std::size_t k = 0; k + 1 < wps.size(); ++k) {
    const std::size_t i0 = knot_index[k];
    const std::size_t i1 = knot_index[k + 1];
    for (std::size_t i = i0; i <= i1; ++i) {
      const double frac = static_cast<double>(i - i0) / static_cast<double>(i1 - i0);
      const double u = knots[k] + frac * (knots[k + 1] - knots[k]);
      positions[i] = Vec3(splines[0](k, u), splines[1](k, u), splines[2](k, u));
      orientations[i] = geodesic_interpolate(wps[k].orientation, wps[k + 1].orientation, frac);
    }
  }
  for (std::size_t k = 0; k < wps.size(); ++k) {
    positions[knot_index[k]] = wps[k].position;
    orientations[knot_index[k]] = wps[k].orientation;
  }

  auto schedule = spec.servo_schedule;
  std::stable_sort(schedule.begin(), schedule.end(),
                   [](const ServoStep& a, const ServoStep& b) { return a.from_index < b.from_index; });
  std::vector<Vec2> servos(spec.samples, Vec2::Zero());
  for (std::size_t i = 0; i < spec.samples; ++i) {
    for (const auto& step : schedule) {
      if (step.from_index <= i) servos[i] = step.servos;
    }
  }

  try {
    return Demonstration(std::move(positions), std::move(orientations), std::move(servos),
                         spec.sample_period, jump_limit);
  } catch (const ValidationError& e) {
    throw InvalidScenario(std::string("synthesized demonstration invalid: ") + e.what());
  }
}

}  // namespace softlfd

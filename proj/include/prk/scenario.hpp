#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prk/track.hpp"

namespace prk {

class ScenarioError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Headings are degrees clockwise from +y; speed is distance per step.
struct ScenarioObject {
  std::string id;
  std::string type = "contact";
  std::string klass = "unknown";  // hostile | neutral | unknown
  std::string iff = "none";
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
};

struct Order {
  std::string object;
  int at = 0;
  std::optional<double> heading;
  std::optional<double> speed;
};

/// An own-ship propositional variable set exactly at step `at`.
struct OwnSetting {
  std::string variable;
  int at = 0;
  std::string value;
  std::vector<std::string> domain;
};

struct SensorModel {
  double noise = 0.0;           // confidence loss; also scales position and heading error
  double position_sigma = 1.0;  // position error sd at noise 1
  double heading_sigma = 30.0;  // heading error sd (degrees) at noise 1
  double detect_prob = 1.0;
  int period = 1;
  std::vector<std::pair<int, int>> blind;  // inclusive step windows with no records
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  int steps = 10;
  double own_x = 0.0;
  double own_y = 0.0;
  std::vector<ScenarioObject> objects;
  std::vector<Order> orders;
  std::vector<OwnSetting> own;
  SensorModel sensor;
};

/// `.rsc` forms:
///   (scenario NAME :seed n :steps n)
///   (ownship :x x :y y)
///   (object ID :type T :class C :iff I :x x :y y :heading h :speed v)
///   (order ID :at step [:heading h] [:speed v])
///   (own VAR :at step :value V :domain (V ...))
///   (sensor [:noise v] [:position-sigma v] [:heading-sigma v] [:detect-prob p] [:period n] [:blind ((a b) ...)])
Scenario parse_scenario(std::string_view text);

struct TruthState {
  int t = 0;
  std::string object;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  std::string klass;
  std::map<std::string, bool> labels;

  friend bool operator==(const TruthState&, const TruthState&) = default;
};

struct GroundTruth {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<TruthState> states;  // by t, then object

  /// Label value for `object` at step `t`; nullopt when no state was logged.
  std::optional<bool> label(int t, const std::string& object, const std::string& label) const;
  bool has_label(const std::string& label) const;
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// `.rgt` text:
///   RGT1
///   scenario NAME
///   seed N
///   state t object x y heading speed class
///   label t object name true|false
std::string write_truth(const GroundTruth& g);
GroundTruth read_truth(std::string_view text);

struct ScenarioOutput {
  GroundTruth truth;
  TrackFile track;
};

/// Labels logged per object and step.
inline constexpr const char* kTruthLabels[] = {"approaching", "withdrawing", "turn-away", "turn-away-and-run",
                                               "threat"};

/// Steps every object through its orders and emits perception records at
/// each visible sensor phase.  Output depends only on the scenario.
ScenarioOutput run_scenario(const Scenario& s);

/// Discretizations shared by ground truth and perception.
std::string classify_aspect(double x, double y, double heading, double speed, double own_x, double own_y);
std::string classify_range(double x, double y, double own_x, double own_y);
std::string classify_speed(double speed);

}  // namespace prk

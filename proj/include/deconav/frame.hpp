#pragma once

#include <optional>
#include <vector>

namespace deconav {

struct AgentState {
  double x = 0.0;        // meters
  double y = 0.0;        // meters
  double heading = 0.0;  // degrees in [0, 360)
};

/// One timestamped observation: a unit-norm embedding plus an optional pose
/// snapshot kept for diagnostics only (never fed to the policy).
struct Frame {
  int timestamp = 0;
  std::vector<double> embedding;
  std::optional<AgentState> pose_snapshot;
};

}  // namespace deconav

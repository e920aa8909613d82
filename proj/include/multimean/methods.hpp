#pragma once

#include <map>
#include <string>

#include "multimean/baselines.hpp"
#include "multimean/bench.hpp"
#include "multimean/qagg.hpp"
#include "multimean/stb.hpp"

namespace multimean {

/* per-trial context handed to every method.  test_stats backs the selection
   step and aliases stats unless sample splitting is on. */
struct MethodInput {
  const Dataset& data;
  const DatasetStats& stats;
  const DatasetStats& test_stats;
  Rng& rng;
};

/* known ids: ne js0 jsgm rkmse mta stb_weight stb_opt stb_orth stb_egd
   agg_orth agg_egd */
bool method_known(const std::string& id);

/* registry defaults; overrides in MethodSpec::params are merged on top */
std::map<std::string, double> method_defaults(const std::string& id);

/* js0 and rkmse shrink toward a fixed point, so their rows may sum below 1;
   every other method stays on the simplex */
bool method_sub_simplex(const std::string& id);

struct MethodOutput {
  Eigen::MatrixXd weights;   // B x B, row k used when bag k is the target
  std::vector<char> failed;  // per-target estimation failures (row left NaN)
};

/* throws InvalidArgument for config-level problems (unknown id, mode mismatch,
   bad parameter); per-target numerical failures are recorded, not thrown */
MethodOutput compute_method_weights(const MethodSpec& m, const MethodInput& in);

}  // namespace multimean

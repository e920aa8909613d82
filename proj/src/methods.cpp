#include "multimean/methods.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace multimean {

namespace {

const std::map<std::string, std::map<std::string, double>>& registry() {
  static const std::map<std::string, std::map<std::string, double>> reg = {
      {"ne", {}},
      {"js0", {}},
      {"jsgm", {}},
      {"rkmse", {}},
      {"mta", {{"gamma", 1.0}}},
      {"stb_weight",
       {{"tau", 2.2}, {"gamma", 0.2}, {"alpha", 0.05}, {"varsigma", 1.0}, {"corrected", 0.0}}},
      {"stb_opt",
       {{"tau", 2.2}, {"gamma", 0.2}, {"alpha", 0.05}, {"varsigma", 1.0}, {"corrected", 0.0}}},
      {"stb_orth",
       {{"tau", 5.0}, {"gamma", 3.0}, {"alpha", 0.05}, {"varsigma", 1.0}, {"corrected", 0.0}}},
      {"stb_egd",
       {{"tau", 5.0},
        {"alpha", 0.05},
        {"varsigma", 1.0},
        {"corrected", 0.0},
        {"c_q", 1.0},
        {"c_1", 1.0},
        {"c_2", 5.0},
        {"c_bs", 0.0},
        {"bs_bound", 1.0},
        {"eta0", 50.0},
        {"t_max", 500.0},
        {"stop_tol", 1e-8}}},
      {"agg_orth", {{"gamma", 13.0}}},
      {"agg_egd",
       {{"c_q", 1.4},
        {"c_1", 1.0},
        {"c_2", 4.0},
        {"c_bs", 0.0},
        {"bs_bound", 1.0},
        {"eta0", 50.0},
        {"t_max", 500.0},
        {"stop_tol", 1e-8}}},
  };
  return reg;
}

TestConfig test_config(const std::map<std::string, double>& p) {
  TestConfig cfg;
  cfg.tau = p.at("tau");
  cfg.alpha = p.at("alpha");
  cfg.varsigma = p.at("varsigma");
  cfg.mode = p.at("corrected") != 0.0 ? TestMode::corrected : TestMode::raw_tau;
  return cfg;
}

QaggParams qagg_params(const std::map<std::string, double>& p) {
  QaggParams q;
  q.c_q = p.at("c_q");
  q.c_1 = p.at("c_1");
  q.c_2 = p.at("c_2");
  q.c_bs = p.at("c_bs");
  q.bs_bound = p.at("bs_bound");
  q.eta0 = p.at("eta0");
  q.t_max = static_cast<int>(p.at("t_max"));
  q.stop_tol = p.at("stop_tol");
  return q;
}

}  // namespace

bool method_known(const std::string& id) { return registry().count(id) > 0; }

std::map<std::string, double> method_defaults(const std::string& id) {
  auto it = registry().find(id);
  if (it == registry().end()) throw InvalidArgument("unknown method id: " + id);
  return it->second;
}

bool method_sub_simplex(const std::string& id) { return id == "js0" || id == "rkmse"; }

MethodOutput compute_method_weights(const MethodSpec& m, const MethodInput& in) {
  auto params = method_defaults(m.id);
  for (const auto& [key, value] : m.params) {
    auto it = params.find(key);
    if (it == params.end())
      throw InvalidArgument("method " + m.id + " has no parameter '" + key + "'");
    it->second = value;
  }
  if ((m.id == "js0" || m.id == "jsgm") && in.data.mode != Mode::vector)
    throw InvalidArgument("method " + m.id + " needs vector-mode data");

  const int nb = in.data.size();
  MethodOutput out;
  out.weights =
      Eigen::MatrixXd::Constant(nb, nb, std::numeric_limits<double>::quiet_NaN());
  out.failed.assign(nb, 0);

  auto whole = [&](const std::function<Eigen::MatrixXd()>& fn) {
    try {
      out.weights = fn();
    } catch (const std::invalid_argument&) {
      std::fill(out.failed.begin(), out.failed.end(), 1);
    } catch (const std::runtime_error&) {
      std::fill(out.failed.begin(), out.failed.end(), 1);
    }
  };
  auto per_target = [&](const std::function<Eigen::VectorXd(int)>& fn) {
    for (int k = 0; k < nb; ++k) {
      try {
        out.weights.row(k) = fn(k).transpose();
      } catch (const std::invalid_argument&) {
        out.failed[k] = 1;
      } catch (const std::runtime_error&) {
        out.failed[k] = 1;
      }
    }
  };

  if (m.id == "ne") {
    out.weights = Eigen::MatrixXd::Identity(nb, nb);
  } else if (m.id == "js0" || m.id == "jsgm") {
    whole([&] { return james_stein_weights(in.stats, in.data, m.id == "jsgm"); });
  } else if (m.id == "rkmse") {
    whole([&] { return r_kmse_weights(in.data); });
  } else if (m.id == "mta") {
    MtaParams p{params.at("gamma")};
    whole([&] { return mta_const_weights(in.stats, in.data, p); });
  } else if (m.id == "stb_weight" || m.id == "stb_opt") {
    const TestConfig cfg = test_config(params);
    const double gamma = params.at("gamma");
    per_target([&](int k) {
      const NeighborSet set = similarity_test(in.test_stats, in.data, k, cfg);
      if (m.id == "stb_weight") return uniform_boost_weights(set, nb, gamma).w;
      return oracle_weights(in.stats, set, cfg.tau, gamma).w;
    });
  } else if (m.id == "stb_orth") {
    const TestConfig cfg = test_config(params);
    const double gamma = params.at("gamma");
    per_target([&](int k) {
      const NeighborSet set = similarity_test(in.test_stats, in.data, k, cfg);
      return orth_weights(in.stats, k, gamma, &set).w;
    });
  } else if (m.id == "stb_egd") {
    const TestConfig cfg = test_config(params);
    const QaggParams qp = qagg_params(params);
    per_target([&](int k) {
      const NeighborSet set = similarity_test(in.test_stats, in.data, k, cfg);
      const QaggInputs qi = build_inputs(in.data, in.stats, k);
      return solve_egd(qi, qp, &set).w;
    });
  } else if (m.id == "agg_orth") {
    const double gamma = params.at("gamma");
    per_target([&](int k) { return orth_weights(in.stats, k, gamma, nullptr).w; });
  } else if (m.id == "agg_egd") {
    const QaggParams qp = qagg_params(params);
    per_target([&](int k) {
      const QaggInputs qi = build_inputs(in.data, in.stats, k);
      return solve_egd(qi, qp, nullptr).w;
    });
  } else {
    throw InvalidArgument("unknown method id: " + m.id);
  }
  return out;
}

}  // namespace multimean

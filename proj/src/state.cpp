#include "agp/state.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace agp {

void EnsembleState::validate() const {
  if (components.empty()) throw std::invalid_argument("EnsembleState: no components");
  if (k_min < 1 || k_min > k_max || static_cast<int>(components.size()) != k_max)
    throw std::invalid_argument("EnsembleState: bad component bounds");
  const int na = static_cast<int>(active.size());
  if (na < k_min || na > k_max) throw std::invalid_argument("EnsembleState: |I_A| out of bounds");
  for (int l : active)
    if (l < 0 || l >= k_max) throw std::invalid_argument("EnsembleState: active index out of range");
  if (importance.size() != p()) throw std::invalid_argument("EnsembleState: importance size != p");
  for (int j = 0; j < importance.size(); ++j)
    if (!(importance(j) >= 1.0)) throw std::invalid_argument("EnsembleState: importance below 1");
  if (!(tau > 0.0) || !(tau < 1.0)) throw std::invalid_argument("EnsembleState: tau outside (0,1)");
}

EnsembleState make_initial_state(int p, int k_min, int k_max, long burn_in) {
  EnsembleState s;
  s.k_min = k_min;
  s.k_max = k_max;
  s.burn_in = burn_in;
  s.components.assign(k_max, ComponentState{InclusionVector(p), 0.0, 1.0});
  s.active.resize(k_max);
  for (int l = 0; l < k_max; ++l) s.active[l] = l;
  s.importance = Vector::Ones(p);
  return s;
}

BudgetPlan update_active_set(EnsembleState& state, int B, Rng& rng) {
  if (B < 1) throw std::invalid_argument("update_active_set: B must be >= 1");
  const int k_max = state.k_max;
  const int k_a = state.contributing_count();
  const double theta0 = (k_a < k_max) ? 1.0 / (k_max - k_a) : 0.0;

  std::vector<char> member(k_max, 0);
  for (int l : state.active) member[l] = 1;
  int count = static_cast<int>(state.active.size());

  for (int l = 0; l < k_max; ++l) {
    const double keep_prob =
        theta0 + (1.0 - theta0) * (state.components[l].contributing() ? 1.0 : 0.0);
    const bool forced = (l >= k_max - state.k_min) && (count < state.k_min);
    const bool activate = forced || unif01(rng) < keep_prob;
    if (activate && !member[l]) {
      member[l] = 1;
      ++count;
    } else if (!activate && member[l]) {
      member[l] = 0;
      --count;
    }
  }
  // The in-place count can undershoot when a later old member drops after
  // being counted toward k_min; top back up from the tail.
  for (int l = k_max - 1; l >= 0 && count < state.k_min; --l) {
    if (!member[l]) {
      member[l] = 1;
      ++count;
    }
  }

  state.active.clear();
  for (int l = 0; l < k_max; ++l)
    if (member[l]) state.active.push_back(l);

  BudgetPlan plan;
  plan.B = B;
  plan.M = static_cast<int>((B + count - 1) / count);
  return plan;
}

void update_importance(EnsembleState& state, double zeta) {
  if (!(zeta > 0.5) || !(zeta <= 1.0))
    throw std::invalid_argument("update_importance: zeta must lie in (1/2, 1]");
  const int k_a = state.contributing_count();
  if (k_a == 0) return;
  const long t = state.iteration;
  const long b0 = state.burn_in;
  if (t < 1) throw std::invalid_argument("update_importance: iteration must be >= 1");
  const double time_factor = (t <= b0) ? static_cast<double>(t) / b0
                                       : std::pow(static_cast<double>(t - b0), -zeta);
  const double denom = std::pow(static_cast<double>(k_a), zeta);
  for (int j = 0; j < state.p(); ++j) {
    int hits = 0;
    for (int l : state.active) {
      const ComponentState& c = state.components[l];
      if (c.rho > 0.0 && c.gamma.test(j)) ++hits;
    }
    if (hits > 0) state.importance(j) += hits / denom * time_factor;
  }
}

ChainRecord snapshot(const EnsembleState& state, double sigma2) {
  ChainRecord rec;
  rec.iteration = state.iteration;
  rec.tau = state.tau;
  rec.sigma2 = sigma2;
  rec.active = state.active;
  for (const auto& c : state.components) {
    rec.gamma_indices.push_back(c.gamma.included());
    rec.rho.push_back(c.rho);
    rec.lambda.push_back(c.lambda);
  }
  return rec;
}

namespace {

nlohmann::json record_to_json(const ChainRecord& rec) {
  nlohmann::json j;
  j["t"] = rec.iteration;
  j["gamma"] = rec.gamma_indices;
  j["rho"] = rec.rho;
  j["lambda"] = rec.lambda;
  j["active"] = rec.active;
  j["tau"] = rec.tau;
  j["sigma2"] = rec.sigma2;
  return j;
}

ChainRecord record_from_json(const nlohmann::json& j) {
  ChainRecord rec;
  rec.iteration = j.at("t").get<long>();
  rec.gamma_indices = j.at("gamma").get<std::vector<std::vector<int>>>();
  rec.rho = j.at("rho").get<std::vector<double>>();
  rec.lambda = j.at("lambda").get<std::vector<double>>();
  rec.active = j.at("active").get<std::vector<int>>();
  rec.tau = j.at("tau").get<double>();
  rec.sigma2 = j.at("sigma2").get<double>();
  return rec;
}

}  // namespace

std::string record_to_line(const ChainRecord& rec) { return record_to_json(rec).dump(); }

ChainRecord record_from_line(const std::string& line) {
  return record_from_json(nlohmann::json::parse(line));
}

void write_chain(std::ostream& os, const std::vector<ChainRecord>& chain) {
  for (const auto& rec : chain) os << record_to_line(rec) << '\n';
}

std::vector<ChainRecord> read_chain(std::istream& is) {
  std::vector<ChainRecord> chain;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    chain.push_back(record_from_line(line));
  }
  return chain;
}

std::string state_to_json(const EnsembleState& state) {
  nlohmann::json j;
  j["p"] = state.p();
  j["k_min"] = state.k_min;
  j["k_max"] = state.k_max;
  j["iteration"] = state.iteration;
  j["burn_in"] = state.burn_in;
  j["tau"] = state.tau;
  j["active"] = state.active;
  j["importance"] = std::vector<double>(state.importance.data(),
                                        state.importance.data() + state.importance.size());
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : state.components) {
    nlohmann::json cj;
    cj["gamma"] = c.gamma.included();
    cj["rho"] = c.rho;
    cj["lambda"] = c.lambda;
    comps.push_back(cj);
  }
  j["components"] = comps;
  return j.dump();
}

EnsembleState state_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  EnsembleState s;
  const int p = j.at("p").get<int>();
  s.k_min = j.at("k_min").get<int>();
  s.k_max = j.at("k_max").get<int>();
  s.iteration = j.at("iteration").get<long>();
  s.burn_in = j.at("burn_in").get<long>();
  s.tau = j.at("tau").get<double>();
  s.active = j.at("active").get<std::vector<int>>();
  const auto imp = j.at("importance").get<std::vector<double>>();
  s.importance = Eigen::Map<const Vector>(imp.data(), imp.size());
  for (const auto& cj : j.at("components")) {
    ComponentState c;
    c.gamma = InclusionVector(p);
    for (int idx : cj.at("gamma").get<std::vector<int>>()) c.gamma.set(idx, true);
    c.rho = cj.at("rho").get<double>();
    c.lambda = cj.at("lambda").get<double>();
    s.components.push_back(std::move(c));
  }
  return s;
}

}  // namespace agp

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "agp/common.hpp"
#include "agp/inclusion.hpp"

namespace agp {

// One GP component: inclusion vector plus grid-valued scales.
struct ComponentState {
  InclusionVector gamma;
  double rho = 0.0;
  double lambda = 1.0;
  bool contributing() const { return rho > 0.0 || gamma.size() > 0; }
};

// Likelihood-evaluation budget per iteration (B) and the per-component
// neighborhood budget M = ceil(B / |I_A|) it implies.
struct BudgetPlan {
  int B = 0;
  int M = 1;
};

struct EnsembleState {
  std::vector<ComponentState> components;
  std::vector<int> active;  // sorted index set I_A
  double tau = 0.5;
  Vector importance;        // v_j >= 1
  long iteration = 0;       // t
  long burn_in = 100;       // b0 for the importance ramp
  int k_min = 1;
  int k_max = 1;

  int p() const { return components.empty() ? 0 : components.front().gamma.p(); }

  // k_a: components with rho > 0 or a non-empty inclusion vector.
  int contributing_count() const {
    int k = 0;
    for (const auto& c : components) k += c.contributing() ? 1 : 0;
    return k;
  }

  bool is_active(int l) const {
    for (int a : active)
      if (a == l) return true;
    return false;
  }

  void validate() const;
};

// Fresh state: k_max empty components, all active, v = 1.
EnsembleState make_initial_state(int p, int k_min, int k_max, long burn_in);

// Algorithm-2 active-set refresh. Components doing work (rho > 0 or d > 0)
// stay active; idle ones switch on with probability 1/(k_max - k_a); the
// tail indices are forced in while |I_A| < k_min. Returns the updated
// budget plan with M = ceil(B / |I_A|).
BudgetPlan update_active_set(EnsembleState& state, int B, Rng& rng);

// Diminishing-adaptation importance update:
// v_j += [sum_{l in I_A} 1{rho_l > 0, j in gamma_l} / k_a^zeta] *
//        [t <= b0 ? t/b0 : (t - b0)^-zeta].
// No-op when k_a = 0.
void update_importance(EnsembleState& state, double zeta);

// Per-iteration chain snapshot persisted for posterior summaries.
struct ChainRecord {
  long iteration = 0;
  std::vector<std::vector<int>> gamma_indices;  // sorted, per component
  std::vector<double> rho;
  std::vector<double> lambda;
  std::vector<int> active;
  double tau = 0.5;
  double sigma2 = 1.0;

  int n_components() const { return static_cast<int>(rho.size()); }
  bool in_component(int l, int j) const {
    for (int idx : gamma_indices[l])
      if (idx == j) return true;
    return false;
  }
  bool anywhere(int j) const {
    for (int l = 0; l < n_components(); ++l)
      if (in_component(l, j)) return true;
    return false;
  }
};

ChainRecord snapshot(const EnsembleState& state, double sigma2);

// Line-delimited JSON persistence; doubles round-trip bit-exactly.
std::string record_to_line(const ChainRecord& rec);
ChainRecord record_from_line(const std::string& line);
void write_chain(std::ostream& os, const std::vector<ChainRecord>& chain);
std::vector<ChainRecord> read_chain(std::istream& is);

std::string state_to_json(const EnsembleState& state);
EnsembleState state_from_json(const std::string& text);

}  // namespace agp

// Exact finite-volume Gibbs computations over total spin-count vectors for a
// frozen disorder string.
#pragma once

#include "mfm/core.hpp"
#include "mfm/meanfield.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace mfm::gibbs {

class DisorderString {
 public:
  DisorderString(std::vector<int> symbols, int alphabet_size);

  int length() const { return static_cast<int>(symbols_.size()); }
  int alphabet_size() const { return alphabet_; }
  int operator[](int i) const { return symbols_[i]; }
  const std::vector<int>& symbols() const { return symbols_; }
  // n_b for each symbol b.
  std::vector<int> counts() const;

 private:
  std::vector<int> symbols_;
  int alphabet_;
};

// Dense table over count vectors K with sum n, indexed by (K_1, ..., K_{q-1}).
// Cells off the simplex hold -inf.
class CountTable {
 public:
  CountTable(int volume, int spins);

  int volume() const { return n_; }
  int spins() const { return q_; }
  std::size_t cells() const { return values_.size(); }
  // Grid index of K; K must have q entries summing to n.
  std::size_t index(std::span<const int> k) const;
  // Decodes a grid index into K (length q); false when off the simplex.
  bool decode(std::size_t index, std::vector<int>& k) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  int n_;
  int q_;
  std::vector<double> values_;
};

struct VolumeLimits {
  int max_volume = 400;
  std::size_t max_cells = 4'000'000;
};

// Log of the a-priori count law: per symbol b a multinomial block with cell
// probabilities alpha[b], convolved over b. Depends on the string only
// through its type counts.
CountTable log_count_prior(const meanfield::ModelSpec& model, const std::vector<int>& type_counts,
                           const VolumeLimits& limits = {});

class CountDistribution {
 public:
  CountDistribution(CountTable log_prob, double log_partition);

  int volume() const { return table_.volume(); }
  int spins() const { return table_.spins(); }
  // log of sum_sigma prod_i alpha[eta_i](sigma_i) exp(-n F(L_n(sigma))).
  double log_partition() const { return log_z_; }
  double probability(std::span<const int> k) const;
  double log_probability(std::span<const int> k) const;
  const CountTable& table() const { return table_; }

  // Calls fn(K, log probability) for every K with positive probability.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    std::vector<int> k;
    const auto& v = table_.values();
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] != kNegInf && table_.decode(i, k)) fn(std::as_const(k), v[i]);
  }

 private:
  CountTable table_;
  double log_z_;
};

// Tilts the prior by exp(-n F(K/n)) and normalizes.
CountDistribution tilt(const meanfield::ModelSpec& model, const CountTable& log_prior);

// Throws VolumeTooLarge beyond the limits.
CountDistribution count_distribution(const meanfield::ModelSpec& model, const DisorderString& eta,
                                     const VolumeLimits& limits = {});

struct NeighborhoodSpec {
  SimplexVector center;
  double radius = 0.0;  // l1
};

// 0.4 times the smallest pairwise l1 distance between the given totals.
double default_radius(const std::vector<SimplexVector>& totals);

bool in_neighborhood(std::span<const int> k, int n, const NeighborhoodSpec& spec);

double neighborhood_mass(const CountDistribution& dist, const NeighborhoodSpec& spec);
double log_neighborhood_mass(const CountDistribution& dist, const NeighborhoodSpec& spec);

// Mass near center1 over mass near center2. Throws ZeroMass when the
// denominator is below 1e-300.
double gibbs_ratio(const CountDistribution& dist, const SimplexVector& center1, const SimplexVector& center2,
                   double radius);
double gibbs_ratio(const meanfield::ModelSpec& model, const DisorderString& eta, const SimplexVector& center1,
                   const SimplexVector& center2, double radius);

// Law of the last spin given that L_n lies in the neighborhood, from the
// prior over the first n-1 sites. `log_prior_rest` must be log_count_prior
// of the first n-1 type counts. Throws ZeroMass.
SimplexVector site_marginals_conditional(const meanfield::ModelSpec& model, const CountTable& log_prior_rest,
                                         int last_symbol, const NeighborhoodSpec& spec);
SimplexVector site_marginals_conditional(const meanfield::ModelSpec& model, const DisorderString& eta,
                                         const NeighborhoodSpec& spec, const VolumeLimits& limits = {});
double site_marginal_conditional(const meanfield::ModelSpec& model, const DisorderString& eta, int spin,
                                 const NeighborhoodSpec& spec, const VolumeLimits& limits = {});

// Thread-safe memo of count priors keyed by type counts, for one model.
class PriorCache {
 public:
  explicit PriorCache(meanfield::ModelSpec model, VolumeLimits limits = {});

  const meanfield::ModelSpec& model() const { return model_; }
  std::shared_ptr<const CountTable> prior(const std::vector<int>& type_counts);
  std::shared_ptr<const CountDistribution> distribution(const std::vector<int>& type_counts);
  std::size_t size() const;

 private:
  meanfield::ModelSpec model_;
  VolumeLimits limits_;
  mutable std::mutex mutex_;
  std::map<std::vector<int>, std::shared_ptr<const CountTable>> priors_;
  std::map<std::vector<int>, std::shared_ptr<const CountDistribution>> dists_;
};

}  // namespace mfm::gibbs
